#pragma once

#include <string>
#include <vector>

#include "wotfi/lp.hpp"
#include "wotfi/measures.hpp"

namespace wotfi {

// Joint probability matrix over two finite supports.
class Coupling {
  public:
    Coupling(std::vector<double> x_support, std::vector<double> y_support, Matrix matrix);

    static Coupling product(const DiscreteMeasure& mu, const DiscreteMeasure& nu);

    const std::vector<double>& x_support() const { return x_support_; }
    const std::vector<double>& y_support() const { return y_support_; }
    const Matrix& matrix() const { return matrix_; }

    DiscreteMeasure first_marginal() const;
    DiscreteMeasure second_marginal() const;

    std::string to_json() const;

  private:
    std::vector<double> x_support_;
    std::vector<double> y_support_;
    Matrix matrix_;
};

struct DisintegrationAtom {
    double x;
    DiscreteMeasure kernel;
    double weight;
};

// Rows normalized by their mass; zero-mass rows omitted.
std::vector<DisintegrationAtom> disintegrate(const Coupling& c);

// Finite distribution over (point, measure) pairs: an element of
// P(X x P(Y)), candidate member of Lambda(mu, nu).
class KernelDistribution {
  public:
    explicit KernelDistribution(std::vector<DisintegrationAtom> atoms);

    const std::vector<DisintegrationAtom>& atoms() const { return atoms_; }

    DiscreteMeasure x_marginal() const;
    // Mixture sum(weight * kernel): the intensity I(proj_2 P).
    DiscreteMeasure intensity() const;

    std::string to_json() const;

  private:
    std::vector<DisintegrationAtom> atoms_;
};

// Quantile coupling (two-pointer mass-matching sweep).
Coupling comonotone(const DiscreteMeasure& mu, const DiscreteMeasure& nu);
// Reverse-quantile coupling.
Coupling anticomonotone(const DiscreteMeasure& mu, const DiscreteMeasure& nu);

// Lift a coupling to its (point, kernel) representation.
KernelDistribution embed_J(const Coupling& c);

// Project a kernel distribution back to the coupling it averages to;
// left inverse of embed_J.
Coupling intensity_hat(const KernelDistribution& p);

// True iff x-marginal == mu and intensity == nu, each within tol.
bool lambda_member(const KernelDistribution& p, const DiscreteMeasure& mu,
                   const DiscreteMeasure& nu, double tol = 1e-10);

// AW_r(c1, c2) = W_r(J(c1), J(c2)) with ground cost
// (|x-x'|^r + W_r(p,p')^r)^{1/r}; outer transport solved as an LP.
double adapted_distance(const Coupling& c1, const Coupling& c2, double r = 1.0);

// Feasible chi in Pi(nu_prime, nu) whose kernels have barycenter equal to
// their base point. Throws if nu_prime is not dominated in convex order.
Coupling martingale_coupling(const DiscreteMeasure& nu_prime, const DiscreteMeasure& nu);

}  // namespace wotfi
