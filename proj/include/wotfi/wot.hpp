#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "wotfi/couplings.hpp"
#include "wotfi/lp.hpp"
#include "wotfi/measures.hpp"

namespace wotfi {

// Scalar function given by piecewise-linear samples on an increasing grid.
// Evaluation outside the grid extrapolates the end segments.
class SampledFunction {
  public:
    SampledFunction() : grid_{0.0, 1.0}, values_{0.0, 0.0} {}  // zero function
    SampledFunction(std::vector<double> grid, std::vector<double> values);

    static SampledFunction from(const std::function<double(double)>& f,
                                std::vector<double> grid);

    double operator()(double x) const;
    const std::vector<double>& grid() const { return grid_; }
    const std::vector<double>& values() const { return values_; }

    // Nondecreasing discrete slopes.
    bool is_convex(double tol = 1e-12) const;

  private:
    std::vector<double> grid_;
    std::vector<double> values_;
};

enum class CostKind { barycentric_theta, pointwise, kernel_direct };

// Cost specification for the transport solvers.
//   barycentric_theta:  C(x, p) = theta(b(p) - x)
//   pointwise:          c(x, y) given as a matrix over the supports
//   kernel_direct:      C(x, p) via a callable on (x, kernel)
struct CostSpec {
    CostKind kind = CostKind::barycentric_theta;
    std::optional<SampledFunction> theta;
    bool theta_declared_convex = true;
    std::optional<Matrix> c_xy;
    std::function<double(double, const DiscreteMeasure&)> c_xp;

    static CostSpec barycentric(SampledFunction theta, bool declared_convex);
    static CostSpec pointwise(Matrix c_xy);
    static CostSpec kernel(std::function<double(double, const DiscreteMeasure&)> c);
};

struct SolverDiagnostics {
    int lp_iterations = 0;
    double objective_residual = 0.0;  // |value - re-evaluated objective|
    std::string note;
};

struct WotSolution {
    double value = 0.0;
    std::optional<Coupling> coupling;
    std::optional<KernelDistribution> kernel_dist;
    std::optional<DiscreteMeasure> eta;   // intermediate marginal nu*
    std::optional<Coupling> mart;         // martingale leg chi
    std::optional<EnvelopeGrid> envelope; // theta** when convexification ran
    SolverDiagnostics diagnostics;

    std::string to_json() const;
};

// Classical Kantorovich OT with a pointwise cost matrix.
WotSolution classical_ot(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                         const CostSpec& cost, LpSense sense = LpSense::minimize);

// inf over pi in Pi(mu, .) coupled through an intermediate marginal eta <=_c nu:
// single LP over (pi, chi) with per-point martingale constraints on chi.
WotSolution wot_lower_barycentric(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                  const SampledFunction& theta);

// sup of the barycentric cost over Pi(mu, nu); for convex theta this is the
// classical OT max attained by the anticomonotone coupling.
WotSolution wot_upper_barycentric(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                  const SampledFunction& theta);

// LP over Q(x, p) with p ranging over the resolution-m simplex grid of
// kernels on nu's support.
WotSolution relaxed_wot(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                        const CostSpec& cost, int resolution,
                        LpSense sense = LpSense::minimize);

// Replaces theta by its convex envelope, then solves the barycentric lower
// problem; value of the convexified problem equals the relaxed one.
WotSolution convexified_wot(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                            const SampledFunction& theta);

struct MonotoneRearrangement {
    std::vector<double> map_values;  // T at mu's support points
    DiscreteMeasure nu_star;
};

// The W1-projection of mu onto {eta <=_c nu}: T = F_{nu*}^{-1} o F_mu,
// verified nondecreasing and 1-Lipschitz across consecutive atoms.
MonotoneRearrangement weak_monotone_rearrangement(const DiscreteMeasure& mu,
                                                  const DiscreteMeasure& nu);

// All kernels on `support` with weights k/m; utility for enumeration
// oracles and the relaxed solver.
std::vector<DiscreteMeasure> simplex_grid_kernels(const std::vector<double>& support, int m);

}  // namespace wotfi
