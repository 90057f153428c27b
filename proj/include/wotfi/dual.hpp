#pragma once

#include <limits>
#include <string>
#include <vector>

#include "wotfi/measures.hpp"
#include "wotfi/wot.hpp"

namespace wotfi {

enum class HedgeSense { sub, super };
enum class SDirection { lower, upper };

// Generalized inverse of a sampled monotone map T, with its working-grid
// samples. +/-inf encode empty or unbounded level sets.
struct SMap {
    SDirection direction = SDirection::lower;
    std::vector<double> t_x;       // T sample abscissae
    std::vector<double> t_values;  // T samples
    std::vector<double> y_grid;    // working grid
    std::vector<double> s_values;  // S on the working grid
    double domain_lo = 0.0;        // closed convex hull of T's range
    double domain_hi = 0.0;

    // lower: inf{x : T(x) >= y}; upper: sup{x : T(x) >= y}.
    double evaluate(double y) const;
};

// T given by samples (x[i], t[i]); lower requires T nondecreasing, upper
// nonincreasing. The working grid should contain the support points and
// T's values so threshold crossings land on grid nodes.
SMap build_s_map(const std::vector<double>& x, const std::vector<double>& t,
                 SDirection direction, std::vector<double> y_grid);

// psi(y) = int_{y0}^{y} dtheta_-(z - S(z)) dz on the S-map domain,
// normalized to psi(y0) = 0. Exact for the piecewise-constant integrand
// when its switch points lie on the grid.
SampledFunction build_psi(const SampledFunction& theta, const SMap& s, double y0);

// Threshold of the difference map y - S(y): for lower, sup{y : > 0}
// (-inf if empty, domain_lo if the difference vanishes identically);
// for upper, inf{y : > 0} (+inf if empty).
double find_threshold(const SMap& s);

// Hedge certificate: static legs phi (on X1), psi (on Y2) and the
// rebalance weight Delta(y) = -d/dy_- psi(y), a subgradient selection.
struct DualTriplet {
    SampledFunction phi;
    SampledFunction psi;
    double threshold = 0.0;  // +/-inf flags the degenerate cases
    HedgeSense sense = HedgeSense::sub;
    bool degenerate = false;

    double delta(double y) const;
    std::string to_json() const;
};

// Closed-form caplet triplets:
//   sub   (lower threshold a):  phi = (a-x)^+,  psi = -(a-y)^+
//   super (upper threshold a):  phi = (a-x)^+,  psi = (y-a)^+
// phi is the inf/sup-convolution of psi against theta = (.)^+ in both
// cases. Sentinel thresholds give the degenerate triplets.
DualTriplet caplet_triplets(double a, SDirection direction,
                            const std::vector<double>& x_grid,
                            const std::vector<double>& y_grid);

// R_C psi(x) = min_y C(x, delta_y) + (-psi)**(y) for barycentric costs
// (via the convex envelope), plain min_y c(x,y) - psi(y) for pointwise.
SampledFunction inf_convolution(const SampledFunction& psi, const CostSpec& cost,
                                const std::vector<double>& x_grid);

// sup_y theta(y - x) - psi(y); the super-hedge counterpart.
SampledFunction sup_convolution(const SampledFunction& psi, const SampledFunction& theta,
                                const std::vector<double>& x_grid);

struct HedgeReport {
    // Margin phi + psi + Delta(y2 - y1) - payoff; worst is the minimum
    // margin for super, the maximum for sub.
    double worst_violation = 0.0;
    double worst_x = 0.0, worst_y1 = 0.0, worst_y2 = 0.0;
    double certificate_value = 0.0;  // mu(phi) + nu(psi)
    bool ok = false;
};

HedgeReport verify_hedge(const DualTriplet& t,
                         const std::function<double(double, double)>& payoff,
                         const std::vector<double>& x_grid,
                         const std::vector<double>& y1_grid,
                         const std::vector<double>& y2_grid, const DiscreteMeasure& mu,
                         const DiscreteMeasure& nu, double tol = 1e-9);

}  // namespace wotfi
