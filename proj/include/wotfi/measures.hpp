#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace wotfi {

// Finitely supported probability measure on the real line.
// Support is strictly increasing, weights are positive and sum to 1.
class DiscreteMeasure {
  public:
    DiscreteMeasure(std::vector<double> support, std::vector<double> weights);

    static DiscreteMeasure dirac(double x) { return DiscreteMeasure({x}, {1.0}); }
    static DiscreteMeasure uniform(std::vector<double> points);

    const std::vector<double>& support() const { return support_; }
    const std::vector<double>& weights() const { return weights_; }
    std::size_t size() const { return support_.size(); }

    double barycenter() const;

    // CDF evaluated at x: P[X <= x].
    double cdf(double x) const;

    // Left-continuous generalized inverse: inf{y : F(y) >= u}, u in (0,1).
    double quantile(double u) const;

    // E[(X - k)^+], the call function.
    double call_price(double k) const;

    bool operator==(const DiscreteMeasure& other) const = default;

    std::string to_json() const;
    static DiscreteMeasure from_json(const std::string& text);
    std::string to_csv() const;
    static DiscreteMeasure from_csv(const std::string& text);

  private:
    std::vector<double> support_;
    std::vector<double> weights_;
};

// W_r via the quantile coupling, exact for step quantile functions.
double wasserstein(const DiscreteMeasure& m1, const DiscreteMeasure& m2, double r = 1.0);

// Function samples on a grid together with their lower convex hull.
struct EnvelopeGrid {
    std::vector<double> grid;
    std::vector<double> values;
    std::vector<double> hull_values;
};

// Lower convex hull of {(grid[i], values[i])} resampled on the grid
// (monotone chain over the point set).
EnvelopeGrid convex_envelope(const std::vector<double>& grid,
                             const std::vector<double>& values);

class Coupling;  // couplings.hpp

enum class ConvexOrderFailure {
    none,
    mean_mismatch,
    call_violation,
    lp_infeasible,
};

struct ConvexOrderResult {
    bool in_order = false;
    ConvexOrderFailure failure = ConvexOrderFailure::none;
    // Martingale coupling witness when in_order (Strassen certificate).
    std::shared_ptr<const Coupling> witness;
    std::string detail;
};

// Decides m1 <=_c m2 two ways (call-function dominance and LP feasibility
// of a martingale coupling); disagreement throws.
ConvexOrderResult convex_order_check(const DiscreteMeasure& m1, const DiscreteMeasure& m2);

}  // namespace wotfi
