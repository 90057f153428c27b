#include "wotfi/dual.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "json.hpp"

namespace wotfi {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLevelTol = 1e-9;

double left_derivative(const SampledFunction& f, double z) {
    const auto& g = f.grid();
    const auto& v = f.values();
    if (g.size() < 2) return 0.0;
    auto slope = [&](std::size_t i) { return (v[i + 1] - v[i]) / (g[i + 1] - g[i]); };
    if (!(z > g.front())) return slope(0);
    if (z > g.back()) return slope(g.size() - 2);
    // segment (g[i], g[i+1]] containing z
    auto it = std::lower_bound(g.begin(), g.end(), z);
    std::size_t i = static_cast<std::size_t>(it - g.begin());
    if (i > 0) --i;
    return slope(i);
}

std::vector<double> sorted_unique(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end(),
                        [](double a, double b) { return std::abs(a - b) < 1e-13; }),
            v.end());
    return v;
}

double pos(double z) { return z > 0.0 ? z : 0.0; }

}  // namespace

double SMap::evaluate(double y) const {
    if (direction == SDirection::lower) {
        for (std::size_t i = 0; i < t_x.size(); ++i)
            if (t_values[i] >= y - kLevelTol) return t_x[i];
        return kInf;
    }
    for (std::size_t i = t_x.size(); i-- > 0;)
        if (t_values[i] >= y - kLevelTol) return t_x[i];
    return -kInf;
}

SMap build_s_map(const std::vector<double>& x, const std::vector<double>& t,
                 SDirection direction, std::vector<double> y_grid) {
    if (x.size() != t.size() || x.empty())
        throw std::invalid_argument("s_map: mismatched or empty samples");
    for (std::size_t i = 1; i < t.size(); ++i) {
        const double d = t[i] - t[i - 1];
        if (direction == SDirection::lower ? d < -kLevelTol : d > kLevelTol)
            throw std::invalid_argument("s_map: map samples not monotone for direction");
    }
    SMap s;
    s.direction = direction;
    s.t_x = x;
    s.t_values = t;
    s.domain_lo = *std::min_element(t.begin(), t.end());
    s.domain_hi = *std::max_element(t.begin(), t.end());
    y_grid.push_back(s.domain_lo);
    y_grid.push_back(s.domain_hi);
    y_grid = sorted_unique(std::move(y_grid));
    for (double y : y_grid) {
        if (y < s.domain_lo - 1e-13 || y > s.domain_hi + 1e-13) continue;
        s.y_grid.push_back(y);
        s.s_values.push_back(s.evaluate(y));
    }
    return s;
}

SampledFunction build_psi(const SampledFunction& theta, const SMap& s, double y0) {
    const auto& g = s.y_grid;
    if (g.size() < 2) return SampledFunction(g.empty() ? std::vector<double>{y0} : g,
                                             std::vector<double>(std::max<std::size_t>(g.size(), 1), 0.0));
    std::vector<double> psi(g.size(), 0.0);
    for (std::size_t k = 0; k + 1 < g.size(); ++k) {
        const double mid = 0.5 * (g[k] + g[k + 1]);
        const double sm = s.evaluate(mid);
        double slope;
        if (sm == kInf)
            slope = left_derivative(theta, -kInf);
        else if (sm == -kInf)
            slope = left_derivative(theta, kInf);
        else
            slope = left_derivative(theta, mid - sm);
        psi[k + 1] = psi[k] + slope * (g[k + 1] - g[k]);
    }
    // normalize psi(y0) = 0, anchoring at the nearest grid node
    std::size_t anchor = 0;
    for (std::size_t k = 1; k < g.size(); ++k)
        if (std::abs(g[k] - y0) < std::abs(g[anchor] - y0)) anchor = k;
    const double c = psi[anchor];
    for (double& v : psi) v -= c;
    return SampledFunction(g, std::move(psi));
}

double find_threshold(const SMap& s) {
    bool any_pos = false, all_zero = true;
    double best = (s.direction == SDirection::lower) ? -kInf : kInf;
    for (std::size_t k = 0; k < s.y_grid.size(); ++k) {
        const double diff = s.y_grid[k] - s.s_values[k];
        if (std::abs(diff) > kLevelTol) all_zero = false;
        if (diff > kLevelTol) {
            any_pos = true;
            if (s.direction == SDirection::lower)
                best = std::max(best, s.y_grid[k]);
            else
                best = std::min(best, s.y_grid[k]);
        }
    }
    if (any_pos) return best;
    if (all_zero) return s.domain_lo;
    return (s.direction == SDirection::lower) ? -kInf : kInf;
}

double DualTriplet::delta(double y) const { return -left_derivative(psi, y); }

std::string DualTriplet::to_json() const {
    nlohmann::json j;
    j["sense"] = (sense == HedgeSense::sub) ? "sub" : "super";
    j["degenerate"] = degenerate;
    if (std::isfinite(threshold))
        j["threshold"] = threshold;
    else if (std::isnan(threshold))
        j["threshold"] = "none";
    else
        j["threshold"] = (threshold > 0) ? "+inf" : "-inf";
    j["phi"] = {{"grid", phi.grid()}, {"values", phi.values()}};
    j["psi"] = {{"grid", psi.grid()}, {"values", psi.values()}};
    std::vector<double> d;
    for (double y : psi.grid()) d.push_back(delta(y));
    j["delta"] = {{"grid", psi.grid()}, {"values", d}};
    return j.dump(2);
}

DualTriplet caplet_triplets(double a, SDirection direction,
                            const std::vector<double>& x_grid,
                            const std::vector<double>& y_grid) {
    std::vector<double> xg = x_grid, yg = y_grid;
    if (std::isfinite(a)) {
        xg.push_back(a);
        yg.push_back(a);
    }
    xg = sorted_unique(std::move(xg));
    yg = sorted_unique(std::move(yg));
    if (xg.size() < 2) xg = {xg.empty() ? 0.0 : xg[0], (xg.empty() ? 0.0 : xg[0]) + 1.0};
    if (yg.size() < 2) yg = {yg.empty() ? 0.0 : yg[0], (yg.empty() ? 0.0 : yg[0]) + 1.0};

    DualTriplet t;
    t.threshold = a;
    t.sense = (direction == SDirection::lower) ? HedgeSense::sub : HedgeSense::super;
    if (direction == SDirection::lower) {
        if (a == -kInf) {
            t.degenerate = true;
            t.phi = SampledFunction(xg, std::vector<double>(xg.size(), 0.0));
            t.psi = SampledFunction(yg, std::vector<double>(yg.size(), 0.0));
            return t;
        }
        t.phi = SampledFunction::from([a](double x) { return pos(a - x); }, xg);
        t.psi = SampledFunction::from([a](double y) { return -pos(a - y); }, yg);
        return t;
    }
    if (a == kInf) {
        // degenerate limit: psi = 0, phi superhedges theta(y - x) alone
        t.degenerate = true;
        const double ytop = yg.back();
        xg.push_back(ytop);
        xg = sorted_unique(std::move(xg));
        t.phi = SampledFunction::from([ytop](double x) { return pos(ytop - x); }, xg);
        t.psi = SampledFunction(yg, std::vector<double>(yg.size(), 0.0));
        return t;
    }
    t.phi = SampledFunction::from([a](double x) { return pos(a - x); }, xg);
    t.psi = SampledFunction::from([a](double y) { return pos(y - a); }, yg);
    return t;
}

SampledFunction inf_convolution(const SampledFunction& psi, const CostSpec& cost,
                                const std::vector<double>& x_grid) {
    const auto& yg = psi.grid();
    std::vector<double> out(x_grid.size(), 0.0);
    if (cost.kind == CostKind::barycentric_theta) {
        if (!cost.theta) throw std::invalid_argument("inf_convolution: missing theta");
        std::vector<double> neg(yg.size());
        for (std::size_t j = 0; j < yg.size(); ++j) neg[j] = -psi.values()[j];
        const EnvelopeGrid env = convex_envelope(yg, neg);
        for (std::size_t i = 0; i < x_grid.size(); ++i) {
            double best = kInf;
            for (std::size_t j = 0; j < yg.size(); ++j)
                best = std::min(best, (*cost.theta)(yg[j] - x_grid[i]) + env.hull_values[j]);
            out[i] = best;
        }
    } else if (cost.kind == CostKind::pointwise) {
        if (!cost.c_xy) throw std::invalid_argument("inf_convolution: missing cost matrix");
        const Matrix& c = *cost.c_xy;
        if (c.rows() != x_grid.size() || c.cols() != yg.size())
            throw std::invalid_argument("inf_convolution: cost matrix dimension mismatch");
        for (std::size_t i = 0; i < x_grid.size(); ++i) {
            double best = kInf;
            for (std::size_t j = 0; j < yg.size(); ++j)
                best = std::min(best, c(i, j) - psi.values()[j]);
            out[i] = best;
        }
    } else {
        if (!cost.c_xp) throw std::invalid_argument("inf_convolution: missing kernel cost");
        for (std::size_t i = 0; i < x_grid.size(); ++i) {
            double best = kInf;
            for (std::size_t j = 0; j < yg.size(); ++j)
                best = std::min(best,
                                cost.c_xp(x_grid[i], DiscreteMeasure::dirac(yg[j])) -
                                    psi.values()[j]);
            out[i] = best;
        }
    }
    return SampledFunction(x_grid, std::move(out));
}

SampledFunction sup_convolution(const SampledFunction& psi, const SampledFunction& theta,
                                const std::vector<double>& x_grid) {
    const auto& yg = psi.grid();
    std::vector<double> out(x_grid.size(), 0.0);
    for (std::size_t i = 0; i < x_grid.size(); ++i) {
        double best = -kInf;
        for (std::size_t j = 0; j < yg.size(); ++j)
            best = std::max(best, theta(yg[j] - x_grid[i]) - psi.values()[j]);
        out[i] = best;
    }
    return SampledFunction(x_grid, std::move(out));
}

HedgeReport verify_hedge(const DualTriplet& t,
                         const std::function<double(double, double)>& payoff,
                         const std::vector<double>& x_grid,
                         const std::vector<double>& y1_grid,
                         const std::vector<double>& y2_grid, const DiscreteMeasure& mu,
                         const DiscreteMeasure& nu, double tol) {
    HedgeReport rep;
    const bool super = (t.sense == HedgeSense::super);
    double worst = super ? kInf : -kInf;
    for (double x : x_grid) {
        const double px = t.phi(x);
        for (double y1 : y1_grid) {
            const double d = t.delta(y1);
            const double base = px + d * (-y1) - payoff(x, y1);
            for (double y2 : y2_grid) {
                const double margin = base + t.psi(y2) + d * y2;
                if (super ? margin < worst : margin > worst) {
                    worst = margin;
                    rep.worst_x = x;
                    rep.worst_y1 = y1;
                    rep.worst_y2 = y2;
                }
            }
        }
    }
    rep.worst_violation = worst;
    rep.ok = super ? (worst >= -tol) : (worst <= tol);
    double val = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) val += mu.weights()[i] * t.phi(mu.support()[i]);
    for (std::size_t j = 0; j < nu.size(); ++j) val += nu.weights()[j] * t.psi(nu.support()[j]);
    rep.certificate_value = val;
    return rep;
}

}  // namespace wotfi
