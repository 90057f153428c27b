#include "wotfi/wot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

namespace wotfi {

SampledFunction::SampledFunction(std::vector<double> grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
    if (grid_.size() < 2 || grid_.size() != values_.size())
        throw std::invalid_argument("sampled function: need >= 2 samples");
    for (std::size_t i = 1; i < grid_.size(); ++i)
        if (grid_[i] <= grid_[i - 1])
            throw std::invalid_argument("sampled function: grid not increasing");
}

SampledFunction SampledFunction::from(const std::function<double(double)>& f,
                                      std::vector<double> grid) {
    std::vector<double> v(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) v[i] = f(grid[i]);
    return SampledFunction(std::move(grid), std::move(v));
}

double SampledFunction::operator()(double x) const {
    // Piecewise linear, end segments extrapolated.
    std::size_t hi = 1;
    if (x >= grid_.back())
        hi = grid_.size() - 1;
    else if (x > grid_.front())
        hi = static_cast<std::size_t>(
            std::upper_bound(grid_.begin(), grid_.end(), x) - grid_.begin());
    const std::size_t lo = hi - 1;
    const double t = (x - grid_[lo]) / (grid_[hi] - grid_[lo]);
    return values_[lo] + t * (values_[hi] - values_[lo]);
}

bool SampledFunction::is_convex(double tol) const {
    double prev = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < grid_.size(); ++i) {
        const double s = (values_[i] - values_[i - 1]) / (grid_[i] - grid_[i - 1]);
        if (s < prev - tol) return false;
        prev = s;
    }
    return true;
}

CostSpec CostSpec::barycentric(SampledFunction theta, bool declared_convex) {
    if (declared_convex != theta.is_convex(1e-9))
        throw std::invalid_argument("cost spec: convexity declaration does not match samples");
    CostSpec c;
    c.kind = CostKind::barycentric_theta;
    c.theta = std::move(theta);
    c.theta_declared_convex = declared_convex;
    return c;
}

CostSpec CostSpec::pointwise(Matrix c_xy) {
    CostSpec c;
    c.kind = CostKind::pointwise;
    c.c_xy = std::move(c_xy);
    return c;
}

CostSpec CostSpec::kernel(std::function<double(double, const DiscreteMeasure&)> f) {
    CostSpec c;
    c.kind = CostKind::kernel_direct;
    c.c_xp = std::move(f);
    return c;
}

std::string WotSolution::to_json() const {
    nlohmann::json j;
    j["value"] = value;
    j["diagnostics"] = {{"lp_iterations", diagnostics.lp_iterations},
                        {"objective_residual", diagnostics.objective_residual},
                        {"note", diagnostics.note}};
    if (coupling) j["coupling"] = nlohmann::json::parse(coupling->to_json());
    if (kernel_dist) j["kernel_dist"] = nlohmann::json::parse(kernel_dist->to_json());
    if (eta) j["eta"] = nlohmann::json::parse(eta->to_json());
    if (mart) j["mart"] = nlohmann::json::parse(mart->to_json());
    if (envelope) {
        j["envelope"] = {{"grid", envelope->grid},
                         {"values", envelope->values},
                         {"hull_values", envelope->hull_values}};
    }
    return j.dump();
}

std::vector<DiscreteMeasure> simplex_grid_kernels(const std::vector<double>& support, int m) {
    if (m < 1) throw std::invalid_argument("simplex grid: resolution must be >= 1");
    std::vector<DiscreteMeasure> out;
    const std::size_t n = support.size();
    std::vector<int> counts(n, 0);
    // Enumerate compositions of m into n nonnegative parts.
    std::function<void(std::size_t, int)> rec = [&](std::size_t idx, int left) {
        if (idx + 1 == n) {
            counts[idx] = left;
            std::vector<double> pts, w;
            for (std::size_t i = 0; i < n; ++i)
                if (counts[i] > 0) {
                    pts.push_back(support[i]);
                    w.push_back(static_cast<double>(counts[i]) / m);
                }
            out.emplace_back(std::move(pts), std::move(w));
            return;
        }
        for (int k = left; k >= 0; --k) {
            counts[idx] = k;
            rec(idx + 1, left - k);
        }
    };
    rec(0, m);
    return out;
}

WotSolution classical_ot(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                         const CostSpec& cost, LpSense sense) {
    if (cost.kind != CostKind::pointwise || !cost.c_xy)
        throw std::invalid_argument("classical_ot: pointwise cost required");
    if (cost.c_xy->rows() != mu.size() || cost.c_xy->cols() != nu.size())
        throw std::invalid_argument("classical_ot: cost matrix shape mismatch");
    const TransportSolution t = solve_transport(mu.weights(), nu.weights(), *cost.c_xy, sense);
    WotSolution sol;
    sol.value = t.value;
    sol.diagnostics.lp_iterations = t.iterations;
    Matrix plan = t.plan;
    for (std::size_t i = 0; i < plan.rows(); ++i)
        for (std::size_t j = 0; j < plan.cols(); ++j) plan(i, j) = std::max(0.0, plan(i, j));
    sol.coupling = Coupling(mu.support(), nu.support(), plan);
    double re = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i)
        for (std::size_t j = 0; j < nu.size(); ++j)
            re += (*cost.c_xy)(i, j) * sol.coupling->matrix()(i, j);
    sol.diagnostics.objective_residual = std::abs(re - sol.value);
    return sol;
}

namespace {

// Common-refinement partition of (0,1) by the mass breakpoints of mu and nu.
struct QuantileCells {
    std::vector<double> length;   // cell lengths
    std::vector<double> f;        // mu quantile per cell
    std::vector<double> g;        // nu quantile per cell
    std::vector<std::size_t> mu_atom;  // index of mu's atom owning the cell
};

QuantileCells build_cells(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
    std::vector<double> cuts{0.0, 1.0};
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < mu.size(); ++i) cuts.push_back(acc += mu.weights()[i]);
    acc = 0.0;
    for (std::size_t j = 0; j + 1 < nu.size(); ++j) cuts.push_back(acc += nu.weights()[j]);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end(),
                           [](double a, double b) { return b - a < 1e-13; }),
               cuts.end());
    QuantileCells c;
    for (std::size_t d = 0; d + 1 < cuts.size(); ++d) {
        const double mid = 0.5 * (cuts[d] + cuts[d + 1]);
        c.length.push_back(cuts[d + 1] - cuts[d]);
        c.f.push_back(mu.quantile(mid));
        c.g.push_back(nu.quantile(mid));
        double a = 0.0;
        std::size_t idx = mu.size() - 1;
        for (std::size_t i = 0; i < mu.size(); ++i) {
            a += mu.weights()[i];
            if (mid <= a) { idx = i; break; }
        }
        c.mu_atom.push_back(idx);
    }
    return c;
}

struct LowerResult {
    double value = 0.0;
    std::vector<double> map_values;  // T at mu's atoms
    int iterations = 0;
};

// Solves inf over monotone 1-Lipschitz maps T with T_*mu <=_c nu of
// sum mu(x) theta(T(x) - x), in quantile coordinates. An optimizer of this
// form always exists for convex theta (the weak monotone rearrangement
// composed with the quantile coupling), so the restriction is exact.
LowerResult lower_barycentric_core(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                   const SampledFunction& theta) {
    if (!theta.is_convex(1e-9))
        throw std::invalid_argument("wot_lower_barycentric: theta must be convex");
    const QuantileCells cells = build_cells(mu, nu);
    const std::size_t D = cells.length.size();

    const double qlo = nu.support().front();
    const double qhi = nu.support().back();
    const double fmin = mu.support().front();
    const double fmax = mu.support().back();

    // Supporting lines of theta over the attainable difference range.
    const auto& zg = theta.grid();
    const auto& zv = theta.values();
    std::vector<std::pair<double, double>> lines;  // (slope, intercept)
    for (std::size_t k = 0; k + 1 < zg.size(); ++k) {
        const double s = (zv[k + 1] - zv[k]) / (zg[k + 1] - zg[k]);
        lines.emplace_back(s, zv[k] - s * zg[k]);
    }
    const double z_min = qlo - fmax, z_max = qhi - fmin;
    double theta_floor = std::numeric_limits<double>::infinity();
    for (const auto& [s, b] : lines)
        theta_floor = std::min({theta_floor, s * z_min + b, s * z_max + b});

    // Variables: v_d = q_d - qlo (D), t_d = theta epigraph - theta_floor (D).
    LpBuilder lp(2 * D, LpSense::minimize);
    for (std::size_t d = 0; d < D; ++d) lp.set_objective(D + d, cells.length[d]);

    for (std::size_t d = 0; d + 1 < D; ++d) {
        lp.add_row({{d + 1, 1.0}, {d, -1.0}}, Rel::ge, 0.0);  // q nondecreasing
        lp.add_row({{d + 1, 1.0}, {d, -1.0}}, Rel::le,
                   cells.f[d + 1] - cells.f[d]);  // 1-Lipschitz vs mu quantile
    }
    for (std::size_t d = 0; d < D; ++d) lp.add_row({{d, 1.0}}, Rel::le, qhi - qlo);

    // Convex order: tail integrals of q dominated by those of nu's quantile,
    // with equality of the full integrals (equal means).
    double tail_q_const = 0.0, tail_g = 0.0;
    for (std::size_t d = 0; d < D; ++d) {
        tail_q_const += cells.length[d] * qlo;
        tail_g += cells.length[d] * cells.g[d];
    }
    {
        std::vector<std::pair<std::size_t, double>> coeffs;
        for (std::size_t d = 0; d < D; ++d) coeffs.emplace_back(d, cells.length[d]);
        lp.add_row(coeffs, Rel::eq, tail_g - tail_q_const);
    }
    for (std::size_t k = 1; k < D; ++k) {
        std::vector<std::pair<std::size_t, double>> coeffs;
        double rhs = 0.0;
        for (std::size_t d = k; d < D; ++d) {
            coeffs.emplace_back(d, cells.length[d]);
            rhs += cells.length[d] * (cells.g[d] - qlo);
        }
        lp.add_row(coeffs, Rel::le, rhs);
    }

    // Epigraph of theta(q_d - f_d).
    for (std::size_t d = 0; d < D; ++d)
        for (const auto& [s, b] : lines)
            lp.add_row({{D + d, 1.0}, {d, -s}}, Rel::ge,
                       s * (qlo - cells.f[d]) + b - theta_floor);

    const LpSolution sol = lp.solve();
    if (sol.status != LpStatus::optimal)
        throw std::runtime_error("wot_lower_barycentric: LP not optimal");

    LowerResult res;
    res.iterations = sol.iterations;
    double total_len_theta_floor = 0.0;
    for (double l : cells.length) total_len_theta_floor += l * theta_floor;
    res.value = sol.value + total_len_theta_floor;

    // T per mu atom: mass-weighted q over the atom's cells (equal up to LP
    // tolerance thanks to the Lipschitz rows).
    res.map_values.assign(mu.size(), 0.0);
    std::vector<double> mass(mu.size(), 0.0);
    for (std::size_t d = 0; d < D; ++d) {
        res.map_values[cells.mu_atom[d]] += cells.length[d] * (sol.primal[d] + qlo);
        mass[cells.mu_atom[d]] += cells.length[d];
    }
    for (std::size_t i = 0; i < mu.size(); ++i) res.map_values[i] /= mass[i];
    return res;
}

DiscreteMeasure pushforward(const DiscreteMeasure& mu, const std::vector<double>& map_values) {
    return DiscreteMeasure(map_values, mu.weights());
}

}  // namespace

WotSolution wot_lower_barycentric(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                  const SampledFunction& theta) {
    const LowerResult core = lower_barycentric_core(mu, nu, theta);
    WotSolution sol;
    sol.value = core.value;
    sol.diagnostics.lp_iterations = core.iterations;

    DiscreteMeasure eta = pushforward(mu, core.map_values);
    Coupling chi = martingale_coupling(eta, nu);

    // pi couples each mu atom with its image point.
    Matrix plan(mu.size(), eta.size());
    for (std::size_t i = 0; i < mu.size(); ++i) {
        const double t = core.map_values[i];
        std::size_t col = 0;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < eta.size(); ++j) {
            const double d = std::abs(eta.support()[j] - t);
            if (d < best) { best = d; col = j; }
        }
        plan(i, col) += mu.weights()[i];
    }
    Coupling pi(mu.support(), eta.support(), std::move(plan));

    // Attaining kernel distribution: x -> chi kernel at T(x).
    const auto chi_atoms = disintegrate(chi);
    std::vector<DisintegrationAtom> atoms;
    for (std::size_t i = 0; i < mu.size(); ++i) {
        const double t = core.map_values[i];
        const DisintegrationAtom* bestA = nullptr;
        double best = std::numeric_limits<double>::infinity();
        for (const auto& a : chi_atoms) {
            const double d = std::abs(a.x - t);
            if (d < best) { best = d; bestA = &a; }
        }
        atoms.push_back({mu.support()[i], bestA->kernel, mu.weights()[i]});
    }

    double re = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i)
        re += mu.weights()[i] * theta(core.map_values[i] - mu.support()[i]);
    sol.diagnostics.objective_residual = std::abs(re - sol.value);

    sol.coupling = std::move(pi);
    sol.eta = std::move(eta);
    sol.mart = std::move(chi);
    sol.kernel_dist = KernelDistribution(std::move(atoms));
    return sol;
}

WotSolution wot_upper_barycentric(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                  const SampledFunction& theta) {
    if (!theta.is_convex(1e-9))
        throw std::invalid_argument("wot_upper_barycentric: theta must be convex");
    Matrix cost(mu.size(), nu.size());
    for (std::size_t i = 0; i < mu.size(); ++i)
        for (std::size_t j = 0; j < nu.size(); ++j)
            cost(i, j) = theta(nu.support()[j] - mu.support()[i]);
    CostSpec cs = CostSpec::pointwise(cost);
    WotSolution lpres = classical_ot(mu, nu, cs, LpSense::maximize);

    Coupling anti = anticomonotone(mu, nu);
    double anti_value = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i)
        for (std::size_t j = 0; j < nu.size(); ++j)
            anti_value += cost(i, j) * anti.matrix()(i, j);
    if (std::abs(anti_value - lpres.value) > 1e-8 * (1.0 + std::abs(lpres.value)))
        throw std::runtime_error("wot_upper_barycentric: anticomonotone coupling not optimal");

    WotSolution sol;
    sol.value = lpres.value;
    sol.diagnostics = lpres.diagnostics;
    sol.diagnostics.objective_residual = std::abs(anti_value - lpres.value);
    sol.coupling = std::move(anti);
    return sol;
}

WotSolution relaxed_wot(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                        const CostSpec& cost, int m, LpSense sense) {
    if (m < 1) throw std::invalid_argument("relaxed_wot: resolution must be >= 1");
    std::function<double(double, const DiscreteMeasure&)> C;
    if (cost.kind == CostKind::kernel_direct) {
        C = cost.c_xp;
    } else if (cost.kind == CostKind::barycentric_theta) {
        const SampledFunction th = *cost.theta;
        C = [th](double x, const DiscreteMeasure& p) { return th(p.barycenter() - x); };
    } else {
        throw std::invalid_argument("relaxed_wot: kernel_direct or barycentric cost required");
    }

    const std::vector<DiscreteMeasure> kernels = simplex_grid_kernels(nu.support(), m);
    const std::size_t K = kernels.size();
    const std::size_t nx = mu.size(), ny = nu.size();

    LinearProgram lp;
    lp.sense = sense;
    lp.objective.resize(nx * K);
    for (std::size_t i = 0; i < nx; ++i)
        for (std::size_t k = 0; k < K; ++k)
            lp.objective[i * K + k] = C(mu.support()[i], kernels[k]);
    const std::size_t rows = nx + (ny - 1);
    lp.constraint_matrix = Matrix(rows, nx * K);
    lp.rhs.assign(rows, 0.0);
    for (std::size_t i = 0; i < nx; ++i) {
        for (std::size_t k = 0; k < K; ++k) lp.constraint_matrix(i, i * K + k) = 1.0;
        lp.rhs[i] = mu.weights()[i];
    }
    // Intensity constraints; kernels carry mass only on nu's support points.
    for (std::size_t j = 0; j + 1 < ny; ++j) {
        for (std::size_t i = 0; i < nx; ++i)
            for (std::size_t k = 0; k < K; ++k) {
                double pj = 0.0;
                const auto& ker = kernels[k];
                for (std::size_t a = 0; a < ker.size(); ++a)
                    if (std::abs(ker.support()[a] - nu.support()[j]) < 1e-12)
                        pj = ker.weights()[a];
                if (pj != 0.0) lp.constraint_matrix(nx + j, i * K + k) = pj;
            }
        lp.rhs[nx + j] = nu.weights()[j];
    }
    const LpSolution s = solve_lp(lp);
    if (s.status != LpStatus::optimal) {
        int suggest = 1;
        for (int cand = 1; cand <= 1000; ++cand) {
            bool ok = true;
            for (double w : nu.weights())
                if (std::abs(w * cand - std::round(w * cand)) > 1e-9) ok = false;
            if (ok) { suggest = cand; break; }
            suggest = 0;
        }
        throw std::runtime_error(
            "relaxed_wot: infeasible at resolution " + std::to_string(m) +
            (suggest > 0 ? ", try m = " + std::to_string(suggest) : ""));
    }

    WotSolution sol;
    sol.value = s.value;
    sol.diagnostics.lp_iterations = s.iterations;
    std::vector<DisintegrationAtom> atoms;
    double re = 0.0;
    for (std::size_t i = 0; i < nx; ++i)
        for (std::size_t k = 0; k < K; ++k) {
            const double w = s.primal[i * K + k];
            if (w > 1e-12) {
                atoms.push_back({mu.support()[i], kernels[k], w});
                re += w * lp.objective[i * K + k];
            }
        }
    sol.diagnostics.objective_residual = std::abs(re - sol.value);
    sol.kernel_dist = KernelDistribution(std::move(atoms));
    return sol;
}

WotSolution convexified_wot(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                            const SampledFunction& theta) {
    EnvelopeGrid env = convex_envelope(theta.grid(), theta.values());
    SampledFunction hull(env.grid, env.hull_values);
    WotSolution sol = wot_lower_barycentric(mu, nu, hull);
    sol.envelope = std::move(env);
    return sol;
}

MonotoneRearrangement weak_monotone_rearrangement(const DiscreteMeasure& mu,
                                                  const DiscreteMeasure& nu) {
    const double lo = std::min(nu.support().front() - mu.support().back(), -1.0);
    const double hi = std::max(nu.support().back() - mu.support().front(), 1.0);
    SampledFunction abs_theta({lo, 0.0, hi}, {-lo, 0.0, hi});
    const LowerResult core = lower_barycentric_core(mu, nu, abs_theta);

    for (std::size_t i = 1; i < mu.size(); ++i) {
        const double dq = core.map_values[i] - core.map_values[i - 1];
        const double dx = mu.support()[i] - mu.support()[i - 1];
        if (dq < -1e-8 || dq > dx + 1e-8)
            throw std::runtime_error(
                "weak_monotone_rearrangement: map not monotone 1-Lipschitz; refine the "
                "quantile partition");
    }
    return {core.map_values, pushforward(mu, core.map_values)};
}

}  // namespace wotfi
