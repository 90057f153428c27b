#include "wotfi/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace wotfi {

std::string LinearProgram::dump() const {
    std::ostringstream os;
    os.precision(17);
    os << (sense == LpSense::minimize ? "min" : "max");
    for (double c : objective) os << ' ' << c;
    os << '\n';
    for (std::size_t i = 0; i < num_rows(); ++i) {
        for (std::size_t j = 0; j < num_vars(); ++j) os << constraint_matrix(i, j) << ' ';
        os << "| " << rhs[i] << '\n';
    }
    return os.str();
}

namespace {

// Tableau simplex working state. Columns: n structural + m artificial,
// plus an m-wide block carrying B^{-1} for dual recovery.
struct Tableau {
    std::size_t m, n;            // rows, structural columns
    std::vector<double> data;    // m rows x (n + m + m + 1) columns
    std::vector<int> basis;      // basic variable per row
    std::size_t width;

    Tableau(std::size_t m_, std::size_t n_) : m(m_), n(n_), width(n_ + m_ + m_ + 1) {
        data.assign(m * width, 0.0);
        basis.assign(m, -1);
    }
    double& at(std::size_t i, std::size_t j) { return data[i * width + j]; }
    double at(std::size_t i, std::size_t j) const { return data[i * width + j]; }
    std::size_t rhs_col() const { return n + m + m; }
    std::size_t binv_col(std::size_t i) const { return n + m + i; }

    void pivot(std::size_t pr, std::size_t pc) {
        const double piv = at(pr, pc);
        const double inv = 1.0 / piv;
        for (std::size_t j = 0; j < width; ++j) at(pr, j) *= inv;
        at(pr, pc) = 1.0;
        for (std::size_t i = 0; i < m; ++i) {
            if (i == pr) continue;
            const double f = at(i, pc);
            if (f == 0.0) continue;
            for (std::size_t j = 0; j < width; ++j) at(i, j) -= f * at(pr, j);
            at(i, pc) = 0.0;
        }
        basis[pr] = static_cast<int>(pc);
    }
};

struct PhaseResult {
    bool optimal = false;
    bool unbounded = false;
    int iterations = 0;
};

// Minimize cost over the tableau. Only columns below num_enterable may
// enter, which keeps artificials out of the basis in phase II.
PhaseResult run_simplex(Tableau& t, const std::vector<double>& cost,
                        std::size_t num_enterable, const LpConfig& cfg, int& iter_budget) {
    PhaseResult res;
    const double tol = cfg.optimality_tol;
    int degenerate_steps = 0;
    bool bland = false;

    while (true) {
        if (--iter_budget <= 0)
            throw std::runtime_error("lp: iteration limit exceeded");
        // reduced costs r_j = c_j - c_B' A_j
        std::size_t enter = num_enterable;
        double best = -tol;
        for (std::size_t j = 0; j < num_enterable; ++j) {
            double r = cost[j];
            for (std::size_t i = 0; i < t.m; ++i) {
                const double cb = cost[static_cast<std::size_t>(t.basis[i])];
                if (cb != 0.0) r -= cb * t.at(i, j);
            }
            if (bland) {
                if (r < -tol) { enter = j; break; }
            } else if (r < best) {
                best = r;
                enter = j;
            }
        }
        if (enter == num_enterable) {
            res.optimal = true;
            return res;
        }
        // ratio test, Bland tie-break on basis index when anti-cycling
        std::size_t leave = t.m;
        double best_ratio = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < t.m; ++i) {
            const double a = t.at(i, enter);
            if (a > cfg.feasibility_tol) {
                const double ratio = t.at(i, t.rhs_col()) / a;
                if (ratio < best_ratio - 1e-15 ||
                    (bland && std::abs(ratio - best_ratio) <= 1e-15 && leave < t.m &&
                     t.basis[i] < t.basis[leave])) {
                    best_ratio = ratio;
                    leave = i;
                }
            }
        }
        if (leave == t.m) {
            res.unbounded = true;
            return res;
        }
        if (best_ratio <= 1e-13) {
            if (++degenerate_steps > cfg.degeneracy_limit) bland = true;
        } else {
            degenerate_steps = 0;
        }
        t.pivot(leave, enter);
        ++res.iterations;
    }
}

}  // namespace

LpSolution solve_lp(const LinearProgram& lp, const LpConfig& cfg) {
    const std::size_t m = lp.num_rows();
    const std::size_t n = lp.num_vars();
    if (lp.constraint_matrix.rows() != m || lp.constraint_matrix.cols() != n)
        throw std::invalid_argument("lp: dimension mismatch between A, b, c");
    for (double c : lp.objective)
        if (!std::isfinite(c)) throw std::invalid_argument("lp: non-finite objective entry");
    for (double b : lp.rhs)
        if (!std::isfinite(b)) throw std::invalid_argument("lp: non-finite rhs entry");
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (!std::isfinite(lp.constraint_matrix(i, j)))
                throw std::invalid_argument("lp: non-finite constraint entry");

    const double sign = (lp.sense == LpSense::maximize) ? -1.0 : 1.0;

    Tableau t(m, n);
    std::vector<double> row_sign(m, 1.0);
    for (std::size_t i = 0; i < m; ++i) {
        double s = (lp.rhs[i] < 0.0) ? -1.0 : 1.0;
        row_sign[i] = s;
        for (std::size_t j = 0; j < n; ++j) t.at(i, j) = s * lp.constraint_matrix(i, j);
        t.at(i, n + i) = 1.0;          // artificial
        t.at(i, t.binv_col(i)) = 1.0;  // B^{-1} tracker
        t.at(i, t.rhs_col()) = s * lp.rhs[i];
        t.basis[i] = static_cast<int>(n + i);
    }

    int iter_budget = cfg.max_iterations;
    LpSolution sol;

    // Phase I
    {
        std::vector<double> cost(n + m, 0.0);
        for (std::size_t i = 0; i < m; ++i) cost[n + i] = 1.0;
        PhaseResult r = run_simplex(t, cost, n, cfg, iter_budget);
        sol.iterations += r.iterations;
        double art = 0.0;
        for (std::size_t i = 0; i < m; ++i)
            if (t.basis[i] >= static_cast<int>(n)) art += t.at(i, t.rhs_col());
        if (art > 1e-7) {
            sol.status = LpStatus::infeasible;
            return sol;
        }
        // Drive remaining (degenerate) artificials out of the basis.
        for (std::size_t i = 0; i < m; ++i) {
            if (t.basis[i] < static_cast<int>(n)) continue;
            std::size_t pc = n;
            for (std::size_t j = 0; j < n; ++j)
                if (std::abs(t.at(i, j)) > 1e-9) { pc = j; break; }
            if (pc < n) {
                t.pivot(i, pc);
            }
            // else: redundant row; artificial stays basic at zero, harmless.
        }
    }

    // Phase II
    {
        std::vector<double> cost(n + m, 0.0);
        for (std::size_t j = 0; j < n; ++j) cost[j] = sign * lp.objective[j];
        PhaseResult r = run_simplex(t, cost, n, cfg, iter_budget);
        sol.iterations += r.iterations;
        if (r.unbounded) {
            sol.status = LpStatus::unbounded;
            return sol;
        }

        sol.status = LpStatus::optimal;
        sol.primal.assign(n, 0.0);
        for (std::size_t i = 0; i < m; ++i)
            if (t.basis[i] < static_cast<int>(n))
                sol.primal[static_cast<std::size_t>(t.basis[i])] =
                    std::max(0.0, t.at(i, t.rhs_col()));
        double val = 0.0;
        for (std::size_t j = 0; j < n; ++j) val += lp.objective[j] * sol.primal[j];
        sol.value = val;

        // Duals: y = c_B' B^{-1}, undo the phase-0 row sign flips, then the
        // sense flip.
        sol.dual.assign(m, 0.0);
        for (std::size_t k = 0; k < m; ++k) {
            double y = 0.0;
            for (std::size_t i = 0; i < m; ++i) {
                const int bi = t.basis[i];
                if (bi < static_cast<int>(n) && cost[static_cast<std::size_t>(bi)] != 0.0)
                    y += cost[static_cast<std::size_t>(bi)] * t.at(i, t.binv_col(k));
            }
            sol.dual[k] = sign * row_sign[k] * y;
        }
    }
    return sol;
}

}  // namespace wotfi

namespace wotfi {

TransportSolution solve_transport(const std::vector<double>& a, const std::vector<double>& b,
                                  const Matrix& cost, LpSense sense) {
    const std::size_t n = a.size(), m = b.size();
    if (cost.rows() != n || cost.cols() != m)
        throw std::invalid_argument("transport: cost dimension mismatch");
    LinearProgram lp;
    lp.sense = sense;
    lp.objective.resize(n * m);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) lp.objective[i * m + j] = cost(i, j);
    // Row-sum constraints for a, column sums for b (last column constraint
    // dropped: it is implied by total mass 1).
    const std::size_t rows = n + m - 1;
    lp.constraint_matrix = Matrix(rows, n * m);
    lp.rhs.assign(rows, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) lp.constraint_matrix(i, i * m + j) = 1.0;
        lp.rhs[i] = a[i];
    }
    for (std::size_t j = 0; j + 1 < m; ++j) {
        for (std::size_t i = 0; i < n; ++i) lp.constraint_matrix(n + j, i * m + j) = 1.0;
        lp.rhs[n + j] = b[j];
    }
    const LpSolution sol = solve_lp(lp);
    if (sol.status != LpStatus::optimal)
        throw std::runtime_error("transport: LP not optimal");
    TransportSolution out;
    out.value = sol.value;
    out.iterations = sol.iterations;
    out.plan = Matrix(n, m);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) out.plan(i, j) = sol.primal[i * m + j];
    return out;
}

}  // namespace wotfi

namespace wotfi {

LpBuilder::LpBuilder(std::size_t num_vars, LpSense sense)
    : num_vars_(num_vars), sense_(sense), objective_(num_vars, 0.0) {}

void LpBuilder::set_objective(std::size_t var, double coeff) { objective_.at(var) = coeff; }

void LpBuilder::add_row(const std::vector<std::pair<std::size_t, double>>& coeffs, Rel rel,
                        double rhs) {
    rows_.push_back({coeffs, rel, rhs});
}

LpSolution LpBuilder::solve(const LpConfig& cfg) const {
    std::size_t slacks = 0;
    for (const Row& r : rows_)
        if (r.rel != Rel::eq) ++slacks;
    LinearProgram lp;
    lp.sense = sense_;
    lp.objective = objective_;
    lp.objective.resize(num_vars_ + slacks, 0.0);
    lp.constraint_matrix = Matrix(rows_.size(), num_vars_ + slacks);
    lp.rhs.assign(rows_.size(), 0.0);
    std::size_t next_slack = num_vars_;
    for (std::size_t i = 0; i < rows_.size(); ++i) {
        for (const auto& [v, c] : rows_[i].coeffs) lp.constraint_matrix(i, v) += c;
        lp.rhs[i] = rows_[i].rhs;
        if (rows_[i].rel == Rel::le)
            lp.constraint_matrix(i, next_slack++) = 1.0;
        else if (rows_[i].rel == Rel::ge)
            lp.constraint_matrix(i, next_slack++) = -1.0;
    }
    LpSolution sol = solve_lp(lp, cfg);
    if (sol.status == LpStatus::optimal) sol.primal.resize(num_vars_);
    return sol;
}

}  // namespace wotfi
