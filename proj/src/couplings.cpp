#include "wotfi/couplings.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include <json.hpp>

namespace wotfi {

namespace {
constexpr double kMassTol = 1e-10;

void check_support(const std::vector<double>& s, const char* what) {
    if (s.empty()) throw std::invalid_argument(std::string(what) + ": empty support");
    for (std::size_t i = 1; i < s.size(); ++i)
        if (s[i] <= s[i - 1])
            throw std::invalid_argument(std::string(what) + ": support not increasing");
}
}  // namespace

Coupling::Coupling(std::vector<double> x_support, std::vector<double> y_support, Matrix matrix)
    : x_support_(std::move(x_support)), y_support_(std::move(y_support)),
      matrix_(std::move(matrix)) {
    check_support(x_support_, "coupling x");
    check_support(y_support_, "coupling y");
    if (matrix_.rows() != x_support_.size() || matrix_.cols() != y_support_.size())
        throw std::invalid_argument("coupling: matrix shape mismatch");
    double total = 0.0;
    for (std::size_t i = 0; i < matrix_.rows(); ++i)
        for (std::size_t j = 0; j < matrix_.cols(); ++j) {
            const double w = matrix_(i, j);
            if (!std::isfinite(w) || w < -kMassTol)
                throw std::invalid_argument("coupling: invalid matrix entry");
            total += w;
        }
    if (std::abs(total - 1.0) > kMassTol)
        throw std::invalid_argument("coupling: total mass " + std::to_string(total));
}

Coupling Coupling::product(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
    Matrix m(mu.size(), nu.size());
    for (std::size_t i = 0; i < mu.size(); ++i)
        for (std::size_t j = 0; j < nu.size(); ++j)
            m(i, j) = mu.weights()[i] * nu.weights()[j];
    return Coupling(mu.support(), nu.support(), std::move(m));
}

DiscreteMeasure Coupling::first_marginal() const {
    std::vector<double> w(x_support_.size(), 0.0);
    for (std::size_t i = 0; i < matrix_.rows(); ++i)
        for (std::size_t j = 0; j < matrix_.cols(); ++j) w[i] += matrix_(i, j);
    return DiscreteMeasure(x_support_, std::move(w));
}

DiscreteMeasure Coupling::second_marginal() const {
    std::vector<double> w(y_support_.size(), 0.0);
    for (std::size_t i = 0; i < matrix_.rows(); ++i)
        for (std::size_t j = 0; j < matrix_.cols(); ++j) w[j] += matrix_(i, j);
    return DiscreteMeasure(y_support_, std::move(w));
}

std::string Coupling::to_json() const {
    nlohmann::json j;
    j["x_support"] = x_support_;
    j["y_support"] = y_support_;
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < matrix_.rows(); ++i) {
        std::vector<double> row(matrix_.cols());
        for (std::size_t k = 0; k < matrix_.cols(); ++k) row[k] = matrix_(i, k);
        rows.push_back(std::move(row));
    }
    j["matrix"] = rows;
    return j.dump();
}

std::vector<DisintegrationAtom> disintegrate(const Coupling& c) {
    std::vector<DisintegrationAtom> out;
    for (std::size_t i = 0; i < c.matrix().rows(); ++i) {
        double mass = 0.0;
        for (std::size_t j = 0; j < c.matrix().cols(); ++j) mass += c.matrix()(i, j);
        if (mass <= 1e-14) continue;
        std::vector<double> pts, w;
        for (std::size_t j = 0; j < c.matrix().cols(); ++j) {
            if (c.matrix()(i, j) > 1e-15) {
                pts.push_back(c.y_support()[j]);
                w.push_back(c.matrix()(i, j) / mass);
            }
        }
        out.push_back({c.x_support()[i], DiscreteMeasure(std::move(pts), std::move(w)), mass});
    }
    return out;
}

KernelDistribution::KernelDistribution(std::vector<DisintegrationAtom> atoms)
    : atoms_(std::move(atoms)) {
    if (atoms_.empty()) throw std::invalid_argument("kernel distribution: empty");
    double total = 0.0;
    for (const auto& a : atoms_) {
        if (a.weight <= 0.0) throw std::invalid_argument("kernel distribution: weight <= 0");
        total += a.weight;
    }
    if (std::abs(total - 1.0) > kMassTol)
        throw std::invalid_argument("kernel distribution: total weight " +
                                    std::to_string(total));
    // Aggregate duplicate (x, kernel) atoms.
    std::vector<DisintegrationAtom> merged;
    for (const auto& a : atoms_) {
        bool found = false;
        for (auto& m : merged) {
            if (std::abs(m.x - a.x) < 1e-12 && m.kernel.size() == a.kernel.size()) {
                bool same = true;
                for (std::size_t k = 0; k < m.kernel.size() && same; ++k)
                    same = std::abs(m.kernel.support()[k] - a.kernel.support()[k]) < 1e-12 &&
                           std::abs(m.kernel.weights()[k] - a.kernel.weights()[k]) < 1e-12;
                if (same) {
                    m.weight += a.weight;
                    found = true;
                    break;
                }
            }
        }
        if (!found) merged.push_back(a);
    }
    atoms_ = std::move(merged);
    std::stable_sort(atoms_.begin(), atoms_.end(),
                     [](const auto& a, const auto& b) { return a.x < b.x; });
}

DiscreteMeasure KernelDistribution::x_marginal() const {
    std::vector<double> pts, w;
    for (const auto& a : atoms_) {
        pts.push_back(a.x);
        w.push_back(a.weight);
    }
    return DiscreteMeasure(std::move(pts), std::move(w));
}

DiscreteMeasure KernelDistribution::intensity() const {
    std::vector<double> pts, w;
    for (const auto& a : atoms_)
        for (std::size_t k = 0; k < a.kernel.size(); ++k) {
            pts.push_back(a.kernel.support()[k]);
            w.push_back(a.weight * a.kernel.weights()[k]);
        }
    return DiscreteMeasure(std::move(pts), std::move(w));
}

std::string KernelDistribution::to_json() const {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& a : atoms_) {
        nlohmann::json j;
        j["x"] = a.x;
        j["kernel"] = nlohmann::json::parse(a.kernel.to_json());
        j["weight"] = a.weight;
        out.push_back(std::move(j));
    }
    return out.dump();
}

namespace {

// Mass-matching sweep pairing quantiles of mu with quantiles of nu
// (nu traversed in reverse when anti is set). The x-atom is exhausted
// before y advances, which makes the sweep deterministic.
Coupling quantile_sweep(const DiscreteMeasure& mu, const DiscreteMeasure& nu, bool anti) {
    Matrix m(mu.size(), nu.size());
    std::size_t i = 0;
    std::size_t j = 0;
    double a = mu.weights()[0];
    auto jcol = [&](std::size_t idx) { return anti ? nu.size() - 1 - idx : idx; };
    double b = nu.weights()[jcol(0)];
    while (true) {
        const double mass = std::min(a, b);
        m(i, jcol(j)) += mass;
        a -= mass;
        b -= mass;
        if (a <= 1e-15) {
            if (++i >= mu.size()) break;
            a = mu.weights()[i];
        }
        if (b <= 1e-15) {
            if (++j >= nu.size()) break;
            b = nu.weights()[jcol(j)];
        }
    }
    return Coupling(mu.support(), nu.support(), std::move(m));
}

}  // namespace

Coupling comonotone(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
    return quantile_sweep(mu, nu, false);
}

Coupling anticomonotone(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
    return quantile_sweep(mu, nu, true);
}

KernelDistribution embed_J(const Coupling& c) { return KernelDistribution(disintegrate(c)); }

Coupling intensity_hat(const KernelDistribution& p) {
    // Aggregate weight*kernel mass over (x, y) cells.
    std::map<double, std::map<double, double>> cells;
    for (const auto& a : p.atoms())
        for (std::size_t k = 0; k < a.kernel.size(); ++k)
            cells[a.x][a.kernel.support()[k]] += a.weight * a.kernel.weights()[k];

    std::vector<double> xs, ys;
    for (const auto& [x, _] : cells) xs.push_back(x);
    std::map<double, std::size_t> ycol;
    for (const auto& [x, row] : cells)
        for (const auto& [y, _] : row) ycol[y] = 0;
    for (auto& [y, idx] : ycol) {
        idx = ys.size();
        ys.push_back(y);
    }
    Matrix m(xs.size(), ys.size());
    std::size_t i = 0;
    for (const auto& [x, row] : cells) {
        for (const auto& [y, w] : row) m(i, ycol[y]) += w;
        ++i;
    }
    return Coupling(std::move(xs), std::move(ys), std::move(m));
}

bool lambda_member(const KernelDistribution& p, const DiscreteMeasure& mu,
                   const DiscreteMeasure& nu, double tol) {
    return wasserstein(p.x_marginal(), mu, 1.0) <= tol &&
           wasserstein(p.intensity(), nu, 1.0) <= tol;
}

double adapted_distance(const Coupling& c1, const Coupling& c2, double r) {
    if (r < 1.0) throw std::invalid_argument("adapted_distance: r must be >= 1");
    const auto p1 = embed_J(c1).atoms();
    const auto p2 = embed_J(c2).atoms();
    std::vector<double> a, b;
    for (const auto& atom : p1) a.push_back(atom.weight);
    for (const auto& atom : p2) b.push_back(atom.weight);
    Matrix cost(p1.size(), p2.size());
    for (std::size_t i = 0; i < p1.size(); ++i)
        for (std::size_t j = 0; j < p2.size(); ++j)
            cost(i, j) = std::pow(std::abs(p1[i].x - p2[j].x), r) +
                         std::pow(wasserstein(p1[i].kernel, p2[j].kernel, r), r);
    const TransportSolution sol = solve_transport(a, b, cost, LpSense::minimize);
    return std::pow(std::max(sol.value, 0.0), 1.0 / r);
}

Coupling martingale_coupling(const DiscreteMeasure& nu_prime, const DiscreteMeasure& nu) {
    const std::size_t n = nu_prime.size(), m = nu.size();
    LinearProgram lp;
    lp.sense = LpSense::minimize;
    lp.objective.resize(n * m);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j)
            lp.objective[i * m + j] = std::abs(nu.support()[j] - nu_prime.support()[i]);
    // rows: n row sums, m-1 column sums, n martingale constraints
    const std::size_t rows = n + (m - 1) + n;
    lp.constraint_matrix = Matrix(rows, n * m);
    lp.rhs.assign(rows, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) lp.constraint_matrix(i, i * m + j) = 1.0;
        lp.rhs[i] = nu_prime.weights()[i];
    }
    for (std::size_t j = 0; j + 1 < m; ++j) {
        for (std::size_t i = 0; i < n; ++i) lp.constraint_matrix(n + j, i * m + j) = 1.0;
        lp.rhs[n + j] = nu.weights()[j];
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j)
            lp.constraint_matrix(n + m - 1 + i, i * m + j) =
                nu.support()[j] - nu_prime.support()[i];
    const LpSolution sol = solve_lp(lp);
    if (sol.status != LpStatus::optimal)
        throw std::runtime_error(
            "martingale_coupling: infeasible, marginals not in convex order");
    Matrix plan(n, m);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) plan(i, j) = std::max(0.0, sol.primal[i * m + j]);
    return Coupling(nu_prime.support(), nu.support(), std::move(plan));
}

}  // namespace wotfi
