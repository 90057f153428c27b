#include "wotfi/market.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <sstream>

#include "json.hpp"

namespace wotfi {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double pos(double z) { return z > 0.0 ? z : 0.0; }

void check_curve(const QuoteCurve& c, const char* name) {
    if (c.strikes.size() != c.prices.size())
        throw std::invalid_argument(std::string(name) + ": strike/price length mismatch");
    for (std::size_t i = 0; i < c.strikes.size(); ++i) {
        if (!(c.strikes[i] > 0.0))
            throw ArbitrageError(std::string(name) + ": strike " +
                                 std::to_string(c.strikes[i]) + " not positive");
        if (c.prices[i] < 0.0)
            throw ArbitrageError(std::string(name) + ": negative price at K=" +
                                 std::to_string(c.strikes[i]));
        if (i > 0 && c.strikes[i] <= c.strikes[i - 1])
            throw ArbitrageError(std::string(name) + ": strikes not increasing at K=" +
                                 std::to_string(c.strikes[i]));
        if (i > 0 && c.prices[i] > c.prices[i - 1] + 1e-12)
            throw ArbitrageError(std::string(name) + ": call curve increasing between K=" +
                                 std::to_string(c.strikes[i - 1]) + " and K=" +
                                 std::to_string(c.strikes[i]));
    }
    for (std::size_t i = 1; i + 1 < c.strikes.size(); ++i) {
        // butterfly: convexity in K
        const double h1 = c.strikes[i] - c.strikes[i - 1];
        const double h2 = c.strikes[i + 1] - c.strikes[i];
        const double lhs = (c.prices[i + 1] - c.prices[i]) / h2 -
                           (c.prices[i] - c.prices[i - 1]) / h1;
        if (lhs < -1e-9)
            throw ArbitrageError(std::string(name) + ": butterfly arbitrage at strikes (" +
                                 std::to_string(c.strikes[i - 1]) + ", " +
                                 std::to_string(c.strikes[i]) + ", " +
                                 std::to_string(c.strikes[i + 1]) + ")");
    }
}

double uniform_step(const std::vector<double>& g, const char* name) {
    const double h = g[1] - g[0];
    for (std::size_t i = 1; i + 1 < g.size(); ++i)
        if (std::abs((g[i + 1] - g[i]) - h) > 1e-9 * (1.0 + std::abs(h)))
            throw std::invalid_argument(std::string(name) + ": strikes not on a uniform grid");
    return h;
}

// Second differences of a call/put curve on a uniform grid; boundary mass
// folded into the end nodes so the weights telescope to 1.
DiscreteMeasure difference_curve(const std::vector<double>& nodes,
                                 const std::vector<double>& vals, double h, bool put,
                                 double* boundary_mass) {
    const std::size_t n = nodes.size();
    std::vector<double> w(n, 0.0);
    if (put) {
        w[0] = (vals[1] - vals[0]) / h;
        w[n - 1] = 1.0 - (vals[n - 1] - vals[n - 2]) / h;
    } else {
        w[0] = 1.0 + (vals[1] - vals[0]) / h;
        w[n - 1] = -(vals[n - 1] - vals[n - 2]) / h;
    }
    for (std::size_t i = 1; i + 1 < n; ++i)
        w[i] = (vals[i - 1] - 2.0 * vals[i] + vals[i + 1]) / h;
    *boundary_mass = w[0] + w[n - 1];
    double sum = 0.0;
    for (double& x : w) {
        if (x < 0.0) {
            if (x < -1e-9) throw ArbitrageError("extraction: negative implied mass");
            x = 0.0;
        }
        sum += x;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw std::runtime_error("extraction: implied weights sum to " + std::to_string(sum));
    // drop numerical dust so downstream solvers never see ~0-mass atoms
    std::vector<double> pts2, w2;
    double kept = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        if (w[i] > 1e-12) {
            pts2.push_back(nodes[i]);
            kept += w[i];
            w2.push_back(w[i]);
        }
    for (double& x : w2) x /= kept;
    return DiscreteMeasure(std::move(pts2), std::move(w2));
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
}

std::string strip_dash(std::string s) {
    s.erase(std::remove(s.begin(), s.end(), '-'), s.end());
    for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return s;
}

DiscreteMeasure scale_support(const DiscreteMeasure& m, double s) {
    std::vector<double> pts(m.support());
    for (double& x : pts) x *= s;
    return DiscreteMeasure(std::move(pts), m.weights());
}

std::vector<double> sorted_unique(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end(),
                        [](double a, double b) { return std::abs(a - b) < 1e-13; }),
            v.end());
    return v;
}

}  // namespace

void MarketQuotes::validate() const {
    if (!(p0_T2 > 0.0) || !(p0_T3 > 0.0))
        throw std::invalid_argument("quotes: bond prices must be positive");
    check_curve(call_T1_on_T2, "call(T1,T2)");
    check_curve(call_T2_on_T3, "call(T2,T3)");
    // digital bound on the T2T3 curve: |dC/dK| <= p0_T2
    const QuoteCurve& c = call_T2_on_T3;
    for (std::size_t i = 1; i < c.strikes.size(); ++i) {
        const double slope = (c.prices[i] - c.prices[i - 1]) / (c.strikes[i] - c.strikes[i - 1]);
        if (slope < -p0_T2 * (1.0 + 1e-9) - 1e-12)
            throw ArbitrageError("call(T2,T3): slope below -p0_T2 between K=" +
                                 std::to_string(c.strikes[i - 1]) + " and K=" +
                                 std::to_string(c.strikes[i]));
    }
}

MarketQuotes MarketQuotes::from_csv(const std::string& text) {
    MarketQuotes q;
    bool saw_t2 = false, saw_t3 = false;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        std::istringstream row(line);
        std::string instrument, maturities, strike_s, price_s;
        if (!std::getline(row, instrument, ',') || !std::getline(row, maturities, ',') ||
            !std::getline(row, strike_s, ',') || !std::getline(row, price_s, ','))
            throw std::invalid_argument("quotes csv: malformed line " + std::to_string(lineno));
        instrument = trim(instrument);
        if (instrument == "instrument") continue;  // header
        double strike, price;
        try {
            strike = std::stod(trim(strike_s));
            price = std::stod(trim(price_s));
        } catch (const std::exception&) {
            throw std::invalid_argument("quotes csv: bad number on line " +
                                        std::to_string(lineno));
        }
        const std::string mat = strip_dash(trim(maturities));
        if (instrument == "bond") {
            if (mat == "T2" || mat == "0T2") {
                q.p0_T2 = price;
                saw_t2 = true;
            } else if (mat == "T3" || mat == "0T3") {
                q.p0_T3 = price;
                saw_t3 = true;
            } else {
                throw std::invalid_argument("quotes csv: unknown bond maturity '" +
                                            maturities + "' on line " + std::to_string(lineno));
            }
        } else if (instrument == "call") {
            QuoteCurve* curve = nullptr;
            if (mat == "T1T2")
                curve = &q.call_T1_on_T2;
            else if (mat == "T2T3")
                curve = &q.call_T2_on_T3;
            else
                throw std::invalid_argument("quotes csv: unknown call maturities '" +
                                            maturities + "' on line " + std::to_string(lineno));
            curve->strikes.push_back(strike);
            curve->prices.push_back(price);
        } else {
            throw std::invalid_argument("quotes csv: unknown instrument '" + instrument +
                                        "' on line " + std::to_string(lineno));
        }
    }
    if (!saw_t2 || !saw_t3)
        throw std::invalid_argument("quotes csv: missing bond,T2 or bond,T3 row");
    for (QuoteCurve* c : {&q.call_T1_on_T2, &q.call_T2_on_T3}) {
        std::vector<std::size_t> idx(c->strikes.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        std::sort(idx.begin(), idx.end(),
                  [&](std::size_t a, std::size_t b) { return c->strikes[a] < c->strikes[b]; });
        QuoteCurve sorted;
        for (std::size_t i : idx) {
            sorted.strikes.push_back(c->strikes[i]);
            sorted.prices.push_back(c->prices[i]);
        }
        *c = std::move(sorted);
    }
    return q;
}

std::string MarketQuotes::to_csv() const {
    std::ostringstream os;
    os.precision(17);
    os << "instrument,maturities,strike,price\n";
    os << "bond,T2,0," << p0_T2 << "\n";
    os << "bond,T3,0," << p0_T3 << "\n";
    for (std::size_t i = 0; i < call_T1_on_T2.strikes.size(); ++i)
        os << "call,T1-T2," << call_T1_on_T2.strikes[i] << ',' << call_T1_on_T2.prices[i]
           << "\n";
    for (std::size_t i = 0; i < call_T2_on_T3.strikes.size(); ++i)
        os << "call,T2-T3," << call_T2_on_T3.strikes[i] << ',' << call_T2_on_T3.prices[i]
           << "\n";
    return os.str();
}

DiscreteMeasure extract_nu(const MarketQuotes& q, ExtractionDiagnostics* diag) {
    q.validate();
    const QuoteCurve& c = q.call_T2_on_T3;
    if (c.strikes.size() < 2)
        throw std::invalid_argument("extract_nu: need at least two call(T2,T3) quotes");
    const double h = uniform_step(c.strikes, "extract_nu");
    std::vector<double> P(c.prices);
    for (double& p : P) p /= q.p0_T2;
    double boundary = 0.0;
    DiscreteMeasure nu = difference_curve(c.strikes, P, h, /*put=*/false, &boundary);
    double worst = 0.0;
    for (std::size_t j = 0; j < c.strikes.size(); ++j)
        worst = std::max(worst, std::abs(nu.call_price(c.strikes[j]) - P[j]));
    if (worst > 1e-8)
        throw std::runtime_error("extract_nu: repricing residual " + std::to_string(worst) +
                                 " exceeds 1e-8 (mass outside the strike grid?)");
    if (diag) {
        diag->reprice_error = worst;
        diag->boundary_mass = boundary;
        if (boundary > 1e-12) diag->note = "boundary mass folded into the end strikes";
    }
    return nu;
}

DiscreteMeasure extract_mu(const MarketQuotes& q, ExtractionDiagnostics* diag) {
    q.validate();
    const QuoteCurve& c = q.call_T1_on_T2;
    if (c.strikes.size() < 2)
        throw std::invalid_argument("extract_mu: need at least two call(T1,T2) quotes");
    // put prices on X1 at k = 1/K: G(k) = k C(1/k)/p0_T2 = E[(k - X1)^+]
    std::vector<double> k(c.strikes.size()), G(c.strikes.size());
    for (std::size_t i = 0; i < c.strikes.size(); ++i) {
        const std::size_t r = c.strikes.size() - 1 - i;  // K descending -> k ascending
        k[i] = 1.0 / c.strikes[r];
        G[i] = k[i] * c.prices[r] / q.p0_T2;
    }
    for (std::size_t i = 1; i < k.size(); ++i)
        if (G[i] < G[i - 1] - 1e-12)
            throw ArbitrageError("extract_mu: put curve decreasing between k=" +
                                 std::to_string(k[i - 1]) + " and k=" + std::to_string(k[i]));
    for (std::size_t i = 1; i + 1 < k.size(); ++i) {
        const double lhs = (G[i + 1] - G[i]) / (k[i + 1] - k[i]) -
                           (G[i] - G[i - 1]) / (k[i] - k[i - 1]);
        if (lhs < -1e-9)
            throw ArbitrageError("extract_mu: butterfly arbitrage at transformed strikes (" +
                                 std::to_string(k[i - 1]) + ", " + std::to_string(k[i]) +
                                 ", " + std::to_string(k[i + 1]) + ")");
    }
    // resample on a uniform k grid (chords of a convex curve stay convex)
    bool already_uniform = true;
    const double h0 = k[1] - k[0];
    for (std::size_t i = 1; i + 1 < k.size(); ++i)
        if (std::abs((k[i + 1] - k[i]) - h0) > 1e-9 * (1.0 + std::abs(h0)))
            already_uniform = false;
    std::vector<double> nodes, vals;
    double h;
    if (already_uniform) {
        nodes = k;
        vals = G;
        h = h0;
    } else {
        const std::size_t N = k.size();
        h = (k.back() - k.front()) / static_cast<double>(N - 1);
        for (std::size_t i = 0; i < N; ++i) {
            const double kk = k.front() + h * static_cast<double>(i);
            auto it = std::upper_bound(k.begin(), k.end(), kk);
            std::size_t hi = std::min<std::size_t>(
                std::max<std::size_t>(1, static_cast<std::size_t>(it - k.begin())),
                k.size() - 1);
            const double t = (kk - k[hi - 1]) / (k[hi] - k[hi - 1]);
            nodes.push_back(kk);
            vals.push_back(G[hi - 1] + t * (G[hi] - G[hi - 1]));
        }
    }
    double boundary = 0.0;
    DiscreteMeasure mu = difference_curve(nodes, vals, h, /*put=*/true, &boundary);
    double worst = 0.0;
    for (std::size_t j = 0; j < c.strikes.size(); ++j) {
        double model = 0.0;
        for (std::size_t i = 0; i < mu.size(); ++i)
            model += mu.weights()[i] * pos(1.0 - c.strikes[j] * mu.support()[i]);
        worst = std::max(worst, std::abs(model - c.prices[j] / q.p0_T2));
    }
    if (already_uniform && worst > 1e-8)
        throw std::runtime_error("extract_mu: repricing residual " + std::to_string(worst) +
                                 " exceeds 1e-8 (mass outside the strike grid?)");
    if (diag) {
        diag->reprice_error = worst;
        diag->boundary_mass = boundary;
        diag->note = already_uniform ? "" : "non-uniform 1/K grid resampled by chords";
    }
    return mu;
}

PayoffSpec PayoffSpec::caplet(double strike) {
    if (!(strike > 0.0)) throw std::invalid_argument("caplet: strike must be positive");
    PayoffSpec p;
    p.kind = Kind::caplet;
    p.strike = strike;
    return p;
}

PayoffSpec PayoffSpec::grid(std::vector<double> b2, std::vector<double> b3, Matrix values) {
    if (b2.size() < 2 || b3.size() < 2)
        throw std::invalid_argument("payoff grid: need >= 2 nodes per axis");
    if (values.rows() != b2.size() || values.cols() != b3.size())
        throw std::invalid_argument("payoff grid: sample shape mismatch");
    for (std::size_t i = 0; i < values.rows(); ++i)
        for (std::size_t j = 0; j < values.cols(); ++j)
            if (!std::isfinite(values(i, j)))
                throw std::invalid_argument("payoff grid: non-finite sample");
    PayoffSpec p;
    p.kind = Kind::grid;
    p.b2_grid = std::move(b2);
    p.b3_grid = std::move(b3);
    p.phi_values = std::move(values);
    return p;
}

namespace {
// clamped segment lookup for bilinear interpolation
std::pair<std::size_t, double> seg(const std::vector<double>& g, double x) {
    if (x <= g.front()) return {0, 0.0};
    if (x >= g.back()) return {g.size() - 2, 1.0};
    const std::size_t hi =
        static_cast<std::size_t>(std::upper_bound(g.begin(), g.end(), x) - g.begin());
    return {hi - 1, (x - g[hi - 1]) / (g[hi] - g[hi - 1])};
}
}  // namespace

double PayoffSpec::phi(double b2, double b3) const {
    if (kind == Kind::caplet) return pos(b3 - strike);
    const auto [i, s] = seg(b2_grid, b2);
    const auto [j, t] = seg(b3_grid, b3);
    const double a = phi_values(i, j) + s * (phi_values(i + 1, j) - phi_values(i, j));
    const double b = phi_values(i, j + 1) + s * (phi_values(i + 1, j + 1) - phi_values(i, j + 1));
    return a + t * (b - a);
}

double PayoffSpec::phi_hat(double x, double y) const {
    if (kind == Kind::caplet) return pos(y - strike * x);  // (y/x - K)^+ . x
    if (!(x > 0.0)) throw std::invalid_argument("phi_hat: x must be positive");
    return phi(1.0 / x, y / x) * x;
}

Matrix transform_payoff(const PayoffSpec& p, const std::vector<double>& x_grid,
                        const std::vector<double>& y_grid) {
    if (x_grid.empty() || y_grid.empty())
        throw std::invalid_argument("transform_payoff: empty grid");
    if (p.kind == PayoffSpec::Kind::grid)
        for (double x : x_grid)
            if (!(x > 0.0)) throw std::invalid_argument("transform_payoff: x grid not positive");
    Matrix out(x_grid.size(), y_grid.size());
    for (std::size_t i = 0; i < x_grid.size(); ++i)
        for (std::size_t j = 0; j < y_grid.size(); ++j)
            out(i, j) = p.phi_hat(x_grid[i], y_grid[j]);
    return out;
}

namespace {

double cert_value(const DualTriplet& t, const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
    double v = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) v += mu.weights()[i] * t.phi(mu.support()[i]);
    for (std::size_t j = 0; j < nu.size(); ++j) v += nu.weights()[j] * t.psi(nu.support()[j]);
    return v;
}

// Best caplet triplet over candidate thresholds. Every threshold yields a
// valid sub/super-hedge, so optimizing the certificate value over the
// kink candidates can only tighten the grid-threshold choice.
DualTriplet best_caplet_triplet(SDirection dir, const std::vector<double>& candidates,
                                const std::vector<double>& x_grid,
                                const std::vector<double>& y_grid, const DiscreteMeasure& mu,
                                const DiscreteMeasure& nu) {
    const bool lower = (dir == SDirection::lower);
    DualTriplet best;
    double best_val = lower ? -kInf : kInf;
    for (double a : candidates) {
        DualTriplet t = caplet_triplets(a, dir, x_grid, y_grid);
        const double v = cert_value(t, mu, nu);
        if (lower ? v > best_val : v < best_val) {
            best_val = v;
            best = std::move(t);
        }
    }
    return best;
}

SampledFunction make_relu(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
    const double lo = std::min(nu.support().front() - mu.support().back(), -1.0) - 1.0;
    const double hi = std::max(nu.support().back() - mu.support().front(), 1.0) + 1.0;
    return SampledFunction({lo, 0.0, hi}, {0.0, 0.0, hi});
}

int auto_resolution(const DiscreteMeasure& nu, std::string* note) {
    for (int cand = 1; cand <= 24; ++cand) {
        bool ok = true;
        for (double w : nu.weights())
            if (std::abs(w * cand - std::round(w * cand)) > 1e-9) ok = false;
        if (ok) return cand;
    }
    if (note) *note += "simplex resolution approximate (no exact m <= 24); ";
    return 24;
}

// Finite dual LP over sampled (phi, psi) with psi concave (lower) or
// convex (upper): Dirac constraints plus second-difference rows suffice
// for barycentric feasibility by Jensen.
struct GeneralDual {
    SampledFunction phi, psi;
    double value = 0.0;
};

GeneralDual solve_general_dual(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                               const PayoffSpec& payoff, const std::vector<double>& y_grid,
                               bool lower) {
    const std::size_t nx = mu.size(), ng = y_grid.size();
    // free variables split: phi_i = u_i - v_i, psi_g = u_{nx+g} - v_{nx+g}
    const std::size_t nfree = nx + ng;
    LpBuilder lp(2 * nfree, lower ? LpSense::maximize : LpSense::minimize);
    auto var = [&](std::size_t f, double c) {
        return std::vector<std::pair<std::size_t, double>>{{f, c}, {nfree + f, -c}};
    };
    for (std::size_t i = 0; i < nx; ++i) {
        lp.set_objective(i, mu.weights()[i]);
        lp.set_objective(nfree + i, -mu.weights()[i]);
    }
    for (std::size_t j = 0; j < nu.size(); ++j) {
        // nu's support must sit on the psi grid
        std::size_t g = ng;
        for (std::size_t t = 0; t < ng; ++t)
            if (std::abs(y_grid[t] - nu.support()[j]) < 1e-12) g = t;
        if (g == ng) throw std::logic_error("general dual: nu support missing from y grid");
        lp.set_objective(nx + g, nu.weights()[j]);
        lp.set_objective(nfree + nx + g, -nu.weights()[j]);
    }
    for (std::size_t i = 0; i < nx; ++i)
        for (std::size_t g = 0; g < ng; ++g) {
            auto row = var(i, 1.0);
            auto pg = var(nx + g, 1.0);
            row.insert(row.end(), pg.begin(), pg.end());
            lp.add_row(row, lower ? Rel::le : Rel::ge,
                       payoff.phi_hat(mu.support()[i], y_grid[g]));
        }
    for (std::size_t g = 1; g + 1 < ng; ++g) {
        const double h1 = y_grid[g] - y_grid[g - 1];
        const double h2 = y_grid[g + 1] - y_grid[g];
        std::vector<std::pair<std::size_t, double>> row;
        auto add = [&](std::size_t f, double c) {
            row.emplace_back(f, c);
            row.emplace_back(nfree + f, -c);
        };
        add(nx + g - 1, -1.0 / h1);
        add(nx + g, 1.0 / h1 + 1.0 / h2);
        add(nx + g + 1, -1.0 / h2);
        // concave for lower (second difference <= 0), convex for upper
        lp.add_row(row, lower ? Rel::ge : Rel::le, 0.0);
    }
    const LpSolution sol = lp.solve();
    if (sol.status != LpStatus::optimal)
        throw std::runtime_error("general dual: LP not optimal");
    std::vector<double> phi_v(nx), psi_v(ng);
    for (std::size_t i = 0; i < nx; ++i) phi_v[i] = sol.primal[i] - sol.primal[nfree + i];
    for (std::size_t g = 0; g < ng; ++g)
        psi_v[g] = sol.primal[nx + g] - sol.primal[nfree + nx + g];
    GeneralDual out;
    std::vector<double> xg = mu.support();
    if (xg.size() < 2) {
        xg.push_back(xg[0] + 1.0);
        phi_v.push_back(phi_v[0]);
    }
    out.phi = SampledFunction(xg, phi_v);
    out.psi = SampledFunction(y_grid, psi_v);
    out.value = sol.value;
    return out;
}

}  // namespace

BoundsReport price_bounds(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                          const PayoffSpec& payoff, const BoundsConfig& cfg) {
    if (!(cfg.p0_T2 > 0.0)) throw std::invalid_argument("price_bounds: p0_T2 must be positive");
    BoundsReport rep;
    rep.caplet = (payoff.kind == PayoffSpec::Kind::caplet);

    if (rep.caplet) {
        const double K = payoff.strike;
        rep.strike = K;
        const DiscreteMeasure nuK = scale_support(nu, 1.0 / K);  // (y - Kx)^+ = K (y/K - x)^+
        const SampledFunction relu = make_relu(mu, nuK);

        WotSolution lo = wot_lower_barycentric(mu, nuK, relu);
        WotSolution up = wot_upper_barycentric(mu, nuK, relu);
        rep.discounted_lower = K * lo.value;
        rep.discounted_upper = K * up.value;

        std::vector<double> base = mu.support();
        base.insert(base.end(), nuK.support().begin(), nuK.support().end());
        base = sorted_unique(std::move(base));

        // lower: monotone rearrangement -> S -> threshold -> triplet
        const MonotoneRearrangement wmr = weak_monotone_rearrangement(mu, nuK);
        {
            std::vector<double> yg = base;
            yg.insert(yg.end(), wmr.map_values.begin(), wmr.map_values.end());
            const SMap s = build_s_map(mu.support(), wmr.map_values, SDirection::lower, yg);
            std::vector<double> cands = base;
            cands.push_back(find_threshold(s));
            cands.push_back(-kInf);
            rep.lower_cert =
                best_caplet_triplet(SDirection::lower, cands, base, base, mu, nuK);
        }
        // upper: anticomonotone map T(x) = F_nu^{-1}(1 - F_mu(x-))
        {
            const Coupling& anti = *up.coupling;
            std::vector<double> tx, tv;
            for (std::size_t i = 0; i < anti.x_support().size(); ++i)
                for (std::size_t j = anti.y_support().size(); j-- > 0;)
                    if (anti.matrix()(i, j) > 1e-14) {
                        tx.push_back(anti.x_support()[i]);
                        tv.push_back(anti.y_support()[j]);
                    }
            std::vector<double> yg = base;
            const SMap s = build_s_map(tx, tv, SDirection::upper, yg);
            std::vector<double> cands = base;
            cands.push_back(find_threshold(s));
            cands.push_back(kInf);
            rep.upper_cert =
                best_caplet_triplet(SDirection::upper, cands, base, base, mu, nuK);
        }

        auto normalized = [](double x, double y1) { return pos(y1 - x); };
        std::vector<double> vgrid = base;
        if (std::isfinite(rep.lower_cert.threshold)) vgrid.push_back(rep.lower_cert.threshold);
        if (std::isfinite(rep.upper_cert.threshold)) vgrid.push_back(rep.upper_cert.threshold);
        vgrid = sorted_unique(std::move(vgrid));
        rep.lower_hedge = verify_hedge(rep.lower_cert, normalized, vgrid, vgrid, vgrid, mu,
                                       nuK, cfg.tol);
        rep.upper_hedge = verify_hedge(rep.upper_cert, normalized, vgrid, vgrid, vgrid, mu,
                                       nuK, cfg.tol);
        auto fail = [&](const char* side, const HedgeReport& h) {
            std::ostringstream os;
            os << "price_bounds: " << side << " certificate failed at (x=" << h.worst_x
               << ", y1=" << h.worst_y1 << ", y2=" << h.worst_y2
               << "), violation " << h.worst_violation;
            throw CertificateError(os.str());
        };
        if (!rep.lower_hedge.ok) fail("lower", rep.lower_hedge);
        if (!rep.upper_hedge.ok) fail("upper", rep.upper_hedge);
        rep.duality_gap_lower = std::abs(rep.lower_hedge.certificate_value - lo.value);
        rep.duality_gap_upper = std::abs(rep.upper_hedge.certificate_value - up.value);
        if (rep.duality_gap_lower > 1e-6 || rep.duality_gap_upper > 1e-6)
            throw CertificateError("price_bounds: certificate value gap exceeds 1e-6 (lower " +
                                   std::to_string(rep.duality_gap_lower) + ", upper " +
                                   std::to_string(rep.duality_gap_upper) + ")");

        // extremal models in original y units
        if (lo.kernel_dist) {
            std::vector<DisintegrationAtom> atoms;
            for (const auto& a : lo.kernel_dist->atoms())
                atoms.push_back({a.x, scale_support(a.kernel, K), a.weight});
            rep.lower_model = KernelDistribution(std::move(atoms));
        }
        {
            const Coupling anti = anticomonotone(mu, nu);
            std::vector<DisintegrationAtom> atoms;
            for (std::size_t i = 0; i < anti.x_support().size(); ++i)
                for (std::size_t j = 0; j < anti.y_support().size(); ++j)
                    if (anti.matrix()(i, j) > 1e-14)
                        atoms.push_back({anti.x_support()[i],
                                         DiscreteMeasure::dirac(anti.y_support()[j]),
                                         anti.matrix()(i, j)});
            rep.upper_model = KernelDistribution(std::move(atoms));
        }
    } else {
        // general sampled payoff: relaxed solver both ways + dual LP family
        std::string note;
        const int m = cfg.m > 0 ? cfg.m : auto_resolution(nu, &note);
        CostSpec cost = CostSpec::kernel([payoff](double x, const DiscreteMeasure& p) {
            return payoff.phi_hat(x, p.barycenter());
        });
        WotSolution lo = relaxed_wot(mu, nu, cost, m, LpSense::minimize);
        WotSolution up = relaxed_wot(mu, nu, cost, m, LpSense::maximize);

        std::vector<double> yg = nu.support();
        for (double b3 : payoff.b3_grid)
            for (double b2 : payoff.b2_grid) yg.push_back(b3 / b2 * 1.0);
        // refine across the barycenter range so PL psi tracks the payoff
        const double ylo = nu.support().front(), yhi = nu.support().back();
        for (int t = 0; t <= 16; ++t)
            yg.push_back(ylo + (yhi - ylo) * static_cast<double>(t) / 16.0);
        yg = sorted_unique(std::move(yg));

        GeneralDual dlo = solve_general_dual(mu, nu, payoff, yg, /*lower=*/true);
        GeneralDual dup = solve_general_dual(mu, nu, payoff, yg, /*lower=*/false);
        rep.duality_gap_lower = std::abs(lo.value - dlo.value);
        rep.duality_gap_upper = std::abs(up.value - dup.value);
        // certified side of each bound
        rep.discounted_lower = dlo.value;
        rep.discounted_upper = dup.value;

        rep.lower_cert.phi = dlo.phi;
        rep.lower_cert.psi = dlo.psi;
        rep.lower_cert.sense = HedgeSense::sub;
        rep.lower_cert.threshold = std::numeric_limits<double>::quiet_NaN();
        rep.upper_cert.phi = dup.phi;
        rep.upper_cert.psi = dup.psi;
        rep.upper_cert.sense = HedgeSense::super;
        rep.upper_cert.threshold = std::numeric_limits<double>::quiet_NaN();

        auto hat = [&payoff](double x, double y1) { return payoff.phi_hat(x, y1); };
        rep.lower_hedge =
            verify_hedge(rep.lower_cert, hat, mu.support(), yg, yg, mu, nu, cfg.tol);
        rep.upper_hedge =
            verify_hedge(rep.upper_cert, hat, mu.support(), yg, yg, mu, nu, cfg.tol);
        if (!rep.lower_hedge.ok || !rep.upper_hedge.ok)
            throw CertificateError("price_bounds: general-payoff certificate failed "
                                   "verification");
        rep.lower_model = lo.kernel_dist;
        rep.upper_model = up.kernel_dist;
        rep.notes = note + "general payoff: bounds are dual certificate values; the "
                           "relaxed primal values differ by the reported duality gaps";
    }

    if (rep.discounted_lower > rep.discounted_upper + 1e-8)
        throw std::logic_error("price_bounds: lower bound exceeds upper bound");
    rep.lower = cfg.p0_T2 * rep.discounted_lower;
    rep.upper = cfg.p0_T2 * rep.discounted_upper;
    return rep;
}

namespace {

nlohmann::json model_json(const KernelDistribution& kd) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& a : kd.atoms()) {
        nlohmann::json r;
        r["x"] = a.x;
        r["weight"] = a.weight;
        r["y1"] = a.kernel.barycenter();
        r["kernel"] = nlohmann::json::parse(a.kernel.to_json());
        if (a.x > 0.0) {
            r["p_T1_T2"] = 1.0 / a.x;
            r["p_T1_T3"] = a.kernel.barycenter() / a.x;
        } else {
            r["p_T1_T2"] = "n/a";
            r["p_T1_T3"] = "n/a";
        }
        rows.push_back(std::move(r));
    }
    return rows;
}

}  // namespace

std::string BoundsReport::to_json() const {
    nlohmann::json j;
    j["discounted_lower"] = discounted_lower;
    j["discounted_upper"] = discounted_upper;
    j["lower"] = lower;
    j["upper"] = upper;
    j["caplet"] = caplet;
    j["strike"] = strike;
    j["lower_certificate"] = nlohmann::json::parse(lower_cert.to_json());
    j["upper_certificate"] = nlohmann::json::parse(upper_cert.to_json());
    j["lower_hedge"] = {{"worst_violation", lower_hedge.worst_violation},
                        {"certificate_value", lower_hedge.certificate_value},
                        {"ok", lower_hedge.ok}};
    j["upper_hedge"] = {{"worst_violation", upper_hedge.worst_violation},
                        {"certificate_value", upper_hedge.certificate_value},
                        {"ok", upper_hedge.ok}};
    j["duality_gap_lower"] = duality_gap_lower;
    j["duality_gap_upper"] = duality_gap_upper;
    if (lower_model) j["lower_model"] = model_json(*lower_model);
    if (upper_model) j["upper_model"] = model_json(*upper_model);
    if (!notes.empty()) j["notes"] = notes;
    return j.dump(2);
}

std::string BoundsReport::summary() const {
    std::ostringstream os;
    os.precision(12);
    os << "robust price bounds";
    if (caplet) os << " (caplet, K=" << strike << ")";
    os << "\n  discounted (T2-bond units): [" << discounted_lower << ", "
       << discounted_upper << "]\n  money units:                [" << lower << ", " << upper
       << "]\n  certificates: lower worst violation " << lower_hedge.worst_violation
       << ", upper " << upper_hedge.worst_violation << "\n  duality gaps: lower "
       << duality_gap_lower << ", upper " << duality_gap_upper << "\n";
    if (!notes.empty()) os << "  notes: " << notes << "\n";
    return os.str();
}

ExtremalModelReport extremal_model_report(const DiscreteMeasure& mu,
                                          const DiscreteMeasure& nu,
                                          const BoundsReport& report) {
    if (!report.lower_model || !report.upper_model)
        throw std::runtime_error("extremal_model_report: bounds pipeline has not produced "
                                 "extremal models");
    if (!lambda_member(*report.lower_model, mu, nu, 1e-8) ||
        !lambda_member(*report.upper_model, mu, nu, 1e-8))
        throw std::logic_error("extremal_model_report: stored model marginals drifted");
    return {*report.lower_model, *report.upper_model};
}

std::string ExtremalModelReport::to_json() const {
    nlohmann::json j;
    j["lower_model"] = model_json(lower_model);
    j["upper_model"] = model_json(upper_model);
    return j.dump(2);
}

}  // namespace wotfi
