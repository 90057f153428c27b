// wotfi: robust fixed-income price bounds via weak optimal transport.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "wotfi/dual.hpp"
#include "wotfi/market.hpp"
#include "wotfi/wot.hpp"

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::invalid_argument("cannot write " + path);
    out << text;
}

wotfi::PayoffSpec parse_payoff(const std::string& spec) {
    if (spec.rfind("caplet:", 0) == 0) {
        const std::string rest = spec.substr(7);
        if (rest.rfind("K=", 0) != 0)
            throw std::invalid_argument("payoff: expected caplet:K=<strike>");
        return wotfi::PayoffSpec::caplet(std::stod(rest.substr(2)));
    }
    if (spec.rfind("grid:", 0) == 0) {
        const auto j = nlohmann::json::parse(read_file(spec.substr(5)));
        std::vector<double> b2 = j.at("b2_grid").get<std::vector<double>>();
        std::vector<double> b3 = j.at("b3_grid").get<std::vector<double>>();
        const auto rows = j.at("values");
        wotfi::Matrix m(b2.size(), b3.size());
        if (rows.size() != b2.size())
            throw std::invalid_argument("payoff grid: row count mismatch");
        for (std::size_t i = 0; i < b2.size(); ++i) {
            if (rows[i].size() != b3.size())
                throw std::invalid_argument("payoff grid: column count mismatch");
            for (std::size_t k = 0; k < b3.size(); ++k) m(i, k) = rows[i][k].get<double>();
        }
        return wotfi::PayoffSpec::grid(std::move(b2), std::move(b3), std::move(m));
    }
    throw std::invalid_argument("payoff: expected caplet:K=... or grid:PATH");
}

struct Inputs {
    std::string quotes_path, mu_path, nu_path;
    wotfi::DiscreteMeasure load_mu(double* p0_T2, wotfi::ExtractionDiagnostics* d) const {
        if (!mu_path.empty()) return wotfi::DiscreteMeasure::from_json(read_file(mu_path));
        if (quotes_path.empty())
            throw std::invalid_argument("need --mu or --quotes");
        const auto q = wotfi::MarketQuotes::from_csv(read_file(quotes_path));
        if (p0_T2) *p0_T2 = q.p0_T2;
        return wotfi::extract_mu(q, d);
    }
    wotfi::DiscreteMeasure load_nu(double* p0_T2, wotfi::ExtractionDiagnostics* d) const {
        if (!nu_path.empty()) return wotfi::DiscreteMeasure::from_json(read_file(nu_path));
        if (quotes_path.empty())
            throw std::invalid_argument("need --nu or --quotes");
        const auto q = wotfi::MarketQuotes::from_csv(read_file(quotes_path));
        if (p0_T2) *p0_T2 = q.p0_T2;
        return wotfi::extract_nu(q, d);
    }
};

std::string lp_dump_for(const wotfi::DiscreteMeasure& mu, const wotfi::DiscreteMeasure& nu,
                        const wotfi::PayoffSpec& payoff) {
    // the upper-bound transport LP over the supports, fixed format
    const std::size_t n = mu.size(), m = nu.size();
    wotfi::LinearProgram lp;
    lp.sense = wotfi::LpSense::maximize;
    lp.objective.resize(n * m);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j)
            lp.objective[i * m + j] = payoff.phi_hat(mu.support()[i], nu.support()[j]);
    lp.constraint_matrix = wotfi::Matrix(n + m, n * m);
    lp.rhs.assign(n + m, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) lp.constraint_matrix(i, i * m + j) = 1.0;
        lp.rhs[i] = mu.weights()[i];
    }
    for (std::size_t j = 0; j < m; ++j) {
        for (std::size_t i = 0; i < n; ++i) lp.constraint_matrix(n + j, i * m + j) = 1.0;
        lp.rhs[n + j] = nu.weights()[j];
    }
    return lp.dump();
}

int cmd_marginals(const Inputs& in, const std::string& out_dir) {
    if (in.quotes_path.empty()) throw std::invalid_argument("marginals: --quotes required");
    const auto q = wotfi::MarketQuotes::from_csv(read_file(in.quotes_path));
    wotfi::ExtractionDiagnostics dmu, dnu;
    const auto mu = wotfi::extract_mu(q, &dmu);
    const auto nu = wotfi::extract_nu(q, &dnu);
    std::filesystem::create_directories(out_dir);
    write_file(out_dir + "/mu.json", mu.to_json());
    write_file(out_dir + "/nu.json", nu.to_json());
    nlohmann::json diag;
    diag["mu"] = {{"reprice_error", dmu.reprice_error},
                  {"boundary_mass", dmu.boundary_mass},
                  {"note", dmu.note}};
    diag["nu"] = {{"reprice_error", dnu.reprice_error},
                  {"boundary_mass", dnu.boundary_mass},
                  {"note", dnu.note}};
    write_file(out_dir + "/diagnostics.json", diag.dump(2));
    std::cout << "wrote " << out_dir << "/mu.json, nu.json, diagnostics.json\n";
    return 0;
}

int cmd_bounds(const Inputs& in, const std::string& payoff_spec, int m, double tol,
               long seed, const std::string& out_path, bool dump_lp) {
    const wotfi::PayoffSpec payoff = parse_payoff(payoff_spec);
    double p0_T2 = 1.0;
    wotfi::ExtractionDiagnostics dmu, dnu;
    const auto mu = in.load_mu(&p0_T2, &dmu);
    const auto nu = in.load_nu(&p0_T2, &dnu);
    wotfi::BoundsConfig cfg;
    cfg.p0_T2 = p0_T2;
    cfg.m = m;
    cfg.tol = tol;
    const wotfi::BoundsReport rep = wotfi::price_bounds(mu, nu, payoff, cfg);

    nlohmann::json j;
    j["config"] = {{"payoff", payoff_spec}, {"m", m},        {"tol", tol},
                   {"seed", seed},          {"p0_T2", p0_T2}};
    j["report"] = nlohmann::json::parse(rep.to_json());
    const std::string text = j.dump(2) + "\n";
    if (out_path.empty())
        std::cout << text;
    else
        write_file(out_path, text);
    if (dump_lp) {
        const std::string lp = lp_dump_for(mu, nu, payoff);
        if (out_path.empty())
            std::cout << lp;
        else
            write_file(out_path + ".lp.txt", lp);
    }
    std::cerr << rep.summary();
    return 0;
}

// small randomized property suite; deterministic given the seed
int cmd_oracle(long seed, const std::string& out_path) {
    std::mt19937_64 rng(static_cast<std::uint64_t>(seed));
    auto urand = [&](double lo, double hi) {
        return lo + (hi - lo) * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    };
    auto random_measure = [&](int max_atoms, int denom_cap) {
        std::uniform_int_distribution<int> nd(2, max_atoms);
        const int n = nd(rng);
        std::uniform_int_distribution<int> dd(n, denom_cap);
        const int d = dd(rng);
        std::vector<int> parts(n, 1);
        for (int left = d - n; left > 0; --left)
            parts[std::uniform_int_distribution<int>(0, n - 1)(rng)]++;
        std::vector<double> pts(n), w(n);
        for (int i = 0; i < n; ++i) {
            pts[i] = urand(0.5, 2.0);
            w[i] = static_cast<double>(parts[i]) / d;
        }
        std::sort(pts.begin(), pts.end());
        for (int i = 1; i < n; ++i)
            if (pts[i] - pts[i - 1] < 1e-6) pts[i] = pts[i - 1] + 1e-6;
        return std::make_pair(wotfi::DiscreteMeasure(pts, w), d);
    };

    struct Line {
        std::string name;
        bool pass;
        double residual;
    };
    std::vector<Line> lines;

    {  // relaxed == barycentric lower for convex theta at exact resolution
        double worst = 0.0;
        for (int t = 0; t < 12; ++t) {
            const auto [mu, dm] = random_measure(4, 8);
            const auto [nu, dn] = random_measure(4, 8);
            (void)dm;
            const wotfi::SampledFunction relu({-4.0, 0.0, 4.0}, {0.0, 0.0, 4.0});
            const auto lo = wotfi::wot_lower_barycentric(mu, nu, relu);
            const auto rel = wotfi::relaxed_wot(
                mu, nu, wotfi::CostSpec::barycentric(relu, true), dn);
            worst = std::max(worst, std::abs(lo.value - rel.value));
        }
        lines.push_back({"relaxed_vs_barycentric_lower", worst <= 1e-8, worst});
    }
    {  // upper == anticomonotone quantile integral
        double worst = 0.0;
        for (int t = 0; t < 20; ++t) {
            const auto [mu, dm] = random_measure(5, 12);
            const auto [nu, dn] = random_measure(5, 12);
            (void)dm;
            (void)dn;
            const wotfi::SampledFunction relu({-4.0, 0.0, 4.0}, {0.0, 0.0, 4.0});
            const auto up = wotfi::wot_upper_barycentric(mu, nu, relu);
            // integrate theta(F_nu^{-1}(1-u) - F_mu^{-1}(u)) over the joint
            // mass partition
            std::vector<double> cuts{0.0, 1.0};
            double acc = 0.0;
            for (std::size_t i = 0; i + 1 < mu.size(); ++i)
                cuts.push_back(acc += mu.weights()[i]);
            acc = 0.0;
            // jumps of nu.quantile(1-u) sit at u = 1 - F_nu
            for (std::size_t j = 0; j + 1 < nu.size(); ++j)
                cuts.push_back(1.0 - (acc += nu.weights()[j]));
            std::sort(cuts.begin(), cuts.end());
            double integral = 0.0;
            for (std::size_t d = 0; d + 1 < cuts.size(); ++d) {
                const double len = cuts[d + 1] - cuts[d];
                if (len < 1e-15) continue;
                const double u = 0.5 * (cuts[d] + cuts[d + 1]);
                integral += len * relu(nu.quantile(1.0 - u) - mu.quantile(u));
            }
            worst = std::max(worst, std::abs(up.value - integral));
        }
        lines.push_back({"upper_vs_anticomonotone_quantile", worst <= 1e-8, worst});
    }
    {  // embed_J lands in Lambda and intensity_hat inverts it
        double worst = 0.0;
        bool ok = true;
        for (int t = 0; t < 20; ++t) {
            const auto [mu, dm] = random_measure(5, 12);
            const auto [nu, dn] = random_measure(5, 12);
            (void)dm;
            (void)dn;
            const auto como = wotfi::comonotone(mu, nu);
            const auto prod = wotfi::Coupling::product(mu, nu);
            const double w = urand(0.0, 1.0);
            wotfi::Matrix mix(mu.size(), nu.size());
            for (std::size_t i = 0; i < mu.size(); ++i)
                for (std::size_t j = 0; j < nu.size(); ++j)
                    mix(i, j) = w * como.matrix()(i, j) + (1.0 - w) * prod.matrix()(i, j);
            const wotfi::Coupling pi(mu.support(), nu.support(), mix);
            const auto lifted = wotfi::embed_J(pi);
            ok = ok && wotfi::lambda_member(lifted, mu, nu, 1e-9);
            const auto back = wotfi::intensity_hat(lifted);
            worst = std::max(worst, wotfi::adapted_distance(pi, back, 1.0));
        }
        lines.push_back({"embed_J_lambda_membership_roundtrip", ok && worst <= 1e-9, worst});
    }
    {  // Jensen for F(p) = W1(p, p0)
        double worst = -1.0;
        const auto p0 = wotfi::DiscreteMeasure({0.8, 1.6}, {0.5, 0.5});
        for (int t = 0; t < 40; ++t) {
            std::vector<wotfi::DisintegrationAtom> atoms;
            const int na = std::uniform_int_distribution<int>(1, 4)(rng);
            std::vector<double> w(na);
            double sum = 0.0;
            for (int a = 0; a < na; ++a) sum += w[a] = urand(0.1, 1.0);
            for (int a = 0; a < na; ++a) {
                const auto [ker, dk] = random_measure(4, 12);
                (void)dk;
                atoms.push_back({urand(0.5, 2.0) + a * 1e-3, ker, w[a] / sum});
            }
            const wotfi::KernelDistribution Q(atoms);
            double mean_F = 0.0;
            for (const auto& a : Q.atoms())
                mean_F += a.weight * wotfi::wasserstein(a.kernel, p0, 1.0);
            worst = std::max(worst, wotfi::wasserstein(Q.intensity(), p0, 1.0) - mean_F);
        }
        lines.push_back({"jensen_intensity_w1", worst <= 1e-10, worst});
    }
    {  // caplet duality sandwich through price_bounds
        double worst = 0.0;
        bool ok = true;
        for (int t = 0; t < 10; ++t) {
            const auto [mu, dm] = random_measure(5, 12);
            const auto [nu, dn] = random_measure(5, 12);
            (void)dm;
            (void)dn;
            try {
                const auto rep =
                    wotfi::price_bounds(mu, nu, wotfi::PayoffSpec::caplet(1.0), {});
                worst = std::max({worst, rep.duality_gap_lower, rep.duality_gap_upper});
            } catch (const std::exception&) {
                ok = false;
            }
        }
        lines.push_back({"caplet_certificate_duality", ok && worst <= 1e-6, worst});
    }

    std::ostringstream os;
    os.precision(17);
    os << "oracle suite (seed " << seed << ")\n";
    bool all = true;
    for (const auto& l : lines) {
        all = all && l.pass;
        os << "  " << (l.pass ? "PASS" : "FAIL") << "  " << l.name
           << "  worst_residual=" << l.residual << "\n";
    }
    os << (all ? "all properties passed\n" : "FAILURES present\n");
    if (out_path.empty())
        std::cout << os.str();
    else
        write_file(out_path, os.str());
    return all ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"wotfi: certified robust bounds for fixed-income derivatives"};
    app.require_subcommand(1);

    Inputs in;
    std::string payoff_spec = "caplet:K=1.0";
    std::string out_path;
    std::string out_dir = ".";
    int m = 0;
    int grid = 17;
    double tol = 1e-9;
    long seed = 20260823;
    bool dump_lp = false;

    auto* marg = app.add_subcommand("marginals", "extract mu/nu from quotes");
    marg->add_option("--quotes", in.quotes_path, "quote CSV")->required();
    marg->add_option("--out", out_dir, "output directory");

    auto* bounds = app.add_subcommand("bounds", "certified price bounds");
    bounds->add_option("--quotes", in.quotes_path, "quote CSV");
    bounds->add_option("--mu", in.mu_path, "mu JSON");
    bounds->add_option("--nu", in.nu_path, "nu JSON");
    bounds->add_option("--payoff", payoff_spec, "caplet:K=... or grid:PATH");
    bounds->add_option("--m", m, "simplex resolution (general payoffs)");
    bounds->add_option("--grid", grid, "grid size hint")->check(CLI::Range(2, 10000));
    bounds->add_option("--tol", tol, "verification tolerance")->check(CLI::PositiveNumber);
    bounds->add_option("--seed", seed, "seed recorded in outputs");
    bounds->add_option("--out", out_path, "report path (default stdout)");
    bounds->add_flag("--dump-lp", dump_lp, "dump the support-level transport LP");

    auto* oracle = app.add_subcommand("oracle", "randomized property suite");
    oracle->add_option("--seed", seed, "suite seed");
    oracle->add_option("--out", out_path, "report path (default stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (marg->parsed()) return cmd_marginals(in, out_dir);
        if (bounds->parsed())
            return cmd_bounds(in, payoff_spec, m, tol, seed, out_path, dump_lp);
        if (oracle->parsed()) return cmd_oracle(seed, out_path);
    } catch (const wotfi::ArbitrageError& e) {
        std::cerr << "arbitrage: " << e.what() << "\n";
        return 2;
    } catch (const wotfi::CertificateError& e) {
        std::cerr << "certificate: " << e.what() << "\n";
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 1;
    } catch (const std::runtime_error& e) {
        const std::string msg = e.what();
        std::cerr << "error: " << msg << "\n";
        return msg.find("infeasible") != std::string::npos ? 2 : 1;
    }
    return 1;
}
