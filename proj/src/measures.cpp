#include "wotfi/measures.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace wotfi {

namespace {
constexpr double kMergeTol = 1e-12;
constexpr double kWeightSumTol = 1e-12;
constexpr double kLoadRenormTol = 1e-9;
}  // namespace

DiscreteMeasure::DiscreteMeasure(std::vector<double> support, std::vector<double> weights) {
    if (support.size() != weights.size() || support.empty())
        throw std::invalid_argument("measure: support/weight size mismatch or empty");
    std::vector<std::size_t> idx(support.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return support[a] < support[b]; });
    for (std::size_t k : idx) {
        const double x = support[k];
        const double w = weights[k];
        if (!std::isfinite(x) || !std::isfinite(w))
            throw std::invalid_argument("measure: non-finite entry");
        if (w < 0.0) throw std::invalid_argument("measure: negative weight");
        if (w == 0.0) continue;
        if (!support_.empty() && x - support_.back() < kMergeTol) {
            weights_.back() += w;  // merge near-duplicate atoms
        } else {
            support_.push_back(x);
            weights_.push_back(w);
        }
    }
    if (support_.empty()) throw std::invalid_argument("measure: zero total mass");
    const double total = std::accumulate(weights_.begin(), weights_.end(), 0.0);
    if (std::abs(total - 1.0) > kWeightSumTol)
        throw std::invalid_argument("measure: weights sum to " + std::to_string(total));
}

DiscreteMeasure DiscreteMeasure::uniform(std::vector<double> points) {
    std::vector<double> w(points.size(), 1.0 / static_cast<double>(points.size()));
    return DiscreteMeasure(std::move(points), std::move(w));
}

double DiscreteMeasure::barycenter() const {
    double s = 0.0;
    for (std::size_t i = 0; i < support_.size(); ++i) s += weights_[i] * support_[i];
    return s;
}

double DiscreteMeasure::cdf(double x) const {
    double s = 0.0;
    for (std::size_t i = 0; i < support_.size() && support_[i] <= x; ++i) s += weights_[i];
    return s;
}

double DiscreteMeasure::quantile(double u) const {
    if (!(u > 0.0 && u < 1.0)) throw std::invalid_argument("quantile: u must be in (0,1)");
    double acc = 0.0;
    for (std::size_t i = 0; i < support_.size(); ++i) {
        acc += weights_[i];
        if (acc >= u - 1e-15) return support_[i];
    }
    return support_.back();
}

double DiscreteMeasure::call_price(double k) const {
    double s = 0.0;
    for (std::size_t i = 0; i < support_.size(); ++i)
        s += weights_[i] * std::max(support_[i] - k, 0.0);
    return s;
}

double wasserstein(const DiscreteMeasure& m1, const DiscreteMeasure& m2, double r) {
    if (r < 1.0) throw std::invalid_argument("wasserstein: r must be >= 1");
    // Integrate |F1^{-1}(u) - F2^{-1}(u)|^r over the common mass partition.
    std::size_t i = 0, j = 0;
    double a1 = m1.weights()[0], a2 = m2.weights()[0];
    double total = 0.0;
    while (true) {
        const double mass = std::min(a1, a2);
        total += mass * std::pow(std::abs(m1.support()[i] - m2.support()[j]), r);
        a1 -= mass;
        a2 -= mass;
        if (a1 <= 1e-15) {
            if (++i >= m1.size()) break;
            a1 = m1.weights()[i];
        }
        if (a2 <= 1e-15) {
            if (++j >= m2.size()) break;
            a2 = m2.weights()[j];
        }
    }
    return std::pow(total, 1.0 / r);
}

EnvelopeGrid convex_envelope(const std::vector<double>& grid,
                             const std::vector<double>& values) {
    if (grid.size() < 2 || grid.size() != values.size())
        throw std::invalid_argument("convex_envelope: need >= 2 grid points");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (grid[i] <= grid[i - 1])
            throw std::invalid_argument("convex_envelope: grid not increasing");

    // Monotone chain, lower hull over (grid, values).
    std::vector<std::size_t> hull;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        while (hull.size() >= 2) {
            const std::size_t a = hull[hull.size() - 2], b = hull[hull.size() - 1];
            const double cross = (grid[b] - grid[a]) * (values[i] - values[a]) -
                                 (grid[i] - grid[a]) * (values[b] - values[a]);
            if (cross <= 0.0)
                hull.pop_back();
            else
                break;
        }
        hull.push_back(i);
    }

    EnvelopeGrid out{grid, values, std::vector<double>(grid.size())};
    std::size_t seg = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        while (seg + 1 < hull.size() && grid[hull[seg + 1]] < grid[i]) ++seg;
        const std::size_t a = hull[seg];
        const std::size_t b = hull[std::min(seg + 1, hull.size() - 1)];
        if (a == b || grid[i] <= grid[a]) {
            out.hull_values[i] = values[a];
        } else {
            const double t = (grid[i] - grid[a]) / (grid[b] - grid[a]);
            out.hull_values[i] = (1.0 - t) * values[a] + t * values[b];
        }
        out.hull_values[i] = std::min(out.hull_values[i], values[i]);
    }
    return out;
}

std::string DiscreteMeasure::to_json() const {
    nlohmann::json j;
    j["support"] = support_;
    j["weights"] = weights_;
    return j.dump();
}

DiscreteMeasure DiscreteMeasure::from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    std::vector<double> s = j.at("support").get<std::vector<double>>();
    std::vector<double> w = j.at("weights").get<std::vector<double>>();
    double total = std::accumulate(w.begin(), w.end(), 0.0);
    if (std::abs(total - 1.0) > kLoadRenormTol)
        throw std::invalid_argument("measure load: weights sum to " + std::to_string(total));
    for (double& x : w) x /= total;
    return DiscreteMeasure(std::move(s), std::move(w));
}

std::string DiscreteMeasure::to_csv() const {
    std::ostringstream os;
    os.precision(17);
    for (std::size_t i = 0; i < support_.size(); ++i)
        os << support_[i] << ',' << weights_[i] << '\n';
    return os.str();
}

DiscreteMeasure DiscreteMeasure::from_csv(const std::string& text) {
    std::vector<double> s, w;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw std::invalid_argument("measure csv: expected 'point,weight' lines");
        s.push_back(std::stod(line.substr(0, comma)));
        w.push_back(std::stod(line.substr(comma + 1)));
    }
    double total = std::accumulate(w.begin(), w.end(), 0.0);
    if (std::abs(total - 1.0) > kLoadRenormTol)
        throw std::invalid_argument("measure csv: weights sum to " + std::to_string(total));
    for (double& x : w) x /= total;
    return DiscreteMeasure(std::move(s), std::move(w));
}

}  // namespace wotfi
