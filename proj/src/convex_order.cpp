#include <algorithm>
#include <cmath>
#include <sstream>

#include "wotfi/couplings.hpp"
#include "wotfi/measures.hpp"

namespace wotfi {

namespace {
constexpr double kTol = 1e-9;
}

ConvexOrderResult convex_order_check(const DiscreteMeasure& m1, const DiscreteMeasure& m2) {
    ConvexOrderResult res;

    // (i) equal means + call-function dominance at all support points.
    bool calls_ok = true;
    ConvexOrderFailure call_failure = ConvexOrderFailure::none;
    std::string detail;
    const double mean_gap = m1.barycenter() - m2.barycenter();
    if (std::abs(mean_gap) > kTol) {
        calls_ok = false;
        call_failure = ConvexOrderFailure::mean_mismatch;
        std::ostringstream os;
        os << "mean mismatch: " << m1.barycenter() << " vs " << m2.barycenter();
        detail = os.str();
    } else {
        std::vector<double> ks = m1.support();
        ks.insert(ks.end(), m2.support().begin(), m2.support().end());
        std::sort(ks.begin(), ks.end());
        for (double k : ks) {
            if (m1.call_price(k) > m2.call_price(k) + kTol) {
                calls_ok = false;
                call_failure = ConvexOrderFailure::call_violation;
                std::ostringstream os;
                os << "call-function violation at k=" << k;
                detail = os.str();
                break;
            }
        }
    }

    // (ii) LP feasibility of a martingale coupling.
    bool lp_ok = true;
    std::shared_ptr<const Coupling> witness;
    try {
        witness = std::make_shared<const Coupling>(martingale_coupling(m1, m2));
    } catch (const std::runtime_error&) {
        lp_ok = false;
    }

    if (calls_ok != lp_ok)
        throw std::logic_error("convex_order_check: call-function test and Strassen LP "
                               "disagree (" + detail + ")");

    res.in_order = calls_ok;
    if (res.in_order) {
        res.witness = std::move(witness);
    } else {
        res.failure = calls_ok ? ConvexOrderFailure::lp_infeasible : call_failure;
        res.detail = detail;
    }
    return res;
}

}  // namespace wotfi
