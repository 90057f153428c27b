#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "wotfi/couplings.hpp"
#include "wotfi/dual.hpp"
#include "wotfi/measures.hpp"
#include "wotfi/wot.hpp"

namespace wotfi {

// Violation of call-curve no-arbitrage (monotonicity/convexity); the
// message names the offending strikes.
class ArbitrageError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// A constructed hedge failed grid verification.
class CertificateError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct QuoteCurve {
    std::vector<double> strikes;
    std::vector<double> prices;
};

// Time-0 bond prices plus the two call-quote curves, money units.
struct MarketQuotes {
    double p0_T2 = 1.0;
    double p0_T3 = 1.0;
    QuoteCurve call_T1_on_T2;  // C(T1, T2, K)
    QuoteCurve call_T2_on_T3;  // C(T2, T3, K)

    // Checks positivity, strike ordering and call-curve convexity.
    void validate() const;

    // Rows: instrument,maturities,strike,price ("bond,T2,0,p" / "call,T1-T2,K,p").
    static MarketQuotes from_csv(const std::string& text);
    std::string to_csv() const;
};

struct ExtractionDiagnostics {
    double reprice_error = 0.0;   // worst quote repricing residual
    double boundary_mass = 0.0;   // mass assigned to the end strikes
    std::string note;
};

// Breeden-Litzenberger second differences of C(T2,T3,K)/p0_T2 on the
// uniform strike grid; boundary mass folded into the end strikes.
DiscreteMeasure extract_nu(const MarketQuotes& q, ExtractionDiagnostics* diag = nullptr);

// Marginal of X1 = 1/p(T1,T2) via the put transform
// C(T1,T2,K)/p0_T2 = E[(1 - K X1)^+] = K E[(1/K - X1)^+]: put prices on the
// k = 1/K grid, resampled to a uniform grid by chordal (monotone convex)
// interpolation, then differenced.
DiscreteMeasure extract_mu(const MarketQuotes& q, ExtractionDiagnostics* diag = nullptr);

// Payoff Phi(b2, b3) on money units at T1; either the caplet family
// (p(T1,T3) - K)^+ or bivariate samples on a grid.
struct PayoffSpec {
    enum class Kind { caplet, grid };
    Kind kind = Kind::caplet;
    double strike = 1.0;       // caplet K
    std::vector<double> b2_grid, b3_grid;
    Matrix phi_values;         // grid samples, b2 rows x b3 cols
    double growth_order = 1.0;

    static PayoffSpec caplet(double strike);
    static PayoffSpec grid(std::vector<double> b2, std::vector<double> b3, Matrix values);

    double phi(double b2, double b3) const;  // bilinear on the grid kind
    // T2-bond units: Phi_hat(x, y) = Phi(1/x, y/x) * x, x > 0.
    double phi_hat(double x, double y) const;
};

// Phi_hat sampled on the tensor grid (x rows, y cols).
Matrix transform_payoff(const PayoffSpec& p, const std::vector<double>& x_grid,
                        const std::vector<double>& y_grid);

struct BoundsConfig {
    double p0_T2 = 1.0;
    int m = 0;         // simplex resolution for general payoffs; 0 = automatic
    double tol = 1e-9; // hedge verification tolerance
};

struct BoundsReport {
    double discounted_lower = 0.0, discounted_upper = 0.0;  // T2-bond units
    double lower = 0.0, upper = 0.0;                        // money units
    // Caplet certificates are stated for the normalized payoff (y - x)^+
    // in coordinates (x, y/K); values scale back by K.
    bool caplet = true;
    double strike = 1.0;
    DualTriplet lower_cert, upper_cert;
    HedgeReport lower_hedge, upper_hedge;
    double duality_gap_lower = 0.0, duality_gap_upper = 0.0;
    std::optional<KernelDistribution> lower_model;  // Y1 = T(X1), martingale kernels
    std::optional<KernelDistribution> upper_model;  // Y1 = Y2, anticomonotone
    std::string notes;

    std::string to_json() const;
    std::string summary() const;
};

// Certified robust bounds. Caplets run the closed-form pipeline
// (monotone rearrangement / anticomonotone map -> S-map -> threshold ->
// triplet); general payoffs use the relaxed solver both ways with a
// concave/convex-psi dual LP, duality gap reported. Certificates that
// fail verification raise CertificateError.
BoundsReport price_bounds(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                          const PayoffSpec& p, const BoundsConfig& cfg = {});

struct ExtremalModelReport {
    KernelDistribution lower_model;
    KernelDistribution upper_model;
    std::string to_json() const;  // includes the bond-path table 1/x, y/x
};

ExtremalModelReport extremal_model_report(const DiscreteMeasure& mu,
                                          const DiscreteMeasure& nu,
                                          const BoundsReport& report);

}  // namespace wotfi
