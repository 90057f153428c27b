#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace wotfi {

// Dense matrix, row major.
class Matrix {
  public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

  private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

enum class LpSense { minimize, maximize };

// min/max c'x  s.t.  A x = b,  x >= 0.
struct LinearProgram {
    std::vector<double> objective;
    Matrix constraint_matrix;
    std::vector<double> rhs;
    LpSense sense = LpSense::minimize;

    std::size_t num_vars() const { return objective.size(); }
    std::size_t num_rows() const { return rhs.size(); }

    // Fixed-format text dump (objective row, then A|b rows) for
    // cross-checking against external solvers.
    std::string dump() const;
};

enum class LpStatus { optimal, infeasible, unbounded };

struct LpSolution {
    LpStatus status = LpStatus::infeasible;
    std::vector<double> primal;
    std::vector<double> dual;  // one multiplier per equality row
    double value = 0.0;
    int iterations = 0;
};

struct LpConfig {
    double feasibility_tol = 1e-9;
    double optimality_tol = 1e-9;
    // Pivot count after which Bland's rule kicks in (anti-cycling).
    int degeneracy_limit = 2000;
    int max_iterations = 200000;
};

// Dense revised simplex (two-phase), Bland fallback under degeneracy.
// Throws std::invalid_argument on malformed input and std::runtime_error
// on a numerically singular basis.
LpSolution solve_lp(const LinearProgram& lp, const LpConfig& config = {});

struct TransportSolution {
    double value = 0.0;
    Matrix plan;
    int iterations = 0;
};

// Kantorovich LP over Pi(a, b) with the given cost matrix.
TransportSolution solve_transport(const std::vector<double>& a, const std::vector<double>& b,
                                  const Matrix& cost, LpSense sense = LpSense::minimize);

enum class Rel { le, ge, eq };

// Incremental builder accepting inequality rows; slacks are appended here
// so callers never deal with the equality canonical form directly.
// All structural variables are nonnegative.
class LpBuilder {
  public:
    explicit LpBuilder(std::size_t num_vars, LpSense sense = LpSense::minimize);

    void set_objective(std::size_t var, double coeff);
    // coeffs are (var index, coefficient) pairs.
    void add_row(const std::vector<std::pair<std::size_t, double>>& coeffs, Rel rel,
                 double rhs);

    // Solves and returns the solution with primal truncated to the
    // structural variables.
    LpSolution solve(const LpConfig& config = {}) const;

  private:
    std::size_t num_vars_;
    LpSense sense_;
    std::vector<double> objective_;
    struct Row {
        std::vector<std::pair<std::size_t, double>> coeffs;
        Rel rel;
        double rhs;
    };
    std::vector<Row> rows_;
};

}  // namespace wotfi
