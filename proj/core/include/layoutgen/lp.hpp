#pragma once

#include <string>
#include <vector>

namespace layoutgen::lp {

enum class Relation { LE, EQ, GE };

struct Row {
  std::vector<double> coeffs;  // one per variable
  Relation rel = Relation::LE;
  double rhs = 0;
};

// min c^T v subject to the rows and per-variable bounds. Every variable must
// carry finite bounds (the layout formulation always bounds in [0, 64]).
struct LinearProgram {
  int n_vars = 0;
  std::vector<double> objective;
  std::vector<Row> rows;
  std::vector<double> lo, hi;

  void check() const;  // structural validation, throws RangeError
};

enum class Status { Optimal, Infeasible, Unbounded, Stalled };

struct Solution {
  Status status = Status::Infeasible;
  std::vector<double> values;
  double objective = 0;
  long iterations = 0;
  // One dual per input row (zero for rows that never bind); used by the
  // complementary-slackness spot check.
  std::vector<double> row_duals;
};

inline constexpr double kFeasTol = 1e-7;  // row/bound satisfaction
inline constexpr double kOptTol = 1e-9;   // reduced-cost optimality
inline constexpr long kMaxIterations = 1000000;

// Two-phase dense tableau simplex. Variables are shifted to their lower
// bounds and upper bounds become explicit rows. Largest-coefficient pricing
// with a Bland's-rule fallback after 2 * (rows + vars) iterations.
Solution solve(const LinearProgram& lp);

// Plain-text dump (objective line, row lines, bounds lines) for external
// cross-checking.
std::string dump(const LinearProgram& lp);

}  // namespace layoutgen::lp
