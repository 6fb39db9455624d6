#pragma once

#include <vector>

namespace modfrag::lp {

/// minimize objective . x  s.t.  ub_rows x <= ub_rhs,  eq_rows x = eq_rhs,  x >= 0
struct LinearProgram {
  std::vector<double> objective;
  std::vector<std::vector<double>> ub_rows;
  std::vector<double> ub_rhs;
  std::vector<std::vector<double>> eq_rows;
  std::vector<double> eq_rhs;
};

enum class Status { kOptimal, kInfeasible, kUnbounded };

struct Result {
  Status status = Status::kInfeasible;
  double value = 0.0;
  std::vector<double> x;
};

/// Dense two-phase tableau simplex with Bland's rule. Meant for small
/// problems (tens of variables, hundreds of rows) used as a reference
/// solver.
Result solve(const LinearProgram& program);

}  // namespace modfrag::lp
