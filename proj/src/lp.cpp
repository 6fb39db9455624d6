#include "modfrag/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace modfrag::lp {
namespace {

constexpr double kPivotTol = 1e-10;
constexpr double kCostTol = 1e-10;

class Tableau {
 public:
  // Rows: constraints with nonnegative rhs. Columns: structural, slack,
  // artificial, then rhs.
  Tableau(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), a_(rows * (cols + 1), 0.0), basis_(rows) {}

  double& at(std::size_t r, std::size_t c) { return a_[r * (cols_ + 1) + c]; }
  double at(std::size_t r, std::size_t c) const { return a_[r * (cols_ + 1) + c]; }
  double& rhs(std::size_t r) { return at(r, cols_); }
  double rhs(std::size_t r) const { return at(r, cols_); }
  std::size_t& basic(std::size_t r) { return basis_[r]; }
  std::size_t basic(std::size_t r) const { return basis_[r]; }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  void pivot(std::size_t pr, std::size_t pc) {
    const double p = at(pr, pc);
    for (std::size_t c = 0; c <= cols_; ++c) at(pr, c) /= p;
    for (std::size_t r = 0; r < rows_; ++r) {
      if (r == pr) continue;
      const double f = at(r, pc);
      if (f == 0.0) continue;
      for (std::size_t c = 0; c <= cols_; ++c) at(r, c) -= f * at(pr, c);
    }
    basis_[pr] = pc;
  }

  // Minimizes cost over columns where allowed[c] is true. Returns false if
  // unbounded.
  bool optimize(const std::vector<double>& cost, const std::vector<bool>& allowed) {
    const std::size_t max_iter = 100000;
    for (std::size_t iter = 0; iter < max_iter; ++iter) {
      std::size_t entering = cols_;
      for (std::size_t c = 0; c < cols_ && entering == cols_; ++c) {
        if (!allowed[c]) continue;
        double reduced = cost[c];
        for (std::size_t r = 0; r < rows_; ++r) reduced -= cost[basis_[r]] * at(r, c);
        if (reduced < -kCostTol) entering = c;
      }
      if (entering == cols_) return true;
      std::size_t leaving = rows_;
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t r = 0; r < rows_; ++r) {
        const double a = at(r, entering);
        if (a <= kPivotTol) continue;
        const double ratio = rhs(r) / a;
        if (leaving == rows_ || ratio < best - 1e-12) {
          best = ratio;
          leaving = r;
        } else if (ratio <= best + 1e-12 && basis_[r] < basis_[leaving]) {
          best = std::min(best, ratio);
          leaving = r;
        }
      }
      if (leaving == rows_) return false;
      pivot(leaving, entering);
    }
    throw std::runtime_error("lp::solve iteration limit reached");
  }

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> a_;
  std::vector<std::size_t> basis_;
};

}  // namespace

Result solve(const LinearProgram& program) {
  const std::size_t nx = program.objective.size();
  const std::size_t mu = program.ub_rows.size();
  const std::size_t me = program.eq_rows.size();
  const std::size_t m = mu + me;
  const std::size_t slack0 = nx;
  const std::size_t art0 = nx + mu;
  const std::size_t cols = nx + mu + m;

  Tableau t(m, cols);
  auto load_row = [&](std::size_t r, const std::vector<double>& row, double rhs, bool has_slack) {
    if (row.size() != nx) throw std::invalid_argument("lp row width mismatch");
    const double sign = rhs < 0.0 ? -1.0 : 1.0;
    for (std::size_t c = 0; c < nx; ++c) t.at(r, c) = sign * row[c];
    if (has_slack) t.at(r, slack0 + r) = sign;
    t.at(r, art0 + r) = 1.0;
    t.rhs(r) = sign * rhs;
    t.basic(r) = art0 + r;
  };
  for (std::size_t r = 0; r < mu; ++r) load_row(r, program.ub_rows[r], program.ub_rhs[r], true);
  for (std::size_t r = 0; r < me; ++r) load_row(mu + r, program.eq_rows[r], program.eq_rhs[r], false);

  // Phase I.
  std::vector<double> phase1(cols, 0.0);
  for (std::size_t r = 0; r < m; ++r) phase1[art0 + r] = 1.0;
  std::vector<bool> allowed(cols, true);
  t.optimize(phase1, allowed);
  double infeas = 0.0;
  for (std::size_t r = 0; r < m; ++r) {
    if (t.basic(r) >= art0) infeas += t.rhs(r);
  }
  double scale = 1.0;
  for (double v : program.ub_rhs) scale = std::max(scale, std::abs(v));
  for (double v : program.eq_rhs) scale = std::max(scale, std::abs(v));
  if (infeas > 1e-9 * scale) return {Status::kInfeasible, 0.0, {}};

  // Drive remaining zero-level artificials out of the basis where possible.
  for (std::size_t r = 0; r < m; ++r) {
    if (t.basic(r) < art0) continue;
    for (std::size_t c = 0; c < art0; ++c) {
      if (std::abs(t.at(r, c)) > kPivotTol) {
        t.pivot(r, c);
        break;
      }
    }
  }

  // Phase II.
  std::vector<double> phase2(cols, 0.0);
  for (std::size_t c = 0; c < nx; ++c) phase2[c] = program.objective[c];
  for (std::size_t c = art0; c < cols; ++c) allowed[c] = false;
  if (!t.optimize(phase2, allowed)) return {Status::kUnbounded, 0.0, {}};

  Result result;
  result.status = Status::kOptimal;
  result.x.assign(nx, 0.0);
  for (std::size_t r = 0; r < m; ++r) {
    if (t.basic(r) < nx) result.x[t.basic(r)] = t.rhs(r);
  }
  for (std::size_t c = 0; c < nx; ++c) result.value += program.objective[c] * result.x[c];
  return result;
}

}  // namespace modfrag::lp
