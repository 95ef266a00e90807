#include "layoutgen/lp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "layoutgen/errors.hpp"

namespace layoutgen::lp {

void LinearProgram::check() const {
  if (n_vars <= 0) throw RangeError("lp has no variables");
  if (static_cast<int>(objective.size()) != n_vars ||
      static_cast<int>(lo.size()) != n_vars || static_cast<int>(hi.size()) != n_vars)
    throw RangeError("lp objective/bounds size mismatch");
  for (int i = 0; i < n_vars; ++i) {
    if (!std::isfinite(lo[i]) || !std::isfinite(hi[i]) || lo[i] > hi[i])
      throw RangeError("lp variable bounds must be finite with lo <= hi");
  }
  for (const Row& r : rows) {
    if (static_cast<int>(r.coeffs.size()) != n_vars)
      throw RangeError("lp row width mismatch");
    if (!std::isfinite(r.rhs)) throw RangeError("lp rhs must be finite");
  }
}

namespace {

constexpr double kPivotTol = 1e-9;

// Dense tableau over the shifted problem v' = v - lo. Column layout:
// [structural | slack/surplus | artificial]; rhs kept separately.
struct Tableau {
  int n;                              // structural vars
  int m;                              // rows (user rows + upper bounds)
  int n_total;                        // all columns
  int art_begin;                      // first artificial column
  std::vector<std::vector<double>> a; // m x n_total
  std::vector<double> b;              // m
  std::vector<int> basis;             // m, column basic in each row
  std::vector<double> cost1, cost2;   // phase-1 / phase-2 reduced-cost rows
  double z1 = 0, z2 = 0;              // negated objective values
  std::vector<int> user_row;          // m, index into lp.rows or -1 for bounds
  std::vector<int> row_init_col;      // m, initial identity column of the row
  std::vector<double> row_init_sign;  // +1 slack, -1 surplus, +1 artificial
  long iterations = 0;
  long bland_after = 0;

  void pivot(int prow, int pcol) {
    std::vector<double>& pr = a[prow];
    const double inv = 1.0 / pr[pcol];
    for (int j = 0; j < n_total; ++j) pr[j] *= inv;
    b[prow] *= inv;
    pr[pcol] = 1.0;
    for (int i = 0; i < m; ++i) {
      if (i == prow) continue;
      const double f = a[i][pcol];
      if (f == 0.0) continue;
      std::vector<double>& ri = a[i];
      for (int j = 0; j < n_total; ++j) ri[j] -= f * pr[j];
      ri[pcol] = 0.0;
      b[i] -= f * b[prow];
      if (std::abs(b[i]) < 1e-12) b[i] = 0.0;
    }
    auto update_cost = [&](std::vector<double>& c, double& z) {
      const double f = c[pcol];
      if (f == 0.0) return;
      for (int j = 0; j < n_total; ++j) c[j] -= f * pr[j];
      c[pcol] = 0.0;
      z -= f * b[prow];
    };
    update_cost(cost1, z1);
    update_cost(cost2, z2);
    basis[prow] = pcol;
    ++iterations;
  }

  // Entering column with the most negative reduced cost among allowed
  // columns; Bland's smallest-index rule once the iteration budget for
  // anti-cycling is reached.
  int choose_entering(const std::vector<double>& cost, int col_limit) const {
    const bool bland = iterations >= bland_after;
    int best = -1;
    double best_val = -kOptTol;
    for (int j = 0; j < col_limit; ++j) {
      if (cost[j] < best_val) {
        if (bland) return j;
        best_val = cost[j];
        best = j;
      }
    }
    return best;
  }

  // Leaving row by minimum ratio; ties broken by the smallest basis column.
  int choose_leaving(int pcol) const {
    int best = -1;
    double best_ratio = 0;
    for (int i = 0; i < m; ++i) {
      if (a[i][pcol] <= kPivotTol) continue;
      const double ratio = b[i] / a[i][pcol];
      if (best < 0 || ratio < best_ratio - 1e-12 ||
          (ratio < best_ratio + 1e-12 && basis[i] < basis[best])) {
        best = i;
        best_ratio = ratio;
      }
    }
    return best;
  }
};

}  // namespace

Solution solve(const LinearProgram& lp) {
  lp.check();
  const int n = lp.n_vars;
  const int n_user = static_cast<int>(lp.rows.size());

  // Shifted rows: user rows first, then v'_i <= hi_i - lo_i.
  struct NRow {
    std::vector<double> a;
    Relation rel;
    double rhs;
    int user;
  };
  std::vector<NRow> nrows;
  nrows.reserve(n_user + n);
  for (int r = 0; r < n_user; ++r) {
    NRow nr{lp.rows[r].coeffs, lp.rows[r].rel, lp.rows[r].rhs, r};
    for (int j = 0; j < n; ++j) nr.rhs -= nr.a[j] * lp.lo[j];
    nrows.push_back(std::move(nr));
  }
  for (int j = 0; j < n; ++j) {
    NRow nr{std::vector<double>(n, 0.0), Relation::LE, lp.hi[j] - lp.lo[j], -1};
    nr.a[j] = 1.0;
    nrows.push_back(std::move(nr));
  }
  // Normalize to rhs >= 0.
  for (NRow& nr : nrows) {
    if (nr.rhs < 0) {
      for (double& v : nr.a) v = -v;
      nr.rhs = -nr.rhs;
      if (nr.rel == Relation::LE) nr.rel = Relation::GE;
      else if (nr.rel == Relation::GE) nr.rel = Relation::LE;
    }
  }

  Tableau t;
  t.m = static_cast<int>(nrows.size());
  t.n = n;
  int n_slack = 0, n_art = 0;
  for (const NRow& nr : nrows) {
    if (nr.rel != Relation::EQ) ++n_slack;
    if (nr.rel != Relation::LE) ++n_art;
  }
  t.art_begin = n + n_slack;
  t.n_total = n + n_slack + n_art;
  t.a.assign(t.m, std::vector<double>(t.n_total, 0.0));
  t.b.resize(t.m);
  t.basis.resize(t.m);
  t.user_row.resize(t.m);
  t.row_init_col.resize(t.m);
  t.row_init_sign.resize(t.m);
  t.bland_after = 2L * (t.m + n);

  int slack_at = n, art_at = t.art_begin;
  for (int i = 0; i < t.m; ++i) {
    const NRow& nr = nrows[i];
    std::copy(nr.a.begin(), nr.a.end(), t.a[i].begin());
    t.b[i] = nr.rhs;
    t.user_row[i] = nr.user;
    switch (nr.rel) {
      case Relation::LE:
        t.a[i][slack_at] = 1.0;
        t.basis[i] = slack_at;
        t.row_init_col[i] = slack_at;
        t.row_init_sign[i] = 1.0;
        ++slack_at;
        break;
      case Relation::GE:
        t.a[i][slack_at] = -1.0;
        t.row_init_col[i] = slack_at;
        t.row_init_sign[i] = -1.0;
        ++slack_at;
        t.a[i][art_at] = 1.0;
        t.basis[i] = art_at;
        ++art_at;
        break;
      case Relation::EQ:
        t.a[i][art_at] = 1.0;
        t.basis[i] = art_at;
        t.row_init_col[i] = art_at;
        t.row_init_sign[i] = 1.0;
        ++art_at;
        break;
    }
  }

  // Phase-1 costs: sum of artificials, expressed in reduced form over the
  // starting basis. Phase-2 costs carried along from the start.
  t.cost1.assign(t.n_total, 0.0);
  t.cost2.assign(t.n_total, 0.0);
  for (int j = t.art_begin; j < t.n_total; ++j) t.cost1[j] = 1.0;
  for (int j = 0; j < n; ++j) t.cost2[j] = lp.objective[j];
  t.z1 = 0;
  t.z2 = 0;
  for (int i = 0; i < t.m; ++i) {
    if (t.basis[i] < t.art_begin) continue;
    for (int j = 0; j < t.n_total; ++j) t.cost1[j] -= t.a[i][j];
    t.z1 -= t.b[i];
  }

  Solution sol;
  sol.values.assign(n, 0.0);
  sol.row_duals.assign(n_user, 0.0);

  auto run_phase = [&](const std::vector<double>& /*unused*/, bool phase1) -> Status {
    std::vector<double>& cost = phase1 ? t.cost1 : t.cost2;
    const int col_limit = phase1 ? t.n_total : t.art_begin;
    while (true) {
      if (t.iterations >= kMaxIterations) return Status::Stalled;
      const int pcol = t.choose_entering(cost, col_limit);
      if (pcol < 0) return Status::Optimal;
      const int prow = t.choose_leaving(pcol);
      if (prow < 0) return phase1 ? Status::Infeasible : Status::Unbounded;
      t.pivot(prow, pcol);
    }
  };

  Status s1 = run_phase(t.cost1, true);
  sol.iterations = t.iterations;
  if (s1 == Status::Stalled) {
    sol.status = Status::Stalled;
    return sol;
  }
  if (-t.z1 > kFeasTol) {
    sol.status = Status::Infeasible;
    return sol;
  }
  // Drive remaining basic artificials out where a legal pivot exists;
  // all-zero rows are inert and stay put.
  for (int i = 0; i < t.m; ++i) {
    if (t.basis[i] < t.art_begin) continue;
    int pcol = -1;
    double best = kPivotTol;
    for (int j = 0; j < t.art_begin; ++j)
      if (std::abs(t.a[i][j]) > best) {
        best = std::abs(t.a[i][j]);
        pcol = j;
      }
    if (pcol >= 0) t.pivot(i, pcol);
  }

  Status s2 = run_phase(t.cost2, false);
  sol.iterations = t.iterations;
  if (s2 != Status::Optimal) {
    sol.status = s2;
    return sol;
  }

  std::vector<double> shifted(n, 0.0);
  for (int i = 0; i < t.m; ++i)
    if (t.basis[i] < n) shifted[t.basis[i]] = t.b[i];
  double obj = 0;
  for (int j = 0; j < n; ++j) {
    sol.values[j] = shifted[j] + lp.lo[j];
    obj += lp.objective[j] * sol.values[j];
  }
  sol.objective = obj;
  // Duals from the reduced costs of each row's initial identity column:
  // slack (+1): y = -cbar; surplus (-1): y = +cbar; artificial: y = -cbar.
  for (int i = 0; i < t.m; ++i) {
    if (t.user_row[i] < 0) continue;
    const double cbar = t.cost2[t.row_init_col[i]];
    sol.row_duals[t.user_row[i]] = -t.row_init_sign[i] * cbar;
  }
  sol.status = Status::Optimal;
  return sol;
}

std::string dump(const LinearProgram& lp) {
  std::ostringstream os;
  os.precision(17);
  os << "# layoutgen lp v1 (min objective)\n";
  os << "minimize:";
  for (int j = 0; j < lp.n_vars; ++j)
    if (lp.objective[j] != 0) os << " " << lp.objective[j] << "*x" << j;
  os << "\n";
  for (size_t r = 0; r < lp.rows.size(); ++r) {
    os << "row" << r << ":";
    const Row& row = lp.rows[r];
    for (int j = 0; j < lp.n_vars; ++j)
      if (row.coeffs[j] != 0) os << " " << row.coeffs[j] << "*x" << j;
    os << (row.rel == Relation::LE ? " <= " : row.rel == Relation::GE ? " >= " : " = ");
    os << row.rhs << "\n";
  }
  for (int j = 0; j < lp.n_vars; ++j)
    os << "bound x" << j << ": " << lp.lo[j] << " " << lp.hi[j] << "\n";
  return os.str();
}

}  // namespace layoutgen::lp
