#include "reflux/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "reflux/kernel.hpp"
#include "reflux/phi.hpp"

namespace reflux {

LpInstance::LpInstance(const Params& p, const State& q0,
                       std::vector<double> node_times)
    : params_(p), q0_(q0), node_times_(std::move(node_times)) {
  if (node_times_.size() < 2)
    throw std::invalid_argument("LpInstance: need at least two grid nodes");
  if (node_times_.front() != 0.0)
    throw std::invalid_argument("LpInstance: grid must start at t = 0");
  for (std::size_t i = 1; i < node_times_.size(); ++i)
    if (!(node_times_[i] > node_times_[i - 1]))
      throw std::invalid_argument("LpInstance: node times must increase");
}

double LpInstance::weight(JobClass cls, int cell) const {
  const double T = horizon();
  return kernel_K_antiderivative(params_, cls, T - node_times_[cell]) -
         kernel_K_antiderivative(params_, cls, T - node_times_[cell + 1]);
}

double LpInstance::objective_constant() const {
  const double T = horizon();
  double c0 = 0.0;
  for (JobClass cls : {JobClass::class1, JobClass::class2}) {
    const double g = params_.gamma(cls);
    c0 += q0_.primary(cls) * T +
          q0_.orbit(cls) * g * T * T * detail::phi2(g * T);
  }
  return c0;
}

double LpInstance::objective_value(std::span<const Allocation> u) const {
  if (static_cast<int>(u.size()) != num_cells())
    throw std::invalid_argument("objective_value: control count mismatch");
  double obj = objective_constant();
  for (int m = 0; m < num_cells(); ++m) {
    obj += weight(JobClass::class1, m) * u[m].u1;
    obj += weight(JobClass::class2, m) * u[m].u2;
  }
  return obj;
}

double LpInstance::state_coeff(JobClass cls, int node, int cell) const {
  if (cell >= node) return 0.0;
  const double tk = node_times_[node];
  return kernel_K(params_, cls, tk - node_times_[cell]) -
         kernel_K(params_, cls, tk - node_times_[cell + 1]);
}

double LpInstance::state_rhs(JobClass cls, int node) const {
  const double tk = node_times_[node];
  const double g = params_.gamma(cls);
  return q0_.primary(cls) + q0_.orbit(cls) * g * tk * detail::phi1(g * tk);
}

double LpInstance::primary_at_node(JobClass cls, int node,
                                   std::span<const Allocation> u) const {
  double q = state_rhs(cls, node);
  for (int m = 0; m < node; ++m) q += state_coeff(cls, node, m) * u[m].u(cls);
  return q;
}

double LpInstance::max_violation(std::span<const Allocation> u) const {
  double v = 0.0;
  for (int m = 0; m < num_cells(); ++m) {
    v = std::max(v, -u[m].u1);
    v = std::max(v, -u[m].u2);
    v = std::max(v, u[m].u1 + u[m].u2 - 1.0);
  }
  for (JobClass cls : {JobClass::class1, JobClass::class2})
    for (int k = 0; k <= num_cells(); ++k)
      v = std::max(v, -primary_at_node(cls, k, u));
  return v;
}

DenseLp LpInstance::materialize(int max_cells) const {
  const int n = num_cells();
  if (n > max_cells)
    throw std::invalid_argument("LpInstance::materialize: grid too large for dense form");
  DenseLp lp;
  const int nv = num_vars();
  lp.c.resize(nv);
  lp.ub.assign(nv, 1.0);
  for (int m = 0; m < n; ++m) {
    lp.c[m] = weight(JobClass::class1, m);
    lp.c[n + m] = weight(JobClass::class2, m);
  }
  lp.c0 = objective_constant();

  lp.A.reserve(num_rows());
  lp.b.reserve(num_rows());
  for (int k = 0; k < n; ++k) {  // joint capacity
    std::vector<double> row(nv, 0.0);
    row[k] = 1.0;
    row[n + k] = 1.0;
    lp.A.push_back(std::move(row));
    lp.b.push_back(1.0);
  }
  for (JobClass cls : {JobClass::class1, JobClass::class2}) {  // state nonneg
    const int off = cls == JobClass::class1 ? 0 : n;
    for (int k = 0; k <= n; ++k) {
      std::vector<double> row(nv, 0.0);
      for (int m = 0; m < k; ++m) row[off + m] = -state_coeff(cls, k, m);
      lp.A.push_back(std::move(row));
      lp.b.push_back(state_rhs(cls, k));
    }
  }
  return lp;
}

LpInstance transcribe_lp(const Params& p, const State& q0,
                         std::span<const double> node_times) {
  return LpInstance(p, q0, std::vector<double>(node_times.begin(), node_times.end()));
}

// ---------------------------------------------------------------------------
// Bounded-variable primal simplex with an explicit dense basis inverse.
// Variables: structurals with bounds [0, ub], slacks with bounds [0, inf).
// The all-slack basis is primal feasible because b >= 0.
// ---------------------------------------------------------------------------

namespace {

constexpr double kPivotTol = 1e-10;
constexpr double kReducedTol = 1e-9;
constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

SimplexResult solve_bounded_simplex(const DenseLp& lp, int max_iterations) {
  const int m = static_cast<int>(lp.A.size());
  const int ns = static_cast<int>(lp.c.size());
  const int n = ns + m;  // structurals + slacks
  if (max_iterations <= 0) max_iterations = 200 * (m + ns) + 2000;
  for (double bi : lp.b)
    if (bi < 0.0)
      throw std::invalid_argument("solve_bounded_simplex: requires b >= 0");

  auto col_entry = [&](int row, int j) -> double {
    return j < ns ? lp.A[row][j] : (j - ns == row ? 1.0 : 0.0);
  };
  auto cost_of = [&](int j) { return j < ns ? lp.c[j] : 0.0; };
  auto upper_of = [&](int j) { return j < ns ? lp.ub[j] : kInf; };

  // Basis bookkeeping: basic[i] = variable in row i; at_upper for nonbasics.
  std::vector<int> basic(m);
  std::vector<bool> in_basis(n, false), at_upper(n, false);
  for (int i = 0; i < m; ++i) {
    basic[i] = ns + i;
    in_basis[ns + i] = true;
  }
  // Explicit inverse of the basis matrix (starts as identity on the slacks).
  std::vector<std::vector<double>> binv(m, std::vector<double>(m, 0.0));
  for (int i = 0; i < m; ++i) binv[i][i] = 1.0;

  std::vector<double> xb(lp.b);  // basic values (nonbasics at lower initially)

  // Rebuild binv from the basis by Gauss-Jordan with partial pivoting; the
  // product-form updates drift over long pivot sequences.
  auto refactorize = [&]() {
    std::vector<std::vector<double>> mat(m, std::vector<double>(2 * m, 0.0));
    for (int i = 0; i < m; ++i) {
      for (int k = 0; k < m; ++k) mat[i][k] = col_entry(i, basic[k]);
      mat[i][m + i] = 1.0;
    }
    for (int c = 0; c < m; ++c) {
      int piv = c;
      for (int i = c + 1; i < m; ++i)
        if (std::fabs(mat[i][c]) > std::fabs(mat[piv][c])) piv = i;
      if (std::fabs(mat[piv][c]) < 1e-300)
        throw std::runtime_error("solve_bounded_simplex: singular basis");
      std::swap(mat[c], mat[piv]);
      const double inv = 1.0 / mat[c][c];
      for (int k = c; k < 2 * m; ++k) mat[c][k] *= inv;
      for (int i = 0; i < m; ++i) {
        if (i == c) continue;
        const double f = mat[i][c];
        if (f == 0.0) continue;
        for (int k = c; k < 2 * m; ++k) mat[i][k] -= f * mat[c][k];
      }
    }
    for (int i = 0; i < m; ++i)
      for (int k = 0; k < m; ++k) binv[i][k] = mat[i][m + k];
  };

  auto recompute_xb = [&]() {
    // xb = B^-1 (b - N x_N) with nonbasics at their active bounds.
    std::vector<double> rhs(lp.b);
    for (int j = 0; j < ns; ++j) {
      if (in_basis[j] || !at_upper[j]) continue;
      for (int i = 0; i < m; ++i) rhs[i] -= lp.A[i][j] * lp.ub[j];
    }
    for (int i = 0; i < m; ++i) {
      double v = 0.0;
      for (int k = 0; k < m; ++k) v += binv[i][k] * rhs[k];
      xb[i] = v;
    }
  };

  SimplexResult res;
  res.status = SimplexResult::Status::iteration_limit;
  int stall = 0;
  int pivots_since_refactor = 0;
  bool bland = false;

  for (int iter = 0; iter < max_iterations; ++iter) {
    if (pivots_since_refactor >= 25) {
      refactorize();
      recompute_xb();
      pivots_since_refactor = 0;
    }
    // Simplex multipliers y = c_B B^-1.
    std::vector<double> y(m, 0.0);
    for (int i = 0; i < m; ++i) {
      const double cb = cost_of(basic[i]);
      if (cb == 0.0) continue;
      for (int k = 0; k < m; ++k) y[k] += cb * binv[i][k];
    }

    // Pricing: most-violated reduced cost (Dantzig), lowest index under Bland.
    int q = -1;
    bool enter_increase = true;
    double best_score = kReducedTol;
    for (int j = 0; j < n; ++j) {
      if (in_basis[j]) continue;
      double dj = cost_of(j);
      for (int i = 0; i < m; ++i) dj -= y[i] * col_entry(i, j);
      const bool can_inc = !at_upper[j] && dj < -kReducedTol;
      const bool can_dec = at_upper[j] && dj > kReducedTol;
      if (!can_inc && !can_dec) continue;
      if (bland) {
        q = j;
        enter_increase = can_inc;
        break;
      }
      if (std::fabs(dj) > best_score) {
        best_score = std::fabs(dj);
        q = j;
        enter_increase = can_inc;
      }
    }
    if (q < 0) {  // optimal; verify against a fresh factorization first
      if (pivots_since_refactor > 0) {
        refactorize();
        recompute_xb();
        pivots_since_refactor = 0;
        double worst = 0.0;
        for (int i = 0; i < m; ++i) worst = std::min(worst, xb[i]);
        if (worst < -1e-9) continue;  // drift uncovered; keep iterating
      }
      res.status = SimplexResult::Status::optimal;
      res.iterations = iter;
      break;
    }

    // Direction of the basics as x_q moves by +delta (or -delta from upper).
    std::vector<double> w(m, 0.0);
    for (int i = 0; i < m; ++i) {
      double v = 0.0;
      for (int k = 0; k < m; ++k) v += binv[i][k] * col_entry(k, q);
      w[i] = v;
    }
    const double dir = enter_increase ? 1.0 : -1.0;

    // Ratio test: a basic variable leaving at either bound, or the entering
    // variable flipping straight to its other bound.
    double limit = upper_of(q);
    int leave = -1;
    bool leave_at_upper = false;
    for (int i = 0; i < m; ++i) {
      const double wi = dir * w[i];
      double ratio = kInf;
      bool to_upper = false;
      if (wi > kPivotTol) {  // basic decreases toward 0
        ratio = std::max(xb[i], 0.0) / wi;
      } else if (wi < -kPivotTol && upper_of(basic[i]) < kInf) {
        ratio = (upper_of(basic[i]) - xb[i]) / (-wi);
        to_upper = true;
      }
      if (ratio < limit) {
        limit = ratio;
        leave = i;
        leave_at_upper = to_upper;
      }
    }
    if (limit == kInf)
      throw std::runtime_error("solve_bounded_simplex: unbounded LP (transcription bug)");

    stall = limit <= 1e-13 ? stall + 1 : 0;
    bland = stall > m + 10;  // anti-cycling fallback

    if (leave < 0) {
      // Bound flip: basis unchanged.
      at_upper[q] = enter_increase;
      recompute_xb();
      continue;
    }

    // Pivot: q enters the basis in row `leave`.
    const int p_out = basic[leave];
    const double piv = w[leave];
    for (int k = 0; k < m; ++k) binv[leave][k] /= piv;
    for (int i = 0; i < m; ++i) {
      if (i == leave) continue;
      const double f = w[i];
      if (f == 0.0) continue;
      for (int k = 0; k < m; ++k) binv[i][k] -= f * binv[leave][k];
    }
    in_basis[p_out] = false;
    at_upper[p_out] = leave_at_upper;
    in_basis[q] = true;
    basic[leave] = q;
    at_upper[q] = false;
    ++pivots_since_refactor;
    recompute_xb();
  }

  res.x.assign(ns, 0.0);
  for (int j = 0; j < ns; ++j)
    if (!in_basis[j] && at_upper[j]) res.x[j] = lp.ub[j];
  for (int i = 0; i < m; ++i)
    if (basic[i] < ns) res.x[basic[i]] = std::max(xb[i], 0.0);
  res.objective = lp.c0;
  for (int j = 0; j < ns; ++j) res.objective += lp.c[j] * res.x[j];
  return res;
}

}  // namespace reflux
