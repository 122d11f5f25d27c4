#include "reflux/ipm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include "reflux/phi.hpp"

namespace reflux {

namespace {

// ---------------------------------------------------------------------------
// Staircase LP data.  Variables per cell k: [u1, u2, s, q1p', q1r', q2p',
// q2r'] (primes are node k+1 states); equality rows per cell: [cap, d1p, d1r,
// d2p, d2r].  Sparse columns have at most three entries.
// ---------------------------------------------------------------------------

struct Col {
  int n = 0;
  int row[3];
  double val[3];
  void push(int r, double v) {
    row[n] = r;
    val[n] = v;
    ++n;
  }
};

struct Staircase {
  int cells = 0;
  int nvar = 0;
  int nrow = 0;
  std::vector<Col> cols;
  std::vector<double> b, c;
  double c0 = 0.0;

  void matvec_A(const std::vector<double>& x, std::vector<double>& y) const {
    std::fill(y.begin(), y.end(), 0.0);
    for (int j = 0; j < nvar; ++j) {
      const double xj = x[j];
      if (xj == 0.0) continue;
      const Col& col = cols[j];
      for (int e = 0; e < col.n; ++e) y[col.row[e]] += col.val[e] * xj;
    }
  }
  void matvec_At(const std::vector<double>& y, std::vector<double>& x) const {
    for (int j = 0; j < nvar; ++j) {
      const Col& col = cols[j];
      double v = 0.0;
      for (int e = 0; e < col.n; ++e) v += col.val[e] * y[col.row[e]];
      x[j] = v;
    }
  }
};

Staircase build_staircase(const Params& p, const State& q0,
                          std::span<const double> nodes) {
  using namespace detail;
  const int n = static_cast<int>(nodes.size()) - 1;
  Staircase st;
  st.cells = n;
  st.nvar = 7 * n;
  st.nrow = 5 * n;
  st.cols.assign(st.nvar, Col{});
  st.b.assign(st.nrow, 0.0);
  st.c.assign(st.nvar, 0.0);

  const double g1 = p.gamma1, g2 = p.gamma2, mu = p.mu;

  auto Bcoef = [&](double g, double h) { return g * h * phi1(g * h); };  // 1 - e^{-gh}
  auto Gcoef = [&](double g, double h) { return g * h * h * phi2(g * h); };
  auto Cp = [&](double r, double g, double h) { return -mu * h + r * mu * Gcoef(g, h); };
  auto Cr = [&](double r, double g, double h) { return r * mu * h * phi1(g * h); };
  auto Wu = [&](double r, double g, double h) {
    return -0.5 * mu * h * h + r * mu * g * h * h * h * phi3(g * h);
  };

  for (int k = 0; k < n; ++k) {
    const double h = nodes[k + 1] - nodes[k];
    const int vb = 7 * k, rb = 5 * k;
    const int cap = rb, d1p = rb + 1, d1r = rb + 2, d2p = rb + 3, d2r = rb + 4;

    st.cols[vb + 0].push(cap, 1.0);
    st.cols[vb + 0].push(d1p, -Cp(p.r1, g1, h));
    st.cols[vb + 0].push(d1r, -Cr(p.r1, g1, h));
    st.cols[vb + 1].push(cap, 1.0);
    st.cols[vb + 1].push(d2p, -Cp(p.r2, g2, h));
    st.cols[vb + 1].push(d2r, -Cr(p.r2, g2, h));
    st.cols[vb + 2].push(cap, 1.0);

    st.cols[vb + 3].push(d1p, 1.0);
    st.cols[vb + 4].push(d1r, 1.0);
    st.cols[vb + 5].push(d2p, 1.0);
    st.cols[vb + 6].push(d2r, 1.0);
    if (k + 1 < n) {
      const double hn = nodes[k + 2] - nodes[k + 1];
      const int n1p = 5 * (k + 1) + 1, n1r = 5 * (k + 1) + 2;
      const int n2p = 5 * (k + 1) + 3, n2r = 5 * (k + 1) + 4;
      st.cols[vb + 3].push(n1p, -1.0);
      st.cols[vb + 4].push(n1p, -Bcoef(g1, hn));
      st.cols[vb + 4].push(n1r, -std::exp(-g1 * hn));
      st.cols[vb + 5].push(n2p, -1.0);
      st.cols[vb + 6].push(n2p, -Bcoef(g2, hn));
      st.cols[vb + 6].push(n2r, -std::exp(-g2 * hn));
      st.c[vb + 3] = hn;
      st.c[vb + 4] = Gcoef(g1, hn);
      st.c[vb + 5] = hn;
      st.c[vb + 6] = Gcoef(g2, hn);
    }

    st.c[vb + 0] = Wu(p.r1, g1, h);
    st.c[vb + 1] = Wu(p.r2, g2, h);

    st.b[cap] = 1.0;
    if (k == 0) {
      st.b[d1p] = q0.q1p + Bcoef(g1, h) * q0.q1r;
      st.b[d1r] = std::exp(-g1 * h) * q0.q1r;
      st.b[d2p] = q0.q2p + Bcoef(g2, h) * q0.q2r;
      st.b[d2r] = std::exp(-g2 * h) * q0.q2r;
    }
  }
  const double h0 = nodes[1] - nodes[0];
  st.c0 = h0 * (q0.q1p + q0.q2p) + Gcoef(g1, h0) * q0.q1r + Gcoef(g2, h0) * q0.q2r;
  return st;
}

// ---------------------------------------------------------------------------
// Augmented KKT system  [ -Theta^-1  A^T ; A  0 ]  in a banded symmetric
// layout.  Interleaved ordering per stage keeps the half bandwidth at 11:
//   [u1 u2 s | cap d1p d1r d2p d2r | q1p' q1r' q2p' q2r']  (12 per stage).
// Quasidefinite with the +/- regularization, so unpivoted LDL^T is stable.
// ---------------------------------------------------------------------------

constexpr int kBand = 11;

struct BandedSym {
  int m = 0;
  std::vector<double> a;  // row-major band: a[i][d] = K[i][i-d], d <= kBand

  void resize(int m_) {
    m = m_;
    a.assign(static_cast<std::size_t>(m) * (kBand + 1), 0.0);
  }
  double& at(int i, int d) { return a[static_cast<std::size_t>(i) * (kBand + 1) + d]; }
  double at(int i, int d) const {
    return a[static_cast<std::size_t>(i) * (kBand + 1) + d];
  }
  void clear() { std::fill(a.begin(), a.end(), 0.0); }

  void matvec(const std::vector<double>& x, std::vector<double>& y) const {
    std::fill(y.begin(), y.end(), 0.0);
    for (int i = 0; i < m; ++i) {
      y[i] += at(i, 0) * x[i];
      const int dmax = std::min(kBand, i);
      for (int d = 1; d <= dmax; ++d) {
        const double v = at(i, d);
        if (v == 0.0) continue;
        y[i] += v * x[i - d];
        y[i - d] += v * x[i];
      }
    }
  }
};

// Unpivoted banded LDL^T; returns false on a (near-)zero pivot.
bool ldlt_banded(const BandedSym& k, BandedSym& l, std::vector<double>& d) {
  const int m = k.m;
  l = k;
  d.assign(m, 0.0);
  for (int i = 0; i < m; ++i) {
    const int kmin = std::max(0, i - kBand);
    for (int j = kmin; j <= i; ++j) {
      double sum = l.at(i, i - j);
      for (int t = std::max(kmin, j - kBand); t < j; ++t)
        sum -= l.at(i, i - t) * d[t] * l.at(j, j - t);
      if (j < i)
        l.at(i, i - j) = sum / d[j];
      else {
        if (std::fabs(sum) < 1e-300) return false;
        d[i] = sum;
      }
    }
  }
  return true;
}

void ldlt_solve(const BandedSym& l, const std::vector<double>& d,
                std::vector<double>& x) {
  const int m = l.m;
  for (int i = 0; i < m; ++i) {
    double v = x[i];
    const int dmax = std::min(kBand, i);
    for (int t = 1; t <= dmax; ++t) v -= l.at(i, t) * x[i - t];
    x[i] = v;
  }
  for (int i = 0; i < m; ++i) x[i] /= d[i];
  for (int i = m - 1; i >= 0; --i) {
    double v = x[i];
    const int dmax = std::min(kBand, m - 1 - i);
    for (int t = 1; t <= dmax; ++t) v -= l.at(i + t, t) * x[i + t];
    x[i] = v;
  }
}

double inf_norm(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::fabs(x));
  return m;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double max_step(const std::vector<double>& v, const std::vector<double>& dv) {
  double a = 1.0;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (dv[i] < 0.0) a = std::min(a, -v[i] / dv[i]);
  return a;
}

}  // namespace

IpmResult solve_staircase_ipm(const Params& p, const State& q0,
                              std::span<const double> node_times,
                              const IpmOptions& opts) {
  if (node_times.size() < 2)
    throw std::invalid_argument("solve_staircase_ipm: need at least two nodes");
  const Staircase st = build_staircase(p, q0, node_times);
  const int N = st.nvar, M = st.nrow, n = st.cells;
  const int K = N + M;  // augmented dimension (12 per stage)

  // Interleaved positions.
  auto pos_var = [&](int j) {
    const int k = j / 7, a = j % 7;
    return 12 * k + (a < 3 ? a : 5 + a);  // u,s -> 0..2; states -> 8..11
  };
  auto pos_row = [&](int i) {
    const int k = i / 5, a = i % 5;
    return 12 * k + 3 + a;  // rows -> 3..7
  };

  BandedSym kkt, kkt0, lfac;
  kkt.resize(K);
  std::vector<double> dvec;

  // Static sparsity: A entries as (hi, lo) band coordinates.
  struct Entry {
    int hi, dlo;
    double val;
  };
  std::vector<Entry> a_entries;
  for (int j = 0; j < N; ++j)
    for (int e = 0; e < st.cols[j].n; ++e) {
      const int pv = pos_var(j), pr = pos_row(st.cols[j].row[e]);
      const int hi = std::max(pv, pr), lo = std::min(pv, pr);
      a_entries.push_back({hi, hi - lo, st.cols[j].val[e]});
    }

  std::vector<double> x(N, 1.0), z(N, 1.0), y(M, 0.0);
  std::vector<double> rp(M), rd(N), dx(N), dz(N), dy(M);
  std::vector<double> dx_a(N), dz_a(N);
  std::vector<double> rhs(K), sol(K), resid(K), tmpM(M), tmpN(N);

  const double bnorm = 1.0 + inf_norm(st.b);
  const double cnorm = 1.0 + inf_norm(st.c);

  double delta_d = 1e-12, delta_p = 1e-12;

  auto assemble_and_factor = [&]() {
    kkt.clear();
    for (int j = 0; j < N; ++j)
      kkt.at(pos_var(j), 0) = -std::clamp(z[j] / x[j], 1e-30, 1e30) - delta_d;
    for (int i = 0; i < M; ++i) kkt.at(pos_row(i), 0) = delta_p;
    for (const Entry& e : a_entries) kkt.at(e.hi, e.dlo) += e.val;
    kkt0 = kkt;
    // The unregularized matrix for refinement matvecs differs only on the
    // diagonal; subtract the shifts there.
    for (int j = 0; j < N; ++j) kkt0.at(pos_var(j), 0) += delta_d;
    for (int i = 0; i < M; ++i) kkt0.at(pos_row(i), 0) -= delta_p;
    for (int attempt = 0; attempt < 10; ++attempt) {
      if (ldlt_banded(kkt, lfac, dvec)) return;
      delta_d *= 100.0;
      delta_p *= 100.0;
      kkt.clear();
      for (int j = 0; j < N; ++j)
        kkt.at(pos_var(j), 0) = -std::clamp(z[j] / x[j], 1e-30, 1e30) - delta_d;
      for (int i = 0; i < M; ++i) kkt.at(pos_row(i), 0) = delta_p;
      for (const Entry& e : a_entries) kkt.at(e.hi, e.dlo) += e.val;
    }
    throw std::runtime_error("solve_staircase_ipm: KKT factorization failed");
  };

  // Solve the augmented system for (dx, dy) given rhs_x (var side) and rhs_y
  // (row side), with iterative refinement against the unregularized matrix.
  auto kkt_solve = [&](const std::vector<double>& rhs_x,
                       const std::vector<double>& rhs_y,
                       std::vector<double>& out_dx, std::vector<double>& out_dy) {
    for (int j = 0; j < N; ++j) rhs[pos_var(j)] = rhs_x[j];
    for (int i = 0; i < M; ++i) rhs[pos_row(i)] = rhs_y[i];
    sol = rhs;
    ldlt_solve(lfac, dvec, sol);
    for (int pass = 0; pass < 3; ++pass) {
      kkt0.matvec(sol, resid);
      double rn = 0.0;
      for (int t = 0; t < K; ++t) {
        resid[t] = rhs[t] - resid[t];
        rn = std::max(rn, std::fabs(resid[t]));
      }
      if (rn < 1e-16 * (bnorm + cnorm)) break;
      ldlt_solve(lfac, dvec, resid);
      for (int t = 0; t < K; ++t) sol[t] += resid[t];
    }
    for (int j = 0; j < N; ++j) out_dx[j] = sol[pos_var(j)];
    for (int i = 0; i < M; ++i) out_dy[i] = sol[pos_row(i)];
  };

  // Starting point: least-squares-ish projections through the same KKT
  // machinery (Theta = I), then Mehrotra's positivity shift.
  {
    assemble_and_factor();  // x = z = 1 gives Theta = 1
    std::vector<double> zero_n(N, 0.0);
    // [-I A^T; A 0][v; w] = [0; b] gives v = A^T (A A^T)^{-1} b, the
    // minimum-norm point with A v = b.
    kkt_solve(zero_n, st.b, dx, dy);
    x = dx;
    std::vector<double> zero_m(M, 0.0);
    kkt_solve(st.c, zero_m, dz, y);  // -dz + A^T y = c, A dz = 0
    for (int j = 0; j < N; ++j) z[j] = -dz[j];  // z = c - A^T y

    double dx0 = 0.0, dz0 = 0.0;
    for (int j = 0; j < N; ++j) dx0 = std::max(dx0, -1.5 * x[j]);
    for (int j = 0; j < N; ++j) dz0 = std::max(dz0, -1.5 * z[j]);
    double xz = 0.0, sx = 0.0, sz = 0.0;
    for (int j = 0; j < N; ++j) {
      xz += (x[j] + dx0) * (z[j] + dz0);
      sx += x[j] + dx0;
      sz += z[j] + dz0;
    }
    const double shift_x = dx0 + 0.5 * xz / std::max(sz, 1e-30);
    const double shift_z = dz0 + 0.5 * xz / std::max(sx, 1e-30);
    for (int j = 0; j < N; ++j) {
      x[j] = std::max(x[j] + shift_x, 1e-8);
      z[j] = std::max(z[j] + shift_z, 1e-8);
    }
  }

  IpmResult best;
  double best_err = std::numeric_limits<double>::infinity();
  auto record = [&](int iter) {
    const double obj = dot(st.c, x) + st.c0;
    const double gap = dot(x, z) / (1.0 + std::fabs(obj));
    const double pinf = inf_norm(rp) / bnorm;
    const double dinf = inf_norm(rd) / cnorm;
    const double err = std::max({gap, pinf, dinf});
    if (err < best_err) {
      best_err = err;
      best.objective = obj;
      best.duality_gap = gap;
      best.primal_infeasibility = pinf;
      best.dual_infeasibility = dinf;
      best.iterations = iter;
      best.u1.assign(n, 0.0);
      best.u2.assign(n, 0.0);
      for (int k = 0; k < n; ++k) {
        best.u1[k] = x[7 * k + 0];
        best.u2[k] = x[7 * k + 1];
      }
    }
    return err;
  };

  bool converged = false;
  int since_improved = 0;
  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    st.matvec_A(x, tmpM);
    for (int i = 0; i < M; ++i) rp[i] = st.b[i] - tmpM[i];
    st.matvec_At(y, tmpN);
    for (int j = 0; j < N; ++j) rd[j] = st.c[j] - tmpN[j] - z[j];

    const double err_before = best_err;
    record(iter);
    since_improved = best_err < err_before ? 0 : since_improved + 1;
    if (since_improved > 15) break;  // numerically saturated; keep the best
    const double obj = dot(st.c, x) + st.c0;
    const double gap = dot(x, z) / (1.0 + std::fabs(obj));
    if (gap <= opts.gap_tol && inf_norm(rp) / bnorm <= opts.feas_tol &&
        inf_norm(rd) / cnorm <= opts.feas_tol) {
      converged = true;
      record(iter);
      break;
    }

    const double mu_c = dot(x, z) / N;
    assemble_and_factor();

    // Affine predictor: rc = -x.z, rhs_x = rd - rc/x = rd + z.
    for (int j = 0; j < N; ++j) tmpN[j] = rd[j] + z[j];
    kkt_solve(tmpN, rp, dx_a, dy);
    for (int j = 0; j < N; ++j)
      dz_a[j] = -(z[j] / x[j]) * dx_a[j] - z[j];  // (rc - Z dx)/x

    const double ap_a = max_step(x, dx_a);
    const double ad_a = max_step(z, dz_a);
    double mu_aff = 0.0;
    for (int j = 0; j < N; ++j)
      mu_aff += (x[j] + ap_a * dx_a[j]) * (z[j] + ad_a * dz_a[j]);
    mu_aff /= N;
    double sigma = std::pow(std::clamp(mu_aff / mu_c, 0.0, 1.0), 3);
    sigma = std::clamp(sigma, 1e-9, 1.0);

    // Corrector: rc = sigma mu e - x.z - dx_a.dz_a.
    for (int j = 0; j < N; ++j) {
      const double rc = sigma * mu_c - x[j] * z[j] - dx_a[j] * dz_a[j];
      tmpN[j] = rd[j] - rc / x[j];
    }
    kkt_solve(tmpN, rp, dx, dy);
    for (int j = 0; j < N; ++j) {
      const double rc = sigma * mu_c - x[j] * z[j] - dx_a[j] * dz_a[j];
      dz[j] = rc / x[j] - (z[j] / x[j]) * dx[j];
    }

    const double step_scale = 0.9995;
    const double ap = std::min(1.0, step_scale * max_step(x, dx));
    const double ad = std::min(1.0, step_scale * max_step(z, dz));
#ifdef REFLUX_IPM_TRACE
    std::fprintf(stderr, "it %3d gap %.2e pinf %.2e dinf %.2e ap %.4f ad %.4f sigma %.1e\n",
                 iter, gap, inf_norm(rp) / bnorm, inf_norm(rd) / cnorm, ap, ad, sigma);
#endif
    for (int j = 0; j < N; ++j) x[j] = std::max(x[j] + ap * dx[j], 1e-300);
    for (int i = 0; i < M; ++i) y[i] += ad * dy[i];
    for (int j = 0; j < N; ++j) z[j] = std::max(z[j] + ad * dz[j], 1e-300);
  }

  if (!converged) {
    st.matvec_A(x, tmpM);
    for (int i = 0; i < M; ++i) rp[i] = st.b[i] - tmpM[i];
    st.matvec_At(y, tmpN);
    for (int j = 0; j < N; ++j) rd[j] = st.c[j] - tmpN[j] - z[j];
    record(opts.max_iterations);
    if (opts.require_convergence && best_err > 1e-7)
      throw std::runtime_error(
          "solve_staircase_ipm: no convergence (best error " +
          std::to_string(best_err) + "); transcription may be inconsistent");
    best.status = IpmResult::Status::loose;
    return best;
  }
  best.status = IpmResult::Status::converged;
  return best;
}

}  // namespace reflux
