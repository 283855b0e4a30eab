#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

#include "init.hpp"
#include "signpat.hpp"

namespace relurec {

struct RecoveryConfig {
  double tau = 0.0;             // > 0 pins the post-activation threshold; 0 uses the default ladder
  Index ell = 0;                // 0 means min(n, 200 d k ceil(kappa)^2)
  double zero_tol_rel = 1e-8;   // zero_tol = zero_tol_rel * ||A_bar||_F / sqrt(m ell)
  double positive_rel = 1e-6;   // entries of a recovered row above this fraction of its max count as support
  std::vector<double> margins{1e-4, 1e-3, 1e-2, 0.05, 0.1, 0.2, 0.35, 0.5};
  std::optional<double> sigma_noise;
  InitTensorConfig init;
  int init_attempts = 4;        // fresh initializer draws tried until the exact finish reproduces A
  double accept_rel = 1e-6;     // ||A - U f(V X)||_F <= accept_rel * ||A||_F certifies a finish
};

struct SignResolution {
  std::vector<int> xi;
  std::vector<SignPattern> feasible_pattern;
  std::vector<double> a_plus, a_minus;  // noisy path diagnostics
};

inline Index default_ell(Index n, Index d, Index k, double kappa) {
  double c = std::ceil(std::max(1.0, kappa));
  double l = 200.0 * static_cast<double>(d * k) * c * c;
  return std::min<Index>(n, static_cast<Index>(l));
}

namespace detail {

inline Index pick_ell(const RecoveryConfig& cfg, Index n, Index d, Index k, const Matrix& rows) {
  if (cfg.ell > 0) return std::min(cfg.ell, n);
  double kap = 1.0;
  try {
    kap = cond_number(rows);
  } catch (const Error&) {
  }
  return default_ell(n, d, k, kap);
}

// Rank-k row basis Sigma_k V_k^T of A_bar: every row of A_bar is a combination of its rows.
inline Matrix rank_k_rows(const Matrix& abar, Index k) {
  auto s = svd(abar);
  Index r = std::min<Index>(k, s.singular_values.size());
  return s.singular_values.head(r).asDiagonal() * s.right.topRows(r);
}

// Solve (w R)_j = 0 for j in zeros with (w)_r = 1, first feasible r wins.
inline std::optional<RowVector> zero_system(const Matrix& r, const std::vector<Index>& zeros, double tol) {
  const Index k = r.rows();
  const double bound = tol;
  Matrix rz(k, static_cast<Index>(zeros.size()));
  for (std::size_t j = 0; j < zeros.size(); ++j) rz.col(static_cast<Index>(j)) = r.col(zeros[j]);
  for (Index p = 0; p < k; ++p) {
    RowVector w = RowVector::Zero(k);
    w(p) = 1.0;
    if (k == 1) {
      if (rz.norm() <= bound) return w;
      continue;
    }
    Matrix others(k - 1, rz.cols());
    for (Index i = 0, o = 0; i < k; ++i)
      if (i != p) others.row(o++) = rz.row(i);
    LinearSolve ls = solve_rows(others, -rz.row(p));
    if (ls.residual <= bound) {
      for (Index i = 0, o = 0; i < k; ++i)
        if (i != p) w(i) = ls.solution(0, o++);
      return w;
    }
  }
  return std::nullopt;
}

inline double median_positive(const RowVector& v) {
  std::vector<double> pos;
  for (Index j = 0; j < v.size(); ++j)
    if (v(j) > 0) pos.push_back(v(j));
  if (pos.empty()) return 0.0;
  std::nth_element(pos.begin(), pos.begin() + static_cast<long>(pos.size() / 2), pos.end());
  return pos[pos.size() / 2];
}

// Solve z X_P = phi^{-1}(row_P) on the confident support of a recovered row of f(V X_bar).
inline RowVector row_from_support(const RowVector& row_in, const Matrix& xbar, const Activation& f, double pos_rel) {
  RowVector row = row_in;
  if (row.sum() < 0) row = -row;
  double mx = row.maxCoeff();
  std::vector<Index> p;
  for (Index j = 0; j < row.size(); ++j)
    if (row(j) > pos_rel * mx) p.push_back(j);
  if (static_cast<Index>(p.size()) < xbar.rows()) throw Error(ErrorKind::NoSolution, "support smaller than d");
  Matrix xp(xbar.rows(), static_cast<Index>(p.size()));
  RowVector rp(static_cast<Index>(p.size()));
  for (std::size_t j = 0; j < p.size(); ++j) {
    xp.col(static_cast<Index>(j)) = xbar.col(p[j]);
    rp(static_cast<Index>(j)) = row(p[j]);
  }
  auto fit = [&](double scale, RowVector* z) {
    RowVector t = rp.unaryExpr([&](double y) { return f.inverse_positive(y / scale); });
    LinearSolve ls = solve_rows(xp, t);
    if (z) *z = ls.solution.row(0);
    return ls.residual / std::max(t.norm(), 1e-300);
  };
  RowVector z;
  if (f.multiplicative()) {
    fit(1.0, &z);
  } else {
    // unknown positive scale: 1-D search in log-space
    double lo = std::log(mx) - 25.0, hi = std::log(mx) + 25.0;
    double best = lo, bestv = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 200; ++i) {
      double s = lo + (hi - lo) * i / 200.0;
      double v = fit(std::exp(s), nullptr);
      if (v < bestv) {
        bestv = v;
        best = s;
      }
    }
    double a = best - (hi - lo) / 200.0, b = best + (hi - lo) / 200.0;
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    for (int i = 0; i < 200 && b - a > 1e-14; ++i) {
      double c1 = b - g * (b - a), c2 = a + g * (b - a);
      if (fit(std::exp(c1), nullptr) < fit(std::exp(c2), nullptr)) b = c2;
      else a = c1;
    }
    fit(std::exp(0.5 * (a + b)), &z);
  }
  double nz = z.norm();
  if (!(nz > 0)) throw Error(ErrorKind::NoSolution, "degenerate row solve");
  return z / nz;
}

inline std::vector<Index> zeros_for(const RowVector& pre, const RowVector& colnorm, double margin, double tau_abs,
                                    bool post_threshold) {
  std::vector<Index> z;
  for (Index j = 0; j < pre.size(); ++j) {
    if (post_threshold) {
      if (std::max(pre(j), 0.0) <= tau_abs) z.push_back(j);
    } else if (pre(j) < -margin * colnorm(j)) {
      z.push_back(j);
    }
  }
  return z;
}

}  // namespace detail

struct ExactSignOutput {
  Matrix v;
  SignResolution signs;
};

// Sign disambiguation and exact finish from rows within eps of xi_i V_i.
inline ExactSignOutput recover_signs_exact_full(const Matrix& a, const Matrix& x, const Matrix& rows,
                                                const RecoveryConfig& cfg, const Activation& f = Activation::relu()) {
  const Index k = rows.rows(), d = x.rows(), n = x.cols();
  if (rows.cols() != d || a.cols() != n) throw Error(ErrorKind::ShapeMismatch, "recover_signs_exact shapes");
  const Index ell = detail::pick_ell(cfg, n, d, k, rows);
  Matrix abar = a.leftCols(ell);
  Matrix xbar = x.leftCols(ell);
  Matrix r = detail::rank_k_rows(abar, k);
  const double zero_tol = cfg.zero_tol_rel * abar.norm() / std::sqrt(static_cast<double>(abar.rows() * ell));
  const double bound = zero_tol * std::sqrt(static_cast<double>(ell));
  RowVector colnorm = xbar.colwise().norm();
  // a basis spanning all of R^ell realises every pattern on both sides
  if (matrix_rank(r) >= ell) throw Error(ErrorKind::AmbiguousSign, "too few columns to separate the two signs");

  ExactSignOutput out;
  out.v.resize(k, d);
  for (Index i = 0; i < k; ++i) {
    RowVector pre = rows.row(i) * xbar;
    // rung 0 is the post-activation threshold; later rungs are margins on the pre-activation
    std::vector<double> rungs{-1.0};
    if (cfg.tau <= 0)
      for (double m : cfg.margins) rungs.push_back(m);
    std::optional<RowVector> chosen;
    int xi = 0;
    SignPattern pat;
    for (double rung : rungs) {
      std::optional<RowVector> sol[2];
      std::vector<Index> zs[2];
      for (int side = 0; side < 2; ++side) {
        RowVector p = (side == 0) ? RowVector(pre) : RowVector(-pre);
        double tau_abs = cfg.tau > 0 ? cfg.tau : 1e-6 * detail::median_positive(p);
        zs[side] = detail::zeros_for(p, colnorm, rung, tau_abs, rung < 0);
        sol[side] = detail::zero_system(r, zs[side], bound);
      }
      if (sol[0] && sol[1]) throw Error(ErrorKind::AmbiguousSign, "both signs admit a solution");
      if (!sol[0] && !sol[1]) continue;
      int side = sol[0] ? 0 : 1;
      xi = side == 0 ? 1 : -1;
      chosen = sol[side];
      std::vector<std::size_t> pos;
      std::vector<char> zero_mask(static_cast<std::size_t>(ell), 0);
      for (Index j : zs[side]) zero_mask[static_cast<std::size_t>(j)] = 1;
      for (Index j = 0; j < ell; ++j)
        if (!zero_mask[static_cast<std::size_t>(j)]) pos.push_back(static_cast<std::size_t>(j));
      pat = SignPattern{static_cast<std::size_t>(ell), pos};
      break;
    }
    if (!chosen) throw Error(ErrorKind::NoFeasibleSign, "neither sign admits a solution");
    RowVector row = (*chosen) * r;
    out.v.row(i) = detail::row_from_support(row, xbar, f, cfg.positive_rel);
    out.signs.xi.push_back(xi);
    out.signs.feasible_pattern.push_back(pat);
  }
  return out;
}

inline Matrix recover_signs_exact(const Matrix& a, const Matrix& x, const Matrix& rows, const RecoveryConfig& cfg,
                                  const Activation& f = Activation::relu()) {
  return recover_signs_exact_full(a, x, rows, cfg, f).v;
}

// For each support estimate S_j, the row x A_bar vanishing off S_j, flipped to be nonnegative.
inline Matrix recover_pattern_rows(const Matrix& abar, Index k, const std::vector<SignPattern>& patterns,
                                   const RecoveryConfig& cfg) {
  const Index ell = abar.cols();
  Matrix r = detail::rank_k_rows(abar, k);
  const double zero_tol = cfg.zero_tol_rel * abar.norm() / std::sqrt(static_cast<double>(abar.rows() * ell));
  const double bound = zero_tol * std::sqrt(static_cast<double>(ell));
  Matrix out(static_cast<Index>(patterns.size()), ell);
  for (std::size_t p = 0; p < patterns.size(); ++p) {
    if (patterns[p].length != static_cast<std::size_t>(ell))
      throw Error(ErrorKind::ShapeMismatch, "pattern length differs from column count");
    std::vector<Index> zeros;
    for (auto j : patterns[p].complement()) zeros.push_back(static_cast<Index>(j));
    auto w = detail::zero_system(r, zeros, bound);
    if (!w) throw Error(ErrorKind::NoSolution, "pattern " + patterns[p].str() + " is not realisable");
    RowVector row = (*w) * r;
    if (row.sum() < 0) row = -row;
    out.row(static_cast<Index>(p)) = row;
  }
  return out;
}

struct UFit {
  Matrix u;
  double residual = 0.0;
};

inline UFit solve_U(const Matrix& a, const Matrix& x, const Matrix& v, const Activation& f = Activation::relu()) {
  Matrix h = apply_activation(f, v * x);
  Eigen::SelfAdjointEigenSolver<Matrix> es(h * h.transpose());
  Vector ev = es.eigenvalues().cwiseMax(0.0);
  if (ev.size() == 0 || !(ev.minCoeff() > rank_tol * rank_tol * std::max(ev.maxCoeff(), 1e-300)) ||
      !(ev.maxCoeff() > 0))
    throw Error(ErrorKind::RankDeficientHidden, "f(V X) does not have full row rank");
  LinearSolve ls = solve_rows(h, a);
  return {ls.solution, ls.residual};
}

inline UFit regress_U(const Matrix& a, const Matrix& x, const Matrix& v, const Activation& f = Activation::relu()) {
  return solve_U(a, x, v, f);
}

// Exact finish from any initializer rows.
inline NetworkWeights finish_exact(const Matrix& a, const Matrix& x, const Matrix& rows, const RecoveryConfig& cfg,
                                   const Activation& f = Activation::relu()) {
  Matrix v = recover_signs_exact(a, x, rows, cfg, f);
  UFit u = solve_U(a, x, v, f);
  return {u.u, v};
}

// Later attempts redraw the initializer; the first finish whose output reproduces A is returned.
inline NetworkWeights recover_exact(const Matrix& a, const Matrix& x, Index k, const RecoveryConfig& cfg,
                                    SeedStream& stream, const Activation& f = Activation::relu()) {
  const int attempts = std::max(1, cfg.init_attempts);
  const double an = a.norm();
  std::optional<NetworkWeights> best;
  double best_res = std::numeric_limits<double>::infinity();
  std::optional<Error> last;
  for (int t = 0; t < attempts; ++t) {
    SeedStream s = t == 0 ? stream : stream.child(static_cast<std::uint64_t>(t));
    try {
      TensorInitReport init = init_tensor(a, x, k, f, cfg.init, s);
      NetworkWeights w = finish_exact(a, x, init.rows, cfg, f);
      double res = (a - w.u * apply_activation(f, w.v * x)).norm();
      if (res <= cfg.accept_rel * an) {
        stream = s;
        return w;
      }
      if (res < best_res) {
        best_res = res;
        best = std::move(w);
      }
    } catch (const Error& e) {
      last = e;
    }
  }
  stream.next_u64();
  if (best) return *best;
  throw *last;
}

// ---------------------------------------------------------------- ICA route

inline NetworkWeights recover_orthonormal(const Matrix& a, const Matrix& x, Index k, const RecoveryConfig& cfg,
                                          SeedStream& stream, const Activation& f = Activation::relu()) {
  IcaResult ica = init_ica(a, k, stream);
  Matrix mix = ica.mixing_estimate;
  Eigen::FullPivLU<Matrix> lu(mix);
  if (!lu.isInvertible()) mix += 1e-12 * Matrix::Identity(k, k);
  Matrix src = mix.inverse() * ica.sketch * a;  // ~ D^-1 Pi f(V X)
  const Index d = x.rows();
  // coarse rows from the confidently positive part of each source
  Matrix rows(k, d);
  for (Index j = 0; j < k; ++j) {
    RowVector s = src.row(j);
    double cut = 0.5 * detail::median_positive(s);
    std::vector<Index> p;
    for (Index q = 0; q < s.size(); ++q)
      if (s(q) > cut) p.push_back(q);
    if (static_cast<Index>(p.size()) < d) throw Error(ErrorKind::NoSolution, "ICA source has too small a support");
    Matrix xp(d, static_cast<Index>(p.size()));
    RowVector sp(static_cast<Index>(p.size()));
    for (std::size_t q = 0; q < p.size(); ++q) {
      xp.col(static_cast<Index>(q)) = x.col(p[q]);
      sp(static_cast<Index>(q)) = f.inverse_positive(s(p[q]));
    }
    RowVector z = solve_rows(xp, sp).solution.row(0);
    rows.row(j) = z / z.norm();
  }
  return finish_exact(a, x, rows, cfg, f);
}

// ---------------------------------------------------------------- noisy route

inline SignResolution recover_signs_noisy(const Matrix& a, const Matrix& x, const Matrix& rows,
                                          const RecoveryConfig& cfg, const Activation& f = Activation::relu()) {
  const Index k = rows.rows(), d = x.rows(), n = x.cols();
  const Index ell = detail::pick_ell(cfg, n, d, k, rows);
  Matrix abar = a.leftCols(ell);
  Matrix pre = rows * x.leftCols(ell);
  Matrix fp = apply_activation(f, pre), fm = apply_activation(f, -pre);
  SignResolution out;
  for (Index i = 0; i < k; ++i) {
    double acc[2] = {0.0, 0.0};
    for (int side = 0; side < 2; ++side) {
      Matrix span(2 * k - 1, ell);
      Index r = 0;
      for (Index j = 0; j < k; ++j) {
        if (j == i) continue;
        span.row(r++) = fp.row(j);
        span.row(r++) = fm.row(j);
      }
      span.row(r) = side == 0 ? fp.row(i) : fm.row(i);
      Matrix q = row_basis(span);
      for (Index j = 0; j < abar.rows(); ++j) acc[side] += complement_norm2(abar.row(j), q);
    }
    out.a_plus.push_back(acc[0]);
    out.a_minus.push_back(acc[1]);
    out.xi.push_back(acc[0] < acc[1] ? 1 : -1);
    out.feasible_pattern.push_back(sign_pattern(RowVector(out.xi.back() * pre.row(i)), 0.0));
  }
  return out;
}

inline NetworkWeights finish_noisy(const Matrix& a, const Matrix& x, const Matrix& rows, const RecoveryConfig& cfg,
                                   const Activation& f = Activation::relu(), SignResolution* signs = nullptr) {
  SignResolution s = recover_signs_noisy(a, x, rows, cfg, f);
  Matrix v = rows;
  for (Index i = 0; i < v.rows(); ++i) v.row(i) *= s.xi[static_cast<std::size_t>(i)];
  UFit u = regress_U(a, x, v, f);
  if (signs) *signs = s;
  return {u.u, v};
}

inline NetworkWeights recover_noisy(const Matrix& a, const Matrix& x, Index k, const RecoveryConfig& cfg,
                                    SeedStream& stream, const Activation& f = Activation::relu()) {
  TensorInitReport init = init_tensor(a, x, k, f, cfg.init, stream);
  return finish_noisy(a, x, init.rows, cfg, f);
}

// ---------------------------------------------------------------- arbitrary U (fixed-parameter route)

struct FptOptions {
  double tol_match = 1e-8;
  int ransac_trials = 400;
  int families = 3;
  double accept_rel = 1e-6;
};

namespace detail {

struct Cluster {
  std::vector<Index> members;
  Index rep = 0;
};

// Group nonzero columns that are positive multiples of each other.
inline std::vector<Cluster> positive_clusters(const Matrix& a, double tol, SeedStream& stream) {
  const Index m = a.rows(), n = a.cols();
  RowVector norms = a.colwise().norm();
  double top = norms.size() ? norms.maxCoeff() : 0.0;
  Vector g = random_unit(m, stream);
  std::vector<std::pair<double, Index>> keyed;
  for (Index q = 0; q < n; ++q)
    if (norms(q) > 1e-12 * top) keyed.push_back({g.dot(a.col(q)) / norms(q), q});
  std::sort(keyed.begin(), keyed.end());
  std::vector<Cluster> groups;
  for (std::size_t i = 0; i < keyed.size();) {
    Cluster c;
    Index lead = keyed[i].second;
    c.members.push_back(lead);
    std::size_t j = i + 1;
    while (j < keyed.size() && keyed[j].first - keyed[i].first <= 4.0 * tol) {
      Index q = keyed[j].second;
      double cs = a.col(q).dot(a.col(lead)) / (norms(q) * norms(lead));
      if (cs >= 1.0 - tol) c.members.push_back(q);
      ++j;
    }
    std::size_t next = i + 1;
    while (next < keyed.size() && keyed[next].first - keyed[i].first <= 4.0 * tol) ++next;
    if (c.members.size() >= 2) groups.push_back(c);
    i = next;
  }
  // merge groups split by projection ties
  std::vector<Cluster> merged;
  for (auto& c : groups) {
    bool done = false;
    for (auto& mcl : merged) {
      Index p = mcl.members.front(), q = c.members.front();
      if (a.col(p).dot(a.col(q)) / (norms(p) * norms(q)) >= 1.0 - tol) {
        mcl.members.insert(mcl.members.end(), c.members.begin(), c.members.end());
        done = true;
        break;
      }
    }
    if (!done) merged.push_back(c);
  }
  for (auto& c : merged) {
    std::sort(c.members.begin(), c.members.end());
    c.rep = c.members.front();
    for (Index q : c.members)
      if (norms(q) > norms(c.rep)) c.rep = q;
  }
  std::stable_sort(merged.begin(), merged.end(),
                   [](const Cluster& x, const Cluster& y) { return x.members.size() > y.members.size(); });
  return merged;
}

// Linear families w with w X_j = t_j exactly on a subset of the cluster, largest first.
inline std::vector<RowVector> consistent_families(const Matrix& x, const std::vector<Index>& idx, const RowVector& t,
                                                  const FptOptions& opt, SeedStream& stream) {
  const Index d = x.rows();
  const Index sz = static_cast<Index>(idx.size());
  Matrix xs(d, sz);
  for (Index j = 0; j < sz; ++j) xs.col(j) = x.col(idx[static_cast<std::size_t>(j)]);
  auto inliers_of = [&](const RowVector& w) {
    RowVector r = w * xs - t;
    std::vector<Index> in;
    for (Index j = 0; j < sz; ++j)
      if (std::abs(r(j)) <= 1e-8 * (1.0 + std::abs(t(j)))) in.push_back(j);
    return in;
  };
  auto refit = [&](const std::vector<Index>& in) {
    Matrix xi(d, static_cast<Index>(in.size()));
    RowVector ti(static_cast<Index>(in.size()));
    for (std::size_t j = 0; j < in.size(); ++j) {
      xi.col(static_cast<Index>(j)) = xs.col(in[j]);
      ti(static_cast<Index>(j)) = t(in[j]);
    }
    return RowVector(solve_rows(xi, ti).solution.row(0));
  };
  std::vector<RowVector> out;
  if (sz < d) return out;
  RowVector all = refit([&] {
    std::vector<Index> v(static_cast<std::size_t>(sz));
    std::iota(v.begin(), v.end(), Index{0});
    return v;
  }());
  if (static_cast<Index>(inliers_of(all).size()) == sz) return {all};

  std::vector<std::pair<std::size_t, RowVector>> found;
  for (int trial = 0; trial < opt.ransac_trials; ++trial) {
    std::vector<Index> pick;
    while (static_cast<Index>(pick.size()) < d) {
      Index c = static_cast<Index>(stream.uniform_index(static_cast<std::uint64_t>(sz)));
      if (std::find(pick.begin(), pick.end(), c) == pick.end()) pick.push_back(c);
    }
    Matrix xp(d, d);
    RowVector tp(d);
    for (Index j = 0; j < d; ++j) {
      xp.col(j) = xs.col(pick[static_cast<std::size_t>(j)]);
      tp(j) = t(pick[static_cast<std::size_t>(j)]);
    }
    Eigen::FullPivLU<Matrix> lu(xp.transpose());
    if (!lu.isInvertible()) continue;
    RowVector w = lu.solve(tp.transpose()).transpose();
    auto in = inliers_of(w);
    if (static_cast<Index>(in.size()) < d) continue;
    RowVector wf = refit(in);
    bool dup = false;
    for (auto& f : found)
      if ((f.second - wf).norm() <= 1e-6 * (1.0 + wf.norm())) dup = true;
    if (!dup) found.push_back({inliers_of(wf).size(), wf});
  }
  std::stable_sort(found.begin(), found.end(), [](auto& p, auto& q) { return p.first > q.first; });
  for (std::size_t i = 0; i < found.size() && static_cast<int>(i) < opt.families; ++i) out.push_back(found[i].second);
  return out;
}

}  // namespace detail

inline NetworkWeights fpt_exact_arbitrary_U(const Matrix& a, const Matrix& x, Index k, const Activation& f,
                                            SeedStream& stream, const FptOptions& opt = {}) {
  const Index d = x.rows();
  SeedStream cs = stream.child("cluster");
  SeedStream rs = stream.child("ransac");
  stream.next_u64();
  auto clusters = detail::positive_clusters(a, opt.tol_match, cs);
  if (static_cast<Index>(clusters.size()) < k) throw Error(ErrorKind::TooFewClusters, "fewer than k column clusters");
  clusters.resize(static_cast<std::size_t>(k));
  std::vector<std::vector<RowVector>> cands(static_cast<std::size_t>(k));
  for (Index i = 0; i < k; ++i) {
    const auto& c = clusters[static_cast<std::size_t>(i)];
    if (static_cast<Index>(c.members.size()) < d) throw Error(ErrorKind::TooFewClusters, "cluster smaller than d");
    Vector rep = a.col(c.rep);
    RowVector t(static_cast<Index>(c.members.size()));
    for (std::size_t j = 0; j < c.members.size(); ++j)
      t(static_cast<Index>(j)) = f.inverse_positive(a.col(c.members[j]).dot(rep) / rep.squaredNorm());
    cands[static_cast<std::size_t>(i)] = detail::consistent_families(x, c.members, t, opt, rs);
    if (cands[static_cast<std::size_t>(i)].empty())
      throw Error(ErrorKind::TooFewClusters, "no cluster subset of size d is consistent");
  }
  // try every combination of candidate families, keep the best functional fit
  std::vector<std::size_t> idx(static_cast<std::size_t>(k), 0);
  std::optional<NetworkWeights> best;
  double best_res = std::numeric_limits<double>::infinity();
  const double anorm = a.norm();
  while (true) {
    Matrix v(k, d);
    for (Index i = 0; i < k; ++i) v.row(i) = cands[static_cast<std::size_t>(i)][idx[static_cast<std::size_t>(i)]];
    v = normalize_rows(v);
    try {
      UFit u = solve_U(a, x, v, f);
      if (u.residual < best_res) {
        best_res = u.residual;
        best = NetworkWeights{u.u, v};
      }
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::RankDeficientHidden) throw;
    }
    if (best_res <= opt.accept_rel * anorm) break;
    Index p = 0;
    while (p < k && ++idx[static_cast<std::size_t>(p)] == cands[static_cast<std::size_t>(p)].size()) {
      idx[static_cast<std::size_t>(p)] = 0;
      ++p;
    }
    if (p == k) break;
  }
  if (!best) throw Error(ErrorKind::TooFewClusters, "no candidate combination has full-rank hidden layer");
  return *best;
}

}  // namespace relurec
