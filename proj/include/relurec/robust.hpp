#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "recover.hpp"

namespace relurec {

struct SketchConfig {
  Index sketch_rows = 0;  // 0 means max(k + 1, 8)
  SeedStream stream{0};
  double variance = 0.0;  // entry variance of S; 0 means 1 / sketch_rows
};

inline Index effective_sketch_rows(const SketchConfig& cfg, Index k) {
  return cfg.sketch_rows > 0 ? cfg.sketch_rows : std::max<Index>(k + 1, 8);
}

struct SketchedOutput {
  Matrix s;   // sketch_rows x m
  Matrix sa;  // sketch_rows x n
};

inline SketchedOutput sketch_output(const Matrix& a, const SketchConfig& cfg, Index k) {
  Index r = effective_sketch_rows(cfg, k);
  if (r < k + 1) throw Error(ErrorKind::InvalidShape, "sketch_rows must be at least k + 1");
  double var = cfg.variance > 0 ? cfg.variance : 1.0 / static_cast<double>(r);
  SeedStream st = cfg.stream.child("sketch");
  SketchedOutput out;
  out.s = gaussian_matrix(r, a.rows(), 0.0, std::sqrt(var), st);
  out.sa = out.s * a;
  return out;
}

struct GuessGrid {
  double sigma_min_guess = 1.0;
  double kappa_guess = 1.0;
  double eps = 0.25;
  double grid_base = 2.0;
  Index max_exponent = 1;
  bool signs = false;
  std::optional<Matrix> oracle_m;
  std::vector<double> g_norm_guesses;  // empty: 0 plus 8 powers of two around the largest column norm of SA
};

inline constexpr double guess_budget = 1e7;

// Lazily walks every k x r matrix with entries +/- sigma^-1 base^-i, i in [0, max_exponent].
class GuessEnumerator {
 public:
  GuessEnumerator(const GuessGrid& g, Index k, Index rows) : g_(g), k_(k), rows_(rows) {
    if (!(g.grid_base > 1.0)) throw Error(ErrorKind::InvalidShape, "grid_base must exceed 1");
    if (g.oracle_m) {
      if (g.oracle_m->rows() != k || g.oracle_m->cols() != rows)
        throw Error(ErrorKind::ShapeMismatch, "oracle_m has the wrong shape");
      total_ = 1.0;
      return;
    }
    if (!(g.eps <= 0.25)) throw Error(ErrorKind::InvalidShape, "eps must be at most 1/4");
    radix_ = static_cast<std::size_t>(g.max_exponent + 1) * (g.signs ? 2u : 1u);
    total_ = std::pow(static_cast<double>(radix_), static_cast<double>(k * rows));
    if (total_ > guess_budget) throw Error(ErrorKind::BudgetExceeded, "guess grid exceeds its budget");
    digits_.assign(static_cast<std::size_t>(k * rows), 0);
  }

  double size() const { return total_; }

  bool next(Matrix& out) {
    if (done_) return false;
    if (g_.oracle_m) {
      out = *g_.oracle_m;
      done_ = true;
      return true;
    }
    out.resize(k_, rows_);
    for (Index i = 0; i < k_ * rows_; ++i) {
      std::size_t dgt = digits_[static_cast<std::size_t>(i)];
      std::size_t e = g_.signs ? dgt / 2 : dgt;
      double sgn = (g_.signs && dgt % 2) ? -1.0 : 1.0;
      out(i / rows_, i % rows_) = sgn / g_.sigma_min_guess * std::pow(g_.grid_base, -static_cast<double>(e));
    }
    std::size_t p = 0;
    while (p < digits_.size() && ++digits_[p] == radix_) digits_[p++] = 0;
    if (p == digits_.size()) done_ = true;
    return true;
  }

 private:
  GuessGrid g_;
  Index k_, rows_;
  std::size_t radix_ = 1;
  double total_ = 0.0;
  std::vector<std::size_t> digits_;
  bool done_ = false;
};

inline std::vector<Matrix> enumerate_inverse_guesses(const GuessGrid& g, Index k, Index sketch_rows) {
  GuessEnumerator en(g, k, sketch_rows);
  std::vector<Matrix> out;
  Matrix m;
  while (en.next(m)) out.push_back(m);
  return out;
}

struct HalfspaceProblem {
  Matrix x;       // d x n
  RowVector y;    // +/-1
  double omega = 1.0;
  double eta = 0.0;
};

// argmax over the unit ball of sum_q y_q <w, X_q>.
inline Vector learn_halfspace(const HalfspaceProblem& p) {
  if (p.x.cols() < 1) throw Error(ErrorKind::InvalidShape, "need at least one example");
  if (p.y.size() != p.x.cols()) throw Error(ErrorKind::ShapeMismatch, "label count differs from example count");
  for (Index q = 0; q < p.y.size(); ++q)
    if (std::abs(p.y(q)) != 1.0) throw Error(ErrorKind::InvalidShape, "labels must be +/-1");
  Vector s = p.x * p.y.transpose();
  double ns = s.norm();
  if (!(ns > 0)) throw Error(ErrorKind::DegenerateSum, "label-weighted sum is zero");
  return s / ns;
}

inline RowVector sign_labels(const RowVector& v) {
  return v.unaryExpr([](double t) { return t > 0 ? 1.0 : -1.0; });
}

inline Matrix smooth_labels(const Matrix& m_sa, double g_norm_guess, double eps, double kappa, Index k,
                            SeedStream& stream) {
  const double n = static_cast<double>(m_sa.cols());
  double sd = kappa * kappa * static_cast<double>(k) * g_norm_guess / (eps * eps * std::sqrt(n));
  if (sd == 0.0) return m_sa;
  return m_sa + gaussian_matrix(m_sa.rows(), m_sa.cols(), 0.0, sd, stream);
}

struct NoisyFptReport {
  NetworkWeights weights;
  double residual = std::numeric_limits<double>::infinity();
  std::size_t guesses = 0;
  std::size_t best_guess = 0;
  double worst_residual = 0.0;
};

inline NoisyFptReport fpt_noisy_recover_report(const Matrix& a, const Matrix& x, Index k, const GuessGrid& g,
                                               const SketchConfig& cfg, const Activation& f = Activation::relu()) {
  if (a.cols() != x.cols()) throw Error(ErrorKind::ShapeMismatch, "A and X column counts differ");
  SketchedOutput sk = sketch_output(a, cfg, k);
  std::vector<double> gnorms = g.g_norm_guesses;
  if (gnorms.empty()) {
    double top = sk.sa.colwise().norm().maxCoeff();
    gnorms.push_back(0.0);
    for (int j = -6; j <= 1; ++j) gnorms.push_back(top * std::ldexp(1.0, j));
  }
  GuessEnumerator en(g, k, sk.s.rows());
  NoisyFptReport rep;
  Matrix m;
  std::size_t idx = 0;
  while (en.next(m)) {
    Matrix msa = m * sk.sa;
    for (std::size_t gi = 0; gi < gnorms.size(); ++gi, ++idx) {
      SeedStream sm = cfg.stream.child("smooth").child(static_cast<std::uint64_t>(idx));
      Matrix lab = smooth_labels(msa, gnorms[gi], g.eps, g.kappa_guess, k, sm);
      Matrix v(k, x.rows());
      bool ok = true;
      for (Index i = 0; i < k && ok; ++i) {
        try {
          v.row(i) = learn_halfspace({x, sign_labels(lab.row(i)), 1.0, 0.0}).transpose();
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::DegenerateSum) throw;
          ok = false;
        }
      }
      ++rep.guesses;
      if (!ok) continue;
      UFit u;
      try {
        u = regress_U(a, x, v, f);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::RankDeficientHidden) throw;
        continue;
      }
      rep.worst_residual = std::max(rep.worst_residual, u.residual);
      if (u.residual < rep.residual) {
        rep.residual = u.residual;
        rep.weights = {u.u, v};
        rep.best_guess = idx;
      }
    }
  }
  if (!std::isfinite(rep.residual)) throw Error(ErrorKind::NoSolution, "no guess produced a usable hidden layer");
  return rep;
}

inline NetworkWeights fpt_noisy_recover(const Matrix& a, const Matrix& x, Index k, const GuessGrid& g,
                                        const SketchConfig& cfg, const Activation& f = Activation::relu()) {
  return fpt_noisy_recover_report(a, x, k, g, cfg, f).weights;
}

// ---------------------------------------------------------------- robust PCA

struct RpcaResult {
  Matrix low_rank;
  Matrix sparse;
  bool converged = false;
  int iterations = 0;
  std::vector<double> residuals;  // ||A - Y - E||_F per outer iteration
};

inline Matrix soft_threshold(const Matrix& m, double t) {
  return m.unaryExpr([t](double v) { return v > t ? v - t : (v < -t ? v + t : 0.0); });
}

inline Matrix singular_value_threshold(const Matrix& m, double t) {
  auto s = svd(m);
  Vector sv = (s.singular_values.array() - t).cwiseMax(0.0);
  Index r = 0;
  while (r < sv.size() && sv(r) > 0) ++r;
  if (r == 0) return Matrix::Zero(m.rows(), m.cols());
  return s.left.leftCols(r) * sv.head(r).asDiagonal() * s.right.topRows(r);
}

struct RpcaOptions {
  double lambda = 0.0;  // 0 means 1 / sqrt(max(m, n))
  double tol = 1e-12;
  int max_iters = 500;
  int inner_iters = 500;    // 1 gives the inexact method
  double inner_tol = 1e-12;
  double rho = 1.5;
};

// Principal component pursuit by the augmented Lagrangian method: singular-value thresholding for Y,
// soft thresholding for E, alternated until the inner change is below inner_tol before each dual step.
inline RpcaResult rpca(const Matrix& a, const RpcaOptions& opt) {
  const Index m = a.rows(), n = a.cols();
  const double lambda = opt.lambda > 0 ? opt.lambda : 1.0 / std::sqrt(static_cast<double>(std::max(m, n)));
  RpcaResult r;
  r.low_rank = Matrix::Zero(m, n);
  r.sparse = Matrix::Zero(m, n);
  const double an = a.norm();
  if (an == 0.0) {
    r.converged = true;
    return r;
  }
  double s2 = svd(a).singular_values(0);
  double dual = std::max(s2, a.cwiseAbs().maxCoeff() / lambda);
  Matrix y = a / dual;
  double mu = 1.25 / s2;
  const double mu_max = mu * 1e7;
  for (int it = 0; it < opt.max_iters; ++it) {
    for (int j = 0; j < opt.inner_iters; ++j) {
      Matrix l = singular_value_threshold(a - r.sparse + y / mu, 1.0 / mu);
      Matrix e = soft_threshold(a - l + y / mu, lambda / mu);
      double change = (l - r.low_rank).norm() + (e - r.sparse).norm();
      r.low_rank = std::move(l);
      r.sparse = std::move(e);
      if (change <= opt.inner_tol * an) break;
    }
    Matrix z = a - r.low_rank - r.sparse;
    double res = z.norm();
    r.residuals.push_back(res);
    r.iterations = it + 1;
    if (res <= opt.tol * an) {
      r.converged = true;
      break;
    }
    y += mu * z;
    mu = std::min(mu * opt.rho, mu_max);
  }
  return r;
}

inline RpcaResult rpca(const Matrix& a, double lambda = 0.0, double tol = 1e-12, int max_iters = 500) {
  RpcaOptions o;
  o.lambda = lambda;
  o.tol = tol;
  o.max_iters = max_iters;
  return rpca(a, o);
}

// Walks lambda up from 1/sqrt(max(m, n)) by `step` until the low-rank part turns dense (rank >= min(m, n) / 2)
// and keeps the largest value seen whose low-rank part has rank <= k. The rank is not monotone in lambda
// on coherent instances, so a single rank > k step does not end the walk.
inline double select_lambda(const Matrix& a, Index k, double step = 1.05, double tol = 1e-8) {
  const Index m = a.rows(), n = a.cols();
  double lam = 1.0 / std::sqrt(static_cast<double>(std::max(m, n)));
  RpcaOptions o;
  o.inner_iters = 1;
  o.tol = tol;
  double best = lam;
  const Index dense = std::max<Index>(k + 1, std::min(m, n) / 2);
  for (int i = 0; i < 200; ++i, lam *= step) {
    o.lambda = lam;
    RpcaResult r = rpca(a, o);
    Index rank = matrix_rank(r.low_rank, 1e-6);
    if (rank <= k) best = lam;
    if (rank >= dense) break;
  }
  return best;
}

struct SparseRecoveryConfig {
  RecoveryConfig recovery;
  RpcaOptions pcp;  // lambda 0 selects it from the target rank
};

inline NetworkWeights recover_sparse(const Matrix& a, const Matrix& x, Index k, const SparseRecoveryConfig& cfg,
                                     SeedStream& stream, const Activation& f = Activation::relu(),
                                     RpcaResult* pcp_out = nullptr) {
  RpcaOptions o = cfg.pcp;
  if (o.lambda <= 0) o.lambda = select_lambda(a, k);
  RpcaResult pcp = rpca(a, o);
  if (pcp_out) *pcp_out = pcp;
  if (!pcp.converged) throw Error(ErrorKind::NoConvergence, "robust PCA did not converge");
  return recover_exact(pcp.low_rank, x, k, cfg.recovery, stream, f);
}

// Largest squared row norm of an orthonormal-column matrix; mu-incoherence is this times m / k.
inline double max_leverage(const Matrix& u) {
  Matrix q = Eigen::HouseholderQR<Matrix>(u).householderQ() * Matrix::Identity(u.rows(), u.cols());
  return q.rowwise().squaredNorm().maxCoeff();
}

}  // namespace relurec
