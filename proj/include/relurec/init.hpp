#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "model.hpp"

namespace relurec {

// Dense symmetric-storage-agnostic cubic tensor, index (i,j,k) -> (i*d + j)*d + k.
struct Tensor3 {
  Index d = 0;
  std::vector<double> data;

  Tensor3() = default;
  explicit Tensor3(Index dim) : d(dim), data(static_cast<std::size_t>(dim * dim * dim), 0.0) {}

  double& operator()(Index i, Index j, Index k) { return data[static_cast<std::size_t>((i * d + j) * d + k)]; }
  double operator()(Index i, Index j, Index k) const { return data[static_cast<std::size_t>((i * d + j) * d + k)]; }

  Tensor3& operator+=(const Tensor3& o) {
    for (std::size_t i = 0; i < data.size(); ++i) data[i] += o.data[i];
    return *this;
  }
  Tensor3& operator*=(double s) {
    for (auto& v : data) v *= s;
    return *this;
  }
  double norm() const {
    double s = 0;
    for (double v : data) s += v * v;
    return std::sqrt(s);
  }

  // T(I, u, u)
  Vector contract2(const Vector& u) const {
    Vector out = Vector::Zero(d);
    for (Index i = 0; i < d; ++i)
      for (Index j = 0; j < d; ++j)
        for (Index k = 0; k < d; ++k) out(i) += (*this)(i, j, k) * u(j) * u(k);
    return out;
  }
  double contract3(const Vector& u) const { return u.dot(contract2(u)); }

  // T(W, W, W) for W of shape d x r
  Tensor3 multilinear(const Matrix& w) const {
    const Index r = w.cols();
    Tensor3 a(r), b(r);
    // contract one mode at a time
    std::vector<double> t1(static_cast<std::size_t>(r * d * d), 0.0), t2(static_cast<std::size_t>(r * r * d), 0.0);
    for (Index p = 0; p < r; ++p)
      for (Index i = 0; i < d; ++i) {
        double wi = w(i, p);
        if (wi == 0) continue;
        for (Index j = 0; j < d; ++j)
          for (Index k = 0; k < d; ++k) t1[static_cast<std::size_t>((p * d + j) * d + k)] += wi * (*this)(i, j, k);
      }
    for (Index p = 0; p < r; ++p)
      for (Index q = 0; q < r; ++q)
        for (Index j = 0; j < d; ++j) {
          double wj = w(j, q);
          if (wj == 0) continue;
          for (Index k = 0; k < d; ++k)
            t2[static_cast<std::size_t>((p * r + q) * d + k)] += wj * t1[static_cast<std::size_t>((p * d + j) * d + k)];
        }
    for (Index p = 0; p < r; ++p)
      for (Index q = 0; q < r; ++q)
        for (Index s = 0; s < r; ++s) {
          double acc = 0;
          for (Index k = 0; k < d; ++k) acc += w(k, s) * t2[static_cast<std::size_t>((p * r + q) * d + k)];
          a(p, q, s) = acc;
        }
    return a;
  }

  static Tensor3 rank_one(const Vector& v, double lambda = 1.0) {
    Tensor3 t(v.size());
    for (Index i = 0; i < t.d; ++i)
      for (Index j = 0; j < t.d; ++j)
        for (Index k = 0; k < t.d; ++k) t(i, j, k) = lambda * v(i) * v(j) * v(k);
    return t;
  }
};

struct Tensor4 {
  Index d = 0;
  std::vector<double> data;

  Tensor4() = default;
  explicit Tensor4(Index dim) : d(dim), data(static_cast<std::size_t>(dim * dim * dim * dim), 0.0) {}
  double& operator()(Index i, Index j, Index k, Index l) {
    return data[static_cast<std::size_t>(((i * d + j) * d + k) * d + l)];
  }
  double operator()(Index i, Index j, Index k, Index l) const {
    return data[static_cast<std::size_t>(((i * d + j) * d + k) * d + l)];
  }
};

// ---------------------------------------------------------------- Hermite score functions

inline Matrix score2(const Vector& x) { return x * x.transpose() - Matrix::Identity(x.size(), x.size()); }

inline Tensor3 score3(const Vector& x) {
  const Index d = x.size();
  Tensor3 t(d);
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < d; ++j)
      for (Index k = 0; k < d; ++k) {
        double v = x(i) * x(j) * x(k);
        if (j == k) v -= x(i);
        if (i == k) v -= x(j);
        if (i == j) v -= x(k);
        t(i, j, k) = v;
      }
  return t;
}

inline Tensor4 score4(const Vector& x) {
  const Index d = x.size();
  Tensor4 t(d);
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < d; ++j)
      for (Index k = 0; k < d; ++k)
        for (Index l = 0; l < d; ++l) {
          double v = x(i) * x(j) * x(k) * x(l);
          if (k == l) v -= x(i) * x(j);
          if (j == l) v -= x(i) * x(k);
          if (j == k) v -= x(i) * x(l);
          if (i == l) v -= x(j) * x(k);
          if (i == k) v -= x(j) * x(l);
          if (i == j) v -= x(k) * x(l);
          if (i == j && k == l) v += 1;
          if (i == k && j == l) v += 1;
          if (i == l && j == k) v += 1;
          t(i, j, k, l) = v;
        }
  return t;
}

struct ScoreConfig {
  int order = 3;
  Vector theta;   // length m, unit norm
  Vector theta2;  // length d, order 4 only
  bool control_variates = false;
};

// Monomials of x of total degree <= deg, one row per monomial.
inline Matrix polynomial_features(const Matrix& x, int deg) {
  const Index d = x.rows(), n = x.cols();
  std::vector<RowVector> rows{RowVector::Ones(n)};
  std::vector<std::pair<RowVector, Index>> level{{RowVector::Ones(n), 0}};
  for (int k = 1; k <= deg; ++k) {
    std::vector<std::pair<RowVector, Index>> next;
    for (auto& [r, start] : level)
      for (Index i = start; i < d; ++i) {
        next.push_back({r.cwiseProduct(x.row(i)), i});
        rows.push_back(next.back().first);
      }
    level = std::move(next);
  }
  Matrix f(static_cast<Index>(rows.size()), n);
  for (std::size_t i = 0; i < rows.size(); ++i) f.row(static_cast<Index>(i)) = rows[i];
  return f;
}

// c minus its least-squares fit on polynomials of degree <= deg; Hermite moments of higher order keep
// their expectation while the variance from the low-degree part of c drops out.
inline RowVector residual_after_polynomials(const RowVector& c, const Matrix& x, int deg) {
  Matrix f = polynomial_features(x, deg);
  Matrix g = f * f.transpose();
  Vector beta = g.ldlt().solve(f * c.transpose());
  return c - beta.transpose() * f;
}

struct CollapsedMoments {
  Tensor3 t3;
  Matrix m2;
};

// Empirical cross moments of <theta, A_i> with the score functions of X_i.
inline CollapsedMoments build_collapsed_tensor(const Matrix& a, const Matrix& x, const ScoreConfig& cfg) {
  const Index d = x.rows(), n = x.cols();
  if (a.cols() != n) throw Error(ErrorKind::ShapeMismatch, "A and X column counts differ");
  if (cfg.theta.size() != a.rows()) throw Error(ErrorKind::ShapeMismatch, "theta length differs from m");
  if (cfg.order != 3 && cfg.order != 4) throw Error(ErrorKind::InvalidShape, "order must be 3 or 4");
  if (cfg.order == 4 && cfg.theta2.size() != d) throw Error(ErrorKind::ShapeMismatch, "theta2 length differs from d");
  const double inv_n = 1.0 / static_cast<double>(n);
  RowVector c = cfg.theta.transpose() * a;  // 1 x n

  CollapsedMoments out;
  out.m2 = (x * c.asDiagonal() * x.transpose()) * inv_n - (c.sum() * inv_n) * Matrix::Identity(d, d);

  // weights for the cubic term: c (order 3) or c <x, theta2> (order 4)
  RowVector c3 = c;
  if (cfg.control_variates) c3 = residual_after_polynomials(c, x, cfg.order - 1);
  const RowVector cr = c3;
  if (cfg.order == 4) c3 = c3.cwiseProduct(cfg.theta2.transpose() * x);
  Tensor3 t(d);
  std::vector<double> outer(static_cast<std::size_t>(d * d));
  for (Index q = 0; q < n; ++q) {
    const double w = c3(q);
    if (w == 0.0) continue;
    for (Index i = 0; i < d; ++i)
      for (Index j = 0; j < d; ++j) outer[static_cast<std::size_t>(i * d + j)] = w * x(i, q) * x(j, q);
    for (Index ij = 0; ij < d * d; ++ij) {
      double o = outer[static_cast<std::size_t>(ij)];
      double* row = &t.data[static_cast<std::size_t>(ij * d)];
      for (Index k = 0; k < d; ++k) row[k] += o * x(k, q);
    }
  }
  Vector mu = (x * c3.transpose()) * inv_n;  // (1/n) sum c3 x
  for (auto& v : t.data) v *= inv_n;
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < d; ++j)
      for (Index k = 0; k < d; ++k) {
        double v = 0;
        if (j == k) v += mu(i);
        if (i == k) v += mu(j);
        if (i == j) v += mu(k);
        t(i, j, k) -= v;
      }
  if (cfg.order == 4) {
    const Vector& th = cfg.theta2;
    Matrix b = (x * cr.asDiagonal() * x.transpose()) * inv_n;  // (1/n) sum c x x^T
    double cbar = cr.sum() * inv_n;
    for (Index i = 0; i < d; ++i)
      for (Index j = 0; j < d; ++j)
        for (Index k = 0; k < d; ++k) {
          double v = -(b(i, j) * th(k) + b(i, k) * th(j) + b(j, k) * th(i));
          if (i == j) v += cbar * th(k);
          if (i == k) v += cbar * th(j);
          if (j == k) v += cbar * th(i);
          t(i, j, k) += v;
        }
  }
  out.t3 = std::move(t);
  return out;
}

// ---------------------------------------------------------------- tensor power method

struct TensorInitReport {
  Matrix rows;  // k x d, unit rows, each approximately +/- a row of V
  std::vector<double> eigenvalues;
  int power_iters = 0;
  int restarts = 0;
  bool converged = true;
  int theta_tries = 0;
};

struct PowerOptions {
  int restarts = 30;
  int iters = 100;
  double tol = 1e-10;
  double psd_tol = 1e-8;
};

// Whitening W = E_k Lambda_k^{-1/2} from the top-k eigenpairs of m2.
inline Matrix whitening_matrix(const Matrix& m2, Index k, double psd_tol) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m2 + m2.transpose()));
  const Index d = m2.rows();
  Vector ev = es.eigenvalues();
  double top = std::max(std::abs(ev(d - 1)), std::abs(ev(0)));
  Matrix w(d, k);
  for (Index j = 0; j < k; ++j) {
    double lam = ev(d - 1 - j);
    if (!(lam > psd_tol * std::max(top, 1e-300)))
      throw Error(ErrorKind::WhiteningFailed, "top-k eigenvalues of M2 are not all positive");
    w.col(j) = es.eigenvectors().col(d - 1 - j) / std::sqrt(lam);
  }
  return w;
}

inline TensorInitReport tensor_power_decompose(const Tensor3& t3, const Matrix& m2, Index k, const PowerOptions& po,
                                               SeedStream& stream) {
  Matrix w = whitening_matrix(m2, k, po.psd_tol);
  Tensor3 tw = t3.multilinear(w);
  TensorInitReport rep;
  rep.restarts = po.restarts;
  Matrix comps(k, k);
  const double scale = std::max(tw.norm(), 1e-300);
  for (Index c = 0; c < k; ++c) {
    Vector best;
    double best_val = -std::numeric_limits<double>::infinity();
    bool ok = false;
    for (int r = 0; r < po.restarts; ++r) {
      Vector u(k);
      for (Index i = 0; i < k; ++i) u(i) = stream.normal();
      u.normalize();
      bool conv = false;
      for (int it = 0; it < po.iters; ++it) {
        Vector nu = tw.contract2(u);
        double nn = nu.norm();
        ++rep.power_iters;
        if (!(nn > 1e-12 * scale)) break;
        nu /= nn;
        double diff = std::min((nu - u).norm(), (nu + u).norm());
        u = nu;
        if (diff < po.tol) {
          conv = true;
          break;
        }
      }
      double val = tw.contract3(u);
      if (val < 0) {
        u = -u;
        val = -val;
      }
      if (val > best_val) {
        best_val = val;
        best = u;
        ok = conv;
      }
    }
    if (!(best_val > 1e-12 * scale)) ok = false;
    // polish the winning restart
    for (int it = 0; it < po.iters && best_val > 1e-12 * scale; ++it) {
      Vector nu = tw.contract2(best);
      double nn = nu.norm();
      if (!(nn > 0)) break;
      nu /= nn;
      double diff = (nu - best).norm();
      best = nu;
      if (diff < po.tol) {
        ok = true;
        break;
      }
    }
    best_val = tw.contract3(best);
    rep.converged = rep.converged && ok;
    rep.eigenvalues.push_back(best_val);
    comps.row(c) = best.transpose();
    Tensor3 defl = Tensor3::rank_one(best, -best_val);
    tw += defl;
  }
  // unwhiten: v_j proportional to pinv(W^T) r_j
  Matrix back = pinv(w.transpose());
  rep.rows.resize(k, m2.rows());
  for (Index c = 0; c < k; ++c) {
    Vector v = back * comps.row(c).transpose();
    double nv = v.norm();
    if (nv > 0) v /= nv;
    rep.rows.row(c) = v.transpose();
  }
  return rep;
}

struct InitTensorConfig {
  int order = 0;  // 0 picks 4 for relu and 3 otherwise
  PowerOptions power;
  int max_theta_tries = 0;  // 0 means 2^(k+5)
  double whitening_gap = 0.1;
  bool smooth = false;
  double smooth_sigma = 0.0;
  bool control_variates = true;
};

inline Vector random_unit(Index n, SeedStream& s) {
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = s.normal();
  return v / v.norm();
}

// Moment-based approximate recovery of +/- rows of V.
inline TensorInitReport init_tensor(const Matrix& a_in, const Matrix& x, Index k, const Activation& f,
                                    const InitTensorConfig& cfg, SeedStream& stream) {
  int order = cfg.order ? cfg.order : (f.kind == ActivationKind::Relu ? 4 : 3);
  int tries = cfg.max_theta_tries ? cfg.max_theta_tries : (1 << (k + 5));
  Matrix a = a_in;
  if (cfg.smooth && cfg.smooth_sigma > 0) {
    SeedStream sm = stream.child("smooth");
    a += gaussian_matrix(a.rows(), a.cols(), 0.0, cfg.smooth_sigma, sm);
  }
  SeedStream th = stream.child("theta");
  SeedStream pw = stream.child("power");
  stream.next_u64();
  const Index d = x.rows();
  // theta only enters through c = theta^T A, so M2 is cheap to screen before the cubic pass;
  // the screened draws are tried in order of their eigengap at k relative to the spread of c
  struct Draw {
    double score;
    int index;
    ScoreConfig sc;
  };
  std::vector<Draw> draws;
  // collapse directions are drawn inside the top-k left singular space of A
  Matrix span = Matrix::Identity(a.rows(), a.rows());
  if (a.rows() > k) span = svd(a).left.leftCols(k);
  const double inv_n = 1.0 / static_cast<double>(x.cols());
  for (int t = 1; t <= tries; ++t) {
    ScoreConfig sc;
    sc.order = order;
    sc.control_variates = cfg.control_variates;
    sc.theta = span * random_unit(span.cols(), th);
    if (order == 4) sc.theta2 = random_unit(d, th);
    RowVector c = sc.theta.transpose() * a;
    Matrix m2 = (x * c.asDiagonal() * x.transpose()) * inv_n - (c.sum() * inv_n) * Matrix::Identity(d, d);
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m2 + m2.transpose()));
    Vector ev = es.eigenvalues();
    double top = ev.cwiseAbs().maxCoeff();
    double kth = ev(d - k);
    double rest = (d > k) ? ev.head(d - k).cwiseAbs().maxCoeff() : 0.0;
    if (!(kth > cfg.whitening_gap * top)) continue;
    double spread = std::sqrt(c.squaredNorm() * inv_n);
    draws.push_back({(kth - rest) / std::max(spread, 1e-300), t, std::move(sc)});
  }
  std::stable_sort(draws.begin(), draws.end(), [](const Draw& p, const Draw& q) { return p.score > q.score; });
  for (auto& dr : draws) {
    CollapsedMoments cm = build_collapsed_tensor(a, x, dr.sc);
    try {
      TensorInitReport rep = tensor_power_decompose(cm.t3, cm.m2, k, cfg.power, pw);
      rep.theta_tries = dr.index;
      return rep;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::WhiteningFailed) throw;
    }
  }
  throw Error(ErrorKind::WhiteningFailed, "no collapse vector gave a positive definite top-k block");
}

// ---------------------------------------------------------------- ICA initializer

struct IcaResult {
  Matrix sketch;           // k x m
  Matrix mixing_estimate;  // k x k, approx sketch * U * Pi * D
  Matrix sources;          // k x n, approx D^-1 Pi^T f(V X)
};

struct IcaOptions {
  int max_iters = 500;
  int restarts = 10;
  double tol = 1e-12;
};

inline IcaResult init_ica(const Matrix& a, Index k, SeedStream& stream, const IcaOptions& opt = {}) {
  const Index m = a.rows(), n = a.cols();
  SeedStream ss = stream.child("sketch");
  SeedStream si = stream.child("ica");
  stream.next_u64();
  IcaResult out;
  out.sketch = gaussian_matrix(k, m, 0.0, 1.0, ss);
  Matrix z = out.sketch * a;  // k x n
  Vector mean = z.rowwise().mean();
  Matrix zc = z.colwise() - mean;
  Matrix cov = zc * zc.transpose() / static_cast<double>(n);
  Eigen::SelfAdjointEigenSolver<Matrix> es(cov);
  if (es.eigenvalues().minCoeff() <= rank_tol * es.eigenvalues().maxCoeff())
    throw Error(ErrorKind::NoConvergence, "sketched output is rank deficient");
  Matrix kw = es.eigenvectors() * es.eigenvalues().cwiseInverse().cwiseSqrt().asDiagonal() *
              es.eigenvectors().transpose();
  Matrix zw = kw * zc;

  // kurtosis fixed point with deflation
  Matrix wica(k, k);
  for (Index c = 0; c < k; ++c) {
    bool done = false;
    for (int r = 0; r < opt.restarts && !done; ++r) {
      Vector w = random_unit(k, si);
      for (int it = 0; it < opt.max_iters; ++it) {
        RowVector p = w.transpose() * zw;
        Vector nw = (zw * p.array().cube().matrix().transpose()) / static_cast<double>(n) - 3.0 * w;
        for (Index j = 0; j < c; ++j) nw -= nw.dot(wica.row(j).transpose()) * wica.row(j).transpose();
        double nn = nw.norm();
        if (!(nn > 0)) break;
        nw /= nn;
        double conv = 1.0 - std::abs(nw.dot(w));
        w = nw;
        if (conv < opt.tol) {
          done = true;
          break;
        }
      }
      if (done) wica.row(c) = w.transpose();
    }
    if (!done) throw Error(ErrorKind::NoConvergence, "ICA fixed point did not converge");
  }
  Matrix unmix = wica * kw;  // k x k
  Matrix s = unmix * z;
  // rectified sources are positively skewed
  for (Index c = 0; c < k; ++c) {
    RowVector sc = s.row(c).array() - s.row(c).mean();
    double skew = sc.array().cube().mean();
    if (skew < 0) {
      unmix.row(c) *= -1.0;
      s.row(c) *= -1.0;
    }
  }
  out.mixing_estimate = unmix.inverse();
  out.sources = s;
  return out;
}

// Perturbed truth with random row signs; eigenvalues carries the planted signs.
inline TensorInitReport init_oracle(const NetworkWeights& truth, double eps, SeedStream& stream) {
  if (eps < 0) throw Error(ErrorKind::InvalidShape, "eps must be >= 0");
  TensorInitReport rep;
  rep.rows = truth.v;
  for (Index i = 0; i < truth.v.rows(); ++i) {
    Vector dir = random_unit(truth.v.cols(), stream);
    double xi = stream.rademacher();
    RowVector r = truth.v.row(i) + eps * dir.transpose();
    rep.rows.row(i) = xi * r / r.norm();
    rep.eigenvalues.push_back(xi);
  }
  return rep;
}

}  // namespace relurec
