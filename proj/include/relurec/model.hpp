#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iomanip>
#include <istream>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "numerics.hpp"

namespace relurec {

// ---------------------------------------------------------------- activations

enum class ActivationKind { Relu, Power, Expm1, Custom };

struct Activation {
  ActivationKind kind = ActivationKind::Relu;
  double c = 1.0;  // exponent for Power
  std::string label = "relu";
  std::function<double(double)> phi;      // custom only, on (0, inf)
  std::function<double(double)> phi_inv;  // custom only

  static Activation relu() { return {}; }
  static Activation power(double c) {
    if (!(c > 0)) throw Error(ErrorKind::InvalidShape, "power activation needs c > 0");
    Activation a;
    a.kind = ActivationKind::Power;
    a.c = c;
    std::ostringstream os;
    os << "power(" << c << ")";
    a.label = os.str();
    return a;
  }
  static Activation expm1() {
    Activation a;
    a.kind = ActivationKind::Expm1;
    a.label = "expm1";
    return a;
  }
  static Activation custom(std::string name, std::function<double(double)> phi,
                           std::function<double(double)> inv) {
    Activation a;
    a.kind = ActivationKind::Custom;
    a.label = std::move(name);
    a.phi = std::move(phi);
    a.phi_inv = std::move(inv);
    return a;
  }

  double forward(double x) const {
    if (x <= 0.0) return 0.0;
    switch (kind) {
      case ActivationKind::Relu: return x;
      case ActivationKind::Power: return std::pow(x, c);
      case ActivationKind::Expm1: return std::expm1(x);
      case ActivationKind::Custom: return phi(x);
    }
    return 0.0;
  }

  double inverse_positive(double y) const {
    switch (kind) {
      case ActivationKind::Relu: return y;
      case ActivationKind::Power: return std::pow(y, 1.0 / c);
      case ActivationKind::Expm1: return std::log1p(y);
      case ActivationKind::Custom: return phi_inv(y);
    }
    return y;
  }

  // f(s x) = s^c f(x) for s > 0
  bool multiplicative() const { return kind == ActivationKind::Relu || kind == ActivationKind::Power; }
  double scale_exponent() const { return kind == ActivationKind::Power ? c : 1.0; }
  bool identity_inverse() const { return kind == ActivationKind::Relu; }
};

inline Activation activation_from_name(const std::string& s) {
  if (s == "relu") return Activation::relu();
  if (s == "expm1") return Activation::expm1();
  if (s.rfind("power", 0) == 0) {
    auto l = s.find('('), r = s.find(')');
    double c = 2.0;
    if (l != std::string::npos && r != std::string::npos) c = std::stod(s.substr(l + 1, r - l - 1));
    else if (s.size() > 5) c = std::stod(s.substr(5));
    return Activation::power(c);
  }
  throw Error(ErrorKind::InvalidShape, "unknown activation '" + s + "'");
}

inline Matrix apply_activation(const Activation& f, const Matrix& m) {
  if (f.kind == ActivationKind::Relu) return m.cwiseMax(0.0);
  return m.unaryExpr([&](double v) { return f.forward(v); });
}

// Largest slope between adjacent points of a uniform grid on [-b, b].
inline double bounded_lipschitz(const Activation& f, double b, std::size_t grid) {
  if (!(b > 0) || grid < 2) throw Error(ErrorKind::InvalidShape, "bounded_lipschitz needs b > 0 and grid >= 2");
  double h = 2.0 * b / static_cast<double>(grid - 1);
  double best = 0.0;
  double prev = f.forward(-b);
  for (std::size_t i = 1; i < grid; ++i) {
    double x = -b + h * static_cast<double>(i);
    double cur = f.forward(x);
    best = std::max(best, std::abs(cur - prev) / h);
    prev = cur;
  }
  return best;
}

// ---------------------------------------------------------------- weights and instances

struct NetworkWeights {
  Matrix u;  // m x k
  Matrix v;  // k x d, unit rows

  Index m() const { return u.rows(); }
  Index k() const { return v.rows(); }
  Index d() const { return v.cols(); }
};

inline Matrix normalize_rows(const Matrix& v) {
  Matrix out = v;
  for (Index i = 0; i < v.rows(); ++i) {
    double n = v.row(i).norm();
    if (n > 0) out.row(i) /= n;
  }
  return out;
}

// Rescale rows of V to unit norm and push the scale into U so U f(VX) is unchanged.
inline NetworkWeights canonicalize(const NetworkWeights& w, const Activation& f) {
  NetworkWeights out = w;
  for (Index i = 0; i < w.v.rows(); ++i) {
    double n = w.v.row(i).norm();
    if (n <= 0) continue;
    out.v.row(i) /= n;
    if (f.multiplicative()) out.u.col(i) *= std::pow(n, f.scale_exponent());
  }
  return out;
}

struct WeightOptions {
  bool allow_rank_deficient_u = false;
  bool orthonormal_u = false;
  std::optional<Matrix> u;  // fixed U, e.g. [1, -1]
};

struct GeneratedWeights {
  NetworkWeights weights;
  double kappa_v = 1.0;
  double kappa_u = 1.0;
};

inline Matrix random_orthonormal_rows(Index r, Index n, SeedStream& stream) {
  Matrix g = gaussian_matrix(n, r, 0.0, 1.0, stream);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(n, r);
  // fix signs so the draw is a deterministic function of g
  Matrix rr = qr.matrixQR().topLeftCorner(r, r);
  for (Index i = 0; i < r; ++i)
    if (rr(i, i) < 0) q.col(i) *= -1.0;
  return q.transpose();
}

inline GeneratedWeights generate_weights(Index m, Index k, Index d, double target_kappa, SeedStream& stream,
                                         const WeightOptions& opt = {}) {
  if (k < 1 || d < k || m < 1) throw Error(ErrorKind::InvalidShape, "need 1 <= k <= d and m >= 1");
  if (k > m && !opt.allow_rank_deficient_u && !opt.u)
    throw Error(ErrorKind::InvalidShape, "k > m requires rank-deficient U mode");
  if (!(target_kappa >= 1.0)) throw Error(ErrorKind::InvalidShape, "target_kappa must be >= 1");
  SeedStream sv = stream.child("v");
  SeedStream su = stream.child("u");
  stream.next_u64();

  Matrix left = random_orthonormal_rows(k, k, sv);
  Matrix right = random_orthonormal_rows(k, d, sv);
  Vector spec(k);
  for (Index i = 0; i < k; ++i) {
    double t = (k == 1) ? 0.0 : static_cast<double>(i) / static_cast<double>(k - 1);
    spec(i) = std::pow(target_kappa, -t);
  }
  Matrix v = normalize_rows(left * spec.asDiagonal() * right);

  Matrix u;
  if (opt.u) {
    u = *opt.u;
    if (u.cols() != k || u.rows() != m) throw Error(ErrorKind::InvalidShape, "fixed U has the wrong shape");
  } else if (opt.orthonormal_u) {
    if (k > m) throw Error(ErrorKind::InvalidShape, "orthonormal U needs k <= m");
    u = random_orthonormal_rows(k, m, su).transpose();
  } else {
    u = gaussian_matrix(m, k, 0.0, 1.0, su);
  }
  GeneratedWeights g;
  g.weights = {u, v};
  g.kappa_v = cond_number(v);
  g.kappa_u = cond_number(u);
  return g;
}

enum class NoiseKind { None, Iid, Sparse, Arbitrary };
enum class NoiseDist { Gaussian, Rademacher };

struct NoiseModel {
  NoiseKind kind = NoiseKind::None;
  double sigma = 0.0;
  NoiseDist dist = NoiseDist::Gaussian;
  double fraction = 0.0;
  double magnitude = 0.0;
  Matrix matrix;

  static NoiseModel none() { return {}; }
  static NoiseModel iid(double sigma, NoiseDist dist = NoiseDist::Gaussian) {
    if (sigma < 0) throw Error(ErrorKind::InvalidShape, "sigma must be >= 0");
    NoiseModel n;
    n.kind = NoiseKind::Iid;
    n.sigma = sigma;
    n.dist = dist;
    return n;
  }
  static NoiseModel sparse(double fraction, double magnitude) {
    if (fraction < 0 || fraction > 1) throw Error(ErrorKind::InvalidShape, "fraction outside [0,1]");
    NoiseModel n;
    n.kind = NoiseKind::Sparse;
    n.fraction = fraction;
    n.magnitude = magnitude;
    return n;
  }
  static NoiseModel arbitrary(Matrix e) {
    NoiseModel n;
    n.kind = NoiseKind::Arbitrary;
    n.matrix = std::move(e);
    return n;
  }

  std::string describe() const {
    std::ostringstream os;
    switch (kind) {
      case NoiseKind::None: os << "none"; break;
      case NoiseKind::Iid: os << "iid(" << sigma << "," << (dist == NoiseDist::Gaussian ? "gaussian" : "rademacher") << ")"; break;
      case NoiseKind::Sparse: os << "sparse(" << fraction << "," << magnitude << ")"; break;
      case NoiseKind::Arbitrary: os << "arbitrary"; break;
    }
    return os.str();
  }
};

struct Instance {
  Matrix x;
  Matrix a;
  Matrix e;
  NetworkWeights weights;
  Activation activation;
  NoiseModel noise;
  std::uint64_t seed = 0;
  std::optional<Matrix> covariance;
};

// Keep exactly s uniformly chosen entries of base.
inline Matrix sparse_noise(const Matrix& base, std::size_t s, SeedStream& stream) {
  const std::size_t total = static_cast<std::size_t>(base.size());
  if (s > total) throw Error(ErrorKind::InvalidShape, "sparse_noise: s exceeds entry count");
  std::vector<std::size_t> idx(total);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < s; ++i) {
    std::size_t j = i + static_cast<std::size_t>(stream.uniform_index(total - i));
    std::swap(idx[i], idx[j]);
  }
  Matrix out = Matrix::Zero(base.rows(), base.cols());
  for (std::size_t i = 0; i < s; ++i) {
    Index r = static_cast<Index>(idx[i]) % base.rows();
    Index c = static_cast<Index>(idx[i]) / base.rows();
    out(r, c) = base(r, c);
  }
  return out;
}

inline Matrix sym_sqrt(const Matrix& s, double power) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(s);
  Vector ev = es.eigenvalues().unaryExpr([&](double x) { return std::pow(std::max(x, 0.0), power); });
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

inline Instance generate_instance(const NetworkWeights& w, const Activation& f, Index n, const NoiseModel& noise,
                                  SeedStream& stream, const std::optional<Matrix>& covariance = std::nullopt) {
  if (n < 1) throw Error(ErrorKind::InvalidShape, "n must be >= 1");
  SeedStream sx = stream.child("x");
  SeedStream se = stream.child("e");
  Instance ins;
  ins.seed = stream.key();
  stream.next_u64();
  ins.weights = w;
  ins.activation = f;
  ins.noise = noise;
  ins.covariance = covariance;
  const Index d = w.v.cols(), m = w.u.rows();
  ins.x = gaussian_matrix(d, n, 0.0, 1.0, sx);
  if (covariance) ins.x = sym_sqrt(*covariance, 0.5) * ins.x;
  switch (noise.kind) {
    case NoiseKind::None:
      ins.e = Matrix::Zero(m, n);
      break;
    case NoiseKind::Iid:
      if (noise.dist == NoiseDist::Gaussian) {
        ins.e = gaussian_matrix(m, n, 0.0, noise.sigma, se);
      } else {
        ins.e.resize(m, n);
        for (Index i = 0; i < m; ++i)
          for (Index j = 0; j < n; ++j) ins.e(i, j) = noise.sigma * se.rademacher();
      }
      break;
    case NoiseKind::Sparse: {
      Matrix base(m, n);
      SeedStream sb = se.child("signs");
      for (Index i = 0; i < m; ++i)
        for (Index j = 0; j < n; ++j) base(i, j) = noise.magnitude * sb.rademacher();
      auto s = static_cast<std::size_t>(std::llround(noise.fraction * static_cast<double>(m * n)));
      SeedStream sp = se.child("support");
      ins.e = sparse_noise(base, s, sp);
      break;
    }
    case NoiseKind::Arbitrary:
      if (noise.matrix.rows() != m || noise.matrix.cols() != n)
        throw Error(ErrorKind::InvalidShape, "arbitrary noise matrix has the wrong shape");
      ins.e = noise.matrix;
      break;
  }
  ins.a = w.u * apply_activation(f, w.v * ins.x) + ins.e;
  return ins;
}

inline Matrix estimate_covariance(const Matrix& x) {
  if (x.cols() < 1) throw Error(ErrorKind::InvalidShape, "estimate_covariance needs at least one column");
  return (x * x.transpose()) / static_cast<double>(x.cols());
}

inline Matrix whiten_input(const Matrix& x, const Matrix& sigma_hat) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(sigma_hat);
  if (es.eigenvalues().minCoeff() <= rank_tol * std::max(1.0, es.eigenvalues().maxCoeff()))
    throw Error(ErrorKind::NumericalFailure, "covariance estimate is not full rank");
  return sym_sqrt(sigma_hat, -0.5) * x;
}

struct Normalized {
  Matrix a;
  double scale = 1.0;
};

inline Normalized normalize_output(const Matrix& a) {
  double s = a.size() ? a.colwise().norm().maxCoeff() : 0.0;
  if (!(s > 0)) throw Error(ErrorKind::ZeroMatrix, "normalize_output of a zero matrix");
  return {a / s, s};
}

// ---------------------------------------------------------------- matrix text format

inline void write_matrix(std::ostream& os, const Matrix& m) {
  os << m.rows() << ' ' << m.cols() << '\n';
  char buf[40];
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", m(i, j));
      if (j) os << ' ';
      os << buf;
    }
    os << '\n';
  }
}

inline Matrix read_matrix(std::istream& is) {
  long long r = -1, c = -1;
  if (!(is >> r >> c) || r < 0 || c < 0) throw Error(ErrorKind::InvalidShape, "bad matrix header");
  Matrix m(r, c);
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < c; ++j) {
      std::string tok;
      if (!(is >> tok)) throw Error(ErrorKind::InvalidShape, "matrix file truncated");
      m(i, j) = std::strtod(tok.c_str(), nullptr);
    }
  return m;
}

inline void save_matrix(const std::string& path, const Matrix& m) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorKind::InvalidShape, "cannot write " + path);
  write_matrix(os, m);
}

inline Matrix load_matrix(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorKind::InvalidShape, "cannot read " + path);
  return read_matrix(is);
}

}  // namespace relurec
