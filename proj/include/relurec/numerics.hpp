#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

#include "errors.hpp"
#include "rng.hpp"

namespace relurec {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using Index = Eigen::Index;

inline constexpr double eq_tol = 1e-9;
inline constexpr double rank_tol = 1e-9;

struct SvdResult {
  Matrix left;            // rows x r, orthonormal columns
  Vector singular_values; // nonincreasing
  Matrix right;           // r x cols, orthonormal rows

  Index rank(double tol = rank_tol) const {
    if (singular_values.size() == 0 || singular_values(0) <= 0.0) return 0;
    Index r = 0;
    for (Index i = 0; i < singular_values.size(); ++i)
      if (singular_values(i) > tol * singular_values(0)) ++r;
    return r;
  }
};

inline SvdResult svd(const Matrix& a) {
  Eigen::BDCSVD<Matrix> s(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return {s.matrixU(), s.singularValues(), s.matrixV().transpose()};
}

inline Index matrix_rank(const Matrix& a, double tol = rank_tol) { return svd(a).rank(tol); }

// sigma_max / sigma_r; r <= 0 means "infer from rank_tol"
inline double cond_number(const Matrix& a, Index r = 0) {
  auto s = svd(a);
  if (s.singular_values.size() == 0 || s.singular_values(0) <= 0.0)
    throw Error(ErrorKind::ZeroMatrix, "condition number of a zero matrix");
  if (r <= 0) r = s.rank();
  r = std::min<Index>(r, s.singular_values.size());
  return s.singular_values(0) / s.singular_values(r - 1);
}

inline Matrix pinv(const Matrix& a, double rcond = rank_tol) {
  if (a.size() == 0) return Matrix::Zero(a.cols(), a.rows());
  auto s = svd(a);
  Matrix out = Matrix::Zero(a.cols(), a.rows());
  if (s.singular_values(0) <= 0.0) return out;
  double cut = rcond * s.singular_values(0);
  for (Index i = 0; i < s.singular_values.size(); ++i) {
    double sv = s.singular_values(i);
    if (sv > cut) out += s.right.row(i).transpose() * (1.0 / sv) * s.left.col(i).transpose();
  }
  return out;
}

// Orthonormal rows spanning the row space of `rows`.
inline Matrix row_basis(const Matrix& rows, double tol = rank_tol) {
  if (rows.rows() == 0) return Matrix(0, rows.cols());
  auto s = svd(rows);
  Index r = s.rank(tol);
  return s.right.topRows(r);
}

inline Matrix projector(const Matrix& rows) {
  Matrix q = row_basis(rows);
  if (q.rows() == 0) return Matrix::Zero(rows.cols(), rows.cols());
  return q.transpose() * q;
}

// ||v (I - P)||^2 where P projects onto the span of the orthonormal rows of q
inline double complement_norm2(const RowVector& v, const Matrix& q) {
  if (q.rows() == 0) return v.squaredNorm();
  RowVector c = v * q.transpose();
  RowVector r = v - c * q;
  return r.squaredNorm();
}

struct LinearSolve {
  Matrix solution;
  double residual = 0.0;
};

// Minimum-norm least-squares solution of a * solution = b.
inline LinearSolve solve_exact(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw Error(ErrorKind::ShapeMismatch, "solve_exact: row count differs");
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod;
  cod.setThreshold(rank_tol);
  cod.compute(a);
  LinearSolve out;
  out.solution = cod.solve(b);
  out.residual = (a * out.solution - b).norm();
  return out;
}

// Solve x * a = b for a row vector (or stacked rows) x.
inline LinearSolve solve_rows(const Matrix& a, const Matrix& b) {
  LinearSolve t = solve_exact(a.transpose(), b.transpose());
  t.solution.transposeInPlace();
  return t;
}

// Indices of k linearly independent rows chosen by column-pivoted QR on the transpose.
inline std::vector<Index> independent_rows(const Matrix& a, Index k) {
  Eigen::ColPivHouseholderQR<Matrix> qr(a.transpose());
  std::vector<Index> idx;
  const auto& perm = qr.colsPermutation().indices();
  for (Index i = 0; i < std::min<Index>(k, perm.size()); ++i) idx.push_back(perm(i));
  return idx;
}

inline Matrix gaussian_matrix(Index rows, Index cols, double mean, double stddev, SeedStream& stream) {
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = mean + stddev * stream.normal();
  return m;
}

// ---------------------------------------------------------------- linear programming

enum class Relation { GreaterEq, LessEq, Equal };

struct Constraint {
  std::vector<double> coef;
  Relation rel = Relation::Equal;
  double rhs = 0.0;
};

struct LinearProgram {
  std::size_t num_vars = 0;
  std::vector<Constraint> constraints;
  std::vector<double> objective;  // optional, minimized

  explicit LinearProgram(std::size_t n = 0) : num_vars(n) {}

  void add(std::vector<double> coef, Relation rel, double rhs) {
    if (coef.size() != num_vars) throw Error(ErrorKind::ShapeMismatch, "constraint length differs from num_vars");
    constraints.push_back({std::move(coef), rel, rhs});
  }

  template <typename Derived>
  void add(const Eigen::MatrixBase<Derived>& coef, Relation rel, double rhs) {
    std::vector<double> c(static_cast<std::size_t>(coef.size()));
    for (Index i = 0; i < coef.size(); ++i) c[static_cast<std::size_t>(i)] = coef(i);
    add(std::move(c), rel, rhs);
  }
};

inline bool lp_satisfies(const LinearProgram& lp, const Vector& x, double tol = eq_tol) {
  for (const auto& c : lp.constraints) {
    double s = 0.0;
    for (std::size_t j = 0; j < lp.num_vars; ++j) s += c.coef[j] * x(static_cast<Index>(j));
    double viol = 0.0;
    if (c.rel == Relation::GreaterEq) viol = c.rhs - s;
    else if (c.rel == Relation::LessEq) viol = s - c.rhs;
    else viol = std::abs(s - c.rhs);
    if (viol > tol) return false;
  }
  return true;
}

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpResult {
  LpStatus status = LpStatus::Infeasible;
  Vector x;
  double objective = 0.0;
};

namespace detail {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

class Simplex {
 public:
  Simplex(const LinearProgram& lp, std::size_t max_pivots) : lp_(lp), max_pivots_(max_pivots) { build(); }

  LpResult solve() {
    LpResult res;
    // phase 1: minimise the sum of artificials
    std::vector<char> allowed(ncols_, 1);
    run(allowed);
    double infeas = -t_(m_, ncols_);
    if (infeas > feas_tol_) return res;
    drive_out_artificials();
    for (Index j = art0_; j < ncols_; ++j) allowed[j] = 0;
    polish();
    Vector x = extract();
    if (lp_.objective.empty()) {
      res.status = LpStatus::Optimal;
      res.x = x;
      return res;
    }
    // phase 2
    set_objective();
    bool bounded = run(allowed);
    polish();
    res.x = extract();
    res.status = bounded ? LpStatus::Optimal : LpStatus::Unbounded;
    double obj = 0.0;
    for (std::size_t j = 0; j < lp_.num_vars; ++j) obj += lp_.objective[j] * res.x(static_cast<Index>(j));
    res.objective = obj;
    return res;
  }

 private:
  void build() {
    const Index nv = static_cast<Index>(lp_.num_vars);
    m_ = static_cast<Index>(lp_.constraints.size());
    Index nslack = 0;
    for (const auto& c : lp_.constraints)
      if (c.rel != Relation::Equal) ++nslack;
    art0_ = 2 * nv + nslack;
    ncols_ = art0_ + m_;
    t_ = RowMat::Zero(m_ + 1, ncols_ + 1);
    a_ = RowMat::Zero(m_, ncols_);
    b_ = Vector::Zero(m_);
    basis_.assign(static_cast<std::size_t>(m_), 0);
    Index s = 0;
    double bmax = 0.0;
    for (Index i = 0; i < m_; ++i) {
      const auto& c = lp_.constraints[static_cast<std::size_t>(i)];
      double scale = std::abs(c.rhs);
      for (double v : c.coef) scale = std::max(scale, std::abs(v));
      if (scale == 0.0) scale = 1.0;
      double sign = (c.rhs < 0) ? -1.0 : 1.0;
      double f = sign / scale;
      for (Index j = 0; j < nv; ++j) {
        a_(i, j) = f * c.coef[static_cast<std::size_t>(j)];
        a_(i, nv + j) = -f * c.coef[static_cast<std::size_t>(j)];
      }
      if (c.rel == Relation::LessEq) a_(i, 2 * nv + s++) = sign;
      else if (c.rel == Relation::GreaterEq) a_(i, 2 * nv + s++) = -sign;
      a_(i, art0_ + i) = 1.0;
      b_(i) = f * c.rhs;
      bmax = std::max(bmax, b_(i));
      basis_[static_cast<std::size_t>(i)] = art0_ + i;
    }
    t_.block(0, 0, m_, ncols_) = a_;
    t_.col(ncols_).head(m_) = b_;
    for (Index j = 0; j < ncols_; ++j) t_(m_, j) = (j >= art0_) ? 0.0 : -t_.col(j).head(m_).sum();
    t_(m_, ncols_) = -b_.sum();
    feas_tol_ = 1e-10 * std::max<double>(1.0, static_cast<double>(m_));
  }

  void pivot(Index r, Index c) {
    t_.row(r) /= t_(r, c);
    for (Index i = 0; i <= m_; ++i) {
      if (i == r) continue;
      double f = t_(i, c);
      if (f != 0.0) t_.row(i) -= f * t_.row(r);
    }
    basis_[static_cast<std::size_t>(r)] = c;
  }

  // Bland's rule; returns false on unboundedness
  bool run(const std::vector<char>& allowed) {
    const double cost_tol = 1e-11;
    const double piv_tol = 1e-11;
    while (true) {
      Index enter = -1;
      for (Index j = 0; j < ncols_; ++j)
        if (allowed[static_cast<std::size_t>(j)] && t_(m_, j) < -cost_tol) {
          enter = j;
          break;
        }
      if (enter < 0) return true;
      double best = std::numeric_limits<double>::infinity();
      for (Index i = 0; i < m_; ++i)
        if (t_(i, enter) > piv_tol) best = std::min(best, t_(i, ncols_) / t_(i, enter));
      if (!std::isfinite(best)) return false;
      Index leave = -1;
      for (Index i = 0; i < m_; ++i) {
        if (t_(i, enter) <= piv_tol) continue;
        if (t_(i, ncols_) / t_(i, enter) > best + 1e-12) continue;
        if (leave < 0 || basis_[static_cast<std::size_t>(i)] < basis_[static_cast<std::size_t>(leave)]) leave = i;
      }
      pivot(leave, enter);
      if (++pivots_ > max_pivots_) throw Error(ErrorKind::NumericalFailure, "simplex pivot limit exceeded");
    }
  }

  void drive_out_artificials() {
    for (Index i = 0; i < m_; ++i) {
      if (basis_[static_cast<std::size_t>(i)] < art0_) continue;
      Index best = -1;
      double bv = 1e-9;
      for (Index j = 0; j < art0_; ++j)
        if (std::abs(t_(i, j)) > bv) {
          bv = std::abs(t_(i, j));
          best = j;
        }
      if (best >= 0) pivot(i, best);
    }
  }

  // recompute basic values from the original columns to shed accumulated round-off
  void polish() {
    Matrix bm(m_, m_);
    for (Index i = 0; i < m_; ++i) bm.col(i) = a_.col(basis_[static_cast<std::size_t>(i)]);
    Eigen::FullPivLU<Matrix> lu(bm);
    if (!lu.isInvertible()) return;
    Vector xb = lu.solve(b_);
    for (Index i = 0; i < m_; ++i) {
      double v = xb(i);
      if (std::abs(v) < 1e-13) v = 0.0;
      t_(i, ncols_) = v;
    }
  }

  void set_objective() {
    const Index nv = static_cast<Index>(lp_.num_vars);
    Vector c = Vector::Zero(ncols_);
    for (Index j = 0; j < nv; ++j) {
      c(j) = lp_.objective[static_cast<std::size_t>(j)];
      c(nv + j) = -lp_.objective[static_cast<std::size_t>(j)];
    }
    for (Index j = 0; j <= ncols_; ++j) {
      double r = (j < ncols_) ? c(j) : 0.0;
      for (Index i = 0; i < m_; ++i) r -= c(basis_[static_cast<std::size_t>(i)]) * t_(i, j);
      t_(m_, j) = r;
    }
  }

  Vector extract() const {
    const Index nv = static_cast<Index>(lp_.num_vars);
    Vector full = Vector::Zero(ncols_);
    for (Index i = 0; i < m_; ++i) full(basis_[static_cast<std::size_t>(i)]) = t_(i, ncols_);
    return full.head(nv) - full.segment(nv, nv);
  }

  const LinearProgram& lp_;
  std::size_t max_pivots_;
  std::size_t pivots_ = 0;
  Index m_ = 0, ncols_ = 0, art0_ = 0;
  double feas_tol_ = 1e-10;
  RowMat t_, a_;
  Vector b_;
  std::vector<Index> basis_;
};

}  // namespace detail

inline LpResult lp_solve(const LinearProgram& lp, std::size_t max_pivots = 1000000) {
  for (const auto& c : lp.constraints)
    if (c.coef.size() != lp.num_vars) throw Error(ErrorKind::ShapeMismatch, "constraint length differs from num_vars");
  if (lp.constraints.empty()) {
    LpResult r;
    r.status = LpStatus::Optimal;
    r.x = Vector::Zero(static_cast<Index>(lp.num_vars));
    return r;
  }
  detail::Simplex s(lp, max_pivots);
  return s.solve();
}

inline std::optional<Vector> lp_feasible(const LinearProgram& lp) {
  LinearProgram plain = lp;
  plain.objective.clear();
  LpResult r = lp_solve(plain);
  if (r.status == LpStatus::Infeasible) return std::nullopt;
  if (!lp_satisfies(lp, r.x, eq_tol)) return std::nullopt;
  return r.x;
}

}  // namespace relurec
