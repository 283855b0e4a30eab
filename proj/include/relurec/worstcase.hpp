#pragma once

#include <optional>
#include <vector>

#include "model.hpp"
#include "signpat.hpp"

namespace relurec {

struct IterativeState {
  std::vector<RowVector> accepted;  // y^1 .. y^{i-1}
  Matrix projector_complement;      // I - P onto span f(y^j)

  static IterativeState empty(Index n) { return {{}, Matrix::Identity(n, n)}; }

  void accept(const RowVector& y) {
    accepted.push_back(y);
    Matrix f(static_cast<Index>(accepted.size()), y.size());
    for (Index i = 0; i < f.rows(); ++i) f.row(i) = accepted[static_cast<std::size_t>(i)].cwiseMax(0.0);
    projector_complement = Matrix::Identity(y.size(), y.size()) - projector(f);
  }
};

struct IterativePick {
  RowVector y;  // y = w X
  RowVector w;
  RowVector z;  // f_S(y) = z V'
};

namespace detail {

inline LinearProgram pattern_lp(const Matrix& x, const Matrix& vb, const SignPattern& s) {
  const Index d = x.rows(), n = x.cols(), k = vb.rows();
  LinearProgram lp(static_cast<std::size_t>(d + k));
  auto mask = s.mask();
  Vector coef(d + k);
  for (Index j = 0; j < n; ++j) {
    bool in = mask[static_cast<std::size_t>(j)];
    coef.head(d) = x.col(j);
    coef.tail(k).setZero();
    lp.add(coef, in ? Relation::GreaterEq : Relation::LessEq, in ? 1.0 : 0.0);
    // f_S(y) = z V'
    if (in) coef.tail(k) = -vb.col(j);
    else {
      coef.head(d).setZero();
      coef.tail(k) = vb.col(j);
    }
    lp.add(coef, Relation::Equal, 0.0);
  }
  return lp;
}

}  // namespace detail

// One step of the iterative LP, linearised into 2n LPs over the coordinates of f_S(y)(I - P).
inline std::optional<IterativePick> iterative_lp(const Matrix& x, const Matrix& v_basis, const SignPattern& s,
                                                 const IterativeState& state) {
  const Index d = x.rows(), n = x.cols(), k = v_basis.rows();
  LinearProgram base = detail::pattern_lp(x, v_basis, s);
  if (!lp_feasible(base)) return std::nullopt;
  Matrix g = v_basis * state.projector_complement;  // z g = f_S(y)(I - P)
  const double gscale = g.norm();
  if (gscale == 0.0) return std::nullopt;
  for (Index t = 0; t < n; ++t) {
    if (g.col(t).norm() <= 1e-12 * gscale) continue;
    for (int sgn : {1, -1}) {
      LinearProgram lp = base;
      Vector coef = Vector::Zero(d + k);
      coef.tail(k) = g.col(t);
      lp.add(coef, sgn > 0 ? Relation::GreaterEq : Relation::LessEq, static_cast<double>(sgn));
      if (auto sol = lp_feasible(lp)) {
        IterativePick p;
        p.w = sol->head(d).transpose();
        p.z = sol->tail(k).transpose();
        p.y = p.w * x;
        return p;
      }
    }
  }
  return std::nullopt;
}

struct WorstCaseOptions {
  std::size_t pattern_budget = 1000000;
  std::size_t lp_budget = 2000000;
  double accept_rel = 1e-6;
};

namespace detail {

struct WorstCaseSearch {
  const Matrix& a;
  const Matrix& x;
  const Matrix& vb;
  const std::vector<SignPattern>& patterns;
  Index k;
  WorstCaseOptions opt;
  std::size_t calls = 0;
  std::vector<RowVector> ws;
  std::optional<NetworkWeights> found;

  bool finish() {
    Matrix v(k, x.rows());
    for (Index i = 0; i < k; ++i) v.row(i) = ws[static_cast<std::size_t>(i)];
    Matrix fy = (v * x).cwiseMax(0.0);
    LinearSolve us = solve_rows(fy, a);
    NetworkWeights w{us.solution, v};
    w = canonicalize(w, Activation::relu());
    double res = (a - w.u * (w.v * x).cwiseMax(0.0)).norm();
    if (res <= opt.accept_rel * a.norm()) {
      found = w;
      return true;
    }
    return false;
  }

  bool dfs(std::size_t start, IterativeState& state) {
    if (static_cast<Index>(ws.size()) == k) return finish();
    for (std::size_t p = start; p < patterns.size(); ++p) {
      if (++calls > opt.lp_budget) throw Error(ErrorKind::BudgetExceeded, "worst-case search exceeded its LP budget");
      auto pick = iterative_lp(x, vb, patterns[p], state);
      if (!pick) continue;
      IterativeState next = state;
      next.accept(pick->y);
      ws.push_back(pick->w);
      if (dfs(p + 1, next)) return true;
      ws.pop_back();
    }
    return false;
  }
};

}  // namespace detail

inline NetworkWeights exact_neural_net(const Matrix& a, const Matrix& x, Index k, const WorstCaseOptions& opt = {}) {
  if (a.cols() != x.cols()) throw Error(ErrorKind::ShapeMismatch, "A and X have different column counts");
  Index r = matrix_rank(a);
  if (r < k) throw Error(ErrorKind::RankDeficientA, "rank(A) is below k");
  auto rows = independent_rows(a, k);
  Matrix vb(k, a.cols());
  for (Index i = 0; i < k; ++i) vb.row(i) = a.row(rows[static_cast<std::size_t>(i)]);
  std::vector<SignPattern> patterns;
  for (auto& s : enumerate_subspace_patterns(vb))
    if (!s.empty()) patterns.push_back(s);
  if (patterns.size() > opt.pattern_budget) throw Error(ErrorKind::BudgetExceeded, "pattern set too large");
  detail::WorstCaseSearch search{a, x, vb, patterns, k, opt, 0, {}, std::nullopt};
  IterativeState st = IterativeState::empty(a.cols());
  if (!search.dfs(0, st)) throw Error(ErrorKind::NoRealization, "no sign-pattern assignment factors A");
  return *search.found;
}

}  // namespace relurec
