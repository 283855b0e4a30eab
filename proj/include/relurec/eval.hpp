#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "model.hpp"

namespace relurec {

struct MatchResult {
  std::vector<Index> permutation;  // got row permutation[i] matches truth row i
  std::vector<double> row_errors;
  std::vector<int> xi;  // +1 unless sign-aware matching flipped the row
  double u_error = 0.0;
  double v_error = 0.0;
  double functional_error = 0.0;
  double functional_rel = 0.0;
};

struct MatchOptions {
  bool sign_aware = false;
  const Matrix* x = nullptr;  // enables the functional metrics
  const Matrix* a = nullptr;  // reference output; defaults to U* f(V* X)
};

// Minimum-cost assignment on a square cost matrix: result[i] = column given to row i.
inline std::vector<Index> hungarian(const Matrix& cost) {
  const Index n = cost.rows();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(static_cast<std::size_t>(n + 1), 0.0), v(static_cast<std::size_t>(n + 1), 0.0);
  std::vector<Index> p(static_cast<std::size_t>(n + 1), 0), way(static_cast<std::size_t>(n + 1), 0);
  for (Index i = 1; i <= n; ++i) {
    p[0] = i;
    Index j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n + 1), inf);
    std::vector<char> used(static_cast<std::size_t>(n + 1), 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      Index i0 = p[static_cast<std::size_t>(j0)], j1 = 0;
      double delta = inf;
      for (Index j = 1; j <= n; ++j) {
        auto sj = static_cast<std::size_t>(j);
        if (used[sj]) continue;
        double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] - v[sj];
        if (cur < minv[sj]) {
          minv[sj] = cur;
          way[sj] = j0;
        }
        if (minv[sj] < delta) {
          delta = minv[sj];
          j1 = j;
        }
      }
      for (Index j = 0; j <= n; ++j) {
        auto sj = static_cast<std::size_t>(j);
        if (used[sj]) {
          u[static_cast<std::size_t>(p[sj])] += delta;
          v[sj] -= delta;
        } else {
          minv[sj] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      Index j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0);
  }
  std::vector<Index> out(static_cast<std::size_t>(n));
  for (Index j = 1; j <= n; ++j) out[static_cast<std::size_t>(p[static_cast<std::size_t>(j)] - 1)] = j - 1;
  return out;
}

inline std::pair<double, double> functional_error(const Matrix& a, const NetworkWeights& w, const Matrix& x,
                                                  const Activation& f = Activation::relu()) {
  if (w.v.cols() != x.rows() || w.u.cols() != w.v.rows() || a.rows() != w.u.rows() || a.cols() != x.cols())
    throw Error(ErrorKind::ShapeMismatch, "functional_error shapes");
  double abs = (a - w.u * apply_activation(f, w.v * x)).norm();
  double an = a.norm();
  return {abs, an > 0 ? abs / an : abs};
}

inline MatchResult match_weights(const NetworkWeights& got, const NetworkWeights& truth,
                                 const Activation& f = Activation::relu(), const MatchOptions& opt = {}) {
  const Index k = truth.v.rows();
  if (got.v.rows() != k || got.v.cols() != truth.v.cols() || got.u.rows() != truth.u.rows() ||
      got.u.cols() != got.v.rows() || truth.u.cols() != k)
    throw Error(ErrorKind::ShapeMismatch, "match_weights shapes");
  // cost[i][j]: truth row i against got row j
  Matrix cost(k, k);
  std::vector<std::vector<int>> sgn(static_cast<std::size_t>(k), std::vector<int>(static_cast<std::size_t>(k), 1));
  for (Index i = 0; i < k; ++i)
    for (Index j = 0; j < k; ++j) {
      double plus = (got.v.row(j) - truth.v.row(i)).norm();
      double minus = (got.v.row(j) + truth.v.row(i)).norm();
      if (opt.sign_aware && minus < plus) {
        cost(i, j) = minus;
        sgn[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = -1;
      } else {
        cost(i, j) = plus;
      }
    }
  std::vector<Index> perm(static_cast<std::size_t>(k));
  if (k <= 8) {
    std::vector<Index> cur(static_cast<std::size_t>(k));
    std::iota(cur.begin(), cur.end(), Index{0});
    double best = std::numeric_limits<double>::infinity();
    do {
      double c = 0;
      for (Index i = 0; i < k; ++i) c += cost(i, cur[static_cast<std::size_t>(i)]);
      if (c < best) {
        best = c;
        perm = cur;
      }
    } while (std::next_permutation(cur.begin(), cur.end()));
  } else {
    perm = hungarian(cost);
  }

  MatchResult r;
  r.permutation = perm;
  Matrix vm(k, got.v.cols()), um(got.u.rows(), k);
  for (Index i = 0; i < k; ++i) {
    Index j = perm[static_cast<std::size_t>(i)];
    int s = sgn[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    r.xi.push_back(s);
    vm.row(i) = s * got.v.row(j);
    um.col(i) = got.u.col(j);
    r.row_errors.push_back(cost(i, j));
  }
  r.v_error = (vm - truth.v).norm();
  r.u_error = (um - truth.u).norm();
  if (opt.x) {
    Matrix ref = opt.a ? *opt.a : Matrix(truth.u * apply_activation(f, truth.v * *opt.x));
    auto fe = functional_error(ref, got, *opt.x, f);
    r.functional_error = fe.first;
    r.functional_rel = fe.second;
  }
  return r;
}

inline double max_row_error(const MatchResult& r) {
  return r.row_errors.empty() ? 0.0 : *std::max_element(r.row_errors.begin(), r.row_errors.end());
}

// Two networks whose outputs differ only on columns with |x_1| < 2a|x_2|.
struct KappaPair {
  NetworkWeights first, second;
};

inline KappaPair kappa_instances(double a) {
  if (!(a > 0.0 && a <= 1.0)) throw Error(ErrorKind::InvalidShape, "kappa probe needs 0 < a <= 1");
  auto build = [](double b) {
    double s = std::sqrt(1.0 + b * b);
    NetworkWeights w;
    w.u = Matrix::Constant(1, 2, s / 2.0);
    w.v.resize(2, 2);
    w.v << 1.0 / s, b / s, 1.0 / s, -b / s;
    return w;
  };
  return {build(a), build(2.0 * a)};
}

inline double kappa_probe(double a_param, Index n, SeedStream& stream) {
  KappaPair p = kappa_instances(a_param);
  Matrix x = gaussian_matrix(2, n, 0.0, 1.0, stream);
  Matrix a1 = p.first.u * (p.first.v * x).cwiseMax(0.0);
  Matrix a2 = p.second.u * (p.second.v * x).cwiseMax(0.0);
  Index diff = 0;
  for (Index j = 0; j < n; ++j)
    if (std::abs(a1(0, j) - a2(0, j)) > 1e-12) ++diff;
  return n ? static_cast<double>(diff) / static_cast<double>(n) : 0.0;
}

// One metric per line: name value.
inline void write_report(std::ostream& os, const MatchResult& r) {
  auto put = [&](const std::string& name, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << name << ' ' << buf << '\n';
  };
  put("v_error", r.v_error);
  put("u_error", r.u_error);
  put("functional_error", r.functional_error);
  put("functional_rel", r.functional_rel);
  for (std::size_t i = 0; i < r.row_errors.size(); ++i) put("row_error_" + std::to_string(i), r.row_errors[i]);
  std::string perm;
  for (std::size_t i = 0; i < r.permutation.size(); ++i) perm += (i ? "," : "") + std::to_string(r.permutation[i]);
  os << "permutation " << perm << '\n';
}

}  // namespace relurec
