#pragma once

#include <algorithm>
#include <cstddef>
#include <set>
#include <string>
#include <vector>

#include "numerics.hpp"

namespace relurec {

// Coordinates (0-based) where a vector is strictly positive.
struct SignPattern {
  std::size_t length = 0;
  std::vector<std::size_t> positives;

  std::size_t size() const { return positives.size(); }
  bool empty() const { return positives.empty(); }
  bool contains(std::size_t j) const { return std::binary_search(positives.begin(), positives.end(), j); }

  std::vector<char> mask() const {
    std::vector<char> m(length, 0);
    for (auto j : positives) m[j] = 1;
    return m;
  }

  std::vector<std::size_t> complement() const {
    std::vector<std::size_t> out;
    auto m = mask();
    for (std::size_t j = 0; j < length; ++j)
      if (!m[j]) out.push_back(j);
    return out;
  }

  std::string str() const {
    std::string s = "{";
    for (std::size_t i = 0; i < positives.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(positives[i] + 1);
    }
    return s + "}";
  }

  friend bool operator==(const SignPattern& a, const SignPattern& b) {
    return a.length == b.length && a.positives == b.positives;
  }
  // ascending cardinality, then lexicographic
  friend bool operator<(const SignPattern& a, const SignPattern& b) {
    if (a.positives.size() != b.positives.size()) return a.positives.size() < b.positives.size();
    if (a.positives != b.positives) return a.positives < b.positives;
    return a.length < b.length;
  }
};

inline SignPattern make_pattern(std::size_t length, std::vector<std::size_t> pos) {
  std::sort(pos.begin(), pos.end());
  pos.erase(std::unique(pos.begin(), pos.end()), pos.end());
  for (auto j : pos)
    if (j >= length) throw Error(ErrorKind::InvalidShape, "pattern index out of range");
  return {length, std::move(pos)};
}

template <typename Derived>
SignPattern sign_pattern(const Eigen::MatrixBase<Derived>& v, double tol = 0.0) {
  SignPattern p;
  p.length = static_cast<std::size_t>(v.size());
  for (Index j = 0; j < v.size(); ++j)
    if (v(j) > tol) p.positives.push_back(static_cast<std::size_t>(j));
  return p;
}

// LP {(w B)_j >= 1 on S, (w B)_j <= 0 off S}; returns a witness w when feasible.
inline std::optional<Vector> pattern_witness(const Matrix& basis, const SignPattern& s) {
  const Index k = basis.rows(), n = basis.cols();
  LinearProgram lp(static_cast<std::size_t>(k));
  auto m = s.mask();
  for (Index j = 0; j < n; ++j) {
    if (m[static_cast<std::size_t>(j)]) lp.add(basis.col(j), Relation::GreaterEq, 1.0);
    else lp.add(basis.col(j), Relation::LessEq, 0.0);
  }
  return lp_feasible(lp);
}

inline double binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0.0;
  double r = 1.0;
  for (std::size_t i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return r;
}

inline constexpr double subset_budget = 1e7;

// All sign patterns {j : (w B)_j > 0} realisable with the ">= 1 / <= 0" normalisation.
inline std::vector<SignPattern> enumerate_subspace_patterns(const Matrix& basis) {
  const Index k = basis.rows(), n = basis.cols();
  if (k < 1 || matrix_rank(basis) != k) throw Error(ErrorKind::RankDeficientBasis, "basis must have full row rank");
  const std::size_t nc = static_cast<std::size_t>(2 * n);
  if (binomial(nc, static_cast<std::size_t>(k)) > subset_budget)
    throw Error(ErrorKind::BudgetExceeded, "too many tight-constraint subsets");

  std::set<SignPattern> candidates;
  candidates.insert(SignPattern{static_cast<std::size_t>(n), {}});
  std::vector<std::size_t> pick(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < pick.size(); ++i) pick[i] = i;
  Matrix sys(k, k);
  RowVector rhs(k);
  while (true) {
    bool usable = true;
    for (Index i = 0; i < k; ++i) {
      std::size_t c = pick[static_cast<std::size_t>(i)];
      // constraint c targets coordinate c/2 with value 1 (even) or 0 (odd)
      if (i > 0 && c / 2 == pick[static_cast<std::size_t>(i - 1)] / 2) usable = false;
      sys.col(i) = basis.col(static_cast<Index>(c / 2));
      rhs(i) = (c % 2 == 0) ? 1.0 : 0.0;
    }
    if (usable) {
      Eigen::FullPivLU<Matrix> lu(sys.transpose());
      lu.setThreshold(1e-10);
      if (lu.isInvertible()) {
        Vector w = lu.solve(rhs.transpose());
        RowVector y = w.transpose() * basis;
        // vertices of a pattern's polytope take values >= 1 or <= 0, so 1/2 separates them
        candidates.insert(sign_pattern(y, 0.5));
      }
    }
    // next k-subset in lexicographic order
    Index i = k - 1;
    while (i >= 0 && pick[static_cast<std::size_t>(i)] == nc - static_cast<std::size_t>(k - i)) --i;
    if (i < 0) break;
    ++pick[static_cast<std::size_t>(i)];
    for (Index j = i + 1; j < k; ++j) pick[static_cast<std::size_t>(j)] = pick[static_cast<std::size_t>(j - 1)] + 1;
  }

  std::vector<SignPattern> out;
  for (const auto& s : candidates) {
    if (s.empty() || pattern_witness(basis, s)) out.push_back(s);
  }
  return out;
}

}  // namespace relurec
