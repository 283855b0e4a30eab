#include <gtest/gtest.h>

#include <relurec/signpat.hpp>

#include <set>

using namespace relurec;

namespace {

std::set<SignPattern> as_set(const std::vector<SignPattern>& v) { return {v.begin(), v.end()}; }

// Monte-Carlo oracle: patterns of w * basis for random w, scaled so that the pattern is stable.
std::set<SignPattern> sampled(const Matrix& basis, int draws, SeedStream& st) {
  std::set<SignPattern> out;
  out.insert(SignPattern{static_cast<std::size_t>(basis.cols()), {}});
  for (int s = 0; s < draws; ++s) {
    Vector w = gaussian_matrix(basis.rows(), 1, 0.0, 1.0, st);
    out.insert(sign_pattern(RowVector(w.transpose() * basis), 0.0));
  }
  return out;
}

}  // namespace

TEST(SignPattern, Examples) {
  Vector v(3);
  v << 0.5, -1, 2;
  EXPECT_EQ(sign_pattern(v, 0.0).positives, (std::vector<std::size_t>{0, 2}));
  EXPECT_TRUE(sign_pattern(Vector::Zero(4)).empty());
  Vector w(2);
  w << 1e-12, 1;
  EXPECT_EQ(sign_pattern(w, 1e-9).positives, (std::vector<std::size_t>{1}));
  EXPECT_EQ(sign_pattern(v).str(), "{1,3}");
  EXPECT_THROW(make_pattern(3, {3}), Error);
  EXPECT_EQ(make_pattern(4, {2, 0, 2}).positives, (std::vector<std::size_t>{0, 2}));
}

TEST(EnumeratePatterns, OneDimensionalExamples) {
  Matrix b(1, 3);
  b << 1, -1, 2;
  auto got = as_set(enumerate_subspace_patterns(b));
  std::set<SignPattern> want = {make_pattern(3, {}), make_pattern(3, {0, 2}), make_pattern(3, {1})};
  EXPECT_EQ(got, want);

  // dense grid of scalars as the oracle
  std::set<SignPattern> grid;
  for (int i = -500; i <= 500; ++i) grid.insert(sign_pattern(RowVector((i / 100.0) * b), 0.0));
  EXPECT_EQ(got, grid);

  Matrix ones(1, 2);
  ones << 1, 1;
  std::set<SignPattern> want2 = {make_pattern(2, {}), make_pattern(2, {0, 1})};
  EXPECT_EQ(as_set(enumerate_subspace_patterns(ones)), want2);
}

TEST(EnumeratePatterns, TwoDimensionalMatchesMonteCarlo) {
  SeedStream st(12);
  Matrix b = gaussian_matrix(2, 5, 0.0, 1.0, st);
  auto got = as_set(enumerate_subspace_patterns(b));
  EXPECT_EQ(got, sampled(b, 1000000, st));
  EXPECT_LE(got.size(), binomial(10, 2) + 1);
}

TEST(EnumeratePatterns, RankDeficientBasis) {
  Matrix b(2, 3);
  b << 1, 2, 3, 2, 4, 6;
  try {
    enumerate_subspace_patterns(b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::RankDeficientBasis);
  }
}

TEST(EnumeratePatterns, BudgetGuard) {
  SeedStream st(13);
  Matrix b = gaussian_matrix(6, 200, 0.0, 1.0, st);
  EXPECT_THROW(enumerate_subspace_patterns(b), Error);
}

TEST(PatternWitness, FeasibleAndInfeasible) {
  Matrix b(1, 3);
  b << 1, -1, 2;
  auto w = pattern_witness(b, make_pattern(3, {0, 2}));
  ASSERT_TRUE(w.has_value());
  RowVector y = w->transpose() * b;
  EXPECT_GE(y(0), 1 - eq_tol);
  EXPECT_GE(y(2), 1 - eq_tol);
  EXPECT_LE(y(1), eq_tol);
  EXPECT_FALSE(pattern_witness(b, make_pattern(3, {0, 1})).has_value());
}
