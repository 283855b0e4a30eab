#include <gtest/gtest.h>

#include <relurec/numerics.hpp>

using namespace relurec;

TEST(Svd, IdentityHasUnitSingularValues) {
  auto s = svd(Matrix::Identity(3, 3));
  for (Index i = 0; i < 3; ++i) EXPECT_NEAR(s.singular_values(i), 1.0, 1e-15);
  EXPECT_EQ(s.rank(), 3);
}

TEST(Svd, DiagonalWithZeroHasRankOne) {
  Matrix a = Matrix::Zero(2, 2);
  a(0, 0) = 3.0;
  auto s = svd(a);
  EXPECT_NEAR(s.singular_values(0), 3.0, 1e-15);
  EXPECT_NEAR(s.singular_values(1), 0.0, 1e-15);
  EXPECT_EQ(s.rank(1e-9), 1);
}

TEST(Svd, ReconstructsRandomMatrix) {
  SeedStream st(11);
  Matrix a = gaussian_matrix(5, 3, 0.0, 1.0, st);
  auto s = svd(a);
  Matrix back = s.left * s.singular_values.asDiagonal() * s.right;
  EXPECT_LE((back - a).norm(), 1e-10 * a.norm());
  for (Index i = 1; i < s.singular_values.size(); ++i) EXPECT_GE(s.singular_values(i - 1), s.singular_values(i));
}

TEST(CondNumber, Examples) {
  EXPECT_NEAR(cond_number(Matrix::Identity(3, 3)), 1.0, 1e-12);
  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 4;
  d(1, 1) = 2;
  EXPECT_NEAR(cond_number(d), 2.0, 1e-12);
  // rows (1, +-a)/sqrt(1+a^2) have singular values sqrt(2)/sqrt(1+a^2) * (1, a)
  const double a = 0.1, s = std::sqrt(1 + a * a);
  Matrix v(2, 2);
  v << 1 / s, a / s, 1 / s, -a / s;
  EXPECT_NEAR(cond_number(v), 10.0, 1e-10);
  EXPECT_THROW(cond_number(Matrix::Zero(2, 2)), Error);
}

TEST(Pinv, Examples) {
  EXPECT_LE((pinv(Matrix::Identity(3, 3)) - Matrix::Identity(3, 3)).norm(), 1e-14);
  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 2;
  Matrix p = pinv(d);
  EXPECT_NEAR(p(0, 0), 0.5, 1e-15);
  EXPECT_NEAR(p(1, 1), 0.0, 1e-15);
  SeedStream st(3);
  Matrix a = gaussian_matrix(4, 2, 0.0, 1.0, st);
  EXPECT_LE((pinv(a) * a - Matrix::Identity(2, 2)).norm(), 1e-8);
}

TEST(Pinv, MoorePenroseIdentities) {
  SeedStream st(5);
  Matrix a = gaussian_matrix(5, 3, 0.0, 1.0, st);
  Matrix p = pinv(a);
  EXPECT_LE((a * p * a - a).norm(), 1e-8);
  EXPECT_LE((p * a * p - p).norm(), 1e-8);
  EXPECT_LE(((a * p).transpose() - a * p).norm(), 1e-8);
  EXPECT_LE(((p * a).transpose() - p * a).norm(), 1e-8);
}

TEST(Projector, Examples) {
  Matrix e1 = Matrix::Zero(1, 3);
  e1(0, 0) = 1;
  Matrix p = projector(e1);
  Matrix want = Matrix::Zero(3, 3);
  want(0, 0) = 1;
  EXPECT_LE((p - want).norm(), 1e-14);
  SeedStream st(9);
  Matrix full = gaussian_matrix(2, 2, 0.0, 1.0, st);
  EXPECT_LE((projector(full) - Matrix::Identity(2, 2)).norm(), 1e-12);
  Matrix r = gaussian_matrix(2, 5, 0.0, 1.0, st);
  Matrix q = projector(r);
  EXPECT_LE((q * q - q).norm(), 1e-8);
  EXPECT_LE((q * r.transpose() - r.transpose()).norm(), 1e-8);
  EXPECT_LE(projector(Matrix::Zero(2, 4)).norm(), 0.0);
}

TEST(SolveExact, Examples) {
  Vector v(3);
  v << 1, -2, 3;
  auto s = solve_exact(Matrix::Identity(3, 3), v);
  EXPECT_LE((s.solution - v).norm(), 1e-15);
  EXPECT_LE(s.residual, 1e-15);

  Matrix a(3, 1);
  a << 1, 1, 1;
  Vector b(3);
  b << 0, 1, 5;
  auto ls = solve_exact(a, b);
  EXPECT_NEAR(ls.solution(0, 0), 2.0, 1e-12);  // mean of b
  EXPECT_GT(ls.residual, eq_tol);

  SeedStream st(21);
  Matrix sq = gaussian_matrix(4, 4, 0.0, 1.0, st);
  Vector x0 = gaussian_matrix(4, 1, 0.0, 1.0, st);
  auto ex = solve_exact(sq, sq * x0);
  EXPECT_LE((ex.solution - x0).norm(), 1e-9);
}

TEST(LpFeasible, Examples) {
  LinearProgram none(1);
  none.add(std::vector<double>{1}, Relation::GreaterEq, 1);
  none.add(std::vector<double>{1}, Relation::LessEq, 0);
  EXPECT_FALSE(lp_feasible(none).has_value());

  LinearProgram one(1);
  one.add(std::vector<double>{1}, Relation::GreaterEq, 1);
  auto p = lp_feasible(one);
  ASSERT_TRUE(p.has_value());
  EXPECT_GE((*p)(0), 1 - eq_tol);

  LinearProgram two(2);
  two.add(std::vector<double>{1, 1}, Relation::GreaterEq, 1);
  two.add(std::vector<double>{1, -1}, Relation::Equal, 0);
  auto q = lp_feasible(two);
  ASSERT_TRUE(q.has_value());
  EXPECT_NEAR((*q)(0), (*q)(1), eq_tol);
  EXPECT_GE((*q)(0), 0.5 - eq_tol);
}

TEST(LpFeasible, FreeVariablesAndNegativeRhs) {
  LinearProgram lp(2);
  lp.add(std::vector<double>{1, 0}, Relation::LessEq, -3);
  lp.add(std::vector<double>{0, 1}, Relation::GreaterEq, -1);
  lp.add(std::vector<double>{1, 1}, Relation::Equal, -2);
  auto p = lp_feasible(lp);
  ASSERT_TRUE(p.has_value());
  EXPECT_TRUE(lp_satisfies(lp, *p));
}

TEST(LpFeasible, RandomFeasibleSystemsSatisfyEveryConstraint) {
  SeedStream st(77);
  for (int trial = 0; trial < 50; ++trial) {
    const Index nv = 1 + static_cast<Index>(st.uniform_index(5));
    Vector x0 = gaussian_matrix(nv, 1, 0.0, 2.0, st);
    LinearProgram lp(static_cast<std::size_t>(nv));
    const int nc = 1 + static_cast<int>(st.uniform_index(8));
    for (int c = 0; c < nc; ++c) {
      Vector coef = gaussian_matrix(nv, 1, 0.0, 1.0, st);
      double v = coef.dot(x0);
      int kind = static_cast<int>(st.uniform_index(3));
      if (kind == 0) lp.add(coef, Relation::LessEq, v + st.uniform());
      else if (kind == 1) lp.add(coef, Relation::GreaterEq, v - st.uniform());
      else lp.add(coef, Relation::Equal, v);
    }
    auto p = lp_feasible(lp);
    ASSERT_TRUE(p.has_value()) << "trial " << trial;
    EXPECT_TRUE(lp_satisfies(lp, *p));
  }
}

TEST(GaussianMatrix, Examples) {
  SeedStream a(4), b(4);
  Matrix c = gaussian_matrix(3, 3, 2.5, 0.0, a);
  EXPECT_TRUE((c.array() == 2.5).all());
  SeedStream s1(8), s2(8);
  Matrix m1 = gaussian_matrix(4, 5, 0.0, 1.0, s1), m2 = gaussian_matrix(4, 5, 0.0, 1.0, s2);
  EXPECT_TRUE((m1.array() == m2.array()).all());

  SeedStream st(99);
  const double mean = 1.5, sd = 2.0;
  Matrix big = gaussian_matrix(1, 100000, mean, sd, st);
  double mu = big.mean();
  double var = (big.array() - mu).square().sum() / (big.size() - 1);
  const double n = static_cast<double>(big.size());
  EXPECT_LE(std::abs(mu - mean), 3 * sd / std::sqrt(n));
  EXPECT_LE(std::abs(var - sd * sd), 3 * sd * sd * std::sqrt(2.0 / n));
}

TEST(SeedStream, ChildrenAreIndependentOfCallOrder) {
  SeedStream s(1);
  SeedStream c1 = s.child("x");
  SeedStream c2 = s.child("x");
  EXPECT_EQ(c1.at(0), c2.at(0));
  s.next_u64();
  EXPECT_NE(s.child("x").at(0), c1.at(0));
  EXPECT_NE(SeedStream(1).child("x").at(0), SeedStream(1).child("y").at(0));
}
