#include <gtest/gtest.h>

#include <relurec/eval.hpp>

#include <algorithm>
#include <sstream>

using namespace relurec;

namespace {

double brute_assignment(const Matrix& c) {
  std::vector<Index> p(static_cast<std::size_t>(c.rows()));
  std::iota(p.begin(), p.end(), Index{0});
  double best = 1e300;
  do {
    double s = 0;
    for (Index i = 0; i < c.rows(); ++i) s += c(i, p[static_cast<std::size_t>(i)]);
    best = std::min(best, s);
  } while (std::next_permutation(p.begin(), p.end()));
  return best;
}

}  // namespace

TEST(Hungarian, MatchesBruteForce) {
  SeedStream st(71);
  for (int t = 0; t < 30; ++t) {
    Index k = 2 + t % 6;
    Matrix c = gaussian_matrix(k, k, 0.0, 1.0, st).cwiseAbs();
    auto p = hungarian(c);
    double s = 0;
    for (Index i = 0; i < k; ++i) s += c(i, p[static_cast<std::size_t>(i)]);
    EXPECT_NEAR(s, brute_assignment(c), 1e-12);
  }
}

TEST(MatchWeights, PermutationAndSign) {
  NetworkWeights truth;
  truth.u = Matrix::Identity(2, 2);
  truth.v = Matrix::Identity(2, 3);
  NetworkWeights got;
  got.u = truth.u.rowwise().reverse();
  got.v = truth.v.colwise().reverse();
  auto m = match_weights(got, truth);
  EXPECT_EQ(m.permutation, (std::vector<Index>{1, 0}));
  EXPECT_NEAR(m.v_error, 0.0, 1e-15);
  EXPECT_NEAR(m.u_error, 0.0, 1e-15);

  got.v.row(0) *= -1.0;
  auto plain = match_weights(got, truth);
  EXPECT_NEAR(plain.v_error, 2.0, 1e-15);
  MatchOptions mo;
  mo.sign_aware = true;
  auto aware = match_weights(got, truth, Activation::relu(), mo);
  EXPECT_NEAR(aware.v_error, 0.0, 1e-15);
  EXPECT_EQ(aware.xi, (std::vector<int>{1, -1}));
}

TEST(FunctionalError, Examples) {
  NetworkWeights w{Matrix::Ones(1, 1), Matrix::Ones(1, 1)};
  Matrix x(1, 2);
  x << 1, -1;
  Matrix a(1, 2);
  a << 1, 0;
  auto fe = functional_error(a, w, x);
  EXPECT_EQ(fe.first, 0.0);
  a << 4, 0;
  fe = functional_error(a, w, x);
  EXPECT_DOUBLE_EQ(fe.first, 3.0);
  EXPECT_DOUBLE_EQ(fe.second, 0.75);
  EXPECT_THROW(functional_error(Matrix::Ones(2, 2), w, x), Error);
}

TEST(Kappa, InstancesDifferOnlyInTheWedge) {
  auto p = kappa_instances(0.1);
  EXPECT_NEAR(p.first.v.row(0).norm(), 1.0, 1e-15);
  EXPECT_NEAR(p.second.v(0, 1) / p.second.v(0, 0), 0.2, 1e-15);
  // the two networks agree wherever |x1| >= 2a|x2|
  Vector x(2);
  x << 1.0, 1.0;
  auto out = [](const NetworkWeights& w, const Vector& v) { return (w.u * (w.v * v).cwiseMax(0.0))(0); };
  EXPECT_NEAR(out(p.first, x), out(p.second, x), 1e-12);
  x << 0.1, 1.0;
  EXPECT_GT(std::abs(out(p.first, x) - out(p.second, x)), 1e-3);
  EXPECT_THROW(kappa_instances(0.0), Error);
}

TEST(Kappa, ProbeMatchesWedgeProbability) {
  SeedStream st(72);
  for (double a : {0.01, 0.1}) {
    // P(|x1| < 2a|x2|) for iid standard normals
    double want = 2.0 / M_PI * std::atan(2.0 * a);
    EXPECT_NEAR(kappa_probe(a, 200000, st), want, 0.005);
  }
}

TEST(Report, Format) {
  MatchResult r;
  r.v_error = 0.5;
  r.row_errors = {0.25};
  r.permutation = {0};
  std::ostringstream os;
  write_report(os, r);
  EXPECT_NE(os.str().find("v_error 0.5\n"), std::string::npos);
  EXPECT_NE(os.str().find("row_error_0 0.25\n"), std::string::npos);
  EXPECT_NE(os.str().find("permutation 0\n"), std::string::npos);
}
