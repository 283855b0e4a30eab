#include <gtest/gtest.h>

#include <relurec/model.hpp>

#include <cmath>
#include <sstream>

using namespace relurec;

TEST(Activation, Forward) {
  Matrix m(2, 2);
  m << 1, -1, 0, 2;
  Matrix want(2, 2);
  want << 1, 0, 0, 2;
  EXPECT_EQ(apply_activation(Activation::relu(), m), want);
  EXPECT_DOUBLE_EQ(Activation::power(2).forward(3.0), 9.0);
  EXPECT_EQ(Activation::expm1().forward(-5.0), 0.0);
}

TEST(Activation, InverseRoundTrip) {
  for (auto f : {Activation::relu(), Activation::power(2), Activation::power(0.5), Activation::expm1()}) {
    for (double x = 0.01; x < 100; x *= 1.7) {
      EXPECT_NEAR(f.inverse_positive(f.forward(x)), x, 1e-9 * std::max(1.0, x)) << f.label;
      EXPECT_GT(f.forward(x), 0.0);
    }
    EXPECT_EQ(f.forward(0.0), 0.0);
    EXPECT_EQ(f.forward(-3.0), 0.0);
  }
}

TEST(Activation, FromName) {
  EXPECT_EQ(activation_from_name("relu").kind, ActivationKind::Relu);
  auto p = activation_from_name("power(3)");
  EXPECT_EQ(p.kind, ActivationKind::Power);
  EXPECT_DOUBLE_EQ(p.c, 3.0);
  EXPECT_THROW(activation_from_name("tanh"), Error);
}

TEST(GenerateWeights, OrthonormalWhenKappaOne) {
  SeedStream st(1);
  auto g = generate_weights(3, 3, 3, 1.0, st);
  EXPECT_LE(g.kappa_v, 1.01);
}

TEST(GenerateWeights, FullRankAndUnitRows) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    SeedStream st(s);
    auto g = generate_weights(3, 2, 4, 3.0, st);
    EXPECT_EQ(matrix_rank(g.weights.u), 2);
    EXPECT_EQ(matrix_rank(g.weights.v), 2);
    for (Index i = 0; i < 2; ++i) EXPECT_NEAR(g.weights.v.row(i).norm(), 1.0, 1e-10);
    EXPECT_NEAR(g.kappa_v, cond_number(g.weights.v), 1e-12);
  }
}

TEST(GenerateWeights, FixedRankDeficientU) {
  SeedStream st(2);
  WeightOptions wo;
  wo.u = Matrix((Matrix(1, 2) << 1, -1).finished());
  auto g = generate_weights(1, 2, 3, 2.0, st, wo);
  EXPECT_EQ(g.weights.u, *wo.u);
  SeedStream st2(2);
  EXPECT_THROW(generate_weights(1, 2, 3, 2.0, st2), Error);
  EXPECT_THROW(generate_weights(3, 4, 3, 2.0, st2), Error);
}

TEST(GenerateInstance, NoiseNoneGivesZeroE) {
  SeedStream st(3);
  auto g = generate_weights(3, 2, 4, 2.0, st);
  auto ins = generate_instance(g.weights, Activation::relu(), 50, NoiseModel::none(), st);
  EXPECT_EQ(ins.e.norm(), 0.0);
  Matrix want = g.weights.u * (g.weights.v * ins.x).cwiseMax(0.0);
  EXPECT_LE((ins.a - want).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(GenerateInstance, IidNoiseVariance) {
  SeedStream st(4);
  auto g = generate_weights(10, 2, 4, 2.0, st);
  const double sigma = 0.3;
  for (auto dist : {NoiseDist::Gaussian, NoiseDist::Rademacher}) {
    auto ins = generate_instance(g.weights, Activation::relu(), 10000, NoiseModel::iid(sigma, dist), st);
    double var = ins.e.squaredNorm() / static_cast<double>(ins.e.size());
    EXPECT_NEAR(var, sigma * sigma, 0.05 * sigma * sigma);
  }
}

TEST(GenerateInstance, SparseNoiseCount) {
  SeedStream st(5);
  auto g = generate_weights(30, 2, 6, 1.0, st);
  auto ins = generate_instance(g.weights, Activation::relu(), 2000, NoiseModel::sparse(0.05, 10.0), st);
  EXPECT_EQ((ins.e.array() != 0.0).count(), std::llround(0.05 * 30 * 2000));
  EXPECT_TRUE(((ins.e.array() == 0.0) || (ins.e.array().abs() == 10.0)).all());
}

TEST(GenerateInstance, CovarianceIsApplied) {
  SeedStream st(6);
  auto g = generate_weights(2, 2, 3, 1.0, st);
  Matrix cov = Matrix::Identity(3, 3);
  cov(0, 0) = 4.0;
  cov(0, 1) = cov(1, 0) = 1.0;
  auto ins = generate_instance(g.weights, Activation::relu(), 100000, NoiseModel::none(), st, cov);
  EXPECT_LE((estimate_covariance(ins.x) - cov).norm(), 0.1);
}

TEST(SparseNoise, Examples) {
  SeedStream st(7);
  Matrix base(2, 3);
  base << 1, 2, 3, 4, 5, 6;
  EXPECT_EQ(sparse_noise(base, 0, st).norm(), 0.0);
  EXPECT_EQ(sparse_noise(base, 6, st), base);
  Matrix s = sparse_noise(base, 3, st);
  EXPECT_EQ((s.array() != 0.0).count(), 3);
  for (Index i = 0; i < 2; ++i)
    for (Index j = 0; j < 3; ++j)
      if (s(i, j) != 0.0) EXPECT_EQ(s(i, j), base(i, j));
  EXPECT_THROW(sparse_noise(base, 7, st), Error);
}

TEST(Covariance, Examples) {
  Matrix v(3, 1);
  v << 1, 2, -1;
  EXPECT_LE((estimate_covariance(v) - v * v.transpose()).norm(), 1e-15);
  EXPECT_EQ(estimate_covariance(Matrix::Zero(3, 5)).norm(), 0.0);
  SeedStream st(8);
  Matrix x = gaussian_matrix(4, 100000, 0.0, 1.0, st);
  Matrix c = estimate_covariance(x);
  EXPECT_LE(svd(c - Matrix::Identity(4, 4)).singular_values(0), 0.05);
}

TEST(Whiten, Examples) {
  SeedStream st(9);
  Matrix x = gaussian_matrix(3, 10, 0.0, 1.0, st);
  EXPECT_LE((whiten_input(x, Matrix::Identity(3, 3)) - x).norm(), 1e-14);
  EXPECT_LE((whiten_input(x, 4.0 * Matrix::Identity(3, 3)) - x / 2.0).norm(), 1e-14);

  Matrix cov(3, 3);
  cov << 2, 0.5, 0, 0.5, 1, 0.2, 0, 0.2, 3;
  Matrix raw = sym_sqrt(cov, 0.5) * gaussian_matrix(3, 100000, 0.0, 1.0, st);
  Matrix w = whiten_input(raw, estimate_covariance(raw));
  EXPECT_LE((estimate_covariance(w) - Matrix::Identity(3, 3)).norm(), 0.05);
  EXPECT_THROW(whiten_input(x, Matrix::Zero(3, 3)), Error);
}

TEST(NormalizeOutput, Examples) {
  Matrix a(2, 2);
  a << 3, 1, 4, 0;
  auto n = normalize_output(a);
  EXPECT_DOUBLE_EQ(n.scale, 5.0);
  EXPECT_NEAR(n.a.colwise().norm().maxCoeff(), 1.0, 1e-15);
  auto again = normalize_output(n.a);
  EXPECT_NEAR(again.scale, 1.0, 1e-15);
  EXPECT_LE((again.a - n.a).norm(), 1e-15);
  try {
    normalize_output(Matrix::Zero(2, 2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ZeroMatrix);
  }
}

TEST(BoundedLipschitz, Examples) {
  EXPECT_NEAR(bounded_lipschitz(Activation::relu(), 2.0, 101), 1.0, 1e-9);
  EXPECT_NEAR(bounded_lipschitz(Activation::power(2), 10.0, 2001), 20.0, 0.4);
  EXPECT_NEAR(bounded_lipschitz(Activation::expm1(), 3.0, 2001), std::exp(3.0), 0.05 * std::exp(3.0));
  EXPECT_THROW(bounded_lipschitz(Activation::relu(), 0.0, 10), Error);
}

TEST(MatrixFormat, RoundTripIsBitExact) {
  SeedStream st(10);
  Matrix m = gaussian_matrix(3, 4, 0.0, 1e3, st);
  m(0, 0) = 1.0 / 3.0;
  std::stringstream ss;
  write_matrix(ss, m);
  std::string first = ss.str();
  EXPECT_EQ(first.substr(0, 4), "3 4\n");
  Matrix back = read_matrix(ss);
  EXPECT_TRUE((back.array() == m.array()).all());
  std::stringstream again;
  write_matrix(again, back);
  EXPECT_EQ(again.str(), first);
  std::stringstream bad("2 2\n1 2 3\n");
  EXPECT_THROW(read_matrix(bad), Error);
}
