#include <gtest/gtest.h>

#include <relurec/eval.hpp>
#include <relurec/init.hpp>

using namespace relurec;

namespace {

Tensor3 sum_of_cubes(const Matrix& rows, const std::vector<double>& lam) {
  Tensor3 t(rows.cols());
  for (Index j = 0; j < rows.rows(); ++j) {
    Tensor3 r = Tensor3::rank_one(rows.row(j).transpose());
    for (std::size_t q = 0; q < t.data.size(); ++q) t.data[q] += lam[static_cast<std::size_t>(j)] * r.data[q];
  }
  return t;
}

// min over signs and matching of max row distance, brute force over the two orders for k = 2
double row_distance(const Matrix& got, const Matrix& want) {
  auto d = [&](Index i, Index j) {
    return std::min((got.row(i) - want.row(j)).norm(), (got.row(i) + want.row(j)).norm());
  };
  return std::min(std::max(d(0, 0), d(1, 1)), std::max(d(0, 1), d(1, 0)));
}

}  // namespace

TEST(Scores, SmallExamples) {
  Vector x(2);
  x << 1, 2;
  Matrix s2(2, 2);
  s2 << 0, 2, 2, 3;
  EXPECT_LE((score2(x) - s2).norm(), 1e-15);
  Tensor3 s3 = score3(x);
  // He_3 in one coordinate: x^3 - 3x
  EXPECT_NEAR(s3(0, 0, 0), 1 - 3, 1e-15);
  EXPECT_NEAR(s3(1, 1, 1), 8 - 6, 1e-15);
  // mixed entry x_i^2 x_j - x_j
  EXPECT_NEAR(s3(0, 0, 1), 2 - 2, 1e-15);
  EXPECT_NEAR(s3(0, 1, 1), 4 - 1, 1e-15);
  Tensor4 s4 = score4(x);
  EXPECT_NEAR(s4(0, 0, 0, 0), 1 - 6 + 3, 1e-15);
}

TEST(Scores, ZeroMeanUnderGaussian) {
  SeedStream st(31);
  const Index d = 3, n = 200000;
  Matrix x = gaussian_matrix(d, n, 0.0, 1.0, st);
  Tensor3 acc(d);
  for (Index j = 0; j < n; ++j) {
    Tensor3 s = score3(x.col(j));
    for (std::size_t q = 0; q < acc.data.size(); ++q) acc.data[q] += s.data[q] / static_cast<double>(n);
  }
  for (double v : acc.data) EXPECT_LE(std::abs(v), 0.05);
}

TEST(CollapsedTensor, SingleSampleIsTheScore) {
  Vector x(3);
  x << 0.5, -1, 2;
  Matrix a(1, 1);
  a << 2.0;
  ScoreConfig cfg;
  cfg.order = 3;
  cfg.theta = Vector::Ones(1);
  auto cm = build_collapsed_tensor(a, x, cfg);
  Tensor3 s = score3(x);
  for (std::size_t q = 0; q < s.data.size(); ++q) EXPECT_NEAR(cm.t3.data[q], 2.0 * s.data[q], 1e-12);
  EXPECT_LE((cm.m2 - 2.0 * score2(x)).norm(), 1e-12);
}

TEST(CollapsedTensor, ShapeErrors) {
  ScoreConfig cfg;
  cfg.theta = Vector::Ones(2);
  EXPECT_THROW(build_collapsed_tensor(Matrix::Ones(1, 4), Matrix::Ones(2, 4), cfg), Error);
  cfg.theta = Vector::Ones(1);
  cfg.order = 5;
  EXPECT_THROW(build_collapsed_tensor(Matrix::Ones(1, 4), Matrix::Ones(2, 4), cfg), Error);
}

TEST(TensorPower, OrthogonalTensorIdentityWhitening) {
  Matrix rows = Matrix::Identity(2, 2);
  Tensor3 t = sum_of_cubes(rows, {3.0, 1.0});
  SeedStream st(32);
  auto rep = tensor_power_decompose(t, Matrix::Identity(2, 2), 2, PowerOptions{}, st);
  EXPECT_TRUE(rep.converged);
  EXPECT_LE(row_distance(rep.rows, rows), 1e-8);
  std::vector<double> ev = rep.eigenvalues;
  std::sort(ev.begin(), ev.end());
  EXPECT_NEAR(ev[0], 1.0, 1e-8);
  EXPECT_NEAR(ev[1], 3.0, 1e-8);
}

TEST(TensorPower, NonOrthogonalWithConsistentM2) {
  SeedStream st(33);
  Matrix v = gaussian_matrix(2, 5, 0.0, 1.0, st).rowwise().normalized();
  std::vector<double> lam{2.0, 0.7};
  Tensor3 t = sum_of_cubes(v, lam);
  Matrix m2 = lam[0] * v.row(0).transpose() * v.row(0) + lam[1] * v.row(1).transpose() * v.row(1);
  auto rep = tensor_power_decompose(t, m2, 2, PowerOptions{}, st);
  EXPECT_LE(row_distance(rep.rows, v), 1e-6);
}

TEST(TensorPower, ZeroTensorDoesNotConverge) {
  SeedStream st(34);
  auto rep = tensor_power_decompose(Tensor3(3), Matrix::Identity(3, 3), 2, PowerOptions{}, st);
  EXPECT_FALSE(rep.converged);
}

TEST(Whitening, Examples) {
  Matrix m2 = Vector::LinSpaced(3, 1, 3).asDiagonal();
  Matrix w = whitening_matrix(m2, 2, 1e-8);
  EXPECT_LE((w.transpose() * m2 * w - Matrix::Identity(2, 2)).norm(), 1e-12);
  Matrix bad = Vector(Vector::LinSpaced(3, -1, 1)).asDiagonal();
  try {
    whitening_matrix(bad, 2, 1e-8);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::WhiteningFailed);
  }
}

TEST(InitTensor, SquareActivationRecoversRows) {
  SeedStream st(35);
  auto g = generate_weights(4, 2, 6, 2.0, st);
  auto ins = generate_instance(g.weights, Activation::power(2), 100000, NoiseModel::none(), st);
  auto rep = init_tensor(ins.a, ins.x, 2, Activation::power(2), InitTensorConfig{}, st);
  EXPECT_LE(row_distance(rep.rows, g.weights.v), 0.2);
}

TEST(InitOracle, ErrorIsBounded) {
  SeedStream st(36);
  auto g = generate_weights(3, 2, 5, 2.0, st);
  auto rep = init_oracle(g.weights, 0.1, st);
  for (Index j = 0; j < 2; ++j) {
    double e = std::min((rep.rows.row(j) - g.weights.v.row(j)).norm(), (rep.rows.row(j) + g.weights.v.row(j)).norm());
    EXPECT_LE(e, 0.1 + 1e-12);
  }
}

TEST(InitIca, OrthonormalMixingIsIdentifiable) {
  SeedStream st(37);
  WeightOptions wo;
  auto g = generate_weights(4, 2, 6, 1.0, st, wo);
  Matrix q = random_orthonormal_rows(2, 4, st).transpose();
  NetworkWeights w{q, g.weights.v};
  auto ins = generate_instance(w, Activation::relu(), 50000, NoiseModel::none(), st);
  auto ica = init_ica(ins.a, 2, st);
  Matrix h = (w.v * ins.x).cwiseMax(0.0);
  // each source correlates almost perfectly with one hidden unit
  for (Index j = 0; j < 2; ++j) {
    double best = 0;
    for (Index i = 0; i < 2; ++i) {
      RowVector s = ica.sources.row(j).array() - ica.sources.row(j).mean();
      RowVector t = h.row(i).array() - h.row(i).mean();
      best = std::max(best, std::abs(s.dot(t)) / (s.norm() * t.norm()));
    }
    EXPECT_GE(best, 0.95);
  }
}
