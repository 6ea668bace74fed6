#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "dynbound/lyapunov.hpp"
#include "test_support.hpp"

using namespace dynbound;

namespace {

const LyapunovResult& lorenz_reference() {
  static const LyapunovResult r =
      lyapunov_spectrum(test::shipped("lorenz.sys"), std::vector<double>{1, 1, 1}, 100.0, 5000.0, 0.5);
  return r;
}

}  // namespace

TEST(GramSchmidt, FactorsMatrix) {
  Eigen::MatrixXd v(3, 3);
  v << 2, 1, 0.5, 0, 3, 1, 1, 1, 4;
  const Eigen::MatrixXd orig = v;
  Eigen::MatrixXd r(3, 3);
  modified_gram_schmidt(v, r);
  EXPECT_LT((v.transpose() * v - Eigen::MatrixXd::Identity(3, 3)).norm(), 1e-14);
  EXPECT_LT((v * r - orig).norm(), 1e-13);
  for (int i = 0; i < 3; ++i) {
    EXPECT_GT(r(i, i), 0.0);
    for (int j = 0; j < i; ++j) EXPECT_EQ(r(i, j), 0.0);
  }
  Eigen::MatrixXd bad = Eigen::MatrixXd::Zero(2, 2);
  Eigen::MatrixXd r2(2, 2);
  EXPECT_THROW(modified_gram_schmidt(bad, r2), DegenerateTangentError);
  Eigen::MatrixXd parallel(2, 2);
  parallel << 1, 1, 0, 1e-14;
  EXPECT_THROW(modified_gram_schmidt(parallel, r2), DegenerateTangentError);
}

TEST(Lyapunov, DiagonalLinearField) {
  const auto f = parse_system("dx/dt = -x\ndy/dt = -2*y\ndz/dt = -3*z");
  const auto r = lyapunov_spectrum(f, std::vector<double>{1, 1, 1}, 0.0, 100.0, 0.5);
  ASSERT_EQ(r.exponents.size(), 3u);
  EXPECT_NEAR(r.exponents[0], -1.0, 1e-6);
  EXPECT_NEAR(r.exponents[1], -2.0, 1e-6);
  EXPECT_NEAR(r.exponents[2], -3.0, 1e-6);
  EXPECT_NEAR(r.sum(), r.mean_divergence, 1e-6);
}

TEST(Lyapunov, HarmonicPlusContraction) {
  const auto f = parse_system("dx/dt = y\ndy/dt = -x\ndz/dt = -z");
  const auto r = lyapunov_spectrum(f, std::vector<double>{1, 0, 1}, 0.0, 2000.0, 0.5);
  EXPECT_NEAR(r.exponents[0], 0.0, 1e-3);
  EXPECT_NEAR(r.exponents[1], 0.0, 1e-3);
  EXPECT_NEAR(r.exponents[2], -1.0, 1e-3);
}

TEST(Lyapunov, LorenzSpectrum) {
  const auto& r = lorenz_reference();
  EXPECT_NEAR(r.exponents[0], 0.906, 0.02);
  EXPECT_NEAR(r.exponents[1], 0.0, 0.01);
  EXPECT_NEAR(r.exponents[2], -14.57, 0.05);
  const double divergence = -(10.0 + 1.0 + 8.0 / 3.0);
  EXPECT_LT(std::abs(r.sum() / divergence - 1.0), 0.005);
  EXPECT_NEAR(r.mean_divergence, divergence, 1e-9);
  EXPECT_EQ(r.transient_skipped, 100.0);
  EXPECT_EQ(r.renormalizations, 10000u);
  EXPECT_NEAR(r.total_time, 5000.0, 1e-9);
  EXPECT_TRUE(std::is_sorted(r.exponents.rbegin(), r.exponents.rend()));
}

TEST(Lyapunov, LorenzHistoryStabilizes) {
  const auto& r = lorenz_reference();
  ASSERT_EQ(r.convergence_history.size(), 100u);
  EXPECT_NEAR(r.convergence_history.front().time, 50.0, 1e-9);
  for (std::size_t i = 50; i < r.convergence_history.size(); ++i) {
    EXPECT_NEAR(r.convergence_history[i].exponents[0], r.exponents[0], 0.05);
  }
  std::ostringstream csv;
  write_convergence_csv(csv, r);
  EXPECT_EQ(csv.str().substr(0, csv.str().find('\n')), "time,l1,l2,l3");
}

TEST(Lyapunov, InsensitiveToHalvingInterval) {
  const auto half = lyapunov_spectrum(test::shipped("lorenz.sys"), std::vector<double>{1, 1, 1}, 100.0, 5000.0, 0.25);
  EXPECT_LE(std::abs(half.exponents[0] - lorenz_reference().exponents[0]), 0.02);
}

TEST(Lyapunov, TangentCollapseIsReported) {
  // Eigenvalues +-15 along the diagonals: both unit vectors turn toward the
  // expanding direction, and over a unit interval the second keeps only e^-30.
  const auto f = parse_system("dx/dt = 15*y\ndy/dt = 15*x");
  const std::vector<double> origin{0, 0};
  EXPECT_THROW(lyapunov_spectrum(f, origin, 0.0, 10.0, 1.0), DegenerateTangentError);
  const auto r = lyapunov_spectrum(f, origin, 0.0, 10.0, 0.5);
  // the first interval loses log(sqrt 2) while the frame aligns with the eigenvectors
  EXPECT_NEAR(r.exponents[0], 15.0 - std::log(std::sqrt(2.0)) / 10.0, 1e-6);
  EXPECT_NEAR(r.exponents[1], -15.0 + std::log(std::sqrt(2.0)) / 10.0, 1e-6);
}

TEST(Lyapunov, ArgumentChecks) {
  const auto f = parse_system("dx/dt = -x");
  const std::vector<double> x0{1.0};
  EXPECT_THROW(lyapunov_spectrum(f, x0, 0.0, 10.0, 0.0), Error);
  EXPECT_THROW(lyapunov_spectrum(f, x0, 0.0, 0.1, 0.5), Error);
  EXPECT_THROW(lyapunov_spectrum(f, x0, -1.0, 10.0, 0.5), Error);
  EXPECT_THROW(lyapunov_spectrum(f, std::vector<double>{1.0, 2.0}, 0.0, 10.0, 0.5), DimensionError);
}
