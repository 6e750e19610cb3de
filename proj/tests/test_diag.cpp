#include <gtest/gtest.h>

#include <cmath>

#include "ergm/diag.hpp"
#include "ergm/rng.hpp"

using namespace ergm;

namespace {

Draws iid(Eigen::Index S, Eigen::Index p, Rng& rng) {
  Draws X(S, p);
  for (Eigen::Index s = 0; s < S; ++s)
    for (Eigen::Index k = 0; k < p; ++k) X(s, k) = rng.normal();
  return X;
}

Draws ar1(Eigen::Index S, double rho, Rng& rng) {
  Draws X(S, 1);
  double x = rng.normal() / std::sqrt(1 - rho * rho);
  for (Eigen::Index s = 0; s < S; ++s) {
    x = rho * x + rng.normal();
    X(s, 0) = x;
  }
  return X;
}

}  // namespace

TEST(Diag, Autocovariance) {
  Eigen::VectorXd x(4);
  x << 1, 2, 3, 4;
  EXPECT_DOUBLE_EQ(autocovariance(x, 0), 1.25);
  EXPECT_DOUBLE_EQ(autocovariance(x, 1), (-1.5 * -0.5 + -0.5 * 0.5 + 0.5 * 1.5) / 4);
}

TEST(Diag, BatchMeansIid) {
  // one estimate from 316 batches has about 8% relative error, so the
  // tolerance is checked on the average of 10 replicates
  Rng rng(1);
  Eigen::MatrixXd avg = Eigen::MatrixXd::Zero(3, 3);
  for (int r = 0; r < 10; ++r) {
    const BatchMeansCov bm = batch_means(iid(100000, 3, rng));
    EXPECT_EQ(bm.batch_size, 316);
    EXPECT_EQ(bm.batches, 316);
    avg += bm.sigma / 10;
  }
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) EXPECT_NEAR(avg(i, j), i == j ? 1.0 : 0.0, 0.1);
}

TEST(Diag, BatchMeansAr1) {
  Rng rng(2);
  const double rho = 0.5;
  const Draws X = ar1(100000, rho, rng);
  const double var = 1 / (1 - rho * rho);
  const double expect = var * (1 + rho) / (1 - rho);
  EXPECT_NEAR(batch_means_cov(X)(0, 0) / expect, 1.0, 0.15);
}

TEST(Diag, TooFewSamples) {
  Rng rng(3);
  EXPECT_THROW(batch_means(iid(7, 2, rng)), DataError);
  EXPECT_THROW(multivariate_ess(iid(7, 2, rng)), DataError);
}

TEST(Diag, EssIidAndAr1) {
  Rng rng(4);
  const Draws X = iid(100000, 3, rng);
  EXPECT_NEAR(multivariate_ess(X).ess_raw / 100000, 1.0, 0.1);
  const Draws Y = ar1(100000, 0.5, rng);
  EXPECT_NEAR(multivariate_ess(Y).ess / (100000 / 3.0), 1.0, 0.15);
}

TEST(Diag, EssDuplicatedRowsHalves) {
  Rng rng(5);
  const Draws X = iid(50000, 2, rng);
  Draws D(100000, 2);
  for (Eigen::Index s = 0; s < 50000; ++s) D.row(2 * s) = D.row(2 * s + 1) = X.row(s);
  // the iid value for 100000 rows would be 100000
  EXPECT_NEAR(multivariate_ess(D).ess / 50000, 1.0, 0.15);
}

TEST(Diag, EssConstantColumnDropped) {
  Rng rng(6);
  Draws X = iid(10000, 2, rng);
  Draws Y(10000, 3);
  Y.col(0) = X.col(0);
  Y.col(1).setConstant(7);
  Y.col(2) = X.col(1);
  const EssReport r = multivariate_ess(Y);
  EXPECT_EQ(r.dim, 2);
  EXPECT_NEAR(r.ess_raw, multivariate_ess(X).ess_raw, 1e-6);
  Draws Z(100, 2);
  Z.setConstant(1);
  EXPECT_THROW(multivariate_ess(Z), DataError);
}

TEST(Diag, EssAffineInvariant) {
  Rng rng(7);
  Draws X = iid(5000, 3, rng);
  const double e1 = multivariate_ess(X).ess;
  X.col(0) = X.col(0) * 1000.0 + Eigen::VectorXd::Constant(5000, 5.0);
  X.col(2) *= -0.01;
  EXPECT_NEAR(multivariate_ess(X).ess / e1, 1.0, 1e-9);
}

TEST(Diag, EssWithinSampleSize) {
  Rng rng(8);
  for (int rep = 0; rep < 20; ++rep) {
    const EssReport r = multivariate_ess(iid(1000, 2, rng));
    EXPECT_GT(r.ess, 0);
    EXPECT_LE(r.ess, 1000 * (1 + 1e-12));
    EXPECT_LE(r.ess, r.ess_raw);
  }
}

TEST(Diag, GewekeCalibration) {
  Rng rng(9);
  int rejections = 0;
  const int reps = 1000;
  for (int r = 0; r < reps; ++r)
    if (geweke_test(iid(1000, 2, rng)) < 0.05) ++rejections;
  const double sd = std::sqrt(reps * 0.05 * 0.95);
  EXPECT_LT(std::abs(rejections - reps * 0.05), 4 * sd) << rejections;
}

TEST(Diag, GewekeDetectsTrend) {
  Rng rng(10);
  Draws X = iid(2000, 2, rng);
  for (Eigen::Index s = 0; s < 2000; ++s) X(s, 1) += 0.002 * static_cast<double>(s);
  EXPECT_LT(geweke_test(X), 0.001);
}

TEST(Diag, GewekeScalarIsZSquared) {
  Rng rng(11);
  const Draws X = ar1(1000, 0.3, rng);
  const GewekeResult g = geweke(X);
  // independent recomputation of the two-window z statistic
  auto window_var = [](const Eigen::VectorXd& w) {
    const auto n = w.size();
    const auto b = static_cast<Eigen::Index>(std::floor(std::sqrt(static_cast<double>(n))));
    const Eigen::Index a = n / b;
    std::vector<double> m;
    for (Eigen::Index k = 0; k < a; ++k) m.push_back(w.segment(k * b, b).mean());
    double mm = 0;
    for (double v : m) mm += v / static_cast<double>(a);
    double ss = 0;
    for (double v : m) ss += (v - mm) * (v - mm);
    return static_cast<double>(b) * ss / static_cast<double>(a - 1) / static_cast<double>(n);
  };
  const Eigen::VectorXd A = X.col(0).head(100), B = X.col(0).tail(500);
  const double z = (A.mean() - B.mean()) / std::sqrt(window_var(A) + window_var(B));
  EXPECT_NEAR(g.statistic, z * z, 1e-9);
  EXPECT_EQ(g.df1, 1);
}

TEST(Diag, GewekeColumnPermutationInvariant) {
  Rng rng(12);
  Draws X = iid(800, 3, rng);
  Draws Y(800, 3);
  Y.col(0) = X.col(2);
  Y.col(1) = X.col(0);
  Y.col(2) = X.col(1);
  EXPECT_NEAR(geweke_test(X), geweke_test(Y), 1e-9);
  EXPECT_THROW(geweke_test(iid(50, 2, rng)), DataError);
  EXPECT_THROW(geweke_test(X, 0.6, 0.5), UsageError);
}

TEST(Diag, BurninPlanted) {
  Rng rng(13);
  Eigen::VectorXd x(3000);
  for (Eigen::Index s = 0; s < 3000; ++s) x[s] = 5 + 3 * std::exp2(-static_cast<double>(s + 1) / 100) + 0.01 * rng.normal();
  const BurninFit f = estimate_burnin(x);
  EXPECT_FALSE(f.flat);
  EXPECT_NEAR(f.s0 / 100, 1.0, 0.1);
  EXPECT_NEAR(f.beta0, 5, 0.01);
  EXPECT_NEAR(f.beta1, 3, 0.05);
  for (std::size_t k = 1; k < f.sse_trace.size(); ++k) EXPECT_LE(f.sse_trace[k], f.sse_trace[k - 1]);
}

TEST(Diag, BurninWhiteNoiseIsFlat) {
  Rng rng(14);
  Eigen::VectorXd x(2000);
  for (Eigen::Index s = 0; s < 2000; ++s) x[s] = rng.normal();
  const BurninFit f = estimate_burnin(x);
  EXPECT_NEAR(f.beta1, 0.0, 1e-12);
  EXPECT_EQ(f.s0, 1.0);
}

TEST(Diag, BurninExactHalving) {
  Eigen::VectorXd x(200);
  for (Eigen::Index s = 0; s < 200; ++s) x[s] = std::exp2(-static_cast<double>(s + 1));
  const BurninFit f = estimate_burnin(x);
  EXPECT_NEAR(f.s0, 1.0, 1e-6);
  EXPECT_NEAR(f.beta1, 1.0, 1e-6);
  EXPECT_THROW(estimate_burnin(Eigen::VectorXd(Eigen::VectorXd::Zero(10))), DataError);
}

TEST(Diag, BurninDirection) {
  Draws X(100, 2);
  for (Eigen::Index s = 0; s < 100; ++s) {
    X(s, 0) = 2 * std::exp2(-static_cast<double>(s + 1) / 4);
    X(s, 1) = 1;
  }
  Eigen::VectorXd d(2);
  d << 1, 0;
  EXPECT_NEAR(estimate_burnin(X, d).s0, 4.0, 1e-4);
}
