#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/fisher_f.hpp>

#include "ergm/error.hpp"

namespace ergm {

// Draws in rows, statistics in columns.
using Draws = Eigen::MatrixXd;

// Sample autocovariance of a scalar series at the given lag (divisor S).
inline double autocovariance(const Eigen::VectorXd& x, int lag) {
  const Eigen::Index S = x.size();
  if (lag < 0 || lag >= S) throw UsageError("autocovariance lag out of range");
  const double m = x.mean();
  double acc = 0;
  for (Eigen::Index s = 0; s + lag < S; ++s) acc += (x[s] - m) * (x[s + lag] - m);
  return acc / static_cast<double>(S);
}

struct BatchMeansCov {
  Eigen::MatrixXd sigma;
  Eigen::Index batch_size = 0;
  Eigen::Index batches = 0;
};

// Multivariate batch means with batch size floor(sqrt(S)); the trailing
// S mod b draws are left out.
inline BatchMeansCov batch_means(const Draws& X) {
  const Eigen::Index S = X.rows(), p = X.cols();
  if (S < 8) throw DataError("too few samples for batch means (need at least 8, have " + std::to_string(S) + ")");
  const auto b = static_cast<Eigen::Index>(std::floor(std::sqrt(static_cast<double>(S))));
  const Eigen::Index a = S / b;
  Eigen::MatrixXd means(a, p);
  for (Eigen::Index k = 0; k < a; ++k) means.row(k) = X.middleRows(k * b, b).colwise().mean();
  const Eigen::RowVectorXd grand = means.colwise().mean();
  const Eigen::MatrixXd centered = means.rowwise() - grand;
  BatchMeansCov out;
  out.sigma = static_cast<double>(b) / static_cast<double>(a - 1) * (centered.transpose() * centered);
  out.batch_size = b;
  out.batches = a;
  return out;
}

inline Eigen::MatrixXd batch_means_cov(const Draws& X) { return batch_means(X).sigma; }

inline Eigen::MatrixXd sample_cov(const Draws& X) {
  const Eigen::MatrixXd c = X.rowwise() - X.colwise().mean();
  return c.transpose() * c / static_cast<double>(X.rows() - 1);
}

// Columns whose values vary; constant columns carry no information and would
// make every determinant zero.
inline std::vector<Eigen::Index> varying_columns(const Draws& X) {
  std::vector<Eigen::Index> keep;
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    const double lo = X.col(j).minCoeff(), hi = X.col(j).maxCoeff();
    if (hi > lo) keep.push_back(j);
  }
  return keep;
}

inline Draws select_columns(const Draws& X, const std::vector<Eigen::Index>& cols) {
  Draws out(X.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) out.col(static_cast<Eigen::Index>(k)) = X.col(cols[k]);
  return out;
}

namespace detail {

inline double log_det_pd(const Eigen::MatrixXd& m, const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) throw NumericalError(std::string(what) + " is not positive definite");
  double ld = 0;
  for (Eigen::Index k = 0; k < m.rows(); ++k) ld += 2 * std::log(llt.matrixL()(k, k));
  return ld;
}

}  // namespace detail

struct EssReport {
  double ess = 0;      // capped at S
  double ess_raw = 0;  // the batch-means ratio itself, which can exceed S
  Eigen::Index S = 0;
  Eigen::Index dim = 0;  // statistics left after dropping constant columns
  double log_sigma_det = 0;
  double log_lambda_det = 0;
  Eigen::Index batch_size = 0;
  Eigen::Index batches = 0;
};

// S (det Lambda / det Sigma)^(1/p) on the varying columns.
inline EssReport multivariate_ess(const Draws& X) {
  if (X.rows() < 8) throw DataError("too few samples for an effective sample size (need at least 8)");
  const auto cols = varying_columns(X);
  if (cols.empty()) throw DataError("rank-0 sample: every statistic is constant");
  const Draws Y = select_columns(X, cols);
  const BatchMeansCov bm = batch_means(Y);
  EssReport r;
  r.S = X.rows();
  r.dim = Y.cols();
  r.batch_size = bm.batch_size;
  r.batches = bm.batches;
  r.log_lambda_det = detail::log_det_pd(sample_cov(Y), "sample covariance");
  r.log_sigma_det = detail::log_det_pd(bm.sigma, "batch-means covariance");
  r.ess_raw = static_cast<double>(r.S) * std::exp((r.log_lambda_det - r.log_sigma_det) / static_cast<double>(r.dim));
  r.ess = std::min(r.ess_raw, static_cast<double>(r.S));
  return r;
}

inline double univariate_ess(const Eigen::VectorXd& x) {
  Draws X(x.size(), 1);
  X.col(0) = x;
  return multivariate_ess(X).ess;
}

struct GewekeResult {
  double statistic = 0;  // Hotelling T^2
  double p_value = 1;
  double df1 = 0, df2 = 0;
};

// Two-window Hotelling T^2 on the mean difference between the first
// frac_first and the last frac_last of the draws. Each window's covariance of
// the mean comes from batch means; the reference distribution is F with the
// Nel-van der Merwe degrees of freedom for unequal covariances.
inline GewekeResult geweke(const Draws& X, double frac_first = 0.1, double frac_last = 0.5) {
  if (!(frac_first > 0 && frac_last > 0 && frac_first + frac_last <= 1))
    throw UsageError("Geweke windows must be positive and non-overlapping");
  const Eigen::Index S = X.rows();
  const auto nA = static_cast<Eigen::Index>(std::floor(frac_first * static_cast<double>(S)));
  const auto nB = static_cast<Eigen::Index>(std::floor(frac_last * static_cast<double>(S)));
  if (nA < 8 || nB < 8) throw DataError("Geweke windows too small (" + std::to_string(S) + " draws)");
  const auto cols = varying_columns(X);
  if (cols.empty()) return {};
  const Draws Y = select_columns(X, cols);
  const Draws A = Y.topRows(nA), B = Y.bottomRows(nB);
  const BatchMeansCov bA = batch_means(A), bB = batch_means(B);
  const Eigen::MatrixXd VA = bA.sigma / static_cast<double>(nA);
  const Eigen::MatrixXd VB = bB.sigma / static_cast<double>(nB);
  const Eigen::MatrixXd V = VA + VB;
  const Eigen::VectorXd d = (A.colwise().mean() - B.colwise().mean()).transpose();
  Eigen::LDLT<Eigen::MatrixXd> ldlt(V);
  if (ldlt.info() != Eigen::Success || ldlt.vectorD().minCoeff() <= 0)
    throw NumericalError("Geweke covariance is singular");
  const auto p = static_cast<double>(Y.cols());
  GewekeResult r;
  r.statistic = d.dot(ldlt.solve(d));
  const Eigen::MatrixXd Vinv = ldlt.solve(Eigen::MatrixXd::Identity(V.rows(), V.cols()));
  auto term = [&](const Eigen::MatrixXd& Vi, Eigen::Index batches) {
    const Eigen::MatrixXd M = Vi * Vinv;
    return ((M * M).trace() + M.trace() * M.trace()) / static_cast<double>(batches - 1);
  };
  const double nu = (p + p * p) / (term(VA, bA.batches) + term(VB, bB.batches));
  r.df1 = p;
  r.df2 = nu - p + 1;
  if (!(r.df2 > 0)) throw DataError("Geweke windows too small for " + std::to_string(Y.cols()) + " statistics");
  const double F = r.statistic * r.df2 / (p * nu);
  boost::math::fisher_f dist(r.df1, r.df2);
  r.p_value = boost::math::cdf(boost::math::complement(dist, F));
  return r;
}

inline double geweke_test(const Draws& X, double frac_first = 0.1, double frac_last = 0.5) {
  return geweke(X, frac_first, frac_last).p_value;
}

struct BurninFit {
  double s0 = 1;
  double beta0 = 0, beta1 = 0;
  double sse = 0;
  bool flat = false;  // no detectable decay; s0 is the lower bound
  std::vector<double> sse_trace;  // best SSE after each accepted search step
};

namespace detail {

struct DecayFit {
  double beta0, beta1, sse;
};

inline DecayFit fit_decay(const Eigen::VectorXd& x, double s0) {
  const Eigen::Index S = x.size();
  Eigen::VectorXd f(S);
  for (Eigen::Index s = 0; s < S; ++s) f[s] = std::exp2(-static_cast<double>(s + 1) / s0);
  const double fm = f.mean(), xm = x.mean();
  const Eigen::VectorXd fc = f.array() - fm, xc = x.array() - xm;
  const double sff = fc.squaredNorm(), sfx = fc.dot(xc), sxx = xc.squaredNorm();
  if (sff <= 0) return {xm, 0, sxx};
  const double b1 = sfx / sff;
  return {xm - b1 * fm, b1, std::max(0.0, sxx - sfx * sfx / sff)};
}

}  // namespace detail

// Least-squares fit of x_s = b0 + b1 2^(-s/s0), s = 1..S, with s0 searched on
// a log scale over [1, S]: a coarse grid, then golden-section refinement
// around the best grid point. A series whose decay term is not significant
// (F test, p > flat_pvalue) is reported as flat with s0 = 1.
inline BurninFit estimate_burnin(const Eigen::VectorXd& x, double flat_pvalue = 0.01) {
  const Eigen::Index S = x.size();
  if (S < 16) throw DataError("burn-in estimation needs at least 16 draws");
  const double hi = std::log(static_cast<double>(S));
  BurninFit out;
  auto sse_at = [&](double u) { return detail::fit_decay(x, std::exp(u)).sse; };

  constexpr int kGrid = 48;
  double best_u = 0, best = sse_at(0);
  out.sse_trace.push_back(best);
  std::vector<double> grid(kGrid + 1);
  for (int k = 0; k <= kGrid; ++k) grid[static_cast<std::size_t>(k)] = hi * k / kGrid;
  int best_k = 0;
  for (int k = 1; k <= kGrid; ++k) {
    const double v = sse_at(grid[static_cast<std::size_t>(k)]);
    if (v < best) {
      best = v;
      best_u = grid[static_cast<std::size_t>(k)];
      best_k = k;
      out.sse_trace.push_back(best);
    }
  }
  double a = grid[static_cast<std::size_t>(std::max(0, best_k - 1))];
  double b = grid[static_cast<std::size_t>(std::min(kGrid, best_k + 1))];
  const double g = (std::sqrt(5.0) - 1) / 2;
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = sse_at(c), fd = sse_at(d);
  for (int it = 0; it < 80 && b - a > 1e-10; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = sse_at(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = sse_at(d);
    }
    const double u = fc < fd ? c : d, v = std::min(fc, fd);
    if (v < best) {
      best = v;
      best_u = u;
      out.sse_trace.push_back(best);
    }
  }
  const detail::DecayFit fit = detail::fit_decay(x, std::exp(best_u));
  out.s0 = std::exp(best_u);
  out.beta0 = fit.beta0;
  out.beta1 = fit.beta1;
  out.sse = fit.sse;

  const double sst = (x.array() - x.mean()).matrix().squaredNorm();
  bool flat = sst <= 0;
  if (!flat && S > 3) {
    if (fit.sse <= 0) {
      flat = false;
    } else {
      const double F = ((sst - fit.sse) / 2) / (fit.sse / static_cast<double>(S - 3));
      boost::math::fisher_f dist(2, static_cast<double>(S - 3));
      flat = boost::math::cdf(boost::math::complement(dist, std::max(0.0, F))) > flat_pvalue;
    }
  }
  if (flat) {
    out.flat = true;
    out.s0 = 1;
    out.beta0 = x.mean();
    out.beta1 = 0;
    out.sse = sst;
  }
  return out;
}

inline BurninFit estimate_burnin(const Draws& X, const Eigen::VectorXd& direction, double flat_pvalue = 0.01) {
  if (direction.size() != X.cols()) throw UsageError("burn-in direction has the wrong length");
  return estimate_burnin(Eigen::VectorXd(X * direction), flat_pvalue);
}

}  // namespace ergm
