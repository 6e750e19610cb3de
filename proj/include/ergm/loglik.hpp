#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ergm/diag.hpp"
#include "ergm/error.hpp"
#include "ergm/infer.hpp"
#include "ergm/model.hpp"
#include "ergm/network.hpp"
#include "ergm/sample.hpp"
#include "ergm/tsv.hpp"

namespace ergm {

// Deviance of the model with every coefficient at zero: each of the N free
// dyads contributes log 2.
inline double null_deviance(double free_dyads) {
  if (free_dyads < 0) throw UsageError("free dyad count must be non-negative");
  return 2 * free_dyads * std::log(2.0);
}

struct DyadIndependentFit {
  std::vector<double> theta_tilde;  // full length; dyad-dependent coefficients are 0
  double loglik = 0;
  double free_dyads = 0;
  bool boundary = false;  // all responses equal; no finite maximizer
};

namespace detail {

inline double logistic_loglik(const MpleRows& rows, const Eigen::VectorXd& coef) {
  double ll = 0;
  for (Eigen::Index r = 0; r < rows.rows(); ++r) {
    const double s = rows.offset_shift[r];
    if (std::isinf(s)) continue;
    const double eta = rows.predictor.row(r).dot(coef) + s;
    ll += rows.weights[r] * (rows.response[r] * eta - log1pexp(eta));
  }
  return ll;
}

inline void require_independent_offsets(const BoundModel& model) {
  for (int k : model.offset_indices())
    if (!model.dyad_independent(k))
      throw UsageError("log-likelihood evaluation needs dyad-independent offset terms; '" +
                       model.names()[static_cast<std::size_t>(k)] + "' is not");
}

}  // namespace detail

// Maximizes the likelihood of the submodel that keeps only the
// dyad-independent free statistics; for that submodel the likelihood is a
// product of Bernoulli terms.
inline DyadIndependentFit dyad_independent_loglik(const Network& net, const BoundModel& model,
                                                  const ConstraintSpec& constraints = {},
                                                  const std::vector<double>& offset_coefs = {}) {
  detail::require_independent_offsets(model);
  const MpleRows all = mple_rows(net, model, MpleMode::compressed, constraints, offset_coefs);
  const auto free = model.free_indices();
  std::vector<Eigen::Index> cols;
  for (std::size_t k = 0; k < free.size(); ++k)
    if (model.dyad_independent(free[k])) cols.push_back(static_cast<Eigen::Index>(k));
  MpleRows sub = all;
  sub.predictor.resize(all.rows(), static_cast<Eigen::Index>(cols.size()));
  sub.names.clear();
  for (std::size_t c = 0; c < cols.size(); ++c) {
    sub.predictor.col(static_cast<Eigen::Index>(c)) = all.predictor.col(cols[c]);
    sub.names.push_back(all.names[static_cast<std::size_t>(cols[c])]);
  }
  DyadIndependentFit out;
  out.theta_tilde = detail::offsets_only(model, offset_coefs);
  double yes = 0, total = 0;
  for (Eigen::Index r = 0; r < all.rows(); ++r) {
    if (std::isinf(all.offset_shift[r])) continue;
    total += all.weights[r];
    yes += all.weights[r] * all.response[r];
  }
  out.free_dyads = total;
  if (total == 0 || ((yes == 0 || yes == total) && !cols.empty())) {
    out.boundary = true;
    out.loglik = 0;
    for (std::size_t c = 0; c < cols.size(); ++c)
      out.theta_tilde[static_cast<std::size_t>(free[static_cast<std::size_t>(cols[c])])] =
          std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  const LogisticFit lf = logistic_fit(sub);
  for (std::size_t c = 0; c < cols.size(); ++c)
    out.theta_tilde[static_cast<std::size_t>(free[static_cast<std::size_t>(cols[c])])] = lf.coef[static_cast<Eigen::Index>(c)];
  out.loglik = lf.loglik;
  return out;
}

// ---------------------------------------------------------------------------
// Bridge sampling

struct BridgeControl {
  int J = 16;
  long long K = 10000;          // draws per path point
  long long interval = 100;
  std::optional<long long> first_burnin;  // default 16 * K
  std::uint64_t seed = 0;
  ProposalConfig proposal;
  int max_passes = 64;
};

struct BridgePoint {
  int pass = 1;
  double u = 0;
  double weight = 0;
  double mean = 0;      // mean of -(theta_hat - theta_tilde)' d(Y)
  double var_mean = 0;  // batch-means variance of that mean
};

struct LoglikResult {
  double delta_loglik = 0;  // l(theta_hat) - l(theta_tilde)
  double mc_se = 0;
  double loglik = std::numeric_limits<double>::quiet_NaN();  // l(theta_hat)
  double null_deviance = std::numeric_limits<double>::quiet_NaN();
  double aic = std::numeric_limits<double>::quiet_NaN();
  double bic = std::numeric_limits<double>::quiet_NaN();
  int p = 0;
  double d = 0;
  int passes = 0;
  bool converged = true;  // adaptive mode: target s.e. reached
  std::vector<BridgePoint> points;
};

// Shift of pass l: mod((l - 1) / phi + 1/2, 1) - 1/2.
inline double kronecker_shift(int l) {
  const double inv_phi = 2 / (1 + std::sqrt(5.0));
  const double x = static_cast<double>(l - 1) * inv_phi + 0.5;
  return x - std::floor(x) - 0.5;
}

// Length of each point's Voronoi cell within (0, 1), in input order.
inline std::vector<double> voronoi_weights(const std::vector<double>& u) {
  const std::size_t n = u.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return u[a] < u[b]; });
  std::vector<double> w(n);
  for (std::size_t r = 0; r < n; ++r) {
    const double lo = r == 0 ? 0.0 : (u[order[r - 1]] + u[order[r]]) / 2;
    const double hi = r + 1 == n ? 1.0 : (u[order[r]] + u[order[r + 1]]) / 2;
    w[order[r]] = hi - lo;
  }
  return w;
}

namespace detail {

class BridgeRunner {
 public:
  BridgeRunner(const Network& net, const BoundModel& model, const std::vector<double>& theta_hat,
               const std::vector<double>& theta_tilde, const BridgeControl& ctl, const StatVector& g_obs)
      : net_(net), model_(model), hat_(theta_hat), tilde_(theta_tilde), ctl_(ctl), g_obs_(g_obs) {
    if (static_cast<int>(hat_.size()) != model.p() || static_cast<int>(tilde_.size()) != model.p())
      throw UsageError("bridge endpoints must have one coefficient per statistic");
    if (ctl.J < 1 || ctl.K < 8) throw UsageError("bridge sampling needs J >= 1 and K >= 8");
    for (int k = 0; k < model.p(); ++k) {
      const auto ks = static_cast<std::size_t>(k);
      if (model.is_offset(k)) {
        if (!(hat_[ks] == tilde_[ks] || (std::isnan(hat_[ks]) && std::isnan(tilde_[ks]))))
          throw UsageError("bridge endpoints must agree on offset coefficients");
        diff_.push_back(0);
      } else {
        if (!std::isfinite(hat_[ks]) || !std::isfinite(tilde_[ks])) throw UsageError("bridge endpoints must be finite");
        diff_.push_back(hat_[ks] - tilde_[ks]);
      }
    }
  }

  bool trivial() const {
    return std::all_of(diff_.begin(), diff_.end(), [](double v) { return v == 0; });
  }

  BridgePoint run_point(int pass, double u, std::size_t index) {
    std::vector<double> coefs(hat_.size());
    for (std::size_t k = 0; k < coefs.size(); ++k) coefs[k] = model_.is_offset(static_cast<int>(k)) ? hat_[k] : tilde_[k] + u * diff_[k];
    SamplerConfig cfg;
    cfg.samplesize = ctl_.K;
    cfg.interval = ctl_.interval;
    cfg.seed = ctl_.seed + 7919ULL * static_cast<std::uint64_t>(index + 1);
    // warm start from the final network of the nearest point already run
    const Network* start = &net_;
    if (done_.empty()) {
      cfg.burnin = ctl_.first_burnin ? *ctl_.first_burnin : 16 * ctl_.K;
    } else {
      std::size_t best = 0;
      for (std::size_t i = 1; i < done_.size(); ++i)
        if (std::abs(done_[i].first - u) < std::abs(done_[best].first - u)) best = i;
      start = &done_[best].second;
      cfg.burnin = ctl_.interval;
    }
    const SimulationResult sim = run_chain(*start, model_, coefs, ctl_.proposal, cfg);
    const Draws X = sim.sample.pooled();
    Draws s(X.rows(), 1);
    for (Eigen::Index r = 0; r < X.rows(); ++r) {
      double v = 0;
      for (int k = 0; k < model_.p(); ++k)
        if (diff_[static_cast<std::size_t>(k)] != 0) v += diff_[static_cast<std::size_t>(k)] * (X(r, k) - g_obs_[static_cast<std::size_t>(k)]);
      s(r, 0) = -v;
    }
    BridgePoint pt;
    pt.pass = pass;
    pt.u = u;
    pt.mean = s.col(0).mean();
    const double centered = (s.col(0).array() - pt.mean).square().sum();
    pt.var_mean = centered == 0 ? 0.0 : batch_means_cov(s)(0, 0) / static_cast<double>(s.rows());
    done_.emplace_back(u, sim.networks.front());
    return pt;
  }

 private:
  const Network& net_;
  const BoundModel& model_;
  std::vector<double> hat_, tilde_, diff_;
  BridgeControl ctl_;
  StatVector g_obs_;
  std::vector<std::pair<double, Network>> done_;
};

inline void combine(LoglikResult& res) {
  double est = 0, var = 0;
  for (const auto& p : res.points) {
    est += p.weight * p.mean;
    var += p.weight * p.weight * p.var_mean;
  }
  res.delta_loglik = est;
  res.mc_se = std::sqrt(var);
}

}  // namespace detail

// Estimates l(theta_hat) - l(theta_tilde) along the straight path between
// them, with J equally weighted midpoints. g_obs defaults to g(net).
inline LoglikResult bridge_loglik(const Network& net, const BoundModel& model, const std::vector<double>& theta_hat,
                                  const std::vector<double>& theta_tilde, const BridgeControl& ctl,
                                  std::optional<StatVector> g_obs = std::nullopt) {
  model.check_network(net);
  detail::BridgeRunner runner(net, model, theta_hat, theta_tilde, ctl, g_obs ? *g_obs : model.summary(net));
  LoglikResult res;
  res.passes = 1;
  if (runner.trivial()) return res;
  for (int j = 1; j <= ctl.J; ++j) {
    BridgePoint pt = runner.run_point(1, (j - 0.5) / ctl.J, static_cast<std::size_t>(j - 1));
    pt.weight = 1.0 / ctl.J;
    res.points.push_back(pt);
  }
  detail::combine(res);
  return res;
}

// Repeats passes of J shifted points until the standard error is at most
// target_se or the pass cap is reached. Points are weighted by the length of
// their Voronoi cell on (0, 1).
inline LoglikResult adaptive_bridge(const Network& net, const BoundModel& model, const std::vector<double>& theta_hat,
                                    const std::vector<double>& theta_tilde, double target_se, const BridgeControl& ctl,
                                    std::optional<StatVector> g_obs = std::nullopt) {
  if (!(target_se > 0)) throw UsageError("target standard error must be positive");
  if (ctl.max_passes < 1) throw UsageError("pass cap must be at least 1");
  model.check_network(net);
  detail::BridgeRunner runner(net, model, theta_hat, theta_tilde, ctl, g_obs ? *g_obs : model.summary(net));
  LoglikResult res;
  if (runner.trivial()) {
    res.passes = 1;
    return res;
  }
  std::size_t index = 0;
  for (int l = 1; l <= ctl.max_passes; ++l) {
    const double v = kronecker_shift(l);
    for (int j = 1; j <= ctl.J; ++j) res.points.push_back(runner.run_point(l, (j - 0.5 + v) / ctl.J, index++));
    std::vector<double> u;
    for (const auto& p : res.points) u.push_back(p.u);
    const auto w = voronoi_weights(u);
    for (std::size_t i = 0; i < w.size(); ++i) res.points[i].weight = w[i];
    detail::combine(res);
    res.passes = l;
    if (res.mc_se <= target_se) {
      res.converged = true;
      return res;
    }
  }
  res.converged = false;
  return res;
}

// Full log-likelihood of a fitted model: the dyad-independent baseline plus a
// bridge from it to the estimate, with AIC and BIC.
inline LoglikResult fit_loglik(const Network& net, const BoundModel& model, const std::vector<double>& theta_hat,
                               const BridgeControl& ctl, const ConstraintSpec& constraints = {},
                               const std::vector<double>& offset_coefs = {}, std::optional<double> target_se = std::nullopt) {
  const DyadIndependentFit base = dyad_independent_loglik(net, model, constraints, offset_coefs);
  LoglikResult res;
  const auto free = model.free_indices();
  if (model.all_dyad_independent()) {
    const MpleRows rows = mple_rows(net, model, MpleMode::compressed, constraints, offset_coefs);
    Eigen::VectorXd c(static_cast<Eigen::Index>(free.size()));
    for (std::size_t k = 0; k < free.size(); ++k) c[static_cast<Eigen::Index>(k)] = theta_hat[static_cast<std::size_t>(free[k])];
    res.loglik = detail::logistic_loglik(rows, c);
    res.delta_loglik = res.loglik - base.loglik;
  } else {
    if (base.boundary) throw NumericalError("dyad-independent baseline has no finite maximizer");
    BridgeControl bc = ctl;
    bc.proposal.constraints = constraints;
    res = target_se ? adaptive_bridge(net, model, theta_hat, base.theta_tilde, *target_se, bc)
                    : bridge_loglik(net, model, theta_hat, base.theta_tilde, bc);
    res.loglik = base.loglik + res.delta_loglik;
  }
  res.p = static_cast<int>(free.size());
  res.d = base.free_dyads;
  res.null_deviance = null_deviance(base.free_dyads);
  res.aic = -2 * res.loglik + 2 * res.p;
  res.bic = -2 * res.loglik + res.p * std::log(res.d);
  return res;
}

inline void write_loglik_report(std::ostream& os, const LoglikResult& r) {
  os << "# loglik\n";
  write_tsv_row(os, std::vector<std::string>{"key", "value"});
  write_tsv_row(os, std::vector<std::string>{"loglik", format_double(r.loglik)});
  write_tsv_row(os, std::vector<std::string>{"delta_loglik", format_double(r.delta_loglik)});
  write_tsv_row(os, std::vector<std::string>{"mc_se", format_double(r.mc_se)});
  write_tsv_row(os, std::vector<std::string>{"null_deviance", format_double(r.null_deviance)});
  write_tsv_row(os, std::vector<std::string>{"aic", format_double(r.aic)});
  write_tsv_row(os, std::vector<std::string>{"bic", format_double(r.bic)});
  write_tsv_row(os, std::vector<std::string>{"passes", std::to_string(r.passes)});
  write_tsv_row(os, std::vector<std::string>{"converged", r.converged ? "1" : "0"});
}

}  // namespace ergm
