#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ergm/error.hpp"
#include "ergm/model.hpp"
#include "ergm/network.hpp"
#include "ergm/propose.hpp"
#include "ergm/rng.hpp"
#include "ergm/tsv.hpp"

namespace ergm {

struct SanConfig {
  StatVector targets;  // one per free statistic, or one per statistic (offset entries ignored)
  int runs = 4;
  long long steps_per_run = 262144;
  std::optional<double> tau0;         // default: number of targeted statistics
  std::vector<double> offset_coefs;   // one per offset statistic
  bool use_finite_offsets = false;
  std::optional<Eigen::MatrixXd> invcov_override;
  long long trace_interval = 0;       // 0 disables the statistic trace
  long long max_stored = 100000;      // differences kept per run for the covariance
  std::uint64_t seed = 0;
};

struct SanTraceRow {
  long long proposals = 0;
  std::vector<double> stats;
  double energy = 0;
};

struct SanResult {
  Network net;
  StatVector stats;  // all statistics of the final network
  double energy = 0;
  bool reached = false;  // energy hit zero
  long long proposals = 0;
  long long accepted = 0;
  int runs_completed = 0;
  Eigen::MatrixXd W;  // weights used in the last run
  Eigen::MatrixXd S;  // covariance of the stored differences of the last run
  std::vector<SanTraceRow> trace;
  std::vector<std::string> names;  // targeted statistics
};

inline double energy(const Eigen::VectorXd& g, const Eigen::VectorXd& targets, const Eigen::MatrixXd& W) {
  if (g.size() != targets.size() || W.rows() != g.size() || W.cols() != g.size())
    throw UsageError("energy: dimensions disagree");
  const Eigen::VectorXd d = g - targets;
  return d.dot(W * d);
}

// W = S+ / tr(S+).
inline Eigen::MatrixXd san_weight_update(const Eigen::MatrixXd& S) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
  const Eigen::VectorXd ev = es.eigenvalues();
  const double tol = 1e-10 * std::max(ev.cwiseAbs().maxCoeff(), 1e-300) * static_cast<double>(S.rows());
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(ev.size());
  for (Eigen::Index k = 0; k < ev.size(); ++k)
    if (ev[k] > tol) inv[k] = 1 / ev[k];
  const double tr = inv.sum();
  if (!(tr > 0)) throw NumericalError("weight update: the difference covariance is zero");
  Eigen::MatrixXd W = es.eigenvectors() * (inv / tr).asDiagonal() * es.eigenvectors().transpose();
  return (W + W.transpose()) / 2;
}

namespace detail {

// Running mean and covariance (Welford).
class RunningCov {
 public:
  explicit RunningCov(Eigen::Index q) : mean_(Eigen::VectorXd::Zero(q)), m2_(Eigen::MatrixXd::Zero(q, q)) {}
  void add(const Eigen::VectorXd& x) {
    ++n_;
    const Eigen::VectorXd d = x - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d * (x - mean_).transpose();
  }
  long long count() const { return n_; }
  Eigen::MatrixXd cov() const {
    const Eigen::MatrixXd c = m2_ / static_cast<double>(std::max<long long>(n_ - 1, 1));
    return (c + c.transpose()) / 2;
  }

 private:
  long long n_ = 0;
  Eigen::VectorXd mean_;
  Eigen::MatrixXd m2_;
};

}  // namespace detail

inline SanResult san_run(const Network& start, const BoundModel& model, const SanConfig& cfg, const ProposalConfig& proposal) {
  model.check_network(start);
  const auto free = model.free_indices();
  const auto off = model.offset_indices();
  const auto q = static_cast<Eigen::Index>(free.size());
  if (q == 0) throw UsageError("SAN needs at least one non-offset statistic");
  if (cfg.runs < 1 || cfg.steps_per_run < 1) throw UsageError("SAN needs at least one run and one step per run");
  Eigen::VectorXd targets(q);
  if (cfg.targets.size() == free.size()) {
    for (Eigen::Index k = 0; k < q; ++k) targets[k] = cfg.targets[static_cast<std::size_t>(k)];
  } else if (static_cast<int>(cfg.targets.size()) == model.p()) {
    for (Eigen::Index k = 0; k < q; ++k) targets[k] = cfg.targets[static_cast<std::size_t>(free[static_cast<std::size_t>(k)])];
  } else {
    throw UsageError("expected " + std::to_string(q) + " target statistics, got " + std::to_string(cfg.targets.size()));
  }
  for (Eigen::Index k = 0; k < q; ++k)
    if (!std::isfinite(targets[k])) throw UsageError("target statistics must be finite");
  if (cfg.offset_coefs.size() != off.size())
    throw UsageError("expected " + std::to_string(off.size()) + " offset coefficients, got " + std::to_string(cfg.offset_coefs.size()));
  // eta: only infinite offsets bias the search unless finite ones are requested
  std::vector<std::pair<int, double>> eta;
  for (std::size_t k = 0; k < off.size(); ++k) {
    const double v = cfg.offset_coefs[k];
    if (std::isnan(v)) throw UsageError("offset coefficients must not be NaN");
    if (std::isinf(v) || (cfg.use_finite_offsets && v != 0)) eta.emplace_back(off[k], v);
  }
  const double tau0 = cfg.tau0 ? *cfg.tau0 : static_cast<double>(q);
  if (!(tau0 >= 0)) throw UsageError("SAN initial temperature must be non-negative");

  SanResult res;
  res.net = start;
  for (int k : free) res.names.push_back(model.names()[static_cast<std::size_t>(k)]);
  StatVector cur = model.summary(res.net);
  Eigen::VectorXd dev(q);
  for (Eigen::Index k = 0; k < q; ++k) dev[k] = cur[static_cast<std::size_t>(free[static_cast<std::size_t>(k)])] - targets[k];
  Eigen::MatrixXd W = Eigen::MatrixXd::Identity(q, q) / static_cast<double>(q);
  if (cfg.invcov_override) {
    if (cfg.invcov_override->rows() != q || cfg.invcov_override->cols() != q)
      throw UsageError("weight override must be " + std::to_string(q) + " x " + std::to_string(q));
    W = *cfg.invcov_override;
  }
  auto record = [&](double e) {
    SanTraceRow row;
    row.proposals = res.proposals;
    for (Eigen::Index k = 0; k < q; ++k) row.stats.push_back(dev[k] + targets[k]);
    row.energy = e;
    res.trace.push_back(std::move(row));
  };

  auto engine = proposal.make(res.net);
  Rng rng(cfg.seed);
  std::vector<double> delta(static_cast<std::size_t>(model.p()));
  Eigen::VectorXd dg(q), dev_new(q);
  const long long stride = std::max<long long>(1, (cfg.steps_per_run + cfg.max_stored - 1) / std::max<long long>(cfg.max_stored, 1));
  double E = dev.dot(W * dev);
  for (int r = 0; r < cfg.runs && !res.reached; ++r) {
    const double T = cfg.runs > 1 ? tau0 * (1 - static_cast<double>(r) / (cfg.runs - 1)) : tau0;
    detail::RunningCov diffs(q);
    long long valid = 0;
    for (long long s = 0; s < cfg.steps_per_run; ++s) {
      if (E <= 0) {
        res.reached = true;
        break;
      }
      const Proposal pr = engine->propose(res.net, rng);
      ++res.proposals;
      if (pr.log_q_ratio != -HUGE_VAL) {
        ++valid;
        model.change_stats(res.net, pr.dyad.tail, pr.dyad.head, delta.data());
        const bool adding = !res.net.has_edge(pr.dyad);
        const double sign = adding ? 1.0 : -1.0;
        for (Eigen::Index k = 0; k < q; ++k) dg[k] = sign * delta[static_cast<std::size_t>(free[static_cast<std::size_t>(k)])];
        if (s % stride == 0) diffs.add(dg);
        double bias = 0;
        for (auto [k, v] : eta) {
          const double d = sign * delta[static_cast<std::size_t>(k)];
          if (d != 0) bias += v * d;  // 0 * inf counts as 0
        }
        dev_new = dev + dg;
        const double E_new = dev_new.dot(W * dev_new);
        const double dE = E_new - E;
        bool accept;
        if (bias == -HUGE_VAL) {
          accept = false;
        } else if (T == 0) {
          accept = dE < 0 || (dE == 0 && (bias >= 0 || rng.uniform_pos() < std::exp(bias)));
        } else {
          const double log_alpha = -dE / T + bias;
          accept = log_alpha >= 0 || std::log(rng.uniform_pos()) < log_alpha;
        }
        if (accept) {
          res.net.toggle(pr.dyad);
          engine->commit(res.net, pr.dyad);
          apply_toggle_inplace(cur, delta.data(), adding);
          dev = dev_new;
          E = E_new;
          ++res.accepted;
        }
      }
      if (cfg.trace_interval > 0 && res.proposals % cfg.trace_interval == 0) record(E);
    }
    if (!res.reached && E <= 0) res.reached = true;
    if (valid == 0 && !res.reached) throw DataError("SAN is frozen: no proposal is possible under the constraints");
    res.runs_completed = r + 1;
    res.S = diffs.cov();
    if (!cfg.invcov_override && diffs.count() >= q && r + 1 < cfg.runs) {
      try {
        W = san_weight_update(res.S);
      } catch (const NumericalError&) {
        // no variation in any proposed difference; keep the previous weights
      }
      E = dev.dot(W * dev);
    }
  }
  res.W = W;
  res.energy = E;
  res.stats = cur;
  return res;
}

inline void write_san_trace(std::ostream& os, const SanResult& r) {
  std::vector<std::string> header{"proposals"};
  header.insert(header.end(), r.names.begin(), r.names.end());
  header.push_back("energy");
  write_tsv_row(os, header);
  for (const auto& row : r.trace) {
    std::vector<std::string> cells{std::to_string(row.proposals)};
    for (double v : row.stats) cells.push_back(format_double(v));
    cells.push_back(format_double(row.energy));
    write_tsv_row(os, cells);
  }
}

// Whether the achieved statistics equal the targets on every targeted
// coordinate.
inline bool san_exact(const SanResult& r, const BoundModel& model, const StatVector& targets) {
  const auto free = model.free_indices();
  for (std::size_t k = 0; k < free.size(); ++k) {
    const double want = targets.size() == free.size() ? targets[k] : targets[static_cast<std::size_t>(free[k])];
    if (r.stats[static_cast<std::size_t>(free[k])] != want) return false;
  }
  return true;
}

}  // namespace ergm
