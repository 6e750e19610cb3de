#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "ergm/diag.hpp"
#include "ergm/error.hpp"
#include "ergm/model.hpp"
#include "ergm/network.hpp"
#include "ergm/propose.hpp"
#include "ergm/rng.hpp"
#include "ergm/tsv.hpp"

namespace ergm {

struct SamplerConfig {
  long long burnin = 16384;
  long long interval = 1024;
  long long samplesize = 1024;
  std::optional<double> target_ess;
  int chains = 1;
  int workers = 1;
  std::uint64_t seed = 0;
  int max_rounds = 100;
  // Adaptive mode treats a Geweke p-value below this as nonconvergence.
  double geweke_pvalue = 0.2;
  bool keep_edgelists = false;

  void validate() const {
    if (burnin < 0) throw UsageError("burnin must be nonnegative");
    if (interval < 1) throw UsageError("interval must be positive");
    if (samplesize < 1) throw UsageError("samplesize must be positive");
    if (chains < 1) throw UsageError("chains must be positive");
    if (workers < 1) throw UsageError("workers must be positive");
    if (max_rounds < 1) throw UsageError("max_rounds must be positive");
    if (target_ess && !(*target_ess > 0)) throw UsageError("target ESS must be positive");
  }
};

// Retained draws, one block per chain.
struct SampleMatrix {
  std::vector<std::string> names;
  std::vector<Draws> chains;
  long long interval = 1;  // spacing of retained draws after any thinning
  int thinning = 0;        // number of times every other draw was discarded

  Eigen::Index rows() const {
    Eigen::Index n = 0;
    for (const auto& c : chains) n += c.rows();
    return n;
  }
  Eigen::Index cols() const { return static_cast<Eigen::Index>(names.size()); }

  Draws pooled() const {
    Draws out(rows(), cols());
    Eigen::Index r = 0;
    for (const auto& c : chains) {
      out.middleRows(r, c.rows()) = c;
      r += c.rows();
    }
    return out;
  }

  Eigen::VectorXd mean() const { return pooled().colwise().mean().transpose(); }

  void write_tsv(std::ostream& os) const {
    std::vector<std::string> header;
    if (chains.size() > 1) header.push_back("chain");
    header.insert(header.end(), names.begin(), names.end());
    write_tsv_row(os, header);
    for (std::size_t c = 0; c < chains.size(); ++c)
      for (Eigen::Index r = 0; r < chains[c].rows(); ++r) {
        if (chains.size() > 1) os << (c + 1) << '\t';
        std::vector<double> row(static_cast<std::size_t>(chains[c].cols()));
        for (Eigen::Index k = 0; k < chains[c].cols(); ++k) row[static_cast<std::size_t>(k)] = chains[c](r, k);
        write_tsv_row(os, row);
      }
  }
};

// sign * theta' delta, with inf * 0 taken as 0. NaN (opposing infinite
// offsets) is reported as -Inf.
inline double log_change_ratio(const std::vector<double>& coefs, const double* delta, bool adding) {
  double acc = 0;
  for (std::size_t k = 0; k < coefs.size(); ++k) {
    if (delta[k] == 0) continue;
    acc += coefs[k] * delta[k];
  }
  if (std::isnan(acc)) return -HUGE_VAL;
  return adding ? acc : -acc;
}

struct StepOutcome {
  bool accepted = false;
  Dyad dyad;
  double log_ratio = 0;
};

// One Metropolis-Hastings step. On acceptance the network, the proposal's
// bookkeeping and current_stats are updated. `delta` is scratch of length p.
inline StepOutcome mh_step(Network& net, const BoundModel& model, const std::vector<double>& coefs,
                           ProposalEngine& proposal, StatVector& current_stats, Rng& rng, std::vector<double>& delta) {
  StepOutcome out;
  const Proposal pr = proposal.propose(net, rng);
  out.dyad = pr.dyad;
  if (pr.log_q_ratio == -HUGE_VAL) {
    out.log_ratio = -HUGE_VAL;
    return out;
  }
  delta.resize(static_cast<std::size_t>(model.p()));
  model.change_stats(net, pr.dyad.tail, pr.dyad.head, delta.data());
  const bool adding = !net.has_edge(pr.dyad);
  out.log_ratio = log_change_ratio(coefs, delta.data(), adding) + pr.log_q_ratio;
  if (std::isnan(out.log_ratio)) out.log_ratio = -HUGE_VAL;
  if (out.log_ratio == -HUGE_VAL) return out;
  if (out.log_ratio < 0 && std::log(rng.uniform_pos()) >= out.log_ratio) return out;
  net.toggle(pr.dyad);
  proposal.commit(net, pr.dyad);
  apply_toggle_inplace(current_stats, delta.data(), adding);
  out.accepted = true;
  return out;
}

inline void check_coefs(const BoundModel& model, const std::vector<double>& coefs) {
  if (static_cast<int>(coefs.size()) != model.p())
    throw UsageError("expected " + std::to_string(model.p()) + " coefficients, got " + std::to_string(coefs.size()));
  for (int k = 0; k < model.p(); ++k) {
    const double c = coefs[static_cast<std::size_t>(k)];
    if (std::isnan(c)) throw UsageError("coefficient " + model.names()[static_cast<std::size_t>(k)] + " is NA");
    if (std::isinf(c) && !model.is_offset(k))
      throw UsageError("coefficient " + model.names()[static_cast<std::size_t>(k)] + " is infinite but not an offset");
  }
}

// A single Markov chain. Statistics are tracked as the change from the
// starting network and added back when read out.
class Chain {
 public:
  Chain(Network net, const BoundModel& model, std::vector<double> coefs, std::unique_ptr<ProposalEngine> proposal,
        std::uint64_t seed)
      : net_(std::move(net)),
        model_(&model),
        coefs_(std::move(coefs)),
        proposal_(std::move(proposal)),
        rng_(seed),
        start_(model.summary(net_)),
        delta_(start_.size(), 0.0) {}

  void advance(long long steps) {
    for (long long s = 0; s < steps; ++s) {
      const StepOutcome o = mh_step(net_, *model_, coefs_, *proposal_, delta_, rng_, scratch_);
      ++proposals_;
      accepted_ += o.accepted;
    }
  }

  StatVector stats() const {
    StatVector out = start_;
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += delta_[k];
    return out;
  }

  const Network& network() const { return net_; }
  Network& network() { return net_; }
  ProposalEngine& proposal() { return *proposal_; }
  Rng& rng() { return rng_; }
  long long proposals() const { return proposals_; }
  long long accepted() const { return accepted_; }

 private:
  Network net_;
  const BoundModel* model_;
  std::vector<double> coefs_;
  std::unique_ptr<ProposalEngine> proposal_;
  Rng rng_;
  StatVector start_, delta_;
  std::vector<double> scratch_;
  long long proposals_ = 0, accepted_ = 0;
};

// Runs fn(0..count-1) on up to `workers` threads.
inline void parallel_for(int count, int workers, const std::function<void(int)>& fn) {
  if (workers <= 1 || count <= 1) {
    for (int c = 0; c < count; ++c) fn(c);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
  std::vector<std::thread> pool;
  for (int w = 0; w < std::min(workers, count); ++w)
    pool.emplace_back([&] {
      for (int c = next++; c < count; c = next++) {
        try {
          fn(c);
        } catch (...) {
          errors[static_cast<std::size_t>(c)] = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

struct SimulationResult {
  SampleMatrix sample;
  std::vector<Network> networks;  // final state of each chain
  // Per chain, per retained draw, the sorted edge list (when requested).
  std::vector<std::vector<std::vector<Dyad>>> edgelists;
  double acceptance_rate = 0;
};

namespace detail {

inline std::vector<Chain> make_chains(const Network& net, const BoundModel& model, const std::vector<double>& coefs,
                                      const ProposalConfig& proposal, const SamplerConfig& cfg) {
  cfg.validate();
  model.check_network(net);
  check_coefs(model, coefs);
  std::vector<Chain> chains;
  for (int c = 0; c < cfg.chains; ++c)
    chains.emplace_back(net, model, coefs, proposal.make(net), cfg.seed + static_cast<std::uint64_t>(c));
  return chains;
}

inline double acceptance(const std::vector<Chain>& chains) {
  long long p = 0, a = 0;
  for (const auto& c : chains) {
    p += c.proposals();
    a += c.accepted();
  }
  return p ? static_cast<double>(a) / static_cast<double>(p) : 0.0;
}

}  // namespace detail

// Called with (chain, draw index, network) for every retained draw; calls for
// different chains may run concurrently.
using DrawCallback = std::function<void(int, long long, const Network&)>;

// Fixed schedule: burnin steps, then samplesize draws `interval` steps apart.
inline SimulationResult run_chain(const Network& net, const BoundModel& model, const std::vector<double>& coefs,
                                  const ProposalConfig& proposal, const SamplerConfig& cfg,
                                  const DrawCallback& on_draw = {}) {
  std::vector<Chain> chains = detail::make_chains(net, model, coefs, proposal, cfg);
  SimulationResult res;
  res.sample.names = model.names();
  res.sample.interval = cfg.interval;
  res.sample.chains.assign(chains.size(), Draws());
  if (cfg.keep_edgelists) res.edgelists.assign(chains.size(), {});
  const auto p = static_cast<Eigen::Index>(model.p());
  parallel_for(cfg.chains, cfg.workers, [&](int c) {
    Chain& ch = chains[static_cast<std::size_t>(c)];
    Draws& out = res.sample.chains[static_cast<std::size_t>(c)];
    out.resize(static_cast<Eigen::Index>(cfg.samplesize), p);
    ch.advance(cfg.burnin);
    for (long long s = 0; s < cfg.samplesize; ++s) {
      ch.advance(cfg.interval);
      const StatVector st = ch.stats();
      for (Eigen::Index k = 0; k < p; ++k) out(static_cast<Eigen::Index>(s), k) = st[static_cast<std::size_t>(k)];
      if (cfg.keep_edgelists) res.edgelists[static_cast<std::size_t>(c)].push_back(ch.network().sorted_edges());
      if (on_draw) on_draw(c, s, ch.network());
    }
  });
  for (auto& ch : chains) res.networks.push_back(ch.network());
  res.acceptance_rate = detail::acceptance(chains);
  return res;
}

struct AdaptiveRound {
  int round = 0;
  long long draws_per_chain = 0;  // retained after thinning and burn-in removal
  long long interval = 0;
  double burnin_s0 = 0;
  double geweke_p = std::numeric_limits<double>::quiet_NaN();
  double ess = std::numeric_limits<double>::quiet_NaN();
};

struct AdaptiveResult : SimulationResult {
  bool converged = false;
  int rounds = 0;
  double ess = 0;
  double geweke_p = std::numeric_limits<double>::quiet_NaN();
  long long burnin_removed = 0;  // draws per chain dropped as burn-in, summed over rounds
  std::vector<AdaptiveRound> history;
};

// Scalarization direction for the burn-in regression: the non-offset
// coefficients, normalized; equal weights if they are all zero.
inline Eigen::VectorXd burnin_direction(const BoundModel& model, const std::vector<double>& coefs) {
  Eigen::VectorXd d = Eigen::VectorXd::Zero(model.p());
  for (int k = 0; k < model.p(); ++k)
    if (!model.is_offset(k)) d[k] = coefs[static_cast<std::size_t>(k)];
  if (d.norm() == 0)
    for (int k = 0; k < model.p(); ++k)
      if (!model.is_offset(k)) d[k] = 1;
  if (d.norm() == 0) d.setOnes();
  return d / d.norm();
}

// Draws are extended until the retained sample passes the Geweke check and
// reaches the target effective sample size. Each chain follows the same
// schedule; ESS is summed across chains and the Geweke check uses the
// smallest per-chain p-value.
inline AdaptiveResult adaptive_run(const Network& net, const BoundModel& model, const std::vector<double>& coefs,
                                   const ProposalConfig& proposal, const SamplerConfig& cfg) {
  if (!cfg.target_ess) throw UsageError("adaptive sampling needs a target effective sample size");
  const double target = *cfg.target_ess;
  std::vector<Chain> chains = detail::make_chains(net, model, coefs, proposal, cfg);
  const auto p = static_cast<Eigen::Index>(model.p());
  const std::size_t C = chains.size();
  const Eigen::VectorXd dir = burnin_direction(model, coefs);

  std::vector<std::vector<StatVector>> rows(C);
  long long interval = cfg.interval;
  long long pending = cfg.samplesize;
  AdaptiveResult res;
  res.sample.names = model.names();

  parallel_for(cfg.chains, cfg.workers, [&](int c) { chains[static_cast<std::size_t>(c)].advance(cfg.burnin); });

  auto as_draws = [&](const std::vector<StatVector>& r) {
    Draws X(static_cast<Eigen::Index>(r.size()), p);
    for (std::size_t s = 0; s < r.size(); ++s)
      for (Eigen::Index k = 0; k < p; ++k) X(static_cast<Eigen::Index>(s), k) = r[s][static_cast<std::size_t>(k)];
    return X;
  };

  for (int round = 1; round <= cfg.max_rounds; ++round) {
    res.rounds = round;
    AdaptiveRound rec;
    rec.round = round;
    // (1) and (7): extend every chain
    parallel_for(cfg.chains, cfg.workers, [&](int c) {
      Chain& ch = chains[static_cast<std::size_t>(c)];
      auto& r = rows[static_cast<std::size_t>(c)];
      for (long long s = 0; s < pending; ++s) {
        ch.advance(interval);
        r.push_back(ch.stats());
      }
    });
    // (2) thin while the sample is more than twice the requested size,
    // keeping the most recent draw of each pair
    while (static_cast<long long>(rows[0].size()) > 2 * cfg.samplesize) {
      for (auto& r : rows) {
        std::vector<StatVector> kept;
        for (std::size_t k = (r.size() % 2 == 0) ? 1 : 0; k < r.size(); k += 2) kept.push_back(std::move(r[k]));
        r = std::move(kept);
      }
      interval *= 2;
      ++res.sample.thinning;
    }
    rec.interval = interval;
    // (3) burn-in, dropped from the accumulated sample
    double s0_max = 0;
    long long drop = 0;
    if (rows[0].size() >= 16) {
      for (std::size_t c = 0; c < C; ++c) {
        const BurninFit fit = estimate_burnin(as_draws(rows[c]), dir);
        if (!fit.flat) s0_max = std::max(s0_max, fit.s0);
      }
      drop = static_cast<long long>(std::floor(s0_max));
      drop = std::min<long long>(drop, static_cast<long long>(rows[0].size()));
      for (auto& r : rows) r.erase(r.begin(), r.begin() + drop);
    }
    rec.burnin_s0 = s0_max;
    res.burnin_removed += drop;
    rec.draws_per_chain = static_cast<long long>(rows[0].size());
    // (4) and (5): Geweke on what is left
    double gp = 1;
    bool usable = true;
    try {
      for (std::size_t c = 0; c < C; ++c) gp = std::min(gp, geweke_test(as_draws(rows[c])));
    } catch (const Error&) {
      usable = false;
    }
    rec.geweke_p = usable ? gp : std::numeric_limits<double>::quiet_NaN();
    res.geweke_p = rec.geweke_p;
    if (!usable || gp < cfg.geweke_pvalue) {
      res.history.push_back(rec);
      pending = cfg.samplesize;
      continue;
    }
    // (6) effective sample size
    double ess = 0;
    try {
      for (std::size_t c = 0; c < C; ++c) ess += multivariate_ess(as_draws(rows[c])).ess;
    } catch (const Error&) {
      ess = 0;
    }
    rec.ess = ess;
    res.ess = ess;
    res.history.push_back(rec);
    if (ess >= target) {
      res.converged = true;
      break;
    }
    // (7) extrapolate the remaining steps from the current ESS/S ratio
    const double base = static_cast<double>(interval) * static_cast<double>(cfg.samplesize);
    double extra = ess > 0 ? base * (target / ess - 1) : 16 * base;
    extra = std::clamp(extra, base / 4, 16 * base);
    pending = std::max<long long>(1, static_cast<long long>(std::ceil(extra / static_cast<double>(interval))));
  }

  res.sample.interval = interval;
  for (std::size_t c = 0; c < C; ++c) res.sample.chains.push_back(as_draws(rows[c]));
  for (auto& ch : chains) res.networks.push_back(ch.network());
  res.acceptance_rate = detail::acceptance(chains);
  return res;
}

// Dispatches on the configuration: adaptive when a target ESS is set.
inline SimulationResult simulate(const Network& net, const BoundModel& model, const std::vector<double>& coefs,
                                 const ProposalConfig& proposal, const SamplerConfig& cfg, bool* converged = nullptr) {
  if (cfg.target_ess) {
    AdaptiveResult r = adaptive_run(net, model, coefs, proposal, cfg);
    if (converged) *converged = r.converged;
    return r;
  }
  if (converged) *converged = true;
  return run_chain(net, model, coefs, proposal, cfg);
}

}  // namespace ergm
