#pragma once

#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ergm/diag.hpp"
#include "ergm/error.hpp"
#include "ergm/model.hpp"
#include "ergm/network.hpp"
#include "ergm/propose.hpp"
#include "ergm/rng.hpp"
#include "ergm/sample.hpp"
#include "ergm/san.hpp"
#include "ergm/tsv.hpp"

namespace ergm {

// Synthetic population: sex, race and age columns on an empty undirected
// network.
struct PopulationSpec {
  int n = 1000;
  bool alternating_sex = true;
  std::vector<double> sex_weights{0.5, 0.5};  // F, M when not alternating
  std::vector<std::string> race_levels{"A", "B", "C"};
  std::vector<double> race_weights{0.5, 0.3, 0.2};
  double age_min = 18;
  double age_max = 65;

  void validate() const {
    if (n < 1) throw UsageError("population size must be positive");
    auto check = [](const std::vector<double>& w, const std::string& what) {
      double s = 0;
      for (double v : w) {
        if (!(v >= 0)) throw UsageError(what + " weights must be non-negative");
        s += v;
      }
      if (std::abs(s - 1) > 1e-9) throw UsageError(what + " weights must sum to 1");
    };
    if (sex_weights.size() != 2) throw UsageError("sex needs exactly two weights");
    check(sex_weights, "sex");
    if (race_levels.empty() || race_levels.size() != race_weights.size())
      throw UsageError("race levels and weights must have the same non-zero length");
    check(race_weights, "race");
    if (!(age_max >= age_min)) throw UsageError("age range is empty");
  }
};

namespace detail {

inline std::size_t draw_category(const std::vector<double>& w, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0;
  for (std::size_t k = 0; k < w.size(); ++k) {
    acc += w[k];
    if (u < acc) return k;
  }
  return w.size() - 1;
}

}  // namespace detail

inline Network generate_population(const PopulationSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  Network net(spec.n);
  std::vector<std::string> sex, race;
  std::vector<double> age, agesq, sqrtage;
  for (int v = 0; v < spec.n; ++v) {
    if (spec.alternating_sex)
      sex.push_back(v % 2 ? "M" : "F");
    else
      sex.push_back(detail::draw_category(spec.sex_weights, rng) ? "M" : "F");
    race.push_back(spec.race_levels[detail::draw_category(spec.race_weights, rng)]);
    const double a = spec.age_min + (spec.age_max - spec.age_min) * rng.uniform();
    age.push_back(a);
    agesq.push_back(a * a);
    sqrtage.push_back(std::sqrt(a));
  }
  auto& attrs = net.attributes();
  attrs.set_categorical("sex", sex);
  attrs.set_categorical("race", race);
  attrs.set_numeric("age", age);
  attrs.set_numeric("agesq", agesq);
  attrs.set_numeric("sqrtage", sqrtage);
  return net;
}

// Multiplies the pmat entry of one stratum pair (and its mirror for
// undirected networks) by a factor.
struct StratumMultiplier {
  int from = 0;
  int to = 0;
  double factor = 1;
};

inline void apply_stratum_multipliers(StratSpec& strat, const std::vector<StratumMultiplier>& mults) {
  if (mults.empty()) return;
  if (!strat.pmat) throw UsageError("stratum multipliers need an explicit pmat");
  auto& P = *strat.pmat;
  for (const auto& m : mults) {
    if (m.from < 0 || m.to < 0 || static_cast<std::size_t>(m.from) >= P.size() || static_cast<std::size_t>(m.to) >= P.size())
      throw UsageError("stratum multiplier index out of range");
    if (!(m.factor >= 0)) throw UsageError("stratum multiplier must be non-negative");
    P[static_cast<std::size_t>(m.from)][static_cast<std::size_t>(m.to)] *= m.factor;
    if (m.from != m.to) P[static_cast<std::size_t>(m.to)][static_cast<std::size_t>(m.from)] *= m.factor;
  }
}

struct BenchProposal {
  std::string label;
  ProposalConfig config;
};

// ---------------------------------------------------------------------------
// Approach to equilibrium from the empty network

struct MixingTrace {
  std::vector<std::string> names;
  std::vector<std::string> labels;
  long long interval = 0;
  // rows[proposal][k] = statistics after k * interval proposals
  std::vector<std::vector<StatVector>> rows;
};

inline MixingTrace mixing_benchmark(const Network& population, const BoundModel& model, const std::vector<double>& coefs,
                                    const std::vector<BenchProposal>& proposals, long long total_proposals,
                                    long long trace_interval, std::uint64_t seed = 0, int workers = 1) {
  if (trace_interval < 1 || total_proposals < trace_interval)
    throw UsageError("trace interval must be in [1, total proposals]");
  check_coefs(model, coefs);
  MixingTrace out;
  out.names = model.names();
  out.interval = trace_interval;
  for (const auto& p : proposals) out.labels.push_back(p.label);
  out.rows.resize(proposals.size());
  const long long rows = total_proposals / trace_interval;
  parallel_for(static_cast<int>(proposals.size()), workers, [&](int i) {
    Chain ch(population, model, coefs, proposals[static_cast<std::size_t>(i)].config.make(population),
             seed + static_cast<std::uint64_t>(i));
    auto& r = out.rows[static_cast<std::size_t>(i)];
    for (long long k = 0; k < rows; ++k) {
      r.push_back(ch.stats());
      ch.advance(trace_interval);
    }
  });
  return out;
}

inline void write_mixing_trace(std::ostream& os, const MixingTrace& t) {
  std::vector<std::string> header{"proposal", "proposals"};
  header.insert(header.end(), t.names.begin(), t.names.end());
  write_tsv_row(os, header);
  for (std::size_t p = 0; p < t.rows.size(); ++p)
    for (std::size_t k = 0; k < t.rows[p].size(); ++k) {
      std::vector<std::string> cells{t.labels[p], std::to_string(static_cast<long long>(k) * t.interval)};
      for (double v : t.rows[p][k]) cells.push_back(format_double(v));
      write_tsv_row(os, cells);
    }
}

// First trace row at which statistic k is within `tolerance` (relative) of
// `target`; -1 when never.
inline long long proposals_to_target(const MixingTrace& t, std::size_t proposal, std::size_t k, double target,
                                     double tolerance = 0.05) {
  const auto& r = t.rows.at(proposal);
  for (std::size_t i = 0; i < r.size(); ++i)
    if (std::abs(r[i][k] - target) <= tolerance * std::abs(target)) return static_cast<long long>(i) * t.interval;
  return -1;
}

// ---------------------------------------------------------------------------
// Effective sample size per proposal

struct EssRow {
  std::string label;
  std::vector<double> ess;  // per statistic; NaN for constant columns
  double min_ess = 0;
  double multivariate_ess = 0;
  double seconds = 0;
  double min_ess_per_second = 0;
  Eigen::VectorXd mean;
  Eigen::VectorXd mean_se;
  double acceptance = 0;
};

struct EssTable {
  std::vector<std::string> names;
  long long S = 0;
  long long interval = 0;
  std::vector<EssRow> rows;
};

inline EssTable ess_benchmark(const Network& population, const BoundModel& model, const std::vector<double>& coefs,
                              const std::vector<BenchProposal>& proposals, long long S, long long interval,
                              long long burnin, std::uint64_t seed = 0) {
  if (S < 8 || interval < 1 || burnin < 0) throw UsageError("ESS benchmark needs S >= 8, interval >= 1, burnin >= 0");
  check_coefs(model, coefs);
  EssTable out;
  out.names = model.names();
  out.S = S;
  out.interval = interval;
  for (std::size_t i = 0; i < proposals.size(); ++i) {
    Chain ch(population, model, coefs, proposals[i].config.make(population), seed + i);
    ch.advance(burnin);  // warm-up, not timed
    Draws X(S, model.p());
    const auto t0 = std::chrono::steady_clock::now();
    const long long before = ch.proposals(), acc_before = ch.accepted();
    for (long long s = 0; s < S; ++s) {
      ch.advance(interval);
      const StatVector g = ch.stats();
      for (int k = 0; k < model.p(); ++k) X(s, k) = g[static_cast<std::size_t>(k)];
    }
    EssRow row;
    row.label = proposals[i].label;
    row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    row.acceptance = static_cast<double>(ch.accepted() - acc_before) / static_cast<double>(ch.proposals() - before);
    row.min_ess = HUGE_VAL;
    row.mean = X.colwise().mean().transpose();
    row.mean_se = Eigen::VectorXd::Zero(model.p());
    for (int k = 0; k < model.p(); ++k) {
      const Draws col = X.col(k);
      if ((col.array() == col(0, 0)).all()) {
        row.ess.push_back(std::numeric_limits<double>::quiet_NaN());
        continue;
      }
      const double e = univariate_ess(col.col(0));
      row.ess.push_back(e);
      row.min_ess = std::min(row.min_ess, e);
      row.mean_se[k] = std::sqrt(batch_means_cov(col)(0, 0) / static_cast<double>(S));
    }
    if (row.min_ess == HUGE_VAL) row.min_ess = std::numeric_limits<double>::quiet_NaN();
    try {
      row.multivariate_ess = multivariate_ess(X).ess;
    } catch (const Error&) {
      row.multivariate_ess = std::numeric_limits<double>::quiet_NaN();
    }
    row.min_ess_per_second = row.seconds > 0 ? row.min_ess / row.seconds : std::numeric_limits<double>::quiet_NaN();
    out.rows.push_back(std::move(row));
  }
  return out;
}

// Rows are proposals; columns are per-statistic ESS followed by summaries.
inline void write_ess_table(std::ostream& os, const EssTable& t) {
  std::vector<std::string> header{"proposal"};
  header.insert(header.end(), t.names.begin(), t.names.end());
  for (const char* s : {"min_ess", "multivariate_ess", "seconds", "min_ess_per_second", "acceptance"}) header.push_back(s);
  write_tsv_row(os, header);
  for (const auto& r : t.rows) {
    std::vector<std::string> cells{r.label};
    for (double e : r.ess) cells.push_back(format_double(e));
    for (double v : {r.min_ess, r.multivariate_ess, r.seconds, r.min_ess_per_second, r.acceptance}) cells.push_back(format_double(v));
    write_tsv_row(os, cells);
  }
}

// ---------------------------------------------------------------------------
// SAN at a fixed temperature of zero, compared across proposals

// diag(1/t_k^2) / sum_k 1/t_k^2; zero targets get weight as if they were 1.
inline Eigen::MatrixXd reciprocal_square_weights(const std::vector<double>& targets) {
  Eigen::VectorXd w(static_cast<Eigen::Index>(targets.size()));
  for (std::size_t k = 0; k < targets.size(); ++k) {
    const double t = targets[k] == 0 ? 1.0 : targets[k];
    w[static_cast<Eigen::Index>(k)] = 1 / (t * t);
  }
  return (w / w.sum()).asDiagonal();
}

struct SanBenchRow {
  std::string label;
  SanResult result;
  double seconds = 0;
};

inline std::vector<SanBenchRow> san_benchmark(const Network& population, const BoundModel& model,
                                              const std::vector<double>& targets, const std::vector<double>& offset_coefs,
                                              const std::vector<BenchProposal>& proposals, long long total_proposals,
                                              long long trace_interval, std::uint64_t seed = 0) {
  std::vector<SanBenchRow> out;
  for (std::size_t i = 0; i < proposals.size(); ++i) {
    SanConfig cfg;
    cfg.targets = targets;
    cfg.offset_coefs = offset_coefs;
    cfg.runs = 1;
    cfg.tau0 = 0;
    cfg.steps_per_run = total_proposals;
    cfg.trace_interval = trace_interval;
    cfg.invcov_override = reciprocal_square_weights(targets);
    cfg.seed = seed + i;
    const auto t0 = std::chrono::steady_clock::now();
    SanBenchRow row{proposals[i].label, san_run(population, model, cfg, proposals[i].config), 0};
    row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.push_back(std::move(row));
  }
  return out;
}

inline void write_san_bench(std::ostream& os, const std::vector<SanBenchRow>& rows) {
  write_tsv_row(os, std::vector<std::string>{"proposal", "proposals", "energy"});
  for (const auto& r : rows)
    for (const auto& t : r.result.trace)
      write_tsv_row(os, std::vector<std::string>{r.label, std::to_string(t.proposals), format_double(t.energy)});
}

}  // namespace ergm
