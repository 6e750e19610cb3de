#pragma once

#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ergm/bench.hpp"
#include "ergm/diag.hpp"
#include "ergm/error.hpp"
#include "ergm/infer.hpp"
#include "ergm/loglik.hpp"
#include "ergm/network.hpp"
#include "ergm/sample.hpp"
#include "ergm/san.hpp"
#include "ergm/tsv.hpp"
#include "ergm/workflow.hpp"

namespace ergm {

namespace cli_detail {

// A flag value, or the contents of the file it names when it starts with '@'.
inline std::string resolve_value(const std::string& v) {
  if (v.empty() || v[0] != '@') return v;
  std::ifstream f(v.substr(1));
  if (!f) throw DataError("cannot open '" + v.substr(1) + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// Comma, tab or newline separated numbers.
inline std::vector<double> parse_vector(const std::string& flag, const std::string& raw) {
  std::string text = resolve_value(raw);
  for (char& c : text)
    if (c == '\t' || c == '\n' || c == '\r' || c == ' ') c = ',';
  std::vector<double> out;
  for (const auto& cell : split(text, ',')) {
    if (cell.empty()) continue;
    double v;
    if (!try_parse_double(cell, v)) throw UsageError(flag + ": cannot parse '" + cell + "' as a number");
    out.push_back(v);
  }
  return out;
}

struct Common {
  std::string network;
  std::string attributes;
  int nodes = 0;
  bool directed = false;
  std::string formula;
  std::string constraints = ".";
  std::string proposal = "auto";
  std::uint64_t seed = 0;
  std::string out;
  std::string offset_coef;
};

inline void add_io(CLI::App* app, Common& c) {
  app->add_option("--network", c.network, "network file (header lines %n, %directed, %bipartite; then 1-based edges)");
  app->add_option("--attributes", c.attributes, "vertex attribute CSV (first column 'vertex')");
  app->add_option("--nodes", c.nodes, "start from an empty network of this size when --network is absent");
  app->add_flag("--directed", c.directed, "with --nodes: make the empty network directed");
  app->add_option("--out", c.out, "write output here instead of stdout");
  app->add_option("--seed", c.seed, "random seed");
}

inline void add_model(CLI::App* app, Common& c) {
  app->add_option("--formula", c.formula, "model formula, e.g. edges + triangle")->required();
  app->add_option("--constraints", c.constraints, "constraint formula, e.g. bd(maxout=1) + blocks(attr=\"sex\", levels2=diag)");
  app->add_option("--proposal", c.proposal, "proposal: auto, uniform, tnt or bdstrat")
      ->check(CLI::IsMember({"auto", "uniform", "tnt", "bdstrat"}));
  app->add_option("--offset-coef", c.offset_coef, "coefficients of offset terms, comma separated or @file");
}

inline void add_sampler(CLI::App* app, SamplerConfig& s) {
  app->add_option("--burnin", s.burnin, "MCMC burn-in steps");
  app->add_option("--interval", s.interval, "MCMC steps between retained draws");
  app->add_option("--chains", s.chains, "parallel chains");
  app->add_option("--workers", s.workers, "worker threads");
}

inline Network load_input(const Common& c) {
  std::optional<std::string> attrs;
  if (!c.attributes.empty()) attrs = c.attributes;
  if (!c.network.empty()) return load_network(c.network, attrs);
  if (c.nodes < 1) throw UsageError("either --network or --nodes is required");
  Network net(c.nodes, c.directed);
  if (attrs) {
    std::ifstream a(*attrs);
    if (!a) throw DataError("cannot open attribute file '" + *attrs + "'");
    net.attributes() = read_attributes(a, static_cast<std::size_t>(net.size()));
  }
  return net;
}

inline std::vector<double> offset_coefs(const Common& c) {
  return c.offset_coef.empty() ? std::vector<double>{} : parse_vector("--offset-coef", c.offset_coef);
}

inline ProposalConfig proposal_config(const Common& c) {
  ProposalConfig pc;
  pc.kind = parse_proposal_kind(c.proposal);
  pc.constraints = parse_constraint_formula(resolve_value(c.constraints));
  return pc;
}

// stdout, or the --out file.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) : os_(&fallback) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw DataError("cannot write '" + path + "'");
      os_ = file_.get();
    }
  }
  std::ostream& operator*() { return *os_; }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* os_;
};

inline std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw DataError("cannot write '" + path + "'");
  return f;
}

// Reads a statistics TSV: a header row, an optional leading 'chain' column.
inline SampleMatrix read_stats(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open statistics file '" + path + "'");
  std::string line;
  if (!std::getline(f, line)) throw DataError("statistics file '" + path + "' is empty");
  std::vector<std::string> header = split(line, '\t');
  const bool chained = !header.empty() && header[0] == "chain";
  SampleMatrix m;
  m.names.assign(header.begin() + (chained ? 1 : 0), header.end());
  if (m.names.empty()) throw DataError("statistics file has no statistic columns");
  std::vector<std::vector<std::vector<double>>> rows;
  std::vector<std::string> chain_ids;
  long long lineno = 1;
  while (std::getline(f, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split(line, '\t');
    if (cells.size() != header.size())
      throw DataError("line " + std::to_string(lineno) + ": expected " + std::to_string(header.size()) + " fields, got " +
                      std::to_string(cells.size()));
    std::size_t idx = 0;
    if (chained) {
      auto it = std::find(chain_ids.begin(), chain_ids.end(), cells[0]);
      idx = static_cast<std::size_t>(it - chain_ids.begin());
      if (it == chain_ids.end()) {
        chain_ids.push_back(cells[0]);
        rows.emplace_back();
      }
    } else if (rows.empty()) {
      rows.emplace_back();
    }
    std::vector<double> r;
    for (std::size_t k = chained ? 1 : 0; k < cells.size(); ++k) {
      double v;
      if (!try_parse_double(cells[k], v) || !std::isfinite(v))
        throw DataError("line " + std::to_string(lineno) + ": bad value '" + cells[k] + "'");
      r.push_back(v);
    }
    rows[idx].push_back(std::move(r));
  }
  if (rows.empty()) throw DataError("statistics file has no rows");
  for (const auto& c : rows) {
    Draws d(static_cast<Eigen::Index>(c.size()), m.cols());
    for (std::size_t i = 0; i < c.size(); ++i)
      for (Eigen::Index k = 0; k < m.cols(); ++k) d(static_cast<Eigen::Index>(i), k) = c[i][static_cast<std::size_t>(k)];
    m.chains.push_back(std::move(d));
  }
  return m;
}

inline void write_key_values(std::ostream& os, const std::vector<std::pair<std::string, std::string>>& kv) {
  write_tsv_row(os, std::vector<std::string>{"key", "value"});
  for (const auto& [k, v] : kv) write_tsv_row(os, std::vector<std::string>{k, v});
}

inline StratumMultiplier parse_multiplier(const std::string& s) {
  const auto parts = split(s, ',');
  if (parts.size() != 3) throw UsageError("--multiplier expects from,to,factor (0-based level indices)");
  double a, b, f;
  if (!try_parse_double(parts[0], a) || !try_parse_double(parts[1], b) || !try_parse_double(parts[2], f) || a < 0 ||
      b < 0 || a != std::floor(a) || b != std::floor(b))
    throw UsageError("--multiplier: cannot parse '" + s + "'");
  return {static_cast<int>(a), static_cast<int>(b), f};
}

}  // namespace cli_detail

// Parses argv and runs one subcommand. Results go to `out` (or --out), a
// single "error<TAB>kind<TAB>message" line goes to `err` on failure.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  using namespace cli_detail;
  CLI::App app("Simulation and estimation of exponential-family random graph models", "ergm");
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "help for every subcommand");

  Common c;
  SamplerConfig sampler;
  std::string coef;

  // simulate
  auto* sim = app.add_subcommand("simulate", "draw networks from a model");
  std::string sim_output = "stats";
  std::optional<double> sim_ess;
  long long nsim = 1024;
  add_io(sim, c);
  add_model(sim, c);
  add_sampler(sim, sampler);
  sim->add_option("--coef", coef, "model coefficients (free terms, or all terms), comma separated or @file")->required();
  sim->add_option("--nsim", nsim, "retained draws per chain (with --target-ess: per round)");
  sim->add_option("--target-ess", sim_ess, "run adaptively until the multivariate ESS reaches this");
  sim->add_option("--output", sim_output, "stats, network (final state) or edgelist (per draw)")
      ->check(CLI::IsMember({"stats", "network", "edgelist"}));

  // san
  auto* san = app.add_subcommand("san", "anneal a network towards target statistics");
  SanConfig san_cfg;
  std::string targets, san_trace;
  std::optional<double> tau0;
  add_io(san, c);
  add_model(san, c);
  san->add_option("--targets", targets, "target statistics of the non-offset terms, comma separated or @file")->required();
  san->add_option("--runs", san_cfg.runs, "annealing runs");
  san->add_option("--steps", san_cfg.steps_per_run, "proposals per run");
  san->add_option("--tau0", tau0, "initial temperature (default: number of targeted statistics)");
  san->add_option("--trace", san_trace, "write the statistic and energy trace TSV here");
  san->add_option("--trace-interval", san_cfg.trace_interval, "proposals between trace rows (0: 1000 when --trace is set)");
  san->add_option("--max-stored", san_cfg.max_stored, "proposed differences kept per run for the weight update");
  san->add_flag("--finite-offsets", san_cfg.use_finite_offsets, "let finite offset coefficients bias the search");
  std::string san_attrs_out;
  san->add_option("--attributes-out", san_attrs_out, "also write the vertex attributes of the result here");

  // mple
  auto* mp = app.add_subcommand("mple", "maximum pseudo-likelihood estimate");
  std::string se = "naive", mple_data;
  long long sandwich_s = 1024;
  add_io(mp, c);
  add_model(mp, c);
  add_sampler(mp, sampler);
  mp->add_option("--se", se, "standard errors: naive or sandwich")->check(CLI::IsMember({"naive", "sandwich"}));
  mp->add_option("--nsim", sandwich_s, "draws at the estimate for the sandwich estimate");
  mp->add_option("--data", mple_data, "instead of fitting, print the design rows: compressed, array or dyadlist")
      ->check(CLI::IsMember({"compressed", "array", "dyadlist"}));

  // fit
  auto* fit = app.add_subcommand("fit", "Monte-Carlo maximum likelihood estimate");
  McmleControl mc;
  std::string init = "auto", termination = "confidence", init_coef, target_stats;
  std::optional<double> fit_ess;
  bool allow_inexact = false;
  long long fit_s = 1024;
  add_io(fit, c);
  add_model(fit, c);
  add_sampler(fit, mc.sampler);
  fit->add_option("--init", init, "starting point: auto, mple, cd or given")->check(CLI::IsMember({"auto", "mple", "cd", "given"}));
  fit->add_option("--init-coef", init_coef, "starting coefficients for --init given");
  fit->add_option("--termination", termination, "stopping rule: hotelling, hummel or confidence")
      ->check(CLI::IsMember({"hotelling", "hummel", "confidence"}));
  fit->add_option("--nsim", fit_s, "draws per iteration");
  fit->add_option("--target-ess", fit_ess, "sample each iteration adaptively to this ESS");
  fit->add_option("--maxit", mc.maxit, "iteration limit");
  fit->add_option("--depth", mc.termination.depth, "hull scaling depth");
  fit->add_option("--hotelling-alpha", mc.termination.hotelling_alpha, "Hotelling stopping p-value threshold");
  fit->add_option("--confidence-alpha", mc.termination.confidence_alpha, "confidence stopping level");
  fit->add_option("--confidence-delta", mc.termination.confidence_delta, "confidence stopping tolerance");
  fit->add_option("--cd-steps", mc.cd.steps, "contrastive divergence chain steps");
  fit->add_option("--cd-nsim", mc.cd.samplesize, "contrastive divergence restarts per iteration");
  fit->add_option("--cd-maxit", mc.cd.maxit, "contrastive divergence iteration limit");
  fit->add_option("--target-stats", target_stats, "fit to these statistics instead of the network's (SAN first)");
  fit->add_flag("--allow-inexact-targets", allow_inexact, "continue when SAN misses the target statistics");
  SanConfig fit_san;
  fit->add_option("--san-runs", fit_san.runs, "annealing runs for --target-stats");
  fit->add_option("--san-steps", fit_san.steps_per_run, "annealing proposals per run for --target-stats");

  // loglik
  auto* ll = app.add_subcommand("loglik", "log-likelihood of a coefficient vector by bridge sampling");
  BridgeControl bc;
  std::optional<double> target_se;
  add_io(ll, c);
  add_model(ll, c);
  ll->add_option("--coef", coef, "coefficients (free terms, or all terms)")->required();
  ll->add_option("--bridge-J", bc.J, "bridge points");
  ll->add_option("--bridge-K", bc.K, "draws per bridge point");
  ll->add_option("--bridge-interval", bc.interval, "MCMC steps between bridge draws");
  ll->add_option("--target-se", target_se, "add bridge passes until the MC standard error is below this");

  // ess
  auto* es = app.add_subcommand("ess", "effective sample sizes and the Geweke test of a statistics TSV");
  std::string stats_path, es_out;
  double geweke_first = 0.1, geweke_last = 0.5;
  es->add_option("--stats", stats_path, "statistics TSV (header row; optional leading 'chain' column)")->required();
  es->add_option("--geweke-first", geweke_first, "fraction of draws in the first Geweke window");
  es->add_option("--geweke-last", geweke_last, "fraction of draws in the last Geweke window");
  es->add_option("--out", es_out, "write output here instead of stdout");

  // bench
  auto* bench = app.add_subcommand("bench", "proposal comparisons on a synthetic population");
  bench->require_subcommand(1);
  PopulationSpec pop;
  pop.n = 2000;
  std::uint64_t pop_seed = 1;
  std::string bench_formula = "edges + nodematch(\"race\")", bench_coef = "-4,2";
  std::string bench_cons = "bd(maxout=1) + blocks(attr=\"sex\", levels2=diag)";
  std::string bench_pmat = "[[4,1,1],[1,4,1],[1,1,4]]";
  std::vector<std::string> multipliers;
  std::string bench_out;
  std::uint64_t bench_seed = 0;
  long long total = 1000000, trace_every = 10000, ess_s = 100000, ess_interval = 100, ess_burnin = 1000000;
  std::string bench_targets = "600,500", bench_offsets;
  auto add_bench = [&](CLI::App* b) {
    b->add_option("--population-size", pop.n, "synthetic population size");
    b->add_option("--population-seed", pop_seed, "seed of the population generator");
    b->add_option("--formula", bench_formula, "model formula");
    b->add_option("--constraints", bench_cons, "hard constraints shared by every proposal");
    b->add_option("--pmat", bench_pmat, "race mixing weights of the stratified proposal");
    b->add_option("--multiplier", multipliers, "scale a stratum weight: from,to,factor (repeatable)");
    b->add_option("--seed", bench_seed, "random seed");
    b->add_option("--out", bench_out, "write output here instead of stdout");
  };
  auto* bmix = bench->add_subcommand("mixing", "statistic traces from the empty network");
  add_bench(bmix);
  bmix->add_option("--coef", bench_coef, "model coefficients");
  bmix->add_option("--proposals", total, "total proposals per variant");
  bmix->add_option("--trace-interval", trace_every, "proposals between trace rows");
  auto* bess = bench->add_subcommand("ess", "effective sample size table");
  add_bench(bess);
  bess->add_option("--coef", bench_coef, "model coefficients");
  bess->add_option("--nsim", ess_s, "retained draws");
  bess->add_option("--interval", ess_interval, "proposals between draws");
  bess->add_option("--burnin", ess_burnin, "burn-in proposals");
  auto* bsan = bench->add_subcommand("san", "zero-temperature annealing curves");
  add_bench(bsan);
  bsan->add_option("--targets", bench_targets, "target statistics");
  bsan->add_option("--offset-coef", bench_offsets, "offset coefficients");
  bsan->add_option("--proposals", total, "total proposals per variant");
  bsan->add_option("--trace-interval", trace_every, "proposals between trace rows");

  auto fail = [&](const char* kind, const std::string& msg, int code) {
    std::string line = msg;
    for (char& ch : line)
      if (ch == '\n' || ch == '\t') ch = ' ';
    err << "error\t" << kind << '\t' << line << '\n';
    return code;
  };

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return 0;
    return fail("usage", e.what(), 2);
  }

  try {
    if (*sim) {
      const Network net = load_input(c);
      const BoundModel model(resolve_value(c.formula), net);
      const std::vector<double> full = model.full_coefs(parse_vector("--coef", coef), offset_coefs(c));
      sampler.samplesize = nsim;
      sampler.seed = c.seed;
      sampler.target_ess = sim_ess;
      sampler.keep_edgelists = sim_output == "edgelist";
      bool converged = true;
      const SimulationResult r = simulate(net, model, full, proposal_config(c), sampler, &converged);
      Sink o(c.out, out);
      if (sim_output == "stats") {
        r.sample.write_tsv(*o);
      } else if (sim_output == "network") {
        write_network(*o, r.networks.front());
      } else {
        const bool chained = r.edgelists.size() > 1;
        std::vector<std::string> header;
        if (chained) header.push_back("chain");
        header.insert(header.end(), {"draw", "tail", "head"});
        write_tsv_row(*o, header);
        for (std::size_t ch = 0; ch < r.edgelists.size(); ++ch)
          for (std::size_t d = 0; d < r.edgelists[ch].size(); ++d)
            for (const Dyad& e : r.edgelists[ch][d]) {
              if (chained) *o << (ch + 1) << '\t';
              *o << (d + 1) << '\t' << (e.tail + 1) << '\t' << (e.head + 1) << '\n';
            }
      }
      if (!converged) throw ConvergenceError("adaptive sampling stopped before reaching the target ESS");
      return 0;
    }

    if (*san) {
      const Network net = load_input(c);
      const BoundModel model(resolve_value(c.formula), net);
      san_cfg.targets = parse_vector("--targets", targets);
      san_cfg.offset_coefs = offset_coefs(c);
      san_cfg.tau0 = tau0;
      san_cfg.seed = c.seed;
      if (!san_trace.empty() && san_cfg.trace_interval == 0) san_cfg.trace_interval = 1000;
      const SanResult r = san_run(net, model, san_cfg, proposal_config(c));
      Sink o(c.out, out);
      write_network(*o, r.net);
      if (!san_trace.empty()) {
        std::ofstream t = open_out(san_trace);
        write_san_trace(t, r);
      }
      if (!san_attrs_out.empty()) {
        std::ofstream a = open_out(san_attrs_out);
        write_attributes(a, r.net.attributes());
      }
      return 0;
    }

    if (*mp) {
      const Network net = load_input(c);
      const BoundModel model(resolve_value(c.formula), net);
      const ProposalConfig pc = proposal_config(c);
      if (!mple_data.empty()) {
        const MpleRows rows = mple_rows(net, model, parse_mple_mode(mple_data), pc.constraints, offset_coefs(c));
        const auto free = model.free_indices();
        Sink o(c.out, out);
        std::vector<std::string> header;
        if (rows.mode == MpleMode::dyadlist) header.insert(header.end(), {"tail", "head"});
        header.push_back("response");
        header.insert(header.end(), rows.names.begin(), rows.names.end());
        header.insert(header.end(), {"weight", "offset"});
        write_tsv_row(*o, header);
        if (rows.mode == MpleMode::array) {
          // one row per free dyad, read off the per-statistic arrays
          const int n = net.size();
          for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
              if (rows.array.empty() || std::isnan(rows.array[0](i, j))) continue;
              std::vector<std::string> cells{format_double(rows.array_response(i, j))};
              for (const auto& a : rows.array) cells.push_back(format_double(a(i, j)));
              cells.insert(cells.end(), {"1", "0"});
              write_tsv_row(*o, cells);
            }
        } else {
          for (Eigen::Index r = 0; r < rows.rows(); ++r) {
            std::vector<std::string> cells;
            if (rows.mode == MpleMode::dyadlist) {
              const Dyad d = rows.dyads[static_cast<std::size_t>(r)];
              cells.insert(cells.end(), {std::to_string(d.tail + 1), std::to_string(d.head + 1)});
            }
            cells.push_back(format_double(rows.response[r]));
            for (Eigen::Index k = 0; k < rows.predictor.cols(); ++k) cells.push_back(format_double(rows.predictor(r, k)));
            cells.push_back(format_double(rows.weights[r]));
            cells.push_back(format_double(rows.offset_shift[r]));
            write_tsv_row(*o, cells);
          }
        }
        return 0;
      }
      MpleControl ctl;
      ctl.constraints = pc.constraints;
      ctl.proposal = pc.kind;
      ctl.offset_coefs = offset_coefs(c);
      ctl.se = parse_se_kind(se);
      ctl.sampler = sampler;
      ctl.sampler.samplesize = sandwich_s;
      ctl.sampler.seed = c.seed;
      const FitResult f = mple(net, model, ctl);
      Sink o(c.out, out);
      write_fit_report(*o, f);
      return 0;
    }

    if (*fit) {
      const Network net = load_input(c);
      const BoundModel model(resolve_value(c.formula), net);
      const ProposalConfig pc = proposal_config(c);
      mc.constraints = pc.constraints;
      mc.proposal = pc.kind;
      mc.offset_coefs = offset_coefs(c);
      mc.sampler.samplesize = fit_s;
      mc.sampler.seed = c.seed;
      mc.sampler.target_ess = fit_ess;
      mc.termination.kind = parse_termination(termination);
      mc.init = parse_init_method(init);
      if (!init_coef.empty()) mc.init_coefs = parse_vector("--init-coef", init_coef);
      if (mc.init == InitMethod::given && init_coef.empty()) throw UsageError("--init given needs --init-coef");
      mc.cd.seed = c.seed;
      mc.cd.depth = mc.termination.depth;
      FitResult f;
      if (!target_stats.empty()) {
        fit_san.seed = c.seed;
        f = fit_from_targets(net, model, parse_vector("--target-stats", target_stats), mc, fit_san, allow_inexact).fit;
      } else {
        f = mcmle_fit(net, model, mc);
      }
      Sink o(c.out, out);
      write_fit_report(*o, f);
      if (!f.termination.converged) throw ConvergenceError(f.termination.reason);
      return 0;
    }

    if (*ll) {
      const Network net = load_input(c);
      const BoundModel model(resolve_value(c.formula), net);
      const ProposalConfig pc = proposal_config(c);
      const std::vector<double> offs = offset_coefs(c);
      const std::vector<double> full = model.full_coefs(parse_vector("--coef", coef), offs);
      bc.seed = c.seed;
      bc.proposal = pc;
      const LoglikResult r = fit_loglik(net, model, full, bc, pc.constraints, offs, target_se);
      Sink o(c.out, out);
      write_loglik_report(*o, r);
      if (!r.converged) throw ConvergenceError("bridge sampling did not reach the target standard error");
      return 0;
    }

    if (*es) {
      const SampleMatrix m = read_stats(stats_path);
      std::vector<std::pair<std::string, std::string>> kv;
      kv.emplace_back("draws", std::to_string(m.rows()));
      kv.emplace_back("chains", std::to_string(m.chains.size()));
      // ESS adds over independent chains
      for (Eigen::Index k = 0; k < m.cols(); ++k) {
        double e = 0;
        bool constant = true;
        for (const auto& ch : m.chains) {
          if ((ch.col(k).array() != ch(0, k)).any()) {
            constant = false;
            e += univariate_ess(ch.col(k));
          }
        }
        kv.emplace_back("ess." + m.names[static_cast<std::size_t>(k)], constant ? "NA" : format_double(e));
      }
      double mess = 0;
      for (const auto& ch : m.chains) mess += multivariate_ess(ch).ess;
      kv.emplace_back("multivariate_ess", format_double(mess));
      for (std::size_t ch = 0; ch < m.chains.size(); ++ch) {
        const GewekeResult g = geweke(m.chains[ch], geweke_first, geweke_last);
        const std::string suffix = m.chains.size() > 1 ? ".chain" + std::to_string(ch + 1) : "";
        kv.emplace_back("geweke_statistic" + suffix, format_double(g.statistic));
        kv.emplace_back("geweke_p_value" + suffix, format_double(g.p_value));
      }
      Sink o(es_out, out);
      write_key_values(*o, kv);
      return 0;
    }

    if (*bench) {
      const Network population = generate_population(pop, pop_seed);
      const BoundModel model(resolve_value(bench_formula), population);
      std::vector<StratumMultiplier> mults;
      for (const auto& s : multipliers) mults.push_back(parse_multiplier(s));
      const std::string base = resolve_value(bench_cons);
      ProposalConfig tnt;
      tnt.kind = ProposalKind::tnt;
      tnt.constraints = parse_constraint_formula(base);
      ProposalConfig bds;
      bds.kind = ProposalKind::bdstrat;
      bds.constraints = parse_constraint_formula(base == "." || base.empty()
                                                     ? "strat(attr=\"race\", pmat=" + resolve_value(bench_pmat) + ")"
                                                     : base + " + strat(attr=\"race\", pmat=" + resolve_value(bench_pmat) + ")");
      if (!mults.empty()) apply_stratum_multipliers(*bds.constraints.strat, mults);
      const std::vector<BenchProposal> props{{"TNT", tnt}, {"BDStratTNT", bds}};
      Sink o(bench_out, out);
      if (*bmix) {
        const MixingTrace t = mixing_benchmark(population, model, model.full_coefs(parse_vector("--coef", bench_coef), {}),
                                               props, total, trace_every, bench_seed);
        write_mixing_trace(*o, t);
      } else if (*bess) {
        const EssTable t = ess_benchmark(population, model, model.full_coefs(parse_vector("--coef", bench_coef), {}),
                                         props, ess_s, ess_interval, ess_burnin, bench_seed);
        write_ess_table(*o, t);
      } else {
        const std::vector<double> offs = bench_offsets.empty() ? std::vector<double>{} : parse_vector("--offset-coef", bench_offsets);
        const auto rows = san_benchmark(population, model, parse_vector("--targets", bench_targets), offs, props, total,
                                        trace_every, bench_seed);
        write_san_bench(*o, rows);
      }
      return 0;
    }
  } catch (const Error& e) {
    out.flush();
    return fail(e.kind_name(), e.what(), static_cast<int>(e.kind()));
  } catch (const std::bad_alloc&) {
    return fail("numerical", "out of memory", static_cast<int>(ErrorKind::numerical));
  } catch (const std::exception& e) {
    return fail("data", e.what(), static_cast<int>(ErrorKind::data));
  }
  return fail("usage", "no subcommand given", 2);
}

}  // namespace ergm
