#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "ergm/sample.hpp"

using namespace ergm;

namespace {

Network alternating_sex(int n) {
  Network net(n);
  std::vector<std::string> sex;
  for (int v = 0; v < n; ++v) sex.push_back(v % 2 ? "M" : "F");
  net.attributes().set_categorical("sex", sex);
  return net;
}

// Exact E[edges], E[triangles] for an undirected n-node model over the
// graphs accepted by `allowed`, by enumerating every edge subset.
template <class Allowed>
std::pair<double, double> exact_edges_triangles(int n, double th_e, double th_t, Allowed allowed) {
  std::vector<std::pair<int, int>> dy;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) dy.push_back({i, j});
  double Z = 0, me = 0, mt = 0;
  for (std::uint32_t m = 0; m < (1u << dy.size()); ++m) {
    std::vector<std::vector<int>> a(static_cast<std::size_t>(n), std::vector<int>(static_cast<std::size_t>(n), 0));
    int e = 0;
    for (std::size_t k = 0; k < dy.size(); ++k)
      if (m >> k & 1u) {
        a[dy[k].first][dy[k].second] = a[dy[k].second][dy[k].first] = 1;
        ++e;
      }
    if (!allowed(a)) continue;
    int t = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        for (int k = j + 1; k < n; ++k) t += a[i][j] && a[j][k] && a[i][k];
    const double w = std::exp(th_e * e + th_t * t);
    Z += w;
    me += w * e;
    mt += w * t;
  }
  return {me / Z, mt / Z};
}

// Mean and its standard error from batch means.
std::pair<double, double> mean_se(const Eigen::VectorXd& x) {
  Draws X(x.size(), 1);
  X.col(0) = x;
  return {x.mean(), std::sqrt(batch_means_cov(X)(0, 0) / static_cast<double>(x.size()))};
}

}  // namespace

TEST(Sample, ZeroCoefsAlwaysAccept) {
  Network net(6);
  BoundModel m("edges + triangle", net);
  UniformProposal u;
  Rng rng(1);
  StatVector cur = m.summary(net);
  std::vector<double> scratch;
  for (int s = 0; s < 1000; ++s) EXPECT_TRUE(mh_step(net, m, {0, 0}, u, cur, rng, scratch).accepted);
  EXPECT_EQ(cur, m.summary(net));
}

TEST(Sample, InfiniteOffsetRejects) {
  Network net = alternating_sex(10);
  BoundModel m("edges + offset(nodematch(\"sex\"))", net);
  UniformProposal u;
  Rng rng(2);
  StatVector cur = m.summary(net);
  std::vector<double> scratch;
  int same_sex = 0;
  for (int s = 0; s < 5000; ++s) {
    const StepOutcome o = mh_step(net, m, {0, -HUGE_VAL}, u, cur, rng, scratch);
    if (o.dyad.tail % 2 == o.dyad.head % 2) {
      ++same_sex;
      EXPECT_FALSE(o.accepted);
    }
  }
  EXPECT_GT(same_sex, 1000);
  EXPECT_EQ(cur[1], 0);
  EXPECT_GT(cur[0], 0);
}

TEST(Sample, InfiniteTimesZeroIsZero) {
  const double d[2] = {1, 0};
  EXPECT_EQ(log_change_ratio({0.5, -HUGE_VAL}, d, true), 0.5);
  EXPECT_EQ(log_change_ratio({0.5, -HUGE_VAL}, d, false), -0.5);
  const double e[2] = {1, 1};
  EXPECT_EQ(log_change_ratio({HUGE_VAL, -HUGE_VAL}, e, true), -HUGE_VAL);
}

TEST(Sample, EdgesLogTwoAcceptsAdditions) {
  Network net(8);
  BoundModel m("edges", net);
  UniformProposal u;
  Rng rng(3);
  StatVector cur = m.summary(net);
  std::vector<double> scratch;
  int additions = 0;
  for (int s = 0; s < 2000; ++s) {
    const std::size_t before = net.edge_count();
    const StepOutcome o = mh_step(net, m, {std::log(2.0)}, u, cur, rng, scratch);
    const bool was_addition = net.has_edge(o.dyad) == o.accepted;
    if (was_addition) {
      ++additions;
      EXPECT_TRUE(o.accepted);
      EXPECT_EQ(net.edge_count(), before + 1);
      EXPECT_NEAR(o.log_ratio, std::log(2.0), 1e-15);
    } else {
      EXPECT_NEAR(o.log_ratio, -std::log(2.0), 1e-15);
    }
  }
  EXPECT_GT(additions, 500);
  EXPECT_EQ(cur[0], static_cast<double>(net.edge_count()));
}

TEST(Sample, RunChainErMoments) {
  Network net(10);
  BoundModel m("edges + triangle", net);
  SamplerConfig cfg;
  cfg.burnin = 2000;
  cfg.interval = 100;
  cfg.samplesize = 4000;
  cfg.seed = 4;
  const SimulationResult r = run_chain(net, m, {std::log(2.0), 0}, ProposalConfig{}, cfg);
  ASSERT_EQ(r.sample.rows(), 4000);
  const Draws X = r.sample.pooled();
  const auto [me, se_e] = mean_se(X.col(0));
  const auto [mt, se_t] = mean_se(X.col(1));
  EXPECT_LT(std::abs(me - 30.0), 4 * se_e) << me;
  EXPECT_LT(std::abs(mt - 120 * 8.0 / 27), 4 * se_t) << mt;
}

TEST(Sample, IntervalDoesNotChangeMeans) {
  Network net(10);
  BoundModel m("edges", net);
  SamplerConfig a;
  a.burnin = 1000;
  a.interval = 1;
  a.samplesize = 40000;
  a.seed = 5;
  SamplerConfig b = a;
  b.interval = 10;
  b.samplesize = 4000;
  const auto [ma, sa] = mean_se(run_chain(net, m, {std::log(2.0)}, ProposalConfig{}, a).sample.pooled().col(0));
  const auto [mb, sb] = mean_se(run_chain(net, m, {std::log(2.0)}, ProposalConfig{}, b).sample.pooled().col(0));
  EXPECT_LT(std::abs(ma - mb), 4 * std::sqrt(sa * sa + sb * sb));
}

class ExactMeans : public ::testing::TestWithParam<ProposalKind> {};

TEST_P(ExactMeans, FiveNodeEdgesTriangle) {
  Network net(5);
  BoundModel m("edges + triangle", net);
  const auto [ee, et] = exact_edges_triangles(5, -0.5, 0.3, [](const auto&) { return true; });
  SamplerConfig cfg;
  cfg.burnin = 1000;
  cfg.interval = 5;
  cfg.samplesize = 60000;
  cfg.seed = 6;
  ProposalConfig pc;
  pc.kind = GetParam();
  const Draws X = run_chain(net, m, {-0.5, 0.3}, pc, cfg).sample.pooled();
  const auto [me, se_e] = mean_se(X.col(0));
  const auto [mt, se_t] = mean_se(X.col(1));
  EXPECT_LT(std::abs(me - ee), 3.5 * se_e) << me << " vs " << ee;
  EXPECT_LT(std::abs(mt - et), 3.5 * se_t) << mt << " vs " << et;
}

TEST_P(ExactMeans, SixNodeMatchingSpace) {
  Network net = alternating_sex(6);
  BoundModel m("edges + triangle", net);
  auto allowed = [](const std::vector<std::vector<int>>& a) {
    for (int i = 0; i < 6; ++i) {
      int d = 0;
      for (int j = 0; j < 6; ++j) {
        d += a[i][j];
        if (a[i][j] && i % 2 == j % 2) return false;
      }
      if (d > 1) return false;
    }
    return true;
  };
  const auto [ee, et] = exact_edges_triangles(6, 0.4, 0.0, allowed);
  SamplerConfig cfg;
  cfg.burnin = 1000;
  cfg.interval = 5;
  cfg.samplesize = 40000;
  cfg.seed = 7;
  ProposalConfig pc;
  pc.kind = GetParam();
  pc.constraints = parse_constraint_formula("bd(maxout=1) + blocks(attr=\"sex\", levels2=diag)");
  const SimulationResult r = run_chain(net, m, {0.4, 0.0}, pc, cfg);
  const Draws X = r.sample.pooled();
  const auto [me, se_e] = mean_se(X.col(0));
  EXPECT_LT(std::abs(me - ee), 3.5 * se_e) << me << " vs " << ee;
  EXPECT_EQ(X.col(1).maxCoeff(), 0.0);
  EXPECT_LE(X.col(0).maxCoeff(), 3.0);
  EXPECT_EQ(et, 0.0);
}

INSTANTIATE_TEST_SUITE_P(Proposals, ExactMeans,
                         ::testing::Values(ProposalKind::uniform, ProposalKind::tnt, ProposalKind::bdstrat));

TEST(Sample, DeterministicAndParallelSafe) {
  Network net(12);
  BoundModel m("edges + triangle", net);
  SamplerConfig cfg;
  cfg.burnin = 100;
  cfg.interval = 10;
  cfg.samplesize = 200;
  cfg.chains = 3;
  cfg.seed = 42;
  const auto a = run_chain(net, m, {-1, 0.2}, ProposalConfig{}, cfg);
  cfg.workers = 3;
  const auto b = run_chain(net, m, {-1, 0.2}, ProposalConfig{}, cfg);
  ASSERT_EQ(a.sample.chains.size(), 3u);
  for (int c = 0; c < 3; ++c) EXPECT_EQ(a.sample.chains[static_cast<std::size_t>(c)], b.sample.chains[static_cast<std::size_t>(c)]);
  EXPECT_NE(a.sample.chains[0], a.sample.chains[1]);
  std::ostringstream os;
  a.sample.write_tsv(os);
  const std::string text = os.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), "chain\tedges\ttriangle");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 601);
}

TEST(Sample, SingleChainHasNoChainColumn) {
  Network net(5);
  BoundModel m("edges", net);
  SamplerConfig cfg;
  cfg.burnin = 0;
  cfg.interval = 1;
  cfg.samplesize = 3;
  cfg.keep_edgelists = true;
  const auto r = run_chain(net, m, {0}, ProposalConfig{}, cfg);
  std::ostringstream os;
  r.sample.write_tsv(os);
  EXPECT_EQ(os.str().substr(0, 6), "edges\n");
  ASSERT_EQ(r.edgelists[0].size(), 3u);
  EXPECT_EQ(static_cast<double>(r.edgelists[0][2].size()), r.sample.chains[0](2, 0));
  EXPECT_TRUE(r.networks[0].same_graph([&] {
    Network n2(5);
    for (auto d : r.edgelists[0][2]) n2.toggle(d);
    return n2;
  }()));
}

TEST(Sample, CoefficientValidation) {
  Network net(5);
  BoundModel m("edges + triangle", net);
  SamplerConfig cfg;
  EXPECT_THROW(run_chain(net, m, {0}, ProposalConfig{}, cfg), UsageError);
  EXPECT_THROW(run_chain(net, m, {0, HUGE_VAL}, ProposalConfig{}, cfg), UsageError);
  cfg.interval = 0;
  EXPECT_THROW(run_chain(net, m, {0, 0}, ProposalConfig{}, cfg), UsageError);
}

TEST(Adaptive, FastMixingStopsEarly) {
  Network net(10);
  BoundModel m("edges", net);
  SamplerConfig cfg;
  cfg.burnin = 1000;
  cfg.interval = 20;
  cfg.samplesize = 256;
  cfg.target_ess = 64;
  cfg.seed = 8;
  const AdaptiveResult r = adaptive_run(net, m, {std::log(2.0)}, ProposalConfig{}, cfg);
  EXPECT_TRUE(r.converged);
  EXPECT_LE(r.rounds, 5);
  EXPECT_GE(r.ess, 64);
  const auto [me, se] = mean_se(r.sample.pooled().col(0));
  EXPECT_LT(std::abs(me - 30), 4 * se + 0.5);
}

TEST(Adaptive, StickyChainThins) {
  Network net(30);
  BoundModel m("edges + triangle", net);
  SamplerConfig cfg;
  cfg.burnin = 0;
  cfg.interval = 1;
  cfg.samplesize = 100;
  cfg.target_ess = 500;
  cfg.seed = 9;
  cfg.max_rounds = 12;
  const AdaptiveResult r = adaptive_run(net, m, {-2, 0.5}, ProposalConfig{}, cfg);
  EXPECT_GT(r.sample.thinning, 0);
  EXPECT_GT(r.sample.interval, 1);
  for (const auto& h : r.history) EXPECT_LE(h.draws_per_chain, 2 * cfg.samplesize);
  EXPECT_LE(r.sample.rows(), 2 * cfg.samplesize);
  EXPECT_FALSE(r.converged);  // ESS 500 cannot fit in 200 retained draws
  EXPECT_EQ(r.rounds, 12);
}

TEST(Adaptive, MultiChainSumsEss) {
  Network net(10);
  BoundModel m("edges", net);
  SamplerConfig cfg;
  cfg.burnin = 500;
  cfg.interval = 20;
  cfg.samplesize = 128;
  cfg.target_ess = 200;
  cfg.chains = 2;
  cfg.workers = 2;
  cfg.seed = 10;
  const AdaptiveResult r = adaptive_run(net, m, {0}, ProposalConfig{}, cfg);
  EXPECT_TRUE(r.converged);
  EXPECT_GE(r.ess, 200);
  EXPECT_EQ(r.sample.chains.size(), 2u);
  const AdaptiveResult again = adaptive_run(net, m, {0}, ProposalConfig{}, cfg);
  EXPECT_EQ(again.sample.chains[1], r.sample.chains[1]);
}
