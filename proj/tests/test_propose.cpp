#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <queue>
#include <set>

#include <boost/math/distributions/chi_squared.hpp>

#include "ergm/propose.hpp"

using namespace ergm;

namespace {

double chi2_pvalue(const std::vector<double>& observed, const std::vector<double>& expected) {
  double chi2 = 0;
  for (std::size_t k = 0; k < observed.size(); ++k)
    chi2 += (observed[k] - expected[k]) * (observed[k] - expected[k]) / expected[k];
  boost::math::chi_squared dist(static_cast<double>(observed.size() - 1));
  return boost::math::cdf(boost::math::complement(dist, chi2));
}

std::vector<Dyad> all_dyads(const Network& net) {
  std::vector<Dyad> out;
  for (Vertex i = 0; i < net.size(); ++i)
    for (Vertex j = 0; j < net.size(); ++j)
      if (net.valid_dyad(i, j) && (net.directed() || i < j)) out.push_back({i, j});
  return out;
}

// Independent description of a stratified, bounded, blocked setting and the
// proposal probability it implies, recomputed from scratch.
struct Setting {
  std::vector<int> race, sex;
  Matrix pmat;
  int maxout = 1 << 30, maxin = 1 << 30;

  bool blocked(Vertex i, Vertex j) const { return sex[static_cast<std::size_t>(i)] == sex[static_cast<std::size_t>(j)]; }
  std::pair<int, int> key(const Network& net, Vertex i, Vertex j) const {
    int a = race[static_cast<std::size_t>(i)], b = race[static_cast<std::size_t>(j)];
    if (!net.directed() && a > b) std::swap(a, b);
    return {a, b};
  }
  bool tail_ok(const Network& net, Vertex v) const {
    return net.directed() ? net.out_degree(v) < maxout : net.degree(v) < std::min(maxout, maxin);
  }
  bool head_ok(const Network& net, Vertex v) const {
    return net.directed() ? net.in_degree(v) < maxin : net.degree(v) < std::min(maxout, maxin);
  }

  double q(const Network& net, Dyad d) const {
    std::map<std::pair<int, int>, std::pair<double, double>> ed;  // stratum -> (E, D)
    for (const auto& x : all_dyads(net)) {
      if (blocked(x.tail, x.head)) continue;
      auto& c = ed[key(net, x.tail, x.head)];
      if (net.has_edge(x)) {
        c.first += 1;
        c.second += 1;
      } else if (tail_ok(net, x.tail) && head_ok(net, x.head)) {
        c.second += 1;
      }
    }
    double Z = 0;
    for (const auto& [k, c] : ed) {
      const double w = pmat[static_cast<std::size_t>(k.first)][static_cast<std::size_t>(k.second)];
      if (w > 0 && c.second > 0) Z += w;
    }
    const auto k = key(net, d.tail, d.head);
    const auto [E, D] = ed[k];
    const double w = pmat[static_cast<std::size_t>(k.first)][static_cast<std::size_t>(k.second)];
    if (net.has_edge(d)) return w / Z * (0.5 / E + 0.5 / D);
    if (!(tail_ok(net, d.tail) && head_ok(net, d.head))) return 0;
    return w / Z * (E > 0 ? 0.5 : 1.0) / D;
  }
};

Network make_population(int n, bool directed, Setting& s) {
  Network net(n, directed);
  std::vector<std::string> sex, race;
  for (int v = 0; v < n; ++v) {
    s.sex.push_back(v % 2);
    s.race.push_back((v / 2) % 3);
    sex.push_back(v % 2 ? "M" : "F");
    race.push_back(std::string(1, static_cast<char>('A' + (v / 2) % 3)));
  }
  net.attributes().set_categorical("sex", sex);
  net.attributes().set_categorical("race", race);
  return net;
}

std::string pmat_text(const Matrix& m) {
  std::string s = "[";
  for (std::size_t i = 0; i < m.size(); ++i) {
    s += i ? ",[" : "[";
    for (std::size_t j = 0; j < m[i].size(); ++j) s += (j ? "," : "") + format_double(m[i][j]);
    s += "]";
  }
  return s + "]";
}

void check_against_oracle(bool directed) {
  Setting s;
  Network net = make_population(directed ? 9 : 12, directed, s);
  if (directed) {
    s.pmat = {{1, 2, 0.5}, {0.25, 1, 1}, {3, 0, 2}};
    s.maxout = 2;
    s.maxin = 1;
  } else {
    s.pmat = {{1, 2, 0.5}, {2, 1, 1}, {0.5, 1, 3}};
    s.maxout = 2;
  }
  std::string text = directed ? "bd(maxout=2, maxin=1)" : "bd(maxout=2)";
  text += " + blocks(attr=\"sex\", levels2=diag) + strat(attr=\"race\", pmat=" + pmat_text(s.pmat) + ")";
  BdStratTntProposal prop(parse_constraint_formula(text), net);
  Rng rng(directed ? 99 : 98);
  int accepted = 0;
  for (int step = 0; step < 3000; ++step) {
    const Proposal pr = prop.propose(net, rng);
    ASSERT_FALSE(s.blocked(pr.dyad.tail, pr.dyad.head));
    const bool present = net.has_edge(pr.dyad);
    if (!present) {
      ASSERT_TRUE(s.tail_ok(net, pr.dyad.tail));
      ASSERT_TRUE(s.head_ok(net, pr.dyad.head));
    }
    const double fwd = s.q(net, pr.dyad);
    net.toggle(pr.dyad);
    const double rev = s.q(net, pr.dyad);
    net.toggle(pr.dyad);
    ASSERT_GT(fwd, 0);
    ASSERT_NEAR(pr.log_q_ratio, std::log(rev / fwd), 1e-10) << "step " << step;
    if (rng.uniform() < 0.6) {
      net.toggle(pr.dyad);
      prop.commit(net, pr.dyad);
      ++accepted;
    }
  }
  EXPECT_GT(accepted, 1000);
  EXPECT_GT(net.edge_count(), 0u);
  // eligibility bookkeeping equals a brute-force recount
  std::map<int, long long> D;
  for (const auto& x : all_dyads(net)) {
    const int st = prop.stratum_of(x.tail, x.head);
    if (s.blocked(x.tail, x.head)) {
      EXPECT_EQ(st, -1);
      continue;
    }
    if (net.has_edge(x) || (s.tail_ok(net, x.tail) && s.head_ok(net, x.head))) ++D[st];
  }
  for (int st = 0; st < prop.stratum_count(); ++st) EXPECT_EQ(prop.stratum_proposable(st), D[st]);
}

}  // namespace

TEST(Uniform, FourNodeChiSquare) {
  Network net(4);
  UniformProposal u;
  Rng rng(1);
  std::map<std::pair<int, int>, double> freq;
  for (int s = 0; s < 100000; ++s) {
    const Proposal p = u.propose(net, rng);
    EXPECT_EQ(p.log_q_ratio, 0.0);
    freq[{p.dyad.tail, p.dyad.head}] += 1;
  }
  ASSERT_EQ(freq.size(), 6u);
  std::vector<double> obs, exp;
  for (auto& [k, c] : freq) {
    obs.push_back(c);
    exp.push_back(100000.0 / 6);
  }
  EXPECT_GT(chi2_pvalue(obs, exp), 0.001);
}

TEST(Uniform, BipartiteSupport) {
  Network net(5, false, 2);
  UniformProposal u;
  Rng rng(2);
  std::set<std::pair<int, int>> seen;
  for (int s = 0; s < 5000; ++s) {
    const Dyad d = u.propose(net, rng).dyad;
    EXPECT_LT(d.tail, 2);
    EXPECT_GE(d.head, 2);
    seen.insert({d.tail, d.head});
  }
  EXPECT_EQ(seen.size(), 6u);
}

TEST(Tnt, OneEdgeOfThree) {
  Network net(3);
  net.toggle(0, 1);
  TntProposal t;
  Rng rng(3);
  int hits = 0;
  const int draws = 200000;
  for (int s = 0; s < draws; ++s) {
    const Proposal p = t.propose(net, rng);
    if (p.dyad == Dyad{0, 1}) {
      ++hits;
      // reverse: add back with E'=0, prob 1/3; forward 2/3
      EXPECT_NEAR(p.log_q_ratio, std::log((1.0 / 3) / (2.0 / 3)), 1e-12);
    } else {
      // reverse: remove with E'=2, prob 1/4+1/6; forward 1/6
      EXPECT_NEAR(p.log_q_ratio, std::log((0.25 + 1.0 / 6) / (1.0 / 6)), 1e-12);
    }
  }
  const double p = 2.0 / 3;
  EXPECT_LT(std::abs(hits - draws * p), 4 * std::sqrt(draws * p * (1 - p)));
}

TEST(Tnt, EmptyNetworkUsesDyadBranch) {
  Network net(5);
  TntProposal t;
  Rng rng(4);
  for (int s = 0; s < 100; ++s) {
    const Proposal p = t.propose(net, rng);
    // forward 1/N = 1/10; reverse removal with E'=1: 1/2 + 1/20
    EXPECT_NEAR(p.log_q_ratio, std::log(0.55 / 0.1), 1e-12);
  }
}

TEST(Tnt, MixtureFrequencies) {
  Network net(5);
  net.toggle(0, 1);
  net.toggle(1, 2);
  net.toggle(3, 4);
  TntProposal t;
  Rng rng(5);
  const int draws = 1000000;
  std::map<std::pair<int, int>, int> freq;
  double nonedge_total = 0;
  for (int s = 0; s < draws; ++s) {
    const Dyad d = t.propose(net, rng).dyad;
    ++freq[{d.tail, d.head}];
    if (!net.has_edge(d)) nonedge_total += 1;
  }
  const double N = 10, E = 3;
  for (const auto& d : all_dyads(net)) {
    const double p = net.has_edge(d) ? 0.5 / E + 0.5 / N : 0.5 / N;
    const double c = freq[{d.tail, d.head}];
    EXPECT_LT(std::abs(c - draws * p), 4 * std::sqrt(draws * p * (1 - p)));
  }
  EXPECT_LT(nonedge_total / draws, 0.5);
}

TEST(Tnt, RejectsConstraintViolations) {
  Setting s;
  Network net = make_population(10, false, s);
  net.toggle(0, 1);
  const ConstraintSpec spec = parse_constraint_formula("bd(maxout=1) + blocks(attr=\"sex\", levels2=diag)");
  TntProposal t(Constraints(spec, net));
  Rng rng(6);
  for (int k = 0; k < 5000; ++k) {
    const Proposal p = t.propose(net, rng);
    const bool bad = s.blocked(p.dyad.tail, p.dyad.head) ||
                     (!net.has_edge(p.dyad) && (net.degree(p.dyad.tail) >= 1 || net.degree(p.dyad.head) >= 1));
    EXPECT_EQ(bad, std::isinf(p.log_q_ratio)) << p.dyad.tail << "," << p.dyad.head;
  }
}

TEST(BdStrat, HundredNodesEmpty) {
  Setting s;
  Network net = make_population(100, false, s);
  BdStratTntProposal p(parse_constraint_formula("bd(maxout=1) + blocks(attr=\"sex\", levels2=diag)"), net);
  ASSERT_EQ(p.stratum_count(), 1);
  EXPECT_EQ(p.stratum_proposable(0), 2500);
}

TEST(BdStrat, HundredNodesThirtyEdges) {
  Setting s;
  Network net = make_population(100, false, s);
  for (Vertex v = 0; v < 60; v += 2) net.toggle(v, v + 1);
  BdStratTntProposal p(parse_constraint_formula("bd(maxout=1) + blocks(attr=\"sex\", levels2=diag)"), net);
  long long brute = 0;
  for (const auto& d : all_dyads(net)) {
    if (s.blocked(d.tail, d.head)) continue;
    if (net.has_edge(d) || (net.degree(d.tail) < 1 && net.degree(d.head) < 1)) ++brute;
  }
  EXPECT_EQ(brute, 30 + 20 * 20);
  EXPECT_EQ(p.stratum_proposable(0), brute);
  EXPECT_EQ(p.stratum_edges(0), 30);
}

TEST(BdStrat, SaturationRoundTrip) {
  Setting s;
  Network net = make_population(10, false, s);
  const auto spec = parse_constraint_formula("bd(maxout=1) + blocks(attr=\"sex\", levels2=diag)");
  BdStratTntProposal p(spec, net);
  const long long before = p.stratum_proposable(0);
  net.toggle(0, 1);
  p.commit(net, {0, 1});
  // 5x5 cross pairs; vertices 0 and 1 leave eligibility: 4x4 non-edges + the edge
  EXPECT_EQ(p.stratum_proposable(0), 17);
  EXPECT_FALSE(p.can_propose(net, {0, 3}));
  net.toggle(0, 1);
  p.commit(net, {0, 1});
  EXPECT_EQ(p.stratum_proposable(0), before);
}

TEST(BdStrat, ProposalRatioMatchesOracleUndirected) { check_against_oracle(false); }
TEST(BdStrat, ProposalRatioMatchesOracleDirected) { check_against_oracle(true); }

TEST(BdStrat, ProposalFrequenciesMatchOracle) {
  Setting s;
  s.pmat = {{1, 2, 0.5}, {2, 1, 1}, {0.5, 1, 3}};
  s.maxout = 2;
  Network net = make_population(8, false, s);
  net.toggle(0, 1);
  net.toggle(0, 3);
  net.toggle(2, 5);
  BdStratTntProposal p(
      parse_constraint_formula("bd(maxout=2) + blocks(attr=\"sex\", levels2=diag) + strat(attr=\"race\", pmat=" +
                               pmat_text(s.pmat) + ")"),
      net);
  Rng rng(8);
  std::map<std::pair<int, int>, double> freq;
  const int draws = 400000;
  for (int k = 0; k < draws; ++k) {
    const Dyad d = p.propose(net, rng).dyad;
    freq[{d.tail, d.head}] += 1;
  }
  std::vector<double> obs, exp;
  double total = 0;
  for (const auto& d : all_dyads(net)) {
    if (s.blocked(d.tail, d.head)) {
      EXPECT_EQ(freq.count({d.tail, d.head}), 0u);
      continue;
    }
    const double q = s.q(net, d);
    total += q;
    if (q == 0) {
      EXPECT_EQ(freq.count({d.tail, d.head}), 0u);
      continue;
    }
    obs.push_back(freq[{d.tail, d.head}]);
    exp.push_back(q * draws);
  }
  EXPECT_NEAR(total, 1.0, 1e-12);
  EXPECT_GT(chi2_pvalue(obs, exp), 0.001);
}

TEST(BdStrat, ZeroWeightStrataNeverProposed) {
  Setting s;
  Network net = make_population(12, false, s);
  BdStratTntProposal p(parse_constraint_formula("strat(attr=\"race\", pmat=[[1,1,0],[1,1,0],[0,0,0]])"), net);
  Rng rng(9);
  for (int k = 0; k < 20000; ++k) {
    const Proposal pr = p.propose(net, rng);
    EXPECT_NE(s.race[static_cast<std::size_t>(pr.dyad.tail)], 2);
    EXPECT_NE(s.race[static_cast<std::size_t>(pr.dyad.head)], 2);
    if (rng.coin()) {
      net.toggle(pr.dyad);
      p.commit(net, pr.dyad);
    }
  }
}

TEST(BdStrat, RebuildOracle) {
  Setting s;
  Network net = make_population(30, false, s);
  const auto spec =
      parse_constraint_formula("bd(maxout=2) + blocks(attr=\"sex\", levels2=diag) + strat(attr=\"race\", empirical=true)");
  net.toggle(0, 1);
  net.toggle(2, 9);
  net.toggle(4, 11);
  BdStratTntProposal p(spec, net);
  Rng rng(10);
  int accepted = 0;
  while (accepted < 10000) {
    const Proposal pr = p.propose(net, rng);
    net.toggle(pr.dyad);
    p.commit(net, pr.dyad);
    ++accepted;
  }
  const Constraints c(spec, net);
  EXPECT_TRUE(c.satisfied_by(net));
  // fresh state on the final network (same strata order: built from attributes)
  ConstraintSpec fresh_spec = spec;
  fresh_spec.strat->empirical = false;
  BdStratTntProposal fresh(fresh_spec, net);
  ASSERT_EQ(fresh.stratum_count(), p.stratum_count());
  for (int st = 0; st < p.stratum_count(); ++st) {
    EXPECT_EQ(fresh.stratum_label(st), p.stratum_label(st));
    EXPECT_EQ(fresh.stratum_edges(st), p.stratum_edges(st));
    EXPECT_EQ(fresh.stratum_proposable(st), p.stratum_proposable(st));
  }
}

TEST(BdStrat, EmpiricalEmptyFallsBack) {
  Setting s;
  Network net = make_population(12, false, s);
  BdStratTntProposal p(parse_constraint_formula("strat(attr=\"race\", empirical=true)"), net);
  for (int st = 0; st < p.stratum_count(); ++st) EXPECT_EQ(p.stratum_weight(st), 1.0);
}

TEST(BdStrat, InitErrors) {
  Setting s;
  Network net = make_population(6, false, s);
  net.toggle(0, 2);  // same sex
  EXPECT_THROW(BdStratTntProposal(parse_constraint_formula("blocks(attr=\"sex\", levels2=diag)"), net), DataError);
  net.toggle(0, 2);
  net.toggle(0, 1);
  net.toggle(0, 3);
  EXPECT_THROW(BdStratTntProposal(parse_constraint_formula("bd(maxout=1)"), net), DataError);
  Network empty = make_population(6, false, s);
  EXPECT_THROW(BdStratTntProposal(parse_constraint_formula("strat(attr=\"race\", pmat=[[0,0,0],[0,0,0],[0,0,0]])"), empty),
               DataError);
  EXPECT_THROW(BdStratTntProposal(parse_constraint_formula("strat(attr=\"race\", pmat=[[1,1],[1,1]])"), empty), DataError);
  EXPECT_THROW(BdStratTntProposal(parse_constraint_formula("strat(attr=\"height\")"), empty), DataError);
}

TEST(BdStrat, MatrixCapsReduce) {
  Setting s;
  Network net = make_population(8, false, s);
  // opposite-sex partners only, at most one: same as bd(1) + blocks(sex)
  BdStratTntProposal p(parse_constraint_formula("bd(attr=\"sex\", maxout=[[0,1],[1,0]])"), net);
  ASSERT_EQ(p.stratum_count(), 1);
  EXPECT_EQ(p.stratum_proposable(0), 16);
  EXPECT_THROW(BdStratTntProposal(parse_constraint_formula("bd(attr=\"sex\", maxout=[[1,1],[1,0]])"), net), UsageError);
}

namespace {

// States reachable from the empty graph through proposable toggles that keep
// the network in the constrained space, versus all constrained graphs.
std::pair<std::size_t, std::size_t> reachability(const std::string& constraints, int n) {
  Setting s;
  Network base = make_population(n, false, s);
  const auto spec = parse_constraint_formula(constraints);
  const auto dyads = all_dyads(base);
  auto build = [&](std::uint32_t mask) {
    Network net = base;
    for (std::size_t k = 0; k < dyads.size(); ++k)
      if (mask >> k & 1u) net.toggle(dyads[k]);
    return net;
  };
  const Constraints c(spec, base);
  std::size_t total = 0;
  for (std::uint32_t m = 0; m < (1u << dyads.size()); ++m)
    if (c.satisfied_by(build(m))) ++total;
  std::set<std::uint32_t> seen{0};
  std::queue<std::uint32_t> todo;
  todo.push(0);
  while (!todo.empty()) {
    const std::uint32_t m = todo.front();
    todo.pop();
    Network net = build(m);
    BdStratTntProposal p(spec, net);
    for (std::size_t k = 0; k < dyads.size(); ++k) {
      if (!p.can_propose(net, dyads[k])) continue;
      const std::uint32_t next = m ^ (1u << k);
      if (seen.insert(next).second) todo.push(next);
    }
  }
  return {seen.size(), total};
}

}  // namespace

TEST(BdStrat, ErgodicOnConstrainedSpace) {
  auto [reached, total] = reachability("bd(maxout=1) + blocks(attr=\"sex\", levels2=diag)", 6);
  EXPECT_EQ(total, 34u);  // matchings of K3,3
  EXPECT_EQ(reached, total);
  auto [r2, t2] = reachability("bd(maxout=2) + strat(attr=\"race\", pmat=[[1,2,1],[2,1,1],[1,1,5]])", 6);
  EXPECT_EQ(r2, t2);
}
