#include <gtest/gtest.h>

#include <cmath>

#include "ergm/model.hpp"

using namespace ergm;

namespace {

// Dense re-implementation of every catalog statistic, straight from the
// definitions, used as the oracle for summaries and change statistics.
struct DenseGraph {
  int n;
  bool directed;
  std::vector<std::vector<int>> a;

  explicit DenseGraph(const Network& net) : n(net.size()), directed(net.directed()), a(n, std::vector<int>(n, 0)) {
    for (const auto& e : net.edges()) {
      a[e.tail][e.head] = 1;
      if (!directed) a[e.head][e.tail] = 1;
    }
  }
  int edges() const {
    int c = 0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) c += a[i][j];
    return directed ? c : c / 2;
  }
  int degree(int v) const {
    int d = 0;
    for (int k = 0; k < n; ++k) d += a[v][k] + (directed ? a[k][v] : 0);
    return d;
  }
  int triangles() const {
    int c = 0;
    if (!directed) {
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
          for (int k = j + 1; k < n; ++k) c += a[i][j] && a[j][k] && a[i][k];
      return c;
    }
    for (int x = 0; x < n; ++x)
      for (int y = 0; y < n; ++y)
        for (int z = 0; z < n; ++z)
          if (x != y && y != z && x != z) c += a[x][y] && a[y][z] && a[x][z];
    return c;
  }
  int shared_partners(int i, int j) const {
    int c = 0;
    for (int k = 0; k < n; ++k)
      if (k != i && k != j) c += a[i][k] && a[j][k];
    return c;
  }
  template <class F>
  void each_edge(F f) const {
    for (int i = 0; i < n; ++i)
      for (int j = directed ? 0 : i + 1; j < n; ++j)
        if (i != j && a[i][j]) f(i, j);
  }
};

std::vector<double> oracle_summary(const Network& net, const std::string& formula_kind, const std::vector<int>& codes,
                                   const std::vector<double>& x) {
  DenseGraph g(net);
  std::vector<double> out;
  const double alpha = 0.7, r = 1 - std::exp(-alpha);
  out.push_back(g.edges());
  out.push_back(g.triangles());
  if (formula_kind == "undirected") {
    double gwesp = 0;
    g.each_edge([&](int i, int j) { gwesp += std::exp(alpha) * (1 - std::pow(r, g.shared_partners(i, j))); });
    out.push_back(gwesp);
  }
  // nodematch diff over 3 levels
  for (int l = 0; l < 3; ++l) {
    double c = 0;
    g.each_edge([&](int i, int j) { c += codes[i] == l && codes[j] == l; });
    out.push_back(c);
  }
  // nodefactor drops the first level
  for (int l = 1; l < 3; ++l) {
    double c = 0;
    g.each_edge([&](int i, int j) { c += (codes[i] == l) + (codes[j] == l); });
    out.push_back(c);
  }
  double cov = 0, ad = 0;
  g.each_edge([&](int i, int j) {
    cov += x[i] + x[j];
    ad += std::abs(x[i] - x[j]);
  });
  out.push_back(cov);
  out.push_back(ad);
  double conc = 0, d1 = 0, d2 = 0, gwd = 0;
  for (int v = 0; v < g.n; ++v) {
    const int d = g.degree(v);
    conc += d >= 2;
    d1 += d == 1;
    d2 += d == 2;
    gwd += std::exp(alpha) * (1 - std::pow(r, d));
  }
  out.insert(out.end(), {conc, d1, d2, gwd});
  return out;
}

std::string formula_for(bool directed) {
  std::string f = "edges + triangle + ";
  if (!directed) f += "gwesp(0.7, fixed=true) + ";
  f += "nodematch(\"race\", diff=true) + nodefactor(\"race\") + nodecov(\"x\") + absdiff(\"x\") + concurrent + "
       "degree([1,2]) + gwdegree(0.7)";
  return f;
}

Network random_net(int n, bool directed, double density, Rng& rng) {
  Network net(n, directed);
  for (Vertex i = 0; i < n; ++i)
    for (Vertex j = 0; j < n; ++j)
      if (i != j && (directed || i < j) && rng.uniform() < density) net.toggle(i, j);
  return net;
}

void attach(Network& net, std::vector<int>& codes, std::vector<double>& x, Rng& rng) {
  const int n = net.size();
  std::vector<std::string> race;
  codes.clear();
  x.clear();
  for (int v = 0; v < n; ++v) {
    const int c = static_cast<int>(rng.below(3));
    codes.push_back(c);
    race.push_back(std::string(1, static_cast<char>('A' + c)));
    x.push_back(std::round(rng.normal() * 100) / 8);
  }
  // make sure every level appears
  race[0] = "A";
  race[1] = "B";
  race[2] = "C";
  codes[0] = 0;
  codes[1] = 1;
  codes[2] = 2;
  net.attributes().set_categorical("race", race);
  net.attributes().set_numeric("x", x);
}

}  // namespace

TEST(Model, EmptyAndComplete) {
  Network net(4);
  BoundModel m("edges + triangle", net);
  EXPECT_EQ(m.summary(net), (StatVector{0, 0}));
  for (Vertex i = 0; i < 4; ++i)
    for (Vertex j = i + 1; j < 4; ++j) net.toggle(i, j);
  EXPECT_EQ(m.summary(net), (StatVector{6, 4}));
  const StatVector d = m.change_stats(net, 0, 1);
  EXPECT_EQ(d, (StatVector{1, 2}));
  EXPECT_EQ(apply_toggle_stats(m.summary(net), d, false), (StatVector{5, 2}));
  EXPECT_EQ(apply_toggle_stats(StatVector{0, 0}, StatVector{1, 0}, true), (StatVector{1, 0}));
}

TEST(Model, EdgesChangeIsAlwaysOne) {
  Rng rng(4);
  Network net = random_net(9, true, 0.4, rng);
  BoundModel m("edges", net);
  for (Vertex i = 0; i < 9; ++i)
    for (Vertex j = 0; j < 9; ++j)
      if (i != j) {
        EXPECT_EQ(m.change_stats(net, i, j)[0], 1.0);
      }
}

TEST(Model, TriangleChangeIsCommonNeighbours) {
  Rng rng(12);
  Network net = random_net(8, false, 0.5, rng);
  BoundModel m("triangle", net);
  DenseGraph g(net);
  for (Vertex i = 0; i < 8; ++i)
    for (Vertex j = i + 1; j < 8; ++j) EXPECT_EQ(m.change_stats(net, i, j)[0], g.shared_partners(i, j));
}

TEST(Model, SummaryAndChangeMatchDenseOracle) {
  Rng rng(2025);
  for (int rep = 0; rep < 30; ++rep) {
    const bool directed = rep % 2 == 1;
    const int n = 5 + rep % 4;
    Network net = random_net(n, directed, 0.15 + 0.05 * (rep % 10), rng);
    std::vector<int> codes;
    std::vector<double> x;
    attach(net, codes, x, rng);
    BoundModel m(formula_for(directed), net);
    const std::string kind = directed ? "directed" : "undirected";
    const StatVector s = m.summary(net);
    const StatVector o = oracle_summary(net, kind, codes, x);
    ASSERT_EQ(s.size(), o.size());
    for (std::size_t k = 0; k < s.size(); ++k) EXPECT_NEAR(s[k], o[k], 1e-12) << m.names()[k];

    for (Vertex i = 0; i < n; ++i)
      for (Vertex j = 0; j < n; ++j) {
        if (i == j || (!directed && j < i)) continue;
        const StatVector d = m.change_stats(net, i, j);
        const bool present = net.has_edge(i, j);
        if (!present) net.toggle(i, j);
        const StatVector with = oracle_summary(net, kind, codes, x);
        net.toggle(i, j);
        const StatVector without = oracle_summary(net, kind, codes, x);
        if (present) net.toggle(i, j);
        for (std::size_t k = 0; k < d.size(); ++k) {
          if (m.integer_valued(static_cast<int>(k)))
            EXPECT_EQ(d[k], with[k] - without[k]) << m.names()[k] << " at " << i << "," << j;
          else
            EXPECT_NEAR(d[k], with[k] - without[k], 1e-12) << m.names()[k] << " at " << i << "," << j;
        }
      }
  }
}

TEST(Model, IncrementalReplayMatchesSummary) {
  Rng rng(77);
  Network net(25);
  std::vector<int> codes;
  std::vector<double> x;
  attach(net, codes, x, rng);
  BoundModel m(formula_for(false), net);
  StatVector cur = m.summary(net);
  StatVector d(static_cast<std::size_t>(m.p()));
  for (int s = 0; s < 10000; ++s) {
    const Dyad dy = net.random_dyad(rng);
    m.change_stats(net, dy.tail, dy.head, d.data());
    const bool added = net.toggle(dy);
    apply_toggle_inplace(cur, d.data(), added);
  }
  const StatVector full = m.summary(net);
  for (int k = 0; k < m.p(); ++k) {
    if (m.integer_valued(k))
      EXPECT_EQ(cur[static_cast<std::size_t>(k)], full[static_cast<std::size_t>(k)]) << m.names()[k];
    else
      EXPECT_NEAR(cur[static_cast<std::size_t>(k)], full[static_cast<std::size_t>(k)], 1e-9) << m.names()[k];
  }
}

TEST(Model, NamesAndLevels) {
  Network net(6);
  net.attributes().set_categorical("race", {"A", "B", "C", "D", "E", "A"});
  net.attributes().set_numeric("age", {20, 30, 40, 50, 60, 70});
  BoundModel m("nodefactor(\"race\", levels=-5) + nodematch(\"race\", diff=true, levels=[2,4]) + degree(3)", net);
  EXPECT_EQ(m.names(), (std::vector<std::string>{"nodefactor.race.A", "nodefactor.race.B", "nodefactor.race.C",
                                                 "nodefactor.race.D", "nodematch.race.B", "nodematch.race.D",
                                                 "degree3"}));
  EXPECT_THROW(BoundModel("nodecov(\"race\")", net), DataError);
  EXPECT_THROW(BoundModel("nodecov(\"height\")", net), DataError);
  EXPECT_THROW(BoundModel("nodefactor(\"race\", levels=9)", net), DataError);
  EXPECT_TRUE(BoundModel("edges + nodecov(\"age\")", net).all_dyad_independent());
  EXPECT_FALSE(BoundModel("edges + concurrent", net).all_dyad_independent());
}

TEST(Model, NodematchExample) {
  // 100 nodes alternating sex, 30 disjoint cross-sex edges: (30, 0, 0)
  Network net(100);
  std::vector<std::string> sex;
  for (int v = 0; v < 100; ++v) sex.push_back(v % 2 ? "M" : "F");
  net.attributes().set_categorical("sex", sex);
  for (Vertex v = 0; v < 60; v += 2) net.toggle(v, v + 1);
  BoundModel m("edges + nodematch(\"sex\") + concurrent", net);
  EXPECT_EQ(m.summary(net), (StatVector{30, 0, 0}));
}

TEST(Model, CompensatedSummation) {
  CompensatedSum s;
  s.add(1.0);
  for (int k = 0; k < 10; ++k) s.add(1e-16);
  EXPECT_DOUBLE_EQ(s.value(), 1.0 + 1e-15);
}

TEST(Model, FullCoefs) {
  Network net(4);
  net.attributes().set_categorical("s", {"a", "b", "a", "b"});
  BoundModel m("edges + offset(nodematch(\"s\")) + triangle", net);
  EXPECT_EQ(m.full_coefs({1, 2}, {-HUGE_VAL}), (std::vector<double>{1, -HUGE_VAL, 2}));
  EXPECT_EQ(m.full_coefs({1, 0, 2}, {}), (std::vector<double>{1, 0, 2}));
  EXPECT_THROW(m.full_coefs({1}, {}), UsageError);
}
