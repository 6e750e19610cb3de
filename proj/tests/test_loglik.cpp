#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <sstream>

#include "ergm/loglik.hpp"

using namespace ergm;

namespace {

// log sum over all undirected graphs on n nodes of exp(a*edges + b*triangles)
double log_normalizer(int n, double a, double b) {
  std::vector<std::pair<int, int>> dy;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) dy.push_back({i, j});
  std::vector<double> terms;
  for (std::uint32_t m = 0; m < (1u << dy.size()); ++m) {
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(n), std::vector<int>(static_cast<std::size_t>(n), 0));
    int e = 0;
    for (std::size_t k = 0; k < dy.size(); ++k)
      if (m >> k & 1u) {
        adj[dy[k].first][dy[k].second] = adj[dy[k].second][dy[k].first] = 1;
        ++e;
      }
    int t = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        for (int k = j + 1; k < n; ++k) t += adj[i][j] && adj[j][k] && adj[i][k];
    terms.push_back(a * e + b * t);
  }
  const double mx = *std::max_element(terms.begin(), terms.end());
  double s = 0;
  for (double v : terms) s += std::exp(v - mx);
  return mx + std::log(s);
}

Network five_node() {
  Network net(5);
  for (auto [i, j] : std::vector<std::pair<int, int>>{{0, 1}, {1, 2}, {0, 2}, {2, 3}, {3, 4}}) net.toggle(i, j);
  return net;
}

double exact_delta(const Network& net, const std::vector<double>& hat, const std::vector<double>& tilde) {
  BoundModel m("edges + triangle", net);
  const StatVector g = m.summary(net);
  auto ll = [&](const std::vector<double>& th) { return th[0] * g[0] + th[1] * g[1] - log_normalizer(5, th[0], th[1]); };
  return ll(hat) - ll(tilde);
}

BridgeControl quick(long long K, std::uint64_t seed) {
  BridgeControl c;
  c.K = K;
  c.interval = 20;
  c.seed = seed;
  return c;
}

}  // namespace

TEST(Loglik, NullDeviance) {
  EXPECT_EQ(null_deviance(0), 0.0);
  EXPECT_NEAR(null_deviance(45), 62.383246250395, 1e-9);
  EXPECT_NEAR(null_deviance(12), 16.635532333438, 1e-9);
  EXPECT_THROW(null_deviance(-1), UsageError);
}

TEST(Loglik, DyadIndependentBernoulli) {
  Network net(10);
  int e = 0;
  for (int i = 0; i < 10 && e < 30; ++i)
    for (int j = i + 1; j < 10 && e < 30; ++j, ++e) net.toggle(i, j);
  BoundModel m("edges + triangle", net);
  const DyadIndependentFit f = dyad_independent_loglik(net, m);
  EXPECT_NEAR(f.loglik, 30 * std::log(2.0 / 3) + 15 * std::log(1.0 / 3), 1e-10);
  EXPECT_NEAR(f.theta_tilde[0], std::log(2.0), 1e-10);
  EXPECT_EQ(f.theta_tilde[1], 0.0);
  EXPECT_EQ(f.free_dyads, 45);

  const Network empty(6);
  const DyadIndependentFit z = dyad_independent_loglik(empty, BoundModel("edges", empty));
  EXPECT_TRUE(z.boundary);
  EXPECT_EQ(z.loglik, 0.0);
}

TEST(Loglik, DyadIndependentGridOracle) {
  Network net(12);
  std::vector<std::string> sex;
  for (int v = 0; v < 12; ++v) sex.push_back(v % 3 ? "M" : "F");
  net.attributes().set_categorical("sex", sex);
  Rng rng(1);
  for (int i = 0; i < 12; ++i)
    for (int j = i + 1; j < 12; ++j)
      if (rng.uniform() < ((i % 3 == 0) == (j % 3 == 0) ? 0.5 : 0.2)) net.toggle(i, j);
  BoundModel m("edges + nodematch(\"sex\")", net);
  const DyadIndependentFit f = dyad_independent_loglik(net, m);
  // brute force over a fine grid around the optimum, then a local refinement
  auto ll = [&](double a, double b) {
    double s = 0;
    for (int i = 0; i < 12; ++i)
      for (int j = i + 1; j < 12; ++j) {
        const double eta = a + b * ((i % 3 == 0) == (j % 3 == 0));
        s += (net.has_edge(i, j) ? eta : 0.0) - std::log1p(std::exp(eta));
      }
    return s;
  };
  double best = -HUGE_VAL, ba = 0, bb = 0;
  for (double step = 0.1; step > 1e-8; step /= 10) {
    const double ca = ba, cb = bb;
    for (int u = -40; u <= 40; ++u)
      for (int v = -40; v <= 40; ++v) {
        const double a = (step == 0.1 ? 0 : ca) + u * step, b = (step == 0.1 ? 0 : cb) + v * step;
        const double val = ll(a, b);
        if (val > best) {
          best = val;
          ba = a;
          bb = b;
        }
      }
  }
  EXPECT_NEAR(f.loglik, best, 1e-6);
  EXPECT_NEAR(f.theta_tilde[0], ba, 1e-6);
  EXPECT_NEAR(f.theta_tilde[1], bb, 1e-6);
}

TEST(Bridge, KroneckerAndVoronoi) {
  EXPECT_EQ(kronecker_shift(1), 0.0);
  EXPECT_NEAR(kronecker_shift(2), 2 / (1 + std::sqrt(5.0)) + 0.5 - 1 - 0.5, 1e-15);
  std::vector<double> u;
  for (int j = 1; j <= 16; ++j) u.push_back((j - 0.5) / 16);
  for (double w : voronoi_weights(u)) EXPECT_NEAR(w, 1.0 / 16, 1e-15);
  for (int l = 2; l <= 10; ++l)
    for (int j = 1; j <= 16; ++j) u.push_back((j - 0.5 + kronecker_shift(l)) / 16);
  const auto w = voronoi_weights(u);
  EXPECT_NEAR(std::accumulate(w.begin(), w.end(), 0.0), 1.0, 1e-12);
  for (double x : w) EXPECT_GT(x, 0);
  for (double x : u) {
    EXPECT_GT(x, 0);
    EXPECT_LT(x, 1);
  }
}

TEST(Bridge, IdenticalEndpointsGiveZero) {
  const Network net = five_node();
  BoundModel m("edges + triangle", net);
  const LoglikResult r = bridge_loglik(net, m, {0.2, 0.1}, {0.2, 0.1}, quick(100, 1));
  EXPECT_EQ(r.delta_loglik, 0.0);
  EXPECT_EQ(r.mc_se, 0.0);
}

TEST(Bridge, FiveNodeExact) {
  const Network net = five_node();
  BoundModel m("edges + triangle", net);
  const std::vector<double> hat{-0.6, 0.9}, tilde{0.0, 0.0};
  BridgeControl c = quick(10000, 2);
  const LoglikResult r = bridge_loglik(net, m, hat, tilde, c);
  EXPECT_EQ(r.points.size(), 16u);
  EXPECT_NEAR(r.delta_loglik, exact_delta(net, hat, tilde), 0.05) << r.mc_se;
  EXPECT_GT(r.mc_se, 0);
  EXPECT_LT(r.mc_se, 0.02);
}

TEST(Bridge, EdgesOnlyClosedForm) {
  Network net(10);
  int e = 0;
  for (int i = 0; i < 10 && e < 30; ++i)
    for (int j = i + 1; j < 10 && e < 30; ++j, ++e) net.toggle(i, j);
  BoundModel m("edges", net);
  auto ll = [](double t) { return 30 * t - 45 * std::log1p(std::exp(t)); };
  const LoglikResult r = bridge_loglik(net, m, {std::log(2.0)}, {-0.5}, quick(10000, 3));
  EXPECT_NEAR(r.delta_loglik, ll(std::log(2.0)) - ll(-0.5), 0.02);
}

TEST(Bridge, AntisymmetryAndAdditivity) {
  const Network net = five_node();
  BoundModel m("edges + triangle", net);
  const std::vector<double> a{-0.6, 0.9}, b{0.1, -0.2}, mid{-0.25, 0.35};
  const LoglikResult ab = bridge_loglik(net, m, b, a, quick(4000, 4));
  const LoglikResult ba = bridge_loglik(net, m, a, b, quick(4000, 5));
  EXPECT_LT(std::abs(ab.delta_loglik + ba.delta_loglik), 3 * std::hypot(ab.mc_se, ba.mc_se));
  const LoglikResult am = bridge_loglik(net, m, mid, a, quick(4000, 6));
  const LoglikResult mb = bridge_loglik(net, m, b, mid, quick(4000, 7));
  const double se = std::sqrt(am.mc_se * am.mc_se + mb.mc_se * mb.mc_se + ab.mc_se * ab.mc_se);
  EXPECT_LT(std::abs(am.delta_loglik + mb.delta_loglik - ab.delta_loglik), 3 * se);
}

TEST(Bridge, AdaptiveConverges) {
  const Network net = five_node();
  BoundModel m("edges + triangle", net);
  const std::vector<double> hat{-0.6, 0.9}, tilde{0.0, 0.0};
  BridgeControl c = quick(2000, 8);
  const LoglikResult r = adaptive_bridge(net, m, hat, tilde, 0.005, c);
  EXPECT_TRUE(r.converged);
  EXPECT_LE(r.mc_se, 0.005);
  EXPECT_GT(r.passes, 1);
  EXPECT_NEAR(r.delta_loglik, exact_delta(net, hat, tilde), 0.02);
  double wsum = 0;
  for (const auto& p : r.points) wsum += p.weight;
  EXPECT_NEAR(wsum, 1.0, 1e-12);

  c.max_passes = 1;
  const LoglikResult capped = adaptive_bridge(net, m, hat, tilde, 1e-6, c);
  EXPECT_FALSE(capped.converged);
  EXPECT_EQ(capped.passes, 1);
}

TEST(Loglik, FitLoglikInformationCriteria) {
  const Network net = five_node();
  BoundModel m("edges + triangle", net);
  const std::vector<double> hat{-0.6, 0.9};
  const LoglikResult r = fit_loglik(net, m, hat, quick(10000, 9));
  const StatVector g = m.summary(net);
  const double exact = hat[0] * g[0] + hat[1] * g[1] - log_normalizer(5, hat[0], hat[1]);
  EXPECT_NEAR(r.loglik, exact, 0.05);
  EXPECT_NEAR(r.aic, -2 * r.loglik + 4, 1e-12);
  EXPECT_NEAR(r.bic, -2 * r.loglik + 2 * std::log(10.0), 1e-12);
  EXPECT_NEAR(r.null_deviance, 20 * std::log(2.0), 1e-12);

  BoundModel e("edges", net);
  const LoglikResult d = fit_loglik(net, e, {0.0}, quick(100, 1));
  EXPECT_NEAR(d.loglik, -10 * std::log(2.0), 1e-12);
  EXPECT_EQ(d.mc_se, 0.0);
  std::ostringstream os;
  write_loglik_report(os, d);
  EXPECT_EQ(os.str().rfind("# loglik\nkey\tvalue\nloglik\t", 0), 0u);
}
