#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <iostream>
#include <limits>
#include <memory>
#include <numeric>
#include <string>
#include <unordered_map>
#include <vector>

#include "ergm/constraints.hpp"
#include "ergm/error.hpp"
#include "ergm/formula.hpp"
#include "ergm/network.hpp"
#include "ergm/rng.hpp"

namespace ergm {

// A proposed toggle and log[q(y | y*) / q(y* | y)]. A log ratio of -Inf marks a
// proposal that leaves the constrained space and must be rejected.
struct Proposal {
  Dyad dyad;
  double log_q_ratio = 0.0;
};

class ProposalEngine {
 public:
  virtual ~ProposalEngine() = default;
  virtual std::string name() const = 0;
  // Draws a toggle for the current network. The network may be modified
  // internally but is restored before returning.
  virtual Proposal propose(Network& net, Rng& rng) = 0;
  // Called after the proposed dyad has been toggled in net.
  virtual void commit(const Network& /*net*/, Dyad /*d*/) {}
};

// Uniform over all dyads; constraints, if any, are enforced by rejection.
class UniformProposal final : public ProposalEngine {
 public:
  explicit UniformProposal(Constraints c = {}) : c_(std::move(c)) {}
  std::string name() const override { return "uniform"; }
  Proposal propose(Network& net, Rng& rng) override {
    const Dyad d = net.random_dyad(rng);
    if (c_.active() && !c_.toggle_allowed(net, d)) return {d, -HUGE_VAL};
    return {d, 0.0};
  }

 private:
  Constraints c_;
};

// Tie/no-tie: half the time a uniformly chosen edge, otherwise a uniformly
// chosen dyad. With no edges the dyad branch is taken with probability 1.
class TntProposal final : public ProposalEngine {
 public:
  explicit TntProposal(Constraints c = {}) : c_(std::move(c)) {}
  std::string name() const override { return "TNT"; }

  static double edge_prob(double E, double N) { return 0.5 / E + 0.5 / N; }
  static double nonedge_prob(double E, double N) { return (E > 0 ? 0.5 : 1.0) / N; }

  Proposal propose(Network& net, Rng& rng) override {
    const double N = static_cast<double>(net.dyad_count());
    const double E = static_cast<double>(net.edge_count());
    const Dyad d = (E > 0 && rng.coin()) ? net.random_edge(rng) : net.random_dyad(rng);
    if (c_.active() && !c_.toggle_allowed(net, d)) return {d, -HUGE_VAL};
    const bool present = net.has_edge(d);
    const double fwd = present ? edge_prob(E, N) : nonedge_prob(E, N);
    const double rev = present ? nonedge_prob(E - 1, N) : edge_prob(E + 1, N);
    return {d, std::log(rev) - std::log(fwd)};
  }

 private:
  Constraints c_;
};

// Stratified, degree-bounded, block-constrained TNT. Vertices are grouped into
// classes by (strat level, blocks level, bd level, bipartite mode); a class
// pair is either frozen or free, and each free class pair belongs to the
// stratum given by its strat levels. A stratum is drawn with probability
// proportional to its weight among strata that have something to propose,
// then a TNT step runs on that stratum: its current edges, or uniformly among
// its proposable dyads (edges, plus non-edges whose endpoints are both below
// their degree caps).
class BdStratTntProposal final : public ProposalEngine {
 public:
  BdStratTntProposal(const ConstraintSpec& spec, const Network& net)
      : c_(spec, net), directed_(net.directed()), n_(net.size()) {
    c_.validate(net);
    if (c_.has_matrix() && !c_.matrix_reducible())
      throw UsageError("BDStratTNT needs bd matrices with at most one positive entry per row");
    build_classes(spec, net);
    build_pairs(net);
    build_weights(spec, net);
    for (const auto& e : net.edges()) insert_edge(e, pair_of(e.tail, e.head));
    for (std::size_t p = 0; p < pairs_.size(); ++p) pairs_[p].unsat = 0;
    for (const auto& e : net.edges()) {
      const int p = pair_of(e.tail, e.head);
      if (both_eligible(e.tail, e.head)) ++pairs_[static_cast<std::size_t>(p)].unsat;
    }
    for (std::size_t s = 0; s < strata_.size(); ++s) recount(static_cast<int>(s));
    rebuild_active();
  }

  std::string name() const override { return "BDStratTNT"; }

  Proposal propose(Network& net, Rng& rng) override {
    if (active_.empty()) throw DataError("frozen state: no proposable dyad under the constraints");
    const int s = draw_stratum(rng);
    const Stratum& st = strata_[static_cast<std::size_t>(s)];
    const auto E = static_cast<double>(st.edges.size());
    const auto D = static_cast<double>(st.D);
    Dyad d;
    if (E > 0 && rng.coin()) {
      d = st.edges[rng.below(st.edges.size())];
    } else {
      auto r = static_cast<long long>(rng.below(static_cast<std::uint64_t>(st.D)));
      if (r < static_cast<long long>(st.edges.size())) {
        d = st.edges[static_cast<std::size_t>(r)];
      } else {
        r -= static_cast<long long>(st.edges.size());
        int chosen = -1;
        for (int p : st.pairs) {
          const long long a = eligible_nonedges(pairs_[static_cast<std::size_t>(p)]);
          if (r < a) {
            chosen = p;
            break;
          }
          r -= a;
        }
        d = sample_eligible(pairs_[static_cast<std::size_t>(chosen)], net, rng);
      }
    }
    const bool present = net.has_edge(d);
    const double w = st.weight;
    const double fwd = w / Z_ * (present ? 0.5 / E + 0.5 / D : (E > 0 ? 0.5 : 1.0) / D);

    net.toggle(d);
    commit(net, d);
    const Stratum& after = strata_[static_cast<std::size_t>(s)];
    const auto E2 = static_cast<double>(after.edges.size());
    const auto D2 = static_cast<double>(after.D);
    const double rev = w / Z_ * (present ? (E2 > 0 ? 0.5 : 1.0) / D2 : 0.5 / E2 + 0.5 / D2);
    net.toggle(d);
    commit(net, d);
    return {d, std::log(rev) - std::log(fwd)};
  }

  void commit(const Network& net, Dyad d) override {
    d = net.canonical(d.tail, d.head);
    const int p = pair_of(d.tail, d.head);
    Pair& pr = pairs_[static_cast<std::size_t>(p)];
    const bool added = net.has_edge(d);
    if (added) {
      insert_edge(d, p);
      if (both_eligible(d.tail, d.head)) ++pr.unsat;
    } else {
      erase_edge(d, p);
      if (both_eligible(d.tail, d.head)) --pr.unsat;
    }
    mark(pr.stratum);
    if (directed_) {
      update_tail(d.tail, net);
      update_head(d.head, net);
    } else {
      update_tail(d.tail, net);
      update_tail(d.head, net);
    }
    bool changed = false;
    for (int s : dirty_list_) {
      dirty_[static_cast<std::size_t>(s)] = 0;
      const bool was = is_active(s);
      recount(s);
      changed |= was != is_active(s);
    }
    dirty_list_.clear();
    if (changed) rebuild_active();
  }

  // ---- introspection (tests, diagnostics) ----
  int stratum_count() const { return static_cast<int>(strata_.size()); }
  // Stratum of the dyad, or -1 when its level pair is frozen.
  int stratum_of(Vertex i, Vertex j) const {
    const int p = pair_of(i, j);
    return p < 0 ? -1 : pairs_[static_cast<std::size_t>(p)].stratum;
  }
  double stratum_weight(int s) const { return strata_[static_cast<std::size_t>(s)].weight; }
  long long stratum_edges(int s) const { return static_cast<long long>(strata_[static_cast<std::size_t>(s)].edges.size()); }
  // Number of dyads the dyad branch chooses among.
  long long stratum_proposable(int s) const { return strata_[static_cast<std::size_t>(s)].D; }
  bool stratum_active(int s) const { return is_active(s); }
  const std::string& stratum_label(int s) const { return strata_[static_cast<std::size_t>(s)].label; }
  const Constraints& constraints() const { return c_; }
  // True when d has positive probability of being proposed from net.
  bool can_propose(const Network& net, Dyad d) const {
    const int s = stratum_of(d.tail, d.head);
    if (s < 0 || strata_[static_cast<std::size_t>(s)].weight <= 0) return false;
    return net.has_edge(d) || both_eligible(d.tail, d.head);
  }

 private:
  struct ClassInfo {
    std::vector<Vertex> tails;  // tail-eligible (undirected: eligible) members
    std::vector<Vertex> heads;  // head-eligible members (directed only)
    long long both = 0;         // members eligible as tail and head
    int strat = 0;
    Vertex rep = 0;
    std::vector<int> pairs;  // class pairs this class takes part in
  };
  struct Pair {
    int a = 0, b = 0;
    int stratum = 0;
    long long unsat = 0;  // edges whose endpoints are both eligible
  };
  struct Stratum {
    double weight = 0.0;
    std::vector<int> pairs;
    std::vector<Dyad> edges;
    long long D = 0;
    std::string label;
  };

  bool eligible_tail(Vertex v) const { return telig_[static_cast<std::size_t>(v)] != 0; }
  bool eligible_head(Vertex v) const {
    return directed_ ? helig_[static_cast<std::size_t>(v)] != 0 : telig_[static_cast<std::size_t>(v)] != 0;
  }
  bool both_eligible(Vertex i, Vertex j) const { return eligible_tail(i) && eligible_head(j); }
  bool is_active(int s) const {
    const Stratum& st = strata_[static_cast<std::size_t>(s)];
    return st.weight > 0 && st.D > 0;
  }

  int pair_of(Vertex i, Vertex j) const {
    int a = cls_[static_cast<std::size_t>(i)], b = cls_[static_cast<std::size_t>(j)];
    if (!directed_ && a > b) std::swap(a, b);
    return pair_index_[static_cast<std::size_t>(a * K_ + b)];
  }

  long long unsat_pairs(const Pair& p) const {
    const ClassInfo& A = classes_[static_cast<std::size_t>(p.a)];
    const ClassInfo& B = classes_[static_cast<std::size_t>(p.b)];
    const auto na = static_cast<long long>(A.tails.size());
    if (!directed_) {
      if (p.a == p.b) return na * (na - 1) / 2;
      return na * static_cast<long long>(B.tails.size());
    }
    long long v = na * static_cast<long long>(B.heads.size());
    if (p.a == p.b) v -= A.both;
    return v;
  }
  long long eligible_nonedges(const Pair& p) const { return unsat_pairs(p) - p.unsat; }

  void build_classes(const ConstraintSpec& spec, const Network& net) {
    std::vector<int> strat(static_cast<std::size_t>(n_), 0);
    strat_levels_ = {""};
    if (spec.strat) {
      for (const auto& a : spec.strat->attrs)
        if (!net.attributes().find(a)) throw DataError("strat: missing vertex attribute '" + a + "'");
      LevelView lv = net.attributes().joint_levels(spec.strat->attrs);
      strat = lv.codes;
      strat_levels_ = lv.levels;
    }
    std::vector<std::array<int, 4>> keys;
    cls_.assign(static_cast<std::size_t>(n_), 0);
    for (Vertex v = 0; v < n_; ++v) {
      const std::array<int, 4> key{strat[static_cast<std::size_t>(v)], c_.block_code(v), c_.bd_code(v),
                                   net.is_bipartite() && v >= net.bipartite() ? 1 : 0};
      auto it = std::find(keys.begin(), keys.end(), key);
      if (it == keys.end()) {
        keys.push_back(key);
        ClassInfo ci;
        ci.strat = key[0];
        ci.rep = v;
        classes_.push_back(std::move(ci));
        it = keys.end() - 1;
      }
      cls_[static_cast<std::size_t>(v)] = static_cast<int>(it - keys.begin());
    }
    K_ = static_cast<int>(classes_.size());
    tcap_.resize(static_cast<std::size_t>(n_));
    hcap_.resize(static_cast<std::size_t>(n_));
    telig_.assign(static_cast<std::size_t>(n_), 0);
    helig_.assign(static_cast<std::size_t>(n_), 0);
    tpos_.assign(static_cast<std::size_t>(n_), -1);
    hpos_.assign(static_cast<std::size_t>(n_), -1);
    for (Vertex v = 0; v < n_; ++v) {
      tcap_[static_cast<std::size_t>(v)] = c_.tail_cap(v);
      hcap_[static_cast<std::size_t>(v)] = c_.head_cap(v);
      set_tail(v, (directed_ ? net.out_degree(v) : net.degree(v)) < tcap_[static_cast<std::size_t>(v)]);
      if (directed_) set_head(v, net.in_degree(v) < hcap_[static_cast<std::size_t>(v)]);
    }
  }

  void build_pairs(const Network& net) {
    pair_index_.assign(static_cast<std::size_t>(K_ * K_), -1);
    const int L = static_cast<int>(strat_levels_.size());
    std::vector<int> stratum_index(static_cast<std::size_t>(L * L), -1);
    std::vector<long long> size(static_cast<std::size_t>(K_), 0);
    for (Vertex v = 0; v < n_; ++v) ++size[static_cast<std::size_t>(cls_[static_cast<std::size_t>(v)])];
    for (int a = 0; a < K_; ++a)
      for (int b = directed_ ? 0 : a; b < K_; ++b) {
        const Vertex ra = classes_[static_cast<std::size_t>(a)].rep, rb = classes_[static_cast<std::size_t>(b)].rep;
        if (a == b && size[static_cast<std::size_t>(a)] < 2) continue;
        if (net.is_bipartite() && ((ra < net.bipartite()) == (rb < net.bipartite()))) continue;
        if (!c_.pair_allowed(ra, rb)) continue;
        if (!directed_ && !c_.pair_allowed(rb, ra)) continue;
        int sa = classes_[static_cast<std::size_t>(a)].strat, sb = classes_[static_cast<std::size_t>(b)].strat;
        if (!directed_ && sa > sb) std::swap(sa, sb);
        int& si = stratum_index[static_cast<std::size_t>(sa * L + sb)];
        if (si < 0) {
          si = static_cast<int>(strata_.size());
          Stratum st;
          st.label = strat_levels_[static_cast<std::size_t>(sa)] + (directed_ ? "->" : "--") +
                     strat_levels_[static_cast<std::size_t>(sb)];
          strata_.push_back(std::move(st));
          stratum_levels_.push_back({sa, sb});
        }
        Pair p;
        p.a = a;
        p.b = b;
        p.stratum = si;
        const int id = static_cast<int>(pairs_.size());
        pairs_.push_back(p);
        pair_index_[static_cast<std::size_t>(a * K_ + b)] = id;
        strata_[static_cast<std::size_t>(si)].pairs.push_back(id);
        classes_[static_cast<std::size_t>(a)].pairs.push_back(id);
        if (b != a) classes_[static_cast<std::size_t>(b)].pairs.push_back(id);
      }
    if (strata_.empty()) throw DataError("frozen state: every dyad is blocked by the constraints");
    dirty_.assign(strata_.size(), 0);
  }

  void build_weights(const ConstraintSpec& spec, const Network& net) {
    const std::size_t L = strat_levels_.size();
    if (spec.strat && spec.strat->pmat) {
      const Matrix& m = *spec.strat->pmat;
      if (m.size() != L)
        throw DataError("strat pmat is " + std::to_string(m.size()) + "x" + std::to_string(m.size()) + " but there are " +
                        std::to_string(L) + " strat levels");
      for (std::size_t s = 0; s < strata_.size(); ++s) {
        const auto [a, b] = stratum_levels_[s];
        strata_[s].weight = m[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)];
      }
    } else if (spec.strat && spec.strat->empirical) {
      std::vector<double> count(strata_.size(), 0.0);
      for (const auto& e : net.edges()) {
        const int p = pair_of(e.tail, e.head);
        count[static_cast<std::size_t>(pairs_[static_cast<std::size_t>(p)].stratum)] += 1.0;
      }
      if (net.edge_count() == 0) {
        std::cerr << "warning: strat(empirical=true) on an empty network; using equal stratum weights\n";
        std::fill(count.begin(), count.end(), 1.0);
      }
      for (std::size_t s = 0; s < strata_.size(); ++s) strata_[s].weight = count[s];
    } else {
      for (auto& st : strata_) st.weight = 1.0;
    }
    if (std::none_of(strata_.begin(), strata_.end(), [](const Stratum& s) { return s.weight > 0; }))
      throw DataError("all strata have zero proposal weight");
  }

  void set_tail(Vertex v, bool on) {
    const auto sv = static_cast<std::size_t>(v);
    if ((telig_[sv] != 0) == on) return;
    telig_[sv] = on ? 1 : 0;
    ClassInfo& c = classes_[static_cast<std::size_t>(cls_[sv])];
    list_set(c.tails, tpos_, v, on);
    if (directed_ && helig_[sv]) c.both += on ? 1 : -1;
  }
  void set_head(Vertex v, bool on) {
    const auto sv = static_cast<std::size_t>(v);
    if ((helig_[sv] != 0) == on) return;
    helig_[sv] = on ? 1 : 0;
    ClassInfo& c = classes_[static_cast<std::size_t>(cls_[sv])];
    list_set(c.heads, hpos_, v, on);
    if (telig_[sv]) c.both += on ? 1 : -1;
  }
  static void list_set(std::vector<Vertex>& list, std::vector<int>& pos, Vertex v, bool on) {
    const auto sv = static_cast<std::size_t>(v);
    if (on) {
      pos[sv] = static_cast<int>(list.size());
      list.push_back(v);
    } else {
      const int at = pos[sv];
      const Vertex last = list.back();
      list[static_cast<std::size_t>(at)] = last;
      pos[static_cast<std::size_t>(last)] = at;
      list.pop_back();
      pos[sv] = -1;
    }
  }

  void mark(int s) {
    if (!dirty_[static_cast<std::size_t>(s)]) {
      dirty_[static_cast<std::size_t>(s)] = 1;
      dirty_list_.push_back(s);
    }
  }
  void mark_class(int c) {
    for (int p : classes_[static_cast<std::size_t>(c)].pairs) mark(pairs_[static_cast<std::size_t>(p)].stratum);
  }

  // Re-derives v's tail (undirected: only) eligibility after its degree changed.
  void update_tail(Vertex v, const Network& net) {
    const auto sv = static_cast<std::size_t>(v);
    const bool want = (directed_ ? net.out_degree(v) : net.degree(v)) < tcap_[sv];
    if (want == (telig_[sv] != 0)) return;
    set_tail(v, want);
    const long long delta = want ? 1 : -1;
    for (Vertex u : net.out_neighbors(v)) {
      if (!eligible_head(u)) continue;
      const int p = pair_of(v, u);
      pairs_[static_cast<std::size_t>(p)].unsat += delta;
    }
    mark_class(cls_[sv]);
  }
  void update_head(Vertex v, const Network& net) {
    const auto sv = static_cast<std::size_t>(v);
    const bool want = net.in_degree(v) < hcap_[sv];
    if (want == (helig_[sv] != 0)) return;
    set_head(v, want);
    const long long delta = want ? 1 : -1;
    for (Vertex u : net.in_neighbors(v)) {
      if (!eligible_tail(u)) continue;
      const int p = pair_of(u, v);
      pairs_[static_cast<std::size_t>(p)].unsat += delta;
    }
    mark_class(cls_[sv]);
  }

  void insert_edge(Dyad d, int p) {
    Stratum& st = strata_[static_cast<std::size_t>(pairs_[static_cast<std::size_t>(p)].stratum)];
    slot_[key(d)] = static_cast<std::uint32_t>(st.edges.size());
    st.edges.push_back(d);
  }
  void erase_edge(Dyad d, int p) {
    Stratum& st = strata_[static_cast<std::size_t>(pairs_[static_cast<std::size_t>(p)].stratum)];
    auto it = slot_.find(key(d));
    const std::uint32_t at = it->second;
    slot_.erase(it);
    const Dyad last = st.edges.back();
    st.edges.pop_back();
    if (at < st.edges.size()) {
      st.edges[at] = last;
      slot_[key(last)] = at;
    }
  }
  std::uint64_t key(Dyad d) const {
    return static_cast<std::uint64_t>(d.tail) * static_cast<std::uint64_t>(n_) + static_cast<std::uint64_t>(d.head);
  }

  void recount(int s) {
    Stratum& st = strata_[static_cast<std::size_t>(s)];
    long long D = static_cast<long long>(st.edges.size());
    for (int p : st.pairs) D += eligible_nonedges(pairs_[static_cast<std::size_t>(p)]);
    st.D = D;
  }

  void rebuild_active() {
    active_.clear();
    cum_.clear();
    double z = 0.0;
    for (std::size_t s = 0; s < strata_.size(); ++s) {
      if (!is_active(static_cast<int>(s))) continue;
      z += strata_[s].weight;
      active_.push_back(static_cast<int>(s));
      cum_.push_back(z);
    }
    Z_ = z;
  }

  int draw_stratum(Rng& rng) const {
    if (active_.size() == 1) return active_[0];
    const double u = rng.uniform() * Z_;
    auto it = std::upper_bound(cum_.begin(), cum_.end(), u);
    if (it == cum_.end()) --it;
    return active_[static_cast<std::size_t>(it - cum_.begin())];
  }

  Dyad sample_eligible(const Pair& p, const Network& net, Rng& rng) const {
    const ClassInfo& A = classes_[static_cast<std::size_t>(p.a)];
    const ClassInfo& B = classes_[static_cast<std::size_t>(p.b)];
    const std::vector<Vertex>& heads = directed_ ? B.heads : B.tails;
    for (int attempt = 0; attempt < 64; ++attempt) {
      Vertex i, j;
      if (!directed_ && p.a == p.b) {
        const auto n = A.tails.size();
        const auto x = rng.below(n);
        auto y = rng.below(n - 1);
        if (y >= x) ++y;
        i = A.tails[x];
        j = A.tails[y];
      } else {
        i = A.tails[rng.below(A.tails.size())];
        j = heads[rng.below(heads.size())];
        if (i == j) continue;
      }
      if (!net.has_edge(i, j)) return net.canonical(i, j);
    }
    // dense corner: enumerate the eligible non-edges
    std::vector<Dyad> all;
    for (std::size_t x = 0; x < A.tails.size(); ++x) {
      const Vertex i = A.tails[x];
      for (std::size_t y = 0; y < heads.size(); ++y) {
        const Vertex j = heads[y];
        if (i == j) continue;
        if (!directed_ && p.a == p.b && j < i) continue;
        if (!net.has_edge(i, j)) all.push_back(net.canonical(i, j));
      }
    }
    return all[rng.below(all.size())];
  }

  Constraints c_;
  bool directed_ = false;
  int n_ = 0;
  int K_ = 0;
  std::vector<std::string> strat_levels_;
  std::vector<int> cls_;
  std::vector<ClassInfo> classes_;
  std::vector<int> tcap_, hcap_;
  std::vector<char> telig_, helig_;
  std::vector<int> tpos_, hpos_;
  std::vector<int> pair_index_;
  std::vector<Pair> pairs_;
  std::vector<Stratum> strata_;
  std::vector<std::pair<int, int>> stratum_levels_;
  std::unordered_map<std::uint64_t, std::uint32_t> slot_;
  std::vector<char> dirty_;
  std::vector<int> dirty_list_;
  std::vector<int> active_;
  std::vector<double> cum_;
  double Z_ = 0.0;
};

enum class ProposalKind { automatic, uniform, tnt, bdstrat };

inline ProposalKind parse_proposal_kind(const std::string& s) {
  if (s == "auto") return ProposalKind::automatic;
  if (s == "uniform") return ProposalKind::uniform;
  if (s == "tnt" || s == "TNT") return ProposalKind::tnt;
  if (s == "bdstrat" || s == "BDStratTNT" || s == "bdstrattnt") return ProposalKind::bdstrat;
  throw UsageError("unknown proposal '" + s + "' (expected auto, uniform, tnt or bdstrat)");
}

// Proposal selection: BDStratTNT whenever a sample-space constraint or the
// strat hint is present, TNT otherwise.
inline ProposalKind resolve_proposal_kind(ProposalKind k, const ConstraintSpec& spec) {
  if (k != ProposalKind::automatic) return k;
  return (spec.bd || spec.blocks || spec.strat) ? ProposalKind::bdstrat : ProposalKind::tnt;
}

inline std::unique_ptr<ProposalEngine> make_proposal(ProposalKind kind, const ConstraintSpec& spec, const Network& net) {
  switch (resolve_proposal_kind(kind, spec)) {
    case ProposalKind::uniform: {
      Constraints c(spec, net);
      c.validate(net);
      return std::make_unique<UniformProposal>(std::move(c));
    }
    case ProposalKind::tnt: {
      Constraints c(spec, net);
      c.validate(net);
      return std::make_unique<TntProposal>(std::move(c));
    }
    case ProposalKind::bdstrat: return std::make_unique<BdStratTntProposal>(spec, net);
    case ProposalKind::automatic: break;
  }
  throw UsageError("unresolved proposal kind");
}

// Creates a fresh proposal for a network; each chain owns its own.
struct ProposalConfig {
  ProposalKind kind = ProposalKind::automatic;
  ConstraintSpec constraints;
  std::unique_ptr<ProposalEngine> make(const Network& net) const { return make_proposal(kind, constraints, net); }
};

}  // namespace ergm
