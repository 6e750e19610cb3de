#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ergm/error.hpp"
#include "ergm/formula.hpp"
#include "ergm/network.hpp"
#include "ergm/tsv.hpp"

namespace ergm {

using StatVector = std::vector<double>;

// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

namespace detail {

// Number of vertices adjacent to both a and b, ignoring direction.
inline int common_neighbors(const Network& net, Vertex a, Vertex b) {
  auto na = net.out_neighbors(a);
  auto nb = net.out_neighbors(b);
  if (na.size() > nb.size()) {
    std::swap(na, nb);
    std::swap(a, b);
  }
  int c = 0;
  for (Vertex k : na)
    if (k != b && net.has_edge(b, k)) ++c;
  return c;
}

// |{k : a->k and b->k}| etc. for the directed triad counts.
template <class Pred>
int count_if_span(std::span<const Vertex> s, Pred pred) {
  int c = 0;
  for (Vertex k : s)
    if (pred(k)) ++c;
  return c;
}

// Degree of v not counting the dyad (i, j) itself.
inline int degree_without(const Network& net, Vertex v, bool present) { return net.degree(v) - (present ? 1 : 0); }

class Term {
 public:
  virtual ~Term() = default;
  virtual void change(const Network& net, Vertex i, Vertex j, double* out) const = 0;
  virtual void summary(const Network& net, double* out) const = 0;
  int dim() const { return static_cast<int>(names.size()); }

  std::vector<std::string> names;
  bool dyad_independent = false;
  bool integer_valued = true;
};

// Terms whose statistic is a sum over edges of a per-dyad contribution.
class EdgewiseTerm : public Term {
 public:
  void summary(const Network& net, double* out) const override {
    std::vector<CompensatedSum> acc(names.size());
    std::vector<double> buf(names.size());
    for (const auto& e : net.edges()) {
      std::fill(buf.begin(), buf.end(), 0.0);
      contribution(net, e.tail, e.head, buf.data());
      for (std::size_t k = 0; k < buf.size(); ++k) acc[k].add(buf[k]);
    }
    for (std::size_t k = 0; k < acc.size(); ++k) out[k] = acc[k].value();
  }
  void change(const Network& net, Vertex i, Vertex j, double* out) const override {
    std::fill(out, out + dim(), 0.0);
    contribution(net, i, j, out);
  }

 protected:
  virtual void contribution(const Network& net, Vertex i, Vertex j, double* out) const = 0;
};

class EdgesTerm final : public EdgewiseTerm {
 public:
  EdgesTerm() {
    names = {"edges"};
    dyad_independent = true;
  }

 protected:
  void contribution(const Network&, Vertex, Vertex, double* out) const override { out[0] = 1.0; }
};

class TriangleTerm final : public Term {
 public:
  TriangleTerm() { names = {"triangle"}; }

  void change(const Network& net, Vertex i, Vertex j, double* out) const override {
    if (!net.directed()) {
      out[0] = common_neighbors(net, i, j);
      return;
    }
    // i->j closes i->k->j, extends i->j->k with i->k, and k->i, k->j
    const auto out_i = net.out_neighbors(i);
    const auto in_i = net.in_neighbors(i);
    int c = count_if_span(out_i, [&](Vertex k) { return net.has_edge(k, j); });
    c += count_if_span(out_i, [&](Vertex k) { return k != j && net.has_edge(j, k); });
    c += count_if_span(in_i, [&](Vertex k) { return k != j && net.has_edge(k, j); });
    out[0] = c;
  }

  void summary(const Network& net, double* out) const override {
    long long c = 0;
    for (const auto& e : net.edges()) {
      if (net.directed())
        c += count_if_span(net.out_neighbors(e.tail), [&](Vertex k) { return net.has_edge(k, e.head); });
      else
        c += common_neighbors(net, e.tail, e.head);
    }
    out[0] = static_cast<double>(net.directed() ? c : c / 3);
  }
};

// Resolves a level set against the sorted levels: positive 1-based entries
// keep those levels, negative entries drop them. Returns retained indices.
inline std::vector<int> resolve_levels(const Value* v, std::size_t nlevels, std::vector<int> fallback,
                                       const std::string& where) {
  if (!v) return fallback;
  std::vector<double> raw;
  if (v->kind == Value::Kind::list)
    for (const auto& x : v->items) raw.push_back(x.number);
  else
    raw.push_back(v->number);
  bool any_pos = false, any_neg = false;
  for (double x : raw) {
    if (x == 0 || std::abs(x) > static_cast<double>(nlevels))
      throw DataError(where + ": level index " + format_double(x) + " out of range 1.." + std::to_string(nlevels));
    (x > 0 ? any_pos : any_neg) = true;
  }
  if (any_pos && any_neg) throw UsageError(where + ": cannot mix kept and dropped levels");
  std::vector<int> out;
  if (any_neg) {
    for (std::size_t l = 0; l < nlevels; ++l)
      if (std::find(raw.begin(), raw.end(), -static_cast<double>(l + 1)) == raw.end()) out.push_back(static_cast<int>(l));
  } else {
    for (double x : raw) out.push_back(static_cast<int>(x) - 1);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
  }
  return out;
}

class NodematchTerm final : public EdgewiseTerm {
 public:
  NodematchTerm(const Network& net, const TermSpec& spec) {
    attr_ = *spec.attr();
    const LevelView lv = net.attributes().levels(attr_);
    codes_ = lv.codes;
    const Value* diff = spec.arg("diff", 1);
    diff_ = diff && diff->flag;
    std::vector<int> all(lv.levels.size());
    for (std::size_t l = 0; l < all.size(); ++l) all[l] = static_cast<int>(l);
    const std::vector<int> keep = resolve_levels(spec.arg("levels", 2), lv.levels.size(), all, "nodematch");
    slot_.assign(lv.levels.size(), -1);
    if (diff_) {
      for (std::size_t k = 0; k < keep.size(); ++k) {
        slot_[static_cast<std::size_t>(keep[k])] = static_cast<int>(k);
        names.push_back("nodematch." + attr_ + "." + lv.levels[static_cast<std::size_t>(keep[k])]);
      }
    } else {
      for (int l : keep) slot_[static_cast<std::size_t>(l)] = 0;
      names.push_back("nodematch." + attr_);
    }
    dyad_independent = true;
  }

 protected:
  void contribution(const Network&, Vertex i, Vertex j, double* out) const override {
    const int ci = codes_[static_cast<std::size_t>(i)];
    if (ci != codes_[static_cast<std::size_t>(j)]) return;
    const int s = slot_[static_cast<std::size_t>(ci)];
    if (s >= 0) out[s] += 1.0;
  }

 private:
  std::string attr_;
  std::vector<int> codes_;
  std::vector<int> slot_;
  bool diff_ = false;
};

class NodefactorTerm final : public EdgewiseTerm {
 public:
  NodefactorTerm(const Network& net, const TermSpec& spec) {
    const std::string attr = *spec.attr();
    const LevelView lv = net.attributes().levels(attr);
    codes_ = lv.codes;
    std::vector<int> drop_first;
    for (std::size_t l = 1; l < lv.levels.size(); ++l) drop_first.push_back(static_cast<int>(l));
    const std::vector<int> keep = resolve_levels(spec.arg("levels", 1), lv.levels.size(), drop_first, "nodefactor");
    if (keep.empty()) throw DataError("nodefactor(" + attr + ") retains no levels");
    slot_.assign(lv.levels.size(), -1);
    for (std::size_t k = 0; k < keep.size(); ++k) {
      slot_[static_cast<std::size_t>(keep[k])] = static_cast<int>(k);
      names.push_back("nodefactor." + attr + "." + lv.levels[static_cast<std::size_t>(keep[k])]);
    }
    dyad_independent = true;
  }

 protected:
  void contribution(const Network&, Vertex i, Vertex j, double* out) const override {
    const int si = slot_[static_cast<std::size_t>(codes_[static_cast<std::size_t>(i)])];
    const int sj = slot_[static_cast<std::size_t>(codes_[static_cast<std::size_t>(j)])];
    if (si >= 0) out[si] += 1.0;
    if (sj >= 0) out[sj] += 1.0;
  }

 private:
  std::vector<int> codes_;
  std::vector<int> slot_;
};

class CovariateTerm final : public EdgewiseTerm {
 public:
  CovariateTerm(const Network& net, const TermSpec& spec, bool absdiff) : absdiff_(absdiff) {
    const std::string attr = *spec.attr();
    x_ = net.attributes().numeric(attr);
    names = {(absdiff ? "absdiff." : "nodecov.") + attr};
    dyad_independent = true;
    integer_valued = std::all_of(x_.begin(), x_.end(), [](double v) { return v == std::floor(v); });
  }

 protected:
  void contribution(const Network&, Vertex i, Vertex j, double* out) const override {
    const double a = x_[static_cast<std::size_t>(i)], b = x_[static_cast<std::size_t>(j)];
    out[0] = absdiff_ ? std::abs(a - b) : a + b;
  }

 private:
  std::vector<double> x_;
  bool absdiff_;
};

// Terms built from a function of each vertex's degree: stat = Σ_v f(d_v).
class DegreeFunctionTerm : public Term {
 public:
  void summary(const Network& net, double* out) const override {
    std::vector<CompensatedSum> acc(names.size());
    std::vector<double> buf(names.size());
    for (Vertex v = 0; v < net.size(); ++v) {
      std::fill(buf.begin(), buf.end(), 0.0);
      value(net.degree(v), buf.data(), 1.0);
      for (std::size_t k = 0; k < buf.size(); ++k) acc[k].add(buf[k]);
    }
    for (std::size_t k = 0; k < acc.size(); ++k) out[k] = acc[k].value();
  }
  void change(const Network& net, Vertex i, Vertex j, double* out) const override {
    std::fill(out, out + dim(), 0.0);
    const bool present = net.has_edge(i, j);
    for (Vertex v : {i, j}) {
      const int d = degree_without(net, v, present);
      increment(d, out);
    }
  }

 protected:
  // Adds sign·f(d) to out.
  virtual void value(int d, double* out, double sign) const = 0;
  // Adds f(d + 1) − f(d) to out.
  virtual void increment(int d, double* out) const {
    value(d + 1, out, 1.0);
    value(d, out, -1.0);
  }
};

class ConcurrentTerm final : public DegreeFunctionTerm {
 public:
  ConcurrentTerm() { names = {"concurrent"}; }

 protected:
  void value(int d, double* out, double sign) const override {
    if (d >= 2) out[0] += sign;
  }
};

class DegreeTerm final : public DegreeFunctionTerm {
 public:
  explicit DegreeTerm(const TermSpec& spec) {
    const Value* d = spec.arg("d", 0);
    if (d->kind == Value::Kind::list)
      for (const auto& x : d->items) ks_.push_back(static_cast<int>(x.number));
    else
      ks_.push_back(static_cast<int>(d->number));
    for (int k : ks_) {
      if (k < 0) throw UsageError("degree(" + std::to_string(k) + "): degree must be nonnegative");
      names.push_back("degree" + std::to_string(k));
    }
  }

 protected:
  void value(int d, double* out, double sign) const override {
    for (std::size_t k = 0; k < ks_.size(); ++k)
      if (d == ks_[k]) out[k] += sign;
  }

 private:
  std::vector<int> ks_;
};

class GwdegreeTerm final : public DegreeFunctionTerm {
 public:
  explicit GwdegreeTerm(const TermSpec& spec) {
    alpha_ = spec.arg("decay", 0)->number;
    r_ = 1.0 - std::exp(-alpha_);
    names = {"gwdeg.fixed." + format_double(alpha_)};
    integer_valued = false;
  }

 protected:
  void value(int d, double* out, double sign) const override {
    out[0] += sign * std::exp(alpha_) * (1.0 - std::pow(r_, d));
  }
  void increment(int d, double* out) const override { out[0] += std::pow(r_, d); }

 private:
  double alpha_ = 0.0;
  double r_ = 0.0;
};

class GwespTerm final : public Term {
 public:
  GwespTerm(const Network& net, const TermSpec& spec) {
    if (net.directed()) throw UsageError("gwesp is implemented for undirected networks only");
    alpha_ = spec.arg("decay", 0)->number;
    r_ = 1.0 - std::exp(-alpha_);
    names = {"gwesp.fixed." + format_double(alpha_)};
    integer_valued = false;
  }

  void change(const Network& net, Vertex i, Vertex j, double* out) const override {
    const bool present = net.has_edge(i, j);
    double delta = std::exp(alpha_) * (1.0 - std::pow(r_, common_neighbors(net, i, j)));
    auto ni = net.out_neighbors(i);
    for (Vertex k : ni) {
      if (k == j || !net.has_edge(j, k)) continue;
      // k is a shared partner of i and j; edges (i,k) and (j,k) gain j and i as partners
      const int sp_ik = common_neighbors(net, i, k) - (present ? 1 : 0);
      const int sp_jk = common_neighbors(net, j, k) - (present ? 1 : 0);
      delta += std::pow(r_, sp_ik) + std::pow(r_, sp_jk);
    }
    out[0] = delta;
  }

  void summary(const Network& net, double* out) const override {
    CompensatedSum acc;
    const double ea = std::exp(alpha_);
    for (const auto& e : net.edges()) acc.add(ea * (1.0 - std::pow(r_, common_neighbors(net, e.tail, e.head))));
    out[0] = acc.value();
  }

 private:
  double alpha_ = 0.0;
  double r_ = 0.0;
};

inline std::unique_ptr<Term> make_term(const Network& net, const TermSpec& spec) {
  const auto require_attr = [&] {
    const std::string a = *spec.attr();
    if (!net.attributes().find(a))
      throw DataError("term '" + spec.name + "' refers to missing vertex attribute '" + a + "'");
  };
  if (spec.name == "edges") return std::make_unique<EdgesTerm>();
  if (spec.name == "triangle") return std::make_unique<TriangleTerm>();
  if (spec.name == "nodematch") {
    require_attr();
    return std::make_unique<NodematchTerm>(net, spec);
  }
  if (spec.name == "nodefactor") {
    require_attr();
    return std::make_unique<NodefactorTerm>(net, spec);
  }
  if (spec.name == "nodecov" || spec.name == "absdiff") {
    require_attr();
    if (net.attributes().at(*spec.attr()).categorical)
      throw DataError("term '" + spec.name + "' needs a numeric attribute, '" + *spec.attr() + "' is categorical");
    return std::make_unique<CovariateTerm>(net, spec, spec.name == "absdiff");
  }
  if (spec.name == "concurrent") return std::make_unique<ConcurrentTerm>();
  if (spec.name == "degree") return std::make_unique<DegreeTerm>(spec);
  if (spec.name == "gwdegree") return std::make_unique<GwdegreeTerm>(spec);
  if (spec.name == "gwesp") return std::make_unique<GwespTerm>(net, spec);
  throw UsageError("unknown term '" + spec.name + "'");
}

}  // namespace detail

// A model specification resolved against a particular network's attributes.
// The binding stays valid for any network with the same vertex set and
// attribute table; change statistics only read the network passed in.
class BoundModel {
 public:
  BoundModel(ModelSpec spec, const Network& net) : spec_(std::move(spec)) {
    for (const auto& ts : spec_.terms) {
      auto term = detail::make_term(net, ts);
      const int d = term->dim();
      if (d == 0) throw DataError("term '" + ts.name + "' has no statistics on this network");
      if (ts.offset && !ts.offset_mask.empty() && ts.offset_mask.size() != static_cast<std::size_t>(d))
        throw UsageError("offset mask for '" + ts.name + "' has " + std::to_string(ts.offset_mask.size()) +
                         " entries, term has " + std::to_string(d) + " statistics");
      for (int k = 0; k < d; ++k) {
        const bool off = ts.offset && (ts.offset_mask.empty() || ts.offset_mask[static_cast<std::size_t>(k)]);
        names_.push_back(term->names[static_cast<std::size_t>(k)]);
        offset_.push_back(off);
        dyad_indep_.push_back(term->dyad_independent);
        integer_.push_back(term->integer_valued);
        term_of_.push_back(static_cast<int>(terms_.size()));
      }
      offsets_.push_back(p_);
      p_ += d;
      terms_.push_back(std::move(term));
    }
    n_ = net.size();
    directed_ = net.directed();
    bipartite_ = net.bipartite();
  }

  BoundModel(const std::string& formula, const Network& net) : BoundModel(parse_model_formula(formula), net) {}

  int p() const { return p_; }
  const ModelSpec& spec() const { return spec_; }
  const std::vector<std::string>& names() const { return names_; }
  const std::vector<bool>& offset_mask() const { return offset_; }
  bool is_offset(int k) const { return offset_[static_cast<std::size_t>(k)]; }
  bool has_offsets() const { return std::find(offset_.begin(), offset_.end(), true) != offset_.end(); }
  bool dyad_independent(int k) const { return dyad_indep_[static_cast<std::size_t>(k)]; }
  bool all_dyad_independent() const {
    return std::all_of(dyad_indep_.begin(), dyad_indep_.end(), [](bool b) { return b; });
  }
  bool integer_valued(int k) const { return integer_[static_cast<std::size_t>(k)]; }
  int term_of_stat(int k) const { return term_of_[static_cast<std::size_t>(k)]; }

  // Indices of non-offset statistics, in order.
  std::vector<int> free_indices() const {
    std::vector<int> out;
    for (int k = 0; k < p_; ++k)
      if (!offset_[static_cast<std::size_t>(k)]) out.push_back(k);
    return out;
  }
  std::vector<int> offset_indices() const {
    std::vector<int> out;
    for (int k = 0; k < p_; ++k)
      if (offset_[static_cast<std::size_t>(k)]) out.push_back(k);
    return out;
  }
  int p_free() const { return static_cast<int>(free_indices().size()); }

  // Assembles a full coefficient vector from free coefficients and the
  // offset coefficients. `coefs` may also already be full length.
  std::vector<double> full_coefs(const std::vector<double>& coefs, const std::vector<double>& offset_coefs) const {
    const auto fi = free_indices();
    const auto oi = offset_indices();
    if (coefs.size() == static_cast<std::size_t>(p_) && offset_coefs.empty()) return coefs;
    if (coefs.size() != fi.size())
      throw UsageError("expected " + std::to_string(fi.size()) + " free coefficients (or " + std::to_string(p_) +
                       " in total), got " + std::to_string(coefs.size()));
    if (offset_coefs.size() != oi.size())
      throw UsageError("expected " + std::to_string(oi.size()) + " offset coefficients, got " +
                       std::to_string(offset_coefs.size()));
    std::vector<double> out(static_cast<std::size_t>(p_), 0.0);
    for (std::size_t k = 0; k < fi.size(); ++k) out[static_cast<std::size_t>(fi[k])] = coefs[k];
    for (std::size_t k = 0; k < oi.size(); ++k) out[static_cast<std::size_t>(oi[k])] = offset_coefs[k];
    return out;
  }

  void check_network(const Network& net) const {
    if (net.size() != n_ || net.directed() != directed_ || net.bipartite() != bipartite_)
      throw DataError("network does not match the one the model was bound to");
  }

  // g(y).
  StatVector summary(const Network& net) const {
    StatVector out(static_cast<std::size_t>(p_), 0.0);
    for (std::size_t t = 0; t < terms_.size(); ++t) terms_[t]->summary(net, out.data() + offsets_[t]);
    return out;
  }

  // Δ_ij g(y) = g(y with ij) − g(y without ij), written into out[0..p).
  void change_stats(const Network& net, Vertex i, Vertex j, double* out) const {
    for (std::size_t t = 0; t < terms_.size(); ++t) terms_[t]->change(net, i, j, out + offsets_[t]);
  }
  StatVector change_stats(const Network& net, Vertex i, Vertex j) const {
    StatVector out(static_cast<std::size_t>(p_), 0.0);
    change_stats(net, i, j, out.data());
    return out;
  }

 private:
  ModelSpec spec_;
  std::vector<std::unique_ptr<detail::Term>> terms_;
  std::vector<int> offsets_;
  std::vector<std::string> names_;
  std::vector<bool> offset_;
  std::vector<bool> dyad_indep_;
  std::vector<bool> integer_;
  std::vector<int> term_of_;
  int p_ = 0;
  int n_ = 0;
  bool directed_ = false;
  int bipartite_ = 0;
};

// current ± delta.
inline void apply_toggle_inplace(StatVector& current, const double* delta, bool adding) {
  const double s = adding ? 1.0 : -1.0;
  for (std::size_t k = 0; k < current.size(); ++k) current[k] += s * delta[k];
}

inline StatVector apply_toggle_stats(const StatVector& current, const StatVector& delta, bool adding) {
  StatVector out = current;
  apply_toggle_inplace(out, delta.data(), adding);
  return out;
}

}  // namespace ergm
