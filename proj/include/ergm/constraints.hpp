#pragma once

#include <algorithm>
#include <climits>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ergm/error.hpp"
#include "ergm/formula.hpp"
#include "ergm/network.hpp"

namespace ergm {

// Sample-space restrictions (`bd`, `blocks`) resolved against a network's
// vertex attributes. Hints (`strat`, `sparse`) are not represented here.
class Constraints {
 public:
  static constexpr int kNoCap = INT_MAX;

  Constraints() = default;

  Constraints(const ConstraintSpec& spec, const Network& net)
      : directed_(net.directed()), n_(net.size()) {
    tail_cap_.assign(static_cast<std::size_t>(n_), kNoCap);
    head_cap_.assign(static_cast<std::size_t>(n_), kNoCap);
    if (spec.blocks) bind_blocks(*spec.blocks, net);
    if (spec.bd) bind_bd(*spec.bd, net);
  }

  bool active() const { return has_blocks_ || has_caps_ || has_matrix_; }
  bool has_blocks() const { return has_blocks_; }
  bool has_matrix() const { return has_matrix_; }

  // Static part: the level pair of (i, j) is not frozen. Tail/head order
  // matters for directed networks only.
  bool pair_allowed(Vertex i, Vertex j) const {
    if (has_blocks_) {
      const int a = block_code_[static_cast<std::size_t>(i)], b = block_code_[static_cast<std::size_t>(j)];
      if (forbidden_[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)]) return false;
    }
    if (has_matrix_) {
      const int a = bd_code_[static_cast<std::size_t>(i)], b = bd_code_[static_cast<std::size_t>(j)];
      if (directed_) {
        if (!out_mat_.empty() && out_mat_[a][b] <= 0) return false;
        if (!in_mat_.empty() && in_mat_[b][a] <= 0) return false;
      } else {
        if (und_mat_[a][b] <= 0 || und_mat_[b][a] <= 0) return false;
      }
    }
    return true;
  }

  // Adding the edge i->j (or i--j) keeps every degree cap.
  bool can_add(const Network& net, Vertex i, Vertex j) const {
    if (directed_) {
      if (net.out_degree(i) >= tail_cap_[static_cast<std::size_t>(i)]) return false;
      if (net.in_degree(j) >= head_cap_[static_cast<std::size_t>(j)]) return false;
    } else {
      if (net.degree(i) >= tail_cap_[static_cast<std::size_t>(i)]) return false;
      if (net.degree(j) >= tail_cap_[static_cast<std::size_t>(j)]) return false;
    }
    if (has_matrix_) {
      const int a = bd_code_[static_cast<std::size_t>(i)], b = bd_code_[static_cast<std::size_t>(j)];
      if (directed_) {
        if (!out_mat_.empty() && level_count(net.out_neighbors(i), b) >= out_mat_[a][b]) return false;
        if (!in_mat_.empty() && level_count(net.in_neighbors(j), a) >= in_mat_[b][a]) return false;
      } else {
        if (level_count(net.out_neighbors(i), b) >= und_mat_[a][b]) return false;
        if (level_count(net.out_neighbors(j), a) >= und_mat_[b][a]) return false;
      }
    }
    return true;
  }

  // Toggling d keeps the network inside the constrained space.
  bool toggle_allowed(const Network& net, Dyad d) const {
    if (!pair_allowed(d.tail, d.head)) return false;
    return net.has_edge(d) || can_add(net, d.tail, d.head);
  }

  bool satisfied_by(const Network& net, std::string* why = nullptr) const {
    auto fail = [&](const std::string& msg) {
      if (why) *why = msg;
      return false;
    };
    for (const auto& e : net.edges())
      if (!pair_allowed(e.tail, e.head))
        return fail("edge " + std::to_string(e.tail + 1) + "-" + std::to_string(e.head + 1) + " joins a blocked level pair");
    for (Vertex v = 0; v < n_; ++v) {
      const std::size_t s = static_cast<std::size_t>(v);
      const int dout = directed_ ? net.out_degree(v) : net.degree(v);
      if (dout > tail_cap_[s]) return fail("vertex " + std::to_string(v + 1) + " exceeds its degree bound");
      if (directed_ && net.in_degree(v) > head_cap_[s])
        return fail("vertex " + std::to_string(v + 1) + " exceeds its in-degree bound");
      if (has_matrix_) {
        const int a = bd_code_[s];
        for (std::size_t b = 0; b < nbd_; ++b) {
          const auto bi = static_cast<int>(b);
          if (directed_) {
            if (!out_mat_.empty() && level_count(net.out_neighbors(v), bi) > out_mat_[a][b])
              return fail("vertex " + std::to_string(v + 1) + " exceeds its per-level out-degree bound");
            if (!in_mat_.empty() && level_count(net.in_neighbors(v), bi) > in_mat_[a][b])
              return fail("vertex " + std::to_string(v + 1) + " exceeds its per-level in-degree bound");
          } else if (level_count(net.out_neighbors(v), bi) > und_mat_[a][b]) {
            return fail("vertex " + std::to_string(v + 1) + " exceeds its per-level degree bound");
          }
        }
      }
    }
    return true;
  }

  void validate(const Network& net) const {
    std::string why;
    if (!satisfied_by(net, &why)) throw DataError("initial network violates the constraints: " + why);
  }

  // Per-vertex view used by the stratified proposal. Matrix caps must have at
  // most one positive entry per row; then they are a per-vertex cap plus
  // frozen level pairs, both folded into tail_cap/head_cap and pair_allowed.
  bool matrix_reducible() const {
    auto ok = [](const std::vector<std::vector<int>>& m) {
      for (const auto& row : m)
        if (std::count_if(row.begin(), row.end(), [](int x) { return x > 0; }) > 1) return false;
      return true;
    };
    return ok(out_mat_) && ok(in_mat_) && ok(und_mat_);
  }
  int tail_cap(Vertex v) const {
    int cap = tail_cap_[static_cast<std::size_t>(v)];
    if (has_matrix_) {
      const auto& m = directed_ ? out_mat_ : und_mat_;
      if (!m.empty()) cap = std::min(cap, row_max(m, bd_code_[static_cast<std::size_t>(v)]));
    }
    return cap;
  }
  int head_cap(Vertex v) const {
    if (!directed_) return tail_cap(v);
    int cap = head_cap_[static_cast<std::size_t>(v)];
    if (has_matrix_ && !in_mat_.empty()) cap = std::min(cap, row_max(in_mat_, bd_code_[static_cast<std::size_t>(v)]));
    return cap;
  }
  // Codes that, together, determine pair_allowed.
  int block_code(Vertex v) const { return has_blocks_ ? block_code_[static_cast<std::size_t>(v)] : 0; }
  int bd_code(Vertex v) const { return has_matrix_ ? bd_code_[static_cast<std::size_t>(v)] : 0; }

 private:
  static int row_max(const std::vector<std::vector<int>>& m, int row) {
    const auto& r = m[static_cast<std::size_t>(row)];
    return r.empty() ? kNoCap : std::max(0, *std::max_element(r.begin(), r.end()));
  }

  int level_count(std::span<const Vertex> nb, int level) const {
    int c = 0;
    for (Vertex u : nb) c += bd_code_[static_cast<std::size_t>(u)] == level;
    return c;
  }

  static int to_cap(double x) {
    if (!(x >= 0)) throw DataError("degree bounds must be nonnegative");
    return x >= static_cast<double>(kNoCap) ? kNoCap : static_cast<int>(x);
  }

  std::vector<std::vector<int>> to_int_matrix(const Matrix& m, std::size_t levels, const std::string& what) const {
    if (m.size() != levels)
      throw DataError(what + " is " + std::to_string(m.size()) + "x" + std::to_string(m.size()) + " but the attribute has " +
                      std::to_string(levels) + " levels");
    std::vector<std::vector<int>> out;
    for (const auto& r : m) {
      std::vector<int> row;
      for (double x : r) row.push_back(to_cap(x));
      out.push_back(std::move(row));
    }
    return out;
  }

  void bind_blocks(const BlocksSpec& b, const Network& net) {
    if (!net.attributes().find(b.attr)) throw DataError("blocks: missing vertex attribute '" + b.attr + "'");
    const LevelView lv = net.attributes().levels(b.attr);
    const std::size_t L = lv.levels.size();
    block_code_ = lv.codes;
    forbidden_.assign(L, std::vector<char>(L, 0));
    if (b.diag) {
      for (std::size_t l = 0; l < L; ++l) forbidden_[l][l] = 1;
    } else {
      if (b.forbidden.size() != L)
        throw DataError("blocks levels2 matrix is " + std::to_string(b.forbidden.size()) + "x" +
                        std::to_string(b.forbidden.size()) + " but '" + b.attr + "' has " + std::to_string(L) + " levels");
      for (std::size_t x = 0; x < L; ++x)
        for (std::size_t y = 0; y < L; ++y) forbidden_[x][y] = b.forbidden[x][y] != 0;
      if (!directed_)
        for (std::size_t x = 0; x < L; ++x)
          for (std::size_t y = 0; y < L; ++y)
            if (forbidden_[x][y] != forbidden_[y][x])
              throw DataError("blocks levels2 matrix must be symmetric for undirected networks");
    }
    has_blocks_ = true;
  }

  void bind_bd(const BdSpec& bd, const Network& net) {
    if (bd.maxout || bd.maxin) {
      const int out = bd.maxout ? to_cap(*bd.maxout) : kNoCap;
      const int in = bd.maxin ? to_cap(*bd.maxin) : kNoCap;
      if (directed_) {
        std::fill(tail_cap_.begin(), tail_cap_.end(), out);
        std::fill(head_cap_.begin(), head_cap_.end(), in);
      } else {
        std::fill(tail_cap_.begin(), tail_cap_.end(), std::min(out, in));
      }
      has_caps_ = true;
    }
    if (bd.maxout_matrix || bd.maxin_matrix) {
      if (!net.attributes().find(*bd.attr)) throw DataError("bd: missing vertex attribute '" + *bd.attr + "'");
      const LevelView lv = net.attributes().levels(*bd.attr);
      bd_code_ = lv.codes;
      nbd_ = lv.levels.size();
      if (directed_) {
        if (bd.maxout_matrix) out_mat_ = to_int_matrix(*bd.maxout_matrix, nbd_, "bd maxout matrix");
        if (bd.maxin_matrix) in_mat_ = to_int_matrix(*bd.maxin_matrix, nbd_, "bd maxin matrix");
      } else {
        if (bd.maxout_matrix) und_mat_ = to_int_matrix(*bd.maxout_matrix, nbd_, "bd maxout matrix");
        if (bd.maxin_matrix) {
          auto m = to_int_matrix(*bd.maxin_matrix, nbd_, "bd maxin matrix");
          if (und_mat_.empty()) und_mat_ = m;
          else
            for (std::size_t x = 0; x < nbd_; ++x)
              for (std::size_t y = 0; y < nbd_; ++y) und_mat_[x][y] = std::min(und_mat_[x][y], m[x][y]);
        }
      }
      has_matrix_ = true;
    }
  }

  bool directed_ = false;
  int n_ = 0;
  bool has_blocks_ = false;
  bool has_caps_ = false;
  bool has_matrix_ = false;
  std::vector<int> tail_cap_, head_cap_;
  std::vector<int> block_code_;
  std::vector<std::vector<char>> forbidden_;
  std::vector<int> bd_code_;
  std::size_t nbd_ = 0;
  std::vector<std::vector<int>> out_mat_, in_mat_, und_mat_;
};

}  // namespace ergm
