#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ergm/error.hpp"
#include "ergm/rng.hpp"
#include "ergm/tsv.hpp"

namespace ergm {

using Vertex = std::int32_t;

// A vertex pair. Undirected dyads are stored canonically with tail < head.
struct Dyad {
  Vertex tail = 0;
  Vertex head = 0;
  friend bool operator==(const Dyad&, const Dyad&) = default;
  friend auto operator<=>(const Dyad&, const Dyad&) = default;
};

// One attribute column: categorical (sorted string levels + per-vertex codes)
// or numeric (per-vertex reals).
struct AttributeColumn {
  std::string name;
  bool categorical = false;
  std::vector<std::string> levels;
  std::vector<int> codes;
  std::vector<double> values;
};

// Categorical reading of a column: numeric columns are leveled by their
// distinct values in increasing order.
struct LevelView {
  std::vector<std::string> levels;
  std::vector<int> codes;
};

class VertexAttributes {
 public:
  VertexAttributes() = default;
  explicit VertexAttributes(std::size_t n) : n_(n) {}

  std::size_t size() const { return n_; }
  void resize(std::size_t n) {
    if (!columns_.empty() && n != n_) throw DataError("cannot resize populated attribute table");
    n_ = n;
  }
  const std::vector<AttributeColumn>& columns() const { return columns_; }

  void set_categorical(const std::string& name, const std::vector<std::string>& raw) {
    check_length(name, raw.size());
    AttributeColumn col;
    col.name = name;
    col.categorical = true;
    col.levels = raw;
    std::sort(col.levels.begin(), col.levels.end());
    col.levels.erase(std::unique(col.levels.begin(), col.levels.end()), col.levels.end());
    col.codes.reserve(raw.size());
    for (const auto& v : raw)
      col.codes.push_back(static_cast<int>(
          std::lower_bound(col.levels.begin(), col.levels.end(), v) - col.levels.begin()));
    put(std::move(col));
  }

  void set_numeric(const std::string& name, const std::vector<double>& values) {
    check_length(name, values.size());
    AttributeColumn col;
    col.name = name;
    col.values = values;
    put(std::move(col));
  }

  const AttributeColumn* find(const std::string& name) const {
    for (const auto& c : columns_)
      if (c.name == name) return &c;
    return nullptr;
  }

  const AttributeColumn& at(const std::string& name) const {
    if (const auto* c = find(name)) return *c;
    throw DataError("unknown vertex attribute '" + name + "'");
  }

  const std::vector<double>& numeric(const std::string& name) const {
    const auto& c = at(name);
    if (c.categorical) throw DataError("attribute '" + name + "' is categorical, numeric required");
    return c.values;
  }

  LevelView levels(const std::string& name) const {
    const auto& c = at(name);
    if (c.categorical) return {c.levels, c.codes};
    std::vector<double> uniq = c.values;
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    LevelView v;
    for (double x : uniq) v.levels.push_back(format_double(x));
    for (double x : c.values)
      v.codes.push_back(static_cast<int>(std::lower_bound(uniq.begin(), uniq.end(), x) - uniq.begin()));
    return v;
  }

  // Cross-classification of several attributes; level names joined by '.'.
  LevelView joint_levels(const std::vector<std::string>& names) const {
    if (names.empty()) throw DataError("empty attribute list");
    if (names.size() == 1) return levels(names.front());
    std::vector<LevelView> parts;
    for (const auto& nm : names) parts.push_back(levels(nm));
    std::vector<std::string> raw(n_);
    for (std::size_t v = 0; v < n_; ++v) {
      std::string s;
      for (std::size_t k = 0; k < parts.size(); ++k) {
        if (k) s += '.';
        s += parts[k].levels[parts[k].codes[v]];
      }
      raw[v] = std::move(s);
    }
    LevelView out;
    out.levels = raw;
    std::sort(out.levels.begin(), out.levels.end());
    out.levels.erase(std::unique(out.levels.begin(), out.levels.end()), out.levels.end());
    for (const auto& s : raw)
      out.codes.push_back(static_cast<int>(
          std::lower_bound(out.levels.begin(), out.levels.end(), s) - out.levels.begin()));
    return out;
  }

  friend bool operator==(const VertexAttributes& a, const VertexAttributes& b) {
    if (a.n_ != b.n_ || a.columns_.size() != b.columns_.size()) return false;
    for (std::size_t i = 0; i < a.columns_.size(); ++i) {
      const auto& x = a.columns_[i];
      const auto& y = b.columns_[i];
      if (x.name != y.name || x.categorical != y.categorical || x.levels != y.levels ||
          x.codes != y.codes || x.values != y.values)
        return false;
    }
    return true;
  }

 private:
  void check_length(const std::string& name, std::size_t len) const {
    if (len != n_)
      throw DataError("attribute '" + name + "' has " + std::to_string(len) + " entries, expected " +
                      std::to_string(n_));
  }
  void put(AttributeColumn col) {
    for (auto& c : columns_)
      if (c.name == col.name) {
        c = std::move(col);
        return;
      }
    columns_.push_back(std::move(col));
  }

  std::size_t n_ = 0;
  std::vector<AttributeColumn> columns_;
};

// Sparse binary network with O(1) toggling and O(1) uniform edge sampling.
//
// Current edges live in a dense array; a dyad->slot map allows swap-remove on
// deletion. Adjacency lists are unsorted; removal scans the (short) list.
class Network {
 public:
  Network() : Network(1) {}

  Network(int n, bool directed = false, int bipartite = 0)
      : n_(n), directed_(directed), bipartite_(bipartite), out_(n), in_(directed ? n : 0), attrs_(n) {
    if (n < 1) throw DataError("network needs at least one vertex");
    if (bipartite < 0 || bipartite >= n)
      throw DataError("invalid bipartite boundary " + std::to_string(bipartite) + " for " +
                      std::to_string(n) + " vertices");
    if (bipartite > 0 && directed) throw DataError("bipartite networks must be undirected");
  }

  int size() const { return n_; }
  bool directed() const { return directed_; }
  int bipartite() const { return bipartite_; }
  bool is_bipartite() const { return bipartite_ > 0; }

  // Number of dyads that may carry an edge.
  std::uint64_t dyad_count() const {
    const auto n = static_cast<std::uint64_t>(n_);
    if (bipartite_ > 0) return static_cast<std::uint64_t>(bipartite_) * (n - bipartite_);
    return directed_ ? n * (n - 1) : n * (n - 1) / 2;
  }

  std::size_t edge_count() const { return edges_.size(); }
  const std::vector<Dyad>& edges() const { return edges_; }

  bool valid_dyad(Vertex i, Vertex j) const {
    if (i < 0 || j < 0 || i >= n_ || j >= n_ || i == j) return false;
    if (bipartite_ > 0 && ((i < bipartite_) == (j < bipartite_))) return false;
    return true;
  }

  Dyad canonical(Vertex i, Vertex j) const {
    if (!directed_ && i > j) std::swap(i, j);
    return {i, j};
  }

  std::uint64_t key(Dyad d) const {
    return static_cast<std::uint64_t>(d.tail) * static_cast<std::uint64_t>(n_) +
           static_cast<std::uint64_t>(d.head);
  }
  Dyad from_key(std::uint64_t k) const {
    return {static_cast<Vertex>(k / static_cast<std::uint64_t>(n_)),
            static_cast<Vertex>(k % static_cast<std::uint64_t>(n_))};
  }

  bool has_edge(Vertex i, Vertex j) const {
    if (i == j) return false;
    return slot_.count(key(canonical(i, j))) != 0;
  }
  bool has_edge(Dyad d) const { return has_edge(d.tail, d.head); }

  // Flips the dyad; returns true when the edge is present afterwards.
  bool toggle(Vertex i, Vertex j) {
    check_dyad(i, j);
    const Dyad d = canonical(i, j);
    const auto k = key(d);
    auto it = slot_.find(k);
    if (it == slot_.end()) {
      slot_.emplace(k, static_cast<std::uint32_t>(edges_.size()));
      edges_.push_back(d);
      out_[d.tail].push_back(d.head);
      if (directed_)
        in_[d.head].push_back(d.tail);
      else
        out_[d.head].push_back(d.tail);
      return true;
    }
    const std::uint32_t pos = it->second;
    slot_.erase(it);
    const Dyad last = edges_.back();
    edges_.pop_back();
    if (pos < edges_.size()) {
      edges_[pos] = last;
      slot_[key(last)] = pos;
    }
    erase_one(out_[d.tail], d.head);
    if (directed_)
      erase_one(in_[d.head], d.tail);
    else
      erase_one(out_[d.head], d.tail);
    return false;
  }
  bool toggle(Dyad d) { return toggle(d.tail, d.head); }

  Dyad random_edge(Rng& rng) const {
    if (edges_.empty()) throw DataError("cannot sample an edge from an empty network");
    return edges_[rng.below(edges_.size())];
  }

  // Uniform over all valid dyads, canonicalized.
  Dyad random_dyad(Rng& rng) const {
    if (bipartite_ > 0) {
      const auto i = static_cast<Vertex>(rng.below(static_cast<std::uint64_t>(bipartite_)));
      const auto j = static_cast<Vertex>(bipartite_ + rng.below(static_cast<std::uint64_t>(n_ - bipartite_)));
      return {i, j};
    }
    const auto i = static_cast<Vertex>(rng.below(static_cast<std::uint64_t>(n_)));
    auto j = static_cast<Vertex>(rng.below(static_cast<std::uint64_t>(n_ - 1)));
    if (j >= i) ++j;
    return canonical(i, j);
  }

  // Undirected: neighbors. Directed: out-neighbors.
  std::span<const Vertex> out_neighbors(Vertex v) const { return out_[v]; }
  std::span<const Vertex> in_neighbors(Vertex v) const { return directed_ ? std::span<const Vertex>(in_[v]) : std::span<const Vertex>(out_[v]); }

  int out_degree(Vertex v) const { return static_cast<int>(out_[v].size()); }
  int in_degree(Vertex v) const { return directed_ ? static_cast<int>(in_[v].size()) : static_cast<int>(out_[v].size()); }
  // Undirected degree, or in + out for directed networks.
  int degree(Vertex v) const {
    return directed_ ? static_cast<int>(out_[v].size() + in_[v].size()) : static_cast<int>(out_[v].size());
  }

  VertexAttributes& attributes() { return attrs_; }
  const VertexAttributes& attributes() const { return attrs_; }

  void clear_edges() {
    edges_.clear();
    slot_.clear();
    for (auto& a : out_) a.clear();
    for (auto& a : in_) a.clear();
  }

  // Same vertex set, directedness, bipartition and edge set (order-insensitive).
  bool same_graph(const Network& o) const {
    if (n_ != o.n_ || directed_ != o.directed_ || bipartite_ != o.bipartite_) return false;
    if (edges_.size() != o.edges_.size()) return false;
    for (const auto& d : edges_)
      if (!o.has_edge(d)) return false;
    return true;
  }

  std::vector<Dyad> sorted_edges() const {
    std::vector<Dyad> e = edges_;
    std::sort(e.begin(), e.end());
    return e;
  }

 private:
  void check_dyad(Vertex i, Vertex j) const {
    if (i < 0 || j < 0 || i >= n_ || j >= n_)
      throw DataError("vertex id out of range in dyad (" + std::to_string(i + 1) + "," + std::to_string(j + 1) + ")");
    if (i == j) throw DataError("self-loop at vertex " + std::to_string(i + 1));
    if (bipartite_ > 0 && ((i < bipartite_) == (j < bipartite_)))
      throw DataError("same-mode dyad (" + std::to_string(i + 1) + "," + std::to_string(j + 1) + ") in bipartite network");
  }

  static void erase_one(std::vector<Vertex>& v, Vertex x) {
    auto it = std::find(v.begin(), v.end(), x);
    *it = v.back();
    v.pop_back();
  }

  int n_;
  bool directed_;
  int bipartite_;
  std::vector<Dyad> edges_;
  std::unordered_map<std::uint64_t, std::uint32_t> slot_;
  std::vector<std::vector<Vertex>> out_;
  std::vector<std::vector<Vertex>> in_;
  VertexAttributes attrs_;
};

// ---- file formats -------------------------------------------------------

// Text network format: `%n`, `%directed`, `%bipartite` header lines, then one
// 1-based `tail head` pair per line.
inline Network read_network(std::istream& in) {
  std::optional<int> n;
  bool directed = false;
  int bip = 0;
  std::optional<Network> net;
  std::string line;
  int lineno = 0;
  auto fail = [&](const std::string& msg) -> DataError {
    return DataError("network file line " + std::to_string(lineno) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string first;
    if (!(ls >> first)) continue;
    if (first[0] == '%') {
      if (net) throw fail("header after edges");
      long long value = 0;
      if (!(ls >> value)) throw fail("malformed header '" + line + "'");
      std::string extra;
      if (ls >> extra) throw fail("malformed header '" + line + "'");
      if (first == "%n") {
        if (value < 1) throw fail("vertex count must be positive");
        n = static_cast<int>(value);
      } else if (first == "%directed") {
        if (value != 0 && value != 1) throw fail("%directed must be 0 or 1");
        directed = value == 1;
      } else if (first == "%bipartite") {
        if (value < 0) throw fail("negative bipartite count");
        bip = static_cast<int>(value);
      } else {
        throw fail("unknown header '" + first + "'");
      }
      continue;
    }
    if (!net) {
      if (!n) throw fail("edge before %n header");
      net.emplace(*n, directed, bip);
    }
    long long t = 0;
    long long h = 0;
    std::istringstream es(line);
    std::string extra;
    if (!(es >> t >> h) || (es >> extra)) throw fail("malformed edge line '" + line + "'");
    if (t < 1 || h < 1 || t > *n || h > *n) throw fail("vertex id out of range");
    if (t == h) throw fail("self-loop at vertex " + std::to_string(t));
    const auto i = static_cast<Vertex>(t - 1);
    const auto j = static_cast<Vertex>(h - 1);
    if (!net->valid_dyad(i, j)) throw fail("same-mode edge in bipartite network");
    if (net->has_edge(i, j)) throw fail("duplicate edge " + std::to_string(t) + " " + std::to_string(h));
    net->toggle(i, j);
  }
  if (!net) {
    if (!n) throw DataError("network file lacks %n header");
    net.emplace(*n, directed, bip);
  }
  return std::move(*net);
}

inline void write_network(std::ostream& out, const Network& net) {
  out << "%n " << net.size() << '\n';
  out << "%directed " << (net.directed() ? 1 : 0) << '\n';
  out << "%bipartite " << net.bipartite() << '\n';
  for (const auto& d : net.sorted_edges()) out << d.tail + 1 << ' ' << d.head + 1 << '\n';
}

namespace detail {
inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

inline std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + '"';
}
}  // namespace detail

// CSV attribute table: a `vertex` column (1-based ids) followed by attribute
// columns. A column is numeric when every entry parses as a real.
inline VertexAttributes read_attributes(std::istream& in, std::size_t n) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("attribute file is empty");
  const auto header = detail::split_csv_line(line);
  if (header.empty() || header[0] != "vertex") throw DataError("attribute file must start with a 'vertex' column");
  const std::size_t ncol = header.size() - 1;
  std::vector<std::vector<std::string>> cells(ncol, std::vector<std::string>(n));
  std::vector<bool> seen(n, false);
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    auto f = detail::split_csv_line(line);
    if (f.size() != header.size()) throw DataError("attribute row has wrong field count: '" + line + "'");
    double idv = 0;
    if (!try_parse_double(f[0], idv) || idv != static_cast<long long>(idv) || idv < 1 ||
        idv > static_cast<double>(n))
      throw DataError("attribute vertex id out of range: '" + f[0] + "'");
    const auto v = static_cast<std::size_t>(idv) - 1;
    if (seen[v]) throw DataError("duplicate attribute row for vertex " + f[0]);
    seen[v] = true;
    ++rows;
    for (std::size_t c = 0; c < ncol; ++c) cells[c][v] = f[c + 1];
  }
  if (rows != n) throw DataError("attribute file covers " + std::to_string(rows) + " of " + std::to_string(n) + " vertices");
  VertexAttributes attrs(n);
  for (std::size_t c = 0; c < ncol; ++c) {
    std::vector<double> vals(n);
    bool numeric = true;
    for (std::size_t v = 0; v < n && numeric; ++v) numeric = try_parse_double(cells[c][v], vals[v]);
    if (numeric)
      attrs.set_numeric(header[c + 1], vals);
    else
      attrs.set_categorical(header[c + 1], cells[c]);
  }
  return attrs;
}

inline void write_attributes(std::ostream& out, const VertexAttributes& attrs) {
  out << "vertex";
  for (const auto& c : attrs.columns()) out << ',' << detail::csv_quote(c.name);
  out << '\n';
  for (std::size_t v = 0; v < attrs.size(); ++v) {
    out << v + 1;
    for (const auto& c : attrs.columns()) {
      out << ',';
      if (c.categorical)
        out << detail::csv_quote(c.levels[c.codes[v]]);
      else
        out << format_double(c.values[v]);
    }
    out << '\n';
  }
}

inline Network load_network(const std::string& path, const std::optional<std::string>& attrs_path = std::nullopt) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open network file '" + path + "'");
  Network net = read_network(f);
  if (attrs_path) {
    std::ifstream a(*attrs_path);
    if (!a) throw DataError("cannot open attribute file '" + *attrs_path + "'");
    net.attributes() = read_attributes(a, static_cast<std::size_t>(net.size()));
  }
  return net;
}

inline void save_network(const std::string& path, const Network& net,
                         const std::optional<std::string>& attrs_path = std::nullopt) {
  std::ofstream f(path);
  if (!f) throw DataError("cannot write network file '" + path + "'");
  write_network(f, net);
  if (attrs_path) {
    std::ofstream a(*attrs_path);
    if (!a) throw DataError("cannot write attribute file '" + *attrs_path + "'");
    write_attributes(a, net.attributes());
  }
}

}  // namespace ergm
