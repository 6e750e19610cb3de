#pragma once

#include <cctype>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ergm/error.hpp"
#include "ergm/tsv.hpp"

// Model-formula and constraint mini-language.
//
//   formula := ["~"] term ("+" term)*
//   term    := NAME ["(" [args] ")"] | "offset" "(" term ["," mask] ")"
//   args    := arg ("," arg)*
//   arg     := [NAME "="] value
//   value   := NUMBER | STRING | BOOL | "diag" | "~" NAME | "[" value ("," value)* "]"
//
// Negative integers inside a level list mean exclusion (`levels=-5`). Nested
// lists give matrices (`pmat=[[1,2],[2,1]]`).

namespace ergm {

struct Value {
  enum class Kind { number, string, boolean, list, diag };
  Kind kind = Kind::number;
  double number = 0.0;
  std::string text;
  bool flag = false;
  std::vector<Value> items;

  static Value num(double x) { Value v; v.kind = Kind::number; v.number = x; return v; }
  static Value str(std::string s) { Value v; v.kind = Kind::string; v.text = std::move(s); return v; }
  static Value boolean(bool b) { Value v; v.kind = Kind::boolean; v.flag = b; return v; }
  static Value list(std::vector<Value> xs) { Value v; v.kind = Kind::list; v.items = std::move(xs); return v; }
  static Value diag() { Value v; v.kind = Kind::diag; return v; }

  bool is_integer() const { return kind == Kind::number && std::isfinite(number) && number == std::floor(number); }

  friend bool operator==(const Value& a, const Value& b) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
      case Kind::number: return a.number == b.number || (std::isnan(a.number) && std::isnan(b.number));
      case Kind::string: return a.text == b.text;
      case Kind::boolean: return a.flag == b.flag;
      case Kind::list: return a.items == b.items;
      case Kind::diag: return true;
    }
    return false;
  }
};

struct Arg {
  std::string name;  // empty for positional
  Value value;
  friend bool operator==(const Arg&, const Arg&) = default;
};

// One model term as written. `dim` is known at parse time except for terms
// whose dimension depends on attribute levels (resolved when binding).
struct TermSpec {
  std::string name;
  std::vector<Arg> args;
  bool offset = false;
  std::vector<bool> offset_mask;  // empty: the whole term when `offset`
  std::optional<int> dim;

  const Value* arg(std::string_view key, std::size_t position = static_cast<std::size_t>(-1)) const {
    std::size_t pos = 0;
    for (const auto& a : args) {
      if (a.name == key) return &a.value;
      if (a.name.empty()) {
        if (pos == position) return &a.value;
        ++pos;
      }
    }
    return nullptr;
  }

  std::optional<std::string> attr() const {
    const Value* v = arg("attr", 0);
    if (!v) return std::nullopt;
    return v->text;
  }

  friend bool operator==(const TermSpec& a, const TermSpec& b) {
    return a.name == b.name && a.args == b.args && a.offset == b.offset && a.offset_mask == b.offset_mask;
  }
};

struct ModelSpec {
  std::vector<TermSpec> terms;
  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

using Matrix = std::vector<std::vector<double>>;

struct BdSpec {
  std::optional<double> maxout;  // scalar caps
  std::optional<double> maxin;
  std::optional<std::string> attr;  // class-matrix form: caps[level of v][level of neighbour]
  std::optional<Matrix> maxout_matrix;
  std::optional<Matrix> maxin_matrix;
  friend bool operator==(const BdSpec&, const BdSpec&) = default;
};

struct BlocksSpec {
  std::string attr;
  bool diag = false;   // forbid same-level dyads
  Matrix forbidden;    // explicit level-pair matrix (nonzero = frozen) when !diag
  friend bool operator==(const BlocksSpec&, const BlocksSpec&) = default;
};

struct StratSpec {
  std::vector<std::string> attrs;  // cross-classified when several
  std::optional<Matrix> pmat;
  bool empirical = false;
  friend bool operator==(const StratSpec&, const StratSpec&) = default;
};

struct ConstraintSpec {
  std::optional<BdSpec> bd;
  std::optional<BlocksSpec> blocks;
  std::optional<StratSpec> strat;
  bool sparse = false;

  bool restricts_space() const { return bd.has_value() || blocks.has_value(); }
  bool empty() const { return !bd && !blocks && !strat && !sparse; }
  friend bool operator==(const ConstraintSpec&, const ConstraintSpec&) = default;
};

// ---- lexer / parser ------------------------------------------------------

namespace detail {

struct Token {
  enum class Kind { name, number, string, punct, end };
  Kind kind = Kind::end;
  std::string text;
  double number = 0.0;
  std::size_t pos = 0;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) { advance(); }

  const Token& peek() const { return tok_; }
  Token next() {
    Token t = tok_;
    advance();
    return t;
  }

  [[noreturn]] void fail(std::size_t pos, const std::string& msg) const {
    throw UsageError("formula error at position " + std::to_string(pos + 1) + ": " + msg + " in '" +
                     std::string(src_) + "'");
  }

 private:
  void advance() {
    while (i_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[i_]))) ++i_;
    tok_ = Token{};
    tok_.pos = i_;
    if (i_ >= src_.size()) return;
    const char c = src_[i_];
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i_;
      while (j < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[j])) || src_[j] == '_' || src_[j] == '.'))
        ++j;
      tok_.kind = Token::Kind::name;
      tok_.text = std::string(src_.substr(i_, j - i_));
      i_ = j;
      if (tok_.text == "Inf") {
        tok_.kind = Token::Kind::number;
        tok_.number = HUGE_VAL;
      }
      return;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && i_ + 1 < src_.size() && std::isdigit(static_cast<unsigned char>(src_[i_ + 1]))) ||
        ((c == '-' || c == '+') && i_ + 1 < src_.size() &&
         (std::isdigit(static_cast<unsigned char>(src_[i_ + 1])) || src_[i_ + 1] == '.' || src_[i_ + 1] == 'I'))) {
      std::size_t j = i_ + ((c == '-' || c == '+') ? 1 : 0);
      if (src_.substr(j, 3) == "Inf") {
        tok_.kind = Token::Kind::number;
        tok_.number = c == '-' ? -HUGE_VAL : HUGE_VAL;
        i_ = j + 3;
        return;
      }
      while (j < src_.size() && (std::isdigit(static_cast<unsigned char>(src_[j])) || src_[j] == '.' ||
                                 src_[j] == 'e' || src_[j] == 'E' ||
                                 ((src_[j] == '-' || src_[j] == '+') && (src_[j - 1] == 'e' || src_[j - 1] == 'E'))))
        ++j;
      double v = 0;
      if (!try_parse_double(src_.substr(i_, j - i_), v)) fail(i_, "bad number");
      tok_.kind = Token::Kind::number;
      tok_.number = v;
      tok_.text = std::string(src_.substr(i_, j - i_));
      i_ = j;
      return;
    }
    if (c == '"' || c == '\'') {
      std::string s;
      std::size_t j = i_ + 1;
      while (j < src_.size() && src_[j] != c) {
        if (src_[j] == '\\' && j + 1 < src_.size()) ++j;
        s += src_[j++];
      }
      if (j >= src_.size()) fail(i_, "unterminated string");
      tok_.kind = Token::Kind::string;
      tok_.text = std::move(s);
      i_ = j + 1;
      return;
    }
    if (std::string_view("()[],=+~.").find(c) != std::string_view::npos) {
      tok_.kind = Token::Kind::punct;
      tok_.text = std::string(1, c);
      ++i_;
      return;
    }
    fail(i_, std::string("unexpected character '") + c + "'");
  }

  std::string_view src_;
  std::size_t i_ = 0;
  Token tok_;
};

inline bool is_punct(const Token& t, char c) { return t.kind == Token::Kind::punct && t.text.size() == 1 && t.text[0] == c; }

inline void expect(Lexer& lx, char c) {
  const Token t = lx.next();
  if (!is_punct(t, c)) {
    if (c == ')' || c == ']') lx.fail(t.pos, std::string("unbalanced parentheses: expected '") + c + "'");
    lx.fail(t.pos, std::string("expected '") + c + "'");
  }
}

inline Value parse_value(Lexer& lx) {
  const Token t = lx.next();
  switch (t.kind) {
    case Token::Kind::number: return Value::num(t.number);
    case Token::Kind::string: return Value::str(t.text);
    case Token::Kind::name:
      if (t.text == "true" || t.text == "TRUE" || t.text == "T") return Value::boolean(true);
      if (t.text == "false" || t.text == "FALSE" || t.text == "F") return Value::boolean(false);
      if (t.text == "diag") return Value::diag();
      lx.fail(t.pos, "bare name '" + t.text + "' is not a value (quote strings)");
    case Token::Kind::punct:
      if (t.text == "~") {
        const Token n = lx.next();
        if (n.kind != Token::Kind::name) lx.fail(n.pos, "expected attribute name after '~'");
        return Value::str(n.text);
      }
      if (t.text == "[") {
        std::vector<Value> items;
        if (is_punct(lx.peek(), ']')) {
          lx.next();
          return Value::list({});
        }
        while (true) {
          items.push_back(parse_value(lx));
          if (is_punct(lx.peek(), ',')) {
            lx.next();
            continue;
          }
          expect(lx, ']');
          break;
        }
        return Value::list(std::move(items));
      }
      lx.fail(t.pos, "unexpected '" + t.text + "'");
    case Token::Kind::end: lx.fail(t.pos, "unexpected end of input");
  }
  lx.fail(t.pos, "bad value");
}

inline std::vector<Arg> parse_args(Lexer& lx) {
  std::vector<Arg> args;
  if (is_punct(lx.peek(), ')')) return args;
  while (true) {
    Arg a;
    // NAME "=" value or value
    const Token t = lx.peek();
    if (t.kind == Token::Kind::name) {
      Lexer save = lx;
      lx.next();
      if (is_punct(lx.peek(), '=')) {
        lx.next();
        a.name = t.text;
        a.value = parse_value(lx);
      } else {
        lx = save;
        a.value = parse_value(lx);
      }
    } else {
      a.value = parse_value(lx);
    }
    args.push_back(std::move(a));
    if (is_punct(lx.peek(), ',')) {
      lx.next();
      continue;
    }
    break;
  }
  return args;
}

struct RawAtom {
  std::string name;
  std::vector<Arg> args;
  std::size_t pos = 0;
  bool had_parens = false;
};

inline RawAtom parse_atom(Lexer& lx) {
  const Token t = lx.next();
  if (t.kind != Token::Kind::name) lx.fail(t.pos, "expected a term name");
  RawAtom a;
  a.name = t.text;
  a.pos = t.pos;
  if (is_punct(lx.peek(), '(')) {
    lx.next();
    a.had_parens = true;
    a.args = parse_args(lx);
    expect(lx, ')');
  }
  return a;
}

// Term catalog: argument names (in positional order) and their kinds.
struct ParamDef {
  const char* name;
  enum Kind { text, number, integer, boolean, levels } kind;
};

struct TermDef {
  const char* name;
  std::vector<ParamDef> params;
  int fixed_dim;  // -1: depends on attribute levels / args
  bool needs_attr;
};

inline const std::vector<TermDef>& term_catalog() {
  static const std::vector<TermDef> defs = {
      {"edges", {}, 1, false},
      {"triangle", {}, 1, false},
      {"nodematch", {{"attr", ParamDef::text}, {"diff", ParamDef::boolean}, {"levels", ParamDef::levels}}, -1, true},
      {"nodefactor", {{"attr", ParamDef::text}, {"levels", ParamDef::levels}}, -1, true},
      {"nodecov", {{"attr", ParamDef::text}}, 1, true},
      {"absdiff", {{"attr", ParamDef::text}}, 1, true},
      {"concurrent", {}, 1, false},
      {"degree", {{"d", ParamDef::levels}}, -1, false},
      {"gwdegree", {{"decay", ParamDef::number}, {"fixed", ParamDef::boolean}}, 1, false},
      {"gwesp", {{"decay", ParamDef::number}, {"fixed", ParamDef::boolean}}, 1, false},
  };
  return defs;
}

inline const TermDef* find_term(const std::string& name) {
  for (const auto& d : term_catalog())
    if (name == d.name) return &d;
  return nullptr;
}

inline bool value_matches(const Value& v, ParamDef::Kind k) {
  switch (k) {
    case ParamDef::text: return v.kind == Value::Kind::string;
    case ParamDef::number: return v.kind == Value::Kind::number && std::isfinite(v.number);
    case ParamDef::integer: return v.is_integer();
    case ParamDef::boolean: return v.kind == Value::Kind::boolean;
    case ParamDef::levels:
      if (v.is_integer()) return true;
      if (v.kind != Value::Kind::list) return false;
      for (const auto& x : v.items)
        if (!x.is_integer()) return false;
      return true;
  }
  return false;
}

// Canonicalizes argument names (`fix` -> `fixed`, `k` -> `d`) and validates.
inline TermSpec validate_term(Lexer& lx, RawAtom atom) {
  const TermDef* def = find_term(atom.name);
  if (!def) lx.fail(atom.pos, "unknown term '" + atom.name + "'");
  TermSpec t;
  t.name = atom.name;
  std::size_t positional = 0;
  std::vector<bool> used(def->params.size(), false);
  for (auto& a : atom.args) {
    if (a.name == "fix") a.name = "fixed";
    if (a.name == "k") a.name = "d";
    std::size_t slot = def->params.size();
    if (a.name.empty()) {
      slot = positional++;
      if (slot >= def->params.size()) lx.fail(atom.pos, "too many arguments to '" + atom.name + "'");
    } else {
      for (std::size_t i = 0; i < def->params.size(); ++i)
        if (a.name == def->params[i].name) slot = i;
      if (slot == def->params.size()) lx.fail(atom.pos, "unknown argument '" + a.name + "' to '" + atom.name + "'");
    }
    if (used[slot]) lx.fail(atom.pos, "duplicate argument '" + std::string(def->params[slot].name) + "'");
    used[slot] = true;
    if (!value_matches(a.value, def->params[slot].kind))
      lx.fail(atom.pos, "bad argument type for '" + std::string(def->params[slot].name) + "' in '" + atom.name + "'");
    t.args.push_back(std::move(a));
  }
  if (def->needs_attr && !used[0]) lx.fail(atom.pos, "term '" + atom.name + "' needs an attribute");
  if ((t.name == "gwesp" || t.name == "gwdegree")) {
    if (!t.arg("decay", 0)) lx.fail(atom.pos, "'" + t.name + "' needs a fixed decay value (curved estimation is unsupported)");
    const Value* fx = t.arg("fixed", 1);
    if (fx && !fx->flag) lx.fail(atom.pos, "'" + t.name + "' with free decay (fixed=false) is unsupported");
  }
  if (t.name == "degree") {
    const Value* d = t.arg("d", 0);
    if (!d) lx.fail(atom.pos, "'degree' needs a degree value");
    t.dim = d->kind == Value::Kind::list ? static_cast<int>(d->items.size()) : 1;
    if (t.dim == 0) lx.fail(atom.pos, "'degree' needs at least one degree value");
  } else if (t.name == "nodematch") {
    const Value* diff = t.arg("diff", 1);
    if (!diff || !diff->flag) t.dim = 1;
  } else if (def->fixed_dim > 0) {
    t.dim = def->fixed_dim;
  }
  return t;
}

inline std::vector<bool> parse_mask(Lexer& lx, const Value& v, std::size_t pos) {
  if (v.kind != Value::Kind::list && v.kind != Value::Kind::boolean) lx.fail(pos, "offset mask must be a list");
  const std::vector<Value> items = v.kind == Value::Kind::list ? v.items : std::vector<Value>{v};
  std::vector<bool> mask;
  bool all_bool = true;
  for (const auto& x : items) all_bool = all_bool && x.kind == Value::Kind::boolean;
  if (all_bool) {
    for (const auto& x : items) mask.push_back(x.flag);
    return mask;
  }
  // 1-based statistic indices within the term
  for (const auto& x : items) {
    if (!x.is_integer() || x.number < 1) lx.fail(pos, "offset mask must be booleans or positive indices");
    const auto k = static_cast<std::size_t>(x.number);
    if (mask.size() < k) mask.resize(k, false);
    mask[k - 1] = true;
  }
  return mask;
}

}  // namespace detail

namespace detail {

inline TermSpec parse_term(Lexer& lx) {
  const Token head = lx.peek();
  if (head.kind == Token::Kind::name && head.text == "offset") {
    lx.next();
    if (!is_punct(lx.peek(), '(')) lx.fail(lx.peek().pos, "expected '(' after offset");
    lx.next();
    const Token inner_tok = lx.peek();
    if (inner_tok.kind == Token::Kind::name && inner_tok.text == "offset") lx.fail(inner_tok.pos, "nested offset()");
    TermSpec t = validate_term(lx, parse_atom(lx));
    t.offset = true;
    if (is_punct(lx.peek(), ',')) {
      lx.next();
      const std::size_t mpos = lx.peek().pos;
      t.offset_mask = parse_mask(lx, parse_value(lx), mpos);
      if (t.dim && t.offset_mask.size() > static_cast<std::size_t>(*t.dim))
        lx.fail(mpos, "offset mask longer than the term's statistic count");
      if (t.dim) t.offset_mask.resize(static_cast<std::size_t>(*t.dim), false);
    }
    expect(lx, ')');
    return t;
  }
  return validate_term(lx, parse_atom(lx));
}

template <class Fn>
void parse_sum(Lexer& lx, Fn&& each) {
  while (true) {
    each();
    const Token nx = lx.peek();
    if (nx.kind == Token::Kind::end) break;
    if (!is_punct(nx, '+')) {
      if (is_punct(nx, ')') || is_punct(nx, ']')) lx.fail(nx.pos, "unbalanced parentheses");
      lx.fail(nx.pos, "expected '+'");
    }
    lx.next();
  }
}

inline std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

inline std::string print_value(const Value& v) {
  switch (v.kind) {
    case Value::Kind::number: return format_double(v.number);
    case Value::Kind::string: return quote(v.text);
    case Value::Kind::boolean: return v.flag ? "true" : "false";
    case Value::Kind::diag: return "diag";
    case Value::Kind::list: {
      std::string s = "[";
      for (std::size_t i = 0; i < v.items.size(); ++i) s += (i ? "," : "") + print_value(v.items[i]);
      return s + "]";
    }
  }
  return {};
}

inline std::string print_args(const std::vector<Arg>& args) {
  std::string s;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (i) s += ", ";
    if (!args[i].name.empty()) s += args[i].name + "=";
    s += print_value(args[i].value);
  }
  return s;
}

inline Matrix to_matrix(Lexer& lx, const Value& v, std::size_t pos, const char* what) {
  if (v.kind != Value::Kind::list || v.items.empty()) lx.fail(pos, std::string(what) + " must be a nested list matrix");
  Matrix m;
  for (const auto& row : v.items) {
    if (row.kind != Value::Kind::list) lx.fail(pos, std::string(what) + " must be a nested list matrix");
    std::vector<double> r;
    for (const auto& x : row.items) {
      if (x.kind == Value::Kind::boolean) r.push_back(x.flag ? 1.0 : 0.0);
      else if (x.kind == Value::Kind::number) r.push_back(x.number);
      else lx.fail(pos, std::string(what) + " entries must be numbers or booleans");
    }
    if (!m.empty() && r.size() != m.front().size()) lx.fail(pos, std::string(what) + " rows differ in length");
    m.push_back(std::move(r));
  }
  if (m.size() != m.front().size()) lx.fail(pos, std::string(what) + " must be square");
  return m;
}

inline Value from_matrix(const Matrix& m) {
  std::vector<Value> rows;
  for (const auto& r : m) {
    std::vector<Value> xs;
    for (double x : r) xs.push_back(Value::num(x));
    rows.push_back(Value::list(std::move(xs)));
  }
  return Value::list(std::move(rows));
}

}  // namespace detail

inline ModelSpec parse_model_formula(std::string_view text) {
  detail::Lexer lx(text);
  if (lx.peek().kind == detail::Token::Kind::end) lx.fail(0, "empty formula");
  if (detail::is_punct(lx.peek(), '~')) lx.next();
  ModelSpec spec;
  detail::parse_sum(lx, [&] { spec.terms.push_back(detail::parse_term(lx)); });
  return spec;
}

inline std::string print_term(const TermSpec& t) {
  std::string s = t.name;
  if (!t.args.empty()) s += "(" + detail::print_args(t.args) + ")";
  if (!t.offset) return s;
  if (t.offset_mask.empty()) return "offset(" + s + ")";
  std::vector<Value> m;
  for (bool b : t.offset_mask) m.push_back(Value::boolean(b));
  return "offset(" + s + ", " + detail::print_value(Value::list(std::move(m))) + ")";
}

inline std::string print_model(const ModelSpec& spec) {
  std::string s;
  for (std::size_t i = 0; i < spec.terms.size(); ++i) s += (i ? " + " : "") + print_term(spec.terms[i]);
  return s;
}

inline ConstraintSpec parse_constraint_formula(std::string_view text) {
  detail::Lexer lx(text);
  if (lx.peek().kind == detail::Token::Kind::end) lx.fail(0, "empty constraint formula");
  if (detail::is_punct(lx.peek(), '~')) {
    lx.next();
    const auto& t = lx.peek();
    if (t.kind == detail::Token::Kind::end) return {};
    if (detail::is_punct(t, '.')) {
      lx.next();
      if (lx.peek().kind != detail::Token::Kind::end) lx.fail(lx.peek().pos, "'~.' stands alone");
      return {};
    }
  }
  if (detail::is_punct(lx.peek(), '.')) {
    lx.next();
    if (lx.peek().kind != detail::Token::Kind::end) lx.fail(lx.peek().pos, "'.' stands alone");
    return {};
  }
  ConstraintSpec spec;
  detail::parse_sum(lx, [&] {
    detail::RawAtom a = detail::parse_atom(lx);
    auto take = [&](const std::vector<std::string>& names) {
      std::vector<const Value*> out(names.size(), nullptr);
      std::size_t positional = 0;
      for (const auto& arg : a.args) {
        std::size_t slot = names.size();
        if (arg.name.empty()) slot = positional++;
        else
          for (std::size_t i = 0; i < names.size(); ++i)
            if (arg.name == names[i]) slot = i;
        if (slot >= names.size())
          lx.fail(a.pos, arg.name.empty() ? "too many arguments to '" + a.name + "'"
                                          : "unknown argument '" + arg.name + "' to '" + a.name + "'");
        if (out[slot]) lx.fail(a.pos, "duplicate argument '" + names[slot] + "'");
        out[slot] = &arg.value;
      }
      return out;
    };
    auto attr_of = [&](const Value* v) -> std::string {
      if (!v || v->kind != Value::Kind::string) lx.fail(a.pos, "'" + a.name + "' needs attr=\"name\"");
      return v->text;
    };
    if (a.name == "sparse") {
      if (!a.args.empty()) lx.fail(a.pos, "'sparse' takes no arguments");
      spec.sparse = true;
    } else if (a.name == "bd") {
      if (spec.bd) lx.fail(a.pos, "duplicate 'bd'");
      auto v = take({"maxout", "maxin", "attr", "attribs"});
      BdSpec bd;
      if (v[2] && v[3]) lx.fail(a.pos, "give attr or attribs, not both");
      if (const Value* at = v[2] ? v[2] : v[3]) bd.attr = attr_of(at);
      for (int k = 0; k < 2; ++k) {
        const Value* cap = v[static_cast<std::size_t>(k)];
        if (!cap) continue;
        if (cap->kind == Value::Kind::list) {
          if (!bd.attr) lx.fail(a.pos, "matrix bd caps need attr=");
          (k == 0 ? bd.maxout_matrix : bd.maxin_matrix) = detail::to_matrix(lx, *cap, a.pos, "bd cap matrix");
        } else if (cap->is_integer() && cap->number >= 0) {
          (k == 0 ? bd.maxout : bd.maxin) = cap->number;
        } else {
          lx.fail(a.pos, "bd caps must be nonnegative integers or matrices");
        }
      }
      if (!bd.maxout && !bd.maxin && !bd.maxout_matrix && !bd.maxin_matrix) lx.fail(a.pos, "'bd' needs maxout or maxin");
      if (bd.attr && !bd.maxout_matrix && !bd.maxin_matrix) lx.fail(a.pos, "bd attr= needs a cap matrix");
      spec.bd = std::move(bd);
    } else if (a.name == "blocks") {
      if (spec.blocks) lx.fail(a.pos, "duplicate 'blocks'");
      auto v = take({"attr", "levels2"});
      BlocksSpec b;
      b.attr = attr_of(v[0]);
      if (!v[1]) lx.fail(a.pos, "'blocks' needs levels2=");
      if (v[1]->kind == Value::Kind::diag) b.diag = true;
      else b.forbidden = detail::to_matrix(lx, *v[1], a.pos, "levels2");
      spec.blocks = std::move(b);
    } else if (a.name == "strat") {
      if (spec.strat) lx.fail(a.pos, "duplicate 'strat'");
      auto v = take({"attr", "pmat", "empirical"});
      StratSpec s;
      if (!v[0]) lx.fail(a.pos, "'strat' needs attr=");
      if (v[0]->kind == Value::Kind::list) {
        for (const auto& x : v[0]->items) {
          if (x.kind != Value::Kind::string) lx.fail(a.pos, "strat attr list must hold strings");
          s.attrs.push_back(x.text);
        }
        if (s.attrs.empty()) lx.fail(a.pos, "strat attr list is empty");
      } else {
        s.attrs.push_back(attr_of(v[0]));
      }
      if (v[1]) {
        s.pmat = detail::to_matrix(lx, *v[1], a.pos, "pmat");
        for (const auto& r : *s.pmat)
          for (double x : r)
            if (!(x >= 0) || !std::isfinite(x)) lx.fail(a.pos, "pmat entries must be finite and nonnegative");
      }
      if (v[2]) {
        if (v[2]->kind != Value::Kind::boolean) lx.fail(a.pos, "empirical must be true or false");
        s.empirical = v[2]->flag;
      }
      if (s.pmat && s.empirical) lx.fail(a.pos, "give pmat or empirical=true, not both");
      spec.strat = std::move(s);
    } else {
      lx.fail(a.pos, "unknown constraint '" + a.name + "'");
    }
  });
  return spec;
}

inline std::string print_constraints(const ConstraintSpec& c) {
  std::vector<std::string> parts;
  if (c.bd) {
    std::vector<Arg> args;
    if (c.bd->maxout) args.push_back({"maxout", Value::num(*c.bd->maxout)});
    if (c.bd->maxout_matrix) args.push_back({"maxout", detail::from_matrix(*c.bd->maxout_matrix)});
    if (c.bd->maxin) args.push_back({"maxin", Value::num(*c.bd->maxin)});
    if (c.bd->maxin_matrix) args.push_back({"maxin", detail::from_matrix(*c.bd->maxin_matrix)});
    if (c.bd->attr) args.push_back({"attr", Value::str(*c.bd->attr)});
    parts.push_back("bd(" + detail::print_args(args) + ")");
  }
  if (c.blocks) {
    std::vector<Arg> args{{"attr", Value::str(c.blocks->attr)}};
    args.push_back({"levels2", c.blocks->diag ? Value::diag() : detail::from_matrix(c.blocks->forbidden)});
    parts.push_back("blocks(" + detail::print_args(args) + ")");
  }
  if (c.strat) {
    std::vector<Arg> args;
    if (c.strat->attrs.size() == 1) {
      args.push_back({"attr", Value::str(c.strat->attrs[0])});
    } else {
      std::vector<Value> xs;
      for (const auto& s : c.strat->attrs) xs.push_back(Value::str(s));
      args.push_back({"attr", Value::list(std::move(xs))});
    }
    if (c.strat->pmat) args.push_back({"pmat", detail::from_matrix(*c.strat->pmat)});
    if (c.strat->empirical) args.push_back({"empirical", Value::boolean(true)});
    parts.push_back("strat(" + detail::print_args(args) + ")");
  }
  if (c.sparse) parts.push_back("sparse");
  if (parts.empty()) return "~.";
  std::string s;
  for (std::size_t i = 0; i < parts.size(); ++i) s += (i ? " + " : "") + parts[i];
  return s;
}

}  // namespace ergm
