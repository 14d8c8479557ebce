#include "nl2cnl/rewrite.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <optional>
#include <sstream>

#include "nl2cnl/drs_text.hpp"

namespace nl2cnl {

namespace {

// ---------------------------------------------------------------- parsing

bool is_ident_start(char c) { return c >= 'a' && c <= 'z'; }
bool is_ident_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
}

// Tracks which slot kind each metavariable has been seen in; a rule may not
// reuse one name across referent/lemma/number slots.
struct RoleMap {
  std::map<std::string, char> roles;  // 'r' | 'l' | 's'
};

// Parses one pattern list written on a single line.
class PatternParser {
 public:
  PatternParser(std::string_view line, int line_no, size_t start, RoleMap& roles)
      : line_(line), line_no_(line_no), pos_(start), roles_(roles) {}

  std::vector<Pattern> pattern_list() {
    std::vector<Pattern> out;
    out.push_back(pattern());
    skip_ws();
    while (!at_end() && peek() == ',') {
      ++pos_;
      out.push_back(pattern());
      skip_ws();
    }
    expect_end();
    return out;
  }

 private:
  [[noreturn]] void fail(const std::string& expected) {
    throw SyntaxError(line_no_, static_cast<int>(pos_) + 1, expected);
  }
  bool at_end() const { return pos_ >= line_.size(); }
  char peek() const { return line_[pos_]; }
  void skip_ws() {
    while (!at_end() && (peek() == ' ' || peek() == '\t')) ++pos_;
  }
  void eat(char c) {
    skip_ws();
    if (at_end() || peek() != c) fail(std::string("'") + c + "'");
    ++pos_;
  }
  void expect_end() {
    skip_ws();
    if (!at_end()) fail("end of line");
  }

  std::string ident(bool allow_underscore) {
    skip_ws();
    if (at_end() || !is_ident_start(peek())) fail("identifier");
    size_t start = pos_;
    while (!at_end() && is_ident_char(peek())) {
      if (peek() == '_' && !allow_underscore) break;
      ++pos_;
    }
    return std::string(line_.substr(start, pos_ - start));
  }

  std::string metavar() {
    ++pos_;  // '?'
    if (at_end() || !is_ident_start(peek())) fail("metavariable name");
    return ident(true);
  }

  void note_role(const std::string& var, char role) {
    auto [it, inserted] = roles_.roles.try_emplace(var, role);
    if (!inserted && it->second != role)
      fail("metavariable ?" + var + " to keep a single slot kind");
  }

  RefArg ref_arg() {
    skip_ws();
    if (!at_end() && peek() == '?') {
      std::string v = metavar();
      note_role(v, 'r');
      return Meta{v};
    }
    std::string name = ident(false);
    if (!valid_referent_name(name)) fail("referent");
    return name;
  }

  LemmaArg lemma_arg() {
    skip_ws();
    if (!at_end() && peek() == '?') {
      std::string v = metavar();
      note_role(v, 'l');
      return Meta{v};
    }
    return ident(true);
  }

  SenseArg sense_arg() {
    skip_ws();
    if (!at_end() && peek() == '?') {
      std::string v = metavar();
      note_role(v, 's');
      return Meta{v};
    }
    if (at_end() || !std::isdigit(static_cast<unsigned char>(peek())))
      fail("number");
    int value = 0;
    while (!at_end() && std::isdigit(static_cast<unsigned char>(peek()))) {
      value = value * 10 + (peek() - '0');
      ++pos_;
    }
    return value;
  }

  // Sub-boxes in patterns are written drs([],[...]): the referent list must
  // be empty because sub-box matching is a condition-subset test.
  std::vector<Pattern> sub_box() {
    skip_ws();
    std::string kw = ident(false);
    if (kw != "drs") fail("'drs'");
    eat('(');
    eat('[');
    skip_ws();
    if (!at_end() && peek() != ']') fail("empty referent list in pattern");
    eat(']');
    eat(',');
    eat('[');
    std::vector<Pattern> body;
    skip_ws();
    if (!at_end() && peek() != ']') {
      body.push_back(pattern());
      skip_ws();
      while (!at_end() && peek() == ',') {
        ++pos_;
        body.push_back(pattern());
        skip_ws();
      }
    }
    eat(']');
    eat(')');
    return body;
  }

  Pattern pattern() {
    skip_ws();
    std::string head = ident(false);
    eat('(');
    Pattern out;
    if (head == "pred") {
      PatPred p;
      p.ref = ref_arg();
      eat(',');
      p.lemma = lemma_arg();
      eat(',');
      skip_ws();
      std::string pos_tok = ident(false);
      auto wp = word_pos_from_char(pos_tok.size() == 1 ? pos_tok[0] : '?');
      if (!wp) throw UnknownPos(pos_tok);
      p.pos = *wp;
      eat(',');
      p.sense = sense_arg();
      out.node = std::move(p);
    } else if (head == "named") {
      PatNamed p;
      p.ref = ref_arg();
      eat(',');
      p.name = lemma_arg();
      eat(',');
      skip_ws();
      std::string cls = ident(false);
      auto ec = entity_class_from_string(cls);
      if (!ec) throw UnknownEntityClass(cls);
      p.cls = *ec;
      out.node = std::move(p);
    } else if (head == "rel") {
      PatRel p;
      p.first = ref_arg();
      eat(',');
      p.second = ref_arg();
      eat(',');
      p.label = lemma_arg();
      out.node = std::move(p);
    } else if (head == "eq") {
      PatEq p;
      p.first = ref_arg();
      eat(',');
      p.second = ref_arg();
      out.node = std::move(p);
    } else if (head == "not") {
      out.node = PatNot{sub_box()};
    } else if (head == "pos") {
      out.node = PatPos{sub_box()};
    } else if (head == "imp") {
      PatImp p;
      p.antecedent = sub_box();
      eat(',');
      p.consequent = sub_box();
      out.node = std::move(p);
    } else if (head == "or") {
      PatOr p;
      p.left = sub_box();
      eat(',');
      p.right = sub_box();
      out.node = std::move(p);
    } else if (head == "whq") {
      PatWhq p;
      p.ref = ref_arg();
      eat(',');
      p.body = sub_box();
      out.node = std::move(p);
    } else {
      fail("condition pattern");
    }
    eat(')');
    return out;
  }

  std::string_view line_;
  int line_no_;
  size_t pos_;
  RoleMap& roles_;
};

void collect_vars(const Pattern& p, std::set<std::string>& out);

void collect_arg(const RefArg& a, std::set<std::string>& out) {
  if (auto* m = std::get_if<Meta>(&a)) out.insert(m->name);
}
void collect_arg(const SenseArg& a, std::set<std::string>& out) {
  if (auto* m = std::get_if<Meta>(&a)) out.insert(m->name);
}

void collect_list(const std::vector<Pattern>& ps, std::set<std::string>& out) {
  for (const auto& p : ps) collect_vars(p, out);
}

void collect_vars(const Pattern& p, std::set<std::string>& out) {
  std::visit(
      [&](const auto& node) {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, PatPred>) {
          collect_arg(node.ref, out);
          collect_arg(node.lemma, out);
          collect_arg(node.sense, out);
        } else if constexpr (std::is_same_v<T, PatNamed>) {
          collect_arg(node.ref, out);
          collect_arg(node.name, out);
        } else if constexpr (std::is_same_v<T, PatRel>) {
          collect_arg(node.first, out);
          collect_arg(node.second, out);
          collect_arg(node.label, out);
        } else if constexpr (std::is_same_v<T, PatEq>) {
          collect_arg(node.first, out);
          collect_arg(node.second, out);
        } else if constexpr (std::is_same_v<T, PatNot> ||
                             std::is_same_v<T, PatPos>) {
          collect_list(node.body, out);
        } else if constexpr (std::is_same_v<T, PatImp>) {
          collect_list(node.antecedent, out);
          collect_list(node.consequent, out);
        } else if constexpr (std::is_same_v<T, PatOr>) {
          collect_list(node.left, out);
          collect_list(node.right, out);
        } else if constexpr (std::is_same_v<T, PatWhq>) {
          collect_arg(node.ref, out);
          collect_list(node.body, out);
        }
      },
      p.node);
}

struct Line {
  int no;
  std::string text;  // comment-stripped, right-trimmed
};

std::vector<Line> significant_lines(std::string_view text) {
  std::vector<Line> out;
  int no = 0;
  size_t pos = 0;
  while (pos <= text.size()) {
    size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) {
      if (pos >= text.size()) break;
      end = text.size();
    }
    ++no;
    std::string line(text.substr(pos, end - pos));
    pos = end + 1;
    if (size_t hash = line.find('#'); hash != std::string::npos)
      line.erase(hash);
    while (!line.empty() && (line.back() == ' ' || line.back() == '\t' ||
                             line.back() == '\r'))
      line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    out.push_back({no, std::move(line)});
  }
  return out;
}

// Splits "keyword rest" and returns rest's start offset, or nullopt if the
// line does not begin with the keyword.
std::optional<size_t> after_keyword(const std::string& line,
                                    std::string_view kw) {
  size_t p = line.find_first_not_of(" \t");
  if (p == std::string::npos || line.compare(p, kw.size(), kw) != 0)
    return std::nullopt;
  size_t rest = p + kw.size();
  if (rest < line.size() && line[rest] != ' ' && line[rest] != '\t')
    return std::nullopt;
  return rest;
}

LabelSet parse_gate(const std::string& line, int no, size_t start) {
  LabelSet out;
  std::string rest = line.substr(start);
  size_t col = start;
  std::stringstream ss(rest);
  std::string item;
  while (std::getline(ss, item, ',')) {
    size_t a = item.find_first_not_of(" \t");
    if (a == std::string::npos)
      throw SyntaxError(no, static_cast<int>(col) + 1, "reduction label");
    size_t b = item.find_last_not_of(" \t");
    std::string tok = item.substr(a, b - a + 1);
    auto label = reduction_label_from_string(tok);
    if (!label)
      throw SyntaxError(no, static_cast<int>(col + a) + 1, "reduction label");
    out.insert(*label);
    col += item.size() + 1;
  }
  if (out.empty()) throw SyntaxError(no, static_cast<int>(start) + 1,
                                     "reduction label");
  return out;
}

std::vector<std::string> parse_fresh(const std::string& line, int no,
                                     size_t start) {
  std::vector<std::string> out;
  std::string rest = line.substr(start);
  size_t col = start;
  std::stringstream ss(rest);
  std::string item;
  while (std::getline(ss, item, ',')) {
    size_t a = item.find_first_not_of(" \t");
    size_t errcol = col + (a == std::string::npos ? 0 : a) + 1;
    if (a == std::string::npos || item[a] != '?')
      throw SyntaxError(no, static_cast<int>(errcol), "'?'");
    size_t b = item.find_last_not_of(" \t");
    std::string name = item.substr(a + 1, b - a);
    if (name.empty() || !is_ident_start(name[0]) ||
        !std::all_of(name.begin(), name.end(), is_ident_char))
      throw SyntaxError(no, static_cast<int>(errcol) + 1,
                        "metavariable name");
    if (std::find(out.begin(), out.end(), name) != out.end())
      throw SyntaxError(no, static_cast<int>(errcol),
                        "distinct fresh metavariables");
    out.push_back(name);
    col += item.size() + 1;
  }
  return out;
}

// ---------------------------------------------------------------- matching

bool bind_ref(Bindings& b, const RefArg& a, const std::string& v) {
  if (auto* s = std::get_if<std::string>(&a)) return *s == v;
  auto [it, inserted] = b.refs.try_emplace(std::get<Meta>(a).name, v);
  return inserted || it->second == v;
}
bool bind_lemma(Bindings& b, const LemmaArg& a, const std::string& v) {
  if (auto* s = std::get_if<std::string>(&a)) return *s == v;
  auto [it, inserted] = b.lemmas.try_emplace(std::get<Meta>(a).name, v);
  return inserted || it->second == v;
}
bool bind_sense(Bindings& b, const SenseArg& a, int v) {
  if (auto* s = std::get_if<int>(&a)) return *s == v;
  auto [it, inserted] = b.senses.try_emplace(std::get<Meta>(a).name, v);
  return inserted || it->second == v;
}

void match_one(const Pattern& p, const Condition& c, const Bindings& in,
               std::vector<Bindings>& out);

// All ways to injectively embed `pats` into `conds`, extending `in`.
void subset_match(const std::vector<Pattern>& pats,
                  const std::vector<Condition>& conds, size_t k,
                  std::vector<bool>& used, const Bindings& in,
                  std::vector<Bindings>& out) {
  if (k == pats.size()) {
    out.push_back(in);
    return;
  }
  for (size_t i = 0; i < conds.size(); ++i) {
    if (used[i]) continue;
    std::vector<Bindings> exts;
    match_one(pats[k], conds[i], in, exts);
    if (exts.empty()) continue;
    used[i] = true;
    for (const auto& e : exts) subset_match(pats, conds, k + 1, used, e, out);
    used[i] = false;
  }
}

std::vector<Bindings> subset_match(const std::vector<Pattern>& pats,
                                   const Drs& box, const Bindings& in) {
  std::vector<Bindings> out;
  std::vector<bool> used(box.conditions.size(), false);
  subset_match(pats, box.conditions, 0, used, in, out);
  return out;
}

void match_one(const Pattern& p, const Condition& c, const Bindings& in,
               std::vector<Bindings>& out) {
  std::visit(
      [&](const auto& pat) {
        using P = std::decay_t<decltype(pat)>;
        if constexpr (std::is_same_v<P, PatPred>) {
          if (const auto* cond = std::get_if<Pred>(&c)) {
            Bindings b = in;
            if (pat.pos == cond->pos && bind_ref(b, pat.ref, cond->ref.name) &&
                bind_lemma(b, pat.lemma, cond->lemma) &&
                bind_sense(b, pat.sense, cond->sense))
              out.push_back(std::move(b));
          }
        } else if constexpr (std::is_same_v<P, PatNamed>) {
          if (const auto* cond = std::get_if<Named>(&c)) {
            Bindings b = in;
            if (pat.cls == cond->cls && bind_ref(b, pat.ref, cond->ref.name) &&
                bind_lemma(b, pat.name, cond->name))
              out.push_back(std::move(b));
          }
        } else if constexpr (std::is_same_v<P, PatRel>) {
          if (const auto* cond = std::get_if<Rel>(&c)) {
            Bindings b = in;
            if (bind_ref(b, pat.first, cond->first.name) &&
                bind_ref(b, pat.second, cond->second.name) &&
                bind_lemma(b, pat.label, cond->label))
              out.push_back(std::move(b));
          }
        } else if constexpr (std::is_same_v<P, PatEq>) {
          if (const auto* cond = std::get_if<Eq>(&c)) {
            Bindings b = in;
            if (bind_ref(b, pat.first, cond->first.name) &&
                bind_ref(b, pat.second, cond->second.name))
              out.push_back(std::move(b));
          }
        } else if constexpr (std::is_same_v<P, PatNot>) {
          if (const auto* cond = std::get_if<Not>(&c)) {
            auto exts = subset_match(pat.body, *cond->inner, in);
            out.insert(out.end(), exts.begin(), exts.end());
          }
        } else if constexpr (std::is_same_v<P, PatPos>) {
          if (const auto* cond = std::get_if<Pos>(&c)) {
            auto exts = subset_match(pat.body, *cond->inner, in);
            out.insert(out.end(), exts.begin(), exts.end());
          }
        } else if constexpr (std::is_same_v<P, PatImp>) {
          if (const auto* cond = std::get_if<Imp>(&c)) {
            for (const auto& mid :
                 subset_match(pat.antecedent, *cond->antecedent, in)) {
              auto exts = subset_match(pat.consequent, *cond->consequent, mid);
              out.insert(out.end(), exts.begin(), exts.end());
            }
          }
        } else if constexpr (std::is_same_v<P, PatOr>) {
          if (const auto* cond = std::get_if<Or>(&c)) {
            for (const auto& mid : subset_match(pat.left, *cond->left, in)) {
              auto exts = subset_match(pat.right, *cond->right, mid);
              out.insert(out.end(), exts.begin(), exts.end());
            }
          }
        } else if constexpr (std::is_same_v<P, PatWhq>) {
          if (const auto* cond = std::get_if<Whq>(&c)) {
            Bindings b = in;
            if (!bind_ref(b, pat.ref, cond->ref.name)) return;
            auto exts = subset_match(pat.body, *cond->body, b);
            out.insert(out.end(), exts.begin(), exts.end());
          }
        }
      },
      p.node);
}

struct BoxMatch {
  Bindings bindings;
  std::vector<int> indices;  // one top-level condition per match pattern
};

// Enumerates assignments of the rule's match patterns to distinct conditions
// of one box, in ascending index order per pattern; results are then sorted
// by binding and deduplicated (first assignment per binding is kept; it has
// the lexicographically smallest index vector).
void enumerate_in_box(const std::vector<Pattern>& pats,
                      const std::vector<Condition>& conds, size_t k,
                      std::vector<bool>& used, const Bindings& in,
                      std::vector<int>& indices, std::vector<BoxMatch>& out) {
  if (k == pats.size()) {
    out.push_back({in, indices});
    return;
  }
  for (size_t i = 0; i < conds.size(); ++i) {
    if (used[i]) continue;
    std::vector<Bindings> exts;
    match_one(pats[k], conds[i], in, exts);
    if (exts.empty()) continue;
    used[i] = true;
    indices.push_back(static_cast<int>(i));
    for (const auto& e : exts)
      enumerate_in_box(pats, conds, k + 1, used, e, indices, out);
    indices.pop_back();
    used[i] = false;
  }
}

std::vector<BoxMatch> matches_in_box(const RewriteRule& rule, const Drs& box) {
  std::vector<BoxMatch> all;
  std::vector<bool> used(box.conditions.size(), false);
  std::vector<int> indices;
  enumerate_in_box(rule.match, box.conditions, 0, used, {}, indices, all);
  std::stable_sort(all.begin(), all.end(),
                   [](const BoxMatch& a, const BoxMatch& b) {
                     return a.bindings < b.bindings;
                   });
  all.erase(std::unique(all.begin(), all.end(),
                        [](const BoxMatch& a, const BoxMatch& b) {
                          return a.bindings == b.bindings;
                        }),
            all.end());
  return all;
}

// Depth-first box walk carrying the path from the root.
void walk_boxes(const Drs& d, BoxPath& path,
                const std::function<void(const Drs&, const BoxPath&)>& visit) {
  visit(d, path);
  for (int i = 0; i < static_cast<int>(d.conditions.size()); ++i) {
    std::visit(
        [&](const auto& cond) {
          using T = std::decay_t<decltype(cond)>;
          auto descend = [&](const Drs& child, int slot) {
            path.push_back({i, slot});
            walk_boxes(child, path, visit);
            path.pop_back();
          };
          if constexpr (std::is_same_v<T, Not> || std::is_same_v<T, Pos>) {
            descend(*cond.inner, 0);
          } else if constexpr (std::is_same_v<T, Imp>) {
            descend(*cond.antecedent, 0);
            descend(*cond.consequent, 1);
          } else if constexpr (std::is_same_v<T, Or>) {
            descend(*cond.left, 0);
            descend(*cond.right, 1);
          } else if constexpr (std::is_same_v<T, Whq>) {
            descend(*cond.body, 0);
          }
        },
        d.conditions[i]);
  }
}

Drs* box_at(Drs& d, const BoxPath& path) {
  Drs* cur = &d;
  for (const auto& step : path) {
    if (step.cond < 0 || step.cond >= static_cast<int>(cur->conditions.size()))
      return nullptr;
    Drs* next = nullptr;
    std::visit(
        [&](auto& cond) {
          using T = std::decay_t<decltype(cond)>;
          if constexpr (std::is_same_v<T, Not> || std::is_same_v<T, Pos>) {
            if (step.child == 0) next = &*cond.inner;
          } else if constexpr (std::is_same_v<T, Imp>) {
            next = step.child == 0 ? &*cond.antecedent : &*cond.consequent;
          } else if constexpr (std::is_same_v<T, Or>) {
            next = step.child == 0 ? &*cond.left : &*cond.right;
          } else if constexpr (std::is_same_v<T, Whq>) {
            if (step.child == 0) next = &*cond.body;
          }
        },
        cur->conditions[step.cond]);
    if (!next) return nullptr;
    cur = next;
  }
  return cur;
}

// ------------------------------------------------------------ instantiation

std::string inst_ref(const RefArg& a, const Bindings& b) {
  if (auto* s = std::get_if<std::string>(&a)) return *s;
  return b.refs.at(std::get<Meta>(a).name);
}
std::string inst_lemma(const LemmaArg& a, const Bindings& b) {
  if (auto* s = std::get_if<std::string>(&a)) return *s;
  return b.lemmas.at(std::get<Meta>(a).name);
}
int inst_sense(const SenseArg& a, const Bindings& b) {
  if (auto* s = std::get_if<int>(&a)) return *s;
  return b.senses.at(std::get<Meta>(a).name);
}

Condition inst_pattern(const Pattern& p, const Bindings& b);

Box<Drs> inst_box(const std::vector<Pattern>& body, const Bindings& b) {
  Drs d;
  for (const auto& p : body) d.conditions.push_back(inst_pattern(p, b));
  return Box<Drs>(std::move(d));
}

Condition inst_pattern(const Pattern& p, const Bindings& b) {
  return std::visit(
      [&](const auto& pat) -> Condition {
        using P = std::decay_t<decltype(pat)>;
        if constexpr (std::is_same_v<P, PatPred>) {
          return Pred{{inst_ref(pat.ref, b)}, inst_lemma(pat.lemma, b),
                      pat.pos, inst_sense(pat.sense, b)};
        } else if constexpr (std::is_same_v<P, PatNamed>) {
          return Named{{inst_ref(pat.ref, b)}, inst_lemma(pat.name, b),
                       pat.cls};
        } else if constexpr (std::is_same_v<P, PatRel>) {
          return Rel{{inst_ref(pat.first, b)}, {inst_ref(pat.second, b)},
                     inst_lemma(pat.label, b)};
        } else if constexpr (std::is_same_v<P, PatEq>) {
          return Eq{{inst_ref(pat.first, b)}, {inst_ref(pat.second, b)}};
        } else if constexpr (std::is_same_v<P, PatNot>) {
          return Not{inst_box(pat.body, b)};
        } else if constexpr (std::is_same_v<P, PatPos>) {
          return Pos{inst_box(pat.body, b)};
        } else if constexpr (std::is_same_v<P, PatImp>) {
          return Imp{inst_box(pat.antecedent, b), inst_box(pat.consequent, b)};
        } else if constexpr (std::is_same_v<P, PatOr>) {
          return Or{inst_box(pat.left, b), inst_box(pat.right, b)};
        } else {
          static_assert(std::is_same_v<P, PatWhq>);
          return Whq{{inst_ref(pat.ref, b)}, inst_box(pat.body, b)};
        }
      },
      p.node);
}

struct FoundMatch {
  BoxPath path;
  Bindings bindings;
  std::vector<int> indices;
};

std::optional<FoundMatch> first_match(const RewriteRule& rule, const Drs& d) {
  std::optional<FoundMatch> found;
  BoxPath path;
  walk_boxes(d, path, [&](const Drs& box, const BoxPath& p) {
    if (found) return;
    auto ms = matches_in_box(rule, box);
    if (!ms.empty()) found = FoundMatch{p, ms[0].bindings, ms[0].indices};
  });
  return found;
}

}  // namespace

std::vector<RewriteRule> parse_rules(std::string_view text) {
  std::vector<RewriteRule> out;
  auto lines = significant_lines(text);
  size_t i = 0;
  while (i < lines.size()) {
    const Line& header = lines[i];
    auto rest = after_keyword(header.text, "rule");
    if (!rest) throw SyntaxError(header.no, 1, "'rule'");
    size_t p = header.text.find_first_not_of(" \t", *rest);
    if (p == std::string::npos || !is_ident_start(header.text[p]))
      throw SyntaxError(header.no, static_cast<int>(*rest) + 1, "rule name");
    size_t name_start = p;
    while (p < header.text.size() && is_ident_char(header.text[p])) ++p;
    RewriteRule rule;
    rule.name = header.text.substr(name_start, p - name_start);
    if (p >= header.text.size() || header.text[p] != ':')
      throw SyntaxError(header.no, static_cast<int>(p) + 1, "':'");
    if (header.text.find_first_not_of(" \t", p + 1) != std::string::npos)
      throw SyntaxError(header.no, static_cast<int>(p) + 2, "end of line");
    ++i;

    RoleMap roles;
    if (i < lines.size()) {
      if (auto at = after_keyword(lines[i].text, "when")) {
        rule.gate = parse_gate(lines[i].text, lines[i].no, *at);
        ++i;
      }
    }
    if (i < lines.size()) {
      if (auto at = after_keyword(lines[i].text, "fresh")) {
        rule.fresh = parse_fresh(lines[i].text, lines[i].no, *at);
        ++i;
      }
    }
    if (i >= lines.size())
      throw SyntaxError(lines.back().no + 1, 1, "'match'");
    auto mat = after_keyword(lines[i].text, "match");
    if (!mat) throw SyntaxError(lines[i].no, 1, "'match'");
    {
      const std::string& l = lines[i].text;
      size_t body = l.find_first_not_of(" \t", *mat);
      if (body != std::string::npos && l.compare(body, 7, "nothing") == 0 &&
          l.find_first_not_of(" \t", body + 7) == std::string::npos)
        throw SyntaxError(lines[i].no, static_cast<int>(body) + 1,
                          "at least one pattern");
      PatternParser pp(l, lines[i].no, *mat, roles);
      rule.match = pp.pattern_list();
    }
    ++i;
    if (i >= lines.size())
      throw SyntaxError(lines.back().no + 1, 1, "'replace'");
    auto rep = after_keyword(lines[i].text, "replace");
    if (!rep) throw SyntaxError(lines[i].no, 1, "'replace'");
    {
      const std::string& l = lines[i].text;
      size_t body = l.find_first_not_of(" \t", *rep);
      bool nothing = body != std::string::npos &&
                     l.compare(body, 7, "nothing") == 0 &&
                     l.find_first_not_of(" \t", body + 7) == std::string::npos;
      if (!nothing) {
        PatternParser pp(l, lines[i].no, *rep, roles);
        rule.replace = pp.pattern_list();
      }
    }
    int replace_line = lines[i].no;
    ++i;

    std::set<std::string> match_vars, replace_vars;
    collect_list(rule.match, match_vars);
    collect_list(rule.replace, replace_vars);
    for (const auto& f : rule.fresh) {
      if (match_vars.count(f)) throw FreshClash(rule.name, f);
      if (auto it = roles.roles.find(f);
          it != roles.roles.end() && it->second != 'r')
        throw SyntaxError(replace_line, 1,
                          "fresh metavariable ?" + f +
                              " to be used as a referent");
    }
    for (const auto& v : replace_vars) {
      if (!match_vars.count(v) &&
          std::find(rule.fresh.begin(), rule.fresh.end(), v) ==
              rule.fresh.end())
        throw UnboundReplacementVar(rule.name, v);
    }
    out.push_back(std::move(rule));
  }
  return out;
}

std::vector<RewriteRule> load_rules(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open rule file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_rules(ss.str());
}

std::vector<Match> match_rule(const RewriteRule& rule, const Drs& d) {
  std::vector<Match> out;
  BoxPath path;
  walk_boxes(d, path, [&](const Drs& box, const BoxPath& p) {
    for (auto& m : matches_in_box(rule, box))
      out.push_back({p, std::move(m.bindings)});
  });
  return out;
}

RewriteResult apply_rules(const std::vector<RewriteRule>& rules, const Drs& d,
                          const LabelSet& labels, int max_iterations) {
  RewriteResult res{d, {}};
  int count = 0;
  for (;;) {
    const RewriteRule* hit = nullptr;
    std::optional<FoundMatch> fm;
    for (const auto& rule : rules) {
      if (!rule.gate.empty() &&
          !std::includes(labels.begin(), labels.end(), rule.gate.begin(),
                         rule.gate.end()))
        continue;
      fm = first_match(rule, res.drs);
      if (fm) {
        hit = &rule;
        break;
      }
    }
    if (!hit) break;
    if (count == max_iterations) throw IterationBudgetExceeded(max_iterations);

    Drs* box = box_at(res.drs, fm->path);
    std::vector<int> idx = fm->indices;
    std::sort(idx.begin(), idx.end());

    RewriteStep step;
    step.rule = hit->name;
    step.path = fm->path;
    step.bindings = fm->bindings;
    step.removed_indices = idx;
    step.lossy = hit->replace.empty();
    for (int ci : idx) step.removed.push_back(box->conditions[ci]);

    std::set<std::string> taken;
    for_each_box(res.drs, [&](const Drs& b) {
      for (const auto& r : b.referents) taken.insert(r.name);
    });
    Bindings env = fm->bindings;
    int counter = 1;
    for (const auto& var : hit->fresh) {
      std::string name;
      do {
        name = "f" + std::to_string(counter++);
      } while (taken.count(name));
      taken.insert(name);
      env.refs[var] = name;
      step.fresh_names.push_back(name);
    }
    for (const auto& pat : hit->replace)
      step.inserted.push_back(inst_pattern(pat, env));

    for (auto it = idx.rbegin(); it != idx.rend(); ++it)
      box->conditions.erase(box->conditions.begin() + *it);
    box->conditions.insert(box->conditions.begin() + idx.front(),
                           step.inserted.begin(), step.inserted.end());
    for (const auto& name : step.fresh_names) box->referents.push_back({name});

    if (!is_proper(res.drs)) throw ImproperResult(hit->name);
    res.trace.steps.push_back(std::move(step));
    ++count;
  }
  res.trace.iterations = count;
  return res;
}

}  // namespace nl2cnl
