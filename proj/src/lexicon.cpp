#include "nl2cnl/lexicon.hpp"

#include <fstream>
#include <sstream>

namespace nl2cnl {

// CatKind mirrors the variant's alternative order.
static_assert(std::is_same_v<std::variant_alternative_t<0, Category>, ProperNameCat>);
static_assert(std::is_same_v<std::variant_alternative_t<8, Category>, WeekdayCat>);

CatKind kind_of(const Category& c) {
  return static_cast<CatKind>(c.index());
}

std::string_view to_string(CatKind k) {
  switch (k) {
    case CatKind::ProperName: return "propername";
    case CatKind::Noun: return "noun";
    case CatKind::Verb: return "verb";
    case CatKind::Adjective: return "adjective";
    case CatKind::Preposition: return "preposition";
    case CatKind::Determiner: return "determiner";
    case CatKind::Pronoun: return "pronoun";
    case CatKind::Modal: return "modal";
    case CatKind::Weekday: return "weekday";
  }
  return "?";
}

void Lexicon::add(LexEntry entry) {
  if (entry.surface.empty()) throw LexiconError(0, "empty surface form");
  if (!valid_lemma(entry.lemma))
    throw LexiconError(0, "bad lemma: " + entry.lemma);
  CatKind k = kind_of(entry.category);
  if (find(entry.surface, k))
    throw LexiconError(0, "duplicate entry: " + entry.surface + " as " +
                              std::string(to_string(k)));
  by_surface_.emplace(entry.surface, entries_.size());
  if (const auto* v = std::get_if<VerbCat>(&entry.category))
    by_third_singular_.emplace(v->third_singular, entries_.size());
  entries_.push_back(std::move(entry));
}

namespace {

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    size_t end = s.find(sep, start);
    if (end == std::string_view::npos) {
      out.emplace_back(s.substr(start));
      return out;
    }
    out.emplace_back(s.substr(start, end - start));
    start = end + 1;
  }
}

// "verb(trans,teaches)" -> head "verb", args {"trans","teaches"}.
std::pair<std::string, std::vector<std::string>> parse_cat_expr(
    const std::string& expr, int line) {
  size_t open = expr.find('(');
  if (open == std::string::npos) return {expr, {}};
  if (expr.back() != ')') throw LexiconError(line, "unbalanced category: " + expr);
  std::string head = expr.substr(0, open);
  std::string inner = expr.substr(open + 1, expr.size() - open - 2);
  return {head, split(inner, ',')};
}

Agreement parse_agreement(const std::string& s, int line) {
  if (s == "person") return Agreement::Person;
  if (s == "thing") return Agreement::Thing;
  throw LexiconError(line, "bad agreement: " + s);
}

Category parse_category(const std::string& expr, int line) {
  auto [head, args] = parse_cat_expr(expr, line);
  auto want = [&](size_t n) {
    if (args.size() != n)
      throw LexiconError(line, "category " + head + " takes " +
                                   std::to_string(n) + " argument(s)");
  };
  if (head == "propername") {
    want(1);
    auto cls = entity_class_from_string(args[0]);
    if (!cls) throw LexiconError(line, "bad entity class: " + args[0]);
    return ProperNameCat{*cls};
  }
  if (head == "noun") {
    want(1);
    return NounCat{parse_agreement(args[0], line)};
  }
  if (head == "verb") {
    want(2);
    Valency v;
    if (args[0] == "intrans") v = Valency::Intransitive;
    else if (args[0] == "trans") v = Valency::Transitive;
    else if (args[0] == "ditrans") v = Valency::Ditransitive;
    else throw LexiconError(line, "bad valency: " + args[0]);
    if (args[1].empty()) throw LexiconError(line, "missing third-singular form");
    return VerbCat{v, args[1]};
  }
  if (head == "adjective") {
    want(0);
    return AdjectiveCat{};
  }
  if (head == "preposition") {
    want(0);
    return PrepositionCat{};
  }
  if (head == "determiner") {
    want(1);
    if (args[0] == "indef") return DeterminerCat{DeterminerKind::Indefinite};
    if (args[0] == "univ") return DeterminerCat{DeterminerKind::Universal};
    if (args[0] == "neg") return DeterminerCat{DeterminerKind::Negative};
    throw LexiconError(line, "bad determiner kind: " + args[0]);
  }
  if (head == "pronoun") {
    want(1);
    return PronounCat{parse_agreement(args[0], line)};
  }
  if (head == "modal") {
    want(0);
    return ModalCat{};
  }
  if (head == "weekday") {
    want(0);
    return WeekdayCat{};
  }
  throw LexiconError(line, "unknown category: " + head);
}

}  // namespace

Lexicon Lexicon::from_tsv(std::string_view text) {
  Lexicon lex;
  int line_no = 0;
  for (const auto& line : split(text, '\n')) {
    ++line_no;
    std::string l = line;
    if (!l.empty() && l.back() == '\r') l.pop_back();
    if (l.empty() || l[0] == '#') continue;
    auto cols = split(l, '\t');
    if (cols.size() < 3 || cols.size() > 4)
      throw LexiconError(line_no, "expected 3 or 4 tab-separated columns");
    LexEntry e;
    e.surface = cols[0];
    e.lemma = cols[1];
    e.category = parse_category(cols[2], line_no);
    if (cols.size() == 4) {
      try {
        size_t used = 0;
        e.sense = std::stoi(cols[3], &used);
        if (used != cols[3].size() || e.sense < 0) throw std::invalid_argument("");
      } catch (const std::exception&) {
        throw LexiconError(line_no, "bad sense: " + cols[3]);
      }
    }
    try {
      lex.add(std::move(e));
    } catch (const LexiconError& err) {
      throw LexiconError(line_no, err.what());
    }
  }
  return lex;
}

Lexicon Lexicon::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw LexiconError(0, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_tsv(buf.str());
}

const LexEntry* Lexicon::find(std::string_view surface, CatKind kind) const {
  auto [lo, hi] = by_surface_.equal_range(surface);
  for (auto it = lo; it != hi; ++it) {
    const LexEntry& e = entries_[it->second];
    if (kind_of(e.category) == kind) return &e;
  }
  return nullptr;
}

std::vector<const LexEntry*> Lexicon::find_all(std::string_view surface) const {
  std::vector<const LexEntry*> out;
  auto [lo, hi] = by_surface_.equal_range(surface);
  for (auto it = lo; it != hi; ++it) out.push_back(&entries_[it->second]);
  return out;
}

bool Lexicon::known(std::string_view word) const {
  return by_surface_.count(word) > 0 || by_third_singular_.count(word) > 0;
}

const LexEntry* Lexicon::verb_by_third_singular(std::string_view form) const {
  auto it = by_third_singular_.find(form);
  return it == by_third_singular_.end() ? nullptr : &entries_[it->second];
}

const LexEntry* Lexicon::by_lemma(std::string_view lemma, CatKind kind) const {
  for (const auto& e : entries_) {
    if (e.lemma == lemma && kind_of(e.category) == kind) return &e;
  }
  return nullptr;
}

}  // namespace nl2cnl
