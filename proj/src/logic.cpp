#include "nl2cnl/logic.hpp"

#include <algorithm>
#include <cassert>
#include <functional>

#include "nl2cnl/drs_text.hpp"  // SyntaxError for the facts reader

namespace nl2cnl::fol {

namespace {

std::string atom_name(const Pred& p) {
  return p.lemma + "_" + std::string(1, to_char(p.pos));
}

std::string atom_name(const Named& n) {
  return "named_" + std::string(to_string(n.cls)) + "_" + n.name;
}

// DRS -> formula, without the properness gate (answer_query translates
// bodies whose question variable has already become a free constant).
struct Translator {
  std::vector<std::string> warnings;

  Formula closure(const Drs& d) {
    Formula f = conj(d);
    for (auto it = d.referents.rbegin(); it != d.referents.rend(); ++it)
      f = Formula{Exists{it->name, Box<Formula>(std::move(f))}};
    return f;
  }

  Formula conj(const Drs& d) {
    std::vector<Formula> parts;
    parts.reserve(d.conditions.size());
    for (const Condition& c : d.conditions) parts.push_back(cond(c));
    if (parts.size() == 1) return std::move(parts.front());
    return Formula{And{std::move(parts)}};
  }

  Formula cond(const Condition& c) {
    if (const auto* p = std::get_if<Pred>(&c))
      return Formula{Atom{atom_name(*p), {p->ref.name}}};
    if (const auto* n = std::get_if<Named>(&c))
      return Formula{Atom{atom_name(*n), {n->ref.name}}};
    if (const auto* r = std::get_if<Rel>(&c))
      return Formula{Atom{r->label, {r->first.name, r->second.name}}};
    if (const auto* e = std::get_if<Eq>(&c))
      return Formula{Atom{"eq", {e->first.name, e->second.name}}};
    if (const auto* n = std::get_if<nl2cnl::Not>(&c))
      return Formula{Not{Box<Formula>(closure(*n->inner))}};
    if (const auto* p = std::get_if<Pos>(&c)) {
      warnings.push_back("modality-erased");
      return closure(*p->inner);
    }
    if (const auto* i = std::get_if<Imp>(&c)) {
      Formula f = Formula{Implies{Box<Formula>(conj(*i->antecedent)),
                                  Box<Formula>(closure(*i->consequent))}};
      const auto& refs = i->antecedent->referents;
      for (auto it = refs.rbegin(); it != refs.rend(); ++it)
        f = Formula{Forall{it->name, Box<Formula>(std::move(f))}};
      return f;
    }
    if (const auto* o = std::get_if<nl2cnl::Or>(&c))
      return Formula{Or{Box<Formula>(closure(*o->left)),
                        Box<Formula>(closure(*o->right))}};
    throw QuestionNotTranslatable();
  }
};

struct Evaluator {
  const FiniteModel& m;
  std::map<std::string, std::string> env;

  std::string resolve(const std::string& a) const {
    auto it = env.find(a);
    return it != env.end() ? it->second : a;
  }

  bool eval(const Formula& f) {
    if (const auto* a = std::get_if<Atom>(&f.node)) {
      if (a->pred == "eq") {
        if (a->args.size() != 2) throw ArityMismatch("eq", 2, a->args.size());
        return resolve(a->args[0]) == resolve(a->args[1]);
      }
      auto it = m.preds.find(a->pred);
      if (it == m.preds.end()) return false;  // uninterpreted: empty
      if (static_cast<size_t>(it->second.arity) != a->args.size())
        throw ArityMismatch(a->pred, static_cast<size_t>(it->second.arity),
                            a->args.size());
      std::vector<std::string> tup;
      tup.reserve(a->args.size());
      for (const auto& arg : a->args) tup.push_back(resolve(arg));
      return it->second.tuples.count(tup) != 0;
    }
    if (const auto* a = std::get_if<And>(&f.node)) {
      for (const Formula& p : a->parts)
        if (!eval(p)) return false;
      return true;
    }
    if (const auto* o = std::get_if<Or>(&f.node))
      return eval(*o->left) || eval(*o->right);
    if (const auto* n = std::get_if<Not>(&f.node)) return !eval(*n->body);
    if (const auto* i = std::get_if<Implies>(&f.node))
      return !eval(*i->left) || eval(*i->right);
    const bool universal = std::holds_alternative<Forall>(f.node);
    const auto& var =
        universal ? std::get<Forall>(f.node).var : std::get<Exists>(f.node).var;
    const auto& body = universal ? *std::get<Forall>(f.node).body
                                 : *std::get<Exists>(f.node).body;
    std::optional<std::string> shadowed;
    if (auto it = env.find(var); it != env.end()) shadowed = it->second;
    bool result = universal;
    for (const std::string& d : m.domain) {
      env[var] = d;
      if (eval(body) != universal) {
        result = !universal;
        break;
      }
    }
    if (shadowed)
      env[var] = *shadowed;
    else
      env.erase(var);
    return result;
  }
};

// Predicate arities and unbound argument names of a formula.
void collect(const Formula& f, std::map<std::string, int>& bound,
             std::map<std::string, int>& arity,
             std::set<std::string>& constants) {
  if (const auto* a = std::get_if<Atom>(&f.node)) {
    if (a->pred == "eq") {
      if (a->args.size() != 2) throw ArityMismatch("eq", 2, a->args.size());
    } else {
      auto [it, fresh] = arity.emplace(a->pred, static_cast<int>(a->args.size()));
      if (!fresh && static_cast<size_t>(it->second) != a->args.size())
        throw ArityMismatch(a->pred, static_cast<size_t>(it->second),
                            a->args.size());
    }
    for (const auto& arg : a->args)
      if (!bound.count(arg) || bound[arg] == 0) constants.insert(arg);
    return;
  }
  if (const auto* a = std::get_if<And>(&f.node)) {
    for (const Formula& p : a->parts) collect(p, bound, arity, constants);
    return;
  }
  if (const auto* o = std::get_if<Or>(&f.node)) {
    collect(*o->left, bound, arity, constants);
    collect(*o->right, bound, arity, constants);
    return;
  }
  if (const auto* n = std::get_if<Not>(&f.node)) {
    collect(*n->body, bound, arity, constants);
    return;
  }
  if (const auto* i = std::get_if<Implies>(&f.node)) {
    collect(*i->left, bound, arity, constants);
    collect(*i->right, bound, arity, constants);
    return;
  }
  const bool universal = std::holds_alternative<Forall>(f.node);
  const auto& var =
      universal ? std::get<Forall>(f.node).var : std::get<Exists>(f.node).var;
  const auto& body = universal ? *std::get<Forall>(f.node).body
                               : *std::get<Exists>(f.node).body;
  ++bound[var];
  collect(body, bound, arity, constants);
  --bound[var];
}

std::vector<std::vector<std::string>> all_tuples(
    const std::vector<std::string>& domain, int arity) {
  std::vector<std::vector<std::string>> out{{}};
  for (int i = 0; i < arity; ++i) {
    std::vector<std::vector<std::string>> next;
    next.reserve(out.size() * domain.size());
    for (const auto& t : out)
      for (const auto& d : domain) {
        auto t2 = t;
        t2.push_back(d);
        next.push_back(std::move(t2));
      }
    out = std::move(next);
  }
  return out;
}

}  // namespace

Translation to_fol(const Drs& d) {
  if (!is_proper(d)) throw ImproperDrs();
  Translator t;
  Formula f = t.closure(d);
  return {std::move(f), std::move(t.warnings)};
}

bool eval_model(const Formula& f, const FiniteModel& m) {
  Evaluator ev{m, {}};
  return ev.eval(f);
}

std::optional<FiniteModel> satisfiable(const Formula& f, int max_domain,
                                       std::uint64_t budget) {
  std::map<std::string, int> bound;
  std::map<std::string, int> arity;
  std::set<std::string> constants;
  collect(f, bound, arity, constants);

  std::uint64_t count = 0;
  for (int k = 1; k <= max_domain; ++k) {
    if (constants.size() > static_cast<size_t>(k)) continue;
    std::vector<std::string> domain(constants.begin(), constants.end());
    for (int fresh = 1; domain.size() < static_cast<size_t>(k); ++fresh) {
      std::string name = "d" + std::to_string(fresh);
      if (!constants.count(name)) domain.push_back(std::move(name));
    }
    std::sort(domain.begin(), domain.end());

    struct Slot {
      std::string name;
      int arity;
      std::vector<std::vector<std::string>> tuples;
    };
    std::vector<Slot> slots;
    size_t bits = 0;
    for (const auto& [name, a] : arity) {
      slots.push_back({name, a, all_tuples(domain, a)});
      bits += slots.back().tuples.size();
    }

    // Candidate c encodes one interpretation per predicate: reading the
    // first tuple of the first predicate as the most significant bit makes
    // ascending c exactly tuple-set lexicographic order.
    for (std::uint64_t c = 0;; ++c) {
      if (bits < 64 && c >= (1ull << bits)) break;
      if (++count > budget) throw SearchSpaceTooLarge(budget);
      FiniteModel cand;
      cand.domain = domain;
      size_t pos = 0;
      for (const Slot& s : slots) {
        Interpretation interp;
        interp.arity = s.arity;
        for (size_t j = 0; j < s.tuples.size(); ++j, ++pos) {
          size_t shift = bits - 1 - pos;
          if (shift < 64 && (c >> shift) & 1) interp.tuples.insert(s.tuples[j]);
        }
        cand.preds.emplace(s.name, std::move(interp));
      }
      if (eval_model(f, cand)) {
        assert(eval_model(f, cand));  // contract: returned models verify
        return cand;
      }
    }
  }
  return std::nullopt;
}

namespace {

// Replace every use of the (free) referent `from` with `to`.
void substitute(Drs& d, const std::string& from, const std::string& to);

void substitute_cond(Condition& c, const std::string& from,
                     const std::string& to) {
  auto fix = [&](Referent& r) {
    if (r.name == from) r.name = to;
  };
  if (auto* p = std::get_if<Pred>(&c)) {
    fix(p->ref);
  } else if (auto* n = std::get_if<Named>(&c)) {
    fix(n->ref);
  } else if (auto* r = std::get_if<Rel>(&c)) {
    fix(r->first);
    fix(r->second);
  } else if (auto* e = std::get_if<Eq>(&c)) {
    fix(e->first);
    fix(e->second);
  } else if (auto* n = std::get_if<nl2cnl::Not>(&c)) {
    substitute(*n->inner, from, to);
  } else if (auto* p = std::get_if<Pos>(&c)) {
    substitute(*p->inner, from, to);
  } else if (auto* i = std::get_if<Imp>(&c)) {
    substitute(*i->antecedent, from, to);
    substitute(*i->consequent, from, to);
  } else if (auto* o = std::get_if<nl2cnl::Or>(&c)) {
    substitute(*o->left, from, to);
    substitute(*o->right, from, to);
  } else if (auto* w = std::get_if<Whq>(&c)) {
    if (w->ref.name != from) substitute(*w->body, from, to);
  }
}

void substitute(Drs& d, const std::string& from, const std::string& to) {
  for (const Referent& r : d.referents)
    if (r.name == from) return;  // redeclared: inner scope, leave alone
  for (Condition& c : d.conditions) substitute_cond(c, from, to);
}

}  // namespace

std::set<std::string> answer_query(const Drs& q, const FiniteModel& m) {
  if (!is_proper(q)) throw ImproperDrs();

  const Whq* wh = nullptr;
  Drs merged;
  merged.referents = q.referents;
  for (const Condition& c : q.conditions) {
    if (const auto* w = std::get_if<Whq>(&c)) {
      if (wh) throw NotAQuestion();
      wh = w;
    } else {
      merged.conditions.push_back(c);
    }
  }
  if (!wh) throw NotAQuestion();
  const std::string var = wh->ref.name;
  merged.referents.insert(merged.referents.end(), wh->body->referents.begin(),
                          wh->body->referents.end());
  merged.conditions.insert(merged.conditions.end(),
                           wh->body->conditions.begin(),
                           wh->body->conditions.end());

  // Rename declared referents away from the question variable and from all
  // domain constants so the substitution below cannot be captured.
  std::set<std::string> taken(m.domain.begin(), m.domain.end());
  taken.insert(var);
  std::map<std::string, std::string> fresh;
  int n = 1;
  Drs safe = rename_referents(merged, [&](const std::string& name) {
    auto it = fresh.find(name);
    if (it != fresh.end()) return it->second;
    std::string candidate;
    do {
      candidate = "q" + std::to_string(n++);
    } while (taken.count(candidate));
    fresh.emplace(name, candidate);
    return candidate;
  });

  std::set<std::string> answers;
  for (const std::string& d : m.domain) {
    Drs body = safe;
    substitute(body, var, d);
    Translator t;
    if (eval_model(t.closure(body), m)) answers.insert(d);
  }
  return answers;
}

FiniteModel parse_facts(std::string_view text) {
  FiniteModel m;
  std::set<std::string> constants;
  int lineno = 0;
  size_t start = 0;
  while (start <= text.size()) {
    size_t end = text.find('\n', start);
    std::string_view line = text.substr(
        start, end == std::string_view::npos ? std::string_view::npos
                                             : end - start);
    ++lineno;
    start = end == std::string_view::npos ? text.size() + 1 : end + 1;

    if (size_t hash = line.find('#'); hash != std::string_view::npos)
      line = line.substr(0, hash);

    size_t i = 0;
    auto skip_ws = [&] {
      while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    };
    auto ident = [&](const char* what) {
      skip_ws();
      size_t begin = i;
      if (i >= line.size() || line[i] < 'a' || line[i] > 'z')
        throw SyntaxError(lineno, static_cast<int>(i) + 1, what);
      while (i < line.size() &&
             ((line[i] >= 'a' && line[i] <= 'z') ||
              (line[i] >= '0' && line[i] <= '9') || line[i] == '_'))
        ++i;
      return std::string(line.substr(begin, i - begin));
    };
    auto expect = [&](char c) {
      skip_ws();
      if (i >= line.size() || line[i] != c)
        throw SyntaxError(lineno, static_cast<int>(i) + 1,
                          "'" + std::string(1, c) + "'");
      ++i;
    };

    skip_ws();
    if (i == line.size()) continue;

    std::string pred = ident("predicate name");
    expect('(');
    std::vector<std::string> args;
    args.push_back(ident("constant"));
    skip_ws();
    if (i < line.size() && line[i] == ',') {
      ++i;
      args.push_back(ident("constant"));
    }
    expect(')');
    expect('.');
    skip_ws();
    if (i != line.size())
      throw SyntaxError(lineno, static_cast<int>(i) + 1, "end of line");

    auto [it, fresh] = m.preds.emplace(
        pred, Interpretation{static_cast<int>(args.size()), {}});
    if (!fresh && static_cast<size_t>(it->second.arity) != args.size())
      throw ArityMismatch(pred, static_cast<size_t>(it->second.arity),
                          args.size());
    for (const auto& a : args) constants.insert(a);
    it->second.tuples.insert(std::move(args));
  }
  m.domain.assign(constants.begin(), constants.end());
  return m;
}

std::string format_formula(const Formula& f) {
  if (const auto* a = std::get_if<Atom>(&f.node)) {
    std::string out = a->pred + "(";
    for (size_t i = 0; i < a->args.size(); ++i) {
      if (i) out += ",";
      out += a->args[i];
    }
    return out + ")";
  }
  if (const auto* a = std::get_if<And>(&f.node)) {
    if (a->parts.empty()) return "true";
    std::string out = "(";
    for (size_t i = 0; i < a->parts.size(); ++i) {
      if (i) out += " & ";
      out += format_formula(a->parts[i]);
    }
    return out + ")";
  }
  if (const auto* o = std::get_if<Or>(&f.node))
    return "(" + format_formula(*o->left) + " | " + format_formula(*o->right) +
           ")";
  if (const auto* i = std::get_if<Implies>(&f.node))
    return "(" + format_formula(*i->left) + " -> " +
           format_formula(*i->right) + ")";
  if (const auto* n = std::get_if<Not>(&f.node)) {
    // quantified bodies need parentheses; everything else reads unambiguously
    bool wrap = std::holds_alternative<Exists>(n->body->node) ||
                std::holds_alternative<Forall>(n->body->node) ||
                std::holds_alternative<Not>(n->body->node);
    std::string inner = format_formula(*n->body);
    return wrap ? "!(" + inner + ")" : "!" + inner;
  }
  if (const auto* e = std::get_if<Exists>(&f.node))
    return "exists " + e->var + " " + format_formula(*e->body);
  const auto& fa = std::get<Forall>(f.node);
  return "forall " + fa.var + " " + format_formula(*fa.body);
}

}  // namespace nl2cnl::fol
