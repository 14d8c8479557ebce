#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "nl2cnl/drs.hpp"
#include "nl2cnl/error.hpp"

// First-order backend: translation of discourse structures to closed
// formulas, finite-model evaluation, bounded satisfiability search, and
// wh-question answering over fact bases.

namespace nl2cnl::fol {

struct Formula;

// An argument is a variable when an enclosing quantifier binds it, otherwise
// it names a domain constant.  The predicate "eq" is reserved: it is always
// evaluated as identity and never enumerated by the model search.
struct Atom {
  std::string pred;
  std::vector<std::string> args;
  bool operator==(const Atom&) const = default;
};
struct And {  // empty conjunction is truth
  std::vector<Formula> parts;
  bool operator==(const And&) const = default;
};
struct Or {
  Box<Formula> left, right;
  bool operator==(const Or&) const = default;
};
struct Not {
  Box<Formula> body;
  bool operator==(const Not&) const = default;
};
struct Implies {
  Box<Formula> left, right;
  bool operator==(const Implies&) const = default;
};
struct Exists {
  std::string var;
  Box<Formula> body;
  bool operator==(const Exists&) const = default;
};
struct Forall {
  std::string var;
  Box<Formula> body;
  bool operator==(const Forall&) const = default;
};

struct Formula {
  std::variant<Atom, And, Or, Not, Implies, Exists, Forall> node;
  bool operator==(const Formula&) const = default;
};

struct Interpretation {
  int arity = 0;
  std::set<std::vector<std::string>> tuples;
  bool operator==(const Interpretation&) const = default;
};

// Extensional structure over a finite domain.  Predicates absent from the
// map are interpreted as empty.
struct FiniteModel {
  std::vector<std::string> domain;  // sorted, duplicate-free
  std::map<std::string, Interpretation> preds;
  bool operator==(const FiniteModel&) const = default;
};

struct ImproperDrs : Error {
  ImproperDrs() : Error("structure has free referents") {}
};
struct QuestionNotTranslatable : Error {
  QuestionNotTranslatable()
      : Error("question operators have no direct formula translation") {}
};
struct NotAQuestion : Error {
  NotAQuestion() : Error("expected exactly one top-level question operator") {}
};
struct ArityMismatch : Error {
  std::string pred;
  size_t expected;
  size_t got;
  ArityMismatch(std::string p, size_t e, size_t g)
      : Error("predicate " + p + " used with " + std::to_string(g) +
              " argument(s), expected " + std::to_string(e)),
        pred(std::move(p)),
        expected(e),
        got(g) {}
};
struct SearchSpaceTooLarge : Error {
  std::uint64_t budget;
  explicit SearchSpaceTooLarge(std::uint64_t b)
      : Error("model enumeration exceeded " + std::to_string(b) +
              " interpretations"),
        budget(b) {}
};

struct Translation {
  Formula formula;
  std::vector<std::string> warnings;
};

// Standard embedding: a box becomes an existential closure of the
// conjunction of its conditions; implication quantifies the antecedent
// referents universally.  Naming: Pred -> lemma_pos, Named -> named_cls_name,
// Rel -> its label, Eq -> "eq".  Possibility is erased with a
// "modality-erased" warning.  Question operators are rejected.
Translation to_fol(const Drs& d);

// Tarskian evaluation by exhaustive expansion of quantifiers over the domain.
bool eval_model(const Formula& f, const FiniteModel& m);

// Smallest model of f with at most max_domain elements, or nullopt.  Domains
// are enumerated size-ascending; interpretations in tuple-set lexicographic
// order, so the result is deterministic.  Every returned model is
// re-checked with eval_model before being handed out.
std::optional<FiniteModel> satisfiable(const Formula& f, int max_domain,
                                       std::uint64_t budget = 1ull << 24);

// For q = drs([],[whq(x, K)]): the set of domain constants d such that
// K[x := d] holds in m.  Root-level material outside the question operator
// is folded into the body first.
std::set<std::string> answer_query(const Drs& q, const FiniteModel& m);

// Line-oriented ground atoms `pred(c1[,c2]).` with `#` comments; the domain
// is the set of constants mentioned.
FiniteModel parse_facts(std::string_view text);

std::string format_formula(const Formula& f);

}  // namespace nl2cnl::fol
