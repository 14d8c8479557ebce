#pragma once

#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "nl2cnl/drs.hpp"
#include "nl2cnl/error.hpp"
#include "nl2cnl/logic.hpp"

// Finite-domain constraint problems compiled from question structures, plus
// a small complete solver.

namespace nl2cnl::csp {

struct Variable {
  std::string name;
  std::vector<std::string> domain;  // in fact-base order (sorted constants)
  bool operator==(const Variable&) const = default;
};

struct UnaryConstraint {
  std::string var;
  std::string relation;  // where the allowed set came from
  std::set<std::string> allowed;
  bool operator==(const UnaryConstraint&) const = default;
};

struct BinaryConstraint {
  std::string first;
  std::string second;
  std::string relation;
  std::set<std::pair<std::string, std::string>> allowed;
  bool operator==(const BinaryConstraint&) const = default;
};

struct CspInstance {
  std::vector<Variable> variables;  // declaration order drives the search
  std::vector<UnaryConstraint> unary;
  std::vector<BinaryConstraint> binary;
  bool operator==(const CspInstance&) const = default;
};

using Assignment = std::map<std::string, std::string>;

struct UntypedVariable : Error {
  std::string var;
  explicit UntypedVariable(std::string v)
      : Error("no typing predicate for variable " + v), var(std::move(v)) {}
};
struct EmptyDomain : Error {
  std::string var;
  std::string predicate;
  EmptyDomain(std::string v, std::string p)
      : Error("typing predicate " + p + " of variable " + v +
              " has an empty extension"),
        var(std::move(v)),
        predicate(std::move(p)) {}
};

// Compiles a question into a finite-domain problem over the fact base.
//
// Variables are the wh-referent and every referent hanging off an event by a
// role or preposition edge (proper names are constants, events vanish).  The
// first noun predicate on a variable types it: its extension in `facts` is
// the domain.  Remaining unary predicates become unary constraints.
//
// Event edges are re-anchored through the event's agent: an edge (e, y, L)
// with agent a turns into the pair (a, y) over the relation named after the
// verb — `teach` for the patient edge, `teach_to` for the recipient,
// `teach_on` for a preposition L = "on", with a `can_` prefix when the event
// sits under a possibility box.  Pairs with a constant end are sliced into
// unary constraints; pairs with two variable ends become binary constraints.
CspInstance compile_csp(const Drs& q, const fol::FiniteModel& facts);

// All solutions, by chronological backtracking with forward checking.
// Variables are tried in declaration order, values in domain order, so the
// output order is deterministic.
std::vector<Assignment> solve_csp(const CspInstance& c);

}  // namespace nl2cnl::csp
