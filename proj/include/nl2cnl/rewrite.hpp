#pragma once

#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "nl2cnl/classifier.hpp"
#include "nl2cnl/drs.hpp"
#include "nl2cnl/error.hpp"

namespace nl2cnl {

// A metavariable slot (`?name` in rule files).
struct Meta {
  std::string name;
  auto operator<=>(const Meta&) const = default;
};

using RefArg = std::variant<std::string, Meta>;
using LemmaArg = std::variant<std::string, Meta>;
using SenseArg = std::variant<int, Meta>;

struct Pattern;

// Pattern mirrors Condition, but referent / lemma / sense slots may hold
// metavariables, and sub-boxes are condition lists matched as multiset
// subsets (their referent lists play no part in matching).
struct PatPred {
  RefArg ref;
  LemmaArg lemma;
  WordPos pos{WordPos::Noun};
  SenseArg sense;
  bool operator==(const PatPred&) const = default;
};
struct PatNamed {
  RefArg ref;
  LemmaArg name;
  EntityClass cls{EntityClass::Obj};
  bool operator==(const PatNamed&) const = default;
};
struct PatRel {
  RefArg first;
  RefArg second;
  LemmaArg label;
  bool operator==(const PatRel&) const = default;
};
struct PatEq {
  RefArg first;
  RefArg second;
  bool operator==(const PatEq&) const = default;
};
struct PatNot {
  std::vector<Pattern> body;
  bool operator==(const PatNot&) const = default;
};
struct PatPos {
  std::vector<Pattern> body;
  bool operator==(const PatPos&) const = default;
};
struct PatImp {
  std::vector<Pattern> antecedent;
  std::vector<Pattern> consequent;
  bool operator==(const PatImp&) const = default;
};
struct PatOr {
  std::vector<Pattern> left;
  std::vector<Pattern> right;
  bool operator==(const PatOr&) const = default;
};
struct PatWhq {
  RefArg ref;
  std::vector<Pattern> body;
  bool operator==(const PatWhq&) const = default;
};

struct Pattern {
  std::variant<PatPred, PatNamed, PatRel, PatEq, PatNot, PatPos, PatImp, PatOr,
               PatWhq>
      node;
  bool operator==(const Pattern&) const = default;
};

struct RewriteRule {
  std::string name;
  LabelSet gate;                   // empty = always applicable
  std::vector<std::string> fresh;  // metavariable names, no leading '?'
  std::vector<Pattern> match;      // non-empty
  std::vector<Pattern> replace;    // empty = deletion ("replace nothing")
  bool operator==(const RewriteRule&) const = default;
};

// Path from the root box: each step selects a condition and, for imp/or,
// which child box (0 = antecedent/left, 1 = consequent/right).
struct PathStep {
  int cond = 0;
  int child = 0;
  auto operator<=>(const PathStep&) const = default;
};
using BoxPath = std::vector<PathStep>;

struct Bindings {
  std::map<std::string, std::string> refs;
  std::map<std::string, std::string> lemmas;
  std::map<std::string, int> senses;
  auto operator<=>(const Bindings&) const = default;
};

struct Match {
  BoxPath path;
  Bindings bindings;
  bool operator==(const Match&) const = default;
};

struct RewriteStep {
  std::string rule;
  BoxPath path;
  Bindings bindings;
  std::vector<std::string> fresh_names;  // referents appended to the box
  std::vector<int> removed_indices;      // ascending, into the pre-step box
  std::vector<Condition> removed;        // conditions at those indices
  std::vector<Condition> inserted;       // placed at removed_indices.front()
  bool lossy = false;
  bool operator==(const RewriteStep&) const = default;
};

struct RewriteTrace {
  std::vector<RewriteStep> steps;
  int iterations = 0;
  bool operator==(const RewriteTrace&) const = default;
};

struct RewriteResult {
  Drs drs;
  RewriteTrace trace;
};

struct UnboundReplacementVar : Error {
  std::string rule, var;
  UnboundReplacementVar(std::string r, std::string v)
      : Error("rule " + r + ": replacement metavariable ?" + v +
              " is neither matched nor fresh"),
        rule(std::move(r)),
        var(std::move(v)) {}
};

struct FreshClash : Error {
  std::string rule, var;
  FreshClash(std::string r, std::string v)
      : Error("rule " + r + ": fresh metavariable ?" + v +
              " also appears in the match"),
        rule(std::move(r)),
        var(std::move(v)) {}
};

struct IterationBudgetExceeded : Error {
  int budget;
  explicit IterationBudgetExceeded(int b)
      : Error("rewrite did not reach a fixpoint within " + std::to_string(b) +
              " iterations"),
        budget(b) {}
};

struct ImproperResult : Error {
  std::string rule;
  explicit ImproperResult(std::string r)
      : Error("rule " + r + " produced a DRS with free referents"),
        rule(std::move(r)) {}
};

// Parses a rule file:
//   rule NAME:
//   when LABEL, LABEL     (optional)
//   fresh ?V, ?V          (optional)
//   match PAT, PAT
//   replace PAT, PAT | replace nothing
// Patterns follow the DRS condition syntax with `?name` allowed in referent,
// lemma, and number slots; sub-boxes are written drs([],[...]) with an empty
// referent list. `#` starts a comment. Raises SyntaxError,
// UnboundReplacementVar, FreshClash.
std::vector<RewriteRule> parse_rules(std::string_view text);
std::vector<RewriteRule> load_rules(const std::string& path);

// All matches of one rule, ordered by depth-first box order then by binding
// order, duplicates collapsed.
std::vector<Match> match_rule(const RewriteRule& rule, const Drs& d);

// First-match rewriting with restart until fixpoint. A rule is active when
// its gate is empty or a subset of `labels`. Each application removes the
// matched conditions, inserts the instantiated replacements at the match
// position, and appends any fresh referents (f1, f2, ... globally unique) to
// the matched box.
RewriteResult apply_rules(const std::vector<RewriteRule>& rules, const Drs& d,
                          const LabelSet& labels, int max_iterations = 1000);

}  // namespace nl2cnl
