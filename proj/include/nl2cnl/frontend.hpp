#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nl2cnl/drs.hpp"
#include "nl2cnl/lexicon.hpp"

namespace nl2cnl {

// Sense number marking a not-yet-resolved pronoun predicate; resolve_anaphora
// replaces these with eq conditions.
inline constexpr int kPronounSense = 9999;

enum class NormalizeReason { Case, Contraction, PluralWeekday, Spelling };
std::string_view to_string(NormalizeReason r);

struct NormalizeStep {
  std::string original;
  std::string replacement;
  NormalizeReason reason{NormalizeReason::Case};
  bool operator==(const NormalizeStep&) const = default;
};
struct NormalizationTrace {
  std::vector<NormalizeStep> steps;
  bool operator==(const NormalizationTrace&) const = default;
};

struct AnalysisFlags {
  bool ambiguous_anaphora = false;
  int oov_count = 0;  // spelling repairs; filled in from the trace by callers
  bool multiple_attachments = false;
  // One list per pronoun in document order, most recent antecedent first.
  std::vector<std::vector<std::string>> candidate_antecedents;
  // Token index of each noun phrase that appeared without a determiner.
  std::vector<size_t> bare_noun_positions;
};

struct EmptyInput : Error {
  EmptyInput() : Error("empty input") {}
};
struct UnknownToken : Error {
  std::string token;
  explicit UnknownToken(std::string t)
      : Error("unknown token: " + t), token(std::move(t)) {}
};
struct ParseFailure : Error {
  size_t position;  // token index
  std::string expected;
  ParseFailure(size_t pos, std::string exp)
      : Error("token " + std::to_string(pos) + ": expected " + exp),
        position(pos),
        expected(std::move(exp)) {}
};
struct ValencyMismatch : Error {
  std::string verb;
  int expected;
  int got;
  ValencyMismatch(std::string v, int e, int g)
      : Error("verb " + v + " takes " + std::to_string(e) +
              " object(s), got " + std::to_string(g)),
        verb(std::move(v)),
        expected(e),
        got(g) {}
};
struct NoAntecedent : Error {
  std::string pronoun;
  explicit NoAntecedent(std::string p)
      : Error("no antecedent for pronoun: " + p), pronoun(std::move(p)) {}
};

// Whitespace tokenization plus per-token cleanup, applied in this order:
// contraction expansion, lowercasing (traced unless the word is a proper
// name), singularizing an out-of-vocabulary weekday plural, and spelling
// repair to the lexicographically smallest lexicon surface at edit distance
// one.  The sentence-final '.' or '?' is dropped without a trace entry.
// Tokens that stay unknown pass through for analyze() to report.
std::pair<std::vector<std::string>, NormalizationTrace> normalize(
    std::string_view raw, const Lexicon& lexicon);

// Parses one sentence of the controlled fragment:
//   S   := "every" N VP | "no" N VP | WHQ | NP VP
//   NP  := "a" N | ProperName | Pronoun
//   N   := Adjective* Noun
//   VP  := "can" VerbBase Args | "does" "not" VerbBase Args | Verb3sg Args
//   PP  := Preposition (NP | Weekday)
//   WHQ := ("who"|"what") VP | "when" ("can"|"does") NP VerbBase Args
// Verbs take NP objects per valency; a ditransitive recipient may appear as
// the second object or as a "to" phrase.  Events are reified: the verb
// becomes a predicate over an event referent with agent/patient/recipient
// edges, prepositional phrases add edges labeled by the preposition.
std::pair<Drs, AnalysisFlags> analyze(const std::vector<std::string>& tokens,
                                      const Lexicon& lexicon);

// Replaces each pronoun placeholder with eq(pronoun, antecedent).  Candidates
// are accessible referents introduced earlier whose agreement matches; the
// most recently introduced one wins, and two or more candidates set the
// ambiguity flag.  Events and other pronouns never antecede.
std::pair<Drs, AnalysisFlags> resolve_anaphora(const Drs& drs,
                                               const AnalysisFlags& flags,
                                               const Lexicon& lexicon);

}  // namespace nl2cnl
