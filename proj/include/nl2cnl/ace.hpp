#pragma once

#include <string>
#include <utility>
#include <vector>

#include "nl2cnl/drs.hpp"
#include "nl2cnl/error.hpp"
#include "nl2cnl/lexicon.hpp"

namespace nl2cnl {

// Result of a conformance check.  A violation is (token position, constraint
// name); position 1 is the first token, 0 marks whole-sentence constraints.
// The constraint names are listed in docs/ace-constraints.txt.
struct AceSentence {
  std::string text;
  bool conformant = false;
  std::vector<std::pair<int, std::string>> violations;
  bool operator==(const AceSentence&) const = default;
};

struct NotVerbalizable : Error {
  std::string reason;
  explicit NotVerbalizable(std::string r)
      : Error("not verbalizable: " + r), reason(std::move(r)) {}
};

// Deterministic surface realization of a DRS from the verbalizable subset:
// one event, exactly one agent, operators limited to pos/imp/not, every
// argument referent described by a name or a noun.  Raises NotVerbalizable
// with one of: or-unsupported, question-unsupported, pronoun-unsupported,
// eq-unsupported, no-event, agent-count, unknown-lemma, unattached-referent,
// valency, structure-unsupported.
std::string verbalize(const Drs& d, const Lexicon& lex);

// Checks a raw sentence against the controlled target subset: known
// vocabulary, mandatory determiners, no pronouns, no questions, final
// period.  Violations are data; this never throws.
AceSentence check_ace(std::string_view text, const Lexicon& lex);

// True iff re-analyzing verbalize(d) yields a DRS alpha-equivalent to d.
// Propagates NotVerbalizable.
bool roundtrip_check(const Drs& d, const Lexicon& lex);

}  // namespace nl2cnl
