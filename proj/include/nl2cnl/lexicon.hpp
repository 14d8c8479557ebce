#pragma once

#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "nl2cnl/drs.hpp"

namespace nl2cnl {

enum class Agreement { Person, Thing };
enum class Valency { Intransitive, Transitive, Ditransitive };
enum class DeterminerKind { Indefinite, Universal, Negative };

struct ProperNameCat {
  EntityClass cls{EntityClass::Per};
  bool operator==(const ProperNameCat&) const = default;
};
struct NounCat {
  Agreement agreement{Agreement::Thing};
  bool operator==(const NounCat&) const = default;
};
struct VerbCat {
  Valency valency{Valency::Intransitive};
  std::string third_singular;
  bool operator==(const VerbCat&) const = default;
};
struct AdjectiveCat {
  bool operator==(const AdjectiveCat&) const = default;
};
struct PrepositionCat {
  bool operator==(const PrepositionCat&) const = default;
};
struct DeterminerCat {
  DeterminerKind kind{DeterminerKind::Indefinite};
  bool operator==(const DeterminerCat&) const = default;
};
struct PronounCat {
  Agreement agreement{Agreement::Person};
  bool operator==(const PronounCat&) const = default;
};
struct ModalCat {
  bool operator==(const ModalCat&) const = default;
};
struct WeekdayCat {
  bool operator==(const WeekdayCat&) const = default;
};

using Category =
    std::variant<ProperNameCat, NounCat, VerbCat, AdjectiveCat, PrepositionCat,
                 DeterminerCat, PronounCat, ModalCat, WeekdayCat>;

enum class CatKind {
  ProperName,
  Noun,
  Verb,
  Adjective,
  Preposition,
  Determiner,
  Pronoun,
  Modal,
  Weekday,
};
CatKind kind_of(const Category& c);
std::string_view to_string(CatKind k);

struct LexEntry {
  std::string surface;  // lowercase form looked up during parsing
  std::string lemma;
  int sense = 0;
  Category category;
  bool operator==(const LexEntry&) const = default;
};

struct LexiconError : Error {
  int line;  // 0 when not tied to a file location
  LexiconError(int l, const std::string& msg)
      : Error(l > 0 ? "lexicon line " + std::to_string(l) + ": " + msg : msg),
        line(l) {}
};

// Word list backing both parsing directions.  At most one entry may exist per
// (surface, category kind) pair; one surface may span several categories.
class Lexicon {
 public:
  void add(LexEntry entry);

  // Tab-separated, one entry per line: surface, lemma, category, [sense].
  // Category expressions: propername(per|org|loc|tim|obj), noun(person|thing),
  // verb(intrans|trans|ditrans,<third-singular>), adjective, preposition,
  // determiner(indef|univ|neg), pronoun(person|thing), modal, weekday.
  // '#' starts a comment line.
  static Lexicon from_tsv(std::string_view text);
  static Lexicon load_file(const std::string& path);

  const LexEntry* find(std::string_view surface, CatKind kind) const;
  std::vector<const LexEntry*> find_all(std::string_view surface) const;
  // True for any listed surface and for verb third-singular forms.
  bool known(std::string_view word) const;
  // Verbs are listed under their base form; finite sentences use the
  // third-singular form, so parsing needs the reverse lookup.
  const LexEntry* verb_by_third_singular(std::string_view form) const;
  // Lemma-keyed lookups used when turning structures back into words.
  const LexEntry* by_lemma(std::string_view lemma, CatKind kind) const;

  const std::vector<LexEntry>& entries() const { return entries_; }

 private:
  std::vector<LexEntry> entries_;
  std::multimap<std::string, size_t, std::less<>> by_surface_;
  std::map<std::string, size_t, std::less<>> by_third_singular_;
};

}  // namespace nl2cnl
