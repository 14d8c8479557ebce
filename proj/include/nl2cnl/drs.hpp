#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "nl2cnl/error.hpp"

namespace nl2cnl {

// Heap box with value semantics: copying a condition deep-copies any nested
// boxes it owns.  Needed because conditions contain the structure they are
// part of.
template <class T>
class Box {
 public:
  Box();
  explicit Box(T value);
  Box(const Box& other);
  Box(Box&&) noexcept = default;
  Box& operator=(const Box& other);
  Box& operator=(Box&&) noexcept = default;

  T& operator*() { return *ptr_; }
  const T& operator*() const { return *ptr_; }
  T* operator->() { return ptr_.get(); }
  const T* operator->() const { return ptr_.get(); }

  friend bool operator==(const Box& a, const Box& b) { return *a == *b; }

 private:
  std::unique_ptr<T> ptr_;
};

struct Referent {
  std::string name;
  auto operator<=>(const Referent&) const = default;
};

// Referent names are [a-z][a-z0-9]*.
bool valid_referent_name(std::string_view name);
// Lemmas and relation labels are [a-z][a-z0-9_]*.
bool valid_lemma(std::string_view lemma);

enum class WordPos : char {
  Noun = 'n',
  Verb = 'v',
  Adjective = 'a',
  Adverb = 'r',
};
char to_char(WordPos pos);
std::optional<WordPos> word_pos_from_char(char c);

enum class EntityClass { Per, Org, Loc, Tim, Obj };
std::string_view to_string(EntityClass cls);
std::optional<EntityClass> entity_class_from_string(std::string_view s);

struct Drs;

// Atomic conditions.
struct Pred {      // pred(ref, lemma, pos, sense)
  Referent ref;
  std::string lemma;
  WordPos pos{WordPos::Noun};
  int sense = 0;
  bool operator==(const Pred&) const = default;
};
struct Named {     // named(ref, name, class)
  Referent ref;
  std::string name;
  EntityClass cls{EntityClass::Obj};
  bool operator==(const Named&) const = default;
};
struct Rel {       // rel(first, second, label)
  Referent first;
  Referent second;
  std::string label;
  bool operator==(const Rel&) const = default;
};
struct Eq {        // eq(first, second)
  Referent first;
  Referent second;
  bool operator==(const Eq&) const = default;
};

// Complex conditions.  Sub-boxes do not export their referents; the
// antecedent of an implication is additionally visible from its consequent.
struct Not {
  Box<Drs> inner;
  bool operator==(const Not&) const = default;
};
struct Pos {       // possibility modality ("can")
  Box<Drs> inner;
  bool operator==(const Pos&) const = default;
};
struct Imp {
  Box<Drs> antecedent;
  Box<Drs> consequent;
  bool operator==(const Imp&) const = default;
};
struct Or {
  Box<Drs> left;
  Box<Drs> right;
  bool operator==(const Or&) const = default;
};
struct Whq {       // ref is bound by the question operator and scopes over body
  Referent ref;
  Box<Drs> body;
  bool operator==(const Whq&) const = default;
};

using Condition = std::variant<Pred, Named, Rel, Eq, Not, Pos, Imp, Or, Whq>;

struct Drs {
  std::vector<Referent> referents;
  std::vector<Condition> conditions;
  bool operator==(const Drs&) const = default;
};

struct DuplicateReferent : Error {
  std::string name;
  explicit DuplicateReferent(std::string n)
      : Error("duplicate referent in one box: " + n), name(std::move(n)) {}
};
struct ReferentClash : Error {
  std::string name;
  explicit ReferentClash(std::string n)
      : Error("merge would capture referent: " + n), name(std::move(n)) {}
};
struct ImproperDrs : Error {
  std::string referent;
  explicit ImproperDrs(std::string r)
      : Error("condition uses referent with no accessible declaration: " + r),
        referent(std::move(r)) {}
};

// Validates the box invariant (no duplicate names within any single box,
// recursively) and returns the structure unchanged.
Drs make_drs(std::vector<Referent> referents, std::vector<Condition> conditions);

// Referents used by some condition but not declared in any box whose scope
// covers the use site.
std::set<Referent> free_referents(const Drs& drs);

// True iff there are no free referents.
bool is_proper(const Drs& drs);

// Structural equality up to a consistent renaming of bound referents.
// Condition lists compare as multisets; referent lists as sets.
bool alpha_equivalent(const Drs& a, const Drs& b);

// Concatenates referent and condition lists of two top-level boxes.  Throws
// ReferentClash if the boxes declare a common name.
Drs merge(const Drs& a, const Drs& b);

// Alpha-renames every declared referent (and its bound uses) through `rename`.
// Free referents are left alone.  The caller must keep renamed names valid
// and distinct within each box.
Drs rename_referents(const Drs& drs,
                     const std::function<std::string(const std::string&)>& rename);

// Depth-first visit of every box: the root first, then sub-boxes in condition
// order (antecedent before consequent, left before right).
void for_each_box(const Drs& drs, const std::function<void(const Drs&)>& visit);

// --- template definitions ---

template <class T>
Box<T>::Box() : ptr_(std::make_unique<T>()) {}
template <class T>
Box<T>::Box(T value) : ptr_(std::make_unique<T>(std::move(value))) {}
template <class T>
Box<T>::Box(const Box& other) : ptr_(std::make_unique<T>(*other.ptr_)) {}
template <class T>
Box<T>& Box<T>::operator=(const Box& other) {
  if (this != &other) ptr_ = std::make_unique<T>(*other.ptr_);
  return *this;
}

}  // namespace nl2cnl
