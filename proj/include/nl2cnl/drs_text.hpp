#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nl2cnl/drs.hpp"

namespace nl2cnl {

// Text format, canonical form has no whitespace:
//
//   DRS  := "drs(" REFLIST "," CONDLIST ")"
//   COND := pred(REF,LEMMA,POS,NAT) | named(REF,LEMMA,CLASS) | rel(REF,REF,LEMMA)
//         | eq(REF,REF) | not(DRS) | pos(DRS) | imp(DRS,DRS) | or(DRS,DRS)
//         | whq(REF,DRS)
//
// REF = [a-z][a-z0-9]*, LEMMA = [a-z][a-z0-9_]*, NAT = [0-9]+,
// POS in {n,v,a,r}, CLASS in {per,org,loc,tim,obj}.  The parser tolerates
// whitespace between tokens.

struct SyntaxError : Error {
  int line;
  int column;
  std::string expected;
  SyntaxError(int l, int c, std::string exp)
      : Error("line " + std::to_string(l) + " col " + std::to_string(c) +
              ": expected " + exp),
        line(l),
        column(c),
        expected(std::move(exp)) {}
};
struct UnknownPos : Error {
  std::string token;
  explicit UnknownPos(std::string t)
      : Error("unknown part-of-speech tag: " + t), token(std::move(t)) {}
};
struct UnknownEntityClass : Error {
  std::string token;
  explicit UnknownEntityClass(std::string t)
      : Error("unknown entity class: " + t), token(std::move(t)) {}
};
struct DuplicateId : Error {
  std::string id;
  explicit DuplicateId(std::string i)
      : Error("duplicate record id: " + i), id(std::move(i)) {}
};

Drs parse_drs(std::string_view text);
std::string serialize_drs(const Drs& drs);

// Indented multi-line rendering for humans; parse_drs reads it back.
std::string pretty_drs(const Drs& drs);

// A document is a sequence of records separated by blank lines; each record
// is a "# id" header line followed by one DRS.  Ids must be unique.
struct DrsDocument {
  std::vector<std::pair<std::string, Drs>> records;
  bool operator==(const DrsDocument&) const = default;
};

DrsDocument parse_document(std::string_view text);
std::string serialize_document(const DrsDocument& doc);

}  // namespace nl2cnl
