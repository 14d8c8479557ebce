#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "nl2cnl/drs_text.hpp"
#include "support/generators.hpp"

using namespace nl2cnl;

TEST_CASE("canonical serialization has no whitespace and round-trips") {
  const std::string s =
      "drs([x1],[named(x1,harris,per),pos(drs([e1,x2,x3],[pred(e1,teach,v,0),"
      "rel(e1,x1,agent),rel(e1,x2,patient),pred(x2,linguistics,n,0),"
      "rel(e1,x3,on),pred(x3,tuesday,n,0)]))])";
  Drs d = parse_drs(s);
  CHECK(serialize_drs(d) == s);
}

TEST_CASE("parser tolerates whitespace between tokens") {
  Drs a = parse_drs("drs( [ x1 ] , [ pred( x1 , dog , n , 0 ) ] )");
  Drs b = parse_drs("drs([x1],[pred(x1,dog,n,0)])");
  CHECK(a == b);
  Drs c = parse_drs("drs([x1],\n  [pred(x1,dog,n,0),\n   eq(x1,x1)])");
  CHECK(serialize_drs(c) == "drs([x1],[pred(x1,dog,n,0),eq(x1,x1)])");
}

TEST_CASE("pretty form parses back to the same structure") {
  std::mt19937 rng(7);
  testgen::DrsGen gen(rng);
  for (int i = 0; i < 200; ++i) {
    Drs d = gen.gen();
    CHECK(parse_drs(pretty_drs(d)) == d);
  }
}

TEST_CASE("syntax errors carry position and expectation") {
  try {
    parse_drs("drs([x1],[pred(x1,dog,n,0)]");
    FAIL("missing paren accepted");
  } catch (const SyntaxError& e) {
    CHECK(e.line == 1);
    CHECK(e.column == 28);
    CHECK(e.expected == "')'");
  }
  try {
    parse_drs("drs([X1],[])");
    FAIL("uppercase referent accepted");
  } catch (const SyntaxError& e) {
    CHECK(e.line == 1);
    CHECK(e.column == 6);
  }
  CHECK_THROWS_AS(parse_drs("drs([x1],[pred(x1,dog,n,0)]) junk"), SyntaxError);
  CHECK_THROWS_AS(parse_drs("drs([x1],[parrot(x1)])"), SyntaxError);
  CHECK_THROWS_AS(parse_drs(""), SyntaxError);
  // Error position accounts for newlines.
  try {
    parse_drs("drs([x1],\n[pred(x1,dog,q,0)])");
    FAIL("bad pos tag accepted");
  } catch (const UnknownPos& e) {
    CHECK(e.token == "q");
  }
  CHECK_THROWS_AS(parse_drs("drs([x1],[named(x1,harris,xyz)])"),
                  UnknownEntityClass);
  CHECK_THROWS_AS(parse_drs("drs([x1,x1],[])"), DuplicateReferent);
}

TEST_CASE("sense numbers parse and serialize in decimal") {
  Drs d = parse_drs("drs([x1],[pred(x1,bank,n,2)])");
  CHECK(std::get<Pred>(d.conditions[0]).sense == 2);
  CHECK(serialize_drs(d) == "drs([x1],[pred(x1,bank,n,2)])");
  CHECK_THROWS_AS(parse_drs("drs([x1],[pred(x1,bank,n,-1)])"), SyntaxError);
}

TEST_CASE("generated structures round-trip byte-exactly") {
  std::mt19937 rng(99);
  testgen::DrsGen gen(rng);
  for (int i = 0; i < 1200; ++i) {
    Drs d = gen.gen();
    std::string s = serialize_drs(d);
    Drs back = parse_drs(s);
    CHECK(back == d);
    CHECK(serialize_drs(back) == s);
  }
}

TEST_CASE("documents: headers, blank-line separation, unique ids") {
  const std::string text =
      "# s1\n"
      "drs([x1],[pred(x1,dog,n,0)])\n"
      "\n"
      "# s2\n"
      "drs([x1],\n"
      "    [pred(x1,cat,n,0)])\n";
  DrsDocument doc = parse_document(text);
  REQUIRE(doc.records.size() == 2);
  CHECK(doc.records[0].first == "s1");
  CHECK(doc.records[1].first == "s2");
  CHECK(serialize_drs(doc.records[1].second) == "drs([x1],[pred(x1,cat,n,0)])");

  // Serialization is canonical; parsing it back gives the same document.
  std::string canon = serialize_document(doc);
  CHECK(parse_document(canon) == doc);
  CHECK(canon ==
        "# s1\ndrs([x1],[pred(x1,dog,n,0)])\n\n# s2\ndrs([x1],[pred(x1,cat,n,0)])\n");

  CHECK_THROWS_AS(parse_document("# s1\ndrs([],[])\n\n# s1\ndrs([],[])\n"),
                  DuplicateId);
  CHECK_THROWS_AS(parse_document("drs([],[])\n"), SyntaxError);
  CHECK_THROWS_AS(parse_document("# s1\n\n"), SyntaxError);
  CHECK(parse_document("").records.empty());
}
