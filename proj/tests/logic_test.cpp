#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "nl2cnl/drs_text.hpp"
#include "nl2cnl/frontend.hpp"
#include "nl2cnl/logic.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace nl2cnl;
namespace F = nl2cnl::fol;

static Drs drs(const char* text) { return parse_drs(text); }

static F::Formula atom(std::string p, std::vector<std::string> args) {
  return F::Formula{F::Atom{std::move(p), std::move(args)}};
}

TEST_CASE("translation goldens") {
  auto [t0, w0] = F::to_fol(drs("drs([],[])"));
  CHECK(t0 == F::Formula{F::And{{}}});
  CHECK(F::format_formula(t0) == "true");
  CHECK(w0.empty());

  auto [t1, w1] = F::to_fol(
      drs("drs([x1,e1],[pred(x1,dog,n,0),pred(e1,bark,v,0),rel(e1,x1,agent)])"));
  CHECK(F::format_formula(t1) ==
        "exists x1 exists e1 (dog_n(x1) & bark_v(e1) & agent(e1,x1))");
  CHECK(w1.empty());

  auto [t2, w2] = F::to_fol(drs("drs([],[imp(drs([x1],[pred(x1,man,n,0)]),"
                                "drs([e1],[pred(e1,walk,v,0),rel(e1,x1,agent)]))])"));
  F::Formula expected{F::Forall{
      "x1",
      Box<F::Formula>(F::Formula{F::Implies{
          Box<F::Formula>(atom("man_n", {"x1"})),
          Box<F::Formula>(F::Formula{F::Exists{
              "e1", Box<F::Formula>(F::Formula{F::And{
                        {atom("walk_v", {"e1"}), atom("agent", {"e1", "x1"})}}})}})}})}};
  CHECK(t2 == expected);
  CHECK(F::format_formula(t2) ==
        "forall x1 (man_n(x1) -> exists e1 (walk_v(e1) & agent(e1,x1)))");
  CHECK(w2.empty());

  // possibility is erased, with notice
  auto [t3, w3] = F::to_fol(
      drs("drs([x1],[named(x1,harris,per),pos(drs([e1,x2,x3],["
          "pred(e1,teach,v,0),rel(e1,x1,agent),rel(e1,x2,patient),"
          "pred(x2,class,n,0),pred(x2,linguistic,a,0),rel(e1,x3,on),"
          "pred(x3,tuesday,n,0)]))])"));
  CHECK(w3 == std::vector<std::string>{"modality-erased"});
  CHECK(F::format_formula(t3) ==
        "exists x1 (named_per_harris(x1) & exists e1 exists x2 exists x3 "
        "(teach_v(e1) & agent(e1,x1) & patient(e1,x2) & class_n(x2) & "
        "linguistic_a(x2) & on(e1,x3) & tuesday_n(x3)))");

  CHECK(F::format_formula(F::to_fol(drs("drs([x1,x2],[eq(x1,x2)])")).formula) ==
        "exists x1 exists x2 eq(x1,x2)");
  CHECK(F::format_formula(
            F::to_fol(drs("drs([],[not(drs([x1],[pred(x1,dog,n,0)]))])")).formula) ==
        "!(exists x1 dog_n(x1))");
  CHECK(F::format_formula(
            F::to_fol(drs("drs([x1],[or(drs([],[pred(x1,dog,n,0)]),"
                          "drs([],[pred(x1,cat,n,0)]))])")).formula) ==
        "exists x1 (dog_n(x1) | cat_n(x1))");

  // two possibility boxes, two notices
  auto [t4, w4] = F::to_fol(drs("drs([x1],[pos(drs([],[pred(x1,dog,n,0)])),"
                                "pos(drs([],[pred(x1,cat,n,0)]))])"));
  CHECK(w4 == std::vector<std::string>{"modality-erased", "modality-erased"});

  CHECK_THROWS_AS(F::to_fol(drs("drs([],[pred(x1,dog,n,0)])")), F::ImproperDrs);
  CHECK_THROWS_AS(F::to_fol(drs("drs([],[whq(x1,drs([],[]))])")),
                  F::QuestionNotTranslatable);
}

TEST_CASE("model evaluation basics") {
  F::FiniteModel empty_model;
  CHECK(F::eval_model(F::Formula{F::And{{}}}, empty_model));

  F::FiniteModel m;
  m.domain = {"a", "b"};
  m.preds["dog_n"] = {1, {}};
  F::Formula some_dog{F::Exists{"x", Box<F::Formula>(atom("dog_n", {"x"}))}};
  CHECK_FALSE(F::eval_model(some_dog, m));
  m.preds["dog_n"].tuples.insert({"b"});
  CHECK(F::eval_model(some_dog, m));

  // uninterpreted predicates have empty extensions
  CHECK_FALSE(F::eval_model(atom("cat_n", {"a"}), m));

  // equality is identity, never table lookup
  CHECK(F::eval_model(atom("eq", {"a", "a"}), m));
  CHECK_FALSE(F::eval_model(atom("eq", {"a", "b"}), m));

  CHECK_THROWS_AS(F::eval_model(atom("dog_n", {"a", "b"}), m), F::ArityMismatch);
  try {
    F::eval_model(atom("dog_n", {"a", "b"}), m);
  } catch (const F::ArityMismatch& e) {
    CHECK(e.pred == "dog_n");
    CHECK(e.expected == 1);
    CHECK(e.got == 2);
  }
}

TEST_CASE("quantified evaluation agrees with direct embedding on all 512 "
          "small models") {
  Drs d = drs("drs([],[imp(drs([x1],[pred(x1,man,n,0)]),"
              "drs([e1],[pred(e1,walk,v,0),rel(e1,x1,agent)]))])");
  F::Formula f = F::to_fol(d).formula;

  const std::vector<std::string> dom = {"a", "b", "e"};
  int models = 0;
  for (int mm = 0; mm < 8; ++mm)
    for (int ww = 0; ww < 8; ++ww)
      for (int aa = 0; aa < 8; ++aa) {
        F::FiniteModel m;
        m.domain = dom;
        F::Interpretation man{1, {}}, walk{1, {}}, agent{2, {}};
        for (int j = 0; j < 3; ++j) {
          if ((mm >> j) & 1) man.tuples.insert({dom[static_cast<size_t>(j)]});
          if ((ww >> j) & 1) walk.tuples.insert({dom[static_cast<size_t>(j)]});
          if ((aa >> j) & 1)
            agent.tuples.insert({"e", dom[static_cast<size_t>(j)]});
        }
        m.preds = {{"man_n", man}, {"walk_v", walk}, {"agent", agent}};
        CHECK(F::eval_model(f, m) == oracle::drs_holds(d, m));
        ++models;
      }
  CHECK(models == 512);
}

TEST_CASE("translation agrees with embedding semantics on generated input") {
  std::mt19937 rng(909192);
  testgen::GenOptions opt;
  opt.max_depth = 2;
  opt.allow_whq = false;
  opt.allow_pos = false;
  testgen::DrsGen gen(rng, opt);
  int pairs = 0;
  for (int i = 0; i < 300; ++i) {
    Drs d = gen.gen();
    auto sig = testgen::drs_signature(d);
    auto [f, warnings] = F::to_fol(d);
    CHECK(warnings.empty());
    for (int ds = 1; ds <= 3; ++ds) {
      F::FiniteModel m = testgen::random_model(rng, ds, sig);
      CAPTURE(serialize_drs(d));
      CAPTURE(ds);
      CHECK(F::eval_model(f, m) == oracle::drs_holds(d, m));
      ++pairs;
    }
  }
  CHECK(pairs == 900);
}

TEST_CASE("model search") {
  // single ground atom: the one-element model over its constant
  auto got = F::satisfiable(atom("p", {"c"}), 3);
  REQUIRE(got.has_value());
  F::FiniteModel want;
  want.domain = {"c"};
  want.preds["p"] = {1, {{"c"}}};
  CHECK(*got == want);

  F::Formula some_p{F::Exists{"x", Box<F::Formula>(atom("p", {"x"}))}};
  F::Formula contradiction{
      F::And{{some_p, F::Formula{F::Not{Box<F::Formula>(some_p)}}}}};
  CHECK_FALSE(F::satisfiable(contradiction, 3).has_value());

  // every man walks + someone is a man: all three facts land on d1
  Drs d = drs("drs([],[imp(drs([x1],[pred(x1,man,n,0)]),"
              "drs([e1],[pred(e1,walk,v,0),rel(e1,x1,agent)]))])");
  F::Formula every = F::to_fol(d).formula;
  F::Formula some_man{F::Exists{"x", Box<F::Formula>(atom("man_n", {"x"}))}};
  auto model = F::satisfiable(F::Formula{F::And{{every, some_man}}}, 3);
  REQUIRE(model.has_value());
  F::FiniteModel min_model;
  min_model.domain = {"d1"};
  min_model.preds["agent"] = {2, {{"d1", "d1"}}};
  min_model.preds["man_n"] = {1, {{"d1"}}};
  min_model.preds["walk_v"] = {1, {{"d1"}}};
  CHECK(*model == min_model);
  CHECK(F::eval_model(F::Formula{F::And{{every, some_man}}}, *model));

  // a formula that needs two elements; the search proves no 1-element
  // model exists before moving up
  F::Formula some_not_p{F::Exists{
      "x", Box<F::Formula>(F::Formula{F::Not{Box<F::Formula>(atom("p", {"x"}))}})}};
  F::Formula split{F::And{{some_p, some_not_p}}};
  CHECK_FALSE(F::satisfiable(split, 1).has_value());
  auto two = F::satisfiable(split, 3);
  REQUIRE(two.has_value());
  CHECK(two->domain == std::vector<std::string>{"d1", "d2"});
  // first satisfying interpretation in lexicographic order holds p of d2 only
  CHECK(two->preds["p"].tuples == std::set<std::vector<std::string>>{{"d2"}});

  CHECK_THROWS_AS(F::satisfiable(split, 3, 2), F::SearchSpaceTooLarge);
  try {
    F::satisfiable(split, 3, 2);
  } catch (const F::SearchSpaceTooLarge& e) {
    CHECK(e.budget == 2);
  }

  // equality alone
  auto eq_model = F::satisfiable(atom("eq", {"c", "c"}), 2);
  REQUIRE(eq_model.has_value());
  CHECK(eq_model->domain == std::vector<std::string>{"c"});
  CHECK_FALSE(F::satisfiable(atom("eq", {"c1", "c2"}), 3).has_value());
}

TEST_CASE("question answering") {
  F::FiniteModel m;
  m.domain = {"a", "b"};

  // empty body: everything qualifies
  CHECK(F::answer_query(drs("drs([],[whq(x1,drs([],[]))])"), m) ==
        std::set<std::string>{"a", "b"});

  // who walks, against a model where only a does
  auto [who, flags] = analyze({"who", "walks"}, Lexicon::load_file(
                                  std::string(DATA_DIR) + "/lexicon.tsv"));
  F::FiniteModel walkers;
  walkers.domain = {"a", "b", "ev"};
  walkers.preds["walk_v"] = {1, {{"ev"}}};
  walkers.preds["agent"] = {2, {{"ev", "a"}}};
  CHECK(F::answer_query(who, walkers) == std::set<std::string>{"a"});

  // uninterpreted query predicate: empty answer
  CHECK(F::answer_query(drs("drs([],[whq(x1,drs([],[pred(x1,dog,n,0)]))])"),
                        m) == std::set<std::string>{});

  CHECK_THROWS_AS(F::answer_query(drs("drs([],[])"), m), F::NotAQuestion);
  CHECK_THROWS_AS(
      F::answer_query(drs("drs([],[whq(x1,drs([],[])),whq(x2,drs([],[]))])"), m),
      F::NotAQuestion);
}

TEST_CASE("when-question answered over a fact base") {
  const Lexicon lex = Lexicon::load_file(std::string(DATA_DIR) + "/lexicon.tsv");
  auto [q, flags] = analyze({"when", "does", "harris", "walk"}, lex);
  F::FiniteModel facts = F::parse_facts(
      "named_per_harris(h).\n"
      "walk_v(ev).\n"
      "agent(ev,h).\n"
      "on(ev,tuesday).\n"
      "day_n(tuesday).\n"
      "day_n(wednesday).\n");
  std::set<std::string> answers = F::answer_query(q, facts);
  CHECK(answers == std::set<std::string>{"tuesday"});
  for (const auto& a : answers)
    CHECK(std::count(facts.domain.begin(), facts.domain.end(), a) == 1);
}

TEST_CASE("fact files") {
  F::FiniteModel m = F::parse_facts(
      "# timetable fragment\n"
      "\n"
      "day_n(tuesday).   # trailing note\n"
      "day_n(wednesday).\n"
      "before(tuesday, wednesday).\n");
  CHECK(m.domain == std::vector<std::string>{"tuesday", "wednesday"});
  CHECK(m.preds.at("day_n").arity == 1);
  CHECK(m.preds.at("day_n").tuples ==
        std::set<std::vector<std::string>>{{"tuesday"}, {"wednesday"}});
  CHECK(m.preds.at("before").tuples ==
        std::set<std::vector<std::string>>{{"tuesday", "wednesday"}});

  CHECK_THROWS_AS(F::parse_facts("day_n(tuesday)\n"), SyntaxError);
  try {
    F::parse_facts("ok(a).\nok(b).\nbad(a,b,c).\n");
  } catch (const SyntaxError& e) {
    CHECK(e.line == 3);
    CHECK(e.expected == "')'");
  }
  CHECK_THROWS_AS(F::parse_facts("p(a).\np(a,b).\n"), F::ArityMismatch);
}
