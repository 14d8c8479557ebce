#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "nl2cnl/drs_text.hpp"
#include "nl2cnl/pipeline.hpp"
#include "support/generators.hpp"

using namespace nl2cnl;

namespace {

const Pipeline& shipped() {
  static Pipeline p =
      load_pipeline_file(std::string(DATA_DIR) + "/pipeline.conf");
  return p;
}

SentenceReport one(const Pipeline& p, const std::string& line) {
  auto reports = run_pipeline(p, std::vector<std::string>{line});
  REQUIRE(reports.size() == 1);
  return reports[0];
}

}  // namespace

TEST_CASE("config parsing") {
  PipelineConfig cfg = parse_config(
      "# comment\n"
      "lexicon = words.tsv\n"
      "rules = my.rules\n"
      "model = m.txt\n"
      "max_iterations = 50\n"
      "output = fol\n"
      "strict = true\n");
  CHECK(cfg.lexicon == "words.tsv");
  CHECK(cfg.rules == "my.rules");
  CHECK(cfg.model == "m.txt");
  CHECK(cfg.max_iterations == 50);
  CHECK(cfg.output == OutputMode::Fol);
  CHECK(cfg.strict);

  // defaults: no model, ace output, lenient, 1000 iterations
  PipelineConfig d = parse_config("lexicon=a\nrules=b\n");
  CHECK(!d.model.has_value());
  CHECK(d.max_iterations == 1000);
  CHECK(d.output == OutputMode::Ace);
  CHECK(!d.strict);

  CHECK_THROWS_AS(parse_config("rules=b\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("lexicon=a\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("lexicon=a\nrules=b\noutput=xml\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("lexicon=a\nrules=b\nmax_iterations=zero\n"),
                  ConfigError);
  CHECK_THROWS_AS(parse_config("lexicon=a\nrules=b\nmax_iterations=0\n"),
                  ConfigError);
  CHECK_THROWS_AS(parse_config("lexicon=a\nrules=b\nstrict=yes\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("lexicon=a\nrules=b\ncolor=red\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("lexicon=a\nrules=b\nnonsense\n"), ConfigError);
}

TEST_CASE("config loading resolves paths and validates resources") {
  // the shipped config loads and its resources parse
  PipelineConfig cfg = load_config(std::string(DATA_DIR) + "/pipeline.conf");
  CHECK(cfg.lexicon == std::string(DATA_DIR) + "/lexicon.tsv");
  CHECK(cfg.rules == std::string(DATA_DIR) + "/default.rules");
  REQUIRE(cfg.model.has_value());
  CHECK(*cfg.model == std::string(DATA_DIR) + "/model.txt");
  const Pipeline& p = shipped();
  CHECK(p.rules.size() == 3);
  CHECK(p.model.has_value());

  PipelineConfig missing = cfg;
  missing.lexicon = "/nonexistent/lexicon.tsv";
  CHECK_THROWS_AS(load_pipeline(missing), ConfigError);
  missing = cfg;
  missing.model = "/nonexistent/model.txt";
  CHECK_THROWS_AS(load_pipeline(missing), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/pipeline.conf"), ConfigError);
}

TEST_CASE("the jargon lecture sentence end to end") {
  Pipeline p = shipped();
  p.cfg.output = OutputMode::All;
  SentenceReport r = one(p, "Harris can teach linguistics on Tuesdays.");
  REQUIRE(r.ok);
  CHECK(r.ace == "Harris can teach a linguistic class on Tuesday.");
  CHECK(r.labels == LabelSet{ReductionLabel::Jargon});
  CHECK(r.scores.size() == 4);
  CHECK(r.conformance.conformant);
  CHECK(serialize_drs(r.source) ==
        "drs([x1],[named(x1,harris,per),pos(drs([e1,x2,x3],[pred(e1,teach,v,0),"
        "rel(e1,x1,agent),rel(e1,x2,patient),pred(x2,linguistics,n,0),"
        "rel(e1,x3,on),pred(x3,tuesday,n,0)]))])");
  CHECK(serialize_drs(r.reduced) ==
        "drs([x1],[named(x1,harris,per),pos(drs([e1,x2,x3],[pred(e1,teach,v,0),"
        "rel(e1,x1,agent),rel(e1,x2,patient),pred(x2,class,n,0),"
        "pred(x2,linguistic,a,0),rel(e1,x3,on),pred(x3,tuesday,n,0)]))])");
  REQUIRE(r.rewrite.steps.size() == 1);
  CHECK(r.rewrite.steps[0].rule == "linguistics_to_class");
  REQUIRE(r.fol.has_value());
  CHECK(format_formula(*r.fol) ==
        "exists x1 (named_per_harris(x1) & exists e1 exists x2 exists x3 "
        "(teach_v(e1) & agent(e1,x1) & patient(e1,x2) & class_n(x2) & "
        "linguistic_a(x2) & on(e1,x3) & tuesday_n(x3)))");
  CHECK(r.warnings == std::vector<std::string>{"modality-erased"});
  // one recorded repair: the weekday plural (lowercasing is not a repair)
  REQUIRE(r.normalization.steps.size() == 1);
  CHECK(r.normalization.steps[0] ==
        NormalizeStep{"Tuesdays", "tuesday", NormalizeReason::PluralWeekday});
}

TEST_CASE("stream behavior: empty input, failures, blank lines") {
  const Pipeline& p = shipped();
  CHECK(run_pipeline(p, std::vector<std::string>{}).empty());
  std::istringstream empty_stream;
  CHECK(run_pipeline(p, empty_stream).empty());

  auto reports = run_pipeline(
      p, std::vector<std::string>{"A dog barks.", "", "A zzgh barks.",
                                  "Every man walks."});
  REQUIRE(reports.size() == 3);  // blank line skipped, not a sentence
  CHECK(reports[0].id == 1);
  CHECK(reports[0].ok);
  CHECK(reports[1].id == 3);
  CHECK(!reports[1].ok);
  CHECK(reports[1].error_kind == "UnknownToken");
  CHECK(reports[1].failed_stage == "analyze");
  CHECK(reports[2].id == 4);  // the stream continued
  CHECK(reports[2].ok);
  CHECK(reports[2].ace == "Every man walks.");
}

TEST_CASE("output modes gate the later stages") {
  Pipeline p = shipped();
  p.cfg.output = OutputMode::Drs;
  SentenceReport r = one(p, "A dog barks.");
  CHECK(r.ok);
  CHECK(r.ace.empty());
  CHECK(!r.fol.has_value());
  CHECK(serialize_drs(r.reduced) ==
        "drs([x1,e1],[pred(x1,dog,n,0),pred(e1,bark,v,0),rel(e1,x1,agent)])");

  p.cfg.output = OutputMode::Fol;
  r = one(p, "A dog barks.");
  CHECK(r.ace.empty());
  REQUIRE(r.fol.has_value());
  CHECK(format_formula(*r.fol) ==
        "exists x1 exists e1 (dog_n(x1) & bark_v(e1) & agent(e1,x1))");

  p.cfg.output = OutputMode::All;
  r = one(p, "A dog barks.");
  CHECK(r.ace == "A dog barks.");
  CHECK(r.fol.has_value());
}

TEST_CASE("strict flag: fail versus warn on unverbalizable input") {
  Pipeline p = shipped();
  SentenceReport r = one(p, "Who walks?");
  CHECK(r.ok);  // lenient: the report stands, with a warning
  CHECK(r.ace.empty());
  REQUIRE(r.warnings.size() == 1);
  CHECK(r.warnings[0] == "not verbalizable: question-unsupported");

  p.cfg.strict = true;
  r = one(p, "Who walks?");
  CHECK(!r.ok);
  CHECK(r.error_kind == "NotVerbalizable");
  CHECK(r.failed_stage == "verbalize");
}

TEST_CASE("reports are deterministic across runs") {
  const Pipeline& p = shipped();
  std::vector<std::string> lines = {
      "Harris can teach linguistics on Tuesdays.", "A guy walks in a park.",
      "A zzgh barks.", "Who walks?", "Every farmer owns a red dog."};
  std::string a = reports_jsonl(run_pipeline(p, lines), false);
  std::string b = reports_jsonl(run_pipeline(p, lines), false);
  CHECK(a == b);
  CHECK(a.substr(0, a.find('\n')) ==
        R"({"format":"nl2cnl-report","version":1})");
}

TEST_CASE("report records parse as json and carry the schema fields") {
  Pipeline p = shipped();
  p.cfg.output = OutputMode::All;
  SentenceReport r = one(p, "Harris can teach linguistics on Tuesdays.");
  nlohmann::json j = nlohmann::json::parse(report_json(r));
  CHECK(j["id"] == 1);
  CHECK(j["ok"] == true);
  CHECK(j["raw"] == "Harris can teach linguistics on Tuesdays.");
  CHECK(j["ace"] == "Harris can teach a linguistic class on Tuesday.");
  CHECK(j["labels"] == nlohmann::json::array({"jargon"}));
  CHECK(j["conformance"]["conformant"] == true);
  CHECK(j["rewrite"]["steps"][0]["rule"] == "linguistics_to_class");
  CHECK(j["source"].is_string());
  CHECK(j["reduced"].is_string());
  CHECK(j["fol"].is_string());
  CHECK(j["timings_us"].is_object());
  nlohmann::json noclock = nlohmann::json::parse(report_json(r, false));
  CHECK(!noclock.contains("timings_us"));

  SentenceReport bad = one(p, "A zzgh barks.");
  nlohmann::json e = nlohmann::json::parse(report_json(bad));
  CHECK(e["ok"] == false);
  CHECK(e["error_kind"] == "UnknownToken");
  CHECK(e["failed_stage"] == "analyze");
}

TEST_CASE("without a model every rule gate is open") {
  Pipeline p = shipped();
  p.model.reset();
  SentenceReport r = one(p, "A guy walks in a park.");
  REQUIRE(r.ok);
  CHECK(r.labels == LabelSet{ReductionLabel::Ambiguous,
                             ReductionLabel::Colloquialism,
                             ReductionLabel::Jargon,
                             ReductionLabel::Workaround});
  CHECK(r.scores.empty());
  CHECK(r.ace == "A man walks in a park.");  // colloquialism rule still fired
}

TEST_CASE("stage isolation: no rules, no model, conformant input round-trips") {
  Pipeline p = shipped();
  p.model.reset();
  p.rules.clear();
  for (const auto& entry :
       load_gold(std::string(DATA_DIR) + "/golden20.tsv")) {
    SentenceReport r = one(p, entry.expected_ace);
    REQUIRE(r.ok);
    CHECK(r.ace == entry.expected_ace);
    CHECK(alpha_equivalent(r.source, r.reduced));
    auto [tokens, trace] = normalize(r.ace, p.lexicon);
    auto [d, flags] = analyze(tokens, p.lexicon);
    CHECK(alpha_equivalent(d, r.reduced));
  }
}

TEST_CASE("discourse mode carries antecedents across sentences") {
  const Pipeline& p = shipped();
  auto reports = run_pipeline(
      p, std::vector<std::string>{"A man walks.", "He sleeps."}, true);
  REQUIRE(reports.size() == 2);
  REQUIRE(reports[1].ok);
  CHECK(reports[0].ace == "A man walks.");
  CHECK(reports[1].ace == "A man sleeps.");
  // the event ref is renamed past the first sentence's e1; the antecedent
  // keeps its context name x1
  CHECK(serialize_drs(reports[1].source) ==
        "drs([x1,e2],[pred(x1,man,n,0),pred(e2,sleep,v,0),rel(e2,x1,agent)])");

  // a named antecedent is copied over as its name
  reports = run_pipeline(
      p,
      std::vector<std::string>{"Harris teaches a class.", "He walks in a park."},
      true);
  REQUIRE(reports.size() == 2);
  CHECK(reports[1].ace == "Harris walks in a park.");

  // most recent matching referent wins across sentences, and two candidates
  // flag the ambiguity
  reports = run_pipeline(
      p, std::vector<std::string>{"A man walks.", "A boy sleeps.", "He waves."},
      true);
  REQUIRE(reports.size() == 3);
  CHECK(reports[2].ace == "A boy waves.");
  CHECK(reports[2].flags.ambiguous_anaphora);

  // agreement still constrains: "it" skips people
  reports = run_pipeline(
      p, std::vector<std::string>{"A man owns a dog.", "It barks."}, true);
  REQUIRE(reports.size() == 2);
  CHECK(reports[1].ace == "A dog barks.");

  // without the flag the same input is a per-sentence failure
  reports = run_pipeline(
      p, std::vector<std::string>{"A man walks.", "He sleeps."}, false);
  CHECK(!reports[1].ok);
  CHECK(reports[1].error_kind == "NoAntecedent");
}

TEST_CASE("discourse referents stay distinct across sentences") {
  const Pipeline& p = shipped();
  auto reports = run_pipeline(
      p, std::vector<std::string>{"A dog barks.", "A dog sleeps."}, true);
  REQUIRE(reports.size() == 2);
  // same surface, but the second sentence talks about a fresh referent
  CHECK(serialize_drs(reports[1].source) ==
        "drs([x2,e2],[pred(x2,dog,n,0),pred(e2,sleep,v,0),rel(e2,x2,agent)])");
}

TEST_CASE("argument preservation scores") {
  const Pipeline& p = shipped();

  SUBCASE("identity is perfect, with or without events") {
    Drs d = parse_drs(
        "drs([x1,e1],[pred(x1,dog,n,0),pred(e1,bark,v,0),rel(e1,x1,agent)])");
    CHECK(argument_preservation(d, d) == 1.0);
    Drs no_events = parse_drs("drs([x1],[pred(x1,dog,n,0)])");
    CHECK(argument_preservation(no_events, no_events) == 1.0);
    // no event edges at all -> vacuously preserved even against anything
    CHECK(argument_preservation(no_events, parse_drs("drs([],[])")) == 1.0);
  }

  SUBCASE("the lecture rewrite keeps all three edges") {
    Pipeline q = shipped();
    SentenceReport r = one(q, "Harris can teach linguistics on Tuesdays.");
    REQUIRE(r.ok);
    CHECK(argument_preservation(r.source, r.reduced, &r.rewrite) == 1.0);
  }

  SUBCASE("dropping the with-modifier of a transitive loses one of three") {
    SentenceReport r = one(p, "A teacher teaches a class with a book.");
    REQUIRE(r.ok);
    CHECK(r.labels.count(ReductionLabel::Workaround) == 1);
    REQUIRE(r.rewrite.steps.size() == 1);
    CHECK(r.rewrite.steps[0].rule == "drop_with_modifier");
    CHECK(argument_preservation(r.source, r.reduced, &r.rewrite) == 2.0 / 3.0);
  }

  SUBCASE("deleting the whole event loses everything") {
    Drs src = parse_drs(
        "drs([x1,e1],[pred(x1,dog,n,0),pred(e1,bark,v,0),rel(e1,x1,agent)])");
    Drs red = parse_drs("drs([x1],[pred(x1,dog,n,0)])");
    CHECK(argument_preservation(src, red) == 0.0);
  }

  SUBCASE("eq conditions bridge renamed endpoints") {
    Drs src = parse_drs(
        "drs([x1,e1],[pred(x1,dog,n,0),pred(e1,bark,v,0),rel(e1,x1,agent)])");
    Drs red = parse_drs(
        "drs([x1,x2,e1],[pred(x1,dog,n,0),eq(x2,x1),pred(e1,bark,v,0),"
        "rel(e1,x2,agent)])");
    CHECK(argument_preservation(src, red) == 1.0);
  }

  SUBCASE("improper inputs are rejected") {
    Drs bad = parse_drs("drs([],[pred(x1,dog,n,0)])");
    Drs good = parse_drs("drs([x1],[pred(x1,dog,n,0)])");
    CHECK_THROWS_AS(argument_preservation(bad, good), ImproperDrs);
    CHECK_THROWS_AS(argument_preservation(good, bad), ImproperDrs);
  }

  SUBCASE("self-score is perfect on generated sentences") {
    std::mt19937 rng(616263);
    testgen::SentenceGen gen(rng);
    for (int i = 0; i < 100; ++i) {
      auto [tokens, trace] = normalize(gen.gen(), p.lexicon);
      auto [d, flags] = analyze(tokens, p.lexicon);
      CAPTURE(i);
      CHECK(argument_preservation(d, d) == 1.0);
    }
  }
}

TEST_CASE("gold corpus parsing") {
  auto gold = parse_gold(
      "# header\n"
      "A guy walks.\tcolloquialism\tA man walks.\n"
      "A dog barks.\t\tA dog barks.\n"
      "A x.\tjargon,workaround\tA y.\n");
  REQUIRE(gold.size() == 3);
  CHECK(gold[0].sentence == "A guy walks.");
  CHECK(gold[0].labels == LabelSet{ReductionLabel::Colloquialism});
  CHECK(gold[0].expected_ace == "A man walks.");
  CHECK(gold[1].labels.empty());
  CHECK(gold[2].labels ==
        LabelSet{ReductionLabel::Jargon, ReductionLabel::Workaround});

  CHECK_THROWS_AS(parse_gold("one column only\n"), GoldFormatError);
  CHECK_THROWS_AS(parse_gold("a\tb\tc\td\n"), GoldFormatError);
  try {
    parse_gold("ok.\t\tok.\nbad.\tnotalabel\tbad.\n");
    FAIL("expected GoldFormatError");
  } catch (const GoldFormatError& e) {
    CHECK(e.line == 2);
  }
}

TEST_CASE("corpus evaluation") {
  const Pipeline& p = shipped();

  SUBCASE("empty gold gives zero counts without dividing") {
    CorpusReport r = eval_corpus(p, {});
    CHECK(r.sentences == 0);
    CHECK(r.ace_exact_match == 0.0);
    CHECK(r.mean_preservation == 0.0);
    CHECK(r.micro.tp == 0);
  }

  SUBCASE("the single lecture pair is a perfect corpus") {
    GoldEntry entry{"Harris can teach linguistics on Tuesdays.",
                    {ReductionLabel::Jargon},
                    "Harris can teach a linguistic class on Tuesday."};
    CorpusReport r = eval_corpus(p, {entry});
    CHECK(r.sentences == 1);
    CHECK(r.failed == 0);
    CHECK(r.ace_exact_match == 1.0);
    CHECK(r.mean_preservation == 1.0);
    CHECK(r.per_label.at(ReductionLabel::Jargon).tp == 1);
    CHECK(r.micro.fp == 0);
    CHECK(r.micro.fn == 0);
  }

  SUBCASE("the shipped golden corpus scores clean") {
    auto gold = load_gold(std::string(DATA_DIR) + "/golden20.tsv");
    REQUIRE(gold.size() == 20);
    CorpusReport r = eval_corpus(p, gold);
    CHECK(r.sentences == 20);
    CHECK(r.failed == 0);
    CHECK(r.ace_exact_match == 1.0);
    CHECK(r.mean_preservation == 1.0);
    CHECK(r.micro.fp == 0);
    CHECK(r.micro.fn == 0);

    std::string table = format_corpus_report(r);
    CHECK(table.find("ace exact match     1.000") != std::string::npos);
    CHECK(table.find("mean preservation   1.000") != std::string::npos);
    nlohmann::json j = nlohmann::json::parse(corpus_report_json(r, false));
    CHECK(j["ace_exact_match"] == 1.0);
    CHECK(j["sentences"] == 20);
    CHECK(!j.contains("total_us"));
  }

  SUBCASE("failures count against the scores") {
    GoldEntry bad{"A zzgh barks.", {}, "A dog barks."};
    CorpusReport r = eval_corpus(p, {bad});
    CHECK(r.sentences == 1);
    CHECK(r.failed == 1);
    CHECK(r.ace_exact_match == 0.0);
    CHECK(r.mean_preservation == 0.0);
  }
}

TEST_CASE("rule application order does not change the outcome") {
  const Pipeline& p = shipped();
  REQUIRE(p.rules.size() == 3);
  LabelSet all(kAllLabels.begin(), kAllLabels.end());
  std::vector<Drs> sources;
  for (const auto& entry : load_gold(std::string(DATA_DIR) + "/golden20.tsv")) {
    auto [tokens, trace] = normalize(entry.sentence, p.lexicon);
    sources.push_back(analyze(tokens, p.lexicon).first);
  }
  std::vector<size_t> order = {0, 1, 2};
  for (const Drs& d : sources) {
    Drs reference = apply_rules(p.rules, d, all).drs;
    std::vector<size_t> perm = order;
    do {
      std::vector<RewriteRule> shuffled;
      for (size_t i : perm) shuffled.push_back(p.rules[i]);
      CHECK(alpha_equivalent(apply_rules(shuffled, d, all).drs, reference));
    } while (std::next_permutation(perm.begin(), perm.end()));
  }
}

TEST_CASE("question answering through the pipeline") {
  const Pipeline& p = shipped();

  std::ifstream win(std::string(DATA_DIR) + "/walkers.facts");
  std::ostringstream wss;
  wss << win.rdbuf();
  fol::FiniteModel walkers = fol::parse_facts(wss.str());
  ReasonResult r = reason(p, "Who walks?", walkers, ReasonMode::Model);
  CHECK(r.answers == std::vector<std::string>{"a"});

  std::ifstream tin(std::string(DATA_DIR) + "/timetable.facts");
  std::ostringstream tss;
  tss << tin.rdbuf();
  fol::FiniteModel timetable = fol::parse_facts(tss.str());
  r = reason(p, "When can Harris teach a linguistic class?", timetable,
             ReasonMode::Csp);
  REQUIRE(r.solutions.size() == 1);
  CHECK(r.solutions[0].at("x1") == "tuesday");

  CHECK_THROWS_AS(reason(p, "A dog barks.", walkers, ReasonMode::Model),
                  fol::NotAQuestion);
}

TEST_CASE("feature extraction tolerates out-of-fragment sentences") {
  const Pipeline& p = shipped();
  FeatureVector fv = sentence_features("He teaches a class.", p.lexicon);
  CHECK(fv.count("u:he") == 1);
  CHECK(fv.count("c:pronoun") == 1);
  FeatureVector fv2 = sentence_features("A dof barks.", p.lexicon);
  CHECK(fv2.count("u:dog") == 1);  // spelling repair happened first
  CHECK(fv2.at("f:oov") == 1.0);
  auto data = featurize_corpus({{"A dog barks.", {}}}, p.lexicon);
  REQUIRE(data.size() == 1);
  CHECK(data[0].features.count("b:dog_barks") == 1);
}
