// Command-line front door: run the reduction pipeline over stdin, train or
// evaluate the classifier, answer questions against a facts file, or check a
// single sentence for conformance.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nl2cnl/drs_text.hpp"
#include "nl2cnl/pipeline.hpp"

using namespace nl2cnl;

namespace {

// 0 success, 1 configuration problem, 2 per-sentence failures without
// --strict, 3 any failure with --strict.
constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kInputError = 2;
constexpr int kStrictError = 3;

std::string slurp_file(const std::string& path, const char* what) {
  std::ifstream in(path);
  if (!in.good())
    throw ConfigError(std::string(what) + " not readable: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cmd_run(const std::string& config_path, const std::string& out_override,
            bool pretty, bool strict, bool discourse) {
  Pipeline p = load_pipeline_file(config_path);
  if (!out_override.empty()) p.cfg.output = *output_mode_from_string(out_override);
  if (strict) p.cfg.strict = true;

  std::vector<SentenceReport> reports = run_pipeline(p, std::cin, discourse);

  const OutputMode mode = p.cfg.output;
  if (mode == OutputMode::All)
    std::cout << R"({"format":"nl2cnl-report","version":1})" << '\n';
  bool any_failed = false;
  for (const auto& r : reports) {
    for (const auto& w : r.warnings)
      std::cerr << "line " << r.id << ": warning: " << w << '\n';
    if (!r.ok) {
      any_failed = true;
      std::cerr << "line " << r.id << ": error: " << r.error_kind << ": "
                << r.error << '\n';
      if (mode == OutputMode::All) std::cout << report_json(r) << '\n';
      continue;
    }
    switch (mode) {
      case OutputMode::Ace:
        if (!r.ace.empty()) std::cout << r.ace << '\n';
        break;
      case OutputMode::Drs:
        std::cout << (pretty ? pretty_drs(r.reduced) : serialize_drs(r.reduced))
                  << '\n';
        break;
      case OutputMode::Fol:
        if (r.fol) std::cout << format_formula(*r.fol) << '\n';
        break;
      case OutputMode::All:
        std::cout << report_json(r) << '\n';
        break;
    }
  }
  if (any_failed) return p.cfg.strict ? kStrictError : kInputError;
  return kOk;
}

int cmd_train(const std::string& data_path, const std::string& out_path,
              const std::string& lexicon_path, std::uint64_t seed, int epochs) {
  Lexicon lex;
  try {
    lex = Lexicon::load_file(lexicon_path);
  } catch (const Error& e) {
    throw ConfigError("lexicon " + lexicon_path + ": " + e.what());
  }
  auto corpus = parse_labeled_corpus(slurp_file(data_path, "training data"));
  Hyper hyper;
  hyper.epochs = epochs;
  LinearModel model = train(featurize_corpus(corpus, lex), hyper, seed);
  save_model(model, out_path);
  std::cout << "trained on " << corpus.size() << " examples, "
            << model.feature_names.size() << " features -> " << out_path
            << '\n';
  return kOk;
}

int cmd_eval(const std::string& config_path, const std::string& gold_path) {
  Pipeline p = load_pipeline_file(config_path);
  CorpusReport report = eval_corpus(p, load_gold(gold_path));
  std::cout << format_corpus_report(report) << '\n'
            << corpus_report_json(report) << '\n';
  return report.failed > 0 ? kInputError : kOk;
}

int cmd_reason(const std::string& config_path, const std::string& facts_path,
               const std::string& mode, const std::string& question) {
  Pipeline p = load_pipeline_file(config_path);
  fol::FiniteModel facts;
  try {
    facts = fol::parse_facts(slurp_file(facts_path, "facts file"));
  } catch (const SyntaxError& e) {
    std::cerr << "facts file: " << e.what() << '\n';
    return kConfigError;
  }
  try {
    ReasonResult res = reason(p, question,  facts,
                              mode == "model" ? ReasonMode::Model
                                              : ReasonMode::Csp);
    if (mode == "model") {
      for (const auto& a : res.answers) std::cout << a << '\n';
    } else {
      for (const auto& sol : res.solutions) {
        bool first = true;
        for (const auto& [var, value] : sol) {
          if (!first) std::cout << ' ';
          std::cout << var << '=' << value;
          first = false;
        }
        std::cout << '\n';
      }
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  }
  return kOk;
}

int cmd_check_ace(const std::string& sentence, const std::string& lexicon_path) {
  Lexicon lex;
  try {
    lex = Lexicon::load_file(lexicon_path);
  } catch (const Error& e) {
    throw ConfigError("lexicon " + lexicon_path + ": " + e.what());
  }
  AceSentence result = check_ace(sentence, lex);
  if (result.conformant) {
    std::cout << "conformant\n";
    return kOk;
  }
  for (const auto& [pos, name] : result.violations)
    std::cout << pos << '\t' << name << '\n';
  return kInputError;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Controlled-fragment English to CNL reduction toolkit"};
  app.require_subcommand(1);

  std::string config_path, out_override, data_path, out_path, gold_path;
  std::string facts_path, mode, question, sentence;
  std::string lexicon_path = "data/lexicon.tsv";
  bool pretty = false, strict = false, discourse = false;
  std::uint64_t seed = 7;
  int epochs = 200;

  CLI::App* run = app.add_subcommand("run", "Reduce sentences read from stdin");
  run->add_option("--config", config_path, "pipeline config file")->required();
  run->add_option("--out", out_override, "override configured output mode")
      ->check(CLI::IsMember({"drs", "ace", "fol", "all"}));
  run->add_flag("--pretty", pretty, "indent DRS output");
  run->add_flag("--strict", strict, "fail instead of warn on unverbalizable");
  run->add_flag("--discourse", discourse,
                "resolve pronouns across the whole input block");

  CLI::App* tr = app.add_subcommand("train", "Train the reduction classifier");
  tr->add_option("--data", data_path, "labeled corpus (text TAB labels)")
      ->required();
  tr->add_option("--out", out_path, "model file to write")->required();
  tr->add_option("--seed", seed, "shuffle seed");
  tr->add_option("--epochs", epochs, "training epochs");
  tr->add_option("--lexicon", lexicon_path, "lexicon for feature extraction");

  CLI::App* ev = app.add_subcommand("eval", "Score the pipeline on a gold corpus");
  ev->add_option("--config", config_path, "pipeline config file")->required();
  ev->add_option("--gold", gold_path,
                 "gold file (sentence TAB labels TAB expected ACE)")
      ->required();

  CLI::App* rs = app.add_subcommand("reason", "Answer a question over a facts file");
  rs->add_option("--config", config_path, "pipeline config file")->required();
  rs->add_option("--facts", facts_path, "fact base, one pred(args). per line")
      ->required();
  rs->add_option("--mode", mode, "model: evaluate directly; csp: compile and solve")
      ->required()
      ->check(CLI::IsMember({"model", "csp"}));
  rs->add_option("--question", question, "question sentence")->required();

  CLI::App* ck = app.add_subcommand("check-ace", "Check one sentence for conformance");
  ck->add_option("sentence", sentence, "sentence to check")->required();
  ck->add_option("--lexicon", lexicon_path, "vocabulary to check against");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (run->parsed())
      return cmd_run(config_path, out_override, pretty, strict, discourse);
    if (tr->parsed())
      return cmd_train(data_path, out_path, lexicon_path, seed, epochs);
    if (ev->parsed()) return cmd_eval(config_path, gold_path);
    if (rs->parsed()) return cmd_reason(config_path, facts_path, mode, question);
    if (ck->parsed()) return cmd_check_ace(sentence, lexicon_path);
  } catch (const ConfigError& e) {
    std::cerr << e.what() << '\n';
    return kConfigError;
  } catch (const GoldFormatError& e) {
    std::cerr << e.what() << '\n';
    return kConfigError;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  }
  return kOk;
}
