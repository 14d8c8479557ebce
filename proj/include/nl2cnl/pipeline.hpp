#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nl2cnl/ace.hpp"
#include "nl2cnl/classifier.hpp"
#include "nl2cnl/csp.hpp"
#include "nl2cnl/drs.hpp"
#include "nl2cnl/frontend.hpp"
#include "nl2cnl/lexicon.hpp"
#include "nl2cnl/logic.hpp"
#include "nl2cnl/rewrite.hpp"

// End-to-end driver: wires normalization, analysis, classification, rewriting,
// verbalization and the reasoning backends behind one configuration.

namespace nl2cnl {

enum class OutputMode { Ace, Drs, Fol, All };
std::string_view to_string(OutputMode m);
std::optional<OutputMode> output_mode_from_string(std::string_view s);

struct ConfigError : Error {
  explicit ConfigError(const std::string& what) : Error("config: " + what) {}
};

// Plain key=value lines, `#` comments.  Keys: lexicon (path, required), rules
// (path, required), model (path, optional — no model means every rule gate is
// treated as satisfied), max_iterations (positive int), output (ace | drs |
// fol | all), strict (true | false).
struct PipelineConfig {
  std::string lexicon;
  std::string rules;
  std::optional<std::string> model;
  int max_iterations = 1000;
  OutputMode output = OutputMode::Ace;
  bool strict = false;
  bool operator==(const PipelineConfig&) const = default;
};

PipelineConfig parse_config(std::string_view text);
// Reads a config file; relative paths inside it resolve against its directory.
PipelineConfig load_config(const std::string& path);

// A config with its referenced resources loaded and validated.  Any load or
// parse failure surfaces as ConfigError, so a constructed Pipeline is usable.
struct Pipeline {
  PipelineConfig cfg;
  Lexicon lexicon;
  std::vector<RewriteRule> rules;
  std::optional<LinearModel> model;
};
Pipeline load_pipeline(const PipelineConfig& cfg);
Pipeline load_pipeline_file(const std::string& config_path);

// Everything observed while processing one input line.  A failed stage leaves
// `ok` false with the error recorded and later stage fields empty; the stream
// continues with the next sentence either way.  Stage timings are wall-clock
// microseconds and never take part in report equality checks.
struct SentenceReport {
  int id = 0;  // 1-based input line number
  std::string raw;
  bool ok = true;
  std::string error;         // exception message when !ok
  std::string error_kind;    // exception type, e.g. "UnknownToken"
  std::string failed_stage;  // stage that threw
  std::vector<std::string> tokens;
  NormalizationTrace normalization;
  AnalysisFlags flags;  // post-resolution; oov_count filled from the trace
  Drs source;           // after anaphora resolution
  std::vector<std::pair<ReductionLabel, double>> scores;  // empty w/o model
  LabelSet labels;  // predicted; all four when no model is configured
  RewriteTrace rewrite;
  Drs reduced;
  std::string ace;  // output modes ace/all only
  AceSentence conformance;
  std::optional<fol::Formula> fol;  // output modes fol/all only
  std::vector<std::string> warnings;
  std::map<std::string, long long> timings_us;
};

// One report per input line, in input order.  In discourse mode sentences are
// merged left to right (with referent renaming) before anaphora resolution,
// so pronouns may pick up antecedents from earlier lines; each report still
// carries that sentence's own DRS, with any cross-sentence antecedent copied
// in (its referent plus describing conditions) to keep the box self-contained.
// With strict unset, NotVerbalizable is a warning on an otherwise ok report;
// with strict set it fails the sentence.
std::vector<SentenceReport> run_pipeline(const Pipeline& p,
                                         const std::vector<std::string>& lines,
                                         bool discourse = false);
std::vector<SentenceReport> run_pipeline(const Pipeline& p, std::istream& input,
                                         bool discourse = false);

// Machine-readable form: `reports_jsonl` emits one header object
// {"format":"nl2cnl-report","version":1} followed by one JSON object per
// sentence.  DRSs appear in canonical text form, formulas via format_formula.
// `with_timings=false` drops the timing map for byte-stable comparisons.
std::string report_json(const SentenceReport& r, bool with_timings = true);
std::string reports_jsonl(const std::vector<SentenceReport>& rs,
                          bool with_timings = true);

// Feature extraction for raw text, shared by training and classification:
// normalize, then analyze and resolve anaphora for the flag features when the
// sentence is inside the fragment; sentences outside it (the usual case for
// reduction-corpus rows) fall back to token features plus the normalization
// trace's spelling-repair count.
FeatureVector sentence_features(const std::string& sentence, const Lexicon& lex);
std::vector<TrainExample> featurize_corpus(
    const std::vector<std::pair<std::string, LabelSet>>& corpus,
    const Lexicon& lex);

// Fraction of event role/modifier edges of `source` still present in
// `reduced`: events pair up by verb lemma (greedy in introduction order,
// ties preferring the candidate sharing most edge labels), and an edge
// counts as kept when its aligned event has an equally-labeled edge whose
// target is the same referent, one equated by an eq condition, or one the
// trace rewrote the edge to.  A source without event edges scores 1.
double argument_preservation(const Drs& source, const Drs& reduced,
                             const RewriteTrace* trace = nullptr);

// Gold corpus row: sentence TAB comma-separated labels (may be empty) TAB
// expected ACE output.
struct GoldEntry {
  std::string sentence;
  LabelSet labels;
  std::string expected_ace;
  bool operator==(const GoldEntry&) const = default;
};
struct GoldFormatError : Error {
  int line;
  GoldFormatError(int l, const std::string& msg)
      : Error("gold line " + std::to_string(l) + ": " + msg), line(l) {}
};
std::vector<GoldEntry> parse_gold(std::string_view text);
std::vector<GoldEntry> load_gold(const std::string& path);

// Aggregate quality of the pipeline against a gold corpus.  The run always
// produces ACE and uses the configured model's predictions for the
// classification metrics.  Failed sentences count as ACE mismatches and as
// preservation 0.  Empty gold yields all-zero counts.
struct CorpusReport {
  int sentences = 0;
  int failed = 0;
  std::map<ReductionLabel, LabelMetrics> per_label;
  LabelMetrics micro;
  double mean_preservation = 0.0;
  double ace_exact_match = 0.0;
  int ambiguous_anaphora = 0;
  std::map<std::string, long long> total_us;
  std::map<std::string, double> mean_us;
};
CorpusReport eval_corpus(const Pipeline& p, const std::vector<GoldEntry>& gold);
std::string format_corpus_report(const CorpusReport& r);  // human table
std::string corpus_report_json(const CorpusReport& r, bool with_timings = true);

// Question answering over a facts file: mode Model evaluates the question
// against the fact base as a finite model; mode Csp compiles it to a
// constraint problem and enumerates solutions.
enum class ReasonMode { Model, Csp };
struct ReasonResult {
  std::vector<std::string> answers;        // Model mode, sorted
  std::vector<csp::Assignment> solutions;  // Csp mode, solver order
};
ReasonResult reason(const Pipeline& p, const std::string& question,
                    const fol::FiniteModel& facts, ReasonMode mode);

}  // namespace nl2cnl
