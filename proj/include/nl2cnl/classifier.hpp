#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "nl2cnl/frontend.hpp"
#include "nl2cnl/lexicon.hpp"

namespace nl2cnl {

// Why a sentence needs reduction.  One sentence may have several reasons, so
// classification is multi-label: one linear head per label.
enum class ReductionLabel { Ambiguous, Colloquialism, Jargon, Workaround };

inline constexpr std::array<ReductionLabel, 4> kAllLabels = {
    ReductionLabel::Ambiguous, ReductionLabel::Colloquialism,
    ReductionLabel::Jargon, ReductionLabel::Workaround};

std::string_view to_string(ReductionLabel l);
std::optional<ReductionLabel> reduction_label_from_string(std::string_view s);

using LabelSet = std::set<ReductionLabel>;

// Sparse features keyed by name; the dictionary that fixes indices is built
// at training time and frozen into the model.
using FeatureVector = std::map<std::string, double>;

// Token unigrams ("u:"), adjacent bigrams ("b:"), lexicon category tags per
// token ("c:", "c:oov" for unknown words), and three 0/1 flags ("f:").
FeatureVector extract_features(const std::vector<std::string>& tokens,
                               const AnalysisFlags& flags, const Lexicon& lexicon);

struct Hyper {
  int epochs = 200;
  double learning_rate = 0.1;
  double lambda = 1e-3;
  bool operator==(const Hyper&) const = default;
};

struct LinearModel {
  Hyper hyper;
  std::uint64_t seed = 7;
  std::vector<std::string> feature_names;       // index -> name
  std::map<std::string, std::size_t> feature_index;
  struct Head {
    double bias = 0.0;
    std::vector<double> weights;
    bool operator==(const Head&) const = default;
  };
  std::array<Head, 4> heads;  // kAllLabels order
  bool operator==(const LinearModel&) const = default;
};

struct TrainExample {
  FeatureVector features;
  LabelSet labels;
};

struct EmptyDataset : Error {
  EmptyDataset() : Error("empty dataset") {}
};
struct InvalidHyper : Error {
  explicit InvalidHyper(const std::string& what) : Error("bad hyperparameter: " + what) {}
};
struct ModelFormatError : Error {
  int line;
  ModelFormatError(int l, const std::string& msg)
      : Error("model line " + std::to_string(l) + ": " + msg), line(l) {}
};
struct DatasetError : Error {
  int line;
  DatasetError(int l, const std::string& msg)
      : Error("dataset line " + std::to_string(l) + ": " + msg), line(l) {}
};

// One-vs-rest hinge loss, subgradient descent with per-epoch 1/t learning
// rate decay and L2 shrinkage.  The example order is reshuffled each epoch by
// a single mt19937 stream seeded with `seed`, so training is bit-for-bit
// reproducible.
LinearModel train(const std::vector<TrainExample>& data, const Hyper& hyper = {},
                  std::uint64_t seed = 7);

// Scores for all four labels in declaration order.  Features absent from the
// model's dictionary are ignored.
std::vector<std::pair<ReductionLabel, double>> predict(const LinearModel& model,
                                                       const FeatureVector& fv);
// Labels whose score is strictly positive.
LabelSet predict_labels(const LinearModel& model, const FeatureVector& fv);

struct LabelMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool degenerate = false;  // a denominator was zero somewhere
  int tp = 0, fp = 0, fn = 0;
};
struct EvalReport {
  std::map<ReductionLabel, LabelMetrics> per_label;
  LabelMetrics micro;  // from summed counts
  double subset_accuracy = 0.0;  // exact label-set matches / examples
};
EvalReport evaluate(const LinearModel& model, const std::vector<TrainExample>& data);

// Versioned plain-text format; numbers print with enough digits to
// round-trip doubles exactly.
std::string serialize_model(const LinearModel& model);
LinearModel parse_model(std::string_view text);
void save_model(const LinearModel& model, const std::string& path);
LinearModel load_model(const std::string& path);

// Labeled sentence corpus: one "text<TAB>label,label" line per example; the
// label column may be empty for sentences needing no reduction.
std::vector<std::pair<std::string, LabelSet>> parse_labeled_corpus(
    std::string_view text);

}  // namespace nl2cnl
