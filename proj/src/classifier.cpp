#include "nl2cnl/classifier.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

namespace nl2cnl {

std::string_view to_string(ReductionLabel l) {
  switch (l) {
    case ReductionLabel::Ambiguous: return "ambiguous";
    case ReductionLabel::Colloquialism: return "colloquialism";
    case ReductionLabel::Jargon: return "jargon";
    case ReductionLabel::Workaround: return "workaround";
  }
  return "?";
}

std::optional<ReductionLabel> reduction_label_from_string(std::string_view s) {
  for (ReductionLabel l : kAllLabels) {
    if (to_string(l) == s) return l;
  }
  return std::nullopt;
}

FeatureVector extract_features(const std::vector<std::string>& tokens,
                               const AnalysisFlags& flags, const Lexicon& lexicon) {
  FeatureVector fv;
  for (const auto& t : tokens) {
    fv["u:" + t] += 1.0;
    auto entries = lexicon.find_all(t);
    if (entries.empty() && lexicon.verb_by_third_singular(t))
      fv["c:verb"] += 1.0;
    else if (entries.empty())
      fv["c:oov"] += 1.0;
    else
      for (const auto* e : entries)
        fv["c:" + std::string(to_string(kind_of(e->category)))] += 1.0;
  }
  for (size_t i = 0; i + 1 < tokens.size(); ++i)
    fv["b:" + tokens[i] + "_" + tokens[i + 1]] += 1.0;
  if (flags.ambiguous_anaphora) fv["f:ambiguous_anaphora"] = 1.0;
  if (flags.oov_count > 0) fv["f:oov"] = 1.0;
  if (flags.multiple_attachments) fv["f:multiple_attachments"] = 1.0;
  return fv;
}

namespace {

using SparseRow = std::vector<std::pair<std::size_t, double>>;

SparseRow to_sparse(const FeatureVector& fv,
                    const std::map<std::string, std::size_t>& index) {
  SparseRow row;
  for (const auto& [name, value] : fv) {
    auto it = index.find(name);
    if (it != index.end()) row.emplace_back(it->second, value);
  }
  std::sort(row.begin(), row.end());
  return row;
}

double raw_score(const LinearModel::Head& head, const SparseRow& row) {
  double s = head.bias;
  for (const auto& [idx, val] : row) s += head.weights[idx] * val;
  return s;
}

}  // namespace

LinearModel train(const std::vector<TrainExample>& data, const Hyper& hyper,
                  std::uint64_t seed) {
  if (data.empty()) throw EmptyDataset();
  if (hyper.epochs <= 0) throw InvalidHyper("epochs must be positive");
  if (hyper.learning_rate <= 0.0) throw InvalidHyper("learning rate must be positive");
  if (hyper.lambda < 0.0) throw InvalidHyper("lambda must be nonnegative");

  LinearModel model;
  model.hyper = hyper;
  model.seed = seed;
  {
    std::set<std::string> names;
    for (const auto& ex : data)
      for (const auto& [name, v] : ex.features) names.insert(name);
    model.feature_names.assign(names.begin(), names.end());
    for (std::size_t i = 0; i < model.feature_names.size(); ++i)
      model.feature_index[model.feature_names[i]] = i;
  }
  for (auto& head : model.heads)
    head.weights.assign(model.feature_names.size(), 0.0);

  std::vector<SparseRow> rows;
  rows.reserve(data.size());
  for (const auto& ex : data) rows.push_back(to_sparse(ex.features, model.feature_index));

  std::mt19937 rng(static_cast<std::mt19937::result_type>(seed));
  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 1; epoch <= hyper.epochs; ++epoch) {
    double eta = hyper.learning_rate / epoch;
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t i : order) {
      const SparseRow& row = rows[i];
      for (std::size_t li = 0; li < kAllLabels.size(); ++li) {
        auto& head = model.heads[li];
        double y = data[i].labels.count(kAllLabels[li]) ? 1.0 : -1.0;
        double margin = y * raw_score(head, row);
        // L2 shrinkage applies every step; the loss term only within margin.
        double shrink = 1.0 - eta * hyper.lambda;
        for (double& w : head.weights) w *= shrink;
        if (margin < 1.0) {
          for (const auto& [idx, val] : row) head.weights[idx] += eta * y * val;
          head.bias += eta * y;
        }
      }
    }
  }
  return model;
}

std::vector<std::pair<ReductionLabel, double>> predict(const LinearModel& model,
                                                       const FeatureVector& fv) {
  SparseRow row = to_sparse(fv, model.feature_index);
  std::vector<std::pair<ReductionLabel, double>> out;
  for (std::size_t li = 0; li < kAllLabels.size(); ++li)
    out.emplace_back(kAllLabels[li], raw_score(model.heads[li], row));
  return out;
}

LabelSet predict_labels(const LinearModel& model, const FeatureVector& fv) {
  LabelSet out;
  for (const auto& [label, score] : predict(model, fv)) {
    if (score > 0.0) out.insert(label);
  }
  return out;
}

EvalReport evaluate(const LinearModel& model, const std::vector<TrainExample>& data) {
  if (data.empty()) throw EmptyDataset();
  EvalReport report;
  std::map<ReductionLabel, std::array<int, 3>> counts;  // tp, fp, fn
  int exact = 0;
  for (const auto& ex : data) {
    LabelSet got = predict_labels(model, ex.features);
    if (got == ex.labels) ++exact;
    for (ReductionLabel l : kAllLabels) {
      bool truth = ex.labels.count(l);
      bool pred = got.count(l);
      if (pred && truth) ++counts[l][0];
      else if (pred) ++counts[l][1];
      else if (truth) ++counts[l][2];
    }
  }
  auto metric = [](int tp, int fp, int fn) {
    LabelMetrics m;
    m.tp = tp;
    m.fp = fp;
    m.fn = fn;
    if (tp + fp > 0) m.precision = double(tp) / (tp + fp);
    else m.degenerate = true;
    if (tp + fn > 0) m.recall = double(tp) / (tp + fn);
    else m.degenerate = true;
    if (m.precision + m.recall > 0.0)
      m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
    else
      m.degenerate = true;
    return m;
  };
  int stp = 0, sfp = 0, sfn = 0;
  for (ReductionLabel l : kAllLabels) {
    auto [tp, fp, fn] = counts[l];
    report.per_label[l] = metric(tp, fp, fn);
    stp += tp;
    sfp += fp;
    sfn += fn;
  }
  report.micro = metric(stp, sfp, sfn);
  report.subset_accuracy = double(exact) / double(data.size());
  return report;
}

namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string serialize_model(const LinearModel& model) {
  std::ostringstream os;
  os << "svmmodel v1\n";
  os << "epochs " << model.hyper.epochs << "\n";
  os << "lr " << fmt_double(model.hyper.learning_rate) << "\n";
  os << "lambda " << fmt_double(model.hyper.lambda) << "\n";
  os << "seed " << model.seed << "\n";
  os << "features " << model.feature_names.size() << "\n";
  for (std::size_t i = 0; i < model.feature_names.size(); ++i)
    os << "feature " << i << " " << model.feature_names[i] << "\n";
  for (std::size_t li = 0; li < kAllLabels.size(); ++li) {
    os << "head " << to_string(kAllLabels[li]) << " "
       << fmt_double(model.heads[li].bias);
    for (double w : model.heads[li].weights) os << " " << fmt_double(w);
    os << "\n";
  }
  return os.str();
}

LinearModel parse_model(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  auto next = [&]() -> bool {
    ++line_no;
    return static_cast<bool>(std::getline(in, line));
  };
  auto fail = [&](const std::string& msg) -> void {
    throw ModelFormatError(line_no, msg);
  };
  if (!next() || line != "svmmodel v1") fail("expected 'svmmodel v1'");
  LinearModel model;
  auto read_kv = [&](const std::string& key) -> std::string {
    if (!next()) fail("unexpected end of model");
    std::istringstream ls(line);
    std::string k, v;
    ls >> k >> v;
    if (k != key || v.empty()) fail("expected '" + key + "'");
    return v;
  };
  try {
    model.hyper.epochs = std::stoi(read_kv("epochs"));
    model.hyper.learning_rate = std::stod(read_kv("lr"));
    model.hyper.lambda = std::stod(read_kv("lambda"));
    model.seed = std::stoull(read_kv("seed"));
  } catch (const ModelFormatError&) {
    throw;
  } catch (const std::exception&) {
    throw ModelFormatError(line_no, "bad number");
  }
  std::size_t nfeat = 0;
  try {
    nfeat = std::stoul(read_kv("features"));
  } catch (const ModelFormatError&) {
    throw;
  } catch (const std::exception&) {
    throw ModelFormatError(line_no, "bad feature count");
  }
  model.feature_names.resize(nfeat);
  for (std::size_t i = 0; i < nfeat; ++i) {
    if (!next()) fail("unexpected end of model");
    std::istringstream ls(line);
    std::string tag, name;
    std::size_t idx = 0;
    ls >> tag >> idx >> name;
    if (tag != "feature" || idx != i || name.empty()) fail("bad feature line");
    model.feature_names[i] = name;
    model.feature_index[name] = i;
  }
  if (model.feature_index.size() != nfeat) fail("duplicate feature name");
  for (std::size_t li = 0; li < kAllLabels.size(); ++li) {
    if (!next()) fail("unexpected end of model");
    std::istringstream ls(line);
    std::string tag, label;
    ls >> tag >> label;
    if (tag != "head" || label != to_string(kAllLabels[li]))
      fail("expected head for " + std::string(to_string(kAllLabels[li])));
    auto& head = model.heads[li];
    if (!(ls >> head.bias)) fail("missing bias");
    head.weights.resize(nfeat);
    for (std::size_t i = 0; i < nfeat; ++i) {
      if (!(ls >> head.weights[i])) fail("missing weight");
    }
    double extra;
    if (ls >> extra) fail("trailing weights");
  }
  if (next()) {
    if (!line.empty()) fail("trailing content");
  }
  return model;
}

void save_model(const LinearModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write model file: " + path);
  out << serialize_model(model);
}

LinearModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open model file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_model(buf.str());
}

std::vector<std::pair<std::string, LabelSet>> parse_labeled_corpus(
    std::string_view text) {
  std::vector<std::pair<std::string, LabelSet>> out;
  int line_no = 0;
  size_t pos = 0;
  while (pos <= text.size()) {
    size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string line(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') {
      if (pos > text.size()) break;
      continue;
    }
    size_t tab = line.find('\t');
    if (tab == std::string::npos)
      throw DatasetError(line_no, "expected text<TAB>labels");
    std::string sentence = line.substr(0, tab);
    std::string labels = line.substr(tab + 1);
    if (sentence.empty()) throw DatasetError(line_no, "empty text");
    LabelSet set;
    size_t lpos = 0;
    while (lpos < labels.size()) {
      size_t comma = labels.find(',', lpos);
      if (comma == std::string::npos) comma = labels.size();
      std::string one = labels.substr(lpos, comma - lpos);
      lpos = comma + 1;
      if (one.empty()) continue;
      auto l = reduction_label_from_string(one);
      if (!l) throw DatasetError(line_no, "unknown label: " + one);
      set.insert(*l);
    }
    out.emplace_back(std::move(sentence), std::move(set));
    if (pos > text.size()) break;
  }
  return out;
}

}  // namespace nl2cnl
