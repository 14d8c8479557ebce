#include "nl2cnl/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <istream>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "nl2cnl/drs_text.hpp"

namespace nl2cnl {

using nlohmann::json;

std::string_view to_string(OutputMode m) {
  switch (m) {
    case OutputMode::Ace: return "ace";
    case OutputMode::Drs: return "drs";
    case OutputMode::Fol: return "fol";
    case OutputMode::All: return "all";
  }
  return "?";
}

std::optional<OutputMode> output_mode_from_string(std::string_view s) {
  if (s == "ace") return OutputMode::Ace;
  if (s == "drs") return OutputMode::Drs;
  if (s == "fol") return OutputMode::Fol;
  if (s == "all") return OutputMode::All;
  return std::nullopt;
}

// ---------------------------------------------------------------- config ---

namespace {

std::string trim(std::string_view s) {
  size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return "";
  size_t e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string read_file(const std::string& path, const char* what) {
  std::ifstream in(path);
  if (!in.good()) throw ConfigError(std::string(what) + " not readable: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

PipelineConfig parse_config(std::string_view text) {
  PipelineConfig cfg;
  bool have_lexicon = false, have_rules = false;
  int lineno = 0;
  size_t from = 0;
  while (from <= text.size()) {
    size_t to = text.find('\n', from);
    if (to == std::string_view::npos) to = text.size();
    std::string line = trim(text.substr(from, to - from));
    from = to + 1;
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key=value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key == "lexicon") {
      cfg.lexicon = value;
      have_lexicon = !value.empty();
    } else if (key == "rules") {
      cfg.rules = value;
      have_rules = !value.empty();
    } else if (key == "model") {
      if (!value.empty()) cfg.model = value;
    } else if (key == "max_iterations") {
      try {
        size_t used = 0;
        cfg.max_iterations = std::stoi(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
      } catch (const std::exception&) {
        throw ConfigError("max_iterations must be an integer, got '" + value + "'");
      }
      if (cfg.max_iterations <= 0)
        throw ConfigError("max_iterations must be positive");
    } else if (key == "output") {
      auto m = output_mode_from_string(value);
      if (!m) throw ConfigError("output must be ace|drs|fol|all, got '" + value + "'");
      cfg.output = *m;
    } else if (key == "strict") {
      if (value == "true") cfg.strict = true;
      else if (value == "false") cfg.strict = false;
      else throw ConfigError("strict must be true|false, got '" + value + "'");
    } else {
      throw ConfigError("unknown key '" + key + "'");
    }
  }
  if (!have_lexicon) throw ConfigError("missing required key 'lexicon'");
  if (!have_rules) throw ConfigError("missing required key 'rules'");
  return cfg;
}

PipelineConfig load_config(const std::string& path) {
  PipelineConfig cfg = parse_config(read_file(path, "config file"));
  // Paths inside a config are relative to the config itself, so a config can
  // live next to its data no matter where the tool runs.
  std::filesystem::path base = std::filesystem::path(path).parent_path();
  auto resolve = [&](std::string& p) {
    if (!p.empty() && std::filesystem::path(p).is_relative())
      p = (base / p).string();
  };
  resolve(cfg.lexicon);
  resolve(cfg.rules);
  if (cfg.model) resolve(*cfg.model);
  return cfg;
}

Pipeline load_pipeline(const PipelineConfig& cfg) {
  Pipeline p;
  p.cfg = cfg;
  try {
    p.lexicon = Lexicon::load_file(cfg.lexicon);
  } catch (const Error& e) {
    throw ConfigError("lexicon " + cfg.lexicon + ": " + e.what());
  }
  try {
    p.rules = load_rules(cfg.rules);
  } catch (const Error& e) {
    throw ConfigError("rules " + cfg.rules + ": " + e.what());
  }
  if (cfg.model) {
    try {
      p.model = load_model(*cfg.model);
    } catch (const Error& e) {
      throw ConfigError("model " + *cfg.model + ": " + e.what());
    }
  }
  return p;
}

Pipeline load_pipeline_file(const std::string& config_path) {
  return load_pipeline(load_config(config_path));
}

// ----------------------------------------------------------- per sentence ---

namespace {

// Records the wall time of one stage even when the stage throws.
class StageTimer {
 public:
  StageTimer(SentenceReport& r, const char* name)
      : r_(r), name_(name), t0_(std::chrono::steady_clock::now()) {}
  ~StageTimer() {
    auto us = std::chrono::duration_cast<std::chrono::microseconds>(
                  std::chrono::steady_clock::now() - t0_)
                  .count();
    r_.timings_us[name_] += us;
  }

 private:
  SentenceReport& r_;
  const char* name_;
  std::chrono::steady_clock::time_point t0_;
};

template <class F>
auto timed(SentenceReport& r, const char* name, F&& f) {
  StageTimer t(r, name);
  return f();
}

std::string error_kind_of(const Error& e) {
  if (dynamic_cast<const UnknownToken*>(&e)) return "UnknownToken";
  if (dynamic_cast<const EmptyInput*>(&e)) return "EmptyInput";
  if (dynamic_cast<const ParseFailure*>(&e)) return "ParseFailure";
  if (dynamic_cast<const ValencyMismatch*>(&e)) return "ValencyMismatch";
  if (dynamic_cast<const NoAntecedent*>(&e)) return "NoAntecedent";
  if (dynamic_cast<const NotVerbalizable*>(&e)) return "NotVerbalizable";
  if (dynamic_cast<const IterationBudgetExceeded*>(&e))
    return "IterationBudgetExceeded";
  if (dynamic_cast<const ImproperResult*>(&e)) return "ImproperResult";
  if (dynamic_cast<const fol::QuestionNotTranslatable*>(&e))
    return "QuestionNotTranslatable";
  if (dynamic_cast<const ImproperDrs*>(&e) ||
      dynamic_cast<const fol::ImproperDrs*>(&e))
    return "ImproperDrs";
  return "Error";
}

int spelling_repairs(const NormalizationTrace& t) {
  int n = 0;
  for (const auto& s : t.steps)
    if (s.reason == NormalizeReason::Spelling) ++n;
  return n;
}

// Classification through the rest of the pipeline, starting from a resolved
// DRS already stored in r.source.  Everything before that differs between
// plain and discourse mode.
void run_back_half(const Pipeline& p, SentenceReport& r, std::string& stage) {
  stage = "classify";
  timed(r, "classify", [&] {
    if (p.model) {
      FeatureVector fv = extract_features(r.tokens, r.flags, p.lexicon);
      r.scores = predict(*p.model, fv);
      r.labels = predict_labels(*p.model, fv);
    } else {
      r.labels = LabelSet(kAllLabels.begin(), kAllLabels.end());
    }
    return 0;
  });

  stage = "rewrite";
  RewriteResult res = timed(r, "rewrite", [&] {
    return apply_rules(p.rules, r.source, r.labels, p.cfg.max_iterations);
  });
  r.reduced = std::move(res.drs);
  r.rewrite = std::move(res.trace);

  const OutputMode mode = p.cfg.output;
  if (mode == OutputMode::Ace || mode == OutputMode::All) {
    stage = "verbalize";
    try {
      r.ace = timed(r, "verbalize", [&] { return verbalize(r.reduced, p.lexicon); });
      r.conformance =
          timed(r, "check", [&] { return check_ace(r.ace, p.lexicon); });
    } catch (const NotVerbalizable& e) {
      if (p.cfg.strict) throw;
      r.warnings.push_back(e.what());
    }
  }
  if (mode == OutputMode::Fol || mode == OutputMode::All) {
    stage = "translate";
    try {
      fol::Translation t =
          timed(r, "translate", [&] { return fol::to_fol(r.reduced); });
      r.fol = std::move(t.formula);
      for (auto& w : t.warnings) r.warnings.push_back(std::move(w));
    } catch (const Error& e) {
      if (p.cfg.strict) throw;
      r.warnings.push_back(e.what());
    }
  }
}

SentenceReport process_sentence(const Pipeline& p, int id, const std::string& line) {
  SentenceReport r;
  r.id = id;
  r.raw = line;
  std::string stage = "normalize";
  try {
    auto [tokens, trace] =
        timed(r, "normalize", [&] { return normalize(line, p.lexicon); });
    r.tokens = std::move(tokens);
    r.normalization = std::move(trace);

    stage = "analyze";
    auto [d0, flags0] =
        timed(r, "analyze", [&] { return analyze(r.tokens, p.lexicon); });

    stage = "anaphora";
    auto [d1, flags1] = timed(r, "anaphora", [&] {
      return resolve_anaphora(d0, flags0, p.lexicon);
    });
    flags1.oov_count = spelling_repairs(r.normalization);
    r.flags = std::move(flags1);
    r.source = std::move(d1);

    run_back_half(p, r, stage);
  } catch (const Error& e) {
    r.ok = false;
    r.error = e.what();
    r.error_kind = error_kind_of(e);
    r.failed_stage = stage;
  }
  return r;
}

// ------------------------------------------------------------- discourse ---

// Replaces uses of referent `from` with `to` inside a condition list, leaving
// sub-boxes that redeclare `from` alone.
void replace_uses(std::vector<Condition>& conds, const std::string& from,
                  const std::string& to);

void replace_in_box(Drs& d, const std::string& from, const std::string& to) {
  for (const auto& r : d.referents)
    if (r.name == from) return;  // shadowed
  replace_uses(d.conditions, from, to);
}

void replace_uses(std::vector<Condition>& conds, const std::string& from,
                  const std::string& to) {
  auto fix = [&](Referent& r) {
    if (r.name == from) r.name = to;
  };
  for (auto& c : conds) {
    if (auto* p = std::get_if<Pred>(&c)) {
      fix(p->ref);
    } else if (auto* n = std::get_if<Named>(&c)) {
      fix(n->ref);
    } else if (auto* rl = std::get_if<Rel>(&c)) {
      fix(rl->first);
      fix(rl->second);
    } else if (auto* eq = std::get_if<Eq>(&c)) {
      fix(eq->first);
      fix(eq->second);
    } else if (auto* nt = std::get_if<Not>(&c)) {
      replace_in_box(*nt->inner, from, to);
    } else if (auto* ps = std::get_if<Pos>(&c)) {
      replace_in_box(*ps->inner, from, to);
    } else if (auto* im = std::get_if<Imp>(&c)) {
      replace_in_box(*im->antecedent, from, to);
      bool shadowed = false;
      for (const auto& r : im->antecedent->referents)
        if (r.name == from) shadowed = true;
      if (!shadowed) replace_in_box(*im->consequent, from, to);
    } else if (auto* o = std::get_if<Or>(&c)) {
      replace_in_box(*o->left, from, to);
      replace_in_box(*o->right, from, to);
    } else if (auto* w = std::get_if<Whq>(&c)) {
      if (w->ref.name != from) replace_in_box(*w->body, from, to);
    }
  }
}

std::set<std::string> names_in(const Drs& d) {
  std::set<std::string> out;
  for_each_box(d, [&](const Drs& box) {
    for (const auto& r : box.referents) out.insert(r.name);
    for (const auto& c : box.conditions) {
      if (const auto* p = std::get_if<Pred>(&c)) out.insert(p->ref.name);
      else if (const auto* n = std::get_if<Named>(&c)) out.insert(n->ref.name);
      else if (const auto* rl = std::get_if<Rel>(&c)) {
        out.insert(rl->first.name);
        out.insert(rl->second.name);
      } else if (const auto* eq = std::get_if<Eq>(&c)) {
        out.insert(eq->first.name);
        out.insert(eq->second.name);
      } else if (const auto* w = std::get_if<Whq>(&c)) {
        out.insert(w->ref.name);
      }
    }
  });
  return out;
}

struct DiscourseState {
  Drs merged;                     // everything so far, anaphora resolved
  std::set<std::string> names;    // every referent name occurring in merged
  // Top-level describing conditions per referent (names and nouns), copied
  // into a later sentence when a pronoun reaches back to the referent.
  std::map<std::string, std::vector<Condition>> described;

  void refresh_descriptions() {
    described.clear();
    for (const auto& c : merged.conditions) {
      if (const auto* p = std::get_if<Pred>(&c)) {
        if (p->sense != kPronounSense &&
            (p->pos == WordPos::Noun || p->pos == WordPos::Adjective))
          described[p->ref.name].push_back(c);
      } else if (const auto* n = std::get_if<Named>(&c)) {
        described[n->ref.name].push_back(c);
      }
    }
  }
};

// Renames referents of `d` that collide with `taken` to fresh names formed by
// bumping the numeric suffix.
Drs avoid_names(const Drs& d, const std::set<std::string>& taken) {
  std::set<std::string> own = names_in(d);
  std::set<std::string> used = own;
  used.insert(taken.begin(), taken.end());
  std::map<std::string, std::string> memo;
  auto rename = [&](const std::string& n) {
    if (!taken.count(n)) return n;
    auto it = memo.find(n);
    if (it != memo.end()) return it->second;
    size_t cut = n.find_last_not_of("0123456789") + 1;
    std::string base = n.substr(0, cut);
    for (int k = 1;; ++k) {
      std::string cand = base + std::to_string(k);
      if (!used.count(cand)) {
        used.insert(cand);
        memo.emplace(n, cand);
        return cand;
      }
    }
  };
  return rename_referents(d, rename);
}

SentenceReport process_discourse_sentence(const Pipeline& p, int id,
                                          const std::string& line,
                                          DiscourseState& ctx) {
  SentenceReport r;
  r.id = id;
  r.raw = line;
  std::string stage = "normalize";
  try {
    auto [tokens, trace] =
        timed(r, "normalize", [&] { return normalize(line, p.lexicon); });
    r.tokens = std::move(tokens);
    r.normalization = std::move(trace);

    stage = "analyze";
    auto [d0, flags0] =
        timed(r, "analyze", [&] { return analyze(r.tokens, p.lexicon); });

    stage = "anaphora";
    Drs resolved;
    AnalysisFlags flags1;
    Drs sentence;
    timed(r, "anaphora", [&] {
      Drs renamed = avoid_names(d0, ctx.names);
      Drs grown = merge(ctx.merged, renamed);
      std::tie(resolved, flags1) = resolve_anaphora(grown, flags0, p.lexicon);

      // This sentence's slice of the grown box.
      sentence.referents.assign(
          resolved.referents.begin() +
              static_cast<long>(ctx.merged.referents.size()),
          resolved.referents.end());
      sentence.conditions.assign(
          resolved.conditions.begin() +
              static_cast<long>(ctx.merged.conditions.size()),
          resolved.conditions.end());

      // Ground pronouns that reached back into earlier sentences: substitute
      // the antecedent for the pronoun referent and copy its description in,
      // so the slice stands on its own.
      std::set<std::string> own;
      for (const auto& ref : sentence.referents) own.insert(ref.name);
      std::vector<std::string> imported;
      for (size_t i = 0; i < sentence.conditions.size();) {
        const auto* eq = std::get_if<Eq>(&sentence.conditions[i]);
        if (!eq || own.count(eq->second.name)) {
          ++i;
          continue;
        }
        std::string pronoun = eq->first.name;
        std::string antecedent = eq->second.name;
        sentence.conditions.erase(sentence.conditions.begin() +
                                  static_cast<long>(i));
        std::erase_if(sentence.referents,
                      [&](const Referent& ref) { return ref.name == pronoun; });
        own.erase(pronoun);
        replace_uses(sentence.conditions, pronoun, antecedent);
        if (!own.count(antecedent)) {
          own.insert(antecedent);
          imported.push_back(antecedent);
        }
      }
      // Prepend imported antecedents and their descriptions, oldest first.
      for (auto it = imported.rbegin(); it != imported.rend(); ++it) {
        auto desc = ctx.described.find(*it);
        if (desc != ctx.described.end())
          sentence.conditions.insert(sentence.conditions.begin(),
                                     desc->second.begin(), desc->second.end());
        sentence.referents.insert(sentence.referents.begin(), Referent{*it});
      }
      return 0;
    });
    flags1.oov_count = spelling_repairs(r.normalization);
    r.flags = std::move(flags1);
    r.source = std::move(sentence);

    ctx.merged = std::move(resolved);
    ctx.names = names_in(ctx.merged);
    ctx.refresh_descriptions();

    run_back_half(p, r, stage);
  } catch (const Error& e) {
    r.ok = false;
    r.error = e.what();
    r.error_kind = error_kind_of(e);
    r.failed_stage = stage;
  }
  return r;
}

bool blank(const std::string& line) {
  return trim(line).empty();
}

}  // namespace

std::vector<SentenceReport> run_pipeline(const Pipeline& p,
                                         const std::vector<std::string>& lines,
                                         bool discourse) {
  std::vector<SentenceReport> reports;
  DiscourseState ctx;
  int lineno = 0;
  for (const auto& line : lines) {
    ++lineno;
    if (blank(line)) continue;  // blank lines separate, they are not sentences
    reports.push_back(discourse
                          ? process_discourse_sentence(p, lineno, line, ctx)
                          : process_sentence(p, lineno, line));
  }
  return reports;
}

std::vector<SentenceReport> run_pipeline(const Pipeline& p, std::istream& input,
                                         bool discourse) {
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(input, line)) lines.push_back(line);
  return run_pipeline(p, lines, discourse);
}

// ----------------------------------------------------------------- report ---

namespace {

json trace_json(const RewriteTrace& t) {
  json steps = json::array();
  for (const auto& s : t.steps) {
    json path = json::array();
    for (const auto& st : s.path) path.push_back({st.cond, st.child});
    steps.push_back({{"rule", s.rule},
                     {"path", std::move(path)},
                     {"fresh", s.fresh_names},
                     {"removed_indices", s.removed_indices},
                     {"lossy", s.lossy}});
  }
  return {{"iterations", t.iterations}, {"steps", std::move(steps)}};
}

}  // namespace

std::string report_json(const SentenceReport& r, bool with_timings) {
  json j;
  j["id"] = r.id;
  j["raw"] = r.raw;
  j["ok"] = r.ok;
  if (!r.ok) {
    j["error"] = r.error;
    j["error_kind"] = r.error_kind;
    j["failed_stage"] = r.failed_stage;
  }
  j["tokens"] = r.tokens;
  json norm = json::array();
  for (const auto& s : r.normalization.steps)
    norm.push_back({{"original", s.original},
                    {"replacement", s.replacement},
                    {"reason", std::string(to_string(s.reason))}});
  j["normalization"] = std::move(norm);
  j["flags"] = {{"ambiguous_anaphora", r.flags.ambiguous_anaphora},
                {"oov_count", r.flags.oov_count},
                {"multiple_attachments", r.flags.multiple_attachments}};
  j["source"] = serialize_drs(r.source);
  json labels = json::array();
  for (auto l : r.labels) labels.push_back(std::string(to_string(l)));
  j["labels"] = std::move(labels);
  json scores = json::object();
  for (const auto& [l, s] : r.scores) scores[std::string(to_string(l))] = s;
  j["scores"] = std::move(scores);
  j["rewrite"] = trace_json(r.rewrite);
  j["reduced"] = serialize_drs(r.reduced);
  j["ace"] = r.ace;
  json viol = json::array();
  for (const auto& [pos, name] : r.conformance.violations)
    viol.push_back({pos, name});
  j["conformance"] = {{"conformant", r.conformance.conformant},
                      {"violations", std::move(viol)}};
  j["fol"] = r.fol ? json(format_formula(*r.fol)) : json();
  j["warnings"] = r.warnings;
  if (with_timings) j["timings_us"] = r.timings_us;
  return j.dump();
}

std::string reports_jsonl(const std::vector<SentenceReport>& rs,
                          bool with_timings) {
  std::string out = R"({"format":"nl2cnl-report","version":1})";
  out += '\n';
  for (const auto& r : rs) {
    out += report_json(r, with_timings);
    out += '\n';
  }
  return out;
}

// ----------------------------------------------------------------- features ---

FeatureVector sentence_features(const std::string& sentence, const Lexicon& lex) {
  auto [tokens, trace] = normalize(sentence, lex);
  AnalysisFlags flags;
  try {
    auto [d, f0] = analyze(tokens, lex);
    flags = resolve_anaphora(d, f0, lex).second;
  } catch (const Error&) {
    // outside the fragment: token features still stand
  }
  flags.oov_count = spelling_repairs(trace);
  return extract_features(tokens, flags, lex);
}

std::vector<TrainExample> featurize_corpus(
    const std::vector<std::pair<std::string, LabelSet>>& corpus,
    const Lexicon& lex) {
  std::vector<TrainExample> out;
  out.reserve(corpus.size());
  for (const auto& [text, labels] : corpus)
    out.push_back({sentence_features(text, lex), labels});
  return out;
}

// --------------------------------------------------- argument preservation ---

namespace {

struct EventEdges {
  std::string ref;
  std::string verb;
  std::vector<std::pair<std::string, std::string>> edges;  // (label, target)
};

std::vector<EventEdges> collect_events(const Drs& d) {
  std::vector<EventEdges> events;
  std::map<std::string, size_t> index;
  for_each_box(d, [&](const Drs& box) {
    for (const auto& c : box.conditions) {
      const auto* p = std::get_if<Pred>(&c);
      if (p && p->pos == WordPos::Verb && !index.count(p->ref.name)) {
        index[p->ref.name] = events.size();
        events.push_back({p->ref.name, p->lemma, {}});
      }
    }
  });
  for_each_box(d, [&](const Drs& box) {
    for (const auto& c : box.conditions) {
      const auto* rl = std::get_if<Rel>(&c);
      if (!rl) continue;
      auto it = index.find(rl->first.name);
      if (it != index.end())
        events[it->second].edges.emplace_back(rl->label, rl->second.name);
    }
  });
  return events;
}

// Union-find over referent names, seeded by eq conditions and (optionally)
// edge retargetings recorded in a rewrite trace.
class RefClasses {
 public:
  void unite(const std::string& a, const std::string& b) {
    std::string ra = find(a), rb = find(b);
    if (ra != rb) parent_[ra] = rb;
  }
  std::string find(const std::string& x) {
    auto it = parent_.find(x);
    if (it == parent_.end()) {
      parent_[x] = x;
      return x;
    }
    if (it->second == x) return x;
    std::string root = find(it->second);
    parent_[x] = root;
    return root;
  }
  void add_eqs(const Drs& d) {
    for_each_box(d, [&](const Drs& box) {
      for (const auto& c : box.conditions)
        if (const auto* eq = std::get_if<Eq>(&c))
          unite(eq->first.name, eq->second.name);
    });
  }
  void add_trace(const RewriteTrace& t) {
    for (const auto& step : t.steps) {
      for (const auto& rem : step.removed) {
        const auto* a = std::get_if<Rel>(&rem);
        if (!a) continue;
        for (const auto& ins : step.inserted) {
          const auto* b = std::get_if<Rel>(&ins);
          if (b && b->label == a->label && b->first == a->first)
            unite(a->second.name, b->second.name);
        }
      }
    }
  }

 private:
  std::map<std::string, std::string> parent_;
};

}  // namespace

double argument_preservation(const Drs& source, const Drs& reduced,
                             const RewriteTrace* trace) {
  for (const Drs* d : {&source, &reduced}) {
    auto free = free_referents(*d);
    if (!free.empty()) throw ImproperDrs(free.begin()->name);
  }

  std::vector<EventEdges> src = collect_events(source);
  std::vector<EventEdges> red = collect_events(reduced);
  size_t total = 0;
  for (const auto& e : src) total += e.edges.size();
  if (total == 0) return 1.0;

  RefClasses classes;
  classes.add_eqs(source);
  classes.add_eqs(reduced);
  if (trace) classes.add_trace(*trace);

  // Pair events up by verb, preferring the candidate that shares the most
  // edge labels; earlier introduction wins ties.
  std::vector<bool> used(red.size(), false);
  size_t matched = 0;
  for (const auto& se : src) {
    int best = -1;
    int best_common = -1;
    for (size_t j = 0; j < red.size(); ++j) {
      if (used[j] || red[j].verb != se.verb) continue;
      std::multiset<std::string> a, b;
      for (const auto& [l, _] : se.edges) a.insert(l);
      for (const auto& [l, _] : red[j].edges) b.insert(l);
      std::vector<std::string> common;
      std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                            std::back_inserter(common));
      if (static_cast<int>(common.size()) > best_common) {
        best_common = static_cast<int>(common.size());
        best = static_cast<int>(j);
      }
    }
    if (best < 0) continue;  // event gone; all its edges count as lost
    used[static_cast<size_t>(best)] = true;

    std::vector<bool> taken(red[static_cast<size_t>(best)].edges.size(), false);
    for (const auto& [label, target] : se.edges) {
      const auto& cand = red[static_cast<size_t>(best)].edges;
      for (size_t k = 0; k < cand.size(); ++k) {
        if (taken[k] || cand[k].first != label) continue;
        if (classes.find(cand[k].second) != classes.find(target)) continue;
        taken[k] = true;
        ++matched;
        break;
      }
    }
  }
  return static_cast<double>(matched) / static_cast<double>(total);
}

// ------------------------------------------------------------------- gold ---

std::vector<GoldEntry> parse_gold(std::string_view text) {
  std::vector<GoldEntry> out;
  int lineno = 0;
  size_t from = 0;
  while (from <= text.size()) {
    size_t to = text.find('\n', from);
    if (to == std::string_view::npos) to = text.size();
    std::string_view line = text.substr(from, to - from);
    from = to + 1;
    ++lineno;
    if (trim(line).empty() || trim(line)[0] == '#') continue;
    size_t t1 = line.find('\t');
    size_t t2 = t1 == std::string_view::npos ? std::string_view::npos
                                             : line.find('\t', t1 + 1);
    if (t2 == std::string_view::npos)
      throw GoldFormatError(lineno, "expected 3 tab-separated fields");
    if (line.find('\t', t2 + 1) != std::string_view::npos)
      throw GoldFormatError(lineno, "expected 3 tab-separated fields");
    GoldEntry entry;
    entry.sentence = trim(line.substr(0, t1));
    entry.expected_ace = trim(line.substr(t2 + 1));
    if (entry.sentence.empty())
      throw GoldFormatError(lineno, "empty sentence field");
    std::string labels = trim(line.substr(t1 + 1, t2 - t1 - 1));
    size_t pos = 0;
    while (pos < labels.size()) {
      size_t comma = labels.find(',', pos);
      if (comma == std::string::npos) comma = labels.size();
      std::string name = trim(labels.substr(pos, comma - pos));
      pos = comma + 1;
      if (name.empty()) continue;
      auto l = reduction_label_from_string(name);
      if (!l) throw GoldFormatError(lineno, "unknown label '" + name + "'");
      entry.labels.insert(*l);
    }
    out.push_back(std::move(entry));
  }
  return out;
}

std::vector<GoldEntry> load_gold(const std::string& path) {
  std::ifstream in(path);
  if (!in.good()) throw GoldFormatError(0, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_gold(ss.str());
}

// ------------------------------------------------------------------- eval ---

namespace {

void finish_metrics(LabelMetrics& m) {
  if (m.tp + m.fp > 0) m.precision = double(m.tp) / (m.tp + m.fp);
  else m.degenerate = true;
  if (m.tp + m.fn > 0) m.recall = double(m.tp) / (m.tp + m.fn);
  else m.degenerate = true;
  if (m.precision + m.recall > 0.0)
    m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
  else
    m.degenerate = true;
}

}  // namespace

CorpusReport eval_corpus(const Pipeline& p, const std::vector<GoldEntry>& gold) {
  // The metrics need ACE output whatever the configured mode asks for.
  Pipeline q = p;
  q.cfg.output = OutputMode::Ace;

  CorpusReport report;
  for (auto l : kAllLabels) report.per_label[l] = LabelMetrics{};
  double preservation_sum = 0.0;
  int exact = 0;
  int id = 0;
  for (const auto& entry : gold) {
    SentenceReport r = process_sentence(q, ++id, entry.sentence);
    ++report.sentences;
    for (const auto& [stage, us] : r.timings_us) report.total_us[stage] += us;
    LabelSet predicted = r.ok ? r.labels : LabelSet{};
    for (auto l : kAllLabels) {
      bool in_pred = predicted.count(l) > 0;
      bool in_gold = entry.labels.count(l) > 0;
      LabelMetrics& m = report.per_label[l];
      if (in_pred && in_gold) ++m.tp;
      else if (in_pred) ++m.fp;
      else if (in_gold) ++m.fn;
    }
    if (!r.ok) {
      ++report.failed;
      continue;  // counts as mismatch and preservation 0
    }
    if (r.flags.ambiguous_anaphora) ++report.ambiguous_anaphora;
    if (r.ace == entry.expected_ace) ++exact;
    preservation_sum += argument_preservation(r.source, r.reduced, &r.rewrite);
  }
  for (auto l : kAllLabels) {
    LabelMetrics& m = report.per_label[l];
    report.micro.tp += m.tp;
    report.micro.fp += m.fp;
    report.micro.fn += m.fn;
    finish_metrics(m);
  }
  finish_metrics(report.micro);
  if (report.sentences > 0) {
    report.mean_preservation = preservation_sum / report.sentences;
    report.ace_exact_match = double(exact) / report.sentences;
    for (const auto& [stage, us] : report.total_us)
      report.mean_us[stage] = double(us) / report.sentences;
  }
  return report;
}

std::string format_corpus_report(const CorpusReport& r) {
  std::ostringstream out;
  out << "sentences           " << r.sentences << '\n';
  out << "failed              " << r.failed << '\n';
  char buf[64];
  auto f3 = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return std::string(buf);
  };
  out << "ace exact match     " << f3(r.ace_exact_match) << '\n';
  out << "mean preservation   " << f3(r.mean_preservation) << '\n';
  out << "ambiguous anaphora  " << r.ambiguous_anaphora << '\n';
  out << '\n';
  out << "label          precision  recall  f1      tp  fp  fn\n";
  auto row = [&](std::string_view name, const LabelMetrics& m) {
    std::snprintf(buf, sizeof buf, "%-14s %-10.3f %-7.3f %-7.3f %-3d %-3d %-3d",
                  std::string(name).c_str(), m.precision, m.recall, m.f1, m.tp,
                  m.fp, m.fn);
    out << buf << '\n';
  };
  for (const auto& [l, m] : r.per_label) row(to_string(l), m);
  row("micro", r.micro);
  if (!r.mean_us.empty()) {
    out << '\n' << "mean stage time (us):";
    for (const auto& [stage, us] : r.mean_us) {
      std::snprintf(buf, sizeof buf, " %s %.0f", stage.c_str(), us);
      out << buf;
    }
    out << '\n';
  }
  return out.str();
}

std::string corpus_report_json(const CorpusReport& r, bool with_timings) {
  json j;
  j["sentences"] = r.sentences;
  j["failed"] = r.failed;
  j["ace_exact_match"] = r.ace_exact_match;
  j["mean_preservation"] = r.mean_preservation;
  j["ambiguous_anaphora"] = r.ambiguous_anaphora;
  auto metrics = [](const LabelMetrics& m) {
    return json{{"precision", m.precision}, {"recall", m.recall},
                {"f1", m.f1},               {"degenerate", m.degenerate},
                {"tp", m.tp},               {"fp", m.fp},
                {"fn", m.fn}};
  };
  json per = json::object();
  for (const auto& [l, m] : r.per_label) per[std::string(to_string(l))] = metrics(m);
  j["per_label"] = std::move(per);
  j["micro"] = metrics(r.micro);
  if (with_timings) {
    j["total_us"] = r.total_us;
    j["mean_us"] = r.mean_us;
  }
  return j.dump();
}

// ----------------------------------------------------------------- reason ---

ReasonResult reason(const Pipeline& p, const std::string& question,
                    const fol::FiniteModel& facts, ReasonMode mode) {
  auto [tokens, trace] = normalize(question, p.lexicon);
  auto [d, flags] = analyze(tokens, p.lexicon);
  auto [q, rflags] = resolve_anaphora(d, flags, p.lexicon);
  ReasonResult result;
  if (mode == ReasonMode::Model) {
    auto answers = fol::answer_query(q, facts);
    result.answers.assign(answers.begin(), answers.end());
  } else {
    result.solutions = csp::solve_csp(csp::compile_csp(q, facts));
  }
  return result;
}

}  // namespace nl2cnl
