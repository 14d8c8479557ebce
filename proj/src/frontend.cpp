#include "nl2cnl/frontend.hpp"

#include <algorithm>
#include <map>
#include <optional>

namespace nl2cnl {

std::string_view to_string(NormalizeReason r) {
  switch (r) {
    case NormalizeReason::Case: return "case";
    case NormalizeReason::Contraction: return "contraction";
    case NormalizeReason::PluralWeekday: return "plural_weekday";
    case NormalizeReason::Spelling: return "spelling";
  }
  return "?";
}

namespace {

const std::map<std::string, std::vector<std::string>>& contractions() {
  static const std::map<std::string, std::vector<std::string>> table = {
      {"doesn't", {"does", "not"}},
      {"don't", {"do", "not"}},
      {"can't", {"can", "not"}},
      {"isn't", {"is", "not"}},
  };
  return table;
}

// Function words the grammar consumes directly; they carry no lexicon entry.
bool grammar_keyword(const std::string& t) {
  static const std::set<std::string> keywords = {"who", "what", "when", "does",
                                                 "not"};
  return keywords.count(t) != 0;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

// Lexicon surfaces at Levenshtein distance exactly one from `tok`.
std::vector<std::string> repair_candidates(const std::string& tok,
                                           const Lexicon& lex) {
  std::vector<std::string> out;
  for (const auto& e : lex.entries()) {
    const std::string& s = e.surface;
    size_t n = tok.size(), m = s.size();
    bool close = false;
    if (n == m) {
      int diff = 0;
      for (size_t i = 0; i < n; ++i) diff += tok[i] != s[i];
      close = diff == 1;
    } else if (n + 1 == m || m + 1 == n) {
      const std::string& shorter = n < m ? tok : s;
      const std::string& longer = n < m ? s : tok;
      size_t i = 0;
      while (i < shorter.size() && shorter[i] == longer[i]) ++i;
      close = shorter.compare(i, std::string::npos, longer, i + 1,
                              std::string::npos) == 0;
    }
    if (close && std::find(out.begin(), out.end(), s) == out.end())
      out.push_back(s);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

std::pair<std::vector<std::string>, NormalizationTrace> normalize(
    std::string_view raw, const Lexicon& lexicon) {
  std::vector<std::string> rough;
  std::string cur;
  for (char c : raw) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      if (!cur.empty()) rough.push_back(std::exchange(cur, {}));
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) rough.push_back(cur);
  // Sentence-final punctuation is expected and not worth a trace entry.
  if (!rough.empty() && (rough.back().back() == '.' || rough.back().back() == '?')) {
    rough.back().pop_back();
    if (rough.back().empty()) rough.pop_back();
  }
  if (rough.empty()) throw EmptyInput();

  std::vector<std::string> tokens;
  NormalizationTrace trace;
  for (const std::string& orig : rough) {
    std::string low = lower(orig);
    if (auto it = contractions().find(low); it != contractions().end()) {
      std::string joined;
      for (const auto& part : it->second) {
        if (!joined.empty()) joined += ' ';
        joined += part;
        tokens.push_back(part);
      }
      trace.steps.push_back({orig, joined, NormalizeReason::Contraction});
      continue;
    }
    if (!lexicon.known(low) && low.size() > 1 && low.back() == 's' &&
        lexicon.find(low.substr(0, low.size() - 1), CatKind::Weekday)) {
      std::string singular = low.substr(0, low.size() - 1);
      trace.steps.push_back({orig, singular, NormalizeReason::PluralWeekday});
      tokens.push_back(std::move(singular));
      continue;
    }
    if (low != orig && !lexicon.find(low, CatKind::ProperName)) {
      trace.steps.push_back({orig, low, NormalizeReason::Case});
    }
    if (!lexicon.known(low) && !grammar_keyword(low)) {
      auto cands = repair_candidates(low, lexicon);
      if (!cands.empty()) {
        trace.steps.push_back({low, cands[0], NormalizeReason::Spelling});
        tokens.push_back(cands[0]);
        continue;
      }
    }
    tokens.push_back(std::move(low));
  }
  return {std::move(tokens), std::move(trace)};
}

// --- sentence analysis ---

namespace {

class Analyzer {
 public:
  Analyzer(const std::vector<std::string>& tokens, const Lexicon& lex)
      : toks_(tokens), lex_(lex) {}

  std::pair<Drs, AnalysisFlags> run() {
    if (toks_.empty()) throw EmptyInput();
    sentence();
    if (pos_ < toks_.size()) fail("end of sentence");
    return {std::move(top_), flags_};
  }

 private:
  const std::vector<std::string>& toks_;
  const Lexicon& lex_;
  size_t pos_ = 0;
  int next_x_ = 1;
  int next_e_ = 1;
  Drs top_;
  AnalysisFlags flags_;

  [[noreturn]] void fail(const std::string& expected) {
    throw ParseFailure(pos_, expected);
  }

  bool done() const { return pos_ >= toks_.size(); }
  const std::string& peek() const {
    static const std::string empty;
    return done() ? empty : toks_[pos_];
  }
  std::string take() { return toks_[pos_++]; }

  // Any in-vocabulary word may appear where the grammar does not expect it;
  // only words absent from the lexicon (and not keywords) are unknown.
  void check_known(const std::string& t) {
    if (!grammar_keyword(t) && !lex_.known(t)) throw UnknownToken(t);
  }

  Referent fresh_x() { return Referent{"x" + std::to_string(next_x_++)}; }
  Referent fresh_e() { return Referent{"e" + std::to_string(next_e_++)}; }

  // Noun phrases may start with the indefinite article, a proper name, a
  // pronoun, or a bare (possibly modified) noun — the input fragment allows
  // "teaches linguistics" even though conformant output requires an article.
  bool starts_np() const {
    if (done()) return false;
    const std::string& t = peek();
    if (const auto* d = lex_.find(t, CatKind::Determiner)) {
      return std::get<DeterminerCat>(d->category).kind ==
             DeterminerKind::Indefinite;
    }
    return lex_.find(t, CatKind::ProperName) || lex_.find(t, CatKind::Pronoun) ||
           lex_.find(t, CatKind::Noun) || lex_.find(t, CatKind::Adjective);
  }

  void sentence() {
    const std::string& t = peek();
    check_known(t);
    if (const auto* det = lex_.find(t, CatKind::Determiner)) {
      auto kind = std::get<DeterminerCat>(det->category).kind;
      if (kind == DeterminerKind::Universal) {
        take();
        Drs ant;
        Referent x = fresh_x();
        ant.referents.push_back(x);
        for (auto& c : nbar(x)) ant.conditions.push_back(std::move(c));
        Drs cons;
        verb_phrase(x, cons);
        top_.conditions.push_back(
            Imp{Box<Drs>(std::move(ant)), Box<Drs>(std::move(cons))});
        return;
      }
      if (kind == DeterminerKind::Negative) {
        take();
        Drs inner;
        Referent x = fresh_x();
        inner.referents.push_back(x);
        for (auto& c : nbar(x)) inner.conditions.push_back(std::move(c));
        verb_phrase(x, inner);
        top_.conditions.push_back(Not{Box<Drs>(std::move(inner))});
        return;
      }
    }
    if (t == "who" || t == "what") {
      take();
      Referent w = fresh_x();
      Drs body;
      verb_phrase(w, body);
      top_.conditions.push_back(Whq{w, Box<Drs>(std::move(body))});
      return;
    }
    if (t == "when") {
      when_question();
      return;
    }
    auto [subject, conds] = noun_phrase(top_);
    for (auto& c : conds) top_.conditions.push_back(std::move(c));
    verb_phrase(subject, top_);
  }

  // Subject-auxiliary inversion: "when can NP VerbBase Args" /
  // "when does NP VerbBase Args".  The moment is a day-typed referent bound
  // by the question operator and attached to the event with an "on" edge.
  void when_question() {
    take();  // when
    Referent w = fresh_x();
    if (done()) fail("'can' or 'does'");
    bool modal;
    if (lex_.find(peek(), CatKind::Modal)) {
      modal = true;
    } else if (peek() == "does") {
      modal = false;
    } else {
      fail("'can' or 'does'");
    }
    take();
    // the whole clause lives inside the question body so it stays
    // self-contained for query answering
    Drs body;
    auto [subject, conds] = noun_phrase(body);
    for (auto& c : conds) body.conditions.push_back(std::move(c));
    const LexEntry* verb = base_verb();
    if (modal) {
      Drs event_box;
      clause(subject, *verb, event_box, w);
      body.conditions.push_back(Pos{Box<Drs>(std::move(event_box))});
    } else {
      clause(subject, *verb, body, w);
    }
    top_.conditions.push_back(Whq{w, Box<Drs>(std::move(body))});
  }

  // Adjective* Noun, as predicates over `x`: noun first, then adjectives in
  // surface order.
  std::vector<Condition> nbar(const Referent& x) {
    std::vector<const LexEntry*> adjs;
    while (!done()) {
      check_known(peek());
      const auto* adj = lex_.find(peek(), CatKind::Adjective);
      if (!adj) break;
      // A word that is both adjective and noun ends the run when it is last.
      if (lex_.find(peek(), CatKind::Noun) &&
          (pos_ + 1 == toks_.size() || !lex_.find(toks_[pos_ + 1], CatKind::Noun)))
        break;
      adjs.push_back(adj);
      take();
    }
    if (done()) fail("noun");
    check_known(peek());
    const auto* noun = lex_.find(peek(), CatKind::Noun);
    if (!noun) fail("noun");
    take();
    std::vector<Condition> out;
    out.push_back(Pred{x, noun->lemma, WordPos::Noun, noun->sense});
    for (const auto* a : adjs)
      out.push_back(Pred{x, a->lemma, WordPos::Adjective, a->sense});
    return out;
  }

  // Declares the referent in `box` immediately (introduction order) and
  // returns its conditions for the caller to place.
  std::pair<Referent, std::vector<Condition>> noun_phrase(Drs& box) {
    if (done()) fail("noun phrase");
    const std::string& t = peek();
    check_known(t);
    if (const auto* det = lex_.find(t, CatKind::Determiner)) {
      if (std::get<DeterminerCat>(det->category).kind !=
          DeterminerKind::Indefinite)
        fail("noun phrase");
      take();
      Referent x = fresh_x();
      box.referents.push_back(x);
      return {x, nbar(x)};
    }
    if (const auto* name = lex_.find(t, CatKind::ProperName)) {
      take();
      Referent x = fresh_x();
      box.referents.push_back(x);
      return {x,
              {Named{x, name->lemma, std::get<ProperNameCat>(name->category).cls}}};
    }
    if (const auto* pron = lex_.find(t, CatKind::Pronoun)) {
      take();
      Referent x = fresh_x();
      box.referents.push_back(x);
      return {x, {Pred{x, pron->lemma, WordPos::Noun, kPronounSense}}};
    }
    if (lex_.find(t, CatKind::Noun) || lex_.find(t, CatKind::Adjective)) {
      flags_.bare_noun_positions.push_back(pos_);
      Referent x = fresh_x();
      box.referents.push_back(x);
      return {x, nbar(x)};
    }
    fail("noun phrase");
  }

  const LexEntry* base_verb() {
    if (done()) fail("verb");
    check_known(peek());
    const auto* verb = lex_.find(peek(), CatKind::Verb);
    if (!verb) fail("verb");
    take();
    return verb;
  }

  void verb_phrase(const Referent& subject, Drs& box) {
    if (done()) fail("verb phrase");
    check_known(peek());
    if (lex_.find(peek(), CatKind::Modal)) {
      take();
      const LexEntry* verb = base_verb();
      Drs event_box;
      clause(subject, *verb, event_box, std::nullopt);
      box.conditions.push_back(Pos{Box<Drs>(std::move(event_box))});
      return;
    }
    if (peek() == "does") {
      take();
      if (peek() != "not") fail("'not'");
      take();
      const LexEntry* verb = base_verb();
      Drs event_box;
      clause(subject, *verb, event_box, std::nullopt);
      box.conditions.push_back(Not{Box<Drs>(std::move(event_box))});
      return;
    }
    const auto* verb = lex_.verb_by_third_singular(peek());
    if (!verb) {
      if (lex_.find(peek(), CatKind::Verb)) fail("third-person singular verb");
      fail("verb");
    }
    take();
    clause(subject, *verb, box, std::nullopt);
  }

  void object(Drs& box, const Referent& e, const std::string& role) {
    auto [ref, conds] = noun_phrase(box);
    box.conditions.push_back(Rel{e, ref, role});
    for (auto& c : conds) box.conditions.push_back(std::move(c));
  }

  // Event core: verb predicate, agent edge, objects per valency, trailing
  // prepositional phrases, and the optional question moment.
  void clause(const Referent& subject, const LexEntry& verb, Drs& box,
              std::optional<Referent> when_ref) {
    const auto& vc = std::get<VerbCat>(verb.category);
    Referent e = fresh_e();
    box.referents.push_back(e);
    box.conditions.push_back(Pred{e, verb.lemma, WordPos::Verb, verb.sense});
    box.conditions.push_back(Rel{e, subject, "agent"});
    int wanted = vc.valency == Valency::Intransitive ? 0
                 : vc.valency == Valency::Transitive ? 1
                                                     : 2;
    if (wanted == 1) {
      if (!starts_np()) throw ValencyMismatch(verb.lemma, 1, 0);
      object(box, e, "patient");
    } else if (wanted == 2) {
      if (!starts_np()) throw ValencyMismatch(verb.lemma, 2, 0);
      // The first object's role depends on what follows: a second object
      // means dative order ("gives ada a book"), a "to" phrase means the
      // first object was the thing given.
      auto [r1, c1] = noun_phrase(box);
      if (starts_np()) {
        box.conditions.push_back(Rel{e, r1, "recipient"});
        for (auto& c : c1) box.conditions.push_back(std::move(c));
        object(box, e, "patient");
      } else if (peek() == "to") {
        box.conditions.push_back(Rel{e, r1, "patient"});
        for (auto& c : c1) box.conditions.push_back(std::move(c));
        take();
        object(box, e, "recipient");
      } else {
        throw ValencyMismatch(verb.lemma, 2, 1);
      }
    }
    if (starts_np()) {
      int got = wanted;
      while (starts_np()) {
        Drs scratch;
        (void)noun_phrase(scratch);
        ++got;
      }
      throw ValencyMismatch(verb.lemma, wanted, got);
    }
    int pp_count = 0;
    while (!done()) {
      check_known(peek());
      const auto* prep = lex_.find(peek(), CatKind::Preposition);
      if (!prep) break;
      take();
      ++pp_count;
      if (!done() && lex_.find(peek(), CatKind::Weekday)) {
        const auto* day = lex_.find(take(), CatKind::Weekday);
        Referent x = fresh_x();
        box.referents.push_back(x);
        box.conditions.push_back(Rel{e, x, prep->lemma});
        box.conditions.push_back(Pred{x, day->lemma, WordPos::Noun, day->sense});
      } else {
        auto [ref, conds] = noun_phrase(box);
        box.conditions.push_back(Rel{e, ref, prep->lemma});
        for (auto& c : conds) box.conditions.push_back(std::move(c));
      }
    }
    if (vc.valency == Valency::Ditransitive && pp_count > 1)
      flags_.multiple_attachments = true;
    if (when_ref) {
      box.conditions.push_back(Rel{e, *when_ref, "on"});
      box.conditions.push_back(Pred{*when_ref, "day", WordPos::Noun, 0});
    }
  }
};

}  // namespace

std::pair<Drs, AnalysisFlags> analyze(const std::vector<std::string>& tokens,
                                      const Lexicon& lexicon) {
  return Analyzer(tokens, lexicon).run();
}

// --- anaphora ---

namespace {

struct DeclInfo {
  int index = 0;  // introduction order, depth-first
  std::optional<Agreement> agreement;
  bool is_event = false;
  bool is_pronoun = false;
};

using ScopeFrame = std::map<std::string, int>;  // name -> decl id

class AnaphoraPass {
 public:
  AnaphoraPass(const Lexicon& lex, AnalysisFlags flags)
      : lex_(lex), flags_(std::move(flags)) {}

  std::pair<Drs, AnalysisFlags> run(const Drs& d) {
    std::vector<ScopeFrame> scope;
    collect_box(d, scope);
    Drs out = rewrite_box(d, scope);
    return {std::move(out), std::move(flags_)};
  }

 private:
  const Lexicon& lex_;
  AnalysisFlags flags_;
  std::vector<DeclInfo> decls_;
  std::map<std::string, std::vector<int>> by_name_;  // all decl ids per name
  int next_index_ = 0;

  int declare(const std::string& name) {
    int id = static_cast<int>(decls_.size());
    decls_.push_back(DeclInfo{next_index_++, std::nullopt, false, false});
    by_name_[name].push_back(id);
    return id;
  }

  static int lookup(const std::vector<ScopeFrame>& scope, const std::string& name) {
    for (auto it = scope.rbegin(); it != scope.rend(); ++it) {
      auto f = it->find(name);
      if (f != it->end()) return f->second;
    }
    return -1;
  }

  std::optional<Agreement> noun_agreement(const std::string& lemma) const {
    if (const auto* n = lex_.by_lemma(lemma, CatKind::Noun))
      return std::get<NounCat>(n->category).agreement;
    if (lex_.by_lemma(lemma, CatKind::Weekday)) return Agreement::Thing;
    return std::nullopt;
  }

  // First pass: assign introduction indices and gather what each declaration
  // denotes.  Scope handling mirrors free_referents.
  void collect_box(const Drs& d, std::vector<ScopeFrame>& scope) {
    ScopeFrame frame;
    for (const auto& r : d.referents) frame[r.name] = declare(r.name);
    scope.push_back(std::move(frame));
    for (const auto& c : d.conditions) collect_cond(c, scope);
    scope.pop_back();
  }

  void collect_cond(const Condition& c, std::vector<ScopeFrame>& scope) {
    if (const auto* p = std::get_if<Pred>(&c)) {
      int id = lookup(scope, p->ref.name);
      if (id < 0) return;
      if (p->pos == WordPos::Verb) {
        decls_[static_cast<size_t>(id)].is_event = true;
      } else if (p->sense == kPronounSense) {
        decls_[static_cast<size_t>(id)].is_pronoun = true;
      } else if (p->pos == WordPos::Noun) {
        auto agr = noun_agreement(p->lemma);
        if (agr) decls_[static_cast<size_t>(id)].agreement = agr;
      }
    } else if (const auto* n = std::get_if<Named>(&c)) {
      int id = lookup(scope, n->ref.name);
      if (id >= 0)
        decls_[static_cast<size_t>(id)].agreement =
            n->cls == EntityClass::Per ? Agreement::Person : Agreement::Thing;
    } else if (const auto* nt = std::get_if<Not>(&c)) {
      collect_box(*nt->inner, scope);
    } else if (const auto* ps = std::get_if<Pos>(&c)) {
      collect_box(*ps->inner, scope);
    } else if (const auto* im = std::get_if<Imp>(&c)) {
      ScopeFrame frame;
      for (const auto& r : im->antecedent->referents)
        frame[r.name] = declare(r.name);
      scope.push_back(std::move(frame));
      for (const auto& cc : im->antecedent->conditions) collect_cond(cc, scope);
      collect_box(*im->consequent, scope);
      scope.pop_back();
    } else if (const auto* o = std::get_if<Or>(&c)) {
      collect_box(*o->left, scope);
      collect_box(*o->right, scope);
    } else if (const auto* w = std::get_if<Whq>(&c)) {
      scope.push_back({{w->ref.name, declare(w->ref.name)}});
      collect_box(*w->body, scope);
      scope.pop_back();
    }
  }

  // Second pass: same walk, replacing placeholders.
  Drs rewrite_box(const Drs& d, std::vector<ScopeFrame>& scope) {
    ScopeFrame frame;
    for (const auto& r : d.referents) {
      // Re-walk declarations in the same order as collect so ids line up.
      frame[r.name] = take_decl(r.name);
    }
    scope.push_back(std::move(frame));
    Drs out;
    out.referents = d.referents;
    for (const auto& c : d.conditions)
      out.conditions.push_back(rewrite_cond(c, scope));
    scope.pop_back();
    return out;
  }

  std::map<std::string, size_t> taken_;
  int take_decl(const std::string& name) {
    size_t k = taken_[name]++;
    return by_name_[name][k];
  }

  Condition rewrite_cond(const Condition& c, std::vector<ScopeFrame>& scope) {
    if (const auto* p = std::get_if<Pred>(&c)) {
      if (p->sense == kPronounSense && p->pos == WordPos::Noun) {
        return resolve(*p, scope);
      }
      return c;
    }
    if (const auto* nt = std::get_if<Not>(&c))
      return Not{Box<Drs>(rewrite_box(*nt->inner, scope))};
    if (const auto* ps = std::get_if<Pos>(&c))
      return Pos{Box<Drs>(rewrite_box(*ps->inner, scope))};
    if (const auto* im = std::get_if<Imp>(&c)) {
      ScopeFrame frame;
      for (const auto& r : im->antecedent->referents)
        frame[r.name] = take_decl(r.name);
      scope.push_back(std::move(frame));
      Drs ant;
      ant.referents = im->antecedent->referents;
      for (const auto& cc : im->antecedent->conditions)
        ant.conditions.push_back(rewrite_cond(cc, scope));
      Drs cons = rewrite_box(*im->consequent, scope);
      scope.pop_back();
      return Imp{Box<Drs>(std::move(ant)), Box<Drs>(std::move(cons))};
    }
    if (const auto* o = std::get_if<Or>(&c))
      return Or{Box<Drs>(rewrite_box(*o->left, scope)),
                Box<Drs>(rewrite_box(*o->right, scope))};
    if (const auto* w = std::get_if<Whq>(&c)) {
      scope.push_back({{w->ref.name, take_decl(w->ref.name)}});
      Drs body = rewrite_box(*w->body, scope);
      scope.pop_back();
      return Whq{w->ref, Box<Drs>(std::move(body))};
    }
    return c;
  }

  Condition resolve(const Pred& placeholder, const std::vector<ScopeFrame>& scope) {
    Agreement want = Agreement::Person;
    if (const auto* pron = lex_.by_lemma(placeholder.lemma, CatKind::Pronoun))
      want = std::get<PronounCat>(pron->category).agreement;
    int self = lookup(scope, placeholder.ref.name);
    int self_index = self >= 0 ? decls_[static_cast<size_t>(self)].index
                               : next_index_;
    // Visible declarations, innermost shadowing outer ones.
    std::map<std::string, int> visible;
    for (const auto& frame : scope) {
      for (const auto& [name, id] : frame) visible[name] = id;
    }
    std::vector<std::pair<int, std::string>> candidates;  // (index, name)
    for (const auto& [name, id] : visible) {
      const DeclInfo& info = decls_[static_cast<size_t>(id)];
      if (id == self || info.is_event || info.is_pronoun) continue;
      if (!info.agreement || *info.agreement != want) continue;
      if (info.index >= self_index) continue;
      candidates.emplace_back(info.index, name);
    }
    std::sort(candidates.begin(), candidates.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });
    std::vector<std::string> names;
    for (const auto& [idx, name] : candidates) names.push_back(name);
    flags_.candidate_antecedents.push_back(names);
    if (candidates.empty()) throw NoAntecedent(placeholder.lemma);
    if (candidates.size() >= 2) flags_.ambiguous_anaphora = true;
    return Eq{placeholder.ref, Referent{candidates[0].second}};
  }
};

}  // namespace

std::pair<Drs, AnalysisFlags> resolve_anaphora(const Drs& drs,
                                               const AnalysisFlags& flags,
                                               const Lexicon& lexicon) {
  return AnaphoraPass(lexicon, flags).run(drs);
}

}  // namespace nl2cnl
