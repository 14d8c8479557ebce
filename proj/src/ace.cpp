#include "nl2cnl/ace.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <sstream>

#include "nl2cnl/frontend.hpp"

namespace nl2cnl {

namespace {

[[noreturn]] void bail(const char* reason) { throw NotVerbalizable(reason); }

std::string capitalized(std::string word) {
  if (!word.empty())
    word[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(word[0])));
  return word;
}

// How a referent can be said: a proper name, or article + adjectives + noun.
struct NpDesc {
  const Named* named = nullptr;
  const Pred* noun = nullptr;
  std::vector<const Pred*> adjectives;  // in condition order
  bool rendered = false;
  bool empty() const { return !named && !noun && adjectives.empty(); }
};

struct Realizer {
  const Lexicon& lex;
  std::map<std::string, NpDesc> descs;
  std::vector<std::string> words;

  explicit Realizer(const Lexicon& l) : lex(l) {}

  // Rejects conditions the target subset cannot say, wherever they occur.
  void scan(const Drs& d) {
    for_each_box(d, [&](const Drs& box) {
      for (const auto& c : box.conditions) {
        if (std::holds_alternative<Or>(c)) bail("or-unsupported");
        if (std::holds_alternative<Whq>(c)) bail("question-unsupported");
        if (std::holds_alternative<Eq>(c)) bail("eq-unsupported");
        if (const auto* p = std::get_if<Pred>(&c)) {
          if (p->sense == kPronounSense) bail("pronoun-unsupported");
          if (p->pos == WordPos::Noun) {
            NpDesc& d2 = descs[p->ref.name];
            if (d2.noun) bail("structure-unsupported");
            d2.noun = p;
          } else if (p->pos == WordPos::Adjective) {
            descs[p->ref.name].adjectives.push_back(p);
          }
        } else if (const auto* n = std::get_if<Named>(&c)) {
          NpDesc& d2 = descs[n->ref.name];
          if (d2.named) bail("structure-unsupported");
          d2.named = n;
        }
      }
    });
  }

  bool is_weekday_noun(const NpDesc& d) const {
    return d.noun && lex.by_lemma(d.noun->lemma, CatKind::Weekday) != nullptr;
  }

  NpDesc& desc_of(const std::string& ref) {
    auto it = descs.find(ref);
    if (it == descs.end() || it->second.empty()) bail("unattached-referent");
    return it->second;
  }

  // "Harris" | "a linguistic class"
  void np(const std::string& ref, bool article) {
    NpDesc& d = desc_of(ref);
    d.rendered = true;
    if (d.named) {
      if (!d.adjectives.empty() || d.noun) bail("structure-unsupported");
      words.push_back(capitalized(d.named->name));
      return;
    }
    if (!d.noun) bail("unattached-referent");
    if (is_weekday_noun(d)) {
      // weekdays have no article and only occur inside a PP
      if (article || !d.adjectives.empty()) bail("structure-unsupported");
      words.push_back(capitalized(d.noun->lemma));
      return;
    }
    if (!lex.by_lemma(d.noun->lemma, CatKind::Noun)) bail("unknown-lemma");
    if (article) words.push_back("a");
    for (const auto* adj : d.adjectives) {
      if (!lex.by_lemma(adj->lemma, CatKind::Adjective)) bail("unknown-lemma");
      words.push_back(adj->lemma);
    }
    words.push_back(d.noun->lemma);
  }

  // noun head without article, for "Every N" / "No N"
  void nbar(const std::string& ref) {
    NpDesc& d = desc_of(ref);
    if (d.named || !d.noun) bail("structure-unsupported");
    d.rendered = true;
    if (!lex.by_lemma(d.noun->lemma, CatKind::Noun)) bail("unknown-lemma");
    for (const auto* adj : d.adjectives) {
      if (!lex.by_lemma(adj->lemma, CatKind::Adjective)) bail("unknown-lemma");
      words.push_back(adj->lemma);
    }
    words.push_back(d.noun->lemma);
  }

  enum class VerbForm { ThirdSingular, Base };

  // Renders verb + objects + prepositional phrases from the box holding the
  // event; `subject` must be its unique agent.
  void event_clause(const Drs& box, const std::string& subject,
                    VerbForm form) {
    const Pred* event = nullptr;
    for (const auto& c : box.conditions) {
      if (const auto* p = std::get_if<Pred>(&c)) {
        if (p->pos == WordPos::Verb) {
          if (event) bail("structure-unsupported");
          event = p;
        }
      }
    }
    if (!event) bail("no-event");

    std::vector<const Rel*> agents, patients, recipients, pps;
    for (const auto& c : box.conditions) {
      const auto* r = std::get_if<Rel>(&c);
      if (!r) continue;
      if (r->first.name != event->ref.name) bail("structure-unsupported");
      if (r->label == "agent") agents.push_back(r);
      else if (r->label == "patient") patients.push_back(r);
      else if (r->label == "recipient") recipients.push_back(r);
      else if (lex.by_lemma(r->label, CatKind::Preposition)) pps.push_back(r);
      else bail("structure-unsupported");
    }
    if (agents.size() != 1) bail("agent-count");
    if (agents[0]->second.name != subject) bail("structure-unsupported");

    const LexEntry* verb = lex.by_lemma(event->lemma, CatKind::Verb);
    if (!verb) bail("unknown-lemma");
    const auto& cat = std::get<VerbCat>(verb->category);
    int want_patients = cat.valency == Valency::Intransitive ? 0 : 1;
    int want_recipients = cat.valency == Valency::Ditransitive ? 1 : 0;
    if (static_cast<int>(patients.size()) != want_patients ||
        static_cast<int>(recipients.size()) != want_recipients)
      bail("valency");

    words.push_back(form == VerbForm::ThirdSingular ? cat.third_singular
                                                    : verb->lemma);
    for (const auto* r : patients) np(r->second.name, true);
    for (const auto* r : recipients) {
      words.push_back("to");
      np(r->second.name, true);
    }
    for (const auto* r : pps) {
      words.push_back(r->label);
      NpDesc& d = desc_of(r->second.name);
      bool bare = (d.named != nullptr) || is_weekday_noun(d);
      np(r->second.name, !bare);
    }
  }

  // A verb phrase container either holds the event itself (finite form) or
  // wraps it in a single pos() ("can") or not() ("does not").
  void vp(const Drs& box, const std::string& subject) {
    const Drs* event_box = &box;
    VerbForm form = VerbForm::ThirdSingular;
    const Condition* complex = nullptr;
    bool has_event = false;
    for (const auto& c : box.conditions) {
      if (const auto* p = std::get_if<Pred>(&c);
          p && p->pos == WordPos::Verb)
        has_event = true;
      if (std::holds_alternative<Pos>(c) || std::holds_alternative<Not>(c) ||
          std::holds_alternative<Imp>(c)) {
        if (complex) bail("structure-unsupported");
        complex = &c;
      }
    }
    if (!has_event && complex) {
      if (const auto* p = std::get_if<Pos>(complex)) {
        words.push_back("can");
        event_box = &*p->inner;
        form = VerbForm::Base;
      } else if (const auto* n = std::get_if<Not>(complex)) {
        words.push_back("does");
        words.push_back("not");
        event_box = &*n->inner;
        form = VerbForm::Base;
      } else {
        bail("structure-unsupported");
      }
    } else if (has_event && complex) {
      bail("structure-unsupported");
    }
    event_clause(*event_box, subject, form);
  }

  // The subject is the unique agent of the unique event predicate.
  std::string find_subject(const Drs& d) {
    std::vector<std::string> agents;
    int events = 0;
    for_each_box(d, [&](const Drs& box) {
      for (const auto& c : box.conditions) {
        if (const auto* p = std::get_if<Pred>(&c);
            p && p->pos == WordPos::Verb)
          ++events;
        if (const auto* r = std::get_if<Rel>(&c); r && r->label == "agent")
          agents.push_back(r->second.name);
      }
    });
    if (events == 0) bail("no-event");
    if (events > 1) bail("structure-unsupported");
    if (agents.size() != 1) bail("agent-count");
    return agents[0];
  }

  std::string realize(const Drs& d) {
    scan(d);
    std::string subject = find_subject(d);

    size_t complex_count = 0;
    const Condition* complex = nullptr;
    bool top_event = false;
    for (const auto& c : d.conditions) {
      if (std::holds_alternative<Not>(c) || std::holds_alternative<Pos>(c) ||
          std::holds_alternative<Imp>(c)) {
        ++complex_count;
        complex = &c;
      }
      if (const auto* p = std::get_if<Pred>(&c); p && p->pos == WordPos::Verb)
        top_event = true;
    }

    auto declares = [](const Drs& box, const std::string& name) {
      return std::find(box.referents.begin(), box.referents.end(),
                       Referent{name}) != box.referents.end();
    };

    if (!top_event && complex_count == 1 && d.referents.empty() &&
        d.conditions.size() == 1) {
      if (const auto* imp = std::get_if<Imp>(complex)) {
        // "Every N VP."
        if (!declares(*imp->antecedent, subject)) bail("structure-unsupported");
        words.push_back("every");
        nbar(subject);
        vp(*imp->consequent, subject);
      } else if (const auto* neg = std::get_if<Not>(complex);
                 neg && declares(*neg->inner, subject)) {
        // "No N VP.": subject lives inside the negation
        words.push_back("no");
        nbar(subject);
        vp(*neg->inner, subject);
      } else {
        bail("structure-unsupported");
      }
    } else if (declares(d, subject)) {
      // external subject: plain, "can", or "does not"
      np(subject, true);
      vp(d, subject);
    } else {
      bail("structure-unsupported");
    }

    // every described referent must have found a syntactic slot
    for (const auto& [ref, desc] : descs)
      if (!desc.empty() && !desc.rendered) bail("unattached-referent");

    std::string out;
    for (size_t i = 0; i < words.size(); ++i) {
      if (i) out += ' ';
      out += words[i];
    }
    out = capitalized(std::move(out));
    out += '.';
    return out;
  }
};

std::vector<std::string> whitespace_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    if (ch == ' ' || ch == '\t' || ch == '\n' || ch == '\r') {
      if (!cur.empty()) out.push_back(std::move(cur)), cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::string lowercased(std::string s) {
  for (char& c : s)
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

bool known_surface(const Lexicon& lex, const std::string& word) {
  static const char* kKeywords[] = {"does", "not", "who", "what", "when"};
  for (const char* k : kKeywords)
    if (word == k) return true;
  return lex.known(word);
}

}  // namespace

std::string verbalize(const Drs& d, const Lexicon& lex) {
  Realizer r(lex);
  return r.realize(d);
}

AceSentence check_ace(std::string_view text, const Lexicon& lex) {
  AceSentence out;
  out.text = std::string(text);

  std::vector<std::string> raw = whitespace_tokens(text);
  if (raw.empty()) {
    out.violations.emplace_back(0, "empty-input");
    return out;
  }

  bool final_period = raw.back().back() == '.';
  if (!final_period) out.violations.emplace_back(0, "missing-final-period");

  // strip the terminator (wrong ones included — they are already reported)
  std::vector<std::string> toks = raw;
  if (final_period || toks.back().back() == '?') {
    toks.back().pop_back();
    if (toks.back().empty()) toks.pop_back();
  }

  for (size_t i = 0; i < toks.size(); ++i) {
    std::string low = lowercased(toks[i]);
    if (lex.find(low, CatKind::Pronoun))
      out.violations.emplace_back(static_cast<int>(i) + 1,
                                  "pronoun-not-allowed");
    if (!known_surface(lex, low))
      out.violations.emplace_back(static_cast<int>(i) + 1, "unknown-token");
  }

  try {
    auto [norm, trace] = normalize(text, lex);
    if (!norm.empty() &&
        (norm[0] == "who" || norm[0] == "what" || norm[0] == "when")) {
      out.violations.emplace_back(1, "not-in-fragment");
    } else {
      auto [drs, flags] = analyze(norm, lex);
      for (size_t p : flags.bare_noun_positions)
        out.violations.emplace_back(static_cast<int>(p) + 1,
                                    "bare-noun-phrase");
    }
  } catch (const EmptyInput&) {
    out.violations.emplace_back(0, "empty-input");
  } catch (const UnknownToken&) {
    // already reported against the raw tokens above; if normalization
    // produced the unknown token the raw scan still saw a stranger
  } catch (const ValencyMismatch&) {
    out.violations.emplace_back(0, "valency-mismatch");
  } catch (const ParseFailure& e) {
    out.violations.emplace_back(static_cast<int>(e.position) + 1,
                                "not-in-fragment");
  }

  std::stable_sort(out.violations.begin(), out.violations.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  out.violations.erase(std::unique(out.violations.begin(), out.violations.end()),
                       out.violations.end());
  out.conformant = out.violations.empty();
  return out;
}

bool roundtrip_check(const Drs& d, const Lexicon& lex) {
  std::string text = verbalize(d, lex);
  auto [toks, trace] = normalize(text, lex);
  auto [back, flags] = analyze(toks, lex);
  return alpha_equivalent(d, back);
}

}  // namespace nl2cnl
