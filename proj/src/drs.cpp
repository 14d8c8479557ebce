#include "nl2cnl/drs.hpp"

#include <algorithm>
#include <map>

namespace nl2cnl {

bool valid_referent_name(std::string_view name) {
  if (name.empty() || name[0] < 'a' || name[0] > 'z') return false;
  return std::all_of(name.begin() + 1, name.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9');
  });
}

bool valid_lemma(std::string_view lemma) {
  if (lemma.empty() || lemma[0] < 'a' || lemma[0] > 'z') return false;
  return std::all_of(lemma.begin() + 1, lemma.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
  });
}

char to_char(WordPos pos) { return static_cast<char>(pos); }

std::optional<WordPos> word_pos_from_char(char c) {
  switch (c) {
    case 'n': return WordPos::Noun;
    case 'v': return WordPos::Verb;
    case 'a': return WordPos::Adjective;
    case 'r': return WordPos::Adverb;
    default: return std::nullopt;
  }
}

std::string_view to_string(EntityClass cls) {
  switch (cls) {
    case EntityClass::Per: return "per";
    case EntityClass::Org: return "org";
    case EntityClass::Loc: return "loc";
    case EntityClass::Tim: return "tim";
    case EntityClass::Obj: return "obj";
  }
  return "obj";
}

std::optional<EntityClass> entity_class_from_string(std::string_view s) {
  if (s == "per") return EntityClass::Per;
  if (s == "org") return EntityClass::Org;
  if (s == "loc") return EntityClass::Loc;
  if (s == "tim") return EntityClass::Tim;
  if (s == "obj") return EntityClass::Obj;
  return std::nullopt;
}

namespace {

void check_no_duplicates(const Drs& d) {
  for_each_box(d, [](const Drs& box) {
    std::set<std::string> names;
    for (const auto& r : box.referents) {
      if (!names.insert(r.name).second) throw DuplicateReferent(r.name);
    }
  });
}

using Scope = std::vector<std::set<std::string>>;

bool in_scope(const Scope& scope, const std::string& name) {
  for (auto it = scope.rbegin(); it != scope.rend(); ++it) {
    if (it->count(name)) return true;
  }
  return false;
}

std::set<std::string> box_names(const Drs& d) {
  std::set<std::string> out;
  for (const auto& r : d.referents) out.insert(r.name);
  return out;
}

void collect_free(const Drs& d, Scope& scope, std::set<Referent>& free);

void collect_free_cond(const Condition& c, Scope& scope, std::set<Referent>& free) {
  auto use = [&](const Referent& r) {
    if (!in_scope(scope, r.name)) free.insert(r);
  };
  std::visit(
      [&](const auto& node) {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, Pred> || std::is_same_v<T, Named>) {
          use(node.ref);
        } else if constexpr (std::is_same_v<T, Rel> || std::is_same_v<T, Eq>) {
          use(node.first);
          use(node.second);
        } else if constexpr (std::is_same_v<T, Not> || std::is_same_v<T, Pos>) {
          collect_free(*node.inner, scope, free);
        } else if constexpr (std::is_same_v<T, Imp>) {
          // Antecedent referents stay visible throughout the consequent.
          scope.push_back(box_names(*node.antecedent));
          for (const auto& cc : node.antecedent->conditions)
            collect_free_cond(cc, scope, free);
          collect_free(*node.consequent, scope, free);
          scope.pop_back();
        } else if constexpr (std::is_same_v<T, Or>) {
          collect_free(*node.left, scope, free);
          collect_free(*node.right, scope, free);
        } else if constexpr (std::is_same_v<T, Whq>) {
          scope.push_back({node.ref.name});
          collect_free(*node.body, scope, free);
          scope.pop_back();
        }
      },
      c);
}

void collect_free(const Drs& d, Scope& scope, std::set<Referent>& free) {
  scope.push_back(box_names(d));
  for (const auto& c : d.conditions) collect_free_cond(c, scope, free);
  scope.pop_back();
}

// Scoped alpha-renaming shared by rename_referents and canonicalization.
// `env` maps old declared names to new ones; inner declarations shadow.
using Env = std::map<std::string, std::string>;

Drs rename_box(const Drs& d, Env env,
               const std::function<std::string(const std::string&)>& fresh);

Referent rename_use(const Referent& r, const Env& env) {
  auto it = env.find(r.name);
  return it == env.end() ? r : Referent{it->second};
}

Condition rename_cond(const Condition& c, const Env& env,
                      const std::function<std::string(const std::string&)>& fresh) {
  return std::visit(
      [&](const auto& node) -> Condition {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, Pred>) {
          return Pred{rename_use(node.ref, env), node.lemma, node.pos, node.sense};
        } else if constexpr (std::is_same_v<T, Named>) {
          return Named{rename_use(node.ref, env), node.name, node.cls};
        } else if constexpr (std::is_same_v<T, Rel>) {
          return Rel{rename_use(node.first, env), rename_use(node.second, env),
                     node.label};
        } else if constexpr (std::is_same_v<T, Eq>) {
          return Eq{rename_use(node.first, env), rename_use(node.second, env)};
        } else if constexpr (std::is_same_v<T, Not>) {
          return Not{Box<Drs>(rename_box(*node.inner, env, fresh))};
        } else if constexpr (std::is_same_v<T, Pos>) {
          return Pos{Box<Drs>(rename_box(*node.inner, env, fresh))};
        } else if constexpr (std::is_same_v<T, Imp>) {
          Env ext = env;
          Drs ant;
          for (const auto& r : node.antecedent->referents) {
            std::string nn = fresh(r.name);
            ext[r.name] = nn;
            ant.referents.push_back({nn});
          }
          for (const auto& cc : node.antecedent->conditions)
            ant.conditions.push_back(rename_cond(cc, ext, fresh));
          Drs cons = rename_box(*node.consequent, ext, fresh);
          return Imp{Box<Drs>(std::move(ant)), Box<Drs>(std::move(cons))};
        } else if constexpr (std::is_same_v<T, Or>) {
          return Or{Box<Drs>(rename_box(*node.left, env, fresh)),
                    Box<Drs>(rename_box(*node.right, env, fresh))};
        } else {
          static_assert(std::is_same_v<T, Whq>);
          Env ext = env;
          std::string nn = fresh(node.ref.name);
          ext[node.ref.name] = nn;
          return Whq{Referent{nn}, Box<Drs>(rename_box(*node.body, ext, fresh))};
        }
      },
      c);
}

Drs rename_box(const Drs& d, Env env,
               const std::function<std::string(const std::string&)>& fresh) {
  Drs out;
  for (const auto& r : d.referents) {
    std::string nn = fresh(r.name);
    env[r.name] = nn;
    out.referents.push_back({nn});
  }
  for (const auto& c : d.conditions)
    out.conditions.push_back(rename_cond(c, env, fresh));
  return out;
}

// --- alpha equivalence ---
//
// Both sides are first canonicalized so every declaration gets a globally
// unique name ("#k" cannot collide with input names, which keeps free
// referents distinguishable from bound ones).  The matcher then walks both
// trees in parallel with a continuation-passing backtracking search: condition
// lists are matched as multisets, and the referent bijection grows monotonically
// along each search branch.

struct Binding {
  std::map<std::string, std::string> fwd;
  std::map<std::string, std::string> rev;
};

// Frame index of the (unique) declaration of `name`, or -1 if free.
int decl_frame(const Scope& scope, const std::string& name) {
  for (int i = static_cast<int>(scope.size()) - 1; i >= 0; --i) {
    if (scope[static_cast<size_t>(i)].count(name)) return i;
  }
  return -1;
}

std::optional<Binding> try_bind(Binding bind, const Referent& a, const Referent& b,
                                const Scope& fa, const Scope& fb) {
  auto it = bind.fwd.find(a.name);
  if (it != bind.fwd.end()) {
    if (it->second != b.name) return std::nullopt;
    return bind;
  }
  if (bind.rev.count(b.name)) return std::nullopt;
  int la = decl_frame(fa, a.name);
  int lb = decl_frame(fb, b.name);
  if (la != lb) return std::nullopt;
  if (la == -1) {
    // Free on both sides: must match literally, no binding recorded.
    return a.name == b.name ? std::optional<Binding>(bind) : std::nullopt;
  }
  bind.fwd[a.name] = b.name;
  bind.rev[b.name] = a.name;
  return bind;
}

using Cont = std::function<bool(const Binding&)>;

bool match_box(const Drs& a, const Drs& b, Scope fa, Scope fb, const Binding& bind,
               const Cont& k);

bool match_conds(const std::vector<Condition>& ca, const std::vector<Condition>& cb,
                 std::vector<bool> used, size_t i, const Scope& fa, const Scope& fb,
                 const Binding& bind, const Cont& k);

bool unify_cond(const Condition& a, const Condition& b, const Scope& fa,
                const Scope& fb, const Binding& bind, const Cont& k) {
  if (a.index() != b.index()) return false;
  if (const auto* pa = std::get_if<Pred>(&a)) {
    const auto& pb = std::get<Pred>(b);
    if (pa->lemma != pb.lemma || pa->pos != pb.pos || pa->sense != pb.sense)
      return false;
    auto b2 = try_bind(bind, pa->ref, pb.ref, fa, fb);
    return b2 && k(*b2);
  }
  if (const auto* na = std::get_if<Named>(&a)) {
    const auto& nb = std::get<Named>(b);
    if (na->name != nb.name || na->cls != nb.cls) return false;
    auto b2 = try_bind(bind, na->ref, nb.ref, fa, fb);
    return b2 && k(*b2);
  }
  if (const auto* ra = std::get_if<Rel>(&a)) {
    const auto& rb = std::get<Rel>(b);
    if (ra->label != rb.label) return false;
    auto b2 = try_bind(bind, ra->first, rb.first, fa, fb);
    if (!b2) return false;
    auto b3 = try_bind(*b2, ra->second, rb.second, fa, fb);
    return b3 && k(*b3);
  }
  if (const auto* ea = std::get_if<Eq>(&a)) {
    const auto& eb = std::get<Eq>(b);
    auto b2 = try_bind(bind, ea->first, eb.first, fa, fb);
    if (!b2) return false;
    auto b3 = try_bind(*b2, ea->second, eb.second, fa, fb);
    return b3 && k(*b3);
  }
  if (const auto* na = std::get_if<Not>(&a)) {
    return match_box(*na->inner, *std::get<Not>(b).inner, fa, fb, bind, k);
  }
  if (const auto* pa = std::get_if<Pos>(&a)) {
    return match_box(*pa->inner, *std::get<Pos>(b).inner, fa, fb, bind, k);
  }
  if (const auto* ia = std::get_if<Imp>(&a)) {
    const auto& ib = std::get<Imp>(b);
    const Drs& antA = *ia->antecedent;
    const Drs& antB = *ib.antecedent;
    if (antA.referents.size() != antB.referents.size()) return false;
    if (antA.conditions.size() != antB.conditions.size()) return false;
    Scope fa2 = fa, fb2 = fb;
    fa2.push_back(box_names(antA));
    fb2.push_back(box_names(antB));
    // Antecedent frame stays pushed while the consequent is matched.
    return match_conds(antA.conditions, antB.conditions,
                       std::vector<bool>(antB.conditions.size(), false), 0, fa2,
                       fb2, bind, [&](const Binding& b2) {
                         return match_box(*ia->consequent, *ib.consequent, fa2,
                                          fb2, b2, k);
                       });
  }
  if (const auto* oa = std::get_if<Or>(&a)) {
    const auto& ob = std::get<Or>(b);
    return match_box(*oa->left, *ob.left, fa, fb, bind, [&](const Binding& b2) {
      return match_box(*oa->right, *ob.right, fa, fb, b2, k);
    });
  }
  const auto& wa = std::get<Whq>(a);
  const auto& wb = std::get<Whq>(b);
  Scope fa2 = fa, fb2 = fb;
  fa2.push_back({wa.ref.name});
  fb2.push_back({wb.ref.name});
  auto b2 = try_bind(bind, wa.ref, wb.ref, fa2, fb2);
  if (!b2) return false;
  return match_box(*wa.body, *wb.body, fa2, fb2, *b2, k);
}

bool match_conds(const std::vector<Condition>& ca, const std::vector<Condition>& cb,
                 std::vector<bool> used, size_t i, const Scope& fa, const Scope& fb,
                 const Binding& bind, const Cont& k) {
  if (i == ca.size()) return k(bind);
  for (size_t j = 0; j < cb.size(); ++j) {
    if (used[j]) continue;
    auto used2 = used;
    used2[j] = true;
    if (unify_cond(ca[i], cb[j], fa, fb, bind, [&](const Binding& b2) {
          return match_conds(ca, cb, used2, i + 1, fa, fb, b2, k);
        }))
      return true;
  }
  return false;
}

bool match_box(const Drs& a, const Drs& b, Scope fa, Scope fb, const Binding& bind,
               const Cont& k) {
  if (a.referents.size() != b.referents.size()) return false;
  if (a.conditions.size() != b.conditions.size()) return false;
  fa.push_back(box_names(a));
  fb.push_back(box_names(b));
  return match_conds(a.conditions, b.conditions,
                     std::vector<bool>(b.conditions.size(), false), 0, fa, fb,
                     bind, k);
}

Drs canonicalize(const Drs& d) {
  int next = 0;
  return rename_box(d, {}, [&next](const std::string&) {
    return "#" + std::to_string(next++);
  });
}

}  // namespace

Drs make_drs(std::vector<Referent> referents, std::vector<Condition> conditions) {
  Drs d{std::move(referents), std::move(conditions)};
  check_no_duplicates(d);
  return d;
}

std::set<Referent> free_referents(const Drs& drs) {
  std::set<Referent> free;
  Scope scope;
  collect_free(drs, scope, free);
  return free;
}

bool is_proper(const Drs& drs) { return free_referents(drs).empty(); }

bool alpha_equivalent(const Drs& a, const Drs& b) {
  Drs ca = canonicalize(a);
  Drs cb = canonicalize(b);
  return match_box(ca, cb, {}, {}, Binding{},
                   [](const Binding&) { return true; });
}

Drs merge(const Drs& a, const Drs& b) {
  std::set<std::string> names = box_names(a);
  for (const auto& r : b.referents) {
    if (names.count(r.name)) throw ReferentClash(r.name);
  }
  Drs out = a;
  out.referents.insert(out.referents.end(), b.referents.begin(),
                       b.referents.end());
  out.conditions.insert(out.conditions.end(), b.conditions.begin(),
                        b.conditions.end());
  return out;
}

Drs rename_referents(const Drs& drs,
                     const std::function<std::string(const std::string&)>& rename) {
  return rename_box(drs, {}, rename);
}

void for_each_box(const Drs& drs, const std::function<void(const Drs&)>& visit) {
  visit(drs);
  for (const auto& c : drs.conditions) {
    std::visit(
        [&](const auto& node) {
          using T = std::decay_t<decltype(node)>;
          if constexpr (std::is_same_v<T, Not> || std::is_same_v<T, Pos>) {
            for_each_box(*node.inner, visit);
          } else if constexpr (std::is_same_v<T, Imp>) {
            for_each_box(*node.antecedent, visit);
            for_each_box(*node.consequent, visit);
          } else if constexpr (std::is_same_v<T, Or>) {
            for_each_box(*node.left, visit);
            for_each_box(*node.right, visit);
          } else if constexpr (std::is_same_v<T, Whq>) {
            for_each_box(*node.body, visit);
          }
        },
        c);
  }
}

}  // namespace nl2cnl
