#include "nl2cnl/csp.hpp"

#include <algorithm>
#include <functional>

namespace nl2cnl::csp {

namespace {

struct FlatCond {
  const Condition* cond;
  bool under_pos;
};

// Questions are flat apart from possibility boxes, so the compiler walks
// the root, the question body, and possibility boxes only.
void flatten(const Drs& d, bool under_pos, std::vector<FlatCond>& out,
             std::vector<std::string>& wh_refs) {
  for (const Condition& c : d.conditions) {
    if (const auto* p = std::get_if<Pos>(&c)) {
      flatten(*p->inner, true, out, wh_refs);
    } else if (const auto* w = std::get_if<Whq>(&c)) {
      wh_refs.push_back(w->ref.name);
      flatten(*w->body, under_pos, out, wh_refs);
    } else if (std::holds_alternative<nl2cnl::Not>(c) ||
               std::holds_alternative<Imp>(c) ||
               std::holds_alternative<nl2cnl::Or>(c)) {
      throw Error("question structure too complex for constraint compilation");
    } else {
      out.push_back({&c, under_pos});
    }
  }
}

std::set<std::string> unary_extension(const fol::FiniteModel& facts,
                                      const std::string& name) {
  std::set<std::string> out;
  if (auto it = facts.preds.find(name); it != facts.preds.end())
    for (const auto& t : it->second.tuples)
      if (t.size() == 1) out.insert(t[0]);
  return out;
}

std::set<std::pair<std::string, std::string>> binary_extension(
    const fol::FiniteModel& facts, const std::string& name) {
  std::set<std::pair<std::string, std::string>> out;
  if (auto it = facts.preds.find(name); it != facts.preds.end())
    for (const auto& t : it->second.tuples)
      if (t.size() == 2) out.emplace(t[0], t[1]);
  return out;
}

std::string pred_name(const Pred& p) {
  return p.lemma + "_" + std::string(1, to_char(p.pos));
}

}  // namespace

CspInstance compile_csp(const Drs& q, const fol::FiniteModel& facts) {
  if (!is_proper(q)) throw fol::ImproperDrs();

  std::vector<FlatCond> conds;
  std::vector<std::string> wh_refs;
  flatten(q, false, conds, wh_refs);

  std::map<std::string, std::string> constant;  // referent -> constant value
  std::set<std::string> events;
  for (const FlatCond& fc : conds) {
    if (const auto* n = std::get_if<Named>(fc.cond))
      constant[n->ref.name] = n->name;
    else if (const auto* p = std::get_if<Pred>(fc.cond);
             p && p->pos == WordPos::Verb)
      events.insert(p->ref.name);
  }

  // variables in first-appearance order: wh-referents, then event arguments
  std::vector<std::string> var_order;
  auto add_var = [&](const std::string& name) {
    if (constant.count(name) || events.count(name)) return;
    if (std::find(var_order.begin(), var_order.end(), name) == var_order.end())
      var_order.push_back(name);
  };
  for (const std::string& w : wh_refs) add_var(w);
  for (const FlatCond& fc : conds)
    if (const auto* r = std::get_if<Rel>(fc.cond);
        r && events.count(r->first.name))
      add_var(r->second.name);

  CspInstance out;

  // typing predicate (first on the referent) fixes the domain; the rest
  // become unary constraints
  std::map<std::string, bool> typed;
  std::vector<UnaryConstraint> pred_unaries;
  for (const std::string& v : var_order) {
    Variable var;
    var.name = v;
    for (const FlatCond& fc : conds) {
      const auto* p = std::get_if<Pred>(fc.cond);
      if (!p || p->ref.name != v || p->pos == WordPos::Verb) continue;
      std::string name = pred_name(*p);
      if (!typed[v]) {
        typed[v] = true;
        auto ext = unary_extension(facts, name);
        if (ext.empty()) throw EmptyDomain(v, name);
        var.domain.assign(ext.begin(), ext.end());
      } else {
        pred_unaries.push_back({v, name, unary_extension(facts, name)});
      }
    }
    if (!typed[v]) throw UntypedVariable(v);
    out.variables.push_back(std::move(var));
  }
  out.unary = std::move(pred_unaries);

  auto is_var = [&](const std::string& name) {
    return std::find(var_order.begin(), var_order.end(), name) !=
           var_order.end();
  };
  auto end_value = [&](const std::string& name) {
    auto it = constant.find(name);
    return it == constant.end() ? name : it->second;
  };

  // a relation between two ends: binary when both are variables, sliced to a
  // unary constraint when one is a constant, dropped when ground
  auto add_relation = [&](const std::string& a, const std::string& b,
                          const std::string& rel) {
    bool va = is_var(a), vb = is_var(b);
    auto pairs = binary_extension(facts, rel);
    if (va && vb) {
      out.binary.push_back({a, b, rel, std::move(pairs)});
    } else if (!va && vb) {
      std::set<std::string> allowed;
      for (const auto& [x, y] : pairs)
        if (x == end_value(a)) allowed.insert(y);
      out.unary.push_back({b, rel, std::move(allowed)});
    } else if (va && !vb) {
      std::set<std::string> allowed;
      for (const auto& [x, y] : pairs)
        if (y == end_value(b)) allowed.insert(x);
      out.unary.push_back({a, rel, std::move(allowed)});
    }
  };

  for (const FlatCond& fc : conds) {
    const auto* r = std::get_if<Rel>(fc.cond);
    if (!r) continue;
    if (!events.count(r->first.name)) {
      add_relation(r->first.name, r->second.name, r->label);
      continue;
    }
    if (r->label == "agent") continue;  // the anchor itself

    // re-anchor through the agent of the same event
    const std::string& e = r->first.name;
    const Rel* agent_edge = nullptr;
    const Pred* verb = nullptr;
    for (const FlatCond& fc2 : conds) {
      if (const auto* r2 = std::get_if<Rel>(fc2.cond);
          r2 && r2->first.name == e && r2->label == "agent")
        agent_edge = r2;
      if (const auto* p2 = std::get_if<Pred>(fc2.cond);
          p2 && p2->ref.name == e && p2->pos == WordPos::Verb)
        verb = p2;
    }
    if (!agent_edge || !verb)
      throw Error("event " + e + " lacks an agent or a verb");

    std::string rel = verb->lemma;
    if (r->label == "recipient")
      rel += "_to";
    else if (r->label != "patient")
      rel += "_" + r->label;
    if (fc.under_pos) rel = "can_" + rel;
    add_relation(agent_edge->second.name, r->second.name, rel);
  }

  return out;
}

std::vector<Assignment> solve_csp(const CspInstance& c) {
  size_t n = c.variables.size();
  std::map<std::string, size_t> index;
  for (size_t i = 0; i < n; ++i) index[c.variables[i].name] = i;

  // unary constraints prune domains up front
  std::vector<std::vector<std::string>> domains(n);
  for (size_t i = 0; i < n; ++i) domains[i] = c.variables[i].domain;
  for (const UnaryConstraint& u : c.unary) {
    auto it = index.find(u.var);
    if (it == index.end()) continue;
    auto& d = domains[it->second];
    d.erase(std::remove_if(d.begin(), d.end(),
                           [&](const std::string& v) {
                             return !u.allowed.count(v);
                           }),
            d.end());
  }

  struct Arc {
    size_t other;
    const BinaryConstraint* con;
    bool first_end;  // this variable fills the constraint's first slot
  };
  std::vector<std::vector<Arc>> arcs(n);
  for (const BinaryConstraint& b : c.binary) {
    auto f = index.find(b.first), s = index.find(b.second);
    if (f == index.end() || s == index.end()) continue;
    arcs[f->second].push_back({s->second, &b, true});
    arcs[s->second].push_back({f->second, &b, false});
  }

  std::vector<Assignment> solutions;
  std::vector<std::string> value(n);

  std::function<void(size_t, std::vector<std::vector<std::string>>)> search =
      [&](size_t i, std::vector<std::vector<std::string>> live) {
        if (i == n) {
          Assignment a;
          for (size_t j = 0; j < n; ++j) a[c.variables[j].name] = value[j];
          solutions.push_back(std::move(a));
          return;
        }
        for (const std::string& v : live[i]) {
          value[i] = v;
          bool dead = false;
          // a constraint looping back onto this variable acts as a filter
          for (const Arc& arc : arcs[i])
            if (arc.other == i && !arc.con->allowed.count({v, v})) dead = true;
          // forward check: restrict every later variable against this pick
          auto next = live;
          for (const Arc& arc : arcs[i]) {
            if (dead) break;
            if (arc.other <= i) continue;
            auto& d = next[arc.other];
            d.erase(std::remove_if(d.begin(), d.end(),
                                   [&](const std::string& w) {
                                     auto pair = arc.first_end
                                                     ? std::make_pair(v, w)
                                                     : std::make_pair(w, v);
                                     return !arc.con->allowed.count(pair);
                                   }),
                    d.end());
            if (d.empty()) dead = true;
          }
          if (!dead) search(i + 1, std::move(next));
        }
      };
  search(0, domains);
  return solutions;
}

}  // namespace nl2cnl::csp
