#include "co2/abstraction.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <map>
#include <sstream>

#include "co2/errors.hpp"

#include "json.hpp"

namespace co2 {

std::string AbsContractLabel::str() const {
  switch (kind) {
    case Kind::Act: return atom.str();
    case Kind::Ctx: return "ctx";
    case Kind::Zero: return "0";
  }
  return "?";
}

std::vector<std::pair<AbsContractLabel, ContractPtr>> abs_contract_steps(const ContractPtr& c) {
  ContractPtr h = unfold(c);
  std::vector<std::pair<AbsContractLabel, ContractPtr>> out;
  auto push = [&](AbsContractLabel l, ContractPtr t) {
    for (const auto& [pl, pt] : out)
      if (pl == l && equal(pt, t)) return;
    out.push_back({std::move(l), std::move(t)});
  };
  const AbsContractLabel ctx{AbsContractLabel::Kind::Ctx, {}};

  if (h->kind() == ContractKind::Ready) {
    push({AbsContractLabel::Kind::Act, h->atom()}, h->body());
  } else if (h->is_sum() && !h->is_nil()) {
    for (const auto& b : h->branches()) {
      push({AbsContractLabel::Kind::Act, b.atom}, b.cont);
      push({AbsContractLabel::Kind::Act, b.atom}, Contract::success());
    }
    push({AbsContractLabel::Kind::Zero, {}}, Contract::nil());
    if (h->kind() == ContractKind::ExternalSum) {
      for (const auto& b : h->branches()) push(ctx, Contract::ready(b.atom, b.cont));
    } else if (h->branches().size() == 1) {
      push(ctx, Contract::ready(h->branches()[0].atom, h->branches()[0].cont));
    }
  }
  push(ctx, h);  // identity context move
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    return render_contract(a.second) < render_contract(b.second);
  });
  return out;
}

// ---------------------------------------------------------------------------
// open / canonicalization
// ---------------------------------------------------------------------------

namespace {

void used_ids(const ProcessPtr& p, std::set<std::string>& out) {
  std::function<void(const ProcessPtr&)> go = [&](const ProcessPtr& q) {
    switch (q->kind()) {
      case ProcessKind::Latent: out.insert(q->ident().id); return;
      case ProcessKind::Sum:
        for (const auto& b : q->branches()) {
          if (b.prefix.kind != Prefix::Kind::Tau) out.insert(b.prefix.target.id);
          go(b.cont);
        }
        return;
      case ProcessKind::Par:
        for (const auto& r : q->parts()) go(r);
        return;
      case ProcessKind::Delim:
        out.insert(q->ident().id);
        go(q->body());
        return;
      case ProcessKind::Call:
        for (const auto& a : q->call_args()) out.insert(a.id);
        return;
    }
  };
  go(p);
}

}  // namespace

ProcessPtr open_top(const ProcessPtr& p) {
  std::set<std::string> used;
  used_ids(p, used);
  int counter = 0;
  auto fresh = [&](Ident::Kind k) {
    while (true) {
      std::string id = (k == Ident::Kind::Var ? "u" : "m") + std::to_string(counter++);
      if (used.insert(id).second) return Ident{k, id};
    }
  };
  std::function<ProcessPtr(const ProcessPtr&, Subst)> go = [&](const ProcessPtr& q,
                                                               Subst env) -> ProcessPtr {
    switch (q->kind()) {
      case ProcessKind::Delim: {
        Ident renamed = fresh(q->ident().kind);
        env[q->ident()] = renamed;
        return go(q->body(), std::move(env));
      }
      case ProcessKind::Par: {
        std::vector<ProcessPtr> ps;
        for (const auto& r : q->parts()) ps.push_back(go(r, env));
        return Process::par(std::move(ps));
      }
      default:
        return apply_subst(q, env);
    }
  };
  return go(p, {});
}

namespace {

// Identifier-invariant structural key used to order parallel components
// before canonical renaming.
void shape_key_rec(const ProcessPtr& p, std::ostringstream& os) {
  auto id_key = [&](const Ident& u) {
    if (u.id == kQuerySession) os << "s#";
    else os << (u.is_var() ? "?v" : "?n");
  };
  switch (p->kind()) {
    case ProcessKind::Latent:
      os << "L(";
      id_key(p->ident());
      os << "," << p->owner() << "," << render_contract(p->contract()) << ")";
      return;
    case ProcessKind::Sum:
      os << "S(";
      for (const auto& b : p->branches()) {
        switch (b.prefix.kind) {
          case Prefix::Kind::Tau: os << "tau"; break;
          case Prefix::Kind::Tell:
            os << "tell " << b.prefix.tell_to << " ";
            id_key(b.prefix.target);
            os << " " << render_contract(b.prefix.contract);
            break;
          case Prefix::Kind::Fuse:
            os << "fuse ";
            id_key(b.prefix.target);
            break;
          case Prefix::Kind::Do:
            os << "do ";
            id_key(b.prefix.target);
            os << " " << b.prefix.atom.str();
            break;
          case Prefix::Kind::Ask:
            os << "ask ";
            id_key(b.prefix.target);
            os << " " << render_formula(b.prefix.formula);
            break;
        }
        os << ".";
        shape_key_rec(b.cont, os);
        os << "+";
      }
      os << ")";
      return;
    case ProcessKind::Par:
      os << "P(";
      for (const auto& q : p->parts()) {
        shape_key_rec(q, os);
        os << "|";
      }
      os << ")";
      return;
    case ProcessKind::Delim:
      os << "D(";
      id_key(p->ident());
      os << ",";
      shape_key_rec(p->body(), os);
      os << ")";
      return;
    case ProcessKind::Call:
      os << "C(" << p->call_name();
      for (const auto& a : p->call_args()) {
        os << ",";
        id_key(a);
      }
      os << ")";
      return;
  }
}

std::string shape_key(const ProcessPtr& p) {
  std::ostringstream os;
  shape_key_rec(p, os);
  return os.str();
}

// Drops latent contracts not owned by the participant (the ctx rule
// could add them unboundedly; they carry no prefixes and affect no
// predicate of the realizability check).
ProcessPtr prune_foreign_latents(const ProcessPtr& p, const std::string& participant) {
  switch (p->kind()) {
    case ProcessKind::Latent:
      if (p->owner() != participant || p->ident().is_name()) return Process::nil();
      return p;
    case ProcessKind::Sum: {
      std::vector<ProcBranch> bs;
      for (const auto& b : p->branches()) {
        if (b.prefix.kind == Prefix::Kind::Fuse && b.prefix.target.is_name()) continue;
        bs.push_back({b.prefix, prune_foreign_latents(b.cont, participant), b.addr});
      }
      return Process::sum(std::move(bs));
    }
    case ProcessKind::Par: {
      std::vector<ProcessPtr> ps;
      for (const auto& q : p->parts()) ps.push_back(prune_foreign_latents(q, participant));
      return Process::par(std::move(ps));
    }
    case ProcessKind::Delim: {
      ProcessPtr body = prune_foreign_latents(p->body(), participant);
      std::set<Ident> fv;
      free_idents(body, fv);
      if (!fv.count(p->ident())) return body;
      return Process::delim(p->ident(), body);
    }
    case ProcessKind::Call:
      return p;
  }
  return p;
}

struct CanonRenamer {
  std::map<Ident, Ident> map;  // free identifiers
  int vars = 0, names = 0, bound = 0;

  Ident rename(const Ident& u, const std::map<Ident, Ident>& boundEnv) {
    auto bit = boundEnv.find(u);
    if (bit != boundEnv.end()) return bit->second;
    if (u.id == kQuerySession) return u;
    auto it = map.find(u);
    if (it != map.end()) return it->second;
    Ident fresh = u.is_var() ? Ident::var("x" + std::to_string(vars++))
                             : Ident::name("n" + std::to_string(names++));
    map.emplace(u, fresh);
    return fresh;
  }

  ProcessPtr walk(const ProcessPtr& p, std::map<Ident, Ident> boundEnv) {
    switch (p->kind()) {
      case ProcessKind::Latent:
        return Process::latent(rename(p->ident(), boundEnv), p->owner(), p->contract());
      case ProcessKind::Sum: {
        std::vector<ProcBranch> bs;
        for (const auto& b : p->branches()) {
          Prefix pre = b.prefix;
          if (pre.kind != Prefix::Kind::Tau) pre.target = rename(pre.target, boundEnv);
          bs.push_back({pre, walk(b.cont, boundEnv), b.addr});
        }
        return Process::sum(std::move(bs));
      }
      case ProcessKind::Par: {
        // Children ordered by identifier-invariant shape first so that
        // alpha-variants canonicalize alike.
        std::vector<ProcessPtr> ps = p->parts();
        std::stable_sort(ps.begin(), ps.end(), [](const ProcessPtr& a, const ProcessPtr& b) {
          auto ka = shape_key(a), kb = shape_key(b);
          if (ka != kb) return ka < kb;
          return render_process(a) < render_process(b);
        });
        std::vector<ProcessPtr> out;
        for (const auto& q : ps) out.push_back(walk(q, boundEnv));
        return Process::par(std::move(out));
      }
      case ProcessKind::Delim: {
        Ident fresh = Ident{p->ident().kind, "b" + std::to_string(bound++)};
        boundEnv[p->ident()] = fresh;
        return Process::delim(fresh, walk(p->body(), boundEnv));
      }
      case ProcessKind::Call: {
        std::vector<Ident> args;
        for (const auto& a : p->call_args()) args.push_back(rename(a, boundEnv));
        return Process::call(p->call_name(), std::move(args));
      }
    }
    return p;
  }
};

}  // namespace

namespace {

void count_idents(const ProcessPtr& p, std::map<Ident, int>& out) {
  switch (p->kind()) {
    case ProcessKind::Latent:
      ++out[p->ident()];
      return;
    case ProcessKind::Sum:
      for (const auto& b : p->branches()) {
        if (b.prefix.kind != Prefix::Kind::Tau) ++out[b.prefix.target];
        count_idents(b.cont, out);
      }
      return;
    case ProcessKind::Par:
      for (const auto& q : p->parts()) count_idents(q, out);
      return;
    case ProcessKind::Delim:
      ++out[p->ident()];
      count_idents(p->body(), out);
      return;
    case ProcessKind::Call:
      for (const auto& a : p->call_args()) ++out[a];
      return;
  }
}

// Latent contracts carry no prefixes, so copies of one advertisement
// are indistinguishable to every predicate of the realizability check;
// under recursive tells they would otherwise accumulate without bound.
// Collapsed: exact duplicates, and same-contract latents whose
// variables occur nowhere else.
ProcessPtr dedupe_inert_latents(const ProcessPtr& p) {
  if (p->kind() != ProcessKind::Par) return p;
  std::map<Ident, int> uses;
  count_idents(p, uses);
  std::set<std::tuple<std::string, std::string, std::string>> seen;
  std::vector<ProcessPtr> kept;
  for (const auto& q : p->parts()) {
    if (q->kind() == ProcessKind::Latent && q->ident().is_var()) {
      std::string var_key = uses[q->ident()] == 1 ? "?" : q->ident().id;
      auto key = std::make_tuple(q->owner(), render_contract(q->contract()), var_key);
      if (!seen.insert(key).second) continue;
    }
    kept.push_back(q);
  }
  return Process::par(std::move(kept));
}

}  // namespace

AbstractState make_abstract_state(const std::string& participant, const ProcessPtr& body,
                                  const Definitions& defs) {
  (void)defs;
  ProcessPtr opened = open_top(prune_foreign_latents(body, participant));
  opened = prune_foreign_latents(opened, participant);  // delim removal may expose garbage
  CanonRenamer renamer;
  ProcessPtr canon = dedupe_inert_latents(renamer.walk(opened, {}));
  CanonRenamer renumber;  //密gaps left by dropped duplicates
  canon = renumber.walk(canon, {});
  AbstractState st;
  st.participant = participant;
  st.body = canon;
  st.fresh_counter = renumber.names;
  st.key = render_process(canon);
  return st;
}

std::string AbsLabel::str() const {
  if (kind == Kind::Ctx) return "ctx";
  std::string s = prefix.str() + " @ " + addr.str();
  if (instance > 0) s += "#" + std::to_string(instance);
  return s;
}

std::vector<std::pair<AbsLabel, AbstractState>> abs_process_steps(const AbstractState& st,
                                                                  const Definitions& defs) {
  std::vector<std::pair<AbsLabel, AbstractState>> out;
  std::string fresh_name = "n" + std::to_string(st.fresh_counter);

  for (const Redex& rx : gather_redexes(st.body, defs)) {
    const Prefix& pre = rx.prefix;
    AbsLabel label{AbsLabel::Kind::Prefix, pre, rx.addr, rx.instance};
    switch (pre.kind) {
      case Prefix::Kind::Tau:
        out.push_back({label, make_abstract_state(st.participant, rx.rest, defs)});
        break;
      case Prefix::Kind::Tell: {
        ProcessPtr latent = Process::latent(pre.target, st.participant, pre.contract);
        out.push_back({label, make_abstract_state(st.participant,
                                                  Process::par({latent, rx.rest}), defs)});
        break;
      }
      case Prefix::Kind::Fuse: {
        if (pre.target.is_name()) break;  // garbage branch
        Subst sigma{{pre.target, Ident::name(fresh_name)}};
        label.prefix.target = Ident::name(fresh_name);
        out.push_back(
            {label, make_abstract_state(st.participant, apply_subst(rx.rest, sigma), defs)});
        break;
      }
      case Prefix::Kind::Do:
        if (!pre.target.is_name()) break;  // not enabled on a variable
        out.push_back({label, make_abstract_state(st.participant, rx.rest, defs)});
        break;
      case Prefix::Kind::Ask: {
        // The context may always supply a session satisfying the guard.
        Subst sigma;
        if (pre.target.is_var()) {
          sigma[pre.target] = Ident::name(fresh_name);
          label.prefix.target = Ident::name(fresh_name);
        }
        out.push_back(
            {label, make_abstract_state(st.participant, apply_subst(rx.rest, sigma), defs)});
        break;
      }
    }
  }

  // ctx: identity, plus each single free-variable instantiation.
  out.push_back({AbsLabel{}, st});
  std::set<Ident> fv;
  free_idents(st.body, fv);
  for (const Ident& v : fv) {
    if (!v.is_var()) continue;
    Subst sigma{{v, Ident::name(fresh_name)}};
    out.push_back(
        {AbsLabel{}, make_abstract_state(st.participant, apply_subst(st.body, sigma), defs)});
  }
  return out;
}

std::string dump_abstract_graph(const AbstractState& root, const Definitions& defs,
                                std::size_t state_cap) {
  std::vector<AbstractState> states{root};
  std::map<std::string, int> index{{root.key, 0}};
  nlohmann::json edges = nlohmann::json::array();
  std::deque<int> queue{0};
  while (!queue.empty()) {
    int id = queue.front();
    queue.pop_front();
    for (const auto& [label, next] : abs_process_steps(states[static_cast<std::size_t>(id)], defs)) {
      auto [it, fresh] = index.emplace(next.key, static_cast<int>(states.size()));
      if (fresh) {
        if (states.size() >= state_cap)
          throw CapExceeded("abstract graph dump exceeded the state cap");
        states.push_back(next);
        queue.push_back(it->second);
      }
      edges.push_back({{"from", id}, {"label", label.str()}, {"to", it->second}});
    }
  }
  nlohmann::json j;
  j["nodes"] = nlohmann::json::array();
  for (std::size_t i = 0; i < states.size(); ++i)
    j["nodes"].push_back({{"id", static_cast<int>(i)}, {"body", states[i].key}});
  j["edges"] = std::move(edges);
  return j.dump(2) + "\n";
}

}  // namespace co2
