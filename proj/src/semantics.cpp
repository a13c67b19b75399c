#include "co2/semantics.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <sstream>

#include "co2/errors.hpp"
#include "co2/ltl.hpp"

#include "json.hpp"

namespace co2 {

namespace {

// ---------------------------------------------------------------------------
// Normalization
// ---------------------------------------------------------------------------

void collect_ids(const ProcessPtr& p, std::set<std::string>& out);

void collect_ids_prefix(const Prefix& pre, std::set<std::string>& out) {
  if (pre.kind != Prefix::Kind::Tau) out.insert(pre.target.id);
}

void collect_ids(const ProcessPtr& p, std::set<std::string>& out) {
  switch (p->kind()) {
    case ProcessKind::Latent: out.insert(p->ident().id); return;
    case ProcessKind::Sum:
      for (const auto& b : p->branches()) {
        collect_ids_prefix(b.prefix, out);
        collect_ids(b.cont, out);
      }
      return;
    case ProcessKind::Par:
      for (const auto& q : p->parts()) collect_ids(q, out);
      return;
    case ProcessKind::Delim:
      out.insert(p->ident().id);
      collect_ids(p->body(), out);
      return;
    case ProcessKind::Call:
      for (const auto& a : p->call_args()) out.insert(a.id);
      return;
  }
}

void collect_ids(const SystemPtr& s, std::set<std::string>& out) {
  switch (s->kind()) {
    case SystemKind::Box: collect_ids(s->process(), out); return;
    case SystemKind::Session: out.insert(s->session_name()); return;
    case SystemKind::Par:
      for (const auto& q : s->parts()) collect_ids(q, out);
      return;
    case SystemKind::Delim:
      out.insert(s->ident().id);
      collect_ids(s->body(), out);
      return;
  }
}

struct FreshIds {
  std::set<std::string> used;
  int var_counter = 0;
  int name_counter = 0;

  std::string fresh_var() {
    while (true) {
      std::string id = "v" + std::to_string(var_counter++);
      if (used.insert(id).second) return id;
    }
  }
  std::string fresh_name() {
    while (true) {
      std::string id = "n" + std::to_string(name_counter++);
      if (used.insert(id).second) return id;
    }
  }
  Ident fresh(Ident::Kind k) {
    return k == Ident::Kind::Var ? Ident::var(fresh_var()) : Ident::name(fresh_name());
  }
};

// Garbage collection inside a process: latent contracts on session
// names and fuse-on-name branches vanish, unused delimitations drop.
ProcessPtr gc_process(const ProcessPtr& p) {
  switch (p->kind()) {
    case ProcessKind::Latent:
      if (p->ident().is_name()) return Process::nil();
      return p;
    case ProcessKind::Sum: {
      std::vector<ProcBranch> bs;
      for (const auto& b : p->branches()) {
        if (b.prefix.kind == Prefix::Kind::Fuse && b.prefix.target.is_name()) continue;
        bs.push_back({b.prefix, gc_process(b.cont), b.addr});
      }
      return Process::sum(std::move(bs));
    }
    case ProcessKind::Par: {
      std::vector<ProcessPtr> ps;
      for (const auto& q : p->parts()) ps.push_back(gc_process(q));
      return Process::par(std::move(ps));
    }
    case ProcessKind::Delim: {
      ProcessPtr body = gc_process(p->body());
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

struct Normalizer {
  FreshIds fresh;
  std::set<std::string> seen_binders;
  std::set<Ident> global_free;

  std::vector<Ident> delims;
  std::map<std::string, Bilateral> sessions;
  std::map<std::string, std::vector<ProcessPtr>> box_parts;
  std::map<std::string, int> code_boxes;

  Ident bind(const Ident& u, Subst& env) {
    Ident target = u;
    if (seen_binders.count(u.id) || global_free.count(u)) target = fresh.fresh(u.kind);
    seen_binders.insert(target.id);
    env[u] = target;
    delims.push_back(target);
    return target;
  }

  // Hoists unguarded delimitations out of a box process and splits it
  // into parallel components.
  void walk_process(const ProcessPtr& p, Subst env, const std::string& box) {
    switch (p->kind()) {
      case ProcessKind::Delim: {
        bind(p->ident(), env);
        walk_process(p->body(), env, box);
        return;
      }
      case ProcessKind::Par:
        for (const auto& q : p->parts()) walk_process(q, env, box);
        return;
      default:
        box_parts[box].push_back(apply_subst(p, env));
        return;
    }
  }

  void walk(const SystemPtr& s, Subst env) {
    switch (s->kind()) {
      case SystemKind::Delim: {
        bind(s->ident(), env);
        walk(s->body(), env);
        return;
      }
      case SystemKind::Par:
        for (const auto& q : s->parts()) walk(q, env);
        return;
      case SystemKind::Box: {
        auto& parts = box_parts[s->participant()];
        std::size_t start = parts.size();
        walk_process(s->process(), env, s->participant());
        bool has_code = std::any_of(parts.begin() + start, parts.end(), [](const ProcessPtr& q) {
          return q->kind() != ProcessKind::Latent;
        });
        if (has_code && ++code_boxes[s->participant()] > 1)
          throw PreconditionError("participant " + s->participant() +
                                  " has two boxes with non-latent code");
        return;
      }
      case SystemKind::Session: {
        Ident n = Ident::name(s->session_name());
        auto it = env.find(n);
        std::string name = it == env.end() ? s->session_name() : it->second.id;
        if (!sessions.emplace(name, s->bilateral()).second)
          throw PreconditionError("duplicate session name " + name);
        return;
      }
    }
  }
};

std::string process_sort_key(const ProcessPtr& p) {
  // Latents last so active code reads first; ties broken textually.
  std::string k = render_process(p);
  return (p->kind() == ProcessKind::Latent ? "1" : "0") + k;
}

}  // namespace

NormalSystem normalize_system(const SystemPtr& s) {
  Normalizer nz;
  collect_ids(s, nz.fresh.used);
  free_idents(s, nz.global_free);
  nz.walk(s, {});

  NormalSystem out;
  out.sessions = std::move(nz.sessions);

  for (auto& [name, parts] : nz.box_parts) {
    std::vector<ProcessPtr> cleaned;
    for (auto& q : parts) {
      ProcessPtr g = gc_process(q);
      if (!g->is_nil()) {
        if (g->kind() == ProcessKind::Par)
          cleaned.insert(cleaned.end(), g->parts().begin(), g->parts().end());
        else
          cleaned.push_back(g);
      }
    }
    std::stable_sort(cleaned.begin(), cleaned.end(), [](const ProcessPtr& a, const ProcessPtr& b) {
      return process_sort_key(a) < process_sort_key(b);
    });
    out.boxes[name] = Process::par(std::move(cleaned));
  }

  // Drop unused delimitations, keep first-occurrence order.
  std::set<Ident> used;
  for (const auto& [name, p] : out.boxes) free_idents(p, used);
  for (const auto& [name, g] : out.sessions) used.insert(Ident::name(name));
  std::set<std::string> kept;
  for (const auto& u : nz.delims)
    if (used.count(u) && kept.insert(u.id).second) out.delims.push_back(u);
  return out;
}

std::string NormalSystem::str() const { return render_system(to_system()); }

SystemPtr NormalSystem::to_system() const {
  std::vector<SystemPtr> parts;
  for (const auto& [name, g] : sessions) parts.push_back(System::session(name, g));
  for (const auto& [name, p] : boxes) parts.push_back(System::box(name, p));
  SystemPtr body = System::par(std::move(parts));
  for (auto it = delims.rbegin(); it != delims.rend(); ++it) body = System::delim(*it, body);
  return body;
}

bool NormalSystem::closed() const {
  std::set<Ident> fv;
  free_idents(to_system(), fv);
  return fv.empty();
}

// ---------------------------------------------------------------------------
// Redex discovery
// ---------------------------------------------------------------------------

namespace {

void gather_redexes_rec(const ProcessPtr& p, const Definitions& defs,
                        const std::function<ProcessPtr(ProcessPtr)>& rebuild,
                        std::vector<Redex>& out) {
  switch (p->kind()) {
    case ProcessKind::Latent:
      return;
    case ProcessKind::Sum:
      for (const auto& b : p->branches())
        out.push_back({b.prefix, b.cont, b.addr, 0, rebuild(b.cont), rebuild(Process::nil())});
      return;
    case ProcessKind::Par: {
      for (std::size_t i = 0; i < p->parts().size(); ++i) {
        auto wrap = [&, i](ProcessPtr repl) {
          std::vector<ProcessPtr> ps = p->parts();
          ps[static_cast<std::size_t>(i)] = std::move(repl);
          return Process::par(std::move(ps));
        };
        gather_redexes_rec(p->parts()[i], defs,
                           [&, wrap](ProcessPtr r) { return rebuild(wrap(std::move(r))); }, out);
      }
      return;
    }
    case ProcessKind::Delim: {
      auto wrap = [&](ProcessPtr repl) {
        return rebuild(Process::delim(p->ident(), std::move(repl)));
      };
      gather_redexes_rec(p->body(), defs, wrap, out);
      return;
    }
    case ProcessKind::Call: {
      auto it = defs.find(p->call_name());
      if (it == defs.end())
        throw PreconditionError("undefined process identifier " + p->call_name());
      const Definition& def = it->second;
      if (def.params.size() != p->call_args().size())
        throw PreconditionError("arity mismatch in call to " + p->call_name());
      Subst sub;
      for (std::size_t i = 0; i < def.params.size(); ++i)
        sub[Ident::var(def.params[i])] = p->call_args()[i];
      ProcessPtr body = apply_subst(def.body, sub);
      gather_redexes_rec(body, defs, rebuild, out);
      return;
    }
  }
}

}  // namespace

std::vector<Redex> gather_redexes(const ProcessPtr& p, const Definitions& defs) {
  std::vector<Redex> out;
  gather_redexes_rec(p, defs, [](ProcessPtr r) { return r; }, out);
  for (std::size_t i = 0; i < out.size(); ++i) {
    int count = 0;
    for (std::size_t j = 0; j < i; ++j)
      if (out[j].addr == out[i].addr) ++count;
    out[i].instance = count;
  }
  return out;
}

namespace {

void gather_latents(const ProcessPtr& p, std::vector<LatentContract>& out) {
  switch (p->kind()) {
    case ProcessKind::Latent:
      out.push_back({p->ident(), p->owner(), p->contract()});
      return;
    case ProcessKind::Par:
      for (const auto& q : p->parts()) gather_latents(q, out);
      return;
    case ProcessKind::Delim:
      gather_latents(p->body(), out);
      return;
    case ProcessKind::Sum:
    case ProcessKind::Call:
      return;
  }
}

// Removes one latent occurrence (first in traversal order).
ProcessPtr remove_latent(const ProcessPtr& p, const LatentContract& l, bool& removed) {
  if (removed) return p;
  switch (p->kind()) {
    case ProcessKind::Latent:
      if (p->ident() == l.var && p->owner() == l.owner && equal(p->contract(), l.contract)) {
        removed = true;
        return Process::nil();
      }
      return p;
    case ProcessKind::Par: {
      std::vector<ProcessPtr> ps;
      for (const auto& q : p->parts()) ps.push_back(remove_latent(q, l, removed));
      return Process::par(std::move(ps));
    }
    case ProcessKind::Delim:
      return Process::delim(p->ident(), remove_latent(p->body(), l, removed));
    case ProcessKind::Sum:
    case ProcessKind::Call:
      return p;
  }
  return p;
}

std::string fresh_session_name(const NormalSystem& ns) {
  std::set<std::string> used;
  collect_ids(ns.to_system(), used);
  for (int k = 0;; ++k) {
    std::string name = "s" + std::to_string(k);
    if (!used.count(name)) return name;
  }
}

std::string address_string(const Address& addr, int instance) {
  std::string s = addr.str();
  if (instance > 0) s += "#" + std::to_string(instance);
  return s;
}

}  // namespace

std::vector<Agreement> find_agreements(const std::vector<LatentContract>& k, const Ident& x,
                                       const std::string& fresh_session,
                                       std::size_t contract_cap) {
  std::vector<Agreement> out;
  for (std::size_t i = 0; i < k.size(); ++i) {
    for (std::size_t j = 0; j < k.size(); ++j) {
      if (i == j) continue;
      const LatentContract& a = k[i];
      const LatentContract& b = k[j];
      if (a.owner >= b.owner) continue;  // canonical orientation, distinct owners
      if (!a.var.is_var() || !b.var.is_var()) continue;
      if (!is_compliant(a.contract, b.contract, contract_cap).compliant) continue;
      std::vector<LatentContract> remaining;
      for (std::size_t r = 0; r < k.size(); ++r)
        if (r != i && r != j) remaining.push_back(k[r]);
      Ident s = Ident::name(fresh_session);
      Subst sigma;
      sigma[x] = s;
      sigma[a.var] = s;
      sigma[b.var] = s;
      out.push_back({Bilateral(a.owner, a.contract, b.owner, b.contract), std::move(remaining),
                     std::move(sigma)});
    }
  }
  return out;
}

std::set<Atom> ready_do(const std::string& session, const ProcessPtr& p, const Definitions& defs) {
  std::set<Atom> out;
  std::function<void(const ProcessPtr&)> go = [&](const ProcessPtr& q) {
    switch (q->kind()) {
      case ProcessKind::Latent:
        return;
      case ProcessKind::Sum:
        for (const auto& b : q->branches())
          if (b.prefix.kind == Prefix::Kind::Do && b.prefix.target.is_name() &&
              b.prefix.target.id == session)
            out.insert(b.prefix.atom);
        return;
      case ProcessKind::Par:
        for (const auto& r : q->parts()) go(r);
        return;
      case ProcessKind::Delim:
        if (q->ident().is_name() && q->ident().id == session) return;  // s captured
        go(q->body());
        return;
      case ProcessKind::Call: {
        auto it = defs.find(q->call_name());
        if (it == defs.end()) return;
        Subst sub;
        for (std::size_t i = 0; i < it->second.params.size() && i < q->call_args().size(); ++i)
          sub[Ident::var(it->second.params[i])] = q->call_args()[i];
        go(apply_subst(it->second.body, sub));
        return;
      }
    }
  };
  go(p);
  return out;
}

bool culpable_at(const std::string& participant, const std::string& session,
                 const NormalSystem& s) {
  auto it = s.sessions.find(session);
  if (it == s.sessions.end()) return false;
  if (!it->second.has_participant(participant)) return false;
  return is_culpable(it->second, participant);
}

// ---------------------------------------------------------------------------
// Reduction steps
// ---------------------------------------------------------------------------

std::vector<SysStep> system_steps(const NormalSystem& ns, const Definitions& defs,
                                  std::size_t contract_cap) {
  std::vector<SysStep> out;
  for (const auto& [participant, proc] : ns.boxes) {
    for (const Redex& rx : gather_redexes(proc, defs)) {
      const Prefix& pre = rx.prefix;
      switch (pre.kind) {
        case Prefix::Kind::Tau: {
          NormalSystem next = ns;
          next.boxes[participant] = rx.rest;
          out.push_back({{participant, pre.str(), address_string(rx.addr, rx.instance)},
                         normalize_system(next.to_system())});
          break;
        }
        case Prefix::Kind::Tell: {
          NormalSystem next = ns;
          next.boxes[participant] = rx.rest;
          ProcessPtr latent = Process::latent(pre.target, participant, pre.contract);
          auto it = next.boxes.find(pre.tell_to);
          if (it == next.boxes.end())
            next.boxes[pre.tell_to] = latent;
          else
            it->second = Process::par({it->second, latent});
          out.push_back({{participant, pre.str(), address_string(rx.addr, rx.instance)},
                         normalize_system(next.to_system())});
          break;
        }
        case Prefix::Kind::Fuse: {
          if (pre.target.is_name()) break;  // garbage, removed by congruence
          // Agreements only see latent contracts that exist before the
          // step; the continuation's own latents are not yet exposed.
          std::vector<LatentContract> k;
          gather_latents(rx.context, k);
          std::string fresh = fresh_session_name(ns);
          for (const Agreement& ag : find_agreements(k, pre.target, fresh, contract_cap)) {
            ProcessPtr stripped = rx.rest;
            for (const LatentContract& l : {LatentContract{Ident(), ag.gamma.left_name(),
                                                           ag.gamma.left()},
                                            LatentContract{Ident(), ag.gamma.right_name(),
                                                           ag.gamma.right()}}) {
              // match var through sigma: the fused latents map to the session
              bool removed = false;
              for (const auto& [from, to] : ag.sigma) {
                LatentContract probe{from, l.owner, l.contract};
                stripped = remove_latent(stripped, probe, removed);
                if (removed) break;
              }
              if (!removed)
                throw InternalError("fuse could not locate a fused latent contract");
            }
            NormalSystem next = ns;
            next.boxes[participant] = stripped;
            for (auto& [name, p] : next.boxes) p = apply_subst(p, ag.sigma);
            next.sessions.emplace(fresh, ag.gamma);
            next.delims.push_back(Ident::name(fresh));
            Prefix fired = pre;
            fired.target = Ident::name(fresh);
            out.push_back({{participant, fired.str(), address_string(rx.addr, rx.instance)},
                           normalize_system(next.to_system())});
          }
          break;
        }
        case Prefix::Kind::Do: {
          if (!pre.target.is_name()) break;  // uninstantiated session variable
          auto it = ns.sessions.find(pre.target.id);
          if (it == ns.sessions.end()) break;
          if (!it->second.has_participant(participant)) break;
          ContractLabel want{participant, pre.atom};
          for (const auto& [label, gamma] : bilateral_steps(it->second)) {
            if (!(label == want)) continue;
            NormalSystem next = ns;
            next.boxes[participant] = rx.rest;
            next.sessions.erase(pre.target.id);
            next.sessions.emplace(pre.target.id, gamma);
            out.push_back({{participant, pre.str(), address_string(rx.addr, rx.instance)},
                           normalize_system(next.to_system())});
          }
          break;
        }
        case Prefix::Kind::Ask: {
          if (!pre.target.is_name()) break;
          auto it = ns.sessions.find(pre.target.id);
          if (it == ns.sessions.end()) break;
          if (!ltl_holds(it->second, pre.formula, contract_cap)) break;
          NormalSystem next = ns;
          next.boxes[participant] = rx.rest;
          out.push_back({{participant, pre.str(), address_string(rx.addr, rx.instance)},
                         normalize_system(next.to_system())});
          break;
        }
      }
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const SysStep& a, const SysStep& b) { return a.label < b.label; });
  out.erase(std::unique(out.begin(), out.end(),
                        [](const SysStep& a, const SysStep& b) {
                          return a.label == b.label && a.next.str() == b.next.str();
                        }),
            out.end());
  return out;
}

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

SimPolicy SimPolicy::exhaustive(std::size_t frontier) {
  SimPolicy p;
  p.kind = Kind::ExhaustiveBounded;
  p.frontier_cap = frontier;
  return p;
}
SimPolicy SimPolicy::random(std::uint64_t seed) {
  SimPolicy p;
  p.kind = Kind::SeededRandom;
  p.seed = seed;
  return p;
}
SimPolicy SimPolicy::fixed(std::vector<std::pair<std::string, std::string>> script) {
  SimPolicy p;
  p.kind = Kind::FixedScript;
  p.script = std::move(script);
  return p;
}
SimPolicy SimPolicy::solo(std::string participant, std::uint64_t seed) {
  SimPolicy p;
  p.kind = Kind::ParticipantSolo;
  p.solo_participant = std::move(participant);
  p.seed = seed;
  return p;
}

namespace {

// Deterministic across platforms (unlike uniform_int_distribution).
struct Rng {
  std::uint64_t state;
  explicit Rng(std::uint64_t seed) : state(seed ^ 0x9e3779b97f4a7c15ULL) {}
  std::uint64_t next() {
    state ^= state << 13;
    state ^= state >> 7;
    state ^= state << 17;
    return state;
  }
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(next() % n); }
};

void record_culpability(SimTrace& tr, std::size_t step, const NormalSystem& s) {
  for (const auto& [name, gamma] : s.sessions) {
    for (const std::string& p : {gamma.left_name(), gamma.right_name()})
      tr.culpability.push_back({step, name, p, is_culpable(gamma, p)});
  }
}

}  // namespace

SimTrace simulate(const NormalSystem& s0, const Definitions& defs, const SimPolicy& policy,
                  std::size_t max_steps, std::size_t contract_cap) {
  if (max_steps == 0) throw PreconditionError("max_steps must be positive");
  if (!s0.closed()) throw PreconditionError("simulation requires a closed system");

  SimTrace tr;
  tr.states.push_back(s0);
  record_culpability(tr, 0, s0);

  if (policy.kind == SimPolicy::Kind::ExhaustiveBounded) {
    // Breadth-first exploration, linearized in discovery order.
    std::set<std::string> seen{s0.str()};
    std::deque<NormalSystem> frontier{s0};
    std::size_t steps = 0;
    while (!frontier.empty() && steps < max_steps) {
      NormalSystem cur = std::move(frontier.front());
      frontier.pop_front();
      for (const auto& step : system_steps(cur, defs, contract_cap)) {
        if (!seen.insert(step.next.str()).second) continue;
        if (frontier.size() >= policy.frontier_cap)
          throw CapExceeded("exhaustive simulation exceeded the frontier cap");
        tr.labels.push_back(step.label);
        tr.states.push_back(step.next);
        record_culpability(tr, tr.states.size() - 1, step.next);
        frontier.push_back(step.next);
        if (++steps >= max_steps) break;
      }
    }
    return tr;
  }

  Rng rng(policy.seed);
  NormalSystem cur = s0;
  for (std::size_t i = 0; i < max_steps; ++i) {
    std::vector<SysStep> steps = system_steps(cur, defs, contract_cap);
    if (policy.kind == SimPolicy::Kind::ParticipantSolo) {
      std::erase_if(steps, [&](const SysStep& s) {
        return s.label.participant != policy.solo_participant;
      });
    }
    const SysStep* chosen = nullptr;
    if (policy.kind == SimPolicy::Kind::FixedScript) {
      if (i >= policy.script.size()) break;
      const auto& [who, addr] = policy.script[i];
      for (const auto& s : steps)
        if (s.label.participant == who && s.label.address == addr) {
          chosen = &s;
          break;
        }
      if (!chosen)
        throw ScriptError("script step " + std::to_string(i) + " (" + who + " " + addr +
                          ") is not enabled");
    } else {
      if (steps.empty()) break;  // stuck
      chosen = &steps[rng.below(steps.size())];
    }
    tr.labels.push_back(chosen->label);
    tr.states.push_back(chosen->next);
    record_culpability(tr, tr.states.size() - 1, chosen->next);
    cur = tr.states.back();
  }
  return tr;
}

std::string SimTrace::to_json() const {
  nlohmann::json j;
  j["states"] = nlohmann::json::array();
  for (const auto& s : states) j["states"].push_back(s.str());
  j["labels"] = nlohmann::json::array();
  for (const auto& l : labels)
    j["labels"].push_back({{"participant", l.participant},
                           {"prefix", l.prefix},
                           {"address", l.address}});
  j["culpability"] = nlohmann::json::array();
  for (const auto& c : culpability)
    j["culpability"].push_back({{"step", c.step},
                                {"session", c.session},
                                {"participant", c.participant},
                                {"culpable", c.culpable}});
  return j.dump(2) + "\n";
}

}  // namespace co2
