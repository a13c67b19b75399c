#include "co2/honesty.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <map>
#include <set>
#include <unordered_map>

#include "co2/errors.hpp"

#include "json.hpp"

namespace co2 {

namespace {

// ---------------------------------------------------------------------------
// Abstract graph exploration (per realizes query)
// ---------------------------------------------------------------------------

struct AbsEdge {
  int target;
  bool is_do_query = false;  // do on the query session
  Atom do_atom;
  bool fair = false;         // tau or tell
  std::string fair_addr;     // address (without instance) for fairness
};

struct AbsGraph {
  const Definitions& defs;
  std::string session;
  std::size_t cap;

  std::vector<AbstractState> states;
  std::map<std::string, int> index;
  std::vector<std::vector<AbsEdge>> edges;
  std::vector<std::set<std::string>> enabled_fair;  // tau/tell addresses per state
  std::vector<std::set<Atom>> rd;                   // RD_session per state

  int add(const AbstractState& st) {
    auto it = index.find(st.key);
    if (it != index.end()) return it->second;
    int id = static_cast<int>(states.size());
    if (states.size() >= cap)
      throw CapExceeded("abstract state space exceeded the cap of " + std::to_string(cap));
    index.emplace(st.key, id);
    states.push_back(st);
    edges.emplace_back();
    enabled_fair.emplace_back();
    rd.push_back(ready_do(session, st.body, defs));
    return id;
  }

  void explore(int root) {
    std::deque<int> queue{root};
    std::set<int> expanded;
    while (!queue.empty()) {
      int id = queue.front();
      queue.pop_front();
      if (!expanded.insert(id).second) continue;
      AbstractState st = states[static_cast<std::size_t>(id)];
      for (const auto& [label, next] : abs_process_steps(st, defs)) {
        int nid = add(next);
        AbsEdge e;
        e.target = nid;
        if (label.kind == AbsLabel::Kind::Prefix) {
          const Prefix& pre = label.prefix;
          if (pre.kind == Prefix::Kind::Do && pre.target.is_name() && pre.target.id == session) {
            e.is_do_query = true;
            e.do_atom = pre.atom;
          }
          if (pre.kind == Prefix::Kind::Tau || pre.kind == Prefix::Kind::Tell) {
            e.fair = true;
            e.fair_addr = label.addr.str();
          }
        }
        edges[static_cast<std::size_t>(id)].push_back(e);
        if (!expanded.count(nid)) queue.push_back(nid);
      }
      // Fairness-relevant prefixes enabled at this state.
      for (const Redex& rx : gather_redexes(st.body, defs))
        if (rx.prefix.kind == Prefix::Kind::Tau || rx.prefix.kind == Prefix::Kind::Tell)
          enabled_fair[static_cast<std::size_t>(id)].insert(rx.addr.str());
    }
  }
};

// Tarjan SCCs over the do_query-free subgraph.
struct SccInfo {
  std::vector<int> comp;  // state -> scc id
  int count = 0;
};

SccInfo scc_do_free(const AbsGraph& g) {
  int n = static_cast<int>(g.states.size());
  SccInfo info;
  info.comp.assign(n, -1);
  std::vector<int> idx(n, -1), low(n, 0);
  std::vector<bool> on(n, false);
  std::vector<int> stck;
  int counter = 0;
  std::function<void(int)> dfs = [&](int v) {
    idx[v] = low[v] = counter++;
    stck.push_back(v);
    on[v] = true;
    for (const auto& e : g.edges[static_cast<std::size_t>(v)]) {
      if (e.is_do_query) continue;
      int w = e.target;
      if (idx[w] < 0) {
        dfs(w);
        low[v] = std::min(low[v], low[w]);
      } else if (on[w]) {
        low[v] = std::min(low[v], idx[w]);
      }
    }
    if (low[v] == idx[v]) {
      while (true) {
        int w = stck.back();
        stck.pop_back();
        on[w] = false;
        info.comp[w] = info.count;
        if (w == v) break;
      }
      ++info.count;
    }
  };
  for (int v = 0; v < n; ++v)
    if (idx[v] < 0) dfs(v);
  return info;
}

bool unblocks_or_false(const ContractPtr& c, const std::set<Atom>& xs) {
  if (unfold(c)->is_nil()) return false;
  return unblocks(c, xs);
}

}  // namespace

RealizesResult realizes(const AbstractState& state, const ContractPtr& contract,
                        const std::string& session, const Definitions& defs,
                        std::size_t state_cap) {
  if (unfold(contract)->is_nil())
    throw PreconditionError("realizes is undefined for the failed contract 0");
  AbsGraph g{defs, session, state_cap, {}, {}, {}, {}, {}};
  int root = g.add(state);
  g.explore(root);
  int n = static_cast<int>(g.states.size());

  SccInfo scc = scc_do_free(g);

  // A fairness-admissible cycle exists within an SCC iff every tau/tell
  // address enabled at all of its states is fired by an internal edge.
  // (A cycle cannot dodge an everywhere-enabled address by shrinking.)
  std::vector<std::set<std::string>> fired(static_cast<std::size_t>(scc.count));
  std::vector<bool> has_internal_edge(static_cast<std::size_t>(scc.count), false);
  for (int v = 0; v < n; ++v)
    for (const auto& e : g.edges[static_cast<std::size_t>(v)]) {
      if (e.is_do_query) continue;
      if (scc.comp[v] != scc.comp[e.target]) continue;
      has_internal_edge[static_cast<std::size_t>(scc.comp[v])] = true;
      if (e.fair) fired[static_cast<std::size_t>(scc.comp[v])].insert(e.fair_addr);
    }
  std::vector<std::vector<int>> members(static_cast<std::size_t>(scc.count));
  for (int v = 0; v < n; ++v) members[static_cast<std::size_t>(scc.comp[v])].push_back(v);
  std::vector<bool> admissible(static_cast<std::size_t>(scc.count), false);
  for (int c = 0; c < scc.count; ++c) {
    if (!has_internal_edge[static_cast<std::size_t>(c)]) continue;
    std::set<std::string> throughout = g.enabled_fair[static_cast<std::size_t>(members[static_cast<std::size_t>(c)][0])];
    for (int v : members[static_cast<std::size_t>(c)]) {
      std::set<std::string> inter;
      std::set_intersection(throughout.begin(), throughout.end(),
                            g.enabled_fair[static_cast<std::size_t>(v)].begin(),
                            g.enabled_fair[static_cast<std::size_t>(v)].end(),
                            std::inserter(inter, inter.begin()));
      throughout = std::move(inter);
    }
    admissible[static_cast<std::size_t>(c)] =
        std::includes(fired[static_cast<std::size_t>(c)].begin(),
                      fired[static_cast<std::size_t>(c)].end(), throughout.begin(),
                      throughout.end());
  }

  // Contract registry for pair bookkeeping.
  std::vector<ContractPtr> contracts;
  std::unordered_map<ContractPtr, int, ContractHash, ContractEq> cindex;
  auto contract_id = [&](const ContractPtr& c) {
    auto it = cindex.find(c);
    if (it != cindex.end()) return it->second;
    int id = static_cast<int>(contracts.size());
    cindex.emplace(c, id);
    contracts.push_back(c);
    return id;
  };

  // Per-process-state do_query-free reachable sets (memoized).
  std::map<int, std::vector<int>> reach_memo;
  auto do_free_reach = [&](int p0) -> const std::vector<int>& {
    auto it = reach_memo.find(p0);
    if (it != reach_memo.end()) return it->second;
    std::set<int> seen{p0};
    std::deque<int> queue{p0};
    while (!queue.empty()) {
      int v = queue.front();
      queue.pop_front();
      for (const auto& e : g.edges[static_cast<std::size_t>(v)]) {
        if (e.is_do_query) continue;
        if (seen.insert(e.target).second) queue.push_back(e.target);
      }
    }
    return reach_memo.emplace(p0, std::vector<int>(seen.begin(), seen.end())).first->second;
  };

  // Pair universe, built lazily from the root pair.
  struct Pair {
    int proc, contr;
    bool cond1_ok = true;
    int bad_state = -1;  // unblocks witness when cond1 fails
    std::vector<std::pair<std::string, int>> obligations;  // (do label, pair id)
    bool alive = true;
    int dead_via = -1;   // obligation index that killed it
  };
  std::vector<Pair> pairs;
  std::map<std::pair<int, int>, int> pindex;
  std::deque<int> work;
  auto pair_id = [&](int proc, int contr) {
    auto key = std::make_pair(proc, contr);
    auto it = pindex.find(key);
    if (it != pindex.end()) return it->second;
    int id = static_cast<int>(pairs.size());
    pindex.emplace(key, id);
    pairs.push_back({proc, contr, true, -1, {}, true, -1});
    work.push_back(id);
    return id;
  };

  int root_pair = pair_id(root, contract_id(contract));
  while (!work.empty()) {
    int id = work.front();
    work.pop_front();
    int proc = pairs[static_cast<std::size_t>(id)].proc;
    ContractPtr c = contracts[static_cast<std::size_t>(pairs[static_cast<std::size_t>(id)].contr)];

    // Condition 1: a reachable admissible SCC with a failing state.
    for (int v : do_free_reach(proc)) {
      int comp = scc.comp[v];
      if (!admissible[static_cast<std::size_t>(comp)]) continue;
      bool bad = false;
      int witness = -1;
      for (int w : members[static_cast<std::size_t>(comp)])
        if (!unblocks_or_false(c, g.rd[static_cast<std::size_t>(w)])) {
          bad = true;
          witness = w;
          break;
        }
      if (bad) {
        pairs[static_cast<std::size_t>(id)].cond1_ok = false;
        pairs[static_cast<std::size_t>(id)].bad_state = witness;
        break;
      }
    }

    // Condition 2 obligations: every do_s(a) edge from the do-free cone,
    // against every abstract contract move on a.
    auto& self = pairs[static_cast<std::size_t>(id)];
    if (self.cond1_ok) {
      for (int v : do_free_reach(proc)) {
        for (const auto& e : g.edges[static_cast<std::size_t>(v)]) {
          if (!e.is_do_query) continue;
          for (const auto& [clabel, ctarget] : abs_contract_steps(c)) {
            if (clabel.kind != AbsContractLabel::Kind::Act || clabel.atom != e.do_atom) continue;
            std::string label = "do " + session + " " + e.do_atom.str();
            int ob = pair_id(e.target, contract_id(ctarget));
            pairs[static_cast<std::size_t>(id)].obligations.push_back({label, ob});
          }
        }
      }
    }
  }

  // Greatest fixpoint: drop pairs failing condition 1 or with a dead
  // obligation, until stable.
  for (auto& p : pairs) p.alive = p.cond1_ok;
  bool changed = true;
  while (changed) {
    changed = false;
    for (auto& p : pairs) {
      if (!p.alive) continue;
      for (std::size_t i = 0; i < p.obligations.size(); ++i) {
        if (!pairs[static_cast<std::size_t>(p.obligations[i].second)].alive) {
          p.alive = false;
          p.dead_via = static_cast<int>(i);
          changed = true;
          break;
        }
      }
    }
  }

  RealizesResult res;
  res.realizes = pairs[static_cast<std::size_t>(root_pair)].alive;
  if (!res.realizes) {
    RealizesCertificate cert;
    int cur = root_pair;
    while (pairs[static_cast<std::size_t>(cur)].cond1_ok) {
      const Pair& p = pairs[static_cast<std::size_t>(cur)];
      if (p.dead_via < 0) break;  // should not happen
      cert.do_chain.push_back(p.obligations[static_cast<std::size_t>(p.dead_via)].first);
      cur = p.obligations[static_cast<std::size_t>(p.dead_via)].second;
    }
    const Pair& fp = pairs[static_cast<std::size_t>(cur)];
    cert.failing_process = g.states[static_cast<std::size_t>(fp.proc)].key;
    cert.failing_contract = render_contract(contracts[static_cast<std::size_t>(fp.contr)]);
    if (fp.bad_state >= 0) {
      int comp = scc.comp[fp.bad_state];
      for (int w : members[static_cast<std::size_t>(comp)])
        cert.lasso.push_back(g.states[static_cast<std::size_t>(w)].key);
    }
    res.certificate = std::move(cert);
  }
  return res;
}

// ---------------------------------------------------------------------------
// tell occurrences, x-safety, finite control
// ---------------------------------------------------------------------------

namespace {

void collect_tells_in(const ProcessPtr& p, const std::string& root,
                      std::vector<TellOccurrence>& out) {
  switch (p->kind()) {
    case ProcessKind::Sum:
      for (const auto& b : p->branches()) {
        if (b.prefix.kind == Prefix::Kind::Tell)
          out.push_back({root, b.addr, b.prefix, b.cont});
        collect_tells_in(b.cont, root, out);
      }
      return;
    case ProcessKind::Par:
      for (const auto& q : p->parts()) collect_tells_in(q, root, out);
      return;
    case ProcessKind::Delim:
      collect_tells_in(p->body(), root, out);
      return;
    case ProcessKind::Latent:
    case ProcessKind::Call:
      return;
  }
}

void reachable_defs(const ProcessPtr& p, const Definitions& defs, std::set<std::string>& out) {
  std::function<void(const ProcessPtr&)> go = [&](const ProcessPtr& q) {
    switch (q->kind()) {
      case ProcessKind::Call: {
        if (!out.insert(q->call_name()).second) return;
        auto it = defs.find(q->call_name());
        if (it == defs.end())
          throw PreconditionError("undefined process identifier " + q->call_name());
        go(it->second.body);
        return;
      }
      case ProcessKind::Sum:
        for (const auto& b : q->branches()) go(b.cont);
        return;
      case ProcessKind::Par:
        for (const auto& r : q->parts()) go(r);
        return;
      case ProcessKind::Delim:
        go(q->body());
        return;
      case ProcessKind::Latent:
        return;
    }
  };
  go(p);
}

// Does the term perform a do on the identifier (looking through calls)?
bool contains_do_on(const ProcessPtr& p, const Ident& x, const Definitions& defs,
                    std::set<std::pair<std::string, std::size_t>>& memo) {
  switch (p->kind()) {
    case ProcessKind::Latent:
      return false;
    case ProcessKind::Sum:
      for (const auto& b : p->branches()) {
        if (b.prefix.kind == Prefix::Kind::Do && b.prefix.target == x) return true;
        if (contains_do_on(b.cont, x, defs, memo)) return true;
      }
      return false;
    case ProcessKind::Par:
      return std::any_of(p->parts().begin(), p->parts().end(), [&](const ProcessPtr& q) {
        return contains_do_on(q, x, defs, memo);
      });
    case ProcessKind::Delim:
      if (p->ident() == x) return false;  // shadowed
      return contains_do_on(p->body(), x, defs, memo);
    case ProcessKind::Call: {
      auto it = defs.find(p->call_name());
      if (it == defs.end()) return false;
      const Definition& def = it->second;
      for (std::size_t i = 0; i < p->call_args().size() && i < def.params.size(); ++i) {
        if (!(p->call_args()[i] == x)) continue;
        auto key = std::make_pair(def.name, i);
        if (!memo.insert(key).second) continue;  // already being checked
        if (contains_do_on(def.body, Ident::var(def.params[i]), defs, memo)) return true;
      }
      return false;
    }
  }
  return false;
}

// Locates the sum carrying the addressed tell branch, recording the
// ancestor chain (root .. sum). Works on transformed bodies since the
// address travels with the branch.
bool find_tell_sum(const ProcessPtr& p, const Address& addr,
                   std::vector<const Process*>& ancestors, int& branch) {
  ancestors.push_back(p.get());
  switch (p->kind()) {
    case ProcessKind::Sum:
      for (std::size_t i = 0; i < p->branches().size(); ++i) {
        const auto& b = p->branches()[i];
        if (b.addr == addr && b.prefix.kind == Prefix::Kind::Tell) {
          branch = static_cast<int>(i);
          return true;
        }
        if (find_tell_sum(b.cont, addr, ancestors, branch)) return true;
      }
      break;
    case ProcessKind::Par:
      for (const auto& q : p->parts())
        if (find_tell_sum(q, addr, ancestors, branch)) return true;
      break;
    case ProcessKind::Delim:
      if (find_tell_sum(p->body(), addr, ancestors, branch)) return true;
      break;
    case ProcessKind::Latent:
    case ProcessKind::Call:
      break;
  }
  ancestors.pop_back();
  return false;
}

}  // namespace

std::vector<TellOccurrence> collect_tells(const ProcessPtr& p, const Definitions& defs) {
  std::vector<TellOccurrence> out;
  collect_tells_in(p, "@", out);
  std::set<std::string> names;
  reachable_defs(p, defs, names);
  for (const auto& name : names) {
    auto it = defs.find(name);
    if (it != defs.end()) collect_tells_in(it->second.body, name, out);
  }
  return out;
}

bool x_safe(const ProcessPtr& body, const Address& addr, const Definitions& defs) {
  std::vector<const Process*> ancestors;
  int branch = -1;
  if (!find_tell_sum(body, addr, ancestors, branch))
    throw PreconditionError("no tell at address " + addr.str());
  const Process* sum = ancestors.back();
  const Prefix& pre = sum->branches()[static_cast<std::size_t>(branch)].prefix;
  const Ident x = pre.target;
  if (x.is_name()) return true;  // already stipulated elsewhere; nothing to protect

  // The binder of the tell's x is the deepest Delim(x) on the ancestor
  // path; if none, x is free in this body.
  const Process* binder = nullptr;
  int binder_pos = -1;
  for (int i = static_cast<int>(ancestors.size()) - 2; i >= 0; --i) {
    const Process* a = ancestors[static_cast<std::size_t>(i)];
    if (a->kind() == ProcessKind::Delim && a->ident() == x) {
      binder = a;
      binder_pos = i;
      break;
    }
  }

  // Disjunct 1: the binder dominates the sum separated only by parallel
  // compositions (with x-free siblings) and other delimitations, so the
  // context is C'((x) .) up to hoisting.
  if (binder) {
    bool hoistable = true;
    for (int j = binder_pos + 1; hoistable && j + 1 < static_cast<int>(ancestors.size()); ++j) {
      const Process* mid = ancestors[static_cast<std::size_t>(j)];
      if (mid->kind() == ProcessKind::Delim) continue;
      if (mid->kind() != ProcessKind::Par) {
        hoistable = false;
        break;
      }
      for (const auto& q : mid->parts()) {
        if (q.get() == ancestors[static_cast<std::size_t>(j + 1)]) continue;
        std::set<Ident> fv;
        free_idents(q, fv);
        if (fv.count(x)) {
          hoistable = false;
          break;
        }
      }
    }
    if (hoistable) return true;
  }

  // Disjunct 2: the context performs no do on the tell's x. Scan the
  // binder's scope (or the whole body when x is free), skipping the
  // tell's sum; a nested re-binding Delim(x) shadows.
  std::set<std::pair<std::string, std::size_t>> memo;
  std::function<bool(const ProcessPtr&, const Process*)> ctx_has_do =
      [&](const ProcessPtr& q, const Process* skip) -> bool {
    if (q.get() == skip) return false;
    switch (q->kind()) {
      case ProcessKind::Latent:
        return false;
      case ProcessKind::Sum:
        for (const auto& b : q->branches()) {
          if (b.prefix.kind == Prefix::Kind::Do && b.prefix.target == x) return true;
          if (ctx_has_do(b.cont, skip)) return true;
        }
        return false;
      case ProcessKind::Par:
        for (const auto& r : q->parts())
          if (ctx_has_do(r, skip)) return true;
        return false;
      case ProcessKind::Delim:
        if (q->ident() == x && q.get() != binder) return false;  // re-binding
        return ctx_has_do(q->body(), skip);
      case ProcessKind::Call:
        return contains_do_on(q, x, defs, memo);
    }
    return false;
  };
  const ProcessPtr scan_root = binder ? binder->body() : body;
  return !ctx_has_do(scan_root, sum);
}

bool is_finite_control(const ProcessPtr& p, const Definitions& defs) {
  // Call-graph edges flagged when the call site sits under a parallel
  // composition inside the defining body.
  auto edges_of = [&](const ProcessPtr& body) {
    std::vector<std::pair<std::string, bool>> out;
    std::function<void(const ProcessPtr&, bool)> go = [&](const ProcessPtr& q, bool under_par) {
      switch (q->kind()) {
        case ProcessKind::Call:
          out.push_back({q->call_name(), under_par});
          return;
        case ProcessKind::Sum:
          for (const auto& b : q->branches()) go(b.cont, under_par);
          return;
        case ProcessKind::Par:
          for (const auto& r : q->parts()) go(r, true);
          return;
        case ProcessKind::Delim:
          go(q->body(), under_par);
          return;
        case ProcessKind::Latent:
          return;
      }
    };
    go(body, false);
    return out;
  };

  std::set<std::string> reachable;
  reachable_defs(p, defs, reachable);
  // Depth-first cycle search remembering whether the cycle crosses a
  // parallel context.
  std::map<std::string, std::vector<std::pair<std::string, bool>>> graph;
  for (const auto& name : reachable) {
    auto it = defs.find(name);
    if (it == defs.end()) throw PreconditionError("undefined process identifier " + name);
    graph[name] = edges_of(it->second.body);
  }
  // An edge (under_par) inside a strongly connected component makes the
  // component spawn unboundedly.
  std::map<std::string, int> comp;
  {
    int counter = 0, ncomp = 0;
    std::map<std::string, int> idx, low;
    std::vector<std::string> stck;
    std::set<std::string> on;
    std::function<void(const std::string&)> dfs = [&](const std::string& v) {
      idx[v] = low[v] = counter++;
      stck.push_back(v);
      on.insert(v);
      for (const auto& [w, flag] : graph[v]) {
        if (!graph.count(w)) continue;
        if (!idx.count(w)) {
          dfs(w);
          low[v] = std::min(low[v], low[w]);
        } else if (on.count(w)) {
          low[v] = std::min(low[v], idx[w]);
        }
      }
      if (low[v] == idx[v]) {
        while (true) {
          std::string w = stck.back();
          stck.pop_back();
          on.erase(w);
          comp[w] = ncomp;
          if (w == v) break;
        }
        ++ncomp;
      }
    };
    for (const auto& [name, es] : graph)
      if (!idx.count(name)) dfs(name);
  }
  // Any intra-SCC edge lies on a cycle; flagged ones spawn unboundedly.
  for (const auto& [name, es] : graph)
    for (const auto& [w, flag] : es)
      if (flag && graph.count(w) && comp[w] == comp[name]) return false;
  return true;
}

// ---------------------------------------------------------------------------
// The verdict
// ---------------------------------------------------------------------------

namespace {

bool contains_own_latent(const ProcessPtr& p, const std::string& owner, std::string& where) {
  switch (p->kind()) {
    case ProcessKind::Latent:
      if (p->owner() == owner) {
        where = render_process(p);
        return true;
      }
      return false;
    case ProcessKind::Sum:
      for (const auto& b : p->branches())
        if (contains_own_latent(b.cont, owner, where)) return true;
      return false;
    case ProcessKind::Par:
      for (const auto& q : p->parts())
        if (contains_own_latent(q, owner, where)) return true;
      return false;
    case ProcessKind::Delim:
      return contains_own_latent(p->body(), owner, where);
    case ProcessKind::Call:
      return false;
  }
  return false;
}

}  // namespace

ProcessPtr participant_process(const SystemPtr& system, const std::string& participant) {
  std::vector<ProcessPtr> found;
  std::function<void(const SystemPtr&)> go = [&](const SystemPtr& s) {
    switch (s->kind()) {
      case SystemKind::Box:
        if (s->participant() == participant) found.push_back(s->process());
        return;
      case SystemKind::Par:
        for (const auto& q : s->parts()) go(q);
        return;
      case SystemKind::Delim:
        go(s->body());
        return;
      case SystemKind::Session:
        return;
    }
  };
  go(system);
  if (found.empty()) throw PreconditionError("no box for participant " + participant);
  if (found.size() == 1) return found[0];
  return Process::par(std::move(found));
}

HonestyVerdict check_sharp_honesty(const std::string& participant, const ProcessPtr& p,
                                   const Definitions& defs, std::size_t state_cap) {
  HonestyVerdict v;

  bool finite = false;
  try {
    finite = is_finite_control(p, defs);
  } catch (const PreconditionError& e) {
    v.status = HonestyVerdict::Status::Unsupported;
    v.reasons.push_back({HonestyVerdict::Reason::Kind::NotFiniteControl, "", e.what(), {}});
    return v;
  }
  if (!finite) {
    v.status = HonestyVerdict::Status::Unsupported;
    v.reasons.push_back({HonestyVerdict::Reason::Kind::NotFiniteControl, "",
                         "parallel composition under recursion", {}});
    return v;
  }

  // (i) no latent contract of the participant in the initial process.
  std::string where;
  if (contains_own_latent(p, participant, where))
    v.reasons.push_back(
        {HonestyVerdict::Reason::Kind::OwnLatentContract, where, "latent contract of " +
         participant + " present before any tell", {}});
  std::set<std::string> names;
  reachable_defs(p, defs, names);
  for (const auto& name : names) {
    auto it = defs.find(name);
    if (it != defs.end() && contains_own_latent(it->second.body, participant, where))
      v.reasons.push_back({HonestyVerdict::Reason::Kind::OwnLatentContract,
                           name + ": " + where,
                           "latent contract of " + participant + " in definition", {}});
  }

  // (ii) + (iii): every tell occurrence is x-safe and its continuation
  // realizes the advertised contract in a fresh session.
  for (const TellOccurrence& occ : collect_tells(p, defs)) {
    const ProcessPtr& body = occ.root == "@" ? p : defs.at(occ.root).body;
    if (!x_safe(body, occ.addr, defs))
      v.reasons.push_back({HonestyVerdict::Reason::Kind::XSafetyViolation, occ.addr.str(),
                           "context of the tell uses " + occ.prefix.target.str() +
                           " without delimiting it", {}});
    try {
      Subst sub{{occ.prefix.target, Ident::name(kQuerySession)}};
      AbstractState st =
          make_abstract_state(participant, apply_subst(occ.cont, sub), defs);
      RealizesResult rr = realizes(st, occ.prefix.contract, kQuerySession, defs, state_cap);
      if (!rr.realizes)
        v.reasons.push_back({HonestyVerdict::Reason::Kind::RealizesFailure, occ.addr.str(),
                             "continuation does not realize " +
                             render_contract(occ.prefix.contract),
                             std::move(rr.certificate)});
    } catch (const CapExceeded& e) {
      v.status = HonestyVerdict::Status::Unsupported;
      v.reasons.push_back({HonestyVerdict::Reason::Kind::StateCapExceeded, occ.addr.str(),
                           e.what(), {}});
      return v;
    }
  }

  v.status = v.reasons.empty() ? HonestyVerdict::Status::SharpHonest
                               : HonestyVerdict::Status::NotSharpHonest;
  return v;
}

std::string HonestyVerdict::to_json() const {
  nlohmann::json j;
  switch (status) {
    case Status::SharpHonest: j["status"] = "SharpHonest"; break;
    case Status::NotSharpHonest: j["status"] = "NotSharpHonest"; break;
    case Status::Unsupported: j["status"] = "Unsupported"; break;
  }
  j["reasons"] = nlohmann::json::array();
  for (const auto& r : reasons) {
    nlohmann::json jr;
    switch (r.kind) {
      case Reason::Kind::OwnLatentContract: jr["kind"] = "OwnLatentContract"; break;
      case Reason::Kind::XSafetyViolation: jr["kind"] = "XSafetyViolation"; break;
      case Reason::Kind::RealizesFailure: jr["kind"] = "RealizesFailure"; break;
      case Reason::Kind::NotFiniteControl: jr["kind"] = "NotFiniteControl"; break;
      case Reason::Kind::StateCapExceeded: jr["kind"] = "StateCapExceeded"; break;
    }
    jr["location"] = r.location;
    jr["detail"] = r.detail;
    if (r.certificate) {
      jr["certificate"] = {{"process", r.certificate->failing_process},
                           {"contract", r.certificate->failing_contract},
                           {"do_chain", r.certificate->do_chain},
                           {"lasso", r.certificate->lasso}};
    }
    j["reasons"].push_back(jr);
  }
  return j.dump(2) + "\n";
}

int HonestyVerdict::exit_code() const {
  switch (status) {
    case Status::SharpHonest: return 0;
    case Status::NotSharpHonest: return 1;
    case Status::Unsupported: return 2;
  }
  return 2;
}

}  // namespace co2
