#include "co2/ltl.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>
#include <vector>

#include "co2/errors.hpp"

namespace co2 {

namespace {
std::shared_ptr<Ltl> blank();
}  // namespace

LtlPtr Ltl::truth() {
  static const LtlPtr t = std::shared_ptr<Ltl>(new Ltl());
  return t;
}

namespace {
// Factories fill in a default-constructed node; the copy keeps Ltl's
// constructor private to the class.
std::shared_ptr<Ltl> blank() { return std::make_shared<Ltl>(*Ltl::truth()); }
}  // namespace

LtlPtr Ltl::atom(Atom a) {
  auto f = blank();
  f->kind_ = LtlKind::AtomProp;
  f->prop_ = std::move(a);
  return f;
}
LtlPtr Ltl::negation(LtlPtr x) {
  auto f = blank();
  f->kind_ = LtlKind::Not;
  f->lhs_ = std::move(x);
  return f;
}
LtlPtr Ltl::conj(LtlPtr l, LtlPtr r) {
  auto f = blank();
  f->kind_ = LtlKind::And;
  f->lhs_ = std::move(l);
  f->rhs_ = std::move(r);
  return f;
}
LtlPtr Ltl::disj(LtlPtr l, LtlPtr r) {
  auto f = blank();
  f->kind_ = LtlKind::Or;
  f->lhs_ = std::move(l);
  f->rhs_ = std::move(r);
  return f;
}
LtlPtr Ltl::implies(LtlPtr l, LtlPtr r) {
  auto f = blank();
  f->kind_ = LtlKind::Implies;
  f->lhs_ = std::move(l);
  f->rhs_ = std::move(r);
  return f;
}
LtlPtr Ltl::next(LtlPtr x) {
  auto f = blank();
  f->kind_ = LtlKind::Next;
  f->lhs_ = std::move(x);
  return f;
}
LtlPtr Ltl::until(LtlPtr l, LtlPtr r) {
  auto f = blank();
  f->kind_ = LtlKind::Until;
  f->lhs_ = std::move(l);
  f->rhs_ = std::move(r);
  return f;
}
LtlPtr Ltl::always(LtlPtr x) {
  auto f = blank();
  f->kind_ = LtlKind::Always;
  f->lhs_ = std::move(x);
  return f;
}
LtlPtr Ltl::eventually(LtlPtr x) {
  auto f = blank();
  f->kind_ = LtlKind::Eventually;
  f->lhs_ = std::move(x);
  return f;
}

std::string render_formula(const LtlPtr& f) {
  std::ostringstream os;
  std::function<void(const LtlPtr&, int)> go = [&](const LtlPtr& x, int prec) {
    switch (x->kind()) {
      case LtlKind::True: os << "true"; return;
      case LtlKind::AtomProp: os << x->prop().str(); return;
      case LtlKind::Not: os << "!"; go(x->lhs(), 4); return;
      case LtlKind::Next: os << "X "; go(x->lhs(), 4); return;
      case LtlKind::Always: os << "[] "; go(x->lhs(), 4); return;
      case LtlKind::Eventually: os << "<> "; go(x->lhs(), 4); return;
      case LtlKind::Until:
        if (prec > 3) os << "(";
        go(x->lhs(), 4); os << " U "; go(x->rhs(), 3);
        if (prec > 3) os << ")";
        return;
      case LtlKind::And:
        if (prec > 2) os << "(";
        go(x->lhs(), 3); os << " & "; go(x->rhs(), 2);
        if (prec > 2) os << ")";
        return;
      case LtlKind::Or:
        if (prec > 1) os << "(";
        go(x->lhs(), 2); os << " | "; go(x->rhs(), 1);
        if (prec > 1) os << ")";
        return;
      case LtlKind::Implies:
        if (prec > 0) os << "(";
        go(x->lhs(), 1); os << " -> "; go(x->rhs(), 0);
        if (prec > 0) os << ")";
        return;
    }
  };
  go(f, 0);
  return os.str();
}

// ---------------------------------------------------------------------------
// Universal model checking: gamma |= phi iff no maximal trace satisfies !phi.
// Finite maximal traces are turned into infinite ones by an absorbing "end"
// letter; the translation guards temporal operators so that Next and Until
// fail past the end while Always holds there.
// ---------------------------------------------------------------------------

namespace {

// Negation normal form over the extended alphabet.
enum class NKind { TT, FF, Lit, NotLit, End, NotEnd, And, Or, Next, Until, Release };

struct Nnf {
  NKind kind;
  Atom a;
  int lhs = -1, rhs = -1;
};

class NnfArena {
 public:
  int intern(Nnf n) {
    std::ostringstream key;
    key << static_cast<int>(n.kind) << '|' << n.a.str() << '|' << n.lhs << '|' << n.rhs;
    auto [it, fresh] = index_.emplace(key.str(), static_cast<int>(nodes_.size()));
    if (fresh) nodes_.push_back(n);
    return it->second;
  }
  const Nnf& at(int id) const { return nodes_[id]; }
  int size() const { return static_cast<int>(nodes_.size()); }

 private:
  std::vector<Nnf> nodes_;
  std::map<std::string, int> index_;
};

struct Translator {
  NnfArena& arena;

  int mk(NKind k, Atom a = {}, int l = -1, int r = -1) { return arena.intern({k, a, l, r}); }

  // trans(phi) when positive, trans(!phi) otherwise.
  int operator()(const LtlPtr& f, bool positive) {
    auto& self = *this;
    switch (f->kind()) {
      case LtlKind::True:
        return mk(positive ? NKind::TT : NKind::FF);
      case LtlKind::AtomProp:
        return mk(positive ? NKind::Lit : NKind::NotLit, f->prop());
      case LtlKind::Not:
        return self(f->lhs(), !positive);
      case LtlKind::And: {
        int l = self(f->lhs(), positive), r = self(f->rhs(), positive);
        return mk(positive ? NKind::And : NKind::Or, {}, l, r);
      }
      case LtlKind::Or: {
        int l = self(f->lhs(), positive), r = self(f->rhs(), positive);
        return mk(positive ? NKind::Or : NKind::And, {}, l, r);
      }
      case LtlKind::Implies: {
        int l = self(f->lhs(), !positive), r = self(f->rhs(), positive);
        return mk(positive ? NKind::Or : NKind::And, {}, l, r);
      }
      case LtlKind::Next: {
        // X p  ~>  X(alive & p);   !(X p)  ~>  X(end | !p)
        int body = self(f->lhs(), positive);
        int guard = mk(positive ? NKind::NotEnd : NKind::End);
        return mk(NKind::Next, {}, mk(positive ? NKind::And : NKind::Or, {}, guard, body));
      }
      case LtlKind::Until: {
        // p U q  ~>  p U (alive & q);   negation is the dual release.
        int l = self(f->lhs(), positive);
        int r = self(f->rhs(), positive);
        int guard = mk(positive ? NKind::NotEnd : NKind::End);
        int rhs = mk(positive ? NKind::And : NKind::Or, {}, guard, r);
        return mk(positive ? NKind::Until : NKind::Release, {}, l, rhs);
      }
      case LtlKind::Always: {
        // [] p  ~>  ff R (end | p);   !([] p)  ~>  tt U (alive & !p)
        int body = self(f->lhs(), positive);
        if (positive) {
          int rhs = mk(NKind::Or, {}, mk(NKind::End), body);
          return mk(NKind::Release, {}, mk(NKind::FF), rhs);
        }
        int rhs = mk(NKind::And, {}, mk(NKind::NotEnd), body);
        return mk(NKind::Until, {}, mk(NKind::TT), rhs);
      }
      case LtlKind::Eventually: {
        int body = self(f->lhs(), positive);
        if (positive) {
          int rhs = mk(NKind::And, {}, mk(NKind::NotEnd), body);
          return mk(NKind::Until, {}, mk(NKind::TT), rhs);
        }
        int rhs = mk(NKind::Or, {}, mk(NKind::End), body);
        return mk(NKind::Release, {}, mk(NKind::FF), rhs);
      }
    }
    throw InternalError("ltl translation: unreachable");
  }
};

// Letters: index into the formula's atom list, kOther, or kEnd.
constexpr int kOther = -1;
constexpr int kEnd = -2;

using ObSet = std::vector<int>;  // sorted obligation ids

ObSet canon(std::set<int> s) { return ObSet(s.begin(), s.end()); }

// All successor obligation sets of `obs` after reading `letter`.
std::vector<ObSet> automaton_step(const NnfArena& arena, const ObSet& obs, int letter,
                                  const std::vector<Atom>& atoms) {
  std::vector<ObSet> results;
  std::set<ObSet> seen;
  // Depth-first expansion; forks on Or/Until/Release.
  std::function<void(std::vector<int>, std::set<int>)> go =
      [&](std::vector<int> work, std::set<int> next) {
        while (!work.empty()) {
          int id = work.back();
          work.pop_back();
          const Nnf& n = arena.at(id);
          switch (n.kind) {
            case NKind::TT: break;
            case NKind::FF: return;
            case NKind::Lit:
              if (!(letter >= 0 && atoms[letter] == n.a)) return;
              break;
            case NKind::NotLit:
              if (letter >= 0 && atoms[letter] == n.a) return;
              break;
            case NKind::End:
              if (letter != kEnd) return;
              break;
            case NKind::NotEnd:
              if (letter == kEnd) return;
              break;
            case NKind::And:
              work.push_back(n.lhs);
              work.push_back(n.rhs);
              break;
            case NKind::Or: {
              auto w2 = work;
              w2.push_back(n.rhs);
              go(std::move(w2), next);
              work.push_back(n.lhs);
              break;
            }
            case NKind::Next:
              next.insert(n.lhs);
              break;
            case NKind::Until: {
              // resolve now, or postpone (lhs holds, obligation recurs)
              auto w2 = work;
              w2.push_back(n.rhs);
              go(std::move(w2), next);
              work.push_back(n.lhs);
              next.insert(id);
              break;
            }
            case NKind::Release: {
              // rhs holds forever, or both hold now
              auto w2 = work;
              w2.push_back(n.rhs);
              w2.push_back(n.lhs);
              go(std::move(w2), next);
              work.push_back(n.rhs);
              next.insert(id);
              break;
            }
          }
        }
        auto c = canon(next);
        if (seen.insert(c).second) results.push_back(std::move(c));
      };
  go(std::vector<int>(obs.rbegin(), obs.rend()), {});
  return results;
}

void collect_atoms(const LtlPtr& f, std::vector<Atom>& out) {
  if (f->kind() == LtlKind::AtomProp) {
    if (std::find(out.begin(), out.end(), f->prop()) == out.end()) out.push_back(f->prop());
    return;
  }
  if (f->lhs()) collect_atoms(f->lhs(), out);
  if (f->rhs()) collect_atoms(f->rhs(), out);
}

}  // namespace

bool ltl_holds(const Bilateral& g, const LtlPtr& phi, std::size_t state_cap) {
  // Contract graph with an absorbing end sink for stuck states.
  std::vector<Bilateral> states{g};
  std::unordered_map<Bilateral, int, BilateralHash, BilateralEq> index;
  index.emplace(g, 0);
  std::vector<std::vector<std::pair<int, int>>> edges;  // (letter, target); -3 = pending
  std::vector<Atom> atoms;
  collect_atoms(phi, atoms);
  auto letter_of = [&](const Atom& a) {
    auto it = std::find(atoms.begin(), atoms.end(), a);
    return it == atoms.end() ? kOther : static_cast<int>(it - atoms.begin());
  };

  std::deque<int> queue{0};
  edges.emplace_back();
  constexpr int kSink = -10;
  bool has_sink = false;
  while (!queue.empty()) {
    int id = queue.front();
    queue.pop_front();
    auto steps = bilateral_steps(states[id]);
    if (steps.empty()) {
      edges[id].push_back({kEnd, kSink});
      has_sink = true;
      continue;
    }
    for (const auto& [label, next] : steps) {
      auto it = index.find(next);
      int nid;
      if (it == index.end()) {
        nid = static_cast<int>(states.size());
        if (static_cast<std::size_t>(nid) >= state_cap)
          throw CapExceeded("ltl_holds: contract product exceeded state cap");
        states.push_back(next);
        index.emplace(next, nid);
        edges.emplace_back();
        queue.push_back(nid);
      } else {
        nid = it->second;
      }
      edges[id].push_back({letter_of(label.atom), nid});
    }
  }
  int sink_id = -1;
  if (has_sink) {
    sink_id = static_cast<int>(states.size());
    edges.emplace_back();
    edges[sink_id].push_back({kEnd, sink_id});
    for (auto& es : edges)
      for (auto& e : es)
        if (e.second == kSink) e.second = sink_id;
  }

  // Automaton for the negated, end-guarded formula.
  NnfArena arena;
  Translator trans{arena};
  int psi = trans(phi, /*positive=*/false);

  std::vector<int> untils;
  for (int i = 0; i < arena.size(); ++i)
    if (arena.at(i).kind == NKind::Until) untils.push_back(i);

  // Product exploration.
  struct PNode {
    int graph;
    ObSet obs;
  };
  std::map<std::pair<int, ObSet>, int> pindex;
  std::vector<PNode> pnodes;
  struct PEdge {
    int from, to;
    std::vector<bool> acc;  // one flag per until: obligation discharged
  };
  std::vector<PEdge> pedges;
  std::vector<std::vector<int>> pout;

  auto pnode_id = [&](int graph, const ObSet& obs, std::deque<int>& q) {
    auto key = std::make_pair(graph, obs);
    auto it = pindex.find(key);
    if (it != pindex.end()) return it->second;
    int id = static_cast<int>(pnodes.size());
    pindex.emplace(key, id);
    pnodes.push_back({graph, obs});
    pout.emplace_back();
    q.push_back(id);
    return id;
  };

  std::deque<int> pq;
  pnode_id(0, {psi}, pq);
  while (!pq.empty()) {
    int id = pq.front();
    pq.pop_front();
    PNode node = pnodes[id];
    for (const auto& [letter, target] : edges[node.graph]) {
      for (const auto& next_obs : automaton_step(arena, node.obs, letter, atoms)) {
        int nid = pnode_id(target, next_obs, pq);
        std::vector<bool> acc(untils.size());
        for (std::size_t u = 0; u < untils.size(); ++u)
          acc[u] = !std::binary_search(next_obs.begin(), next_obs.end(), untils[u]);
        pout[id].push_back(static_cast<int>(pedges.size()));
        pedges.push_back({id, nid, std::move(acc)});
      }
    }
  }

  // Accepting-lasso search: an SCC containing, for every until, an edge
  // that discharges it. Tarjan over the product.
  int n = static_cast<int>(pnodes.size());
  std::vector<int> idx(n, -1), low(n, 0), comp(n, -1);
  std::vector<bool> on_stack(n, false);
  std::vector<int> stck;
  int counter = 0, ncomp = 0;
  std::function<void(int)> tarjan = [&](int v) {
    idx[v] = low[v] = counter++;
    stck.push_back(v);
    on_stack[v] = true;
    for (int e : pout[v]) {
      int w = pedges[e].to;
      if (idx[w] < 0) {
        tarjan(w);
        low[v] = std::min(low[v], low[w]);
      } else if (on_stack[w]) {
        low[v] = std::min(low[v], idx[w]);
      }
    }
    if (low[v] == idx[v]) {
      while (true) {
        int w = stck.back();
        stck.pop_back();
        on_stack[w] = false;
        comp[w] = ncomp;
        if (w == v) break;
      }
      ++ncomp;
    }
  };
  for (int v = 0; v < n; ++v)
    if (idx[v] < 0) tarjan(v);

  std::vector<std::vector<bool>> scc_acc(ncomp, std::vector<bool>(untils.size(), false));
  std::vector<bool> scc_has_edge(ncomp, false);
  for (const auto& e : pedges) {
    if (comp[e.from] != comp[e.to]) continue;
    scc_has_edge[comp[e.from]] = true;
    for (std::size_t u = 0; u < untils.size(); ++u)
      if (e.acc[u]) scc_acc[comp[e.from]][u] = true;
  }
  for (int c = 0; c < ncomp; ++c) {
    if (!scc_has_edge[c]) continue;
    bool all = true;
    for (std::size_t u = 0; u < untils.size(); ++u)
      if (!scc_acc[c][u]) { all = false; break; }
    if (all) return false;  // a maximal trace satisfies !phi
  }
  return true;
}

}  // namespace co2
