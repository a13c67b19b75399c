#include "co2/bilateral.hpp"

#include <algorithm>
#include <deque>
#include <unordered_map>

#include "co2/errors.hpp"

namespace co2 {

Bilateral::Bilateral(std::string a, ContractPtr c, std::string b, ContractPtr d)
    : left_name_(std::move(a)), right_name_(std::move(b)),
      left_(std::move(c)), right_(std::move(d)) {
  if (left_name_ == right_name_)
    throw PreconditionError("bilateral contract needs distinct participants");
  if (!left_ || !right_) throw InternalError("bilateral contract with null component");
  if (contains_ready(left_) && contains_ready(right_))
    throw PreconditionError("bilateral contract with two ready prefixes");
}

const ContractPtr& Bilateral::contract_of(const std::string& p) const {
  if (p == left_name_) return left_;
  if (p == right_name_) return right_;
  throw PreconditionError("unknown participant " + p);
}

// State identity is structural equality after head normalization, so a
// folded recursion and its unfolding name the same LTS node.
std::size_t Bilateral::hash() const {
  std::hash<std::string> hs;
  std::size_t h = hs(left_name_) * 31 + hs(right_name_);
  h = h * 1000003 + unfold(left_)->hash();
  h = h * 1000003 + unfold(right_)->hash();
  return h;
}

std::string Bilateral::str() const {
  return left_name_ + " says " + render_contract(left_) + " | " + right_name_ + " says " +
         render_contract(right_);
}

bool equal(const Bilateral& a, const Bilateral& b) {
  return a.left_name() == b.left_name() && a.right_name() == b.right_name() &&
         equal(unfold(a.left()), unfold(b.left())) && equal(unfold(a.right()), unfold(b.right()));
}

namespace {

struct Move {
  Atom atom;
  ContractPtr self;     // mover's next contract
  ContractPtr partner;  // partner's next contract
};

// Moves of the participant owning `cp` against partner contract `cq`.
// The first two arguments are head-normalized; `cq_orig` is the
// partner's stored term, kept verbatim when the partner does not move.
std::vector<Move> moves_of(const ContractPtr& cp, const ContractPtr& cq,
                           const ContractPtr& cq_orig) {
  std::vector<Move> out;
  const ContractPtr E = Contract::success();
  const ContractPtr nil = Contract::nil();

  if (cp->kind() == ContractKind::Ready) {
    out.push_back({cp->atom(), cp->body(), cq_orig});  // [Rdy]
    return out;
  }
  if (cq->kind() == ContractKind::Ready) return out;  // only the ready side may move
  if (cp->is_nil()) return out;

  if (cp->kind() == ContractKind::InternalSum) {
    for (const auto& br : cp->branches()) {
      if (cq->kind() == ContractKind::ExternalSum || cq->is_nil()) {
        const ContractBranch* match = nullptr;
        for (const auto& qb : cq->branches())
          if (qb.atom == br.atom.co()) match = &qb;
        if (match)  // [IntExt]
          out.push_back({br.atom, br.cont, Contract::ready(match->atom, match->cont)});
        else  // [IntExtFail]
          out.push_back({br.atom, E, nil});
      } else {  // partner is a non-empty internal sum
        if (cq->branches().size() == 1 && cq->branches()[0].atom == br.atom.co()) {
          // [IntInt]: the partner can only commit to its unique branch.
          const auto& qb = cq->branches()[0];
          out.push_back({br.atom, br.cont, Contract::ready(qb.atom, qb.cont)});
        } else {  // [IntIntFail]
          out.push_back({br.atom, E, nil});
        }
      }
    }
    return out;
  }

  // cp is a non-empty external sum.
  if (cq->kind() == ContractKind::ExternalSum || cq->is_nil()) {
    bool any_match = false;
    for (const auto& br : cp->branches()) {
      for (const auto& qb : cq->branches())
        if (qb.atom == br.atom.co()) {
          any_match = true;
          out.push_back({br.atom, br.cont, Contract::ready(qb.atom, qb.cont)});  // [ExtExt]
        }
    }
    if (!any_match)  // [ExtExtFail]: no option at all is supported
      for (const auto& br : cp->branches()) out.push_back({br.atom, E, nil});
    return out;
  }
  // Partner holds a non-empty internal sum: it must move first.
  return out;
}

}  // namespace

std::vector<std::pair<ContractLabel, Bilateral>> bilateral_steps(const Bilateral& g) {
  ContractPtr c = unfold(g.left());
  ContractPtr d = unfold(g.right());
  std::vector<std::pair<ContractLabel, Bilateral>> out;
  for (const auto& m : moves_of(c, d, g.right()))
    out.push_back({{g.left_name(), m.atom}, Bilateral(g.left_name(), m.self, g.right_name(), m.partner)});
  for (const auto& m : moves_of(d, c, g.left()))
    out.push_back({{g.right_name(), m.atom}, Bilateral(g.left_name(), m.partner, g.right_name(), m.self)});
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  for (std::size_t i = 1; i < out.size(); ++i)
    if (out[i].first == out[i - 1].first)
      throw InternalError("nondeterministic bilateral step on " + out[i].first.str());
  return out;
}

namespace {

struct ReachableSpace {
  std::vector<Bilateral> states;
  std::vector<std::vector<std::pair<ContractLabel, std::size_t>>> edges;
  // Discovering edge of each state (BFS tree), -1 for the root.
  std::vector<std::pair<int, ContractLabel>> parent;
};

ReachableSpace explore(const Bilateral& root, std::size_t cap) {
  ReachableSpace space;
  std::unordered_map<Bilateral, std::size_t, BilateralHash, BilateralEq> index;
  std::deque<std::size_t> queue;
  space.states.push_back(root);
  space.parent.push_back({-1, {}});
  index.emplace(root, 0);
  queue.push_back(0);
  while (!queue.empty()) {
    std::size_t id = queue.front();
    queue.pop_front();
    if (space.edges.size() <= id) space.edges.resize(id + 1);
    for (const auto& [label, next] : bilateral_steps(space.states[id])) {
      auto it = index.find(next);
      std::size_t nid;
      if (it == index.end()) {
        nid = space.states.size();
        if (nid >= cap)
          throw CapExceeded("contract product exceeded state cap of " + std::to_string(cap));
        space.states.push_back(next);
        space.parent.push_back({static_cast<int>(id), label});
        index.emplace(next, nid);
        queue.push_back(nid);
      } else {
        nid = it->second;
      }
      space.edges[id].push_back({label, nid});
    }
  }
  space.edges.resize(space.states.size());
  return space;
}

bool has_nil_component(const Bilateral& g) {
  return unfold(g.left())->is_nil() || unfold(g.right())->is_nil();
}

}  // namespace

ComplianceResult is_compliant(const ContractPtr& c, const ContractPtr& d, std::size_t state_cap) {
  Bilateral root("A", c, "B", d);
  ReachableSpace space = explore(root, state_cap);
  for (std::size_t id = 0; id < space.states.size(); ++id) {
    if (has_nil_component(space.states[id])) {
      // BFS discovery order yields a shortest witness, least label first.
      std::vector<ContractLabel> trace;
      for (int cur = static_cast<int>(id); space.parent[cur].first >= 0;
           cur = space.parent[cur].first)
        trace.push_back(space.parent[cur].second);
      std::reverse(trace.begin(), trace.end());
      return {false, std::move(trace)};
    }
  }
  return {true, {}};
}

namespace {

// Condition (1) of the coinductive compliance definition.
bool ready_sets_agree(const Bilateral& g) {
  ReadySets rl = ready_sets(g.left());
  ReadySets rr = ready_sets(g.right());
  if (rl.ready_marker && rr.ready_marker)
    throw InternalError("two ready prefixes in one bilateral contract");
  if (rl.ready_marker || rr.ready_marker) return true;  // RDY in the symmetric difference
  for (const auto& x : rl.sets)
    for (const auto& y : rr.sets) {
      bool hit = false;
      for (const auto& a : x)
        if (y.count(a.co())) { hit = true; break; }
      if (!hit) return false;
    }
  return true;
}

}  // namespace

bool is_compliant_gfp(const ContractPtr& c, const ContractPtr& d, std::size_t state_cap) {
  Bilateral root("A", c, "B", d);
  ReachableSpace space = explore(root, state_cap);
  std::size_t n = space.states.size();
  std::vector<bool> in(n, true);
  // Delete states violating condition (1), then propagate over condition (2)
  // until the largest relation remains.
  for (std::size_t i = 0; i < n; ++i)
    if (!ready_sets_agree(space.states[i])) in[i] = false;
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (!in[i]) continue;
      for (const auto& [label, next] : space.edges[i]) {
        if (!in[next]) {
          in[i] = false;
          changed = true;
          break;
        }
      }
    }
  }
  return in[0];
}

bool is_culpable(const Bilateral& g, const std::string& participant) {
  const ContractPtr& mine = g.contract_of(participant);  // validates the name
  if (unfold(mine)->is_nil()) return true;
  bool can_move = false;
  for (const auto& [label, next] : bilateral_steps(g)) {
    if (label.participant != participant) continue;
    if (label.atom.is_e()) return false;
    can_move = true;
  }
  return can_move;
}

std::vector<ContractLabel> exculpate(const Bilateral& g, const std::string& participant) {
  if (contains_nil(g.contract_of(participant)))
    throw PreconditionError("exculpate requires a 0-free contract for " + participant);
  // Breadth-first over participant-solo steps; the theorem bounds the
  // needed depth by 2. Steps come label-sorted, so the first hit is the
  // lexicographically least among the shortest traces.
  struct Node {
    Bilateral state;
    std::vector<ContractLabel> trace;
  };
  std::deque<Node> queue{{g, {}}};
  while (!queue.empty()) {
    Node cur = std::move(queue.front());
    queue.pop_front();
    if (!is_culpable(cur.state, participant)) return cur.trace;
    if (cur.trace.size() == 2) continue;
    for (const auto& [label, next] : bilateral_steps(cur.state)) {
      if (label.participant != participant) continue;
      auto trace = cur.trace;
      trace.push_back(label);
      queue.push_back({next, std::move(trace)});
    }
  }
  throw InternalError("exculpation failed within two steps for " + participant +
                      " in " + g.str());
}

}  // namespace co2
