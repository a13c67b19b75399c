#pragma once

#include <string>
#include <vector>

#include "co2/contract.hpp"
#include "co2/semantics.hpp"

namespace co2 {

// Abstract contract transitions: actions, context moves, failure.
struct AbsContractLabel {
  enum class Kind { Act, Ctx, Zero } kind = Kind::Ctx;
  Atom atom;  // Act only

  auto operator<=>(const AbsContractLabel&) const = default;
  std::string str() const;
};

// Successors of a closed contract in the abstract LTS; head-normalizes
// first. Includes the E failure target of every action.
std::vector<std::pair<AbsContractLabel, ContractPtr>> abs_contract_steps(const ContractPtr& c);

// Hoists and strips every top-level-hoistable delimitation, renaming
// the stripped binders apart.
ProcessPtr open_top(const ProcessPtr& p);

// Canonicalized delimitation-free process of one participant: node of
// the abstract process LTS. Latent contracts owned by other
// participants are pruned; fresh names are renumbered n0, n1, ... in
// first-occurrence order and free variables x0, x1, ...; the reserved
// session "s#" of realizability queries is preserved.
struct AbstractState {
  std::string participant;
  ProcessPtr body;
  int fresh_counter = 0;  // next canonical fresh-name index
  std::string key;        // canonical render; identity of the state

  bool operator==(const AbstractState& o) const { return key == o.key; }
};

inline const std::string kQuerySession = "s#";

AbstractState make_abstract_state(const std::string& participant, const ProcessPtr& body,
                                  const Definitions& defs);

struct AbsLabel {
  enum class Kind { Prefix, Ctx } kind = Kind::Ctx;
  Prefix prefix;  // Kind::Prefix only; fuse/ask targets instantiated
  Address addr;
  int instance = 0;

  std::string str() const;
};

// One participant's abstract transitions: every unguarded prefix fires
// (do on an uninstantiated variable is not enabled); ctx steps cover
// the identity and every single-variable instantiation.
std::vector<std::pair<AbsLabel, AbstractState>> abs_process_steps(const AbstractState& st,
                                                                  const Definitions& defs);

// JSON dump of the abstract graph reachable from a state, for
// debugging: {"nodes": [{"id", "body"}], "edges": [{"from", "label", "to"}]}.
std::string dump_abstract_graph(const AbstractState& root, const Definitions& defs,
                                std::size_t state_cap = 50000);

}  // namespace co2
