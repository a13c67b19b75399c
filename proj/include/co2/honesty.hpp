#pragma once

#include <optional>
#include <string>
#include <vector>

#include "co2/abstraction.hpp"
#include "co2/contract.hpp"
#include "co2/semantics.hpp"

namespace co2 {

inline constexpr std::size_t kDefaultAbstractStateCap = 50000;

// Failure evidence for a realizability check: the pair that broke, the
// do-chain leading to it from the root pair, and (for an unblocks
// violation) a fairness-admissible lasso that dwells on a bad state.
struct RealizesCertificate {
  std::string failing_process;
  std::string failing_contract;
  std::vector<std::string> do_chain;
  std::vector<std::string> lasso;
};

struct RealizesResult {
  bool realizes = false;
  std::optional<RealizesCertificate> certificate;
};

// P |=#_s c: greatest fixpoint over (abstract process state, contract)
// pairs. Condition 1: no {tau,tell}-fair do_s-free path settles on
// states failing unblocks(c, RD_s(.)); condition 2: every do_s(a) edge
// matched with every abstract contract move on a stays in the relation.
RealizesResult realizes(const AbstractState& state, const ContractPtr& contract,
                        const std::string& session, const Definitions& defs,
                        std::size_t state_cap = kDefaultAbstractStateCap);

// A tell occurrence inside a process body.
struct TellOccurrence {
  std::string root;   // "@" for the main process, else the definition name
  Address addr;
  Prefix prefix;      // the tell
  ProcessPtr cont;    // continuation Q
};

std::vector<TellOccurrence> collect_tells(const ProcessPtr& p, const Definitions& defs);

// x-safety of the context around a tell occurrence: either a
// delimitation of x dominates the tell within the same hoistable
// scope, or the context performs no do on x.
bool x_safe(const ProcessPtr& body, const Address& addr, const Definitions& defs);

// No parallel composition under recursion in the call graph.
bool is_finite_control(const ProcessPtr& p, const Definitions& defs);

struct HonestyVerdict {
  enum class Status { SharpHonest, NotSharpHonest, Unsupported } status = Status::SharpHonest;

  struct Reason {
    enum class Kind { OwnLatentContract, XSafetyViolation, RealizesFailure, NotFiniteControl,
                      StateCapExceeded } kind;
    std::string location;  // prefix address, definition name, or latent location
    std::string detail;
    std::optional<RealizesCertificate> certificate;
  };
  std::vector<Reason> reasons;

  std::string to_json() const;
  int exit_code() const;
};

HonestyVerdict check_sharp_honesty(const std::string& participant, const ProcessPtr& p,
                                   const Definitions& defs,
                                   std::size_t state_cap = kDefaultAbstractStateCap);

// The participant's process as written in the source system (delimitations
// intact, no normalization); several boxes compose in parallel.
ProcessPtr participant_process(const SystemPtr& system, const std::string& participant);

}  // namespace co2
