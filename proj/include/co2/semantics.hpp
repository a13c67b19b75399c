#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "co2/process.hpp"

namespace co2 {

// Stable normal form of a system: all delimitations top-level and
// renamed apart, one box per participant, garbage collected.
struct NormalSystem {
  std::vector<Ident> delims;
  std::map<std::string, Bilateral> sessions;
  std::map<std::string, ProcessPtr> boxes;

  std::string str() const;
  SystemPtr to_system() const;
  bool closed() const;
};

NormalSystem normalize_system(const SystemPtr& s);

struct SystemLabel {
  std::string participant;
  std::string prefix;   // rendered, with instantiated target
  std::string address;  // prefix address, "#k" suffix for duplicate occurrences

  auto operator<=>(const SystemLabel&) const = default;
};

struct SysStep {
  SystemLabel label;
  NormalSystem next;
};

// All successors under the reduction semantics, deterministically ordered.
std::vector<SysStep> system_steps(const NormalSystem& s, const Definitions& defs,
                                  std::size_t contract_cap = kDefaultContractStateCap);

struct LatentContract {
  Ident var;
  std::string owner;
  ContractPtr contract;
};

// An unguarded prefix occurrence of a box process, with the residual
// term after firing it. Calls are unfolded transiently; the residual
// materializes an unfolded body only along the fired path.
struct Redex {
  Prefix prefix;
  ProcessPtr cont;
  Address addr;
  int instance = 0;
  ProcessPtr rest;     // box process with the fired sum replaced by cont
  ProcessPtr context;  // box process with the fired sum removed entirely
};

std::vector<Redex> gather_redexes(const ProcessPtr& p, const Definitions& defs);

struct Agreement {
  Bilateral gamma;                      // left participant is the lexicographic min
  std::vector<LatentContract> remaining;
  Subst sigma;                          // {x,y,z} -> fresh session name
};

// Agreements among latent contracts for a fuse on x; the fresh session
// name is supplied by the caller.
std::vector<Agreement> find_agreements(const std::vector<LatentContract>& k, const Ident& x,
                                       const std::string& fresh_session,
                                       std::size_t contract_cap = kDefaultContractStateCap);

// Atoms with an unguarded do on session name s, not captured by a
// delimitation of s. Definition calls are looked through.
std::set<Atom> ready_do(const std::string& session, const ProcessPtr& p, const Definitions& defs);

// True iff the system has a session s whose bilateral contract makes
// the participant culpable; false when s is absent or p not in it.
bool culpable_at(const std::string& participant, const std::string& session,
                 const NormalSystem& s);

struct SimPolicy {
  enum class Kind { ExhaustiveBounded, SeededRandom, FixedScript, ParticipantSolo } kind =
      Kind::SeededRandom;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> script;  // (participant, address)
  std::string solo_participant;
  std::size_t frontier_cap = 10000;  // ExhaustiveBounded

  static SimPolicy exhaustive(std::size_t frontier = 10000);
  static SimPolicy random(std::uint64_t seed);
  static SimPolicy fixed(std::vector<std::pair<std::string, std::string>> script);
  static SimPolicy solo(std::string participant, std::uint64_t seed = 0);
};

struct CulpEntry {
  std::size_t step;
  std::string session;
  std::string participant;
  bool culpable;
};

struct SimTrace {
  std::vector<NormalSystem> states;
  std::vector<SystemLabel> labels;
  std::vector<CulpEntry> culpability;

  std::string to_json() const;
};

SimTrace simulate(const NormalSystem& s0, const Definitions& defs, const SimPolicy& policy,
                  std::size_t max_steps, std::size_t contract_cap = kDefaultContractStateCap);

}  // namespace co2
