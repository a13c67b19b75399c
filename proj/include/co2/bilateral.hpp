#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "co2/contract.hpp"

namespace co2 {

// Label "A says a" of the bilateral-contract LTS.
struct ContractLabel {
  std::string participant;
  Atom atom;

  auto operator<=>(const ContractLabel&) const = default;
  std::string str() const { return participant + " says " + atom.str(); }
};

// A says c | B says d, with distinct participants and at most one ready.
class Bilateral {
 public:
  Bilateral(std::string a, ContractPtr c, std::string b, ContractPtr d);

  const std::string& left_name() const { return left_name_; }
  const std::string& right_name() const { return right_name_; }
  const ContractPtr& left() const { return left_; }
  const ContractPtr& right() const { return right_; }

  bool has_participant(const std::string& p) const {
    return p == left_name_ || p == right_name_;
  }
  const ContractPtr& contract_of(const std::string& p) const;

  std::size_t hash() const;
  std::string str() const;

 private:
  std::string left_name_, right_name_;
  ContractPtr left_, right_;
};

bool equal(const Bilateral& a, const Bilateral& b);

struct BilateralHash {
  std::size_t operator()(const Bilateral& g) const { return g.hash(); }
};
struct BilateralEq {
  bool operator()(const Bilateral& a, const Bilateral& b) const { return equal(a, b); }
};

// Successors under the contract LTS, sorted by label. Per-label the
// successor is unique; the set is empty iff both components are 0.
std::vector<std::pair<ContractLabel, Bilateral>> bilateral_steps(const Bilateral& g);

struct ComplianceResult {
  bool compliant = false;
  // Shortest trace to a state with a 0 component when not compliant.
  std::vector<ContractLabel> witness;
};

inline constexpr std::size_t kDefaultContractStateCap = 100000;

// Reachability characterization: compliant iff no reachable state of
// A says c | B says d has a 0 component.
ComplianceResult is_compliant(const ContractPtr& c, const ContractPtr& d,
                              std::size_t state_cap = kDefaultContractStateCap);

// Coinductive definition, computed as a greatest fixpoint over the
// reachable pair set. Agrees with is_compliant on all inputs.
bool is_compliant_gfp(const ContractPtr& c, const ContractPtr& d,
                      std::size_t state_cap = kDefaultContractStateCap);

bool is_culpable(const Bilateral& g, const std::string& participant);

// Shortest participant-solo trace (length <= 2) from g to a state where
// the participant is not culpable. Requires a 0-free contract for them.
std::vector<ContractLabel> exculpate(const Bilateral& g, const std::string& participant);

}  // namespace co2
