#pragma once

#include <memory>
#include <string>

#include "co2/bilateral.hpp"
#include "co2/contract.hpp"

namespace co2 {

enum class LtlKind {
  True, AtomProp, Not, And, Or, Implies, Next, Until, Always, Eventually
};

class Ltl;
using LtlPtr = std::shared_ptr<const Ltl>;

class Ltl {
 public:
  static LtlPtr truth();
  static LtlPtr atom(Atom a);
  static LtlPtr negation(LtlPtr f);
  static LtlPtr conj(LtlPtr l, LtlPtr r);
  static LtlPtr disj(LtlPtr l, LtlPtr r);
  static LtlPtr implies(LtlPtr l, LtlPtr r);
  static LtlPtr next(LtlPtr f);
  static LtlPtr until(LtlPtr l, LtlPtr r);
  static LtlPtr always(LtlPtr f);
  static LtlPtr eventually(LtlPtr f);

  LtlKind kind() const { return kind_; }
  const Atom& prop() const { return prop_; }
  const LtlPtr& lhs() const { return lhs_; }
  const LtlPtr& rhs() const { return rhs_; }

 private:
  Ltl() = default;
  LtlKind kind_ = LtlKind::True;
  Atom prop_;
  LtlPtr lhs_, rhs_;
};

std::string render_formula(const LtlPtr& f);

// gamma |= phi over all maximal traces of the bilateral-contract LTS,
// with the finite-trace reading at stuck states. A trace position
// satisfies an atom iff the label fired there carries exactly that atom.
bool ltl_holds(const Bilateral& g, const LtlPtr& phi,
               std::size_t state_cap = kDefaultContractStateCap);

}  // namespace co2
