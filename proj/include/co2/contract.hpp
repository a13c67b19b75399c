#pragma once

#include <compare>
#include <cstdint>
#include <memory>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace co2 {

// Action atom. `co()` is the involution a <-> ~a; the distinguished
// success atom `e` is self-dual and always stored unbarred.
struct Atom {
  std::string name;
  bool barred = false;

  Atom() = default;
  Atom(std::string n, bool b = false);

  bool is_e() const { return name == "e"; }
  Atom co() const;

  auto operator<=>(const Atom&) const = default;
  std::string str() const { return barred ? "~" + name : name; }
};

class Contract;
using ContractPtr = std::shared_ptr<const Contract>;

enum class ContractKind { InternalSum, ExternalSum, Ready, Rec, Var };

struct ContractBranch {
  Atom atom;
  ContractPtr cont;
};

// Immutable unilateral contract term. The empty internal and external
// sums are identified: nil() is the unique empty sum (rendered "0").
class Contract : public std::enable_shared_from_this<Contract> {
 public:
  static ContractPtr internal_sum(std::vector<ContractBranch> branches);
  static ContractPtr external_sum(std::vector<ContractBranch> branches);
  static ContractPtr ready(Atom a, ContractPtr cont);
  static ContractPtr rec(std::string var, ContractPtr body);
  static ContractPtr var(std::string name);
  static ContractPtr nil();
  static ContractPtr success();  // E = rec X. e;X

  ContractKind kind() const { return kind_; }
  bool is_nil() const { return branches_.empty() && kind_ == ContractKind::InternalSum; }
  bool is_sum() const {
    return kind_ == ContractKind::InternalSum || kind_ == ContractKind::ExternalSum;
  }

  const std::vector<ContractBranch>& branches() const { return branches_; }  // sums
  const Atom& atom() const { return atom_; }                                 // Ready
  const ContractPtr& body() const { return body_; }                          // Ready, Rec
  const std::string& var_name() const { return var_; }                       // Rec, Var

  std::size_t hash() const;  // alpha-invariant

 private:
  Contract() = default;

  ContractKind kind_ = ContractKind::InternalSum;
  std::vector<ContractBranch> branches_;
  Atom atom_;
  ContractPtr body_;
  std::string var_;
  mutable std::size_t hash_ = 0;
};

// Alpha-equivalence (recursion binders compared by de Bruijn level).
bool equal(const ContractPtr& a, const ContractPtr& b);

struct ContractHash {
  std::size_t operator()(const ContractPtr& c) const { return c->hash(); }
};
struct ContractEq {
  bool operator()(const ContractPtr& a, const ContractPtr& b) const { return equal(a, b); }
};

bool is_closed(const ContractPtr& c);
bool contains_nil(const ContractPtr& c);
bool contains_ready(const ContractPtr& c);

// Capture-avoiding substitution of a closed term for a recursion variable.
ContractPtr substitute(const ContractPtr& c, const std::string& var, const ContractPtr& repl);

// Head normal form: unfolds top-level `rec` until a sum or ready prefix
// surfaces. Idempotent on closed contracts.
ContractPtr unfold(const ContractPtr& c);

// Ready sets rs(c). `ready_marker` set means rs(c) = {{RDY}} and `sets`
// is empty; otherwise `sets` lists the offered atom sets.
struct ReadySets {
  bool ready_marker = false;
  std::vector<std::set<Atom>> sets;
};
ReadySets ready_sets(const ContractPtr& c);

bool succeeds(const ContractPtr& c);

// Syntactic dual: sums swapped, atoms co-ed, recursion preserved.
// Requires a 0-free and ready-free input.
ContractPtr dual(const ContractPtr& c);

// unblocks(c, xs): c offers at least one option covered by xs (modulo e).
// Requires head-normalized c != 0.
bool unblocks(const ContractPtr& c, const std::set<Atom>& xs);

// Canonical text; `render_contract` output reparses to an equal term.
std::string render_contract(const ContractPtr& c);

}  // namespace co2
