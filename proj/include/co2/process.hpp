#pragma once

#include <compare>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "co2/bilateral.hpp"
#include "co2/contract.hpp"
#include "co2/ltl.hpp"

namespace co2 {

// Session identifier: a variable (not yet stipulated) or a name.
struct Ident {
  enum class Kind { Var, Name } kind = Kind::Var;
  std::string id;

  static Ident var(std::string s) { return {Kind::Var, std::move(s)}; }
  static Ident name(std::string s) { return {Kind::Name, std::move(s)}; }
  bool is_var() const { return kind == Kind::Var; }
  bool is_name() const { return kind == Kind::Name; }
  auto operator<=>(const Ident&) const = default;
  std::string str() const { return id; }
};

// Syntactic address of a prefix occurrence: the definition name (or
// "@participant" for a top-level process) plus the child path. Recursion
// unfolding preserves the defining body's addresses.
struct Address {
  std::string root;
  std::vector<int> path;

  auto operator<=>(const Address&) const = default;
  std::string str() const;
};

struct Prefix {
  enum class Kind { Tau, Tell, Fuse, Do, Ask } kind = Kind::Tau;
  std::string tell_to;  // Tell: recipient participant
  Ident target;         // Tell/Fuse: session variable; Do/Ask: variable or name
  ContractPtr contract; // Tell
  Atom atom;            // Do
  LtlPtr formula;       // Ask

  static Prefix tau() { return {}; }
  static Prefix tell(std::string to, Ident var, ContractPtr c);
  static Prefix fuse(Ident var);
  static Prefix do_act(Ident u, Atom a);
  static Prefix ask(Ident u, LtlPtr phi);

  std::string str() const;
};

class Process;
using ProcessPtr = std::shared_ptr<const Process>;

enum class ProcessKind { Latent, Sum, Par, Delim, Call };

struct ProcBranch {
  Prefix prefix;
  ProcessPtr cont;
  Address addr;
};

class Process {
 public:
  static ProcessPtr latent(Ident u, std::string owner, ContractPtr c);
  static ProcessPtr sum(std::vector<ProcBranch> branches);
  static ProcessPtr par(std::vector<ProcessPtr> parts);  // flattens, drops nils
  static ProcessPtr delim(Ident u, ProcessPtr body);
  static ProcessPtr call(std::string name, std::vector<Ident> args);
  static ProcessPtr nil() { return sum({}); }

  ProcessKind kind() const { return kind_; }
  bool is_nil() const { return kind_ == ProcessKind::Sum && branches_.empty(); }

  const Ident& ident() const { return ident_; }                    // Latent, Delim
  const std::string& owner() const { return owner_; }              // Latent
  const ContractPtr& contract() const { return contract_; }        // Latent
  const std::vector<ProcBranch>& branches() const { return branches_; }
  const std::vector<ProcessPtr>& parts() const { return parts_; }  // Par
  const ProcessPtr& body() const { return body_; }                 // Delim
  const std::string& call_name() const { return owner_; }          // Call
  const std::vector<Ident>& call_args() const { return parts_args_; }

 private:
  Process() = default;
  ProcessKind kind_ = ProcessKind::Sum;
  Ident ident_;
  std::string owner_;
  ContractPtr contract_;
  std::vector<ProcBranch> branches_;
  std::vector<ProcessPtr> parts_;
  ProcessPtr body_;
  std::vector<Ident> parts_args_;
};

struct Definition {
  std::string name;
  std::vector<std::string> params;  // session variables
  ProcessPtr body;
};

using Definitions = std::map<std::string, Definition>;

class System;
using SystemPtr = std::shared_ptr<const System>;

enum class SystemKind { Box, Session, Par, Delim };

class System {
 public:
  static SystemPtr box(std::string participant, ProcessPtr p);
  static SystemPtr session(std::string name, Bilateral g);
  static SystemPtr par(std::vector<SystemPtr> parts);
  static SystemPtr delim(Ident u, SystemPtr body);
  static SystemPtr nil() { return par({}); }

  SystemKind kind() const { return kind_; }
  bool is_nil() const { return kind_ == SystemKind::Par && parts_.empty(); }

  const std::string& participant() const { return name_; }  // Box
  const ProcessPtr& process() const { return process_; }    // Box
  const std::string& session_name() const { return name_; } // Session
  const Bilateral& bilateral() const { return *gamma_; }    // Session
  const std::vector<SystemPtr>& parts() const { return parts_; }
  const Ident& ident() const { return ident_; }             // Delim
  const SystemPtr& body() const { return body_; }           // Delim

 private:
  System() = default;
  SystemKind kind_ = SystemKind::Par;
  std::string name_;
  ProcessPtr process_;
  std::shared_ptr<Bilateral> gamma_;
  std::vector<SystemPtr> parts_;
  Ident ident_;
  SystemPtr body_;
};

// Free session identifiers (variables and names together).
void free_idents(const ProcessPtr& p, std::set<Ident>& out);
void free_idents(const SystemPtr& s, std::set<Ident>& out);

using Subst = std::map<Ident, Ident>;
ProcessPtr apply_subst(const ProcessPtr& p, const Subst& s);
SystemPtr apply_subst(const SystemPtr& s, const Subst& sub);

std::string render_process(const ProcessPtr& p);
std::string render_system(const SystemPtr& s);

}  // namespace co2
