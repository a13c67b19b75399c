#include "co2/contract.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <sstream>

#include "co2/errors.hpp"

namespace co2 {

Atom::Atom(std::string n, bool b) : name(std::move(n)), barred(b) {
  if (name == "e") barred = false;  // e is self-dual
}

Atom Atom::co() const {
  if (is_e()) return *this;
  return Atom(name, !barred);
}

namespace {

void check_branches(const std::vector<ContractBranch>& bs) {
  for (std::size_t i = 0; i < bs.size(); ++i) {
    if (!bs[i].cont) throw InternalError("contract branch with null continuation");
    for (std::size_t j = i + 1; j < bs.size(); ++j)
      if (bs[i].atom == bs[j].atom)
        throw PreconditionError("duplicate branch atom '" + bs[i].atom.str() + "' in sum");
  }
}

}  // namespace

ContractPtr Contract::internal_sum(std::vector<ContractBranch> branches) {
  check_branches(branches);
  auto c = std::shared_ptr<Contract>(new Contract());
  c->kind_ = ContractKind::InternalSum;
  c->branches_ = std::move(branches);
  return c;
}

ContractPtr Contract::external_sum(std::vector<ContractBranch> branches) {
  if (branches.empty()) return nil();  // empty sums are identified
  check_branches(branches);
  auto c = std::shared_ptr<Contract>(new Contract());
  c->kind_ = ContractKind::ExternalSum;
  c->branches_ = std::move(branches);
  return c;
}

ContractPtr Contract::ready(Atom a, ContractPtr cont) {
  if (!cont) throw InternalError("ready with null continuation");
  auto c = std::shared_ptr<Contract>(new Contract());
  c->kind_ = ContractKind::Ready;
  c->atom_ = std::move(a);
  c->body_ = std::move(cont);
  return c;
}

ContractPtr Contract::rec(std::string var, ContractPtr body) {
  if (!body) throw InternalError("rec with null body");
  auto c = std::shared_ptr<Contract>(new Contract());
  c->kind_ = ContractKind::Rec;
  c->var_ = std::move(var);
  c->body_ = std::move(body);
  return c;
}

ContractPtr Contract::var(std::string name) {
  auto c = std::shared_ptr<Contract>(new Contract());
  c->kind_ = ContractKind::Var;
  c->var_ = std::move(name);
  return c;
}

ContractPtr Contract::nil() {
  static const ContractPtr n = internal_sum({});
  return n;
}

ContractPtr Contract::success() {
  static const ContractPtr e = rec("X", internal_sum({{Atom("e"), var("X")}}));
  return e;
}

namespace {

std::size_t hash_mix(std::size_t h, std::size_t v) {
  return h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
}

std::size_t hash_rec(const Contract& c, std::map<std::string, int>& env, int depth) {
  std::size_t h = static_cast<std::size_t>(c.kind());
  std::hash<std::string> hs;
  switch (c.kind()) {
    case ContractKind::InternalSum:
    case ContractKind::ExternalSum:
      for (const auto& b : c.branches()) {
        h = hash_mix(h, hs(b.atom.name));
        h = hash_mix(h, b.atom.barred ? 7 : 3);
        h = hash_mix(h, hash_rec(*b.cont, env, depth));
      }
      return h;
    case ContractKind::Ready:
      h = hash_mix(h, hs(c.atom().name));
      h = hash_mix(h, c.atom().barred ? 7 : 3);
      return hash_mix(h, hash_rec(*c.body(), env, depth));
    case ContractKind::Rec: {
      auto it = env.find(c.var_name());
      int saved = it == env.end() ? -1 : it->second;
      env[c.var_name()] = depth;
      h = hash_mix(h, hash_rec(*c.body(), env, depth + 1));
      if (saved < 0)
        env.erase(c.var_name());
      else
        env[c.var_name()] = saved;
      return h;
    }
    case ContractKind::Var: {
      auto it = env.find(c.var_name());
      // Free variables hash by name, bound ones by level.
      if (it == env.end()) return hash_mix(h, hs(c.var_name()));
      return hash_mix(h, static_cast<std::size_t>(it->second) * 2 + 1);
    }
  }
  return h;
}

bool equal_rec(const Contract& a, const Contract& b, std::map<std::string, int>& ea,
               std::map<std::string, int>& eb, int depth) {
  if (a.kind() != b.kind()) return false;
  switch (a.kind()) {
    case ContractKind::InternalSum:
    case ContractKind::ExternalSum: {
      if (a.branches().size() != b.branches().size()) return false;
      for (std::size_t i = 0; i < a.branches().size(); ++i) {
        if (a.branches()[i].atom != b.branches()[i].atom) return false;
        if (!equal_rec(*a.branches()[i].cont, *b.branches()[i].cont, ea, eb, depth)) return false;
      }
      return true;
    }
    case ContractKind::Ready:
      return a.atom() == b.atom() && equal_rec(*a.body(), *b.body(), ea, eb, depth);
    case ContractKind::Rec: {
      auto ia = ea.find(a.var_name());
      auto ib = eb.find(b.var_name());
      int sa = ia == ea.end() ? -1 : ia->second;
      int sb = ib == eb.end() ? -1 : ib->second;
      ea[a.var_name()] = depth;
      eb[b.var_name()] = depth;
      bool r = equal_rec(*a.body(), *b.body(), ea, eb, depth + 1);
      if (sa < 0) ea.erase(a.var_name()); else ea[a.var_name()] = sa;
      if (sb < 0) eb.erase(b.var_name()); else eb[b.var_name()] = sb;
      return r;
    }
    case ContractKind::Var: {
      auto ia = ea.find(a.var_name());
      auto ib = eb.find(b.var_name());
      if ((ia == ea.end()) != (ib == eb.end())) return false;
      if (ia == ea.end()) return a.var_name() == b.var_name();
      return ia->second == ib->second;
    }
  }
  return false;
}

}  // namespace

std::size_t Contract::hash() const {
  if (hash_ == 0) {
    std::map<std::string, int> env;
    hash_ = hash_rec(*this, env, 0);
    if (hash_ == 0) hash_ = 1;
  }
  return hash_;
}

bool equal(const ContractPtr& a, const ContractPtr& b) {
  if (a.get() == b.get()) return true;
  if (!a || !b) return false;
  if (a->hash() != b->hash()) return false;
  std::map<std::string, int> ea, eb;
  return equal_rec(*a, *b, ea, eb, 0);
}

namespace {

void free_vars(const ContractPtr& c, std::set<std::string>& bound, std::set<std::string>& out) {
  switch (c->kind()) {
    case ContractKind::InternalSum:
    case ContractKind::ExternalSum:
      for (const auto& b : c->branches()) free_vars(b.cont, bound, out);
      return;
    case ContractKind::Ready:
      free_vars(c->body(), bound, out);
      return;
    case ContractKind::Rec: {
      bool inserted = bound.insert(c->var_name()).second;
      free_vars(c->body(), bound, out);
      if (inserted) bound.erase(c->var_name());
      return;
    }
    case ContractKind::Var:
      if (!bound.count(c->var_name())) out.insert(c->var_name());
      return;
  }
}

}  // namespace

bool is_closed(const ContractPtr& c) {
  std::set<std::string> bound, out;
  free_vars(c, bound, out);
  return out.empty();
}

bool contains_nil(const ContractPtr& c) {
  switch (c->kind()) {
    case ContractKind::InternalSum:
    case ContractKind::ExternalSum:
      if (c->is_nil()) return true;
      return std::any_of(c->branches().begin(), c->branches().end(),
                         [](const ContractBranch& b) { return contains_nil(b.cont); });
    case ContractKind::Ready:
    case ContractKind::Rec:
      return contains_nil(c->body());
    case ContractKind::Var:
      return false;
  }
  return false;
}

bool contains_ready(const ContractPtr& c) {
  switch (c->kind()) {
    case ContractKind::Ready:
      return true;
    case ContractKind::InternalSum:
    case ContractKind::ExternalSum:
      return std::any_of(c->branches().begin(), c->branches().end(),
                         [](const ContractBranch& b) { return contains_ready(b.cont); });
    case ContractKind::Rec:
      return contains_ready(c->body());
    case ContractKind::Var:
      return false;
  }
  return false;
}

ContractPtr substitute(const ContractPtr& c, const std::string& var, const ContractPtr& repl) {
  switch (c->kind()) {
    case ContractKind::InternalSum:
    case ContractKind::ExternalSum: {
      std::vector<ContractBranch> bs;
      bs.reserve(c->branches().size());
      for (const auto& b : c->branches()) bs.push_back({b.atom, substitute(b.cont, var, repl)});
      return c->kind() == ContractKind::InternalSum ? Contract::internal_sum(std::move(bs))
                                                    : Contract::external_sum(std::move(bs));
    }
    case ContractKind::Ready:
      return Contract::ready(c->atom(), substitute(c->body(), var, repl));
    case ContractKind::Rec:
      if (c->var_name() == var) return c;  // shadowed
      return Contract::rec(c->var_name(), substitute(c->body(), var, repl));
    case ContractKind::Var:
      return c->var_name() == var ? repl : c;
  }
  return c;
}

ContractPtr unfold(const ContractPtr& c) {
  ContractPtr cur = c;
  int guard = 0;
  while (cur->kind() == ContractKind::Rec) {
    cur = substitute(cur->body(), cur->var_name(), cur);
    if (++guard > 1000) throw PreconditionError("unguarded recursion while unfolding");
  }
  if (cur->kind() == ContractKind::Var)
    throw PreconditionError("unfold of open contract variable " + cur->var_name());
  return cur;
}

ReadySets ready_sets(const ContractPtr& c) {
  ContractPtr h = c;
  while (h->kind() == ContractKind::Rec) h = h->body();  // rs(rec X.c) = rs(c)
  ReadySets rs;
  switch (h->kind()) {
    case ContractKind::Ready:
      rs.ready_marker = true;
      return rs;
    case ContractKind::InternalSum:
      if (h->is_nil()) {
        rs.sets.push_back({});  // rs(0) = {{}}
        return rs;
      }
      for (const auto& b : h->branches()) rs.sets.push_back({b.atom});
      return rs;
    case ContractKind::ExternalSum: {
      std::set<Atom> all;
      for (const auto& b : h->branches()) all.insert(b.atom);
      rs.sets.push_back(std::move(all));
      return rs;
    }
    case ContractKind::Var:
      throw PreconditionError("ready_sets of open contract");
    case ContractKind::Rec:
      break;
  }
  throw InternalError("ready_sets: unreachable");
}

bool succeeds(const ContractPtr& c) {
  ContractPtr h = unfold(c);
  if (h->kind() == ContractKind::Ready)
    return h->atom().is_e() && equal(h->body(), Contract::success());
  if (h->is_sum()) {
    for (const auto& b : h->branches())
      if (b.atom.is_e() && equal(b.cont, Contract::success())) return true;
  }
  return false;
}

ContractPtr dual(const ContractPtr& c) {
  if (contains_nil(c)) throw PreconditionError("dual of contract containing 0");
  if (contains_ready(c)) throw PreconditionError("dual of contract containing ready");
  std::function<ContractPtr(const ContractPtr&)> go = [&](const ContractPtr& t) -> ContractPtr {
    // The success contract is self-dual: the continuation of e is
    // stipulated to be E in every contract, including duals.
    if (equal(t, Contract::success())) return t;
    switch (t->kind()) {
      case ContractKind::InternalSum:
      case ContractKind::ExternalSum: {
        std::vector<ContractBranch> bs;
        for (const auto& b : t->branches()) bs.push_back({b.atom.co(), go(b.cont)});
        return t->kind() == ContractKind::InternalSum ? Contract::external_sum(std::move(bs))
                                                      : Contract::internal_sum(std::move(bs));
      }
      case ContractKind::Rec:
        return Contract::rec(t->var_name(), go(t->body()));
      case ContractKind::Var:
        return t;
      case ContractKind::Ready:
        break;
    }
    throw InternalError("dual: unreachable");
  };
  return go(c);
}

bool unblocks(const ContractPtr& c, const std::set<Atom>& xs) {
  ContractPtr h = unfold(c);
  if (h->is_nil()) throw PreconditionError("unblocks is undefined on 0");
  if (h->kind() == ContractKind::Ready) return h->atom().is_e() || xs.count(h->atom()) > 0;
  ReadySets rs = ready_sets(h);
  for (const auto& y : rs.sets) {
    bool covered = std::all_of(y.begin(), y.end(),
                               [&](const Atom& a) { return a.is_e() || xs.count(a) > 0; });
    if (covered) return true;
  }
  return false;
}

namespace {

// Chain context: inside an unparenthesized branch continuation the sum
// separators must stay homogeneous, so foreign sums get parenthesized.
enum class ChainCtx { None, Internal, External };

// Branch continuations that are exactly E are omitted in the output.
void render_rec(const ContractPtr& c, std::ostringstream& os, ChainCtx ctx) {
  switch (c->kind()) {
    case ContractKind::InternalSum:
    case ContractKind::ExternalSum: {
      if (c->is_nil()) {
        os << "0";
        return;
      }
      bool internal = c->kind() == ContractKind::InternalSum;
      ChainCtx own = internal ? ChainCtx::Internal : ChainCtx::External;
      bool wrap = ctx != ChainCtx::None && (c->branches().size() > 1 || ctx != own);
      if (wrap) os << "(";
      // A trailing E can be left implicit except in a singleton external
      // sum, where the separator is the only witness of the sum kind.
      bool may_omit = internal || c->branches().size() > 1;
      bool first = true;
      for (const auto& b : c->branches()) {
        if (!first) os << (internal ? " (+) " : " + ");
        first = false;
        os << b.atom.str();
        if (!(may_omit && equal(b.cont, Contract::success()))) {
          os << (internal ? ";" : ".");
          render_rec(b.cont, os, own);
        }
      }
      if (wrap) os << ")";
      return;
    }
    case ContractKind::Ready:
      os << "ready " << c->atom().str() << ". ";
      render_rec(c->body(), os, ChainCtx::None);
      return;
    case ContractKind::Rec: {
      if (equal(c, Contract::success())) {
        os << "E";
        return;
      }
      bool wrap = ctx != ChainCtx::None;  // rec parses greedily
      if (wrap) os << "(";
      os << "rec " << c->var_name() << ". ";
      render_rec(c->body(), os, ChainCtx::None);
      if (wrap) os << ")";
      return;
    }
    case ContractKind::Var:
      os << c->var_name();
      return;
  }
}

}  // namespace

std::string render_contract(const ContractPtr& c) {
  std::ostringstream os;
  render_rec(c, os, ChainCtx::None);
  return os.str();
}

}  // namespace co2
