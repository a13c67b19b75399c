#include "co2/process.hpp"

#include <algorithm>
#include <sstream>

#include "co2/errors.hpp"

namespace co2 {

std::string Address::str() const {
  std::ostringstream os;
  os << root;
  for (std::size_t i = 0; i < path.size(); ++i) os << (i == 0 ? '/' : '.') << path[i];
  return os.str();
}

Prefix Prefix::tell(std::string to, Ident var, ContractPtr c) {
  Prefix p;
  p.kind = Kind::Tell;
  p.tell_to = std::move(to);
  p.target = std::move(var);
  p.contract = std::move(c);
  return p;
}
Prefix Prefix::fuse(Ident var) {
  Prefix p;
  p.kind = Kind::Fuse;
  p.target = std::move(var);
  return p;
}
Prefix Prefix::do_act(Ident u, Atom a) {
  Prefix p;
  p.kind = Kind::Do;
  p.target = std::move(u);
  p.atom = std::move(a);
  return p;
}
Prefix Prefix::ask(Ident u, LtlPtr phi) {
  Prefix p;
  p.kind = Kind::Ask;
  p.target = std::move(u);
  p.formula = std::move(phi);
  return p;
}

std::string Prefix::str() const {
  switch (kind) {
    case Kind::Tau: return "tau";
    case Kind::Tell: {
      std::string c = render_contract(contract);
      bool atomic = c.find(' ') == std::string::npos && c.find('.') == std::string::npos &&
                    c.find(';') == std::string::npos;
      return "tell " + tell_to + " {" + target.str() + "} " + (atomic ? c : "(" + c + ")");
    }
    case Kind::Fuse: return "fuse " + target.str();
    case Kind::Do: return "do " + target.str() + " " + atom.str();
    case Kind::Ask: return "ask " + target.str() + " (" + render_formula(formula) + ")";
  }
  return "?";
}

ProcessPtr Process::latent(Ident u, std::string owner, ContractPtr c) {
  auto p = std::shared_ptr<Process>(new Process());
  p->kind_ = ProcessKind::Latent;
  p->ident_ = std::move(u);
  p->owner_ = std::move(owner);
  p->contract_ = std::move(c);
  return p;
}

ProcessPtr Process::sum(std::vector<ProcBranch> branches) {
  auto p = std::shared_ptr<Process>(new Process());
  p->kind_ = ProcessKind::Sum;
  p->branches_ = std::move(branches);
  return p;
}

ProcessPtr Process::par(std::vector<ProcessPtr> parts) {
  std::vector<ProcessPtr> flat;
  for (auto& q : parts) {
    if (!q || q->is_nil()) continue;
    if (q->kind() == ProcessKind::Par)
      flat.insert(flat.end(), q->parts().begin(), q->parts().end());
    else
      flat.push_back(q);
  }
  if (flat.size() == 1) return flat[0];
  auto p = std::shared_ptr<Process>(new Process());
  p->kind_ = flat.empty() ? ProcessKind::Sum : ProcessKind::Par;
  p->parts_ = std::move(flat);
  return p;
}

ProcessPtr Process::delim(Ident u, ProcessPtr body) {
  auto p = std::shared_ptr<Process>(new Process());
  p->kind_ = ProcessKind::Delim;
  p->ident_ = std::move(u);
  p->body_ = std::move(body);
  return p;
}

ProcessPtr Process::call(std::string name, std::vector<Ident> args) {
  auto p = std::shared_ptr<Process>(new Process());
  p->kind_ = ProcessKind::Call;
  p->owner_ = std::move(name);
  p->parts_args_ = std::move(args);
  return p;
}

SystemPtr System::box(std::string participant, ProcessPtr p) {
  auto s = std::shared_ptr<System>(new System());
  s->kind_ = SystemKind::Box;
  s->name_ = std::move(participant);
  s->process_ = std::move(p);
  return s;
}

SystemPtr System::session(std::string name, Bilateral g) {
  auto s = std::shared_ptr<System>(new System());
  s->kind_ = SystemKind::Session;
  s->name_ = std::move(name);
  s->gamma_ = std::make_shared<Bilateral>(std::move(g));
  return s;
}

SystemPtr System::par(std::vector<SystemPtr> parts) {
  std::vector<SystemPtr> flat;
  for (auto& q : parts) {
    if (!q || q->is_nil()) continue;
    if (q->kind() == SystemKind::Par)
      flat.insert(flat.end(), q->parts().begin(), q->parts().end());
    else
      flat.push_back(q);
  }
  if (flat.size() == 1) return flat[0];
  auto s = std::shared_ptr<System>(new System());
  s->kind_ = SystemKind::Par;
  s->parts_ = std::move(flat);
  return s;
}

SystemPtr System::delim(Ident u, SystemPtr body) {
  auto s = std::shared_ptr<System>(new System());
  s->kind_ = SystemKind::Delim;
  s->ident_ = std::move(u);
  s->body_ = std::move(body);
  return s;
}

namespace {

void prefix_idents(const Prefix& pre, std::set<Ident>& out) {
  if (pre.kind != Prefix::Kind::Tau) out.insert(pre.target);
}

void free_idents_rec(const ProcessPtr& p, std::set<Ident>& bound, std::set<Ident>& out) {
  switch (p->kind()) {
    case ProcessKind::Latent:
      if (!bound.count(p->ident())) out.insert(p->ident());
      return;
    case ProcessKind::Sum:
      for (const auto& b : p->branches()) {
        std::set<Ident> mine;
        prefix_idents(b.prefix, mine);
        for (const auto& u : mine)
          if (!bound.count(u)) out.insert(u);
        free_idents_rec(b.cont, bound, out);
      }
      return;
    case ProcessKind::Par:
      for (const auto& q : p->parts()) free_idents_rec(q, bound, out);
      return;
    case ProcessKind::Delim: {
      bool fresh = bound.insert(p->ident()).second;
      free_idents_rec(p->body(), bound, out);
      if (fresh) bound.erase(p->ident());
      return;
    }
    case ProcessKind::Call:
      for (const auto& a : p->call_args())
        if (!bound.count(a)) out.insert(a);
      return;
  }
}

void free_idents_rec(const SystemPtr& s, std::set<Ident>& bound, std::set<Ident>& out) {
  switch (s->kind()) {
    case SystemKind::Box:
      free_idents_rec(s->process(), bound, out);
      return;
    case SystemKind::Session: {
      Ident n = Ident::name(s->session_name());
      if (!bound.count(n)) out.insert(n);
      return;
    }
    case SystemKind::Par:
      for (const auto& q : s->parts()) free_idents_rec(q, bound, out);
      return;
    case SystemKind::Delim: {
      bool fresh = bound.insert(s->ident()).second;
      free_idents_rec(s->body(), bound, out);
      if (fresh) bound.erase(s->ident());
      return;
    }
  }
}

}  // namespace

void free_idents(const ProcessPtr& p, std::set<Ident>& out) {
  std::set<Ident> bound;
  free_idents_rec(p, bound, out);
}

void free_idents(const SystemPtr& s, std::set<Ident>& out) {
  std::set<Ident> bound;
  free_idents_rec(s, bound, out);
}

namespace {

Ident subst_ident(const Ident& u, const Subst& s) {
  auto it = s.find(u);
  return it == s.end() ? u : it->second;
}

Prefix subst_prefix(const Prefix& pre, const Subst& s) {
  Prefix p = pre;
  if (p.kind != Prefix::Kind::Tau) p.target = subst_ident(p.target, s);
  return p;
}

}  // namespace

ProcessPtr apply_subst(const ProcessPtr& p, const Subst& s) {
  if (s.empty()) return p;
  switch (p->kind()) {
    case ProcessKind::Latent:
      return Process::latent(subst_ident(p->ident(), s), p->owner(), p->contract());
    case ProcessKind::Sum: {
      std::vector<ProcBranch> bs;
      bs.reserve(p->branches().size());
      for (const auto& b : p->branches())
        bs.push_back({subst_prefix(b.prefix, s), apply_subst(b.cont, s), b.addr});
      return Process::sum(std::move(bs));
    }
    case ProcessKind::Par: {
      std::vector<ProcessPtr> ps;
      ps.reserve(p->parts().size());
      for (const auto& q : p->parts()) ps.push_back(apply_subst(q, s));
      return Process::par(std::move(ps));
    }
    case ProcessKind::Delim: {
      Subst inner = s;
      inner.erase(p->ident());  // binder shadows
      if (inner.empty()) return p;
      return Process::delim(p->ident(), apply_subst(p->body(), inner));
    }
    case ProcessKind::Call: {
      std::vector<Ident> args;
      args.reserve(p->call_args().size());
      for (const auto& a : p->call_args()) args.push_back(subst_ident(a, s));
      return Process::call(p->call_name(), std::move(args));
    }
  }
  return p;
}

SystemPtr apply_subst(const SystemPtr& s, const Subst& sub) {
  if (sub.empty()) return s;
  switch (s->kind()) {
    case SystemKind::Box:
      return System::box(s->participant(), apply_subst(s->process(), sub));
    case SystemKind::Session: {
      Ident renamed = subst_ident(Ident::name(s->session_name()), sub);
      return System::session(renamed.id, s->bilateral());
    }
    case SystemKind::Par: {
      std::vector<SystemPtr> ps;
      for (const auto& q : s->parts()) ps.push_back(apply_subst(q, sub));
      return System::par(std::move(ps));
    }
    case SystemKind::Delim: {
      Subst inner = sub;
      inner.erase(s->ident());
      if (inner.empty()) return s;
      return System::delim(s->ident(), apply_subst(s->body(), inner));
    }
  }
  return s;
}

namespace {

void render_process_rec(const ProcessPtr& p, std::ostringstream& os, bool parenthesize) {
  switch (p->kind()) {
    case ProcessKind::Latent:
      os << "{" << p->ident().str() << "} " << p->owner() << " says "
         << render_contract(p->contract());
      return;
    case ProcessKind::Sum: {
      if (p->is_nil()) {
        os << "0";
        return;
      }
      bool wrap = parenthesize && p->branches().size() > 1;
      if (wrap) os << "(";
      bool first = true;
      for (const auto& b : p->branches()) {
        if (!first) os << " + ";
        first = false;
        os << b.prefix.str();
        if (!b.cont->is_nil()) {
          os << " . ";
          render_process_rec(b.cont, os, true);
        }
      }
      if (wrap) os << ")";
      return;
    }
    case ProcessKind::Par: {
      bool wrap = parenthesize;
      if (wrap) os << "(";
      bool first = true;
      for (const auto& q : p->parts()) {
        if (!first) os << " | ";
        first = false;
        render_process_rec(q, os, true);
      }
      if (wrap) os << ")";
      return;
    }
    case ProcessKind::Delim:
      if (parenthesize) os << "(";
      os << "(" << p->ident().str() << ") ";
      render_process_rec(p->body(), os, true);
      if (parenthesize) os << ")";
      return;
    case ProcessKind::Call: {
      os << p->call_name() << "(";
      bool first = true;
      for (const auto& a : p->call_args()) {
        if (!first) os << ", ";
        first = false;
        os << a.str();
      }
      os << ")";
      return;
    }
  }
}

void render_system_rec(const SystemPtr& s, std::ostringstream& os, bool parenthesize) {
  switch (s->kind()) {
    case SystemKind::Box:
      os << s->participant() << "[";
      render_process_rec(s->process(), os, false);
      os << "]";
      return;
    case SystemKind::Session:
      os << s->session_name() << "[" << s->bilateral().str() << "]";
      return;
    case SystemKind::Par: {
      if (s->is_nil()) {
        os << "0";
        return;
      }
      bool wrap = parenthesize;
      if (wrap) os << "(";
      bool first = true;
      for (const auto& q : s->parts()) {
        if (!first) os << " | ";
        first = false;
        render_system_rec(q, os, true);
      }
      if (wrap) os << ")";
      return;
    }
    case SystemKind::Delim:
      if (parenthesize) os << "(";
      os << "(" << s->ident().str() << ") ";
      render_system_rec(s->body(), os, true);
      if (parenthesize) os << ")";
      return;
  }
}

}  // namespace

std::string render_process(const ProcessPtr& p) {
  std::ostringstream os;
  render_process_rec(p, os, false);
  return os.str();
}

std::string render_system(const SystemPtr& s) {
  std::ostringstream os;
  render_system_rec(s, os, false);
  return os.str();
}

}  // namespace co2
