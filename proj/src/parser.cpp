#include "co2/parser.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <set>

#include "co2/errors.hpp"

namespace co2 {

namespace {

enum class Tok {
  End, Ident, Tilde, Semi, Dot, Plus, OPlus,  // (+)
  LParen, RParen, LBrace, RBrace, LBracket, RBracket,
  Bar, Comma, Assign,                          // :=
  Bang, Amp, Arrow, Box, Diamond,              // ! & -> [] <>
};

struct Token {
  Tok kind;
  std::string text;
  int line, col;
};

class Lexer {
 public:
  explicit Lexer(const std::string& text) : text_(&text) { advance(); }

  const Token& peek() const { return cur_; }
  Token take() {
    Token t = cur_;
    advance();
    return t;
  }

 private:
  void advance() {
    while (pos_ < text_->size()) {
      char c = (*text_)[pos_];
      if (c == '#') {
        while (pos_ < text_->size() && (*text_)[pos_] != '\n') ++pos_;
        continue;
      }
      if (c == '\n') {
        ++line_;
        col_ = 1;
        ++pos_;
        continue;
      }
      if (std::isspace(static_cast<unsigned char>(c))) {
        ++col_;
        ++pos_;
        continue;
      }
      break;
    }
    cur_ = {Tok::End, "", line_, col_};
    if (pos_ >= text_->size()) return;
    int line = line_, col = col_;
    auto sym = [&](Tok k, std::size_t n) {
      cur_ = {k, text_->substr(pos_, n), line, col};
      pos_ += n;
      col_ += static_cast<int>(n);
    };
    char c = (*text_)[pos_];
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      while (pos_ < text_->size() &&
             (std::isalnum(static_cast<unsigned char>((*text_)[pos_])) || (*text_)[pos_] == '_'))
        ++pos_;
      cur_ = {Tok::Ident, text_->substr(start, pos_ - start), line, col};
      col_ += static_cast<int>(pos_ - start);
      return;
    }
    auto at = [&](std::size_t off, char ch) {
      return pos_ + off < text_->size() && (*text_)[pos_ + off] == ch;
    };
    switch (c) {
      case '(':
        if (at(1, '+') && at(2, ')')) return sym(Tok::OPlus, 3);
        return sym(Tok::LParen, 1);
      case ')': return sym(Tok::RParen, 1);
      case '{': return sym(Tok::LBrace, 1);
      case '}': return sym(Tok::RBrace, 1);
      case '[':
        if (at(1, ']')) return sym(Tok::Box, 2);
        return sym(Tok::LBracket, 1);
      case ']': return sym(Tok::RBracket, 1);
      case '<':
        if (at(1, '>')) return sym(Tok::Diamond, 2);
        break;
      case '~': return sym(Tok::Tilde, 1);
      case ';': return sym(Tok::Semi, 1);
      case '.': return sym(Tok::Dot, 1);
      case '+': return sym(Tok::Plus, 1);
      case '|': return sym(Tok::Bar, 1);
      case ',': return sym(Tok::Comma, 1);
      case '!': return sym(Tok::Bang, 1);
      case '&': return sym(Tok::Amp, 1);
      case '-':
        if (at(1, '>')) return sym(Tok::Arrow, 2);
        break;
      case ':':
        if (at(1, '=')) return sym(Tok::Assign, 2);
        break;
      default: break;
    }
    throw ParseError(std::string("unexpected character '") + c + "'", line, col);
  }

  const std::string* text_;
  std::size_t pos_ = 0;
  int line_ = 1, col_ = 1;
  Token cur_{Tok::End, "", 1, 1};
};

[[noreturn]] void fail(const Token& t, const std::string& msg) {
  throw ParseError(msg + (t.kind == Tok::End ? " at end of input" : " at '" + t.text + "'"),
                   t.line, t.col);
}

// ---------------------------------------------------------------------------
// Contract validation
// ---------------------------------------------------------------------------

void check_guarded(const ContractPtr& c, const std::string& var, bool guarded, const Token& at) {
  switch (c->kind()) {
    case ContractKind::Var:
      if (c->var_name() == var && !guarded) fail(at, "unguarded recursion variable " + var);
      return;
    case ContractKind::InternalSum:
    case ContractKind::ExternalSum:
      for (const auto& b : c->branches()) check_guarded(b.cont, var, true, at);
      return;
    case ContractKind::Rec:
      if (c->var_name() == var) return;  // shadowed
      check_guarded(c->body(), var, guarded, at);
      return;
    case ContractKind::Ready:
      check_guarded(c->body(), var, guarded, at);
      return;
  }
}

// The success atom's continuation is stipulated to be E; a contract
// alpha-equal to E itself is fine as a whole.
void check_e_continuations(const ContractPtr& c, const Token& at) {
  if (equal(c, Contract::success())) return;
  switch (c->kind()) {
    case ContractKind::InternalSum:
    case ContractKind::ExternalSum:
      for (const auto& b : c->branches()) {
        if (b.atom.is_e() && !equal(b.cont, Contract::success()))
          fail(at, "the continuation of atom e must be E");
        check_e_continuations(b.cont, at);
      }
      return;
    case ContractKind::Rec:
    case ContractKind::Ready:
      check_e_continuations(c->body(), at);
      return;
    case ContractKind::Var:
      return;
  }
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

const std::set<std::string> kContractKeywords = {"rec", "ready", "E"};
const std::set<std::string> kPrefixKeywords = {"tau", "tell", "fuse", "do", "ask"};

class Parser {
 public:
  Parser(const std::string& text, const std::map<std::string, ContractPtr>* bindings)
      : lex_(text) {
    if (bindings) contract_names_ = *bindings;
  }

  // --- contracts -----------------------------------------------------------

  ContractPtr contract_top() {
    const Token& t = lex_.peek();
    if (t.kind == Tok::Ident && t.text == "ready") {
      Token kw = lex_.take();
      Atom a = atom();
      expect(Tok::Dot, "'.' after ready prefix");
      ContractPtr body = contract_top();
      if (contains_ready(body)) fail(kw, "nested ready prefix");
      return Contract::ready(a, body);
    }
    return contract(false);
  }

  // Full contract; `unit` restricts to an unambiguous single item
  // (used for branch continuations and tell payloads).
  ContractPtr contract(bool unit) {
    const Token& t = lex_.peek();
    if (t.kind == Tok::Ident && t.text == "rec") {
      lex_.take();
      Token var = expect(Tok::Ident, "recursion variable");
      if (is_atom_reserved(var.text)) fail(var, "reserved identifier in rec binder");
      expect(Tok::Dot, "'.' after rec binder");
      rec_vars_.insert(var.text);
      ContractPtr body = contract(false);
      rec_vars_.erase(var.text);
      ContractPtr r = Contract::rec(var.text, body);
      check_guarded(body, var.text, false, var);
      return r;
    }
    if (t.kind == Tok::Ident && t.text == "ready") fail(t, "ready may appear at top level only");
    if (t.kind == Tok::Ident && t.text == "E") {
      lex_.take();
      return Contract::success();
    }
    if (t.kind == Tok::LParen) {
      lex_.take();
      ContractPtr c = contract_top();
      expect(Tok::RParen, "')'");
      return c;
    }
    if (is_zero(t)) {
      lex_.take();
      return Contract::nil();
    }
    // Identifier: recursion variable, bound contract name, or a sum.
    if (t.kind == Tok::Ident && rec_vars_.count(t.text) && !unit_lookahead_sum()) {
      Token v = lex_.take();
      return Contract::var(v.text);
    }
    if (t.kind == Tok::Ident && contract_names_.count(t.text) && !unit_lookahead_sum()) {
      Token v = lex_.take();
      return contract_names_.at(v.text);
    }
    return sum(unit);
  }

  ContractPtr sum(bool unit) {
    Token head = lex_.peek();
    std::vector<ContractBranch> branches;
    Atom first = atom();
    // Separator of the first branch decides the sum kind.
    bool internal;
    if (accept(Tok::Semi)) {
      internal = true;
      branches.push_back({first, chain_cont(true)});
    } else if (accept(Tok::Dot)) {
      internal = false;
      branches.push_back({first, chain_cont(false)});
    } else if (lex_.peek().kind == Tok::OPlus) {
      internal = true;
      branches.push_back({first, Contract::success()});
    } else if (lex_.peek().kind == Tok::Plus) {
      internal = false;
      branches.push_back({first, Contract::success()});
    } else {
      // Bare atom: a singleton internal sum.
      return make_sum(true, {{first, Contract::success()}}, head);
    }
    while (true) {
      if (internal ? !accept(Tok::OPlus) : !accept(Tok::Plus)) break;
      Atom a = atom();
      if (accept(internal ? Tok::Semi : Tok::Dot)) {
        branches.push_back({a, chain_cont(internal)});
      } else if (lex_.peek().kind == (internal ? Tok::Dot : Tok::Semi)) {
        fail(lex_.peek(), "mixing ';' and '.' in one sum; parenthesize");
      } else {
        branches.push_back({a, Contract::success()});
      }
    }
    if (lex_.peek().kind == (internal ? Tok::Plus : Tok::OPlus))
      fail(lex_.peek(), "mixing '+' and '(+)' in one sum; parenthesize");
    if (unit && branches.size() > 1) fail(head, "parenthesize this sum");
    return make_sum(internal, std::move(branches), head);
  }

  // Continuation after ';' or '.'; chains must keep one separator kind.
  ContractPtr chain_cont(bool internal) {
    const Token& t = lex_.peek();
    if (t.kind == Tok::LParen) {
      lex_.take();
      ContractPtr c = contract_top();
      expect(Tok::RParen, "')'");
      return c;
    }
    if (t.kind == Tok::Ident && t.text == "rec") return contract(false);
    if (t.kind == Tok::Ident && t.text == "E") {
      lex_.take();
      return Contract::success();
    }
    if (t.kind == Tok::Ident && t.text == "ready") fail(t, "ready may appear at top level only");
    if (is_zero(t)) {
      lex_.take();
      return Contract::nil();
    }
    if (t.kind == Tok::Ident && rec_vars_.count(t.text)) {
      Token v = lex_.take();
      return Contract::var(v.text);
    }
    if (t.kind == Tok::Ident && contract_names_.count(t.text)) {
      Token v = lex_.take();
      return contract_names_.at(v.text);
    }
    Token head = lex_.peek();
    Atom a = atom();
    if (accept(Tok::Semi)) {
      if (!internal) fail(head, "mixing ';' and '.' in one chain; parenthesize");
      return make_sum(true, {{a, chain_cont(true)}}, head);
    }
    if (accept(Tok::Dot)) {
      if (internal) fail(head, "mixing ';' and '.' in one chain; parenthesize");
      return make_sum(false, {{a, chain_cont(false)}}, head);
    }
    // Bare trailing atom: singleton internal sum with inferred E.
    return make_sum(true, {{a, Contract::success()}}, head);
  }

  Atom atom() {
    bool barred = false;
    if (accept(Tok::Tilde)) barred = true;
    Token t = expect(Tok::Ident, "atom");
    if (is_atom_reserved(t.text) || std::isdigit(static_cast<unsigned char>(t.text[0])))
      fail(t, "expected atom");
    if (t.text == "e" && barred) fail(t, "~e is rejected: e is self-dual");
    return Atom(t.text, barred);
  }

  // --- formulas --------------------------------------------------------------

  LtlPtr formula() {  // full grammar, lowest precedence: ->
    LtlPtr l = formula_or();
    if (accept(Tok::Arrow)) return Ltl::implies(l, formula());
    return l;
  }

  LtlPtr formula_or() {
    LtlPtr l = formula_and();
    while (accept(Tok::Bar)) l = Ltl::disj(l, formula_and());
    return l;
  }

  LtlPtr formula_and() {
    LtlPtr l = formula_until();
    while (accept(Tok::Amp)) l = Ltl::conj(l, formula_until());
    return l;
  }

  LtlPtr formula_until() {
    LtlPtr l = formula_unit();
    while (lex_.peek().kind == Tok::Ident && lex_.peek().text == "U") {
      lex_.take();
      l = Ltl::until(l, formula_unit());
    }
    return l;
  }

  LtlPtr formula_unit() {
    const Token& t = lex_.peek();
    switch (t.kind) {
      case Tok::Bang: lex_.take(); return Ltl::negation(formula_unit());
      case Tok::Box: lex_.take(); return Ltl::always(formula_unit());
      case Tok::Diamond: lex_.take(); return Ltl::eventually(formula_unit());
      case Tok::LParen: {
        lex_.take();
        LtlPtr f = formula();
        expect(Tok::RParen, "')'");
        return f;
      }
      case Tok::Tilde: return Ltl::atom(formula_atom());
      case Tok::Ident:
        if (t.text == "true") {
          lex_.take();
          return Ltl::truth();
        }
        if (t.text == "X") {
          lex_.take();
          return Ltl::next(formula_unit());
        }
        return Ltl::atom(formula_atom());
      default: break;
    }
    fail(t, "expected formula");
  }

  Atom formula_atom() {
    bool barred = accept(Tok::Tilde);
    Token t = expect(Tok::Ident, "formula atom");
    if (t.text == "true" || t.text == "U" || t.text == "X")
      fail(t, "reserved word used as formula atom");
    if (t.text == "e" && barred) fail(t, "~e is rejected: e is self-dual");
    return Atom(t.text, barred);
  }

  // --- processes -------------------------------------------------------------

  ProcessPtr process() {
    std::vector<ProcessPtr> parts{pterm()};
    while (accept(Tok::Bar)) parts.push_back(pterm());
    return Process::par(std::move(parts));
  }

  ProcessPtr pterm() {
    const Token& t = lex_.peek();
    if (t.kind == Tok::LParen) {
      Lexer saved = lex_;
      lex_.take();
      // "(x) P" is a delimitation; "(P)" is grouping.
      if (lex_.peek().kind == Tok::Ident && !is_process_start_keyword(lex_.peek().text)) {
        Token id = lex_.take();
        if (lex_.peek().kind == Tok::RParen) {
          lex_.take();
          if (starts_pterm(lex_.peek())) return Process::delim(Ident::var(id.text), pterm());
          fail(lex_.peek(), "expected a process after delimitation (" + id.text + ")");
        }
        lex_ = saved;  // "(P | ...)" grouping
        lex_.take();
      }
      ProcessPtr p = process();
      expect(Tok::RParen, "')'");
      return p;
    }
    if (t.kind == Tok::LBrace) {
      lex_.take();
      Token var = expect(Tok::Ident, "latent contract variable");
      expect(Tok::RBrace, "'}'");
      Token owner = expect(Tok::Ident, "participant name");
      expect_word("says");
      ContractPtr c = contract_top();
      return Process::latent(Ident::var(var.text), owner.text, c);
    }
    if (t.kind == Tok::Ident && t.text == "0") {
      lex_.take();
      return Process::nil();
    }
    if (t.kind == Tok::Ident && !is_process_start_keyword(t.text)) {
      Token name = lex_.take();
      if (lex_.peek().kind == Tok::LParen) return call_after_name(name);
      fail(name, "expected a process");
    }
    return psum();
  }

  ProcessPtr call_after_name(const Token& name) {
    expect(Tok::LParen, "'('");
    std::vector<Ident> args;
    if (lex_.peek().kind != Tok::RParen) {
      args.push_back(Ident::var(expect(Tok::Ident, "session identifier").text));
      while (accept(Tok::Comma))
        args.push_back(Ident::var(expect(Tok::Ident, "session identifier").text));
    }
    expect(Tok::RParen, "')'");
    return Process::call(name.text, std::move(args));
  }

  ProcessPtr psum() {
    std::vector<ProcBranch> branches;
    branches.push_back(pbranch());
    while (accept(Tok::Plus)) branches.push_back(pbranch());
    return Process::sum(std::move(branches));
  }

  ProcBranch pbranch() {
    Prefix pre = prefix();
    ProcessPtr cont = Process::nil();
    if (accept(Tok::Dot)) cont = punit();
    return {std::move(pre), std::move(cont), {}};
  }

  // Branch continuation: like pterm, but an unparenthesized prefix
  // starts a single chain ("+" belongs to the enclosing sum).
  ProcessPtr punit() {
    const Token& t = lex_.peek();
    if (t.kind == Tok::Ident && is_process_start_keyword(t.text) && t.text != "0")
      return Process::sum({pbranch()});
    return pterm();
  }

  Prefix prefix() {
    Token t = expect(Tok::Ident, "prefix");
    if (t.text == "tau") return Prefix::tau();
    if (t.text == "tell") {
      Token to = expect(Tok::Ident, "recipient");
      expect(Tok::LBrace, "'{'");
      Token var = expect(Tok::Ident, "session variable");
      expect(Tok::RBrace, "'}'");
      ContractPtr c = tell_payload();
      return Prefix::tell(to.text, Ident::var(var.text), c);
    }
    if (t.text == "fuse") {
      Token var = expect(Tok::Ident, "session variable");
      return Prefix::fuse(Ident::var(var.text));
    }
    if (t.text == "do") {
      Token u = expect(Tok::Ident, "session identifier");
      return Prefix::do_act(Ident::var(u.text), atom());
    }
    if (t.text == "ask") {
      Token u = expect(Tok::Ident, "session identifier");
      return Prefix::ask(Ident::var(u.text), formula_unit());
    }
    fail(t, "expected prefix");
  }

  // Contract argument of tell: a single unit; compound contracts need parens.
  ContractPtr tell_payload() {
    const Token& t = lex_.peek();
    if (t.kind == Tok::LParen) {
      lex_.take();
      ContractPtr c = contract_top();
      expect(Tok::RParen, "')'");
      return c;
    }
    if (t.kind == Tok::Ident && t.text == "E") {
      lex_.take();
      return Contract::success();
    }
    if (t.kind == Tok::Ident && contract_names_.count(t.text)) {
      Token v = lex_.take();
      return contract_names_.at(v.text);
    }
    if (t.kind == Tok::Tilde || t.kind == Tok::Ident) {
      Token head = lex_.peek();
      Atom a = atom();
      return make_sum(true, {{a, Contract::success()}}, head);
    }
    fail(t, "expected a contract (parenthesize compound contracts)");
  }

  // --- systems ---------------------------------------------------------------

  SystemPtr system() {
    std::vector<SystemPtr> parts{sterm()};
    while (accept(Tok::Bar)) parts.push_back(sterm());
    return System::par(std::move(parts));
  }

  SystemPtr sterm() {
    const Token& t = lex_.peek();
    if (t.kind == Tok::LParen) {
      Lexer saved = lex_;
      lex_.take();
      if (lex_.peek().kind == Tok::Ident) {
        Token id = lex_.take();
        if (lex_.peek().kind == Tok::RParen) {
          lex_.take();
          if (starts_sterm(lex_.peek())) return System::delim(Ident::var(id.text), sterm());
          fail(lex_.peek(), "expected a system after delimitation (" + id.text + ")");
        }
        lex_ = saved;  // "(S | ...)" grouping
        lex_.take();
      }
      SystemPtr s = system();
      expect(Tok::RParen, "')'");
      return s;
    }
    if (t.kind == Tok::Ident && t.text == "0") {
      lex_.take();
      return System::nil();
    }
    Token name = expect(Tok::Ident, "participant or session name");
    expect(Tok::LBracket, "'['");
    // "A says ..." inside brackets marks a session box.
    SystemPtr result;
    if (lex_.peek().kind == Tok::Ident && is_bilateral_lookahead()) {
      Token p1 = lex_.take();
      expect_word("says");
      ContractPtr c1 = contract_top();
      expect(Tok::Bar, "'|' between the two contracts");
      Token p2 = expect(Tok::Ident, "participant name");
      expect_word("says");
      ContractPtr c2 = contract_top();
      result = System::session(name.text, Bilateral(p1.text, c1, p2.text, c2));
    } else {
      result = System::box(name.text, process());
    }
    expect(Tok::RBracket, "']'");
    return result;
  }

  // --- source files ----------------------------------------------------------

  SourceFile source() {
    SourceFile file;
    while (lex_.peek().kind != Tok::End) {
      Token t = expect(Tok::Ident, "statement");
      if (t.text == "contract") {
        Token name = expect(Tok::Ident, "contract name");
        expect(Tok::Assign, "':='");
        ContractPtr c = contract_top();
        check_e_continuations(c, name);
        if (!is_closed(c)) fail(name, "contract " + name.text + " has free recursion variables");
        if (!file.contracts.emplace(name.text, c).second)
          fail(name, "duplicate contract name " + name.text);
        contract_names_ = file.contracts;
        continue;
      }
      if (t.text == "system") {
        expect(Tok::Assign, "':='");
        if (file.system) fail(t, "duplicate system declaration");
        file.system = system();
        continue;
      }
      // definition: NAME(params) := process
      Token name = t;
      expect(Tok::LParen, "'(' in definition");
      std::vector<std::string> params;
      if (lex_.peek().kind != Tok::RParen) {
        params.push_back(expect(Tok::Ident, "parameter").text);
        while (accept(Tok::Comma)) params.push_back(expect(Tok::Ident, "parameter").text);
      }
      expect(Tok::RParen, "')'");
      expect(Tok::Assign, "':='");
      ProcessPtr body = process();
      if (!file.definitions.emplace(name.text, Definition{name.text, params, body}).second)
        fail(name, "duplicate definition " + name.text);
    }
    return file;
  }

  void expect_end() {
    if (lex_.peek().kind != Tok::End) fail(lex_.peek(), "trailing input");
  }

 private:
  bool is_zero(const Token& t) const { return t.kind == Tok::Ident && t.text == "0"; }

  bool is_atom_reserved(const std::string& s) const {
    return kContractKeywords.count(s) || s == "0" || s == "says";
  }

  bool is_process_start_keyword(const std::string& s) const {
    return kPrefixKeywords.count(s) || s == "0";
  }

  bool starts_pterm(const Token& t) const {
    return t.kind == Tok::LParen || t.kind == Tok::LBrace ||
           (t.kind == Tok::Ident);
  }

  bool starts_sterm(const Token& t) const {
    return t.kind == Tok::LParen || t.kind == Tok::Ident;
  }

  // Peeks whether an ident is followed by "says" (needs 2-token lookahead;
  // emulated by saving the lexer -- tokens are cheap to relex).
  bool is_bilateral_lookahead() {
    Lexer saved = lex_;
    Token a = saved.take();
    return a.kind == Tok::Ident && saved.peek().kind == Tok::Ident && saved.peek().text == "says";
  }

  bool unit_lookahead_sum() {
    // An ident directly followed by ';', '.', '+', or '(+)' heads a sum,
    // even if the same name is bound.
    Lexer saved = lex_;
    saved.take();
    Tok k = saved.peek().kind;
    return k == Tok::Semi || k == Tok::Dot || k == Tok::Plus || k == Tok::OPlus;
  }

  bool accept(Tok k) {
    if (lex_.peek().kind != k) return false;
    lex_.take();
    return true;
  }

  Token expect(Tok k, const std::string& what) {
    if (lex_.peek().kind != k) fail(lex_.peek(), "expected " + what);
    return lex_.take();
  }

  void expect_word(const std::string& w) {
    Token t = expect(Tok::Ident, "'" + w + "'");
    if (t.text != w) fail(t, "expected '" + w + "'");
  }

  ContractPtr make_sum(bool internal, std::vector<ContractBranch> bs, const Token& at) {
    try {
      return internal ? Contract::internal_sum(std::move(bs))
                      : Contract::external_sum(std::move(bs));
    } catch (const PreconditionError& e) {
      fail(at, e.what());
    }
  }

  Lexer lex_;
  std::map<std::string, ContractPtr> contract_names_;
  std::set<std::string> rec_vars_;
};

// ---------------------------------------------------------------------------
// Post-parse resolution
// ---------------------------------------------------------------------------

void collect_session_names(const SystemPtr& s, std::set<std::string>& out) {
  switch (s->kind()) {
    case SystemKind::Session: out.insert(s->session_name()); return;
    case SystemKind::Par:
      for (const auto& q : s->parts()) collect_session_names(q, out);
      return;
    case SystemKind::Delim: collect_session_names(s->body(), out); return;
    case SystemKind::Box: return;
  }
}

Ident fix_kind(const Ident& u, const std::set<std::string>& names) {
  if (names.count(u.id)) return Ident::name(u.id);
  return u;
}

ProcessPtr fix_ident_kinds(const ProcessPtr& p, const std::set<std::string>& names) {
  switch (p->kind()) {
    case ProcessKind::Latent:
      return Process::latent(fix_kind(p->ident(), names), p->owner(), p->contract());
    case ProcessKind::Sum: {
      std::vector<ProcBranch> bs;
      for (const auto& b : p->branches()) {
        Prefix pre = b.prefix;
        if (pre.kind != Prefix::Kind::Tau) pre.target = fix_kind(pre.target, names);
        bs.push_back({pre, fix_ident_kinds(b.cont, names), b.addr});
      }
      return Process::sum(std::move(bs));
    }
    case ProcessKind::Par: {
      std::vector<ProcessPtr> ps;
      for (const auto& q : p->parts()) ps.push_back(fix_ident_kinds(q, names));
      return Process::par(std::move(ps));
    }
    case ProcessKind::Delim:
      return Process::delim(fix_kind(p->ident(), names), fix_ident_kinds(p->body(), names));
    case ProcessKind::Call: {
      std::vector<Ident> args;
      for (const auto& a : p->call_args()) args.push_back(fix_kind(a, names));
      return Process::call(p->call_name(), std::move(args));
    }
  }
  return p;
}

SystemPtr fix_ident_kinds(const SystemPtr& s, const std::set<std::string>& names) {
  switch (s->kind()) {
    case SystemKind::Box:
      return System::box(s->participant(), fix_ident_kinds(s->process(), names));
    case SystemKind::Session:
      return s;
    case SystemKind::Par: {
      std::vector<SystemPtr> ps;
      for (const auto& q : s->parts()) ps.push_back(fix_ident_kinds(q, names));
      return System::par(std::move(ps));
    }
    case SystemKind::Delim:
      return System::delim(fix_kind(s->ident(), names), fix_ident_kinds(s->body(), names));
  }
  return s;
}

ProcessPtr assign_addresses(const ProcessPtr& p, const std::string& root, std::vector<int> path) {
  switch (p->kind()) {
    case ProcessKind::Latent:
    case ProcessKind::Call:
      return p;
    case ProcessKind::Sum: {
      std::vector<ProcBranch> bs;
      for (std::size_t i = 0; i < p->branches().size(); ++i) {
        const auto& b = p->branches()[i];
        auto bp = path;
        bp.push_back(static_cast<int>(i));
        bs.push_back({b.prefix, assign_addresses(b.cont, root, bp), Address{root, bp}});
      }
      return Process::sum(std::move(bs));
    }
    case ProcessKind::Par: {
      std::vector<ProcessPtr> ps;
      for (std::size_t i = 0; i < p->parts().size(); ++i) {
        auto bp = path;
        bp.push_back(static_cast<int>(i));
        ps.push_back(assign_addresses(p->parts()[i], root, bp));
      }
      return Process::par(std::move(ps));
    }
    case ProcessKind::Delim: {
      auto bp = path;
      bp.push_back(0);
      return Process::delim(p->ident(), assign_addresses(p->body(), root, bp));
    }
  }
  return p;
}

SystemPtr assign_addresses(const SystemPtr& s) {
  switch (s->kind()) {
    case SystemKind::Box:
      return System::box(s->participant(),
                         assign_addresses(s->process(), "@" + s->participant(), {}));
    case SystemKind::Session:
      return s;
    case SystemKind::Par: {
      std::vector<SystemPtr> ps;
      for (const auto& q : s->parts()) ps.push_back(assign_addresses(q));
      return System::par(std::move(ps));
    }
    case SystemKind::Delim:
      return System::delim(s->ident(), assign_addresses(s->body()));
  }
  return s;
}

// Definition bodies must keep every process identifier prefix-guarded.
void check_guarded_calls(const ProcessPtr& p, const std::string& defname) {
  switch (p->kind()) {
    case ProcessKind::Call:
      throw PreconditionError("process identifier " + p->call_name() +
                              " is not prefix-guarded in definition " + defname);
    case ProcessKind::Par:
      for (const auto& q : p->parts()) check_guarded_calls(q, defname);
      return;
    case ProcessKind::Delim:
      check_guarded_calls(p->body(), defname);
      return;
    case ProcessKind::Sum:
    case ProcessKind::Latent:
      return;
  }
}

void check_calls_resolve(const ProcessPtr& p, const Definitions& defs) {
  switch (p->kind()) {
    case ProcessKind::Call: {
      auto it = defs.find(p->call_name());
      if (it == defs.end())
        throw PreconditionError("undefined process identifier " + p->call_name());
      if (it->second.params.size() != p->call_args().size())
        throw PreconditionError("arity mismatch in call to " + p->call_name());
      return;
    }
    case ProcessKind::Sum:
      for (const auto& b : p->branches()) check_calls_resolve(b.cont, defs);
      return;
    case ProcessKind::Par:
      for (const auto& q : p->parts()) check_calls_resolve(q, defs);
      return;
    case ProcessKind::Delim:
      check_calls_resolve(p->body(), defs);
      return;
    case ProcessKind::Latent:
      return;
  }
}

void check_calls_resolve(const SystemPtr& s, const Definitions& defs) {
  switch (s->kind()) {
    case SystemKind::Box: check_calls_resolve(s->process(), defs); return;
    case SystemKind::Par:
      for (const auto& q : s->parts()) check_calls_resolve(q, defs);
      return;
    case SystemKind::Delim: check_calls_resolve(s->body(), defs); return;
    case SystemKind::Session: return;
  }
}

}  // namespace

ContractPtr parse_contract(const std::string& text) {
  Parser p(text, nullptr);
  ContractPtr c = p.contract_top();
  p.expect_end();
  check_e_continuations(c, Token{Tok::End, "", 1, 1});
  if (!is_closed(c)) throw ParseError("contract has free recursion variables", 1, 1);
  return c;
}

LtlPtr parse_formula(const std::string& text) {
  Parser p(text, nullptr);
  LtlPtr f = p.formula();
  p.expect_end();
  return f;
}

SourceFile parse_source(const std::string& text) {
  Parser p(text, nullptr);
  SourceFile file = p.source();
  p.expect_end();

  // Session identifiers used as session-box names are names everywhere.
  std::set<std::string> names;
  if (file.system) collect_session_names(file.system, names);
  for (auto& [name, def] : file.definitions) {
    def.body = fix_ident_kinds(def.body, names);
    for (const auto& param : def.params)
      if (names.count(param))
        throw PreconditionError("identifier " + param + " used both as session name and variable");
    def.body = assign_addresses(def.body, name, {});
    check_guarded_calls(def.body, name);
    check_calls_resolve(def.body, file.definitions);
    std::set<Ident> fv;
    free_idents(def.body, fv);
    for (const auto& u : fv)
      if (std::find(def.params.begin(), def.params.end(), u.id) == def.params.end())
        throw PreconditionError("definition " + name + " uses unbound identifier " + u.id);
  }
  if (file.system) {
    file.system = fix_ident_kinds(file.system, names);
    file.system = assign_addresses(file.system);
    check_calls_resolve(file.system, file.definitions);
  }
  return file;
}

ProcessPtr parse_process(const std::string& text, const SourceFile* env) {
  Parser p(text, env ? &env->contracts : nullptr);
  ProcessPtr proc = p.process();
  p.expect_end();
  proc = assign_addresses(proc, "@", {});
  if (env) check_calls_resolve(proc, env->definitions);
  return proc;
}

}  // namespace co2
