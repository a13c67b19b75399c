#include "doctest.h"

#include "co2/ltl.hpp"
#include "co2/parser.hpp"

#include "generators.hpp"

using namespace co2;

namespace {
ContractPtr C(const std::string& s) { return parse_contract(s); }
LtlPtr F(const std::string& s) { return parse_formula(s); }

// Does any reachable state fire the given atom?
bool some_edge_fires(const Bilateral& root, const Atom& a) {
  std::vector<Bilateral> states{root};
  std::vector<std::size_t> todo{0};
  auto seen = [&](const Bilateral& g) {
    for (const auto& s : states)
      if (equal(s, g)) return true;
    return false;
  };
  while (!todo.empty()) {
    std::size_t id = todo.back();
    todo.pop_back();
    for (const auto& [label, next] : bilateral_steps(states[id])) {
      if (label.atom == a) return true;
      if (!seen(next)) {
        states.push_back(next);
        todo.push_back(states.size() - 1);
      }
    }
  }
  return false;
}
}  // namespace

TEST_CASE("true holds everywhere") {
  CHECK(ltl_holds(Bilateral("A", C("0"), "B", C("0")), F("true")));
  CHECK(ltl_holds(Bilateral("A", C("a;E"), "B", C("~a.E")), F("true")));
}

TEST_CASE("finite-trace reading at stuck states") {
  Bilateral stuck("A", C("0"), "B", C("0"));
  CHECK(ltl_holds(stuck, F("[] a")));     // always holds at the end
  CHECK(!ltl_holds(stuck, F("<> a")));    // eventually fails past the end
  CHECK(!ltl_holds(stuck, F("X true")));  // next fails past the end
  CHECK(!ltl_holds(stuck, F("a U e")));   // until fails past the end
  CHECK(!ltl_holds(stuck, F("a")));
  CHECK(ltl_holds(stuck, F("!a")));
}

TEST_CASE("operators on a single deterministic head") {
  // ready a forces the first label; afterwards only e fires forever.
  Bilateral g("A", C("ready a . E"), "B", Contract::success());
  CHECK(ltl_holds(g, F("a")));
  CHECK(!ltl_holds(g, F("e")));
  CHECK(ltl_holds(g, F("X e")));
  CHECK(ltl_holds(g, F("X ([] e)")));
  CHECK(ltl_holds(g, F("a U e")));
  CHECK(!ltl_holds(g, F("<> b")));
  CHECK(ltl_holds(g, F("<> e & !X a")));
  CHECK(ltl_holds(g, F("a -> X e")));
}

TEST_CASE("payment policy formula against both partners") {
  ContractPtr c = C("~abort (+) ~commit ; (creditCard + bankTransfer)");
  LtlPtr phi = F("[] (commit -> ! <> bankTransfer)");

  // Partner without the bank-transfer option: the promise holds.
  ContractPtr good = C("abort.E + commit.(~creditCard;E)");
  CHECK(ltl_holds(Bilateral("A", c, "B", good), phi));

  // The full dual keeps the bank-transfer branch: the promise fails.
  ContractPtr full = dual(c);
  CHECK(!ltl_holds(Bilateral("A", c, "B", full), phi));

  // Same with the mover-side polarity.
  LtlPtr phi2 = F("[] (~commit -> ! <> bankTransfer)");
  CHECK(ltl_holds(Bilateral("A", c, "B", good), phi2));
  CHECK(!ltl_holds(Bilateral("A", c, "B", full), phi2));
}

TEST_CASE("never-fires duality against explicit reachability") {
  co2gen::Rng rng(113);
  co2gen::ContractOpts o;
  int checked = 0;
  for (int i = 0; i < 150; ++i) {
    ContractPtr c = co2gen::gen_contract(rng, o);
    ContractPtr d = co2gen::gen_contract(rng, o);
    Bilateral g("A", c, "B", d);
    Atom probe(o.alphabet[rng.below(o.alphabet.size())], rng.chance(50));
    bool fires = some_edge_fires(g, probe);
    bool never = ltl_holds(g, Ltl::negation(Ltl::eventually(Ltl::atom(probe))));
    CHECK(never == !fires);
    ++checked;
  }
  CHECK(checked == 150);
}

TEST_CASE("formula parser and renderer") {
  CHECK(render_formula(F("[] (commit -> ! <> bankTransfer)")) ==
        "[] (commit -> !<> bankTransfer)");
  CHECK(render_formula(F("a U b & c")) == "a U b & c");
  CHECK(render_formula(F("(a U b) & c")) == "a U b & c");
  CHECK(render_formula(F("X (a | b)")) == "X (a | b)");
}

TEST_CASE("formula round trip") {
  for (const char* text : {"true", "a", "~a", "!a", "a & b | c", "a -> b -> c",
                           "[] (commit -> !<> bankTransfer)", "X (a U b)", "<> (a & X b)"}) {
    LtlPtr f = F(text);
    CHECK(render_formula(parse_formula(render_formula(f))) == render_formula(f));
  }
}

namespace {

// Exact LTL evaluation on an ultimately periodic word u v^w (atoms per
// position). Independent of the checker: fixpoints over the lasso.
struct LassoEval {
  std::vector<Atom> word;  // u ++ v
  std::size_t loop_start;  // |u|

  std::size_t succ(std::size_t i) const { return i + 1 < word.size() ? i + 1 : loop_start; }

  std::vector<bool> eval(const LtlPtr& f) const {
    std::size_t n = word.size();
    std::vector<bool> out(n, false);
    switch (f->kind()) {
      case LtlKind::True: return std::vector<bool>(n, true);
      case LtlKind::AtomProp:
        for (std::size_t i = 0; i < n; ++i) out[i] = word[i] == f->prop();
        return out;
      case LtlKind::Not: {
        auto a = eval(f->lhs());
        for (std::size_t i = 0; i < n; ++i) out[i] = !a[i];
        return out;
      }
      case LtlKind::And: case LtlKind::Or: case LtlKind::Implies: {
        auto a = eval(f->lhs());
        auto b = eval(f->rhs());
        for (std::size_t i = 0; i < n; ++i)
          out[i] = f->kind() == LtlKind::And      ? a[i] && b[i]
                   : f->kind() == LtlKind::Or     ? a[i] || b[i]
                                                  : !a[i] || b[i];
        return out;
      }
      case LtlKind::Next: {
        auto a = eval(f->lhs());
        for (std::size_t i = 0; i < n; ++i) out[i] = a[succ(i)];
        return out;
      }
      case LtlKind::Until: {
        auto a = eval(f->lhs());
        auto b = eval(f->rhs());
        bool changed = true;  // least fixpoint
        while (changed) {
          changed = false;
          for (std::size_t i = n; i-- > 0;) {
            bool v = b[i] || (a[i] && out[succ(i)]);
            if (v != out[i]) { out[i] = v; changed = true; }
          }
        }
        return out;
      }
      case LtlKind::Eventually: {
        auto a = eval(f->lhs());
        bool changed = true;
        while (changed) {
          changed = false;
          for (std::size_t i = n; i-- > 0;) {
            bool v = a[i] || out[succ(i)];
            if (v != out[i]) { out[i] = v; changed = true; }
          }
        }
        return out;
      }
      case LtlKind::Always: {
        auto a = eval(f->lhs());
        out.assign(n, true);  // greatest fixpoint
        bool changed = true;
        while (changed) {
          changed = false;
          for (std::size_t i = n; i-- > 0;) {
            bool v = a[i] && out[succ(i)];
            if (v != out[i]) { out[i] = v; changed = true; }
          }
        }
        return out;
      }
    }
    return out;
  }

  bool holds() const { return eval_root; }
  bool eval_root = false;
};

// Finite maximal trace: Next/Until/Eventually fail past the end, Always
// holds there.
bool eval_finite(const LtlPtr& f, const std::vector<Atom>& word, std::size_t i) {
  bool past = i >= word.size();
  switch (f->kind()) {
    case LtlKind::True: return true;
    case LtlKind::AtomProp: return !past && word[i] == f->prop();
    case LtlKind::Not: return !eval_finite(f->lhs(), word, i);
    case LtlKind::And: return eval_finite(f->lhs(), word, i) && eval_finite(f->rhs(), word, i);
    case LtlKind::Or: return eval_finite(f->lhs(), word, i) || eval_finite(f->rhs(), word, i);
    case LtlKind::Implies:
      return !eval_finite(f->lhs(), word, i) || eval_finite(f->rhs(), word, i);
    case LtlKind::Next: return !past && eval_finite(f->lhs(), word, i + 1);
    case LtlKind::Until:
      for (std::size_t k = i; k < word.size(); ++k) {
        if (eval_finite(f->rhs(), word, k)) return true;
        if (!eval_finite(f->lhs(), word, k)) return false;
      }
      return false;
    case LtlKind::Eventually:
      for (std::size_t k = i; k < word.size(); ++k)
        if (eval_finite(f->lhs(), word, k)) return true;
      return false;
    case LtlKind::Always:
      for (std::size_t k = i; k < word.size(); ++k)
        if (!eval_finite(f->lhs(), word, k)) return false;
      return true;
  }
  return false;
}

LtlPtr gen_formula(co2gen::Rng& rng, const std::vector<Atom>& alphabet, int depth) {
  if (depth == 0 || rng.chance(25)) {
    if (rng.chance(10)) return Ltl::truth();
    return Ltl::atom(alphabet[rng.below(alphabet.size())]);
  }
  switch (rng.below(8)) {
    case 0: return Ltl::negation(gen_formula(rng, alphabet, depth - 1));
    case 1: return Ltl::conj(gen_formula(rng, alphabet, depth - 1),
                             gen_formula(rng, alphabet, depth - 1));
    case 2: return Ltl::disj(gen_formula(rng, alphabet, depth - 1),
                             gen_formula(rng, alphabet, depth - 1));
    case 3: return Ltl::implies(gen_formula(rng, alphabet, depth - 1),
                                gen_formula(rng, alphabet, depth - 1));
    case 4: return Ltl::next(gen_formula(rng, alphabet, depth - 1));
    case 5: return Ltl::until(gen_formula(rng, alphabet, depth - 1),
                              gen_formula(rng, alphabet, depth - 1));
    case 6: return Ltl::always(gen_formula(rng, alphabet, depth - 1));
    default: return Ltl::eventually(gen_formula(rng, alphabet, depth - 1));
  }
}

}  // namespace

TEST_CASE("universal verdicts agree with sampled maximal traces") {
  co2gen::Rng rng(211);
  co2gen::ContractOpts o;
  std::vector<Atom> alphabet;
  for (const auto& name : o.alphabet) {
    alphabet.push_back(Atom(name));
    alphabet.push_back(Atom(name, true));
  }
  alphabet.push_back(Atom("e"));

  int graphs = 0, lassos_checked = 0, finites_checked = 0;
  while (graphs < 60) {
    ContractPtr c = co2gen::gen_contract(rng, o);
    ContractPtr d = co2gen::gen_contract(rng, o);
    Bilateral g("A", c, "B", d);
    LtlPtr phi = gen_formula(rng, alphabet, 3);
    bool verdict = ltl_holds(g, phi);
    ++graphs;
    if (!verdict) continue;  // sampling checks the universal direction

    // Sample lassos by walking until a state repeats.
    for (int walk = 0; walk < 25; ++walk) {
      std::vector<Bilateral> seen{g};
      std::vector<Atom> atoms;
      Bilateral cur = g;
      bool stuck = false;
      std::size_t loop_start = 0;
      while (true) {
        auto steps = bilateral_steps(cur);
        if (steps.empty()) {
          stuck = true;
          break;
        }
        auto [label, next] = steps[rng.below(steps.size())];
        atoms.push_back(label.atom);
        bool repeated = false;
        for (std::size_t i = 0; i < seen.size(); ++i)
          if (equal(seen[i], next)) {
            loop_start = i;
            repeated = true;
            break;
          }
        cur = next;
        if (repeated) break;
        seen.push_back(cur);
        if (seen.size() > 40) break;  // cap, drop the sample
      }
      if (stuck) {
        CAPTURE(render_formula(phi));
        CHECK(eval_finite(phi, atoms, 0));
        ++finites_checked;
      } else if (!atoms.empty() && seen.size() <= 40) {
        LassoEval ev{atoms, loop_start, false};
        CAPTURE(render_formula(phi));
        CAPTURE(loop_start);
        CHECK(ev.eval(phi)[0]);
        ++lassos_checked;
      }
    }
  }
  CHECK(lassos_checked + finites_checked > 200);
}
