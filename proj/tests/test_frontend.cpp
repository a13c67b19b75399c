#include "doctest.h"

#include "co2/errors.hpp"
#include "co2/parser.hpp"
#include "co2/semantics.hpp"

#include "generators.hpp"

using namespace co2;

namespace {
ContractPtr C(const std::string& s) { return parse_contract(s); }

const char* kStoreFile = R"(
contract cA := rec Z . addToCart . Z + creditCard . (~ok (+) ~no) + e
contract cB := ~addToCart ; ~creditCard ; (ok + no)
X(x) := do x addToCart . X(x) + do x creditCard . (tau . do x ~ok + tau . do x ~no)
Y(y) := do y ~addToCart . do y ~creditCard . do y ok
system := A[ (x) (tell A {x} cA . X(x) | fuse x) ] | B[ (y) tell A {y} cB . Y(y) ]
)";
}  // namespace

TEST_CASE("contract grammar basics") {
  ContractPtr store = C("rec Z . addToCart . Z + creditCard . (~ok (+) ~no) + e");
  REQUIRE(store->kind() == ContractKind::Rec);
  ContractPtr body = store->body();
  REQUIRE(body->kind() == ContractKind::ExternalSum);
  REQUIRE(body->branches().size() == 3);
  CHECK(body->branches()[0].atom == Atom("addToCart"));
  CHECK(body->branches()[2].atom == Atom("e"));
  CHECK(equal(body->branches()[2].cont, Contract::success()));  // inferred E

  CHECK(C("0")->is_nil());
  CHECK(equal(C("E"), Contract::success()));
  CHECK(C("a")->kind() == ContractKind::InternalSum);  // bare atom
}

TEST_CASE("grammar rejections") {
  CHECK_THROWS_AS(C("a ; b . c"), ParseError);        // mixed separators
  CHECK_THROWS_AS(C("a;E (+) b.E"), ParseError);      // mixed branch kinds
  CHECK_THROWS_AS(C("a;E + b;E"), ParseError);        // '+' joining ';' branches
  CHECK_THROWS_AS(C("~e"), ParseError);               // e is self-dual
  CHECK_THROWS_AS(C("a.E + a.E"), ParseError);        // duplicate branch atoms
  CHECK_THROWS_AS(C("rec X . X"), ParseError);        // unguarded recursion
  CHECK_THROWS_AS(C("rec X . rec Y . X"), ParseError);
  CHECK_THROWS_AS(C("a ; ready b . E"), ParseError);  // ready below top level
  CHECK_THROWS_AS(C("e ; a"), ParseError);            // e must continue with E
}

TEST_CASE("error positions point into the offending token") {
  try {
    parse_contract("a;E (+) \n  b.E");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line == 2);
    CHECK(e.col == 4);
  }
}

TEST_CASE("contract round trip") {
  co2gen::Rng rng(131);
  co2gen::ContractOpts o;
  o.ready_free = false;
  for (int i = 0; i < 300; ++i) {
    ContractPtr c = co2gen::gen_contract(rng, o);
    CAPTURE(render_contract(c));
    CHECK(equal(parse_contract(render_contract(c)), c));
  }
}

TEST_CASE("source file parses and resolves") {
  SourceFile src = parse_source(kStoreFile);
  CHECK(src.contracts.count("cA"));
  CHECK(src.definitions.count("X"));
  CHECK(src.definitions.count("Y"));
  REQUIRE(src.system);
  NormalSystem ns = normalize_system(src.system);
  CHECK(ns.boxes.size() == 2);
  CHECK(ns.sessions.empty());
  CHECK(ns.closed());
}

TEST_CASE("normalization is idempotent and render round-trips") {
  SourceFile src = parse_source(kStoreFile);
  NormalSystem ns = normalize_system(src.system);
  NormalSystem ns2 = normalize_system(ns.to_system());
  CHECK(ns.str() == ns2.str());

  // The rendered system reparses to the same normal form (definitions
  // must accompany the state text).
  std::string defs_text =
      "X(x) := do x addToCart . X(x) + do x creditCard . (tau . do x ~ok + tau . do x ~no)\n"
      "Y(y) := do y ~addToCart . do y ~creditCard . do y ok\n";
  SourceFile again = parse_source(defs_text + "system := " + ns.str());
  CHECK(normalize_system(again.system).str() == ns.str());
}

TEST_CASE("definition validation") {
  CHECK_THROWS_AS(parse_source("X(x) := do x a . Y(x)\nsystem := A[X(x)]"), PreconditionError);
  CHECK_THROWS_AS(parse_source("X(x) := do x a . X(x) | X(x)"), PreconditionError);
  CHECK_THROWS_AS(parse_source("X(x) := do y a . X(x)"), PreconditionError);
  CHECK_THROWS_AS(parse_source("X(x) := do x a\nX(x) := tau"), ParseError);
}

TEST_CASE("session boxes parse as bilateral contracts") {
  SourceFile src = parse_source("system := (s) ( s[A says E | B says ready no . E] | A[0] )");
  NormalSystem ns = normalize_system(src.system);
  REQUIRE(ns.sessions.count("s"));
  CHECK(ns.sessions.at("s").left_name() == "A");
  CHECK(contains_ready(ns.sessions.at("s").right()));
  CHECK(ns.boxes.count("A"));
}

TEST_CASE("the parser survives mangled input") {
  co2gen::Rng rng(222);
  const char* pieces[] = {"rec", "ready", "a", "~", ";", ".", "+", "(+)", "(", ")", "E", "0",
                          "X", "e", "tell", "{", "}", "says", "|", "[]", "U", ":="};
  for (int i = 0; i < 500; ++i) {
    std::string text;
    int len = 1 + static_cast<int>(rng.below(10));
    for (int k = 0; k < len; ++k) {
      text += pieces[rng.below(sizeof(pieces) / sizeof(pieces[0]))];
      text += rng.chance(70) ? " " : "";
    }
    try {
      parse_contract(text);
    } catch (const ParseError&) {
    }
    try {
      parse_source(text);
    } catch (const ParseError&) {
    } catch (const PreconditionError&) {
    }
  }
  CHECK(true);  // no crash, no unexpected exception type
}
