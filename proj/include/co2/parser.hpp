#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "co2/contract.hpp"
#include "co2/ltl.hpp"
#include "co2/process.hpp"

namespace co2 {

// A parsed .co2 file: named contracts, process definitions, and an
// optional system.
struct SourceFile {
  std::map<std::string, ContractPtr> contracts;
  Definitions definitions;
  SystemPtr system;  // null when the file declares none
};

// Standalone contract text (inline CLI arguments, tests).
ContractPtr parse_contract(const std::string& text);

// Standalone formula text.
LtlPtr parse_formula(const std::string& text);

// Full source file; resolves names, validates definitions and
// closedness of the system, and assigns prefix addresses.
SourceFile parse_source(const std::string& text);

// Standalone process text (tests); addresses rooted at "@".
ProcessPtr parse_process(const std::string& text, const SourceFile* env = nullptr);

}  // namespace co2
