// Command-line front end: parsing, compliance and culpability checks,
// simulation, LTL queries, and the honesty checker.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "co2/abstraction.hpp"
#include "co2/bilateral.hpp"
#include "co2/errors.hpp"
#include "co2/honesty.hpp"
#include "co2/ltl.hpp"
#include "co2/parser.hpp"
#include "co2/semantics.hpp"

namespace {

constexpr int kExitUsage = 64;
constexpr int kExitParse = 65;
constexpr int kExitInternal = 70;

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw co2::Error("cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::size_t state_cap_from_env(std::size_t fallback) {
  const char* env = std::getenv("CO2_STATE_CAP");
  if (!env || !*env) return fallback;
  return static_cast<std::size_t>(std::stoull(env));
}

// Inline contract arguments accept DSL text directly; anything that
// looks like a path to an existing file is read from disk.
co2::ContractPtr contract_arg(const std::string& arg) {
  std::ifstream probe(arg);
  if (probe.good()) return co2::parse_contract(slurp(arg));
  return co2::parse_contract(arg);
}

std::vector<std::pair<std::string, std::string>> load_script(const std::string& path) {
  std::vector<std::pair<std::string, std::string>> script;
  std::istringstream in(slurp(path));
  std::string line;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string who, addr;
    if (ls >> who >> addr) script.push_back({who, addr});
  }
  return script;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"contract calculus and CO2 process calculus tool"};
  app.require_subcommand(1);

  std::string file, participant, session, phi_text, policy_name = "random", script_path;
  std::string contract_c, contract_d;
  std::uint64_t seed = 0;
  std::size_t max_steps = 200;
  bool as_json = false;

  auto* parse_cmd = app.add_subcommand("parse", "parse a .co2 file and print its normal form");
  parse_cmd->add_option("file", file)->required();

  auto* compliance = app.add_subcommand("compliance", "check compliance of two contracts");
  compliance->add_option("c", contract_c)->required();
  compliance->add_option("d", contract_d)->required();
  compliance->add_flag("--json", as_json);

  auto* dual_cmd = app.add_subcommand("dual", "print the dual of a contract");
  dual_cmd->add_option("c", contract_c)->required();

  auto* culpable = app.add_subcommand("culpable", "list culpable participants of a session");
  culpable->add_option("file", file)->required();
  culpable->add_option("--session", session)->required();

  auto* exculpate_cmd = app.add_subcommand("exculpate", "shortest exculpating trace");
  exculpate_cmd->add_option("file", file)->required();
  exculpate_cmd->add_option("--session", session)->required();
  exculpate_cmd->add_option("--participant", participant)->required();

  auto* simulate_cmd = app.add_subcommand("simulate", "run the reduction semantics");
  simulate_cmd->add_option("file", file)->required();
  simulate_cmd->add_option("--policy", policy_name)
      ->check(CLI::IsMember({"exhaustive", "random", "script", "solo"}));
  simulate_cmd->add_option("--seed", seed);
  simulate_cmd->add_option("--steps", max_steps);
  simulate_cmd->add_option("--script", script_path);
  simulate_cmd->add_option("--participant", participant);
  simulate_cmd->add_flag("--json", as_json);

  auto* ltl_cmd = app.add_subcommand("ltl", "evaluate an LTL formula against a session");
  ltl_cmd->add_option("file", file)->required();
  ltl_cmd->add_option("--session", session)->required();
  ltl_cmd->add_option("--phi", phi_text)->required();

  auto* honesty = app.add_subcommand("check-honesty", "sharp-honesty verdict for a participant");
  honesty->add_option("file", file)->required();
  honesty->add_option("--participant", participant)->required();
  honesty->add_flag("--json", as_json);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  std::size_t contract_cap = state_cap_from_env(co2::kDefaultContractStateCap);
  std::size_t abstract_cap = state_cap_from_env(co2::kDefaultAbstractStateCap);

  try {
    if (parse_cmd->parsed()) {
      co2::SourceFile src = co2::parse_source(slurp(file));
      for (const auto& [name, c] : src.contracts)
        std::cout << "contract " << name << " := " << co2::render_contract(c) << "\n";
      for (const auto& [name, def] : src.definitions) {
        std::cout << name << "(";
        for (std::size_t i = 0; i < def.params.size(); ++i)
          std::cout << (i ? ", " : "") << def.params[i];
        std::cout << ") := " << co2::render_process(def.body) << "\n";
      }
      if (src.system)
        std::cout << "system := " << co2::normalize_system(src.system).str() << "\n";
      return 0;
    }

    if (compliance->parsed()) {
      auto c = contract_arg(contract_c);
      auto d = contract_arg(contract_d);
      co2::ComplianceResult r = co2::is_compliant(c, d, contract_cap);
      if (as_json) {
        nlohmann::json j;
        j["compliant"] = r.compliant;
        j["witness"] = nlohmann::json::array();
        for (const auto& l : r.witness) j["witness"].push_back(l.str());
        std::cout << j.dump(2) << "\n";
      } else if (r.compliant) {
        std::cout << "compliant\n";
      } else {
        std::cout << "not compliant; witness:";
        for (const auto& l : r.witness) std::cout << " [" << l.str() << "]";
        std::cout << "\n";
      }
      return r.compliant ? 0 : 1;
    }

    if (dual_cmd->parsed()) {
      std::cout << co2::render_contract(co2::dual(contract_arg(contract_c))) << "\n";
      return 0;
    }

    if (culpable->parsed() || exculpate_cmd->parsed() || simulate_cmd->parsed() ||
        ltl_cmd->parsed() || honesty->parsed()) {
      co2::SourceFile src = co2::parse_source(slurp(file));

      if (honesty->parsed()) {
        if (!src.system) throw co2::PreconditionError("file declares no system");
        co2::ProcessPtr proc = co2::participant_process(src.system, participant);
        co2::HonestyVerdict v =
            co2::check_sharp_honesty(participant, proc, src.definitions, abstract_cap);
        if (as_json) {
          std::cout << v.to_json();
        } else {
          switch (v.status) {
            case co2::HonestyVerdict::Status::SharpHonest:
              std::cout << participant << " is sharp-honest\n";
              break;
            case co2::HonestyVerdict::Status::NotSharpHonest:
              std::cout << participant << " is not sharp-honest\n";
              break;
            case co2::HonestyVerdict::Status::Unsupported:
              std::cout << "unsupported process for " << participant << "\n";
              break;
          }
          for (const auto& r : v.reasons)
            std::cout << "  - " << r.detail << (r.location.empty() ? "" : " at " + r.location)
                      << "\n";
        }
        return v.exit_code();
      }

      if (!src.system) throw co2::PreconditionError("file declares no system");
      co2::NormalSystem ns = co2::normalize_system(src.system);

      if (culpable->parsed()) {
        auto it = ns.sessions.find(session);
        if (it == ns.sessions.end()) {
          std::cout << "no session " << session << "\n";
          return 0;
        }
        bool any = false;
        for (const std::string& p : {it->second.left_name(), it->second.right_name()})
          if (co2::culpable_at(p, session, ns)) {
            std::cout << p << "\n";
            any = true;
          }
        if (!any) std::cout << "nobody culpable\n";
        return 0;
      }

      if (exculpate_cmd->parsed()) {
        auto it = ns.sessions.find(session);
        if (it == ns.sessions.end()) throw co2::PreconditionError("no session " + session);
        auto trace = co2::exculpate(it->second, participant);
        if (trace.empty()) {
          std::cout << participant << " is already not culpable\n";
        } else {
          for (const auto& l : trace) std::cout << l.str() << "\n";
        }
        return 0;
      }

      if (simulate_cmd->parsed()) {
        co2::SimPolicy policy = co2::SimPolicy::random(seed);
        if (policy_name == "exhaustive") policy = co2::SimPolicy::exhaustive();
        if (policy_name == "solo") {
          if (participant.empty()) throw co2::PreconditionError("--participant required for solo");
          policy = co2::SimPolicy::solo(participant, seed);
        }
        if (policy_name == "script") {
          if (script_path.empty()) throw co2::PreconditionError("--script required");
          policy = co2::SimPolicy::fixed(load_script(script_path));
        }
        co2::SimTrace tr = co2::simulate(ns, src.definitions, policy, max_steps, contract_cap);
        if (as_json) {
          std::cout << tr.to_json();
        } else {
          for (std::size_t i = 0; i < tr.states.size(); ++i) {
            std::cout << tr.states[i].str() << "\n";
            if (i < tr.labels.size())
              std::cout << "  --[" << tr.labels[i].participant << " says " << tr.labels[i].prefix
                        << " @ " << tr.labels[i].address << "]-->\n";
          }
        }
        return 0;
      }

      if (ltl_cmd->parsed()) {
        auto it = ns.sessions.find(session);
        if (it == ns.sessions.end()) throw co2::PreconditionError("no session " + session);
        co2::LtlPtr phi = co2::parse_formula(phi_text);
        bool holds = co2::ltl_holds(it->second, phi, contract_cap);
        std::cout << (holds ? "holds" : "does not hold") << "\n";
        return holds ? 0 : 1;
      }
    }
  } catch (const co2::ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kExitParse;
  } catch (const co2::PreconditionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const co2::ScriptError& e) {
    std::cerr << "script error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const co2::InternalError& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  } catch (const co2::CapExceeded& e) {
    std::cerr << "state cap exceeded: " << e.what() << "\n";
    return kExitInternal;
  } catch (const co2::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
