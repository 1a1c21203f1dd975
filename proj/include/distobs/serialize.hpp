#pragma once

#include "distobs/analysis.hpp"
#include "distobs/blocks.hpp"
#include "distobs/conic.hpp"
#include "distobs/model.hpp"
#include "distobs/synthesis.hpp"
#include "distobs/trilemma.hpp"

#include <map>
#include <string>
#include <string_view>

namespace distobs {

/// {"W": [[..]], "L": [per-node matrices], "M": [{"from": j, "to": i, "block": [[..]]}]}, 1-based.
std::string gains_to_json(const GainSet& gains);

/// Parses and checks every block against the problem's dimensions and graph.
/// Errors are ProblemError with a field path.
GainSet gains_from_json(std::string_view text, const Problem& problem);
GainSet load_gains_file(const std::string& path, const Problem& problem);

/// Status, histories, witness, certificate Q, final Q and P.
std::string state_to_json(const SynthesisState& state);

/// Reads back the certificate matrix written by state_to_json.
Matrix certificate_from_state_json(std::string_view text);

std::string reports_to_json(const DetectabilityReport& det, const ConnectivityReport& conn);
std::string explore_report_to_json(const ExploreReport& report);

/// Self-describing dump of a conic program: variables, cones, coefficient triplets.
std::string program_to_json(const conic::Program& program);

struct RunManifest {
  std::string command;
  std::string problem_path;
  std::string problem_hash;  ///< SHA-256 hex of the problem file bytes
  SynthesisOptions options;
  std::string tool_version;
  std::string timestamp;     ///< UTC, ISO 8601
  std::map<std::string, std::string> outcome;
};

std::string manifest_to_json(const RunManifest& manifest);

std::string sha256_hex(std::string_view bytes);

}  // namespace distobs
