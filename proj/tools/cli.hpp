#pragma once

#include <cstdint>
#include <iosfwd>
#include <json.hpp>
#include <optional>
#include <string>

#include "minifunc/estimators.hpp"

namespace minifunc::cli {

/// A fully described invocation: command name, master seed and the command's
/// parameters keyed by flag name. Outputs embed the resolved form, and
/// running a resolved config again reproduces the output.
struct RunConfig {
  std::string command;
  std::uint64_t master_seed = 0;
  nlohmann::json params = nlohmann::json::object();

  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);

  bool operator==(const RunConfig&) const = default;
};

/// Histogram from a `symbol,count` CSV (header required) or from a raw
/// sample file with one integer symbol per line. Symbols are labels 1..k;
/// k is the largest symbol seen unless k_override is given. Errors are
/// InputError with the 1-based line number.
Histogram read_histogram(std::istream& in, std::optional<std::size_t> k_override = {});
Histogram read_histogram_file(const std::string& path, std::optional<std::size_t> k_override = {});

/// MINIFUNC_SEED if set (InputError when it is not an unsigned integer), else 0.
std::uint64_t seed_from_env();

/// Runs a resolved or partial config. Exceptions propagate.
void execute(const RunConfig& cfg, std::ostream& out);

/// Exit code for the exception currently being handled: 2 input, 3 config,
/// 4 numerical, 1 anything else.
int exit_code_for_current_exception(std::ostream& err);

/// Command-line entry point. Returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace minifunc::cli
