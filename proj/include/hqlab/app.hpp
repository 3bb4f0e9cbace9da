#pragma once

// Subcommand drivers behind the command-line tool.

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

#include "hqlab/cone.hpp"
#include "hqlab/config.hpp"

namespace hqlab {

enum class Subcommand { Certify, Solve, Flow, Sweep };

std::optional<Subcommand> parse_subcommand(const std::string& name);

struct RunOptions {
  std::optional<std::string> output_dir;  // overrides the config
  bool quiet = false;
  std::ostream* diagnostics = nullptr;  // defaults to std::cerr
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitSolver = 3;

/// Loads, validates and runs; returns the process exit status.
int run(const std::filesystem::path& config_path, Subcommand cmd, const RunOptions& opts = {});
int run(const RunConfig& cfg, Subcommand cmd, const RunOptions& opts = {});

/// Certificate for the subsolution candidate of the config on eq's grid.
/// Without a configured delta, starts at 0.1 min(mu) and halves up to 20
/// times. Throws CertificationError when every attempt fails.
ConeCertificate certify_config(const RunConfig& cfg, const Equation& eq, const ScalarField& psi);

/// Solves the manufactured problem on an N-grid along the continuity path
/// and returns sup |u - u*| after removing both means.
struct ManufacturedRun {
  double error_inf = 0.0;
  double residual_inf = 0.0;
  double b = 0.0;
};
ManufacturedRun manufactured_run(const RunConfig& cfg, int N);

}  // namespace hqlab
