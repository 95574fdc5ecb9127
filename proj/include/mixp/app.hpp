#pragma once

// Batch runs behind the command line: each subcommand reads a config, writes
// its artifacts atomically into the output directory and returns an exit code.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mixp/config.hpp"
#include "mixp/error.hpp"
#include "mixp/regularity.hpp"

namespace mixp {

struct RunOptions {
  std::optional<std::string> config_path;  ///< required except for selftest
  std::optional<std::string> out;          ///< overrides the config's output directory
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<int> schedule_k;
};

/// 1 config/invalid input, 2 solver, 3 invariant or verification failure, 4 I/O.
int exit_code(ErrorKind kind);

/// Subcommands: solve, sequence, verify-regularity, convergence, selftest.
/// Errors are reported on `log` and mapped through exit_code.
int run(std::string_view subcommand, const RunOptions& opt, std::ostream& log);

/// Reads and parses a config file, applying --seed / --schedule-k overrides.
ExperimentConfig load_config(const std::string& path, const RunOptions& opt = {});

/// Zero for seed 0, otherwise i.i.d. uniform values in [0, 1) drawn from the seed.
GridFunction initial_field(const GridPtr& grid, std::uint64_t seed);

/// Sup of |interpolant - target| over the nodes and the midpoints between
/// them (boundary nodes included, where the field is 0).
double interpolation_error(const GridFunction& u, const Expression& target);

struct ConvergenceStudy {
  std::vector<int> nodes;
  std::vector<double> h;
  std::vector<double> error;
  double min_ratio = 0.0;        ///< smallest error reduction between consecutive meshes
  double roundtrip_error = 0.0;  ///< manufactured source solved back on the finest mesh
  bool pass = false;             ///< min_ratio >= 3 and roundtrip_error <= 1e-5
};
/// Needs `convergence.target`; runs the full sequence on every mesh.
ConvergenceStudy convergence_study(const ExperimentConfig& cfg);

struct RegularityStudy {
  int fine_nodes = 0;
  int coarse_nodes = 0;  ///< (M - 1) / 2: one mesh halving
  std::vector<InequalityReport> fine;
  std::vector<InequalityReport> coarse;
  std::vector<double> drift;  ///< max(c_f / c_c, c_c / c_f) per report
  double max_drift = 0.0;
  Certification fine_cert, coarse_cert;
  std::vector<std::string> failures;
  bool pass() const { return failures.empty(); }
};
/// Solves the sequence at the config mesh and one halving coarser, sweeps both.
RegularityStudy regularity_study(const ExperimentConfig& cfg);

}  // namespace mixp
