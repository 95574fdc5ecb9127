#pragma once

// Experiment configuration: a JSON object with a fixed schema. Source and
// exponent fields are expression strings (or plain numbers) evaluated on the
// grid at load time.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "mixp/calculus.hpp"
#include "mixp/expr.hpp"
#include "mixp/grid.hpp"
#include "mixp/scheme.hpp"

namespace mixp {

struct ExperimentConfig {
  int dim = 1;
  std::array<double, 2> extent{1.0, 1.0};
  std::array<int, 2> nodes{31, 31};
  double delta = 0.1;

  double p = 2.0, s = 0.5, q = 2.0, a = 1.0, b = 1.0;
  bool local_only = false;

  Expression gamma = Expression::parse("0.5");
  Expression f = Expression::parse("1");
  std::optional<double> gamma_star;
  /// Largest Lebesgue exponent of f when it is known to be unbounded.
  std::optional<double> f_integrability;
  std::optional<Regime> regime;

  int schedule_k = 10;
  double tol = 1e-8;
  std::int64_t max_iters = 0;
  double tol_seq = 1e-6;
  double tol_mono = 1e-8;
  bool early_stop = true;
  double n = 1.0;  ///< truncation level for `solve`

  std::optional<Expression> target;  ///< manufactured solution for `convergence`
  std::vector<int> convergence_nodes{15, 31, 63};

  std::string output = "out";
  std::uint64_t seed = 0;

  /// Derived at load time.
  GridPtr grid;
  std::vector<double> gamma_values;
  std::vector<double> f_values;
  /// gamma_star as given, or the strip maximum of gamma when gamma exceeds 1 there.
  std::optional<double> effective_gamma_star;
  RegimeInfo regime_info;

  Exponents exponents() const;
  /// Builds the singular problem (assembling the nonlocal operator unless local_only).
  Problem problem() const;
  SequenceOptions sequence_options() const;
  /// Canonical JSON (sorted keys, expressions in printed form).
  nlohmann::json to_json() const;
  /// FNV-1a of the canonical JSON text, as 16 hex digits.
  std::string hash() const;
  /// Re-derive grid, fields and regime after fields were changed.
  void finalize();
};

/// Parses and validates; every failure is a ConfigError carrying the line and
/// column in `text` when it can be located.
ExperimentConfig parse_config(std::string_view text);

std::uint64_t fnv1a(std::string_view bytes);

}  // namespace mixp
