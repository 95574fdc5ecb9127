#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "mixp/calculus.hpp"
#include "mixp/grid.hpp"
#include "mixp/nonlocal.hpp"
#include "mixp/solver.hpp"

namespace mixp {

/// Data of the singular problem -a H_p u + b (-Delta_p)^s u = f u^{-gamma}, u = 0 outside.
struct Problem {
  GridPtr grid;
  Exponents exps;
  std::shared_ptr<const NonlocalAssembly> assembly;  ///< null: purely local operator
  GridFunction f;
  std::vector<double> gamma;
  std::optional<double> gamma_star;
};

/// min(f, n) nodewise; rejects negative f.
GridFunction truncated_source(const GridFunction& f, double n);

/// Solve the regularized problem with density min(f,n) (t^+ + 1/n)^{-gamma}.
/// Asserts u_n >= 0 (up to solver accuracy).
SolveResult approx_step(const Problem& pb, double n, const GridFunction& warm_start, const SolveOptions& opt = {});

/// Solve the unshifted problem with the full source, starting from `warm_start`
/// (which must be positive wherever f > 0).
SolveResult limit_solve(const Problem& pb, const GridFunction& warm_start, const SolveOptions& opt = {});

struct FStats {
  double l1 = 0.0;
  double linf = 0.0;
  /// Largest Lebesgue exponent the source is known to have (e.g. from an
  /// analytic singularity); absent means bounded.
  std::optional<double> max_integrability;
};
FStats source_stats(const GridFunction& f, std::optional<double> max_integrability = std::nullopt);

GammaInfo gamma_info(const Grid& g, const std::vector<double>& gamma, std::optional<double> gamma_star);

struct RegimeInfo {
  Regime regime;
  Integrability integrability;
  /// Exponent alpha of the monitored power u^alpha (1 for the W^{1,p} regimes).
  double alpha = 1.0;
};
/// Picks the existence regime matching the sampled exponent field and checks
/// the source's integrability. `requested` forces a regime (still validated).
RegimeInfo regime_classify(const GammaInfo& gamma, const FStats& f, const Exponents& e,
                           std::optional<Regime> requested = std::nullopt);

struct SequenceOptions {
  std::vector<double> schedule;  ///< strictly increasing; empty means {1, 2, ..., 2^10}
  double tol_seq = 1e-6;         ///< relative to max(1, sup u)
  double tol_mono = 1e-8;        ///< relative to max(1, sup u_n)
  bool early_stop = true;
  bool limit = true;  ///< finish with the unshifted solve
  SolveOptions solve;
  /// Starting field of the first solve (zero when absent).
  std::optional<GridFunction> initial;
  /// Interior subdomains {dist >= frac * min extent} for the positivity check.
  std::vector<double> insets = {0.125, 0.25, 0.375};
};
std::vector<double> geometric_schedule(int k);

struct StepRecord {
  double n = 0.0;
  double norm = 0.0;                 ///< monitored functional
  double w1p = 0.0;                  ///< ||u_n||_{W^{1,p}_0}
  std::vector<double> interior_min;  ///< one per inset
  std::vector<double> interior_w1p;  ///< local W^{1,p} norms (power regimes)
  double sup = 0.0;
  std::optional<double> sup_diff;   ///< sup|u_n - u_prev|
  std::optional<double> grad_diff;  ///< ||grad u_n - grad u_final||_{L^p}
  std::optional<double> bound_lhs, bound_rhs;
  SolveReport solve;
};

struct Violation {
  std::string clause;
  std::string detail;
};

struct SequenceResult {
  RegimeInfo regime;
  std::vector<StepRecord> steps;
  std::vector<GridFunction> iterates;
  GridFunction solution;  ///< limit solve (or the last iterate)
  std::optional<SolveReport> limit_report;
  std::vector<Violation> violations;  ///< asserted invariants that failed
  std::vector<std::string> notes;     ///< report-only diagnostics that failed
  bool stopped_early = false;
};

SequenceResult run_sequence(const Problem& pb, const RegimeInfo& regime, const SequenceOptions& opt = {});
/// Throws InvariantViolation naming the first failed clause.
void require_invariants(const SequenceResult& r);

struct BoundReport {
  std::vector<double> values;
  bool plateau = true;
  double plateau_spread = 0.0;  ///< (max - min) / max over the last three
  double max_over_median = 0.0;
  /// Explicit inequality (capacity or power estimate) where one is available.
  bool explicit_bound = false;
  bool explicit_ok = true;
  std::vector<std::pair<double, double>> lhs_rhs;
};
/// Evaluates the regime's monitored functional and, for constant gamma >= 1,
/// the explicit inequality  C1 ||u_n||^p <= ||f||_1  (gamma = 1) or
/// C1 gamma (p/(gamma+p-1))^p ||grad u_n^alpha||^p <= ||f||_1  (gamma > 1).
BoundReport bound_monitor(const Problem& pb, const RegimeInfo& regime, const std::vector<GridFunction>& iterates);

struct BoundaryReport {
  std::vector<double> eps;
  std::vector<double> w1p;                 ///< ||(u - eps)^+||_{W^{1,p}} per eps
  std::vector<std::vector<std::size_t>> violating_nodes;  ///< boundary-layer nodes with u > eps
  bool finite = true;
  bool monotone = true;
  std::optional<double> power_norm;  ///< ||u^alpha||_{W^{1,p}} when alpha > 1
};
BoundaryReport boundary_condition_check(const GridFunction& u, double p, double alpha);

void to_json(nlohmann::json& j, const StepRecord& r);
nlohmann::json sequence_json(const SequenceResult& r);
nlohmann::json boundary_json(const BoundaryReport& r);

}  // namespace mixp
