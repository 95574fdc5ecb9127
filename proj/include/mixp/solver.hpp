#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "mixp/calculus.hpp"
#include "mixp/grid.hpp"
#include "mixp/nonlocal.hpp"

namespace mixp {

/// Nodal right-hand side g_k(t) = f_k (t^+ + eps)^{-gamma_k}, nonincreasing in t.
/// eps = 0 is the unshifted singular density: for t <= 0 the primitive is
/// -inf, which turns -G into a barrier keeping iterates positive.
struct SingularDensity {
  std::vector<double> f;
  std::vector<double> gamma;
  double shift = 1.0;

  static SingularDensity constant_source(const Grid& g, double value);

  double g(std::size_t k, double t) const;
  /// Primitive in t. For eps > 0 it is int_0^t g; for eps = 0 and gamma >= 1
  /// the additive constant is dropped (log t, t^{1-gamma}/(1-gamma)).
  double primitive(std::size_t k, double t) const;
};

/// J(u) = local + nonlocal - sum_k w G_k(u_k). A null assembly gives the
/// purely local energy (the b -> 0 limit).
class Objective {
 public:
  Objective(GridPtr grid, const Exponents& e, std::shared_ptr<const NonlocalAssembly> assembly,
            SingularDensity density);

  struct Eval {
    double value = 0.0;
    double abs_scale = 0.0;  ///< sum of the magnitudes of the energy pieces
  };
  /// Writes grad J into `grad`; value is +inf outside the barrier's domain.
  Eval value_grad(std::span<const double> u, std::span<double> grad) const;
  double value(const GridFunction& u) const;
  /// grad J(u): the discrete weak-form defect against nodal basis functions.
  GridFunction residual(const GridFunction& u) const;
  /// sqrt(sum_k (grad_k / w)^2 / n): mesh-independent RMS of the residual density.
  double scaled_norm(std::span<const double> grad) const;
  /// Operator part only (local + nonlocal gradient), without the source.
  GridFunction operator_apply(const GridFunction& u) const;

  const Grid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  const Exponents& exponents() const { return exps_; }
  const SingularDensity& density() const { return density_; }
  const std::shared_ptr<const NonlocalAssembly>& assembly() const { return assembly_; }

 private:
  GridPtr grid_;
  Exponents exps_;
  std::shared_ptr<const NonlocalAssembly> assembly_;
  SingularDensity density_;
};

struct SolveOptions {
  double tol = 1e-8;
  /// 0 means 50 * number of unknowns.
  std::int64_t max_iters = 0;
  std::uint64_t seed = 0;
};

struct SolveReport {
  std::int64_t iterations = 0;
  double residual = 0.0;
  std::vector<double> energy_trace;
  std::int64_t backtracks = 0;
  std::int64_t relaxed_steps = 0;  ///< steps accepted by the round-off tolerant test
  double wall_seconds = 0.0;       ///< not serialized
  std::uint64_t seed = 0;
};
void to_json(nlohmann::json& j, const SolveReport& r);

struct SolveResult {
  GridFunction u;
  SolveReport report;
};

/// Gradient descent with Barzilai-Borwein steps and a monotone Armijo line
/// search. An infeasible start (barrier problems) is lifted to a small
/// positive value at the offending nodes.
SolveResult minimize(const Objective& obj, const GridFunction& u0, const SolveOptions& opt = {});

/// f_k = (operator u_target)_k / w * u_target_k^{gamma_k}: the source for which
/// u_target is the exact discrete solution of the unshifted singular problem.
GridFunction manufactured_source(const GridFunction& u_target, const Exponents& e,
                                 const std::shared_ptr<const NonlocalAssembly>& assembly,
                                 std::span<const double> gamma);

}  // namespace mixp
