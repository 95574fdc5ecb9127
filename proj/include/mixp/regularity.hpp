#pragma once

// Two-sided inequality reports on computed fields: energy estimates for
// truncations, tail and Harnack-type bounds. Each report evaluates both sides
// without the (unknown) constant and records their ratio.

#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "mixp/calculus.hpp"
#include "mixp/grid.hpp"
#include "mixp/nonlocal.hpp"
#include "mixp/solver.hpp"

namespace mixp {

/// Radial quintic bump: 1 on B_rho, 0 outside B_r, smoothstep in between.
class CutoffFunction {
 public:
  /// Throws InvalidInput unless 0 < rho < r, and VerificationError if a cell
  /// gradient exceeds 2/(r - rho).
  CutoffFunction(GridPtr grid, const Point& x0, double r, double rho);

  double operator()(const Point& x) const;
  /// Euclidean norm of the exact gradient.
  double grad_norm(const Point& x) const;
  const GridFunction& nodal() const { return nodal_; }
  const Point& center() const { return x0_; }
  double r() const { return r_; }
  double rho() const { return rho_; }
  /// max over cells of |discrete gradient| * (r - rho)
  double max_scaled_gradient() const { return max_scaled_grad_; }

 private:
  Point x0_;
  double r_, rho_;
  GridFunction nodal_;
  double max_scaled_grad_ = 0.0;
};

struct InequalityReport {
  std::string kind;
  double lhs = 0.0;
  double rhs = 0.0;
  double c_fit = 0.0;
  bool pass = false;
  std::map<std::string, double> params;
  std::string note;

  /// c_fit = lhs/rhs, pass iff rhs > 0 and the ratio is finite. lhs = rhs = 0
  /// passes with c_fit = 0.
  void finish();
};

/// Nodal sign of the weak-form residual: `sub` when every basis-function
/// pairing is <= tol * scale, `super` when >= -tol * scale.
struct Certification {
  bool sub = false;
  bool super = false;
  double max_residual = 0.0;  ///< max of residual density
  double min_residual = 0.0;
  double scale = 0.0;
};
Certification certify(const Objective& obj, const GridFunction& u, double tol = 1e-6);

/// Local and nonlocal pieces of the truncated-energy inequality for
/// w = (u - k)^+ with cutoff psi, on the ball B_r(psi center). `r` defaults
/// to the cutoff's outer radius and may not be smaller.
InequalityReport caccioppoli_report(const GridFunction& u, double k, const CutoffFunction& psi,
                                    const NonlocalAssembly& assembly, std::optional<double> r = std::nullopt);
/// Same with w = (u - k)^- (supersolutions).
InequalityReport caccioppoli_below_report(const GridFunction& u, double k, const CutoffFunction& psi,
                                          const NonlocalAssembly& assembly, std::optional<double> r = std::nullopt);

/// Energy inequality for w = (u + d)^{(p - q_exp)/p}; requires 1 < q_exp < p,
/// d > 0, u >= 0 on B_R and B_r inside B_{3R/4}.
InequalityReport supersolution_energy_report(const GridFunction& u, double q_exp, double d,
                                             const CutoffFunction& psi, double R, const NonlocalAssembly& assembly,
                                             std::optional<double> r = std::nullopt);

InequalityReport tail_estimate_report(const GridFunction& u, const Point& x0, double r, double R, const Exponents& e);

/// lhs = inf_{B_4r} u + (r/R)^{p/(p-1)} Tail(u^-; x0, R), rhs = k. A failed
/// measure condition gives pass = false with a note and no ratio.
InequalityReport positivity_expansion_report(const GridFunction& u, const Point& x0, double r, double R, double k,
                                             double tau, const Exponents& e);

InequalityReport local_boundedness_report(const GridFunction& u, const Point& x0, double r, double delta,
                                          const Exponents& e);

InequalityReport harnack_report(const GridFunction& u, const Point& x0, double r, double R, const Exponents& e);

/// (mean_{B_{r/2}} u^l)^{1/l} against inf_{B_r} u + tail; 0 < l < kappa (p-1).
InequalityReport weak_harnack_report(const GridFunction& u, const Point& x0, double r, double R, double l,
                                     const Exponents& e);
/// Same-ball version (mean over B_r) for a small exponent eta in (0, 1).
InequalityReport weak_harnack_eta_report(const GridFunction& u, const Point& x0, double r, double R, double eta,
                                         const Exponents& e);

struct SweepOptions {
  /// Fractions of R, where R is the distance from the domain center to the boundary.
  std::vector<double> radii = {0.375, 0.5};
  std::vector<double> deltas = {1.0, 0.5, 0.1};
  /// Cutoff outer and plateau radii as fractions of the ball radius.
  double support = 0.75;
  double plateau = 0.375;
  double tau = 0.5;
  double expansion_radius = 0.05;  ///< r / R for the positivity expansion (needs < 1/16)
  double d = 1e-3;                 ///< shift in the supersolution energy
};

/// All reports on one field, centered at the domain center, in a fixed order.
std::vector<InequalityReport> regularity_sweep(const GridFunction& u, const NonlocalAssembly& assembly,
                                               const SweepOptions& opt = {});

/// Columns report_kind,p,s,q,r,R,k_or_l,lhs,rhs,c_fit,grid_M,pass.
void write_sweep_csv(std::ostream& os, const std::vector<InequalityReport>& reports,
                     const std::vector<std::string>& comments = {});
void to_json(nlohmann::json& j, const InequalityReport& r);

}  // namespace mixp
