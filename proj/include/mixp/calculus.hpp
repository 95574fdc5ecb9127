#pragma once

// Pointwise building blocks: l^q Finsler norms and fluxes, the power-law
// kernel, difference nonlinearities, exponent arithmetic, and sampled checks
// of the algebraic inequalities used by the monotonicity arguments.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mixp {

/// Exponents and weights of the mixed operator -a H_p u + b (-Delta_p)^s u.
/// Validated on construction.
class Exponents {
 public:
  Exponents(double p, double s, int dim, double q = 2.0, double a = 1.0, double b = 1.0);

  double p() const { return p_; }
  double s() const { return s_; }
  int dim() const { return dim_; }
  double q() const { return q_; }
  double a() const { return a_; }
  double b() const { return b_; }
  /// Kernel comparability constant for K = b|x-y|^{-N-ps}: max(b, 1/b).
  double lambda() const;
  /// N + p s, the kernel's homogeneity degree.
  double kernel_order() const { return dim_ + p_ * s_; }

  Exponents with_p(double p) const { return {p, s_, dim_, q_, a_, b_}; }
  Exponents with_s(double s) const { return {p_, s, dim_, q_, a_, b_}; }

 private:
  double p_, s_;
  int dim_;
  double q_, a_, b_;
};

/// (C1, C2) such that B(z).z >= C1|z|^p and |B(z)| <= C2|z|^{p-1}.
struct ConstantPair {
  double c1;
  double c2;
};

double lq_norm(std::span<const double> zeta, double q);
/// Gradient of the l^q norm; throws SingularPoint at zeta = 0.
std::vector<double> lq_grad(std::span<const double> zeta, double q);
/// a H(z)^{p-1} grad H(z), extended by 0 at z = 0.
std::vector<double> aniso_flux(std::span<const double> zeta, const Exponents& e);
ConstantPair h1_constants(const Exponents& e);

/// b |x-y|^{-N-ps}; throws SingularPoint when x == y.
double frac_kernel(std::span<const double> x, std::span<const double> y, const Exponents& e);

/// |ux - uy|^{p-2} (ux - uy)
double diff_nonlinearity(double ux, double uy, double p);

/// Clip to [-mu, mu].
double truncate(double value, double mu);

struct CriticalExponents {
  std::optional<double> p_star;  ///< Np/(N-p), only for p < N
  double kappa;                  ///< N/(N-p) if p < N, else 2
};
CriticalExponents critical_exponents(const Exponents& e);
/// Hoelder conjugate r/(r-1); throws InvalidInput for r <= 1.
double conj(double r);

/// Existence regimes for the singular problem.
enum class Regime { a, b_thm2, cthm1, cthm2, cthm3 };
std::string_view to_string(Regime r);
/// Accepts the canonical names plus "d" as an alias of b_thm2.
Regime parse_regime(std::string_view name);

/// Summary of the singular exponent field needed to check hypotheses.
struct GammaInfo {
  bool constant = true;
  double min = 0.0;        ///< min over the sampled domain
  double max = 0.0;        ///< max over the sampled domain
  double strip_max = 0.0;  ///< max over the sampled boundary strip
  std::optional<double> gamma_star;
};

/// Lebesgue exponent the source must satisfy. `strict` means any exponent
/// strictly greater than `m` (the p = N cases).
struct Integrability {
  double m = 1.0;
  bool strict = false;
};
Integrability integrability_requirement(Regime regime, const Exponents& e, const GammaInfo& gamma);

struct AlgCheck {
  double c_fit = 0.0;
  std::int64_t violations = 0;
  std::int64_t skipped = 0;
  std::uint64_t seed = 0;
};
/// Samples (|a|^{p-2}a - |b|^{p-2}b).(a-b) / (|a-b|^2 (|a|+|b|)^{p-2}) over
/// random pairs in R^dim and reports the infimum.
AlgCheck check_alg_inequality(double p, std::int64_t samples, std::uint64_t seed, int dim = 2);
/// Same ratio for one explicit pair; nullopt when a == b.
std::optional<double> alg_ratio(std::span<const double> a, std::span<const double> b, double p);

/// Nondecreasing piecewise-linear function through the given knots, extended
/// linearly beyond them with the end slopes. A single knot is a constant.
class PiecewiseLinear {
 public:
  PiecewiseLinear(std::vector<double> t, std::vector<double> g);
  double operator()(double t) const;
  /// G(t) = int_0^t g'(tau)^{1/p} dtau, exact per segment.
  double primitive_root(double t, double p) const;
  double lo() const { return t_.front(); }
  double hi() const { return t_.back(); }
  /// int_from^to g'^{1/p}, zero when to <= from.
  double root_integral(double from, double to, double p) const;

 private:
  double slope(std::size_t segment) const;
  std::vector<double> t_, g_;
};

struct IncreasingCheck {
  std::int64_t violations = 0;
  double max_defect = 0.0;  ///< max of (rhs - lhs) / scale
  std::uint64_t seed = 0;
};
IncreasingCheck check_increasing_inequality(double p, const PiecewiseLinear& g, std::int64_t samples,
                                            std::uint64_t seed);

/// Sampled (H1) bracket and (H2) monotonicity for the l^q flux.
struct StructureCheck {
  std::int64_t h1_violations = 0;
  std::int64_t h2_violations = 0;
  double c1_observed = 0.0;  ///< min of B(z).z/|z|^p
  double c2_observed = 0.0;  ///< max of |B(z)|/|z|^{p-1}
  ConstantPair constants{};
};
StructureCheck check_structure_hypotheses(const Exponents& e, std::int64_t samples, std::uint64_t seed);

}  // namespace mixp
