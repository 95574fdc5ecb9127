#include "mixp/calculus.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "mixp/error.hpp"

namespace mixp {

namespace {

void require_finite(std::span<const double> v, const char* what) {
  for (double x : v)
    if (!std::isfinite(x)) throw InvalidInput(std::string(what) + ": non-finite component");
}

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double euclid(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double sgn(double x) { return (x > 0.0) - (x < 0.0); }

}  // namespace

Exponents::Exponents(double p, double s, int dim, double q, double a, double b)
    : p_(p), s_(s), dim_(dim), q_(q), a_(a), b_(b) {
  if (!(p > 1.0) || !std::isfinite(p)) throw InvalidInput("exponent p must satisfy p > 1");
  if (!(s > 0.0 && s < 1.0)) throw InvalidInput("fractional order s must lie in (0,1)");
  if (dim != 1 && dim != 2) throw InvalidInput("dimension must be 1 or 2");
  if (!(q > 1.0) || !std::isfinite(q)) throw InvalidInput("anisotropy exponent q must satisfy q > 1");
  if (!(a > 0.0) || !std::isfinite(a)) throw InvalidInput("local weight a must be positive");
  if (!(b > 0.0) || !std::isfinite(b)) throw InvalidInput("nonlocal weight b must be positive");
}

double Exponents::lambda() const { return std::max(b_, 1.0 / b_); }

double lq_norm(std::span<const double> zeta, double q) {
  require_finite(zeta, "lq_norm");
  if (!(q > 1.0)) throw InvalidInput("lq_norm: q must exceed 1");
  const double m = max_abs(zeta);
  if (m == 0.0) return 0.0;
  double s = 0.0;
  for (double z : zeta) s += std::pow(std::abs(z) / m, q);
  return m * std::pow(s, 1.0 / q);
}

std::vector<double> lq_grad(std::span<const double> zeta, double q) {
  require_finite(zeta, "lq_grad");
  const double m = max_abs(zeta);
  if (m == 0.0) throw SingularPoint("lq_grad: the l^q norm is not differentiable at 0");
  std::vector<double> t(zeta.begin(), zeta.end());
  for (double& x : t) x /= m;
  const double h = lq_norm(t, q);
  const double hq = std::pow(h, q - 1.0);
  std::vector<double> g(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) g[i] = std::pow(std::abs(t[i]), q - 1.0) * sgn(t[i]) / hq;
  return g;
}

std::vector<double> aniso_flux(std::span<const double> zeta, const Exponents& e) {
  require_finite(zeta, "aniso_flux");
  std::vector<double> out(zeta.size(), 0.0);
  const double h = lq_norm(zeta, e.q());
  if (h == 0.0) return out;
  const auto g = lq_grad(zeta, e.q());
  const double scale = e.a() * std::pow(h, e.p() - 1.0);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = scale * g[i];
  return out;
}

ConstantPair h1_constants(const Exponents& e) {
  // Norm equivalence c_lo |z| <= |z|_q <= c_hi |z| in R^N, and the dual-norm
  // bound |grad H|_2 <= c_hi.
  const double ratio = std::pow(static_cast<double>(e.dim()), 1.0 / e.q() - 0.5);
  const double c_lo = std::min(1.0, ratio);
  const double c_hi = std::max(1.0, ratio);
  return {e.a() * std::pow(c_lo, e.p()), e.a() * std::pow(c_hi, e.p())};
}

double frac_kernel(std::span<const double> x, std::span<const double> y, const Exponents& e) {
  if (x.size() != y.size()) throw InvalidInput("frac_kernel: dimension mismatch");
  double d2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) d2 += (x[i] - y[i]) * (x[i] - y[i]);
  if (d2 == 0.0) throw SingularPoint("frac_kernel: x == y");
  return e.b() * std::pow(d2, -0.5 * e.kernel_order());
}

double diff_nonlinearity(double ux, double uy, double p) {
  const double d = ux - uy;
  if (d == 0.0) return 0.0;
  return std::pow(std::abs(d), p - 1.0) * sgn(d);
}

double truncate(double value, double mu) {
  if (!(mu > 0.0)) throw InvalidInput("truncate: mu must be positive");
  return std::clamp(value, -mu, mu);
}

CriticalExponents critical_exponents(const Exponents& e) {
  const double n = e.dim();
  const double p = e.p();
  if (p < n) return {n * p / (n - p), n / (n - p)};
  return {std::nullopt, 2.0};
}

double conj(double r) {
  if (!(r > 1.0)) throw InvalidInput("conjugate exponent requires r > 1");
  if (std::isinf(r)) return 1.0;
  return r / (r - 1.0);
}

std::string_view to_string(Regime r) {
  switch (r) {
    case Regime::a: return "a";
    case Regime::b_thm2: return "b_thm2";
    case Regime::cthm1: return "cthm1";
    case Regime::cthm2: return "cthm2";
    case Regime::cthm3: return "cthm3";
  }
  return "?";
}

Regime parse_regime(std::string_view name) {
  if (name == "a") return Regime::a;
  if (name == "b_thm2" || name == "b" || name == "d") return Regime::b_thm2;
  if (name == "cthm1") return Regime::cthm1;
  if (name == "cthm2") return Regime::cthm2;
  if (name == "cthm3") return Regime::cthm3;
  throw InvalidInput("unknown regime '" + std::string(name) + "'");
}

Integrability integrability_requirement(Regime regime, const Exponents& e, const GammaInfo& gamma) {
  if (!(gamma.min > 0.0)) throw InvalidInput("singular exponent must be positive everywhere");
  const double n = e.dim();
  const double p = e.p();
  const auto crit = critical_exponents(e);
  auto need_constant = [&](const char* which) {
    if (!gamma.constant)
      throw InvalidInput(std::string("regime ") + which + " requires a constant singular exponent");
  };
  switch (regime) {
    case Regime::a:
      if (gamma.strip_max > 1.0)
        throw InvalidInput("regime a requires gamma <= 1 on the boundary strip (max there is " +
                           std::to_string(gamma.strip_max) + ")");
      if (p < n) return {conj(*crit.p_star), false};
      if (p == n) return {1.0, true};
      return {1.0, false};
    case Regime::cthm1: {
      need_constant("cthm1");
      const double g = gamma.max;
      if (!(g < 1.0)) throw InvalidInput("regime cthm1 requires 0 < gamma < 1");
      if (p < n) return {conj(*crit.p_star / (1.0 - g)), false};
      if (p == n) return {1.0, true};
      return {1.0, false};
    }
    case Regime::cthm2:
      need_constant("cthm2");
      if (gamma.max != 1.0) throw InvalidInput("regime cthm2 requires gamma == 1");
      return {1.0, false};
    case Regime::cthm3:
      need_constant("cthm3");
      if (!(gamma.min > 1.0)) throw InvalidInput("regime cthm3 requires gamma > 1");
      return {1.0, false};
    case Regime::b_thm2: {
      if (!gamma.gamma_star)
        throw InvalidInput("regime b_thm2 requires gamma_star (gamma > 1 somewhere in the boundary strip)");
      const double gs = *gamma.gamma_star;
      if (!(gs > 1.0)) throw InvalidInput("regime b_thm2 requires gamma_star > 1");
      if (gamma.strip_max > gs * (1.0 + 1e-12))
        throw InvalidInput("gamma exceeds gamma_star on the boundary strip");
      if (p < n) return {conj((gs + p - 1.0) * *crit.p_star / (p * gs)), false};
      if (p == n) return {1.0, true};  // infimum over l in (p gs/(gs+p-1), inf)
      return {1.0, false};
    }
  }
  throw InvalidInput("unknown regime");
}

std::optional<double> alg_ratio(std::span<const double> a, std::span<const double> b, double p) {
  const std::size_t n = a.size();
  const double na = euclid(a), nb = euclid(b);
  double diff2 = 0.0, num = 0.0;
  const double sa = na > 0.0 ? std::pow(na, p - 2.0) : 0.0;
  const double sb = nb > 0.0 ? std::pow(nb, p - 2.0) : 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    diff2 += d * d;
    num += (sa * a[i] - sb * b[i]) * d;
  }
  if (diff2 == 0.0) return std::nullopt;
  return num * std::pow(na + nb, 2.0 - p) / diff2;
}

AlgCheck check_alg_inequality(double p, std::int64_t samples, std::uint64_t seed, int dim) {
  if (!(p > 1.0)) throw InvalidInput("check_alg_inequality: p must exceed 1");
  if (samples < 1) throw InvalidInput("check_alg_inequality: need at least one sample");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> log_scale(-4.0, 4.0);
  std::vector<double> a(dim), b(dim);
  AlgCheck out;
  out.seed = seed;
  out.c_fit = std::numeric_limits<double>::infinity();
  for (std::int64_t k = 0; k < samples; ++k) {
    const double sa = std::exp(log_scale(rng));
    const double sb = std::exp(log_scale(rng));
    for (int i = 0; i < dim; ++i) a[i] = sa * normal(rng);
    // every fourth pair is a near-diagonal pair
    if (k % 4 == 3) {
      const double eps = std::exp(log_scale(rng) - 4.0);
      for (int i = 0; i < dim; ++i) b[i] = a[i] + eps * sa * normal(rng);
    } else {
      for (int i = 0; i < dim; ++i) b[i] = sb * normal(rng);
    }
    const auto r = alg_ratio(a, b, p);
    if (!r) {
      ++out.skipped;
      continue;
    }
    if (!(*r > 0.0)) ++out.violations;
    out.c_fit = std::min(out.c_fit, *r);
  }
  return out;
}

PiecewiseLinear::PiecewiseLinear(std::vector<double> t, std::vector<double> g)
    : t_(std::move(t)), g_(std::move(g)) {
  if (t_.empty() || t_.size() != g_.size()) throw InvalidInput("piecewise-linear: knot arrays mismatch");
  for (std::size_t i = 1; i < t_.size(); ++i) {
    if (!(t_[i] > t_[i - 1])) throw InvalidInput("piecewise-linear: knots must be strictly increasing");
    if (g_[i] < g_[i - 1]) throw InvalidInput("piecewise-linear: g must be nondecreasing");
  }
}

double PiecewiseLinear::slope(std::size_t segment) const {
  if (t_.size() == 1) return 0.0;
  segment = std::min(segment, t_.size() - 2);
  return (g_[segment + 1] - g_[segment]) / (t_[segment + 1] - t_[segment]);
}

double PiecewiseLinear::operator()(double t) const {
  if (t_.size() == 1) return g_[0];
  if (t <= t_.front()) return g_.front() + slope(0) * (t - t_.front());
  if (t >= t_.back()) return g_.back() + slope(t_.size() - 2) * (t - t_.back());
  const auto it = std::upper_bound(t_.begin(), t_.end(), t);
  const std::size_t k = static_cast<std::size_t>(it - t_.begin()) - 1;
  return g_[k] + slope(k) * (t - t_[k]);
}

// Integral of slope^{1/p} over [from, to] with from <= to.
double PiecewiseLinear::root_integral(double from, double to, double p) const {
  if (t_.size() == 1 || to <= from) return 0.0;
  // Breakpoints split the line into segments -inf..t0, t0..t1, ..., t_last..inf;
  // the outer pieces reuse the end slopes.
  double total = 0.0;
  double cursor = from;
  const std::size_t last = t_.size() - 2;
  while (cursor < to) {
    std::size_t seg;
    double seg_end;
    if (cursor < t_.front()) {
      seg = 0;
      seg_end = t_.front();
    } else if (cursor >= t_.back()) {
      seg = last;
      seg_end = std::numeric_limits<double>::infinity();
    } else {
      const auto it = std::upper_bound(t_.begin(), t_.end(), cursor);
      seg = static_cast<std::size_t>(it - t_.begin()) - 1;
      seg_end = t_[seg + 1];
    }
    const double end = std::min(seg_end, to);
    total += std::pow(slope(seg), 1.0 / p) * (end - cursor);
    cursor = end;
  }
  return total;
}

double PiecewiseLinear::primitive_root(double t, double p) const {
  return t >= 0.0 ? root_integral(0.0, t, p) : -root_integral(t, 0.0, p);
}

IncreasingCheck check_increasing_inequality(double p, const PiecewiseLinear& g, std::int64_t samples,
                                            std::uint64_t seed) {
  if (!(p > 1.0)) throw InvalidInput("check_increasing_inequality: p must exceed 1");
  std::mt19937_64 rng(seed);
  const double span = std::max(1.0, g.hi() - g.lo());
  std::uniform_real_distribution<double> pick(g.lo() - span, g.hi() + span);
  IncreasingCheck out;
  out.seed = seed;
  for (std::int64_t k = 0; k < samples; ++k) {
    const double a = pick(rng);
    const double b = pick(rng);
    const double d = a - b;
    // g(a) - g(b) and G(a) - G(b) both as segment sums, avoiding cancellation
    const double lhs = d == 0.0 ? 0.0 : std::pow(std::abs(d), p - 1.0) * g.root_integral(std::min(a, b), std::max(a, b), 1.0);
    const double rhs = std::pow(g.root_integral(std::min(a, b), std::max(a, b), p), p);
    const double scale = std::max({std::abs(lhs), rhs, std::numeric_limits<double>::min()});
    const double defect = (rhs - lhs) / scale;
    out.max_defect = std::max(out.max_defect, defect);
    if (defect > 1e-12) ++out.violations;
  }
  return out;
}

StructureCheck check_structure_hypotheses(const Exponents& e, std::int64_t samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> log_scale(-3.0, 3.0);
  const int n = e.dim();
  const double p = e.p();
  StructureCheck out;
  out.constants = h1_constants(e);
  out.c1_observed = std::numeric_limits<double>::infinity();
  std::vector<double> z1(n), z2(n);
  for (std::int64_t k = 0; k < samples; ++k) {
    const double s1 = std::exp(log_scale(rng));
    for (int i = 0; i < n; ++i) z1[i] = s1 * normal(rng);
    const double r = euclid(z1);
    if (r == 0.0) continue;
    const auto b1 = aniso_flux(z1, e);
    double dot = 0.0;
    for (int i = 0; i < n; ++i) dot += b1[i] * z1[i];
    const double lower = dot / std::pow(r, p);
    const double upper = euclid(b1) / std::pow(r, p - 1.0);
    out.c1_observed = std::min(out.c1_observed, lower);
    out.c2_observed = std::max(out.c2_observed, upper);
    if (lower < out.constants.c1 * (1.0 - 1e-12) || upper > out.constants.c2 * (1.0 + 1e-12))
      ++out.h1_violations;

    // (H2): well-separated pairs plus a share of nearby ones
    const double s2 = (k % 3 == 2) ? 1e-3 * s1 : std::exp(log_scale(rng));
    for (int i = 0; i < n; ++i) z2[i] = (k % 3 == 2 ? z1[i] : 0.0) + s2 * normal(rng);
    bool same = true;
    for (int i = 0; i < n; ++i) same = same && z1[i] == z2[i];
    if (same) continue;
    const auto b2 = aniso_flux(z2, e);
    double mono = 0.0;
    for (int i = 0; i < n; ++i) mono += (b1[i] - b2[i]) * (z1[i] - z2[i]);
    if (!(mono > 0.0)) ++out.h2_violations;
  }
  return out;
}

}  // namespace mixp
