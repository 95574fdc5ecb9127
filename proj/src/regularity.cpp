#include "mixp/regularity.hpp"

#include <algorithm>
#include <array>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <limits>
#include <optional>
#include <nlohmann/json.hpp>
#include <ostream>
#include <sstream>

#include "mixp/energy.hpp"
#include "mixp/error.hpp"

namespace mixp {

namespace {

// quintic smoothstep and its derivative; max slope 15/8
double smoothstep(double t) {
  t = std::clamp(t, 0.0, 1.0);
  return t * t * t * (t * (6.0 * t - 15.0) + 10.0);
}
double smoothstep_slope(double t) {
  if (t <= 0.0 || t >= 1.0) return 0.0;
  return 30.0 * t * t * (t - 1.0) * (t - 1.0);
}

bool ball_inside_domain(const Grid& g, const Point& x0, double r) {
  return g.dist_to_boundary(x0) >= r * (1.0 - 1e-12);
}

void require_radius(const Grid& g, const Point& x0, double r, const char* who) {
  if (!(r > 0.0 && r <= 1.0)) throw InvalidInput(std::string(who) + ": radius must lie in (0, 1]");
  if (!ball_inside_domain(g, x0, r)) throw InvalidInput(std::string(who) + ": ball must lie inside the domain");
}

// Corner values of cell c (boundary nodes take `boundary_value`), ordered
// x-fastest: 2 in 1D, 4 in 2D.
std::array<double, 4> cell_corners(const Grid& g, std::size_t c, double boundary_value, const GridFunction& u) {
  std::array<double, 4> v{};
  const int mx = g.nodes(0);
  const int cx = static_cast<int>(c % static_cast<std::size_t>(mx + 1));
  const int cy = static_cast<int>(c / static_cast<std::size_t>(mx + 1));
  if (g.dim() == 1) {
    for (int a = 0; a < 2; ++a) {
      const int i = cx - 1 + a;
      v[a] = (i < 0 || i >= mx) ? boundary_value : u[static_cast<std::size_t>(i)];
    }
    return v;
  }
  const int my = g.nodes(1);
  for (int b = 0; b < 2; ++b)
    for (int a = 0; a < 2; ++a) {
      const int i = cx - 1 + a, j = cy - 1 + b;
      v[a + 2 * b] = (i < 0 || i >= mx || j < 0 || j >= my) ? boundary_value : u[g.index(i, j)];
    }
  return v;
}

// Cell average of f(x, t) where t in [0,1]^dim are local coordinates.
template <class F>
double cell_average(const Grid& g, std::size_t c, F&& f) {
  using boost::math::quadrature::gauss;
  const Point xc = g.cell_center(c);
  const double hx = g.h(0), hy = g.h(1);
  if (g.dim() == 1)
    return gauss<double, 5>::integrate(
        [&](double t) { return f(Point{xc[0] + (t - 0.5) * hx, 0.0}, t, 0.0); }, 0.0, 1.0);
  return gauss<double, 5>::integrate(
      [&](double ty) {
        return gauss<double, 5>::integrate(
            [&](double tx) { return f(Point{xc[0] + (tx - 0.5) * hx, xc[1] + (ty - 0.5) * hy}, tx, ty); }, 0.0, 1.0);
      },
      0.0, 1.0);
}

double interpolate(const std::array<double, 4>& v, int dim, double tx, double ty) {
  if (dim == 1) return (1.0 - tx) * v[0] + tx * v[1];
  return (1.0 - ty) * ((1.0 - tx) * v[0] + tx * v[1]) + ty * ((1.0 - tx) * v[2] + tx * v[3]);
}

bool cell_meets_ball(const Grid& g, std::size_t c, const Point& x0, double r) {
  const double half_diag = 0.5 * std::hypot(g.h(0), g.dim() == 2 ? g.h(1) : 0.0);
  return distance(g.cell_center(c), x0, g.dim()) < r + half_diag;
}

double tail_term(const GridFunction& u, const Point& x0, double r, double R, const Exponents& e) {
  const double p = e.p();
  const GridFunction un = u.neg();
  if (un.sup() == 0.0) return 0.0;
  return std::pow(r / R, p / (p - 1.0)) * tail(un, x0, R, e);
}

struct TruncationPieces {
  double grad_energy = 0.0;    // sum psi^p |grad w|^p over cells in B_r
  double seminorm = 0.0;       // double sum |w psi(x) - w psi(y)|^p over B_r x B_r
  double cutoff_grad = 0.0;    // sum w^p |grad psi|^p
  double max_term = 0.0;       // double sum max(w)^p |psi(x) - psi(y)|^p
  double mass = 0.0;           // sum w psi^p   (or w^p psi^p)
};

// Pieces shared by the two energy inequalities. `mass_power` is 1 for the
// truncation estimate and p for the supersolution one.
TruncationPieces truncation_pieces(const GridFunction& w, double boundary_value, const CutoffFunction& psi,
                                   double r, const NonlocalAssembly& as, double mass_power) {
  const Grid& g = w.grid();
  const double p = as.exponents().p();
  const Point& x0 = psi.center();
  TruncationPieces out;

  // psi vanishes outside B_r, so the cell integrals run over cells meeting it
  const auto grads = discrete_gradient(w, boundary_value);
  for (std::size_t c = 0; c < g.cells(); ++c) {
    if (!cell_meets_ball(g, c, x0, r)) continue;
    const double psi_p = cell_average(g, c, [&](const Point& x, double, double) { return std::pow(psi(x), p); });
    if (psi_p > 0.0)
      for (int smp = 0; smp < grads.samples_per_cell; ++smp) {
        const auto& gv = grads.g[c * grads.samples_per_cell + smp];
        out.grad_energy += psi_p * std::pow(std::hypot(gv[0], gv[1]), p) * grads.sample_weight;
      }
    const auto v = cell_corners(g, c, boundary_value, w);
    out.cutoff_grad += g.cell_volume() * cell_average(g, c, [&](const Point& x, double tx, double ty) {
                         const double gp = psi.grad_norm(x);
                         if (gp == 0.0) return 0.0;
                         return std::pow(std::abs(interpolate(v, g.dim(), tx, ty)), p) * std::pow(gp, p);
                       });
  }

  const auto nodes = ball_nodes(g, x0, r);
  const auto& ps = psi.nodal();
  const double vol = g.node_volume();
  for (std::size_t a = 0; a < nodes.size(); ++a) {
    const std::size_t i = nodes[a];
    out.mass += std::pow(w[i], mass_power) * std::pow(ps[i], p) * vol;
    for (std::size_t b = 0; b < nodes.size(); ++b) {
      if (a == b) continue;
      const std::size_t j = nodes[b];
      const double kw = as.pair_weight(i, j);
      out.seminorm += std::pow(std::abs(w[i] * ps[i] - w[j] * ps[j]), p) * kw;
      out.max_term += std::pow(std::max(w[i], w[j]), p) * std::pow(std::abs(ps[i] - ps[j]), p) * kw;
    }
  }
  return out;
}

// sup over supp psi of the discrete  int_{outside B_r} w(y)^{p-1} |x-y|^{-N-ps} dy,
// plus the constant value `w_outside` carried by w outside the domain.
double exterior_sup(const GridFunction& w, double w_outside, const CutoffFunction& psi, double r,
                    const NonlocalAssembly& as) {
  const Grid& g = w.grid();
  const Exponents& e = as.exponents();
  const double p = e.p();
  const double order = e.kernel_order();
  const double vol = g.node_volume();
  std::vector<std::size_t> far;
  for (std::size_t k = 0; k < g.size(); ++k)
    if (distance(g.point(k), psi.center(), g.dim()) >= r && w[k] > 0.0) far.push_back(k);
  double best = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!(psi.nodal()[i] > 0.0)) continue;
    const Point xi = g.point(i);
    double s = 0.0;
    for (std::size_t k : far) s += std::pow(w[k], p - 1.0) * std::pow(distance(xi, g.point(k), g.dim()), -order) * vol;
    if (w_outside > 0.0) s += std::pow(w_outside, p - 1.0) * as.exterior_weight(i) / e.b();
    best = std::max(best, s);
  }
  return best;
}

std::map<std::string, double> base_params(const Exponents& e, const Grid& g, double r, double R, double k_or_l) {
  return {{"p", e.p()}, {"s", e.s()}, {"q", e.q()}, {"r", r}, {"R", R}, {"k_or_l", k_or_l},
          {"grid_M", static_cast<double>(g.nodes(0))}};
}

double ball_radius(const CutoffFunction& psi, std::optional<double> r, const char* who) {
  const double rb = r.value_or(psi.r());
  if (rb < psi.r() * (1.0 - 1e-12)) throw InvalidInput(std::string(who) + ": cutoff support must lie in the ball");
  require_radius(psi.nodal().grid(), psi.center(), rb, who);
  return rb;
}

InequalityReport truncation_report(const char* kind, const GridFunction& w, double bv, double k,
                                   const CutoffFunction& psi, std::optional<double> ball, const NonlocalAssembly& as) {
  const double r = ball_radius(psi, ball, kind);
  const auto pc = truncation_pieces(w, bv, psi, r, as, 1.0);
  InequalityReport rep;
  rep.kind = kind;
  rep.params = base_params(as.exponents(), w.grid(), r, r, k);
  rep.params["rho"] = psi.rho();
  rep.params["support"] = psi.r();
  rep.lhs = pc.grad_energy + pc.seminorm;
  const double ext = pc.mass > 0.0 ? exterior_sup(w, bv, psi, r, as) : 0.0;
  rep.rhs = pc.cutoff_grad + pc.max_term + ext * pc.mass;
  rep.finish();
  if (rep.rhs == 0.0 && rep.lhs > 0.0)
    throw VerificationError(std::string(kind) + ": right side vanishes while the left side is positive");
  return rep;
}

}  // namespace

CutoffFunction::CutoffFunction(GridPtr grid, const Point& x0, double r, double rho) : x0_(x0), r_(r), rho_(rho) {
  if (!grid) throw InvalidInput("cutoff needs a grid");
  if (!(rho > 0.0 && rho < r)) throw InvalidInput("cutoff: need 0 < rho < r");
  if (!ball_inside_domain(*grid, x0, r)) throw InvalidInput("cutoff: ball must lie inside the domain");
  nodal_ = GridFunction(grid);
  for (std::size_t k = 0; k < grid->size(); ++k) nodal_[k] = (*this)(grid->point(k));
  const auto grads = discrete_gradient(nodal_);
  for (const auto& gv : grads.g) max_scaled_grad_ = std::max(max_scaled_grad_, std::hypot(gv[0], gv[1]) * (r - rho));
  if (max_scaled_grad_ > 2.0) throw VerificationError("cutoff: discrete gradient exceeds 2/(r - rho)");
}

double CutoffFunction::operator()(const Point& x) const {
  const double d = distance(x, x0_, nodal_.grid().dim());
  return smoothstep((r_ - d) / (r_ - rho_));
}

double CutoffFunction::grad_norm(const Point& x) const {
  const double d = distance(x, x0_, nodal_.grid().dim());
  return smoothstep_slope((r_ - d) / (r_ - rho_)) / (r_ - rho_);
}

void InequalityReport::finish() {
  if (lhs == 0.0 && rhs == 0.0) {
    c_fit = 0.0;
    pass = true;
    return;
  }
  c_fit = rhs > 0.0 ? lhs / rhs : std::numeric_limits<double>::infinity();
  pass = rhs > 0.0 && std::isfinite(c_fit) && std::isfinite(lhs) && lhs >= 0.0;
}

Certification certify(const Objective& obj, const GridFunction& u, double tol) {
  const GridFunction res = obj.residual(u);
  const double w = obj.grid().node_volume();
  Certification c;
  c.max_residual = -std::numeric_limits<double>::infinity();
  c.min_residual = std::numeric_limits<double>::infinity();
  const GridFunction au = obj.operator_apply(u);
  for (std::size_t k = 0; k < u.size(); ++k) {
    c.max_residual = std::max(c.max_residual, res[k] / w);
    c.min_residual = std::min(c.min_residual, res[k] / w);
    c.scale = std::max(c.scale, std::abs(au[k]) / w);
  }
  c.scale = std::max(c.scale, 1.0);
  c.sub = c.max_residual <= tol * c.scale;
  c.super = c.min_residual >= -tol * c.scale;
  return c;
}

InequalityReport caccioppoli_report(const GridFunction& u, double k, const CutoffFunction& psi,
                                    const NonlocalAssembly& assembly, std::optional<double> r) {
  const GridFunction w = u.map([k](double v) { return std::max(v - k, 0.0); });
  return truncation_report("caccioppoli", w, std::max(-k, 0.0), k, psi, r, assembly);
}

InequalityReport caccioppoli_below_report(const GridFunction& u, double k, const CutoffFunction& psi,
                                          const NonlocalAssembly& assembly, std::optional<double> r) {
  const GridFunction w = u.map([k](double v) { return std::max(k - v, 0.0); });
  return truncation_report("caccioppoli_below", w, std::max(k, 0.0), k, psi, r, assembly);
}

InequalityReport supersolution_energy_report(const GridFunction& u, double q_exp, double d,
                                             const CutoffFunction& psi, double R,
                                             const NonlocalAssembly& assembly, std::optional<double> ball) {
  const Exponents& e = assembly.exponents();
  const Grid& g = u.grid();
  const double p = e.p();
  if (!(q_exp > 1.0 && q_exp < p)) throw InvalidInput("supersolution energy: need 1 < q < p");
  if (!(d > 0.0)) throw InvalidInput("supersolution energy: need d > 0");
  const double r = ball_radius(psi, ball, "supersolution energy");
  if (!ball_inside_domain(g, psi.center(), R)) throw InvalidInput("supersolution energy: B_R must lie inside the domain");
  if (r > 0.75 * R * (1.0 + 1e-12)) throw InvalidInput("supersolution energy: need B_r inside B_{3R/4}");
  for (std::size_t k : ball_nodes(g, psi.center(), R))
    if (u[k] < 0.0) throw InvalidInput("supersolution energy: u must be nonnegative on B_R");

  const double expo = (p - q_exp) / p;
  const GridFunction w = u.map([&](double v) { return std::pow(v + d, expo); });
  const auto pc = truncation_pieces(w, std::pow(d, expo), psi, r, assembly, p);

  double kernel_sup = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (psi.nodal()[i] > 0.0)
      kernel_sup = std::max(kernel_sup, e.b() * ball_exterior_integral(g.point(i), psi.center(), r, e));
  const GridFunction un = u.neg();
  const double tail_m = un.sup() > 0.0 ? std::pow(tail(un, psi.center(), R, e), p - 1.0) : 0.0;

  const double pq = std::pow(p - q_exp, p);
  InequalityReport rep;
  rep.kind = "supersolution_energy";
  rep.params = base_params(e, g, r, R, q_exp);
  rep.params["d"] = d;
  rep.params["rho"] = psi.rho();
  rep.params["support"] = psi.r();
  rep.lhs = pc.grad_energy;
  rep.rhs = pq / std::pow(q_exp - 1.0, p / (p - 1.0)) * pc.cutoff_grad +
            pq / std::pow(q_exp - 1.0, p) * pc.max_term +
            pq / (q_exp - 1.0) * (kernel_sup + std::pow(d, 1.0 - p) * std::pow(R, -p) * tail_m) * pc.mass;
  rep.finish();
  if (rep.rhs == 0.0 && rep.lhs > 0.0)
    throw VerificationError("supersolution energy: right side vanishes while the left side is positive");
  return rep;
}

InequalityReport tail_estimate_report(const GridFunction& u, const Point& x0, double r, double R, const Exponents& e) {
  const Grid& g = u.grid();
  require_radius(g, x0, r, "tail estimate");
  if (!(r < R)) throw InvalidInput("tail estimate: need r < R");
  InequalityReport rep;
  rep.kind = "tail_estimate";
  rep.params = base_params(e, g, r, R, 0.0);
  rep.lhs = tail(u.pos(), x0, r, e);
  rep.rhs = std::max(ball_stats(u, x0, r).sup(), 0.0) + tail_term(u, x0, r, R, e);
  rep.finish();
  return rep;
}

InequalityReport positivity_expansion_report(const GridFunction& u, const Point& x0, double r, double R, double k,
                                             double tau, const Exponents& e) {
  const Grid& g = u.grid();
  require_radius(g, x0, r, "positivity expansion");
  if (!(16.0 * r < R)) throw InvalidInput("positivity expansion: need 16 r < R");
  if (!(k >= 0.0)) throw InvalidInput("positivity expansion: level must be nonnegative");
  if (!(tau > 0.0 && tau <= 1.0)) throw InvalidInput("positivity expansion: tau must lie in (0, 1]");
  InequalityReport rep;
  rep.kind = "positivity_expansion";
  rep.params = base_params(e, g, r, R, k);
  rep.params["tau"] = tau;
  const double frac = ball_stats(u, x0, r).measure_fraction(k);
  rep.params["fraction"] = frac;
  if (frac < tau) {
    rep.note = "measure condition fails";
    rep.pass = false;
    rep.c_fit = std::numeric_limits<double>::quiet_NaN();
    return rep;
  }
  rep.lhs = ball_stats(u, x0, 4.0 * r).inf() + tail_term(u, x0, r, R, e);
  rep.rhs = k;
  if (k == 0.0) {
    rep.c_fit = 0.0;
    rep.pass = rep.lhs >= 0.0;
    return rep;
  }
  rep.finish();
  rep.pass = rep.pass && rep.c_fit > 0.0;
  return rep;
}

InequalityReport local_boundedness_report(const GridFunction& u, const Point& x0, double r, double delta,
                                          const Exponents& e) {
  const Grid& g = u.grid();
  require_radius(g, x0, r, "local boundedness");
  if (!(delta > 0.0 && delta <= 1.0)) throw InvalidInput("local boundedness: delta must lie in (0, 1]");
  const double p = e.p();
  const double kappa = critical_exponents(e).kappa;
  const GridFunction up = u.pos();
  InequalityReport rep;
  rep.kind = "local_boundedness";
  rep.params = base_params(e, g, r, r, delta);
  rep.lhs = std::max(ball_stats(u, x0, 0.5 * r).sup(), 0.0);
  rep.rhs = delta * tail(up, x0, 0.5 * r, e) +
            std::pow(delta, -(p - 1.0) * kappa / (p * (kappa - 1.0))) * ball_stats(up, x0, r).lp_mean(p);
  rep.finish();
  return rep;
}

InequalityReport harnack_report(const GridFunction& u, const Point& x0, double r, double R, const Exponents& e) {
  const Grid& g = u.grid();
  require_radius(g, x0, r, "harnack");
  if (!ball_inside_domain(g, x0, R)) throw InvalidInput("harnack: B_R must lie inside the domain");
  if (r > 0.5 * R * (1.0 + 1e-12)) throw InvalidInput("harnack: need B_r inside B_{R/2}");
  InequalityReport rep;
  rep.kind = "harnack";
  rep.params = base_params(e, g, r, R, 0.0);
  rep.lhs = ball_stats(u, x0, 0.5 * r).sup();
  rep.rhs = ball_stats(u, x0, r).inf() + tail_term(u, x0, r, R, e);
  rep.finish();
  if (rep.rhs == 0.0 && rep.lhs > 0.0) rep.note = "Harnack violation: inf vanishes with positive sup";
  return rep;
}

namespace {

InequalityReport power_mean_report(const char* kind, const GridFunction& u, const Point& x0, double mean_radius,
                                   double r, double R, double l, const Exponents& e) {
  const Grid& g = u.grid();
  require_radius(g, x0, r, kind);
  if (!ball_inside_domain(g, x0, R)) throw InvalidInput(std::string(kind) + ": B_R must lie inside the domain");
  for (std::size_t k : ball_nodes(g, x0, R))
    if (u[k] < 0.0) throw InvalidInput(std::string(kind) + ": u must be nonnegative on B_R");
  InequalityReport rep;
  rep.kind = kind;
  rep.params = base_params(e, g, r, R, l);
  rep.lhs = ball_stats(u, x0, mean_radius).lp_mean(l);
  rep.rhs = ball_stats(u, x0, r).inf() + tail_term(u, x0, r, R, e);
  rep.finish();
  return rep;
}

}  // namespace

InequalityReport weak_harnack_report(const GridFunction& u, const Point& x0, double r, double R, double l,
                                     const Exponents& e) {
  const double lmax = critical_exponents(e).kappa * (e.p() - 1.0);
  if (!(l > 0.0 && l < lmax)) throw InvalidInput("weak harnack: need 0 < l < kappa (p - 1)");
  if (r > 0.5 * R * (1.0 + 1e-12)) throw InvalidInput("weak harnack: need B_r inside B_{R/2}");
  return power_mean_report("weak_harnack", u, x0, 0.5 * r, r, R, l, e);
}

InequalityReport weak_harnack_eta_report(const GridFunction& u, const Point& x0, double r, double R, double eta,
                                         const Exponents& e) {
  if (!(eta > 0.0 && eta < 1.0)) throw InvalidInput("weak harnack (same ball): need 0 < eta < 1");
  if (r > R * (1.0 + 1e-12)) throw InvalidInput("weak harnack (same ball): need B_r inside B_R");
  return power_mean_report("weak_harnack_eta", u, x0, r, r, R, eta, e);
}

std::vector<InequalityReport> regularity_sweep(const GridFunction& u, const NonlocalAssembly& assembly,
                                               const SweepOptions& opt) {
  const Grid& g = u.grid();
  const Exponents& e = assembly.exponents();
  const double p = e.p();
  const Point x0 = g.dim() == 1 ? Point{0.5 * g.extent(0), 0.0} : Point{0.5 * g.extent(0), 0.5 * g.extent(1)};
  const double R = std::min(g.dist_to_boundary(x0), 1.0);
  const double lmax = critical_exponents(e).kappa * (p - 1.0);
  const auto gptr = u.grid_ptr();
  const double top = std::max(u.sup(), 0.0);

  std::vector<InequalityReport> out;
  for (double frac : opt.radii) {
    const double r = frac * R;
    const CutoffFunction psi(gptr, x0, opt.support * r, opt.plateau * r);
    out.push_back(caccioppoli_report(u, 0.0, psi, assembly, r));
    out.push_back(caccioppoli_report(u, 0.5 * top, psi, assembly, r));
    out.push_back(caccioppoli_below_report(u, top, psi, assembly, r));
    for (double qe : {1.1, 0.5 * (1.0 + p), p - 0.1})
      if (qe > 1.0 && qe < p) out.push_back(supersolution_energy_report(u, qe, opt.d, psi, R, assembly, r));
    out.push_back(tail_estimate_report(u, x0, r, R, e));
    for (double d : opt.deltas) out.push_back(local_boundedness_report(u, x0, r, d, e));
    out.push_back(harnack_report(u, x0, r, R, e));
    for (double l : {0.25 * lmax, 0.5 * lmax, 0.9 * lmax}) out.push_back(weak_harnack_report(u, x0, r, R, l, e));
    out.push_back(weak_harnack_eta_report(u, x0, r, R, 0.25 * std::min(1.0, lmax), e));
  }
  const double re = opt.expansion_radius * R;
  const double k = ball_stats(u, x0, re).level_for_fraction(opt.tau);
  out.push_back(positivity_expansion_report(u, x0, re, R, std::max(k, 0.0), opt.tau, e));
  return out;
}

void write_sweep_csv(std::ostream& os, const std::vector<InequalityReport>& reports,
                     const std::vector<std::string>& comments) {
  for (const auto& c : comments) os << "# " << c << '\n';
  os << "report_kind,p,s,q,r,R,k_or_l,lhs,rhs,c_fit,grid_M,pass\n";
  std::ostringstream line;
  line.precision(17);
  for (const auto& rep : reports) {
    line.str("");
    auto param = [&](const char* key) {
      const auto it = rep.params.find(key);
      return it == rep.params.end() ? 0.0 : it->second;
    };
    line << rep.kind << ',' << param("p") << ',' << param("s") << ',' << param("q") << ',' << param("r") << ','
         << param("R") << ',' << param("k_or_l") << ',' << rep.lhs << ',' << rep.rhs << ',' << rep.c_fit << ','
         << static_cast<long long>(param("grid_M")) << ',' << (rep.pass ? 1 : 0) << '\n';
    os << line.str();
  }
}

void to_json(nlohmann::json& j, const InequalityReport& r) {
  auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  j = nlohmann::json{{"kind", r.kind}, {"lhs", num(r.lhs)}, {"rhs", num(r.rhs)},
                     {"c_fit", num(r.c_fit)}, {"pass", r.pass}, {"params", r.params}};
  if (!r.note.empty()) j["note"] = r.note;
}

}  // namespace mixp
