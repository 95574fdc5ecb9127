#include "mixp/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <nlohmann/json.hpp>

#include "mixp/energy.hpp"
#include "mixp/error.hpp"

namespace mixp {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

}  // namespace

SingularDensity SingularDensity::constant_source(const Grid& g, double value) {
  SingularDensity d;
  d.f.assign(g.size(), value);
  d.gamma.assign(g.size(), 0.0);
  d.shift = 1.0;
  return d;
}

double SingularDensity::g(std::size_t k, double t) const {
  const double fk = f[k], gk = gamma[k];
  if (fk == 0.0 || gk == 0.0) return fk;
  const double base = std::max(t, 0.0) + shift;
  if (base <= 0.0) return inf;
  return fk * std::pow(base, -gk);
}

double SingularDensity::primitive(std::size_t k, double t) const {
  const double fk = f[k], gk = gamma[k];
  if (fk == 0.0) return 0.0;
  if (gk == 0.0) return fk * t;
  if (shift > 0.0) {
    if (t <= 0.0) return fk * std::pow(shift, -gk) * t;  // linear below 0
    const double x = std::log1p(t / shift);
    if (gk == 1.0) return fk * x;
    // eps^{1-gamma} ((1 + t/eps)^{1-gamma} - 1) / (1 - gamma)
    return fk * std::pow(shift, 1.0 - gk) * std::expm1((1.0 - gk) * x) / (1.0 - gk);
  }
  if (t <= 0.0) return -inf;
  if (gk == 1.0) return fk * std::log(t);
  return fk * std::pow(t, 1.0 - gk) / (1.0 - gk);
}

Objective::Objective(GridPtr grid, const Exponents& e, std::shared_ptr<const NonlocalAssembly> assembly,
                     SingularDensity density)
    : grid_(std::move(grid)), exps_(e), assembly_(std::move(assembly)), density_(std::move(density)) {
  if (!grid_) throw InvalidInput("objective needs a grid");
  if (grid_->dim() != e.dim()) throw InvalidInput("objective: grid and exponent dimensions differ");
  if (assembly_ && assembly_->grid().size() != grid_->size()) throw InvalidInput("objective: assembly grid mismatch");
  if (density_.f.size() != grid_->size() || density_.gamma.size() != grid_->size())
    throw InvalidInput("objective: density size does not match grid");
  if (!(density_.shift >= 0.0)) throw InvalidInput("objective: shift must be nonnegative");
  for (std::size_t k = 0; k < grid_->size(); ++k) {
    if (!(density_.f[k] >= 0.0) || !std::isfinite(density_.f[k]))
      throw InvalidInput("objective: source must be finite and nonnegative");
    if (!(density_.gamma[k] >= 0.0) || !std::isfinite(density_.gamma[k]))
      throw InvalidInput("objective: singular exponent must be finite and nonnegative");
  }
}

Objective::Eval Objective::value_grad(std::span<const double> u, std::span<double> grad) const {
  std::fill(grad.begin(), grad.end(), 0.0);
  const double w = grid_->node_volume();
  Eval out;
  double pot = 0.0, pot_abs = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    const double gk = density_.primitive(k, u[k]);
    if (gk == -inf) {
      out.value = inf;
      out.abs_scale = inf;
      return out;
    }
    pot += gk;
    pot_abs += std::abs(gk);
    grad[k] -= w * density_.g(k, u[k]);
  }
  const double e_loc = detail::accumulate_local(*grid_, exps_, u, grad);
  const double e_nl = assembly_ ? detail::accumulate_nonlocal(*assembly_, u, grad) : 0.0;
  out.value = e_loc + e_nl - w * pot;
  out.abs_scale = e_loc + e_nl + w * pot_abs;
  return out;
}

double Objective::value(const GridFunction& u) const {
  std::vector<double> grad(u.size());
  return value_grad(u.values(), grad).value;
}

GridFunction Objective::residual(const GridFunction& u) const {
  GridFunction r(grid_);
  value_grad(u.values(), r.values());
  return r;
}

GridFunction Objective::operator_apply(const GridFunction& u) const {
  GridFunction r(grid_);
  detail::accumulate_local(*grid_, exps_, u.values(), r.values());
  if (assembly_) detail::accumulate_nonlocal(*assembly_, u.values(), r.values());
  return r;
}

double Objective::scaled_norm(std::span<const double> grad) const {
  const double w = grid_->node_volume();
  double s = 0.0;
  for (double g : grad) s += (g / w) * (g / w);
  return std::sqrt(s / static_cast<double>(grad.size()));
}

void to_json(nlohmann::json& j, const SolveReport& r) {
  j = nlohmann::json{{"iterations", r.iterations},
                     {"residual", r.residual},
                     {"energy_trace", r.energy_trace},
                     {"backtracks", r.backtracks},
                     {"relaxed_steps", r.relaxed_steps},
                     {"seed", r.seed}};
}

SolveResult minimize(const Objective& obj, const GridFunction& u0, const SolveOptions& opt) {
  if (!(opt.tol > 0.0)) throw InvalidInput("minimize: tolerance must be positive");
  const auto t_start = std::chrono::steady_clock::now();
  const std::size_t n = u0.size();
  const double w = obj.grid().node_volume();
  const std::int64_t max_iters = opt.max_iters > 0 ? opt.max_iters : 50 * static_cast<std::int64_t>(n);

  SolveResult res{u0, {}};
  res.report.seed = opt.seed;
  auto& u = res.u;
  std::vector<double> grad(n), grad_new(n), trial(n), dir(n);

  auto ev = obj.value_grad(u.values(), grad);
  if (!std::isfinite(ev.value)) {
    const double lift = 1e-3 * std::max(1.0, u.sup_abs());
    for (std::size_t k = 0; k < n; ++k)
      if (u[k] <= 0.0 && obj.density().f[k] > 0.0) u[k] = lift;
    ev = obj.value_grad(u.values(), grad);
    if (!std::isfinite(ev.value)) throw Divergence("minimize: non-finite energy at the starting point");
  }
  res.report.energy_trace.push_back(ev.value);
  double rnorm = obj.scaled_norm(grad);
  std::vector<double> trace_r{rnorm};

  // first step moves at most 10% of max(1, sup|u|)
  double gmax = 0.0;
  for (double g : grad) gmax = std::max(gmax, std::abs(g) / w);
  double alpha = gmax > 0.0 ? 0.1 * std::max(1.0, u.sup_abs()) / gmax : 1.0;

  std::int64_t it = 0;
  while (rnorm > opt.tol) {
    if (it >= max_iters) throw NonConvergence("minimize: iteration limit reached", trace_r);
    for (std::size_t k = 0; k < n; ++k) dir[k] = -grad[k] / w;
    const double slope = dot(grad, dir);  // < 0
    double step = alpha, lo = 0.0, hi = inf;
    bool accepted = false;
    Objective::Eval ev_new;
    for (int tries = 0; tries < 100; ++tries) {
      for (std::size_t k = 0; k < n; ++k) trial[k] = u[k] + step * dir[k];
      ev_new = obj.value_grad(trial, grad_new);
      bool too_long = true;
      if (std::isfinite(ev_new.value)) {
        if (ev_new.value < ev.value && ev_new.value <= ev.value + 1e-4 * step * slope) {
          accepted = true;
          break;
        }
        // Near the minimizer energy differences drop below round-off. Then
        // accept on the approximate Wolfe conditions, which only need the
        // directional derivative, and bracket the step otherwise.
        const double slope_new = dot(grad_new, dir);
        const bool level = ev_new.value <= ev.value + 1e-11 * ev.abs_scale;
        if (level && slope_new >= 0.9 * slope && slope_new <= -0.8 * slope) {
          accepted = true;
          ++res.report.relaxed_steps;
          break;
        }
        too_long = !level || slope_new > -0.8 * slope;
      }
      if (too_long)
        hi = step;
      else
        lo = step;
      step = std::isfinite(hi) ? 0.5 * (lo + hi) : 2.0 * step;
      ++res.report.backtracks;
    }
    if (!accepted) throw NonConvergence("minimize: line search failed", trace_r);

    // Barzilai-Borwein step from s = step*dir and y = grad_new - grad
    double ss = 0.0, sy = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double s = step * dir[k];
      ss += s * s;
      sy += s * (grad_new[k] - grad[k]);
    }
    alpha = sy > 0.0 ? w * ss / sy : 2.0 * step;

    std::copy(trial.begin(), trial.end(), u.values().begin());
    std::swap(grad, grad_new);
    ev = ev_new;
    if (!std::isfinite(ev.value)) throw Divergence("minimize: energy became non-finite");
    rnorm = obj.scaled_norm(grad);
    res.report.energy_trace.push_back(ev.value);
    trace_r.push_back(rnorm);
    ++it;
  }
  res.report.iterations = it;
  res.report.residual = rnorm;
  res.report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return res;
}

GridFunction manufactured_source(const GridFunction& u_target, const Exponents& e,
                                 const std::shared_ptr<const NonlocalAssembly>& assembly,
                                 std::span<const double> gamma) {
  const Grid& g = u_target.grid();
  if (gamma.size() != g.size()) throw InvalidInput("manufactured_source: gamma size does not match grid");
  for (std::size_t k = 0; k < g.size(); ++k)
    if (!(u_target[k] > 0.0)) throw InvalidInput("manufactured_source: target must be positive at interior nodes");
  const Objective op(u_target.grid_ptr(), e, assembly, SingularDensity::constant_source(g, 0.0));
  const auto au = op.operator_apply(u_target);
  GridFunction f(u_target.grid_ptr());
  const double w = g.node_volume();
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double v = au[k] / w;
    if (v < 0.0) throw InvalidInput("manufactured_source: operator value negative at a node, source would be negative");
    f[k] = v * std::pow(u_target[k], gamma[k]);
  }
  return f;
}

}  // namespace mixp
