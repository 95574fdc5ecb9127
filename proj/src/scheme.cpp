#include "mixp/scheme.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <sstream>

#include "mixp/energy.hpp"
#include "mixp/error.hpp"

namespace mixp {

namespace {

SingularDensity density_for(const Problem& pb, const GridFunction& f, double shift) {
  SingularDensity d;
  d.f.assign(f.values().begin(), f.values().end());
  d.gamma = pb.gamma;
  d.shift = shift;
  return d;
}

double monitored(const GridFunction& u, double p, double alpha) {
  if (alpha == 1.0) return w1p_norm(u, p);
  return w1p_norm(u.pos().pow(alpha), p);
}

bool source_vanishes(const GridFunction& f) { return f.sup_abs() == 0.0; }

double median3(double a, double b, double c) { return std::max(std::min(a, b), std::min(std::max(a, b), c)); }

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

GridFunction truncated_source(const GridFunction& f, double n) {
  if (!(n >= 1.0)) throw InvalidInput("truncated_source: n must be at least 1");
  if (f.inf() < 0.0) throw InvalidInput("truncated_source: source must be nonnegative");
  return f.map([n](double v) { return std::min(v, n); });
}

SolveResult approx_step(const Problem& pb, double n, const GridFunction& warm_start, const SolveOptions& opt) {
  const Objective obj(pb.grid, pb.exps, pb.assembly, density_for(pb, truncated_source(pb.f, n), 1.0 / n));
  SolveResult r = [&] {
    try {
      return minimize(obj, warm_start, opt);
    } catch (const NonConvergence& e) {
      throw NonConvergence(std::string(e.what()) + " (n = " + fmt(n) + ")", e.residual_trace);
    }
  }();
  const double floor = -1e-6 * std::max(1.0, r.u.sup_abs());
  if (r.u.inf() < floor)
    throw InvariantViolation("positivity", "approximate solution has a negative value " + fmt(r.u.inf()) +
                                               " at n = " + fmt(n));
  return r;
}

SolveResult limit_solve(const Problem& pb, const GridFunction& warm_start, const SolveOptions& opt) {
  const Objective obj(pb.grid, pb.exps, pb.assembly, density_for(pb, pb.f, 0.0));
  return minimize(obj, warm_start, opt);
}

FStats source_stats(const GridFunction& f, std::optional<double> max_integrability) {
  FStats s;
  s.l1 = f.lp_norm(1.0);
  s.linf = f.sup_abs();
  s.max_integrability = max_integrability;
  return s;
}

GammaInfo gamma_info(const Grid& g, const std::vector<double>& gamma, std::optional<double> gamma_star) {
  if (gamma.size() != g.size()) throw InvalidInput("gamma_info: size does not match grid");
  GammaInfo info;
  info.min = *std::min_element(gamma.begin(), gamma.end());
  info.max = *std::max_element(gamma.begin(), gamma.end());
  info.constant = info.max - info.min <= 1e-12 * std::max(1.0, info.max);
  info.strip_max = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k)
    if (g.in_strip(k)) info.strip_max = std::max(info.strip_max, gamma[k]);
  info.gamma_star = gamma_star;
  return info;
}

RegimeInfo regime_classify(const GammaInfo& gamma, const FStats& f, const Exponents& e,
                           std::optional<Regime> requested) {
  if (!(gamma.min > 0.0)) throw InvalidInput("singular exponent must be positive at every node");
  Regime r;
  if (requested) {
    r = *requested;
  } else if (gamma.constant) {
    r = gamma.max < 1.0 ? Regime::cthm1 : gamma.max == 1.0 ? Regime::cthm2 : Regime::cthm3;
  } else if (gamma.strip_max <= 1.0) {
    r = Regime::a;
  } else {
    if (!gamma.gamma_star)
      throw InvalidInput("gamma > 1 somewhere in the boundary strip but gamma_star not provided");
    r = Regime::b_thm2;
  }
  RegimeInfo out{r, integrability_requirement(r, e, gamma), 1.0};
  if (f.max_integrability) {
    const double have = *f.max_integrability;
    const auto need = out.integrability;
    if (have < need.m || (need.strict && have == need.m))
      throw InvalidInput("source integrability " + fmt(have) + " is below the required exponent " + fmt(need.m) +
                         (need.strict ? " (strict)" : "") + " for regime " + std::string(to_string(r)));
  }
  const double p = e.p();
  if (r == Regime::b_thm2) out.alpha = (*gamma.gamma_star + p - 1.0) / p;
  if (r == Regime::cthm3) out.alpha = (gamma.max + p - 1.0) / p;
  return out;
}

std::vector<double> geometric_schedule(int k) {
  if (k < 0) throw InvalidInput("schedule exponent must be nonnegative");
  std::vector<double> s;
  for (int i = 0; i <= k; ++i) s.push_back(std::ldexp(1.0, i));
  return s;
}

BoundReport bound_monitor(const Problem& pb, const RegimeInfo& regime, const std::vector<GridFunction>& iterates) {
  BoundReport rep;
  const double p = pb.exps.p();
  for (const auto& u : iterates) rep.values.push_back(monitored(u, p, regime.alpha));
  const std::size_t m = rep.values.size();
  if (m >= 3) {
    const double a = rep.values[m - 3], b = rep.values[m - 2], c = rep.values[m - 1];
    const double hi = std::max({a, b, c}), lo = std::min({a, b, c});
    const double med = median3(a, b, c);
    rep.plateau_spread = hi > 0.0 ? (hi - lo) / hi : 0.0;
    const double top = *std::max_element(rep.values.begin(), rep.values.end());
    rep.max_over_median = med > 0.0 ? top / med : (top > 0.0 ? INFINITY : 0.0);
    rep.plateau = rep.plateau_spread <= 0.05 && rep.max_over_median <= 1.2;
  }
  const bool cap = regime.regime == Regime::cthm2;
  const bool power = regime.regime == Regime::cthm3;
  if (cap || power) {
    rep.explicit_bound = true;
    const double c1 = h1_constants(pb.exps).c1;
    const double rhs = pb.f.lp_norm(1.0);
    double factor = c1;
    if (power) {
      const double g = pb.gamma.front();
      factor = c1 * g * std::pow(p / (g + p - 1.0), p);
    }
    for (double v : rep.values) {
      const double lhs = factor * std::pow(v, p);
      rep.lhs_rhs.emplace_back(lhs, rhs);
      // solver residuals enter the tested identity at the 1e-8 level
      if (lhs > rhs * (1.0 + 1e-6) + 1e-12) rep.explicit_ok = false;
    }
  }
  return rep;
}

SequenceResult run_sequence(const Problem& pb, const RegimeInfo& regime, const SequenceOptions& opt) {
  const auto schedule = opt.schedule.empty() ? geometric_schedule(10) : opt.schedule;
  for (std::size_t i = 1; i < schedule.size(); ++i)
    if (!(schedule[i] > schedule[i - 1])) throw InvalidInput("schedule must be strictly increasing");
  if (schedule.empty() || schedule.front() < 1.0) throw InvalidInput("schedule must start at n >= 1");

  const Grid& g = *pb.grid;
  const double p = pb.exps.p();
  const bool zero_source = source_vanishes(pb.f);
  SequenceResult res;
  res.regime = regime;

  if (opt.initial && opt.initial->grid_ptr() != pb.grid) throw InvalidInput("initial field lives on another grid");
  GridFunction prev = opt.initial ? *opt.initial : GridFunction(pb.grid);
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    const double n = schedule[i];
    auto step = approx_step(pb, n, prev, opt.solve);
    StepRecord rec;
    rec.n = n;
    rec.sup = step.u.sup();
    rec.w1p = w1p_norm(step.u, p);
    rec.norm = monitored(step.u, p, regime.alpha);
    for (double frac : opt.insets) {
      const double inset = frac * g.min_extent();
      double lo = INFINITY;
      for (std::size_t k = 0; k < g.size(); ++k)
        if (g.dist_to_boundary(k) >= inset) lo = std::min(lo, step.u[k]);
      rec.interior_min.push_back(lo);
      if (regime.alpha != 1.0) rec.interior_w1p.push_back(local_w1p_norm(step.u, p, inset));
    }
    if (!zero_source && step.u.inf() <= 0.0)
      res.violations.push_back({"positivity", "u_n is not strictly positive at n = " + fmt(n)});
    if (i > 0) {
      rec.sup_diff = (step.u - prev).sup_abs();
      const double tol = opt.tol_mono * std::max(1.0, prev.sup_abs());
      const double worst = (step.u - prev).inf();
      if (worst < -tol)
        res.violations.push_back({"monotonicity", "u_n decreases by " + fmt(-worst) + " between n = " +
                                                      fmt(schedule[i - 1]) + " and n = " + fmt(n)});
    }
    rec.solve = std::move(step.report);
    prev = step.u;
    res.iterates.push_back(step.u);
    res.steps.push_back(std::move(rec));
    if (opt.early_stop && i > 0 && *res.steps.back().sup_diff <= opt.tol_seq * std::max(1.0, prev.sup_abs())) {
      res.stopped_early = i + 1 < schedule.size();
      break;
    }
  }

  if (opt.limit && !zero_source) {
    auto lim = limit_solve(pb, prev, opt.solve);
    res.solution = lim.u;
    res.limit_report = std::move(lim.report);
  } else {
    res.solution = prev;
  }

  // gradient convergence toward the final solution (report only)
  {
    const auto gf = discrete_gradient(res.solution);
    std::optional<double> last;
    bool decreasing = true;
    for (std::size_t i = 0; i < res.iterates.size(); ++i) {
      const auto gi = discrete_gradient(res.iterates[i]);
      double s = 0.0;
      for (std::size_t c = 0; c < gi.g.size(); ++c)
        s += std::pow(std::hypot(gi.g[c][0] - gf.g[c][0], gi.g[c][1] - gf.g[c][1]), p);
      const double d = std::pow(s * gi.sample_weight, 1.0 / p);
      res.steps[i].grad_diff = d;
      if (last && d > *last * (1.0 + 1e-9) + 1e-12) decreasing = false;
      last = d;
    }
    if (!decreasing) res.notes.push_back("gradient differences to the final solution are not monotone in n");
  }
  // successive differences eventually nonincreasing (report only)
  {
    const std::size_t m = res.steps.size();
    for (std::size_t i = std::max<std::size_t>(2, m / 2); i < m; ++i)
      if (*res.steps[i].sup_diff > *res.steps[i - 1].sup_diff * (1.0 + 1e-9) + 1e-12) {
        res.notes.push_back("successive differences increase at n = " + fmt(res.steps[i].n));
        break;
      }
  }

  // interior positivity uniform in n
  if (!zero_source) {
    for (std::size_t s = 0; s < opt.insets.size(); ++s) {
      double lo = INFINITY;
      for (const auto& rec : res.steps) lo = std::min(lo, rec.interior_min[s]);
      if (!std::isfinite(lo)) continue;  // empty subdomain
      if (!(lo > 0.0))
        res.violations.push_back({"interior-positivity", "interior minimum not positive on inset " + fmt(opt.insets[s])});
      const std::size_t m = res.steps.size();
      if (m >= 3) {
        const double fin = res.steps[m - 1].interior_min[s];
        for (std::size_t i = m - 3; i < m; ++i)
          if (std::abs(res.steps[i].interior_min[s] - fin) > 0.1 * fin)
            res.violations.push_back({"interior-positivity", "interior minimum on inset " + fmt(opt.insets[s]) +
                                                                 " still moving by more than 10% over the last three n"});
      }
    }
  }

  const auto bounds = bound_monitor(pb, regime, res.iterates);
  for (std::size_t i = 0; i < bounds.lhs_rhs.size(); ++i) {
    res.steps[i].bound_lhs = bounds.lhs_rhs[i].first;
    res.steps[i].bound_rhs = bounds.lhs_rhs[i].second;
  }
  if (!bounds.plateau)
    res.violations.push_back({"norm-plateau", "monitored norm has not settled: spread " + fmt(bounds.plateau_spread) +
                                                  ", max/median " + fmt(bounds.max_over_median)});
  if (bounds.explicit_bound && !bounds.explicit_ok)
    res.violations.push_back({"norm-bound", "explicit a priori bound exceeded for regime " +
                                                std::string(to_string(regime.regime))});
  return res;
}

void require_invariants(const SequenceResult& r) {
  if (!r.violations.empty()) throw InvariantViolation(r.violations.front().clause, r.violations.front().detail);
}

BoundaryReport boundary_condition_check(const GridFunction& u, double p, double alpha) {
  if (u.inf() < -1e-12 * std::max(1.0, u.sup_abs()))
    throw InvalidInput("boundary_condition_check: field must be nonnegative");
  const Grid& g = u.grid();
  BoundaryReport rep;
  const double top = std::max(u.sup(), 0.0);
  const double layer = 1.5 * g.max_h();
  double prev = -1.0;
  for (double frac : {0.5, 0.25, 0.1}) {
    const double eps = frac * top;
    const auto shifted = u.map([eps](double v) { return std::max(v - eps, 0.0); });
    const double norm = w1p_norm(shifted, p);
    std::vector<std::size_t> bad;
    for (std::size_t k = 0; k < g.size(); ++k)
      if (g.dist_to_boundary(k) < layer && u[k] > eps) bad.push_back(k);
    rep.eps.push_back(eps);
    rep.w1p.push_back(norm);
    rep.violating_nodes.push_back(std::move(bad));
    if (!std::isfinite(norm)) rep.finite = false;
    if (norm < prev * (1.0 - 1e-12)) rep.monotone = false;
    prev = norm;
  }
  if (alpha > 1.0) {
    rep.power_norm = w1p_norm(u.pos().pow(alpha), p);
    if (!std::isfinite(*rep.power_norm)) rep.finite = false;
  }
  return rep;
}

void to_json(nlohmann::json& j, const StepRecord& r) {
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  j = nlohmann::json{
      {"n", r.n},
      {"norms", {{"monitored", r.norm}, {"w1p", r.w1p}, {"interior_w1p", r.interior_w1p}}},
      {"min_on_subdomains", r.interior_min},
      {"sup", r.sup},
      {"sup_diff", opt(r.sup_diff)},
      {"grad_diff", opt(r.grad_diff)},
      {"bound", {{"lhs", opt(r.bound_lhs)}, {"rhs", opt(r.bound_rhs)}}},
      {"solver_stats",
       {{"iterations", r.solve.iterations},
        {"residual", r.solve.residual},
        {"backtracks", r.solve.backtracks},
        {"relaxed_steps", r.solve.relaxed_steps},
        {"final_energy", r.solve.energy_trace.empty() ? 0.0 : r.solve.energy_trace.back()},
        {"seed", r.solve.seed}}}};
}

nlohmann::json sequence_json(const SequenceResult& r) {
  nlohmann::json j;
  j["regime"] = std::string(to_string(r.regime.regime));
  j["integrability"] = {{"m", r.regime.integrability.m}, {"strict", r.regime.integrability.strict}};
  j["alpha"] = r.regime.alpha;
  j["sequence"] = r.steps;
  if (r.limit_report) {
    const auto& l = *r.limit_report;
    j["limit"] = {{"iterations", l.iterations},
                  {"residual", l.residual},
                  {"final_energy", l.energy_trace.empty() ? 0.0 : l.energy_trace.back()}};
  }
  j["stopped_early"] = r.stopped_early;
  auto v = nlohmann::json::array();
  for (const auto& x : r.violations) v.push_back({{"clause", x.clause}, {"detail", x.detail}});
  j["violations"] = v;
  j["notes"] = r.notes;
  return j;
}

nlohmann::json boundary_json(const BoundaryReport& r) {
  nlohmann::json j{{"eps", r.eps}, {"w1p", r.w1p}, {"violating_nodes", r.violating_nodes},
                   {"finite", r.finite}, {"monotone", r.monotone}};
  j["power_norm"] = r.power_norm ? nlohmann::json(*r.power_norm) : nlohmann::json(nullptr);
  return j;
}

}  // namespace mixp
