#include "mixp/app.hpp"

#include <omp.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mixp/calculus.hpp"
#include "mixp/scheme.hpp"
#include "mixp/solver.hpp"

namespace mixp {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void write_atomic(const fs::path& dir, const std::string& name, const std::string& content) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  const fs::path target = dir / name;
  const fs::path tmp = dir / (name + ".tmp");
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open " + tmp.string() + " for writing");
    os << content;
    os.flush();
    if (!os) throw IoError("write to " + tmp.string() + " failed");
  }
  fs::rename(tmp, target, ec);
  if (ec) throw IoError("cannot move " + tmp.string() + " to " + target.string() + ": " + ec.message());
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

json header(const ExperimentConfig& cfg) { return {{"config_hash", cfg.hash()}, {"seed", cfg.seed}}; }

std::vector<std::string> csv_header(const ExperimentConfig& cfg) {
  return {"config_hash=" + cfg.hash(), "seed=" + std::to_string(cfg.seed)};
}

std::string field_csv(const GridFunction& u, const ExperimentConfig& cfg) {
  std::ostringstream os;
  write_csv(os, u, csv_header(cfg));
  return os.str();
}

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

SequenceOptions options_for(const ExperimentConfig& cfg) {
  SequenceOptions opt = cfg.sequence_options();
  if (cfg.seed != 0) opt.initial = initial_field(cfg.grid, cfg.seed);
  return opt;
}

double nodal_or_zero(const GridFunction& u, int i, int j) {
  const Grid& g = u.grid();
  if (i <= 0 || i > g.nodes(0)) return 0.0;
  if (g.dim() == 1) return u[g.index(i - 1)];
  if (j <= 0 || j > g.nodes(1)) return 0.0;
  return u[g.index(i - 1, j - 1)];
}

struct Solved {
  ExperimentConfig cfg;
  Problem problem;
  SequenceResult seq;
};

Solved solve_sequence(const ExperimentConfig& cfg) {
  Problem pb = cfg.problem();
  auto seq = run_sequence(pb, cfg.regime_info, options_for(cfg));
  return {cfg, std::move(pb), std::move(seq)};
}

ExperimentConfig with_nodes(const ExperimentConfig& cfg, int m0, int m1) {
  ExperimentConfig c = cfg;
  c.nodes = {m0, m1};
  c.finalize();
  return c;
}

std::string describe(const InequalityReport& r) {
  std::string s = r.kind;
  if (auto it = r.params.find("r"); it != r.params.end()) s += " r=" + fmt(it->second);
  if (auto it = r.params.find("k_or_l"); it != r.params.end()) s += " k/l=" + fmt(it->second);
  return s;
}

int cmd_solve(const ExperimentConfig& cfg, const fs::path& out, std::ostream& log) {
  const Problem pb = cfg.problem();
  const auto opt = cfg.sequence_options();
  const auto res = approx_step(pb, cfg.n, initial_field(cfg.grid, cfg.seed), opt.solve);
  json j = header(cfg);
  j["n"] = cfg.n;
  j["solver"] = res.report;
  j["sup"] = res.u.sup();
  write_atomic(out, "solution.csv", field_csv(res.u, cfg));
  write_atomic(out, "solve.json", dump(j));
  log << "solve: n = " << fmt(cfg.n) << ", " << res.report.iterations << " iterations, residual "
      << fmt(res.report.residual) << ", sup u = " << fmt(res.u.sup()) << "\n";
  return 0;
}

int cmd_sequence(const ExperimentConfig& cfg, const fs::path& out, std::ostream& log) {
  const auto s = solve_sequence(cfg);
  const auto boundary = boundary_condition_check(s.seq.solution, cfg.p, s.seq.regime.alpha);
  json j = header(cfg);
  j["config"] = cfg.to_json();
  j.update(sequence_json(s.seq));
  j["boundary"] = boundary_json(boundary);
  write_atomic(out, "sequence.json", dump(j));
  write_atomic(out, "solution.csv", field_csv(s.seq.solution, cfg));
  log << "sequence: regime " << to_string(s.seq.regime.regime) << ", " << s.seq.steps.size() << " steps, sup u = "
      << fmt(s.seq.solution.sup()) << "\n";
  int code = 0;
  for (const auto& v : s.seq.violations) {
    log << "violation (" << v.clause << "): " << v.detail << "\n";
    code = 3;
  }
  if (!boundary.finite || !boundary.monotone) {
    log << "violation (boundary): truncated boundary norms are " << (boundary.finite ? "not monotone" : "not finite")
        << "\n";
    code = 3;
  }
  for (const auto& n : s.seq.notes) log << "note: " << n << "\n";
  return code;
}

int cmd_verify(const ExperimentConfig& cfg, const fs::path& out, std::ostream& log) {
  const auto st = regularity_study(cfg);
  std::vector<std::string> comments = csv_header(cfg);
  {
    std::ostringstream os;
    write_sweep_csv(os, st.fine, comments);
    write_atomic(out, "regularity.csv", os.str());
  }
  {
    std::ostringstream os;
    write_sweep_csv(os, st.coarse, comments);
    write_atomic(out, "regularity_coarse.csv", os.str());
  }
  json j = header(cfg);
  j["fine_M"] = st.fine_nodes;
  j["coarse_M"] = st.coarse_nodes;
  j["fine"] = st.fine;
  j["coarse"] = st.coarse;
  j["drift"] = st.drift;
  j["max_drift"] = st.max_drift;
  auto cert = [](const Certification& c) {
    return json{{"sub", c.sub}, {"super", c.super}, {"max_residual", c.max_residual},
                {"min_residual", c.min_residual}, {"scale", c.scale}};
  };
  j["certification"] = {{"fine", cert(st.fine_cert)}, {"coarse", cert(st.coarse_cert)}};
  j["failures"] = st.failures;
  j["pass"] = st.pass();
  write_atomic(out, "regularity.json", dump(j));
  log << "verify-regularity: " << st.fine.size() << " reports at M = " << st.fine_nodes << " and " << st.coarse_nodes
      << ", max drift " << fmt(st.max_drift) << "\n";
  for (const auto& f : st.failures) log << "failure: " << f << "\n";
  return st.pass() ? 0 : 3;
}

int cmd_convergence(const ExperimentConfig& cfg, const fs::path& out, std::ostream& log) {
  const auto st = convergence_study(cfg);
  std::ostringstream csv;
  for (const auto& c : csv_header(cfg)) csv << "# " << c << "\n";
  csv << "M,h,sup_error,ratio\n";
  csv.precision(17);
  for (std::size_t i = 0; i < st.nodes.size(); ++i) {
    csv << st.nodes[i] << ',' << st.h[i] << ',' << st.error[i] << ',';
    if (i > 0) csv << st.error[i - 1] / st.error[i];
    csv << "\n";
  }
  write_atomic(out, "convergence.csv", csv.str());
  json j = header(cfg);
  j["M"] = st.nodes;
  j["h"] = st.h;
  j["sup_error"] = st.error;
  j["min_ratio"] = st.min_ratio;
  j["roundtrip_error"] = st.roundtrip_error;
  j["pass"] = st.pass;
  write_atomic(out, "convergence.json", dump(j));
  for (std::size_t i = 0; i < st.nodes.size(); ++i)
    log << "M = " << st.nodes[i] << "  h = " << fmt(st.h[i]) << "  error = " << fmt(st.error[i]) << "\n";
  log << "convergence: min ratio " << fmt(st.min_ratio) << ", round trip error " << fmt(st.roundtrip_error) << "\n";
  return st.pass ? 0 : 3;
}

int cmd_selftest(std::uint64_t seed, const fs::path& out, std::ostream& log) {
  constexpr std::int64_t samples = 100000;
  json j{{"seed", seed}};
  std::int64_t total = 0;
  auto alg = json::array();
  auto inc = json::array();
  const PiecewiseLinear ramp({-1, 0, 1}, {0, 0, 1});
  const PiecewiseLinear kinked({-2, -1, 0.5, 2}, {-3, -2.5, 0, 4});
  for (double p : {1.5, 2.0, 3.0}) {
    const auto a = check_alg_inequality(p, samples, seed);
    alg.push_back({{"p", p}, {"violations", a.violations}, {"skipped", a.skipped}, {"c_fit", a.c_fit}});
    total += a.violations;
    for (const auto* g : {&ramp, &kinked}) {
      const auto r = check_increasing_inequality(p, *g, samples, seed);
      inc.push_back({{"p", p}, {"g", g == &ramp ? "ramp" : "kinked"}, {"violations", r.violations},
                     {"max_defect", r.max_defect}});
      total += r.violations;
    }
  }
  auto st = json::array();
  for (int dim : {1, 2})
    for (double p : {1.5, 2.0, 3.0})
      for (double q : {1.5, 2.0, 3.0}) {
        const auto r = check_structure_hypotheses(Exponents(p, 0.5, dim, q), samples, seed);
        st.push_back({{"N", dim},
                      {"p", p},
                      {"q", q},
                      {"h1_violations", r.h1_violations},
                      {"h2_violations", r.h2_violations},
                      {"C1", r.constants.c1},
                      {"C2", r.constants.c2},
                      {"c1_observed", r.c1_observed},
                      {"c2_observed", r.c2_observed}});
        total += r.h1_violations + r.h2_violations;
      }
  j["alg"] = alg;
  j["increasing"] = inc;
  j["structure"] = st;
  j["violations"] = total;
  write_atomic(out, "selftest.json", dump(j));
  log << "selftest: " << total << " violations over " << alg.size() + inc.size() + st.size() << " checks\n";
  return total == 0 ? 0 : 3;
}

}  // namespace

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_input:
    case ErrorKind::config: return 1;
    case ErrorKind::singular_point:
    case ErrorKind::numerical_integration:
    case ErrorKind::non_convergence:
    case ErrorKind::divergence: return 2;
    case ErrorKind::invariant_violation:
    case ErrorKind::verification: return 3;
    case ErrorKind::io: return 4;
  }
  return 1;
}

ExperimentConfig load_config(const std::string& path, const RunOptions& opt) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot read config " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  ExperimentConfig cfg;
  try {
    cfg = parse_config(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
  if (opt.seed) cfg.seed = *opt.seed;
  if (opt.schedule_k) {
    cfg.schedule_k = *opt.schedule_k;
    cfg.finalize();
  }
  return cfg;
}

GridFunction initial_field(const GridPtr& grid, std::uint64_t seed) {
  GridFunction u(grid);
  if (seed == 0) return u;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  for (std::size_t k = 0; k < u.size(); ++k) u[k] = ud(rng);
  return u;
}

double interpolation_error(const GridFunction& u, const Expression& target) {
  const Grid& g = u.grid();
  const int tx_max = 2 * (g.nodes(0) + 1);
  const int ty_max = g.dim() == 1 ? 0 : 2 * (g.nodes(1) + 1);
  double err = 0.0;
  for (int ty = 0; ty <= ty_max; ++ty)
    for (int tx = 0; tx <= tx_max; ++tx) {
      // at half steps the linear / bilinear interpolant is the mean of the neighbouring nodes
      double v = 0.0;
      const int ix[2] = {tx / 2, (tx + 1) / 2};
      const int iy[2] = {ty / 2, (ty + 1) / 2};
      for (int a : ix)
        for (int b : iy) v += nodal_or_zero(u, a, b);
      v *= 0.25;
      const double x = 0.5 * tx * g.h(0);
      const double y = g.dim() == 1 ? 0.0 : 0.5 * ty * g.h(1);
      err = std::max(err, std::abs(v - target.evaluate(x, y)));
    }
  return err;
}

ConvergenceStudy convergence_study(const ExperimentConfig& cfg) {
  if (!cfg.target) throw ConfigError("convergence.target: missing (needed for the refinement study)");
  ConvergenceStudy st;
  std::optional<Solved> last;
  for (int m : cfg.convergence_nodes) {
    last = solve_sequence(with_nodes(cfg, m, m));
    require_invariants(last->seq);
    st.nodes.push_back(m);
    st.h.push_back(last->cfg.grid->max_h());
    st.error.push_back(interpolation_error(last->seq.solution, *cfg.target));
  }
  st.min_ratio = INFINITY;
  for (std::size_t i = 1; i < st.error.size(); ++i) st.min_ratio = std::min(st.min_ratio, st.error[i - 1] / st.error[i]);

  const auto& c = last->cfg;
  const auto ut = cfg.target->evaluate_on(*c.grid);
  for (double v : ut)
    if (!(v > 0.0)) throw ConfigError("convergence.target: must be positive at the interior nodes");
  const GridFunction u_target(c.grid, ut);
  Problem pb = last->problem;
  pb.f = manufactured_source(u_target, pb.exps, pb.assembly, c.gamma_values);
  const auto back = limit_solve(pb, last->seq.solution, c.sequence_options().solve);
  st.roundtrip_error = (back.u - u_target).sup_abs();
  st.pass = st.min_ratio >= 3.0 && st.roundtrip_error <= 1e-5;
  return st;
}

RegularityStudy regularity_study(const ExperimentConfig& cfg) {
  if (cfg.local_only) throw ConfigError("local_only: the regularity sweep needs the nonlocal operator");
  const int m0 = cfg.nodes[0], m1 = cfg.dim == 2 ? cfg.nodes[1] : cfg.nodes[0];
  if ((m0 - 1) / 2 < 3 || (m1 - 1) / 2 < 3) throw ConfigError("domain.M: need at least 7 nodes per axis to halve the mesh");
  RegularityStudy st;
  st.fine_nodes = m0;
  st.coarse_nodes = (m0 - 1) / 2;

  auto one = [&](const ExperimentConfig& c, const char* label, Certification& cert) {
    const auto s = solve_sequence(c);
    for (const auto& v : s.seq.violations)
      st.failures.push_back(std::string(label) + " sequence: " + v.clause + ": " + v.detail);
    const Objective obj(c.grid, s.problem.exps, s.problem.assembly,
                        SingularDensity{c.f_values, c.gamma_values, 0.0});
    cert = certify(obj, s.seq.solution);
    if (!cert.sub || !cert.super)
      st.failures.push_back(std::string(label) + " solution is not certified as a weak solution (residual " +
                            fmt(cert.min_residual) + " .. " + fmt(cert.max_residual) + ")");
    return regularity_sweep(s.seq.solution, *s.problem.assembly);
  };
  st.fine = one(cfg, "fine", st.fine_cert);
  st.coarse = one(with_nodes(cfg, (m0 - 1) / 2, (m1 - 1) / 2), "coarse", st.coarse_cert);
  if (st.fine.size() != st.coarse.size()) throw VerificationError("sweeps on the two meshes differ in length");

  st.max_drift = 1.0;
  for (std::size_t i = 0; i < st.fine.size(); ++i) {
    const auto& f = st.fine[i];
    const auto& c = st.coarse[i];
    for (const auto* r : {&f, &c}) {
      if (!std::isfinite(r->c_fit)) st.failures.push_back(describe(*r) + ": fitted constant is not finite");
      if (!r->pass) st.failures.push_back(describe(*r) + ": fails" + (r->note.empty() ? "" : " (" + r->note + ")"));
    }
    double d = 1.0;
    if (f.c_fit == 0.0 && c.c_fit == 0.0)
      d = 1.0;
    else if (f.c_fit > 0.0 && c.c_fit > 0.0)
      d = std::max(f.c_fit / c.c_fit, c.c_fit / f.c_fit);
    else
      d = INFINITY;
    st.drift.push_back(d);
    if (!(d <= 2.0)) st.failures.push_back(describe(f) + ": drift " + fmt(d) + " under mesh halving exceeds 2");
    st.max_drift = std::max(st.max_drift, std::isnan(d) ? INFINITY : d);
  }
  return st;
}

int run(std::string_view subcommand, const RunOptions& opt, std::ostream& log) {
  try {
    if (opt.threads) {
      if (*opt.threads < 1) throw ConfigError("--threads must be at least 1");
      omp_set_num_threads(*opt.threads);
    }
    if (subcommand == "selftest") {
      std::optional<ExperimentConfig> cfg;
      if (opt.config_path) cfg = load_config(*opt.config_path, opt);
      const std::uint64_t seed = opt.seed.value_or(cfg ? cfg->seed : 0);
      return cmd_selftest(seed, opt.out.value_or(cfg ? cfg->output : "out"), log);
    }
    if (subcommand != "solve" && subcommand != "sequence" && subcommand != "verify-regularity" &&
        subcommand != "convergence")
      throw ConfigError("unknown subcommand '" + std::string(subcommand) + "'");
    if (!opt.config_path) throw ConfigError("--config is required for " + std::string(subcommand));
    const ExperimentConfig cfg = load_config(*opt.config_path, opt);
    const fs::path out = opt.out.value_or(cfg.output);
    if (subcommand == "solve") return cmd_solve(cfg, out, log);
    if (subcommand == "sequence") return cmd_sequence(cfg, out, log);
    if (subcommand == "verify-regularity") return cmd_verify(cfg, out, log);
    return cmd_convergence(cfg, out, log);
  } catch (const Error& e) {
    log << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::bad_alloc&) {
    log << "error: out of memory\n";
    return 2;
  }
}

}  // namespace mixp
