#include <CLI11.hpp>

#include <iostream>

#include "mixp/app.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Singular mixed local/nonlocal p-Laplace solver and regularity checks", "mixp"};
  app.require_subcommand(1);

  mixp::RunOptions opt;
  std::string config, out;
  std::uint64_t seed = 0;
  int threads = 0, schedule_k = 0;

  auto add_common = [&](CLI::App* sub, bool config_required) {
    auto* c = sub->add_option("--config", config, "experiment config (JSON)")->check(CLI::ExistingFile);
    if (config_required) c->required();
    sub->add_option("--out", out, "output directory (default: the config's \"output\")");
    sub->add_option("--seed", seed, "seed; nonzero also selects a random initial field");
    sub->add_option("--threads", threads, "OpenMP threads")->check(CLI::PositiveNumber);
    sub->add_option("--schedule-k", schedule_k, "truncation levels n = 1, 2, ..., 2^k")->check(CLI::Range(0, 40));
  };
  add_common(app.add_subcommand("solve", "solve one truncated problem at level n"), true);
  add_common(app.add_subcommand("sequence", "run the approximation sequence and write the solution"), true);
  add_common(app.add_subcommand("verify-regularity", "inequality sweeps at two meshes"), true);
  add_common(app.add_subcommand("convergence", "manufactured-solution refinement study"), true);
  add_common(app.add_subcommand("selftest", "pointwise inequality oracles"), false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  const CLI::App* sub = app.get_subcommands().front();
  if (sub->count("--config")) opt.config_path = config;
  if (sub->count("--out")) opt.out = out;
  if (sub->count("--seed")) opt.seed = seed;
  if (sub->count("--threads")) opt.threads = threads;
  if (sub->count("--schedule-k")) opt.schedule_k = schedule_k;
  return mixp::run(sub->get_name(), opt, std::cerr);
}
