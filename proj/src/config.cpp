#include "mixp/config.hpp"

#include <cmath>
#include <cstdio>
#include <set>

#include <nlohmann/json.hpp>

#include "mixp/error.hpp"

namespace mixp {

using nlohmann::json;

namespace {

struct Location {
  int line = 0;
  int column = 0;
};

Location location_of(std::string_view text, std::size_t offset) {
  Location loc{1, 1};
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++loc.line;
      loc.column = 1;
    } else {
      ++loc.column;
    }
  }
  return loc;
}

// Best-effort position of a key path: each quoted segment is searched after
// the previous one.
Location locate(std::string_view text, const std::vector<std::string>& path) {
  std::size_t at = 0;
  for (const auto& seg : path) {
    const auto found = text.find('"' + seg + '"', at);
    if (found == std::string_view::npos) return {};
    at = found;
  }
  return location_of(text, at);
}

class Reader {
 public:
  explicit Reader(std::string_view text) : text_(text) {}

  [[noreturn]] void fail(const std::vector<std::string>& path, const std::string& what) const {
    std::string name;
    for (const auto& s : path) name += (name.empty() ? "" : ".") + s;
    const Location loc = locate(text_, path);
    throw ConfigError(name + ": " + what, loc.line, loc.column);
  }

  void only_keys(const json& obj, const std::vector<std::string>& path, const std::set<std::string>& allowed) const {
    if (!obj.is_object()) fail(path, "expected an object");
    for (const auto& [k, v] : obj.items()) {
      if (!allowed.count(k)) {
        auto p = path;
        p.push_back(k);
        fail(p, "unknown key");
      }
    }
  }

  double number(const json& v, const std::vector<std::string>& path) const {
    if (!v.is_number()) fail(path, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(path, "must be finite");
    return x;
  }

  std::int64_t integer(const json& v, const std::vector<std::string>& path) const {
    if (!v.is_number_integer()) fail(path, "expected an integer");
    return v.get<std::int64_t>();
  }

  Expression expression(const json& v, const std::vector<std::string>& path) const {
    if (v.is_number()) return Expression::parse(format_number(number(v, path)));
    if (!v.is_string()) fail(path, "expected an expression string or a number");
    try {
      return Expression::parse(v.get<std::string>());
    } catch (const ConfigError& e) {
      std::string what = e.what();
      if (const auto at = what.rfind(" at line "); at != std::string::npos) what.resize(at);
      std::string name;
      for (const auto& s : path) name += (name.empty() ? "" : ".") + s;
      // single-line strings without escapes map column for column onto the file
      const Location key = locate(text_, path);
      Location loc = key;
      if (key.line > 0 && e.line == 1) {
        std::size_t off = 0;
        for (int l = 1; l < key.line; ++l) off = text_.find('\n', off) + 1;
        off += static_cast<std::size_t>(key.column - 1) + path.back().size() + 2;
        const auto quote = text_.find('"', off);
        if (quote != std::string_view::npos) loc = location_of(text_, quote + static_cast<std::size_t>(e.column));
      }
      throw ConfigError(name + ": " + what, loc.line, loc.column);
    }
  }

  static std::string format_number(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
  }

 private:
  std::string_view text_;
};

std::array<double, 2> pair_of(const Reader& r, const json& v, const std::vector<std::string>& path, int dim) {
  if (v.is_array()) {
    if (static_cast<int>(v.size()) != dim) r.fail(path, "expected " + std::to_string(dim) + " entries");
    std::array<double, 2> out{1.0, 1.0};
    for (int i = 0; i < dim; ++i) out[i] = r.number(v[i], path);
    return out;
  }
  const double x = r.number(v, path);
  return {x, x};
}

}  // namespace

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

Exponents ExperimentConfig::exponents() const { return Exponents(p, s, dim, q, a, b); }

Problem ExperimentConfig::problem() const {
  const Exponents e = exponents();
  std::shared_ptr<const NonlocalAssembly> as;
  if (!local_only) as = std::make_shared<const NonlocalAssembly>(grid, e);
  return Problem{grid, e, as, GridFunction(grid, f_values), gamma_values, effective_gamma_star};
}

SequenceOptions ExperimentConfig::sequence_options() const {
  SequenceOptions opt;
  opt.schedule = geometric_schedule(schedule_k);
  opt.tol_seq = tol_seq;
  opt.tol_mono = tol_mono;
  opt.early_stop = early_stop;
  opt.solve.tol = tol;
  opt.solve.max_iters = max_iters;
  opt.solve.seed = seed;
  return opt;
}

json ExperimentConfig::to_json() const {
  json j;
  j["domain"] = {{"dim", dim},
                 {"extent", dim == 1 ? json(extent[0]) : json{extent[0], extent[1]}},
                 {"M", dim == 1 ? json(nodes[0]) : json{nodes[0], nodes[1]}},
                 {"delta", delta}};
  j["exponents"] = {{"p", p}, {"s", s}, {"q", q}, {"a", a}, {"b", b}};
  j["local_only"] = local_only;
  j["gamma"] = gamma.to_string();
  j["f"] = f.to_string();
  if (gamma_star) j["gamma_star"] = *gamma_star;
  if (f_integrability) j["f_integrability"] = *f_integrability;
  if (regime) j["regime"] = std::string(mixp::to_string(*regime));
  j["schedule_k"] = schedule_k;
  j["tolerances"] = {{"solver", tol}, {"max_iters", max_iters}, {"seq", tol_seq}, {"mono", tol_mono}};
  j["early_stop"] = early_stop;
  j["n"] = n;
  json conv = {{"M", convergence_nodes}};
  if (target) conv["target"] = target->to_string();
  j["convergence"] = conv;
  j["seed"] = seed;
  return j;
}

std::string ExperimentConfig::hash() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(to_json().dump())));
  return buf;
}

void ExperimentConfig::finalize() {
  if (dim != 1 && dim != 2) throw ConfigError("domain.dim must be 1 or 2");
  if (schedule_k < 0 || schedule_k > 40) throw ConfigError("schedule_k must be in [0, 40]");
  if (!(n > 0.0)) throw ConfigError("n must be positive");
  try {
    grid = make_grid(dim, extent, nodes, delta);
    (void)exponents();
  } catch (const InvalidInput& e) {
    throw ConfigError(e.what());
  }
  try {
    gamma_values = gamma.evaluate_on(*grid);
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("gamma: ") + e.what());
  }
  try {
    f_values = f.evaluate_on(*grid);
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("f: ") + e.what());
  }
  for (std::size_t k = 0; k < grid->size(); ++k) {
    const Point x = grid->point(k);
    if (!(gamma_values[k] > 0.0))
      throw ConfigError("gamma must be positive on every node; gamma(" + Reader::format_number(x[0]) +
                        (dim == 2 ? ", " + Reader::format_number(x[1]) : "") + ") = " +
                        Reader::format_number(gamma_values[k]));
    if (f_values[k] < 0.0)
      throw ConfigError("f must be nonnegative on every node; f(" + Reader::format_number(x[0]) +
                        (dim == 2 ? ", " + Reader::format_number(x[1]) : "") + ") = " +
                        Reader::format_number(f_values[k]));
  }
  effective_gamma_star = gamma_star;
  if (!effective_gamma_star && !gamma.is_constant()) {
    const double strip = gamma_info(*grid, gamma_values, std::nullopt).strip_max;
    if (strip > 1.0) effective_gamma_star = strip;
  }
  try {
    regime_info = regime_classify(gamma_info(*grid, gamma_values, effective_gamma_star),
                                  source_stats(GridFunction(grid, f_values), f_integrability), exponents(), regime);
  } catch (const InvalidInput& e) {
    throw ConfigError(e.what());
  }
}

ExperimentConfig parse_config(std::string_view text) {
  json j;
  try {
    j = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    const Location loc = location_of(text, e.byte > 0 ? e.byte - 1 : 0);
    std::string what = e.what();
    // drop the library prefix "[json.exception.parse_error.101] parse error at line 1, column 2: "
    if (const auto c = what.find(": "); c != std::string::npos) what = what.substr(c + 2);
    throw ConfigError("invalid JSON: " + what, loc.line, loc.column);
  }

  const Reader r(text);
  ExperimentConfig c;
  r.only_keys(j, {}, {"domain", "exponents", "local_only", "gamma", "gamma_star", "f", "f_integrability", "regime",
                      "schedule_k", "tolerances", "early_stop", "n", "convergence", "output", "seed"});

  if (!j.contains("domain")) r.fail({"domain"}, "missing");
  const json& d = j["domain"];
  r.only_keys(d, {"domain"}, {"dim", "extent", "M", "delta"});
  if (d.contains("dim")) c.dim = static_cast<int>(r.integer(d["dim"], {"domain", "dim"}));
  if (c.dim != 1 && c.dim != 2) r.fail({"domain", "dim"}, "must be 1 or 2");
  if (d.contains("extent")) c.extent = pair_of(r, d["extent"], {"domain", "extent"}, c.dim);
  if (!d.contains("M")) r.fail({"domain", "M"}, "missing");
  {
    const json& m = d["M"];
    if (m.is_array()) {
      if (static_cast<int>(m.size()) != c.dim) r.fail({"domain", "M"}, "expected " + std::to_string(c.dim) + " entries");
      for (int i = 0; i < c.dim; ++i) c.nodes[i] = static_cast<int>(r.integer(m[i], {"domain", "M"}));
    } else {
      c.nodes[0] = c.nodes[1] = static_cast<int>(r.integer(m, {"domain", "M"}));
    }
    for (int i = 0; i < c.dim; ++i)
      if (c.nodes[i] < 3) r.fail({"domain", "M"}, "needs at least 3 interior nodes");
  }
  if (d.contains("delta")) c.delta = r.number(d["delta"], {"domain", "delta"});

  if (j.contains("exponents")) {
    const json& e = j["exponents"];
    r.only_keys(e, {"exponents"}, {"p", "s", "q", "a", "b"});
    if (e.contains("p")) c.p = r.number(e["p"], {"exponents", "p"});
    if (e.contains("s")) c.s = r.number(e["s"], {"exponents", "s"});
    if (e.contains("q")) c.q = r.number(e["q"], {"exponents", "q"});
    if (e.contains("a")) c.a = r.number(e["a"], {"exponents", "a"});
    if (e.contains("b")) c.b = r.number(e["b"], {"exponents", "b"});
  }
  if (j.contains("local_only")) {
    if (!j["local_only"].is_boolean()) r.fail({"local_only"}, "expected true or false");
    c.local_only = j["local_only"].get<bool>();
  }
  if (!j.contains("gamma")) r.fail({"gamma"}, "missing");
  c.gamma = r.expression(j["gamma"], {"gamma"});
  if (!j.contains("f")) r.fail({"f"}, "missing");
  c.f = r.expression(j["f"], {"f"});
  if (j.contains("gamma_star")) c.gamma_star = r.number(j["gamma_star"], {"gamma_star"});
  if (j.contains("f_integrability")) c.f_integrability = r.number(j["f_integrability"], {"f_integrability"});
  if (j.contains("regime")) {
    if (!j["regime"].is_string()) r.fail({"regime"}, "expected a regime name");
    try {
      c.regime = parse_regime(j["regime"].get<std::string>());
    } catch (const Error& e) {
      r.fail({"regime"}, e.what());
    }
  }
  if (j.contains("schedule_k")) c.schedule_k = static_cast<int>(r.integer(j["schedule_k"], {"schedule_k"}));
  if (j.contains("tolerances")) {
    const json& t = j["tolerances"];
    r.only_keys(t, {"tolerances"}, {"solver", "max_iters", "seq", "mono"});
    if (t.contains("solver")) c.tol = r.number(t["solver"], {"tolerances", "solver"});
    if (t.contains("max_iters")) c.max_iters = r.integer(t["max_iters"], {"tolerances", "max_iters"});
    if (t.contains("seq")) c.tol_seq = r.number(t["seq"], {"tolerances", "seq"});
    if (t.contains("mono")) c.tol_mono = r.number(t["mono"], {"tolerances", "mono"});
    if (!(c.tol > 0.0)) r.fail({"tolerances", "solver"}, "must be positive");
    if (c.max_iters < 0) r.fail({"tolerances", "max_iters"}, "must be nonnegative");
  }
  if (j.contains("early_stop")) {
    if (!j["early_stop"].is_boolean()) r.fail({"early_stop"}, "expected true or false");
    c.early_stop = j["early_stop"].get<bool>();
  }
  if (j.contains("n")) c.n = r.number(j["n"], {"n"});
  if (j.contains("convergence")) {
    const json& cv = j["convergence"];
    r.only_keys(cv, {"convergence"}, {"M", "target"});
    if (cv.contains("M")) {
      if (!cv["M"].is_array() || cv["M"].size() < 2) r.fail({"convergence", "M"}, "expected at least two node counts");
      c.convergence_nodes.clear();
      for (const auto& m : cv["M"]) c.convergence_nodes.push_back(static_cast<int>(r.integer(m, {"convergence", "M"})));
    }
    if (cv.contains("target")) c.target = r.expression(cv["target"], {"convergence", "target"});
  }
  if (j.contains("output")) {
    if (!j["output"].is_string()) r.fail({"output"}, "expected a directory name");
    c.output = j["output"].get<std::string>();
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned() && !j["seed"].is_number_integer()) r.fail({"seed"}, "expected an unsigned integer");
    if (j["seed"].is_number_integer() && j["seed"].get<std::int64_t>() < 0) r.fail({"seed"}, "expected an unsigned integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }

  try {
    c.finalize();
  } catch (const ConfigError& e) {
    if (e.line > 0) throw;
    const std::string what = e.what();
    for (const std::string key : {"gamma", "f", "domain", "schedule_k", "n"}) {
      if (what.size() > key.size() && what.compare(0, key.size(), key) == 0 &&
          (what[key.size()] == ' ' || what[key.size()] == '.')) {
        const Location loc = locate(text, {key});
        throw ConfigError(what, loc.line, loc.column);
      }
    }
    throw;
  }
  return c;
}

}  // namespace mixp
