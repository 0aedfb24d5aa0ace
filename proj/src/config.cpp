#include "oscikg/config.hpp"

#include <charconv>
#include <cmath>
#include <numbers>
#include <set>

#include "json.hpp"

namespace oscikg {

using nlohmann::json;

namespace {

std::string num(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string join(const std::string& ptr, const std::string& key) { return ptr + "/" + key; }

void only_keys(const json& j, const std::string& ptr, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(ptr, "expected an object");
  const std::set<std::string> keys(allowed.begin(), allowed.end());
  for (const auto& [key, _] : j.items())
    if (!keys.count(key)) throw ConfigError(join(ptr, key), "unknown key");
}

const json& need(const json& j, const std::string& ptr, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw ConfigError(join(ptr, key), "missing required field");
  return *it;
}

double as_number(const json& j, const std::string& ptr) {
  if (!j.is_number()) throw ConfigError(ptr, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError(ptr, "must be finite");
  return v;
}

long as_integer(const json& j, const std::string& ptr) {
  if (!j.is_number_integer()) throw ConfigError(ptr, "expected an integer");
  return j.get<long>();
}

std::string as_string(const json& j, const std::string& ptr) {
  if (!j.is_string()) throw ConfigError(ptr, "expected a string");
  return j.get<std::string>();
}

std::string as_expr(const json& j, const std::string& ptr) {
  if (j.is_number()) return num(as_number(j, ptr));
  const std::string s = as_string(j, ptr);
  try {
    Expr e(s);
  } catch (const ExprError& err) {
    throw ConfigError(ptr, err.what());
  }
  return s;
}

PhaseForm parse_form(const json& j, const std::string& ptr) {
  const std::string s = as_string(j, ptr);
  if (s == "cos") return PhaseForm::Cosine;
  if (s == "sin") return PhaseForm::Sine;
  if (s == "cexp") return PhaseForm::ComplexExp;
  throw ConfigError(ptr, "form must be cos, sin or cexp");
}

const char* form_text(PhaseForm f) {
  switch (f) {
    case PhaseForm::Sine: return "sin";
    case PhaseForm::ComplexExp: return "cexp";
    default: return "cos";
  }
}

Problem parse_problem(const json& j, const std::string& ptr) {
  only_keys(j, ptr, {"domain", "modes", "dim", "laplacian_coeff", "forcing", "psi0", "phi0", "t0", "T"});
  Problem p;
  const json& dom = need(j, ptr, "domain");
  if (!dom.is_array() || dom.size() != 2) throw ConfigError(join(ptr, "domain"), "expected [lower, upper]");
  p.lower = as_number(dom[0], join(ptr, "domain/0"));
  p.upper = as_number(dom[1], join(ptr, "domain/1"));
  p.modes = static_cast<int>(as_integer(need(j, ptr, "modes"), join(ptr, "modes")));
  if (j.contains("dim")) p.dim = static_cast<int>(as_integer(j["dim"], join(ptr, "dim")));
  if (j.contains("laplacian_coeff"))
    p.laplacian_coeff = as_number(j["laplacian_coeff"], join(ptr, "laplacian_coeff"));

  const std::string fptr = join(ptr, "forcing");
  const json& f = need(j, ptr, "forcing");
  only_keys(f, fptr, {"alpha", "components"});
  if (f.contains("alpha")) p.alpha = as_expr(f["alpha"], join(fptr, "alpha"));
  if (f.contains("components")) {
    const std::string cptr = join(fptr, "components");
    if (!f["components"].is_array()) throw ConfigError(cptr, "expected an array");
    for (std::size_t i = 0; i < f["components"].size(); ++i) {
      const std::string iptr = join(cptr, std::to_string(i));
      const json& c = f["components"][i];
      only_keys(c, iptr, {"amplitude", "omega", "form"});
      ComponentSpec spec;
      spec.amplitude = as_expr(need(c, iptr, "amplitude"), join(iptr, "amplitude"));
      const json& w = need(c, iptr, "omega");
      if (w.is_string()) {
        if (w.get<std::string>() != "omega")
          throw ConfigError(join(iptr, "omega"), "expected a number or the placeholder \"omega\"");
        spec.omega_placeholder = true;
      } else {
        spec.omega = as_number(w, join(iptr, "omega"));
      }
      if (c.contains("form")) spec.form = parse_form(c["form"], join(iptr, "form"));
      p.components.push_back(spec);
    }
  }
  p.psi0 = as_expr(need(j, ptr, "psi0"), join(ptr, "psi0"));
  if (j.contains("phi0")) p.phi0 = as_expr(j["phi0"], join(ptr, "phi0"));
  if (j.contains("t0")) p.t0 = as_number(j["t0"], join(ptr, "t0"));
  p.T = as_number(need(j, ptr, "T"), join(ptr, "T"));
  return p;
}

void check_finite(std::span<const double> v, const std::string& ptr) {
  for (double x : v)
    if (!std::isfinite(x)) throw ConfigError(ptr, "evaluates to a non-finite value on the grid");
}

void validate(const RunConfig& c) {
  const Problem& p = c.problem;
  if (!(p.T > p.t0)) throw ConfigError("/problem/T", "horizon must satisfy T > t0");
  if (!(p.laplacian_coeff > 0.0)) throw ConfigError("/problem/laplacian_coeff", "must be positive");

  GridPtr grid;
  try {
    grid = make_grid(p.lower, p.upper, p.modes, p.dim);
  } catch (const GridError& e) {
    throw ConfigError("/problem/modes", e.what());
  }

  const Problem bound = p.has_placeholder() ? p.with_omega(1.0) : p;
  ForcingTerm forcing;
  try {
    forcing = bound.forcing();
  } catch (const ForcingError& e) {
    throw ConfigError("/problem/forcing/components", e.what());
  }
  const State s0 = p.initial_state(*grid);
  check_finite(s0.psi, "/problem/psi0");
  check_finite(s0.dpsi, "/problem/phi0");
  Field f(grid->size());
  forcing.sample(*grid, p.t0, f);
  check_finite(f, "/problem/forcing");

  if (c.steps.empty()) throw ConfigError("/steps", "needs at least one step count");
  for (std::size_t i = 0; i < c.steps.size(); ++i) {
    if (c.steps[i] < 1) throw ConfigError("/steps/" + std::to_string(i), "must be positive");
    if (i > 0 && c.steps[i] <= c.steps[i - 1])
      throw ConfigError("/steps/" + std::to_string(i), "step counts must be strictly increasing");
  }
  if (c.schemes.empty()) throw ConfigError("/schemes", "needs at least one scheme");
  if (c.norm_s < 0.0) throw ConfigError("/norm_s", "must be non-negative");
  if (c.jobs < 1) throw ConfigError("/jobs", "must be at least 1");
  if (c.timing_repeats < 1) throw ConfigError("/timing_repeats", "must be at least 1");
  if (c.reference.substeps_per_unit < 1)
    throw ConfigError("/reference/substeps_per_unit", "must be positive");
  for (std::size_t i = 0; i < c.sweep_omegas.size(); ++i)
    if (!(c.sweep_omegas[i] >= 0.0))
      throw ConfigError("/sweep/omegas/" + std::to_string(i), "must be non-negative");
}

RunConfig from_json(const json& j) {
  only_keys(j, "", {"problem", "schemes", "steps", "norm_s", "reference", "output", "seed", "jobs",
                    "timing_repeats", "cache_dir", "sweep"});
  RunConfig c;
  c.problem = parse_problem(need(j, "", "problem"), "/problem");

  const json& steps = need(j, "", "steps");
  if (!steps.is_array()) throw ConfigError("/steps", "expected an array of step counts");
  c.steps.clear();
  for (std::size_t i = 0; i < steps.size(); ++i)
    c.steps.push_back(as_integer(steps[i], "/steps/" + std::to_string(i)));

  if (j.contains("schemes")) {
    if (!j["schemes"].is_array()) throw ConfigError("/schemes", "expected an array");
    c.schemes.clear();
    for (std::size_t i = 0; i < j["schemes"].size(); ++i) {
      const std::string ptr = "/schemes/" + std::to_string(i);
      try {
        c.schemes.push_back(parse_scheme(as_string(j["schemes"][i], ptr)));
      } catch (const std::invalid_argument& e) {
        throw ConfigError(ptr, e.what());
      }
    }
  }
  if (j.contains("norm_s")) c.norm_s = as_number(j["norm_s"], "/norm_s");
  if (j.contains("reference")) {
    const json& r = j["reference"];
    only_keys(r, "/reference", {"substeps_per_unit", "mode", "rule"});
    if (r.contains("substeps_per_unit"))
      c.reference.substeps_per_unit = as_integer(r["substeps_per_unit"], "/reference/substeps_per_unit");
    if (r.contains("mode")) {
      const std::string m = as_string(r["mode"], "/reference/mode");
      if (m == "matrix_free") c.reference.options.mode = ReferenceMode::MatrixFree;
      else if (m == "dense") c.reference.options.mode = ReferenceMode::Dense;
      else throw ConfigError("/reference/mode", "must be matrix_free or dense");
    }
    if (r.contains("rule")) {
      const std::string m = as_string(r["rule"], "/reference/rule");
      if (m == "midpoint") c.reference.options.rule = ReferenceRule::Midpoint;
      else if (m == "gauss4") c.reference.options.rule = ReferenceRule::GaussMagnus4;
      else throw ConfigError("/reference/rule", "must be midpoint or gauss4");
    }
  }
  if (j.contains("output")) c.output = as_string(j["output"], "/output");
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) throw ConfigError("/seed", "expected a non-negative integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("jobs")) c.jobs = static_cast<int>(as_integer(j["jobs"], "/jobs"));
  if (j.contains("timing_repeats"))
    c.timing_repeats = static_cast<int>(as_integer(j["timing_repeats"], "/timing_repeats"));
  if (j.contains("cache_dir")) c.reference.cache_dir = as_string(j["cache_dir"], "/cache_dir");
  if (j.contains("sweep")) {
    only_keys(j["sweep"], "/sweep", {"omegas"});
    const json& w = need(j["sweep"], "/sweep", "omegas");
    if (!w.is_array()) throw ConfigError("/sweep/omegas", "expected an array");
    for (std::size_t i = 0; i < w.size(); ++i)
      c.sweep_omegas.push_back(as_number(w[i], "/sweep/omegas/" + std::to_string(i)));
  }
  validate(c);
  return c;
}

const std::string kDoubleGauss = "exp(-(x-3)^2/2) + exp(-(x+3)^2/2)";

RunConfig base(double lower, double upper, int modes, int dim) {
  RunConfig c;
  c.problem.lower = lower;
  c.problem.upper = upper;
  c.problem.modes = modes;
  c.problem.dim = dim;
  c.steps = {1, 2, 4, 8, 16};
  return c;
}

}  // namespace

StudyOptions RunConfig::study_options() const {
  StudyOptions o;
  o.norm_s = norm_s;
  o.reference = reference;
  o.jobs = jobs;
  o.timing_repeats = timing_repeats;
  return o;
}

RunConfig parse_run_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("malformed JSON: ") + e.what());
  }
  return from_json(j);
}

std::string to_json(const RunConfig& c) {
  const Problem& p = c.problem;
  json comps = json::array();
  for (const auto& s : p.components) {
    json jc = {{"amplitude", s.amplitude}, {"form", form_text(s.form)}};
    if (s.omega_placeholder) jc["omega"] = "omega";
    else jc["omega"] = s.omega;
    comps.push_back(jc);
  }
  json schemes = json::array();
  for (auto s : c.schemes) schemes.push_back(to_string(s));
  json j = {
      {"problem",
       {{"domain", {p.lower, p.upper}},
        {"modes", p.modes},
        {"dim", p.dim},
        {"laplacian_coeff", p.laplacian_coeff},
        {"forcing", {{"alpha", p.alpha}, {"components", comps}}},
        {"psi0", p.psi0},
        {"phi0", p.phi0},
        {"t0", p.t0},
        {"T", p.T}}},
      {"schemes", schemes},
      {"steps", c.steps},
      {"norm_s", c.norm_s},
      {"reference",
       {{"substeps_per_unit", c.reference.substeps_per_unit},
        {"mode", c.reference.options.mode == ReferenceMode::Dense ? "dense" : "matrix_free"},
        {"rule", c.reference.options.rule == ReferenceRule::Midpoint ? "midpoint" : "gauss4"}}},
      {"output", c.output},
      {"seed", c.seed},
      {"jobs", c.jobs},
      {"timing_repeats", c.timing_repeats},
      {"cache_dir", c.reference.cache_dir}};
  if (!c.sweep_omegas.empty()) j["sweep"] = {{"omegas", c.sweep_omegas}};
  return j.dump(2);
}

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"example1", "example2",    "example3",   "example4",
                                              "example5", "sweep_alpha", "sweep_pure", "sweep_multi"};
  return names;
}

RunConfig make_preset(const std::string& name, const PresetOverrides& ov) {
  auto reject = [&](bool given, const char* what) {
    if (given) throw ConfigError("", std::string(what) + " has no meaning for preset " + name);
  };
  reject(ov.epsilon && name != "example1", "epsilon");
  reject(ov.sigma && name != "example3", "sigma");
  reject(ov.omega.has_value() && name == "example5", "omega");

  const double pi = std::numbers::pi;
  RunConfig c;
  Problem& p = c.problem;
  if (name == "example1") {
    c = base(-10.0, 10.0, 200, 1);
    const double eps = ov.epsilon.value_or(0.1);
    p.alpha = "-x^2";
    p.components = {{"-(" + num(eps) + ")*x^2", ov.omega.value_or(100.0), false, PhaseForm::Cosine}};
    p.psi0 = "exp(-x^2/2)";
  } else if (name == "example2") {
    c = base(-pi, pi, 200, 1);
    p.laplacian_coeff = 1e-3;
    p.alpha = "-1000*x^2";
    p.components = {{"-200*x^2", ov.omega.value_or(500.0), false, PhaseForm::Cosine}};
    p.psi0 = kDoubleGauss;
    // the stiff potential needs h near 1e-4 before the error is small
    c.steps = {1250, 2500, 5000, 10000};
    c.reference.substeps_per_unit = 1'000'000;
  } else if (name == "example3") {
    c = base(-pi, pi, 32, 2);
    const std::string sigma = "(" + num(ov.sigma.value_or(1.0)) + ")";
    p.alpha = "-" + sigma + "*x^2*y^2";
    p.components = {{"-0.2*" + sigma + "*x^2*y^2", ov.omega.value_or(100.0), false, PhaseForm::Cosine}};
    p.psi0 = kDoubleGauss + " + exp(-(y-3)^2/2) + exp(-(y+3)^2/2)";
    c.steps = {8, 16, 32, 64, 128};
  } else if (name == "example4") {
    c = base(-pi, pi, 200, 1);
    p.alpha = "-x^2/(1+t^2)";
    p.components = {{"-0.2*x^2/(1+t^2)", ov.omega.value_or(100.0), false, PhaseForm::Cosine}};
    p.psi0 = kDoubleGauss;
    c.steps = {32, 64, 128, 256, 512};
  } else if (name == "example5") {
    c = base(-pi, pi, 200, 1);
    p.alpha = "-6*x^2";
    for (int k = 0; k <= 5; ++k) p.components.push_back({"-x^2", std::pow(10.0, k), false, PhaseForm::Cosine});
    p.psi0 = kDoubleGauss;
    c.steps = {32, 64, 128, 256, 512};
    c.reference.substeps_per_unit = 1'000'000;
  } else if (name == "sweep_alpha" || name == "sweep_pure" || name == "sweep_multi") {
    c = base(-10.0, 10.0, 64, 1);
    c.steps = {4, 8, 16, 32, 64};
    c.sweep_omegas = {1.0, 10.0, 100.0, 1e3, 1e4};
    c.schemes = {SchemeId::Gamma2};
    p.psi0 = "exp(-x^2/2)";
    if (name == "sweep_alpha") {
      p.alpha = "-x^2";
      p.components = {{"-0.1*x^2", 0.0, true, PhaseForm::Cosine}};
    } else if (name == "sweep_pure") {
      p.alpha = "0";
      p.components = {{"-x^2", 0.0, true, PhaseForm::Cosine}};
    } else {
      p.alpha = "-x^2";
      p.components = {{"-0.1*x^2", 1.0, false, PhaseForm::Cosine},
                      {"-0.1*x^2", 0.0, true, PhaseForm::Cosine}};
    }
    if (ov.omega) c.problem = c.problem.with_omega(*ov.omega);
  } else {
    throw ConfigError("", "unknown preset '" + name + "'");
  }
  if (ov.modes) p.modes = *ov.modes;
  if (ov.steps) c.steps = *ov.steps;
  validate(c);
  return c;
}

}  // namespace oscikg
