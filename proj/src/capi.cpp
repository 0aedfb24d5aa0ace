#include "oscikg/oscikg.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <new>
#include <sstream>

#include "json.hpp"
#include "oscikg/config.hpp"

using namespace oscikg;

struct oscikg_config {
  RunConfig cfg;
};

struct oscikg_state {
  GridPtr grid;
  State state;
  SchemeId scheme;
  long n_steps;
  double h;
  double runtime_s;
};

struct oscikg_report {
  std::vector<ConvergenceReport> reports;
  std::vector<double> fitted;  // one per sweep table
};

namespace {

struct ArgumentError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

thread_local std::string g_error;
thread_local std::string g_pointer;
thread_local long g_step = -1;

oscikg_status fail(oscikg_status code, const std::string& message) {
  g_error = message;
  return code;
}

template <class Fn>
oscikg_status guarded(Fn&& fn) {
  g_error.clear();
  g_pointer.clear();
  g_step = -1;
  try {
    fn();
    return OSCIKG_OK;
  } catch (const ConfigError& e) {
    g_pointer = e.pointer();
    return fail(OSCIKG_ERR_CONFIG, e.what());
  } catch (const NumericalError& e) {
    g_step = e.step();
    return fail(OSCIKG_ERR_NUMERICAL, e.what());
  } catch (const ArgumentError& e) {
    return fail(OSCIKG_ERR_ARGUMENT, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(OSCIKG_ERR_CONFIG, e.what());
  } catch (const IoError& e) {
    return fail(OSCIKG_ERR_IO, e.what());
  } catch (const std::bad_alloc&) {
    return fail(OSCIKG_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(OSCIKG_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(OSCIKG_ERR_INTERNAL, "unknown error");
  }
}

template <class T>
void require(const T* p, const char* what) {
  if (!p) throw ArgumentError(std::string(what) + " is NULL");
}

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

PresetOverrides parse_overrides(const char* text) {
  PresetOverrides ov;
  if (!text || !*text) return ov;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("", std::string("malformed overrides: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("", "overrides must be an object");
  for (const auto& [key, v] : j.items()) {
    const std::string ptr = "/" + key;
    if (key == "steps") {
      if (!v.is_array()) throw ConfigError(ptr, "expected an array");
      std::vector<long> steps;
      for (const auto& s : v) {
        if (!s.is_number_integer()) throw ConfigError(ptr, "expected integers");
        steps.push_back(s.get<long>());
      }
      ov.steps = steps;
    } else if (key == "modes") {
      if (!v.is_number_integer()) throw ConfigError(ptr, "expected an integer");
      ov.modes = v.get<int>();
    } else if (key == "omega" || key == "epsilon" || key == "sigma") {
      if (!v.is_number()) throw ConfigError(ptr, "expected a number");
      (key == "omega" ? ov.omega : key == "epsilon" ? ov.epsilon : ov.sigma) = v.get<double>();
    } else {
      throw ConfigError(ptr, "unknown override");
    }
  }
  return ov;
}

// Re-validates after a setter by a JSON round trip.
void revalidate(RunConfig& cfg) { cfg = parse_run_config(to_json(cfg)); }

const Problem& bound_problem(const RunConfig& cfg) {
  if (cfg.problem.has_placeholder())
    throw ConfigError("/problem/forcing/components", "frequency placeholder is unbound; set omega");
  return cfg.problem;
}

void sort_reports(std::vector<ConvergenceReport>& reports) {
  auto key = [](const ConvergenceReport& r) {
    return std::make_tuple(static_cast<int>(r.scheme), r.freq ? r.freq->omega_min : -1.0,
                           r.freq ? r.freq->omega_max : -1.0);
  };
  std::stable_sort(reports.begin(), reports.end(),
                   [&](const auto& a, const auto& b) { return key(a) < key(b); });
}

}  // namespace

extern "C" {

const char* oscikg_version(void) { return "1.0.0"; }
const char* oscikg_last_error(void) { return g_error.c_str(); }
const char* oscikg_last_error_pointer(void) { return g_pointer.c_str(); }
long oscikg_last_error_step(void) { return g_step; }
void oscikg_string_free(char* s) { std::free(s); }

oscikg_status oscikg_config_from_json(const char* json, oscikg_config** out) {
  return guarded([&] {
    require(json, "json");
    require(out, "out");
    *out = new oscikg_config{parse_run_config(json)};
  });
}

oscikg_status oscikg_config_from_preset(const char* name, const char* overrides_json, oscikg_config** out) {
  return guarded([&] {
    require(name, "name");
    require(out, "out");
    *out = new oscikg_config{make_preset(name, parse_overrides(overrides_json))};
  });
}

oscikg_status oscikg_preset_json(const char* name, const char* overrides_json, char** out_json) {
  return guarded([&] {
    require(name, "name");
    require(out_json, "out_json");
    *out_json = dup(to_json(make_preset(name, parse_overrides(overrides_json))));
  });
}

oscikg_status oscikg_preset_names(char** out) {
  return guarded([&] {
    require(out, "out");
    std::string s;
    for (const auto& n : preset_names()) s += n + "\n";
    *out = dup(s);
  });
}

oscikg_status oscikg_config_to_json(const oscikg_config* cfg, char** out_json) {
  return guarded([&] {
    require(cfg, "cfg");
    require(out_json, "out_json");
    *out_json = dup(to_json(cfg->cfg));
  });
}

oscikg_status oscikg_config_set_omega(oscikg_config* cfg, double omega) {
  return guarded([&] {
    require(cfg, "cfg");
    RunConfig next = cfg->cfg;
    try {
      next.problem = next.problem.with_omega(omega);
    } catch (const std::invalid_argument& e) {
      throw ConfigError("/problem/forcing/components", e.what());
    }
    revalidate(next);
    cfg->cfg = std::move(next);
  });
}

oscikg_status oscikg_config_set_steps(oscikg_config* cfg, const long* steps, size_t count) {
  return guarded([&] {
    require(cfg, "cfg");
    if (count > 0) require(steps, "steps");
    RunConfig next = cfg->cfg;
    next.steps.assign(steps, steps + count);
    revalidate(next);
    cfg->cfg = std::move(next);
  });
}

oscikg_status oscikg_config_set_modes(oscikg_config* cfg, int modes) {
  return guarded([&] {
    require(cfg, "cfg");
    RunConfig next = cfg->cfg;
    next.problem.modes = modes;
    revalidate(next);
    cfg->cfg = std::move(next);
  });
}

oscikg_status oscikg_config_set_schemes(oscikg_config* cfg, const char* schemes) {
  return guarded([&] {
    require(cfg, "cfg");
    require(schemes, "schemes");
    std::vector<SchemeId> ids;
    std::stringstream ss(schemes);
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        ids.push_back(parse_scheme(item));
      } catch (const std::invalid_argument& e) {
        throw ConfigError("/schemes", e.what());
      }
    }
    if (ids.empty()) throw ConfigError("/schemes", "needs at least one scheme");
    cfg->cfg.schemes = ids;
  });
}

oscikg_status oscikg_config_set_jobs(oscikg_config* cfg, int jobs) {
  return guarded([&] {
    require(cfg, "cfg");
    if (jobs < 1) throw ConfigError("/jobs", "must be at least 1");
    cfg->cfg.jobs = jobs;
  });
}

oscikg_status oscikg_config_set_norm_s(oscikg_config* cfg, double s) {
  return guarded([&] {
    require(cfg, "cfg");
    if (!(s >= 0.0) || !std::isfinite(s)) throw ConfigError("/norm_s", "must be finite and non-negative");
    cfg->cfg.norm_s = s;
  });
}

oscikg_status oscikg_config_set_cache_dir(oscikg_config* cfg, const char* dir) {
  return guarded([&] {
    require(cfg, "cfg");
    cfg->cfg.reference.cache_dir = dir ? dir : "";
  });
}

oscikg_status oscikg_config_min_stable_steps(const oscikg_config* cfg, long* out) {
  return guarded([&] {
    require(cfg, "cfg");
    require(out, "out");
    const Problem& p = cfg->cfg.problem;
    *out = static_cast<long>(std::ceil((p.T - p.t0) / max_stable_step(p)));
  });
}

void oscikg_config_free(oscikg_config* cfg) { delete cfg; }

oscikg_status oscikg_run(const oscikg_config* cfg, const char* scheme, long n_steps, oscikg_state** out) {
  return guarded([&] {
    require(cfg, "cfg");
    require(out, "out");
    const RunConfig& c = cfg->cfg;
    if (n_steps < 0) throw ArgumentError("n_steps must be non-negative");
    SchemeId id = c.schemes.front();
    if (scheme) {
      try {
        id = parse_scheme(scheme);
      } catch (const std::invalid_argument& e) {
        throw ArgumentError(e.what());
      }
    }
    const long n = n_steps > 0 ? n_steps : c.steps.back();
    const Problem& problem = bound_problem(c);
    const WaveSystem system = problem.system();
    IntegrateOptions opts;
    opts.reference = c.reference.options;
    const double h = (problem.T - problem.t0) / static_cast<double>(n);
    opts.reference_substeps =
        std::max(1L, static_cast<long>(std::ceil(static_cast<double>(c.reference.substeps_per_unit) * h)));
    const auto start = std::chrono::steady_clock::now();
    State result = integrate(id, system, problem.initial_state(*system.grid), problem.T, n, opts);
    const double runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    *out = new oscikg_state{system.grid, std::move(result), id, n, h, runtime};
  });
}

size_t oscikg_state_size(const oscikg_state* st) { return st ? st->state.psi.size() : 0; }
double oscikg_state_time(const oscikg_state* st) { return st ? st->state.t : 0.0; }

oscikg_status oscikg_state_psi(const oscikg_state* st, double* out, size_t capacity) {
  return guarded([&] {
    require(st, "state");
    require(out, "out");
    if (capacity < st->state.psi.size()) throw ArgumentError("output buffer too small");
    std::copy(st->state.psi.begin(), st->state.psi.end(), out);
  });
}

oscikg_status oscikg_state_dpsi(const oscikg_state* st, double* out, size_t capacity) {
  return guarded([&] {
    require(st, "state");
    require(out, "out");
    if (capacity < st->state.dpsi.size()) throw ArgumentError("output buffer too small");
    std::copy(st->state.dpsi.begin(), st->state.dpsi.end(), out);
  });
}

oscikg_status oscikg_state_write_snapshot(const oscikg_state* st, const char* path) {
  return guarded([&] {
    require(st, "state");
    require(path, "path");
    try {
      write_snapshot(path, *st->grid, st->state);
    } catch (const std::runtime_error& e) {
      throw IoError(e.what());
    }
  });
}

oscikg_status oscikg_state_summary_json(const oscikg_state* st, char** out_json) {
  return guarded([&] {
    require(st, "state");
    require(out_json, "out_json");
    nlohmann::json j = {{"scheme", to_string(st->scheme)},
                        {"n_steps", st->n_steps},
                        {"h", st->h},
                        {"t", st->state.t},
                        {"modes", st->grid->modes()},
                        {"dim", st->grid->dim()},
                        {"psi_l2", st->grid->sobolev_norm(st->state.psi, 0.0)},
                        {"psi_rms", SpectralGrid::rms(st->state.psi)},
                        {"runtime_s", st->runtime_s}};
    *out_json = dup(j.dump(2));
  });
}

void oscikg_state_free(oscikg_state* st) { delete st; }

oscikg_status oscikg_converge(const oscikg_config* cfg, oscikg_report** out) {
  return guarded([&] {
    require(cfg, "cfg");
    require(out, "out");
    const RunConfig& c = cfg->cfg;
    const Problem& problem = bound_problem(c);
    const StudyOptions opts = c.study_options();
    const double finest = static_cast<double>(c.steps.back());
    if (static_cast<double>(opts.reference.substeps_per_unit) < 100.0 * finest)
      throw ConfigError("/reference/substeps_per_unit", "must be at least 100x the largest step count");
    const State reference = reference_solution(problem, opts.reference);
    auto rep = std::make_unique<oscikg_report>();
    for (SchemeId id : c.schemes)
      rep->reports.push_back(run_convergence_study(problem, id, c.steps, reference, opts));
    sort_reports(rep->reports);
    *out = rep.release();
  });
}

oscikg_status oscikg_sweep(const oscikg_config* cfg, oscikg_report** out) {
  return guarded([&] {
    require(cfg, "cfg");
    require(out, "out");
    const RunConfig& c = cfg->cfg;
    if (c.sweep_omegas.empty()) throw ConfigError("/sweep/omegas", "a sweep needs at least one frequency");
    auto rep = std::make_unique<oscikg_report>();
    for (SchemeId id : c.schemes) {
      RegimeTable table = regime_sweep(c.problem, c.sweep_omegas, c.steps, id, c.study_options());
      rep->fitted.push_back(table.fitted_constant);
      for (auto& r : table.reports) rep->reports.push_back(std::move(r));
    }
    sort_reports(rep->reports);
    *out = rep.release();
  });
}

size_t oscikg_report_rows(const oscikg_report* rep) {
  if (!rep) return 0;
  size_t n = 0;
  for (const auto& r : rep->reports) n += r.rows.size();
  return n;
}

oscikg_status oscikg_report_csv(const oscikg_report* rep, char** out_csv) {
  return guarded([&] {
    require(rep, "report");
    require(out_csv, "out_csv");
    *out_csv = dup(to_csv(rep->reports));
  });
}

oscikg_status oscikg_report_table(const oscikg_report* rep, char** out_text) {
  return guarded([&] {
    require(rep, "report");
    require(out_text, "out_text");
    std::string text = format_table(rep->reports);
    for (double c : rep->fitted) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "fitted bound constant C = %.4e\n", c);
      text += buf;
    }
    *out_text = dup(text);
  });
}

void oscikg_report_free(oscikg_report* rep) { delete rep; }

}  // extern "C"
