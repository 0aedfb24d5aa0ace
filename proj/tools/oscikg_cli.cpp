// Command-line front end over the C API.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "oscikg/oscikg.h"

namespace {

struct Options {
  std::string config_path;
  std::string preset;
  std::string scheme;
  std::vector<long> steps;
  std::optional<int> modes;
  std::optional<double> omega;
  std::optional<double> epsilon;
  std::optional<double> sigma;
  std::string out;
  std::optional<int> jobs;
  std::optional<double> norm_s;
  std::string cache_dir;
};

int exit_code(oscikg_status st) {
  switch (st) {
    case OSCIKG_OK: return 0;
    case OSCIKG_ERR_CONFIG: return 2;
    case OSCIKG_ERR_NUMERICAL: return 3;
    default: return 1;
  }
}

// Prints the library error and returns the process exit code.
int report(oscikg_status st) {
  if (st == OSCIKG_OK) return 0;
  std::cerr << "error: " << oscikg_last_error() << '\n';
  if (st == OSCIKG_ERR_NUMERICAL && oscikg_last_error_step() >= 0)
    std::cerr << "aborted at step " << oscikg_last_error_step() << '\n';
  return exit_code(st);
}

struct Owned {
  char* p = nullptr;
  ~Owned() { oscikg_string_free(p); }
};

bool write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::trunc);
  f << text;
  return static_cast<bool>(f);
}

std::string overrides_json(const Options& o) {
  nlohmann::json j = nlohmann::json::object();
  if (o.omega) j["omega"] = *o.omega;
  if (o.epsilon) j["epsilon"] = *o.epsilon;
  if (o.sigma) j["sigma"] = *o.sigma;
  if (o.modes) j["modes"] = *o.modes;
  if (!o.steps.empty()) j["steps"] = o.steps;
  return j.dump();
}

// Builds the config from --config or --preset plus flag overrides.
oscikg_status load(const Options& o, oscikg_config** cfg) {
  oscikg_status st;
  if (!o.config_path.empty()) {
    if (!o.preset.empty()) {
      std::cerr << "error: --config and --preset are mutually exclusive\n";
      return OSCIKG_ERR_CONFIG;
    }
    if (o.epsilon || o.sigma) {
      std::cerr << "error: --epsilon/--sigma only apply to presets\n";
      return OSCIKG_ERR_CONFIG;
    }
    std::ifstream f(o.config_path);
    if (!f) {
      std::cerr << "error: cannot read " << o.config_path << '\n';
      return OSCIKG_ERR_CONFIG;
    }
    std::stringstream ss;
    ss << f.rdbuf();
    if ((st = oscikg_config_from_json(ss.str().c_str(), cfg)) != OSCIKG_OK) return st;
    if (o.omega && (st = oscikg_config_set_omega(*cfg, *o.omega)) != OSCIKG_OK) return st;
    if (o.modes && (st = oscikg_config_set_modes(*cfg, *o.modes)) != OSCIKG_OK) return st;
    if (!o.steps.empty() &&
        (st = oscikg_config_set_steps(*cfg, o.steps.data(), o.steps.size())) != OSCIKG_OK)
      return st;
  } else if (!o.preset.empty()) {
    if ((st = oscikg_config_from_preset(o.preset.c_str(), overrides_json(o).c_str(), cfg)) != OSCIKG_OK)
      return st;
  } else {
    std::cerr << "error: one of --config or --preset is required\n";
    return OSCIKG_ERR_CONFIG;
  }
  if (!o.scheme.empty() && (st = oscikg_config_set_schemes(*cfg, o.scheme.c_str())) != OSCIKG_OK) return st;
  if (o.jobs && (st = oscikg_config_set_jobs(*cfg, *o.jobs)) != OSCIKG_OK) return st;
  if (o.norm_s && (st = oscikg_config_set_norm_s(*cfg, *o.norm_s)) != OSCIKG_OK) return st;
  if (!o.cache_dir.empty() && (st = oscikg_config_set_cache_dir(*cfg, o.cache_dir.c_str())) != OSCIKG_OK)
    return st;
  return OSCIKG_OK;
}

std::string config_output(const oscikg_config* cfg) {
  Owned js;
  if (oscikg_config_to_json(cfg, &js.p) != OSCIKG_OK) return {};
  return nlohmann::json::parse(js.p).value("output", "");
}

// Advisory only: smooth data often survives a few steps past the limit.
void warn_if_unstable(const oscikg_config* cfg, bool largest_only) {
  long needed = 0;
  Owned js;
  if (oscikg_config_min_stable_steps(cfg, &needed) != OSCIKG_OK || oscikg_config_to_json(cfg, &js.p) != OSCIKG_OK)
    return;
  const auto steps = nlohmann::json::parse(js.p).at("steps").get<std::vector<long>>();
  const long used = largest_only ? steps.back() : steps.front();
  if (used < needed)
    std::cerr << "warning: " << used << " steps exceed the step-size stability limit for this grid; "
              << needed << " or more keep every mode bounded\n";
}

int cmd_run(const Options& o) {
  oscikg_config* cfg = nullptr;
  oscikg_status st = load(o, &cfg);
  std::unique_ptr<oscikg_config, void (*)(oscikg_config*)> guard(cfg, oscikg_config_free);
  if (st != OSCIKG_OK) return report(st);

  warn_if_unstable(cfg, true);
  oscikg_state* state = nullptr;
  if ((st = oscikg_run(cfg, nullptr, 0, &state)) != OSCIKG_OK) return report(st);
  std::unique_ptr<oscikg_state, void (*)(oscikg_state*)> sguard(state, oscikg_state_free);

  std::string out = o.out.empty() ? config_output(cfg) : o.out;
  if (out.empty()) out = "final_state.bin";
  if ((st = oscikg_state_write_snapshot(state, out.c_str())) != OSCIKG_OK) return report(st);
  Owned summary;
  if ((st = oscikg_state_summary_json(state, &summary.p)) != OSCIKG_OK) return report(st);
  if (!write_text(out + ".json", std::string(summary.p) + "\n")) {
    std::cerr << "error: cannot write " << out << ".json\n";
    return 1;
  }
  std::cout << summary.p << '\n';
  return 0;
}

int cmd_study(const Options& o, bool sweep) {
  oscikg_config* cfg = nullptr;
  oscikg_status st = load(o, &cfg);
  std::unique_ptr<oscikg_config, void (*)(oscikg_config*)> guard(cfg, oscikg_config_free);
  if (st != OSCIKG_OK) return report(st);

  warn_if_unstable(cfg, false);
  oscikg_report* rep = nullptr;
  st = sweep ? oscikg_sweep(cfg, &rep) : oscikg_converge(cfg, &rep);
  if (st != OSCIKG_OK) return report(st);
  std::unique_ptr<oscikg_report, void (*)(oscikg_report*)> rguard(rep, oscikg_report_free);

  Owned csv, table;
  if ((st = oscikg_report_csv(rep, &csv.p)) != OSCIKG_OK) return report(st);
  if ((st = oscikg_report_table(rep, &table.p)) != OSCIKG_OK) return report(st);
  const std::string out = o.out.empty() ? config_output(cfg) : o.out;
  if (out.empty() || out == "-") {
    std::cout << csv.p;
    std::cerr << table.p;
  } else {
    if (!write_text(out, csv.p)) {
      std::cerr << "error: cannot write " << out << '\n';
      return 1;
    }
    std::cout << table.p;
  }
  return 0;
}

int cmd_preset(const Options& o, const std::string& positional) {
  const std::string name = positional.empty() ? o.preset : positional;
  if (name.empty()) {
    Owned names;
    oscikg_preset_names(&names.p);
    std::cerr << "error: preset name required; available:\n" << names.p;
    return 2;
  }
  Owned js;
  const oscikg_status st = oscikg_preset_json(name.c_str(), overrides_json(o).c_str(), &js.p);
  if (st != OSCIKG_OK) return report(st);
  if (o.out.empty() || o.out == "-") {
    std::cout << js.p << '\n';
  } else if (!write_text(o.out, std::string(js.p) + "\n")) {
    std::cerr << "error: cannot write " << o.out << '\n';
    return 1;
  }
  return 0;
}

void add_common(CLI::App* sub, Options& o, bool problem_flags) {
  sub->add_option("--preset", o.preset, "Built-in example name");
  sub->add_option("--out", o.out, "Output path");
  sub->add_option("--omega", o.omega, "Frequency override");
  sub->add_option("--epsilon", o.epsilon, "Example 1 amplitude");
  sub->add_option("--sigma", o.sigma, "Example 3 scale");
  sub->add_option("--modes", o.modes, "Modes per axis");
  sub->add_option("--steps", o.steps, "Step counts, e.g. 1,2,4,8")->delimiter(',');
  if (!problem_flags) return;
  sub->add_option("--config", o.config_path, "JSON run configuration")->check(CLI::ExistingFile);
  sub->add_option("--scheme", o.scheme, "gamma1, gamma2 or reference (comma separated)");
  sub->add_option("--jobs", o.jobs, "Worker threads")->check(CLI::PositiveNumber);
  sub->add_option("--norm-s", o.norm_s, "Also report the H^s error");
  sub->add_option("--cache-dir", o.cache_dir, "Reference solution cache directory");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Time integration for linear Klein-Gordon equations with oscillatory input terms"};
  app.require_subcommand(1);
  Options o;
  std::string preset_name;

  auto* run = app.add_subcommand("run", "Integrate once and write the final state");
  auto* converge = app.add_subcommand("converge", "Convergence study against a reference");
  auto* sweep = app.add_subcommand("sweep", "Frequency sweep with the predicted bound");
  auto* preset = app.add_subcommand("preset", "Print a preset configuration as JSON");
  for (auto* sub : {run, converge, sweep}) add_common(sub, o, true);
  add_common(preset, o, false);
  preset->add_option("name", preset_name, "Preset name");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (*run) return cmd_run(o);
  if (*converge) return cmd_study(o, false);
  if (*sweep) return cmd_study(o, true);
  return cmd_preset(o, preset_name);
}
