#pragma once

// JSON run configurations and the built-in example presets.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "oscikg/harness.hpp"

namespace oscikg {

/// Invalid configuration; `pointer()` is the JSON pointer of the offending value.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& pointer, const std::string& message)
      : std::runtime_error((pointer.empty() ? std::string("/") : pointer) + ": " + message),
        pointer_(pointer) {}
  const std::string& pointer() const { return pointer_; }

 private:
  std::string pointer_;
};

struct RunConfig {
  Problem problem;
  std::vector<SchemeId> schemes{SchemeId::Gamma1, SchemeId::Gamma2};
  std::vector<long> steps;
  double norm_s = 0.0;
  ReferenceSpec reference;
  std::string output;
  std::uint64_t seed = 0;
  int jobs = 1;
  int timing_repeats = 1;
  std::vector<double> sweep_omegas;

  StudyOptions study_options() const;
};

/// Parses and validates a config document. Unknown keys, missing required
/// keys, bad expressions and inconsistent values all raise ConfigError.
RunConfig parse_run_config(const std::string& json_text);

/// Serialises every field; parse_run_config(to_json(c)) reproduces c.
std::string to_json(const RunConfig& config);

struct PresetOverrides {
  std::optional<double> omega;
  std::optional<double> epsilon;  // example1 only
  std::optional<double> sigma;    // example3 only
  std::optional<int> modes;
  std::optional<std::vector<long>> steps;
};

/// example1..example5, plus the sweep templates sweep_alpha, sweep_pure and
/// sweep_multi. Throws ConfigError for an unknown name or an override the
/// preset has no parameter for.
RunConfig make_preset(const std::string& name, const PresetOverrides& overrides = {});
const std::vector<std::string>& preset_names();

}  // namespace oscikg
