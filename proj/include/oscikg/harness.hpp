#pragma once

// Convergence studies, regime sweeps and the cached reference solutions
// they are measured against.

#include <optional>
#include <string>
#include <vector>

#include "oscikg/integrator.hpp"

namespace oscikg {

struct ComponentSpec {
  std::string amplitude;
  double omega = 0.0;
  /// The frequency is a sweep placeholder; `omega` is ignored until bound.
  bool omega_placeholder = false;
  PhaseForm form = PhaseForm::Cosine;
};

struct Problem {
  double lower = -1.0;
  double upper = 1.0;
  int modes = 64;
  int dim = 1;
  double laplacian_coeff = 1.0;
  std::string alpha = "0";
  std::vector<ComponentSpec> components;
  std::string psi0 = "0";
  std::string phi0 = "0";
  double t0 = 0.0;
  double T = 1.0;

  bool has_placeholder() const;
  /// Binds every placeholder frequency (or the only component when there is
  /// no placeholder) to `omega`.
  Problem with_omega(double omega) const;

  ForcingTerm forcing() const;
  WaveSystem system() const;
  State initial_state(const SpectralGrid& grid) const;
};

/// Stable text form of a problem (sorted keys, 17-digit numbers); the cache key.
std::string canonical_json(const Problem& problem);

struct ReferenceSpec {
  long substeps_per_unit = 100000;
  ReferenceOptions options{ReferenceMode::MatrixFree, ReferenceRule::GaussMagnus4};
  /// Directory for cached reference states; empty disables caching.
  std::string cache_dir;

  std::string descriptor() const;
};

/// Reference state at problem.T. Cached under cache_dir by the SHA-256 of the
/// canonical problem plus the reference settings; unreadable entries are recomputed.
State reference_solution(const Problem& problem, const ReferenceSpec& spec);

std::string sha256_hex(const std::string& data);

// Binary snapshot: "OSCIKG1\0", uint32 dim, uint32 modes per axis, then psi
// and psi_t as little-endian IEEE-754 doubles.
void write_snapshot(const std::string& path, const SpectralGrid& grid, const State& state);
/// Throws std::runtime_error on a malformed file or a grid mismatch.
State read_snapshot(const std::string& path, const SpectralGrid& grid);

struct OrderEstimate {
  double slope = 0.0;
  bool clamped = false;  // some error was zero and clamped to 1e-16
};

/// Least-squares slope of log(error) against log(h).
OrderEstimate estimate_order(const std::vector<double>& errors, const std::vector<double>& hs);

/// Errors below this are roundoff; no orders are computed from them.
inline constexpr double kNoiseFloor = 1e-12;

/// log(e_i/e_{i+1}) / log(h_i/h_{i+1}) for each adjacent pair; nullopt when
/// either error is below the noise floor.
std::vector<std::optional<double>> pairwise_orders(const std::vector<double>& errors,
                                                   const std::vector<double>& hs);

/// min{h^3, h^2/w_min, h^5 w_max^2}, plus h^5 when alpha != 0; h^5 alone
/// when there is no oscillatory part.
double local_error_bound(double h, const std::optional<FrequencyRange>& freq, bool alpha_nonzero);

/// Largest h with h sqrt(c) |k|_max < 2 sqrt(3). Beyond it the explicit
/// Laplacian stages of both schemes amplify the highest modes.
double max_stable_step(const Problem& problem);

/// Local exponent max{3, 2+rho, 5-2rho} for w_min = w_max = h^-rho.
double regime_exponent(double rho);

struct ConvergenceRow {
  long n_steps = 0;
  double h = 0.0;
  double error_l2 = 0.0;
  std::optional<double> error_hs;
  double runtime_s = 0.0;
  std::optional<double> order;
  double bound = 0.0;  // predicted global error, (T - t0) * local bound / h
};

struct ConvergenceReport {
  SchemeId scheme = SchemeId::Gamma1;
  int modes = 0;
  std::optional<FrequencyRange> freq;
  std::vector<ConvergenceRow> rows;
  std::string reference;
};

struct StudyOptions {
  double norm_s = 0.0;
  ReferenceSpec reference;
  int jobs = 1;
  int timing_repeats = 1;
};

ConvergenceReport run_convergence_study(const Problem& problem, SchemeId scheme,
                                        const std::vector<long>& steps,
                                        const StudyOptions& options = {});

/// Same as above against a precomputed reference state.
ConvergenceReport run_convergence_study(const Problem& problem, SchemeId scheme,
                                        const std::vector<long>& steps, const State& reference,
                                        const StudyOptions& options = {});

struct RegimeTable {
  SchemeId scheme = SchemeId::Gamma1;
  int modes = 0;
  std::vector<double> omegas;
  std::vector<ConvergenceReport> reports;  // one per omega, rows sorted by h descending
  double fitted_constant = 1.0;
  bool alpha_nonzero = true;
};

RegimeTable regime_sweep(const Problem& problem_template, const std::vector<double>& omegas,
                         const std::vector<long>& steps, SchemeId scheme,
                         const StudyOptions& options = {});

inline constexpr const char* kCsvHeader =
    "scheme,omega_min,omega_max,M,n_steps,h,error_l2,order_est,runtime_s,bound";

std::string to_csv(const std::vector<ConvergenceReport>& reports, bool header = true);
std::string to_csv(const RegimeTable& table, bool header = true);

/// Human-readable order table.
std::string format_table(const std::vector<ConvergenceReport>& reports);

}  // namespace oscikg
