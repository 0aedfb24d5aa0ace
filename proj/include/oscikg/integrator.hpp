#pragma once

// Time steppers for the first-order form of  psi_tt = c Lap(psi) + f(x,t) psi:
//   z = [psi, psi_t],  z' = [[0, 1], [c Lap + f(t), 0]] z.
//
// Gamma1 and Gamma2 are the fourth-order Magnus / Strang / compact-splitting
// steps. Reference is an independent oracle: many small exponential Magnus
// sub-steps, with the exponential applied either densely or by a truncated
// Taylor series.

#include <cstddef>
#include <stdexcept>
#include <string>

#include "oscikg/forcing.hpp"
#include "oscikg/spectral.hpp"

namespace oscikg {

struct State {
  Field psi;
  Field dpsi;
  double t = 0.0;
};

struct WaveSystem {
  GridPtr grid;
  ForcingTerm forcing;
  double laplacian_coeff = 1.0;
};

enum class SchemeId { Gamma1, Gamma2, Reference };

std::string to_string(SchemeId id);
/// Accepts "gamma1", "gamma2", "reference"; throws std::invalid_argument otherwise.
SchemeId parse_scheme(const std::string& name);

/// Quadratures for one pending step [t_k, t_k + h].
struct StepContext {
  const WaveSystem* system = nullptr;
  double t_k = 0.0;
  double h = 0.0;
  QuadField F;
  QuadField Fcal;
  /// D = d_scale * Lap, i.e. h * c.
  double d_scale = 0.0;
};

StepContext make_step_context(const WaveSystem& system, double t_k, double h);

class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, long step) : std::runtime_error(what), step_(step) {}
  long step() const { return step_; }

 private:
  long step_;
};

/// The outer factor diag(exp(-sign*Fcal), exp(+sign*Fcal)). Throws
/// NumericalError when |Fcal| exceeds the exp overflow guard.
State outer_exponential(const State& state, std::span<const double> Fcal, int sign);

State step_gamma1(const State& state, const StepContext& ctx);
State step_gamma2(const State& state, const StepContext& ctx);

enum class ReferenceMode { MatrixFree, Dense };
enum class ReferenceRule {
  Midpoint,     // exp(d A(t + d/2)), second order
  GaussMagnus4  // two Gauss nodes plus the commutator term, fourth order
};

struct ReferenceOptions {
  ReferenceMode mode = ReferenceMode::MatrixFree;
  ReferenceRule rule = ReferenceRule::Midpoint;
};

/// Largest node count accepted in dense mode (1D; 2D uses 32x32).
inline constexpr std::size_t kDenseLimit1D = 128;
inline constexpr std::size_t kDenseLimit2D = 32 * 32;

State step_reference(const State& state, const StepContext& ctx, long substeps,
                     const ReferenceOptions& options = {});

struct IntegrateOptions {
  ReferenceOptions reference;
  long reference_substeps = 1000;  // per macro step, Reference scheme only
};

/// n_steps uniform steps from state0.t to T; t_k = t0 + k h from integers.
/// Throws NumericalError (with the step index) if the state stops being finite.
State integrate(SchemeId scheme, const WaveSystem& system, const State& state0, double T,
                long n_steps, const IntegrateOptions& options = {});

}  // namespace oscikg
