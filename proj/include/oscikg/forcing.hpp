#pragma once

// The input term f(x,t) = alpha(x,t) + sum_n a_n(x,t) e^{i w_n t} and the
// per-step time integrals the splitting schemes consume.

#include <array>
#include <complex>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "oscikg/expr.hpp"
#include "oscikg/spectral.hpp"

namespace oscikg {

class ForcingError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class PhaseForm { ComplexExp, Cosine, Sine };

struct OscComponent {
  Expr amplitude;
  double omega = 0.0;
  PhaseForm form = PhaseForm::Cosine;
};

struct FrequencyRange {
  double omega_min;
  double omega_max;
};

class ForcingTerm {
 public:
  ForcingTerm() = default;

  /// Validates the components and rewrites every conjugate pair
  /// a e^{iwt} + a e^{-iwt} as the cosine component 2a cos(wt). Throws
  /// ForcingError for unpaired complex exponentials, |w| < 1 on a complex
  /// exponential, or a negative cosine/sine frequency.
  ForcingTerm(Expr alpha, std::vector<OscComponent> components);

  const Expr& alpha() const { return alpha_; }
  /// Canonical real components (Cosine/Sine only).
  const std::vector<OscComponent>& components() const { return components_; }
  std::size_t count() const { return components_.size(); }

  double eval(double x, double y, double t) const;
  /// f(., t) at every grid node.
  void sample(const SpectralGrid& grid, double t, std::span<double> out) const;

  /// (min |w_n|, max |w_n|), or nullopt when there is no oscillatory part.
  std::optional<FrequencyRange> freq_extrema() const;

  bool time_independent() const;

 private:
  Expr alpha_;
  std::vector<OscComponent> components_;
};

/// Repeated evaluation of f(., t) on one grid; time-independent amplitude
/// fields are evaluated once at construction.
class ForcingSampler {
 public:
  ForcingSampler(const ForcingTerm& forcing, const SpectralGrid& grid);
  void sample(double t, std::span<double> out) const;

 private:
  struct Part {
    const Expr* amplitude;
    Field cached;  // empty when the amplitude depends on t
    double omega;
    PhaseForm form;
  };
  const SpectralGrid* grid_;
  std::vector<Part> parts_;
};

/// A real field on a grid tied to the step [t_k, t_k + h] it was computed for.
struct QuadField {
  Field values;
  double t_k = 0.0;
  double h = 0.0;
};

struct StepQuadratures {
  QuadField F;     // int_0^h f(t_k + s) ds
  QuadField Fcal;  // (1/2) int_0^h (s - h/2) f(t_k + s) ds
};

QuadField integral_F(const ForcingTerm& forcing, const SpectralGrid& grid, double t_k, double h);
QuadField integral_Fcal(const ForcingTerm& forcing, const SpectralGrid& grid, double t_k, double h);
/// Both integrals from one set of amplitude samples.
StepQuadratures step_quadratures(const ForcingTerm& forcing, const SpectralGrid& grid, double t_k,
                                 double h);

/// m_j(theta) = int_0^1 u^j e^{i theta u} du for j = 0..4. Taylor series for
/// |theta| < 1, upward recurrence otherwise.
std::array<std::complex<double>, 5> oscillatory_moments(double theta);

/// Filon weights for one frequency: with samples a_i of the amplitude at the
/// four Chebyshev nodes t_k + h*u_i,
///   int_0^h a(s) e^{iw(t_k+s)} ds                ~ sum_i plain[i] a_i
///   (1/2) int_0^h (s-h/2) a(s) e^{iw(t_k+s)} ds  ~ sum_i centred[i] a_i
struct FilonWeights {
  std::array<std::complex<double>, 4> plain;
  std::array<std::complex<double>, 4> centred;
};
FilonWeights filon_weights(double omega, double t_k, double h);
/// Chebyshev interpolation nodes on [0, 1].
const std::array<double, 4>& filon_nodes();

/// Nested oscillatory integral
///   int_0^h int_0^{t_1} ... int_0^{t_{m-1}} a(t_k) e^{i w t_k} dt_m ... dt_1
/// of depth m (1..4) with the oscillation on variable index k (1..m).
/// Composite Gauss-Legendre after collapsing the simplex to one dimension;
/// `panels` = 0 picks a width resolving both h and 2pi/w. Test/analysis use.
std::complex<double> nested_osc_integral(const std::function<double(double)>& amplitude,
                                         double omega, double h, int depth, int index,
                                         int panels = 0);

}  // namespace oscikg
