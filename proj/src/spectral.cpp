#include "oscikg/spectral.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>
#include <string>

namespace oscikg {

namespace {

// fftw planning is not thread-safe; execution with new-array calls is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

struct SpectralGrid::Plans {
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
};

SpectralGrid::SpectralGrid(double a, double b, int modes, int dim)
    : a_(a), b_(b), modes_(modes), dim_(dim) {
  if (!(b > a) || !std::isfinite(a) || !std::isfinite(b))
    throw GridError("grid extent must satisfy a < b");
  if (modes % 2 != 0) throw GridError("mode count must be even, got " + std::to_string(modes));
  if (modes < 8) throw GridError("mode count must be at least 8, got " + std::to_string(modes));
  if (dim != 1 && dim != 2) throw GridError("dimension must be 1 or 2");

  const auto m = static_cast<std::size_t>(modes);
  const double len = b - a;
  axis_.resize(m);
  kappa_.resize(m);
  for (std::size_t j = 0; j < m; ++j) {
    axis_[j] = a + static_cast<double>(j) * len / static_cast<double>(m);
    // fftfreq ordering; the Nyquist entry is taken as -M/2 (sign irrelevant
    // for the even Laplacian symbol)
    const long k = j < m / 2 ? static_cast<long>(j) : static_cast<long>(j) - static_cast<long>(m);
    kappa_[j] = 2.0 * std::numbers::pi * static_cast<double>(k) / len;
  }

  const std::size_t half = m / 2 + 1;
  if (dim == 1) {
    size_ = m;
    spectral_size_ = half;
    xs_ = axis_;
    symbol_.resize(half);
    fold_weight_.resize(half);
    for (std::size_t j = 0; j < half; ++j) {
      symbol_[j] = -kappa_[j] * kappa_[j];
      fold_weight_[j] = (j == 0 || j == m / 2) ? 1.0 : 2.0;
    }
  } else {
    size_ = m * m;
    spectral_size_ = m * half;
    xs_.resize(size_);
    ys_.resize(size_);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j) {
        xs_[i * m + j] = axis_[i];
        ys_[i * m + j] = axis_[j];
      }
    symbol_.resize(spectral_size_);
    fold_weight_.resize(spectral_size_);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < half; ++j) {
        symbol_[i * half + j] = -(kappa_[i] * kappa_[i] + kappa_[j] * kappa_[j]);
        fold_weight_[i * half + j] = (j == 0 || j == m / 2) ? 1.0 : 2.0;
      }
  }

  plans_ = std::make_unique<Plans>();
  std::vector<double> real(size_);
  std::vector<std::complex<double>> spec(spectral_size_);
  auto* in = real.data();
  auto* out = reinterpret_cast<fftw_complex*>(spec.data());
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  std::lock_guard lock(planner_mutex());
  if (dim == 1) {
    plans_->forward = fftw_plan_dft_r2c_1d(modes, in, out, flags);
    plans_->backward = fftw_plan_dft_c2r_1d(modes, out, in, flags);
  } else {
    plans_->forward = fftw_plan_dft_r2c_2d(modes, modes, in, out, flags);
    plans_->backward = fftw_plan_dft_c2r_2d(modes, modes, out, in, flags);
  }
}

SpectralGrid::~SpectralGrid() {
  if (!plans_) return;
  std::lock_guard lock(planner_mutex());
  if (plans_->forward) fftw_destroy_plan(plans_->forward);
  if (plans_->backward) fftw_destroy_plan(plans_->backward);
}

void SpectralGrid::check_size(std::span<const double> u) const {
  if (u.size() != size_)
    throw GridError("field has " + std::to_string(u.size()) + " entries, grid has " +
                    std::to_string(size_));
}

Field SpectralGrid::laplacian(std::span<const double> u) const { return laplacian_poly(u, 1.0, 0.0); }

Field SpectralGrid::laplacian_poly(std::span<const double> u, double c1, double c2) const {
  check_size(u);
  Field in(u.begin(), u.end());
  std::vector<std::complex<double>> spec(spectral_size_);
  auto* sp = reinterpret_cast<fftw_complex*>(spec.data());
  fftw_execute_dft_r2c(plans_->forward, in.data(), sp);
  const double norm = 1.0 / static_cast<double>(size_);
  for (std::size_t k = 0; k < spectral_size_; ++k) {
    const double lam = symbol_[k];
    spec[k] *= (c1 * lam + c2 * lam * lam) * norm;
  }
  Field out(size_);
  fftw_execute_dft_c2r(plans_->backward, sp, out.data());
  return out;
}

double SpectralGrid::sobolev_norm(std::span<const double> u, double s) const {
  check_size(u);
  Field in(u.begin(), u.end());
  std::vector<std::complex<double>> spec(spectral_size_);
  fftw_execute_dft_r2c(plans_->forward, in.data(), reinterpret_cast<fftw_complex*>(spec.data()));
  double acc = 0.0;
  for (std::size_t k = 0; k < spectral_size_; ++k) {
    const double weight = s == 0.0 ? 1.0 : std::pow(1.0 - symbol_[k], s);
    acc += fold_weight_[k] * weight * std::norm(spec[k]);
  }
  // Parseval: sum |u_j|^2 = sum |u_k|^2 / n, cell volume (L/M)^dim
  const double cell = std::pow(period() / modes_, dim_);
  return std::sqrt(acc * cell / static_cast<double>(size_));
}

double SpectralGrid::rms(std::span<const double> u) {
  if (u.empty()) return 0.0;
  double acc = 0.0;
  for (double v : u) acc += v * v;
  return std::sqrt(acc / static_cast<double>(u.size()));
}

GridPtr make_grid(double a, double b, int modes, int dim) {
  return std::make_shared<const SpectralGrid>(a, b, modes, dim);
}

}  // namespace oscikg
