#include "oscikg/matfun.hpp"

#include <cmath>

namespace oscikg {

namespace {

// Below this |z| the series is used; 12 terms reach 1e-30 relative there.
constexpr double kSeriesCutoff = 0.25;
constexpr int kSeriesTerms = 12;

}  // namespace

double cosh_sqrt(double z) {
  if (std::abs(z) < kSeriesCutoff) {
    double term = 1.0;
    double sum = 1.0;
    for (int k = 1; k < kSeriesTerms; ++k) {
      term *= z / ((2.0 * k - 1.0) * (2.0 * k));
      sum += term;
    }
    return sum;
  }
  if (z > 0.0) return std::cosh(std::sqrt(z));
  return std::cos(std::sqrt(-z));
}

double sinhc_sqrt(double z) {
  if (std::abs(z) < kSeriesCutoff) {
    double term = 1.0;
    double sum = 1.0;
    for (int k = 1; k < kSeriesTerms; ++k) {
      term *= z / ((2.0 * k) * (2.0 * k + 1.0));
      sum += term;
    }
    return sum;
  }
  if (z > 0.0) {
    const double r = std::sqrt(z);
    return std::sinh(r) / r;
  }
  const double r = std::sqrt(-z);
  return std::sin(r) / r;
}

InnerFactorEntries inner_factor(std::span<const double> F, double h) {
  InnerFactorEntries e{Field(F.size()), Field(F.size()), Field(F.size())};
  for (std::size_t i = 0; i < F.size(); ++i) {
    const double z = 0.25 * h * F[i];
    const double sc = sinhc_sqrt(z);
    e.c[i] = cosh_sqrt(z);
    e.s[i] = 0.5 * h * sc;
    e.sf[i] = 0.5 * F[i] * sc;
  }
  return e;
}

}  // namespace oscikg
