#pragma once

// Even entire functions of sqrt(z), real for every real z, and the pointwise
// 2x2 factor exp([[0, h/2], [F/2, 0]]) built from them.

#include <span>

#include "oscikg/spectral.hpp"

namespace oscikg {

/// sum z^k / (2k)!  (cosh(sqrt z) for z > 0, cos(sqrt(-z)) for z < 0).
double cosh_sqrt(double z);

/// sum z^k / (2k+1)!  (sinh(sqrt z)/sqrt z for z > 0, sin(sqrt(-z))/sqrt(-z) for z < 0).
double sinhc_sqrt(double z);

/// Per-node entries of [[c, s], [sf, c]] = exp([[0, h/2], [F/2, 0]]):
/// with z = h F / 4, c = cosh_sqrt(z), s = (h/2) sinhc_sqrt(z),
/// sf = (F/2) sinhc_sqrt(z).
struct InnerFactorEntries {
  Field c;
  Field s;
  Field sf;
};

InnerFactorEntries inner_factor(std::span<const double> F, double h);

}  // namespace oscikg
