#pragma once

// Periodic Fourier collocation on 1D/2D tensor grids.

#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

namespace oscikg {

using Field = std::vector<double>;

class GridError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class SpectralGrid {
 public:
  /// Square (1D: interval) periodic grid [a, b)^dim with `modes` points per axis.
  /// Throws GridError for b <= a, odd modes, modes < 8 or dim not in {1, 2}.
  SpectralGrid(double a, double b, int modes, int dim);
  ~SpectralGrid();

  SpectralGrid(const SpectralGrid&) = delete;
  SpectralGrid& operator=(const SpectralGrid&) = delete;

  int dim() const { return dim_; }
  int modes() const { return modes_; }
  double lower() const { return a_; }
  double upper() const { return b_; }
  double period() const { return b_ - a_; }
  std::size_t size() const { return size_; }

  /// Coordinates of every node, row-major (x varies slowest in 2D). ys() is
  /// empty in 1D.
  std::span<const double> xs() const { return xs_; }
  std::span<const double> ys() const { return ys_; }
  /// The 1D node set of one axis.
  std::span<const double> axis_nodes() const { return axis_; }
  /// Signed wavenumbers of one axis in FFT order.
  std::span<const double> axis_wavenumbers() const { return kappa_; }

  Field laplacian(std::span<const double> u) const;

  /// c1*Lap(u) + c2*Lap(Lap(u)) with a single transform pair.
  Field laplacian_poly(std::span<const double> u, double c1, double c2) const;

  /// Sobolev H^s norm on the torus; s = 0 is the L2 norm.
  double sobolev_norm(std::span<const double> u, double s) const;

  /// sqrt(mean(u^2)): the node-count normalised discrete l2 norm.
  static double rms(std::span<const double> u);

 private:
  struct Plans;

  void check_size(std::span<const double> u) const;

  double a_;
  double b_;
  int modes_;
  int dim_;
  std::size_t size_;
  std::size_t spectral_size_;
  std::vector<double> axis_;
  std::vector<double> kappa_;
  std::vector<double> xs_;
  std::vector<double> ys_;
  // -|kappa|^2 and the mode weight (2 for conjugate-folded r2c entries)
  std::vector<double> symbol_;
  std::vector<double> fold_weight_;
  std::unique_ptr<Plans> plans_;
};

using GridPtr = std::shared_ptr<const SpectralGrid>;

GridPtr make_grid(double a, double b, int modes, int dim);

}  // namespace oscikg
