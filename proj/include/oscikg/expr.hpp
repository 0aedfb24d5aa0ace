#pragma once

// Closed-form space-time expressions used for forcing amplitudes and
// initial data: arithmetic, powers, exp/sin/cos/sqrt/log/abs, the
// variables x, y, t and the constant pi.

#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace oscikg {

class ExprError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class Expr {
 public:
  struct Node;

  Expr();  // the constant 0
  /// Parses `source`; throws ExprError with the offending column on failure.
  explicit Expr(const std::string& source);

  static Expr constant(double value);

  /// factor * (*this), folded when factor is 1.
  Expr scaled(double factor) const;

  double eval(double x, double y, double t) const;

  /// Evaluates at every (xs[i], ys[i]) for fixed t. `ys` may be empty (1D).
  void eval_many(std::span<const double> xs, std::span<const double> ys, double t,
                 std::span<double> out) const;

  bool depends_on_t() const;
  bool depends_on_space() const;
  bool is_zero() const;

  /// Normalized text form; equal strings mean structurally equal trees.
  std::string canonical() const;
  const std::string& source() const { return source_; }

 private:
  std::shared_ptr<const Node> root_;
  std::string source_;
};

}  // namespace oscikg
