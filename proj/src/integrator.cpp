#include "oscikg/integrator.hpp"

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "oscikg/matfun.hpp"

namespace oscikg {

namespace {

constexpr double kOuterExpGuard = 700.0;

void check_conformant(const State& state, const SpectralGrid& grid) {
  if (state.psi.size() != grid.size() || state.dpsi.size() != grid.size())
    throw GridError("state does not match the grid size");
}

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

bool all_finite(const State& s) {
  auto finite = [](double v) { return std::isfinite(v); };
  return std::all_of(s.psi.begin(), s.psi.end(), finite) &&
         std::all_of(s.dpsi.begin(), s.dpsi.end(), finite);
}

double max_laplacian_symbol(const SpectralGrid& grid) {
  const double k = std::numbers::pi * grid.modes() / grid.period();
  return grid.dim() * k * k;
}

// One exponential sub-step z <- exp(Omega) z where
//   Omega = [[ kappa*diff,  delta ], [ delta*(c Lap + mean), -kappa*diff ]]
// (diff empty means zero). Midpoint uses kappa = 0.
struct MagnusGenerator {
  double delta;
  double kappa;
  const Field* mean;
  const Field* diff;
};

class ReferencePropagator {
 public:
  ReferencePropagator(const WaveSystem& system, ReferenceMode mode)
      : system_(system), grid_(*system.grid), mode_(mode) {
    if (mode_ == ReferenceMode::Dense) {
      const std::size_t n = grid_.size();
      const std::size_t cap = grid_.dim() == 1 ? kDenseLimit1D : kDenseLimit2D;
      if (n > cap)
        throw std::invalid_argument("dense reference limited to " + std::to_string(cap) +
                                    " nodes, grid has " + std::to_string(n));
      lap_.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
      Field unit(n, 0.0);
      for (std::size_t j = 0; j < n; ++j) {
        unit[j] = 1.0;
        const Field col = grid_.laplacian(unit);
        for (std::size_t i = 0; i < n; ++i)
          lap_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = col[i];
        unit[j] = 0.0;
      }
    }
  }

  void apply(const MagnusGenerator& g, Field& q, Field& p) const {
    if (mode_ == ReferenceMode::Dense) apply_dense(g, q, p);
    else apply_taylor(g, q, p);
  }

 private:
  void generator(const MagnusGenerator& g, const Field& q, const Field& p, Field& outq,
                 Field& outp) const {
    const double c = system_.laplacian_coeff;
    Field lq = grid_.laplacian(q);
    const std::size_t n = q.size();
    outq.resize(n);
    outp.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      outq[i] = g.delta * p[i];
      outp[i] = g.delta * (c * lq[i] + (*g.mean)[i] * q[i]);
    }
    if (g.diff) {
      for (std::size_t i = 0; i < n; ++i) {
        outq[i] += g.kappa * (*g.diff)[i] * q[i];
        outp[i] -= g.kappa * (*g.diff)[i] * p[i];
      }
    }
  }

  void apply_taylor(const MagnusGenerator& g, Field& q, Field& p) const {
    const double bound = std::abs(g.delta) *
                             std::max(1.0, std::abs(system_.laplacian_coeff) *
                                               max_laplacian_symbol(grid_) +
                                           max_abs(*g.mean)) +
                         (g.diff ? std::abs(g.kappa) * max_abs(*g.diff) : 0.0);
    const int pieces = std::max(1, static_cast<int>(std::ceil(bound / 0.5)));
    MagnusGenerator scaled = g;
    scaled.delta /= pieces;
    scaled.kappa /= pieces;
    Field tq;
    Field tp;
    Field nq;
    Field np;
    for (int piece = 0; piece < pieces; ++piece) {
      tq = q;
      tp = p;
      double previous = 1.0;
      for (int k = 1; k <= 60; ++k) {
        generator(scaled, tq, tp, nq, np);
        double norm = 0.0;
        double total = 0.0;
        for (std::size_t i = 0; i < q.size(); ++i) {
          nq[i] /= k;
          np[i] /= k;
          q[i] += nq[i];
          p[i] += np[i];
          norm += nq[i] * nq[i] + np[i] * np[i];
          total += q[i] * q[i] + p[i] * p[i];
        }
        std::swap(tq, nq);
        std::swap(tp, np);
        const double rel = std::sqrt(norm / std::max(total, 1e-300));
        if (rel < 1e-18 && previous < 1e-18) break;
        previous = rel;
      }
    }
  }

  void apply_dense(const MagnusGenerator& g, Field& q, Field& p) const {
    const auto n = static_cast<Eigen::Index>(q.size());
    Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    omega.topRightCorner(n, n) = g.delta * Eigen::MatrixXd::Identity(n, n);
    omega.bottomLeftCorner(n, n) = g.delta * system_.laplacian_coeff * lap_;
    for (Eigen::Index i = 0; i < n; ++i) {
      omega(n + i, i) += g.delta * (*g.mean)[static_cast<std::size_t>(i)];
      if (g.diff) {
        const double d = g.kappa * (*g.diff)[static_cast<std::size_t>(i)];
        omega(i, i) += d;
        omega(n + i, n + i) -= d;
      }
    }
    const Eigen::MatrixXd prop = omega.exp();
    Eigen::VectorXd z(2 * n);
    for (Eigen::Index i = 0; i < n; ++i) {
      z(i) = q[static_cast<std::size_t>(i)];
      z(n + i) = p[static_cast<std::size_t>(i)];
    }
    const Eigen::VectorXd out = prop * z;
    for (Eigen::Index i = 0; i < n; ++i) {
      q[static_cast<std::size_t>(i)] = out(i);
      p[static_cast<std::size_t>(i)] = out(n + i);
    }
  }

  const WaveSystem& system_;
  const SpectralGrid& grid_;
  ReferenceMode mode_;
  Eigen::MatrixXd lap_;
};

}  // namespace

std::string to_string(SchemeId id) {
  switch (id) {
    case SchemeId::Gamma1: return "gamma1";
    case SchemeId::Gamma2: return "gamma2";
    case SchemeId::Reference: return "reference";
  }
  return "unknown";
}

SchemeId parse_scheme(const std::string& name) {
  if (name == "gamma1") return SchemeId::Gamma1;
  if (name == "gamma2") return SchemeId::Gamma2;
  if (name == "reference") return SchemeId::Reference;
  throw std::invalid_argument("unknown scheme '" + name + "' (expected gamma1|gamma2|reference)");
}

StepContext make_step_context(const WaveSystem& system, double t_k, double h) {
  StepContext ctx;
  ctx.system = &system;
  ctx.t_k = t_k;
  ctx.h = h;
  auto q = step_quadratures(system.forcing, *system.grid, t_k, h);
  ctx.F = std::move(q.F);
  ctx.Fcal = std::move(q.Fcal);
  ctx.d_scale = h * system.laplacian_coeff;
  return ctx;
}

State outer_exponential(const State& state, std::span<const double> Fcal, int sign) {
  if (state.psi.size() != Fcal.size() || state.dpsi.size() != Fcal.size())
    throw GridError("outer factor and state sizes differ");
  if (sign != 1 && sign != -1) throw std::invalid_argument("outer factor sign must be +1 or -1");
  if (max_abs(Fcal) > kOuterExpGuard)
    throw NumericalError("outer factor exponent exceeds the overflow guard", -1);
  State out{Field(Fcal.size()), Field(Fcal.size()), state.t};
  for (std::size_t i = 0; i < Fcal.size(); ++i) {
    const double e = std::exp(sign * Fcal[i]);
    out.psi[i] = state.psi[i] / e;
    out.dpsi[i] = state.dpsi[i] * e;
  }
  return out;
}

State step_gamma1(const State& state, const StepContext& ctx) {
  const SpectralGrid& grid = *ctx.system->grid;
  check_conformant(state, grid);
  const std::size_t n = grid.size();
  const double h = ctx.h;
  const double d = ctx.d_scale;
  const auto inner = inner_factor(ctx.F.values, h);

  State z = outer_exponential(state, ctx.Fcal.values, 1);
  Field& q = z.psi;
  Field& p = z.dpsi;

  // p1 = D/6 q0 + p0
  Field lq = grid.laplacian_poly(q, d / 6.0, 0.0);
  for (std::size_t i = 0; i < n; ++i) p[i] += lq[i];
  // (q1, p2) = inner factor applied to (q0, p1)
  for (std::size_t i = 0; i < n; ++i) {
    const double qi = q[i];
    q[i] = inner.c[i] * qi + inner.s[i] * p[i];
    p[i] = inner.sf[i] * qi + inner.c[i] * p[i];
  }
  // p3 = (2/3 D + h D^2 / 36) q1 + p2, with D^2 = d^2 Lap^2
  lq = grid.laplacian_poly(q, 2.0 * d / 3.0, h * d * d / 36.0);
  for (std::size_t i = 0; i < n; ++i) p[i] += lq[i];
  // (q2, p4)
  for (std::size_t i = 0; i < n; ++i) {
    const double qi = q[i];
    q[i] = inner.c[i] * qi + inner.s[i] * p[i];
    p[i] = inner.sf[i] * qi + inner.c[i] * p[i];
  }
  // p5 = D/6 q2 + p4
  lq = grid.laplacian_poly(q, d / 6.0, 0.0);
  for (std::size_t i = 0; i < n; ++i) p[i] += lq[i];

  State out = outer_exponential(z, ctx.Fcal.values, 1);
  out.t = ctx.t_k + h;
  return out;
}

State step_gamma2(const State& state, const StepContext& ctx) {
  const SpectralGrid& grid = *ctx.system->grid;
  check_conformant(state, grid);
  const std::size_t n = grid.size();
  const double h = ctx.h;
  const double d = ctx.d_scale;
  const Field& F = ctx.F.values;

  // (D + F) u with D = d Lap and F pointwise
  auto apply_dpf = [&](const Field& u) {
    Field r = grid.laplacian_poly(u, d, 0.0);
    for (std::size_t i = 0; i < n; ++i) r[i] += F[i] * u[i];
    return r;
  };

  State z = outer_exponential(state, ctx.Fcal.values, 1);
  Field& q = z.psi;
  Field& p = z.dpsi;

  Field w = apply_dpf(q);
  for (std::size_t i = 0; i < n; ++i) p[i] += w[i] / 6.0;  // p1
  for (std::size_t i = 0; i < n; ++i) q[i] += 0.5 * h * p[i];  // q1
  // p2 = (2/3 (D+F) + h/36 (D+F)(D+F)) q1 + p1
  w = apply_dpf(q);
  const Field ww = apply_dpf(w);
  for (std::size_t i = 0; i < n; ++i) p[i] += 2.0 * w[i] / 3.0 + h * ww[i] / 36.0;
  for (std::size_t i = 0; i < n; ++i) q[i] += 0.5 * h * p[i];  // q2
  w = apply_dpf(q);
  for (std::size_t i = 0; i < n; ++i) p[i] += w[i] / 6.0;  // p3

  State out = outer_exponential(z, ctx.Fcal.values, 1);
  out.t = ctx.t_k + h;
  return out;
}

State step_reference(const State& state, const StepContext& ctx, long substeps,
                     const ReferenceOptions& options) {
  if (substeps < 1) throw std::invalid_argument("reference needs at least one substep");
  const WaveSystem& system = *ctx.system;
  const SpectralGrid& grid = *system.grid;
  check_conformant(state, grid);
  const ReferencePropagator prop(system, options.mode);
  const ForcingSampler sampler(system.forcing, grid);
  const double delta = ctx.h / static_cast<double>(substeps);
  const std::size_t n = grid.size();

  State z = state;
  Field g1(n);
  Field g2(n);
  Field mean(n);
  Field diff(n);
  // Gauss-Legendre nodes on [0, 1]
  const double c1 = 0.5 - std::sqrt(3.0) / 6.0;
  const double c2 = 0.5 + std::sqrt(3.0) / 6.0;
  for (long j = 0; j < substeps; ++j) {
    const double t_j = ctx.t_k + static_cast<double>(j) * delta;
    MagnusGenerator g{delta, 0.0, &mean, nullptr};
    if (options.rule == ReferenceRule::Midpoint) {
      sampler.sample(t_j + 0.5 * delta, mean);
    } else {
      sampler.sample(t_j + c1 * delta, g1);
      sampler.sample(t_j + c2 * delta, g2);
      for (std::size_t i = 0; i < n; ++i) {
        mean[i] = 0.5 * (g1[i] + g2[i]);
        diff[i] = g1[i] - g2[i];
      }
      g.kappa = std::sqrt(3.0) * delta * delta / 12.0;
      g.diff = &diff;
    }
    prop.apply(g, z.psi, z.dpsi);
  }
  z.t = ctx.t_k + ctx.h;
  return z;
}

State integrate(SchemeId scheme, const WaveSystem& system, const State& state0, double T,
                long n_steps, const IntegrateOptions& options) {
  if (n_steps < 1) throw std::invalid_argument("n_steps must be at least 1");
  const double t0 = state0.t;
  const double h = (T - t0) / static_cast<double>(n_steps);
  State z = state0;
  for (long k = 0; k < n_steps; ++k) {
    const double t_k = t0 + static_cast<double>(k) * h;
    try {
      if (scheme == SchemeId::Reference) {
        StepContext ctx;
        ctx.system = &system;
        ctx.t_k = t_k;
        ctx.h = h;
        ctx.d_scale = h * system.laplacian_coeff;
        z = step_reference(z, ctx, options.reference_substeps, options.reference);
      } else {
        const StepContext ctx = make_step_context(system, t_k, h);
        z = scheme == SchemeId::Gamma1 ? step_gamma1(z, ctx) : step_gamma2(z, ctx);
      }
    } catch (const NumericalError& e) {
      throw NumericalError(std::string(e.what()) + " at step " + std::to_string(k), k);
    }
    if (!all_finite(z))
      throw NumericalError("non-finite state at step " + std::to_string(k), k);
  }
  z.t = T;
  return z;
}

}  // namespace oscikg
