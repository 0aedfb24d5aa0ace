#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <numbers>
#include <random>

#include "doctest.h"
#include "oscikg/harness.hpp"
#include "oscikg/integrator.hpp"

using namespace oscikg;
constexpr double pi = std::numbers::pi;

namespace {

WaveSystem make_system(double a, double b, int M, const std::string& alpha,
                       std::vector<OscComponent> comps = {}, double c = 1.0, int dim = 1) {
  return WaveSystem{make_grid(a, b, M, dim), ForcingTerm(Expr(alpha), std::move(comps)), c};
}

WaveSystem example1(int M, double eps, double omega) {
  return make_system(-10, 10, M, "-x^2", {{Expr("-x^2").scaled(eps), omega, PhaseForm::Cosine}});
}

WaveSystem example4(int M, double omega, bool oscillatory = true) {
  std::vector<OscComponent> comps;
  if (oscillatory) comps.push_back({Expr("-0.2*x^2/(1+t^2)"), omega, PhaseForm::Cosine});
  return make_system(-pi, pi, M, "-x^2/(1+t^2)", comps);
}

State initial(const WaveSystem& sys, const std::string& psi0, const std::string& phi0 = "0", double t = 0) {
  const auto& g = *sys.grid;
  State s{Field(g.size()), Field(g.size()), t};
  Expr(psi0).eval_many(g.xs(), g.ys(), t, s.psi);
  Expr(phi0).eval_many(g.xs(), g.ys(), t, s.dpsi);
  return s;
}

double rms_diff(const Field& a, const Field& b) {
  Field d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  return SpectralGrid::rms(d);
}

double max_diff(const State& a, const State& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.psi.size(); ++i)
    m = std::max({m, std::abs(a.psi[i] - b.psi[i]), std::abs(a.dpsi[i] - b.dpsi[i])});
  return m;
}

double max_abs(const State& a) {
  double m = 0;
  for (std::size_t i = 0; i < a.psi.size(); ++i) m = std::max({m, std::abs(a.psi[i]), std::abs(a.dpsi[i])});
  return m;
}

State one_step(SchemeId id, const WaveSystem& sys, const State& s, double h, long substeps = 1000,
               ReferenceOptions opts = {}) {
  const StepContext ctx = make_step_context(sys, s.t, h);
  switch (id) {
    case SchemeId::Gamma1: return step_gamma1(s, ctx);
    case SchemeId::Gamma2: return step_gamma2(s, ctx);
    default: return step_reference(s, ctx, substeps, opts);
  }
}

}  // namespace

TEST_CASE("integrator: scheme names") {
  CHECK(parse_scheme("gamma1") == SchemeId::Gamma1);
  CHECK(parse_scheme("gamma2") == SchemeId::Gamma2);
  CHECK(parse_scheme("reference") == SchemeId::Reference);
  CHECK(to_string(SchemeId::Gamma2) == "gamma2");
  CHECK_THROWS_AS(parse_scheme("gamma3"), std::invalid_argument);
}

TEST_CASE("integrator: outer exponential") {
  State s{{1.0, -2.0, 3.0}, {0.5, 0.25, -1.0}, 0.0};
  const State same = outer_exponential(s, Field(3, 0.0), 1);
  CHECK(same.psi == s.psi);
  CHECK(same.dpsi == s.dpsi);

  const Field Fcal{0.3, -1.2, 4.0};
  const State fwd = outer_exponential(s, Fcal, 1);
  CHECK(fwd.psi[0] == doctest::Approx(std::exp(-0.3)));
  CHECK(fwd.dpsi[0] == doctest::Approx(0.5 * std::exp(0.3)));
  const State back = outer_exponential(fwd, Fcal, -1);
  for (int i = 0; i < 3; ++i) {
    CHECK(std::abs(back.psi[i] - s.psi[i]) <= 1e-15 * std::abs(s.psi[i]));
    CHECK(std::abs(back.dpsi[i] - s.dpsi[i]) <= 1e-15 * std::abs(s.dpsi[i]));
  }
  CHECK_THROWS_AS(outer_exponential(s, Field{0, 701, 0}, 1), NumericalError);
  CHECK_THROWS(outer_exponential(s, Fcal, 2));

  // time-independent forcing: the outer factor vanishes on every step
  WaveSystem sys = make_system(-10, 10, 16, "-x^2");
  for (double tk : {0.0, 0.4, 3.0}) {
    const StepContext ctx = make_step_context(sys, tk, 0.1);
    for (double v : ctx.Fcal.values) CHECK(std::abs(v) <= 1e-16);
  }
}

TEST_CASE("integrator: free wave, one step") {
  WaveSystem sys = make_system(-pi, pi, 64, "0");
  const State s0 = initial(sys, "cos(x)");
  const double h = 0.01;
  for (SchemeId id : {SchemeId::Gamma1, SchemeId::Gamma2}) {
    const State s1 = one_step(id, sys, s0, h);
    for (std::size_t i = 0; i < s0.psi.size(); ++i)
      CHECK(std::abs(s1.psi[i] - std::cos(h) * s0.psi[i]) <= 1e-9);
    CHECK(s1.t == doctest::Approx(h));
  }
  const State g1 = one_step(SchemeId::Gamma1, sys, s0, 0.3);
  const State g2 = one_step(SchemeId::Gamma2, sys, s0, 0.3);
  CHECK(max_diff(g1, g2) <= 1e-12);
}

TEST_CASE("integrator: tiny steps barely move the state") {
  WaveSystem sys = example1(64, 0.1, 100);
  const State s0 = initial(sys, "exp(-x^2/2)");
  for (SchemeId id : {SchemeId::Gamma1, SchemeId::Gamma2}) {
    const State s1 = one_step(id, sys, s0, 1e-8);
    CHECK(max_diff(s0, s1) <= 1e-7 * max_abs(s0));
  }
}

TEST_CASE("integrator: zero data stays zero") {
  WaveSystem sys = example4(32, 1e3);
  const State z = initial(sys, "0");
  for (SchemeId id : {SchemeId::Gamma1, SchemeId::Gamma2}) {
    const State s = one_step(id, sys, z, 0.1);
    for (std::size_t i = 0; i < s.psi.size(); ++i) {
      CHECK(s.psi[i] == 0.0);
      CHECK(s.dpsi[i] == 0.0);
    }
  }
}

TEST_CASE("integrator: single steps against the reference") {
  SUBCASE("example 1, omega = 100, h = 0.1") {
    WaveSystem sys = example1(64, 0.1, 100);
    const State s0 = initial(sys, "exp(-x^2/2)");
    const State ref = one_step(SchemeId::Reference, sys, s0, 0.1, 10000);
    CHECK(rms_diff(one_step(SchemeId::Gamma1, sys, s0, 0.1).psi, ref.psi) <= 1e-4);
    CHECK(rms_diff(one_step(SchemeId::Gamma2, sys, s0, 0.1).psi, ref.psi) <= 1e-4);
  }
  SUBCASE("example 4, omega = 1000, h = 0.05") {
    WaveSystem sys = example4(64, 1e3);
    const State s0 = initial(sys, "exp(-(x-3)^2/2) + exp(-(x+3)^2/2)");
    const State ref = one_step(SchemeId::Reference, sys, s0, 0.05, 5000);
    CHECK(rms_diff(one_step(SchemeId::Gamma1, sys, s0, 0.05).psi, ref.psi) <= 1e-5);
    CHECK(rms_diff(one_step(SchemeId::Gamma2, sys, s0, 0.05).psi, ref.psi) <= 1e-5);
  }
}

TEST_CASE("integrator: reference reproduces the free propagator") {
  for (ReferenceMode mode : {ReferenceMode::MatrixFree, ReferenceMode::Dense})
    for (ReferenceRule rule : {ReferenceRule::Midpoint, ReferenceRule::GaussMagnus4}) {
      WaveSystem sys = make_system(-pi, pi, mode == ReferenceMode::Dense ? 16 : 64, "0");
      const State s0 = initial(sys, "cos(2*x) + 0.3*sin(5*x)", "0.7*cos(3*x)");
      const double h = 0.5;
      const State s1 = one_step(SchemeId::Reference, sys, s0, h, mode == ReferenceMode::Dense ? 100 : 10000,
                                {mode, rule});
      const auto& x = sys.grid->xs();
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double psi = std::cos(2 * h) * std::cos(2 * x[i]) + 0.3 * std::cos(5 * h) * std::sin(5 * x[i]) +
                           0.7 * std::sin(3 * h) / 3 * std::cos(3 * x[i]);
        const double dpsi = -2 * std::sin(2 * h) * std::cos(2 * x[i]) -
                            1.5 * std::sin(5 * h) * std::sin(5 * x[i]) + 0.7 * std::cos(3 * h) * std::cos(3 * x[i]);
        CHECK(std::abs(s1.psi[i] - psi) <= 1e-10);
        CHECK(std::abs(s1.dpsi[i] - dpsi) <= 1e-10);
      }
    }
}

TEST_CASE("integrator: dense and matrix-free reference agree") {
  WaveSystem sys = example1(16, 0.1, 30);
  const State s0 = initial(sys, "exp(-x^2/2)");
  for (ReferenceRule rule : {ReferenceRule::Midpoint, ReferenceRule::GaussMagnus4}) {
    const State a = one_step(SchemeId::Reference, sys, s0, 0.2, 200, {ReferenceMode::MatrixFree, rule});
    const State b = one_step(SchemeId::Reference, sys, s0, 0.2, 200, {ReferenceMode::Dense, rule});
    CHECK(max_diff(a, b) <= 1e-11 * max_abs(a));
  }
  WaveSystem big = make_system(-pi, pi, 256, "0");
  CHECK_THROWS_AS(one_step(SchemeId::Reference, big, initial(big, "cos(x)"), 0.1, 2, {ReferenceMode::Dense, {}}),
                  std::invalid_argument);
}

TEST_CASE("integrator: reference self-convergence rates") {
  WaveSystem sys = example1(64, 0.1, 10);
  const State s0 = initial(sys, "exp(-x^2/2)");
  auto rate = [&](ReferenceRule rule, long n) {
    const ReferenceOptions o{ReferenceMode::MatrixFree, rule};
    const State a = one_step(SchemeId::Reference, sys, s0, 0.5, n, o);
    const State b = one_step(SchemeId::Reference, sys, s0, 0.5, 2 * n, o);
    const State c = one_step(SchemeId::Reference, sys, s0, 0.5, 4 * n, o);
    return rms_diff(a.psi, b.psi) / rms_diff(b.psi, c.psi);
  };
  const double mid = rate(ReferenceRule::Midpoint, 50);
  CHECK(mid > 3.6);
  CHECK(mid < 4.4);
  const double g4 = rate(ReferenceRule::GaussMagnus4, 10);
  CHECK(g4 > 14.0);
  CHECK(g4 < 18.0);
}

TEST_CASE("integrator: pinned reference state") {
  // Example 1 with omega = 10 over [0, 1], micro-step 1e-5, midpoint rule.
  WaveSystem sys = example1(64, 0.1, 10);
  const State s0 = initial(sys, "exp(-x^2/2)");
  IntegrateOptions opts;
  opts.reference = {ReferenceMode::MatrixFree, ReferenceRule::Midpoint};
  opts.reference_substeps = 100000;
  const State ref = integrate(SchemeId::Reference, sys, s0, 1.0, 1, opts);
  const std::string path = std::string(OSCIKG_TEST_DATA) + "/golden_example1_omega10.bin";
  if (std::getenv("OSCIKG_WRITE_GOLDEN")) write_snapshot(path, *sys.grid, ref);
  REQUIRE(std::filesystem::exists(path));
  const State golden = read_snapshot(path, *sys.grid);
  CHECK(max_diff(ref, golden) <= 1e-12 * max_abs(golden));
}

TEST_CASE("integrator: integrate") {
  WaveSystem sys = example1(64, 0.1, 100);
  const State s0 = initial(sys, "exp(-x^2/2)");
  SUBCASE("one step equals a single step call") {
    for (SchemeId id : {SchemeId::Gamma1, SchemeId::Gamma2}) {
      const State a = integrate(id, sys, s0, 0.1, 1);
      const State b = one_step(id, sys, s0, 0.1);
      CHECK(a.psi == b.psi);
      CHECK(a.dpsi == b.dpsi);
      CHECK(a.t == 0.1);
    }
  }
  SUBCASE("free wave over the unit interval") {
    WaveSystem free = make_system(-pi, pi, 64, "0");
    const State f0 = initial(free, "cos(x)");
    for (SchemeId id : {SchemeId::Gamma1, SchemeId::Gamma2}) {
      const State s = integrate(id, free, f0, 1.0, 100);
      for (std::size_t i = 0; i < f0.psi.size(); ++i) CHECK(std::abs(s.psi[i] - std::cos(1.0) * f0.psi[i]) <= 1e-9);
    }
  }
  SUBCASE("non-finite state aborts with the step index") {
    State bad = s0;
    bad.psi[3] = std::nan("");
    try {
      integrate(SchemeId::Gamma2, sys, bad, 1.0, 4);
      FAIL("expected NumericalError");
    } catch (const NumericalError& e) {
      CHECK(e.step() == 0);
    }
    WaveSystem blow = make_system(-1, 1, 8, "-1e9*t");
    try {
      integrate(SchemeId::Gamma1, blow, initial(blow, "1"), 2.0, 2);
      FAIL("expected NumericalError");
    } catch (const NumericalError& e) {
      CHECK(e.step() == 0);
    }
    CHECK_THROWS_AS(integrate(SchemeId::Gamma1, sys, s0, 1.0, 0), std::invalid_argument);
  }
}

TEST_CASE("integrator: extreme frequency, a single unit step") {
  WaveSystem sys = example1(64, 0.1, 1e6);
  const State s0 = initial(sys, "exp(-x^2/2)");
  IntegrateOptions opts;
  opts.reference = {ReferenceMode::MatrixFree, ReferenceRule::GaussMagnus4};
  opts.reference_substeps = 100000;
  const State ref = integrate(SchemeId::Reference, sys, s0, 1.0, 1, opts);
  for (SchemeId id : {SchemeId::Gamma1, SchemeId::Gamma2})
    CHECK(rms_diff(integrate(id, sys, s0, 1.0, 1).psi, ref.psi) <= 1e-2);
}

TEST_CASE("integrator: step operators are linear") {
  WaveSystem sys = example1(16, 0.1, 50);
  std::mt19937_64 rng(21);
  std::normal_distribution<double> N;
  State u{Field(16), Field(16), 0.2}, v{Field(16), Field(16), 0.2}, w{Field(16), Field(16), 0.2};
  for (int i = 0; i < 16; ++i) {
    u.psi[i] = N(rng), u.dpsi[i] = N(rng), v.psi[i] = N(rng), v.dpsi[i] = N(rng);
  }
  const double a = 1.7, b = -0.4;
  for (int i = 0; i < 16; ++i) {
    w.psi[i] = a * u.psi[i] + b * v.psi[i];
    w.dpsi[i] = a * u.dpsi[i] + b * v.dpsi[i];
  }
  for (SchemeId id : {SchemeId::Gamma1, SchemeId::Gamma2, SchemeId::Reference}) {
    const State su = one_step(id, sys, u, 0.1, 20), sv = one_step(id, sys, v, 0.1, 20),
                sw = one_step(id, sys, w, 0.1, 20);
    State comb = sw;
    for (int i = 0; i < 16; ++i) {
      comb.psi[i] = a * su.psi[i] + b * sv.psi[i];
      comb.dpsi[i] = a * su.dpsi[i] + b * sv.dpsi[i];
    }
    CHECK(max_diff(sw, comb) <= 1e-12 * max_abs(sw));
  }
}

TEST_CASE("integrator: reversibility") {
  SUBCASE("time-independent forcing inverts exactly") {
    WaveSystem sys = make_system(-10, 10, 64, "-x^2");
    const State s0 = initial(sys, "exp(-x^2/2)", "x*exp(-x^2)");
    for (SchemeId id : {SchemeId::Gamma1, SchemeId::Gamma2}) {
      const State fwd = one_step(id, sys, s0, 0.1);
      const State back = one_step(id, sys, fwd, -0.1);
      CHECK(back.t == doctest::Approx(0.0));
      CHECK(max_diff(back, s0) <= 1e-11 * max_abs(s0));
    }
  }
  SUBCASE("time-dependent forcing returns to within O(h^5)") {
    WaveSystem sys = example4(64, 10.0);
    const State s0 = initial(sys, "exp(-(x-3)^2/2) + exp(-(x+3)^2/2)");
    for (SchemeId id : {SchemeId::Gamma1, SchemeId::Gamma2}) {
      std::vector<double> errs;
      for (double h : {0.2, 0.1, 0.05}) {
        const State fwd = one_step(id, sys, s0, h);
        // stepping back from t + h uses quadratures over [t, t + h] traversed in reverse
        const State back = one_step(id, sys, fwd, -h);
        errs.push_back(max_diff(back, s0) / max_abs(s0));
      }
      CHECK(errs[0] <= 1e-3);
      for (std::size_t i = 0; i + 1 < errs.size(); ++i)
        if (errs[i + 1] > 1e-12) CHECK(std::log2(errs[i] / errs[i + 1]) >= 4.5);
    }
  }
}

TEST_CASE("integrator: the two schemes differ by O(h^5) per step") {
  WaveSystem sys = example1(64, 0.1, 10);
  const State s0 = initial(sys, "exp(-x^2/2)");
  std::vector<double> diffs;
  for (double h : {0.2, 0.1, 0.05, 0.025})
    diffs.push_back(rms_diff(one_step(SchemeId::Gamma1, sys, s0, h).psi, one_step(SchemeId::Gamma2, sys, s0, h).psi));
  for (std::size_t i = 0; i + 1 < diffs.size(); ++i) {
    CAPTURE(i);
    CHECK(std::log2(diffs[i] / diffs[i + 1]) >= 4.5);
  }
}

TEST_CASE("integrator: 2D local error is fifth order") {
  WaveSystem sys = make_system(-pi, pi, 16, "-x^2*y^2", {{Expr("-0.2*x^2*y^2"), 1, PhaseForm::Cosine}}, 1.0, 2);
  const State s0 = initial(sys, "exp(-(x-3)^2/2) + exp(-(y+3)^2/2)");
  for (SchemeId id : {SchemeId::Gamma1, SchemeId::Gamma2}) {
    std::vector<double> errs;
    for (double h : {0.1, 0.05, 0.025}) {
      const State ref = one_step(SchemeId::Reference, sys, s0, h, 4000);
      errs.push_back(rms_diff(one_step(id, sys, s0, h).psi, ref.psi));
    }
    CHECK(errs[0] <= 1e-3);
    for (std::size_t i = 0; i + 1 < errs.size(); ++i) CHECK(std::log2(errs[i] / errs[i + 1]) >= 4.5);
  }
}
