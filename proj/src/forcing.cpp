#include "oscikg/forcing.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <string>

namespace oscikg {

namespace {

using cplx = std::complex<double>;

// Row i holds the monomial coefficients of the i-th Lagrange basis polynomial
// for the Chebyshev nodes on [0, 1].
struct LagrangeTable {
  std::array<double, 4> nodes{};
  std::array<std::array<double, 4>, 4> coeff{};

  LagrangeTable() {
    for (int i = 0; i < 4; ++i)
      nodes[i] = 0.5 * (1.0 - std::cos((2.0 * i + 1.0) * std::numbers::pi / 8.0));
    for (int i = 0; i < 4; ++i) {
      // prod_{j != i} (u - u_j) / (u_i - u_j), expanded one factor at a time
      std::array<double, 4> poly{1.0, 0.0, 0.0, 0.0};
      int degree = 0;
      for (int j = 0; j < 4; ++j) {
        if (j == i) continue;
        const double denom = nodes[i] - nodes[j];
        std::array<double, 4> next{};
        for (int d = 0; d <= degree; ++d) {
          next[d + 1] += poly[d] / denom;
          next[d] -= poly[d] * nodes[j] / denom;
        }
        poly = next;
        ++degree;
      }
      coeff[i] = poly;
    }
  }
};

const LagrangeTable& lagrange() {
  static const LagrangeTable table;
  return table;
}

struct GaussRule {
  std::vector<double> nodes;  // on [-1, 1]
  std::vector<double> weights;
};

GaussRule gauss_legendre(int n) {
  GaussRule rule;
  rule.nodes.resize(static_cast<std::size_t>(n));
  rule.weights.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    rule.nodes[static_cast<std::size_t>(i)] = x;
    rule.weights[static_cast<std::size_t>(i)] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return rule;
}

double factorial(int n) {
  double r = 1.0;
  for (int i = 2; i <= n; ++i) r *= i;
  return r;
}

// Adds sum_i w[i] * samples[i] into `out`; samples[i] is a grid field.
void accumulate(std::span<double> out, const std::array<double, 4>& w,
                const std::array<Field, 4>& samples) {
  for (std::size_t p = 0; p < out.size(); ++p)
    out[p] += w[0] * samples[0][p] + w[1] * samples[1][p] + w[2] * samples[2][p] +
              w[3] * samples[3][p];
}

void accumulate_scalar(std::span<double> out, double w, const Field& sample) {
  for (std::size_t p = 0; p < out.size(); ++p) out[p] += w * sample[p];
}

// Adds the plain and centred Filon integrals of amplitude(x, t) * kernel into F and Fcal.
// `take` maps a complex weight to the real contribution (Re for cos, Im for sin).
template <class Take>
void integrate_component(const Expr& amplitude, double omega, const SpectralGrid& grid, double t_k,
                         double h, Take take, Field* F, Field* Fcal) {
  const FilonWeights w = filon_weights(omega, t_k, h);
  const std::size_t n = grid.size();
  if (!amplitude.depends_on_t()) {
    Field s(n);
    amplitude.eval_many(grid.xs(), grid.ys(), t_k, s);
    cplx plain = 0.0;
    cplx centred = 0.0;
    for (int i = 0; i < 4; ++i) {
      plain += w.plain[i];
      centred += w.centred[i];
    }
    if (F) accumulate_scalar(*F, take(plain), s);
    if (Fcal) accumulate_scalar(*Fcal, take(centred), s);
    return;
  }
  std::array<Field, 4> samples;
  const auto& nodes = filon_nodes();
  for (int i = 0; i < 4; ++i) {
    samples[i].resize(n);
    amplitude.eval_many(grid.xs(), grid.ys(), t_k + h * nodes[i], samples[i]);
  }
  std::array<double, 4> wp{};
  std::array<double, 4> wc{};
  for (int i = 0; i < 4; ++i) {
    wp[i] = take(w.plain[i]);
    wc[i] = take(w.centred[i]);
  }
  if (F) accumulate(*F, wp, samples);
  if (Fcal) accumulate(*Fcal, wc, samples);
}

// Negative steps are allowed (backward integration); the substitution
// s = h u holds for either sign.
void check_step(double h) {
  if (h == 0.0 || !std::isfinite(h)) throw ForcingError("step size must be nonzero and finite");
}

void compute(const ForcingTerm& forcing, const SpectralGrid& grid, double t_k, double h, Field* F,
             Field* Fcal) {
  check_step(h);
  const auto re = [](cplx z) { return z.real(); };
  const auto im = [](cplx z) { return z.imag(); };
  if (!forcing.alpha().is_zero()) integrate_component(forcing.alpha(), 0.0, grid, t_k, h, re, F, Fcal);
  for (const auto& c : forcing.components()) {
    if (c.form == PhaseForm::Sine)
      integrate_component(c.amplitude, c.omega, grid, t_k, h, im, F, Fcal);
    else
      integrate_component(c.amplitude, c.omega, grid, t_k, h, re, F, Fcal);
  }
}

}  // namespace

ForcingTerm::ForcingTerm(Expr alpha, std::vector<OscComponent> components) : alpha_(std::move(alpha)) {
  // complex exponentials keyed by |w|, then matched sign against sign
  std::map<double, std::vector<const OscComponent*>> positive;
  std::map<double, std::vector<const OscComponent*>> negative;
  for (const auto& c : components) {
    if (!std::isfinite(c.omega)) throw ForcingError("component frequency must be finite");
    if (c.form == PhaseForm::ComplexExp) {
      if (std::abs(c.omega) < 1.0)
        throw ForcingError("complex exponential components need |omega| >= 1, got " +
                           std::to_string(c.omega));
      (c.omega > 0 ? positive : negative)[std::abs(c.omega)].push_back(&c);
    } else {
      if (c.omega < 0.0)
        throw ForcingError("cosine/sine components need omega >= 0, got " + std::to_string(c.omega));
      components_.push_back(c);
    }
  }
  for (auto& [omega, list] : positive) {
    auto it = negative.find(omega);
    if (it == negative.end() || it->second.size() != list.size())
      throw ForcingError("complex exponential at omega = " + std::to_string(omega) +
                         " has no conjugate partner at -omega");
    auto partners = it->second;
    for (const OscComponent* c : list) {
      auto match = std::find_if(partners.begin(), partners.end(), [&](const OscComponent* p) {
        return p->amplitude.canonical() == c->amplitude.canonical();
      });
      if (match == partners.end())
        throw ForcingError("complex exponential at omega = " + std::to_string(omega) +
                           " is not paired with an equal-amplitude conjugate");
      partners.erase(match);
      components_.push_back({c->amplitude.scaled(2.0), omega, PhaseForm::Cosine});
    }
    negative.erase(it);
  }
  if (!negative.empty())
    throw ForcingError("complex exponential at omega = -" + std::to_string(negative.begin()->first) +
                       " has no conjugate partner");
}

double ForcingTerm::eval(double x, double y, double t) const {
  double f = alpha_.eval(x, y, t);
  for (const auto& c : components_) {
    const double phase = c.form == PhaseForm::Sine ? std::sin(c.omega * t) : std::cos(c.omega * t);
    f += c.amplitude.eval(x, y, t) * phase;
  }
  return f;
}

void ForcingTerm::sample(const SpectralGrid& grid, double t, std::span<double> out) const {
  alpha_.eval_many(grid.xs(), grid.ys(), t, out);
  Field tmp(out.size());
  for (const auto& c : components_) {
    const double phase = c.form == PhaseForm::Sine ? std::sin(c.omega * t) : std::cos(c.omega * t);
    c.amplitude.eval_many(grid.xs(), grid.ys(), t, tmp);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += phase * tmp[i];
  }
}

ForcingSampler::ForcingSampler(const ForcingTerm& forcing, const SpectralGrid& grid) : grid_(&grid) {
  auto add = [&](const Expr& amplitude, double omega, PhaseForm form) {
    if (amplitude.is_zero()) return;
    Part part{&amplitude, {}, omega, form};
    if (!amplitude.depends_on_t()) {
      part.cached.resize(grid.size());
      amplitude.eval_many(grid.xs(), grid.ys(), 0.0, part.cached);
    }
    parts_.push_back(std::move(part));
  };
  add(forcing.alpha(), 0.0, PhaseForm::Cosine);
  for (const auto& c : forcing.components()) add(c.amplitude, c.omega, c.form);
}

void ForcingSampler::sample(double t, std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  Field tmp;
  for (const auto& part : parts_) {
    const double phase =
        part.form == PhaseForm::Sine ? std::sin(part.omega * t) : std::cos(part.omega * t);
    const Field* values = &part.cached;
    if (part.cached.empty()) {
      tmp.resize(out.size());
      part.amplitude->eval_many(grid_->xs(), grid_->ys(), t, tmp);
      values = &tmp;
    }
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += phase * (*values)[i];
  }
}

std::optional<FrequencyRange> ForcingTerm::freq_extrema() const {
  if (components_.empty()) return std::nullopt;
  FrequencyRange r{std::abs(components_.front().omega), std::abs(components_.front().omega)};
  for (const auto& c : components_) {
    r.omega_min = std::min(r.omega_min, std::abs(c.omega));
    r.omega_max = std::max(r.omega_max, std::abs(c.omega));
  }
  return r;
}

bool ForcingTerm::time_independent() const {
  if (alpha_.depends_on_t()) return false;
  return std::all_of(components_.begin(), components_.end(), [](const OscComponent& c) {
    if (c.amplitude.is_zero()) return true;
    return c.omega == 0.0 && c.form == PhaseForm::Cosine && !c.amplitude.depends_on_t();
  });
}

std::array<cplx, 5> oscillatory_moments(double theta) {
  std::array<cplx, 5> m{};
  if (std::abs(theta) < 1.0) {
    // sum_k (i theta)^k / (k! (j + k + 1)); 25 terms put the tail below 1e-25
    cplx power = 1.0;
    for (int k = 0; k < 25; ++k) {
      for (int j = 0; j < 5; ++j) m[j] += power / static_cast<double>(j + k + 1);
      power *= cplx(0.0, theta) / static_cast<double>(k + 1);
    }
    return m;
  }
  const cplx e(std::cos(theta), std::sin(theta));
  const cplx inv = 1.0 / cplx(0.0, theta);
  m[0] = (e - 1.0) * inv;
  for (int j = 1; j < 5; ++j) m[j] = (e - static_cast<double>(j) * m[j - 1]) * inv;
  return m;
}

const std::array<double, 4>& filon_nodes() { return lagrange().nodes; }

FilonWeights filon_weights(double omega, double t_k, double h) {
  const auto& table = lagrange();
  const auto m = oscillatory_moments(omega * h);
  const cplx phase = omega == 0.0 ? cplx(1.0) : cplx(std::cos(omega * t_k), std::sin(omega * t_k));
  FilonWeights w{};
  for (int i = 0; i < 4; ++i) {
    cplx plain = 0.0;
    cplx centred = 0.0;
    for (int j = 0; j < 4; ++j) {
      plain += table.coeff[i][j] * m[j];
      centred += table.coeff[i][j] * (m[j + 1] - 0.5 * m[j]);
    }
    w.plain[i] = h * phase * plain;
    w.centred[i] = 0.5 * h * h * phase * centred;
  }
  return w;
}

QuadField integral_F(const ForcingTerm& forcing, const SpectralGrid& grid, double t_k, double h) {
  QuadField q{Field(grid.size(), 0.0), t_k, h};
  compute(forcing, grid, t_k, h, &q.values, nullptr);
  return q;
}

QuadField integral_Fcal(const ForcingTerm& forcing, const SpectralGrid& grid, double t_k, double h) {
  QuadField q{Field(grid.size(), 0.0), t_k, h};
  compute(forcing, grid, t_k, h, nullptr, &q.values);
  return q;
}

StepQuadratures step_quadratures(const ForcingTerm& forcing, const SpectralGrid& grid, double t_k,
                                 double h) {
  StepQuadratures q{{Field(grid.size(), 0.0), t_k, h}, {Field(grid.size(), 0.0), t_k, h}};
  compute(forcing, grid, t_k, h, &q.F.values, &q.Fcal.values);
  return q;
}

std::complex<double> nested_osc_integral(const std::function<double(double)>& amplitude,
                                         double omega, double h, int depth, int index, int panels) {
  if (depth < 1 || depth > 4) throw ForcingError("nested integral depth must be in 1..4");
  if (index < 1 || index > depth) throw ForcingError("oscillating variable index must be in 1..depth");
  check_step(h);
  // For fixed t_k = s the remaining variables sweep two simplices:
  // (h - s)^{k-1}/(k-1)! above and s^{m-k}/(m-k)! below.
  const int above = index - 1;
  const int below = depth - index;
  const double norm = 1.0 / (factorial(above) * factorial(below));
  if (panels <= 0)
    panels = std::max(16, static_cast<int>(std::ceil(2.0 * std::abs(omega) * h / std::numbers::pi)));
  static const GaussRule rule = gauss_legendre(8);
  const double width = h / panels;
  cplx acc = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double mid = (p + 0.5) * width;
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
      const double s = mid + 0.5 * width * rule.nodes[q];
      const double weight = std::pow(h - s, above) * std::pow(s, below);
      acc += 0.5 * width * rule.weights[q] * amplitude(s) * weight *
             cplx(std::cos(omega * s), std::sin(omega * s));
    }
  }
  return acc * norm;
}

}  // namespace oscikg
