#include "oscikg/harness.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "json.hpp"

namespace oscikg {

using nlohmann::json;

namespace {

const char* form_name(PhaseForm f) {
  switch (f) {
    case PhaseForm::Cosine: return "cos";
    case PhaseForm::Sine: return "sin";
    case PhaseForm::ComplexExp: return "cexp";
  }
  return "cos";
}

const char* rule_name(ReferenceRule r) {
  return r == ReferenceRule::Midpoint ? "midpoint" : "gauss4";
}

const char* mode_name(ReferenceMode m) {
  return m == ReferenceMode::Dense ? "dense" : "matrix_free";
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

void put_u32(std::ostream& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xffu));
}

void put_f64(std::ostream& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.put(static_cast<char>((bits >> (8 * i)) & 0xffu));
}

std::uint64_t get_le(std::istream& in, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) {
    const int c = in.get();
    if (c == std::char_traits<char>::eof()) throw std::runtime_error("snapshot truncated");
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
  }
  return v;
}

constexpr char kMagic[8] = {'O', 'S', 'C', 'I', 'K', 'G', '1', '\0'};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

template <class Fn>
void parallel_for(std::size_t count, int jobs, Fn fn) {
  if (jobs <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(count);
  std::vector<std::thread> workers;
  const auto n = std::min<std::size_t>(static_cast<std::size_t>(jobs), count);
  for (std::size_t w = 0; w < n; ++w) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : workers) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace

bool Problem::has_placeholder() const {
  return std::any_of(components.begin(), components.end(),
                     [](const ComponentSpec& c) { return c.omega_placeholder; });
}

Problem Problem::with_omega(double omega) const {
  Problem p = *this;
  if (has_placeholder()) {
    for (auto& c : p.components)
      if (c.omega_placeholder) {
        c.omega = omega;
        c.omega_placeholder = false;
      }
    return p;
  }
  if (p.components.size() != 1)
    throw std::invalid_argument("omega override needs a single component or a placeholder");
  p.components.front().omega = omega;
  return p;
}

ForcingTerm Problem::forcing() const {
  std::vector<OscComponent> comps;
  for (const auto& c : components) {
    if (c.omega_placeholder) throw std::invalid_argument("unbound omega placeholder");
    comps.push_back({Expr(c.amplitude), c.omega, c.form});
  }
  return ForcingTerm(Expr(alpha), std::move(comps));
}

WaveSystem Problem::system() const {
  return WaveSystem{make_grid(lower, upper, modes, dim), forcing(), laplacian_coeff};
}

State Problem::initial_state(const SpectralGrid& grid) const {
  State s{Field(grid.size()), Field(grid.size()), t0};
  Expr(psi0).eval_many(grid.xs(), grid.ys(), t0, s.psi);
  Expr(phi0).eval_many(grid.xs(), grid.ys(), t0, s.dpsi);
  return s;
}

std::string canonical_json(const Problem& p) {
  json comps = json::array();
  for (const auto& c : p.components) {
    json jc = {{"amplitude", Expr(c.amplitude).canonical()}, {"form", form_name(c.form)}};
    if (c.omega_placeholder) jc["omega"] = "omega";
    else jc["omega"] = c.omega;
    comps.push_back(jc);
  }
  json j = {{"domain", {p.lower, p.upper}},
            {"modes", p.modes},
            {"dim", p.dim},
            {"laplacian_coeff", p.laplacian_coeff},
            {"forcing", {{"alpha", Expr(p.alpha).canonical()}, {"components", comps}}},
            {"psi0", Expr(p.psi0).canonical()},
            {"phi0", Expr(p.phi0).canonical()},
            {"t0", p.t0},
            {"T", p.T}};
  return j.dump();
}

std::string ReferenceSpec::descriptor() const {
  return std::string(rule_name(options.rule)) + "/" + mode_name(options.mode) +
         "/substeps_per_unit=" + std::to_string(substeps_per_unit);
}

std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 failed");
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

void write_snapshot(const std::string& path, const SpectralGrid& grid, const State& state) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out.write(kMagic, sizeof kMagic);
  put_u32(out, static_cast<std::uint32_t>(grid.dim()));
  for (int d = 0; d < grid.dim(); ++d) put_u32(out, static_cast<std::uint32_t>(grid.modes()));
  for (double v : state.psi) put_f64(out, v);
  for (double v : state.dpsi) put_f64(out, v);
  if (!out) throw std::runtime_error("write to " + path + " failed");
}

State read_snapshot(const std::string& path, const SpectralGrid& grid) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || !std::equal(magic, magic + 8, kMagic)) throw std::runtime_error("bad snapshot header");
  const auto dim = get_le(in, 4);
  if (dim != static_cast<std::uint64_t>(grid.dim())) throw std::runtime_error("snapshot dimension mismatch");
  for (std::uint64_t d = 0; d < dim; ++d)
    if (get_le(in, 4) != static_cast<std::uint64_t>(grid.modes()))
      throw std::runtime_error("snapshot mode count mismatch");
  State s{Field(grid.size()), Field(grid.size()), 0.0};
  for (auto& v : s.psi) v = std::bit_cast<double>(get_le(in, 8));
  for (auto& v : s.dpsi) v = std::bit_cast<double>(get_le(in, 8));
  if (in.peek() != std::char_traits<char>::eof()) throw std::runtime_error("trailing bytes in snapshot");
  return s;
}

State reference_solution(const Problem& problem, const ReferenceSpec& spec) {
  const WaveSystem system = problem.system();
  const double span = problem.T - problem.t0;
  const long substeps =
      std::max(1L, static_cast<long>(std::ceil(static_cast<double>(spec.substeps_per_unit) * span)));

  std::filesystem::path file;
  if (!spec.cache_dir.empty()) {
    file = std::filesystem::path(spec.cache_dir) /
           (sha256_hex(canonical_json(problem) + "|" + spec.descriptor()) + ".bin");
    std::error_code ec;
    if (std::filesystem::exists(file, ec)) {
      try {
        State cached = read_snapshot(file.string(), *system.grid);
        cached.t = problem.T;
        return cached;
      } catch (const std::runtime_error&) {
        // unreadable entry: fall through and overwrite it
      }
    }
  }

  IntegrateOptions opts;
  opts.reference = spec.options;
  opts.reference_substeps = substeps;
  State ref = integrate(SchemeId::Reference, system, problem.initial_state(*system.grid), problem.T, 1, opts);

  if (!file.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(file.parent_path(), ec);
    std::random_device rd;
    const auto tmp = file.string() + ".tmp" + std::to_string(rd());
    try {
      write_snapshot(tmp, *system.grid, ref);
      std::filesystem::rename(tmp, file);
    } catch (const std::exception&) {
      std::filesystem::remove(tmp, ec);
    }
  }
  return ref;
}

OrderEstimate estimate_order(const std::vector<double>& errors, const std::vector<double>& hs) {
  if (errors.size() != hs.size() || errors.size() < 2)
    throw std::invalid_argument("order estimate needs two or more (h, error) pairs");
  OrderEstimate est;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(errors.size());
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (!(hs[i] > 0.0)) throw std::invalid_argument("step sizes must be positive");
    double e = errors[i];
    if (e < 0.0 || !std::isfinite(e)) throw std::invalid_argument("errors must be finite and non-negative");
    if (e < 1e-16) {
      e = 1e-16;
      est.clamped = true;
    }
    const double x = std::log(hs[i]);
    const double y = std::log(e);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double denom = n * sxx - sx * sx;
  if (denom == 0.0) throw std::invalid_argument("step sizes must not all be equal");
  est.slope = (n * sxy - sx * sy) / denom;
  return est;
}

std::vector<std::optional<double>> pairwise_orders(const std::vector<double>& errors,
                                                   const std::vector<double>& hs) {
  std::vector<std::optional<double>> out;
  for (std::size_t i = 0; i + 1 < errors.size(); ++i) {
    if (errors[i] < kNoiseFloor || errors[i + 1] < kNoiseFloor || hs[i] == hs[i + 1]) {
      out.push_back(std::nullopt);
      continue;
    }
    out.push_back(std::log(errors[i] / errors[i + 1]) / std::log(hs[i] / hs[i + 1]));
  }
  return out;
}

double local_error_bound(double h, const std::optional<FrequencyRange>& freq, bool alpha_nonzero) {
  const double h5 = std::pow(h, 5);
  if (!freq || freq->omega_max == 0.0) return h5;
  double e = std::min(h * h * h, h5 * freq->omega_max * freq->omega_max);
  if (freq->omega_min > 0.0) e = std::min(e, h * h / freq->omega_min);
  return alpha_nonzero ? h5 + e : e;
}

double max_stable_step(const Problem& problem) {
  const double k = std::numbers::pi * problem.modes / (problem.upper - problem.lower);
  return 2.0 * std::sqrt(3.0) / (std::sqrt(problem.laplacian_coeff * problem.dim) * k);
}

double regime_exponent(double rho) { return std::max({3.0, 2.0 + rho, 5.0 - 2.0 * rho}); }

ConvergenceReport run_convergence_study(const Problem& problem, SchemeId scheme,
                                        const std::vector<long>& steps, const State& reference,
                                        const StudyOptions& options) {
  if (steps.empty()) throw std::invalid_argument("no step counts given");
  if (!std::is_sorted(steps.begin(), steps.end()) ||
      std::adjacent_find(steps.begin(), steps.end()) != steps.end() || steps.front() < 1)
    throw std::invalid_argument("step counts must be positive and strictly increasing");

  const WaveSystem system = problem.system();
  const State initial = problem.initial_state(*system.grid);
  const double span = problem.T - problem.t0;

  ConvergenceReport report;
  report.scheme = scheme;
  report.modes = problem.modes;
  report.freq = system.forcing.freq_extrema();
  report.reference = options.reference.descriptor();
  report.rows.resize(steps.size());

  IntegrateOptions iopts;
  iopts.reference = options.reference.options;
  parallel_for(steps.size(), options.jobs, [&](std::size_t i) {
    ConvergenceRow& row = report.rows[i];
    row.n_steps = steps[i];
    row.h = span / static_cast<double>(steps[i]);
    if (scheme == SchemeId::Reference)
      iopts.reference_substeps = std::max(
          1L, static_cast<long>(std::ceil(options.reference.substeps_per_unit * row.h / 10.0)));
    State result;
    double best = std::numeric_limits<double>::infinity();
    for (int rep = 0; rep < std::max(1, options.timing_repeats); ++rep) {
      const auto start = std::chrono::steady_clock::now();
      result = integrate(scheme, system, initial, problem.T, steps[i], iopts);
      best = std::min(best, seconds_since(start));
    }
    row.runtime_s = std::max(best, 1e-9);
    Field diff(result.psi.size());
    for (std::size_t k = 0; k < diff.size(); ++k) diff[k] = result.psi[k] - reference.psi[k];
    row.error_l2 = SpectralGrid::rms(diff);
    if (options.norm_s > 0.0) row.error_hs = system.grid->sobolev_norm(diff, options.norm_s);
    row.bound = span * local_error_bound(row.h, report.freq, !system.forcing.alpha().is_zero()) / row.h;
  });

  std::vector<double> errors;
  std::vector<double> hs;
  for (const auto& r : report.rows) {
    errors.push_back(r.error_l2);
    hs.push_back(r.h);
  }
  const auto orders = pairwise_orders(errors, hs);
  for (std::size_t i = 0; i < orders.size(); ++i) report.rows[i + 1].order = orders[i];
  return report;
}

ConvergenceReport run_convergence_study(const Problem& problem, SchemeId scheme,
                                        const std::vector<long>& steps,
                                        const StudyOptions& options) {
  if (steps.empty()) throw std::invalid_argument("no step counts given");
  const double finest = static_cast<double>(*std::max_element(steps.begin(), steps.end()));
  if (static_cast<double>(options.reference.substeps_per_unit) < 100.0 * finest)
    throw std::invalid_argument("reference resolution must be at least 100x the finest step");
  const State reference = reference_solution(problem, options.reference);
  return run_convergence_study(problem, scheme, steps, reference, options);
}

RegimeTable regime_sweep(const Problem& problem_template, const std::vector<double>& omegas,
                         const std::vector<long>& steps, SchemeId scheme,
                         const StudyOptions& options) {
  if (omegas.empty()) throw std::invalid_argument("no sweep frequencies given");
  RegimeTable table;
  table.scheme = scheme;
  table.modes = problem_template.modes;
  table.omegas = omegas;
  std::sort(table.omegas.begin(), table.omegas.end());
  table.alpha_nonzero = !Expr(problem_template.alpha).is_zero();
  for (double omega : table.omegas)
    table.reports.push_back(run_convergence_study(problem_template.with_omega(omega), scheme, steps, options));

  // one constant for the whole table, fitted in log space on the slowest column
  double log_sum = 0.0;
  int count = 0;
  for (const auto& row : table.reports.front().rows) {
    if (row.error_l2 < kNoiseFloor || row.bound <= 0.0) continue;
    log_sum += std::log(row.error_l2 / row.bound);
    ++count;
  }
  table.fitted_constant = count > 0 ? std::exp(log_sum / count) : 1.0;
  for (auto& report : table.reports)
    for (auto& row : report.rows) row.bound *= table.fitted_constant;
  return table;
}

std::string to_csv(const std::vector<ConvergenceReport>& reports, bool header) {
  std::ostringstream out;
  if (header) out << kCsvHeader << '\n';
  for (const auto& rep : reports) {
    for (const auto& row : rep.rows) {
      out << to_string(rep.scheme) << ',';
      if (rep.freq) out << fmt(rep.freq->omega_min) << ',' << fmt(rep.freq->omega_max) << ',';
      else out << ",,";
      out << rep.modes << ',' << row.n_steps << ',' << fmt(row.h) << ',' << fmt(row.error_l2) << ',';
      if (row.order) out << fmt(*row.order);
      out << ',' << fmt(row.runtime_s) << ',' << fmt(row.bound) << '\n';
    }
  }
  return out.str();
}

std::string to_csv(const RegimeTable& table, bool header) { return to_csv(table.reports, header); }

std::string format_table(const std::vector<ConvergenceReport>& reports) {
  std::ostringstream out;
  char buf[160];
  for (const auto& rep : reports) {
    out << to_string(rep.scheme) << "  M=" << rep.modes;
    if (rep.freq) {
      std::snprintf(buf, sizeof buf, "  omega=[%g, %g]", rep.freq->omega_min, rep.freq->omega_max);
      out << buf;
    }
    out << "  reference=" << rep.reference << '\n';
    out << "   n_steps             h       error_l2     order    runtime_s\n";
    for (const auto& row : rep.rows) {
      std::snprintf(buf, sizeof buf, "%10ld  %12.5e  %12.5e  %8s  %11.4e\n", row.n_steps, row.h, row.error_l2,
                    row.order ? std::to_string(*row.order).substr(0, 6).c_str() : "-", row.runtime_s);
      out << buf;
    }
  }
  return out.str();
}

}  // namespace oscikg
