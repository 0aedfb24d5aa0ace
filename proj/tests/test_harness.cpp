#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <unistd.h>

#include "doctest.h"
#include "oscikg/harness.hpp"

using namespace oscikg;
namespace fs = std::filesystem;

namespace {

Problem free_wave() {
  Problem p;
  p.lower = -std::numbers::pi;
  p.upper = std::numbers::pi;
  p.modes = 32;
  p.psi0 = "cos(x) + 0.5*sin(3*x)";
  return p;
}

Problem example1(double omega, int modes = 64) {
  Problem p;
  p.lower = -10;
  p.upper = 10;
  p.modes = modes;
  p.alpha = "-x^2";
  p.components = {{"-0.1*x^2", omega, false, PhaseForm::Cosine}};
  p.psi0 = "exp(-x^2/2)";
  return p;
}

Problem example4_slow(int modes = 64) {
  Problem p;
  p.lower = -std::numbers::pi;
  p.upper = std::numbers::pi;
  p.modes = modes;
  p.alpha = "-x^2/(1+t^2)";
  p.psi0 = "exp(-(x-3)^2/2) + exp(-(x+3)^2/2)";
  return p;
}

fs::path scratch_dir(const std::string& name) {
  fs::path d = fs::temp_directory_path() / ("oscikg_test_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string drop_runtime(const std::string& csv) {
  std::istringstream in(csv);
  std::string line, out;
  while (std::getline(in, line)) {
    std::vector<std::string> cols;
    std::stringstream ls(line);
    std::string c;
    while (std::getline(ls, c, ',')) cols.push_back(c);
    if (line.back() == ',') cols.push_back("");
    cols.erase(cols.begin() + 8);
    for (auto& col : cols) out += col + ",";
    out += "\n";
  }
  return out;
}

}  // namespace

TEST_CASE("harness: observed orders") {
  const double e = 0.3;
  const auto o = pairwise_orders({e, e / 16, e / 256}, {0.4, 0.2, 0.1});
  REQUIRE(o.size() == 2);
  CHECK(*o[0] == doctest::Approx(4.0));
  CHECK(*o[1] == doctest::Approx(4.0));
  const auto floor = pairwise_orders({1e-6, 1e-13}, {0.2, 0.1});
  CHECK_FALSE(floor[0].has_value());

  std::vector<double> hs{0.5, 0.25, 0.125, 0.0625}, e4, e2;
  for (double h : hs) {
    e4.push_back(3 * std::pow(h, 4));
    e2.push_back(0.1 * h * h);
  }
  CHECK(estimate_order(e4, hs).slope == doctest::Approx(4.0));
  CHECK(estimate_order(e2, hs).slope == doctest::Approx(2.0));
  CHECK_FALSE(estimate_order(e4, hs).clamped);
  const auto clamped = estimate_order({1e-4, 0.0}, {0.2, 0.1});
  CHECK(clamped.clamped);
  CHECK(std::isfinite(clamped.slope));
  CHECK_THROWS(estimate_order({1.0}, {0.1}));
  CHECK_THROWS(estimate_order({1.0, 2.0}, {0.1}));
}

TEST_CASE("harness: regime exponents and bounds") {
  CHECK(regime_exponent(1.0) == 3.0);
  CHECK(regime_exponent(0.0) == 5.0);
  CHECK(regime_exponent(2.0) == 4.0);
  CHECK(regime_exponent(0.5) == 4.0);

  const double h = 0.1;
  CHECK(local_error_bound(h, std::nullopt, true) == doctest::Approx(1e-5));
  const FrequencyRange slow{1.0, 1.0};
  CHECK(local_error_bound(h, slow, false) == doctest::Approx(1e-5));
  const FrequencyRange fast{1e4, 1e4};
  CHECK(local_error_bound(h, fast, false) == doctest::Approx(1e-6));
  CHECK(local_error_bound(h, fast, true) == doctest::Approx(1.1e-5));
  const FrequencyRange wide{1.0, 1e5};
  CHECK(local_error_bound(h, wide, false) == doctest::Approx(1e-3));
}

TEST_CASE("harness: sha256") {
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("harness: canonical problem text") {
  Problem a = example1(100);
  Problem b = a;
  b.components[0].amplitude = "-0.1 * x**2";
  CHECK(canonical_json(a) == canonical_json(b));
  b.components[0].omega = 101;
  CHECK(canonical_json(a) != canonical_json(b));
  CHECK(canonical_json(a).find("\"alpha\"") != std::string::npos);
}

TEST_CASE("harness: placeholders") {
  Problem p = example1(0);
  p.components[0].omega_placeholder = true;
  CHECK(p.has_placeholder());
  CHECK_THROWS(p.forcing());
  Problem bound = p.with_omega(250);
  CHECK_FALSE(bound.has_placeholder());
  CHECK(bound.components[0].omega == 250);
  CHECK(example1(3).with_omega(7).components[0].omega == 7);
  Problem two = example1(3);
  two.components.push_back(two.components[0]);
  CHECK_THROWS(two.with_omega(5));
}

TEST_CASE("harness: snapshots") {
  const fs::path dir = scratch_dir("snap");
  auto grid = make_grid(-1, 1, 8, 2);
  State s{Field(64), Field(64), 0.0};
  for (int i = 0; i < 64; ++i) {
    s.psi[i] = std::sin(i) * 1e-300 + i;
    s.dpsi[i] = -1.0 / (i + 1);
  }
  const std::string path = (dir / "s.bin").string();
  write_snapshot(path, *grid, s);
  CHECK(fs::file_size(path) == 8 + 4 + 8 + 2 * 64 * 8);
  std::ifstream raw(path, std::ios::binary);
  char head[12];
  raw.read(head, 12);
  CHECK(std::string(head, 7) == "OSCIKG1");
  CHECK(head[7] == '\0');
  CHECK(head[8] == 2);
  const State r = read_snapshot(path, *grid);
  CHECK(r.psi == s.psi);
  CHECK(r.dpsi == s.dpsi);
  CHECK_THROWS(read_snapshot(path, *make_grid(-1, 1, 8, 1)));
  CHECK_THROWS(read_snapshot(path, *make_grid(-1, 1, 16, 2)));
  {
    std::ofstream bad(path, std::ios::binary | std::ios::trunc);
    bad << "NOTASNAPSHOT";
  }
  CHECK_THROWS(read_snapshot(path, *grid));
  fs::remove_all(dir);
}

TEST_CASE("harness: reference cache") {
  const fs::path dir = scratch_dir("cache");
  Problem p = example1(10, 32);
  ReferenceSpec spec;
  spec.substeps_per_unit = 20000;
  spec.cache_dir = dir.string();

  const State first = reference_solution(p, spec);
  std::vector<fs::path> entries(fs::directory_iterator(dir), fs::directory_iterator{});
  REQUIRE(entries.size() == 1);
  CHECK(entries[0].extension() == ".bin");
  CHECK(entries[0].stem().string().size() == 64);

  const auto t0 = std::chrono::steady_clock::now();
  const State cached = reference_solution(p, spec);
  const double hit = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(cached.psi == first.psi);
  CHECK(cached.dpsi == first.dpsi);
  CHECK(cached.t == p.T);
  CHECK(hit < 0.05);

  {
    std::ofstream corrupt(entries[0], std::ios::binary | std::ios::trunc);
    corrupt << "garbage";
  }
  const State recomputed = reference_solution(p, spec);
  CHECK(recomputed.psi == first.psi);
  CHECK(fs::file_size(entries[0]) > 100);

  // a different resolution is a different entry
  spec.substeps_per_unit = 10000;
  reference_solution(p, spec);
  CHECK(std::distance(fs::directory_iterator(dir), fs::directory_iterator{}) == 2);
  fs::remove_all(dir);
}

TEST_CASE("harness: free wave study is fourth order") {
  StudyOptions opts;
  opts.reference.substeps_per_unit = 4000;
  for (SchemeId id : {SchemeId::Gamma1, SchemeId::Gamma2}) {
    const auto rep = run_convergence_study(free_wave(), id, {2, 4, 8, 16}, opts);
    REQUIRE(rep.rows.size() == 4);
    CHECK_FALSE(rep.rows[0].order.has_value());
    for (std::size_t i = 1; i < rep.rows.size(); ++i) {
      REQUIRE(rep.rows[i].order.has_value());
      CHECK(*rep.rows[i].order == doctest::Approx(4.0).epsilon(0.05));
    }
  }
}

TEST_CASE("harness: report integrity and the H^s column") {
  StudyOptions opts;
  opts.reference.substeps_per_unit = 8000;
  opts.norm_s = 1.0;
  const auto rep = run_convergence_study(example1(100, 32), SchemeId::Gamma2, {4, 8, 16, 32}, opts);
  CHECK(rep.scheme == SchemeId::Gamma2);
  CHECK(rep.modes == 32);
  REQUIRE(rep.freq);
  CHECK(rep.freq->omega_max == 100);
  CHECK(rep.reference.find("substeps_per_unit=8000") != std::string::npos);
  for (std::size_t i = 0; i < rep.rows.size(); ++i) {
    const auto& r = rep.rows[i];
    CHECK(r.runtime_s > 0);
    CHECK(std::isfinite(r.error_l2));
    CHECK(r.error_l2 >= 0);
    REQUIRE(r.error_hs.has_value());
    CHECK(*r.error_hs >= 0);
    CHECK(r.bound > 0);
    if (i > 0) CHECK(r.h < rep.rows[i - 1].h);
  }
  CHECK_THROWS(run_convergence_study(example1(100, 32), SchemeId::Gamma2, {8, 4}, opts));
  CHECK_THROWS(run_convergence_study(example1(100, 32), SchemeId::Gamma2, {4, 4}, opts));
  // reference must be at least 100x finer than the finest tested step
  CHECK_THROWS(run_convergence_study(example1(100, 32), SchemeId::Gamma2, {4, 8, 100}, opts));
}

TEST_CASE("harness: non-oscillatory errors decrease monotonically") {
  StudyOptions opts;
  opts.reference.substeps_per_unit = 20000;
  for (SchemeId id : {SchemeId::Gamma1, SchemeId::Gamma2}) {
    const auto rep = run_convergence_study(example4_slow(32), id, {5, 10, 20, 40, 80}, opts);
    for (std::size_t i = 1; i < rep.rows.size(); ++i)
      if (rep.rows[i].error_l2 > kNoiseFloor) CHECK(rep.rows[i].error_l2 <= 1.05 * rep.rows[i - 1].error_l2);
  }
}

TEST_CASE("harness: concurrent cells give identical errors and CSV") {
  StudyOptions serial;
  serial.reference.substeps_per_unit = 10000;
  StudyOptions parallel = serial;
  parallel.jobs = 3;
  const Problem p = example1(50, 32);
  const State ref = reference_solution(p, serial.reference);
  const auto a = run_convergence_study(p, SchemeId::Gamma1, {2, 4, 8, 16}, ref, serial);
  const auto b = run_convergence_study(p, SchemeId::Gamma1, {2, 4, 8, 16}, ref, parallel);
  for (std::size_t i = 0; i < a.rows.size(); ++i) CHECK(a.rows[i].error_l2 == b.rows[i].error_l2);
  CHECK(drop_runtime(to_csv({a})) == drop_runtime(to_csv({b})));
}

TEST_CASE("harness: CSV layout") {
  ConvergenceReport r;
  r.scheme = SchemeId::Gamma1;
  r.modes = 64;
  r.freq = FrequencyRange{1.0, 1e5};
  r.rows = {{1, 1.0, 0.5, std::nullopt, 0.25, std::nullopt, 2.0}, {2, 0.5, 0.03125, std::nullopt, 0.5, 4.0, 1.0}};
  const std::string csv = to_csv({r});
  std::istringstream in(csv);
  std::string header, row1, row2;
  std::getline(in, header);
  std::getline(in, row1);
  std::getline(in, row2);
  CHECK(header == kCsvHeader);
  CHECK(row1 ==
        "gamma1,1.0000000000000000e+00,1.0000000000000000e+05,64,1,1.0000000000000000e+00,5.0000000000000000e-01,,"
        "2.5000000000000000e-01,2.0000000000000000e+00");
  CHECK(row2.find(",4.0000000000000000e+00,") != std::string::npos);
  CHECK(to_csv({r}, false).find("scheme") == std::string::npos);

  ConvergenceReport none;
  none.scheme = SchemeId::Gamma2;
  none.modes = 8;
  none.rows = {{1, 1.0, 0.5, std::nullopt, 0.1, std::nullopt, 1.0}};
  CHECK(to_csv({none}, false).rfind("gamma2,,,8,1,", 0) == 0);
  CHECK(format_table({r}).find("gamma1") != std::string::npos);
}

TEST_CASE("harness: regime sweep") {
  Problem tmpl = example1(0, 32);
  tmpl.components[0].omega_placeholder = true;
  StudyOptions opts;
  opts.reference.substeps_per_unit = 16000;
  const auto table = regime_sweep(tmpl, {1e3, 1.0, 30.0}, {4, 8, 16, 32}, SchemeId::Gamma2, opts);
  CHECK(table.omegas == std::vector<double>{1.0, 30.0, 1e3});
  REQUIRE(table.reports.size() == 3);
  CHECK(table.alpha_nonzero);
  CHECK(table.fitted_constant > 0);
  // the slow column is in the h^3-or-better regime
  for (const auto& row : table.reports[0].rows)
    if (row.order) CHECK(*row.order >= 3.0);
  // bound column is C (T - t0) local(h) / h
  const auto& row = table.reports[2].rows[1];
  const double expected = table.fitted_constant * local_error_bound(row.h, FrequencyRange{1e3, 1e3}, true) / row.h;
  CHECK(row.bound == doctest::Approx(expected).epsilon(1e-12));
  const std::string csv = to_csv(table);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 12);
}
