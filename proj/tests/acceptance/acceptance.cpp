// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "oracles.hpp"
#include "qtomo/corruption.hpp"
#include "qtomo/error.hpp"
#include "qtomo/experiment.hpp"
#include "qtomo/fbp.hpp"
#include "qtomo/io.hpp"
#include "qtomo/phantom.hpp"
#include "qtomo/projector.hpp"
#include "qtomo/qubo.hpp"
#include "qtomo/rng.hpp"
#include "qtomo/solvers.hpp"

using namespace qtomo;
namespace fs = std::filesystem;

namespace {

// Tolerances and limits, fixed here so every run judges the same way.
constexpr double kTargetRel = 1e-6;          // 1
constexpr double kDecompositionRel = 1e-9;   // 2
constexpr int kAnnealAgreeMin = 95;          // 3
constexpr double kRingBudgetS = 60.0;        // 4
constexpr std::uint64_t kRingPhantoms = 20;  // 4
constexpr double kFbpFloor = 0.1;            // 6
constexpr int kFbpOrderedMin = 8;            // 6
constexpr int kDetectorExactMin = 95;        // 7
constexpr double kMassRel = 1e-9;            // 8
constexpr double kIsingAbs = 1e-9;           // 9
constexpr double kSuiteBudgetS = 300.0;      // 10
constexpr double kOptimalityBudgetS = 10.0;  // 1

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// A representable encoding for integer images in [0, levels].
Encoding pick_encoding(int levels, std::mt19937_64& gen) {
  switch (gen() % 4) {
    case 0: {
      int m = 0;
      while ((2 << m) - 1 < levels) ++m;
      return Encoding::binary_power(m + static_cast<int>(gen() % 2));
    }
    case 1:
      return Encoding::unit_step(levels);
    case 2: {
      std::vector<double> a;
      for (int v = 1; v <= levels; ++v) a.push_back(v);
      return Encoding::mac_levels(a);
    }
    default: {
      std::vector<double> a;
      for (int v = 0; v <= levels + static_cast<int>(gen() % 2); ++v) a.push_back(v);
      return Encoding::offset_levels(a);
    }
  }
}

// Random rows and angles, never the whole domain.
ExclusionMask random_mask(const Sinogram& s, std::mt19937_64& gen) {
  ExclusionMask m = ExclusionMask::for_sinogram(s);
  const int rows = static_cast<int>(gen() % static_cast<std::uint64_t>(s.bins() / 3 + 1));
  for (int k = 0; k < rows; ++k) m.add_row(static_cast<int>(gen() % static_cast<std::uint64_t>(s.bins())));
  if (s.angle_count() > 1 && gen() % 2) m.add_angle(static_cast<int>(gen() % static_cast<std::uint64_t>(s.angle_count())));
  const int loose = static_cast<int>(gen() % 4);
  for (int k = 0; k < loose; ++k) {
    m.add(static_cast<int>(gen() % static_cast<std::uint64_t>(s.angle_count())),
          static_cast<int>(gen() % static_cast<std::uint64_t>(s.bins())));
  }
  return m;
}

Outcome ground_truth_optimality() {
  const auto t0 = Clock::now();
  std::mt19937_64 gen(101);
  int ok = 0;
  double worst = 0.0;
  for (int inst = 0; inst < 50; ++inst) {
    const int n = 6 + static_cast<int>(gen() % 7);
    const int levels = 1 + static_cast<int>(gen() % 3);
    const int angles = n / 2 + static_cast<int>(gen() % static_cast<std::uint64_t>(2 * n));
    const Image truth = gen_random_phantom(n, levels, gen());
    const Sinogram s = radon(truth, Geometry::uniform(n, angles));
    const Encoding enc = pick_encoding(levels, gen);
    const ExclusionMask mask = random_mask(s, gen);
    const QuboModel m = build_qubo(s, enc, mask);
    const double e = energy(m, encode(truth, enc));
    const double rel = std::abs(e - m.target_minimum) / std::max(std::abs(m.target_minimum), 1e-300);
    worst = std::max(worst, rel);
    if (rel <= kTargetRel) ++ok;
  }
  const double t = seconds_since(t0);
  return {ok == 50 && t < kOptimalityBudgetS, fmt("%d/50 at target, worst rel %.2e, %.2f s", ok, worst, t)};
}

Outcome energy_decomposition() {
  std::mt19937_64 gen(202);
  int ok = 0;
  int total = 0;
  double worst = 0.0;
  for (int inst = 0; inst < 20; ++inst) {
    const int n = 4 + static_cast<int>(gen() % 4);
    const int angles = 2 + static_cast<int>(gen() % static_cast<std::uint64_t>(n));
    const Geometry g = Geometry::uniform(n, angles);
    Sinogram s = radon(gen_random_phantom(n, 3, gen()), g);
    // Off-model data as well: perturb every cell.
    std::uniform_real_distribution<double> noise(-0.3, 0.3);
    for (double& v : s.values) v += noise(gen);
    Encoding enc;
    switch (inst % 4) {
      case 0: enc = Encoding::binary_power(1); break;
      case 1: enc = Encoding::unit_step(2); break;
      case 2: enc = Encoding::mac_levels({0.4, 1.1, 2.7}); break;
      default: enc = Encoding::offset_levels({0.5, 1.25, 3.0}); break;
    }
    const ExclusionMask mask = random_mask(s, gen);
    const QuboModel m = build_qubo(s, enc, mask);
    const auto dense = oracle::dense_system(g);
    for (int trial = 0; trial < 100; ++trial) {
      Assignment a(m.num_vars);
      for (auto& b : a) b = static_cast<std::uint8_t>(gen() & 1);
      const double want = oracle::residual_sum(dense, s, mask, oracle::pixel_values(a, enc, n));
      const double got = energy(m, a) + m.constant;
      const double rel = std::abs(got - want) / std::max(std::abs(want), 1e-12);
      worst = std::max(worst, rel);
      ++total;
      if (rel <= kDecompositionRel) ++ok;
    }
  }
  return {ok == total, fmt("%d/%d assignments agree, worst rel %.2e", ok, total, worst)};
}

Outcome brute_force_equivalence() {
  std::mt19937_64 gen(303);
  AnnealSchedule sched;
  sched.sweeps = 2000;
  sched.restarts = 8;
  int agree = 0;
  int greedy_below = 0;
  int anneal_below = 0;
  for (int inst = 0; inst < 100; ++inst) {
    const QuboModel m = oracle::random_model(16, gen);
    const double ref = brute_force(m).energy;
    const double tol = 1e-9 * (1.0 + std::abs(ref));
    sched.seed = static_cast<std::uint64_t>(inst);
    const double sa = simulated_anneal(m, sched).energy;
    const double gr = greedy_descent(m, static_cast<std::uint64_t>(inst)).energy;
    if (std::abs(sa - ref) <= tol) ++agree;
    if (sa < ref - tol) ++anneal_below;
    if (gr < ref - tol) ++greedy_below;
  }
  return {agree >= kAnnealAgreeMin && greedy_below == 0 && anneal_below == 0,
          fmt("annealing matched %d/100, greedy below optimum %d, annealing below optimum %d", agree,
              greedy_below, anneal_below)};
}

Outcome ring_robustness() {
  const auto t0 = Clock::now();
  const std::vector<double> rates = {0.1, 0.2, 0.3, 0.4, 0.5};
  const Encoding enc = Encoding::unit_step(1);
  AnnealSchedule sched;
  sched.sweeps = 1000;
  sched.restarts = 8;
  int identifiable = 0;
  int exact = 0;
  int detector_exact = 0;
  std::vector<int> per_rate(rates.size(), 0);
  for (std::uint64_t seed = 0; seed < kRingPhantoms; ++seed) {
    const Image truth = gen_random_phantom(10, 1, derive_seed(404, seed));
    const Geometry g = Geometry::uniform(10, 20);
    const ProjectionOperator op(g);
    const Sinogram clean = apply_operator(op, truth);
    for (std::size_t r = 0; r < rates.size(); ++r) {
      RingOptions opt;
      opt.rate = rates[r];
      opt.seed = derive_seed(405, seed);
      const RingCorruption c = inject_ring_errors(clean, opt);
      ExclusionMask mask = ExclusionMask::for_sinogram(clean, MaskSource::Manual);
      for (int row : c.report.affected) mask.add_row(row);
      try {
        if (detect_error_rows(c.sinogram).rows() == c.report.affected) ++detector_exact;
      } catch (const DetectionFailed&) {
      }
      if (!identifiability(op, mask).identifiable()) continue;
      ++identifiable;
      ++per_rate[r];
      sched.seed = derive_seed(406, seed * 16 + r);
      const QuboModel m = build_qubo(c.sinogram, op, enc, mask);
      const Solution sol = simulated_anneal(m, sched);
      if (sol.reached_target && mae(decode(sol.assignment, enc, 10), truth) == 0.0) ++exact;
    }
  }
  const double t = seconds_since(t0);
  bool every_rate = true;
  for (int k : per_rate) every_rate = every_rate && k > 0;
  return {exact == identifiable && every_rate && t < kRingBudgetS,
          fmt("%d/%d identifiable cases exact (per rate %d %d %d %d %d), detector agreed on %d/%d, %.2f s",
              exact, identifiable, per_rate[0], per_rate[1], per_rate[2], per_rate[3], per_rate[4],
              detector_exact, static_cast<int>(kRingPhantoms * rates.size()), t)};
}

Outcome limited_angle() {
  EllipseSpec e{0.3, -0.2, 2.4, 1.5, 30.0, 1};
  const Image truth = pad(gen_ellipse_phantom(6, {e}), 1);
  const Geometry g = Geometry::uniform(8, 16);
  const ProjectionOperator op(g);
  const Sinogram full = apply_operator(op, truth);
  const AngleDeletion del = delete_angles(full, 0.5, DeletionMode::PrefixKeep, 0);
  bool below_90 = true;
  for (double th : del.reduced.geometry.angles_deg) below_90 = below_90 && th < 90.0;

  const RankCheck rank = identifiability(op, del.mask);
  Sinogram data = full;
  for (int a : del.mask.angles()) {
    for (int s = 0; s < data.bins(); ++s) data.at(a, s) = 0.0;
  }
  const Encoding enc = Encoding::unit_step(1);
  AnnealSchedule sched;
  sched.sweeps = 1000;
  sched.seed = 505;
  const Solution sol = simulated_anneal(build_qubo(data, op, enc, del.mask), sched);
  const double qubo_mae = mae(decode(sol.assignment, enc, 8), truth);
  const double fbp_mae = mae(threshold_round(fbp(del.reduced), 1), truth);
  return {below_90 && rank.identifiable() && qubo_mae == 0.0 && fbp_mae > 0.0,
          fmt("%d angles kept (all < 90: %s), rank %zu/%zu, QUBO MAE %.4f, FBP MAE %.4f",
              del.reduced.angle_count(), below_90 ? "yes" : "no", rank.rank, rank.unknowns, qubo_mae,
              fbp_mae)};
}

Outcome fbp_degradation() {
  const std::vector<double> rates = {0.1, 0.2, 0.3, 0.4};
  int ordered = 0;
  int above_floor = 0;
  double min_at_30 = 1e300;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Image truth = gen_random_phantom(50, 3, derive_seed(606, seed));
    const Sinogram clean = radon(truth, Geometry::uniform(50, 50));
    std::vector<double> err;
    for (double rate : rates) {
      RingOptions opt;
      opt.rate = rate;
      opt.seed = derive_seed(607, seed);
      err.push_back(mae(threshold_round(fbp(inject_ring_errors(clean, opt).sinogram), 3), truth));
    }
    bool inc = true;
    for (std::size_t k = 1; k < err.size(); ++k) inc = inc && err[k] > err[k - 1];
    if (inc) ++ordered;
    if (err[2] > kFbpFloor && err[3] > kFbpFloor) ++above_floor;
    min_at_30 = std::min({min_at_30, err[2], err[3]});
  }
  return {ordered >= kFbpOrderedMin && above_floor == 10,
          fmt("strictly increasing for %d/10 seeds, above %.1f at rates >= 0.3 for %d/10 (min %.4f)", ordered,
              kFbpFloor, above_floor, min_at_30)};
}

Outcome detector_accuracy() {
  const std::vector<int> sizes = {20, 24, 32, 40};
  int exact = 0;
  int failed = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const int n = sizes[seed % sizes.size()];
    Rng rng(derive_seed(707, seed));
    const double r = rng.uniform(n / 6.0, n / 3.0);
    const double off = rng.uniform(0.0, n / 2.0 - std::sqrt(0.5) - 0.5 - r);
    const double phi = rng.uniform(0.0, 2.0 * std::acos(-1.0));
    const EllipseSpec e{off * std::cos(phi), off * std::sin(phi), r, r, 0.0, 1};
    const Sinogram clean = radon(gen_ellipse_phantom(n, {e}), Geometry::uniform(n, n));
    RingOptions opt;
    opt.rate = 5.0 / support_band(clean).size() + 1e-9;
    opt.seed = derive_seed(708, seed);
    opt.gap_lo = 0.9;
    opt.gap_hi = 1.1;
    const RingCorruption c = inject_ring_errors(clean, opt);
    DetectOptions d;
    d.k = 3.0;
    try {
      if (detect_error_rows(c.sinogram, d).rows() == c.report.affected) ++exact;
    } catch (const DetectionFailed&) {
      ++failed;
    }
  }
  return {exact >= kDetectorExactMin,
          fmt("precision = recall = 1 on %d/100 seeds (%d detection failures)", exact, failed)};
}

Outcome mass_conservation() {
  std::mt19937_64 gen(808);
  double worst = 0.0;
  int ok = 0;
  for (int inst = 0; inst < 100; ++inst) {
    const int n = 5 + static_cast<int>(gen() % 30);
    const int levels = 1 + static_cast<int>(gen() % 5);
    const Image img = gen_random_phantom(n, levels, gen());
    const Sinogram s = radon(img, Geometry::uniform(n, 3 + static_cast<int>(gen() % 40)));
    const double mass = static_cast<double>(img.sum());
    bool good = true;
    for (int a = 0; a < s.angle_count(); ++a) {
      double total = 0.0;
      for (int b = 0; b < s.bins(); ++b) total += s.at(a, b);
      const double dev = std::abs(total - mass);
      worst = std::max(worst, mass > 0 ? dev / mass : dev);
      good = good && dev <= kMassRel * mass;
    }
    if (good) ++ok;
  }
  return {ok == 100, fmt("%d/100 phantoms conserve mass, worst rel %.2e", ok, worst)};
}

Outcome ising_round_trip() {
  std::mt19937_64 gen(909);
  double worst = 0.0;
  std::size_t checked = 0;
  for (int inst = 0; inst < 20; ++inst) {
    const std::size_t n = 1 + gen() % 12;
    QuboModel m = oracle::random_model(n, gen, 0.7);
    m.constant = std::normal_distribution<double>(0.0, 3.0)(gen);
    const IsingModel is = qubo_to_ising(m);
    const auto dense = oracle::dense_matrix(m);
    Assignment q(n);
    for (std::uint64_t code = 0; code < (std::uint64_t{1} << n); ++code) {
      for (std::size_t i = 0; i < n; ++i) q[i] = (code >> i) & 1;
      const double want = oracle::dense_energy(dense, q) + m.constant;
      worst = std::max(worst, std::abs(ising_energy(is, to_spins(q)) + is.constant - want));
      ++checked;
    }
  }
  return {worst <= kIsingAbs, fmt("%zu assignments over 20 models, worst |diff| %.2e", checked, worst)};
}

Outcome suite_determinism(const std::string& cli, const std::string& config, const fs::path& work) {
  fs::remove_all(work);
  fs::create_directories(work);
  double slowest = 0.0;
  for (int threads : {1, 8}) {
    const fs::path out = work / ("threads" + std::to_string(threads));
    const std::string cmd = "\"" + cli + "\" experiment \"" + config + "\" --out \"" + out.string() +
                            "\" --threads " + std::to_string(threads) + " > \"" +
                            (work / ("log" + std::to_string(threads) + ".txt")).string() + "\" 2>&1";
    const auto t0 = Clock::now();
    const int rc = std::system(cmd.c_str());
    slowest = std::max(slowest, seconds_since(t0));
    if (rc != 0) return {false, fmt("suite run with --threads %d exited with %d", threads, rc)};
  }
  const std::string a = io::read_text(work / "threads1" / "results.csv");
  const std::string b = io::read_text(work / "threads8" / "results.csv");
  const bool same = !a.empty() && a == b;
  return {same && slowest < kSuiteBudgetS,
          fmt("results.csv %s across thread counts, slowest run %.1f s", same ? "identical" : "differs", slowest)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::string cli = QTOMO_CLI_PATH;
  std::string config = QTOMO_SUITE_CONFIG;
  std::string work = (fs::temp_directory_path() / "qtomo_acceptance").string();
  app.add_option("--cli", cli, "qtomo executable");
  app.add_option("--config", config, "Experiment suite config");
  app.add_option("--work", work, "Scratch directory for suite runs");
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"ground-truth optimality", ground_truth_optimality},
      {"energy decomposition", energy_decomposition},
      {"brute-force equivalence", brute_force_equivalence},
      {"ring-artifact robustness", ring_robustness},
      {"limited-angle reconstruction", limited_angle},
      {"FBP degradation ordering", fbp_degradation},
      {"detector accuracy", detector_accuracy},
      {"mass conservation", mass_conservation},
      {"Ising round trip", ising_round_trip},
      {"thread determinism", [&] { return suite_determinism(cli, config, work); }},
  };

  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", k + 1, criteria[k].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
