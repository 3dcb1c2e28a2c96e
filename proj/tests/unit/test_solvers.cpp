#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "qtomo/error.hpp"
#include "qtomo/parallel.hpp"
#include "qtomo/phantom.hpp"
#include "qtomo/solvers.hpp"

using namespace qtomo;

namespace {

bool one_flip_local(const QuboModel& m, const Solution& s) {
  Assignment a = s.assignment;
  const double base = energy(m, a);
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] ^= 1;
    const bool better = energy(m, a) < base - 1e-9;
    a[i] ^= 1;
    if (better) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("brute force on the small examples") {
  const Solution one = brute_force(QuboModel::from_terms(1, {-1.0}, {}));
  CHECK(one.assignment == Assignment{1});
  CHECK(one.energy == -1.0);

  // (q1 + q2 - 2)^2 without its constant.
  const Solution two = brute_force(QuboModel::from_terms(2, {-3.0, -3.0}, {{0, 1, 2.0}}));
  CHECK(two.assignment == Assignment{1, 1});
  CHECK(two.energy == -4.0);

  const Solution none = brute_force(QuboModel::from_terms(3, {0, 0, 0}, {}));
  CHECK(none.assignment == Assignment(3, 0));
  CHECK(none.energy == 0.0);
}

TEST_CASE("brute force agrees with plain enumeration") {
  std::mt19937_64 gen(17);
  for (int inst = 0; inst < 20; ++inst) {
    const QuboModel m = oracle::random_model(12, gen, 0.5);
    const auto [best, bits] = oracle::exhaustive_minimum(m);
    const Solution s = brute_force(m);
    CHECK(s.energy == doctest::Approx(best).epsilon(1e-12));
    CHECK(energy(m, s.assignment) == doctest::Approx(best).epsilon(1e-12));
  }
}

TEST_CASE("brute force refuses large models") {
  std::vector<double> lin(27, -1.0);
  CHECK_THROWS_AS(brute_force(QuboModel::from_terms(27, lin, {})), TooLarge);
  // Inactive variables do not count toward the limit.
  std::vector<double> sparse(40, 0.0);
  sparse[3] = -1.0;
  const Solution s = brute_force(QuboModel::from_terms(40, sparse, {}));
  CHECK(s.energy == -1.0);
  CHECK(s.assignment[3] == 1);
}

TEST_CASE("greedy ends in a one-flip local minimum and is deterministic") {
  std::mt19937_64 gen(5);
  for (int inst = 0; inst < 10; ++inst) {
    const QuboModel m = oracle::random_model(30, gen, 0.3);
    const Solution a = greedy_descent(m, 123);
    const Solution b = greedy_descent(m, 123);
    CHECK(one_flip_local(m, a));
    CHECK(a.assignment == b.assignment);
    CHECK(a.energy == b.energy);
    CHECK(a.energy == energy(m, a.assignment));
  }
}

TEST_CASE("greedy solves separable models exactly") {
  std::mt19937_64 gen(8);
  std::normal_distribution<double> coef(0.0, 1.0);
  std::vector<double> lin(50);
  for (double& c : lin) c = coef(gen);
  const QuboModel m = QuboModel::from_terms(50, lin, {});
  const Solution s = greedy_descent(m, 1);
  for (std::size_t i = 0; i < 50; ++i) CHECK(s.assignment[i] == (lin[i] < 0 ? 1 : 0));
}

TEST_CASE("annealing on one variable") {
  AnnealSchedule sched;
  sched.seed = 4;
  for (double c : {-2.0, 3.0}) {
    const Solution s = simulated_anneal(QuboModel::from_terms(1, {c}, {}), sched);
    CHECK(s.assignment == Assignment{static_cast<std::uint8_t>(c < 0)});
  }
}

TEST_CASE("annealing matches brute force on small random models") {
  std::mt19937_64 gen(42);
  AnnealSchedule sched;
  sched.sweeps = 500;
  sched.restarts = 4;
  int agree = 0;
  for (int inst = 0; inst < 20; ++inst) {
    const QuboModel m = oracle::random_model(14, gen);
    sched.seed = static_cast<std::uint64_t>(inst);
    const double ref = brute_force(m).energy;
    const Solution s = simulated_anneal(m, sched);
    CHECK(s.energy >= ref - 1e-9);
    CHECK(greedy_descent(m, sched.seed).energy >= ref - 1e-9);
    if (s.energy <= ref + 1e-9) ++agree;
  }
  CHECK(agree >= 19);
}

TEST_CASE("annealing reconstructs an 8x8 binary phantom") {
  const Image truth = gen_random_phantom(8, 1, 21);
  const Sinogram s = radon(truth, Geometry::uniform(8, 8));
  const Encoding enc = Encoding::unit_step(1);
  const QuboModel m = build_qubo(s, enc, ExclusionMask::for_sinogram(s));
  CHECK(m.num_vars == 64);
  AnnealSchedule sched;
  sched.seed = 1;
  sched.sweeps = 1000;
  const Solution sol = simulated_anneal(m, sched);
  CHECK(sol.reached_target);
  CHECK(decode(sol.assignment, enc, 8).pixels() == truth.pixels());
}

TEST_CASE("annealing does not depend on the thread count") {
  std::mt19937_64 gen(9);
  const QuboModel m = oracle::random_model(40, gen, 0.2);
  AnnealSchedule sched;
  sched.seed = 77;
  sched.sweeps = 300;
  set_num_threads(1);
  const Solution a = simulated_anneal(m, sched);
  set_num_threads(4);
  const Solution b = simulated_anneal(m, sched);
  set_num_threads(1);
  CHECK(a.assignment == b.assignment);
  CHECK(a.energy == b.energy);
  CHECK(a.restarts_used == b.restarts_used);
}

TEST_CASE("schedule validation and target tolerance") {
  AnnealSchedule bad;
  bad.sweeps = 0;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  bad = AnnealSchedule{};
  bad.t_start = 1.0;
  bad.t_end = 2.0;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  CHECK(target_tolerance(-1000.0) == doctest::Approx(1e-3 + 1e-9));
  CHECK(solver_kind_from_string("anneal") == SolverKind::Anneal);
  CHECK(solver_kind_from_string(to_string(SolverKind::BruteForce)) == SolverKind::BruteForce);
}
