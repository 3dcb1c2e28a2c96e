#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>

#include "qtomo/qubo.hpp"

namespace qtomo {

enum class SolverKind { BruteForce, Greedy, Anneal };

std::string to_string(SolverKind kind);
SolverKind solver_kind_from_string(const std::string& name);

struct Solution {
  Assignment assignment;
  /// Constant excluded, recomputed from scratch.
  double energy = 0.0;
  SolverKind solver = SolverKind::BruteForce;
  int restarts_used = 0;
  double wall_time = 0.0;
  bool reached_target = false;
  std::uint64_t seed = 0;
};

struct AnnealSchedule {
  int sweeps = 200;
  /// Unset: the largest single-flip |dE| at each restart's random start.
  std::optional<double> t_start;
  /// Unset: t_start / 1000.
  std::optional<double> t_end;
  int restarts = 8;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Slack allowed when comparing an energy against the target minimum.
double target_tolerance(double target_minimum);
bool reaches_target(const QuboModel& model, double energy);

inline constexpr std::size_t kBruteForceMaxVars = 26;

/// Exhaustive search over the variables that carry terms (the rest stay 0).
/// Ties go to the lexicographically smallest bit vector. Throws TooLarge
/// beyond kBruteForceMaxVars such variables.
Solution brute_force(const QuboModel& model);

/// Single-bit-flip descent from a seeded random start.
Solution greedy_descent(const QuboModel& model, std::uint64_t seed);

/// Metropolis annealing on a geometric temperature ladder, best of restarts.
Solution simulated_anneal(const QuboModel& model, const AnnealSchedule& schedule);

}  // namespace qtomo
