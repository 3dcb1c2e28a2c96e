#include "qtomo/solvers.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <vector>

#include "qtomo/error.hpp"
#include "qtomo/parallel.hpp"
#include "qtomo/rng.hpp"

namespace qtomo {

std::string to_string(SolverKind kind) {
  switch (kind) {
    case SolverKind::BruteForce: return "brute";
    case SolverKind::Greedy: return "greedy";
    case SolverKind::Anneal: return "sa";
  }
  return "?";
}

SolverKind solver_kind_from_string(const std::string& name) {
  if (name == "brute" || name == "brute-force") return SolverKind::BruteForce;
  if (name == "greedy") return SolverKind::Greedy;
  if (name == "sa" || name == "anneal") return SolverKind::Anneal;
  throw InvalidArgument("unknown solver '" + name + "'");
}

void AnnealSchedule::validate() const {
  if (sweeps < 1) throw InvalidArgument("annealing needs at least one sweep");
  if (restarts < 1) throw InvalidArgument("annealing needs at least one restart");
  if (t_end && !(*t_end > 0.0)) throw InvalidArgument("final temperature must be positive");
  if (t_start && !(*t_start > 0.0)) throw InvalidArgument("initial temperature must be positive");
  if (t_start && t_end && !(*t_start > *t_end)) {
    throw InvalidArgument("initial temperature must exceed the final one");
  }
}

double target_tolerance(double target_minimum) { return 1e-6 * std::abs(target_minimum) + 1e-9; }

bool reaches_target(const QuboModel& model, double e) {
  return e <= model.target_minimum + target_tolerance(model.target_minimum);
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

/// Symmetric neighbour lists over the active variables.
struct Adjacency {
  struct Link {
    std::uint32_t var;
    double coeff;
  };
  std::vector<std::uint32_t> vars;
  std::vector<std::size_t> offsets;
  std::vector<Link> links;
  /// Sum of |coefficients|; scales the comparison slack.
  double scale = 0.0;

  explicit Adjacency(const QuboModel& model) {
    const std::size_t n = model.num_vars;
    const std::vector<char> active = model.active();
    for (std::size_t i = 0; i < n; ++i) {
      if (active[i]) vars.push_back(static_cast<std::uint32_t>(i));
    }
    std::vector<std::size_t> degree(n + 1, 0);
    for (const QuadTerm& t : model.quadratic) {
      ++degree[t.u + 1];
      ++degree[t.v + 1];
    }
    offsets.assign(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i) offsets[i + 1] = offsets[i] + degree[i + 1];
    links.resize(offsets[n]);
    std::vector<std::size_t> fill(offsets.begin(), offsets.end() - 1);
    for (const QuadTerm& t : model.quadratic) {
      links[fill[t.u]++] = {t.v, t.coeff};
      links[fill[t.v]++] = {t.u, t.coeff};
      scale += std::abs(t.coeff);
    }
    for (double a : model.linear) scale += std::abs(a);
  }

  const Link* begin(std::size_t i) const { return links.data() + offsets[i]; }
  const Link* end(std::size_t i) const { return links.data() + offsets[i + 1]; }
};

/// Assignment plus local fields f_i = a_i + sum_j Q_ij q_j, so flipping i
/// changes the energy by (1 - 2 q_i) f_i.
struct State {
  Assignment bits;
  std::vector<double> field;
  double energy = 0.0;

  State(const QuboModel& model, Assignment start) :
      bits(std::move(start)), field(model.linear) {
    for (const QuadTerm& t : model.quadratic) {
      if (bits[t.u]) field[t.v] += t.coeff;
      if (bits[t.v]) field[t.u] += t.coeff;
    }
    energy = qtomo::energy(model, bits);
  }

  double delta(std::size_t i) const { return bits[i] ? -field[i] : field[i]; }

  void flip(const Adjacency& adj, std::size_t i) {
    energy += delta(i);
    bits[i] ^= 1;
    const double sign = bits[i] ? 1.0 : -1.0;
    for (const auto* l = adj.begin(i); l != adj.end(i); ++l) field[l->var] += sign * l->coeff;
  }
};

Assignment random_start(const QuboModel& model, const Adjacency& adj, Rng& rng) {
  Assignment bits(model.num_vars, 0);
  for (std::uint32_t v : adj.vars) bits[v] = static_cast<std::uint8_t>(rng.below(2));
  return bits;
}

double improvement_slack(const Adjacency& adj) { return 1e-12 * (1.0 + adj.scale); }

/// Flips in the given order until a full pass finds no strict improvement.
void descend(State& state, const Adjacency& adj, std::vector<std::uint32_t> order, Rng* shuffle) {
  const double slack = improvement_slack(adj);
  bool improved = true;
  while (improved) {
    improved = false;
    if (shuffle) {
      for (std::size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1], order[static_cast<std::size_t>(shuffle->below(i))]);
      }
    }
    for (std::uint32_t v : order) {
      if (state.delta(v) < -slack) {
        state.flip(adj, v);
        improved = true;
      }
    }
  }
}

Solution finish(const QuboModel& model, Assignment bits, SolverKind kind,
                Clock::time_point start, std::uint64_t seed, int restarts) {
  Solution s;
  s.energy = energy(model, bits);
  s.assignment = std::move(bits);
  s.solver = kind;
  s.restarts_used = restarts;
  s.seed = seed;
  s.reached_target = reaches_target(model, s.energy);
  s.wall_time = seconds_since(start);
  return s;
}

}  // namespace

Solution brute_force(const QuboModel& model) {
  const auto start = Clock::now();
  const Adjacency adj(model);
  const std::size_t m = adj.vars.size();
  if (m > kBruteForceMaxVars) {
    throw TooLarge("brute force over " + std::to_string(m) + " variables exceeds the limit of " +
                   std::to_string(kBruteForceMaxVars));
  }
  State state(model, Assignment(model.num_vars, 0));
  Assignment best = state.bits;
  double best_energy = 0.0;
  const double tie = 1e-11 * (1.0 + adj.scale);

  // Gray code: step g flips active variable ctz(g).
  const std::uint64_t count = std::uint64_t{1} << m;
  for (std::uint64_t g = 1; g < count; ++g) {
    state.flip(adj, adj.vars[static_cast<std::size_t>(std::countr_zero(g))]);
    if (state.energy < best_energy - tie) {
      best = state.bits;
      best_energy = state.energy;
    } else if (state.energy <= best_energy + tie && state.bits < best) {
      best = state.bits;
      best_energy = std::min(best_energy, state.energy);
    }
  }
  return finish(model, std::move(best), SolverKind::BruteForce, start, 0, 1);
}

Solution greedy_descent(const QuboModel& model, std::uint64_t seed) {
  const auto start = Clock::now();
  const Adjacency adj(model);
  Rng rng(seed);
  State state(model, random_start(model, adj, rng));
  descend(state, adj, adj.vars, &rng);
  return finish(model, std::move(state.bits), SolverKind::Greedy, start, seed, 1);
}

Solution simulated_anneal(const QuboModel& model, const AnnealSchedule& schedule) {
  schedule.validate();
  const auto start = Clock::now();
  const Adjacency adj(model);
  const auto restarts = static_cast<std::size_t>(schedule.restarts);
  std::vector<Assignment> results(restarts);
  std::vector<double> energies(restarts);

  parallel_for(restarts, [&](std::size_t r) {
    Rng rng(derive_seed(schedule.seed, r));
    State state(model, random_start(model, adj, rng));

    double t_hi = 0.0;
    for (std::uint32_t v : adj.vars) t_hi = std::max(t_hi, std::abs(state.delta(v)));
    if (schedule.t_start) {
      t_hi = *schedule.t_start;
    } else if (t_hi == 0.0) {
      t_hi = 1.0;
    }
    double t_lo = schedule.t_end.value_or(t_hi / 1000.0);
    if (!schedule.t_start && !(t_hi > t_lo)) t_hi = 1000.0 * t_lo;
    const double ratio = t_lo / t_hi;

    Assignment best = state.bits;
    double best_energy = state.energy;
    for (int sweep = 0; sweep < schedule.sweeps; ++sweep) {
      const double frac = schedule.sweeps > 1 ? static_cast<double>(sweep) / (schedule.sweeps - 1) : 1.0;
      const double temperature = t_hi * std::pow(ratio, frac);
      for (std::uint32_t v : adj.vars) {
        const double d = state.delta(v);
        if (d <= 0.0 || rng.uniform() < std::exp(-d / temperature)) state.flip(adj, v);
      }
      if (state.energy < best_energy) {
        best = state.bits;
        best_energy = state.energy;
      }
    }
    State polished(model, std::move(best));
    descend(polished, adj, adj.vars, nullptr);
    energies[r] = energy(model, polished.bits);
    results[r] = std::move(polished.bits);
  });

  std::size_t winner = 0;
  for (std::size_t r = 1; r < restarts; ++r) {
    if (energies[r] < energies[winner]) winner = r;
  }
  return finish(model, std::move(results[winner]), SolverKind::Anneal, start, schedule.seed,
                schedule.restarts);
}

}  // namespace qtomo
