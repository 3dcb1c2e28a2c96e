#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "qtomo/corruption.hpp"
#include "qtomo/image.hpp"
#include "qtomo/projector.hpp"

namespace qtomo {

enum class EncodingKind { BinaryPower, MacLevels, OffsetLevels };

std::string to_string(EncodingKind kind);
EncodingKind encoding_kind_from_string(const std::string& name);

/// How the qubits of one pixel combine into its value:
///   value = offset() + sum_k weights()[k] * q_k.
struct Encoding {
  EncodingKind kind = EncodingKind::BinaryPower;
  /// Highest power for BinaryPower (K = m + 1 bits).
  int power = 0;
  /// Level values for MacLevels / OffsetLevels, strictly increasing.
  std::vector<double> alphas;

  static Encoding binary_power(int m);
  static Encoding mac_levels(std::vector<double> alphas);
  static Encoding offset_levels(std::vector<double> alphas);
  /// Offset levels {0, 1, .., levels}: value = q_1 + .. + q_levels.
  static Encoding unit_step(int levels);

  void validate() const;
  int qubits_per_pixel() const;
  double offset() const;
  std::vector<double> weights() const;
  /// Largest value any bit pattern decodes to.
  double max_value() const;
  bool operator==(const Encoding&) const = default;
};

/// Bit vector over the model variables.
using Assignment = std::vector<std::uint8_t>;

struct QuadTerm {
  std::uint32_t u;
  std::uint32_t v;
  double coeff;
  bool operator==(const QuadTerm&) const = default;
};

struct VarSlot {
  int row;
  int col;
  int level;
};

/// f(q) = sum_i linear[i] q_i + sum_{u<v} Q_uv q_u q_v, with a tracked
/// constant that energy() leaves out.
struct QuboModel {
  std::size_t num_vars = 0;
  std::vector<double> linear;
  /// Sorted by (u, v), u < v, no zero coefficients.
  std::vector<QuadTerm> quadratic;
  double constant = 0.0;
  double target_minimum = 0.0;

  /// Layout of the variables; image_size == 0 for models not built from a
  /// sinogram. Variable (i*N + j)*K + k is level k of pixel (i, j).
  int image_size = 0;
  Encoding encoding;
  std::vector<std::string> warnings;

  /// Sums duplicate terms, folds (v, u) onto (u, v), moves u == v onto the
  /// diagonal and drops coefficients below the pruning threshold.
  static QuboModel from_terms(std::size_t num_vars, const std::vector<double>& linear,
                              const std::vector<QuadTerm>& quadratic, double constant = 0.0);

  VarSlot slot(std::size_t var) const;
  /// Variables with at least one nonzero coefficient.
  std::vector<char> active() const;
};

inline constexpr double kPruneThreshold = 1e-12;

/// Expands sum over retained cells of (sum_ij c * value_ij(q) - P)^2.
QuboModel build_qubo(const Sinogram& sino, const Encoding& enc, const ExclusionMask& mask);
QuboModel build_qubo(const Sinogram& sino, const ProjectionOperator& op, const Encoding& enc,
                     const ExclusionMask& mask);

double energy(const QuboModel& model, const Assignment& bits);

/// -sum of P^2 over the cells the mask keeps.
double target_minimum(const Sinogram& sino, const ExclusionMask& mask);

Image decode(const Assignment& bits, const Encoding& enc, int image_size);
Assignment encode(const Image& image, const Encoding& enc);

struct IsingModel {
  std::size_t num_vars = 0;
  std::vector<double> h;
  std::vector<QuadTerm> couplings;
  double constant = 0.0;
};

using Spins = std::vector<std::int8_t>;

/// Substitutes q = (sigma + 1) / 2; the returned constant absorbs the QUBO's.
IsingModel qubo_to_ising(const QuboModel& model);
double ising_energy(const IsingModel& model, const Spins& spins);
Spins to_spins(const Assignment& bits);

}  // namespace qtomo
