#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "qtomo/corruption.hpp"
#include "qtomo/image.hpp"
#include "qtomo/io.hpp"
#include "qtomo/phantom.hpp"
#include "qtomo/postprocess.hpp"
#include "qtomo/projector.hpp"
#include "qtomo/qubo.hpp"
#include "qtomo/solvers.hpp"

namespace qtomo {

/// Mean absolute per-pixel difference.
double mae(const Image& a, const Image& b);

struct RankCheck {
  std::size_t rank = 0;
  std::size_t unknowns = 0;
  bool identifiable() const { return rank == unknowns; }
};

/// Numerical rank of the retained rows of the system matrix (column-pivoted
/// QR). Full column rank means the masked data fix every pixel.
RankCheck identifiability(const ProjectionOperator& op, const ExclusionMask& mask);

struct PhantomSpec {
  /// "random", "ellipses", "disk" or "shepp-logan".
  std::string kind = "random";
  int size = 10;
  int levels = 1;
  /// "disk": radius in pixels.
  double radius = 0.0;
  std::vector<EllipseSpec> ellipses;
  /// Zero border added after generation.
  int pad = 0;
};

Image make_phantom(const PhantomSpec& spec, std::uint64_t seed);

enum class ErrorType { None, Ring, LimitedAngle };
std::string to_string(ErrorType t);

struct CorruptionSpec {
  ErrorType kind = ErrorType::None;
  std::vector<double> rates{0.0};
  double factor_lo = 0.5;
  double factor_hi = 1.5;
  double gap_lo = 0.95;
  double gap_hi = 1.05;
  /// Ring masking: detected rows, or the injected rows themselves.
  bool oracle_mask = false;
  DeletionMode deletion = DeletionMode::Random;
};

struct CaseConfig {
  std::string name;
  PhantomSpec phantom;
  int angles = 0;  // 0: image size
  double range_deg = 180.0;
  Encoding encoding = Encoding::unit_step(1);
  CorruptionSpec corruption;
  std::vector<SolverKind> solvers{SolverKind::Greedy, SolverKind::Anneal};
  AnnealSchedule anneal;
  bool postprocess = false;
  std::optional<CleanupParams> cleanup;
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::uint64_t seed = 0;
  std::vector<CaseConfig> cases;

  /// Accepts a config document, a single case, or a manifest (uses its
  /// embedded config).
  static ExperimentConfig from_json(const io::Json& doc);
  io::Json to_json() const;
};

struct MethodResult {
  bool ran = false;
  bool skipped = false;
  double mae = 0.0;
  double energy_gap = 0.0;
  bool reached_target = false;
  double time_s = 0.0;
};

struct ResultRow {
  std::string case_name;
  int image_size = 0;
  int levels = 1;
  ErrorType error_type = ErrorType::None;
  double error_rate = 0.0;
  MethodResult fbp;
  MethodResult greedy;
  MethodResult sa;
  MethodResult brute;
  std::size_t num_vars = 0;
  double target_minimum = 0.0;
  std::size_t excluded_cells = 0;
  std::string mask_source;
  /// Ring cases: detected rows equal the injected rows.
  std::optional<bool> detection_exact;
  std::optional<RankCheck> rank;
  /// Semicolon-separated notes (detector fallback, representation warnings).
  std::string flags;
  double build_time_s = 0.0;
  std::uint64_t phantom_seed = 0;
  std::uint64_t corruption_seed = 0;
  std::uint64_t greedy_seed = 0;
  std::uint64_t anneal_seed = 0;
};

struct ExperimentResult {
  std::vector<ResultRow> rows;
  bool any_skipped = false;
};

/// Runs one result row per (case, rate).
std::vector<ResultRow> run_case(const CaseConfig& config, std::uint64_t case_seed,
                                const std::filesystem::path* artifacts = nullptr);

/// Writes results.csv, timings.csv, manifest.json and per-case images.
ExperimentResult run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir);

std::string results_csv(const std::vector<ResultRow>& rows);
std::string timings_csv(const std::vector<ResultRow>& rows);

}  // namespace qtomo
