#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qtomo/projector.hpp"

namespace qtomo {

enum class MaskSource { DetectedRows, DeletedAngles, Manual };

std::string to_string(MaskSource source);
MaskSource mask_source_from_string(const std::string& name);

/// Sinogram cells (angle index, bin) removed from the reconstruction
/// objective. Stored as a dense A x S flag grid.
class ExclusionMask {
 public:
  ExclusionMask() = default;
  ExclusionMask(int angle_count, int bins, MaskSource source = MaskSource::Manual);

  static ExclusionMask for_sinogram(const Sinogram& sino, MaskSource source = MaskSource::Manual) {
    return ExclusionMask(sino.angle_count(), sino.bins(), source);
  }

  int angle_count() const { return angles_; }
  int bins() const { return bins_; }
  MaskSource source() const { return source_; }
  void set_source(MaskSource s) { source_ = s; }

  bool contains(int a, int s) const { return flags_[cell(a, s)] != 0; }
  bool contains(std::size_t cell) const { return flags_[cell] != 0; }
  /// Throws InvalidArgument for cells outside the domain.
  void add(int a, int s);
  void add_row(int s);
  void add_angle(int a);
  void merge(const ExclusionMask& other);

  std::size_t count() const;
  bool empty() const { return count() == 0; }
  /// Bins masked at every angle, ascending.
  std::vector<int> rows() const;
  /// Angles masked at every bin, ascending.
  std::vector<int> angles() const;
  /// Masked cells not covered by a full row or a full angle.
  std::vector<std::pair<int, int>> loose_cells() const;

  bool operator==(const ExclusionMask&) const = default;

 private:
  std::size_t cell(int a, int s) const {
    return static_cast<std::size_t>(a) * static_cast<std::size_t>(bins_) +
           static_cast<std::size_t>(s);
  }

  int angles_ = 0;
  int bins_ = 0;
  MaskSource source_ = MaskSource::Manual;
  std::vector<char> flags_;
};

/// Throws InvalidArgument if the mask's domain differs from the sinogram's.
void check_mask(const ExclusionMask& mask, const Sinogram& sino);

enum class CorruptionKind { Ring, LimitedAngle };

struct CorruptionReport {
  CorruptionKind kind = CorruptionKind::Ring;
  /// Ring: detector rows. Limited angle: removed angle indices (full grid).
  std::vector<int> affected;
  /// Ring only, aligned with affected.
  std::vector<double> factors;
  std::uint64_t seed = 0;
};

/// Contiguous detector rows [first, last].
struct RowBand {
  int first = 0;
  int last = -1;
  int size() const { return last - first + 1; }
};

/// Rows where the sinogram has any positive value, i.e. where the object
/// projects. Empty band (size 0) for an all-zero sinogram.
RowBand support_band(const Sinogram& sino);

struct RingOptions {
  double rate = 0.0;
  std::uint64_t seed = 0;
  double factor_lo = 0.5;
  double factor_hi = 1.5;
  /// Factors inside the open interval (gap_lo, gap_hi) are never drawn.
  double gap_lo = 0.95;
  double gap_hi = 1.05;
  /// Candidate rows; defaults to support_band().
  std::optional<RowBand> band;
};

struct RingCorruption {
  Sinogram sinogram;
  CorruptionReport report;
};

/// Multiplies floor(rate * band) distinct rows by per-row factors. Rows and
/// factors are drawn pairwise from one stream, so for a fixed seed a higher
/// rate corrupts a superset of the rows of a lower rate with equal factors.
RingCorruption inject_ring_errors(const Sinogram& sino, const RingOptions& options);

/// Elementwise row scaling; rows and factors are aligned.
Sinogram scale_rows(const Sinogram& sino, const std::vector<int>& rows,
                    const std::vector<double>& factors);

enum class DeletionMode { Random, PrefixKeep };

struct AngleDeletion {
  /// Sinogram restricted to the surviving angles.
  Sinogram reduced;
  /// Equivalent mask over the full grid: every bin of each removed angle.
  ExclusionMask mask;
  std::vector<int> kept;
  CorruptionReport report;
};

AngleDeletion delete_angles(const Sinogram& sino, double rate, DeletionMode mode,
                            std::uint64_t seed);

enum class DetectMethod {
  /// Smallest row set whose rescaling makes every angle carry the same total
  /// mass. Parallel-beam data of an object inside the detector satisfy this
  /// exactly; a scaled row breaks it by an angle-dependent amount.
  MassConsistency,
  /// Threshold on the neighbour-difference score d(s), then keep flagged
  /// rows whose interpolation lowers the score.
  NeighborDifference,
};

struct DetectOptions {
  DetectMethod method = DetectMethod::MassConsistency;
  /// Flag threshold is median(d) + k * MAD(d).
  double k = 3.0;
  /// A flagged row is kept only if replacing it by interpolation lowers the
  /// local score by more than this multiple of its own score.
  double min_gain_ratio = 0.5;
  /// Mass consistency: supports kept per size during the beam search.
  int beam_width = 8;
  /// Mass consistency: residual tolerance relative to the norm of the
  /// per-angle masses.
  double relative_tolerance = 1e-11;
};

struct RowDetection {
  /// d(s): mean over angles of the average absolute step to both neighbours.
  /// Zero at the two edge rows.
  std::vector<double> scores;
  /// median(d) + k * MAD(d) over interior rows.
  double threshold = 0.0;
  /// Rows the chosen method considered.
  std::vector<int> candidates;
  /// Rows judged erroneous, ascending.
  std::vector<int> kept;
  /// Estimated multiplicative error for each kept row (mass consistency
  /// only; empty otherwise).
  std::vector<double> factors;
  ExclusionMask mask;
};

/// Full detection trace. Throws DetectionFailed when no consistent row set
/// exists or every candidate row would be excluded, and InvalidArgument for
/// fewer than 5 bins.
RowDetection analyze_error_rows(const Sinogram& sino, const DetectOptions& options = {});

ExclusionMask detect_error_rows(const Sinogram& sino, const DetectOptions& options = {});

}  // namespace qtomo
