#include "qtomo/corruption.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "qtomo/error.hpp"
#include "qtomo/parallel.hpp"
#include "qtomo/rng.hpp"

#include <Eigen/Dense>

namespace qtomo {

std::string to_string(MaskSource source) {
  switch (source) {
    case MaskSource::DetectedRows: return "detected-rows";
    case MaskSource::DeletedAngles: return "deleted-angles";
    case MaskSource::Manual: return "manual";
  }
  return "manual";
}

MaskSource mask_source_from_string(const std::string& name) {
  if (name == "detected-rows") return MaskSource::DetectedRows;
  if (name == "deleted-angles") return MaskSource::DeletedAngles;
  if (name == "manual") return MaskSource::Manual;
  throw InvalidArgument("unknown mask source '" + name + "'");
}

ExclusionMask::ExclusionMask(int angle_count, int bins, MaskSource source)
    : angles_(angle_count), bins_(bins), source_(source) {
  if (angle_count < 0 || bins < 0) throw InvalidArgument("mask dimensions must be non-negative");
  flags_.assign(static_cast<std::size_t>(angle_count) * static_cast<std::size_t>(bins), 0);
}

void ExclusionMask::add(int a, int s) {
  if (a < 0 || a >= angles_ || s < 0 || s >= bins_) {
    throw InvalidArgument("mask cell (" + std::to_string(a) + ", " + std::to_string(s) +
                          ") outside the sinogram domain");
  }
  flags_[cell(a, s)] = 1;
}

void ExclusionMask::add_row(int s) {
  if (s < 0 || s >= bins_) throw InvalidArgument("mask row " + std::to_string(s) + " out of range");
  for (int a = 0; a < angles_; ++a) flags_[cell(a, s)] = 1;
}

void ExclusionMask::add_angle(int a) {
  if (a < 0 || a >= angles_) {
    throw InvalidArgument("mask angle " + std::to_string(a) + " out of range");
  }
  for (int s = 0; s < bins_; ++s) flags_[cell(a, s)] = 1;
}

void ExclusionMask::merge(const ExclusionMask& other) {
  if (other.angles_ != angles_ || other.bins_ != bins_) {
    throw InvalidArgument("cannot merge masks over different domains");
  }
  for (std::size_t k = 0; k < flags_.size(); ++k) flags_[k] |= other.flags_[k];
}

std::size_t ExclusionMask::count() const {
  return static_cast<std::size_t>(std::count(flags_.begin(), flags_.end(), char{1}));
}

std::vector<int> ExclusionMask::rows() const {
  std::vector<int> out;
  if (angles_ == 0) return out;
  for (int s = 0; s < bins_; ++s) {
    bool full = true;
    for (int a = 0; a < angles_ && full; ++a) full = contains(a, s);
    if (full) out.push_back(s);
  }
  return out;
}

std::vector<int> ExclusionMask::angles() const {
  std::vector<int> out;
  if (bins_ == 0) return out;
  for (int a = 0; a < angles_; ++a) {
    bool full = true;
    for (int s = 0; s < bins_ && full; ++s) full = contains(a, s);
    if (full) out.push_back(a);
  }
  return out;
}

std::vector<std::pair<int, int>> ExclusionMask::loose_cells() const {
  std::vector<char> covered(flags_.size(), 0);
  for (int s : rows()) {
    for (int a = 0; a < angles_; ++a) covered[cell(a, s)] = 1;
  }
  for (int a : angles()) {
    for (int s = 0; s < bins_; ++s) covered[cell(a, s)] = 1;
  }
  std::vector<std::pair<int, int>> out;
  for (int a = 0; a < angles_; ++a) {
    for (int s = 0; s < bins_; ++s) {
      if (contains(a, s) && !covered[cell(a, s)]) out.emplace_back(a, s);
    }
  }
  return out;
}

void check_mask(const ExclusionMask& mask, const Sinogram& sino) {
  if (mask.angle_count() != sino.angle_count() || mask.bins() != sino.bins()) {
    throw InvalidArgument("mask domain " + std::to_string(mask.angle_count()) + "x" +
                          std::to_string(mask.bins()) + " does not match sinogram " +
                          std::to_string(sino.angle_count()) + "x" + std::to_string(sino.bins()));
  }
}

RowBand support_band(const Sinogram& sino) {
  RowBand band{0, -1};
  bool found = false;
  for (int s = 0; s < sino.bins(); ++s) {
    bool any = false;
    for (int a = 0; a < sino.angle_count() && !any; ++a) any = sino.at(a, s) > 0.0;
    if (!any) continue;
    if (!found) band.first = s;
    band.last = s;
    found = true;
  }
  return band;
}

namespace {

// floor/ceil of rate * n that ignore representation noise such as
// 0.29 * 100 = 28.999999999999996.
int floor_count(double rate, int n) {
  return static_cast<int>(std::floor(rate * n + 1e-9));
}
int ceil_count(double rate, int n) {
  return static_cast<int>(std::ceil(rate * n - 1e-9));
}

// Uniform draw from [lo, hi] with the open gap (gap_lo, gap_hi) removed.
double draw_factor(Rng& rng, const RingOptions& o) {
  const double left = std::max(0.0, std::min(o.factor_hi, o.gap_lo) - o.factor_lo);
  const double right = std::max(0.0, o.factor_hi - std::max(o.factor_lo, o.gap_hi));
  const double u = rng.uniform() * (left + right);
  if (u < left) return o.factor_lo + u;
  return std::max(o.factor_lo, o.gap_hi) + (u - left);
}

}  // namespace

Sinogram scale_rows(const Sinogram& sino, const std::vector<int>& rows,
                    const std::vector<double>& factors) {
  if (rows.size() != factors.size()) throw InvalidArgument("rows and factors differ in length");
  Sinogram out = sino;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const int s = rows[k];
    if (s < 0 || s >= sino.bins()) throw InvalidArgument("row " + std::to_string(s) + " out of range");
    for (int a = 0; a < sino.angle_count(); ++a) out.at(a, s) = sino.at(a, s) * factors[k];
  }
  return out;
}

RingCorruption inject_ring_errors(const Sinogram& sino, const RingOptions& o) {
  if (!(o.rate >= 0.0 && o.rate <= 1.0)) throw InvalidArgument("ring error rate must be in [0, 1]");
  if (!(o.factor_lo < o.factor_hi)) throw InvalidArgument("factor range needs lo < hi");
  const RowBand band = o.band.value_or(support_band(sino));
  if (band.size() > 0 && (band.first < 0 || band.last >= sino.bins())) {
    throw InvalidArgument("row band outside the detector");
  }
  const int count = band.size() > 0 ? floor_count(o.rate, band.size()) : 0;

  RingCorruption out{sino, {CorruptionKind::Ring, {}, {}, o.seed}};
  if (count == 0) return out;
  const double room = std::max(0.0, std::min(o.factor_hi, o.gap_lo) - o.factor_lo) +
                      std::max(0.0, o.factor_hi - std::max(o.factor_lo, o.gap_hi));
  if (!(room > 0.0)) throw InvalidArgument("factor range is empty once the gap is removed");

  std::vector<int> pool(static_cast<std::size_t>(band.size()));
  std::iota(pool.begin(), pool.end(), band.first);
  Rng rng(o.seed);
  std::vector<std::pair<int, double>> picks;
  for (int k = 0; k < count; ++k) {
    const auto remaining = static_cast<std::uint64_t>(pool.size()) - static_cast<std::uint64_t>(k);
    const auto pick = static_cast<std::size_t>(k) + static_cast<std::size_t>(rng.below(remaining));
    std::swap(pool[static_cast<std::size_t>(k)], pool[pick]);
    picks.emplace_back(pool[static_cast<std::size_t>(k)], draw_factor(rng, o));
  }
  std::sort(picks.begin(), picks.end());
  for (const auto& [row, factor] : picks) {
    out.report.affected.push_back(row);
    out.report.factors.push_back(factor);
  }
  out.sinogram = scale_rows(sino, out.report.affected, out.report.factors);
  return out;
}

AngleDeletion delete_angles(const Sinogram& sino, double rate, DeletionMode mode,
                            std::uint64_t seed) {
  if (!(rate >= 0.0 && rate < 1.0)) throw InvalidArgument("angle deletion rate must be in [0, 1)");
  const int total = sino.angle_count();
  std::vector<char> removed(static_cast<std::size_t>(total), 0);
  if (mode == DeletionMode::PrefixKeep) {
    const int keep = ceil_count(1.0 - rate, total);
    for (int a = keep; a < total; ++a) removed[static_cast<std::size_t>(a)] = 1;
  } else {
    const int drop = floor_count(rate, total);
    std::vector<int> pool(static_cast<std::size_t>(total));
    std::iota(pool.begin(), pool.end(), 0);
    Rng rng(seed);
    for (int k = 0; k < drop; ++k) {
      const auto remaining = static_cast<std::uint64_t>(total - k);
      const auto pick = static_cast<std::size_t>(k) + static_cast<std::size_t>(rng.below(remaining));
      std::swap(pool[static_cast<std::size_t>(k)], pool[pick]);
      removed[static_cast<std::size_t>(pool[static_cast<std::size_t>(k)])] = 1;
    }
  }

  AngleDeletion out;
  out.mask = ExclusionMask(total, sino.bins(), MaskSource::DeletedAngles);
  out.report = {CorruptionKind::LimitedAngle, {}, {}, seed};
  std::vector<double> angles;
  for (int a = 0; a < total; ++a) {
    if (removed[static_cast<std::size_t>(a)]) {
      out.mask.add_angle(a);
      out.report.affected.push_back(a);
    } else {
      out.kept.push_back(a);
      angles.push_back(sino.geometry.angles_deg[static_cast<std::size_t>(a)]);
    }
  }
  if (out.kept.size() < 2) throw InvalidArgument("angle deletion must leave at least 2 angles");

  Geometry g = sino.geometry;
  g.angles_deg = std::move(angles);
  out.reduced = Sinogram(g);
  out.reduced.clipped = sino.clipped;
  for (std::size_t k = 0; k < out.kept.size(); ++k) {
    for (int s = 0; s < sino.bins(); ++s) {
      out.reduced.at(static_cast<int>(k), s) = sino.at(out.kept[k], s);
    }
  }
  return out;
}

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return (lo + hi) / 2.0;
}

// d(s) over a row-major A x S buffer, for interior rows only.
double row_score(const std::vector<double>& v, int angles, int bins, int s) {
  double acc = 0.0;
  for (int a = 0; a < angles; ++a) {
    const double* row = v.data() + static_cast<std::size_t>(a) * static_cast<std::size_t>(bins);
    acc += (std::abs(row[s] - row[s - 1]) + std::abs(row[s] - row[s + 1])) / 2.0;
  }
  return acc / angles;
}

}  // namespace

namespace {

// Neighbour-difference refinement: repeatedly replace the candidate whose
// interpolation from the nearest non-candidate rows most reduces the summed
// score. Neighbours of a genuine error stop improving once it is replaced.
std::vector<int> refine_by_interpolation(const Sinogram& sino, const std::vector<int>& candidates,
                                         const std::vector<double>& scores, double threshold,
                                         double min_gain_ratio) {
  const int bins = sino.bins();
  const int angles = sino.angle_count();
  std::vector<double> work = sino.values;
  std::vector<char> is_candidate(static_cast<std::size_t>(bins), 0);
  for (int s : candidates) is_candidate[static_cast<std::size_t>(s)] = 1;
  std::vector<char> open = is_candidate;

  auto local_score = [&](const std::vector<double>& v, int s) {
    double acc = 0.0;
    for (int r = std::max(1, s - 1); r <= std::min(bins - 2, s + 1); ++r) {
      acc += row_score(v, angles, bins, r);
    }
    return acc;
  };
  auto interpolate = [&](std::vector<double>& v, int s) {
    int left = s - 1;
    while (left >= 0 && is_candidate[static_cast<std::size_t>(left)]) --left;
    int right = s + 1;
    while (right < bins && is_candidate[static_cast<std::size_t>(right)]) ++right;
    for (int a = 0; a < angles; ++a) {
      double* row = v.data() + static_cast<std::size_t>(a) * static_cast<std::size_t>(bins);
      if (left < 0 && right >= bins) {
        row[s] = 0.0;
      } else if (left < 0) {
        row[s] = row[right];
      } else if (right >= bins) {
        row[s] = row[left];
      } else {
        const double w = static_cast<double>(s - left) / (right - left);
        row[s] = (1.0 - w) * row[left] + w * row[right];
      }
    }
  };

  const double scale = std::max(1e-300, std::accumulate(scores.begin(), scores.end(), 0.0));
  std::vector<int> kept;
  while (true) {
    int best = -1;
    double best_gain = 0.0;
    for (int s : candidates) {
      if (!open[static_cast<std::size_t>(s)]) continue;
      // Rows next to a spike inherit part of its score; once the spike is
      // repaired they must stand on their own.
      const double own = row_score(work, angles, bins, s);
      if (own <= threshold) continue;
      std::vector<double> trial = work;
      interpolate(trial, s);
      const double gain = local_score(work, s) - local_score(trial, s);
      if (gain > min_gain_ratio * own + 1e-12 * scale && gain > best_gain) {
        best = s;
        best_gain = gain;
      }
    }
    if (best < 0) break;
    interpolate(work, best);
    open[static_cast<std::size_t>(best)] = 0;
    kept.push_back(best);
  }
  std::sort(kept.begin(), kept.end());
  return kept;
}

// Rows T are consistent when some weights w_s (1/factor) and a mass M give
//   sum_{s not in T} P(a, s) + sum_{s in T} w_s P(a, s) = M   for every angle a.
// Unknowns are (w_T, M); the residual of that least-squares fit measures how
// far T is from explaining the observed mass imbalance.
class MassConsistency {
 public:
  explicit MassConsistency(const Sinogram& sino)
      : angles_(sino.angle_count()), columns_(sino.angle_count(), sino.bins()),
        totals_(sino.angle_count()) {
    for (int a = 0; a < angles_; ++a) {
      for (int s = 0; s < sino.bins(); ++s) columns_(a, s) = sino.at(a, s);
    }
    totals_ = columns_.rowwise().sum();
  }

  double totals_norm() const { return totals_.norm(); }

  struct Fit {
    double residual;
    std::vector<double> weights;
  };

  Fit fit(const std::vector<int>& rows) const {
    const auto k = static_cast<Eigen::Index>(rows.size());
    // Move the unknown rows to the left: sum_T (w_s - 1) P(a, s) - M = -total(a).
    Eigen::MatrixXd design(angles_, k + 1);
    for (Eigen::Index c = 0; c < k; ++c) design.col(c) = columns_.col(rows[static_cast<std::size_t>(c)]);
    design.col(k).setConstant(-1.0);
    const Eigen::VectorXd rhs = -totals_;
    const Eigen::VectorXd sol = design.colPivHouseholderQr().solve(rhs);
    Fit out{(design * sol - rhs).norm(), {}};
    for (Eigen::Index c = 0; c < k; ++c) out.weights.push_back(1.0 + sol(c));
    return out;
  }

 private:
  int angles_;
  Eigen::MatrixXd columns_;
  Eigen::VectorXd totals_;
};

std::vector<int> prune_support(const MassConsistency& model, std::vector<int> rows, double tol) {
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t k = 0; k < rows.size(); ++k) {
      std::vector<int> smaller = rows;
      smaller.erase(smaller.begin() + static_cast<std::ptrdiff_t>(k));
      if (model.fit(smaller).residual <= tol) {
        rows = std::move(smaller);
        changed = true;
        break;
      }
    }
  }
  std::sort(rows.begin(), rows.end());
  return rows;
}

bool smaller_support(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) return a.size() < b.size();
  return a < b;
}

std::optional<std::vector<int>> greedy_support(const MassConsistency& model,
                                               const std::vector<int>& candidates,
                                               std::size_t max_rows, double tol) {
  std::vector<int> support;
  std::vector<char> used(candidates.size(), 0);
  while (support.size() < max_rows) {
    int best = -1;
    double best_res = 0.0;
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      if (used[c]) continue;
      std::vector<int> trial = support;
      trial.push_back(candidates[c]);
      const double res = model.fit(trial).residual;
      if (best < 0 || res < best_res) {
        best = static_cast<int>(c);
        best_res = res;
      }
    }
    if (best < 0) break;
    used[static_cast<std::size_t>(best)] = 1;
    support.push_back(candidates[static_cast<std::size_t>(best)]);
    if (best_res <= tol) return prune_support(model, support, tol);
  }
  return std::nullopt;
}

std::optional<std::vector<int>> beam_support(const MassConsistency& model,
                                             const std::vector<int>& candidates,
                                             std::size_t max_rows, std::size_t width,
                                             double tol) {
  std::vector<std::vector<int>> level{{}};
  for (std::size_t size = 1; size <= max_rows; ++size) {
    std::vector<std::pair<double, std::vector<int>>> next;
    for (const auto& base : level) {
      for (int s : candidates) {
        if (std::find(base.begin(), base.end(), s) != base.end()) continue;
        std::vector<int> grown = base;
        grown.insert(std::upper_bound(grown.begin(), grown.end(), s), s);
        const bool seen = std::any_of(next.begin(), next.end(),
                                      [&](const auto& entry) { return entry.second == grown; });
        if (!seen) next.emplace_back(model.fit(grown).residual, std::move(grown));
      }
    }
    std::sort(next.begin(), next.end());
    if (next.size() > width) next.resize(width);
    std::optional<std::vector<int>> found;
    for (const auto& [res, rows] : next) {
      if (res > tol) continue;
      auto pruned = prune_support(model, rows, tol);
      if (!found || smaller_support(pruned, *found)) found = std::move(pruned);
    }
    if (found) return found;
    level.clear();
    for (auto& entry : next) level.push_back(std::move(entry.second));
  }
  return std::nullopt;
}

}  // namespace

RowDetection analyze_error_rows(const Sinogram& sino, const DetectOptions& options) {
  const int bins = sino.bins();
  const int angles = sino.angle_count();
  if (bins < 5) throw InvalidArgument("error-row detection needs at least 5 detector bins");

  RowDetection out;
  out.scores.assign(static_cast<std::size_t>(bins), 0.0);
  parallel_for(static_cast<std::size_t>(bins - 2), [&](std::size_t k) {
    const int s = static_cast<int>(k) + 1;
    out.scores[static_cast<std::size_t>(s)] = row_score(sino.values, angles, bins, s);
  });
  const std::vector<double> interior(out.scores.begin() + 1, out.scores.end() - 1);
  const double med = median(interior);
  std::vector<double> dev(interior.size());
  std::transform(interior.begin(), interior.end(), dev.begin(),
                 [med](double d) { return std::abs(d - med); });
  out.threshold = med + options.k * median(dev);

  if (options.method == DetectMethod::NeighborDifference) {
    for (int s = 1; s < bins - 1; ++s) {
      if (out.scores[static_cast<std::size_t>(s)] > out.threshold) out.candidates.push_back(s);
    }
    out.kept = refine_by_interpolation(sino, out.candidates, out.scores, out.threshold,
                                       options.min_gain_ratio);
    if (!out.kept.empty() && static_cast<int>(out.kept.size()) >= bins - 2) {
      throw DetectionFailed("every interior detector row was flagged as erroneous");
    }
  } else {
    // All-zero rows carry no mass and cannot be told apart from clean ones.
    for (int s = 0; s < bins; ++s) {
      bool any = false;
      for (int a = 0; a < angles && !any; ++a) any = sino.at(a, s) != 0.0;
      if (any) out.candidates.push_back(s);
    }
    const MassConsistency model(sino);
    const double tol = options.relative_tolerance * model.totals_norm() + 1e-300;
    if (model.fit({}).residual > tol) {
      // One mass unknown plus the row weights must stay overdetermined.
      const std::size_t max_rows = std::min<std::size_t>(
          out.candidates.size(), angles > 2 ? static_cast<std::size_t>(angles - 2) : 0);
      auto greedy = greedy_support(model, out.candidates, max_rows, tol);
      auto beam = beam_support(model, out.candidates, max_rows,
                               static_cast<std::size_t>(std::max(1, options.beam_width)), tol);
      if (!greedy && !beam) {
        throw DetectionFailed("no detector row set makes the per-angle masses consistent");
      }
      if (greedy && beam) {
        out.kept = smaller_support(*beam, *greedy) ? *beam : *greedy;
      } else {
        out.kept = greedy ? *greedy : *beam;
      }
      if (out.kept.size() >= out.candidates.size()) {
        throw DetectionFailed("every detector row carrying data was flagged as erroneous");
      }
      for (double w : model.fit(out.kept).weights) out.factors.push_back(1.0 / w);
    }
  }

  out.mask = ExclusionMask(angles, bins, MaskSource::DetectedRows);
  for (int s : out.kept) out.mask.add_row(s);
  return out;
}

ExclusionMask detect_error_rows(const Sinogram& sino, const DetectOptions& options) {
  return analyze_error_rows(sino, options).mask;
}

}  // namespace qtomo
