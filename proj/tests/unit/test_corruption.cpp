#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "qtomo/corruption.hpp"
#include "qtomo/error.hpp"
#include "qtomo/phantom.hpp"
#include "qtomo/rng.hpp"

using namespace qtomo;

namespace {

Sinogram disk_sinogram(int n, int angles) {
  EllipseSpec e;
  e.semi_a = e.semi_b = n * 0.35;
  return radon(gen_ellipse_phantom(n, {e}), Geometry::uniform(n, angles));
}

// A centered disk projects the same profile at every angle, which hides
// row scaling from any angle-wise test; detection fixtures sit off center.
Sinogram offset_disk_sinogram(int n, std::uint64_t seed) {
  Rng rng(seed);
  const double r = rng.uniform(n / 6.0, n / 3.0);
  const double room = n / 2.0 - std::sqrt(0.5) - 0.5 - r;
  const double off = rng.uniform(0.0, room);
  const double phi = rng.uniform(0.0, 2.0 * std::acos(-1.0));
  EllipseSpec e{off * std::cos(phi), off * std::sin(phi), r, r, 0.0, 1};
  return radon(gen_ellipse_phantom(n, {e}), Geometry::uniform(n, n));
}

}  // namespace

TEST_CASE("mask rows, angles and loose cells") {
  ExclusionMask m(4, 6);
  CHECK(m.empty());
  m.add_row(2);
  m.add_angle(1);
  m.add(3, 5);
  CHECK(m.count() == 4 + 6 - 1 + 1);
  CHECK(m.rows() == std::vector<int>{2});
  CHECK(m.angles() == std::vector<int>{1});
  CHECK(m.loose_cells() == std::vector<std::pair<int, int>>{{3, 5}});
  CHECK(m.contains(0, 2));
  CHECK_FALSE(m.contains(0, 3));
  CHECK_THROWS_AS(m.add(4, 0), InvalidArgument);
  CHECK_THROWS_AS(m.add_row(6), InvalidArgument);

  ExclusionMask other(4, 6);
  other.add(0, 0);
  m.merge(other);
  CHECK(m.contains(0, 0));
  CHECK_THROWS_AS(m.merge(ExclusionMask(3, 6)), InvalidArgument);
  CHECK(mask_source_from_string(to_string(MaskSource::DeletedAngles)) == MaskSource::DeletedAngles);
}

TEST_CASE("rate zero ring injection is the identity") {
  const Sinogram s = disk_sinogram(20, 20);
  RingOptions opt;
  opt.seed = 5;
  const RingCorruption r = inject_ring_errors(s, opt);
  CHECK(r.sinogram.values == s.values);
  CHECK(r.report.affected.empty());
  opt.rate = 1.5;
  CHECK_THROWS_AS(inject_ring_errors(s, opt), InvalidArgument);
}

TEST_CASE("ten percent of a fifty-row band scales five rows") {
  const Sinogram s = disk_sinogram(60, 12);
  RingOptions opt;
  opt.rate = 0.1;
  opt.seed = 11;
  opt.band = RowBand{5, 54};
  const RingCorruption r = inject_ring_errors(s, opt);
  REQUIRE(r.report.affected.size() == 5);
  REQUIRE(r.report.factors.size() == 5);
  for (std::size_t k = 0; k < 5; ++k) {
    const int row = r.report.affected[k];
    const double f = r.report.factors[k];
    CHECK(row >= 5);
    CHECK(row <= 54);
    CHECK(f >= 0.5);
    CHECK(f <= 1.5);
    CHECK_FALSE((f > 0.95 && f < 1.05));
    for (int a = 0; a < s.angle_count(); ++a) CHECK(r.sinogram.at(a, row) == s.at(a, row) * f);
  }
  CHECK(std::is_sorted(r.report.affected.begin(), r.report.affected.end()));
  std::set<int> hit(r.report.affected.begin(), r.report.affected.end());
  for (int b = 0; b < s.bins(); ++b) {
    if (hit.count(b)) continue;
    for (int a = 0; a < s.angle_count(); ++a) CHECK(r.sinogram.at(a, b) == s.at(a, b));
  }
}

TEST_CASE("higher ring rates corrupt a superset with equal factors") {
  const Sinogram s = disk_sinogram(30, 10);
  RingOptions lo;
  lo.rate = 0.2;
  lo.seed = 77;
  RingOptions hi = lo;
  hi.rate = 0.5;
  const auto a = inject_ring_errors(s, lo).report;
  const auto b = inject_ring_errors(s, hi).report;
  CHECK(a.affected.size() < b.affected.size());
  for (std::size_t k = 0; k < a.affected.size(); ++k) {
    const auto it = std::find(b.affected.begin(), b.affected.end(), a.affected[k]);
    REQUIRE(it != b.affected.end());
    CHECK(b.factors[static_cast<std::size_t>(it - b.affected.begin())] == a.factors[k]);
  }
}

TEST_CASE("support band covers the projected object") {
  const Sinogram s = disk_sinogram(20, 8);
  const RowBand band = support_band(s);
  CHECK(band.first > 0);
  CHECK(band.last < 19);
  CHECK(support_band(Sinogram(Geometry::uniform(6, 3))).size() == 0);
}

TEST_CASE("prefix-keep deletion keeps the leading half") {
  const Sinogram s = disk_sinogram(12, 50);
  const AngleDeletion d = delete_angles(s, 0.5, DeletionMode::PrefixKeep, 0);
  CHECK(d.reduced.angle_count() == 25);
  for (double th : d.reduced.geometry.angles_deg) CHECK(th < 90.0);
  CHECK(d.mask.angles().size() == 25);
  CHECK(d.mask.count() == 25u * 12u);
  CHECK(d.mask.source() == MaskSource::DeletedAngles);
  for (int k = 0; k < 25; ++k) {
    for (int b = 0; b < 12; ++b) CHECK(d.reduced.at(k, b) == s.at(k, b));
  }
}

TEST_CASE("random deletion is exact in count and reproducible") {
  const Sinogram s = disk_sinogram(12, 50);
  const AngleDeletion a = delete_angles(s, 0.5, DeletionMode::Random, 9);
  const AngleDeletion b = delete_angles(s, 0.5, DeletionMode::Random, 9);
  CHECK(a.reduced.angle_count() == 25);
  CHECK(a.report.affected.size() == 25);
  CHECK(a.kept == b.kept);
  CHECK(a.mask == b.mask);
  CHECK(std::is_sorted(a.kept.begin(), a.kept.end()));

  const AngleDeletion none = delete_angles(s, 0.0, DeletionMode::Random, 1);
  CHECK(none.reduced.values == s.values);
  CHECK(none.mask.empty());
  CHECK_THROWS_AS(delete_angles(s, 0.99, DeletionMode::Random, 1), InvalidArgument);
}

TEST_CASE("clean disk sinogram has no error rows") {
  for (int n : {20, 32}) {
    CHECK(detect_error_rows(disk_sinogram(n, n)).empty());
    for (std::uint64_t seed = 0; seed < 5; ++seed) CHECK(detect_error_rows(offset_disk_sinogram(n, seed)).empty());
  }
}

TEST_CASE("mass consistency recovers injected rows and their factors") {
  const Sinogram s = offset_disk_sinogram(24, 3);
  const RowBand band = support_band(s);
  const int r1 = band.first + 2;
  const int r2 = band.first + band.size() / 2;
  const Sinogram bad = scale_rows(s, {r1, r2}, {2.0, 0.6});
  const RowDetection d = analyze_error_rows(bad);
  CHECK(d.kept == std::vector<int>{r1, r2});
  REQUIRE(d.factors.size() == 2);
  CHECK(d.factors[0] == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(d.factors[1] == doctest::Approx(0.6).epsilon(1e-9));
  CHECK(d.mask.rows() == d.kept);
  CHECK(d.mask.source() == MaskSource::DetectedRows);
}

TEST_CASE("mass consistency recovery over seeds") {
  int exact = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Sinogram s = offset_disk_sinogram(20, seed);
    RingOptions opt;
    opt.rate = 0.3;
    opt.seed = seed;
    opt.gap_lo = 0.9;
    opt.gap_hi = 1.1;
    const auto r = inject_ring_errors(s, opt);
    if (detect_error_rows(r.sinogram).rows() == r.report.affected) ++exact;
  }
  CHECK(exact >= 19);
}

TEST_CASE("neighbour-difference rule flags one strong spike") {
  const Sinogram s = offset_disk_sinogram(32, 1);
  DetectOptions opt;
  opt.method = DetectMethod::NeighborDifference;
  const int row = support_band(s).first + support_band(s).size() / 2;
  CHECK(detect_error_rows(scale_rows(s, {row}, {2.0}), opt).rows() == std::vector<int>{row});
  const RowDetection d = analyze_error_rows(s, opt);
  CHECK(d.scores.size() == 32);
  CHECK(d.scores.front() == 0.0);
  CHECK(d.scores.back() == 0.0);
}

TEST_CASE("detector input validation") {
  CHECK_THROWS_AS(detect_error_rows(Sinogram(Geometry::uniform(4, 4))), InvalidArgument);
}

TEST_CASE("inconsistent data cannot be explained by a few rows") {
  Sinogram s(Geometry::uniform(8, 3));
  Rng rng(2);
  for (double& v : s.values) v = rng.uniform(0.5, 1.5);
  CHECK_THROWS_AS(detect_error_rows(s), DetectionFailed);
}
