#include <doctest.h>

#include <filesystem>
#include <random>

#include "oracles.hpp"
#include "qtomo/error.hpp"
#include "qtomo/io.hpp"
#include "qtomo/phantom.hpp"

using namespace qtomo;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
  const fs::path dir = fs::temp_directory_path() / "qtomo_io_test";
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("number formatting round-trips") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-17, 12345678.9, 0.0}) {
    CHECK(std::stod(io::format_double(v)) == v);
    CHECK(std::stod(io::format_shortest(v)) == v);
  }
  CHECK(io::format_shortest(0.5) == "0.5");
}

TEST_CASE("images round-trip through PGM and CSV") {
  const fs::path dir = scratch_dir();
  const Image img = gen_random_phantom(12, 3, 5);
  io::write_pgm(dir / "a.pgm", img, io::PgmFormat::Ascii);
  CHECK(io::read_pgm(dir / "a.pgm") == img);
  io::write_pgm(dir / "b.pgm", img, io::PgmFormat::Binary);
  CHECK(io::read_pgm(dir / "b.pgm") == img);
  const Image deep = gen_random_phantom(8, 1000, 2);
  io::write_pgm(dir / "c.pgm", deep);
  CHECK(io::read_pgm(dir / "c.pgm") == deep);
  CHECK(io::parse_image_csv(io::image_csv(img)) == img);
  io::write_image(dir / "d.csv", img);
  CHECK(io::read_image(dir / "d.csv") == img);
  CHECK_THROWS_AS(io::parse_image_csv("1,2\n3\n"), FormatError);
}

TEST_CASE("sinograms round-trip exactly") {
  const Sinogram s = radon(gen_random_phantom(9, 2, 1), Geometry::uniform(9, 7));
  const Sinogram c = io::parse_sinogram_csv(io::sinogram_csv(s));
  CHECK(c.geometry == s.geometry);
  CHECK(c.values == s.values);
  const Sinogram j = io::sinogram_from_json(io::to_json(s));
  CHECK(j.geometry == s.geometry);
  CHECK(j.values == s.values);
  const fs::path dir = scratch_dir();
  io::write_sinogram(dir / "s.json", s);
  CHECK(io::read_sinogram(dir / "s.json").values == s.values);
}

TEST_CASE("masks, reports and encodings round-trip") {
  ExclusionMask m(5, 6, MaskSource::DetectedRows);
  m.add_row(2);
  m.add_angle(4);
  m.add(0, 5);
  CHECK(io::mask_from_json(io::to_json(m)) == m);

  CorruptionReport r;
  r.affected = {1, 3};
  r.factors = {0.7, 1.3};
  r.seed = 99;
  const CorruptionReport back = io::report_from_json(io::to_json(r));
  CHECK(back.affected == r.affected);
  CHECK(back.factors == r.factors);
  CHECK(back.seed == r.seed);

  for (const Encoding& e : {Encoding::binary_power(2), Encoding::unit_step(3), Encoding::mac_levels({0.5, 2.0})}) {
    CHECK(io::encoding_from_json(io::to_json(e)) == e);
  }
  CHECK(io::parse_encoding("unit-step:3") == Encoding::unit_step(3));
  CHECK(io::parse_encoding("binary-power:1") == Encoding::binary_power(1));
  CHECK(io::parse_encoding("offset-levels:1,2,3") == Encoding::offset_levels({1, 2, 3}));
  CHECK_THROWS(io::parse_encoding("fancy:2"));
}

TEST_CASE("QUBO export round-trips") {
  const Sinogram s = radon(gen_random_phantom(5, 1, 3), Geometry::uniform(5, 5));
  const QuboModel m = build_qubo(s, Encoding::unit_step(1), ExclusionMask::for_sinogram(s));
  const io::Json side = io::qubo_sidecar(m);
  const QuboModel back = io::parse_qubo(io::qubo_text(m), &side);
  CHECK(back.num_vars == m.num_vars);
  CHECK(back.linear == m.linear);
  CHECK(back.quadratic == m.quadratic);
  CHECK(back.constant == m.constant);
  CHECK(back.target_minimum == m.target_minimum);
  CHECK(back.image_size == 5);
  CHECK(back.encoding == m.encoding);
}

TEST_CASE("run-length bit vectors and solutions") {
  CHECK(io::run_lengths({0, 1, 1, 0}) == std::vector<std::size_t>{1, 2, 1});
  CHECK(io::run_lengths({1, 1}) == std::vector<std::size_t>{0, 2});
  std::mt19937_64 gen(1);
  for (int t = 0; t < 10; ++t) {
    Assignment a(37);
    for (auto& b : a) b = gen() & 1;
    CHECK(io::from_run_lengths(io::run_lengths(a)) == a);
  }
  Solution sol;
  sol.assignment = {1, 0, 1};
  sol.energy = -2.5;
  sol.solver = SolverKind::Anneal;
  sol.seed = 12;
  sol.restarts_used = 3;
  const Solution back = io::solution_from_json(io::to_json(sol, -2.5));
  CHECK(back.assignment == sol.assignment);
  CHECK(back.energy == sol.energy);
  CHECK(back.solver == sol.solver);
  CHECK(back.seed == sol.seed);
}
