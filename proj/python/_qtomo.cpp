#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <algorithm>

#include "qtomo/corruption.hpp"
#include "qtomo/error.hpp"
#include "qtomo/experiment.hpp"
#include "qtomo/fbp.hpp"
#include "qtomo/io.hpp"
#include "qtomo/parallel.hpp"
#include "qtomo/phantom.hpp"
#include "qtomo/postprocess.hpp"
#include "qtomo/projector.hpp"
#include "qtomo/qubo.hpp"
#include "qtomo/solvers.hpp"

namespace py = pybind11;
using namespace qtomo;

namespace {

using IntArray = py::array_t<int, py::array::c_style | py::array::forcecast>;
using RealArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

py::array_t<int> to_numpy(const Image& img) {
  py::array_t<int> out({img.height(), img.width()});
  std::copy(img.pixels().begin(), img.pixels().end(), out.mutable_data());
  return out;
}

py::array_t<double> to_numpy(const FloatImage& img) {
  py::array_t<double> out({img.height(), img.width()});
  std::copy(img.values().begin(), img.values().end(), out.mutable_data());
  return out;
}

// levels < 0: take the largest pixel (at least 1).
Image from_numpy(const IntArray& a, int levels) {
  if (a.ndim() != 2) throw InvalidArgument("image must be a 2-D array");
  const auto h = static_cast<int>(a.shape(0));
  const auto w = static_cast<int>(a.shape(1));
  std::vector<int> px(a.data(), a.data() + a.size());
  if (levels < 0) levels = std::max(1, px.empty() ? 1 : *std::max_element(px.begin(), px.end()));
  return Image::from_pixels(w, h, levels, std::move(px));
}

py::array_t<double> sino_values(const Sinogram& s) {
  py::array_t<double> out({s.angle_count(), s.bins()});
  std::copy(s.values.begin(), s.values.end(), out.mutable_data());
  return out;
}

}  // namespace

PYBIND11_MODULE(_qtomo, m) {
  m.doc() = "Integer tomography by QUBO reconstruction";

  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<DetectionFailed>(m, "DetectionFailed", PyExc_RuntimeError);
  py::register_exception<TooLarge>(m, "TooLarge", PyExc_RuntimeError);
  py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);

  m.def("set_num_threads", &set_num_threads);
  m.def("num_threads", &num_threads);

  py::class_<EllipseSpec>(m, "EllipseSpec")
      .def(py::init([](double cx, double cy, double a, double b, double rot, int value) {
             return EllipseSpec{cx, cy, a, b, rot, value};
           }),
           py::arg("center_x") = 0.0, py::arg("center_y") = 0.0, py::arg("semi_a") = 1.0,
           py::arg("semi_b") = 1.0, py::arg("rotation_deg") = 0.0, py::arg("value") = 1)
      .def_readwrite("center_x", &EllipseSpec::center_x)
      .def_readwrite("center_y", &EllipseSpec::center_y)
      .def_readwrite("semi_a", &EllipseSpec::semi_a)
      .def_readwrite("semi_b", &EllipseSpec::semi_b)
      .def_readwrite("rotation_deg", &EllipseSpec::rotation_deg)
      .def_readwrite("value", &EllipseSpec::value);

  m.def("random_phantom", [](int size, int levels, std::uint64_t seed) {
    return to_numpy(gen_random_phantom(size, levels, seed));
  }, py::arg("size"), py::arg("levels"), py::arg("seed"));
  m.def("ellipse_phantom", [](int size, const std::vector<EllipseSpec>& e) {
    return to_numpy(gen_ellipse_phantom(size, e));
  }, py::arg("size"), py::arg("ellipses"));
  m.def("shepp_logan_binary", &shepp_logan_binary);
  m.def("pad", [](const IntArray& img, int t) { return to_numpy(pad(from_numpy(img, -1), t)); });

  py::class_<Geometry>(m, "Geometry")
      .def_static("uniform", &Geometry::uniform, py::arg("image_size"), py::arg("angle_count"),
                  py::arg("range_deg") = 180.0)
      .def_static("with_angles", &Geometry::with_angles)
      .def_readonly("image_size", &Geometry::image_size)
      .def_readonly("detector_bins", &Geometry::detector_bins)
      .def_readonly("angles_deg", &Geometry::angles_deg);

  py::class_<Sinogram>(m, "Sinogram")
      .def(py::init([](const Geometry& g, const RealArray& v) {
        Sinogram s(g);
        if (static_cast<std::size_t>(v.size()) != s.values.size()) {
          throw InvalidArgument("values do not match the geometry");
        }
        std::copy(v.data(), v.data() + v.size(), s.values.begin());
        return s;
      }))
      .def_readonly("geometry", &Sinogram::geometry)
      .def_readonly("clipped", &Sinogram::clipped)
      .def_property_readonly("values", &sino_values);

  py::class_<ProjectionOperator>(m, "ProjectionOperator")
      .def(py::init<const Geometry&>())
      .def_property_readonly("nnz", &ProjectionOperator::nnz)
      .def_property_readonly("clipped", &ProjectionOperator::clipped);

  m.def("radon", [](const IntArray& img, const Geometry& g) { return radon(from_numpy(img, -1), g); });

  py::enum_<MaskSource>(m, "MaskSource")
      .value("DetectedRows", MaskSource::DetectedRows)
      .value("DeletedAngles", MaskSource::DeletedAngles)
      .value("Manual", MaskSource::Manual);

  py::class_<ExclusionMask>(m, "ExclusionMask")
      .def(py::init<int, int, MaskSource>(), py::arg("angle_count"), py::arg("bins"),
           py::arg("source") = MaskSource::Manual)
      .def_static("for_sinogram", &ExclusionMask::for_sinogram, py::arg("sinogram"),
                  py::arg("source") = MaskSource::Manual)
      .def("add", &ExclusionMask::add)
      .def("add_row", &ExclusionMask::add_row)
      .def("add_angle", &ExclusionMask::add_angle)
      .def("contains", py::overload_cast<int, int>(&ExclusionMask::contains, py::const_))
      .def("count", &ExclusionMask::count)
      .def("rows", &ExclusionMask::rows)
      .def("angles", &ExclusionMask::angles)
      .def_property_readonly("source", &ExclusionMask::source);

  m.def("inject_ring_errors", [](const Sinogram& s, double rate, std::uint64_t seed, double lo, double hi) {
    RingOptions o;
    o.rate = rate;
    o.seed = seed;
    o.factor_lo = lo;
    o.factor_hi = hi;
    auto r = inject_ring_errors(s, o);
    return py::make_tuple(r.sinogram, r.report.affected, r.report.factors);
  }, py::arg("sinogram"), py::arg("rate"), py::arg("seed"), py::arg("factor_lo") = 0.5,
     py::arg("factor_hi") = 1.5);

  m.def("delete_angles", [](const Sinogram& s, double rate, const std::string& mode, std::uint64_t seed) {
    const DeletionMode dm = mode == "prefix-keep" ? DeletionMode::PrefixKeep : DeletionMode::Random;
    if (mode != "prefix-keep" && mode != "random") throw InvalidArgument("mode is random or prefix-keep");
    auto d = delete_angles(s, rate, dm, seed);
    return py::make_tuple(d.reduced, d.mask, d.kept);
  }, py::arg("sinogram"), py::arg("rate"), py::arg("mode") = "random", py::arg("seed") = 0);

  m.def("detect_error_rows", [](const Sinogram& s, double k) {
    DetectOptions o;
    o.k = k;
    return detect_error_rows(s, o);
  }, py::arg("sinogram"), py::arg("k") = 3.0);

  py::class_<Encoding>(m, "Encoding")
      .def_static("binary_power", &Encoding::binary_power)
      .def_static("mac_levels", &Encoding::mac_levels)
      .def_static("offset_levels", &Encoding::offset_levels)
      .def_static("unit_step", &Encoding::unit_step)
      .def_static("parse", &io::parse_encoding)
      .def_property_readonly("qubits_per_pixel", &Encoding::qubits_per_pixel)
      .def_property_readonly("weights", &Encoding::weights)
      .def_property_readonly("offset", &Encoding::offset)
      .def("__eq__", [](const Encoding& a, const Encoding& b) { return a == b; });

  py::class_<QuboModel>(m, "QuboModel")
      .def_readonly("num_vars", &QuboModel::num_vars)
      .def_readonly("linear", &QuboModel::linear)
      .def_readonly("constant", &QuboModel::constant)
      .def_readonly("target_minimum", &QuboModel::target_minimum)
      .def_readonly("warnings", &QuboModel::warnings)
      .def_property_readonly("quadratic", [](const QuboModel& q) {
        std::vector<std::tuple<std::uint32_t, std::uint32_t, double>> out;
        out.reserve(q.quadratic.size());
        for (const auto& t : q.quadratic) out.emplace_back(t.u, t.v, t.coeff);
        return out;
      })
      .def("energy", [](const QuboModel& q, const Assignment& a) { return energy(q, a); })
      .def("to_text", &io::qubo_text);

  m.def("build_qubo", [](const Sinogram& s, const Encoding& e, const ExclusionMask* mask) {
    return build_qubo(s, e, mask ? *mask : ExclusionMask::for_sinogram(s));
  }, py::arg("sinogram"), py::arg("encoding"), py::arg("mask") = nullptr);
  m.def("encode", [](const IntArray& img, const Encoding& e) { return encode(from_numpy(img, -1), e); });
  m.def("decode", [](const Assignment& a, const Encoding& e, int n) { return to_numpy(decode(a, e, n)); });

  py::class_<Solution>(m, "Solution")
      .def_readonly("assignment", &Solution::assignment)
      .def_readonly("energy", &Solution::energy)
      .def_readonly("reached_target", &Solution::reached_target)
      .def_readonly("restarts_used", &Solution::restarts_used)
      .def_readonly("wall_time", &Solution::wall_time)
      .def_readonly("seed", &Solution::seed)
      .def_property_readonly("solver", [](const Solution& s) { return to_string(s.solver); });

  m.def("brute_force", &brute_force);
  m.def("greedy_descent", &greedy_descent, py::arg("model"), py::arg("seed") = 0);
  m.def("simulated_anneal", [](const QuboModel& q, int sweeps, int restarts, std::uint64_t seed,
                               std::optional<double> t_start, std::optional<double> t_end) {
    AnnealSchedule s;
    s.sweeps = sweeps;
    s.restarts = restarts;
    s.seed = seed;
    s.t_start = t_start;
    s.t_end = t_end;
    return simulated_anneal(q, s);
  }, py::arg("model"), py::arg("sweeps") = 200, py::arg("restarts") = 8, py::arg("seed") = 0,
     py::arg("t_start") = py::none(), py::arg("t_end") = py::none());

  m.def("fbp", [](const Sinogram& s) { return to_numpy(fbp(s)); });
  m.def("threshold_round", [](const RealArray& a, int levels) {
    if (a.ndim() != 2) throw InvalidArgument("image must be a 2-D array");
    FloatImage f(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
    std::copy(a.data(), a.data() + a.size(), f.values().begin());
    return to_numpy(threshold_round(f, levels));
  });

  m.def("clean_binary", [](const IntArray& img, int hole_max, int speck_max, int connectivity) {
    const Image src = from_numpy(img, 1);
    CleanupParams p = CleanupParams::defaults_for(src.width());
    if (hole_max >= 0) p.hole_max = hole_max;
    if (speck_max >= 0) p.speck_max = speck_max;
    p.connectivity = connectivity == 8 ? Connectivity::Eight : Connectivity::Four;
    return to_numpy(clean_binary(src, p));
  }, py::arg("image"), py::arg("hole_max") = -1, py::arg("speck_max") = -1, py::arg("connectivity") = 4);

  m.def("mae", [](const IntArray& a, const IntArray& b) { return mae(from_numpy(a, -1), from_numpy(b, -1)); });

  m.def("run_experiment", [](const std::string& config_json, const std::filesystem::path& out) {
    const ExperimentConfig cfg = ExperimentConfig::from_json(io::Json::parse(config_json));
    py::gil_scoped_release release;
    const ExperimentResult r = run_experiment(cfg, out);
    return r.any_skipped;
  }, py::arg("config_json"), py::arg("out_dir"));
}
