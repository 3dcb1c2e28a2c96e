// qtomo command-line front end.
#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

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

namespace fs = std::filesystem;
using namespace qtomo;
using io::Json;

namespace {

constexpr int kExitInvalid = 2;
constexpr int kExitSkipped = 3;

struct Globals {
  std::uint64_t seed = 0;
  std::string out = ".";
  std::string format = "csv";
  int threads = 1;
};

fs::path resolve(const Globals& g, const std::string& name) {
  const fs::path p(name);
  return p.is_absolute() ? p : fs::path(g.out) / p;
}

std::string default_name(const Globals& g, const std::string& stem) {
  return stem + (g.format == "json" ? ".json" : ".csv");
}

/// Either a JSON object or one `key,value` line per field.
void report(const Globals& g, const Json& doc) {
  if (g.format == "json") {
    std::cout << doc.dump(2) << "\n";
    return;
  }
  for (const auto& [key, value] : doc.items()) {
    std::cout << key << "," << (value.is_string() ? value.get<std::string>() : value.dump()) << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Integer tomography by QUBO reconstruction"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "Master random seed")->capture_default_str();
  app.add_option("--out", g.out, "Output directory")->capture_default_str();
  app.add_option("--format", g.format, "Tabular output format")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads (results do not depend on it)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  // phantom
  auto* phantom = app.add_subcommand("phantom", "Generate a ground-truth image");
  std::string ph_kind = "random", ph_output = "phantom.pgm", ph_ellipses;
  int ph_size = 10, ph_levels = 1, ph_pad = 0;
  double ph_radius = 0.0;
  phantom->add_option("--kind", ph_kind)->check(CLI::IsMember({"random", "ellipses", "disk", "shepp-logan"}));
  phantom->add_option("--size", ph_size)->capture_default_str();
  phantom->add_option("--levels", ph_levels)->capture_default_str();
  phantom->add_option("--radius", ph_radius, "Disk radius (default size/4)");
  phantom->add_option("--ellipses", ph_ellipses, "JSON list of {center, axes, rotation, value}");
  phantom->add_option("--pad", ph_pad)->capture_default_str();
  phantom->add_option("-o,--output", ph_output)->capture_default_str();

  // project
  auto* project = app.add_subcommand("project", "Forward-project an image");
  std::string pr_image, pr_output;
  int pr_angles = 0;
  double pr_range = 180.0;
  project->add_option("image", pr_image)->required()->check(CLI::ExistingFile);
  project->add_option("--angles", pr_angles, "Angle count (default: image size)");
  project->add_option("--range", pr_range)->capture_default_str();
  project->add_option("-o,--output", pr_output);

  // corrupt
  auto* corrupt = app.add_subcommand("corrupt", "Inject ring errors or delete angles");
  std::string co_input, co_kind = "ring", co_mode = "random", co_output;
  double co_rate = 0.1;
  std::vector<double> co_factors{0.5, 1.5}, co_gap{0.95, 1.05};
  corrupt->add_option("sinogram", co_input)->required()->check(CLI::ExistingFile);
  corrupt->add_option("--kind", co_kind)->check(CLI::IsMember({"ring", "limited-angle"}))->capture_default_str();
  corrupt->add_option("--rate", co_rate)->capture_default_str();
  corrupt->add_option("--factor-range", co_factors)->expected(2);
  corrupt->add_option("--factor-gap", co_gap)->expected(2);
  corrupt->add_option("--mode", co_mode)->check(CLI::IsMember({"random", "prefix-keep"}))->capture_default_str();
  corrupt->add_option("-o,--output", co_output);

  // detect
  auto* detect = app.add_subcommand("detect", "Find erroneous detector rows");
  std::string de_input, de_method = "mass", de_output = "mask.json";
  double de_k = 3.0;
  detect->add_option("sinogram", de_input)->required()->check(CLI::ExistingFile);
  detect->add_option("--method", de_method)->check(CLI::IsMember({"mass", "neighbor"}))->capture_default_str();
  detect->add_option("--k", de_k, "MAD multiplier for the score threshold")->capture_default_str();
  detect->add_option("-o,--output", de_output)->capture_default_str();

  // build-qubo
  auto* build = app.add_subcommand("build-qubo", "Write the QUBO export and sidecar");
  std::string bq_input, bq_mask, bq_encoding = "unit-step:1", bq_output = "qubo.txt";
  build->add_option("sinogram", bq_input)->required()->check(CLI::ExistingFile);
  build->add_option("--mask", bq_mask)->check(CLI::ExistingFile);
  build->add_option("--encoding", bq_encoding,
                    "binary-power:M | mac-levels:a,.. | offset-levels:a,.. | unit-step:L")
      ->capture_default_str();
  build->add_option("-o,--output", bq_output)->capture_default_str();

  // solve
  auto* solve = app.add_subcommand("solve", "Minimise an exported QUBO");
  std::string so_input, so_sidecar, so_solver = "sa", so_output = "solution.json";
  int so_sweeps = 200, so_restarts = 8;
  std::optional<double> so_t_start, so_t_end;
  solve->add_option("qubo", so_input)->required()->check(CLI::ExistingFile);
  solve->add_option("--sidecar", so_sidecar, "Default: <qubo stem>.json when present");
  solve->add_option("--solver", so_solver)->check(CLI::IsMember({"sa", "greedy", "brute"}))->capture_default_str();
  solve->add_option("--sweeps", so_sweeps)->capture_default_str();
  solve->add_option("--restarts", so_restarts)->capture_default_str();
  solve->add_option("--t-start", so_t_start);
  solve->add_option("--t-end", so_t_end);
  solve->add_option("-o,--output", so_output)->capture_default_str();

  // decode
  auto* decode_cmd = app.add_subcommand("decode", "Turn a solution back into an image");
  std::string dc_input, dc_sidecar, dc_output = "reconstruction.pgm";
  decode_cmd->add_option("solution", dc_input)->required()->check(CLI::ExistingFile);
  decode_cmd->add_option("--sidecar", dc_sidecar, "QUBO sidecar with encoding and layout")
      ->required()
      ->check(CLI::ExistingFile);
  decode_cmd->add_option("-o,--output", dc_output)->capture_default_str();

  // fbp
  auto* fbp_cmd = app.add_subcommand("fbp", "Filtered backprojection baseline");
  std::string fb_input, fb_output = "fbp";
  int fb_levels = 1;
  fbp_cmd->add_option("sinogram", fb_input)->required()->check(CLI::ExistingFile);
  fbp_cmd->add_option("--levels", fb_levels, "Rounding range [0, L]")->capture_default_str();
  fbp_cmd->add_option("-o,--output", fb_output, "Output stem")->capture_default_str();

  // clean
  auto* clean = app.add_subcommand("clean", "Fill small holes and remove specks");
  std::string cl_input, cl_output = "cleaned.pgm";
  std::optional<int> cl_hole, cl_speck;
  int cl_conn = 4;
  clean->add_option("image", cl_input)->required()->check(CLI::ExistingFile);
  clean->add_option("--hole-max", cl_hole, "Default ceil(N^2/100)");
  clean->add_option("--speck-max", cl_speck, "Default ceil(N^2/100)");
  clean->add_option("--connectivity", cl_conn)->check(CLI::IsMember({4, 8}))->capture_default_str();
  clean->add_option("-o,--output", cl_output)->capture_default_str();

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Mean absolute error between two images");
  std::string ev_a, ev_b;
  evaluate->add_option("reconstruction", ev_a)->required()->check(CLI::ExistingFile);
  evaluate->add_option("truth", ev_b)->required()->check(CLI::ExistingFile);

  // experiment
  auto* experiment = app.add_subcommand("experiment", "Run a configured benchmark suite");
  std::string ex_config;
  experiment->add_option("config", ex_config, "Config JSON or a previous manifest.json")
      ->required()
      ->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInvalid;
  }

  try {
    set_num_threads(g.threads);
    fs::create_directories(g.out);

    if (phantom->parsed()) {
      PhantomSpec spec;
      spec.kind = ph_kind;
      spec.size = ph_size;
      spec.levels = ph_levels;
      spec.radius = ph_radius;
      spec.pad = ph_pad;
      if (!ph_ellipses.empty()) {
        for (const Json& e : io::read_json(ph_ellipses)) {
          const auto c = e.value("center", std::vector<double>{0.0, 0.0});
          const auto a = e.at("axes").get<std::vector<double>>();
          if (c.size() != 2 || a.size() != 2) throw InvalidArgument("ellipse center/axes need two values");
          spec.ellipses.push_back({c[0], c[1], a[0], a[1], e.value("rotation", 0.0), e.value("value", 1)});
        }
      }
      const Image img = make_phantom(spec, g.seed);
      io::write_image(resolve(g, ph_output), img);
      report(g, {{"image", resolve(g, ph_output).string()}, {"size", img.width()}, {"levels", img.levels()},
                 {"mass", img.sum()}});
    } else if (project->parsed()) {
      const Image img = io::read_image(pr_image);
      if (img.width() != img.height()) throw InvalidArgument("image must be square");
      const Geometry geo = Geometry::uniform(img.width(), pr_angles > 0 ? pr_angles : img.width(), pr_range);
      const Sinogram sino = radon(img, geo);
      const fs::path out = resolve(g, pr_output.empty() ? default_name(g, "sinogram") : pr_output);
      io::write_sinogram(out, sino);
      report(g, {{"sinogram", out.string()}, {"angles", geo.angle_count()}, {"bins", geo.detector_bins},
                 {"clipped", sino.clipped}});
    } else if (corrupt->parsed()) {
      const Sinogram sino = io::read_sinogram(co_input);
      const fs::path out = resolve(g, co_output.empty() ? default_name(g, "corrupted") : co_output);
      Json summary = {{"sinogram", out.string()}};
      if (co_kind == "ring") {
        RingOptions ro;
        ro.rate = co_rate;
        ro.seed = g.seed;
        ro.factor_lo = co_factors[0];
        ro.factor_hi = co_factors[1];
        ro.gap_lo = co_gap[0];
        ro.gap_hi = co_gap[1];
        const RingCorruption rc = inject_ring_errors(sino, ro);
        io::write_sinogram(out, rc.sinogram);
        io::write_json(resolve(g, "corruption.json"), io::to_json(rc.report));
        summary["rows"] = rc.report.affected;
      } else {
        const auto mode = co_mode == "random" ? DeletionMode::Random : DeletionMode::PrefixKeep;
        const AngleDeletion del = delete_angles(sino, co_rate, mode, g.seed);
        io::write_sinogram(out, del.reduced);
        io::write_json(resolve(g, "corruption.json"), io::to_json(del.report));
        io::write_json(resolve(g, "mask.json"), io::to_json(del.mask));
        summary["kept_angles"] = del.kept;
      }
      report(g, summary);
    } else if (detect->parsed()) {
      const Sinogram sino = io::read_sinogram(de_input);
      DetectOptions opt;
      opt.k = de_k;
      opt.method = de_method == "mass" ? DetectMethod::MassConsistency : DetectMethod::NeighborDifference;
      const RowDetection det = analyze_error_rows(sino, opt);
      io::write_json(resolve(g, de_output), io::to_json(det.mask));
      report(g, {{"mask", resolve(g, de_output).string()}, {"rows", det.kept}, {"factors", det.factors},
                 {"threshold", det.threshold}});
    } else if (build->parsed()) {
      const Sinogram sino = io::read_sinogram(bq_input);
      const ExclusionMask mask = bq_mask.empty() ? ExclusionMask::for_sinogram(sino)
                                                 : io::mask_from_json(io::read_json(bq_mask));
      const Encoding enc = io::parse_encoding(bq_encoding);
      const QuboModel model = build_qubo(sino, enc, mask);
      const fs::path out = resolve(g, bq_output);
      fs::path side = out;
      side.replace_extension(".json");
      io::write_text(out, io::qubo_text(model));
      io::write_json(side, io::qubo_sidecar(model));
      for (const auto& w : model.warnings) std::cerr << "warning: " << w << "\n";
      report(g, {{"qubo", out.string()}, {"sidecar", side.string()}, {"num_vars", model.num_vars},
                 {"quadratic_terms", model.quadratic.size()}, {"target_minimum", model.target_minimum}});
    } else if (solve->parsed()) {
      fs::path side = so_sidecar;
      if (side.empty()) {
        side = so_input;
        side.replace_extension(".json");
        if (!fs::exists(side)) side.clear();
      }
      const Json sidecar = side.empty() ? Json() : io::read_json(side);
      const QuboModel model = io::parse_qubo(io::read_text(so_input), side.empty() ? nullptr : &sidecar);
      Solution sol;
      if (so_solver == "brute") {
        try {
          sol = brute_force(model);
        } catch (const TooLarge& e) {
          std::cerr << "skipped: " << e.what() << "\n";
          return kExitSkipped;
        }
      } else if (so_solver == "greedy") {
        sol = greedy_descent(model, g.seed);
      } else {
        AnnealSchedule sched;
        sched.sweeps = so_sweeps;
        sched.restarts = so_restarts;
        sched.t_start = so_t_start;
        sched.t_end = so_t_end;
        sched.seed = g.seed;
        sol = simulated_anneal(model, sched);
      }
      io::write_json(resolve(g, so_output), io::to_json(sol, model.target_minimum));
      report(g, {{"solution", resolve(g, so_output).string()}, {"energy", sol.energy},
                 {"target_minimum", model.target_minimum}, {"reached_target", sol.reached_target}});
    } else if (decode_cmd->parsed()) {
      const Json sidecar = io::read_json(dc_sidecar);
      if (!sidecar.contains("encoding") || sidecar.at("encoding").is_null()) {
        throw InvalidArgument("sidecar has no pixel layout");
      }
      const Encoding enc = io::encoding_from_json(sidecar.at("encoding"));
      const int size = sidecar.at("var_map").at("image_size").get<int>();
      const Solution sol = io::solution_from_json(io::read_json(dc_input));
      const Image img = decode(sol.assignment, enc, size);
      io::write_image(resolve(g, dc_output), img);
      report(g, {{"image", resolve(g, dc_output).string()}, {"size", size}, {"levels", img.levels()}});
    } else if (fbp_cmd->parsed()) {
      const Sinogram sino = io::read_sinogram(fb_input);
      const FloatImage rec = fbp(sino);
      const Image rounded = threshold_round(rec, fb_levels);
      io::write_text(resolve(g, fb_output + ".csv"), io::float_image_csv(rec));
      io::write_pgm(resolve(g, fb_output + "_raw.pgm"), rec);
      io::write_pgm(resolve(g, fb_output + ".pgm"), rounded);
      report(g, {{"values", resolve(g, fb_output + ".csv").string()},
                 {"rounded", resolve(g, fb_output + ".pgm").string()}});
    } else if (clean->parsed()) {
      const Image img = io::read_image(cl_input);
      CleanupParams p = CleanupParams::defaults_for(img.width());
      if (cl_hole) p.hole_max = *cl_hole;
      if (cl_speck) p.speck_max = *cl_speck;
      p.connectivity = cl_conn == 4 ? Connectivity::Four : Connectivity::Eight;
      const Image out = clean_binary(img, p);
      io::write_image(resolve(g, cl_output), out);
      report(g, {{"image", resolve(g, cl_output).string()}, {"changed_pixels", mae(img, out) * img.size()}});
    } else if (evaluate->parsed()) {
      const Image a = io::read_image(ev_a);
      const Image b = io::read_image(ev_b);
      report(g, {{"mae", mae(a, b)}});
    } else if (experiment->parsed()) {
      const ExperimentConfig cfg = ExperimentConfig::from_json(io::read_json(ex_config));
      const ExperimentResult res = run_experiment(cfg, g.out);
      report(g, {{"results", (fs::path(g.out) / "results.csv").string()}, {"rows", res.rows.size()},
                 {"skipped", res.any_skipped}});
      if (res.any_skipped) return kExitSkipped;
    }
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const DetectionFailed& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const TooLarge& e) {
    std::cerr << "skipped: " << e.what() << "\n";
    return kExitSkipped;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
