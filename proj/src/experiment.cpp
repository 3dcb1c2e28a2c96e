#include "qtomo/experiment.hpp"

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdio>

#include "qtomo/error.hpp"
#include "qtomo/fbp.hpp"
#include "qtomo/rng.hpp"

namespace qtomo {

namespace fs = std::filesystem;
using io::Json;

double mae(const Image& a, const Image& b) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw InvalidArgument("mae: images differ in size");
  }
  if (a.size() == 0) return 0.0;
  long long total = 0;
  for (std::size_t p = 0; p < a.size(); ++p) total += std::abs(a.pixels()[p] - b.pixels()[p]);
  return static_cast<double>(total) / static_cast<double>(a.size());
}

RankCheck identifiability(const ProjectionOperator& op, const ExclusionMask& mask) {
  const Geometry& g = op.geometry();
  if (mask.angle_count() != g.angle_count() || mask.bins() != g.detector_bins) {
    throw InvalidArgument("mask domain does not match the operator geometry");
  }
  std::vector<std::size_t> kept;
  for (std::size_t cell = 0; cell < op.ray_count(); ++cell) {
    if (!mask.contains(cell) && !op.ray(cell).empty()) kept.push_back(cell);
  }
  const auto unknowns = static_cast<Eigen::Index>(g.image_size) * g.image_size;
  Eigen::MatrixXd system = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(kept.size()), unknowns);
  for (std::size_t r = 0; r < kept.size(); ++r) {
    for (const auto& e : op.ray(kept[r])) system(static_cast<Eigen::Index>(r), e.pixel) = e.coeff;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(system);
  qr.setThreshold(1e-10);
  return {static_cast<std::size_t>(qr.rank()), static_cast<std::size_t>(unknowns)};
}

Image make_phantom(const PhantomSpec& spec, std::uint64_t seed) {
  Image img;
  if (spec.kind == "random") {
    img = gen_random_phantom(spec.size, spec.levels, seed);
  } else if (spec.kind == "ellipses") {
    img = gen_ellipse_phantom(spec.size, spec.ellipses);
  } else if (spec.kind == "disk") {
    const double r = spec.radius > 0.0 ? spec.radius : spec.size / 4.0;
    img = gen_ellipse_phantom(spec.size, {{0.0, 0.0, r, r, 0.0, spec.levels}});
  } else if (spec.kind == "shepp-logan") {
    img = gen_ellipse_phantom(spec.size, shepp_logan_binary(spec.size));
  } else {
    throw InvalidArgument("unknown phantom kind '" + spec.kind + "'");
  }
  return spec.pad > 0 ? pad(img, spec.pad) : img;
}

std::string to_string(ErrorType t) {
  switch (t) {
    case ErrorType::None: return "none";
    case ErrorType::Ring: return "ring";
    case ErrorType::LimitedAngle: return "limited-angle";
  }
  return "?";
}

namespace {

ErrorType error_type_from_string(const std::string& s) {
  if (s == "none") return ErrorType::None;
  if (s == "ring") return ErrorType::Ring;
  if (s == "limited-angle" || s == "limited") return ErrorType::LimitedAngle;
  throw InvalidArgument("unknown corruption kind '" + s + "'");
}

template <class T>
T value_or(const Json& doc, const char* key, T fallback) {
  if (!doc.is_object() || !doc.contains(key) || doc.at(key).is_null()) return fallback;
  try {
    return doc.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("config field '") + key + "': " + e.what());
  }
}

std::pair<double, double> pair_or(const Json& doc, const char* key, std::pair<double, double> fallback) {
  const auto v = value_or<std::vector<double>>(doc, key, {fallback.first, fallback.second});
  if (v.size() != 2) throw InvalidArgument(std::string("config field '") + key + "' needs two values");
  return {v[0], v[1]};
}

CaseConfig case_from_json(const Json& doc, std::size_t index) {
  CaseConfig c;
  c.name = value_or<std::string>(doc, "name", "case" + std::to_string(index));

  const Json ph = doc.value("phantom", Json::object());
  c.phantom.kind = value_or<std::string>(ph, "kind", "random");
  c.phantom.size = value_or<int>(ph, "size", 10);
  c.phantom.levels = value_or<int>(ph, "levels", 1);
  c.phantom.radius = value_or<double>(ph, "radius", 0.0);
  c.phantom.pad = value_or<int>(ph, "pad", 0);
  if (ph.contains("ellipses")) {
    for (const Json& e : ph.at("ellipses")) {
      const auto center = pair_or(e, "center", {0.0, 0.0});
      const auto axes = pair_or(e, "axes", {1.0, 1.0});
      c.phantom.ellipses.push_back({center.first, center.second, axes.first, axes.second,
                                    value_or<double>(e, "rotation", 0.0), value_or<int>(e, "value", 1)});
    }
  }

  const Json geo = doc.value("geometry", Json::object());
  c.angles = value_or<int>(geo, "angles", 0);
  c.range_deg = value_or<double>(geo, "range", 180.0);

  if (doc.contains("encoding")) {
    const Json& enc = doc.at("encoding");
    c.encoding = enc.is_string() ? io::parse_encoding(enc.get<std::string>()) : io::encoding_from_json(enc);
  } else {
    c.encoding = Encoding::unit_step(c.phantom.levels);
  }

  const Json cor = doc.value("corruption", Json::object());
  c.corruption.kind = error_type_from_string(value_or<std::string>(cor, "kind", "none"));
  c.corruption.rates = value_or<std::vector<double>>(cor, "rates", {0.0});
  std::tie(c.corruption.factor_lo, c.corruption.factor_hi) = pair_or(cor, "factor_range", {0.5, 1.5});
  std::tie(c.corruption.gap_lo, c.corruption.gap_hi) = pair_or(cor, "factor_gap", {0.95, 1.05});
  const auto mask = value_or<std::string>(cor, "mask", "detected");
  if (mask != "detected" && mask != "oracle") throw InvalidArgument("mask must be 'detected' or 'oracle'");
  c.corruption.oracle_mask = mask == "oracle";
  const auto mode = value_or<std::string>(cor, "mode", "random");
  if (mode != "random" && mode != "prefix-keep") throw InvalidArgument("mode must be 'random' or 'prefix-keep'");
  c.corruption.deletion = mode == "random" ? DeletionMode::Random : DeletionMode::PrefixKeep;
  for (double r : c.corruption.rates) {
    if (!(r >= 0.0 && r < 1.0)) throw InvalidArgument("rates must lie in [0, 1)");
  }

  if (doc.contains("solvers")) {
    c.solvers.clear();
    for (const auto& s : doc.at("solvers").get<std::vector<std::string>>()) {
      c.solvers.push_back(solver_kind_from_string(s));
    }
  }
  const Json an = doc.value("anneal", Json::object());
  c.anneal.sweeps = value_or<int>(an, "sweeps", c.anneal.sweeps);
  c.anneal.restarts = value_or<int>(an, "restarts", c.anneal.restarts);
  if (an.contains("t_start")) c.anneal.t_start = an.at("t_start").get<double>();
  if (an.contains("t_end")) c.anneal.t_end = an.at("t_end").get<double>();
  c.anneal.validate();

  if (doc.contains("postprocess")) {
    const Json& pp = doc.at("postprocess");
    if (pp.is_boolean()) {
      c.postprocess = pp.get<bool>();
    } else {
      c.postprocess = true;
      CleanupParams p = CleanupParams::defaults_for(c.phantom.size + 2 * c.phantom.pad);
      p.hole_max = value_or<int>(pp, "hole_max", p.hole_max);
      p.speck_max = value_or<int>(pp, "speck_max", p.speck_max);
      const int conn = value_or<int>(pp, "connectivity", 4);
      if (conn != 4 && conn != 8) throw InvalidArgument("connectivity must be 4 or 8");
      p.connectivity = conn == 4 ? Connectivity::Four : Connectivity::Eight;
      c.cleanup = p;
    }
  }
  return c;
}

Json case_to_json(const CaseConfig& c) {
  Json ellipses = Json::array();
  for (const auto& e : c.phantom.ellipses) {
    ellipses.push_back({{"center", {e.center_x, e.center_y}},
                        {"axes", {e.semi_a, e.semi_b}},
                        {"rotation", e.rotation_deg},
                        {"value", e.value}});
  }
  Json solvers = Json::array();
  for (SolverKind s : c.solvers) solvers.push_back(to_string(s));
  Json anneal = {{"sweeps", c.anneal.sweeps}, {"restarts", c.anneal.restarts}};
  if (c.anneal.t_start) anneal["t_start"] = *c.anneal.t_start;
  if (c.anneal.t_end) anneal["t_end"] = *c.anneal.t_end;
  Json doc = {
      {"name", c.name},
      {"phantom",
       {{"kind", c.phantom.kind},
        {"size", c.phantom.size},
        {"levels", c.phantom.levels},
        {"radius", c.phantom.radius},
        {"ellipses", std::move(ellipses)},
        {"pad", c.phantom.pad}}},
      {"geometry", {{"angles", c.angles}, {"range", c.range_deg}}},
      {"encoding", io::to_json(c.encoding)},
      {"corruption",
       {{"kind", to_string(c.corruption.kind)},
        {"rates", c.corruption.rates},
        {"factor_range", {c.corruption.factor_lo, c.corruption.factor_hi}},
        {"factor_gap", {c.corruption.gap_lo, c.corruption.gap_hi}},
        {"mask", c.corruption.oracle_mask ? "oracle" : "detected"},
        {"mode", c.corruption.deletion == DeletionMode::Random ? "random" : "prefix-keep"}}},
      {"solvers", std::move(solvers)},
      {"anneal", std::move(anneal)},
  };
  if (c.cleanup) {
    doc["postprocess"] = {{"hole_max", c.cleanup->hole_max},
                          {"speck_max", c.cleanup->speck_max},
                          {"connectivity", static_cast<int>(c.cleanup->connectivity)}};
  } else {
    doc["postprocess"] = c.postprocess;
  }
  return doc;
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

std::string rate_dir(std::size_t index, double rate) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "rate%02zu-%.3f", index, rate);
  return buf;
}

void add_flag(std::string& flags, const std::string& flag) {
  if (!flags.empty()) flags += ';';
  flags += flag;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const Json& raw) {
  const Json& doc = raw.contains("config") ? raw.at("config") : raw;
  ExperimentConfig cfg;
  cfg.name = value_or<std::string>(doc, "name", "experiment");
  cfg.seed = value_or<std::uint64_t>(doc, "seed", 0);
  if (doc.contains("cases")) {
    std::size_t i = 0;
    for (const Json& c : doc.at("cases")) cfg.cases.push_back(case_from_json(c, i++));
  } else {
    cfg.cases.push_back(case_from_json(doc, 0));
  }
  if (cfg.cases.empty()) throw InvalidArgument("experiment has no cases");
  return cfg;
}

Json ExperimentConfig::to_json() const {
  Json cases_json = Json::array();
  for (const auto& c : cases) cases_json.push_back(case_to_json(c));
  return {{"name", name}, {"seed", seed}, {"cases", std::move(cases_json)}};
}

std::vector<ResultRow> run_case(const CaseConfig& config, std::uint64_t case_seed,
                                const fs::path* artifacts) {
  const std::uint64_t phantom_seed = derive_seed(case_seed, 0);
  // One corruption stream per case: ring rates then nest.
  const std::uint64_t corruption_seed = derive_seed(case_seed, 1);
  const Image truth = make_phantom(config.phantom, phantom_seed);
  const int n = truth.width();
  const int angles = config.angles > 0 ? config.angles : n;
  const Geometry geometry = Geometry::uniform(n, angles, config.range_deg);
  const ProjectionOperator op(geometry);
  const Sinogram clean = apply_operator(op, truth);
  const CleanupParams cleanup_params = config.cleanup.value_or(CleanupParams::defaults_for(n));

  std::vector<ResultRow> rows;
  for (std::size_t r = 0; r < config.corruption.rates.size(); ++r) {
    const double rate = config.corruption.rates[r];
    ResultRow row;
    row.case_name = config.name;
    row.image_size = n;
    row.levels = truth.levels();
    row.error_type = config.corruption.kind;
    row.error_rate = rate;
    row.phantom_seed = phantom_seed;
    row.corruption_seed = corruption_seed;
    row.greedy_seed = derive_seed(case_seed, 1000 + r);
    row.anneal_seed = derive_seed(case_seed, 2000 + r);

    // Objective data (full grid plus mask) and the FBP input.
    Sinogram data = clean;
    Sinogram fbp_input = clean;
    ExclusionMask mask = ExclusionMask::for_sinogram(clean, MaskSource::Manual);
    std::optional<CorruptionReport> report;
    if (config.corruption.kind == ErrorType::Ring && rate > 0.0) {
      RingOptions ro;
      ro.rate = rate;
      ro.seed = corruption_seed;
      ro.factor_lo = config.corruption.factor_lo;
      ro.factor_hi = config.corruption.factor_hi;
      ro.gap_lo = config.corruption.gap_lo;
      ro.gap_hi = config.corruption.gap_hi;
      RingCorruption rc = inject_ring_errors(clean, ro);
      data = rc.sinogram;
      fbp_input = rc.sinogram;
      report = rc.report;
      bool fallback = config.corruption.oracle_mask;
      if (!fallback) {
        try {
          mask = detect_error_rows(data);
          row.detection_exact = mask.rows() == rc.report.affected;
        } catch (const DetectionFailed&) {
          fallback = true;
          row.detection_exact = false;
          add_flag(row.flags, "detection-failed:oracle-mask");
        }
      }
      if (fallback) {
        mask = ExclusionMask::for_sinogram(data, MaskSource::Manual);
        for (int s : rc.report.affected) mask.add_row(s);
      }
      row.mask_source = config.corruption.oracle_mask ? "oracle" : (fallback ? "oracle-fallback" : "detected");
    } else if (config.corruption.kind == ErrorType::LimitedAngle && rate > 0.0) {
      AngleDeletion del = delete_angles(clean, rate, config.corruption.deletion, corruption_seed);
      mask = del.mask;
      fbp_input = del.reduced;
      report = del.report;
      // Deleted projections never reach the objective; blank them anyway.
      for (int a : del.report.affected) {
        for (int s = 0; s < data.bins(); ++s) data.at(a, s) = 0.0;
      }
      row.mask_source = "deleted-angles";
    } else {
      row.mask_source = "none";
    }
    row.excluded_cells = mask.count();

    fs::path dir;
    if (artifacts) {
      dir = *artifacts / config.name / rate_dir(r, rate);
      fs::create_directories(dir);
      io::write_pgm(dir / "truth.pgm", truth);
      io::write_json(dir / "mask.json", io::to_json(mask));
      if (report) io::write_json(dir / "corruption.json", io::to_json(*report));
    }

    {
      const auto t0 = Clock::now();
      const FloatImage rec = fbp(fbp_input);
      const Image fbp_image = threshold_round(rec, truth.levels());
      row.fbp.time_s = seconds_since(t0);
      row.fbp.ran = true;
      row.fbp.mae = mae(fbp_image, truth);
      if (artifacts) {
        io::write_pgm(dir / "fbp.pgm", fbp_image);
        io::write_pgm(dir / "fbp_raw.pgm", rec);
      }
    }

    if (!config.solvers.empty()) {
      row.rank = identifiability(op, mask);
      if (!row.rank->identifiable()) add_flag(row.flags, "underdetermined");
      const auto t0 = Clock::now();
      const QuboModel model = build_qubo(data, op, config.encoding, mask);
      row.build_time_s = seconds_since(t0);
      row.num_vars = model.num_vars;
      row.target_minimum = model.target_minimum;
      if (!model.warnings.empty()) add_flag(row.flags, "representation-warning");

      for (SolverKind kind : config.solvers) {
        MethodResult* slot = kind == SolverKind::Greedy ? &row.greedy
                             : kind == SolverKind::Anneal ? &row.sa
                                                          : &row.brute;
        Solution sol;
        try {
          if (kind == SolverKind::Greedy) {
            sol = greedy_descent(model, row.greedy_seed);
          } else if (kind == SolverKind::Anneal) {
            AnnealSchedule sched = config.anneal;
            sched.seed = row.anneal_seed;
            sol = simulated_anneal(model, sched);
          } else {
            sol = brute_force(model);
          }
        } catch (const TooLarge&) {
          slot->skipped = true;
          continue;
        }
        Image rec = decode(sol.assignment, config.encoding, n);
        if (config.postprocess) rec = cleanup(rec, cleanup_params);
        slot->ran = true;
        slot->mae = mae(rec, truth);
        slot->energy_gap = sol.energy - model.target_minimum;
        slot->reached_target = sol.reached_target;
        slot->time_s = sol.wall_time;
        if (artifacts) io::write_pgm(dir / (to_string(kind) + ".pgm"), rec);
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

std::string cell(const MethodResult& m, double MethodResult::*field) {
  if (m.skipped) return "skipped";
  if (!m.ran) return "";
  return io::format_shortest(m.*field);
}

std::string flag_cell(const MethodResult& m) {
  if (m.skipped) return "skipped";
  if (!m.ran) return "";
  return m.reached_target ? "1" : "0";
}

}  // namespace

std::string results_csv(const std::vector<ResultRow>& rows) {
  std::string out =
      "case,image_size,pixel_range,error_type,error_rate,"
      "mae_fbp,mae_greedy,mae_sa,mae_brute,"
      "gap_greedy,gap_sa,gap_brute,"
      "reached_greedy,reached_sa,reached_brute,"
      "num_vars,target_minimum,excluded_cells,mask_source,detection_exact,rank,identifiable,flags\n";
  for (const ResultRow& r : rows) {
    std::vector<std::string> f = {
        r.case_name,
        std::to_string(r.image_size),
        "0-" + std::to_string(r.levels),
        to_string(r.error_type),
        io::format_shortest(r.error_rate),
        cell(r.fbp, &MethodResult::mae),
        cell(r.greedy, &MethodResult::mae),
        cell(r.sa, &MethodResult::mae),
        cell(r.brute, &MethodResult::mae),
        cell(r.greedy, &MethodResult::energy_gap),
        cell(r.sa, &MethodResult::energy_gap),
        cell(r.brute, &MethodResult::energy_gap),
        flag_cell(r.greedy),
        flag_cell(r.sa),
        flag_cell(r.brute),
        std::to_string(r.num_vars),
        r.rank ? io::format_shortest(r.target_minimum) : "",
        std::to_string(r.excluded_cells),
        r.mask_source,
        r.detection_exact ? (*r.detection_exact ? "1" : "0") : "",
        r.rank ? std::to_string(r.rank->rank) + "/" + std::to_string(r.rank->unknowns) : "",
        r.rank ? (r.rank->identifiable() ? "1" : "0") : "",
        r.flags,
    };
    for (std::size_t i = 0; i < f.size(); ++i) {
      if (i) out += ',';
      out += f[i];
    }
    out += '\n';
  }
  return out;
}

std::string timings_csv(const std::vector<ResultRow>& rows) {
  auto t = [](const MethodResult& m) { return m.ran ? io::format_shortest(m.time_s) : std::string(); };
  std::string out = "case,error_rate,time_fbp,time_build,time_greedy,time_sa,time_brute\n";
  for (const ResultRow& r : rows) {
    out += r.case_name + "," + io::format_shortest(r.error_rate) + "," + t(r.fbp) + "," +
           (r.rank ? io::format_shortest(r.build_time_s) : std::string()) + "," + t(r.greedy) + "," +
           t(r.sa) + "," + t(r.brute) + "\n";
  }
  return out;
}

ExperimentResult run_experiment(const ExperimentConfig& config, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  ExperimentResult result;
  Json seeds = Json::array();
  const fs::path artifacts = out_dir / "cases";
  for (std::size_t c = 0; c < config.cases.size(); ++c) {
    const std::uint64_t case_seed = derive_seed(config.seed, c);
    auto rows = run_case(config.cases[c], case_seed, &artifacts);
    Json per_rate = Json::array();
    for (const ResultRow& r : rows) {
      per_rate.push_back({{"rate", r.error_rate}, {"greedy", r.greedy_seed}, {"sa", r.anneal_seed}});
      if (r.greedy.skipped || r.sa.skipped || r.brute.skipped) result.any_skipped = true;
    }
    seeds.push_back({{"case", config.cases[c].name},
                     {"case_seed", case_seed},
                     {"phantom", rows.empty() ? 0 : rows.front().phantom_seed},
                     {"corruption", rows.empty() ? 0 : rows.front().corruption_seed},
                     {"solvers", std::move(per_rate)}});
    result.rows.insert(result.rows.end(), std::make_move_iterator(rows.begin()),
                       std::make_move_iterator(rows.end()));
  }
  io::write_text(out_dir / "results.csv", results_csv(result.rows));
  io::write_text(out_dir / "timings.csv", timings_csv(result.rows));
  const Json manifest = {{"tool", "qtomo"},
                         {"version", "0.1.0"},
                         {"config", config.to_json()},
                         {"seeds", std::move(seeds)},
                         {"outputs", {"results.csv", "timings.csv", "cases/"}}};
  io::write_json(out_dir / "manifest.json", manifest);
  return result;
}

}  // namespace qtomo
