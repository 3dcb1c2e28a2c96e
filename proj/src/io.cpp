#include "qtomo/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "qtomo/error.hpp"

namespace qtomo::io {

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) parts.push_back(cur);
  return parts;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& s) {
  const std::string t = trim(s);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(t, &used);
  } catch (const std::exception&) {
    throw FormatError("not a number: '" + t + "'");
  }
  if (used != t.size()) throw FormatError("not a number: '" + t + "'");
  return v;
}

long long parse_int(const std::string& s) {
  const std::string t = trim(s);
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(t, &used);
  } catch (const std::exception&) {
    throw FormatError("not an integer: '" + t + "'");
  }
  if (used != t.size()) throw FormatError("not an integer: '" + t + "'");
  return v;
}

std::string lower_extension(const fs::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext;
}

template <class T>
T get(const Json& doc, const char* key) {
  if (!doc.contains(key)) throw FormatError(std::string("missing field '") + key + "'");
  try {
    return doc.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad field '") + key + "': " + e.what());
  }
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string format_shortest(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidArgument("cannot write " + path.string());
    out << text;
    if (!out) throw InvalidArgument("failed writing " + path.string());
  }
  fs::rename(tmp, path);
}

Json read_json(const fs::path& path) {
  try {
    return Json::parse(read_text(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const Json& doc) { write_text(path, doc.dump(2) + "\n"); }

void write_pgm(const fs::path& path, const Image& image, PgmFormat format) {
  std::string out = (format == PgmFormat::Binary ? "P5\n" : "P2\n") + std::to_string(image.width()) +
                    " " + std::to_string(image.height()) + "\n" + std::to_string(image.levels()) + "\n";
  if (format == PgmFormat::Binary) {
    const bool wide = image.levels() > 255;
    for (int v : image.pixels()) {
      if (wide) out.push_back(static_cast<char>((v >> 8) & 0xff));
      out.push_back(static_cast<char>(v & 0xff));
    }
  } else {
    for (int i = 0; i < image.height(); ++i) {
      for (int j = 0; j < image.width(); ++j) {
        if (j) out += ' ';
        out += std::to_string(image.at(i, j));
      }
      out += '\n';
    }
  }
  write_text(path, out);
}

Image read_pgm(const fs::path& path) {
  const std::string data = read_text(path);
  std::size_t pos = 0;
  // Header tokens, skipping whitespace and # comments.
  auto token = [&]() {
    while (pos < data.size()) {
      if (std::isspace(static_cast<unsigned char>(data[pos]))) {
        ++pos;
      } else if (data[pos] == '#') {
        while (pos < data.size() && data[pos] != '\n') ++pos;
      } else {
        break;
      }
    }
    const std::size_t start = pos;
    while (pos < data.size() && !std::isspace(static_cast<unsigned char>(data[pos]))) ++pos;
    if (start == pos) throw FormatError(path.string() + ": truncated PGM header");
    return data.substr(start, pos - start);
  };
  const std::string magic = token();
  if (magic != "P2" && magic != "P5") throw FormatError(path.string() + ": not a PGM file");
  const auto width = parse_int(token());
  const auto height = parse_int(token());
  const auto maxval = parse_int(token());
  if (width <= 0 || height <= 0 || maxval < 1 || maxval > 65535) {
    throw FormatError(path.string() + ": bad PGM header");
  }
  const auto count = static_cast<std::size_t>(width * height);
  std::vector<int> pixels(count);
  if (magic == "P5") {
    ++pos;  // single whitespace after maxval
    const std::size_t bytes = maxval > 255 ? 2 : 1;
    if (data.size() < pos + count * bytes) throw FormatError(path.string() + ": truncated PGM data");
    for (std::size_t p = 0; p < count; ++p) {
      const auto* b = reinterpret_cast<const unsigned char*>(data.data() + pos + p * bytes);
      pixels[p] = bytes == 2 ? (b[0] << 8) | b[1] : b[0];
    }
  } else {
    for (std::size_t p = 0; p < count; ++p) pixels[p] = static_cast<int>(parse_int(token()));
  }
  try {
    return Image::from_pixels(static_cast<int>(width), static_cast<int>(height),
                              static_cast<int>(maxval), std::move(pixels));
  } catch (const InvalidArgument& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_pgm(const fs::path& path, const FloatImage& image) {
  const auto& v = image.values();
  const auto [lo, hi] = v.empty() ? std::pair{0.0, 0.0}
                                  : std::pair{*std::min_element(v.begin(), v.end()),
                                              *std::max_element(v.begin(), v.end())};
  std::vector<int> pixels(v.size(), 0);
  if (hi > lo) {
    for (std::size_t p = 0; p < v.size(); ++p) {
      pixels[p] = static_cast<int>(std::lround(255.0 * (v[p] - lo) / (hi - lo)));
    }
  }
  write_pgm(path, Image::from_pixels(image.width(), image.height(), 255, std::move(pixels)));
}

std::string image_csv(const Image& image) {
  std::string out = "# levels: " + std::to_string(image.levels()) + "\n";
  for (int i = 0; i < image.height(); ++i) {
    for (int j = 0; j < image.width(); ++j) {
      if (j) out += ',';
      out += std::to_string(image.at(i, j));
    }
    out += '\n';
  }
  return out;
}

Image parse_image_csv(const std::string& text) {
  int levels = 0;
  std::vector<std::vector<int>> rows;
  for (const std::string& raw : split(text, '\n')) {
    const std::string line = trim(raw);
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto colon = line.find(':');
      if (colon != std::string::npos && trim(line.substr(1, colon - 1)) == "levels") {
        levels = static_cast<int>(parse_int(line.substr(colon + 1)));
      }
      continue;
    }
    std::vector<int> row;
    for (const std::string& cell : split(line, ',')) row.push_back(static_cast<int>(parse_int(cell)));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw FormatError("empty image CSV");
  const std::size_t width = rows.front().size();
  std::vector<int> pixels;
  for (const auto& row : rows) {
    if (row.size() != width) throw FormatError("ragged image CSV");
    pixels.insert(pixels.end(), row.begin(), row.end());
  }
  if (levels == 0) levels = std::max(1, *std::max_element(pixels.begin(), pixels.end()));
  try {
    return Image::from_pixels(static_cast<int>(width), static_cast<int>(rows.size()), levels,
                              std::move(pixels));
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("image CSV: ") + e.what());
  }
}

std::string float_image_csv(const FloatImage& image) {
  std::string out;
  for (int i = 0; i < image.height(); ++i) {
    for (int j = 0; j < image.width(); ++j) {
      if (j) out += ',';
      out += format_double(image.at(i, j));
    }
    out += '\n';
  }
  return out;
}

Image read_image(const fs::path& path) {
  const std::string ext = lower_extension(path);
  if (ext == ".pgm") return read_pgm(path);
  if (ext == ".csv") return parse_image_csv(read_text(path));
  throw InvalidArgument("unsupported image format: " + path.string());
}

void write_image(const fs::path& path, const Image& image) {
  const std::string ext = lower_extension(path);
  if (ext == ".pgm") return write_pgm(path, image);
  if (ext == ".csv") return write_text(path, image_csv(image));
  throw InvalidArgument("unsupported image format: " + path.string());
}

std::string sinogram_csv(const Sinogram& sino) {
  std::string out = "# image_size: " + std::to_string(sino.geometry.image_size) + "\n# angles:";
  for (double a : sino.geometry.angles_deg) out += " " + format_double(a);
  out += '\n';
  for (int a = 0; a < sino.angle_count(); ++a) {
    for (int s = 0; s < sino.bins(); ++s) {
      if (s) out += ',';
      out += format_double(sino.at(a, s));
    }
    out += '\n';
  }
  return out;
}

Sinogram parse_sinogram_csv(const std::string& text) {
  int size = 0;
  std::vector<double> angles;
  bool have_angles = false;
  std::vector<std::vector<double>> rows;
  for (const std::string& raw : split(text, '\n')) {
    const std::string line = trim(raw);
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto colon = line.find(':');
      if (colon == std::string::npos) continue;
      const std::string key = trim(line.substr(1, colon - 1));
      const std::string value = line.substr(colon + 1);
      if (key == "image_size") size = static_cast<int>(parse_int(value));
      if (key == "angles") {
        have_angles = true;
        std::istringstream in(value);
        std::string tok;
        while (in >> tok) angles.push_back(parse_double(tok));
      }
      continue;
    }
    std::vector<double> row;
    for (const std::string& cell : split(line, ',')) row.push_back(parse_double(cell));
    rows.push_back(std::move(row));
  }
  if (!have_angles) throw FormatError("sinogram CSV lacks the '# angles:' header");
  if (rows.size() != angles.size()) throw FormatError("sinogram CSV row count differs from angle count");
  if (size == 0 && !rows.empty()) size = static_cast<int>(rows.front().size());
  Geometry g;
  try {
    g = Geometry::with_angles(size, angles);
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("sinogram CSV: ") + e.what());
  }
  Sinogram sino(g);
  for (std::size_t a = 0; a < rows.size(); ++a) {
    if (rows[a].size() != static_cast<std::size_t>(g.detector_bins)) {
      throw FormatError("sinogram CSV row " + std::to_string(a) + " has the wrong length");
    }
    std::copy(rows[a].begin(), rows[a].end(), sino.values.begin() + static_cast<std::ptrdiff_t>(a * rows[a].size()));
  }
  return sino;
}

Json to_json(const Sinogram& sino) {
  Json rows = Json::array();
  for (int a = 0; a < sino.angle_count(); ++a) {
    Json row = Json::array();
    for (int s = 0; s < sino.bins(); ++s) row.push_back(sino.at(a, s));
    rows.push_back(std::move(row));
  }
  return {{"image_size", sino.geometry.image_size},
          {"detector_bins", sino.geometry.detector_bins},
          {"angles_deg", sino.geometry.angles_deg},
          {"values", std::move(rows)}};
}

Sinogram sinogram_from_json(const Json& doc) {
  Geometry g;
  try {
    g = Geometry::with_angles(get<int>(doc, "image_size"), get<std::vector<double>>(doc, "angles_deg"));
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("sinogram JSON: ") + e.what());
  }
  if (doc.contains("detector_bins") && get<int>(doc, "detector_bins") != g.detector_bins) {
    throw FormatError("sinogram JSON: detector_bins must equal image_size");
  }
  const auto rows = get<std::vector<std::vector<double>>>(doc, "values");
  if (rows.size() != static_cast<std::size_t>(g.angle_count())) {
    throw FormatError("sinogram JSON: row count differs from angle count");
  }
  Sinogram sino(g);
  for (std::size_t a = 0; a < rows.size(); ++a) {
    if (rows[a].size() != static_cast<std::size_t>(g.detector_bins)) {
      throw FormatError("sinogram JSON: row " + std::to_string(a) + " has the wrong length");
    }
    for (std::size_t s = 0; s < rows[a].size(); ++s) sino.at(static_cast<int>(a), static_cast<int>(s)) = rows[a][s];
  }
  return sino;
}

Sinogram read_sinogram(const fs::path& path) {
  const std::string ext = lower_extension(path);
  if (ext == ".json") return sinogram_from_json(read_json(path));
  return parse_sinogram_csv(read_text(path));
}

void write_sinogram(const fs::path& path, const Sinogram& sino) {
  if (lower_extension(path) == ".json") return write_json(path, to_json(sino));
  write_text(path, sinogram_csv(sino));
}

Json to_json(const ExclusionMask& mask) {
  Json cells = Json::array();
  for (const auto& [a, s] : mask.loose_cells()) cells.push_back({a, s});
  return {{"angle_count", mask.angle_count()},
          {"bins", mask.bins()},
          {"source", to_string(mask.source())},
          {"rows", mask.rows()},
          {"angles", mask.angles()},
          {"cells", std::move(cells)}};
}

ExclusionMask mask_from_json(const Json& doc) {
  const MaskSource source =
      doc.contains("source") ? mask_source_from_string(get<std::string>(doc, "source")) : MaskSource::Manual;
  try {
    ExclusionMask mask(get<int>(doc, "angle_count"), get<int>(doc, "bins"), source);
    if (doc.contains("rows")) {
      for (int s : get<std::vector<int>>(doc, "rows")) mask.add_row(s);
    }
    if (doc.contains("angles")) {
      for (int a : get<std::vector<int>>(doc, "angles")) mask.add_angle(a);
    }
    if (doc.contains("cells")) {
      for (const auto& cell : get<std::vector<std::vector<int>>>(doc, "cells")) {
        if (cell.size() != 2) throw FormatError("mask cell must be [angle, bin]");
        mask.add(cell[0], cell[1]);
      }
    }
    return mask;
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("mask JSON: ") + e.what());
  }
}

Json to_json(const CorruptionReport& report) {
  return {{"kind", report.kind == CorruptionKind::Ring ? "ring" : "limited-angle"},
          {"affected", report.affected},
          {"factors", report.factors},
          {"seed", report.seed}};
}

CorruptionReport report_from_json(const Json& doc) {
  CorruptionReport r;
  const auto kind = get<std::string>(doc, "kind");
  if (kind == "ring") {
    r.kind = CorruptionKind::Ring;
  } else if (kind == "limited-angle") {
    r.kind = CorruptionKind::LimitedAngle;
  } else {
    throw FormatError("unknown corruption kind '" + kind + "'");
  }
  r.affected = get<std::vector<int>>(doc, "affected");
  if (doc.contains("factors")) r.factors = get<std::vector<double>>(doc, "factors");
  if (doc.contains("seed")) r.seed = get<std::uint64_t>(doc, "seed");
  return r;
}

Json to_json(const Encoding& enc) {
  Json doc = {{"kind", to_string(enc.kind)}, {"qubits_per_pixel", enc.qubits_per_pixel()}};
  if (enc.kind == EncodingKind::BinaryPower) {
    doc["power"] = enc.power;
  } else {
    doc["alphas"] = enc.alphas;
  }
  return doc;
}

Encoding encoding_from_json(const Json& doc) {
  try {
    const EncodingKind kind = encoding_kind_from_string(get<std::string>(doc, "kind"));
    if (kind == EncodingKind::BinaryPower) return Encoding::binary_power(get<int>(doc, "power"));
    auto alphas = get<std::vector<double>>(doc, "alphas");
    return kind == EncodingKind::MacLevels ? Encoding::mac_levels(std::move(alphas))
                                           : Encoding::offset_levels(std::move(alphas));
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("encoding: ") + e.what());
  }
}

Encoding parse_encoding(const std::string& spec) {
  const auto colon = spec.find(':');
  const std::string kind = trim(spec.substr(0, colon));
  const std::string arg = colon == std::string::npos ? "" : spec.substr(colon + 1);
  auto numbers = [&]() {
    std::vector<double> v;
    for (const std::string& part : split(arg, ',')) v.push_back(parse_double(part));
    return v;
  };
  if (kind == "binary-power") return Encoding::binary_power(arg.empty() ? 0 : static_cast<int>(parse_int(arg)));
  if (kind == "unit-step") return Encoding::unit_step(arg.empty() ? 1 : static_cast<int>(parse_int(arg)));
  if (kind == "mac-levels") return Encoding::mac_levels(numbers());
  if (kind == "offset-levels") return Encoding::offset_levels(numbers());
  throw InvalidArgument("unknown encoding '" + spec + "'");
}

std::string qubo_text(const QuboModel& model) {
  std::string out = "# qubo num_vars " + std::to_string(model.num_vars) + "\n# constant " +
                    format_double(model.constant) + "\n# target_minimum " +
                    format_double(model.target_minimum) + "\n";
  // Row-major over the upper triangle: each linear term precedes its row.
  std::size_t q = 0;
  for (std::size_t u = 0; u < model.num_vars; ++u) {
    if (model.linear[u] != 0.0) {
      out += std::to_string(u) + " " + std::to_string(u) + " " + format_double(model.linear[u]) + "\n";
    }
    for (; q < model.quadratic.size() && model.quadratic[q].u == u; ++q) {
      const QuadTerm& t = model.quadratic[q];
      out += std::to_string(t.u) + " " + std::to_string(t.v) + " " + format_double(t.coeff) + "\n";
    }
  }
  return out;
}

Json qubo_sidecar(const QuboModel& model) {
  Json doc = {{"num_vars", model.num_vars},
              {"constant", model.constant},
              {"target_minimum", model.target_minimum}};
  if (model.image_size > 0) {
    doc["var_map"] = {{"layout", "(i*N+j)*K+k"},
                      {"image_size", model.image_size},
                      {"qubits_per_pixel", model.encoding.qubits_per_pixel()}};
    doc["encoding"] = to_json(model.encoding);
  } else {
    doc["var_map"] = nullptr;
    doc["encoding"] = nullptr;
  }
  doc["warnings"] = model.warnings;
  return doc;
}

QuboModel parse_qubo(const std::string& text, const Json* sidecar) {
  std::size_t num_vars = 0;
  std::size_t max_index = 0;
  bool any = false;
  std::vector<double> linear;
  std::vector<QuadTerm> quad;
  double constant = 0.0;
  std::vector<std::pair<std::size_t, double>> diag;
  std::size_t line_no = 0;
  for (const std::string& raw : split(text, '\n')) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream in(line.substr(1));
      std::string key;
      in >> key;
      if (key == "qubo") {
        std::string what, value;
        in >> what >> value;
        if (what == "num_vars") num_vars = static_cast<std::size_t>(parse_int(value));
      } else if (key == "constant") {
        std::string value;
        in >> value;
        constant = parse_double(value);
      }
      continue;
    }
    std::istringstream in(line);
    std::string su, sv, sc, extra;
    if (!(in >> su >> sv >> sc) || (in >> extra)) {
      throw FormatError("QUBO line " + std::to_string(line_no) + ": expected 'u v coeff'");
    }
    const long long u = parse_int(su);
    const long long v = parse_int(sv);
    if (u < 0 || v < 0 || u > 0xffffffffLL || v > 0xffffffffLL) {
      throw FormatError("QUBO line " + std::to_string(line_no) + ": bad index");
    }
    const double c = parse_double(sc);
    any = true;
    max_index = std::max({max_index, static_cast<std::size_t>(u), static_cast<std::size_t>(v)});
    if (u == v) {
      diag.emplace_back(static_cast<std::size_t>(u), c);
    } else {
      quad.push_back({static_cast<std::uint32_t>(u), static_cast<std::uint32_t>(v), c});
    }
  }
  if (sidecar && sidecar->contains("num_vars")) num_vars = get<std::size_t>(*sidecar, "num_vars");
  if (any && max_index >= num_vars) {
    if (num_vars != 0) throw FormatError("QUBO term index exceeds num_vars");
    num_vars = max_index + 1;
  }
  linear.assign(num_vars, 0.0);
  for (const auto& [u, c] : diag) linear[u] += c;
  if (sidecar && sidecar->contains("constant")) constant = get<double>(*sidecar, "constant");
  QuboModel model = QuboModel::from_terms(num_vars, linear, quad, constant);
  if (sidecar) {
    if (sidecar->contains("target_minimum")) model.target_minimum = get<double>(*sidecar, "target_minimum");
    if (sidecar->contains("encoding") && !sidecar->at("encoding").is_null()) {
      model.encoding = encoding_from_json(sidecar->at("encoding"));
      const Json& map = sidecar->at("var_map");
      model.image_size = get<int>(map, "image_size");
      const auto expect = static_cast<std::size_t>(model.image_size) *
                          static_cast<std::size_t>(model.image_size) *
                          static_cast<std::size_t>(model.encoding.qubits_per_pixel());
      if (expect != num_vars) throw FormatError("QUBO sidecar layout does not match num_vars");
    }
    if (sidecar->contains("warnings")) model.warnings = get<std::vector<std::string>>(*sidecar, "warnings");
  }
  return model;
}

std::vector<std::size_t> run_lengths(const Assignment& bits) {
  std::vector<std::size_t> runs;
  std::uint8_t current = 0;
  std::size_t length = 0;
  for (std::uint8_t b : bits) {
    if ((b != 0) == (current != 0)) {
      ++length;
    } else {
      runs.push_back(length);
      current ^= 1;
      length = 1;
    }
  }
  if (length > 0 || runs.empty()) runs.push_back(length);
  return runs;
}

Assignment from_run_lengths(const std::vector<std::size_t>& runs) {
  Assignment bits;
  std::uint8_t current = 0;
  for (std::size_t r : runs) {
    bits.insert(bits.end(), r, current);
    current ^= 1;
  }
  return bits;
}

Json to_json(const Solution& sol, double target_minimum) {
  return {{"solver", to_string(sol.solver)},
          {"energy", sol.energy},
          {"target_minimum", target_minimum},
          {"reached_target", sol.reached_target},
          {"num_vars", sol.assignment.size()},
          {"bits", run_lengths(sol.assignment)},
          {"seed", sol.seed},
          {"restarts_used", sol.restarts_used},
          {"wall_time_s", sol.wall_time}};
}

Solution solution_from_json(const Json& doc) {
  Solution sol;
  sol.solver = solver_kind_from_string(get<std::string>(doc, "solver"));
  sol.energy = get<double>(doc, "energy");
  sol.reached_target = get<bool>(doc, "reached_target");
  sol.assignment = from_run_lengths(get<std::vector<std::size_t>>(doc, "bits"));
  if (doc.contains("num_vars") && get<std::size_t>(doc, "num_vars") != sol.assignment.size()) {
    throw FormatError("solution bit count differs from num_vars");
  }
  if (doc.contains("seed")) sol.seed = get<std::uint64_t>(doc, "seed");
  if (doc.contains("restarts_used")) sol.restarts_used = get<int>(doc, "restarts_used");
  if (doc.contains("wall_time_s")) sol.wall_time = get<double>(doc, "wall_time_s");
  return sol;
}

}  // namespace qtomo::io
