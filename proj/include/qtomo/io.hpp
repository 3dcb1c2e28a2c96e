#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "qtomo/corruption.hpp"
#include "qtomo/image.hpp"
#include "qtomo/projector.hpp"
#include "qtomo/qubo.hpp"
#include "qtomo/solvers.hpp"

namespace qtomo::io {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

/// %.17g: doubles survive a text round trip exactly.
std::string format_double(double v);
/// Shortest text that still parses back to the same double.
std::string format_shortest(double v);

std::string read_text(const fs::path& path);
/// Writes through a temporary file and renames, so readers never see a
/// partially written file.
void write_text(const fs::path& path, const std::string& text);

Json read_json(const fs::path& path);
void write_json(const fs::path& path, const Json& doc);

// Images. PGM maxval is the image's level bound.
enum class PgmFormat { Ascii, Binary };
void write_pgm(const fs::path& path, const Image& image, PgmFormat format = PgmFormat::Binary);
Image read_pgm(const fs::path& path);
/// Affine rescale of [min, max] to [0, 255]; for inspection only.
void write_pgm(const fs::path& path, const FloatImage& image);

std::string image_csv(const Image& image);
Image parse_image_csv(const std::string& text);
std::string float_image_csv(const FloatImage& image);

/// Reads .pgm or .csv by extension.
Image read_image(const fs::path& path);
void write_image(const fs::path& path, const Image& image);

// Sinograms. CSV: `# image_size: N`, `# angles: a0 a1 ..` then one row per
// angle. JSON: {image_size, detector_bins, angles_deg, values}.
std::string sinogram_csv(const Sinogram& sino);
Sinogram parse_sinogram_csv(const std::string& text);
Json to_json(const Sinogram& sino);
Sinogram sinogram_from_json(const Json& doc);
Sinogram read_sinogram(const fs::path& path);
void write_sinogram(const fs::path& path, const Sinogram& sino);

Json to_json(const ExclusionMask& mask);
ExclusionMask mask_from_json(const Json& doc);

Json to_json(const CorruptionReport& report);
CorruptionReport report_from_json(const Json& doc);

Json to_json(const Encoding& enc);
Encoding encoding_from_json(const Json& doc);
/// "binary-power:M", "mac-levels:a1,a2,..", "offset-levels:a1,a2,..",
/// "unit-step:L".
Encoding parse_encoding(const std::string& spec);

/// `u v coeff` lines, u <= v, u == v for linear terms.
std::string qubo_text(const QuboModel& model);
Json qubo_sidecar(const QuboModel& model);
/// Reads a text export; the sidecar supplies num_vars, constant, target and
/// layout when given.
QuboModel parse_qubo(const std::string& text, const Json* sidecar = nullptr);

/// Run-length encoding starting with a run of zeros: "0110" -> [1, 2, 1].
std::vector<std::size_t> run_lengths(const Assignment& bits);
Assignment from_run_lengths(const std::vector<std::size_t>& runs);

Json to_json(const Solution& sol, double target_minimum);
Solution solution_from_json(const Json& doc);

}  // namespace qtomo::io
