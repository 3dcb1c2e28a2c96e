#include "qtomo/qubo.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qtomo/error.hpp"
#include "qtomo/parallel.hpp"

namespace qtomo {

std::string to_string(EncodingKind kind) {
  switch (kind) {
    case EncodingKind::BinaryPower: return "binary-power";
    case EncodingKind::MacLevels: return "mac-levels";
    case EncodingKind::OffsetLevels: return "offset-levels";
  }
  return "?";
}

EncodingKind encoding_kind_from_string(const std::string& name) {
  if (name == "binary-power") return EncodingKind::BinaryPower;
  if (name == "mac-levels") return EncodingKind::MacLevels;
  if (name == "offset-levels") return EncodingKind::OffsetLevels;
  throw InvalidArgument("unknown encoding '" + name + "'");
}

Encoding Encoding::binary_power(int m) {
  Encoding e;
  e.kind = EncodingKind::BinaryPower;
  e.power = m;
  e.validate();
  return e;
}

Encoding Encoding::mac_levels(std::vector<double> alphas) {
  Encoding e;
  e.kind = EncodingKind::MacLevels;
  e.alphas = std::move(alphas);
  e.validate();
  return e;
}

Encoding Encoding::offset_levels(std::vector<double> alphas) {
  Encoding e;
  e.kind = EncodingKind::OffsetLevels;
  e.alphas = std::move(alphas);
  e.validate();
  return e;
}

Encoding Encoding::unit_step(int levels) {
  if (levels < 1) throw InvalidArgument("unit-step encoding needs at least one level");
  std::vector<double> alphas;
  for (int v = 0; v <= levels; ++v) alphas.push_back(v);
  return offset_levels(std::move(alphas));
}

void Encoding::validate() const {
  if (kind == EncodingKind::BinaryPower) {
    if (power < 0 || power > 29) throw InvalidArgument("binary-power exponent must be in [0, 29]");
    return;
  }
  const std::size_t need = kind == EncodingKind::OffsetLevels ? 2 : 1;
  if (alphas.size() < need) {
    throw InvalidArgument(to_string(kind) + " needs at least " + std::to_string(need) +
                          " level values");
  }
  for (std::size_t k = 0; k < alphas.size(); ++k) {
    if (!std::isfinite(alphas[k])) throw InvalidArgument("level values must be finite");
    if (k > 0 && !(alphas[k] > alphas[k - 1])) {
      throw InvalidArgument("level values must be strictly increasing");
    }
  }
  // An offset floor of zero is allowed so unit steps can cover {0, .., L}.
  const bool floor_ok = kind == EncodingKind::OffsetLevels ? alphas[0] >= 0.0 : alphas[0] > 0.0;
  if (!floor_ok) throw InvalidArgument("level values must be positive");
}

int Encoding::qubits_per_pixel() const {
  switch (kind) {
    case EncodingKind::BinaryPower: return power + 1;
    case EncodingKind::MacLevels: return static_cast<int>(alphas.size());
    case EncodingKind::OffsetLevels: return static_cast<int>(alphas.size()) - 1;
  }
  return 0;
}

double Encoding::offset() const {
  return kind == EncodingKind::OffsetLevels ? alphas.front() : 0.0;
}

std::vector<double> Encoding::weights() const {
  std::vector<double> w;
  switch (kind) {
    case EncodingKind::BinaryPower:
      for (int k = 0; k <= power; ++k) w.push_back(std::ldexp(1.0, k));
      break;
    case EncodingKind::MacLevels:
      w = alphas;
      break;
    case EncodingKind::OffsetLevels:
      for (std::size_t k = 1; k < alphas.size(); ++k) w.push_back(alphas[k] - alphas[k - 1]);
      break;
  }
  return w;
}

double Encoding::max_value() const {
  switch (kind) {
    case EncodingKind::BinaryPower: return std::ldexp(1.0, power + 1) - 1.0;
    case EncodingKind::MacLevels: {
      double acc = 0.0;
      for (double a : alphas) acc += a;
      return acc;
    }
    case EncodingKind::OffsetLevels: return alphas.back();
  }
  return 0.0;
}

QuboModel QuboModel::from_terms(std::size_t num_vars, const std::vector<double>& linear,
                                const std::vector<QuadTerm>& quadratic, double constant) {
  if (linear.size() > num_vars) throw InvalidArgument("more linear terms than variables");
  QuboModel m;
  m.num_vars = num_vars;
  m.linear.assign(num_vars, 0.0);
  std::copy(linear.begin(), linear.end(), m.linear.begin());
  m.constant = constant;

  std::vector<QuadTerm> terms;
  terms.reserve(quadratic.size());
  for (QuadTerm t : quadratic) {
    if (t.u >= num_vars || t.v >= num_vars) throw InvalidArgument("term index out of range");
    if (t.u == t.v) {
      m.linear[t.u] += t.coeff;
      continue;
    }
    if (t.u > t.v) std::swap(t.u, t.v);
    terms.push_back(t);
  }
  std::stable_sort(terms.begin(), terms.end(), [](const QuadTerm& a, const QuadTerm& b) {
    return a.u != b.u ? a.u < b.u : a.v < b.v;
  });
  for (std::size_t i = 0; i < terms.size();) {
    QuadTerm merged = terms[i];
    std::size_t j = i + 1;
    for (; j < terms.size() && terms[j].u == merged.u && terms[j].v == merged.v; ++j) {
      merged.coeff += terms[j].coeff;
    }
    if (std::abs(merged.coeff) >= kPruneThreshold) m.quadratic.push_back(merged);
    i = j;
  }
  for (double& c : m.linear) {
    if (std::abs(c) < kPruneThreshold) c = 0.0;
  }
  m.target_minimum = -constant;
  return m;
}

VarSlot QuboModel::slot(std::size_t var) const {
  if (image_size <= 0) throw InvalidArgument("model has no pixel layout");
  if (var >= num_vars) throw InvalidArgument("variable index out of range");
  const auto k = static_cast<std::size_t>(encoding.qubits_per_pixel());
  const std::size_t pixel = var / k;
  const auto n = static_cast<std::size_t>(image_size);
  return {static_cast<int>(pixel / n), static_cast<int>(pixel % n), static_cast<int>(var % k)};
}

std::vector<char> QuboModel::active() const {
  std::vector<char> a(num_vars, 0);
  for (std::size_t i = 0; i < num_vars; ++i) a[i] = linear[i] != 0.0;
  for (const QuadTerm& t : quadratic) a[t.u] = a[t.v] = 1;
  return a;
}

QuboModel build_qubo(const Sinogram& sino, const Encoding& enc, const ExclusionMask& mask) {
  return build_qubo(sino, ProjectionOperator(sino.geometry), enc, mask);
}

QuboModel build_qubo(const Sinogram& sino, const ProjectionOperator& op, const Encoding& enc,
                     const ExclusionMask& mask) {
  enc.validate();
  check_mask(mask, sino);
  if (!(op.geometry() == sino.geometry)) {
    throw InvalidArgument("projection operator geometry differs from the sinogram's");
  }
  const std::size_t cells = sino.geometry.cell_count();
  if (mask.count() >= cells) throw InvalidArgument("mask excludes every sinogram cell");

  const int n = sino.geometry.image_size;
  const std::size_t pixels = static_cast<std::size_t>(n) * static_cast<std::size_t>(n);
  const std::vector<double> w = enc.weights();
  const std::size_t k_bits = w.size();
  const double floor = enc.offset();

  QuboModel model;
  model.num_vars = pixels * k_bits;
  model.image_size = n;
  model.encoding = enc;
  model.linear.assign(model.num_vars, 0.0);

  // Residual of a cell with every pixel at the floor value.
  std::vector<double> base(cells, 0.0);
  std::vector<std::vector<ProjectionOperator::Entry>> columns(pixels);
  bool zero_cell = false;
  for (std::size_t cell = 0; cell < cells; ++cell) {
    if (mask.contains(cell)) continue;
    double ray_sum = 0.0;
    for (const auto& e : op.ray(cell)) {
      columns[static_cast<std::size_t>(e.pixel)].push_back({static_cast<int>(cell), e.coeff});
      ray_sum += e.coeff;
    }
    base[cell] = sino.values[cell] - floor * ray_sum;
    if (!op.ray(cell).empty() && sino.values[cell] == 0.0) zero_cell = true;
    model.constant += base[cell] * base[cell];
  }
  model.target_minimum = -model.constant;
  if (floor > 0.0 && zero_cell) {
    model.warnings.push_back("encoding floor " + std::to_string(floor) +
                             " cannot reproduce retained zero projections");
  }

  // Row p of the Gram matrix over retained rays, then its QUBO terms. Each
  // pixel accumulates in ascending cell order, so threads never change sums.
  std::vector<std::vector<QuadTerm>> per_pixel(pixels);
  parallel_for(pixels, [&](std::size_t p) {
    std::vector<double> row(pixels, 0.0);
    std::vector<char> seen(pixels, 0);
    std::vector<std::size_t> touched;
    double diag_rhs = 0.0;
    for (const auto& [cell_i, cp] : columns[p]) {
      const auto cell = static_cast<std::size_t>(cell_i);
      diag_rhs += cp * base[cell];
      for (const auto& e : op.ray(cell)) {
        const auto q = static_cast<std::size_t>(e.pixel);
        if (q < p) continue;
        if (!seen[q]) {
          seen[q] = 1;
          touched.push_back(q);
        }
        row[q] += cp * e.coeff;
      }
    }
    std::sort(touched.begin(), touched.end());
    const double g_pp = seen[p] ? row[p] : 0.0;
    auto& out = per_pixel[p];
    for (std::size_t k = 0; k < k_bits; ++k) {
      const std::size_t u = p * k_bits + k;
      const double lin = g_pp * w[k] * w[k] - 2.0 * diag_rhs * w[k];
      model.linear[u] = std::abs(lin) < kPruneThreshold ? 0.0 : lin;
      for (std::size_t l = k + 1; l < k_bits; ++l) {
        const double c = 2.0 * g_pp * w[k] * w[l];
        if (std::abs(c) >= kPruneThreshold) {
          out.push_back({static_cast<std::uint32_t>(u), static_cast<std::uint32_t>(p * k_bits + l), c});
        }
      }
      for (std::size_t q : touched) {
        if (q == p) continue;
        for (std::size_t l = 0; l < k_bits; ++l) {
          const double c = 2.0 * row[q] * w[k] * w[l];
          if (std::abs(c) >= kPruneThreshold) {
            out.push_back({static_cast<std::uint32_t>(u), static_cast<std::uint32_t>(q * k_bits + l), c});
          }
        }
      }
    }
  });
  std::size_t total = 0;
  for (const auto& v : per_pixel) total += v.size();
  model.quadratic.reserve(total);
  for (const auto& v : per_pixel) model.quadratic.insert(model.quadratic.end(), v.begin(), v.end());
  return model;
}

double energy(const QuboModel& model, const Assignment& bits) {
  if (bits.size() != model.num_vars) {
    throw InvalidArgument("assignment has " + std::to_string(bits.size()) + " bits, model has " +
                          std::to_string(model.num_vars) + " variables");
  }
  double e = 0.0;
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i]) e += model.linear[i];
  }
  for (const QuadTerm& t : model.quadratic) {
    if (bits[t.u] && bits[t.v]) e += t.coeff;
  }
  return e;
}

double target_minimum(const Sinogram& sino, const ExclusionMask& mask) {
  check_mask(mask, sino);
  double acc = 0.0;
  for (std::size_t cell = 0; cell < sino.values.size(); ++cell) {
    if (!mask.contains(cell)) acc += sino.values[cell] * sino.values[cell];
  }
  return -acc;
}

Image decode(const Assignment& bits, const Encoding& enc, int image_size) {
  enc.validate();
  const auto k_bits = static_cast<std::size_t>(enc.qubits_per_pixel());
  const std::size_t pixels = static_cast<std::size_t>(image_size) * static_cast<std::size_t>(image_size);
  if (image_size <= 0 || bits.size() != pixels * k_bits) {
    throw InvalidArgument("assignment length " + std::to_string(bits.size()) +
                          " does not match " + std::to_string(image_size) + "x" +
                          std::to_string(image_size) + " pixels of " + std::to_string(k_bits) +
                          " bits");
  }
  const std::vector<double> w = enc.weights();
  const int levels = std::max(1, static_cast<int>(std::round(enc.max_value())));
  std::vector<int> values(pixels);
  for (std::size_t p = 0; p < pixels; ++p) {
    double v = enc.offset();
    for (std::size_t k = 0; k < k_bits; ++k) {
      if (bits[p * k_bits + k]) v += w[k];
    }
    values[p] = std::clamp(static_cast<int>(std::round(v)), 0, levels);
  }
  return Image::from_pixels(image_size, image_size, levels, std::move(values));
}

Assignment encode(const Image& image, const Encoding& enc) {
  enc.validate();
  if (image.width() != image.height()) throw InvalidArgument("encode needs a square image");
  const auto k_bits = static_cast<std::size_t>(enc.qubits_per_pixel());
  Assignment bits(image.size() * k_bits, 0);
  for (int i = 0; i < image.height(); ++i) {
    for (int j = 0; j < image.width(); ++j) {
      const int v = image.at(i, j);
      const std::size_t first = image.index(i, j) * k_bits;
      bool ok = false;
      switch (enc.kind) {
        case EncodingKind::BinaryPower:
          ok = v >= 0 && static_cast<double>(v) <= enc.max_value();
          for (std::size_t k = 0; ok && k < k_bits; ++k) bits[first + k] = (v >> k) & 1;
          break;
        case EncodingKind::MacLevels:
          // Canonical pattern is one-hot; zero is all bits clear.
          ok = v == 0;
          for (std::size_t k = 0; !ok && k < k_bits; ++k) {
            if (std::abs(enc.alphas[k] - v) < 1e-9) {
              bits[first + k] = 1;
              ok = true;
            }
          }
          break;
        case EncodingKind::OffsetLevels:
          for (std::size_t level = 0; !ok && level < enc.alphas.size(); ++level) {
            if (std::abs(enc.alphas[level] - v) < 1e-9) {
              for (std::size_t k = 0; k < level; ++k) bits[first + k] = 1;
              ok = true;
            }
          }
          break;
      }
      if (!ok) {
        throw InvalidArgument("pixel (" + std::to_string(i) + ", " + std::to_string(j) +
                              ") value " + std::to_string(v) + " is not representable by " +
                              to_string(enc.kind));
      }
    }
  }
  return bits;
}

IsingModel qubo_to_ising(const QuboModel& model) {
  IsingModel ising;
  ising.num_vars = model.num_vars;
  ising.h.assign(model.num_vars, 0.0);
  ising.constant = model.constant;
  for (std::size_t i = 0; i < model.num_vars; ++i) {
    ising.h[i] += model.linear[i] / 2.0;
    ising.constant += model.linear[i] / 2.0;
  }
  ising.couplings.reserve(model.quadratic.size());
  for (const QuadTerm& t : model.quadratic) {
    const double quarter = t.coeff / 4.0;
    ising.couplings.push_back({t.u, t.v, quarter});
    ising.h[t.u] += quarter;
    ising.h[t.v] += quarter;
    ising.constant += quarter;
  }
  return ising;
}

double ising_energy(const IsingModel& model, const Spins& spins) {
  if (spins.size() != model.num_vars) throw InvalidArgument("spin vector length mismatch");
  double e = 0.0;
  for (std::size_t i = 0; i < spins.size(); ++i) e += model.h[i] * spins[i];
  for (const QuadTerm& t : model.couplings) e += t.coeff * spins[t.u] * spins[t.v];
  return e;
}

Spins to_spins(const Assignment& bits) {
  Spins s(bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i) s[i] = bits[i] ? 1 : -1;
  return s;
}

}  // namespace qtomo
