// Independent reference computations used by the tests. None of these call
// into the code under test beyond plain data accessors.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <utility>
#include <vector>

#include "qtomo/corruption.hpp"
#include "qtomo/image.hpp"
#include "qtomo/projector.hpp"
#include "qtomo/qubo.hpp"

namespace oracle {

struct Pt {
  double x, y;
};

// Keeps the part of `poly` with n.p >= c (Sutherland-Hodgman, one edge).
inline std::vector<Pt> clip(const std::vector<Pt>& poly, double nx, double ny, double c) {
  std::vector<Pt> out;
  const std::size_t n = poly.size();
  for (std::size_t k = 0; k < n; ++k) {
    const Pt a = poly[k];
    const Pt b = poly[(k + 1) % n];
    const double da = nx * a.x + ny * a.y - c;
    const double db = nx * b.x + ny * b.y - c;
    if (da >= 0) out.push_back(a);
    if ((da >= 0) != (db >= 0)) {
      const double t = da / (da - db);
      out.push_back({a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)});
    }
  }
  return out;
}

inline double area(const std::vector<Pt>& poly) {
  double acc = 0.0;
  for (std::size_t k = 0; k < poly.size(); ++k) {
    const Pt a = poly[k];
    const Pt b = poly[(k + 1) % poly.size()];
    acc += a.x * b.y - b.x * a.y;
  }
  return std::abs(acc) / 2.0;
}

// Area of the unit pixel square centered at (cx, cy) whose projection
// t = x cos + y sin falls in [lo, hi).
inline double strip_area(double theta_deg, double cx, double cy, double lo, double hi) {
  const double th = theta_deg * std::acos(-1.0) / 180.0;
  const double c = std::cos(th);
  const double s = std::sin(th);
  std::vector<Pt> sq = {{cx - 0.5, cy - 0.5}, {cx + 0.5, cy - 0.5}, {cx + 0.5, cy + 0.5}, {cx - 0.5, cy + 0.5}};
  sq = clip(sq, c, s, lo);
  if (sq.size() < 3) return 0.0;
  sq = clip(sq, -c, -s, -hi);
  if (sq.size() < 3) return 0.0;
  return area(sq);
}

// Dense system matrix, rows angle-major, built from the polygon oracle.
inline std::vector<std::vector<double>> dense_system(const qtomo::Geometry& g) {
  const int n = g.image_size;
  const int bins = g.detector_bins;
  std::vector<std::vector<double>> m(g.cell_count(), std::vector<double>(static_cast<std::size_t>(n * n), 0.0));
  for (int a = 0; a < g.angle_count(); ++a) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const double cx = j - (n - 1) / 2.0;
        const double cy = (n - 1) / 2.0 - i;
        for (int s = 0; s < bins; ++s) {
          const double lo = s - bins / 2.0;
          m[static_cast<std::size_t>(a * bins + s)][static_cast<std::size_t>(i * n + j)] =
              strip_area(g.angles_deg[static_cast<std::size_t>(a)], cx, cy, lo, lo + 1.0);
        }
      }
    }
  }
  return m;
}

// Per-pixel values of an assignment, evaluated straight from the encoding
// definition.
inline std::vector<double> pixel_values(const qtomo::Assignment& bits, const qtomo::Encoding& enc, int n) {
  const int k = enc.qubits_per_pixel();
  std::vector<double> v(static_cast<std::size_t>(n * n), 0.0);
  for (int p = 0; p < n * n; ++p) {
    double acc = 0.0;
    for (int b = 0; b < k; ++b) {
      const bool on = bits[static_cast<std::size_t>(p * k + b)] != 0;
      switch (enc.kind) {
        case qtomo::EncodingKind::BinaryPower:
          if (on) acc += std::pow(2.0, b);
          break;
        case qtomo::EncodingKind::MacLevels:
          if (on) acc += enc.alphas[static_cast<std::size_t>(b)];
          break;
        case qtomo::EncodingKind::OffsetLevels:
          if (on) acc += enc.alphas[static_cast<std::size_t>(b + 1)] - enc.alphas[static_cast<std::size_t>(b)];
          break;
      }
    }
    if (enc.kind == qtomo::EncodingKind::OffsetLevels) acc += enc.alphas.front();
    v[static_cast<std::size_t>(p)] = acc;
  }
  return v;
}

// Sum over retained cells of (reprojection - P)^2 using a dense matrix.
inline double residual_sum(const std::vector<std::vector<double>>& system, const qtomo::Sinogram& sino,
                           const qtomo::ExclusionMask& mask, const std::vector<double>& pixels) {
  double acc = 0.0;
  for (std::size_t cell = 0; cell < system.size(); ++cell) {
    if (mask.contains(cell)) continue;
    double proj = 0.0;
    for (std::size_t p = 0; p < pixels.size(); ++p) proj += system[cell][p] * pixels[p];
    const double r = proj - sino.values[cell];
    acc += r * r;
  }
  return acc;
}

// Energy straight from a dense upper-triangular matrix.
inline double dense_energy(const std::vector<std::vector<double>>& q, const qtomo::Assignment& bits) {
  double e = 0.0;
  for (std::size_t u = 0; u < q.size(); ++u) {
    if (!bits[u]) continue;
    for (std::size_t v = u; v < q.size(); ++v) {
      if (bits[v]) e += q[u][v];
    }
  }
  return e;
}

inline std::vector<std::vector<double>> dense_matrix(const qtomo::QuboModel& m) {
  std::vector<std::vector<double>> q(m.num_vars, std::vector<double>(m.num_vars, 0.0));
  for (std::size_t i = 0; i < m.num_vars; ++i) q[i][i] = m.linear[i];
  for (const auto& t : m.quadratic) q[t.u][t.v] += t.coeff;
  return q;
}

// Minimum energy by plain counting (bit i of the counter is variable i).
inline std::pair<double, qtomo::Assignment> exhaustive_minimum(const qtomo::QuboModel& m) {
  const auto q = dense_matrix(m);
  double best = std::numeric_limits<double>::infinity();
  qtomo::Assignment best_bits(m.num_vars, 0);
  qtomo::Assignment bits(m.num_vars, 0);
  for (std::uint64_t code = 0; code < (std::uint64_t{1} << m.num_vars); ++code) {
    for (std::size_t i = 0; i < m.num_vars; ++i) bits[i] = (code >> i) & 1;
    const double e = dense_energy(q, bits);
    if (e < best) {
      best = e;
      best_bits = bits;
    }
  }
  return {best, best_bits};
}

inline qtomo::QuboModel random_model(std::size_t n, std::mt19937_64& gen, double density = 1.0) {
  std::normal_distribution<double> coef(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> linear(n);
  for (double& a : linear) a = coef(gen);
  std::vector<qtomo::QuadTerm> quad;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (u(gen) < density) {
        quad.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), coef(gen)});
      }
    }
  }
  return qtomo::QuboModel::from_terms(n, linear, quad, 0.0);
}

inline bool relative_close(double a, double b, double rel, double abs_floor = 1e-12) {
  return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b)) + abs_floor;
}

}  // namespace oracle
