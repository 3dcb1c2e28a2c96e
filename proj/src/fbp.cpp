#include "qtomo/fbp.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>

#include "qtomo/error.hpp"
#include "qtomo/parallel.hpp"

namespace qtomo {

namespace {

// Planning touches FFTW's global state and is not thread-safe.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct RealBuffer {
  explicit RealBuffer(std::size_t n) : data(fftw_alloc_real(n)) {}
  ~RealBuffer() { fftw_free(data); }
  RealBuffer(const RealBuffer&) = delete;
  RealBuffer& operator=(const RealBuffer&) = delete;
  double* data;
};

struct ComplexBuffer {
  explicit ComplexBuffer(std::size_t n) : data(fftw_alloc_complex(n)) {}
  ~ComplexBuffer() { fftw_free(data); }
  ComplexBuffer(const ComplexBuffer&) = delete;
  ComplexBuffer& operator=(const ComplexBuffer&) = delete;
  fftw_complex* data;
};

class Plans {
 public:
  explicit Plans(int n) : in_(static_cast<std::size_t>(n)), out_(static_cast<std::size_t>(n / 2 + 1)) {
    std::lock_guard lock(planner_mutex());
    forward_ = fftw_plan_dft_r2c_1d(n, in_.data, out_.data, FFTW_ESTIMATE);
    backward_ = fftw_plan_dft_c2r_1d(n, out_.data, in_.data, FFTW_ESTIMATE);
  }
  ~Plans() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
  }
  Plans(const Plans&) = delete;
  Plans& operator=(const Plans&) = delete;

  // New-array execution is thread-safe for buffers from fftw_alloc_*.
  void forward(double* in, fftw_complex* out) const { fftw_execute_dft_r2c(forward_, in, out); }
  void backward(fftw_complex* in, double* out) const { fftw_execute_dft_c2r(backward_, in, out); }

 private:
  RealBuffer in_;
  ComplexBuffer out_;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
};

}  // namespace

int padded_length(int bins) {
  int n = 64;
  while (n < 2 * bins) n *= 2;
  return n;
}

std::vector<double> ramp_filter(int padded) {
  if (padded < 2 || padded % 2 != 0) throw InvalidArgument("ramp filter length must be even");
  const auto n = static_cast<std::size_t>(padded);
  RealBuffer kernel(n);
  ComplexBuffer spectrum(n / 2 + 1);
  std::fill(kernel.data, kernel.data + n, 0.0);
  // Band-limited ramp in the spatial domain: 1/4 at 0, -1/(pi k)^2 at odd
  // offsets k (measured circularly), 0 at even offsets.
  kernel.data[0] = 0.25;
  for (std::size_t i = 1; i < n; i += 2) {
    const double k = static_cast<double>(std::min(i, n - i));
    kernel.data[i] = -1.0 / (std::numbers::pi * std::numbers::pi * k * k);
  }
  {
    Plans plans(padded);
    plans.forward(kernel.data, spectrum.data);
  }
  std::vector<double> response(n / 2 + 1);
  for (std::size_t i = 0; i < response.size(); ++i) response[i] = 2.0 * spectrum.data[i][0];
  return response;
}

FloatImage fbp(const Sinogram& sino) {
  sino.geometry.validate();
  const int angles = sino.angle_count();
  if (angles < 2) throw InvalidArgument("filtered backprojection needs at least 2 angles");
  const int bins = sino.bins();
  const int n = sino.geometry.image_size;
  const int padded = padded_length(bins);
  const std::vector<double> response = ramp_filter(padded);

  std::vector<double> filtered(static_cast<std::size_t>(angles) * static_cast<std::size_t>(bins));
  {
    const Plans plans(padded);
    parallel_for(static_cast<std::size_t>(angles), [&](std::size_t a) {
      RealBuffer line(static_cast<std::size_t>(padded));
      ComplexBuffer spectrum(response.size());
      std::fill(line.data, line.data + padded, 0.0);
      for (int s = 0; s < bins; ++s) line.data[s] = sino.at(static_cast<int>(a), s);
      plans.forward(line.data, spectrum.data);
      for (std::size_t k = 0; k < response.size(); ++k) {
        spectrum.data[k][0] *= response[k];
        spectrum.data[k][1] *= response[k];
      }
      plans.backward(spectrum.data, line.data);
      for (int s = 0; s < bins; ++s) {
        filtered[a * static_cast<std::size_t>(bins) + static_cast<std::size_t>(s)] = line.data[s] / padded;
      }
    });
  }

  std::vector<std::pair<double, double>> trig;
  for (double theta : sino.geometry.angles_deg) trig.push_back(cos_sin_deg(theta));
  const double half = (n - 1) / 2.0;
  const double scale = std::numbers::pi / (2.0 * angles);

  FloatImage out(n, n);
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t row) {
    const int i = static_cast<int>(row);
    for (int j = 0; j < n; ++j) {
      const double x = j - half;
      const double y = half - i;
      double acc = 0.0;
      for (int a = 0; a < angles; ++a) {
        const auto [c, s] = trig[static_cast<std::size_t>(a)];
        // Bin centers sit at t = s + 1/2 - S/2.
        const double u = x * c + y * s + bins / 2.0 - 0.5;
        const double lo = std::floor(u);
        const int k = static_cast<int>(lo);
        const double frac = u - lo;
        const double* line = filtered.data() + static_cast<std::size_t>(a) * static_cast<std::size_t>(bins);
        double v = 0.0;
        if (k >= 0 && k < bins) v += (1.0 - frac) * line[k];
        if (k + 1 >= 0 && k + 1 < bins) v += frac * line[k + 1];
        acc += v;
      }
      out.at(i, j) = acc * scale;
    }
  });
  return out;
}

Image threshold_round(const FloatImage& image, int levels) {
  if (levels < 1) throw InvalidArgument("levels must be at least 1");
  std::vector<int> values(image.values().size());
  for (std::size_t p = 0; p < values.size(); ++p) {
    const double v = image.values()[p];
    if (!std::isfinite(v)) throw InvalidArgument("image contains non-finite values");
    values[p] = static_cast<int>(std::round(std::clamp(v, 0.0, static_cast<double>(levels))));
  }
  return Image::from_pixels(image.width(), image.height(), levels, std::move(values));
}

}  // namespace qtomo
