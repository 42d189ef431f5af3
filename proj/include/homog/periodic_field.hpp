#pragma once

// Band-limited 1-periodic scalar fields on the unit cell [0,1)^Dim, stored as
// uniform samples and differentiated/evaluated through their trigonometric
// interpolant.

#include <array>
#include <cmath>
#include <complex>
#include <cstring>
#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "homog/errors.hpp"

namespace homog {

template <int Dim>
using Point = std::array<double, Dim>;

namespace detail {

inline std::size_t ipow(std::size_t base, int exp) {
  std::size_t r = 1;
  for (int i = 0; i < exp; ++i) r *= base;
  return r;
}

// Unnormalized DFT along one axis of a row-major Dim-dimensional array with
// extent n per axis.  sign = -1 forward, +1 inverse.
inline void dft_axis(std::vector<std::complex<double>>& data, std::size_t n,
                     int dim, int axis, int sign) {
  const double two_pi = 2.0 * std::numbers::pi;
  std::vector<std::complex<double>> twiddle(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double angle = sign * two_pi * static_cast<double>(k) / static_cast<double>(n);
    twiddle[k] = {std::cos(angle), std::sin(angle)};
  }
  std::size_t stride = ipow(n, dim - 1 - axis);
  std::size_t outer = ipow(n, axis);
  std::vector<std::complex<double>> line(n), out(n);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t s = 0; s < stride; ++s) {
      const std::size_t base = o * n * stride + s;
      for (std::size_t j = 0; j < n; ++j) line[j] = data[base + j * stride];
      for (std::size_t k = 0; k < n; ++k) {
        std::complex<double> acc{0.0, 0.0};
        for (std::size_t j = 0; j < n; ++j) acc += line[j] * twiddle[(k * j) % n];
        out[k] = acc;
      }
      for (std::size_t k = 0; k < n; ++k) data[base + k * stride] = out[k];
    }
  }
}

// Signed wavenumber of FFT-ordered index k; the Nyquist index maps to -n/2.
inline long wavenumber(std::size_t k, std::size_t n) {
  const long kk = static_cast<long>(k);
  const long nn = static_cast<long>(n);
  return kk < nn / 2 ? kk : kk - nn;
}

}  // namespace detail

/// Smooth 1-periodic scalar field sampled on the uniform grid y_k = k/N per
/// axis.  Immutable; evaluation anywhere uses the trigonometric interpolant.
template <int Dim>
class PeriodicField {
  static_assert(Dim == 1 || Dim == 2, "PeriodicField supports Dim = 1 or 2");

 public:
  /// Samples in row-major order (axis 0 slowest), n per axis.
  PeriodicField(std::vector<double> samples, std::size_t n)
      : samples_(std::move(samples)), n_(n) {
    if (n_ < 8 || n_ % 2 != 0) {
      throw InvalidField("periodic field needs an even number of samples >= 8 per axis, got " +
                         std::to_string(n_));
    }
    if (samples_.size() != detail::ipow(n_, Dim)) {
      throw InvalidField("periodic field sample count does not match grid size");
    }
    for (double v : samples_) {
      if (!std::isfinite(v)) throw InvalidField("periodic field samples must be finite");
    }
    coeffs_.assign(samples_.begin(), samples_.end());
    for (int a = 0; a < Dim; ++a) detail::dft_axis(coeffs_, n_, Dim, a, -1);
    const double scale = 1.0 / static_cast<double>(samples_.size());
    for (auto& c : coeffs_) c *= scale;
  }

  /// One-dimensional convenience constructor; N is the sample count.
  explicit PeriodicField(std::vector<double> samples)
    requires(Dim == 1)
      : PeriodicField(samples, samples.size()) {}

  std::size_t n() const noexcept { return n_; }
  std::size_t size() const noexcept { return samples_.size(); }
  std::span<const double> samples() const noexcept { return samples_; }
  double operator[](std::size_t i) const { return samples_[i]; }

  /// Grid node coordinate along one axis.
  double node(std::size_t k) const { return static_cast<double>(k) / static_cast<double>(n_); }

  double eval(const Point<Dim>& y) const {
    std::array<std::vector<std::complex<double>>, Dim> basis;
    for (int a = 0; a < Dim; ++a) {
      const double ya = y[a] - std::floor(y[a]);
      basis[a].resize(n_);
      for (std::size_t k = 0; k < n_; ++k) {
        const long kw = detail::wavenumber(k, n_);
        if (2 * kw == -static_cast<long>(n_)) {
          basis[a][k] = std::cos(std::numbers::pi * static_cast<double>(n_) * ya);
        } else {
          // reduce the phase to [0,1) before scaling to keep large-k modes accurate
          const double phase = static_cast<double>(kw) * ya;
          const double frac = phase - std::floor(phase);
          const double angle = 2.0 * std::numbers::pi * frac;
          basis[a][k] = {std::cos(angle), std::sin(angle)};
        }
      }
    }
    double acc = 0.0;
    if constexpr (Dim == 1) {
      for (std::size_t k = 0; k < n_; ++k) acc += (coeffs_[k] * basis[0][k]).real();
    } else {
      for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t j = 0; j < n_; ++j)
          acc += (coeffs_[i * n_ + j] * basis[0][i] * basis[1][j]).real();
    }
    return acc;
  }

  double operator()(double y) const
    requires(Dim == 1)
  {
    return eval(Point<1>{y});
  }

  double min() const {
    double m = samples_.front();
    for (double v : samples_) m = std::min(m, v);
    return m;
  }
  double max() const {
    double m = samples_.front();
    for (double v : samples_) m = std::max(m, v);
    return m;
  }
  /// Max-norm over samples.
  double sup_norm() const {
    double m = 0.0;
    for (double v : samples_) m = std::max(m, std::abs(v));
    return m;
  }
  /// Cell average (uniform quadrature, spectrally exact for the interpolant).
  double mean() const { return coeffs_[0].real(); }

  /// Spectral derivative of the given order along one axis.  Odd derivatives
  /// drop the Nyquist mode, as is standard for even N.
  PeriodicField derivative(int order, int axis = 0) const {
    if (order < 0) throw InvalidField("derivative order must be nonnegative");
    if (axis < 0 || axis >= Dim) throw InvalidField("derivative axis out of range");
    std::vector<std::complex<double>> c = coeffs_;
    const std::size_t stride = detail::ipow(n_, Dim - 1 - axis);
    for (std::size_t idx = 0; idx < c.size(); ++idx) {
      const std::size_t k = (idx / stride) % n_;
      const long kw = detail::wavenumber(k, n_);
      const bool nyquist = 2 * kw == -static_cast<long>(n_);
      if (nyquist && order % 2 == 1) {
        c[idx] = 0.0;
        continue;
      }
      const std::complex<double> ik{0.0, 2.0 * std::numbers::pi * static_cast<double>(kw)};
      std::complex<double> factor{1.0, 0.0};
      for (int o = 0; o < order; ++o) factor *= ik;
      c[idx] *= factor;
    }
    for (int a = 0; a < Dim; ++a) detail::dft_axis(c, n_, Dim, a, +1);
    std::vector<double> out(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) out[i] = c[i].real();
    return PeriodicField(std::move(out), n_);
  }

  PeriodicField laplacian() const {
    PeriodicField acc = derivative(2, 0);
    if constexpr (Dim == 2) {
      PeriodicField second = derivative(2, 1);
      std::vector<double> s(acc.samples_.begin(), acc.samples_.end());
      for (std::size_t i = 0; i < s.size(); ++i) s[i] += second.samples_[i];
      return PeriodicField(std::move(s), n_);
    }
    return acc;
  }

  /// The field translated by a fixed offset: samples of f(y + shift) on the
  /// same grid, computed exactly through the Fourier coefficients.
  PeriodicField translate(const Point<Dim>& shift) const {
    std::vector<std::complex<double>> c = coeffs_;
    for (std::size_t idx = 0; idx < c.size(); ++idx) {
      std::size_t rem = idx;
      std::complex<double> factor{1.0, 0.0};
      for (int a = Dim - 1; a >= 0; --a) {
        const std::size_t k = rem % n_;
        rem /= n_;
        const long kw = detail::wavenumber(k, n_);
        if (2 * kw == -static_cast<long>(n_)) {
          // only the cosine part of the Nyquist mode is visible on the grid
          factor *= std::cos(std::numbers::pi * static_cast<double>(n_) * shift[a]);
        } else {
          const double angle = 2.0 * std::numbers::pi * static_cast<double>(kw) * shift[a];
          factor *= std::complex<double>{std::cos(angle), std::sin(angle)};
        }
      }
      c[idx] *= factor;
    }
    for (int a = 0; a < Dim; ++a) detail::dft_axis(c, n_, Dim, a, +1);
    std::vector<double> out(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) out[i] = c[i].real();
    return PeriodicField(std::move(out), n_);
  }

  /// Samples of the interpolant on a grid of m points per axis (exact copy
  /// when m == n).
  std::vector<double> resample(std::size_t m) const {
    if (m == n_) return samples_;
    std::vector<double> out(detail::ipow(m, Dim));
    for (std::size_t idx = 0; idx < out.size(); ++idx) {
      Point<Dim> y{};
      std::size_t rem = idx;
      for (int a = Dim - 1; a >= 0; --a) {
        y[a] = static_cast<double>(rem % m) / static_cast<double>(m);
        rem /= m;
      }
      out[idx] = eval(y);
    }
    return out;
  }

  /// 64-bit FNV-1a over the sample bits; stable across platforms with IEEE doubles.
  std::uint64_t fingerprint(std::uint64_t seed = 1469598103934665603ULL) const {
    std::uint64_t h = seed;
    auto mix = [&h](std::uint64_t word) {
      for (int b = 0; b < 8; ++b) {
        h ^= (word >> (8 * b)) & 0xffU;
        h *= 1099511628211ULL;
      }
    };
    mix(static_cast<std::uint64_t>(n_));
    for (double v : samples_) {
      std::uint64_t bits = 0;
      static_assert(sizeof(bits) == sizeof(v));
      std::memcpy(&bits, &v, sizeof(v));
      mix(bits);
    }
    return h;
  }

 private:
  std::vector<double> samples_;
  std::size_t n_;
  std::vector<std::complex<double>> coeffs_;
};

using PeriodicField1 = PeriodicField<1>;
using PeriodicField2 = PeriodicField<2>;

inline PeriodicField1 make_periodic_field(std::vector<double> samples) {
  return PeriodicField1(std::move(samples));
}

/// order 1 or 2 derivative of a one-dimensional field.
inline PeriodicField1 differentiate(const PeriodicField1& f, int order) {
  if (order != 1 && order != 2) throw InvalidField("differentiate supports order 1 or 2");
  return f.derivative(order);
}

/// Samples a callable on the tensor grid of n points per axis.
template <int Dim, class F>
PeriodicField<Dim> sample_field(F&& f, std::size_t n) {
  std::vector<double> s(detail::ipow(n, Dim));
  for (std::size_t idx = 0; idx < s.size(); ++idx) {
    Point<Dim> y{};
    std::size_t rem = idx;
    for (int a = Dim - 1; a >= 0; --a) {
      y[a] = static_cast<double>(rem % n) / static_cast<double>(n);
      rem /= n;
    }
    if constexpr (Dim == 1) {
      s[idx] = f(y[0]);
    } else {
      s[idx] = f(y);
    }
  }
  return PeriodicField<Dim>(std::move(s), n);
}

}  // namespace homog
