#include "mpest/fft.hpp"

#include <cmath>

namespace mpest {

namespace {

bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

void fft_radix2(cplx* x, std::size_t n, bool inverse) {
  // bit reversal
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(x[i], x[j]);
  }
  const double sgn = inverse ? 1.0 : -1.0;
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = sgn * 2.0 * kPi / static_cast<double>(len);
    const cplx wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      cplx w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        cplx u = x[i + k];
        cplx v = x[i + k + len / 2] * w;
        x[i + k] = u + v;
        x[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
  if (inverse) {
    for (std::size_t i = 0; i < n; ++i) x[i] /= static_cast<double>(n);
  }
}

void dft_direct(cplx* x, std::size_t n, bool inverse) {
  const double sgn = inverse ? 1.0 : -1.0;
  std::vector<cplx> out(n, cplx(0.0, 0.0));
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t m = 0; m < n; ++m) {
      const double ang = sgn * 2.0 * kPi * static_cast<double>(k * m % n) /
                         static_cast<double>(n);
      out[k] += x[m] * cplx(std::cos(ang), std::sin(ang));
    }
  }
  for (std::size_t k = 0; k < n; ++k) {
    x[k] = inverse ? out[k] / static_cast<double>(n) : out[k];
  }
}

}  // namespace

void fft(std::vector<cplx>& data, bool inverse) {
  if (data.empty()) return;
  if (is_pow2(data.size())) {
    fft_radix2(data.data(), data.size(), inverse);
  } else {
    dft_direct(data.data(), data.size(), inverse);
  }
}

void fft(CVec& data, bool inverse) {
  if (data.size() == 0) return;
  const auto n = static_cast<std::size_t>(data.size());
  if (is_pow2(n)) {
    fft_radix2(data.data(), n, inverse);
  } else {
    dft_direct(data.data(), n, inverse);
  }
}

}  // namespace mpest
