#include "mpest/dictionary.hpp"

#include "mpest/fft.hpp"

#include <cmath>
#include <stdexcept>

namespace mpest {

Dictionary::Dictionary(ProbeSignal probe, int M, DopplerConvention conv)
    : probe_(std::move(probe)), snapshots_(M), conv_(conv) {
  if (M < 1) throw std::invalid_argument("snapshot count M must be >= 1");
}

CVec Dictionary::make_atom(const DispersionParams& theta) const {
  return atom(probe_, theta, snapshots_, conv_);
}

double Dictionary::atom_norm2() const {
  return snapshots_ * probe_.samples.squaredNorm();
}

CVec Dictionary::delay_correlations(const CVec& u, double doppler,
                                    int oversampling) const {
  const int R = probe_.length();
  const int K = probe_.num_subcarriers;
  const int M = snapshots_;
  const double Ts = probe_.sample_period;
  if (u.size() != static_cast<Eigen::Index>(R) * M)
    throw std::invalid_argument("dimension mismatch in delay_correlations");
  if (oversampling < 1) throw std::invalid_argument("oversampling must be >= 1");

  // z[r] = sum_m u[r + R m] e^{-j phase(r, m)}
  CVec z = CVec::Zero(R);
  if (M == 1 || doppler == 0.0) {
    for (int m = 0; m < M; ++m) z += u.segment(static_cast<Eigen::Index>(m) * R, R);
  } else if (conv_ == DopplerConvention::FastSlowProduct) {
    for (int r = 0; r < R; ++r) {
      const double ang = -2.0 * kPi * doppler * r * Ts;
      const cplx step(std::cos(ang), std::sin(ang));
      cplx tw(1.0, 0.0);
      cplx acc(0.0, 0.0);
      for (int m = 0; m < M; ++m) {
        acc += u[static_cast<Eigen::Index>(m) * R + r] * tw;
        tw *= step;
      }
      z[r] = acc;
    }
  } else {
    const double ang = -2.0 * kPi * doppler * R * Ts;
    const cplx step(std::cos(ang), std::sin(ang));
    cplx tw(1.0, 0.0);
    for (int m = 0; m < M; ++m) {
      z += u.segment(static_cast<Eigen::Index>(m) * R, R) * tw;
      tw *= step;
    }
  }

  CVec zf = z;
  fft(zf, false);

  // c_g = (1/R) sum_k conj(S_k) Z_k e^{+j 2 pi k g/(os R)}
  CVec pad = CVec::Zero(static_cast<Eigen::Index>(oversampling) * R);
  for (int k = 0; k < K; ++k) pad[k] = std::conj(probe_.subcarriers[k]) * zf[k];
  fft(pad, true);  // carries 1/(os*R)
  return pad * static_cast<double>(oversampling);
}

cplx Dictionary::correlate(const CVec& u, const DispersionParams& theta) const {
  return make_atom(theta).dot(u);
}

}  // namespace mpest
