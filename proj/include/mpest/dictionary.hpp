#pragma once

#include "mpest/signal_model.hpp"
#include "mpest/types.hpp"

namespace mpest {

// Continuous delay(-Doppler) dictionary bound to one probe. Provides
// single atoms and fast correlation sweeps over an oversampled delay grid
// (FFT across the probe band), which is what the estimators spend nearly
// all their time on.
class Dictionary {
 public:
  Dictionary(ProbeSignal probe, int M, DopplerConvention conv);

  int R() const { return probe_.length(); }
  int M() const { return snapshots_; }
  int size() const { return R() * snapshots_; }
  double Ts() const { return probe_.sample_period; }
  const ProbeSignal& probe() const { return probe_; }
  DopplerConvention convention() const { return conv_; }

  CVec make_atom(const DispersionParams& theta) const;

  // ||s(theta)||^2 in the time domain; delay and Doppler are unitary, so
  // this is constant over theta.
  double atom_norm2() const;

  // s(tau_g, nu)^H u for all grid delays tau_g = g*Ts/os, g = 0..os*R-1.
  CVec delay_correlations(const CVec& u, double doppler, int oversampling) const;

  // s(theta)^H u at a single point.
  cplx correlate(const CVec& u, const DispersionParams& theta) const;

 private:
  ProbeSignal probe_;
  int snapshots_;
  DopplerConvention conv_;
};

}  // namespace mpest
