#pragma once

#include "mpest/types.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace mpest {

// Noise precision matrix Lambda. Almost always white (lambda * I); the
// full Hermitian matrix form is kept so colored-noise paths stay testable.
class NoisePrecision {
 public:
  static NoisePrecision white(double lambda, int n);
  static NoisePrecision full(CMat m);

  bool is_white() const { return white_; }
  double scalar() const;  // white form only
  const CMat& matrix() const;
  int dim() const { return n_; }

  CVec apply(const CVec& x) const;                 // Lambda x
  double quad(const CVec& x) const;                // x^H Lambda x
  cplx inner(const CVec& a, const CVec& b) const;  // a^H Lambda b

 private:
  NoisePrecision() = default;
  bool white_ = true;
  double lambda_ = 1.0;
  int n_ = 0;
  CMat mat_;
};

// x^H Lambda x, real and nonnegative for Hermitian PSD Lambda.
double weighted_norm2(const CVec& x, const NoisePrecision& lambda);

// Nonlinear atom parameters: delay (seconds) and Doppler shift (Hz).
struct DispersionParams {
  double delay = 0.0;
  double doppler = 0.0;
};

// Phase progression of the Doppler term across the R x M sample grid.
// FastSlowProduct is e^{j 2 pi nu r m Ts}; SlowTimeOnly is the
// conventional per-snapshot phase e^{j 2 pi nu m R Ts}.
enum class DopplerConvention { FastSlowProduct, SlowTimeOnly };

// OFDM probe: K active subcarriers on the first K bins of the R-point
// frequency grid, unit magnitude, uniformly random phases.
struct ProbeSignal {
  CVec samples;      // length R, time domain
  CVec subcarriers;  // length K, unit-magnitude frequency gains
  double sample_period = 1.0;
  int num_subcarriers = 0;
  std::uint64_t rng_seed = 0;

  int length() const { return static_cast<int>(samples.size()); }
};

ProbeSignal make_ofdm_probe(int K, int R, double Ts, std::uint64_t seed);

// Delayed (and Doppler-shifted, for M > 1) copy of the probe, vectorized
// with the fast-time index r running fastest. Fractional delays are
// realized by a frequency-domain phase ramp on the probe subcarriers;
// the delay convention is circular over [0, R*Ts).
CVec atom(const ProbeSignal& probe, const DispersionParams& theta, int M,
          DopplerConvention conv = DopplerConvention::FastSlowProduct);

struct Measurement {
  CVec y;
  NoisePrecision noise_precision = NoisePrecision::white(1.0, 0);
  double sample_period = 1.0;
  int R = 0;
  int M = 1;

  int size() const { return static_cast<int>(y.size()); }
};

struct SyntheticScene {
  struct Component {
    cplx weight;
    DispersionParams params;
  };
  std::vector<Component> components;
  double snr_db = 0.0;
  std::uint64_t seed = 0;
};

// y = sum_l w_l s(theta_l) + xi with the noise level set so that
// 10 log10(||sum w_l s||^2 / E||xi||^2) + 10 log10(N) = snr_db.
// An empty scene produces unit-variance noise.
Measurement synthesize(const SyntheticScene& scene, const ProbeSignal& probe,
                       int M,
                       DopplerConvention conv = DopplerConvention::FastSlowProduct);

// Scene + probe configuration, read from a JSON config file.
struct SceneConfig {
  int K = 128;
  int R = 128;
  int M = 1;
  double Ts = 1.0;
  double snr_db = 20.0;
  std::uint64_t seed = 0;
  struct ComponentSpec {
    double tau = 0.0;
    double doppler = 0.0;
    double weight_mag = 1.0;
    double weight_phase = 0.0;
    bool random_phase = false;
  };
  std::vector<ComponentSpec> components;
};

SceneConfig load_scene_config(const std::string& path);
SyntheticScene realize_scene(const SceneConfig& cfg);

// Measurement CSV: header "index,re,im", one row per sample.
void write_measurement_csv(const Measurement& m, std::ostream& out);
CVec read_measurement_csv(std::istream& in);

}  // namespace mpest
