#include "mpest/signal_model.hpp"

#include "mpest/fft.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace mpest {

NoisePrecision NoisePrecision::white(double lambda, int n) {
  if (lambda <= 0.0) throw std::invalid_argument("noise precision must be positive");
  NoisePrecision p;
  p.white_ = true;
  p.lambda_ = lambda;
  p.n_ = n;
  return p;
}

NoisePrecision NoisePrecision::full(CMat m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("noise precision must be square");
  NoisePrecision p;
  p.white_ = false;
  p.n_ = static_cast<int>(m.rows());
  p.mat_ = std::move(m);
  return p;
}

double NoisePrecision::scalar() const {
  if (!white_) throw std::logic_error("noise precision is not white");
  return lambda_;
}

const CMat& NoisePrecision::matrix() const {
  if (white_) throw std::logic_error("white noise precision has no materialized matrix");
  return mat_;
}

CVec NoisePrecision::apply(const CVec& x) const {
  if (x.size() != n_) throw std::invalid_argument("dimension mismatch in noise precision");
  return white_ ? CVec(lambda_ * x) : CVec(mat_ * x);
}

double NoisePrecision::quad(const CVec& x) const {
  if (x.size() != n_) throw std::invalid_argument("dimension mismatch in noise precision");
  if (white_) return lambda_ * x.squaredNorm();
  return std::real(x.dot(mat_ * x));
}

cplx NoisePrecision::inner(const CVec& a, const CVec& b) const {
  if (a.size() != n_ || b.size() != n_)
    throw std::invalid_argument("dimension mismatch in noise precision");
  if (white_) return lambda_ * a.dot(b);
  return a.dot(mat_ * b);
}

double weighted_norm2(const CVec& x, const NoisePrecision& lambda) {
  return lambda.quad(x);
}

ProbeSignal make_ofdm_probe(int K, int R, double Ts, std::uint64_t seed) {
  if (K <= 0 || K > R) throw std::invalid_argument("probe requires 1 <= K <= R");
  if (Ts <= 0.0) throw std::invalid_argument("sample period must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  ProbeSignal p;
  p.sample_period = Ts;
  p.num_subcarriers = K;
  p.rng_seed = seed;
  p.subcarriers.resize(K);
  for (int k = 0; k < K; ++k) {
    const double phase = 2.0 * kPi * unif(rng);
    p.subcarriers[k] = cplx(std::cos(phase), std::sin(phase));
  }
  CVec spec = CVec::Zero(R);
  spec.head(K) = p.subcarriers;
  fft(spec, true);  // inverse DFT carries the 1/R factor
  p.samples = spec;
  return p;
}

CVec atom(const ProbeSignal& probe, const DispersionParams& theta, int M,
          DopplerConvention conv) {
  const int R = probe.length();
  const int K = probe.num_subcarriers;
  const double Ts = probe.sample_period;
  if (M < 1) throw std::invalid_argument("snapshot count M must be >= 1");
  if (!std::isfinite(theta.delay) || !std::isfinite(theta.doppler))
    throw std::domain_error("dispersion parameters must be finite");
  if (theta.delay < 0.0 || theta.delay >= R * Ts)
    throw std::domain_error("delay outside the unambiguous range [0, R*Ts)");

  // fractional delay as a phase ramp on the active subcarriers
  const double d = theta.delay / Ts;
  CVec spec = CVec::Zero(R);
  for (int k = 0; k < K; ++k) {
    const double ang = -2.0 * kPi * k * d / R;
    spec[k] = probe.subcarriers[k] * cplx(std::cos(ang), std::sin(ang));
  }
  fft(spec, true);

  CVec out(static_cast<Eigen::Index>(R) * M);
  if (M == 1 || theta.doppler == 0.0) {
    for (int m = 0; m < M; ++m) out.segment(static_cast<Eigen::Index>(m) * R, R) = spec;
    return out;
  }
  for (int m = 0; m < M; ++m) {
    if (conv == DopplerConvention::FastSlowProduct) {
      const double step = 2.0 * kPi * theta.doppler * m * Ts;  // per unit r
      for (int r = 0; r < R; ++r) {
        const double ang = step * r;
        out[static_cast<Eigen::Index>(m) * R + r] =
            spec[r] * cplx(std::cos(ang), std::sin(ang));
      }
    } else {
      const double ang = 2.0 * kPi * theta.doppler * m * R * Ts;
      out.segment(static_cast<Eigen::Index>(m) * R, R) =
          spec * cplx(std::cos(ang), std::sin(ang));
    }
  }
  return out;
}

Measurement synthesize(const SyntheticScene& scene, const ProbeSignal& probe,
                       int M, DopplerConvention conv) {
  const int R = probe.length();
  const Eigen::Index N = static_cast<Eigen::Index>(R) * M;
  for (const auto& c : scene.components) {
    if (std::abs(c.weight) <= 0.0)
      throw std::invalid_argument("scene components must have nonzero weight");
  }

  CVec signal = CVec::Zero(N);
  for (const auto& c : scene.components) signal += c.weight * atom(probe, c.params, M, conv);

  // SNR convention: snr_db = 10 log10(||signal||^2 / E||xi||^2) + 10 log10(N)
  double sigma2 = 1.0;
  if (!scene.components.empty()) {
    const double snr_lin = std::pow(10.0, scene.snr_db / 10.0);
    sigma2 = signal.squaredNorm() / snr_lin;
  }

  std::mt19937_64 rng(scene.seed);
  std::normal_distribution<double> gauss(0.0, std::sqrt(sigma2 / 2.0));
  CVec noise(N);
  for (Eigen::Index i = 0; i < N; ++i) noise[i] = cplx(gauss(rng), gauss(rng));

  Measurement m;
  m.y = signal + noise;
  m.noise_precision = NoisePrecision::white(1.0 / sigma2, static_cast<int>(N));
  m.sample_period = probe.sample_period;
  m.R = R;
  m.M = M;
  return m;
}

SceneConfig load_scene_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);
  nlohmann::json j;
  in >> j;
  SceneConfig cfg;
  cfg.K = j.value("K", cfg.K);
  cfg.R = j.value("R", cfg.R);
  cfg.M = j.value("M", cfg.M);
  cfg.Ts = j.value("Ts", cfg.Ts);
  cfg.snr_db = j.value("snr_db", cfg.snr_db);
  cfg.seed = j.value("seed", cfg.seed);
  if (j.contains("components")) {
    for (const auto& c : j.at("components")) {
      SceneConfig::ComponentSpec s;
      s.tau = c.value("tau", 0.0);
      s.doppler = c.value("doppler", 0.0);
      s.weight_mag = c.value("weight_mag", 1.0);
      if (c.contains("weight_phase") && c.at("weight_phase").is_string()) {
        if (c.at("weight_phase").get<std::string>() != "random")
          throw std::invalid_argument("weight_phase must be a number or \"random\"");
        s.random_phase = true;
      } else {
        s.weight_phase = c.value("weight_phase", 0.0);
      }
      cfg.components.push_back(s);
    }
  }
  if (cfg.K <= 0 || cfg.K > cfg.R) throw std::invalid_argument("config requires 1 <= K <= R");
  if (cfg.M < 1) throw std::invalid_argument("config requires M >= 1");
  if (cfg.Ts <= 0.0) throw std::invalid_argument("config requires Ts > 0");
  return cfg;
}

SyntheticScene realize_scene(const SceneConfig& cfg) {
  SyntheticScene scene;
  scene.snr_db = cfg.snr_db;
  scene.seed = cfg.seed;
  std::mt19937_64 rng(splitmix64(cfg.seed ^ 0x5CE9E5u));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (const auto& s : cfg.components) {
    const double phase = s.random_phase ? 2.0 * kPi * unif(rng) : s.weight_phase;
    SyntheticScene::Component c;
    c.weight = s.weight_mag * cplx(std::cos(phase), std::sin(phase));
    c.params = DispersionParams{s.tau, s.doppler};
    scene.components.push_back(c);
  }
  return scene;
}

void write_measurement_csv(const Measurement& m, std::ostream& out) {
  out << "index,re,im\n";
  out.precision(17);
  for (Eigen::Index i = 0; i < m.y.size(); ++i) {
    out << i << ',' << m.y[i].real() << ',' << m.y[i].imag() << '\n';
  }
}

CVec read_measurement_csv(std::istream& in) {
  std::string line;
  std::vector<cplx> vals;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (first) {
      first = false;
      if (line.rfind("index", 0) == 0) continue;  // header
    }
    std::istringstream ss(line);
    std::string tok;
    double col[3] = {0, 0, 0};
    for (int i = 0; i < 3 && std::getline(ss, tok, ','); ++i) col[i] = std::stod(tok);
    vals.emplace_back(col[1], col[2]);
  }
  if (vals.empty()) throw std::invalid_argument("measurement CSV contains no samples");
  CVec y(static_cast<Eigen::Index>(vals.size()));
  for (std::size_t i = 0; i < vals.size(); ++i) y[static_cast<Eigen::Index>(i)] = vals[i];
  return y;
}

}  // namespace mpest
