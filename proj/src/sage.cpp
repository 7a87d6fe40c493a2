#include "mpest/sage.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace mpest {

double gaussian_loglik(const Measurement& m, const CMat& S, const CVec& w) {
  const int N = m.size();
  CVec r = m.y;
  if (S.cols() > 0) r -= S * w;
  double logdet;
  if (m.noise_precision.is_white()) {
    logdet = N * std::log(m.noise_precision.scalar());
  } else {
    Eigen::LDLT<CMat> ldlt(m.noise_precision.matrix());
    logdet = 0.0;
    for (int k = 0; k < ldlt.vectorD().size(); ++k)
      logdet += std::log(std::real(ldlt.vectorD()[k]));
  }
  return -N * std::log(kPi) + logdet - weighted_norm2(r, m.noise_precision);
}

SageResult sage_fit(const Measurement& m, const ProbeSignal& probe, int L,
                    const IardConfig& config) {
  if (L < 0) throw std::invalid_argument("model order must be nonnegative");
  if (L > config.max_components)
    throw std::invalid_argument("model order exceeds the configured component cap");

  IardConfig cfg = config;
  cfg.assumption = Assumption::A1;
  cfg.threshold = ThresholdPolicy::standard();
  IardEstimator est(m, probe, cfg);

  // sequential incoherent initialization on the running residual
  for (int i = 0; i < L; ++i) {
    if (est.residual().squaredNorm() == 0.0) {
      est.insert_component(DispersionParams{0.0, 0.0}, 0.0);
      continue;
    }
    est.insert_component(est.incoherent_argmax(), 0.0);
  }

  SageResult out;
  out.loglik = gaussian_loglik(m, est.atoms(), est.weights());
  if (L > 0) {
    double prev = out.loglik;
    for (int sweep = 0; sweep < cfg.max_sweeps; ++sweep) {
      for (int l = 0; l < L; ++l) {
        est.set_component_theta(l, est.optimize_theta(l));
        est.update_weight(l);
      }
      const double ll = gaussian_loglik(m, est.atoms(), est.weights());
      out.loglik_history.push_back(ll);
      ++out.sweeps;
      out.loglik = ll;
      if (ll - prev < 1e-9 * (1.0 + std::abs(ll))) break;
      prev = ll;
    }
  }
  for (const auto& c : est.components()) out.thetas.push_back(c.theta);
  out.weights = est.weights();
  return out;
}

BicResult bic_select(const Measurement& m, const ProbeSignal& probe,
                     const IardConfig& config) {
  const double logN = std::log(static_cast<double>(m.size()));
  // log N per complex amplitude plus (3/2) log N per time/frequency shift
  const double penalty = (m.M > 1 ? 4.0 : 2.5) * logN;

  BicResult out;
  double best_bic = std::numeric_limits<double>::infinity();
  double prev_bic = std::numeric_limits<double>::infinity();
  for (int L = 0; L <= config.max_components; ++L) {
    SageResult fit = sage_fit(m, probe, L, config);
    const double bic = -fit.loglik + penalty * L;
    out.evaluated.push_back({L, fit.loglik, bic});
    if (bic < best_bic) {
      best_bic = bic;
      out.selected = L;
      out.best = std::move(fit);
    }
    if (L > 0 && bic > prev_bic) break;  // past the first local minimum
    prev_bic = bic;
  }
  return out;
}

}  // namespace mpest
