#include "mpest/iard.hpp"

#include "mpest/prune_stats.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <limits>
#include <stdexcept>

namespace mpest {

namespace {

constexpr double kWeightFloor = 1e-300;

CMat drop_column(const CMat& S, int l) {
  CMat out(S.rows(), S.cols() - 1);
  for (int k = 0, j = 0; k < S.cols(); ++k) {
    if (k == l) continue;
    out.col(j++) = S.col(k);
  }
  return out;
}

// Lexicographic argmax bookkeeping; ties broken by lowest delay index,
// then lowest Doppler index.
struct GridBest {
  double value = -std::numeric_limits<double>::infinity();
  int delay_idx = std::numeric_limits<int>::max();
  int dop_idx = std::numeric_limits<int>::max();
  bool valid = false;

  void consider(double v, int g, int j) {
    if (!std::isfinite(v)) return;
    if (!valid || v > value ||
        (v == value && (g < delay_idx || (g == delay_idx && j < dop_idx)))) {
      value = v;
      delay_idx = g;
      dop_idx = j;
      valid = true;
    }
  }
};

// Golden-section maximization on [a, b] with a fixed iteration budget.
template <typename F>
double golden_max(F&& f, double a, double b, int iters) {
  constexpr double kInvPhi = 0.6180339887498949;
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = f(c), fd = f(d);
  for (int i = 0; i < iters; ++i) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

ComponentStats make_stats(cplx mu, double var) {
  if (!(var > 0.0)) throw std::domain_error("component statistic variance must be positive");
  return {mu, var, std::norm(mu) / var};
}

ComponentStats stats_a1(const CVec& s, const NoisePrecision& lambda,
                        const CVec& residual) {
  const double n2 = weighted_norm2(s, lambda);
  if (!(n2 > 0.0)) throw std::domain_error("stats_a1 requires a nonzero atom");
  const double var = 1.0 / n2;
  return make_stats(var * lambda.inner(s, residual), var);
}

ComponentStats stats_a2(const CVec& s, const NoisePrecision& lambda,
                        const CMat& S_minus, const CMat& cov_minus,
                        const CVec& residual_minus) {
  const double n2 = weighted_norm2(s, lambda);
  if (!(n2 > 0.0)) throw std::domain_error("stats_a2 requires a nonzero atom");
  double schur = n2;
  if (S_minus.cols() > 0) {
    CVec v(S_minus.cols());
    for (int k = 0; k < S_minus.cols(); ++k) v[k] = lambda.inner(S_minus.col(k), s);
    schur -= std::real(v.dot(cov_minus * v));
  }
  if (!(schur > 0.0))
    throw IllConditionedError("Schur complement not positive in stats_a2",
                              schur > 0.0 ? n2 / schur
                                          : std::numeric_limits<double>::infinity());
  const double var = 1.0 / schur;
  return make_stats(var * lambda.inner(s, residual_minus), var);
}

std::optional<double> alpha_fixed_point(const ComponentStats& stats, double kappa) {
  if (kappa < 1.0) throw std::invalid_argument("pruning threshold must be >= 1");
  if (stats.rho <= kappa) return std::nullopt;
  return 1.0 / (std::norm(stats.mu) - stats.var);
}

double ThresholdPolicy::kappa(int candidates) const {
  switch (kind) {
    case Kind::Standard:
      return 1.0;
    case Kind::Fixed:
      if (fixed_kappa < 1.0) throw std::invalid_argument("fixed threshold must be >= 1");
      return fixed_kappa;
    case Kind::Adjusted:
      return threshold_from_size(epsilon, candidates);
  }
  return 1.0;
}

IardEstimator::IardEstimator(Measurement measurement, ProbeSignal probe,
                             IardConfig config)
    : meas_(std::move(measurement)),
      cfg_(config),
      dict_(std::move(probe), meas_.M, config.doppler_convention) {
  if (meas_.y.size() != dict_.size())
    throw std::invalid_argument("measurement length does not match probe geometry");
  if (cfg_.delay_oversampling < 1 || cfg_.doppler_bins < 1)
    throw std::invalid_argument("search grid configuration is empty");
  if (cfg_.doppler_min > cfg_.doppler_max)
    throw std::invalid_argument("doppler search range is empty");
  if (cfg_.max_sweeps < 1 || cfg_.max_components < 1 || !(cfg_.tol > 0.0))
    throw std::invalid_argument("invalid iteration configuration");
  const int candidates = cfg_.candidate_count > 0 ? cfg_.candidate_count : meas_.size();
  kappa_ = cfg_.threshold.kappa(candidates);
  atoms_.resize(meas_.y.size(), 0);
  weights_.resize(0);
  cov_.resize(0, 0);
  residual_ = meas_.y;
}

CVec IardEstimator::lambda_residual() const {
  return meas_.noise_precision.apply(residual_);
}

double IardEstimator::grid_norm2(const DispersionParams& theta) const {
  if (meas_.noise_precision.is_white())
    return meas_.noise_precision.scalar() * dict_.atom_norm2();
  return weighted_norm2(dict_.make_atom(theta), meas_.noise_precision);
}

ComponentStats IardEstimator::candidate_stats(const DispersionParams& theta) const {
  const CVec s = dict_.make_atom(theta);
  if (cfg_.assumption == Assumption::A1 || order() == 0)
    return stats_a1(s, meas_.noise_precision, residual_);
  return stats_a2(s, meas_.noise_precision, atoms_, cov_, residual_);
}

ComponentStats IardEstimator::component_stats(int l) const {
  if (l < 0 || l >= order()) throw std::invalid_argument("component index out of range");
  const CVec s = atoms_.col(l);
  if (cfg_.assumption == Assumption::A1) {
    const CVec r = residual_ + weights_[l] * s;
    return stats_a1(s, meas_.noise_precision, r);
  }
  RVec alphas(order());
  for (int k = 0; k < order(); ++k) alphas[k] = components_[k].alpha;
  WeightPosterior full{weights_, cov_, alphas};
  LeaveOneOut loo = leave_one_out(atoms_, meas_.noise_precision, alphas, meas_.y, l,
                                  full, &warnings_);
  if (order() == 1) return stats_a1(s, meas_.noise_precision, loo.residual);
  return stats_a2(s, meas_.noise_precision, drop_column(atoms_, l), loo.cov,
                  loo.residual);
}

DispersionParams IardEstimator::incoherent_argmax() const {
  const int R = dict_.R();
  const int os = cfg_.delay_oversampling;
  const double Ts = dict_.Ts();
  const bool white = meas_.noise_precision.is_white();
  const int L = order();
  const bool a2 = cfg_.assumption == Assumption::A2 && L > 0;

  std::vector<double> dopplers;
  if (dict_.M() == 1) {
    dopplers.push_back(0.0);
  } else {
    for (int j = 0; j < cfg_.doppler_bins; ++j) {
      dopplers.push_back(cfg_.doppler_bins == 1
                             ? cfg_.doppler_min
                             : cfg_.doppler_min + j * (cfg_.doppler_max - cfg_.doppler_min) /
                                                      (cfg_.doppler_bins - 1));
    }
  }

  const CVec u = lambda_residual();
  std::vector<CVec> lambda_atoms;
  if (a2) {
    lambda_atoms.reserve(L);
    for (int k = 0; k < L; ++k) lambda_atoms.push_back(meas_.noise_precision.apply(atoms_.col(k)));
  }

  GridBest best;
  for (int j = 0; j < static_cast<int>(dopplers.size()); ++j) {
    const CVec c = dict_.delay_correlations(u, dopplers[j], os);
    std::vector<CVec> ck;
    if (a2) {
      ck.reserve(L);
      for (int k = 0; k < L; ++k)
        ck.push_back(dict_.delay_correlations(lambda_atoms[k], dopplers[j], os));
    }
    for (int g = 0; g < c.size(); ++g) {
      const DispersionParams theta{g * Ts / os, dopplers[j]};
      double denom = white ? meas_.noise_precision.scalar() * dict_.atom_norm2()
                           : grid_norm2(theta);
      if (a2) {
        // Schur complement against the active set
        double quad = 0.0;
        for (int ka = 0; ka < L; ++ka)
          for (int kb = 0; kb < L; ++kb)
            quad += std::real(ck[ka][g] * cov_(ka, kb) * std::conj(ck[kb][g]));
        denom -= quad;
      }
      if (!(denom > 0.0)) continue;
      best.consider(std::norm(c[g]) / denom, g, j);
    }
  }
  if (!best.valid) throw std::invalid_argument("empty search domain");
  return {best.delay_idx * Ts / os, dopplers[best.dop_idx]};
}

double IardEstimator::theta_objective(int l, const DispersionParams& theta) const {
  if (l < 0 || l >= order()) throw std::invalid_argument("component index out of range");
  const CVec s = dict_.make_atom(theta);
  const CVec r_l = residual_ + weights_[l] * atoms_.col(l);
  const cplx c = meas_.noise_precision.inner(s, r_l);
  const double n2 = weighted_norm2(s, meas_.noise_precision);
  double val = 2.0 * std::real(std::conj(weights_[l]) * c) -
               (std::norm(weights_[l]) + std::real(cov_(l, l))) * n2;
  if (cfg_.assumption == Assumption::A2) {
    for (int k = 0; k < order(); ++k) {
      if (k == l) continue;
      const cplx sk_s = meas_.noise_precision.inner(atoms_.col(k), s);
      val -= 2.0 * std::real(cov_(k, l) * sk_s);
    }
  }
  return val;
}

DispersionParams IardEstimator::optimize_theta(int l) const {
  if (l < 0 || l >= order()) throw std::invalid_argument("component index out of range");
  const int R = dict_.R();
  const int os = cfg_.delay_oversampling;
  const double Ts = dict_.Ts();
  const bool white = meas_.noise_precision.is_white();
  const bool a2 = cfg_.assumption == Assumption::A2 && order() > 1;

  const CVec r_l = residual_ + weights_[l] * atoms_.col(l);
  const CVec u = meas_.noise_precision.apply(r_l);
  const cplx wl = weights_[l];
  const double quad_coeff = std::norm(wl) + std::real(cov_(l, l));

  std::vector<double> dopplers;
  if (dict_.M() == 1) {
    dopplers.push_back(0.0);
  } else {
    for (int j = 0; j < cfg_.doppler_bins; ++j) {
      dopplers.push_back(cfg_.doppler_bins == 1
                             ? cfg_.doppler_min
                             : cfg_.doppler_min + j * (cfg_.doppler_max - cfg_.doppler_min) /
                                                      (cfg_.doppler_bins - 1));
    }
  }

  std::vector<int> cross;
  std::vector<CVec> lambda_atoms;
  if (a2) {
    for (int k = 0; k < order(); ++k) {
      if (k == l) continue;
      cross.push_back(k);
      lambda_atoms.push_back(meas_.noise_precision.apply(atoms_.col(k)));
    }
  }

  GridBest best;
  for (int j = 0; j < static_cast<int>(dopplers.size()); ++j) {
    const CVec c = dict_.delay_correlations(u, dopplers[j], os);
    std::vector<CVec> ck(cross.size());
    for (std::size_t k = 0; k < cross.size(); ++k)
      ck[k] = dict_.delay_correlations(lambda_atoms[k], dopplers[j], os);
    for (int g = 0; g < c.size(); ++g) {
      const DispersionParams theta{g * Ts / os, dopplers[j]};
      double val = 2.0 * std::real(std::conj(wl) * c[g]) -
                   quad_coeff * (white ? meas_.noise_precision.scalar() * dict_.atom_norm2()
                                       : grid_norm2(theta));
      for (std::size_t k = 0; k < cross.size(); ++k)
        val -= 2.0 * std::real(cov_(cross[k], l) * std::conj(ck[k][g]));
      best.consider(val, g, j);
    }
  }
  if (!best.valid) throw std::invalid_argument("empty search domain");

  DispersionParams theta{best.delay_idx * Ts / os, dopplers[best.dop_idx]};
  double best_val = theta_objective(l, theta);

  // never accept a point worse than the incumbent
  const DispersionParams incumbent = components_[l].theta;
  const double inc_val = theta_objective(l, incumbent);
  if (inc_val > best_val) {
    theta = incumbent;
    best_val = inc_val;
  }

  const double dstep = Ts / os;
  const double max_delay = R * Ts;
  const double nstep =
      dopplers.size() > 1 ? (cfg_.doppler_max - cfg_.doppler_min) / (cfg_.doppler_bins - 1)
                          : 0.0;
  for (int pass = 0; pass < cfg_.refine_passes; ++pass) {
    {
      const double a = std::max(0.0, theta.delay - dstep);
      const double b = std::min(max_delay * (1.0 - 1e-12), theta.delay + dstep);
      const double tau = golden_max(
          [&](double t) {
            return theta_objective(l, DispersionParams{t, theta.doppler});
          },
          a, b, cfg_.refine_iters);
      const double v = theta_objective(l, DispersionParams{tau, theta.doppler});
      if (v >= best_val) {
        theta.delay = tau;
        best_val = v;
      }
    }
    if (dict_.M() > 1 && nstep > 0.0) {
      const double a = std::max(cfg_.doppler_min, theta.doppler - nstep);
      const double b = std::min(cfg_.doppler_max, theta.doppler + nstep);
      const double nu = golden_max(
          [&](double n) {
            return theta_objective(l, DispersionParams{theta.delay, n});
          },
          a, b, cfg_.refine_iters);
      const double v = theta_objective(l, DispersionParams{theta.delay, nu});
      if (v >= best_val) {
        theta.doppler = nu;
        best_val = v;
      }
    }
  }
  return theta;
}

void IardEstimator::insert_component(const DispersionParams& theta, double alpha) {
  components_.push_back({theta, alpha});
  const int L = order();
  atoms_.conservativeResize(Eigen::NoChange, L);
  atoms_.col(L - 1) = dict_.make_atom(theta);
  weights_.conservativeResize(L);
  weights_[L - 1] = cplx(0.0, 0.0);
  CMat cov = CMat::Zero(L, L);
  cov.topLeftCorner(L - 1, L - 1) = cov_;
  cov_ = std::move(cov);
  ++inserts_;
  if (cfg_.assumption == Assumption::A2) {
    refresh_posterior_a2();
  } else {
    update_weight_a1(L - 1);
  }
}

void IardEstimator::set_component_theta(int l, const DispersionParams& theta) {
  if (l < 0 || l >= order()) throw std::invalid_argument("component index out of range");
  const CVec s_new = dict_.make_atom(theta);
  residual_ += weights_[l] * (atoms_.col(l) - s_new);
  atoms_.col(l) = s_new;
  components_[l].theta = theta;
}

void IardEstimator::update_weight(int l) {
  if (l < 0 || l >= order()) throw std::invalid_argument("component index out of range");
  if (cfg_.assumption == Assumption::A2) {
    refresh_posterior_a2();
  } else {
    update_weight_a1(l);
  }
}

void IardEstimator::refresh_weights() {
  if (order() == 0) return;
  if (cfg_.assumption == Assumption::A2) {
    refresh_posterior_a2();
  } else {
    for (int l = 0; l < order(); ++l) update_weight_a1(l);
    recompute_residual();
  }
}

bool IardEstimator::init_component() {
  if (order() == 0 && residual_.squaredNorm() == 0.0) return false;
  const DispersionParams theta = incoherent_argmax();
  const ComponentStats stats = candidate_stats(theta);
  const auto alpha = alpha_fixed_point(stats, kappa_);
  if (!alpha) return false;
  insert_component(theta, *alpha);
  return true;
}

void IardEstimator::remove_component(int l, const LeaveOneOut& loo) {
  ++prunes_;
  const int L = order();
  if (cfg_.assumption == Assumption::A2) {
    weights_ = loo.mean;
    cov_ = loo.cov;
    residual_ = loo.residual;
    CMat atoms = drop_column(atoms_, l);
    atoms_ = std::move(atoms);
    components_.erase(components_.begin() + l);
    return;
  }
  residual_ += weights_[l] * atoms_.col(l);
  CMat atoms = drop_column(atoms_, l);
  atoms_ = std::move(atoms);
  CVec w(L - 1);
  CMat cov = CMat::Zero(L - 1, L - 1);
  for (int k = 0, j = 0; k < L; ++k) {
    if (k == l) continue;
    w[j] = weights_[k];
    cov(j, j) = cov_(k, k);
    ++j;
  }
  weights_ = std::move(w);
  cov_ = std::move(cov);
  components_.erase(components_.begin() + l);
}

void IardEstimator::update_weight_a1(int l) {
  const CVec s = atoms_.col(l);
  const CVec r = residual_ + weights_[l] * s;
  const ScalarPosterior post =
      posterior_a1(s, meas_.noise_precision, components_[l].alpha, r);
  residual_ -= (post.mean - weights_[l]) * s;
  weights_[l] = post.mean;
  cov_(l, l) = post.var;
}

void IardEstimator::refresh_posterior_a2() {
  RVec alphas(order());
  for (int k = 0; k < order(); ++k) alphas[k] = components_[k].alpha;
  const WeightPosterior wp =
      posterior_a2(atoms_, meas_.noise_precision, alphas, meas_.y);
  weights_ = wp.mean;
  cov_ = wp.cov;
  recompute_residual();
}

void IardEstimator::recompute_residual() {
  residual_ = meas_.y - atoms_ * weights_;
}

IardEstimator::SweepOutcome IardEstimator::sweep_update() {
  SweepOutcome out;
  if (order() == 0) return out;
  const CVec w_start = weights_;

  int l = 0;
  while (l < order()) {
    const DispersionParams theta = optimize_theta(l);
    set_component_theta(l, theta);

    std::optional<double> alpha;
    if (cfg_.assumption == Assumption::A2) {
      RVec alphas(order());
      for (int k = 0; k < order(); ++k) alphas[k] = components_[k].alpha;
      WeightPosterior full{weights_, cov_, alphas};
      LeaveOneOut loo = leave_one_out(atoms_, meas_.noise_precision, alphas,
                                      meas_.y, l, full, &warnings_);
      const ComponentStats stats =
          order() == 1
              ? stats_a1(atoms_.col(l), meas_.noise_precision, loo.residual)
              : stats_a2(atoms_.col(l), meas_.noise_precision,
                         drop_column(atoms_, l), loo.cov, loo.residual);
      alpha = alpha_fixed_point(stats, kappa_);
      if (!alpha) {
        remove_component(l, loo);
        out.pruned = true;
        continue;
      }
      components_[l].alpha = *alpha;
      refresh_posterior_a2();
    } else {
      const CVec r = residual_ + weights_[l] * atoms_.col(l);
      const ComponentStats stats = stats_a1(atoms_.col(l), meas_.noise_precision, r);
      alpha = alpha_fixed_point(stats, kappa_);
      if (!alpha) {
        remove_component(l, LeaveOneOut{});
        out.pruned = true;
        continue;
      }
      components_[l].alpha = *alpha;
      update_weight_a1(l);
    }
    ++l;
  }

  recompute_residual();
  out.max_weight = order() > 0 ? weights_.cwiseAbs().maxCoeff() : 0.0;
  if (!out.pruned && weights_.size() == w_start.size() && weights_.size() > 0) {
    out.max_delta = (weights_ - w_start).cwiseAbs().maxCoeff();
  } else if (out.pruned) {
    out.max_delta = std::numeric_limits<double>::infinity();
  }
  return out;
}

double IardEstimator::model_bound() const {
  const double data = meas_.noise_precision.quad(meas_.y);
  if (order() == 0) return -data;
  CVec g(order());
  for (int k = 0; k < order(); ++k)
    g[k] = meas_.noise_precision.inner(atoms_.col(k), meas_.y);
  double logdet = 0.0;
  Eigen::LDLT<CMat> ldlt(cov_);
  const auto& d = ldlt.vectorD();
  for (int k = 0; k < d.size(); ++k)
    logdet += std::log(std::max(std::real(d[k]), kWeightFloor));
  double logalpha = 0.0;
  for (const auto& c : components_) logalpha += std::log(c.alpha);
  return -data + std::real(g.dot(cov_ * g)) + logdet + logalpha;
}

EstimateResult IardEstimator::run() {
  bool stabilized = true;
  while (order() < cfg_.max_components) {
    if (!init_component()) break;
    stabilized = false;
    while (sweeps_ < cfg_.max_sweeps) {
      const SweepOutcome out = sweep_update();
      ++sweeps_;
      bound_history_.push_back(model_bound());
      if (order() == 0) {
        stabilized = true;
        break;
      }
      if (!out.pruned &&
          out.max_delta <= cfg_.tol * std::max(out.max_weight, kWeightFloor)) {
        stabilized = true;
        break;
      }
    }
    if (!stabilized) break;
  }

  EstimateResult res;
  res.assumption = cfg_.assumption;
  res.sweeps = sweeps_;
  res.prunes = prunes_;
  res.inserts = inserts_;
  res.converged = stabilized;
  res.numerical_warnings = warnings_;
  res.kappa = kappa_;
  res.policy = cfg_.threshold;
  res.bound_history = bound_history_;
  for (int l = 0; l < order(); ++l) {
    ComponentEstimate ce;
    ce.theta = components_[l].theta;
    ce.weight = weights_[l];
    ce.alpha = components_[l].alpha;
    ce.rho = component_stats(l).rho;
    res.components.push_back(ce);
  }
  return res;
}

EstimateResult estimate(const Measurement& measurement, const ProbeSignal& probe,
                        const IardConfig& config) {
  IardEstimator est(measurement, probe, config);
  return est.run();
}

}  // namespace mpest
