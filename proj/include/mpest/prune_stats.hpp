#pragma once

#include <functional>
#include <vector>

namespace mpest {

// e^{-x} I0(x) for x >= 0; stable for arbitrarily large arguments.
double bessel_i0_scaled(double x);

// Marcum Q-function Q1(a, b) = P(chi'^2_2(a^2) > b^2).
double marcum_q1(double a, double b);

double gumbel_pdf(double x, double location, double scale);
double gumbel_cdf(double x, double location, double scale);

// Distribution of the pruning statistic rho under H0 (no component):
// the maximum of N independent Exp(1) candidates, censored at the
// pruning boundary rho = 1. A point mass of weight exp(-N/e) sits on
// the pruned region; above 1 the density is Gumbel(log N, 1).
class H0Dist {
 public:
  explicit H0Dist(int n_candidates);

  int candidates() const { return n_; }
  double point_mass() const;       // exp(-N/e)
  double pdf(double rho) const;    // continuous part only
  double cdf(double rho) const;    // right-continuous

 private:
  int n_;
};

// Distribution of rho under H1: scaled noncentral chi-square with two
// degrees of freedom and noncentrality eta = 2|w|^2/varsigma, truncated
// to rho > 1 and renormalized by Z = Q1(sqrt(eta), sqrt(2)).
class H1Dist {
 public:
  explicit H1Dist(double eta);

  double eta() const { return eta_; }
  double normalizer() const { return z_; }
  double pdf(double rho) const;
  double cdf(double rho) const;

 private:
  double eta_;
  double z_;
};

// kappa = log(N / log(1/(1-eps))); satisfies 1 - F_max(kappa) = eps.
// eps must lie in (0, 1 - exp(-N/e)].
double threshold_from_size(double eps, int N);

// eps = 1 - exp(-N e^{-kappa}); inverse of threshold_from_size.
double size_from_threshold(double kappa, int N);

// Sup-norm distance between the empirical cdf of the samples and the
// given model cdf. Requires at least two samples.
double ks_distance(std::vector<double> samples,
                   const std::function<double(double)>& cdf);

}  // namespace mpest
