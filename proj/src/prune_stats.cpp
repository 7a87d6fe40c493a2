#include "mpest/prune_stats.hpp"

#include "mpest/types.hpp"

#include <boost/math/distributions/non_central_chi_squared.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mpest {

double bessel_i0_scaled(double x) {
  if (x < 0.0) x = -x;
  if (x < 15.0) {
    // power series for I0, scaled afterwards
    double term = 1.0, sum = 1.0;
    const double q = x * x / 4.0;
    for (int k = 1; k < 80; ++k) {
      term *= q / (static_cast<double>(k) * k);
      sum += term;
      if (term < 1e-18 * sum) break;
    }
    return sum * std::exp(-x);
  }
  // asymptotic expansion I0(x) ~ e^x/sqrt(2 pi x) (1 + 1/(8x) + 9/(2!(8x)^2) + ...)
  const double ix = 1.0 / (8.0 * x);
  double sum = 1.0, term = 1.0;
  static const int kTerms = 10;
  for (int k = 1; k <= kTerms; ++k) {
    const double odd = 2.0 * k - 1.0;
    term *= odd * odd * ix / k;
    sum += term;
  }
  return sum / std::sqrt(2.0 * kPi * x);
}

double marcum_q1(double a, double b) {
  if (a < 0.0 || b < 0.0) throw std::domain_error("marcum_q1 requires a, b >= 0");
  if (b == 0.0) return 1.0;
  if (a == 0.0) return std::exp(-b * b / 2.0);
  boost::math::non_central_chi_squared_distribution<double> d(2.0, a * a);
  return boost::math::cdf(boost::math::complement(d, b * b));
}

double gumbel_pdf(double x, double location, double scale) {
  const double z = (x - location) / scale;
  return std::exp(-z - std::exp(-z)) / scale;
}

double gumbel_cdf(double x, double location, double scale) {
  return std::exp(-std::exp(-(x - location) / scale));
}

H0Dist::H0Dist(int n_candidates) : n_(n_candidates) {
  if (n_ < 1) throw std::domain_error("H0 distribution requires N >= 1");
}

double H0Dist::point_mass() const {
  return std::exp(-n_ / std::exp(1.0));
}

double H0Dist::pdf(double rho) const {
  if (rho <= 1.0) return 0.0;
  return gumbel_pdf(rho, std::log(static_cast<double>(n_)), 1.0);
}

double H0Dist::cdf(double rho) const {
  if (rho < 0.0) return 0.0;
  if (rho <= 1.0) return point_mass();
  return std::exp(-n_ * std::exp(-rho));
}

H1Dist::H1Dist(double eta) : eta_(eta) {
  if (!(eta >= 0.0)) throw std::domain_error("H1 distribution requires eta >= 0");
  z_ = marcum_q1(std::sqrt(eta_), std::sqrt(2.0));
}

double H1Dist::pdf(double rho) const {
  if (rho <= 1.0) return 0.0;
  const double arg = std::sqrt(2.0 * eta_ * rho);
  // e^{-(rho + eta/2)} I0(arg) = e^{-(sqrt(rho)-sqrt(eta/2))^2} * i0e(arg)
  const double expo = -(std::sqrt(rho) - std::sqrt(eta_ / 2.0)) *
                      (std::sqrt(rho) - std::sqrt(eta_ / 2.0));
  return std::exp(expo) * bessel_i0_scaled(arg) / z_;
}

double H1Dist::cdf(double rho) const {
  if (rho <= 1.0) return 0.0;
  double raw;
  if (eta_ == 0.0) {
    raw = -std::expm1(-rho);  // chi^2_2 scaled: P(rho' <= rho) = 1 - e^{-rho}
  } else {
    boost::math::non_central_chi_squared_distribution<double> d(2.0, eta_);
    raw = boost::math::cdf(d, 2.0 * rho);
  }
  const double at_one = 1.0 - z_;
  return std::clamp((raw - at_one) / z_, 0.0, 1.0);
}

double threshold_from_size(double eps, int N) {
  if (N < 1) throw std::domain_error("threshold_from_size requires N >= 1");
  const double upper = -std::expm1(-N / std::exp(1.0));
  if (!(eps > 0.0) || eps > upper)
    throw std::domain_error(
        "test size must lie in (0, 1 - exp(-N/e)]; upper bound is the "
        "probability mass above the standard pruning boundary");
  return std::log(static_cast<double>(N)) - std::log(-std::log1p(-eps));
}

double size_from_threshold(double kappa, int N) {
  if (N < 1) throw std::domain_error("size_from_threshold requires N >= 1");
  if (kappa < 1.0) throw std::domain_error("threshold must be >= 1");
  return -std::expm1(-N * std::exp(-kappa));
}

double ks_distance(std::vector<double> samples,
                   const std::function<double(double)>& cdf) {
  if (samples.size() < 2) throw std::invalid_argument("ks_distance requires >= 2 samples");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max(d, std::abs(f - static_cast<double>(i + 1) / n));
    d = std::max(d, std::abs(f - static_cast<double>(i) / n));
  }
  return d;
}

}  // namespace mpest
