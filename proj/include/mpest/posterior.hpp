#pragma once

#include "mpest/signal_model.hpp"
#include "mpest/types.hpp"

#include <stdexcept>

namespace mpest {

class IllConditionedError : public std::runtime_error {
 public:
  IllConditionedError(const std::string& what, double condition)
      : std::runtime_error(what), condition_(condition) {}
  double condition() const { return condition_; }

 private:
  double condition_;
};

// Gaussian posterior of the active weights. Under A1 the covariance is
// diagonal; under A2 it is the full Hermitian matrix.
struct WeightPosterior {
  CVec mean;    // length L
  CMat cov;     // L x L Hermitian PSD
  RVec alpha;   // length L, all finite (pruned components are excluded)
};

// Joint posterior (S^H Lambda S + diag(alpha))^{-1}, mean = cov S^H Lambda y.
// Throws IllConditionedError when the system matrix condition exceeds ~1e12.
WeightPosterior posterior_a2(const CMat& S, const NoisePrecision& lambda,
                             const RVec& alpha, const CVec& y);

struct ScalarPosterior {
  cplx mean;
  double var;
};

// Scalar posterior of one component against its interference-cancelled
// residual: var = 1/(||s||^2_Lambda + alpha), mean = var * s^H Lambda r.
ScalarPosterior posterior_a1(const CVec& s, const NoisePrecision& lambda,
                             double alpha, const CVec& residual);

struct LeaveOneOut {
  CMat cov;       // (L-1) x (L-1)
  CVec mean;      // length L-1
  CVec residual;  // y - S_{-l} w_{-l}
};

// Posterior with component l removed, obtained by a rank-one downdate of
// the full covariance (never by re-inversion). If the downdate pivot is
// not positive the direct inverse is used instead and *warn_counter is
// incremented when provided.
LeaveOneOut leave_one_out(const CMat& S, const NoisePrecision& lambda,
                          const RVec& alpha, const CVec& y, int l,
                          const WeightPosterior& full,
                          int* warn_counter = nullptr);

}  // namespace mpest
