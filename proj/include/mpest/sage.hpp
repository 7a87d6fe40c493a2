#pragma once

#include "mpest/iard.hpp"
#include "mpest/signal_model.hpp"

#include <vector>

namespace mpest {

struct SageResult {
  std::vector<DispersionParams> thetas;
  CVec weights;
  double loglik = 0.0;
  int sweeps = 0;
  std::vector<double> loglik_history;  // per sweep, non-decreasing
};

// Gaussian log-likelihood of y under a fixed component set with known
// noise precision.
double gaussian_loglik(const Measurement& m, const CMat& S, const CVec& w);

// Coordinate-wise EM fit of exactly L components: the same grid + refine
// dispersion search as the incremental estimator, maximum-likelihood
// weights, no pruning. Threshold fields of the config are ignored.
SageResult sage_fit(const Measurement& m, const ProbeSignal& probe, int L,
                    const IardConfig& config);

struct BicResult {
  struct Entry {
    int L = 0;
    double loglik = 0.0;
    double bic = 0.0;
  };
  std::vector<Entry> evaluated;  // L = 0, 1, ... in evaluation order
  int selected = 0;              // L* = argmin BIC among evaluated
  SageResult best;               // the fit at L*
};

// Sequential model-order sweep: fits L = 0, 1, 2, ... anew and stops at
// the first BIC increase. Penalty per component is 4 log N for the
// delay-Doppler model (M > 1) and 5/2 log N for delay-only.
BicResult bic_select(const Measurement& m, const ProbeSignal& probe,
                     const IardConfig& config);

}  // namespace mpest
