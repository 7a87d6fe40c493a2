#pragma once

#include "mpest/iard.hpp"
#include "mpest/sage.hpp"

#include <nlohmann/json.hpp>

namespace mpest {

// {assumption, components:[{tau, doppler, w_re, w_im, alpha, rho}],
//  sweeps, converged, threshold:{policy, kappa, epsilon}}
nlohmann::json result_to_json(const EstimateResult& res);

// Same component schema plus {bic:[{L, loglik, bic}]}.
nlohmann::json result_to_json(const BicResult& res);

}  // namespace mpest
