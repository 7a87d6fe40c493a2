#include "mpest/result_json.hpp"

namespace mpest {

namespace {

nlohmann::json components_json(const std::vector<ComponentEstimate>& comps) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& c : comps) {
    arr.push_back({{"tau", c.theta.delay},
                   {"doppler", c.theta.doppler},
                   {"w_re", c.weight.real()},
                   {"w_im", c.weight.imag()},
                   {"alpha", c.alpha},
                   {"rho", c.rho}});
  }
  return arr;
}

}  // namespace

nlohmann::json result_to_json(const EstimateResult& res) {
  nlohmann::json j;
  j["assumption"] = res.assumption == Assumption::A1 ? "a1" : "a2";
  j["components"] = components_json(res.components);
  j["sweeps"] = res.sweeps;
  j["converged"] = res.converged;
  nlohmann::json thr;
  switch (res.policy.kind) {
    case ThresholdPolicy::Kind::Standard:
      thr["policy"] = "standard";
      break;
    case ThresholdPolicy::Kind::Adjusted:
      thr["policy"] = "adjusted";
      thr["epsilon"] = res.policy.epsilon;
      break;
    case ThresholdPolicy::Kind::Fixed:
      thr["policy"] = "fixed";
      break;
  }
  thr["kappa"] = res.kappa;
  j["threshold"] = thr;
  return j;
}

nlohmann::json result_to_json(const BicResult& res) {
  nlohmann::json j;
  j["assumption"] = "a1";
  nlohmann::json arr = nlohmann::json::array();
  for (std::size_t i = 0; i < res.best.thetas.size(); ++i) {
    arr.push_back({{"tau", res.best.thetas[i].delay},
                   {"doppler", res.best.thetas[i].doppler},
                   {"w_re", res.best.weights[static_cast<Eigen::Index>(i)].real()},
                   {"w_im", res.best.weights[static_cast<Eigen::Index>(i)].imag()},
                   {"alpha", 0.0},
                   {"rho", 0.0}});
  }
  j["components"] = arr;
  j["sweeps"] = res.best.sweeps;
  j["converged"] = true;
  nlohmann::json bic = nlohmann::json::array();
  for (const auto& e : res.evaluated)
    bic.push_back({{"L", e.L}, {"loglik", e.loglik}, {"bic", e.bic}});
  j["bic"] = bic;
  j["selected_order"] = res.selected;
  return j;
}

}  // namespace mpest
