#include "mpest/experiment.hpp"

#include "mpest/dictionary.hpp"
#include "mpest/prune_stats.hpp"
#include "mpest/sage.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <random>
#include <sstream>
#include <stdexcept>

namespace mpest {

namespace {

using nlohmann::json;

std::string policy_name(const ThresholdPolicy& p) {
  switch (p.kind) {
    case ThresholdPolicy::Kind::Standard:
      return "standard";
    case ThresholdPolicy::Kind::Adjusted:
      return "adjusted";
    case ThresholdPolicy::Kind::Fixed:
      return "fixed";
  }
  return "standard";
}

json threshold_to_json(const ThresholdPolicy& p) {
  json j;
  j["policy"] = policy_name(p);
  if (p.kind == ThresholdPolicy::Kind::Adjusted) j["epsilon"] = p.epsilon;
  if (p.kind == ThresholdPolicy::Kind::Fixed) j["kappa"] = p.fixed_kappa;
  return j;
}

ThresholdPolicy threshold_from_json(const json& j) {
  const std::string name = j.value("policy", "adjusted");
  if (name == "standard") return ThresholdPolicy::standard();
  if (name == "adjusted") return ThresholdPolicy::adjusted(j.value("epsilon", 1e-3));
  if (name == "fixed") return ThresholdPolicy::fixed(j.value("kappa", 1.0));
  throw std::invalid_argument("unknown threshold policy: " + name);
}

json spec_to_json(const ExperimentSpec& s) {
  json j;
  j["scenario"] = to_string(s.scenario);
  j["snr_db"] = s.snr_db;
  j["delta"] = s.delta;
  j["K"] = s.K;
  j["threshold"] = threshold_to_json(s.threshold);
  j["runs"] = s.runs;
  j["base_seed"] = s.base_seed;
  std::vector<std::string> est;
  for (auto e : s.estimators) est.push_back(to_string(e));
  j["estimators"] = est;
  j["R"] = s.R;
  j["M"] = s.M;
  j["Ts"] = s.Ts;
  j["include_timing"] = s.include_timing;
  json a;
  a["max_components"] = s.algo.max_components;
  a["max_sweeps"] = s.algo.max_sweeps;
  a["tol"] = s.algo.tol;
  a["delay_oversampling"] = s.algo.delay_oversampling;
  a["doppler_min"] = s.algo.doppler_min;
  a["doppler_max"] = s.algo.doppler_max;
  a["doppler_bins"] = s.algo.doppler_bins;
  a["refine_iters"] = s.algo.refine_iters;
  a["refine_passes"] = s.algo.refine_passes;
  a["doppler_convention"] =
      s.algo.doppler_convention == DopplerConvention::FastSlowProduct ? "fast-slow"
                                                                      : "slow-time";
  a["candidate_count"] = s.algo.candidate_count;
  j["algo"] = a;
  return j;
}

struct RunOutput {
  bool failed = false;
  bool converged = false;
  int L = 0;
  double seconds = 0.0;
  std::vector<DispersionParams> est;
};

struct SceneDraw {
  ProbeSignal probe;
  Measurement meas;
  std::vector<DispersionParams> truth;
  int true_order = 0;
};

SceneDraw draw_scene(const ExperimentSpec& spec, double snr, double delta, int K,
                     std::uint64_t run_seed) {
  const int M = spec.scenario == Scenario::Superresolution ? spec.M : 1;
  SceneDraw d;
  d.probe = make_ofdm_probe(K, spec.R, spec.Ts, splitmix64(run_seed ^ 0x50524f4245ull));

  SyntheticScene scene;
  scene.snr_db = snr;
  scene.seed = splitmix64(run_seed ^ 0x4e4f495345ull);
  std::mt19937_64 rng(splitmix64(run_seed ^ 0x5343454e45ull));
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  auto unit_weight = [&]() {
    const double ph = 2.0 * kPi * unif(rng);
    return cplx(std::cos(ph), std::sin(ph));
  };

  if (spec.scenario == Scenario::Superresolution) {
    const double tau1 = unif(rng) * spec.Ts;
    const double tau2 = tau1 + delta * spec.Ts;
    const double nu1 = -200.0 + 400.0 * unif(rng);
    const double nu2 = nu1 + (-2.0 + 4.0 * unif(rng));
    scene.components.push_back({unit_weight(), {tau1, nu1}});
    scene.components.push_back({unit_weight(), {tau2, nu2}});
  } else {
    scene.components.push_back({unit_weight(), {0.0, 0.0}});
  }
  for (const auto& c : scene.components) d.truth.push_back(c.params);
  d.true_order = static_cast<int>(scene.components.size());
  d.meas = synthesize(scene, d.probe, M, spec.algo.doppler_convention);
  return d;
}

RunOutput execute_run(const ExperimentSpec& spec, EstimatorKind kind, double snr,
                      double delta, int K, std::uint64_t run_seed) {
  RunOutput out;
  try {
    SceneDraw d = draw_scene(spec, snr, delta, K, run_seed);
    IardConfig cfg = spec.algo;
    cfg.threshold = spec.threshold;
    const auto t0 = std::chrono::steady_clock::now();
    if (kind == EstimatorKind::SageBic2) {
      BicResult bic = bic_select(d.meas, d.probe, cfg);
      out.L = bic.selected;
      out.est = bic.best.thetas;
      out.converged = true;
    } else {
      cfg.assumption = kind == EstimatorKind::IardA1 ? Assumption::A1 : Assumption::A2;
      EstimateResult res = estimate(d.meas, d.probe, cfg);
      out.L = res.order();
      out.converged = res.converged;
      for (const auto& c : res.components) out.est.push_back(c.theta);
    }
    const auto t1 = std::chrono::steady_clock::now();
    if (spec.include_timing)
      out.seconds = std::chrono::duration<double>(t1 - t0).count();
  } catch (const std::exception&) {
    out.failed = true;
    out.converged = false;
  }
  return out;
}

MetricsRecord h0h1_record(const ExperimentSpec& spec, bool h1, double snr, int K,
                          std::uint64_t cell_id) {
  const std::uint64_t seed = derive_run_seed(spec.base_seed, cell_id, 0);
  std::vector<double> draws;
  double ks;
  if (h1) {
    draws = collect_rho_draws_h1(K, spec.R, snr, spec.runs, seed);
    const double eta = 2.0 * std::pow(10.0, snr / 10.0);
    H1Dist law(eta);
    ks = ks_distance(draws, [&](double r) { return law.cdf(r); });
  } else {
    draws = collect_rho_draws_h0(spec.R, spec.runs, seed);
    H0Dist law(spec.R);
    ks = ks_distance(draws, [&](double r) { return law.cdf(r); });
  }
  MetricsRecord rec;
  rec.estimator = h1 ? "h1" : "h0";
  rec.snr_db = snr;
  rec.delta = 0.0;
  rec.K = K;
  double mean = 0.0;
  for (double v : draws) mean += v;
  rec.mean_L = draws.empty() ? 0.0 : mean / draws.size();
  rec.pd = 0.0;
  rec.runs = spec.runs;
  rec.ks = ks;
  return rec;
}

}  // namespace

std::string to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::IardA1:
      return "iard-a1";
    case EstimatorKind::IardA2:
      return "iard-a2";
    case EstimatorKind::SageBic2:
      return "sage-bic-2";
  }
  return "iard-a1";
}

std::string to_string(Scenario s) {
  switch (s) {
    case Scenario::H0H1Validation:
      return "h0h1-validation";
    case Scenario::SingleComponentDetect:
      return "single-component-detect";
    case Scenario::Superresolution:
      return "superresolution";
  }
  return "superresolution";
}

std::uint64_t derive_run_seed(std::uint64_t base, std::uint64_t cell,
                              std::uint64_t run) {
  return splitmix64(splitmix64(base + 0x9E3779B97F4A7C15ull * (cell + 1)) ^
                    splitmix64(run + 0xD1B54A32D192ED03ull));
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

MatchResult component_match(const std::vector<DispersionParams>& truth,
                            const std::vector<DispersionParams>& estimate) {
  MatchResult out;
  std::vector<bool> t_used(truth.size(), false);
  std::vector<bool> e_used(estimate.size(), false);
  const std::size_t n_pairs = std::min(truth.size(), estimate.size());
  for (std::size_t it = 0; it < n_pairs; ++it) {
    double best = std::numeric_limits<double>::infinity();
    int bt = -1, be = -1;
    for (std::size_t t = 0; t < truth.size(); ++t) {
      if (t_used[t]) continue;
      for (std::size_t e = 0; e < estimate.size(); ++e) {
        if (e_used[e]) continue;
        const double d = std::abs(truth[t].delay - estimate[e].delay);
        if (d < best) {
          best = d;
          bt = static_cast<int>(t);
          be = static_cast<int>(e);
        }
      }
    }
    t_used[bt] = true;
    e_used[be] = true;
    out.pairs.emplace_back(bt, be);
    out.delay_errors.push_back(estimate[be].delay - truth[bt].delay);
    out.doppler_errors.push_back(estimate[be].doppler - truth[bt].doppler);
  }
  for (std::size_t t = 0; t < truth.size(); ++t)
    if (!t_used[t]) out.missed_truth.push_back(static_cast<int>(t));
  for (std::size_t e = 0; e < estimate.size(); ++e)
    if (!e_used[e]) out.false_estimates.push_back(static_cast<int>(e));
  return out;
}

double rmese(std::vector<double> squared_errors) {
  if (squared_errors.empty()) return std::numeric_limits<double>::quiet_NaN();
  const std::size_t mid = squared_errors.size() / 2;
  std::nth_element(squared_errors.begin(), squared_errors.begin() + mid,
                   squared_errors.end());
  double med = squared_errors[mid];
  if (squared_errors.size() % 2 == 0) {
    const double lower =
        *std::max_element(squared_errors.begin(), squared_errors.begin() + mid);
    med = 0.5 * (med + lower);
  }
  return std::sqrt(med);
}

std::vector<double> collect_rho_draws_h0(int N, int runs, std::uint64_t seed) {
  std::vector<double> draws(runs);
  for (int i = 0; i < runs; ++i) {
    const std::uint64_t rs = derive_run_seed(seed, 0, static_cast<std::uint64_t>(i));
    ProbeSignal probe = make_ofdm_probe(N, N, 1.0, splitmix64(rs ^ 0x50524f4245ull));
    std::mt19937_64 rng(splitmix64(rs ^ 0x4e4f495345ull));
    std::normal_distribution<double> gauss(0.0, std::sqrt(0.5));
    CVec xi(N);
    for (int n = 0; n < N; ++n) xi[n] = cplx(gauss(rng), gauss(rng));
    Dictionary dict(probe, 1, DopplerConvention::FastSlowProduct);
    const CVec c = dict.delay_correlations(xi, 0.0, 1);
    const double n2 = dict.atom_norm2();
    draws[i] = c.cwiseAbs2().maxCoeff() / n2;
  }
  return draws;
}

std::vector<double> collect_rho_draws_h1(int K, int R, double snr_db, int runs,
                                         std::uint64_t seed) {
  std::vector<double> draws(runs);
  const double snr_lin = std::pow(10.0, snr_db / 10.0);
  for (int i = 0; i < runs; ++i) {
    const std::uint64_t rs = derive_run_seed(seed, 1, static_cast<std::uint64_t>(i));
    ProbeSignal probe = make_ofdm_probe(K, R, 1.0, splitmix64(rs ^ 0x50524f4245ull));
    std::mt19937_64 rng(splitmix64(rs ^ 0x4e4f495345ull));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double ph = 2.0 * kPi * unif(rng);
    const cplx w(std::cos(ph), std::sin(ph));
    Dictionary dict(probe, 1, DopplerConvention::FastSlowProduct);
    const CVec sig = w * dict.make_atom({0.0, 0.0});
    const double sigma2 = sig.squaredNorm() / snr_lin;
    std::normal_distribution<double> gauss(0.0, std::sqrt(sigma2 / 2.0));
    CVec y(R);
    for (int n = 0; n < R; ++n) y[n] = sig[n] + cplx(gauss(rng), gauss(rng));
    const double lambda = 1.0 / sigma2;
    const CVec c = dict.delay_correlations(lambda * y, 0.0, 1);
    const double var = 1.0 / (lambda * dict.atom_norm2());
    draws[i] = c.cwiseAbs2().maxCoeff() * var;
  }
  return draws;
}

std::vector<MetricsRecord> run_experiment(const ExperimentSpec& spec) {
  if (spec.runs < 1) throw std::invalid_argument("experiment requires runs >= 1");
  if (spec.snr_db.empty() || spec.delta.empty() || spec.K.empty() ||
      spec.estimators.empty())
    throw std::invalid_argument("experiment axes must be non-empty");

  std::vector<MetricsRecord> table;

  if (spec.scenario == Scenario::H0H1Validation) {
    std::uint64_t cell = 0;
    for (int K : spec.K) {
      table.push_back(h0h1_record(spec, false, 0.0, K, cell++));
      for (double snr : spec.snr_db)
        table.push_back(h0h1_record(spec, true, snr, K, cell++));
    }
    return table;
  }

  const bool superres = spec.scenario == Scenario::Superresolution;
  const std::vector<double> deltas = superres ? spec.delta : std::vector<double>{0.0};

  std::uint64_t scene_cell = 0;
  for (double snr : spec.snr_db) {
    for (double delta : deltas) {
      for (int K : spec.K) {
        // one scene cell; all estimators see the same per-run seeds
        std::vector<std::vector<RunOutput>> results(spec.estimators.size());
        for (std::size_t ei = 0; ei < spec.estimators.size(); ++ei) {
          auto& runs = results[ei];
          runs.resize(spec.runs);
          const EstimatorKind kind = spec.estimators[ei];
          const int workers = std::max(1, spec.workers);
          if (workers == 1) {
            for (int r = 0; r < spec.runs; ++r)
              runs[r] = execute_run(spec, kind, snr, delta, K,
                                    derive_run_seed(spec.base_seed, scene_cell, r));
          } else {
            std::vector<std::future<void>> futs;
            for (int wkr = 0; wkr < workers; ++wkr) {
              futs.push_back(std::async(std::launch::async, [&, wkr]() {
                for (int r = wkr; r < spec.runs; r += workers)
                  runs[r] = execute_run(spec, kind, snr, delta, K,
                                        derive_run_seed(spec.base_seed, scene_cell, r));
              }));
            }
            for (auto& f : futs) f.get();
          }
        }

        for (std::size_t ei = 0; ei < spec.estimators.size(); ++ei) {
          const EstimatorKind kind = spec.estimators[ei];
          MetricsRecord rec;
          rec.estimator = to_string(kind);
          rec.snr_db = snr;
          rec.delta = delta;
          rec.K = K;
          rec.runs = spec.runs;

          const int true_order = superres ? 2 : 1;
          std::vector<double> tau_sq, nu_sq;
          int ok = 0, correct = 0;
          double sum_L = 0.0, sum_sec = 0.0;
          for (int r = 0; r < spec.runs; ++r) {
            const RunOutput& ro = results[ei][r];
            if (ro.failed) {
              ++rec.failed_runs;
              continue;
            }
            if (!ro.converged) ++rec.failed_runs;
            ++ok;
            sum_L += ro.L;
            sum_sec += ro.seconds;
            if (ro.L == true_order) {
              ++correct;
              if (ro.converged) {
                // rebuild the truth for this run to score errors
                SceneDraw d = draw_scene(spec, snr, delta, K,
                                         derive_run_seed(spec.base_seed, scene_cell, r));
                MatchResult match = component_match(d.truth, ro.est);
                for (double e : match.delay_errors)
                  tau_sq.push_back((e / spec.Ts) * (e / spec.Ts));
                const double nu_scale = static_cast<double>(spec.R) * spec.M * spec.Ts;
                for (double e : match.doppler_errors)
                  nu_sq.push_back((e * nu_scale) * (e * nu_scale));
              }
            }
          }
          rec.mean_L = ok > 0 ? sum_L / ok : 0.0;
          rec.pd = ok > 0 ? static_cast<double>(correct) / ok : 0.0;
          rec.mean_seconds = ok > 0 ? sum_sec / ok : 0.0;
          rec.correct_order_runs = correct;
          rec.rmese_tau = rmese(tau_sq);
          rec.rmese_nu = rmese(nu_sq);
          table.push_back(rec);
        }
        ++scene_cell;
      }
    }
  }
  return table;
}

void emit_results(const std::vector<MetricsRecord>& table,
                  const ExperimentSpec& spec, const std::string& out_dir) {
  if (table.empty()) throw std::invalid_argument("refusing to emit an empty table");
  std::filesystem::create_directories(out_dir);
  const auto csv_path = std::filesystem::path(out_dir) / "results.csv";
  std::ofstream csv(csv_path);
  if (!csv) throw std::invalid_argument("cannot write " + csv_path.string());
  csv << "estimator,snr_db,delta,K,mean_L,pd,rmese_tau,rmese_nu,mean_seconds,runs\n";
  csv.precision(17);
  for (const auto& r : table) {
    csv << r.estimator << ',' << r.snr_db << ',' << r.delta << ',' << r.K << ','
        << r.mean_L << ',' << r.pd << ',' << r.rmese_tau << ',' << r.rmese_nu << ','
        << r.mean_seconds << ',' << r.runs << '\n';
  }
  csv.close();

  json manifest;
  manifest["spec"] = spec_to_json(spec);
  const std::string canonical = manifest["spec"].dump();
  std::ostringstream hex;
  hex << std::hex << fnv1a64(canonical);
  manifest["content_hash"] = hex.str();
  const auto man_path = std::filesystem::path(out_dir) / "manifest.json";
  std::ofstream man(man_path);
  if (!man) throw std::invalid_argument("cannot write " + man_path.string());
  man << manifest.dump(2) << '\n';
}

ExperimentSpec load_experiment_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open experiment spec: " + path);
  json j;
  in >> j;

  ExperimentSpec s;
  const std::string sc = j.value("scenario", "superresolution");
  if (sc == "h0h1-validation")
    s.scenario = Scenario::H0H1Validation;
  else if (sc == "single-component-detect")
    s.scenario = Scenario::SingleComponentDetect;
  else if (sc == "superresolution")
    s.scenario = Scenario::Superresolution;
  else
    throw std::invalid_argument("unknown scenario: " + sc);

  if (j.contains("snr_db")) s.snr_db = j.at("snr_db").get<std::vector<double>>();
  if (j.contains("delta")) s.delta = j.at("delta").get<std::vector<double>>();
  if (j.contains("K")) s.K = j.at("K").get<std::vector<int>>();
  if (j.contains("threshold")) s.threshold = threshold_from_json(j.at("threshold"));
  s.runs = j.value("runs", s.runs);
  s.base_seed = j.value("base_seed", s.base_seed);
  s.R = j.value("R", s.R);
  s.M = j.value("M", s.M);
  s.Ts = j.value("Ts", s.Ts);
  s.include_timing = j.value("include_timing", s.include_timing);
  s.workers = j.value("workers", s.workers);
  if (j.contains("estimators")) {
    s.estimators.clear();
    for (const auto& e : j.at("estimators")) {
      const std::string name = e.get<std::string>();
      if (name == "iard-a1")
        s.estimators.push_back(EstimatorKind::IardA1);
      else if (name == "iard-a2")
        s.estimators.push_back(EstimatorKind::IardA2);
      else if (name == "sage-bic-2")
        s.estimators.push_back(EstimatorKind::SageBic2);
      else
        throw std::invalid_argument("unknown estimator: " + name);
    }
  }
  if (j.contains("algo")) {
    const json& a = j.at("algo");
    s.algo.max_components = a.value("max_components", s.algo.max_components);
    s.algo.max_sweeps = a.value("max_sweeps", s.algo.max_sweeps);
    s.algo.tol = a.value("tol", s.algo.tol);
    s.algo.delay_oversampling = a.value("delay_oversampling", s.algo.delay_oversampling);
    s.algo.doppler_min = a.value("doppler_min", s.algo.doppler_min);
    s.algo.doppler_max = a.value("doppler_max", s.algo.doppler_max);
    s.algo.doppler_bins = a.value("doppler_bins", s.algo.doppler_bins);
    s.algo.refine_iters = a.value("refine_iters", s.algo.refine_iters);
    s.algo.refine_passes = a.value("refine_passes", s.algo.refine_passes);
    s.algo.candidate_count = a.value("candidate_count", s.algo.candidate_count);
    const std::string conv = a.value("doppler_convention", "fast-slow");
    if (conv == "fast-slow")
      s.algo.doppler_convention = DopplerConvention::FastSlowProduct;
    else if (conv == "slow-time")
      s.algo.doppler_convention = DopplerConvention::SlowTimeOnly;
    else
      throw std::invalid_argument("unknown doppler convention: " + conv);
  }
  return s;
}

}  // namespace mpest
