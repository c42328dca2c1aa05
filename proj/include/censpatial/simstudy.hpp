// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <Eigen/Dense>
#include <atomic>
#include <cmath>
#include <iostream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "censpatial/errors.hpp"
#include "censpatial/mcmc.hpp"
#include "censpatial/metrics.hpp"
#include "censpatial/model.hpp"
#include "censpatial/predict.hpp"

// Synthetic-data experiment: bivariate fields on a 16 x 16 integer lattice,
// variable 1 left-censored at an empirical percentile (L1 low, L2 high), fit
// under three treatments of the censored cells:
//   S1 substitute the detection limit as if observed,
//   S2 drop censored sites entirely,
//   S3 full augmentation (impute within the sampler).
// Scores: per-parameter absolute estimation error, test-set CRPS, and
// prediction-interval coverage, aggregated across replicates.

namespace censpatial {

enum class study_setting { substitute_at_mdl, drop_censored_sites, full_augmentation };

inline const char* setting_name(study_setting s) {
  switch (s) {
    case study_setting::substitute_at_mdl: return "S1";
    case study_setting::drop_censored_sites: return "S2";
    case study_setting::full_augmentation: return "S3";
  }
  return "?";
}

struct sim_scenario {
  int grid_size = 16;        // lattice {0..grid_size-1}^2
  long n_test = 50;
  double censor_percentile = 0.15;  // 0.15 -> L1, 0.45 -> L2
  model_params truth;

  static model_params canonical_truth() {
    model_params t;
    t.beta = Eigen::MatrixXd::Zero(3, 2);
    t.beta(0, 0) = 4.0;
    t.beta(0, 1) = 6.0;
    Eigen::MatrixXd sigma(2, 2);
    sigma << 2.0, 1.0, 1.0, 2.0;
    t.sigma = spd_matrix(sigma);
    t.phi = 2.5;
    t.r = 0.8;
    return t;
  }

  static sim_scenario canonical(double percentile) {
    sim_scenario s;
    s.censor_percentile = percentile;
    s.truth = canonical_truth();
    s.validate();
    return s;
  }

  void validate() const {
    if (grid_size < 2) throw config_error("sim_scenario: grid_size must be >= 2");
    if (!(censor_percentile > 0.0 && censor_percentile < 1.0)) {
      throw config_error("sim_scenario: censor_percentile must lie in (0,1)");
    }
    const long cells = static_cast<long>(grid_size) * grid_size;
    if (n_test < 1 || n_test >= cells) {
      throw config_error("sim_scenario: n_test must lie in [1, grid cells)");
    }
    if (!(truth.phi > 0.0) || !(truth.r > 0.0 && truth.r < 1.0)) {
      throw config_error("sim_scenario: invalid truth parameters");
    }
  }
};

inline std::vector<location> lattice_locations(int grid_size) {
  std::vector<location> locs;
  locs.reserve(static_cast<std::size_t>(grid_size) * static_cast<std::size_t>(grid_size));
  for (int j = 0; j < grid_size; ++j) {
    for (int i = 0; i < grid_size; ++i) {
      locs.push_back({static_cast<double>(i), static_cast<double>(j)});
    }
  }
  return locs;
}

struct sim_dataset_pair {
  spatial_dataset train;
  spatial_dataset test;  // never censored
};

// Simulate one replicate: draw the bivariate field from the model truth on
// the full lattice (Euclidean distances, coordinate design columns centered
// and scaled over the lattice), hold out n_test cells, then censor variable 1
// in the training set below its empirical percentile. The censoring step
// consumes no randomness, so the same rng seed yields the same field at any
// censoring level.
inline sim_dataset_pair generate_dataset(const sim_scenario& scenario, rng_stream& rng) {
  scenario.validate();
  const std::vector<location> locs = lattice_locations(scenario.grid_size);
  const Eigen::Index n_all = static_cast<Eigen::Index>(locs.size());
  const Eigen::Index p = scenario.truth.beta.cols();
  const distance_metric metric = distance_metric::euclidean();

  const design_scaling scaling = design_scaling_from(locs);
  Eigen::MatrixXd x = make_design_scaled(locs, scaling);

  spd_matrix corr = spatial_corr_matrix(locs, scenario.truth.phi, metric);
  Eigen::MatrixXd row_eps = scenario.truth.r * corr.mat();
  Eigen::MatrixXd eps = sample_matrix_normal(Eigen::MatrixXd::Zero(n_all, p),
                                             spd_matrix(std::move(row_eps)),
                                             scenario.truth.sigma, rng);
  cholesky_factor sigma_chol = cholesky(scenario.truth.sigma);
  Eigen::MatrixXd nugget(n_all, p);
  for (Eigen::Index i = 0; i < n_all; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) nugget(i, j) = rng.normal();
  }
  Eigen::MatrixXd y = x * scenario.truth.beta + eps +
                      std::sqrt(1.0 - scenario.truth.r) * nugget *
                          sigma_chol.lower().transpose();

  // test split: partial Fisher-Yates, indices then sorted for stable order
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n_all));
  for (Eigen::Index i = 0; i < n_all; ++i) perm[static_cast<std::size_t>(i)] = i;
  for (long k = 0; k < scenario.n_test; ++k) {
    const std::size_t j =
        static_cast<std::size_t>(k) +
        static_cast<std::size_t>(rng.uniform01() *
                                 static_cast<double>(n_all - k));
    std::swap(perm[static_cast<std::size_t>(k)], perm[j]);
  }
  std::vector<Eigen::Index> test_idx(perm.begin(), perm.begin() + scenario.n_test);
  std::sort(test_idx.begin(), test_idx.end());
  std::vector<bool> is_test(static_cast<std::size_t>(n_all), false);
  for (Eigen::Index i : test_idx) is_test[static_cast<std::size_t>(i)] = true;

  sim_dataset_pair out;
  auto fill = [&](spatial_dataset& ds, bool take_test) {
    std::vector<Eigen::Index> rows;
    for (Eigen::Index i = 0; i < n_all; ++i) {
      if (is_test[static_cast<std::size_t>(i)] == take_test) rows.push_back(i);
    }
    const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
    ds.locations.reserve(rows.size());
    ds.y.resize(n, p);
    ds.x.resize(n, x.cols());
    ds.censored = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(n, p, false);
    ds.limits = Eigen::MatrixXd::Constant(n, p, std::numeric_limits<double>::quiet_NaN());
    for (Eigen::Index k = 0; k < n; ++k) {
      ds.locations.push_back(locs[static_cast<std::size_t>(rows[static_cast<std::size_t>(k)])]);
      ds.y.row(k) = y.row(rows[static_cast<std::size_t>(k)]);
      ds.x.row(k) = x.row(rows[static_cast<std::size_t>(k)]);
    }
    ds.variable_names = {"V1", "V2"};
    return ds;
  };
  fill(out.train, false);
  fill(out.test, true);

  // censor variable 1 below its empirical percentile in the training set
  std::vector<double> v1(out.train.y.col(0).data(),
                         out.train.y.col(0).data() + out.train.n());
  const double mdl = empirical_quantile(v1, scenario.censor_percentile);
  for (Eigen::Index i = 0; i < out.train.n(); ++i) {
    if (out.train.y(i, 0) < mdl) {
      out.train.censored(i, 0) = true;
      out.train.limits(i, 0) = mdl;
      out.train.y(i, 0) = mdl - 0.1;  // latent placeholder, not data
    }
  }
  return out;
}

inline spatial_dataset apply_setting(const spatial_dataset& train, study_setting setting) {
  spatial_dataset out = train;
  switch (setting) {
    case study_setting::substitute_at_mdl:
      for (Eigen::Index i = 0; i < out.n(); ++i) {
        for (Eigen::Index v = 0; v < out.p(); ++v) {
          if (out.censored(i, v)) {
            out.y(i, v) = out.limits(i, v);
            out.censored(i, v) = false;
            out.limits(i, v) = std::numeric_limits<double>::quiet_NaN();
          }
        }
      }
      return out;
    case study_setting::drop_censored_sites: {
      std::vector<Eigen::Index> keep = train.fully_observed_rows();
      spatial_dataset kept;
      const Eigen::Index n = static_cast<Eigen::Index>(keep.size());
      kept.y.resize(n, train.p());
      kept.x.resize(n, train.q());
      kept.censored =
          Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(n, train.p(), false);
      kept.limits =
          Eigen::MatrixXd::Constant(n, train.p(), std::numeric_limits<double>::quiet_NaN());
      kept.variable_names = train.variable_names;
      for (Eigen::Index k = 0; k < n; ++k) {
        kept.locations.push_back(train.locations[static_cast<std::size_t>(keep[static_cast<std::size_t>(k)])]);
        kept.y.row(k) = train.y.row(keep[static_cast<std::size_t>(k)]);
        kept.x.row(k) = train.x.row(keep[static_cast<std::size_t>(k)]);
      }
      return kept;
    }
    case study_setting::full_augmentation:
      return out;
  }
  return out;
}

struct study_config {
  long replicates = 20;
  mcmc_config chain;  // shortened defaults applied in the constructor below
  double phi_max_fraction = 0.25;
  hyperpriors priors;  // phi_max resolved per fit
  long workers = 1;
  std::uint64_t seed = 20240801;

  study_config() {
    chain.n_iter = 6000;
    chain.burn_in = 1000;
    chain.thin = 5;
    chain.store_epsilon = true;
  }
};

struct study_combo_result {
  std::string level;    // "L1" / "L2"
  std::string setting;  // "S1" / "S2" / "S3"
  std::vector<score_with_se> param_rmse;   // per parameter
  std::vector<score_with_se> crps;         // per variable
  std::vector<score_with_se> coverage90;   // per variable
  std::vector<score_with_se> coverage95;   // per variable
  long replicates_used = 0;
  long replicates_failed = 0;
};

struct study_result {
  std::vector<std::string> parameter_names;
  std::vector<double> parameter_truth;
  std::vector<std::string> variable_names;
  std::vector<study_combo_result> combos;  // L1:S1..S3 then L2:S1..S3

  const study_combo_result& combo(const std::string& level, const std::string& setting) const {
    for (const auto& c : combos) {
      if (c.level == level && c.setting == setting) return c;
    }
    throw domain_error("study_result: unknown combination " + level + "/" + setting);
  }
};

namespace detail {

struct replicate_record {
  bool ok = false;
  Eigen::VectorXd estimates;  // posterior means per parameter
  Eigen::VectorXd crps;       // per variable
  Eigen::VectorXd cov90;
  Eigen::VectorXd cov95;
};

inline Eigen::VectorXd posterior_mean_vector(const posterior_samples& samples) {
  const Eigen::Index q = samples.beta.front().rows();
  const Eigen::Index p = samples.beta.front().cols();
  const double s = static_cast<double>(samples.size());
  Eigen::MatrixXd beta_mean = Eigen::MatrixXd::Zero(q, p);
  Eigen::MatrixXd sigma_mean = Eigen::MatrixXd::Zero(p, p);
  double phi_mean = 0.0, r_mean = 0.0;
  for (std::size_t k = 0; k < samples.size(); ++k) {
    beta_mean += samples.beta[k];
    sigma_mean += samples.sigma[k];
    phi_mean += samples.phi[k];
    r_mean += samples.r[k];
  }
  beta_mean /= s;
  sigma_mean /= s;
  phi_mean /= s;
  r_mean /= s;
  // order matches the report tables: beta (variable fast within covariate),
  // Sigma diagonal, Sigma upper off-diagonals, phi, r
  std::vector<double> vals;
  for (Eigen::Index qq = 0; qq < q; ++qq) {
    for (Eigen::Index pp = 0; pp < p; ++pp) vals.push_back(beta_mean(qq, pp));
  }
  for (Eigen::Index d = 0; d < p; ++d) vals.push_back(sigma_mean(d, d));
  for (Eigen::Index a = 0; a < p; ++a) {
    for (Eigen::Index b = a + 1; b < p; ++b) vals.push_back(sigma_mean(a, b));
  }
  vals.push_back(phi_mean);
  vals.push_back(r_mean);
  return Eigen::Map<Eigen::VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

}  // namespace detail

inline std::vector<std::string> study_parameter_names(Eigen::Index q, Eigen::Index p) {
  std::vector<std::string> names;
  for (Eigen::Index qq = 0; qq < q; ++qq) {
    for (Eigen::Index pp = 0; pp < p; ++pp) {
      names.push_back("beta_" + std::to_string(pp + 1) + "_" + std::to_string(qq + 1));
    }
  }
  for (Eigen::Index d = 0; d < p; ++d) {
    names.push_back("Sigma_" + std::to_string(d + 1) + "_" + std::to_string(d + 1));
  }
  for (Eigen::Index a = 0; a < p; ++a) {
    for (Eigen::Index b = a + 1; b < p; ++b) {
      names.push_back("Sigma_" + std::to_string(a + 1) + "_" + std::to_string(b + 1));
    }
  }
  names.push_back("phi");
  names.push_back("r");
  return names;
}

inline Eigen::VectorXd study_parameter_truth(const model_params& truth) {
  const Eigen::Index q = truth.beta.rows();
  const Eigen::Index p = truth.beta.cols();
  std::vector<double> vals;
  for (Eigen::Index qq = 0; qq < q; ++qq) {
    for (Eigen::Index pp = 0; pp < p; ++pp) vals.push_back(truth.beta(qq, pp));
  }
  for (Eigen::Index d = 0; d < p; ++d) vals.push_back(truth.sigma.mat()(d, d));
  for (Eigen::Index a = 0; a < p; ++a) {
    for (Eigen::Index b = a + 1; b < p; ++b) vals.push_back(truth.sigma.mat()(a, b));
  }
  vals.push_back(truth.phi);
  vals.push_back(truth.r);
  return Eigen::Map<Eigen::VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

// Fit one replicate under one (level, setting) combination and score it.
inline detail::replicate_record run_study_task(const sim_scenario& scenario,
                                               study_setting setting,
                                               const study_config& cfg, long replicate) {
  rng_stream root(cfg.seed);
  rng_stream data_rng = root.split(static_cast<std::uint64_t>(replicate));
  sim_dataset_pair pair = generate_dataset(scenario, data_rng);
  spatial_dataset train = apply_setting(pair.train, setting);

  const distance_metric metric = distance_metric::euclidean();
  hyperpriors hyper = cfg.priors;
  hyper.phi_max = cfg.phi_max_fraction * max_pairwise_distance(train.locations, metric);

  const std::uint64_t combo_key =
      0x51ULL * static_cast<std::uint64_t>(replicate + 1) +
      (scenario.censor_percentile < 0.3 ? 0u : 1u) * 7u + static_cast<std::uint64_t>(setting);
  mcmc_config chain_cfg = cfg.chain;
  chain_cfg.seed = root.split(0x1000 + combo_key).seed();

  fit_result fit = run_chain(train, metric, hyper, chain_cfg);

  prediction_grid grid;
  grid.locations = pair.test.locations;
  grid.x0 = pair.test.x;
  grid.region.assign(pair.test.locations.size(), "");
  rng_stream pred_rng = root.split(0x2000 + combo_key);
  std::vector<Eigen::MatrixXd> draws =
      posterior_predictive_draws(fit.samples, train.locations, metric, grid, pred_rng);

  detail::replicate_record rec;
  rec.estimates = detail::posterior_mean_vector(fit.samples);
  const Eigen::Index p = pair.test.p();
  const Eigen::Index t = pair.test.n();
  rec.crps = Eigen::VectorXd::Zero(p);
  rec.cov90 = Eigen::VectorXd::Zero(p);
  rec.cov95 = Eigen::VectorXd::Zero(p);
  Eigen::MatrixXd per_var(static_cast<Eigen::Index>(draws.size()), t);
  for (Eigen::Index v = 0; v < p; ++v) {
    double crps_acc = 0.0;
    for (Eigen::Index cell = 0; cell < t; ++cell) {
      std::vector<double> ens(draws.size());
      for (std::size_t k = 0; k < draws.size(); ++k) {
        ens[k] = draws[k](cell, v);
        per_var(static_cast<Eigen::Index>(k), cell) = ens[k];
      }
      crps_acc += crps_sample(ens, pair.test.y(cell, v));
    }
    rec.crps(v) = crps_acc / static_cast<double>(t);
    rec.cov90(v) = interval_coverage(per_var, pair.test.y.col(v), 0.90);
    rec.cov95(v) = interval_coverage(per_var, pair.test.y.col(v), 0.95);
  }
  rec.ok = true;
  return rec;
}

// Full {L1,L2} x {S1,S2,S3} grid. Replicate tasks are independent and may
// fan out to a small worker pool; seeds derive from indices, so results do
// not depend on the worker count.
inline study_result run_study(const study_config& cfg) {
  if (cfg.replicates < 1) throw config_error("run_study: replicates must be >= 1");
  const double levels[2] = {0.15, 0.45};
  const char* level_names[2] = {"L1", "L2"};
  const study_setting settings[3] = {study_setting::substitute_at_mdl,
                                     study_setting::drop_censored_sites,
                                     study_setting::full_augmentation};

  study_result out;
  const model_params truth = sim_scenario::canonical_truth();
  out.parameter_names = study_parameter_names(truth.beta.rows(), truth.beta.cols());
  Eigen::VectorXd truth_vec = study_parameter_truth(truth);
  out.parameter_truth.assign(truth_vec.data(), truth_vec.data() + truth_vec.size());
  out.variable_names = {"V1", "V2"};

  struct task {
    int level;
    int setting;
    long replicate;
  };
  std::vector<task> tasks;
  for (int lv = 0; lv < 2; ++lv) {
    for (int st = 0; st < 3; ++st) {
      for (long rep = 0; rep < cfg.replicates; ++rep) tasks.push_back({lv, st, rep});
    }
  }
  std::vector<detail::replicate_record> records(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= tasks.size()) return;
      const task& tk = tasks[k];
      try {
        sim_scenario scenario = sim_scenario::canonical(levels[tk.level]);
        records[k] = run_study_task(scenario, settings[tk.setting], cfg, tk.replicate);
      } catch (const std::exception& e) {
        std::cerr << "warning: replicate " << tk.replicate << " (" << level_names[tk.level]
                  << "/" << setting_name(settings[tk.setting]) << ") failed: " << e.what()
                  << "\n";
        records[k].ok = false;
      }
    }
  };
  const long n_workers = std::max(1L, cfg.workers);
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (long w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  for (int lv = 0; lv < 2; ++lv) {
    for (int st = 0; st < 3; ++st) {
      study_combo_result combo;
      combo.level = level_names[lv];
      combo.setting = setting_name(settings[st]);
      std::vector<const detail::replicate_record*> ok_records;
      for (std::size_t k = 0; k < tasks.size(); ++k) {
        if (tasks[k].level == lv && tasks[k].setting == st) {
          if (records[k].ok) {
            ok_records.push_back(&records[k]);
          } else {
            ++combo.replicates_failed;
          }
        }
      }
      combo.replicates_used = static_cast<long>(ok_records.size());
      if (ok_records.empty()) {
        throw error("numeric", "run_study: every replicate failed for " + combo.level +
                                   "/" + combo.setting);
      }
      const Eigen::Index n_params = static_cast<Eigen::Index>(out.parameter_names.size());
      for (Eigen::Index j = 0; j < n_params; ++j) {
        std::vector<double> est;
        est.reserve(ok_records.size());
        for (const auto* rec : ok_records) est.push_back(rec->estimates(j));
        combo.param_rmse.push_back(rmse(est, out.parameter_truth[static_cast<std::size_t>(j)]));
      }
      auto aggregate = [&](auto member) {
        std::vector<score_with_se> scores;
        for (Eigen::Index v = 0; v < 2; ++v) {
          double mean = 0.0;
          std::vector<double> vals;
          for (const auto* rec : ok_records) {
            vals.push_back((rec->*member)(v));
            mean += vals.back();
          }
          mean /= static_cast<double>(vals.size());
          double var = 0.0;
          for (double x : vals) var += (x - mean) * (x - mean);
          score_with_se sc;
          sc.value = mean;
          sc.se = vals.size() > 1
                      ? std::sqrt(var / static_cast<double>(vals.size() - 1) /
                                  static_cast<double>(vals.size()))
                      : 0.0;
          scores.push_back(sc);
        }
        return scores;
      };
      combo.crps = aggregate(&detail::replicate_record::crps);
      combo.coverage90 = aggregate(&detail::replicate_record::cov90);
      combo.coverage95 = aggregate(&detail::replicate_record::cov95);
      out.combos.push_back(std::move(combo));
    }
  }
  return out;
}

}  // namespace censpatial
