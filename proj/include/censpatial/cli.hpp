// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <CLI11.hpp>
#include <atomic>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "censpatial/eda.hpp"
#include "censpatial/errors.hpp"
#include "censpatial/io.hpp"
#include "censpatial/mcmc.hpp"
#include "censpatial/predict.hpp"
#include "censpatial/simstudy.hpp"

// Batch subcommands: eda, fit, predict, cv, simulate. Every subcommand is a
// pure function of (input files, config, seed); rerunning with identical
// inputs reproduces output files byte for byte.

namespace censpatial::cli {

inline hyperpriors resolve_priors(const app_config& cfg, const spatial_dataset& ds,
                                  const distance_metric& metric, double fraction) {
  const double delta = max_pairwise_distance(ds.locations, metric);
  if (!(delta > 0.0)) throw domain_error("cannot resolve phi prior: zero spatial extent");
  return cfg.make_hyperpriors(delta, fraction);
}

inline void cmd_fit(const app_config& cfg, const std::string& stations,
                    const std::string& out_dir) {
  ensure_directory(out_dir);
  spatial_dataset ds = ingest_stations_csv(stations, cfg);
  std::cout << "ingested " << describe(ds);
  const distance_metric metric = cfg.make_metric();
  hyperpriors hyper = resolve_priors(cfg, ds, metric, cfg.phi_max_fraction);
  mcmc_config mcfg = cfg.make_mcmc_config();
  fit_result fit = run_chain(ds, metric, hyper, mcfg);
  write_trace_csv(out_dir + "/trace.csv", fit.samples);
  if (mcfg.store_epsilon) {
    write_epsilon_trace_csv(out_dir + "/epsilon_trace.csv", fit.samples, ds.n(), ds.p());
  }
  write_fit_summary(out_dir + "/summary.txt", ds, fit.samples, fit.diagnostics);
  std::cout << "stored " << fit.samples.size() << " draws; acceptance phi="
            << fixed(fit.diagnostics.accept_rate_phi, 3)
            << " r=" << fixed(fit.diagnostics.accept_rate_r, 3) << "\n";
}

inline void cmd_predict(const app_config& cfg, const std::string& stations,
                        const std::string& fit_dir, const std::string& boundary_path,
                        const std::string& regions_path, const std::string& out_dir) {
  ensure_directory(out_dir);
  spatial_dataset ds = ingest_stations_csv(stations, cfg);
  posterior_samples samples =
      read_fit_outputs(fit_dir + "/trace.csv", fit_dir + "/epsilon_trace.csv");
  if (!samples.epsilon.empty() && samples.epsilon.front().rows() != ds.n()) {
    throw ingest_error("epsilon trace has " + std::to_string(samples.epsilon.front().rows()) +
                       " sites but the stations file has " + std::to_string(ds.n()));
  }
  region_partition boundary = read_region_file(boundary_path);

  prediction_grid grid;
  grid.locations = make_grid(bounds_of(boundary), cfg.grid_resolution, boundary);
  if (grid.locations.empty()) throw domain_error("prediction grid is empty");
  grid.x0 = make_design(grid.locations);
  grid.region.assign(grid.locations.size(), "");

  std::optional<region_partition> regions;
  if (!regions_path.empty()) {
    regions = read_region_file(regions_path);
    long unassigned = 0;
    for (std::size_t i = 0; i < grid.locations.size(); ++i) {
      auto name = assign_region(grid.locations[i], *regions);
      if (name) {
        grid.region[i] = *name;
      } else {
        ++unassigned;
      }
    }
    if (unassigned > 0) {
      std::cerr << "warning: " << unassigned << " grid cells lie outside every region\n";
    }
  }

  const distance_metric metric = cfg.make_metric();
  rng_stream rng = rng_stream(cfg.seed).split(0x70726564);  // prediction stream
  std::vector<Eigen::MatrixXd> draws =
      posterior_predictive_draws(samples, ds.locations, metric, grid, rng);
  predictive_summary summary = summarize_predictive(draws);
  write_prediction_csv(out_dir + "/prediction.csv", grid, summary, ds.variable_names);
  if (regions) {
    region_mean_table table = region_means(draws, grid, regions->names);
    write_region_table_csv(out_dir + "/region_means.csv", table, ds.variable_names);
  }
  std::cout << "predicted at " << grid.m() << " grid cells from " << draws.size()
            << " posterior draws\n";
}

struct cv_fold_result {
  bool ok = false;
  Eigen::Index site = 0;
  Eigen::VectorXd observed;
  Eigen::VectorXd pred_mean;
  Eigen::VectorXd lo95;
  Eigen::VectorXd hi95;
};

// Leave-one-station-out over the fully observed sites; censored sites are
// never dropped. Each fold refits with the (shortened) cv chain settings.
inline void cmd_cv(const app_config& cfg, const std::string& stations,
                   const std::string& out_dir) {
  ensure_directory(out_dir);
  spatial_dataset ds = ingest_stations_csv(stations, cfg);
  std::cout << "ingested " << describe(ds);
  std::vector<Eigen::Index> folds = ds.fully_observed_rows();
  if (folds.size() < 2) {
    throw domain_error("cross-validation needs at least 2 fully observed sites");
  }
  const distance_metric metric = cfg.make_metric();

  std::vector<cv_fold_result> results(folds.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= folds.size()) return;
      const Eigen::Index leave = folds[k];
      cv_fold_result& res = results[k];
      res.site = leave;
      try {
        spatial_dataset sub;
        sub.variable_names = ds.variable_names;
        const Eigen::Index n = ds.n() - 1;
        sub.y.resize(n, ds.p());
        sub.x.resize(n, ds.q());
        sub.censored = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(
            n, ds.p(), false);
        sub.limits.resize(n, ds.p());
        Eigen::Index w = 0;
        for (Eigen::Index i = 0; i < ds.n(); ++i) {
          if (i == leave) continue;
          sub.locations.push_back(ds.locations[static_cast<std::size_t>(i)]);
          sub.y.row(w) = ds.y.row(i);
          sub.x.row(w) = ds.x.row(i);
          for (Eigen::Index v = 0; v < ds.p(); ++v) sub.censored(w, v) = ds.censored(i, v);
          sub.limits.row(w) = ds.limits.row(i);
          ++w;
        }
        hyperpriors hyper = resolve_priors(cfg, sub, metric, cfg.phi_max_fraction);
        mcmc_config mcfg = cfg.make_mcmc_config();
        mcfg.n_iter = cfg.cv_n_iter;
        mcfg.burn_in = cfg.cv_burn_in;
        mcfg.thin = cfg.cv_thin;
        mcfg.store_epsilon = true;
        mcfg.seed = rng_stream(cfg.seed).split(0xCF000 + static_cast<std::uint64_t>(k)).seed();
        fit_result fit = run_chain(sub, metric, hyper, mcfg);

        prediction_grid cell;
        cell.locations = {ds.locations[static_cast<std::size_t>(leave)]};
        cell.x0 = ds.x.row(leave);
        cell.region = {""};
        rng_stream pred_rng = rng_stream(cfg.seed).split(0xCF800 + static_cast<std::uint64_t>(k));
        std::vector<Eigen::MatrixXd> draws =
            posterior_predictive_draws(fit.samples, sub.locations, metric, cell, pred_rng);
        res.observed = ds.y.row(leave).transpose();
        res.pred_mean = Eigen::VectorXd::Zero(ds.p());
        res.lo95 = Eigen::VectorXd::Zero(ds.p());
        res.hi95 = Eigen::VectorXd::Zero(ds.p());
        for (Eigen::Index v = 0; v < ds.p(); ++v) {
          std::vector<double> vals(draws.size());
          double mean = 0.0;
          for (std::size_t d = 0; d < draws.size(); ++d) {
            vals[d] = draws[d](0, v);
            mean += vals[d];
          }
          res.pred_mean(v) = mean / static_cast<double>(draws.size());
          res.lo95(v) = empirical_quantile(vals, 0.025);
          res.hi95(v) = empirical_quantile(vals, 0.975);
        }
        res.ok = true;
      } catch (const std::exception& e) {
        std::cerr << "warning: cv fold for site " << (leave + 1) << " failed: " << e.what()
                  << "\n";
      }
    }
  };
  const long n_workers = std::max(1L, cfg.workers);
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (long t = 0; t < n_workers; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  std::ofstream out = open_output(out_dir + "/cv_results.csv");
  out << "site,lon,lat,variable,observed,pred_mean,lo95,hi95,residual,covered\n";
  std::vector<long> covered(static_cast<std::size_t>(ds.p()), 0);
  long folds_used = 0;
  for (const auto& res : results) {
    if (!res.ok) continue;
    ++folds_used;
    for (Eigen::Index v = 0; v < ds.p(); ++v) {
      const bool in =
          res.observed(v) >= res.lo95(v) && res.observed(v) <= res.hi95(v);
      covered[static_cast<std::size_t>(v)] += in ? 1 : 0;
      out << (res.site + 1) << ","
          << format_double(ds.locations[static_cast<std::size_t>(res.site)].lon) << ","
          << format_double(ds.locations[static_cast<std::size_t>(res.site)].lat) << ","
          << ds.variable_names[static_cast<std::size_t>(v)] << ","
          << format_double(res.observed(v)) << "," << format_double(res.pred_mean(v)) << ","
          << format_double(res.lo95(v)) << "," << format_double(res.hi95(v)) << ","
          << format_double(res.observed(v) - res.pred_mean(v)) << "," << (in ? 1 : 0) << "\n";
    }
  }
  std::ofstream summary = open_output(out_dir + "/cv_summary.txt");
  summary << "leave-one-station-out cross-validation\n";
  summary << "folds: " << folds_used << " of " << folds.size() << "\n";
  long total = 0;
  for (Eigen::Index v = 0; v < ds.p(); ++v) {
    total += covered[static_cast<std::size_t>(v)];
    summary << ds.variable_names[static_cast<std::size_t>(v)] << " 95% coverage: "
            << fixed(static_cast<double>(covered[static_cast<std::size_t>(v)]) /
                         static_cast<double>(folds_used),
                     4)
            << "\n";
  }
  summary << "overall 95% coverage: "
          << fixed(static_cast<double>(total) /
                       static_cast<double>(folds_used * ds.p()),
                   4)
          << "\n";
  std::cout << "cross-validated " << folds_used << " sites\n";
}

inline void cmd_simulate(const app_config& cfg, const std::string& out_dir,
                         std::optional<long> replicates_override) {
  ensure_directory(out_dir);
  study_config scfg;
  scfg.replicates = replicates_override.value_or(cfg.sim_replicates);
  scfg.chain.n_iter = cfg.sim_n_iter;
  scfg.chain.burn_in = cfg.sim_burn_in;
  scfg.chain.thin = cfg.sim_thin;
  scfg.chain.adapt_target = cfg.adapt_target;
  scfg.chain.adapt_window = cfg.adapt_window;
  scfg.chain.init_step_sd = cfg.init_step_sd;
  scfg.chain.nu_includes_predictions = cfg.nu_includes_predictions;
  scfg.phi_max_fraction = cfg.sim_phi_max_fraction;
  scfg.priors.beta_prior_sd = cfg.beta_prior_sd;
  scfg.priors.iw_df = cfg.iw_df;
  scfg.priors.iw_scale_mult = cfg.iw_scale_mult;
  scfg.workers = cfg.workers;
  scfg.seed = cfg.seed;
  study_result result = run_study(scfg);
  write_study_tables(out_dir, result);
  std::cout << "simulation study finished: " << scfg.replicates << " replicates x "
            << result.combos.size() << " combinations\n";
}

inline void cmd_eda(const app_config& cfg, const std::string& stations,
                    const std::string& out_dir) {
  ensure_directory(out_dir);
  spatial_dataset ds = ingest_stations_csv(stations, cfg);
  std::cout << "ingested " << describe(ds);
  if (ds.n() == 1) {
    std::cerr << "warning: single station; the semivariogram is degenerate\n";
  }
  std::vector<Eigen::Index> rows = ds.fully_observed_rows();
  if (static_cast<Eigen::Index>(rows.size()) <= ds.q()) {
    throw domain_error("eda needs more fully observed rows than design columns");
  }
  Eigen::MatrixXd xs(static_cast<Eigen::Index>(rows.size()), ds.q());
  Eigen::MatrixXd ys(static_cast<Eigen::Index>(rows.size()), ds.p());
  std::vector<location> locs;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    xs.row(static_cast<Eigen::Index>(k)) = ds.x.row(rows[k]);
    ys.row(static_cast<Eigen::Index>(k)) = ds.y.row(rows[k]);
    locs.push_back(ds.locations[static_cast<std::size_t>(rows[k])]);
  }
  ols_fit_result ols = ols_fit(xs, ys);

  std::vector<std::string> coef_rows;
  for (Eigen::Index qq = 0; qq < ds.q(); ++qq) coef_rows.push_back("x" + std::to_string(qq + 1));
  write_matrix_csv(out_dir + "/ols_coefficients.csv", ols.coefficients, ds.variable_names,
                   coef_rows);

  {
    std::ofstream out = open_output(out_dir + "/residuals.csv");
    out << "lon,lat";
    for (const auto& v : ds.variable_names) out << "," << v;
    out << "\n";
    for (Eigen::Index i = 0; i < ols.residuals.rows(); ++i) {
      out << format_double(locs[static_cast<std::size_t>(i)].lon) << ","
          << format_double(locs[static_cast<std::size_t>(i)].lat);
      for (Eigen::Index v = 0; v < ols.residuals.cols(); ++v) {
        out << "," << format_double(ols.residuals(i, v));
      }
      out << "\n";
    }
  }

  write_matrix_csv(out_dir + "/correlations.csv", pairwise_correlations(ols.residuals),
                   ds.variable_names, ds.variable_names);

  if (locs.size() >= 2) {
    const distance_metric metric = cfg.make_metric();
    variogram_bins bins = default_variogram_bins(locs, metric);
    for (Eigen::Index v = 0; v < ds.p(); ++v) {
      variogram_result vg = semivariogram(ols.residuals.col(v), locs, metric, bins);
      write_variogram_csv(
          out_dir + "/variogram_" + ds.variable_names[static_cast<std::size_t>(v)] + ".csv", vg);
    }
  } else {
    std::cerr << "warning: fewer than 2 complete cases; skipping variograms\n";
  }
  std::cout << "eda outputs written to " << out_dir << "\n";
}

inline int run(std::vector<std::string> args) {
  CLI::App app{"multivariate spatial Bayesian modeling of left-censored data"};
  app.require_subcommand(0, 1);

  std::string config_path, stations, boundary, regions, out_dir = ".", metric;
  std::string fit_dir;
  std::uint64_t seed = 0;
  long workers = 0;
  long replicates = 0;
  bool nu_flag = false;
  bool print_config = false;

  app.add_option("--config", config_path, "flat key=value config file");
  app.add_option("--seed", seed, "RNG seed (overrides config)");
  app.add_option("--stations", stations, "stations CSV");
  app.add_option("--boundary", boundary, "boundary polygon file");
  app.add_option("--regions", regions, "region partition polygon file");
  app.add_option("--out-dir", out_dir, "output directory");
  app.add_option("--workers", workers, "worker threads for folds/replicates");
  app.add_flag("--nu-includes-predictions", nu_flag,
               "fold 2M prediction locations into the inverse-Wishart df");
  app.add_option("--metric", metric, "distance metric")
      ->check(CLI::IsMember({"geodesic", "euclidean"}));
  double earth_radius = 0.0;
  app.add_option("--earth-radius", earth_radius, "Earth radius in km (geodesic mode)")
      ->check(CLI::PositiveNumber);
  app.add_flag("--print-config", print_config, "print the merged config and exit");

  CLI::App* fit = app.add_subcommand("fit", "fit the model, write traces and a summary");
  CLI::App* predict = app.add_subcommand("predict", "posterior predictive surfaces on a grid");
  predict->add_option("--fit-dir", fit_dir, "directory holding trace.csv/epsilon_trace.csv");
  CLI::App* cv = app.add_subcommand("cv", "leave-one-station-out cross-validation");
  CLI::App* simulate = app.add_subcommand("simulate", "censoring simulation study");
  simulate->add_option("--replicates", replicates, "replicate count override");
  CLI::App* eda = app.add_subcommand("eda", "residuals, correlations and semivariograms");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    app_config cfg;
    if (!config_path.empty()) cfg = app_config::load(config_path);
    if (app.count("--seed") > 0) cfg.seed = seed;
    if (app.count("--metric") > 0) cfg.metric = metric;
    if (app.count("--earth-radius") > 0) cfg.earth_radius_km = earth_radius;
    if (app.count("--workers") > 0) cfg.workers = workers;
    if (nu_flag) cfg.nu_includes_predictions = true;

    if (print_config) {
      std::cout << cfg.print();
      return 0;
    }
    auto need = [&](const std::string& value, const char* flag) -> const std::string& {
      if (value.empty()) throw config_error(std::string("missing required flag ") + flag);
      return value;
    };
    if (fit->parsed()) {
      cmd_fit(cfg, need(stations, "--stations"), out_dir);
    } else if (predict->parsed()) {
      cmd_predict(cfg, need(stations, "--stations"), need(fit_dir, "--fit-dir"),
                  need(boundary, "--boundary"), regions, out_dir);
    } else if (cv->parsed()) {
      cmd_cv(cfg, need(stations, "--stations"), out_dir);
    } else if (simulate->parsed()) {
      cmd_simulate(cfg, out_dir,
                   replicates > 0 ? std::optional<long>(replicates) : std::nullopt);
    } else if (eda->parsed()) {
      cmd_eda(cfg, need(stations, "--stations"), out_dir);
    } else {
      std::cout << app.help();
      return 0;
    }
  } catch (const error& e) {
    std::cerr << "error: " << e.category() << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace censpatial::cli
