// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <iostream>
#include <string>
#include <vector>

#include "censpatial/errors.hpp"
#include "censpatial/linalg.hpp"
#include "censpatial/mcmc.hpp"
#include "censpatial/metrics.hpp"
#include "censpatial/model.hpp"

// Posterior predictive simulation at new locations. Prediction is
// compositional: for every stored posterior draw, the latent field at the
// target sites is drawn from its Gaussian conditional given the field at the
// data sites, then the observation adds the regression mean and a nugget.
// Averaging over draws marginalizes the latent process.

namespace censpatial {

struct prediction_grid {
  std::vector<location> locations;  // M
  Eigen::MatrixXd x0;               // M x Q
  std::vector<std::string> region;  // optional label per location ("" = unassigned)

  Eigen::Index m() const { return x0.rows(); }
};

struct posterior_draw {
  Eigen::MatrixXd beta;
  Eigen::MatrixXd sigma;
  double phi = 1.0;
  double r = 0.5;
  Eigen::MatrixXd epsilon;
};

inline posterior_draw extract_draw(const posterior_samples& samples, std::size_t k) {
  if (k >= samples.size()) throw domain_error("extract_draw: index out of range");
  if (samples.epsilon.empty()) {
    throw domain_error("extract_draw: posterior samples carry no epsilon draws");
  }
  return {samples.beta[k], samples.sigma[k], samples.phi[k], samples.r[k],
          samples.epsilon[k]};
}

// Conditional law of the latent field at the target sites given the field at
// the data sites: mean H E with H = C_cross C_data^-1, row covariance
// r (C_grid - H C_cross^T), column covariance Sigma.
inline matrix_normal_conditional epsilon0_conditional(
    const posterior_draw& draw, const std::vector<location>& grid_locs,
    const std::vector<location>& data_locs, const distance_metric& metric) {
  const Eigen::Index m = static_cast<Eigen::Index>(grid_locs.size());
  const Eigen::Index n = static_cast<Eigen::Index>(data_locs.size());
  Eigen::MatrixXd cross(m, n);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      cross(i, j) = std::exp(-distance(grid_locs[static_cast<std::size_t>(i)],
                                       data_locs[static_cast<std::size_t>(j)], metric) /
                             draw.phi);
    }
  }
  cholesky_factor data_chol = cholesky_with_jitter(
      spatial_corr_matrix(data_locs, draw.phi, metric).mat(), "prediction data correlation");
  Eigen::MatrixXd h = data_chol.solve(cross.transpose()).transpose();
  Eigen::MatrixXd grid_corr = spatial_corr_matrix(grid_locs, draw.phi, metric).mat();
  matrix_normal_conditional out;
  out.mean = h * draw.epsilon;
  out.row_cov = draw.r * (grid_corr - h * cross.transpose());
  out.row_cov = ((out.row_cov + out.row_cov.transpose()) / 2.0).eval();
  return out;
}

inline Eigen::MatrixXd draw_epsilon0(const posterior_draw& draw,
                                     const std::vector<location>& grid_locs,
                                     const std::vector<location>& data_locs,
                                     const distance_metric& metric, rng_stream& rng) {
  matrix_normal_conditional cond = epsilon0_conditional(draw, grid_locs, data_locs, metric);
  cholesky_factor row_chol =
      cholesky_with_jitter(cond.row_cov, "prediction conditional row covariance");
  return sample_matrix_normal(cond.mean, row_chol, cholesky(spd_matrix(draw.sigma)), rng);
}

// Y0 = X0 B + eps0 + nugget, nugget rows iid Normal_P(0, (1-r) Sigma).
inline Eigen::MatrixXd draw_y0(const posterior_draw& draw, const Eigen::MatrixXd& epsilon0,
                               const Eigen::MatrixXd& x0, rng_stream& rng) {
  if (x0.rows() != epsilon0.rows() || x0.cols() != draw.beta.rows() ||
      epsilon0.cols() != draw.beta.cols()) {
    throw domain_error("draw_y0: dimension mismatch");
  }
  cholesky_factor sigma_chol = cholesky(spd_matrix(draw.sigma));
  Eigen::MatrixXd z(epsilon0.rows(), epsilon0.cols());
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    for (Eigen::Index j = 0; j < z.cols(); ++j) z(i, j) = rng.normal();
  }
  return x0 * draw.beta + epsilon0 +
         std::sqrt(1.0 - draw.r) * z * sigma_chol.lower().transpose();
}

// One predictive field per stored posterior draw.
inline std::vector<Eigen::MatrixXd> posterior_predictive_draws(
    const posterior_samples& samples, const std::vector<location>& data_locs,
    const distance_metric& metric, const prediction_grid& grid, rng_stream& rng) {
  std::vector<Eigen::MatrixXd> draws;
  draws.reserve(samples.size());
  for (std::size_t k = 0; k < samples.size(); ++k) {
    posterior_draw d = extract_draw(samples, k);
    Eigen::MatrixXd eps0 = draw_epsilon0(d, grid.locations, data_locs, metric, rng);
    draws.push_back(draw_y0(d, eps0, grid.x0, rng));
  }
  return draws;
}

struct predictive_summary {
  Eigen::MatrixXd mean_log;
  Eigen::MatrixXd sd_log;
  Eigen::MatrixXd q025;
  Eigen::MatrixXd q05;
  Eigen::MatrixXd q50;
  Eigen::MatrixXd q95;
  Eigen::MatrixXd q975;
  Eigen::MatrixXd mean_natural;  // mean of exp(draw), cellwise
};

inline predictive_summary summarize_predictive(const std::vector<Eigen::MatrixXd>& draws) {
  if (draws.size() < 2) throw domain_error("summarize_predictive: need at least 2 draws");
  const Eigen::Index m = draws.front().rows();
  const Eigen::Index p = draws.front().cols();
  const double s = static_cast<double>(draws.size());
  predictive_summary out;
  out.mean_log = Eigen::MatrixXd::Zero(m, p);
  out.sd_log = Eigen::MatrixXd::Zero(m, p);
  out.q025 = Eigen::MatrixXd::Zero(m, p);
  out.q05 = Eigen::MatrixXd::Zero(m, p);
  out.q50 = Eigen::MatrixXd::Zero(m, p);
  out.q95 = Eigen::MatrixXd::Zero(m, p);
  out.q975 = Eigen::MatrixXd::Zero(m, p);
  out.mean_natural = Eigen::MatrixXd::Zero(m, p);
  std::vector<double> cell(draws.size());
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) {
      double mean = 0.0, mean_nat = 0.0;
      for (std::size_t k = 0; k < draws.size(); ++k) {
        cell[k] = draws[k](i, j);
        mean += cell[k];
        mean_nat += std::exp(cell[k]);
      }
      mean /= s;
      mean_nat /= s;
      double var = 0.0;
      for (double v : cell) var += (v - mean) * (v - mean);
      var /= (s - 1.0);
      out.mean_log(i, j) = mean;
      out.mean_natural(i, j) = mean_nat;
      out.sd_log(i, j) = std::sqrt(var);
      std::sort(cell.begin(), cell.end());
      auto q = [&](double prob) {
        const double h = prob * (s - 1.0);
        const std::size_t lo = static_cast<std::size_t>(std::floor(h));
        const std::size_t hi = std::min(lo + 1, cell.size() - 1);
        const double w = h - std::floor(h);
        return (1.0 - w) * cell[lo] + w * cell[hi];
      };
      out.q025(i, j) = q(0.025);
      out.q05(i, j) = q(0.05);
      out.q50(i, j) = q(0.50);
      out.q95(i, j) = q(0.95);
      out.q975(i, j) = q(0.975);
    }
  }
  return out;
}

struct region_mean_table {
  std::vector<std::string> region;
  std::vector<long> n_cells;
  Eigen::MatrixXd mean;  // regions x P, natural (exponentiated) scale
  Eigen::MatrixXd se;    // Monte Carlo standard error of each mean
};

// Division-wise means: per draw, average exp(Y) over the cells of each
// region; report the across-draw mean and its Monte Carlo standard error.
// Regions without cells are dropped with a warning; unassigned cells do not
// contribute.
inline region_mean_table region_means(const std::vector<Eigen::MatrixXd>& log_scale_draws,
                                      const prediction_grid& grid,
                                      const std::vector<std::string>& region_order) {
  if (log_scale_draws.empty()) throw domain_error("region_means: no draws");
  const Eigen::Index p = log_scale_draws.front().cols();
  region_mean_table out;
  std::vector<std::vector<Eigen::Index>> cells_by_region;
  for (const auto& name : region_order) {
    std::vector<Eigen::Index> cells;
    for (Eigen::Index i = 0; i < grid.m(); ++i) {
      if (grid.region[static_cast<std::size_t>(i)] == name) cells.push_back(i);
    }
    if (cells.empty()) {
      std::cerr << "warning: region '" << name << "' contains no grid cells; excluded\n";
      continue;
    }
    out.region.push_back(name);
    out.n_cells.push_back(static_cast<long>(cells.size()));
    cells_by_region.push_back(std::move(cells));
  }
  const Eigen::Index n_regions = static_cast<Eigen::Index>(out.region.size());
  out.mean = Eigen::MatrixXd::Zero(n_regions, p);
  out.se = Eigen::MatrixXd::Zero(n_regions, p);
  const double s = static_cast<double>(log_scale_draws.size());
  for (Eigen::Index g = 0; g < n_regions; ++g) {
    const auto& cells = cells_by_region[static_cast<std::size_t>(g)];
    for (Eigen::Index j = 0; j < p; ++j) {
      std::vector<double> per_draw(log_scale_draws.size());
      for (std::size_t k = 0; k < log_scale_draws.size(); ++k) {
        double acc = 0.0;
        for (Eigen::Index cell : cells) acc += std::exp(log_scale_draws[k](cell, j));
        per_draw[k] = acc / static_cast<double>(cells.size());
      }
      double mean = 0.0;
      for (double v : per_draw) mean += v;
      mean /= s;
      double var = 0.0;
      for (double v : per_draw) var += (v - mean) * (v - mean);
      var = (log_scale_draws.size() > 1) ? var / (s - 1.0) : 0.0;
      out.mean(g, j) = mean;
      out.se(g, j) = std::sqrt(var / s);
    }
  }
  return out;
}

}  // namespace censpatial
