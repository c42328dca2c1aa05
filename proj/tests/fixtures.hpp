// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

// Synthetic datasets drawn from the model itself, shared across test files.

#include <Eigen/Dense>
#include <limits>
#include <vector>

#include "censpatial/linalg.hpp"
#include "censpatial/metrics.hpp"
#include "censpatial/model.hpp"
#include "censpatial/rng.hpp"

namespace fixtures {

inline std::vector<censpatial::location> grid_locations(int nx, int ny, double spacing = 1.0) {
  std::vector<censpatial::location> locs;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      locs.push_back({spacing * static_cast<double>(i), spacing * static_cast<double>(j)});
    }
  }
  return locs;
}

// Field drawn from the hierarchical model: Y = X B + E + nugget.
inline Eigen::MatrixXd simulate_field(const std::vector<censpatial::location>& locs,
                                      const Eigen::MatrixXd& x,
                                      const censpatial::model_params& params,
                                      const censpatial::distance_metric& metric,
                                      censpatial::rng_stream& rng) {
  const Eigen::Index n = static_cast<Eigen::Index>(locs.size());
  const Eigen::Index p = params.beta.cols();
  censpatial::spd_matrix corr = censpatial::spatial_corr_matrix(locs, params.phi, metric);
  Eigen::MatrixXd row_eps = params.r * corr.mat();
  Eigen::MatrixXd eps = censpatial::sample_matrix_normal(
      Eigen::MatrixXd::Zero(n, p), censpatial::spd_matrix(std::move(row_eps)), params.sigma, rng);
  censpatial::cholesky_factor sigma_chol = censpatial::cholesky(params.sigma);
  Eigen::MatrixXd z(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) z(i, j) = rng.normal();
  }
  return x * params.beta + eps +
         std::sqrt(1.0 - params.r) * z * sigma_chol.lower().transpose();
}

// Dataset on a grid with variable 1 censored below its empirical percentile.
inline censpatial::spatial_dataset make_synthetic(int nx, int ny,
                                                  const censpatial::model_params& params,
                                                  double censor_percentile,
                                                  censpatial::rng_stream& rng,
                                                  double spacing = 1.0) {
  censpatial::spatial_dataset ds;
  ds.locations = grid_locations(nx, ny, spacing);
  const Eigen::Index n = static_cast<Eigen::Index>(ds.locations.size());
  const Eigen::Index p = params.beta.cols();
  ds.x = censpatial::make_design(ds.locations);
  const censpatial::distance_metric metric = censpatial::distance_metric::euclidean();
  ds.y = simulate_field(ds.locations, ds.x, params, metric, rng);
  ds.censored = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(n, p, false);
  ds.limits = Eigen::MatrixXd::Constant(n, p, std::numeric_limits<double>::quiet_NaN());
  for (Eigen::Index v = 0; v < p; ++v) {
    ds.variable_names.push_back("V" + std::to_string(v + 1));
  }
  if (censor_percentile > 0.0) {
    std::vector<double> v1(ds.y.col(0).data(), ds.y.col(0).data() + n);
    const double mdl = censpatial::empirical_quantile(v1, censor_percentile);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (ds.y(i, 0) < mdl) {
        ds.censored(i, 0) = true;
        ds.limits(i, 0) = mdl;
        ds.y(i, 0) = mdl - 0.1;
      }
    }
  }
  return ds;
}

inline censpatial::model_params small_truth(Eigen::Index p = 2) {
  censpatial::model_params t;
  t.beta = Eigen::MatrixXd::Zero(3, p);
  for (Eigen::Index v = 0; v < p; ++v) t.beta(0, v) = 2.0 + static_cast<double>(v);
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Identity(p, p);
  for (Eigen::Index a = 0; a < p; ++a) {
    for (Eigen::Index b = 0; b < p; ++b) sigma(a, b) = (a == b) ? 2.0 : 1.0;
  }
  t.sigma = censpatial::spd_matrix(sigma);
  t.phi = 2.0;
  t.r = 0.7;
  return t;
}

}  // namespace fixtures
