// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "censpatial/errors.hpp"
#include "censpatial/geometry.hpp"
#include "censpatial/linalg.hpp"

// Model types and deterministic covariance construction. The response model
// is, per variable p and location s,
//   Y_p(s) = X(s)' beta_p + eps_p(s) + eta_p(s),
// where eps is a P-variate Gaussian process with separable exponential
// cross-correlation r * Sigma_{p1,p2} * exp(-d/phi) and eta is an iid
// P-variate nugget with covariance (1-r) * Sigma. Marginally the row-stacked
// data vector is normal with covariance
//   [r * C + (1-r) * I_N] (x) Sigma,   C_ij = exp(-d_ij / phi).

namespace censpatial {

struct spatial_dataset {
  std::vector<location> locations;                       // N
  Eigen::MatrixXd y;                                     // N x P, log scale
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> censored;  // N x P
  Eigen::MatrixXd limits;                                // N x P, log scale; valid where censored
  Eigen::MatrixXd x;                                     // N x Q design
  std::vector<std::string> variable_names;               // P

  Eigen::Index n() const { return y.rows(); }
  Eigen::Index p() const { return y.cols(); }
  Eigen::Index q() const { return x.cols(); }

  long censored_count(Eigen::Index var) const {
    long c = 0;
    for (Eigen::Index i = 0; i < n(); ++i) {
      if (censored(i, var)) ++c;
    }
    return c;
  }

  long censored_count() const {
    long c = 0;
    for (Eigen::Index v = 0; v < p(); ++v) c += censored_count(v);
    return c;
  }

  // (row, variable) pairs in row-major order; fixes the imputation-trace
  // column order.
  std::vector<std::pair<Eigen::Index, Eigen::Index>> censored_cells() const {
    std::vector<std::pair<Eigen::Index, Eigen::Index>> cells;
    for (Eigen::Index i = 0; i < n(); ++i) {
      for (Eigen::Index v = 0; v < p(); ++v) {
        if (censored(i, v)) cells.emplace_back(i, v);
      }
    }
    return cells;
  }

  std::vector<Eigen::Index> fully_observed_rows() const {
    std::vector<Eigen::Index> rows;
    for (Eigen::Index i = 0; i < n(); ++i) {
      if (!censored.row(i).any()) rows.push_back(i);
    }
    return rows;
  }
};

struct model_params {
  Eigen::MatrixXd beta;  // Q x P; entry (q, p) multiplies covariate q for variable p
  spd_matrix sigma;      // P x P cross-covariance
  double phi = 1.0;      // correlation range, > 0
  double r = 0.5;        // spatial-to-total variance ratio, in (0, 1)
};

struct hyperpriors {
  double beta_prior_sd = 100.0;
  double iw_df = 0.01;
  double iw_scale_mult = 0.01;
  double phi_max = 0.0;  // resolved before fitting: fraction of the max pairwise distance

  void validate() const {
    if (!(beta_prior_sd > 0.0) || !(iw_df > 0.0) || !(iw_scale_mult > 0.0) ||
        !(phi_max > 0.0)) {
      throw domain_error("hyperpriors: all fields must be positive (phi_max must be resolved)");
    }
  }
};

// C_ij = exp(-d_ij / phi); unit diagonal.
inline spd_matrix spatial_corr_matrix(const Eigen::MatrixXd& distances, double phi) {
  if (!(phi > 0.0)) throw domain_error("spatial_corr_matrix: phi must be > 0");
  return spd_matrix((-distances / phi).array().exp().matrix());
}

inline spd_matrix spatial_corr_matrix(const std::vector<location>& locs, double phi,
                                      const distance_metric& m) {
  return spatial_corr_matrix(distance_matrix(locs, m), phi);
}

// Kronecker factors of the marginal covariance of Y:
// row factor r*C + (1-r)*I_N (unit diagonal), column factor Sigma.
inline std::pair<spd_matrix, spd_matrix> marginal_covariance_factors(
    const model_params& params, const std::vector<location>& locs,
    const distance_metric& m) {
  spd_matrix corr = spatial_corr_matrix(locs, params.phi, m);
  const Eigen::Index n = corr.dim();
  Eigen::MatrixXd row = params.r * corr.mat() +
                        (1.0 - params.r) * Eigen::MatrixXd::Identity(n, n);
  return {spd_matrix(std::move(row)), params.sigma};
}

// [1, lon, lat]
inline Eigen::VectorXd design_row(const location& loc) {
  Eigen::VectorXd row(3);
  row << 1.0, loc.lon, loc.lat;
  return row;
}

struct design_scaling {
  double lon_center = 0.0, lon_scale = 1.0;
  double lat_center = 0.0, lat_scale = 1.0;
};

// Centering/scaling constants making the coordinate columns mean zero and
// variance one (n-1 denominator) over `locs`.
inline design_scaling design_scaling_from(const std::vector<location>& locs) {
  const double n = static_cast<double>(locs.size());
  if (locs.size() < 2) throw domain_error("design_scaling_from: need at least 2 locations");
  design_scaling s;
  double mlon = 0.0, mlat = 0.0;
  for (const auto& l : locs) {
    mlon += l.lon;
    mlat += l.lat;
  }
  mlon /= n;
  mlat /= n;
  double vlon = 0.0, vlat = 0.0;
  for (const auto& l : locs) {
    vlon += (l.lon - mlon) * (l.lon - mlon);
    vlat += (l.lat - mlat) * (l.lat - mlat);
  }
  vlon /= (n - 1.0);
  vlat /= (n - 1.0);
  if (!(vlon > 0.0) || !(vlat > 0.0)) {
    throw domain_error("design_scaling_from: degenerate coordinate column");
  }
  s.lon_center = mlon;
  s.lat_center = mlat;
  s.lon_scale = std::sqrt(vlon);
  s.lat_scale = std::sqrt(vlat);
  return s;
}

inline Eigen::VectorXd design_row_scaled(const location& loc, const design_scaling& s) {
  Eigen::VectorXd row(3);
  row << 1.0, (loc.lon - s.lon_center) / s.lon_scale, (loc.lat - s.lat_center) / s.lat_scale;
  return row;
}

inline Eigen::MatrixXd make_design(const std::vector<location>& locs) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(locs.size()), 3);
  for (std::size_t i = 0; i < locs.size(); ++i) {
    x.row(static_cast<Eigen::Index>(i)) = design_row(locs[i]).transpose();
  }
  return x;
}

inline Eigen::MatrixXd make_design_scaled(const std::vector<location>& locs,
                                          const design_scaling& s) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(locs.size()), 3);
  for (std::size_t i = 0; i < locs.size(); ++i) {
    x.row(static_cast<Eigen::Index>(i)) = design_row_scaled(locs[i], s).transpose();
  }
  return x;
}

// Duplicate data locations make the spatial correlation matrix rank
// deficient; the ingester rejects them up front.
inline void check_distinct_locations(const std::vector<location>& locs) {
  for (std::size_t i = 0; i < locs.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (locs[i].lon == locs[j].lon && locs[i].lat == locs[j].lat) {
        throw ingest_error("duplicate coordinates at rows " + std::to_string(j + 1) +
                           " and " + std::to_string(i + 1));
      }
    }
  }
}

}  // namespace censpatial
