// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <vector>

#include "censpatial/errors.hpp"
#include "censpatial/geometry.hpp"

// Exploratory computations on the log scale: OLS residuals, pairwise
// correlations and the empirical semivariogram. Censored rows are excluded
// here; the sampler, not the EDA, handles censoring.

namespace censpatial {

// Natural log of values and detection limits. Observed (uncensored) values
// must be strictly positive; limits must be positive wherever censored.
inline void log_transform(Eigen::MatrixXd& values,
                          const Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>& censored,
                          Eigen::MatrixXd& limits) {
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
      if (censored(i, j)) {
        if (!(limits(i, j) > 0.0)) {
          throw ingest_error("non-positive detection limit at row " + std::to_string(i + 1));
        }
        limits(i, j) = std::log(limits(i, j));
        // placeholder strictly below the limit; the sampler re-imputes it
        values(i, j) = limits(i, j) - 0.1;
      } else {
        if (!(values(i, j) > 0.0)) {
          throw ingest_error("non-positive concentration at row " + std::to_string(i + 1) +
                             ", variable column " + std::to_string(j + 1));
        }
        values(i, j) = std::log(values(i, j));
        limits(i, j) = std::numeric_limits<double>::quiet_NaN();
      }
    }
  }
}

struct ols_fit_result {
  Eigen::MatrixXd coefficients;  // Q x P
  Eigen::MatrixXd residuals;     // rows x P
};

// Per-variable least squares of y on x via the normal equations.
inline ols_fit_result ols_fit(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  if (x.rows() != y.rows()) throw domain_error("ols_fit: row mismatch");
  if (x.rows() < x.cols()) throw error("numeric", "ols_fit: fewer rows than design columns");
  Eigen::MatrixXd xtx = x.transpose() * x;
  Eigen::LLT<Eigen::MatrixXd> llt(xtx);
  if (llt.info() != Eigen::Success) {
    throw error("numeric", "ols_fit: design matrix is rank deficient");
  }
  ols_fit_result out;
  out.coefficients = llt.solve(x.transpose() * y);
  out.residuals = y - x * out.coefficients;
  return out;
}

struct variogram_bins {
  std::vector<double> centers;
  double half_width = 0.0;
};

// 15 equal-width bins spanning (0, max pairwise distance / 2].
inline variogram_bins default_variogram_bins(const std::vector<location>& locs,
                                             const distance_metric& m,
                                             int n_bins = 15) {
  const double dmax = max_pairwise_distance(locs, m);
  variogram_bins bins;
  const double width = (dmax > 0.0 ? dmax / 2.0 : 1.0) / static_cast<double>(n_bins);
  bins.half_width = width / 2.0;
  for (int k = 0; k < n_bins; ++k) {
    bins.centers.push_back((static_cast<double>(k) + 0.5) * width);
  }
  return bins;
}

struct variogram_result {
  std::vector<double> center;
  std::vector<double> gamma;  // NaN marks an empty bin
  std::vector<long> n_pairs;
};

// gamma_hat(d) = (1 / 2N(d)) * sum_{i>j} w_ij(d) (y_i - y_j)^2 with
// w_ij(d) = 1 iff d_ij lies in the open window (d - h, d + h).
inline variogram_result semivariogram(const Eigen::VectorXd& values,
                                      const std::vector<location>& locs,
                                      const distance_metric& m,
                                      const variogram_bins& bins) {
  if (static_cast<std::size_t>(values.size()) != locs.size()) {
    throw domain_error("semivariogram: values/locations size mismatch");
  }
  if (locs.size() < 2) throw domain_error("semivariogram: need at least 2 locations");
  if (!(bins.half_width > 0.0)) throw domain_error("semivariogram: half-width must be > 0");
  variogram_result out;
  out.center = bins.centers;
  out.gamma.assign(bins.centers.size(), std::numeric_limits<double>::quiet_NaN());
  out.n_pairs.assign(bins.centers.size(), 0);
  std::vector<double> sums(bins.centers.size(), 0.0);
  for (std::size_t i = 0; i < locs.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      const double dij = distance(locs[i], locs[j], m);
      const double sq = (values(static_cast<Eigen::Index>(i)) -
                         values(static_cast<Eigen::Index>(j))) *
                        (values(static_cast<Eigen::Index>(i)) -
                         values(static_cast<Eigen::Index>(j)));
      for (std::size_t b = 0; b < bins.centers.size(); ++b) {
        if (dij > bins.centers[b] - bins.half_width &&
            dij < bins.centers[b] + bins.half_width) {
          sums[b] += sq;
          ++out.n_pairs[b];
        }
      }
    }
  }
  for (std::size_t b = 0; b < bins.centers.size(); ++b) {
    if (out.n_pairs[b] > 0) {
      out.gamma[b] = sums[b] / (2.0 * static_cast<double>(out.n_pairs[b]));
    }
  }
  return out;
}

// Pearson correlations with unit diagonal; zero-variance columns yield NaN
// off-diagonal entries.
inline Eigen::MatrixXd pairwise_correlations(const Eigen::MatrixXd& residuals) {
  const Eigen::Index n = residuals.rows();
  const Eigen::Index p = residuals.cols();
  if (n < 2) throw domain_error("pairwise_correlations: need at least 2 rows");
  Eigen::RowVectorXd mean = residuals.colwise().mean();
  Eigen::MatrixXd centered = residuals.rowwise() - mean;
  Eigen::VectorXd sd(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    sd(j) = std::sqrt(centered.col(j).squaredNorm() / static_cast<double>(n - 1));
  }
  Eigen::MatrixXd corr = Eigen::MatrixXd::Identity(p, p);
  for (Eigen::Index a = 0; a < p; ++a) {
    for (Eigen::Index b = 0; b < a; ++b) {
      double value = std::numeric_limits<double>::quiet_NaN();
      if (sd(a) > 0.0 && sd(b) > 0.0) {
        value = centered.col(a).dot(centered.col(b)) /
                (static_cast<double>(n - 1) * sd(a) * sd(b));
      }
      corr(a, b) = value;
      corr(b, a) = value;
    }
  }
  return corr;
}

}  // namespace censpatial
