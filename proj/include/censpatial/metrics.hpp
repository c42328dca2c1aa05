// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "censpatial/errors.hpp"

// Scoring for the simulation study and cross-validation: per-replicate
// absolute estimation error, sample CRPS, and prediction-interval coverage.

namespace censpatial {

// Empirical quantile with linear interpolation of order statistics
// (the same convention everywhere in this project).
inline double empirical_quantile(std::vector<double> sorted_or_not, double prob) {
  if (sorted_or_not.empty()) throw domain_error("empirical_quantile: empty sample");
  if (!(prob >= 0.0 && prob <= 1.0)) throw domain_error("empirical_quantile: prob outside [0,1]");
  std::sort(sorted_or_not.begin(), sorted_or_not.end());
  const std::size_t n = sorted_or_not.size();
  if (n == 1) return sorted_or_not[0];
  const double h = prob * static_cast<double>(n - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, n - 1);
  const double w = h - std::floor(h);
  return (1.0 - w) * sorted_or_not[lo] + w * sorted_or_not[hi];
}

struct score_with_se {
  double value = 0.0;
  double se = 0.0;
};

// Mean absolute error of per-replicate estimates against a scalar truth,
// with the standard error of that mean across replicates.
inline score_with_se rmse(const std::vector<double>& estimates, double truth) {
  if (estimates.empty()) throw domain_error("rmse: need at least one replicate");
  const std::size_t k = estimates.size();
  std::vector<double> abs_err(k);
  double mean = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    abs_err[i] = std::fabs(estimates[i] - truth);
    mean += abs_err[i];
  }
  mean /= static_cast<double>(k);
  double var = 0.0;
  for (double e : abs_err) var += (e - mean) * (e - mean);
  score_with_se out;
  out.value = mean;
  out.se = (k > 1) ? std::sqrt(var / static_cast<double>(k - 1) / static_cast<double>(k)) : 0.0;
  return out;
}

// Sample CRPS: (1/S) sum |X_i - y| - (1/2S^2) sum_ij |X_i - X_j|, which is
// the exact integral of (F_S(x) - 1{y <= x})^2 for the empirical CDF F_S.
// The pairwise double sum is evaluated in O(S log S) via the sorted identity
// sum_ij |X_i - X_j| = 2 * sum_i (2i - S - 1) X_(i).
inline double crps_sample(const std::vector<double>& ensemble, double y) {
  if (ensemble.empty()) throw domain_error("crps_sample: empty ensemble");
  const std::size_t s = ensemble.size();
  std::vector<double> sorted = ensemble;
  std::sort(sorted.begin(), sorted.end());
  double term1 = 0.0;
  double pair_sum = 0.0;
  for (std::size_t i = 0; i < s; ++i) {
    term1 += std::fabs(sorted[i] - y);
    pair_sum += (2.0 * static_cast<double>(i + 1) - static_cast<double>(s) - 1.0) * sorted[i];
  }
  pair_sum *= 2.0;
  return term1 / static_cast<double>(s) -
         pair_sum / (2.0 * static_cast<double>(s) * static_cast<double>(s));
}

// Fraction of truths inside the central `level` interval of their ensemble
// (closed endpoints, interpolated empirical quantiles).
inline double interval_coverage(const Eigen::MatrixXd& draws,  // S x T
                                const Eigen::VectorXd& truths, double level) {
  if (draws.rows() < 2) throw domain_error("interval_coverage: need at least 2 draws");
  if (draws.cols() != truths.size()) throw domain_error("interval_coverage: draws/truths mismatch");
  if (!(level > 0.0 && level < 1.0)) throw domain_error("interval_coverage: level in (0,1)");
  const double lo_p = (1.0 - level) / 2.0;
  const double hi_p = (1.0 + level) / 2.0;
  long covered = 0;
  for (Eigen::Index t = 0; t < draws.cols(); ++t) {
    std::vector<double> col(draws.col(t).data(), draws.col(t).data() + draws.rows());
    const double lo = empirical_quantile(col, lo_p);
    const double hi = empirical_quantile(col, hi_p);
    if (truths(t) >= lo && truths(t) <= hi) ++covered;
  }
  return static_cast<double>(covered) / static_cast<double>(draws.cols());
}

}  // namespace censpatial
