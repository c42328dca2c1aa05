// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <iostream>
#include <utility>

#include "censpatial/errors.hpp"
#include "censpatial/rng.hpp"

// Structured linear algebra and random-variate primitives shared by the
// model, sampler and prediction code. Vectorization convention throughout:
// an N x P data matrix stores one location per row and one variable per
// column, and its row-stacked vector has covariance row_cov (x) col_cov
// (spatial factor first). Nothing here ever materializes that NP x NP
// Kronecker product.

namespace censpatial {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

// Symmetric positive definite matrix. Construction checks symmetry;
// positive definiteness is established by the first successful cholesky().
class spd_matrix {
 public:
  spd_matrix() = default;

  explicit spd_matrix(Eigen::MatrixXd m) : m_(std::move(m)) {
    if (m_.rows() != m_.cols()) {
      throw domain_error("spd_matrix: matrix must be square");
    }
    const double scale = m_.cwiseAbs().maxCoeff();
    const double tol = 1e-10 * (scale > 0.0 ? scale : 1.0);
    if (((m_ - m_.transpose()).cwiseAbs().maxCoeff()) > tol) {
      throw domain_error("spd_matrix: matrix not symmetric within tolerance");
    }
    // exact symmetry downstream
    m_ = ((m_ + m_.transpose()) / 2.0).eval();
  }

  Eigen::Index dim() const { return m_.rows(); }
  const Eigen::MatrixXd& mat() const { return m_; }

 private:
  Eigen::MatrixXd m_;
};

// Lower-triangular factor L with L L^T = M.
class cholesky_factor {
 public:
  cholesky_factor() = default;
  explicit cholesky_factor(Eigen::MatrixXd lower) : l_(std::move(lower)) {}

  Eigen::Index dim() const { return l_.rows(); }
  const Eigen::MatrixXd& lower() const { return l_; }

  // log det of the factored matrix M (not of L)
  double log_det() const { return 2.0 * l_.diagonal().array().log().sum(); }

  // L^-1 B
  Eigen::MatrixXd forward_solve(const Eigen::MatrixXd& b) const {
    return l_.triangularView<Eigen::Lower>().solve(b);
  }

  // B L^-T
  Eigen::MatrixXd right_transpose_solve(const Eigen::MatrixXd& b) const {
    return l_.triangularView<Eigen::Lower>()
        .transpose()
        .solve(b.transpose())
        .transpose();
  }

  // M^-1 B via two triangular solves
  Eigen::MatrixXd solve(const Eigen::MatrixXd& b) const {
    Eigen::MatrixXd y = l_.triangularView<Eigen::Lower>().solve(b);
    return l_.triangularView<Eigen::Lower>().transpose().solve(y);
  }

  Eigen::MatrixXd inverse() const {
    return solve(Eigen::MatrixXd::Identity(l_.rows(), l_.rows()));
  }

 private:
  Eigen::MatrixXd l_;
};

namespace detail {

// Plain O(n^3/3) Cholesky that reports the first non-positive pivot. Only
// used on the failure path; the hot path goes through Eigen's LLT.
inline int first_bad_pivot(const Eigen::MatrixXd& m) {
  const Eigen::Index n = m.rows();
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double d = m(j, j) - l.row(j).head(j).squaredNorm();
    if (!(d > 0.0) || !std::isfinite(d)) return static_cast<int>(j);
    l(j, j) = std::sqrt(d);
    for (Eigen::Index i = j + 1; i < n; ++i) {
      l(i, j) = (m(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / l(j, j);
    }
  }
  return -1;
}

}  // namespace detail

inline cholesky_factor cholesky(const Eigen::MatrixXd& m) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) {
    int pivot = detail::first_bad_pivot(m);
    throw not_positive_definite(pivot >= 0 ? pivot : static_cast<int>(m.rows()) - 1);
  }
  return cholesky_factor(llt.matrixL());
}

inline cholesky_factor cholesky(const spd_matrix& m) { return cholesky(m.mat()); }

// Factorization with a diagonal jitter ladder as a last resort. Each rung is
// logged to stderr; anything needing this is numerically borderline input.
inline cholesky_factor cholesky_with_jitter(const Eigen::MatrixXd& m,
                                            const char* context = "cholesky") {
  try {
    return cholesky(m);
  } catch (const not_positive_definite&) {
  }
  for (double jitter : {1e-10, 1e-8, 1e-6}) {
    try {
      Eigen::MatrixXd jittered = m;
      jittered.diagonal().array() += jitter;
      cholesky_factor f = cholesky(jittered);
      std::cerr << "warning: " << context << ": applied diagonal jitter " << jitter
                << " to obtain a positive definite factorization\n";
      return f;
    } catch (const not_positive_definite&) {
    }
  }
  throw not_positive_definite(0, std::string(context) + " (after jitter ladder)");
}

// Log density of the zero-mean NP-variate normal with covariance
// row_cov (x) col_cov, evaluated at the row-stacked vector of `data`
// (N x P). Uses the matrix-normal identity
//   -NP/2 log 2pi - P/2 log|U| - N/2 log|V| - 1/2 ||L_U^-1 X L_V^-T||_F^2.
inline double separable_mvn_logpdf(const Eigen::MatrixXd& data,
                                   const cholesky_factor& row_chol,
                                   const cholesky_factor& col_chol) {
  const double n = static_cast<double>(data.rows());
  const double p = static_cast<double>(data.cols());
  Eigen::MatrixXd w = row_chol.forward_solve(data);
  Eigen::MatrixXd z = col_chol.forward_solve(w.transpose());
  return -0.5 * n * p * std::log(kTwoPi) - 0.5 * p * row_chol.log_det() -
         0.5 * n * col_chol.log_det() - 0.5 * z.squaredNorm();
}

inline double separable_mvn_logpdf(const Eigen::MatrixXd& data,
                                   const spd_matrix& row_cov,
                                   const spd_matrix& col_cov) {
  if (data.rows() != row_cov.dim() || data.cols() != col_cov.dim()) {
    throw domain_error("separable_mvn_logpdf: dimension mismatch");
  }
  return separable_mvn_logpdf(data, cholesky(row_cov), cholesky(col_cov));
}

// Matrix-normal draw mean + A Z L_V^T where A A^T = U. The general entry
// point factorizes U itself; kernels with a pre-factored square root use the
// cholesky overload.
inline Eigen::MatrixXd sample_matrix_normal(const Eigen::MatrixXd& mean,
                                            const cholesky_factor& row_chol,
                                            const cholesky_factor& col_chol,
                                            rng_stream& rng) {
  Eigen::MatrixXd z(mean.rows(), mean.cols());
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    for (Eigen::Index j = 0; j < z.cols(); ++j) z(i, j) = rng.normal();
  }
  return mean + row_chol.lower() * z * col_chol.lower().transpose();
}

inline Eigen::MatrixXd sample_matrix_normal(const Eigen::MatrixXd& mean,
                                            const spd_matrix& row_cov,
                                            const spd_matrix& col_cov,
                                            rng_stream& rng) {
  if (mean.rows() != row_cov.dim() || mean.cols() != col_cov.dim()) {
    throw domain_error("sample_matrix_normal: dimension mismatch");
  }
  return sample_matrix_normal(mean, cholesky(row_cov), cholesky(col_cov), rng);
}

// Inverse-Wishart(df, scale) draw via the Bartlett decomposition of the
// corresponding Wishart(df, scale^-1). With L = chol(scale) and A the
// Bartlett lower-triangular factor, the draw is M M^T where M solves
// M A^T = L; SPD by construction.
inline spd_matrix sample_inverse_wishart(double df, const spd_matrix& scale,
                                         rng_stream& rng) {
  const Eigen::Index p = scale.dim();
  if (!(df > static_cast<double>(p) - 1.0)) {
    throw domain_error("sample_inverse_wishart: df must exceed dim - 1");
  }
  cholesky_factor scale_chol = cholesky(scale);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index i = 0; i < p; ++i) {
    a(i, i) = std::sqrt(rng.chi_squared(df - static_cast<double>(i)));
    for (Eigen::Index j = 0; j < i; ++j) a(i, j) = rng.normal();
  }
  // M A^T = L  =>  M = L A^-T and M M^T ~ IW(df, scale)
  Eigen::MatrixXd m = a.triangularView<Eigen::Lower>()
                          .solve(scale_chol.lower().transpose())
                          .transpose();
  Eigen::MatrixXd w = m * m.transpose();
  return spd_matrix(((w + w.transpose()) / 2.0).eval());
}

// Draw from Normal(mean, sd^2) conditioned on the value being < upper.
// Moderate truncation uses the inverse CDF; once the standardized bound
// drops below -4 that loses precision, so the deep tail switches to the
// exponential-proposal rejection sampler of Robert (1995).
inline double sample_truncated_normal_upper(double mean, double sd, double upper,
                                            rng_stream& rng) {
  if (!(sd > 0.0)) throw domain_error("sample_truncated_normal_upper: sd must be > 0");
  const double alpha = (upper - mean) / sd;
  if (alpha < -4.0) {
    const double a = -alpha;  // sample z > a, return the mirror image
    const double lambda = 0.5 * (a + std::sqrt(a * a + 4.0));
    for (;;) {
      const double z = a + rng.exponential() / lambda;
      const double d = z - lambda;
      if (rng.uniform_open() <= std::exp(-0.5 * d * d)) return mean - sd * z;
    }
  }
  const double cap = standard_normal_cdf(alpha);
  const double u = rng.uniform_open() * cap;
  return mean + sd * standard_normal_quantile(u);
}

inline double sample_truncated_normal_lower(double mean, double sd, double lower,
                                            rng_stream& rng) {
  return -sample_truncated_normal_upper(-mean, sd, -lower, rng);
}

}  // namespace censpatial
