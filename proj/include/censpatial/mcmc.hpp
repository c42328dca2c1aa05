// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "censpatial/errors.hpp"
#include "censpatial/linalg.hpp"
#include "censpatial/model.hpp"
#include "censpatial/rng.hpp"

// Adaptive Metropolis-within-Gibbs sampler. One sweep runs, in order,
//   impute_censored -> update_beta -> update_sigma -> update_epsilon
//   -> update_phi -> update_r
// so every Gibbs step sees fully populated data. beta, Sigma and epsilon
// have conjugate matrix-variate full conditionals; phi and r move by
// logit-scale random walks whose step sizes are tuned during burn-in to a
// target acceptance rate and frozen afterwards. Censored cells are redrawn
// from their univariate truncated-normal full conditionals.

namespace censpatial {

struct mcmc_config {
  long n_iter = 70000;
  long burn_in = 20000;
  long thin = 5;
  double adapt_target = 0.40;  // aimed at the [0.3, 0.5] acceptance band
  long adapt_window = 100;
  double adapt_kappa = 1.0;
  double init_step_sd = 0.5;
  std::uint64_t seed = 1;
  bool nu_includes_predictions = false;
  long prediction_count = 0;  // M, only consulted when the flag above is set
  bool store_epsilon = true;

  void validate() const {
    if (n_iter <= 0 || burn_in < 0 || burn_in >= n_iter) {
      throw config_error("mcmc: need 0 <= burn_in < n_iter");
    }
    if (thin < 1) throw config_error("mcmc: thin must be >= 1");
    if (adapt_window < 1) throw config_error("mcmc: adapt_window must be >= 1");
    if (!(adapt_target > 0.0 && adapt_target < 1.0)) {
      throw config_error("mcmc: adapt_target must lie in (0,1)");
    }
    if (!(init_step_sd > 0.0)) throw config_error("mcmc: init_step_sd must be > 0");
  }

  long stored_draws() const { return (n_iter - burn_in) / thin; }
};

struct posterior_samples {
  std::vector<long> iterations;
  std::vector<Eigen::MatrixXd> beta;   // Q x P
  std::vector<Eigen::MatrixXd> sigma;  // P x P
  std::vector<double> phi;
  std::vector<double> r;
  std::vector<int> accept_phi;  // indicator for the stored iteration
  std::vector<int> accept_r;
  std::vector<Eigen::VectorXd> imputed;  // one entry per censored cell, in cell order
  std::vector<Eigen::MatrixXd> epsilon;  // present iff store_epsilon
  std::vector<std::pair<Eigen::Index, Eigen::Index>> censored_cells;

  std::size_t size() const { return phi.size(); }
};

struct chain_diagnostics {
  double accept_rate_phi = 0.0;  // post-burn-in
  double accept_rate_r = 0.0;
  double burnin_accept_rate_phi = 0.0;
  double burnin_accept_rate_r = 0.0;
  double final_step_sd_phi = 0.0;
  double final_step_sd_r = 0.0;
  long n_iter = 0;
  long burn_in = 0;
  long thin = 0;
};

struct fit_result {
  posterior_samples samples;
  chain_diagnostics diagnostics;
};

struct matrix_normal_conditional {
  Eigen::MatrixXd mean;
  Eigen::MatrixXd row_cov;  // column covariance is always Sigma
};

struct inverse_wishart_params {
  double df = 0.0;
  Eigen::MatrixXd scale;
};

struct truncated_conditional {
  double mean = 0.0;
  double variance = 0.0;
};

// B | rest is matrix-normal with row covariance G^-1, column covariance
// Sigma, and mean G^-1 X'(Y - E)/(1-r), where
// G = X'X/(1-r) + I_Q / prior_sd^2.
inline matrix_normal_conditional beta_full_conditional(const Eigen::MatrixXd& x,
                                                       const Eigen::MatrixXd& y_minus_eps,
                                                       double r, double prior_sd) {
  const Eigen::Index q = x.cols();
  Eigen::MatrixXd g = x.transpose() * x / (1.0 - r) +
                      Eigen::MatrixXd::Identity(q, q) / (prior_sd * prior_sd);
  cholesky_factor g_chol = cholesky(((g + g.transpose()) / 2.0).eval());
  matrix_normal_conditional out;
  out.mean = g_chol.solve(x.transpose() * y_minus_eps) / (1.0 - r);
  out.row_cov = g_chol.inverse();
  out.row_cov = ((out.row_cov + out.row_cov.transpose()) / 2.0).eval();
  return out;
}

// Sigma | rest ~ Inverse-Wishart(nu, Psi) with
//   nu  = iw_df + 2N + Q (+ extra_df when predictions are folded in) and
//   Psi = iw_scale_mult I + R'R/(1-r) + E'C^-1 E/r + B'B/prior_sd^2,
// R = Y - XB - E and C the spatial correlation matrix.
inline inverse_wishart_params sigma_full_conditional(
    const Eigen::MatrixXd& y, const Eigen::MatrixXd& x, const Eigen::MatrixXd& beta,
    const Eigen::MatrixXd& eps, const cholesky_factor& corr_chol, double r,
    const hyperpriors& hyper, double extra_df = 0.0) {
  const Eigen::Index n = y.rows();
  const Eigen::Index p = y.cols();
  const Eigen::Index q = x.cols();
  Eigen::MatrixXd resid = y - x * beta - eps;
  Eigen::MatrixXd w = corr_chol.forward_solve(eps);  // E' C^-1 E = W'W
  inverse_wishart_params out;
  out.df = hyper.iw_df + 2.0 * static_cast<double>(n) + static_cast<double>(q) + extra_df;
  out.scale = hyper.iw_scale_mult * Eigen::MatrixXd::Identity(p, p) +
              resid.transpose() * resid / (1.0 - r) + w.transpose() * w / r +
              beta.transpose() * beta / (hyper.beta_prior_sd * hyper.beta_prior_sd);
  out.scale = ((out.scale + out.scale.transpose()) / 2.0).eval();
  return out;
}

// E | rest is matrix-normal with row covariance K^-1,
// K = (1-r)^-1 I + r^-1 C^-1, column covariance Sigma, and mean
// (1-r)^-1 K^-1 (Y - XB).
inline matrix_normal_conditional epsilon_full_conditional(const Eigen::MatrixXd& y,
                                                          const Eigen::MatrixXd& x,
                                                          const Eigen::MatrixXd& beta,
                                                          const Eigen::MatrixXd& corr_inv,
                                                          double r) {
  const Eigen::Index n = y.rows();
  Eigen::MatrixXd k = Eigen::MatrixXd::Identity(n, n) / (1.0 - r) + corr_inv / r;
  cholesky_factor k_chol = cholesky(((k + k.transpose()) / 2.0).eval());
  matrix_normal_conditional out;
  out.mean = k_chol.solve(y - x * beta) / (1.0 - r);
  out.row_cov = k_chol.inverse();
  out.row_cov = ((out.row_cov + out.row_cov.transpose()) / 2.0).eval();
  return out;
}

// Truncated-normal full conditional of one censored cell, conditioning on
// the other P-1 variables observed at the same site:
//   mean = mu_p + eps_p + Sigma_{p,-p} Sigma_{-p,-p}^-1 (y_-p - mu_-p - eps_-p)
//   var  = (1-r) (Sigma_{p,p} - Sigma_{p,-p} Sigma_{-p,-p}^-1 Sigma_{-p,p})
inline truncated_conditional censored_cell_conditional(const Eigen::MatrixXd& sigma,
                                                       double r,
                                                       const Eigen::VectorXd& site_mean,
                                                       const Eigen::VectorXd& eps_row,
                                                       const Eigen::VectorXd& y_row,
                                                       Eigen::Index var) {
  const Eigen::Index p = sigma.rows();
  truncated_conditional out;
  if (p == 1) {
    out.mean = site_mean(0) + eps_row(0);
    out.variance = (1.0 - r) * sigma(0, 0);
    return out;
  }
  Eigen::MatrixXd others_cov(p - 1, p - 1);
  Eigen::VectorXd cross(p - 1);
  Eigen::VectorXd resid(p - 1);
  Eigen::Index a = 0;
  for (Eigen::Index i = 0; i < p; ++i) {
    if (i == var) continue;
    cross(a) = sigma(var, i);
    resid(a) = y_row(i) - site_mean(i) - eps_row(i);
    Eigen::Index b = 0;
    for (Eigen::Index j = 0; j < p; ++j) {
      if (j == var) continue;
      others_cov(a, b) = sigma(i, j);
      ++b;
    }
    ++a;
  }
  Eigen::LLT<Eigen::MatrixXd> llt(others_cov);
  if (llt.info() != Eigen::Success) {
    throw not_positive_definite(0, "censored_cell_conditional");
  }
  Eigen::VectorXd w = llt.solve(cross);
  out.mean = site_mean(var) + eps_row(var) + w.dot(resid);
  out.variance = (1.0 - r) * (sigma(var, var) - w.dot(cross));
  if (!(out.variance > 0.0)) {
    throw not_positive_definite(static_cast<int>(var), "censored_cell_conditional variance");
  }
  return out;
}

// Multiplicative Robbins-Monro step-size update, clamped to [1e-4, 10].
inline double adapted_step_sd(double current, double observed_rate, double target,
                              double kappa = 1.0) {
  const double updated = current * std::exp(kappa * (observed_rate - target));
  return std::clamp(updated, 1e-4, 10.0);
}

namespace detail {

inline double logit(double u) { return std::log(u / (1.0 - u)); }

inline double expit(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

// log density of the zero-mean matrix normal with row covariance s*C and
// column covariance Sigma, given chol(C) and chol(Sigma).
inline double scaled_separable_logpdf(const Eigen::MatrixXd& value,
                                      const cholesky_factor& corr_chol,
                                      const cholesky_factor& sigma_chol, double s) {
  const double n = static_cast<double>(value.rows());
  const double p = static_cast<double>(value.cols());
  Eigen::MatrixXd w = corr_chol.forward_solve(value);
  Eigen::MatrixXd z = sigma_chol.forward_solve(w.transpose());
  return -0.5 * n * p * std::log(kTwoPi) -
         0.5 * p * (n * std::log(s) + corr_chol.log_det()) -
         0.5 * n * sigma_chol.log_det() - 0.5 * z.squaredNorm() / s;
}

}  // namespace detail

class chain {
 public:
  chain(const spatial_dataset& data, const distance_metric& metric,
        const hyperpriors& hyper, const mcmc_config& cfg)
      : data_(&data),
        hyper_(hyper),
        cfg_(cfg),
        rng_(cfg.seed),
        dist_(distance_matrix(data.locations, metric)),
        cells_(data.censored_cells()) {
    cfg_.validate();
    hyper_.validate();
    if (data.n() < 1 || data.p() < 1 || data.q() < 1) {
      throw domain_error("chain: empty dataset");
    }
    step_sd_phi_ = cfg_.init_step_sd;
    step_sd_r_ = cfg_.init_step_sd;
    initialize_state();
  }

  const model_params& params() const { return params_; }
  const Eigen::MatrixXd& epsilon() const { return eps_; }
  const Eigen::MatrixXd& completed_y() const { return y_; }
  double step_sd_phi() const { return step_sd_phi_; }
  double step_sd_r() const { return step_sd_r_; }
  rng_stream& rng() { return rng_; }
  const std::vector<std::pair<Eigen::Index, Eigen::Index>>& censored_cells() const {
    return cells_;
  }

  void set_state(const model_params& params, const Eigen::MatrixXd& eps,
                 const Eigen::MatrixXd& completed_y) {
    if (eps.rows() != data_->n() || eps.cols() != data_->p() ||
        completed_y.rows() != data_->n() || completed_y.cols() != data_->p() ||
        params.beta.rows() != data_->q() || params.beta.cols() != data_->p()) {
      throw domain_error("chain::set_state: dimension mismatch");
    }
    if (!(params.phi > 0.0 && params.phi < hyper_.phi_max)) {
      throw domain_error("chain::set_state: phi outside (0, phi_max)");
    }
    if (!(params.r > 0.0 && params.r < 1.0)) {
      throw domain_error("chain::set_state: r outside (0, 1)");
    }
    params_ = params;
    eps_ = eps;
    y_ = completed_y;
    rebuild_spatial_cache();
    rebuild_sigma_cache();
    refresh_mean();
  }

  void set_step_sds(double phi_sd, double r_sd) {
    step_sd_phi_ = phi_sd;
    step_sd_r_ = r_sd;
  }

  // Redraw every censored cell from its truncated-normal full conditional.
  // Cells are swept in row-major order, so several censored variables at one
  // site condition on each other sequentially.
  void impute_censored() {
    for (const auto& [i, v] : cells_) {
      truncated_conditional cond = censored_cell_conditional(
          params_.sigma.mat(), params_.r, mean_.row(i).transpose(),
          eps_.row(i).transpose(), y_.row(i).transpose(), v);
      y_(i, v) = sample_truncated_normal_upper(cond.mean, std::sqrt(cond.variance),
                                               data_->limits(i, v), rng_);
    }
  }

  void update_beta() {
    matrix_normal_conditional cond =
        beta_full_conditional(data_->x, y_ - eps_, params_.r, hyper_.beta_prior_sd);
    params_.beta = sample_matrix_normal(cond.mean, cholesky(cond.row_cov), sigma_chol_, rng_);
    refresh_mean();
  }

  void update_sigma() {
    const double extra =
        cfg_.nu_includes_predictions ? 2.0 * static_cast<double>(cfg_.prediction_count) : 0.0;
    inverse_wishart_params iw = sigma_full_conditional(
        y_, data_->x, params_.beta, eps_, corr_chol_, params_.r, hyper_, extra);
    params_.sigma = sample_inverse_wishart(iw.df, spd_matrix(iw.scale), rng_);
    rebuild_sigma_cache();
  }

  // Draw E from its matrix-normal full conditional without forming K^-1:
  // with K = (1-r)^-1 I + r^-1 C^-1 and L_K = chol(K), the draw is
  // K^-1 (Y - XB)/(1-r) + L_K^-T Z L_Sigma^T.
  void update_epsilon() {
    const Eigen::Index n = data_->n();
    const Eigen::Index p = data_->p();
    Eigen::MatrixXd k = Eigen::MatrixXd::Identity(n, n) / (1.0 - params_.r) +
                        corr_inv_ / params_.r;
    cholesky_factor k_chol = cholesky(((k + k.transpose()) / 2.0).eval());
    Eigen::MatrixXd mean = k_chol.solve(y_ - mean_) / (1.0 - params_.r);
    Eigen::MatrixXd z(n, p);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < p; ++j) z(i, j) = rng_.normal();
    }
    eps_ = mean + k_chol.lower().triangularView<Eigen::Lower>().transpose().solve(z) *
                      sigma_chol_.lower().transpose();
  }

  bool update_phi() {
    ++window_attempts_;
    const double phi_max = hyper_.phi_max;
    const double cand_star =
        detail::logit(params_.phi / phi_max) + step_sd_phi_ * rng_.normal();
    const double log_u = std::log(rng_.uniform_open());
    const double cand = phi_max * detail::expit(cand_star);
    if (!(cand > 0.0 && cand < phi_max)) return false;  // underflowed to the boundary
    cholesky_factor cand_chol =
        cholesky(spatial_corr_matrix(dist_, cand).mat());
    const double lp_cand =
        detail::scaled_separable_logpdf(eps_, cand_chol, sigma_chol_, params_.r);
    const double lp_curr =
        detail::scaled_separable_logpdf(eps_, corr_chol_, sigma_chol_, params_.r);
    const double log_ratio = lp_cand - lp_curr +
                             std::log(cand * (phi_max - cand)) -
                             std::log(params_.phi * (phi_max - params_.phi));
    if (log_u < log_ratio) {
      params_.phi = cand;
      corr_chol_ = std::move(cand_chol);
      corr_inv_ = corr_chol_.inverse();
      ++window_accept_phi_;
      return true;
    }
    return false;
  }

  bool update_r() {
    ++window_attempts_r_;
    const double cand_star = detail::logit(params_.r) + step_sd_r_ * rng_.normal();
    const double log_u = std::log(rng_.uniform_open());
    const double cand = detail::expit(cand_star);
    if (!(cand > 0.0 && cand < 1.0)) return false;
    if (log_u < r_log_ratio(cand)) {
      params_.r = cand;
      ++window_accept_r_;
      return true;
    }
    return false;
  }

  // Full Metropolis-Hastings log ratio for a proposed range, including the
  // logit-walk Jacobian phi (phi_max - phi).
  double phi_log_ratio(double cand) const {
    cholesky_factor cand_chol = cholesky(spatial_corr_matrix(dist_, cand).mat());
    return detail::scaled_separable_logpdf(eps_, cand_chol, sigma_chol_, params_.r) -
           detail::scaled_separable_logpdf(eps_, corr_chol_, sigma_chol_, params_.r) +
           std::log(cand * (hyper_.phi_max - cand)) -
           std::log(params_.phi * (hyper_.phi_max - params_.phi));
  }

  // Log ratio for a proposed r. The nugget density ratio needs only
  // q1 = tr(Sigma^-1 R'R) and the process density ratio only
  // q2 = tr(Sigma^-1 E'C^-1 E); determinant terms reduce to log powers.
  double r_log_ratio(double cand) const {
    const double np =
        static_cast<double>(data_->n()) * static_cast<double>(data_->p());
    Eigen::MatrixXd resid_white = sigma_chol_.forward_solve((y_ - mean_ - eps_).transpose());
    const double q1 = resid_white.squaredNorm();
    Eigen::MatrixXd eps_white =
        sigma_chol_.forward_solve(corr_chol_.forward_solve(eps_).transpose());
    const double q2 = eps_white.squaredNorm();
    const double curr = params_.r;
    double lr = -0.5 * np * (std::log(1.0 - cand) - std::log(1.0 - curr)) -
                0.5 * q1 * (1.0 / (1.0 - cand) - 1.0 / (1.0 - curr));
    lr += -0.5 * np * (std::log(cand) - std::log(curr)) -
          0.5 * q2 * (1.0 / cand - 1.0 / curr);
    lr += std::log(cand * (1.0 - cand)) - std::log(curr * (1.0 - curr));
    return lr;
  }

  // Tune both random-walk step sizes from the acceptance rate observed since
  // the last call, then reset the window counters.
  void adapt_steps() {
    if (window_attempts_ > 0) {
      const double rate =
          static_cast<double>(window_accept_phi_) / static_cast<double>(window_attempts_);
      step_sd_phi_ = adapted_step_sd(step_sd_phi_, rate, cfg_.adapt_target, cfg_.adapt_kappa);
    }
    if (window_attempts_r_ > 0) {
      const double rate =
          static_cast<double>(window_accept_r_) / static_cast<double>(window_attempts_r_);
      step_sd_r_ = adapted_step_sd(step_sd_r_, rate, cfg_.adapt_target, cfg_.adapt_kappa);
    }
    window_attempts_ = window_attempts_r_ = 0;
    window_accept_phi_ = window_accept_r_ = 0;
  }

  struct sweep_flags {
    bool accepted_phi = false;
    bool accepted_r = false;
  };

  sweep_flags sweep() {
    sweep_flags flags;
    impute_censored();
    update_beta();
    update_sigma();
    update_epsilon();
    flags.accepted_phi = update_phi();
    flags.accepted_r = update_r();
    return flags;
  }

 private:
  void initialize_state() {
    const Eigen::Index n = data_->n();
    const Eigen::Index p = data_->p();
    const Eigen::Index q = data_->q();
    y_ = data_->y;
    for (const auto& [i, v] : cells_) y_(i, v) = data_->limits(i, v) - 0.1;

    // OLS start on fully observed rows; fall back to column means when there
    // are too few of them.
    std::vector<Eigen::Index> rows = data_->fully_observed_rows();
    Eigen::MatrixXd beta0 = Eigen::MatrixXd::Zero(q, p);
    Eigen::MatrixXd sigma0 = Eigen::MatrixXd::Identity(p, p);
    bool have_ols = false;
    if (static_cast<Eigen::Index>(rows.size()) > q + 1) {
      Eigen::MatrixXd xs(static_cast<Eigen::Index>(rows.size()), q);
      Eigen::MatrixXd ys(static_cast<Eigen::Index>(rows.size()), p);
      for (std::size_t k = 0; k < rows.size(); ++k) {
        xs.row(static_cast<Eigen::Index>(k)) = data_->x.row(rows[k]);
        ys.row(static_cast<Eigen::Index>(k)) = data_->y.row(rows[k]);
      }
      Eigen::LLT<Eigen::MatrixXd> llt(xs.transpose() * xs);
      if (llt.info() == Eigen::Success) {
        beta0 = llt.solve(xs.transpose() * ys);
        Eigen::MatrixXd resid = ys - xs * beta0;
        Eigen::RowVectorXd mean = resid.colwise().mean();
        Eigen::MatrixXd centered = resid.rowwise() - mean;
        sigma0 = centered.transpose() * centered /
                 static_cast<double>(rows.size() > 1 ? rows.size() - 1 : 1);
        sigma0 = ((sigma0 + sigma0.transpose()) / 2.0).eval();
        have_ols = true;
      }
    }
    if (!have_ols) beta0.row(0) = y_.colwise().mean();
    Eigen::LLT<Eigen::MatrixXd> check(sigma0);
    if (check.info() != Eigen::Success) sigma0 = Eigen::MatrixXd::Identity(p, p);

    params_.beta = beta0;
    params_.sigma = spd_matrix(sigma0);
    params_.phi = hyper_.phi_max / 4.0;
    params_.r = 0.5;
    eps_ = Eigen::MatrixXd::Zero(n, p);
    rebuild_spatial_cache();
    rebuild_sigma_cache();
    refresh_mean();
  }

  void rebuild_spatial_cache() {
    corr_chol_ = cholesky_with_jitter(spatial_corr_matrix(dist_, params_.phi).mat(),
                                      "spatial correlation");
    corr_inv_ = corr_chol_.inverse();
  }

  void rebuild_sigma_cache() { sigma_chol_ = cholesky(params_.sigma); }

  void refresh_mean() { mean_ = data_->x * params_.beta; }

  const spatial_dataset* data_;
  hyperpriors hyper_;
  mcmc_config cfg_;
  rng_stream rng_;
  Eigen::MatrixXd dist_;
  std::vector<std::pair<Eigen::Index, Eigen::Index>> cells_;

  model_params params_;
  Eigen::MatrixXd eps_;
  Eigen::MatrixXd y_;
  Eigen::MatrixXd mean_;  // X * beta
  double step_sd_phi_ = 0.5;
  double step_sd_r_ = 0.5;

  cholesky_factor corr_chol_;
  Eigen::MatrixXd corr_inv_;
  cholesky_factor sigma_chol_;

  long window_attempts_ = 0;
  long window_attempts_r_ = 0;
  long window_accept_phi_ = 0;
  long window_accept_r_ = 0;
};

struct chain_init {
  model_params params;
  Eigen::MatrixXd epsilon;
  Eigen::MatrixXd completed_y;
};

inline fit_result run_chain(const spatial_dataset& data, const distance_metric& metric,
                            const hyperpriors& hyper, const mcmc_config& cfg,
                            const std::optional<chain_init>& init = std::nullopt) {
  cfg.validate();
  chain c(data, metric, hyper, cfg);
  if (init) c.set_state(init->params, init->epsilon, init->completed_y);

  fit_result out;
  out.samples.censored_cells = c.censored_cells();
  const long stored = cfg.stored_draws();
  out.samples.iterations.reserve(stored);
  out.samples.beta.reserve(stored);
  out.samples.sigma.reserve(stored);
  out.samples.phi.reserve(stored);
  out.samples.r.reserve(stored);

  long accept_phi_burn = 0, accept_r_burn = 0;
  long accept_phi_post = 0, accept_r_post = 0;

  const char* stage = "";
  for (long t = 1; t <= cfg.n_iter; ++t) {
    chain::sweep_flags flags;
    try {
      stage = "impute_censored";
      c.impute_censored();
      stage = "update_beta";
      c.update_beta();
      stage = "update_sigma";
      c.update_sigma();
      stage = "update_epsilon";
      c.update_epsilon();
      stage = "update_phi";
      flags.accepted_phi = c.update_phi();
      stage = "update_r";
      flags.accepted_r = c.update_r();
    } catch (const error& e) {
      throw error(e.category(), "iteration " + std::to_string(t) + ", kernel " + stage +
                                    ": " + e.what());
    }

    if (t <= cfg.burn_in) {
      accept_phi_burn += flags.accepted_phi ? 1 : 0;
      accept_r_burn += flags.accepted_r ? 1 : 0;
      if (t % cfg.adapt_window == 0) c.adapt_steps();
    } else {
      accept_phi_post += flags.accepted_phi ? 1 : 0;
      accept_r_post += flags.accepted_r ? 1 : 0;
      if ((t - cfg.burn_in) % cfg.thin == 0) {
        out.samples.iterations.push_back(t);
        out.samples.beta.push_back(c.params().beta);
        out.samples.sigma.push_back(c.params().sigma.mat());
        out.samples.phi.push_back(c.params().phi);
        out.samples.r.push_back(c.params().r);
        out.samples.accept_phi.push_back(flags.accepted_phi ? 1 : 0);
        out.samples.accept_r.push_back(flags.accepted_r ? 1 : 0);
        Eigen::VectorXd imp(static_cast<Eigen::Index>(c.censored_cells().size()));
        Eigen::Index k = 0;
        for (const auto& [i, v] : c.censored_cells()) imp(k++) = c.completed_y()(i, v);
        out.samples.imputed.push_back(std::move(imp));
        if (cfg.store_epsilon) out.samples.epsilon.push_back(c.epsilon());
      }
    }
  }

  const double post = static_cast<double>(cfg.n_iter - cfg.burn_in);
  out.diagnostics.accept_rate_phi = static_cast<double>(accept_phi_post) / post;
  out.diagnostics.accept_rate_r = static_cast<double>(accept_r_post) / post;
  if (cfg.burn_in > 0) {
    out.diagnostics.burnin_accept_rate_phi =
        static_cast<double>(accept_phi_burn) / static_cast<double>(cfg.burn_in);
    out.diagnostics.burnin_accept_rate_r =
        static_cast<double>(accept_r_burn) / static_cast<double>(cfg.burn_in);
  }
  out.diagnostics.final_step_sd_phi = c.step_sd_phi();
  out.diagnostics.final_step_sd_r = c.step_sd_r();
  out.diagnostics.n_iter = cfg.n_iter;
  out.diagnostics.burn_in = cfg.burn_in;
  out.diagnostics.thin = cfg.thin;
  return out;
}

}  // namespace censpatial
