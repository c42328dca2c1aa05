// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "censpatial/eda.hpp"
#include "censpatial/errors.hpp"
#include "censpatial/geometry.hpp"
#include "censpatial/mcmc.hpp"
#include "censpatial/model.hpp"
#include "censpatial/predict.hpp"
#include "censpatial/simstudy.hpp"

// File formats: flat key=value configs, station CSVs, trace CSVs and report
// tables. Doubles are written in shortest round-trip form so that re-reading
// a trace reproduces the in-memory draws exactly and reruns are
// byte-identical.

namespace censpatial {

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s, const std::string& what) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double value = 0.0;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  auto res = std::from_chars(begin, end, value);
  if (res.ec != std::errc() || res.ptr != end) {
    throw ingest_error("cannot parse number '" + s + "' in " + what);
  }
  return value;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  fields.push_back(cur);
  for (auto& f : fields) {
    while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) f.erase(f.begin());
    while (!f.empty() && (f.back() == ' ' || f.back() == '\t')) f.pop_back();
  }
  return fields;
}

// ---------------------------------------------------------------------------
// configuration

struct app_config {
  // sampler
  std::uint64_t seed = 20240801;
  long n_iter = 70000;
  long burn_in = 20000;
  long thin = 5;
  double adapt_target = 0.40;
  long adapt_window = 100;
  double init_step_sd = 0.5;
  bool store_epsilon = true;
  bool nu_includes_predictions = false;
  // priors
  double beta_prior_sd = 100.0;
  double iw_df = 0.01;
  double iw_scale_mult = 0.01;
  double phi_max_fraction = 0.5;
  long prediction_count = 0;  // M folded into the IW df when the nu flag is set
  // data
  double mdl = 0.5;  // natural scale, used when the file has no limit column
  std::string metric = "geodesic";
  double earth_radius_km = kDefaultEarthRadiusKm;
  // prediction
  double grid_resolution = 0.15;
  // cross-validation refits
  long cv_n_iter = 6000;
  long cv_burn_in = 1000;
  long cv_thin = 5;
  // simulation study
  long sim_replicates = 20;
  long sim_n_iter = 6000;
  long sim_burn_in = 1000;
  long sim_thin = 5;
  double sim_phi_max_fraction = 0.25;
  // execution
  long workers = 1;

  distance_metric make_metric() const {
    if (metric == "geodesic") return distance_metric::geodesic(earth_radius_km);
    if (metric == "euclidean") return distance_metric::euclidean();
    throw config_error("metric must be 'geodesic' or 'euclidean', got '" + metric + "'");
  }

  mcmc_config make_mcmc_config() const {
    mcmc_config cfg;
    cfg.n_iter = n_iter;
    cfg.burn_in = burn_in;
    cfg.thin = thin;
    cfg.adapt_target = adapt_target;
    cfg.adapt_window = adapt_window;
    cfg.init_step_sd = init_step_sd;
    cfg.seed = seed;
    cfg.store_epsilon = store_epsilon;
    cfg.nu_includes_predictions = nu_includes_predictions;
    cfg.prediction_count = prediction_count;
    return cfg;
  }

  hyperpriors make_hyperpriors(double max_distance, double fraction) const {
    hyperpriors h;
    h.beta_prior_sd = beta_prior_sd;
    h.iw_df = iw_df;
    h.iw_scale_mult = iw_scale_mult;
    h.phi_max = fraction * max_distance;
    return h;
  }

  void set(const std::string& key, const std::string& value) {
    auto as_long = [&]() -> long {
      try {
        return std::stol(value);
      } catch (const std::exception&) {
        throw config_error("config key '" + key + "': expected integer, got '" + value + "'");
      }
    };
    auto as_double = [&]() { return parse_double(value, "config key '" + key + "'"); };
    auto as_bool = [&]() -> bool {
      if (value == "true" || value == "1") return true;
      if (value == "false" || value == "0") return false;
      throw config_error("config key '" + key + "': expected true/false, got '" + value + "'");
    };
    if (key == "seed") {
      try {
        seed = std::stoull(value);
      } catch (const std::exception&) {
        throw config_error("config key 'seed': expected unsigned integer, got '" + value + "'");
      }
    } else if (key == "n_iter") n_iter = as_long();
    else if (key == "burn_in") burn_in = as_long();
    else if (key == "thin") thin = as_long();
    else if (key == "adapt_target") adapt_target = as_double();
    else if (key == "adapt_window") adapt_window = as_long();
    else if (key == "init_step_sd") init_step_sd = as_double();
    else if (key == "store_epsilon") store_epsilon = as_bool();
    else if (key == "nu_includes_predictions") nu_includes_predictions = as_bool();
    else if (key == "beta_prior_sd") beta_prior_sd = as_double();
    else if (key == "iw_df") iw_df = as_double();
    else if (key == "iw_scale_mult") iw_scale_mult = as_double();
    else if (key == "phi_max_fraction") phi_max_fraction = as_double();
    else if (key == "prediction_count") prediction_count = as_long();
    else if (key == "mdl") mdl = as_double();
    else if (key == "metric") metric = value;
    else if (key == "earth_radius_km") earth_radius_km = as_double();
    else if (key == "grid_resolution") grid_resolution = as_double();
    else if (key == "cv_n_iter") cv_n_iter = as_long();
    else if (key == "cv_burn_in") cv_burn_in = as_long();
    else if (key == "cv_thin") cv_thin = as_long();
    else if (key == "sim_replicates") sim_replicates = as_long();
    else if (key == "sim_n_iter") sim_n_iter = as_long();
    else if (key == "sim_burn_in") sim_burn_in = as_long();
    else if (key == "sim_thin") sim_thin = as_long();
    else if (key == "sim_phi_max_fraction") sim_phi_max_fraction = as_double();
    else if (key == "workers") workers = as_long();
    else throw config_error("unknown config key '" + key + "'");
  }

  std::string print() const {
    std::ostringstream out;
    out << "# sampler\n";
    out << "seed = " << seed << "\n";
    out << "n_iter = " << n_iter << "\n";
    out << "burn_in = " << burn_in << "\n";
    out << "thin = " << thin << "\n";
    out << "adapt_target = " << format_double(adapt_target) << "\n";
    out << "adapt_window = " << adapt_window << "\n";
    out << "init_step_sd = " << format_double(init_step_sd) << "\n";
    out << "store_epsilon = " << (store_epsilon ? "true" : "false") << "\n";
    out << "nu_includes_predictions = " << (nu_includes_predictions ? "true" : "false") << "\n";
    out << "# priors\n";
    out << "beta_prior_sd = " << format_double(beta_prior_sd) << "\n";
    out << "iw_df = " << format_double(iw_df) << "\n";
    out << "iw_scale_mult = " << format_double(iw_scale_mult) << "\n";
    out << "phi_max_fraction = " << format_double(phi_max_fraction) << "\n";
    out << "prediction_count = " << prediction_count << "\n";
    out << "# data\n";
    out << "mdl = " << format_double(mdl) << "\n";
    out << "metric = " << metric << "\n";
    out << "earth_radius_km = " << format_double(earth_radius_km) << "\n";
    out << "# prediction\n";
    out << "grid_resolution = " << format_double(grid_resolution) << "\n";
    out << "# cross-validation\n";
    out << "cv_n_iter = " << cv_n_iter << "\n";
    out << "cv_burn_in = " << cv_burn_in << "\n";
    out << "cv_thin = " << cv_thin << "\n";
    out << "# simulation study\n";
    out << "sim_replicates = " << sim_replicates << "\n";
    out << "sim_n_iter = " << sim_n_iter << "\n";
    out << "sim_burn_in = " << sim_burn_in << "\n";
    out << "sim_thin = " << sim_thin << "\n";
    out << "sim_phi_max_fraction = " << format_double(sim_phi_max_fraction) << "\n";
    out << "# execution\n";
    out << "workers = " << workers << "\n";
    return out.str();
  }

  static app_config load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open config file: " + path);
    app_config cfg;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const std::size_t hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      const std::size_t eq = line.find('=');
      std::string key = (eq == std::string::npos) ? line : line.substr(0, eq);
      key.erase(std::remove_if(key.begin(), key.end(), [](char c) { return c == ' ' || c == '\t' || c == '\r'; }),
                key.end());
      if (key.empty()) continue;
      if (eq == std::string::npos) {
        throw config_error(path + ":" + std::to_string(line_no) + ": expected 'key = value'");
      }
      std::string value = line.substr(eq + 1);
      while (!value.empty() && (value.front() == ' ' || value.front() == '\t')) value.erase(value.begin());
      while (!value.empty() && (value.back() == ' ' || value.back() == '\t' || value.back() == '\r')) value.pop_back();
      cfg.set(key, value);
    }
    return cfg;
  }
};

// ---------------------------------------------------------------------------
// station ingestion

// Expected schema: header "lon,lat" followed by one value column plus one
// 0/1 flag column per variable ("<name>,<name>_cens"), and optionally a
// per-row "limit" column used for every censored cell of that row. Values
// and limits arrive on the natural (concentration) scale and are
// log-transformed here.
inline spatial_dataset ingest_stations_csv(const std::string& path, const app_config& cfg) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open stations file: " + path);
  std::string header_line;
  if (!std::getline(in, header_line)) throw ingest_error(path + ": empty file");
  std::vector<std::string> header = split_csv_line(header_line);

  auto column = [&](const std::string& name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    return std::nullopt;
  };
  auto lon_col = column("lon");
  auto lat_col = column("lat");
  if (!lon_col || !lat_col) {
    throw ingest_error(path + ": missing required columns 'lon' and/or 'lat'");
  }
  auto limit_col = column("limit");

  std::vector<std::string> variables;
  std::vector<std::size_t> value_cols;
  std::vector<std::size_t> flag_cols;
  for (std::size_t i = 0; i < header.size(); ++i) {
    const std::string& name = header[i];
    if (i == *lon_col || i == *lat_col) continue;
    if (limit_col && i == *limit_col) continue;
    if (name.size() > 5 && name.substr(name.size() - 5) == "_cens") continue;
    auto flag = column(name + "_cens");
    if (!flag) {
      throw ingest_error(path + ": variable column '" + name + "' has no matching '" + name +
                         "_cens' flag column");
    }
    variables.push_back(name);
    value_cols.push_back(i);
    flag_cols.push_back(*flag);
  }
  if (variables.empty()) throw ingest_error(path + ": no variable columns found");

  std::vector<location> locs;
  std::vector<std::vector<double>> raw_rows;
  std::vector<std::vector<bool>> flag_rows;
  std::vector<std::vector<double>> limit_rows;
  std::string line;
  long row_no = 0;
  const bool geodesic = cfg.metric == "geodesic";
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    ++row_no;
    std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw ingest_error(path + ": row " + std::to_string(row_no) + " has " +
                         std::to_string(fields.size()) + " fields, expected " +
                         std::to_string(header.size()));
    }
    const std::string where = path + " row " + std::to_string(row_no);
    location loc;
    loc.lon = parse_double(fields[*lon_col], where + " (lon)");
    loc.lat = parse_double(fields[*lat_col], where + " (lat)");
    if (geodesic && std::fabs(loc.lat) > 90.0) {
      throw ingest_error(where + ": latitude " + fields[*lat_col] + " outside [-90, 90]");
    }
    locs.push_back(loc);
    std::vector<double> values(variables.size());
    std::vector<bool> flags(variables.size());
    std::vector<double> limits(variables.size());
    double row_limit = cfg.mdl;
    if (limit_col && !fields[*limit_col].empty()) {
      row_limit = parse_double(fields[*limit_col], where + " (limit)");
    }
    for (std::size_t v = 0; v < variables.size(); ++v) {
      const std::string& flag_str = fields[flag_cols[v]];
      if (flag_str == "0") flags[v] = false;
      else if (flag_str == "1") flags[v] = true;
      else {
        throw ingest_error(where + ": flag column '" + variables[v] + "_cens' must be 0 or 1, got '" +
                           flag_str + "'");
      }
      if (flags[v]) {
        values[v] = 0.0;  // latent placeholder; replaced by log_transform
        limits[v] = row_limit;
        if (!(row_limit > 0.0)) {
          throw ingest_error(where + ": non-positive detection limit for censored cell");
        }
      } else {
        if (fields[value_cols[v]].empty()) {
          throw ingest_error(where + ": missing value for observed variable '" + variables[v] + "'");
        }
        values[v] = parse_double(fields[value_cols[v]], where + " (" + variables[v] + ")");
        if (!(values[v] > 0.0)) {
          throw ingest_error(where + ": non-positive concentration " + fields[value_cols[v]] +
                             " for variable '" + variables[v] + "'");
        }
        limits[v] = std::numeric_limits<double>::quiet_NaN();
      }
    }
    raw_rows.push_back(std::move(values));
    flag_rows.push_back(std::move(flags));
    limit_rows.push_back(std::move(limits));
  }
  if (locs.empty()) throw ingest_error(path + ": no data rows");
  check_distinct_locations(locs);

  spatial_dataset ds;
  const Eigen::Index n = static_cast<Eigen::Index>(locs.size());
  const Eigen::Index p = static_cast<Eigen::Index>(variables.size());
  ds.locations = std::move(locs);
  ds.variable_names = variables;
  ds.y.resize(n, p);
  ds.censored = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(n, p, false);
  ds.limits.resize(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index v = 0; v < p; ++v) {
      ds.y(i, v) = raw_rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(v)];
      ds.censored(i, v) = flag_rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(v)];
      ds.limits(i, v) = limit_rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(v)];
    }
  }
  log_transform(ds.y, ds.censored, ds.limits);
  ds.x = make_design(ds.locations);
  return ds;
}

inline std::string describe(const spatial_dataset& ds) {
  std::ostringstream out;
  out << "N=" << ds.n() << " P=" << ds.p() << " Q=" << ds.q() << "\n";
  for (Eigen::Index v = 0; v < ds.p(); ++v) {
    out << "  " << ds.variable_names[static_cast<std::size_t>(v)] << ": censored "
        << ds.censored_count(v) << "/" << ds.n() << "\n";
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// trace files

inline void ensure_directory(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw io_error("cannot create directory " + dir + ": " + ec.message());
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);  // binary: no newline translation
  if (!out) throw io_error("cannot open output file: " + path);
  return out;
}

inline void write_trace_csv(const std::string& path, const posterior_samples& samples) {
  if (samples.size() == 0) throw domain_error("write_trace_csv: no draws");
  const Eigen::Index q = samples.beta.front().rows();
  const Eigen::Index p = samples.beta.front().cols();
  std::ofstream out = open_output(path);
  out << "iteration";
  for (Eigen::Index qq = 0; qq < q; ++qq) {
    for (Eigen::Index pp = 0; pp < p; ++pp) {
      out << ",beta_" << (pp + 1) << "_" << (qq + 1);
    }
  }
  for (Eigen::Index a = 0; a < p; ++a) {
    for (Eigen::Index b = a; b < p; ++b) out << ",Sigma_" << (a + 1) << "_" << (b + 1);
  }
  out << ",phi,r,accept_phi,accept_r";
  for (const auto& [i, v] : samples.censored_cells) {
    out << ",imp_" << (i + 1) << "_" << (v + 1);
  }
  out << "\n";
  for (std::size_t k = 0; k < samples.size(); ++k) {
    out << samples.iterations[k];
    for (Eigen::Index qq = 0; qq < q; ++qq) {
      for (Eigen::Index pp = 0; pp < p; ++pp) {
        out << "," << format_double(samples.beta[k](qq, pp));
      }
    }
    for (Eigen::Index a = 0; a < p; ++a) {
      for (Eigen::Index b = a; b < p; ++b) out << "," << format_double(samples.sigma[k](a, b));
    }
    out << "," << format_double(samples.phi[k]) << "," << format_double(samples.r[k]) << ","
        << samples.accept_phi[k] << "," << samples.accept_r[k];
    for (Eigen::Index c = 0; c < samples.imputed[k].size(); ++c) {
      out << "," << format_double(samples.imputed[k](c));
    }
    out << "\n";
  }
}

inline constexpr const char* kEpsilonTraceVersion = "# censpatial epsilon trace v1";

inline void write_epsilon_trace_csv(const std::string& path, const posterior_samples& samples,
                                    Eigen::Index n, Eigen::Index p) {
  std::ofstream out = open_output(path);
  out << kEpsilonTraceVersion << "\n";
  out << "iteration";
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index v = 0; v < p; ++v) out << ",eps_" << (i + 1) << "_" << (v + 1);
  }
  out << "\n";
  for (std::size_t k = 0; k < samples.epsilon.size(); ++k) {
    out << samples.iterations[k];
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index v = 0; v < p; ++v) out << "," << format_double(samples.epsilon[k](i, v));
    }
    out << "\n";
  }
}

// Rebuild posterior samples from trace.csv + epsilon_trace.csv. Shapes are
// recovered from the column names.
inline posterior_samples read_fit_outputs(const std::string& trace_path,
                                          const std::string& epsilon_path) {
  std::ifstream in(trace_path);
  if (!in) throw io_error("cannot open trace file: " + trace_path);
  std::string line;
  if (!std::getline(in, line)) throw ingest_error(trace_path + ": empty trace");
  std::vector<std::string> header = split_csv_line(line);

  Eigen::Index p = 0, q = 0;
  std::vector<std::pair<Eigen::Index, Eigen::Index>> cells;
  for (const auto& name : header) {
    if (name.rfind("beta_", 0) == 0) {
      const std::size_t us = name.find('_', 5);
      p = std::max(p, static_cast<Eigen::Index>(std::stol(name.substr(5, us - 5))));
      q = std::max(q, static_cast<Eigen::Index>(std::stol(name.substr(us + 1))));
    } else if (name.rfind("imp_", 0) == 0) {
      const std::size_t us = name.find('_', 4);
      cells.emplace_back(std::stol(name.substr(4, us - 4)) - 1,
                         std::stol(name.substr(us + 1)) - 1);
    }
  }
  if (p == 0 || q == 0) throw ingest_error(trace_path + ": no beta columns in header");

  posterior_samples samples;
  samples.censored_cells = cells;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    std::vector<std::string> f = split_csv_line(line);
    if (f.size() != header.size()) {
      throw ingest_error(trace_path + ": row width mismatch");
    }
    std::size_t col = 0;
    samples.iterations.push_back(static_cast<long>(parse_double(f[col++], "iteration")));
    Eigen::MatrixXd beta(q, p);
    for (Eigen::Index qq = 0; qq < q; ++qq) {
      for (Eigen::Index pp = 0; pp < p; ++pp) beta(qq, pp) = parse_double(f[col++], "beta");
    }
    samples.beta.push_back(std::move(beta));
    Eigen::MatrixXd sigma(p, p);
    for (Eigen::Index a = 0; a < p; ++a) {
      for (Eigen::Index b = a; b < p; ++b) {
        sigma(a, b) = parse_double(f[col++], "Sigma");
        sigma(b, a) = sigma(a, b);
      }
    }
    samples.sigma.push_back(std::move(sigma));
    samples.phi.push_back(parse_double(f[col++], "phi"));
    samples.r.push_back(parse_double(f[col++], "r"));
    samples.accept_phi.push_back(static_cast<int>(parse_double(f[col++], "accept_phi")));
    samples.accept_r.push_back(static_cast<int>(parse_double(f[col++], "accept_r")));
    Eigen::VectorXd imp(static_cast<Eigen::Index>(cells.size()));
    for (Eigen::Index c = 0; c < imp.size(); ++c) imp(c) = parse_double(f[col++], "imputed");
    samples.imputed.push_back(std::move(imp));
  }
  if (samples.size() == 0) throw ingest_error(trace_path + ": no draws");

  std::ifstream eps_in(epsilon_path);
  if (!eps_in) throw io_error("cannot open epsilon trace: " + epsilon_path);
  if (!std::getline(eps_in, line) || line.rfind("# censpatial epsilon trace", 0) != 0) {
    throw ingest_error(epsilon_path + ": missing version header");
  }
  if (!std::getline(eps_in, line)) throw ingest_error(epsilon_path + ": missing column header");
  std::vector<std::string> eps_header = split_csv_line(line);
  Eigen::Index n = 0;
  for (const auto& name : eps_header) {
    if (name.rfind("eps_", 0) == 0) {
      const std::size_t us = name.find('_', 4);
      n = std::max(n, static_cast<Eigen::Index>(std::stol(name.substr(4, us - 4))));
    }
  }
  if (n == 0) throw ingest_error(epsilon_path + ": no epsilon columns");
  while (std::getline(eps_in, line)) {
    if (line.empty() || line == "\r") continue;
    std::vector<std::string> f = split_csv_line(line);
    if (f.size() != eps_header.size()) throw ingest_error(epsilon_path + ": row width mismatch");
    std::size_t col = 1;  // skip iteration
    Eigen::MatrixXd eps(n, p);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index v = 0; v < p; ++v) eps(i, v) = parse_double(f[col++], "epsilon");
    }
    samples.epsilon.push_back(std::move(eps));
  }
  if (samples.epsilon.size() != samples.size()) {
    throw ingest_error(epsilon_path + ": draw count differs from trace");
  }
  return samples;
}

// ---------------------------------------------------------------------------
// reports

inline std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

// Posterior means, standard deviations and central 95% bounds per parameter,
// plus sampler diagnostics.
inline void write_fit_summary(const std::string& path, const spatial_dataset& ds,
                              const posterior_samples& samples,
                              const chain_diagnostics& diag) {
  const Eigen::Index q = samples.beta.front().rows();
  const Eigen::Index p = samples.beta.front().cols();
  const std::size_t s = samples.size();

  auto summarize = [&](auto getter) {
    std::vector<double> vals(s);
    for (std::size_t k = 0; k < s; ++k) vals[k] = getter(k);
    double mean = 0.0;
    for (double v : vals) mean += v;
    mean /= static_cast<double>(s);
    double var = 0.0;
    for (double v : vals) var += (v - mean) * (v - mean);
    var = s > 1 ? var / static_cast<double>(s - 1) : 0.0;
    const double lo = empirical_quantile(vals, 0.025);
    const double hi = empirical_quantile(vals, 0.975);
    return std::array<double, 4>{mean, std::sqrt(var), lo, hi};
  };

  std::ofstream out = open_output(path);
  out << "fit summary\n";
  out << "data: N=" << ds.n() << " P=" << ds.p() << " Q=" << ds.q()
      << " censored_cells=" << ds.censored_count() << "\n";
  out << "sampler: n_iter=" << diag.n_iter << " burn_in=" << diag.burn_in
      << " thin=" << diag.thin << " stored=" << s << "\n";
  out << "acceptance (post burn-in): phi=" << fixed(diag.accept_rate_phi, 3)
      << " r=" << fixed(diag.accept_rate_r, 3) << "\n";
  out << "step sd (final): phi=" << fixed(diag.final_step_sd_phi, 4)
      << " r=" << fixed(diag.final_step_sd_r, 4) << "\n\n";
  out << "parameter        mean         sd       2.5%      97.5%\n";
  auto row = [&](const std::string& name, const std::array<double, 4>& st) {
    out << name;
    for (std::size_t pad = name.size(); pad < 12; ++pad) out << ' ';
    out << fixed(st[0], 4);
    out << "  " << fixed(st[1], 4) << "  " << fixed(st[2], 4) << "  " << fixed(st[3], 4) << "\n";
  };
  for (Eigen::Index qq = 0; qq < q; ++qq) {
    for (Eigen::Index pp = 0; pp < p; ++pp) {
      row("beta_" + std::to_string(pp + 1) + "_" + std::to_string(qq + 1),
          summarize([&](std::size_t k) { return samples.beta[k](qq, pp); }));
    }
  }
  for (Eigen::Index d = 0; d < p; ++d) {
    row("Sigma_" + std::to_string(d + 1) + "_" + std::to_string(d + 1),
        summarize([&](std::size_t k) { return samples.sigma[k](d, d); }));
  }
  for (Eigen::Index a = 0; a < p; ++a) {
    for (Eigen::Index b = a + 1; b < p; ++b) {
      row("Sigma_" + std::to_string(a + 1) + "_" + std::to_string(b + 1),
          summarize([&](std::size_t k) { return samples.sigma[k](a, b); }));
    }
  }
  row("phi", summarize([&](std::size_t k) { return samples.phi[k]; }));
  row("r", summarize([&](std::size_t k) { return samples.r[k]; }));
}

inline void write_variogram_csv(const std::string& path, const variogram_result& vg) {
  std::ofstream out = open_output(path);
  out << "bin_center,gamma,n_pairs\n";
  for (std::size_t b = 0; b < vg.center.size(); ++b) {
    out << format_double(vg.center[b]) << "," << format_double(vg.gamma[b]) << ","
        << vg.n_pairs[b] << "\n";
  }
}

inline void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m,
                             const std::vector<std::string>& col_names,
                             const std::vector<std::string>& row_names = {}) {
  std::ofstream out = open_output(path);
  if (!row_names.empty()) out << "name";
  for (std::size_t j = 0; j < col_names.size(); ++j) {
    if (j > 0 || !row_names.empty()) out << ",";
    out << col_names[j];
  }
  out << "\n";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    if (!row_names.empty()) out << row_names[static_cast<std::size_t>(i)] << ",";
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j > 0) out << ",";
      out << format_double(m(i, j));
    }
    out << "\n";
  }
}

inline void write_prediction_csv(const std::string& path, const prediction_grid& grid,
                                 const predictive_summary& summary,
                                 const std::vector<std::string>& variable_names) {
  std::ofstream out = open_output(path);
  out << "lon,lat,region,variable,mean_log,sd_log,q2.5_log,q50_log,q97.5_log,mean_natural\n";
  for (Eigen::Index i = 0; i < grid.m(); ++i) {
    for (std::size_t v = 0; v < variable_names.size(); ++v) {
      const Eigen::Index j = static_cast<Eigen::Index>(v);
      out << format_double(grid.locations[static_cast<std::size_t>(i)].lon) << ","
          << format_double(grid.locations[static_cast<std::size_t>(i)].lat) << ","
          << grid.region[static_cast<std::size_t>(i)] << "," << variable_names[v] << ","
          << format_double(summary.mean_log(i, j)) << "," << format_double(summary.sd_log(i, j))
          << "," << format_double(summary.q025(i, j)) << "," << format_double(summary.q50(i, j))
          << "," << format_double(summary.q975(i, j)) << ","
          << format_double(summary.mean_natural(i, j)) << "\n";
    }
  }
}

inline void write_region_table_csv(const std::string& path, const region_mean_table& table,
                                   const std::vector<std::string>& variable_names) {
  std::ofstream out = open_output(path);
  out << "region,n_cells";
  for (const auto& v : variable_names) out << "," << v << "_mean," << v << "_se";
  out << "\n";
  for (std::size_t g = 0; g < table.region.size(); ++g) {
    out << table.region[g] << "," << table.n_cells[g];
    for (Eigen::Index j = 0; j < table.mean.cols(); ++j) {
      out << "," << format_double(table.mean(static_cast<Eigen::Index>(g), j)) << ","
          << format_double(table.se(static_cast<Eigen::Index>(g), j));
    }
    out << "\n";
  }
}

inline void write_study_tables(const std::string& dir, const study_result& result) {
  {
    std::ofstream out = open_output(dir + "/table1_rmse.csv");
    out << "level,parameter,S1,S1_se,S2,S2_se,S3,S3_se\n";
    for (const char* level : {"L1", "L2"}) {
      for (std::size_t j = 0; j < result.parameter_names.size(); ++j) {
        out << level << "," << result.parameter_names[j];
        for (const char* setting : {"S1", "S2", "S3"}) {
          const auto& combo = result.combo(level, setting);
          out << "," << format_double(combo.param_rmse[j].value) << ","
              << format_double(combo.param_rmse[j].se);
        }
        out << "\n";
      }
    }
  }
  {
    std::ofstream out = open_output(dir + "/table2_crps.csv");
    out << "level,variable,S1,S1_se,S2,S2_se,S3,S3_se\n";
    for (const char* level : {"L1", "L2"}) {
      for (std::size_t v = 0; v < result.variable_names.size(); ++v) {
        out << level << "," << result.variable_names[v];
        for (const char* setting : {"S1", "S2", "S3"}) {
          const auto& combo = result.combo(level, setting);
          out << "," << format_double(combo.crps[v].value) << ","
              << format_double(combo.crps[v].se);
        }
        out << "\n";
      }
    }
  }
  {
    std::ofstream out = open_output(dir + "/table3_coverage.csv");
    out << "level,interval,variable,S1,S1_se,S2,S2_se,S3,S3_se\n";
    for (const char* level : {"L1", "L2"}) {
      for (int interval : {90, 95}) {
        for (std::size_t v = 0; v < result.variable_names.size(); ++v) {
          out << level << "," << interval << "," << result.variable_names[v];
          for (const char* setting : {"S1", "S2", "S3"}) {
            const auto& combo = result.combo(level, setting);
            const auto& scores = (interval == 90) ? combo.coverage90 : combo.coverage95;
            out << "," << format_double(scores[v].value) << "," << format_double(scores[v].se);
          }
          out << "\n";
        }
      }
    }
  }
  {
    std::ofstream out = open_output(dir + "/run_info.txt");
    long failed = 0;
    for (const auto& combo : result.combos) failed += combo.replicates_failed;
    out << "combinations: " << result.combos.size() << "\n";
    for (const auto& combo : result.combos) {
      out << combo.level << "/" << combo.setting << ": used " << combo.replicates_used
          << " replicates, failed " << combo.replicates_failed << "\n";
    }
    out << "total failed replicate fits: " << failed << "\n";
  }
}

}  // namespace censpatial
