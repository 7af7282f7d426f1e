#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qsearch/distributions.hpp"
#include "qsearch/metrics.hpp"
#include "qsearch/sequence_model.hpp"

namespace qsearch {

inline constexpr int kConfigSchemaVersion = 1;

/**
 * One experiment. JSON form (schema_version is required):
 *
 *   {"schema_version": 1, "name": "fig2_3",
 *    "pair": {"kind": "gaussian_mean_shift", "mean0": 0, "mean1": 1, "sigma": 1},
 *    "horizon": 10000, "s": 100, "T": 1, "placement": "even_grid",
 *    "eta_grid": [5, 10, 20], "mu1_grid": [0.5, 1, 2],
 *    "n_trials": 2000, "mode": "restart", "master_seed": 12345}
 *
 * Optional: "onsets" (with placement "explicit"), "mu1_grid",
 * "arl_horizon_factor" (default 20).
 */
struct ExperimentConfig {
  std::string name = "experiment";
  DistributionPair pair = DistributionPair::gaussian_mean_shift(0.0, 1.0, 1.0);
  std::int64_t horizon = 10000;
  std::int64_t s = 100;
  std::int64_t duration = 1;
  Placement placement = Placement::even_grid;
  std::vector<std::int64_t> explicit_onsets;
  std::vector<double> eta_grid;
  std::vector<double> mu1_grid;
  std::int64_t n_trials = 2000;
  MonitoringMode mode = MonitoringMode::restart;
  std::uint64_t master_seed = 0;
  double arl_horizon_factor = 20.0;

  /// Throws ConfigError on any violated constraint.
  void validate() const;

  static ExperimentConfig from_json(std::string_view text);
  static ExperimentConfig load(const std::string& path);
  std::string to_json() const;

  /// horizon 1e4, s = 100, T = 1, mu1 = 1, n_trials 2000, eta {5,10,20,50,100,200}.
  static ExperimentConfig desk_scale_preset();
  /// horizon 1e5, s = 1000, T = 1: the full-size sweep.
  static ExperimentConfig full_scale_preset();
};

struct ReportRow {
  double eta = 0.0;
  double mu1 = 0.0;
  std::int64_t s = 0;
  std::int64_t duration = 0;
  MonitoringMode mode = MonitoringMode::restart;
  CriteriaReport report;
  std::int64_t n_trials = 0;
  std::uint64_t seed = 0;
};

/// The schedule every grid point of the experiment monitors.
ChangeSchedule experiment_schedule(const ExperimentConfig& config);

/// One row per eta, at the configured mean1.
std::vector<ReportRow> run_eta_sweep(const ExperimentConfig& config, unsigned workers = 1);

/// One row per (eta, mu1); alpha is recalibrated for every mu1.
std::vector<ReportRow> run_mu_sweep(const ExperimentConfig& config, unsigned workers = 1);

/// mu sweep when mu1_grid is present, eta sweep otherwise.
std::vector<ReportRow> run_experiment(const ExperimentConfig& config, unsigned workers = 1);

inline constexpr std::string_view kReportHeader =
    "eta,mu1,s,T,mode,detect_first,detect_first_se,detect_any,detect_any_se,avg_missed,"
    "avg_missed_se,arl,arl_se,pollak,pollak_se,bound,bound_se,n_trials,seed";

void write_report_csv(std::ostream& out, const std::vector<ReportRow>& rows);

/// Sidecar metadata: resolved config, seed, row count, generation timestamp.
std::string metadata_json(const ExperimentConfig& config, std::size_t n_rows,
                          std::string_view generated_at);

/// Shortest-free fixed form: 17 significant digits, "nan"/"inf" spelled out.
std::string format_real(double value);

}  // namespace qsearch
