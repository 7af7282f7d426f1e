#include "qsearch/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include "json.hpp"

namespace qsearch {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  auto it = j.find(key);
  return it == j.end() ? fallback : it->get<T>();
}

DistributionPair pair_from_json(const json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind != "gaussian_mean_shift") throw ConfigError("unsupported distribution kind '" + kind + "'");
  try {
    return DistributionPair::gaussian_mean_shift(j.at("mean0").get<double>(),
                                                 j.at("mean1").get<double>(),
                                                 j.at("sigma").get<double>());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

ordered_json pair_to_json(const DistributionPair& pair) {
  ordered_json j;
  j["kind"] = std::string(to_string(pair.kind()));
  j["mean0"] = pair.mean0();
  j["mean1"] = pair.mean1();
  j["sigma"] = pair.sigma();
  return j;
}

ReportRow evaluate_row(const ExperimentConfig& config, const DistributionPair& pair,
                       const ChangeSchedule& schedule, double eta, std::uint64_t row_key,
                       unsigned workers) {
  const auto detector = ShewhartDetector::calibrate(pair, eta);
  CriteriaSettings settings;
  settings.n_trials = config.n_trials;
  settings.mode = config.mode;
  settings.arl_horizon_factor = config.arl_horizon_factor;
  MonteCarloOptions options;
  options.seed = mix64(config.master_seed ^ mix64(row_key + 0x5EED));
  options.workers = workers;

  ReportRow row;
  row.eta = eta;
  row.mu1 = pair.mean1();
  row.s = static_cast<std::int64_t>(schedule.size());
  row.duration = schedule.duration();
  row.mode = config.mode;
  row.report = evaluate_criteria(detector, schedule, settings, options);
  row.n_trials = config.n_trials;
  row.seed = config.master_seed;
  return row;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (horizon < 1) throw ConfigError("horizon must be positive");
  if (duration < 1) throw ConfigError("T must be positive");
  if (placement != Placement::explicit_list) {
    if (s < 0) throw ConfigError("s must be nonnegative");
    if (s * (duration + 1) > horizon) throw ConfigError("infeasible schedule: s*(T+1) > horizon");
  }
  if (eta_grid.empty()) throw ConfigError("eta_grid must not be empty");
  for (double eta : eta_grid) {
    if (!(eta >= 1.0) || !std::isfinite(eta)) throw ConfigError("eta_grid values must be >= 1");
  }
  for (double mu1 : mu1_grid) {
    if (!std::isfinite(mu1) || mu1 == pair.mean0()) {
      throw ConfigError("mu1_grid values must be finite and differ from mean0");
    }
  }
  if (n_trials < 1) throw ConfigError("n_trials must be positive");
  if (arl_horizon_factor < 10.0) throw ConfigError("arl_horizon_factor must be at least 10");
}

ExperimentConfig ExperimentConfig::from_json(std::string_view text) {
  ExperimentConfig c;
  try {
    const json j = json::parse(text);
    if (!j.contains("schema_version")) throw ConfigError("config: schema_version is required");
    if (j.at("schema_version").get<int>() != kConfigSchemaVersion) {
      throw ConfigError("config: unsupported schema_version");
    }
    static const char* const known[] = {"schema_version", "name", "pair", "horizon", "s", "T",
                                        "placement", "onsets", "eta_grid", "mu1_grid", "n_trials",
                                        "mode", "master_seed", "arl_horizon_factor", "description"};
    for (const auto& item : j.items()) {
      if (std::find(std::begin(known), std::end(known), item.key()) == std::end(known)) {
        throw ConfigError("config: unknown field '" + item.key() + "'");
      }
    }
    c.name = get_or<std::string>(j, "name", c.name);
    c.pair = pair_from_json(j.at("pair"));
    c.horizon = j.at("horizon").get<std::int64_t>();
    c.s = get_or<std::int64_t>(j, "s", 0);
    c.duration = get_or<std::int64_t>(j, "T", 1);
    try {
      c.placement = placement_from_string(get_or<std::string>(j, "placement", "even_grid"));
      c.mode = monitoring_mode_from_string(get_or<std::string>(j, "mode", "restart"));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    c.explicit_onsets = get_or<std::vector<std::int64_t>>(j, "onsets", {});
    if (c.placement == Placement::explicit_list) c.s = static_cast<std::int64_t>(c.explicit_onsets.size());
    c.eta_grid = j.at("eta_grid").get<std::vector<double>>();
    c.mu1_grid = get_or<std::vector<double>>(j, "mu1_grid", {});
    c.n_trials = j.at("n_trials").get<std::int64_t>();
    c.master_seed = j.at("master_seed").get<std::uint64_t>();
    c.arl_horizon_factor = get_or<double>(j, "arl_horizon_factor", 20.0);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

std::string ExperimentConfig::to_json() const {
  ordered_json j;
  j["schema_version"] = kConfigSchemaVersion;
  j["name"] = name;
  j["pair"] = pair_to_json(pair);
  j["horizon"] = horizon;
  j["s"] = s;
  j["T"] = duration;
  j["placement"] = std::string(to_string(placement));
  if (placement == Placement::explicit_list) j["onsets"] = explicit_onsets;
  j["eta_grid"] = eta_grid;
  if (!mu1_grid.empty()) j["mu1_grid"] = mu1_grid;
  j["n_trials"] = n_trials;
  j["mode"] = std::string(to_string(mode));
  j["master_seed"] = master_seed;
  j["arl_horizon_factor"] = arl_horizon_factor;
  return j.dump(2);
}

ExperimentConfig ExperimentConfig::desk_scale_preset() {
  ExperimentConfig c;
  c.name = "desk_scale";
  c.horizon = 10000;
  c.s = 100;
  c.duration = 1;
  c.eta_grid = {5, 10, 20, 50, 100, 200};
  c.n_trials = 2000;
  c.master_seed = 20180617;
  return c;
}

ExperimentConfig ExperimentConfig::full_scale_preset() {
  ExperimentConfig c = desk_scale_preset();
  c.name = "full_scale";
  c.horizon = 100000;
  c.s = 1000;
  return c;
}

ChangeSchedule experiment_schedule(const ExperimentConfig& config) {
  Rng rng = SimulationStreams::from_seed(config.master_seed).schedule;
  return make_schedule(config.horizon, config.s, config.duration, config.placement, rng,
                       config.explicit_onsets);
}

std::vector<ReportRow> run_eta_sweep(const ExperimentConfig& config, unsigned workers) {
  config.validate();
  const auto schedule = experiment_schedule(config);
  std::vector<ReportRow> rows;
  for (std::size_t k = 0; k < config.eta_grid.size(); ++k) {
    rows.push_back(evaluate_row(config, config.pair, schedule, config.eta_grid[k], k, workers));
  }
  return rows;
}

std::vector<ReportRow> run_mu_sweep(const ExperimentConfig& config, unsigned workers) {
  config.validate();
  if (config.mu1_grid.empty()) throw ConfigError("mu sweep needs a mu1_grid");
  const auto schedule = experiment_schedule(config);
  std::vector<ReportRow> rows;
  std::uint64_t key = 0;
  for (double eta : config.eta_grid) {
    for (double mu1 : config.mu1_grid) {
      const auto pair =
          DistributionPair::gaussian_mean_shift(config.pair.mean0(), mu1, config.pair.sigma());
      rows.push_back(evaluate_row(config, pair, schedule, eta, key++, workers));
    }
  }
  return rows;
}

std::vector<ReportRow> run_experiment(const ExperimentConfig& config, unsigned workers) {
  return config.mu1_grid.empty() ? run_eta_sweep(config, workers) : run_mu_sweep(config, workers);
}

std::string format_real(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

void write_report_csv(std::ostream& out, const std::vector<ReportRow>& rows) {
  out << kReportHeader << '\n';
  for (const auto& r : rows) {
    const auto& c = r.report;
    out << format_real(r.eta) << ',' << format_real(r.mu1) << ',' << r.s << ',' << r.duration
        << ',' << to_string(r.mode) << ',' << format_real(c.detect_first.value) << ','
        << format_real(c.detect_first.std_error) << ',' << format_real(c.detect_any.value) << ','
        << format_real(c.detect_any.std_error) << ',' << format_real(c.avg_missed.value) << ','
        << format_real(c.avg_missed.std_error) << ',' << format_real(c.arl_to_false_alarm.value)
        << ',' << format_real(c.arl_to_false_alarm.std_error) << ',' << format_real(c.pollak.value)
        << ',' << format_real(c.pollak.std_error) << ',' << format_real(c.ratio_bound.value)
        << ',' << format_real(c.ratio_bound.std_error) << ',' << r.n_trials << ',' << r.seed
        << '\n';
  }
}

std::string metadata_json(const ExperimentConfig& config, std::size_t n_rows,
                          std::string_view generated_at) {
  ordered_json j;
  j["config"] = ordered_json::parse(config.to_json());
  j["master_seed"] = config.master_seed;
  j["placement"] = std::string(to_string(config.placement));
  j["n_trials"] = config.n_trials;
  j["rows"] = n_rows;
  j["csv_header"] = std::string(kReportHeader);
  j["generated_at"] = std::string(generated_at);
  return j.dump(2);
}

}  // namespace qsearch
