#include "cli.hpp"

#include <charconv>
#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qsearch/detector.hpp"
#include "qsearch/distributions.hpp"
#include "qsearch/harness.hpp"
#include "qsearch/sequence_model.hpp"

namespace qsearch::cli {

namespace {

struct PairFlags {
  double mean0 = 0.0;
  double mean1 = 1.0;
  double sigma = 1.0;

  void attach(CLI::App& cmd) {
    cmd.add_option("--mean0", mean0, "Nominal mean")->capture_default_str();
    cmd.add_option("--mean1", mean1, "Post-change mean")->capture_default_str();
    cmd.add_option("--sigma", sigma, "Common standard deviation")->capture_default_str();
  }

  DistributionPair build() const { return DistributionPair::gaussian_mean_shift(mean0, mean1, sigma); }
};

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

bool parse_real(std::string_view text, double& value) {
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  return res.ec == std::errc() && res.ptr == text.data() + text.size();
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t tt = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

class OutputFile {
 public:
  OutputFile(const std::string& path, std::ostream& fallback) {
    if (path == "-") {
      stream_ = &fallback;
    } else {
      file_.open(path, std::ios::binary);
      if (!file_) throw std::runtime_error("cannot open '" + path + "' for writing");
      stream_ = &file_;
    }
  }
  std::ostream& stream() { return *stream_; }

 private:
  std::ofstream file_;
  std::ostream* stream_;
};

int cmd_calibrate(const PairFlags& flags, double eta, std::ostream& out) {
  const auto detector = ShewhartDetector::calibrate(flags.build(), eta);
  out << "{\"alpha\":" << format_real(detector.alpha())
      << ",\"tail\":" << format_real(detector.achieved_tail())
      << ",\"eta\":" << format_real(detector.eta()) << "}\n";
  return kSuccess;
}

struct DetectFlags {
  PairFlags pair;
  double eta = 0.0;
  double alpha = 0.0;
  bool use_alpha = false;
  bool restart = false;
  std::string input = "-";
  std::uint64_t seed = 0;
};

int cmd_detect(const DetectFlags& flags, std::istream& in, std::ostream& out, std::ostream& err) {
  const auto pair = flags.pair.build();
  const auto detector = flags.use_alpha ? ShewhartDetector::with_threshold(pair, flags.alpha)
                                        : ShewhartDetector::calibrate(pair, flags.eta);
  std::ifstream file;
  std::istream* source = &in;
  if (flags.input != "-") {
    file.open(flags.input);
    if (!file) {
      err << "detect: cannot open '" << flags.input << "'\n";
      return kRuntimeError;
    }
    source = &file;
  }

  Rng rng(flags.seed);
  out << "t,lr,verdict\n";
  std::string line;
  std::int64_t line_no = 0;
  std::int64_t t = 0;
  bool alarmed = false;
  while (std::getline(*source, line)) {
    ++line_no;
    const auto text = trim(line);
    if (text.empty()) continue;
    double x = 0.0;
    if (!parse_real(text, x)) {
      err << "detect: line " << line_no << ": cannot parse observation '" << text << "'\n";
      return kRuntimeError;
    }
    ++t;
    const auto decision = detector.step(x, rng);
    const bool alarm = decision.verdict == Verdict::alarm;
    out << t << ',' << format_real(decision.lr_value) << ',' << (alarm ? "alarm" : "continue")
        << '\n';
    if (alarm) {
      alarmed = true;
      if (!flags.restart) break;
    }
  }
  return alarmed ? kAlarm : kExhausted;
}

struct SimulateFlags {
  PairFlags pair;
  std::int64_t horizon = 0;
  std::int64_t s = 0;
  std::int64_t duration = 1;
  std::string placement = "even_grid";
  std::vector<std::int64_t> onsets;
  std::uint64_t seed = 0;
  std::string sequence_out = "sequence.csv";
  std::string schedule_out = "schedule.json";
};

int cmd_simulate(const SimulateFlags& flags, std::ostream& out) {
  const auto pair = flags.pair.build();
  auto streams = SimulationStreams::from_seed(flags.seed);
  const auto schedule = make_schedule(flags.horizon, flags.s, flags.duration,
                                      placement_from_string(flags.placement), streams.schedule,
                                      flags.onsets);
  const auto xs = generate_sequence(pair, schedule, streams.data);
  {
    OutputFile seq(flags.sequence_out, out);
    for (double x : xs) seq.stream() << format_real(x) << '\n';
  }
  {
    OutputFile sched(flags.schedule_out, out);
    sched.stream() << schedule.to_json() << '\n';
  }
  return kSuccess;
}

struct ExperimentFlags {
  std::string config_path;
  std::string out_path = "-";
  std::string meta_path;
  unsigned workers = 0;
};

int cmd_experiment(const ExperimentFlags& flags, std::ostream& out) {
  const auto config = ExperimentConfig::load(flags.config_path);
  const auto rows = run_experiment(config, flags.workers);
  {
    OutputFile csv(flags.out_path, out);
    write_report_csv(csv.stream(), rows);
  }
  std::string meta = flags.meta_path;
  if (meta.empty() && flags.out_path != "-") meta = flags.out_path + ".meta.json";
  if (!meta.empty()) {
    OutputFile side(meta, out);
    side.stream() << metadata_json(config, rows.size(), utc_timestamp()) << '\n';
  }
  return kSuccess;
}

}  // namespace

int run(int argc, const char* const* argv, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"Shewhart quickest search for transient change-points"};
  app.name("qsearch");
  app.require_subcommand(1);

  const double inf = std::numeric_limits<double>::infinity();

  PairFlags calibrate_pair;
  double calibrate_eta = 0.0;
  auto* calibrate = app.add_subcommand("calibrate", "Threshold alpha with P0(l >= alpha) = 1/eta");
  calibrate->add_option("--eta", calibrate_eta, "Average run length to false alarm (>= 1)")
      ->required()
      ->check(CLI::Range(1.0, inf));
  calibrate_pair.attach(*calibrate);

  DetectFlags detect_flags;
  auto* detect = app.add_subcommand("detect", "Run the Shewhart test over newline-delimited observations");
  auto* eta_opt = detect->add_option("--eta", detect_flags.eta, "Calibrate alpha from eta (>= 1)")
                      ->check(CLI::Range(1.0, inf));
  auto* alpha_opt = detect->add_option("--alpha", detect_flags.alpha, "Explicit threshold alpha (>= 0)")
                        ->check(CLI::Range(0.0, inf));
  eta_opt->excludes(alpha_opt);
  detect->add_flag("--restart", detect_flags.restart, "Keep reading after an alarm");
  detect->add_option("--input", detect_flags.input, "Observation file, '-' for stdin")->capture_default_str();
  detect->add_option("--seed", detect_flags.seed, "Seed for boundary randomization")->capture_default_str();
  detect_flags.pair.attach(*detect);

  SimulateFlags sim;
  auto* simulate = app.add_subcommand("simulate", "Generate a change schedule and an observation sequence");
  simulate->add_option("--horizon", sim.horizon, "Sequence length")->required()->check(CLI::PositiveNumber);
  simulate->add_option("--s", sim.s, "Number of change-points")->capture_default_str()->check(CLI::NonNegativeNumber);
  simulate->add_option("--T", sim.duration, "Transient duration")->capture_default_str()->check(CLI::PositiveNumber);
  simulate->add_option("--placement", sim.placement, "even_grid | uniform_random | explicit")
      ->capture_default_str()
      ->check(CLI::IsMember({"even_grid", "uniform_random", "explicit"}));
  simulate->add_option("--onsets", sim.onsets, "Onsets for --placement explicit")->delimiter(',');
  simulate->add_option("--seed", sim.seed, "Master seed")->capture_default_str();
  simulate->add_option("--sequence-out", sim.sequence_out, "Sequence CSV path, '-' for stdout")->capture_default_str();
  simulate->add_option("--schedule-out", sim.schedule_out, "Schedule JSON path, '-' for stdout")->capture_default_str();
  sim.pair.attach(*simulate);

  ExperimentFlags exp;
  auto* experiment = app.add_subcommand("experiment", "Run a configured sweep and write the report CSV");
  experiment->add_option("config", exp.config_path, "Experiment config JSON")->required();
  experiment->add_option("--out", exp.out_path, "Report CSV path, '-' for stdout")->capture_default_str();
  experiment->add_option("--meta", exp.meta_path, "Metadata JSON path (default <out>.meta.json)");
  experiment->add_option("--workers", exp.workers, "Worker threads, 0 = all cores")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kUsageError;
  }

  try {
    if (calibrate->parsed()) return cmd_calibrate(calibrate_pair, calibrate_eta, out);
    if (detect->parsed()) {
      if (eta_opt->count() == 0 && alpha_opt->count() == 0) {
        err << "detect: one of --eta or --alpha is required\n";
        return kUsageError;
      }
      detect_flags.use_alpha = alpha_opt->count() > 0;
      return cmd_detect(detect_flags, in, out, err);
    }
    if (simulate->parsed()) return cmd_simulate(sim, out);
    if (experiment->parsed()) return cmd_experiment(exp, out);
  } catch (const std::invalid_argument& e) {
    err << "qsearch: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    err << "qsearch: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kUsageError;
}

}  // namespace qsearch::cli
