// lvnav command line: truth/observation export, single filter runs, Monte
// Carlo campaigns, per-step timing benchmarks and report aggregation.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "lvnav/harness.hpp"
#include "lvnav/scenario.hpp"

namespace fs = std::filesystem;
using lvnav::estimators::FilterKind;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitDivergence = 2;

struct CommonOpts {
  std::string config;
  std::vector<int> channels;
  int runs = 200;
  std::string filter = "all";
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out = ".";
  std::string measurement_mode;
};

std::vector<FilterKind> parse_filters(const std::string& name) {
  if (name == "all") {
    return {FilterKind::Ekf, FilterKind::Spukf, FilterKind::Espukf,
            FilterKind::Ukf};
  }
  return {lvnav::estimators::filter_kind_from_string(name)};
}

lvnav::scenario::ScenarioConfig load_scenario(const CommonOpts& opts) {
  lvnav::scenario::ScenarioConfig cfg =
      opts.config.empty() ? lvnav::scenario::build_crs5()
                          : lvnav::scenario::load_config(opts.config);
  if (opts.seed_set) cfg.seed = opts.seed;
  if (!opts.channels.empty()) cfg.channels = opts.channels.front();
  if (!opts.measurement_mode.empty()) {
    if (opts.measurement_mode == "range") {
      cfg.mode = lvnav::estimators::MeasurementMode::RangeOnly;
    } else if (opts.measurement_mode == "range-rate") {
      cfg.mode = lvnav::estimators::MeasurementMode::RangeAndRate;
    } else {
      throw std::invalid_argument(
          "--measurement-mode: expected range|range-rate");
    }
  }
  cfg.validate();
  return cfg;
}

std::string out_path(const CommonOpts& opts, const std::string& name) {
  fs::create_directories(opts.out);
  return (fs::path(opts.out) / name).string();
}

void print_timing(const lvnav::harness::TimingReport& report) {
  std::printf("%-8s %14s %14s %14s %16s\n", "filter", "step (ms)",
              "predict (ms)", "update (ms)", "vs UKF (%)");
  for (const auto& row : report.rows) {
    std::printf("%-8s %14.4f %14.4f %14.4f %16.2f\n",
                lvnav::estimators::to_string(row.kind).c_str(),
                row.mean_step_ms, row.mean_predict_ms, row.mean_update_ms,
                row.reduction_vs_ukf_pct);
  }
}

void print_summary(const lvnav::harness::MonteCarloReport& report) {
  int last_channels = -1;
  for (const auto& cell : report.cells) {
    if (cell.channels != last_channels) {
      std::printf("\nNo. of GPS observations: %d\n", cell.channels);
      std::printf("%-8s %20s %20s %12s\n", "filter", "median pos err (m)",
                  "proc time (ms)", "diverged");
      last_channels = cell.channels;
    }
    std::printf("%-8s %20.3f %20.4f %12d\n",
                lvnav::estimators::to_string(cell.kind).c_str(),
                cell.median_pos_err, cell.mean_step_ms, cell.diverged_runs);
  }
}

int max_divergence_pct(const lvnav::harness::MonteCarloReport& report) {
  int worst = 0;
  for (const auto& cell : report.cells) {
    if (cell.runs.empty()) continue;
    const int pct = static_cast<int>(
        100.0 * cell.diverged_runs / static_cast<double>(cell.runs.size()));
    worst = std::max(worst, pct);
  }
  return worst;
}

// `report` subcommand: re-aggregate summary CSVs into a Table-2 style print.
int aggregate_reports(const std::vector<std::string>& paths) {
  struct Row {
    std::string filter;
    int channels;
    double median_err;
    double step_ms;
  };
  std::vector<Row> rows;
  for (const auto& path : paths) {
    std::ifstream in(path);
    if (!in) {
      std::cerr << "report: cannot open " << path << "\n";
      return kExitConfig;
    }
    std::string line;
    if (!std::getline(in, line)) continue;  // header
    while (std::getline(in, line)) {
      std::stringstream ss(line);
      std::string field;
      std::vector<std::string> fields;
      while (std::getline(ss, field, ',')) fields.push_back(field);
      if (fields.size() < 10) continue;
      rows.push_back(Row{fields[0], std::stoi(fields[1]),
                         std::stod(fields[2]), std::stod(fields[6])});
    }
  }
  std::map<int, std::vector<Row>> by_channels;
  for (const auto& row : rows) by_channels[row.channels].push_back(row);
  for (const auto& [channels, group] : by_channels) {
    std::printf("\nNo. of GPS observations: %d\n", channels);
    std::printf("%-8s %20s %20s\n", "filter", "Position error (m)",
                "Processing time (ms)");
    for (const auto& row : group) {
      std::printf("%-8s %20.3f %20.4f\n", row.filter.c_str(), row.median_err,
                  row.step_ms);
    }
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Launch ascent GNSS navigation simulator and filter benchmark"};
  app.require_subcommand(1);

  CommonOpts opts;
  auto add_common = [&](CLI::App* cmd, bool with_runs) {
    cmd->add_option("--config", opts.config, "Scenario config file");
    cmd->add_option("--channels", opts.channels, "GPS channels (4, 6, 8 or 10)")
        ->check(CLI::IsMember({4, 6, 8, 10}));
    if (with_runs) {
      cmd->add_option("--runs", opts.runs, "Monte Carlo realizations");
    }
    cmd->add_option("--filter", opts.filter,
                    "Filter: ekf|ukf|spukf|espukf|all")
        ->check(CLI::IsMember({"ekf", "ukf", "spukf", "espukf", "all"}));
    cmd->add_option("--seed", opts.seed, "Noise seed")
        ->each([&](const std::string&) { opts.seed_set = true; });
    cmd->add_option("--out", opts.out, "Output directory");
    cmd->add_option("--measurement-mode", opts.measurement_mode,
                    "range | range-rate")
        ->check(CLI::IsMember({"range", "range-rate"}));
  };

  auto* truth_cmd = app.add_subcommand("truth", "Write the reference trajectory CSV");
  add_common(truth_cmd, false);
  auto* observe_cmd = app.add_subcommand("observe", "Write one observation stream CSV");
  add_common(observe_cmd, false);
  auto* run_cmd = app.add_subcommand("run", "Single-realization filter run CSVs");
  add_common(run_cmd, false);
  auto* campaign_cmd = app.add_subcommand("campaign", "Monte Carlo campaign");
  add_common(campaign_cmd, true);
  double max_div_pct = 50.0;
  campaign_cmd->add_option("--max-divergence-pct", max_div_pct,
                           "Exit 2 when any filter exceeds this divergence rate");
  auto* bench_cmd = app.add_subcommand("bench", "Per-step processing time benchmark");
  add_common(bench_cmd, false);
  int bench_steps = 1000;
  bench_cmd->add_option("--steps", bench_steps, "Timed steps after warmup");
  auto* report_cmd = app.add_subcommand("report", "Aggregate summary CSVs");
  std::vector<std::string> report_inputs;
  report_cmd->add_option("inputs", report_inputs, "summary.csv files")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (report_cmd->parsed()) {
      return aggregate_reports(report_inputs);
    }

    const auto cfg = load_scenario(opts);

    if (truth_cmd->parsed()) {
      const auto truth = lvnav::scenario::generate_truth(cfg);
      lvnav::harness::write_truth_csv(truth, out_path(opts, "truth.csv"));
      std::cout << "wrote " << out_path(opts, "truth.csv") << " ("
                << truth.size() << " epochs)\n";
      return kExitOk;
    }

    if (observe_cmd->parsed()) {
      const auto truth = lvnav::scenario::generate_truth(cfg);
      const auto stream = lvnav::scenario::generate_observations(
          truth, cfg, lvnav::harness::run_seed(cfg.seed, 0));
      lvnav::harness::write_observation_csv(
          stream.raw, out_path(opts, "observations.csv"));
      std::cout << "wrote " << out_path(opts, "observations.csv") << "\n";
      return kExitOk;
    }

    if (run_cmd->parsed()) {
      const auto truth = lvnav::scenario::generate_truth(cfg);
      const auto stream = lvnav::scenario::generate_observations(
          truth, cfg, lvnav::harness::run_seed(cfg.seed, 0));
      const auto models = cfg.filter_models();
      const auto init = cfg.initial_belief();
      bool any_diverged = false;
      for (FilterKind kind : parse_filters(opts.filter)) {
        const auto fr = lvnav::estimators::run_filter(
            kind, init, stream.epochs, stream.truth_states, models);
        const std::string name =
            "filter_run_" + lvnav::estimators::to_string(kind) + ".csv";
        lvnav::harness::write_filter_run_csv(fr, out_path(opts, name));
        std::cout << "wrote " << out_path(opts, name)
                  << (fr.diverged ? " (diverged)" : "") << "\n";
        any_diverged = any_diverged || fr.diverged;
      }
      return any_diverged ? kExitDivergence : kExitOk;
    }

    if (campaign_cmd->parsed()) {
      std::vector<int> channel_counts =
          opts.channels.empty() ? std::vector<int>{cfg.channels}
                                : opts.channels;
      const auto report = lvnav::harness::run_campaign(
          cfg, opts.runs, parse_filters(opts.filter), channel_counts);
      lvnav::harness::write_summary_csv(report, out_path(opts, "summary.csv"));
      lvnav::harness::write_runs_csv(report, out_path(opts, "runs.csv"));
      print_summary(report);
      std::cout << "\nwrote " << out_path(opts, "summary.csv") << " and "
                << out_path(opts, "runs.csv") << "\n";
      if (max_divergence_pct(report) > max_div_pct) {
        std::cerr << "divergence threshold breached\n";
        return kExitDivergence;
      }
      return kExitOk;
    }

    if (bench_cmd->parsed()) {
      const auto report = lvnav::harness::benchmark_timing(
          cfg, parse_filters(opts.filter), bench_steps);
      lvnav::harness::write_timing_csv(report, out_path(opts, "timing.csv"));
      print_timing(report);
      return kExitOk;
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDivergence;
  }
  return kExitOk;
}
