#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lvnav/estimators.hpp"
#include "lvnav/scenario.hpp"

namespace lvnav::harness {

/// Per-run, per-filter aggregates of one noise realization.
struct RunMetrics {
  int run = 0;
  double time_avg_pos_err = 0.0;   ///< m, down-range/altitude plane
  double time_avg_vel_err = 0.0;   ///< m/s, planar velocity vector
  double time_avg_speed_err = 0.0; ///< m/s
  double mean_pdop = 0.0;
  double mean_predict_ms = 0.0;
  double mean_update_ms = 0.0;
  bool diverged = false;
};

/// One (filter, channel-count) cell of the campaign report.
struct CellStats {
  estimators::FilterKind kind = estimators::FilterKind::Ekf;
  int channels = 0;
  std::vector<RunMetrics> runs;

  double median_pos_err = 0.0;
  double mean_pos_err = 0.0;
  double p95_pos_err = 0.0;
  double median_vel_err = 0.0;
  double mean_step_ms = 0.0;
  double reduction_vs_ukf_pct = 0.0;
  double mean_pdop = 0.0;
  double pos_err_ratio = 0.0;
  int diverged_runs = 0;
};

struct MonteCarloReport {
  std::vector<CellStats> cells;
  double sigma_pseudorange = 0.0;
  int runs = 0;

  const CellStats* find(estimators::FilterKind kind, int channels) const;
};

/// Monte Carlo campaign over one shared truth trajectory. Every filter in a
/// run consumes the identical observation stream; each run draws fresh noise
/// from a seed derived from the scenario seed and the run index. Worker count
/// comes from the LVNAV_WORKERS environment variable (default 1).
MonteCarloReport run_campaign(const scenario::ScenarioConfig& cfg, int runs,
                              const std::vector<estimators::FilterKind>& filters,
                              const std::vector<int>& channel_counts);

/// PDOP * sigma_R / median position error. Throws on a non-positive median.
double position_error_ratio(double pdop, double sigma_range,
                            double median_err);

struct TimingRow {
  estimators::FilterKind kind = estimators::FilterKind::Ekf;
  double mean_step_ms = 0.0;
  double mean_predict_ms = 0.0;
  double mean_update_ms = 0.0;
  double reduction_vs_ukf_pct = 0.0;
};

struct TimingReport {
  std::vector<TimingRow> rows;
  int steps = 0;
  int channels = 0;
};

/// Single-threaded per-step wall-clock benchmark: 100 warmup steps, then
/// `steps` timed predict+update cycles over the scenario's observation
/// stream.
TimingReport benchmark_timing(const scenario::ScenarioConfig& cfg,
                              const std::vector<estimators::FilterKind>& filters,
                              int steps);

double median(std::vector<double> values);
double quantile(std::vector<double> values, double q);

/// Fraction of paired bootstrap resamples in which the medians of the given
/// series appear in non-decreasing order. Series must be equal length and
/// index-aligned (same run, same noise stream).
double bootstrap_chain_confidence(
    const std::vector<std::vector<double>>& ordered_series, int resamples,
    std::uint64_t seed);

// CSV exports. Summary and per-run files round-trip at full double precision;
// the observation log uses 9 significant digits.
void write_summary_csv(const MonteCarloReport& report, const std::string& path);
void write_runs_csv(const MonteCarloReport& report, const std::string& path);
void write_timing_csv(const TimingReport& report, const std::string& path);
void write_truth_csv(const scenario::TruthLog& truth, const std::string& path);
void write_observation_csv(const std::vector<gnss::GnssObservation>& raw,
                           const std::string& path);
void write_filter_run_csv(const estimators::FilterRun& run,
                          const std::string& path);

/// Deterministic per-run noise seed.
std::uint64_t run_seed(std::uint64_t base_seed, int run);

}  // namespace lvnav::harness
