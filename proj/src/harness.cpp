#include "lvnav/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <future>
#include <limits>
#include <random>
#include <stdexcept>

namespace lvnav::harness {

namespace {

using estimators::FilterKind;

int worker_count() {
  const char* env = std::getenv("LVNAV_WORKERS");
  if (env == nullptr) return 1;
  const int n = std::atoi(env);
  return n < 1 ? 1 : n;
}

std::string fmt(double value, int sig_digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", sig_digits, value);
  return buf;
}

RunMetrics summarize_run(const estimators::FilterRun& fr,
                         const scenario::ObservationStream& stream, int run) {
  RunMetrics m;
  m.run = run;
  m.diverged = fr.diverged;
  // A run that stopped early never finished the mission; its partial time
  // average would understate the failure, so it scores as unbounded error.
  if (fr.steps.empty() || fr.steps.size() < stream.epochs.size()) {
    m.time_avg_pos_err = std::numeric_limits<double>::infinity();
    m.time_avg_vel_err = std::numeric_limits<double>::infinity();
    m.time_avg_speed_err = std::numeric_limits<double>::infinity();
    m.diverged = true;
    return m;
  }
  double pos = 0.0, vel = 0.0, spd = 0.0, pdop_sum = 0.0, pms = 0.0, ums = 0.0;
  int pdop_count = 0;
  for (std::size_t i = 0; i < fr.steps.size(); ++i) {
    const auto& step = fr.steps[i];
    pos += std::hypot(step.err_downrange, step.err_altitude);
    spd += std::abs(step.err_speed);
    const auto& truth = stream.truth_states[i];
    const double vx_est = step.estimate.speed * std::cos(step.estimate.fpa);
    const double vh_est = step.estimate.speed * std::sin(step.estimate.fpa);
    const double vx_true = truth.speed * std::cos(truth.fpa);
    const double vh_true = truth.speed * std::sin(truth.fpa);
    vel += std::hypot(vx_est - vx_true, vh_est - vh_true);
    pms += step.predict_seconds * 1e3;
    ums += step.update_seconds * 1e3;
    if (!stream.epochs[i].degraded) {
      pdop_sum += stream.epochs[i].pdop;
      ++pdop_count;
    }
  }
  const double n = static_cast<double>(fr.steps.size());
  m.time_avg_pos_err = pos / n;
  m.time_avg_vel_err = vel / n;
  m.time_avg_speed_err = spd / n;
  m.mean_pdop = pdop_count > 0 ? pdop_sum / pdop_count : 0.0;
  m.mean_predict_ms = pms / n;
  m.mean_update_ms = ums / n;
  return m;
}

}  // namespace

std::uint64_t run_seed(std::uint64_t base_seed, int run) {
  // splitmix64 of (base, run) so streams are decorrelated across runs.
  std::uint64_t z = base_seed + 0x9e3779b97f4a7c15ULL *
                                    (static_cast<std::uint64_t>(run) + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

const CellStats* MonteCarloReport::find(FilterKind kind, int channels) const {
  for (const auto& cell : cells) {
    if (cell.kind == kind && cell.channels == channels) return &cell;
  }
  return nullptr;
}

double median(std::vector<double> values) {
  if (values.empty()) {
    throw std::invalid_argument("median: empty input");
  }
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) {
    throw std::invalid_argument("quantile: empty input");
  }
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = static_cast<std::size_t>(std::ceil(pos));
  const double w = pos - static_cast<double>(lo);
  return (1.0 - w) * values[lo] + w * values[hi];
}

double position_error_ratio(double pdop, double sigma_range,
                            double median_err) {
  if (!(median_err > 0.0)) {
    throw std::invalid_argument(
        "position_error_ratio: median error must be positive");
  }
  return pdop * sigma_range / median_err;
}

MonteCarloReport run_campaign(const scenario::ScenarioConfig& cfg, int runs,
                              const std::vector<FilterKind>& filters,
                              const std::vector<int>& channel_counts) {
  if (runs < 1) {
    throw std::invalid_argument("run_campaign: runs must be >= 1");
  }
  cfg.validate();
  const scenario::TruthLog truth = generate_truth(cfg);

  MonteCarloReport report;
  report.runs = runs;
  report.sigma_pseudorange = cfg.budget.sigma_pseudorange;

  for (int k : channel_counts) {
    scenario::ScenarioConfig cfg_k = cfg;
    cfg_k.channels = k;
    const estimators::FilterModels models = cfg_k.filter_models();
    const estimators::GaussianBelief init = cfg_k.initial_belief();

    std::vector<std::vector<RunMetrics>> per_filter(filters.size());
    for (auto& v : per_filter) v.resize(static_cast<std::size_t>(runs));

    auto do_run = [&](int run) {
      const auto stream = scenario::generate_observations(
          truth, cfg_k, run_seed(cfg_k.seed, run));
      for (std::size_t f = 0; f < filters.size(); ++f) {
        const auto fr = estimators::run_filter(
            filters[f], init, stream.epochs, stream.truth_states, models);
        per_filter[f][static_cast<std::size_t>(run)] =
            summarize_run(fr, stream, run);
      }
    };

    const int workers = std::min(worker_count(), runs);
    if (workers <= 1) {
      for (int run = 0; run < runs; ++run) do_run(run);
    } else {
      std::vector<std::future<void>> futures;
      futures.reserve(static_cast<std::size_t>(workers));
      for (int w = 0; w < workers; ++w) {
        futures.push_back(std::async(std::launch::async, [&, w]() {
          for (int run = w; run < runs; run += workers) do_run(run);
        }));
      }
      for (auto& fut : futures) fut.get();
    }

    // Cell aggregates; the UKF cell is located first for the timing baseline.
    double ukf_step_ms = 0.0;
    for (std::size_t f = 0; f < filters.size(); ++f) {
      if (filters[f] != FilterKind::Ukf) continue;
      double total = 0.0;
      for (const auto& m : per_filter[f]) {
        total += m.mean_predict_ms + m.mean_update_ms;
      }
      ukf_step_ms = total / static_cast<double>(runs);
    }

    for (std::size_t f = 0; f < filters.size(); ++f) {
      CellStats cell;
      cell.kind = filters[f];
      cell.channels = k;
      cell.runs = per_filter[f];

      std::vector<double> pos, vel;
      pos.reserve(cell.runs.size());
      vel.reserve(cell.runs.size());
      double step_ms = 0.0, pdop_sum = 0.0, pos_sum = 0.0;
      for (const auto& m : cell.runs) {
        pos.push_back(m.time_avg_pos_err);
        vel.push_back(m.time_avg_vel_err);
        step_ms += m.mean_predict_ms + m.mean_update_ms;
        pdop_sum += m.mean_pdop;
        pos_sum += m.time_avg_pos_err;
        if (m.diverged) ++cell.diverged_runs;
      }
      cell.median_pos_err = median(pos);
      cell.mean_pos_err = pos_sum / static_cast<double>(runs);
      cell.p95_pos_err = quantile(pos, 0.95);
      cell.median_vel_err = median(vel);
      cell.mean_step_ms = step_ms / static_cast<double>(runs);
      cell.mean_pdop = pdop_sum / static_cast<double>(runs);
      cell.reduction_vs_ukf_pct =
          ukf_step_ms > 0.0 ? 100.0 * (1.0 - cell.mean_step_ms / ukf_step_ms)
                            : 0.0;
      if (cell.kind == FilterKind::Ukf) cell.reduction_vs_ukf_pct = 0.0;
      cell.pos_err_ratio = position_error_ratio(
          cell.mean_pdop, cfg.budget.sigma_pseudorange, cell.median_pos_err);
      report.cells.push_back(std::move(cell));
    }
  }
  return report;
}

TimingReport benchmark_timing(const scenario::ScenarioConfig& cfg,
                              const std::vector<FilterKind>& filters,
                              int steps) {
  if (steps < 1) {
    throw std::invalid_argument("benchmark_timing: steps must be >= 1");
  }
  cfg.validate();
  const scenario::TruthLog truth = generate_truth(cfg);
  const auto stream =
      scenario::generate_observations(truth, cfg, run_seed(cfg.seed, 0));
  const estimators::FilterModels models = cfg.filter_models();
  const estimators::GaussianBelief init = cfg.initial_belief();
  constexpr int kWarmup = 100;

  using Clock = std::chrono::steady_clock;
  TimingReport report;
  report.steps = steps;
  report.channels = cfg.channels;

  for (FilterKind kind : filters) {
    double predict_total = 0.0;
    double update_total = 0.0;
    int counted = 0;
    estimators::GaussianBelief belief = init;
    std::size_t idx = 1;
    for (int s = 0; s < kWarmup + steps; ++s) {
      if (idx >= stream.epochs.size()) {
        idx = 1;
        belief = init;
      }
      const double t_prev = stream.epochs[idx - 1].epoch;
      const double dt = stream.epochs[idx].epoch - t_prev;

      const auto t0 = Clock::now();
      auto pred = estimators::predict(kind, belief, t_prev, dt, models);
      const auto t1 = Clock::now();
      auto upd = estimators::kalman_update(pred.belief, stream.epochs[idx],
                                           models,
                                           pred.sigma ? &*pred.sigma : nullptr);
      const auto t2 = Clock::now();

      belief = upd.belief;
      if (s >= kWarmup) {
        predict_total += std::chrono::duration<double>(t1 - t0).count();
        update_total += std::chrono::duration<double>(t2 - t1).count();
        ++counted;
      }
      ++idx;
    }
    TimingRow row;
    row.kind = kind;
    row.mean_predict_ms = predict_total / counted * 1e3;
    row.mean_update_ms = update_total / counted * 1e3;
    row.mean_step_ms = row.mean_predict_ms + row.mean_update_ms;
    report.rows.push_back(row);
  }

  double ukf_ms = 0.0;
  for (const auto& row : report.rows) {
    if (row.kind == FilterKind::Ukf) ukf_ms = row.mean_step_ms;
  }
  for (auto& row : report.rows) {
    if (row.kind == FilterKind::Ukf || ukf_ms <= 0.0) {
      row.reduction_vs_ukf_pct = 0.0;
    } else {
      row.reduction_vs_ukf_pct = 100.0 * (1.0 - row.mean_step_ms / ukf_ms);
    }
  }
  return report;
}

double bootstrap_chain_confidence(
    const std::vector<std::vector<double>>& ordered_series, int resamples,
    std::uint64_t seed) {
  if (ordered_series.size() < 2) {
    throw std::invalid_argument("bootstrap_chain_confidence: need >= 2 series");
  }
  const std::size_t n = ordered_series.front().size();
  for (const auto& s : ordered_series) {
    if (s.size() != n || n == 0) {
      throw std::invalid_argument(
          "bootstrap_chain_confidence: series must be equal, non-zero length");
    }
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  int satisfied = 0;
  std::vector<std::size_t> idx(n);
  std::vector<double> resampled(n);
  for (int b = 0; b < resamples; ++b) {
    for (std::size_t i = 0; i < n; ++i) idx[i] = pick(rng);
    bool ok = true;
    double prev = -std::numeric_limits<double>::infinity();
    for (const auto& series : ordered_series) {
      for (std::size_t i = 0; i < n; ++i) resampled[i] = series[idx[i]];
      const double med = median(resampled);
      if (med < prev) {
        ok = false;
        break;
      }
      prev = med;
    }
    if (ok) ++satisfied;
  }
  return static_cast<double>(satisfied) / resamples;
}

void write_summary_csv(const MonteCarloReport& report,
                       const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "filter,channels,median_pos_err_m,mean_pos_err_m,p95_pos_err_m,"
         "median_vel_err_mps,mean_step_ms,reduction_vs_ukf_pct,pos_err_ratio,"
         "diverged_runs\n";
  for (const auto& cell : report.cells) {
    out << to_string(cell.kind) << ',' << cell.channels << ','
        << fmt(cell.median_pos_err, 17) << ',' << fmt(cell.mean_pos_err, 17)
        << ',' << fmt(cell.p95_pos_err, 17) << ','
        << fmt(cell.median_vel_err, 17) << ',' << fmt(cell.mean_step_ms, 17)
        << ',' << fmt(cell.reduction_vs_ukf_pct, 17) << ','
        << fmt(cell.pos_err_ratio, 17) << ',' << cell.diverged_runs << '\n';
  }
}

void write_runs_csv(const MonteCarloReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "filter,channels,run,time_avg_pos_err_m,time_avg_vel_err_mps,"
         "time_avg_speed_err_mps,mean_pdop,mean_predict_ms,mean_update_ms,"
         "diverged\n";
  for (const auto& cell : report.cells) {
    for (const auto& m : cell.runs) {
      out << to_string(cell.kind) << ',' << cell.channels << ',' << m.run
          << ',' << fmt(m.time_avg_pos_err, 17) << ','
          << fmt(m.time_avg_vel_err, 17) << ','
          << fmt(m.time_avg_speed_err, 17) << ',' << fmt(m.mean_pdop, 17)
          << ',' << fmt(m.mean_predict_ms, 17) << ','
          << fmt(m.mean_update_ms, 17) << ',' << (m.diverged ? 1 : 0) << '\n';
    }
  }
}

void write_timing_csv(const TimingReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "filter,channels,steps,mean_step_ms,mean_predict_ms,mean_update_ms,"
         "reduction_vs_ukf_pct\n";
  for (const auto& row : report.rows) {
    out << to_string(row.kind) << ',' << report.channels << ','
        << report.steps << ',' << fmt(row.mean_step_ms, 17) << ','
        << fmt(row.mean_predict_ms, 17) << ',' << fmt(row.mean_update_ms, 17)
        << ',' << fmt(row.reduction_vs_ukf_pct, 17) << '\n';
  }
}

void write_truth_csv(const scenario::TruthLog& truth, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "t,x,h,v,gamma,m,C,b,bdot,ecef_x,ecef_y,ecef_z\n";
  for (const auto& s : truth) {
    out << fmt(s.t, 9) << ',' << fmt(s.state.downrange, 9) << ','
        << fmt(s.state.altitude, 9) << ',' << fmt(s.state.speed, 9) << ','
        << fmt(s.state.fpa, 9) << ',' << fmt(s.state.mass, 9) << ','
        << fmt(s.state.drag_coeff, 9) << ',' << fmt(s.state.clock_bias, 9)
        << ',' << fmt(s.state.clock_drift, 9) << ',' << fmt(s.ecef_pos.x(), 9)
        << ',' << fmt(s.ecef_pos.y(), 9) << ',' << fmt(s.ecef_pos.z(), 9)
        << '\n';
  }
}

void write_observation_csv(const std::vector<gnss::GnssObservation>& raw,
                           const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "t,sat_id,rho_m,phi_m,rate_mps,elevation_rad\n";
  for (const auto& obs : raw) {
    for (const auto& ch : obs.channels) {
      out << fmt(obs.epoch, 9) << ',' << ch.sat_index << ','
          << fmt(ch.pseudorange, 9) << ',' << fmt(ch.carrier_range, 9) << ','
          << fmt(ch.range_rate, 9) << ',' << fmt(ch.elevation, 9) << '\n';
    }
  }
}

void write_filter_run_csv(const estimators::FilterRun& run,
                          const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "epoch_s,filter,err_downrange_m,err_altitude_m,err_speed_mps,"
         "err_gamma_rad,cov_trace,predict_ms,update_ms,diverged_flag\n";
  for (const auto& step : run.steps) {
    out << fmt(step.epoch, 9) << ',' << to_string(run.kind) << ','
        << fmt(step.err_downrange, 17) << ',' << fmt(step.err_altitude, 17)
        << ',' << fmt(step.err_speed, 17) << ',' << fmt(step.err_fpa, 17)
        << ',' << fmt(step.cov_trace, 17) << ','
        << fmt(step.predict_seconds * 1e3, 9) << ','
        << fmt(step.update_seconds * 1e3, 9) << ','
        << (step.diverged ? 1 : 0) << '\n';
  }
}

}  // namespace lvnav::harness
