#include "lvnav/scenario.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <algorithm>
#include <memory>
#include <sstream>
#include <stdexcept>

namespace lvnav::scenario {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

// Filters never run with a literal zero measurement variance; a zero noise
// budget still needs an invertible innovation covariance.
constexpr double kRangeVarFloor = 1e-4;  // (1 cm)^2
constexpr double kRateVarFloor = 1e-6;   // (1 mm/s)^2

}  // namespace

namespace {

// Piecewise-linear Gaussian knots per forced channel; deterministic in the
// scenario seed.
class KnotForcing final : public dynamics::RateForcing {
 public:
  KnotForcing(const TruthNoiseConfig& cfg, double duration,
              std::uint64_t seed) {
    dt_ = cfg.correlation_time;
    const auto knots = static_cast<std::size_t>(duration / dt_) + 2;
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    std::normal_distribution<double> n(0.0, 1.0);
    accel_.resize(knots);
    drag_rate_.resize(knots);
    for (std::size_t k = 0; k < knots; ++k) {
      accel_[k] = cfg.sigma_accel * n(rng);
      drag_rate_[k] = cfg.sigma_drag_coeff_rate * n(rng);
    }
  }

  Vec8 at(double t) const override {
    // The guidance-free gravity turn amplifies any early speed dispersion
    // exponentially (the vertical phase is unstable), so thrust dispersion
    // phases in once the turn is established; the coefficient wander starts
    // as soon as the dynamic pressure is meaningful.
    Vec8 out = Vec8::Zero();
    out(2) = ramp(t, 60.0, 120.0) * interp(accel_, t);
    out(5) = ramp(t, 20.0, 60.0) * interp(drag_rate_, t);
    return out;
  }

 private:
  static double ramp(double t, double start, double full) {
    return std::clamp((t - start) / (full - start), 0.0, 1.0);
  }

  double interp(const std::vector<double>& knots, double t) const {
    const double pos = std::max(t, 0.0) / dt_;
    const auto lo = std::min(static_cast<std::size_t>(pos), knots.size() - 2);
    const double w = pos - static_cast<double>(lo);
    return (1.0 - w) * knots[lo] + w * knots[lo + 1];
  }

  double dt_ = 5.0;
  std::vector<double> accel_;
  std::vector<double> drag_rate_;
};

}  // namespace

gnss::LaunchSiteFrame ScenarioConfig::frame() const {
  return gnss::LaunchSiteFrame(site_latitude, site_longitude, launch_azimuth,
                               environment.earth_radius);
}

estimators::FilterModels ScenarioConfig::filter_models() const {
  estimators::FilterModels models;
  models.vehicle = vehicle;
  models.environment = environment;
  models.frame = frame();
  models.process_noise = process_noise_diag * Mat8::Identity();
  models.ut = ut;
  models.mode = mode;
  models.ekf_stm = ekf_stm;
  models.substeps_per_second = substeps_per_second;
  return models;
}

estimators::GaussianBelief ScenarioConfig::initial_belief() const {
  estimators::GaussianBelief belief;
  belief.mean = dynamics::StateVector::from_vector(init_mean);
  belief.covariance = init_cov_diag.asDiagonal();
  return belief;
}

dynamics::StateVector ScenarioConfig::truth_initial_state() const {
  Vec8 v = init_mean;
  for (int i = 0; i < kStateDim; ++i) {
    if (i == 3) continue;  // liftoff attitude stays vertical
    v(i) += truth_init_sigma_offset(i) * std::sqrt(init_cov_diag(i));
  }
  dynamics::StateVector s = dynamics::StateVector::from_vector(v);
  s.fpa = truth_initial_fpa;
  s.clock_bias = truth_clock_bias;
  s.clock_drift = truth_clock_drift;
  return s;
}

void ScenarioConfig::validate() const {
  vehicle.validate(environment);
  if (channels < 4) {
    throw std::invalid_argument("scenario.channels: must be >= 4");
  }
  if (channels > constellation.count()) {
    throw std::invalid_argument(
        "scenario.channels: exceeds constellation size");
  }
  if (epoch_rate_hz <= 0.0) {
    throw std::invalid_argument("scenario.epoch_rate_hz: must be positive");
  }
  if (duration + 1e-9 < vehicle.final_burnout_time()) {
    throw std::invalid_argument(
        "scenario.duration_s: shorter than the powered flight");
  }
  if (truth_substep <= 0.0) {
    throw std::invalid_argument("scenario.truth_substep_s: must be positive");
  }
  if (substeps_per_second < 1) {
    throw std::invalid_argument("filter.substeps_per_second: must be >= 1");
  }
  if (!(init_cov_diag.minCoeff() > 0.0)) {
    throw std::invalid_argument("filter.init_cov_diag: must be positive");
  }
  if (budget.sigma_pseudorange < 0.0 || budget.sigma_carrier < 0.0 ||
      budget.sigma_range_rate < 0.0) {
    throw std::invalid_argument("noise: sigmas must be non-negative");
  }
}

ScenarioConfig build_crs5() {
  ScenarioConfig cfg;

  dynamics::StageParams stage1;
  stage1.inert_mass = 23100.0;
  stage1.propellant_mass = 395700.0;
  stage1.thrust = 5886e3;
  stage1.isp = 282.0;
  stage1.burn_duration = 187.0;

  dynamics::StageParams stage2;
  stage2.inert_mass = 3900.0;
  stage2.propellant_mass = 92670.0;
  stage2.thrust = 801e3;
  stage2.isp = 340.0;
  stage2.burn_duration = 386.0;

  cfg.vehicle.stages = {stage1, stage2};
  cfg.vehicle.payload_mass = 2317.0;
  cfg.vehicle.spacecraft_mass = 4200.0;
  cfg.vehicle.frontal_area = std::numbers::pi * 1.83 * 1.83;  // 3.66 m dia
  cfg.vehicle.pitch_kick_time = 10.0;
  // Calibrated so the gravity turn ends near horizontal at final burnout
  // with ~290 km altitude; larger kicks tip past horizontal mid-flight.
  cfg.vehicle.pitch_kick_angle = 1e-4;

  cfg.init_mean << 0.0, 0.0, 5.6543, 1.5708, 5.20e5, 0.5010, 400.0, 2.0;
  cfg.init_cov_diag << 1.0, 1.0, 0.01, 1e-6, 9.0, 0.01, 9e4, 25.0;
  cfg.process_noise_diag = 1e-30;
  cfg.truth_clock_bias = 400.0;
  cfg.truth_clock_drift = 2.0;

  cfg.duration = 573.0;
  cfg.channels = 6;

  // Measurement noise calibrated so the UKF's k=6 median position error
  // lands near the published benchmark level (about seven meters).
  cfg.budget.sigma_pseudorange = 30.0;
  cfg.budget.sigma_carrier = 0.05;
  cfg.budget.sigma_range_rate = 4.0;

  // Six slots per plane keep ten channels available throughout the ascent.
  cfg.constellation.slots_per_plane = 6;
  return cfg;
}

TruthLog generate_truth(const ScenarioConfig& cfg) {
  cfg.validate();
  const gnss::LaunchSiteFrame site = cfg.frame();
  const double dt = 1.0 / cfg.epoch_rate_hz;
  const auto epochs =
      static_cast<std::size_t>(std::floor(cfg.duration * cfg.epoch_rate_hz + 1e-9)) + 1;
  const int substeps =
      std::max(1, static_cast<int>(std::llround(dt / cfg.truth_substep)));

  std::unique_ptr<KnotForcing> forcing;
  if (cfg.truth_noise.enabled) {
    forcing = std::make_unique<KnotForcing>(cfg.truth_noise, cfg.duration,
                                            cfg.seed);
  }

  // The flown vehicle, as opposed to the nominal one the filters model.
  dynamics::VehicleConfig flown = cfg.vehicle;
  flown.pitch_kick_angle *= 1.0 + cfg.dispersion.pitch_kick_fraction;
  for (auto& st : flown.stages) {
    st.thrust *= 1.0 + cfg.dispersion.thrust_fraction;
  }

  TruthLog log;
  log.reserve(epochs);
  dynamics::StateVector state = cfg.truth_initial_state();
  for (std::size_t k = 0; k < epochs; ++k) {
    const double t = static_cast<double>(k) * dt;
    if (k > 0) {
      state = dynamics::propagate(state, dt, substeps, flown,
                                  cfg.environment, t - dt, forcing.get());
    }
    TruthSample sample;
    sample.t = t;
    sample.state = state;
    site.user_ecef(state, &sample.ecef_pos, &sample.ecef_vel);
    log.push_back(sample);
  }
  return log;
}

ObservationStream generate_observations(const TruthLog& truth,
                                        const ScenarioConfig& cfg,
                                        std::uint64_t run_seed) {
  if (truth.empty()) {
    throw std::invalid_argument("generate_observations: empty truth log");
  }
  const gnss::LaunchSiteFrame site = cfg.frame();
  std::mt19937_64 rng(run_seed);
  gnss::AmbiguityBook ambiguities;

  const bool rates = cfg.mode == estimators::MeasurementMode::RangeAndRate;
  const double sigma_r = cfg.budget.sigma_pseudorange;
  const double sigma_c = cfg.budget.sigma_carrier;
  const double range_var =
      cfg.use_graphic ? 0.25 * (sigma_r * sigma_r + sigma_c * sigma_c)
                      : sigma_r * sigma_r;
  const double rate_var =
      cfg.budget.sigma_range_rate * cfg.budget.sigma_range_rate;

  ObservationStream stream;
  stream.epochs.reserve(truth.size());
  stream.raw.reserve(truth.size());
  stream.truth_states.reserve(truth.size());

  for (const TruthSample& sample : truth) {
    const auto sats = gnss::constellation_at(sample.t, cfg.constellation);
    const auto visible =
        gnss::visible_satellites(sats, sample.ecef_pos, cfg.elevation_mask);
    const int k_eff =
        std::min<int>(cfg.channels, static_cast<int>(visible.size()));
    const bool starved = k_eff < cfg.channels || k_eff < 4;

    auto selected = gnss::select_channels(visible, k_eff, sample.ecef_pos);
    gnss::GnssObservation raw = gnss::synthesize_observation(
        sample.state, sample.t, selected, cfg.budget, site, rng, ambiguities);
    raw.degraded = raw.degraded || starved;
    if (selected.size() >= 4) {
      std::vector<Vec3> positions;
      positions.reserve(selected.size());
      for (const auto& sat : selected) {
        positions.push_back(sat.position);
      }
      raw.pdop = gnss::pdop(positions, sample.ecef_pos);
    }

    estimators::EpochMeasurement epoch;
    epoch.epoch = sample.t;
    epoch.has_rates = rates;
    epoch.pdop = raw.pdop;
    epoch.degraded = raw.degraded;
    const auto n = static_cast<Eigen::Index>(raw.channels.size());
    epoch.z.resize(rates ? 2 * n : n);
    epoch.noise_var.resize(epoch.z.size());
    epoch.sat_positions.reserve(raw.channels.size());
    epoch.sat_velocities.reserve(raw.channels.size());

    for (Eigen::Index i = 0; i < n; ++i) {
      const gnss::ChannelObservation& ch =
          raw.channels[static_cast<std::size_t>(i)];
      epoch.sat_positions.push_back(ch.sat_position);
      epoch.sat_velocities.push_back(ch.sat_velocity);

      // Receiver-side corrections: GRAPHIC (or modeled ionosphere), modeled
      // troposphere, broadcast satellite clock. What remains is geometric
      // range plus receiver clock bias plus noise.
      double corrected;
      if (cfg.use_graphic) {
        corrected = gnss::graphic_combine(ch.pseudorange, ch.carrier_range,
                                          ch.ambiguity);
      } else {
        corrected = ch.pseudorange - ch.iono_delay;
      }
      corrected -= ch.tropo_delay;
      corrected += gnss::kSpeedOfLight * ch.sat_clock_bias_s;
      epoch.z(i) = corrected;
      epoch.noise_var(i) = std::max(range_var, kRangeVarFloor);
      if (rates) {
        epoch.z(n + i) = ch.range_rate;
        epoch.noise_var(n + i) = std::max(rate_var, kRateVarFloor);
      }
    }

    stream.epochs.push_back(std::move(epoch));
    stream.raw.push_back(std::move(raw));
    stream.truth_states.push_back(sample.state);
  }
  return stream;
}

// ---------------------------------------------------------------------------
// Config file I/O
// ---------------------------------------------------------------------------

namespace {

class IniMap {
 public:
  explicit IniMap(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
      throw std::invalid_argument("cannot open config file: " + path);
    }
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto comment = line.find_first_of("#;");
      if (comment != std::string::npos) {
        line.erase(comment);
      }
      line = trim(line);
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']') {
          throw std::invalid_argument("config line " + std::to_string(lineno) +
                                      ": malformed section header");
        }
        section = trim(line.substr(1, line.size() - 2));
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        throw std::invalid_argument("config line " + std::to_string(lineno) +
                                    ": expected key = value");
      }
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      values_[section.empty() ? key : section + "." + key] = value;
    }
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string take(const std::string& key, const std::string& fallback) {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    std::string v = it->second;
    values_.erase(it);
    return v;
  }

  double take_double(const std::string& key, double fallback) {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    const std::string v = it->second;
    values_.erase(it);
    try {
      std::size_t used = 0;
      const double parsed = std::stod(v, &used);
      if (used != v.size()) throw std::invalid_argument(v);
      return parsed;
    } catch (const std::exception&) {
      throw std::invalid_argument("config field " + key +
                                  ": not a number: " + v);
    }
  }

  bool take_bool(const std::string& key, bool fallback) {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    const std::string v = it->second;
    values_.erase(it);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw std::invalid_argument("config field " + key + ": not a boolean: " + v);
  }

  Vec8 take_vec8(const std::string& key, const Vec8& fallback) {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    const std::string v = it->second;
    values_.erase(it);
    Vec8 out;
    std::stringstream ss(v);
    std::string item;
    int idx = 0;
    while (std::getline(ss, item, ',')) {
      if (idx >= kStateDim) break;
      out(idx++) = std::stod(trim(item));
    }
    if (idx != kStateDim) {
      throw std::invalid_argument("config field " + key +
                                  ": expected 8 comma-separated values");
    }
    return out;
  }

  void reject_unknown() const {
    if (!values_.empty()) {
      throw std::invalid_argument("unknown config field: " +
                                  values_.begin()->first);
    }
  }

 private:
  static std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
  }

  std::map<std::string, std::string> values_;
};

}  // namespace

ScenarioConfig load_config(const std::string& path) {
  ScenarioConfig cfg = build_crs5();
  IniMap ini(path);

  cfg.channels = static_cast<int>(ini.take_double("scenario.channels", cfg.channels));
  cfg.epoch_rate_hz = ini.take_double("scenario.epoch_rate_hz", cfg.epoch_rate_hz);
  cfg.duration = ini.take_double("scenario.duration_s", cfg.duration);
  cfg.truth_substep = ini.take_double("scenario.truth_substep_s", cfg.truth_substep);
  cfg.seed = static_cast<std::uint64_t>(ini.take_double("scenario.seed", static_cast<double>(cfg.seed)));
  cfg.elevation_mask = ini.take_double("scenario.elevation_mask_deg",
                                       cfg.elevation_mask / kDegToRad) * kDegToRad;
  {
    const std::string mode = ini.take("scenario.measurement_mode", "range-rate");
    if (mode == "range") {
      cfg.mode = estimators::MeasurementMode::RangeOnly;
    } else if (mode == "range-rate") {
      cfg.mode = estimators::MeasurementMode::RangeAndRate;
    } else {
      throw std::invalid_argument(
          "config field scenario.measurement_mode: expected range|range-rate");
    }
  }
  cfg.use_graphic = ini.take_bool("scenario.use_graphic", cfg.use_graphic);

  cfg.site_latitude = ini.take_double("site.latitude_deg", cfg.site_latitude / kDegToRad) * kDegToRad;
  cfg.site_longitude = ini.take_double("site.longitude_deg", cfg.site_longitude / kDegToRad) * kDegToRad;
  cfg.launch_azimuth = ini.take_double("site.azimuth_deg", cfg.launch_azimuth / kDegToRad) * kDegToRad;

  cfg.environment.earth_radius = ini.take_double("environment.earth_radius_m", cfg.environment.earth_radius);
  cfg.environment.g0 = ini.take_double("environment.g0", cfg.environment.g0);
  cfg.environment.rho0 = ini.take_double("environment.rho0", cfg.environment.rho0);
  cfg.environment.scale_height = ini.take_double("environment.scale_height_m", cfg.environment.scale_height);

  cfg.vehicle.payload_mass = ini.take_double("vehicle.payload_mass_kg", cfg.vehicle.payload_mass);
  cfg.vehicle.spacecraft_mass = ini.take_double("vehicle.spacecraft_mass_kg", cfg.vehicle.spacecraft_mass);
  cfg.vehicle.frontal_area = ini.take_double("vehicle.frontal_area_m2", cfg.vehicle.frontal_area);
  cfg.vehicle.pitch_kick_time = ini.take_double("vehicle.pitch_kick_time_s", cfg.vehicle.pitch_kick_time);
  cfg.vehicle.pitch_kick_angle = ini.take_double("vehicle.pitch_kick_angle_rad", cfg.vehicle.pitch_kick_angle);
  const int nstages = static_cast<int>(ini.take_double("vehicle.stages", static_cast<double>(cfg.vehicle.stages.size())));
  cfg.vehicle.stages.resize(static_cast<std::size_t>(nstages));
  for (int i = 0; i < nstages; ++i) {
    const std::string prefix = "vehicle.stage" + std::to_string(i + 1) + ".";
    auto& st = cfg.vehicle.stages[static_cast<std::size_t>(i)];
    st.inert_mass = ini.take_double(prefix + "inert_mass_kg", st.inert_mass);
    st.propellant_mass = ini.take_double(prefix + "propellant_mass_kg", st.propellant_mass);
    st.thrust = ini.take_double(prefix + "thrust_n", st.thrust);
    st.isp = ini.take_double(prefix + "isp_s", st.isp);
    st.burn_duration = ini.take_double(prefix + "burn_duration_s", st.burn_duration);
  }

  cfg.constellation.planes = static_cast<int>(ini.take_double("constellation.planes", cfg.constellation.planes));
  cfg.constellation.slots_per_plane = static_cast<int>(ini.take_double("constellation.slots_per_plane", cfg.constellation.slots_per_plane));
  cfg.constellation.semi_major_axis = ini.take_double("constellation.semi_major_axis_m", cfg.constellation.semi_major_axis);
  cfg.constellation.inclination = ini.take_double("constellation.inclination_deg", cfg.constellation.inclination / kDegToRad) * kDegToRad;
  cfg.constellation.raan_offset = ini.take_double("constellation.raan_offset_deg", cfg.constellation.raan_offset / kDegToRad) * kDegToRad;
  cfg.constellation.phase_step_per_plane = ini.take_double("constellation.phase_step_per_plane_deg", cfg.constellation.phase_step_per_plane / kDegToRad) * kDegToRad;

  cfg.dispersion.pitch_kick_fraction = ini.take_double("dispersion.pitch_kick_fraction", cfg.dispersion.pitch_kick_fraction);
  cfg.dispersion.thrust_fraction = ini.take_double("dispersion.thrust_fraction", cfg.dispersion.thrust_fraction);

  cfg.truth_noise.enabled = ini.take_bool("truth_noise.enabled", cfg.truth_noise.enabled);
  cfg.truth_noise.sigma_accel = ini.take_double("truth_noise.sigma_accel_mps2", cfg.truth_noise.sigma_accel);
  cfg.truth_noise.sigma_drag_coeff_rate = ini.take_double("truth_noise.sigma_drag_coeff_rate", cfg.truth_noise.sigma_drag_coeff_rate);
  cfg.truth_noise.correlation_time = ini.take_double("truth_noise.correlation_time_s", cfg.truth_noise.correlation_time);

  cfg.budget.sigma_pseudorange = ini.take_double("noise.sigma_pseudorange_m", cfg.budget.sigma_pseudorange);
  cfg.budget.sigma_carrier = ini.take_double("noise.sigma_carrier_m", cfg.budget.sigma_carrier);
  cfg.budget.sigma_range_rate = ini.take_double("noise.sigma_range_rate_mps", cfg.budget.sigma_range_rate);
  cfg.budget.iono_zenith_delay = ini.take_double("noise.iono_zenith_m", cfg.budget.iono_zenith_delay);
  cfg.budget.use_iono = ini.take_bool("noise.use_iono", cfg.budget.use_iono);
  cfg.budget.use_tropo = ini.take_bool("noise.use_tropo", cfg.budget.use_tropo);

  cfg.ut.alpha = ini.take_double("filter.ut_alpha", cfg.ut.alpha);
  cfg.ut.beta = ini.take_double("filter.ut_beta", cfg.ut.beta);
  cfg.ut.kappa = ini.take_double("filter.ut_kappa", cfg.ut.kappa);
  {
    const std::string stm = ini.take("filter.ekf_stm", "matrix-exp");
    if (stm == "first-order") {
      cfg.ekf_stm = estimators::EkfStmMode::FirstOrder;
    } else if (stm == "matrix-exp") {
      cfg.ekf_stm = estimators::EkfStmMode::MatrixExp;
    } else {
      throw std::invalid_argument(
          "config field filter.ekf_stm: expected first-order|matrix-exp");
    }
  }
  cfg.substeps_per_second = static_cast<int>(ini.take_double("filter.substeps_per_second", cfg.substeps_per_second));
  cfg.process_noise_diag = ini.take_double("filter.process_noise_diag", cfg.process_noise_diag);
  cfg.init_mean = ini.take_vec8("filter.init_state", cfg.init_mean);
  cfg.init_cov_diag = ini.take_vec8("filter.init_cov_diag", cfg.init_cov_diag);
  cfg.truth_clock_bias = ini.take_double("filter.truth_clock_bias_m", cfg.truth_clock_bias);
  cfg.truth_clock_drift = ini.take_double("filter.truth_clock_drift_mps", cfg.truth_clock_drift);
  cfg.truth_initial_fpa = ini.take_double("filter.truth_initial_fpa_rad", cfg.truth_initial_fpa);
  cfg.truth_init_sigma_offset = ini.take_vec8("filter.truth_init_sigma_offset", cfg.truth_init_sigma_offset);

  ini.reject_unknown();
  cfg.validate();
  return cfg;
}

void save_config(const ScenarioConfig& cfg, const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write config file: " + path);
  }
  out.precision(17);
  out << "[scenario]\n";
  out << "channels = " << cfg.channels << "\n";
  out << "epoch_rate_hz = " << cfg.epoch_rate_hz << "\n";
  out << "duration_s = " << cfg.duration << "\n";
  out << "truth_substep_s = " << cfg.truth_substep << "\n";
  out << "seed = " << cfg.seed << "\n";
  out << "elevation_mask_deg = " << cfg.elevation_mask / kDegToRad << "\n";
  out << "measurement_mode = "
      << (cfg.mode == estimators::MeasurementMode::RangeOnly ? "range"
                                                             : "range-rate")
      << "\n";
  out << "use_graphic = " << (cfg.use_graphic ? "true" : "false") << "\n\n";

  out << "[site]\n";
  out << "latitude_deg = " << cfg.site_latitude / kDegToRad << "\n";
  out << "longitude_deg = " << cfg.site_longitude / kDegToRad << "\n";
  out << "azimuth_deg = " << cfg.launch_azimuth / kDegToRad << "\n\n";

  out << "[environment]\n";
  out << "earth_radius_m = " << cfg.environment.earth_radius << "\n";
  out << "g0 = " << cfg.environment.g0 << "\n";
  out << "rho0 = " << cfg.environment.rho0 << "\n";
  out << "scale_height_m = " << cfg.environment.scale_height << "\n\n";

  out << "[vehicle]\n";
  out << "payload_mass_kg = " << cfg.vehicle.payload_mass << "\n";
  out << "spacecraft_mass_kg = " << cfg.vehicle.spacecraft_mass << "\n";
  out << "frontal_area_m2 = " << cfg.vehicle.frontal_area << "\n";
  out << "pitch_kick_time_s = " << cfg.vehicle.pitch_kick_time << "\n";
  out << "pitch_kick_angle_rad = " << cfg.vehicle.pitch_kick_angle << "\n";
  out << "stages = " << cfg.vehicle.stages.size() << "\n\n";
  for (std::size_t i = 0; i < cfg.vehicle.stages.size(); ++i) {
    const auto& st = cfg.vehicle.stages[i];
    out << "[vehicle.stage" << (i + 1) << "]\n";
    out << "inert_mass_kg = " << st.inert_mass << "\n";
    out << "propellant_mass_kg = " << st.propellant_mass << "\n";
    out << "thrust_n = " << st.thrust << "\n";
    out << "isp_s = " << st.isp << "\n";
    out << "burn_duration_s = " << st.burn_duration << "\n\n";
  }

  out << "[constellation]\n";
  out << "planes = " << cfg.constellation.planes << "\n";
  out << "slots_per_plane = " << cfg.constellation.slots_per_plane << "\n";
  out << "semi_major_axis_m = " << cfg.constellation.semi_major_axis << "\n";
  out << "inclination_deg = " << cfg.constellation.inclination / kDegToRad << "\n";
  out << "raan_offset_deg = " << cfg.constellation.raan_offset / kDegToRad << "\n";
  out << "phase_step_per_plane_deg = "
      << cfg.constellation.phase_step_per_plane / kDegToRad << "\n\n";

  out << "[dispersion]\n";
  out << "pitch_kick_fraction = " << cfg.dispersion.pitch_kick_fraction << "\n";
  out << "thrust_fraction = " << cfg.dispersion.thrust_fraction << "\n\n";

  out << "[truth_noise]\n";
  out << "enabled = " << (cfg.truth_noise.enabled ? "true" : "false") << "\n";
  out << "sigma_accel_mps2 = " << cfg.truth_noise.sigma_accel << "\n";
  out << "sigma_drag_coeff_rate = " << cfg.truth_noise.sigma_drag_coeff_rate << "\n";
  out << "correlation_time_s = " << cfg.truth_noise.correlation_time << "\n\n";

  out << "[noise]\n";
  out << "sigma_pseudorange_m = " << cfg.budget.sigma_pseudorange << "\n";
  out << "sigma_carrier_m = " << cfg.budget.sigma_carrier << "\n";
  out << "sigma_range_rate_mps = " << cfg.budget.sigma_range_rate << "\n";
  out << "iono_zenith_m = " << cfg.budget.iono_zenith_delay << "\n";
  out << "use_iono = " << (cfg.budget.use_iono ? "true" : "false") << "\n";
  out << "use_tropo = " << (cfg.budget.use_tropo ? "true" : "false") << "\n\n";

  out << "[filter]\n";
  out << "ut_alpha = " << cfg.ut.alpha << "\n";
  out << "ut_beta = " << cfg.ut.beta << "\n";
  out << "ut_kappa = " << cfg.ut.kappa << "\n";
  out << "ekf_stm = "
      << (cfg.ekf_stm == estimators::EkfStmMode::FirstOrder ? "first-order"
                                                            : "matrix-exp")
      << "\n";
  out << "substeps_per_second = " << cfg.substeps_per_second << "\n";
  out << "process_noise_diag = " << cfg.process_noise_diag << "\n";
  out << "init_state = ";
  for (int i = 0; i < kStateDim; ++i) {
    out << cfg.init_mean(i) << (i + 1 < kStateDim ? ", " : "\n");
  }
  out << "init_cov_diag = ";
  for (int i = 0; i < kStateDim; ++i) {
    out << cfg.init_cov_diag(i) << (i + 1 < kStateDim ? ", " : "\n");
  }
  out << "truth_clock_bias_m = " << cfg.truth_clock_bias << "\n";
  out << "truth_clock_drift_mps = " << cfg.truth_clock_drift << "\n";
  out << "truth_initial_fpa_rad = " << cfg.truth_initial_fpa << "\n";
  out << "truth_init_sigma_offset = ";
  for (int i = 0; i < kStateDim; ++i) {
    out << cfg.truth_init_sigma_offset(i) << (i + 1 < kStateDim ? ", " : "\n");
  }
}

}  // namespace lvnav::scenario
