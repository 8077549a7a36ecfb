#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lvnav/dynamics.hpp"
#include "lvnav/estimators.hpp"
#include "lvnav/gnss.hpp"

namespace lvnav::scenario {

/// Realization of the system model's process-noise term along the reference
/// trajectory: band-limited perturbations of the thrust acceleration and the
/// aerodynamic coefficient, frozen per scenario seed. The filters keep their
/// own (tiny) assumed Q, so this is what separates honest covariances from
/// overconfident ones.
struct TruthNoiseConfig {
  bool enabled = false;
  double sigma_accel = 0.3;          ///< m/s^2 on the speed rate
  double sigma_drag_coeff_rate = 2e-3;  ///< 1/s on the coefficient rate
  double correlation_time = 5.0;     ///< s between interpolation knots
};

/// Guidance dispersions: the flown trajectory never executes the nominal
/// program exactly. The filters keep the nominal vehicle model, so these
/// become genuine (bounded) model errors the estimators must track; the
/// pitch-kick dispersion in particular feeds the gravity-turn instability
/// and exposes covariance quality on the flight-path-angle channel.
struct GuidanceDispersion {
  double pitch_kick_fraction = 0.0;  ///< truth kick = nominal * (1 + this)
  double thrust_fraction = 0.0;      ///< truth thrust = nominal * (1 + this)
};

/// Complete description of one simulated mission plus estimation setup.
struct ScenarioConfig {
  dynamics::VehicleConfig vehicle;
  dynamics::Environment environment;
  gnss::ErrorBudget budget;
  gnss::ConstellationConfig constellation;

  double site_latitude = 0.4974188368183839;   ///< rad (28.5 deg N)
  double site_longitude = 4.87640348575447;    ///< rad (279.4 deg E)
  double launch_azimuth = 1.5707963267948966;  ///< rad (due east)
  double elevation_mask = 0.08726646259971647; ///< rad (5 deg)

  int channels = 6;             ///< satellites tracked, 4/6/8/10
  double epoch_rate_hz = 1.0;   ///< measurement output rate
  double duration = 573.0;      ///< s, liftoff to final burnout
  double truth_substep = 0.1;   ///< s, truth integrator step

  estimators::MeasurementMode mode = estimators::MeasurementMode::RangeAndRate;
  bool use_graphic = true;      ///< carrier preprocessing of the pseudo-range
  estimators::UtParams ut;
  estimators::EkfStmMode ekf_stm = estimators::EkfStmMode::MatrixExp;
  int substeps_per_second = 20;

  std::uint64_t seed = 1;
  TruthNoiseConfig truth_noise;
  GuidanceDispersion dispersion;

  Vec8 init_mean = Vec8::Zero();
  Vec8 init_cov_diag = Vec8::Ones();
  double process_noise_diag = 1e-30;
  double truth_clock_bias = 400.0;   ///< m
  double truth_clock_drift = 2.0;    ///< m/s
  /// The reference lifts off exactly vertical: the gravity turn equation is
  /// unstable about the vertical, and a liftoff angle even microradians past
  /// 90 degrees tips the trajectory backward long before the pitch kick.
  double truth_initial_fpa = 1.5707963267948966;
  /// Truth initial state offset from the filter mean, in units of the
  /// initial standard deviation per component (gamma entry is ignored; the
  /// liftoff attitude is pinned vertical). A filter whose stated P(0) is
  /// honest must cope with an initial error of this size.
  Vec8 truth_init_sigma_offset = Vec8::Zero();

  gnss::LaunchSiteFrame frame() const;
  estimators::FilterModels filter_models() const;
  estimators::GaussianBelief initial_belief() const;
  dynamics::StateVector truth_initial_state() const;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

/// CRS-5 mission defaults: the two-stage Falcon 9 v1.1 vehicle, its filter
/// initialization and the synthetic constellation.
ScenarioConfig build_crs5();

struct TruthSample {
  double t = 0.0;
  dynamics::StateVector state;
  Vec3 ecef_pos = Vec3::Zero();
  Vec3 ecef_vel = Vec3::Zero();
};
using TruthLog = std::vector<TruthSample>;

/// Reference trajectory at the measurement epoch rate.
TruthLog generate_truth(const ScenarioConfig& cfg);

struct ObservationStream {
  std::vector<estimators::EpochMeasurement> epochs;  ///< filter-ready
  std::vector<gnss::GnssObservation> raw;            ///< as-synthesized
  std::vector<dynamics::StateVector> truth_states;   ///< aligned with epochs
};

/// Synthesizes one noise realization of the full observation stream:
/// constellation lookup, visibility mask, channel selection, observable
/// generation, then GRAPHIC / troposphere / satellite-clock corrections into
/// the filter-facing measurement vector.
ObservationStream generate_observations(const TruthLog& truth,
                                        const ScenarioConfig& cfg,
                                        std::uint64_t run_seed);

/// Key/value config file with nested [section] headers. Every vehicle,
/// environment, noise and filter value is overridable; unknown keys are
/// rejected by name.
ScenarioConfig load_config(const std::string& path);
void save_config(const ScenarioConfig& cfg, const std::string& path);

}  // namespace lvnav::scenario
