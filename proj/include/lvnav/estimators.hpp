#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "lvnav/dynamics.hpp"
#include "lvnav/gnss.hpp"
#include "lvnav/linalg.hpp"

namespace lvnav::estimators {

enum class FilterKind { Ekf, Ukf, Spukf, Espukf };

std::string to_string(FilterKind kind);
FilterKind filter_kind_from_string(const std::string& name);

enum class MeasurementMode { RangeOnly, RangeAndRate };

/// Discretization used for the EKF covariance propagation. The first-order
/// form I + J*dt is the conventional receiver formulation; the matrix
/// exponential form matches the transition matrix used by the sigma-point
/// approximation filters.
enum class EkfStmMode { FirstOrder, MatrixExp };

struct UtParams {
  double alpha = 1.0;
  double beta = 2.0;
  double kappa = 0.0;
};

struct GaussianBelief {
  dynamics::StateVector mean;
  Mat8 covariance = Mat8::Identity();
};

/// 2n+1 deterministic samples and their unscented-transform weights.
struct SigmaPointSet {
  static constexpr int kCount = 2 * kStateDim + 1;

  std::array<Vec8, kCount> points;
  std::array<double, kCount> mean_weights{};
  std::array<double, kCount> cov_weights{};

  Vec8 weighted_mean() const;
  Mat8 weighted_covariance(const Vec8& mean) const;
};

/// Scaled unscented transform: chi_0 = mean, chi_i = mean +/- columns of
/// sqrt((n+lambda) P) from the lower Cholesky factor.
/// Throws std::runtime_error naming the offending leading minor when P is
/// not positive definite.
SigmaPointSet generate_sigma_points(const GaussianBelief& belief,
                                    const UtParams& ut);

/// Everything the filters need besides the measurements.
struct FilterModels {
  dynamics::VehicleConfig vehicle;
  dynamics::Environment environment;
  gnss::LaunchSiteFrame frame;
  Mat8 process_noise = Mat8::Zero();
  UtParams ut;
  MeasurementMode mode = MeasurementMode::RangeAndRate;
  EkfStmMode ekf_stm = EkfStmMode::MatrixExp;
  int substeps_per_second = 20;

  int substeps_for(double dt) const;
};

/// One epoch of preprocessed measurements: corrected ranges (and optionally
/// range rates) with per-component noise variances, plus the satellite states
/// the receiver knows from its ephemeris.
struct EpochMeasurement {
  double epoch = 0.0;
  std::vector<Vec3> sat_positions;
  std::vector<Vec3> sat_velocities;
  bool has_rates = true;
  VectorXd z;          ///< ranges first, then rates when present
  VectorXd noise_var;  ///< diagonal of R, same layout as z
  double pdop = 0.0;
  bool degraded = false;

  Eigen::Index dim() const { return z.size(); }
};

/// Measurement prediction h(state): per-channel range-plus-clock-bias and,
/// when enabled, line-of-sight range rate plus clock drift.
VectorXd predict_measurement(const dynamics::StateVector& s,
                             const EpochMeasurement& epoch,
                             const gnss::LaunchSiteFrame& frame);

/// Analytic Jacobian of `predict_measurement` with respect to the state.
MatrixXd measurement_jacobian(const dynamics::StateVector& s,
                              const EpochMeasurement& epoch,
                              const gnss::LaunchSiteFrame& frame);

struct PredictResult {
  GaussianBelief belief;
  /// Propagated (UKF) or approximated (SPUKF/ESPUKF) sigma points carried
  /// into the measurement update; absent for the EKF.
  std::optional<SigmaPointSet> sigma;
};

PredictResult ekf_predict(const GaussianBelief& belief, double t, double dt,
                          const FilterModels& models);
PredictResult ukf_predict(const GaussianBelief& belief, double t, double dt,
                          const FilterModels& models);
PredictResult spukf_predict(const GaussianBelief& belief, double t, double dt,
                            const FilterModels& models);
PredictResult espukf_predict(const GaussianBelief& belief, double t, double dt,
                             const FilterModels& models);
PredictResult predict(FilterKind kind, const GaussianBelief& belief, double t,
                      double dt, const FilterModels& models);

struct UpdateResult {
  GaussianBelief belief;
  VectorXd innovation;
  int repairs = 0;     ///< covariance jitter repairs applied
  bool diverged = false;  ///< repair failed twice
};

/// Measurement update. EKF gain when `sigma` is null, unscented-statistics
/// gain otherwise. Throws std::runtime_error when the innovation covariance
/// is not invertible.
UpdateResult kalman_update(const GaussianBelief& belief,
                           const EpochMeasurement& epoch,
                           const FilterModels& models,
                           const SigmaPointSet* sigma);

struct FilterStepRecord {
  double epoch = 0.0;
  dynamics::StateVector estimate;
  double cov_trace = 0.0;
  double err_downrange = 0.0;
  double err_altitude = 0.0;
  double err_speed = 0.0;
  double err_fpa = 0.0;
  double predict_seconds = 0.0;
  double update_seconds = 0.0;
  double innovation_rms = 0.0;
  bool diverged = false;
};

struct FilterRun {
  FilterKind kind = FilterKind::Ekf;
  std::vector<FilterStepRecord> steps;
  bool diverged = false;
  double diverged_at = 0.0;
  int repairs = 0;
};

/// Runs predict/update over a time-ordered measurement stream. `truth` must
/// be aligned with `obs` (same epochs) and is used only to record estimation
/// errors. Step timing covers predict+update work exclusively.
FilterRun run_filter(FilterKind kind, const GaussianBelief& init,
                     const std::vector<EpochMeasurement>& obs,
                     const std::vector<dynamics::StateVector>& truth,
                     const FilterModels& models);

}  // namespace lvnav::estimators
