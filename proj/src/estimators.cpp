#include "lvnav/estimators.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

namespace lvnav::estimators {

namespace {

using dynamics::StateVector;

double ut_lambda(const UtParams& ut) {
  return ut.alpha * ut.alpha * (kStateDim + ut.kappa) - kStateDim;
}

// Lower Cholesky factor that reports which leading minor fails.
Mat8 cholesky_lower(const Mat8& p) {
  Mat8 lower = Mat8::Zero();
  for (int j = 0; j < kStateDim; ++j) {
    double diag = p(j, j);
    for (int k = 0; k < j; ++k) {
      diag -= lower(j, k) * lower(j, k);
    }
    if (!(diag > 0.0) || !std::isfinite(diag)) {
      throw std::runtime_error(
          "covariance not positive definite: leading minor of order " +
          std::to_string(j + 1) + " is not positive");
    }
    lower(j, j) = std::sqrt(diag);
    for (int i = j + 1; i < kStateDim; ++i) {
      double sum = p(i, j);
      for (int k = 0; k < j; ++k) {
        sum -= lower(i, k) * lower(j, k);
      }
      lower(i, j) = sum / lower(j, j);
    }
  }
  return lower;
}

void symmetrize(Mat8& p) { p = 0.5 * (p + p.transpose()).eval(); }

// Symmetrize and, if needed, jitter once; a second failure falls back to an
// eigenvalue clamp and reports divergence.
void repair_covariance(Mat8& p, int* repairs, bool* diverged) {
  symmetrize(p);
  try {
    cholesky_lower(p);
    return;
  } catch (const std::runtime_error&) {
  }
  const double jitter = 1e-6 * p.trace() / kStateDim;
  p += std::max(jitter, 1e-18) * Mat8::Identity();
  ++(*repairs);
  try {
    cholesky_lower(p);
    return;
  } catch (const std::runtime_error&) {
  }
  Eigen::SelfAdjointEigenSolver<Mat8> eig(p);
  const double floor = 1e-12 * std::max(1.0, eig.eigenvalues().cwiseAbs().maxCoeff());
  Vec8 clamped = eig.eigenvalues().cwiseMax(floor);
  p = eig.eigenvectors() * clamped.asDiagonal() * eig.eigenvectors().transpose();
  symmetrize(p);
  *diverged = true;
}

GaussianBelief recombine(const SigmaPointSet& pts, const Mat8& q) {
  const Vec8 mean = pts.weighted_mean();
  Mat8 cov = pts.weighted_covariance(mean) + q;
  symmetrize(cov);
  return GaussianBelief{StateVector::from_vector(mean), cov};
}

}  // namespace

std::string to_string(FilterKind kind) {
  switch (kind) {
    case FilterKind::Ekf: return "ekf";
    case FilterKind::Ukf: return "ukf";
    case FilterKind::Spukf: return "spukf";
    case FilterKind::Espukf: return "espukf";
  }
  return "unknown";
}

FilterKind filter_kind_from_string(const std::string& name) {
  if (name == "ekf") return FilterKind::Ekf;
  if (name == "ukf") return FilterKind::Ukf;
  if (name == "spukf") return FilterKind::Spukf;
  if (name == "espukf") return FilterKind::Espukf;
  throw std::invalid_argument("unknown filter kind: " + name);
}

Vec8 SigmaPointSet::weighted_mean() const {
  Vec8 mean = Vec8::Zero();
  for (int i = 0; i < kCount; ++i) {
    mean += mean_weights[static_cast<std::size_t>(i)] * points[static_cast<std::size_t>(i)];
  }
  return mean;
}

Mat8 SigmaPointSet::weighted_covariance(const Vec8& mean) const {
  Mat8 cov = Mat8::Zero();
  for (int i = 0; i < kCount; ++i) {
    const Vec8 dev = points[static_cast<std::size_t>(i)] - mean;
    cov += cov_weights[static_cast<std::size_t>(i)] * dev * dev.transpose();
  }
  return cov;
}

SigmaPointSet generate_sigma_points(const GaussianBelief& belief,
                                    const UtParams& ut) {
  const double lambda = ut_lambda(ut);
  const double scale2 = kStateDim + lambda;
  if (!(scale2 > 0.0)) {
    throw std::invalid_argument("generate_sigma_points: n + lambda must be > 0");
  }
  const Mat8 lower = cholesky_lower(belief.covariance);
  const double scale = std::sqrt(scale2);
  const Vec8 mean = belief.mean.to_vector();

  SigmaPointSet set;
  set.points[0] = mean;
  for (int j = 0; j < kStateDim; ++j) {
    const Vec8 offset = scale * lower.col(j);
    set.points[static_cast<std::size_t>(1 + j)] = mean + offset;
    set.points[static_cast<std::size_t>(1 + kStateDim + j)] = mean - offset;
  }
  const double w0m = lambda / scale2;
  const double wi = 0.5 / scale2;
  set.mean_weights[0] = w0m;
  set.cov_weights[0] = w0m + 1.0 - ut.alpha * ut.alpha + ut.beta;
  for (int i = 1; i < SigmaPointSet::kCount; ++i) {
    set.mean_weights[static_cast<std::size_t>(i)] = wi;
    set.cov_weights[static_cast<std::size_t>(i)] = wi;
  }
  return set;
}

int FilterModels::substeps_for(double dt) const {
  const auto n = static_cast<int>(std::llround(dt * substeps_per_second));
  return std::max(1, n);
}

VectorXd predict_measurement(const StateVector& s,
                             const EpochMeasurement& epoch,
                             const gnss::LaunchSiteFrame& frame) {
  const auto nsat = static_cast<Eigen::Index>(epoch.sat_positions.size());
  VectorXd y(epoch.has_rates ? 2 * nsat : nsat);
  Vec3 pos, vel;
  frame.user_ecef(s, &pos, &vel);
  for (Eigen::Index i = 0; i < nsat; ++i) {
    const Vec3 diff = epoch.sat_positions[static_cast<std::size_t>(i)] - pos;
    const double range = diff.norm();
    y(i) = range + s.clock_bias;
    if (epoch.has_rates) {
      const Vec3 los = diff / range;
      y(nsat + i) =
          los.dot(epoch.sat_velocities[static_cast<std::size_t>(i)] - vel) +
          s.clock_drift;
    }
  }
  return y;
}

MatrixXd measurement_jacobian(const StateVector& s,
                              const EpochMeasurement& epoch,
                              const gnss::LaunchSiteFrame& frame) {
  const auto nsat = static_cast<Eigen::Index>(epoch.sat_positions.size());
  MatrixXd jac = MatrixXd::Zero(epoch.has_rates ? 2 * nsat : nsat, kStateDim);

  const double re = frame.earth_radius();
  const Vec3 radial = frame.radial_dir(s.downrange);
  const Vec3 along = frame.along_dir(s.downrange);
  const Vec3 pos = frame.position(s.downrange, s.altitude);
  const Vec3 vel = frame.velocity(s.downrange, s.speed, s.fpa);

  const double sg = std::sin(s.fpa);
  const double cg = std::cos(s.fpa);
  // Derivatives of the embedding directions with respect to down-range.
  const Vec3 dradial_dx = along / re;
  const Vec3 dalong_dx = -radial / re;
  const Vec3 dpos_dx = (re + s.altitude) / re * along;
  const Vec3 dvel_dx = s.speed * (sg * dradial_dx + cg * dalong_dx);
  const Vec3 dvel_dv = sg * radial + cg * along;
  const Vec3 dvel_dg = s.speed * (cg * radial - sg * along);

  for (Eigen::Index i = 0; i < nsat; ++i) {
    const Vec3 diff = epoch.sat_positions[static_cast<std::size_t>(i)] - pos;
    const double range = diff.norm();
    const Vec3 los = diff / range;

    jac(i, 0) = -los.dot(dpos_dx);
    jac(i, 1) = -los.dot(radial);
    jac(i, 6) = 1.0;

    if (epoch.has_rates) {
      const Vec3 rel_vel =
          epoch.sat_velocities[static_cast<std::size_t>(i)] - vel;
      // d(los)/d(user position) applied through the embedding.
      const auto dlos = [&](const Vec3& dpos) -> Vec3 {
        return -(dpos - los * los.dot(dpos)) / range;
      };
      jac(nsat + i, 0) = dlos(dpos_dx).dot(rel_vel) - los.dot(dvel_dx);
      jac(nsat + i, 1) = dlos(radial).dot(rel_vel);
      jac(nsat + i, 2) = -los.dot(dvel_dv);
      jac(nsat + i, 3) = -los.dot(dvel_dg);
      jac(nsat + i, 7) = 1.0;
    }
  }
  return jac;
}

PredictResult ekf_predict(const GaussianBelief& belief, double t, double dt,
                          const FilterModels& models) {
  const int substeps = models.substeps_for(dt);
  const StateVector mean = dynamics::propagate(
      belief.mean, dt, substeps, models.vehicle, models.environment, t);
  const Mat8 jac =
      dynamics::jacobian(belief.mean, models.vehicle, models.environment, t);
  Mat8 phi;
  if (models.ekf_stm == EkfStmMode::FirstOrder) {
    phi = Mat8::Identity() + jac * dt;
  } else {
    phi = dynamics::state_transition_matrix(jac, dt);
  }
  Mat8 cov = phi * belief.covariance * phi.transpose() + models.process_noise;
  symmetrize(cov);
  return PredictResult{GaussianBelief{mean, cov}, std::nullopt};
}

PredictResult ukf_predict(const GaussianBelief& belief, double t, double dt,
                          const FilterModels& models) {
  const int substeps = models.substeps_for(dt);
  SigmaPointSet set = generate_sigma_points(belief, models.ut);
  for (int i = 0; i < SigmaPointSet::kCount; ++i) {
    auto& point = set.points[static_cast<std::size_t>(i)];
    try {
      point = dynamics::propagate(StateVector::from_vector(point), dt,
                                  substeps, models.vehicle,
                                  models.environment, t)
                  .to_vector();
    } catch (const std::exception& e) {
      throw std::runtime_error("ukf_predict: sigma point " +
                               std::to_string(i) + ": " + e.what());
    }
  }
  return PredictResult{recombine(set, models.process_noise), set};
}

PredictResult spukf_predict(const GaussianBelief& belief, double t, double dt,
                            const FilterModels& models) {
  const int substeps = models.substeps_for(dt);
  SigmaPointSet set = generate_sigma_points(belief, models.ut);
  const Vec8 mean = belief.mean.to_vector();
  const Vec8 mean_next =
      dynamics::propagate(belief.mean, dt, substeps, models.vehicle,
                          models.environment, t)
          .to_vector();
  const Mat8 phi = dynamics::state_transition_matrix(
      dynamics::jacobian(belief.mean, models.vehicle, models.environment, t),
      dt);

  set.points[0] = mean_next;
  for (int i = 1; i < SigmaPointSet::kCount; ++i) {
    auto& point = set.points[static_cast<std::size_t>(i)];
    point = mean_next + phi * (point - mean);
  }
  return PredictResult{recombine(set, models.process_noise), set};
}

PredictResult espukf_predict(const GaussianBelief& belief, double t, double dt,
                             const FilterModels& models) {
  int substeps = models.substeps_for(dt);
  if (substeps % 2 != 0) {
    ++substeps;
  }
  SigmaPointSet set = generate_sigma_points(belief, models.ut);
  const Vec8 mean = belief.mean.to_vector();

  StateVector mid;
  const Vec8 mean_next =
      dynamics::propagate_with_midpoint(belief.mean, dt, substeps,
                                        models.vehicle, models.environment, t,
                                        &mid)
          .to_vector();

  const double half = 0.5 * dt;
  const Mat8 jac_start =
      dynamics::jacobian(belief.mean, models.vehicle, models.environment, t);
  const Mat8 jac_mid =
      dynamics::jacobian(mid, models.vehicle, models.environment, t + half);
  const Mat8 phi_full = dynamics::state_transition_matrix(jac_start, dt);
  const Mat8 phi1 = dynamics::state_transition_matrix(jac_start, half);
  const Mat8 phi2 = dynamics::state_transition_matrix(jac_mid, half);
  // Step-halving extrapolation of the deviation propagator.
  const Mat8 extrapolated = 2.0 * (phi2 * phi1) - phi_full;

  const Vec8 mid_vec = mid.to_vector();
  const Vec8 f_mid =
      dynamics::derivative(mid, models.vehicle, models.environment, t + half)
          .to_vector();

  set.points[0] = mean_next;
  for (int j = 0; j < kStateDim; ++j) {
    const int ip = 1 + j;
    const int im = 1 + kStateDim + j;
    const Vec8 delta = set.points[static_cast<std::size_t>(ip)] - mean;
    const Vec8 eta = phi1 * delta;

    // Directional curvature of the flow, sampled at the midpoint state and
    // transported over the second half step. Shared by the +/- pair.
    Vec8 quad = Vec8::Zero();
    try {
      const Vec8 f_plus =
          dynamics::derivative(StateVector::from_vector(mid_vec + eta),
                               models.vehicle, models.environment, t + half)
              .to_vector();
      const Vec8 f_minus =
          dynamics::derivative(StateVector::from_vector(mid_vec - eta),
                               models.vehicle, models.environment, t + half)
              .to_vector();
      quad = 0.5 * dt * (phi2 * (f_plus - 2.0 * f_mid + f_minus));
    } catch (const std::exception& e) {
      throw std::runtime_error("espukf_predict: sigma pair " +
                               std::to_string(j) + ": " + e.what());
    }

    const Vec8 lin = extrapolated * delta;
    set.points[static_cast<std::size_t>(ip)] = mean_next + lin + quad;
    set.points[static_cast<std::size_t>(im)] = mean_next - lin + quad;
  }
  return PredictResult{recombine(set, models.process_noise), set};
}

PredictResult predict(FilterKind kind, const GaussianBelief& belief, double t,
                      double dt, const FilterModels& models) {
  switch (kind) {
    case FilterKind::Ekf: return ekf_predict(belief, t, dt, models);
    case FilterKind::Ukf: return ukf_predict(belief, t, dt, models);
    case FilterKind::Spukf: return spukf_predict(belief, t, dt, models);
    case FilterKind::Espukf: return espukf_predict(belief, t, dt, models);
  }
  throw std::invalid_argument("predict: unknown filter kind");
}

UpdateResult kalman_update(const GaussianBelief& belief,
                           const EpochMeasurement& epoch,
                           const FilterModels& models,
                           const SigmaPointSet* sigma) {
  if (epoch.dim() < 1) {
    throw std::invalid_argument("kalman_update: empty measurement");
  }
  UpdateResult out;
  const Vec8 mean = belief.mean.to_vector();

  if (sigma == nullptr) {
    // EKF correction with the analytic measurement Jacobian (Joseph form).
    const VectorXd predicted =
        predict_measurement(belief.mean, epoch, models.frame);
    const MatrixXd h = measurement_jacobian(belief.mean, epoch, models.frame);
    MatrixXd s = h * belief.covariance * h.transpose();
    s.diagonal() += epoch.noise_var;
    Eigen::FullPivLU<MatrixXd> lu(s);
    if (!lu.isInvertible()) {
      throw std::runtime_error(
          "kalman_update: innovation covariance not invertible");
    }
    const MatrixXd gain = belief.covariance * h.transpose() * lu.inverse();
    out.innovation = epoch.z - predicted;
    const Vec8 posterior = mean + gain * out.innovation;
    const Mat8 ikh = Mat8::Identity() - gain * h;
    Mat8 cov = ikh * belief.covariance * ikh.transpose() +
               gain * epoch.noise_var.asDiagonal() * gain.transpose();
    repair_covariance(cov, &out.repairs, &out.diverged);
    out.belief = GaussianBelief{StateVector::from_vector(posterior), cov};
    return out;
  }

  // Unscented correction from the predicted sigma points.
  const auto m = epoch.dim();
  std::array<VectorXd, SigmaPointSet::kCount> predicted;
  VectorXd y_mean = VectorXd::Zero(m);
  for (int i = 0; i < SigmaPointSet::kCount; ++i) {
    predicted[static_cast<std::size_t>(i)] = predict_measurement(
        StateVector::from_vector(sigma->points[static_cast<std::size_t>(i)]),
        epoch, models.frame);
    y_mean += sigma->mean_weights[static_cast<std::size_t>(i)] *
              predicted[static_cast<std::size_t>(i)];
  }
  MatrixXd pyy = MatrixXd::Zero(m, m);
  MatrixXd pxy = MatrixXd::Zero(kStateDim, m);
  for (int i = 0; i < SigmaPointSet::kCount; ++i) {
    const VectorXd dy = predicted[static_cast<std::size_t>(i)] - y_mean;
    const Vec8 dx = sigma->points[static_cast<std::size_t>(i)] - mean;
    const double w = sigma->cov_weights[static_cast<std::size_t>(i)];
    pyy.noalias() += w * dy * dy.transpose();
    pxy.noalias() += w * dx * dy.transpose();
  }
  pyy.diagonal() += epoch.noise_var;

  Eigen::FullPivLU<MatrixXd> lu(pyy);
  if (!lu.isInvertible()) {
    throw std::runtime_error(
        "kalman_update: innovation covariance not invertible");
  }
  const MatrixXd gain = pxy * lu.inverse();
  out.innovation = epoch.z - y_mean;
  const Vec8 posterior = mean + gain * out.innovation;
  Mat8 cov = belief.covariance - gain * pyy * gain.transpose();
  repair_covariance(cov, &out.repairs, &out.diverged);
  out.belief = GaussianBelief{StateVector::from_vector(posterior), cov};
  return out;
}

FilterRun run_filter(FilterKind kind, const GaussianBelief& init,
                     const std::vector<EpochMeasurement>& obs,
                     const std::vector<dynamics::StateVector>& truth,
                     const FilterModels& models) {
  if (!truth.empty() && truth.size() != obs.size()) {
    throw std::invalid_argument("run_filter: truth/observation size mismatch");
  }
  for (std::size_t k = 1; k < obs.size(); ++k) {
    if (!(obs[k].epoch > obs[k - 1].epoch)) {
      throw std::invalid_argument("run_filter: observations not time-ordered");
    }
  }

  FilterRun run;
  run.kind = kind;
  if (obs.empty()) {
    FilterStepRecord rec;
    rec.estimate = init.mean;
    rec.cov_trace = init.covariance.trace();
    run.steps.push_back(rec);
    return run;
  }
  run.steps.reserve(obs.size());

  using Clock = std::chrono::steady_clock;
  GaussianBelief belief = init;
  double t_prev = obs.front().epoch;

  for (std::size_t k = 0; k < obs.size(); ++k) {
    const EpochMeasurement& epoch = obs[k];
    FilterStepRecord rec;
    rec.epoch = epoch.epoch;

    PredictResult pred;
    const auto predict_start = Clock::now();
    try {
      if (k == 0) {
        pred.belief = belief;
        if (kind != FilterKind::Ekf) {
          pred.sigma = generate_sigma_points(belief, models.ut);
        }
      } else {
        pred = predict(kind, belief, t_prev, epoch.epoch - t_prev, models);
      }
    } catch (const std::exception&) {
      run.diverged = true;
      run.diverged_at = epoch.epoch;
      break;
    }
    rec.predict_seconds =
        std::chrono::duration<double>(Clock::now() - predict_start).count();

    UpdateResult upd;
    const auto update_start = Clock::now();
    try {
      if (epoch.dim() > 0) {
        upd = kalman_update(pred.belief, epoch, models,
                            pred.sigma ? &*pred.sigma : nullptr);
      } else {
        upd.belief = pred.belief;
      }
    } catch (const std::exception&) {
      run.diverged = true;
      run.diverged_at = epoch.epoch;
      break;
    }
    rec.update_seconds =
        std::chrono::duration<double>(Clock::now() - update_start).count();

    belief = upd.belief;
    run.repairs += upd.repairs;
    if (upd.diverged && !run.diverged) {
      run.diverged = true;
      run.diverged_at = epoch.epoch;
    }
    if (!belief.mean.finite() || !belief.covariance.allFinite()) {
      run.diverged = true;
      run.diverged_at = epoch.epoch;
      break;
    }

    rec.estimate = belief.mean;
    rec.cov_trace = belief.covariance.trace();
    if (!truth.empty()) {
      const dynamics::StateVector& ref = truth[k];
      rec.err_downrange = belief.mean.downrange - ref.downrange;
      rec.err_altitude = belief.mean.altitude - ref.altitude;
      rec.err_speed = belief.mean.speed - ref.speed;
      rec.err_fpa = belief.mean.fpa - ref.fpa;
    }
    if (upd.innovation.size() > 0) {
      rec.innovation_rms =
          std::sqrt(upd.innovation.squaredNorm() / upd.innovation.size());
    }
    rec.diverged = run.diverged;
    run.steps.push_back(rec);
    t_prev = epoch.epoch;
  }
  return run;
}

}  // namespace lvnav::estimators
