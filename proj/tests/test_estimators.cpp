#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "lvnav/estimators.hpp"
#include "lvnav/scenario.hpp"
#include "test_support.hpp"

using namespace lvnav;
using namespace lvnav::estimators;
using dynamics::StateVector;

namespace {

scenario::ScenarioConfig crs5() { return scenario::build_crs5(); }

GaussianBelief crs5_belief(const scenario::ScenarioConfig& cfg, double t) {
  GaussianBelief b;
  b.mean = testing::crs5_state_at(cfg, t);
  b.covariance = cfg.init_cov_diag.asDiagonal();
  return b;
}

// Coasting vehicle in negligible gravity with no drag: the dynamics are
// linear to machine precision on the sampled sigma-point manifold.
struct LinearTestSystem {
  FilterModels models;
  GaussianBelief belief;
  double t = 400.0;
};

LinearTestSystem linear_system() {
  dynamics::StageParams stage;
  stage.inert_mass = 1000.0;
  stage.propellant_mass = 9000.0;
  stage.isp = 300.0;
  stage.thrust = 60.0 * stage.isp * 9.80665;
  stage.burn_duration = 150.0;  // burned out before t = 400

  LinearTestSystem sys;
  sys.models.vehicle.stages = {stage};
  sys.models.vehicle.frontal_area = 1.0;
  sys.models.vehicle.pitch_kick_time = 1e9;
  sys.models.environment.earth_radius = 1e16;
  sys.models.environment.g0 = 1e-12;
  sys.models.environment.rho0 = 0.0;
  sys.models.process_noise = 1e-30 * Mat8::Identity();
  sys.models.ekf_stm = EkfStmMode::MatrixExp;

  sys.belief.mean.downrange = 1e5;
  sys.belief.mean.altitude = 2e5;
  sys.belief.mean.speed = 7000.0;
  sys.belief.mean.fpa = 0.7;
  sys.belief.mean.mass = 5000.0;
  sys.belief.mean.drag_coeff = 0.3;
  sys.belief.mean.clock_bias = 400.0;
  sys.belief.mean.clock_drift = 2.0;
  Vec8 diag;
  diag << 1.0, 1.0, 0.01, 1e-30, 9.0, 1e-30, 9e4, 25.0;
  sys.belief.covariance = diag.asDiagonal();
  return sys;
}

EpochMeasurement epoch_from_state(const StateVector& truth,
                                  const gnss::LaunchSiteFrame& frame,
                                  bool rates, double range_var = 25.0,
                                  double rate_var = 0.04) {
  Vec3 user;
  frame.user_ecef(truth, &user, nullptr);
  const Vec3 up = user.normalized();
  const Vec3 along = frame.along_dir(truth.downrange);
  const Vec3 cross = up.cross(along).normalized();

  EpochMeasurement epoch;
  epoch.has_rates = rates;
  const std::vector<Vec3> dirs = {
      up, (up + 0.9 * along).normalized(), (up - 0.8 * along).normalized(),
      (up + 0.7 * cross).normalized(), (up - 0.6 * cross + 0.3 * along).normalized(),
      (up + 0.4 * cross - 0.5 * along).normalized()};
  for (const auto& d : dirs) {
    epoch.sat_positions.push_back(user + 2.2e7 * d);
    epoch.sat_velocities.push_back(1000.0 * d.cross(up.unitOrthogonal()));
  }
  const auto n = static_cast<Eigen::Index>(dirs.size());
  epoch.z.resize(rates ? 2 * n : n);
  epoch.noise_var.resize(epoch.z.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    epoch.noise_var(i) = range_var;
    if (rates) epoch.noise_var(n + i) = rate_var;
  }
  return epoch;
}

}  // namespace

TEST_CASE("sigma point moment matching") {
  const auto cfg = crs5();
  const GaussianBelief belief = crs5_belief(cfg, 50.0);
  const UtParams ut{1.0, 2.0, 0.0};
  const auto set = generate_sigma_points(belief, ut);

  double weight_sum = 0.0;
  for (double w : set.mean_weights) weight_sum += w;
  CHECK(weight_sum == doctest::Approx(1.0).epsilon(1e-14));

  const Vec8 mean = set.weighted_mean();
  const Vec8 mean0 = belief.mean.to_vector();
  CHECK((mean - mean0).norm() <= 1e-10 * mean0.norm());

  const Mat8 cov = set.weighted_covariance(mean);
  CHECK((cov - belief.covariance).cwiseAbs().maxCoeff() <=
        1e-8 * belief.covariance.cwiseAbs().maxCoeff());
}

TEST_CASE("sigma point offsets scale with sqrt(n + lambda)") {
  GaussianBelief belief;
  belief.mean = StateVector{};
  belief.mean.speed = 1.0;  // keep the state itself irrelevant here
  belief.covariance = Mat8::Identity();
  const auto set = generate_sigma_points(belief, UtParams{1.0, 2.0, 0.0});
  const Vec8 center = belief.mean.to_vector();
  for (int i = 1; i < SigmaPointSet::kCount; ++i) {
    CHECK((set.points[static_cast<std::size_t>(i)] - center).norm() ==
          doctest::Approx(std::sqrt(8.0)).epsilon(1e-12));
  }
}

TEST_CASE("sigma point generation names the failing minor") {
  GaussianBelief belief;
  belief.mean.speed = 10.0;
  Vec8 diag = Vec8::Ones();
  diag(2) = -1.0;
  belief.covariance = diag.asDiagonal();
  CHECK_THROWS_WITH_AS(generate_sigma_points(belief, UtParams{}),
                       doctest::Contains("order 3"), std::runtime_error);
}

TEST_CASE("measurement prediction and jacobian") {
  const auto cfg = crs5();
  const auto frame = cfg.frame();
  const StateVector s = testing::crs5_state_at(cfg, 120.0);
  const auto epoch = epoch_from_state(s, frame, true);

  SUBCASE("prediction is range plus clock and rate plus drift") {
    const VectorXd y = predict_measurement(s, epoch, frame);
    REQUIRE(y.size() == 12);
    Vec3 user, vel;
    frame.user_ecef(s, &user, &vel);
    for (int i = 0; i < 6; ++i) {
      const auto idx = static_cast<std::size_t>(i);
      const double r = (epoch.sat_positions[idx] - user).norm();
      CHECK(y(i) == doctest::Approx(r + s.clock_bias).epsilon(1e-14));
      const Vec3 los = (epoch.sat_positions[idx] - user).normalized();
      CHECK(y(6 + i) ==
            doctest::Approx(los.dot(epoch.sat_velocities[idx] - vel) +
                            s.clock_drift)
                .epsilon(1e-12));
    }
  }

  SUBCASE("analytic jacobian matches finite differences") {
    const MatrixXd analytic = measurement_jacobian(s, epoch, frame);
    MatrixXd fd(analytic.rows(), analytic.cols());
    const Vec8 x = s.to_vector();
    for (int j = 0; j < kStateDim; ++j) {
      const double step = 1e-6 * std::max(std::abs(x(j)), 1.0);
      Vec8 plus = x, minus = x;
      plus(j) += step;
      minus(j) -= step;
      fd.col(j) = (predict_measurement(StateVector::from_vector(plus), epoch, frame) -
                   predict_measurement(StateVector::from_vector(minus), epoch, frame)) /
                  (2.0 * step);
    }
    const double rel = (analytic - fd).cwiseAbs().maxCoeff() /
                       analytic.cwiseAbs().maxCoeff();
    CHECK(rel < 1e-6);
  }
}

TEST_CASE("kalman update") {
  const auto cfg = crs5();
  const auto frame = cfg.frame();
  FilterModels models = cfg.filter_models();
  const StateVector truth = testing::crs5_state_at(cfg, 120.0);

  SUBCASE("zero innovation leaves the mean and shrinks the covariance") {
    GaussianBelief belief{truth, cfg.init_cov_diag.asDiagonal()};
    auto epoch = epoch_from_state(truth, frame, true);
    epoch.z = predict_measurement(truth, epoch, frame);

    const auto ekf = kalman_update(belief, epoch, models, nullptr);
    CHECK((ekf.belief.mean.to_vector() - truth.to_vector()).norm() < 1e-9);
    CHECK(ekf.belief.covariance.trace() < belief.covariance.trace());

    const auto sigma = generate_sigma_points(belief, models.ut);
    const auto ukf = kalman_update(belief, epoch, models, &sigma);
    CHECK((ukf.belief.mean.to_vector() - truth.to_vector()).norm() < 1e-3);
    CHECK(ukf.belief.covariance.trace() < belief.covariance.trace());
  }

  SUBCASE("scalar information form on a clock-only problem") {
    GaussianBelief belief{truth, Mat8::Zero()};
    Vec8 diag = Vec8::Constant(1e-12);
    diag(6) = 9e4;
    belief.covariance = diag.asDiagonal();

    auto epoch = epoch_from_state(truth, frame, false, 100.0);
    epoch.sat_positions.resize(1);
    epoch.sat_velocities.resize(1);
    epoch.z = predict_measurement(truth, epoch, frame).head(1);
    epoch.z(0) += 30.0;  // pure clock-looking offset
    epoch.noise_var = VectorXd::Constant(1, 100.0);

    const auto out = kalman_update(belief, epoch, models, nullptr);
    const double expected = 1.0 / (1.0 / 9e4 + 1.0 / 100.0);
    CHECK(out.belief.covariance(6, 6) ==
          doctest::Approx(expected).epsilon(1e-6));
  }

  SUBCASE("singular innovation covariance is an error") {
    GaussianBelief belief{truth, cfg.init_cov_diag.asDiagonal()};
    auto epoch = epoch_from_state(truth, frame, false);
    // duplicate satellites with zero variance make S rank deficient
    for (auto& pos : epoch.sat_positions) pos = epoch.sat_positions[0];
    epoch.z = predict_measurement(truth, epoch, frame);
    epoch.noise_var.setZero();
    CHECK_THROWS_AS(kalman_update(belief, epoch, models, nullptr),
                    std::runtime_error);
  }
}

TEST_CASE("all four predicts coincide on a linear system") {
  auto sys = linear_system();
  const double dt = 1.0;

  const auto ekf = ekf_predict(sys.belief, sys.t, dt, sys.models);
  const auto ukf = ukf_predict(sys.belief, sys.t, dt, sys.models);
  const auto sp = spukf_predict(sys.belief, sys.t, dt, sys.models);
  const auto esp = espukf_predict(sys.belief, sys.t, dt, sys.models);

  const Vec8 mean_ref = ekf.belief.mean.to_vector();
  const double mean_scale = mean_ref.norm();
  for (const auto* r : {&ukf, &sp, &esp}) {
    CHECK((r->belief.mean.to_vector() - mean_ref).norm() <=
          1e-9 * mean_scale);
  }
  const double cov_scale = ekf.belief.covariance.cwiseAbs().maxCoeff();
  for (const auto* r : {&ukf, &sp, &esp}) {
    CHECK((r->belief.covariance - ekf.belief.covariance).cwiseAbs().maxCoeff() <=
          1e-9 * cov_scale);
  }
}

TEST_CASE("ekf predict covariance forms") {
  const auto cfg = crs5();
  FilterModels models = cfg.filter_models();
  const GaussianBelief belief = crs5_belief(cfg, 50.0);

  // exponential map reproduces the frozen-linearization discrete covariance
  models.ekf_stm = EkfStmMode::MatrixExp;
  const auto ekf = ekf_predict(belief, 50.0, 1.0, models);
  const Mat8 phi = dynamics::state_transition_matrix(
      dynamics::jacobian(belief.mean, models.vehicle, models.environment, 50.0),
      1.0);
  const Mat8 expected =
      phi * belief.covariance * phi.transpose() + models.process_noise;
  CHECK((ekf.belief.covariance - expected).cwiseAbs().maxCoeff() <=
        1e-12 * expected.cwiseAbs().maxCoeff());

  // the first-order form differs once the dynamics are fast
  models.ekf_stm = EkfStmMode::FirstOrder;
  const auto ekf1 = ekf_predict(belief, 50.0, 1.0, models);
  CHECK((ekf1.belief.covariance - ekf.belief.covariance).cwiseAbs().maxCoeff() >
        0.0);

  // trace grows through the powered-flight dynamics with negligible Q
  CHECK(ekf.belief.covariance.trace() > belief.covariance.trace());
}

TEST_CASE("ukf predict properties") {
  const auto cfg = crs5();
  FilterModels models = cfg.filter_models();
  const double t = 50.0;

  SUBCASE("collapsed covariance limit returns Q") {
    GaussianBelief belief = crs5_belief(cfg, t);
    belief.covariance = 1e-30 * Mat8::Identity();
    const auto out = ukf_predict(belief, t, 1.0, models);
    CHECK(out.belief.covariance.cwiseAbs().maxCoeff() < 1e-16);
  }

  SUBCASE("predicted mean stays near the directly propagated mean") {
    const GaussianBelief belief = crs5_belief(cfg, t);
    const auto out = ukf_predict(belief, t, 1.0, models);
    const StateVector direct = dynamics::propagate(
        belief.mean, 1.0, 10, models.vehicle, models.environment, t);
    CHECK(std::abs(out.belief.mean.downrange - direct.downrange) < 0.5);
    CHECK(std::abs(out.belief.mean.altitude - direct.altitude) < 0.5);
  }

  SUBCASE("sigma point propagation failure names the point") {
    GaussianBelief belief = crs5_belief(cfg, t);
    Vec8 diag = cfg.init_cov_diag;
    diag(2) = 1e6;  // speed offsets reach far below zero
    belief.covariance = diag.asDiagonal();
    CHECK_THROWS_WITH_AS(ukf_predict(belief, t, 1.0, models),
                         doctest::Contains("sigma point"),
                         std::runtime_error);
  }
}

TEST_CASE("propagation and jacobian evaluation counts per predict") {
  const auto cfg = crs5();
  const FilterModels models = cfg.filter_models();
  const GaussianBelief belief = crs5_belief(cfg, 50.0);

  auto counts = [&](auto&& fn) {
    dynamics::reset_propagation_count();
    dynamics::reset_jacobian_count();
    fn();
    return std::pair<std::uint64_t, std::uint64_t>{
        dynamics::propagation_count(), dynamics::jacobian_count()};
  };

  const auto ekf = counts([&] { ekf_predict(belief, 50.0, 1.0, models); });
  CHECK(ekf.first == 1);
  CHECK(ekf.second == 1);

  const auto ukf = counts([&] { ukf_predict(belief, 50.0, 1.0, models); });
  CHECK(ukf.first == 17);
  CHECK(ukf.second == 0);

  const auto sp = counts([&] { spukf_predict(belief, 50.0, 1.0, models); });
  CHECK(sp.first == 1);
  CHECK(sp.second == 1);

  const auto esp = counts([&] { espukf_predict(belief, 50.0, 1.0, models); });
  CHECK(esp.first == 1);
  CHECK(esp.second == 2);
}

TEST_CASE("sigma point approximation quality") {
  const auto cfg = crs5();
  FilterModels models = cfg.filter_models();
  models.substeps_per_second = 100;
  const double t = 50.0;
  const double dt = 1.0;

  GaussianBelief belief = crs5_belief(cfg, t);
  const auto oracle = ukf_predict(belief, t, dt, models);
  const auto sp = spukf_predict(belief, t, dt, models);
  const auto esp = espukf_predict(belief, t, dt, models);

  double worst_sp = 0.0, worst_esp = 0.0;
  for (int i = 1; i < SigmaPointSet::kCount; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    worst_sp = std::max(worst_sp, (sp.sigma->points[idx] -
                                   oracle.sigma->points[idx]).norm());
    worst_esp = std::max(worst_esp, (esp.sigma->points[idx] -
                                     oracle.sigma->points[idx]).norm());
  }

  SUBCASE("extrapolated correction beats the single-propagation map") {
    CHECK(worst_esp < worst_sp);
  }

  SUBCASE("doubling the offsets roughly quadruples the spukf error") {
    // offsets wide enough that the quadratic flow term dominates the
    // frozen-Jacobian error, and a short step to keep the oracle tight
    Vec8 diag;
    diag << 25.0, 25.0, 4.0, 0.02, 2500.0, 0.04, 100.0, 1.0;
    const double dt_short = 0.01;
    auto worst_at = [&](double scale) {
      GaussianBelief b{belief.mean, (scale * scale) * diag.asDiagonal()};
      const auto oracle_pts = ukf_predict(b, t, dt_short, models);
      const auto sp_pts = spukf_predict(b, t, dt_short, models);
      double worst = 0.0;
      for (int i = 1; i < SigmaPointSet::kCount; ++i) {
        const auto idx = static_cast<std::size_t>(i);
        worst = std::max(worst, (sp_pts.sigma->points[idx] -
                                 oracle_pts.sigma->points[idx]).norm());
      }
      return worst;
    };
    const double ratio = worst_at(2.0) / worst_at(1.0);
    CHECK(ratio > 3.0);
    CHECK(ratio < 5.5);
  }
}

TEST_CASE("approximation order slopes at t = 100") {
  const auto slopes =
      testing::approximation_order_slopes(crs5(), 100.0, 0.01);
  CHECK(slopes.spukf >= 1.9);
  CHECK(slopes.espukf >= 2.7);
}

TEST_CASE("run_filter") {
  const auto cfg = crs5();
  const FilterModels models = cfg.filter_models();
  const GaussianBelief init = cfg.initial_belief();

  SUBCASE("empty stream returns only the initial belief") {
    const auto run = run_filter(FilterKind::Ekf, init, {}, {}, models);
    REQUIRE(run.steps.size() == 1);
    CHECK(run.steps[0].estimate.to_vector() == init.mean.to_vector());
    CHECK_FALSE(run.diverged);
  }

  SUBCASE("rejects unordered observations") {
    auto truth = scenario::generate_truth(cfg);
    truth.resize(3);
    auto stream = scenario::generate_observations(truth, cfg, 1);
    std::swap(stream.epochs[1], stream.epochs[2]);
    CHECK_THROWS_AS(run_filter(FilterKind::Ekf, init, stream.epochs,
                               stream.truth_states, models),
                    std::invalid_argument);
  }

  SUBCASE("identical seeds give bit-identical runs") {
    auto truth = scenario::generate_truth(cfg);
    truth.resize(40);
    const auto stream_a = scenario::generate_observations(truth, cfg, 77);
    const auto stream_b = scenario::generate_observations(truth, cfg, 77);
    for (FilterKind kind : {FilterKind::Ekf, FilterKind::Ukf,
                            FilterKind::Spukf, FilterKind::Espukf}) {
      const auto a =
          run_filter(kind, init, stream_a.epochs, stream_a.truth_states, models);
      const auto b =
          run_filter(kind, init, stream_b.epochs, stream_b.truth_states, models);
      REQUIRE(a.steps.size() == b.steps.size());
      for (std::size_t i = 0; i < a.steps.size(); ++i) {
        CHECK(a.steps[i].estimate.to_vector() ==
              b.steps[i].estimate.to_vector());
      }
    }
  }

  SUBCASE("noiseless four-channel ranges converge onto the truth") {
    scenario::ScenarioConfig quiet = cfg;
    quiet.channels = 4;
    quiet.budget.sigma_pseudorange = 0.0;
    quiet.budget.sigma_carrier = 0.0;
    quiet.budget.sigma_range_rate = 0.0;
    quiet.budget.use_iono = false;
    quiet.budget.use_tropo = false;
    auto truth = scenario::generate_truth(quiet);
    truth.resize(21);
    const auto stream = scenario::generate_observations(truth, quiet, 5);
    const auto run = run_filter(FilterKind::Ekf, quiet.initial_belief(),
                                stream.epochs, stream.truth_states,
                                quiet.filter_models());
    REQUIRE(run.steps.size() == 21);
    const auto& last = run.steps.back();
    CHECK(std::hypot(last.err_downrange, last.err_altitude) < 1.0);
    CHECK_FALSE(run.diverged);
  }
}
