#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "lvnav/dynamics.hpp"
#include "lvnav/scenario.hpp"
#include "test_support.hpp"

using namespace lvnav;
using dynamics::StateVector;

namespace {

dynamics::Environment default_env() { return dynamics::Environment{}; }

scenario::ScenarioConfig crs5() { return scenario::build_crs5(); }

StateVector crs5_init() { return crs5().truth_initial_state(); }

// Single-stage vertical test vehicle with exact propellant/flow consistency.
dynamics::VehicleConfig toy_vehicle() {
  dynamics::StageParams stage;
  stage.inert_mass = 1000.0;
  stage.propellant_mass = 9000.0;
  stage.isp = 300.0;
  stage.thrust = 60.0 * stage.isp * 9.80665;  // mass flow exactly 60 kg/s
  stage.burn_duration = 150.0;
  dynamics::VehicleConfig cfg;
  cfg.stages = {stage};
  cfg.frontal_area = 1.0;
  cfg.pitch_kick_time = 1e9;  // never
  return cfg;
}

}  // namespace

TEST_CASE("gravity follows the inverse square law") {
  const auto env = default_env();
  CHECK(dynamics::gravity(0.0, env) == doctest::Approx(env.g0));
  CHECK(dynamics::gravity(env.earth_radius, env) == doctest::Approx(env.g0 / 4.0));
  // independent scalar evaluation at 400 km
  const double expected = 9.80665 * std::pow(6378137.0 / 6778137.0, 2);
  CHECK(dynamics::gravity(400e3, env) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(dynamics::gravity(400e3, env) == doctest::Approx(8.68).epsilon(1e-3));
}

TEST_CASE("drag matches the quadratic model") {
  auto cfg = crs5().vehicle;
  const auto env = default_env();

  StateVector s;
  s.speed = 0.0;
  s.drag_coeff = 0.5010;
  s.mass = 1.0;
  CHECK(dynamics::drag(s, cfg, env) == 0.0);

  s.speed = 100.0;
  s.altitude = 1e7;
  CHECK(dynamics::drag(s, cfg, env) == doctest::Approx(0.0).epsilon(1e-30));

  // hand-evaluated at sea level with A = 10.52 m^2
  cfg.frontal_area = 10.52;
  s.altitude = 0.0;
  const double expected = 0.5 * 1.225 * 100.0 * 100.0 * 0.5010 * 10.52;
  CHECK(dynamics::drag(s, cfg, env) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(expected == doctest::Approx(3.228e4).epsilon(1e-3));
}

TEST_CASE("mass flow rate and burn duration consistency") {
  const auto cfg = crs5();
  const auto env = cfg.environment;
  const auto& stage1 = cfg.vehicle.stages[0];
  const auto& stage2 = cfg.vehicle.stages[1];

  const double mdot1 = dynamics::mass_flow_rate(stage1, env);
  CHECK(mdot1 == doctest::Approx(5886000.0 / (282.0 * 9.80665)).epsilon(1e-12));
  CHECK(mdot1 == doctest::Approx(2128.5).epsilon(1e-4));
  // cross-check against the propellant budget
  CHECK(mdot1 == doctest::Approx(395700.0 / 187.0).epsilon(0.01));

  const double mdot2 = dynamics::mass_flow_rate(stage2, env);
  CHECK(mdot2 == doctest::Approx(240.2).epsilon(1e-3));
  CHECK(92670.0 / mdot2 == doctest::Approx(386.0).epsilon(0.02));

  // burn-duration consistency within 2% for both stages
  for (const auto& st : cfg.vehicle.stages) {
    const double burned = dynamics::mass_flow_rate(st, env) * st.burn_duration;
    CHECK(std::abs(burned - st.propellant_mass) <= 0.02 * st.propellant_mass);
    CHECK_NOTHROW(st.validate(env.g0));
  }

  dynamics::StageParams zero = stage1;
  zero.thrust = 0.0;
  CHECK(dynamics::mass_flow_rate(zero, env) == 0.0);
  CHECK_THROWS_AS(zero.validate(env.g0), std::invalid_argument);
}

TEST_CASE("derivative reproduces the hand-evaluated liftoff rates") {
  const auto cfg = crs5();
  StateVector s = StateVector::from_vector(cfg.init_mean);
  const auto rate = dynamics::derivative(s, cfg.vehicle, cfg.environment, 0.0);

  // altitude rate = v sin(gamma), sin(1.5708) ~ 1
  CHECK(rate.altitude == doctest::Approx(5.6543).epsilon(1e-9));

  // speed rate = T/m - D/m - g, drag nearly zero at 5.65 m/s
  const double drag = dynamics::drag(s, cfg.vehicle, cfg.environment);
  const double expected = 5886000.0 / 520000.0 - drag / 520000.0 - 9.80665 *
                              std::sin(1.5708);
  CHECK(rate.speed == doctest::Approx(expected).epsilon(1e-12));
  CHECK(rate.speed == doctest::Approx(1.513).epsilon(1e-3));

  CHECK(rate.mass == doctest::Approx(-2128.47).epsilon(1e-4));
  CHECK(rate.drag_coeff == 0.0);
  CHECK(rate.clock_bias == doctest::Approx(2.0));
  CHECK(rate.clock_drift == 0.0);
}

TEST_CASE("derivative during coast has no thrust or mass flow") {
  const auto cfg = crs5();
  StateVector s = crs5_init();
  s.speed = 5000.0;
  s.altitude = 250e3;
  s.fpa = 0.1;
  s.mass = 10000.0;
  const double t = cfg.vehicle.final_burnout_time() + 10.0;
  const auto rate = dynamics::derivative(s, cfg.vehicle, cfg.environment, t);
  CHECK(rate.mass == 0.0);
  const double g = dynamics::gravity(s.altitude, cfg.environment);
  const double d = dynamics::drag(s, cfg.vehicle, cfg.environment);
  CHECK(rate.speed ==
        doctest::Approx(-d / s.mass - g * std::sin(s.fpa)).epsilon(1e-12));
}

TEST_CASE("derivative rejects invalid states") {
  const auto cfg = crs5();
  StateVector s = crs5_init();
  s.speed = 0.0;
  CHECK_THROWS_AS(dynamics::derivative(s, cfg.vehicle, cfg.environment, 0.0),
                  std::domain_error);
  s = crs5_init();
  s.altitude = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(dynamics::derivative(s, cfg.vehicle, cfg.environment, 0.0),
                  std::invalid_argument);
  s = crs5_init();
  s.mass = -1.0;
  CHECK_THROWS_AS(dynamics::derivative(s, cfg.vehicle, cfg.environment, 0.0),
                  std::domain_error);
}

TEST_CASE("down-range rate vanishes at exactly vertical flight") {
  const auto cfg = crs5();
  StateVector s = crs5_init();
  s.fpa = std::numbers::pi / 2;
  const auto rate = dynamics::derivative(s, cfg.vehicle, cfg.environment, 0.0);
  CHECK(std::abs(rate.downrange) < 1e-14);
}

TEST_CASE("jacobian structural rows") {
  const auto cfg = crs5();
  const Mat8 jac =
      dynamics::jacobian(crs5_init(), cfg.vehicle, cfg.environment, 5.0);
  // mass flow is state independent during burn
  CHECK(jac.row(4).cwiseAbs().maxCoeff() == 0.0);
  // aero coefficient and clock drift are constants
  CHECK(jac.row(5).cwiseAbs().maxCoeff() == 0.0);
  CHECK(jac.row(7).cwiseAbs().maxCoeff() == 0.0);
  // clock bias rate is the drift state
  CHECK(jac(6, 7) == 1.0);
  CHECK(jac.row(6).cwiseAbs().sum() == 1.0);
}

TEST_CASE("jacobian matches central finite differences") {
  const auto cfg = crs5();

  SUBCASE("at the liftoff state") {
    const StateVector s = crs5_init();
    const Mat8 analytic = dynamics::jacobian(s, cfg.vehicle, cfg.environment, 0.0);
    const Mat8 fd = testing::fd_jacobian(s, cfg.vehicle, cfg.environment, 0.0);
    const double rel = (analytic - fd).cwiseAbs().maxCoeff() /
                       analytic.cwiseAbs().maxCoeff();
    CHECK(rel < 1e-6);
  }

  SUBCASE("on 100 random valid states") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
      StateVector s;
      s.downrange = 5e5 * u(rng);
      s.altitude = 2e5 * u(rng);
      s.speed = 10.0 + 7000.0 * u(rng);
      s.fpa = 0.05 + 1.5 * u(rng);
      s.mass = 1e4 + 5e5 * u(rng);
      s.drag_coeff = 0.1 + 0.9 * u(rng);
      s.clock_bias = 1000.0 * u(rng);
      s.clock_drift = 10.0 * u(rng);
      const double t = 600.0 * u(rng);
      const Mat8 analytic =
          dynamics::jacobian(s, cfg.vehicle, cfg.environment, t);
      const Mat8 fd = testing::fd_jacobian(s, cfg.vehicle, cfg.environment, t);
      const double rel = (analytic - fd).cwiseAbs().maxCoeff() /
                         analytic.cwiseAbs().maxCoeff();
      CHECK(rel < 1e-6);
    }
  }
}

TEST_CASE("propagate over a zero span is the identity") {
  const auto cfg = crs5();
  const StateVector s = crs5_init();
  const StateVector out =
      dynamics::propagate(s, 0.0, 1, cfg.vehicle, cfg.environment, 50.0);
  CHECK(out.to_vector() == s.to_vector());
}

TEST_CASE("propagate matches the closed-form rocket equation") {
  const auto vehicle = toy_vehicle();
  dynamics::Environment env;
  env.earth_radius = 1e16;  // uniform gravity, no curvature terms
  env.rho0 = 0.0;           // no drag

  StateVector s;
  s.speed = 5.0;
  s.fpa = std::numbers::pi / 2;
  s.mass = 10000.0;
  s.drag_coeff = 0.5;

  const double t_end = 100.0;
  const StateVector out =
      dynamics::propagate(s, t_end, 1000, vehicle, env, 0.0);

  const double mdot = 60.0;
  const double m_end = 10000.0 - mdot * t_end;
  const double v_exp =
      5.0 + 300.0 * 9.80665 * std::log(10000.0 / m_end) - 9.80665 * t_end;
  CHECK(out.mass == doctest::Approx(m_end).epsilon(1e-12));
  CHECK(out.speed == doctest::Approx(v_exp).epsilon(1e-6));
  CHECK(out.fpa == doctest::Approx(std::numbers::pi / 2).epsilon(1e-9));
}

TEST_CASE("mass bookkeeping along the ascent") {
  const auto cfg = crs5();
  const auto env = cfg.environment;
  const double mdot1 = dynamics::mass_flow_rate(cfg.vehicle.stages[0], env);

  SUBCASE("stage burn is exactly linear in time") {
    const StateVector out =
        dynamics::propagate(crs5_init(), 50.0, 500, cfg.vehicle, env, 0.0);
    CHECK(out.mass ==
          doctest::Approx(520000.0 - mdot1 * 50.0).epsilon(1e-9));
  }

  SUBCASE("mass never increases across the full trajectory") {
    StateVector s = crs5_init();
    double prev = s.mass;
    for (int k = 0; k < 580; ++k) {
      s = dynamics::propagate(s, 1.0, 10, cfg.vehicle, env, k * 1.0);
      CHECK(s.mass <= prev + 1e-9);
      prev = s.mass;
    }
  }

  SUBCASE("staging drops exactly the inert mass, continuously in v and h") {
    const StateVector before =
        testing::crs5_state_at(cfg, 186.0);
    const StateVector after =
        dynamics::propagate(before, 2.0, 20, cfg.vehicle, env, 186.0);
    // compose through the boundary in two calls
    const StateVector mid =
        dynamics::propagate(before, 1.0, 10, cfg.vehicle, env, 186.0);
    const StateVector after2 =
        dynamics::propagate(mid, 1.0, 10, cfg.vehicle, env, 187.0);
    CHECK(after.to_vector().isApprox(after2.to_vector(), 1e-12));
    // inert mass leaves at burnout
    const double burned = mdot1 * 1.0;
    CHECK(mid.mass == doctest::Approx(before.mass - burned -
                                      cfg.vehicle.stages[0].inert_mass)
                          .epsilon(1e-10));
  }
}

TEST_CASE("propagation error reports the violation time") {
  const auto cfg = crs5();
  StateVector s = crs5_init();
  s.fpa = -std::numbers::pi / 2;  // straight down
  s.speed = 300.0;
  s.altitude = 200.0;
  try {
    dynamics::propagate(s, 60.0, 600, cfg.vehicle, cfg.environment, 0.0);
    FAIL("expected PropagationError");
  } catch (const dynamics::PropagationError& e) {
    CHECK(e.time() > 0.0);
    CHECK(e.time() < 60.0);
  }
}

TEST_CASE("RK4 convergence order on the powered ascent") {
  const auto cfg = crs5();
  const StateVector start = testing::crs5_state_at(cfg, 20.0);
  const double span = 100.0;

  auto run = [&](int substeps) {
    return dynamics::propagate(start, span, substeps, cfg.vehicle,
                               cfg.environment, 20.0)
        .to_vector();
  };
  const Vec8 reference = run(6400);
  const Vec8 coarse = run(100);
  const Vec8 fine = run(200);

  const double e_coarse = (coarse - reference).norm();
  const double e_fine = (fine - reference).norm();
  const double order = std::log2(e_coarse / e_fine);
  CHECK(order >= 3.7);
}

TEST_CASE("state transition matrix") {
  SUBCASE("zero generator gives the exact identity") {
    const Mat8 phi = dynamics::state_transition_matrix(Mat8::Zero(), 3.0);
    CHECK((phi - Mat8::Identity()).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("diagonal generator exponentiates elementwise") {
    Vec8 diag;
    diag << -1.0, -0.5, 0.0, 0.3, 1.0, 2.0, -2.5, 0.7;
    const Mat8 jac = diag.asDiagonal();
    const Mat8 phi = dynamics::state_transition_matrix(jac, 0.8);
    for (int i = 0; i < kStateDim; ++i) {
      CHECK(phi(i, i) == doctest::Approx(std::exp(diag(i) * 0.8)).epsilon(1e-13));
    }
    CHECK((phi - Mat8(phi.diagonal().asDiagonal())).cwiseAbs().maxCoeff() <
          1e-14);
  }

  SUBCASE("nilpotent generator terminates exactly") {
    Mat8 jac = Mat8::Zero();
    jac(0, 1) = 1.0;
    const Mat8 phi = dynamics::state_transition_matrix(jac, 2.0);
    CHECK(phi(0, 1) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(phi(0, 0) == 1.0);
    CHECK(phi(1, 1) == 1.0);
    CHECK(phi.cwiseAbs().sum() == doctest::Approx(10.0).epsilon(1e-15));
  }

  SUBCASE("half-step composition equals the full step") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
      Mat8 jac;
      for (int i = 0; i < kStateDim; ++i)
        for (int j = 0; j < kStateDim; ++j) jac(i, j) = n(rng);
      const double dt = 0.5;
      const Mat8 full = dynamics::state_transition_matrix(jac, dt);
      const Mat8 half = dynamics::state_transition_matrix(jac, dt / 2);
      CHECK(((half * half) - full).cwiseAbs().maxCoeff() <
            1e-10 * full.cwiseAbs().maxCoeff());
    }
  }

  SUBCASE("rejects non-finite input") {
    Mat8 jac = Mat8::Zero();
    jac(2, 2) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(dynamics::state_transition_matrix(jac, 1.0),
                    std::invalid_argument);
  }
}

TEST_CASE("propagation counter instruments trajectory sweeps") {
  const auto cfg = crs5();
  dynamics::reset_propagation_count();
  CHECK(dynamics::propagation_count() == 0);
  (void)dynamics::propagate(crs5_init(), 1.0, 10, cfg.vehicle,
                            cfg.environment, 0.0);
  CHECK(dynamics::propagation_count() == 1);
  dynamics::StateVector mid;
  (void)dynamics::propagate_with_midpoint(crs5_init(), 1.0, 10, cfg.vehicle,
                                          cfg.environment, 0.0, &mid);
  CHECK(dynamics::propagation_count() == 2);
  CHECK(mid.altitude > 0.0);
  dynamics::reset_propagation_count();
}
