#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "lvnav/linalg.hpp"

namespace lvnav::dynamics {

/// Planar ascent state: down-range distance, altitude, speed, flight path
/// angle, vehicle mass, aerodynamic coefficient, receiver clock bias and
/// clock bias rate. Component order is fixed and shared with every 8x8
/// matrix in the estimators.
struct StateVector {
  double downrange = 0.0;    ///< m
  double altitude = 0.0;     ///< m
  double speed = 0.0;        ///< m/s
  double fpa = 0.0;          ///< flight path angle, rad
  double mass = 0.0;         ///< kg
  double drag_coeff = 0.0;   ///< dimensionless
  double clock_bias = 0.0;   ///< m
  double clock_drift = 0.0;  ///< m/s

  Vec8 to_vector() const;
  static StateVector from_vector(const Vec8& v);
  bool finite() const;
};

struct StageParams {
  double inert_mass = 0.0;       ///< kg
  double propellant_mass = 0.0;  ///< kg
  double thrust = 0.0;           ///< N
  double isp = 0.0;              ///< s
  double burn_duration = 0.0;    ///< s

  /// Throws std::invalid_argument if a field is non-positive or the
  /// propellant budget is inconsistent with thrust/isp by more than 2%.
  void validate(double g0) const;
};

struct Environment {
  double earth_radius = 6378137.0;  ///< m
  double g0 = 9.80665;              ///< m/s^2 at the surface
  double rho0 = 1.225;              ///< kg/m^3 sea-level density
  double scale_height = 7500.0;     ///< m
};

struct VehicleConfig {
  std::vector<StageParams> stages;  ///< burned in order, no inter-stage coast
  double payload_mass = 0.0;        ///< kg
  double spacecraft_mass = 0.0;     ///< kg
  double frontal_area = 0.0;        ///< m^2
  double pitch_kick_time = 10.0;    ///< s
  double pitch_kick_angle = 0.00873;  ///< rad subtracted from gamma at kick

  double stage_start_time(std::size_t i) const;
  double stage_burnout_time(std::size_t i) const;
  double final_burnout_time() const;
  /// Stage index active at time t, or -1 during coast.
  int active_stage(double t) const;
  double total_mass() const;
  void validate(const Environment& env) const;
};

/// Thrown when numerical propagation leaves the model's validity domain;
/// carries the time at which the violation occurred.
class PropagationError : public std::runtime_error {
 public:
  PropagationError(const std::string& what, double t)
      : std::runtime_error(what + " at t=" + std::to_string(t) + " s"),
        time_(t) {}
  double time() const { return time_; }

 private:
  double time_ = 0.0;
};

/// Gravitational acceleration at altitude h (inverse-square law).
double gravity(double h, const Environment& env);

/// Atmospheric density at altitude h (exponential profile).
double air_density(double h, const Environment& env);

/// Nozzle mass flow rate thrust / (isp * g0).
double mass_flow_rate(const StageParams& stage, const Environment& env);

/// Thrust at mission time t; zero during coast.
double thrust_at(const VehicleConfig& cfg, double t);

/// Exhaust mass flow at mission time t; zero during coast.
double exhaust_mass_flow_at(const VehicleConfig& cfg, const Environment& env,
                            double t);

/// Aerodynamic drag force, 0.5 * rho(h) * v^2 * C * A.
double drag(const StateVector& s, const VehicleConfig& cfg,
            const Environment& env);

/// Time derivative of the full state at mission time t.
/// Requires m > 0, v > 0 and h > -1000 m.
StateVector derivative(const StateVector& s, const VehicleConfig& cfg,
                       const Environment& env, double t);

/// Analytic Jacobian of `derivative` with respect to the state.
Mat8 jacobian(const StateVector& s, const VehicleConfig& cfg,
              const Environment& env, double t);

/// Additive state-rate forcing, sampled at the RK4 stage times. The truth
/// generator uses it to realize the model's process-noise term; filters
/// propagate without it.
class RateForcing {
 public:
  virtual ~RateForcing() = default;
  virtual Vec8 at(double t) const = 0;
};

/// Classical RK4 integration of the state over [t0, t0 + dt] using the given
/// number of substeps. Thrust and mass flow are held constant within each
/// substep; staging mass drops and the pitch kick are applied at the first
/// substep boundary at or after their event time (exclusive of t0).
StateVector propagate(const StateVector& s, double dt, int substeps,
                      const VehicleConfig& cfg, const Environment& env,
                      double t0, const RateForcing* forcing = nullptr);

/// Same trajectory sweep as `propagate` but also reports the state at the
/// midpoint t0 + dt/2 (requires an even substep count). Counts as a single
/// trajectory propagation.
StateVector propagate_with_midpoint(const StateVector& s, double dt,
                                    int substeps, const VehicleConfig& cfg,
                                    const Environment& env, double t0,
                                    StateVector* midpoint);

/// exp(J * dt) by scaling-and-squaring with a truncated Taylor series.
/// Exact for J = 0; rejects non-finite input.
Mat8 state_transition_matrix(const Mat8& jac, double dt);

/// Number of RK4 trajectory propagations performed by this thread since the
/// last reset. Used by the instrumentation tests and the benchmark harness.
std::uint64_t propagation_count();
void reset_propagation_count();

/// Analogous per-thread count of analytic Jacobian evaluations.
std::uint64_t jacobian_count();
void reset_jacobian_count();

}  // namespace lvnav::dynamics
