#include "lvnav/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace lvnav::dynamics {

namespace {

thread_local std::uint64_t g_propagation_count = 0;
thread_local std::uint64_t g_jacobian_count = 0;

// Event times (staging mass drops, pitch kick) are matched against substep
// boundaries with this tolerance.
constexpr double kEventEps = 1e-9;

struct FrozenInputs {
  double thrust = 0.0;
  double mass_flow = 0.0;
};

void check_state(const StateVector& s, double t) {
  if (!s.finite()) {
    throw PropagationError("non-finite state component", t);
  }
  if (s.mass <= 0.0) {
    throw PropagationError("mass must be positive", t);
  }
  if (s.speed <= 0.0) {
    throw PropagationError(
        "speed must be positive (flight path angle rate is singular)", t);
  }
  if (s.altitude <= -1000.0) {
    throw PropagationError("altitude below model validity floor", t);
  }
}

// Core equations of motion with thrust and mass flow supplied explicitly.
StateVector rates(const StateVector& s, const FrozenInputs& in,
                  const VehicleConfig& cfg, const Environment& env) {
  const double r = env.earth_radius + s.altitude;
  const double g = gravity(s.altitude, env);
  const double d = drag(s, cfg, env);
  const double sg = std::sin(s.fpa);
  const double cg = std::cos(s.fpa);

  StateVector rate;
  rate.downrange = env.earth_radius / r * s.speed * cg;
  rate.altitude = s.speed * sg;
  rate.speed = in.thrust / s.mass - d / s.mass - g * sg;
  rate.fpa = -(g / s.speed - s.speed / r) * cg;
  rate.mass = -in.mass_flow;
  rate.drag_coeff = 0.0;
  rate.clock_bias = s.clock_drift;
  rate.clock_drift = 0.0;
  return rate;
}

StateVector axpy(const StateVector& s, double a, const StateVector& k) {
  StateVector out = s;
  out.downrange += a * k.downrange;
  out.altitude += a * k.altitude;
  out.speed += a * k.speed;
  out.fpa += a * k.fpa;
  out.mass += a * k.mass;
  out.drag_coeff += a * k.drag_coeff;
  out.clock_bias += a * k.clock_bias;
  out.clock_drift += a * k.clock_drift;
  return out;
}

StateVector forced(StateVector rate, const RateForcing* forcing, double t) {
  if (forcing == nullptr) return rate;
  const Vec8 extra = forcing->at(t);
  return StateVector::from_vector(rate.to_vector() + extra);
}

StateVector rk4_substep(const StateVector& s, double hs,
                        const FrozenInputs& in, const VehicleConfig& cfg,
                        const Environment& env, double t,
                        const RateForcing* forcing) {
  check_state(s, t);
  const StateVector k1 = forced(rates(s, in, cfg, env), forcing, t);
  StateVector s2 = axpy(s, 0.5 * hs, k1);
  check_state(s2, t);
  const StateVector k2 = forced(rates(s2, in, cfg, env), forcing, t + 0.5 * hs);
  StateVector s3 = axpy(s, 0.5 * hs, k2);
  check_state(s3, t);
  const StateVector k3 = forced(rates(s3, in, cfg, env), forcing, t + 0.5 * hs);
  StateVector s4 = axpy(s, hs, k3);
  check_state(s4, t);
  const StateVector k4 = forced(rates(s4, in, cfg, env), forcing, t + hs);

  StateVector out = s;
  const double w = hs / 6.0;
  out.downrange += w * (k1.downrange + 2 * k2.downrange + 2 * k3.downrange + k4.downrange);
  out.altitude += w * (k1.altitude + 2 * k2.altitude + 2 * k3.altitude + k4.altitude);
  out.speed += w * (k1.speed + 2 * k2.speed + 2 * k3.speed + k4.speed);
  out.fpa += w * (k1.fpa + 2 * k2.fpa + 2 * k3.fpa + k4.fpa);
  out.mass += w * (k1.mass + 2 * k2.mass + 2 * k3.mass + k4.mass);
  out.drag_coeff += w * (k1.drag_coeff + 2 * k2.drag_coeff + 2 * k3.drag_coeff + k4.drag_coeff);
  out.clock_bias += w * (k1.clock_bias + 2 * k2.clock_bias + 2 * k3.clock_bias + k4.clock_bias);
  out.clock_drift += w * (k1.clock_drift + 2 * k2.clock_drift + 2 * k3.clock_drift + k4.clock_drift);
  return out;
}

struct Event {
  double time;
  int stage = -1;  // >= 0: drop this stage's inert mass, -1: pitch kick
};

std::vector<Event> events_in_window(const VehicleConfig& cfg, double t0,
                                    double t1) {
  std::vector<Event> events;
  if (cfg.pitch_kick_time > t0 + kEventEps &&
      cfg.pitch_kick_time <= t1 + kEventEps) {
    events.push_back({cfg.pitch_kick_time, -1});
  }
  for (std::size_t i = 0; i < cfg.stages.size(); ++i) {
    const double bt = cfg.stage_burnout_time(i);
    if (bt > t0 + kEventEps && bt <= t1 + kEventEps) {
      events.push_back({bt, static_cast<int>(i)});
    }
  }
  std::sort(events.begin(), events.end(),
            [](const Event& a, const Event& b) { return a.time < b.time; });
  return events;
}

StateVector propagate_impl(const StateVector& s, double dt, int substeps,
                           const VehicleConfig& cfg, const Environment& env,
                           double t0, int midpoint_substep,
                           StateVector* midpoint,
                           const RateForcing* forcing) {
  if (!(dt >= 0.0) || !std::isfinite(dt)) {
    throw std::invalid_argument("propagate: dt must be finite and >= 0");
  }
  if (substeps < 1) {
    throw std::invalid_argument("propagate: substeps must be >= 1");
  }
  ++g_propagation_count;

  const double hs = dt / substeps;
  auto events = events_in_window(cfg, t0, t0 + dt);
  std::size_t next_event = 0;

  StateVector cur = s;
  for (int i = 0; i < substeps; ++i) {
    const double t_start = t0 + i * hs;
    const double t_end = t0 + (i + 1) * hs;
    if (hs > 0.0) {
      FrozenInputs in;
      in.thrust = thrust_at(cfg, t_start);
      in.mass_flow = exhaust_mass_flow_at(cfg, env, t_start);
      cur = rk4_substep(cur, hs, in, cfg, env, t_start, forcing);
    }
    // Apply events snapped to this substep boundary.
    while (next_event < events.size() &&
           events[next_event].time <= t_end + kEventEps) {
      const Event& ev = events[next_event];
      if (ev.stage >= 0) {
        cur.mass -= cfg.stages[static_cast<std::size_t>(ev.stage)].inert_mass;
        if (cur.mass <= 0.0) {
          throw PropagationError("mass non-positive after stage drop", t_end);
        }
      } else {
        cur.fpa -= cfg.pitch_kick_angle;
      }
      ++next_event;
    }
    if (midpoint != nullptr && i + 1 == midpoint_substep) {
      *midpoint = cur;
    }
  }
  return cur;
}

}  // namespace

Vec8 StateVector::to_vector() const {
  Vec8 v;
  v << downrange, altitude, speed, fpa, mass, drag_coeff, clock_bias,
      clock_drift;
  return v;
}

StateVector StateVector::from_vector(const Vec8& v) {
  StateVector s;
  s.downrange = v(0);
  s.altitude = v(1);
  s.speed = v(2);
  s.fpa = v(3);
  s.mass = v(4);
  s.drag_coeff = v(5);
  s.clock_bias = v(6);
  s.clock_drift = v(7);
  return s;
}

bool StateVector::finite() const {
  return to_vector().allFinite();
}

void StageParams::validate(double g0) const {
  if (inert_mass <= 0.0 || propellant_mass <= 0.0 || thrust <= 0.0 ||
      isp <= 0.0 || burn_duration <= 0.0) {
    throw std::invalid_argument("StageParams: all fields must be positive");
  }
  const double burned = thrust / (isp * g0) * burn_duration;
  if (std::abs(burned - propellant_mass) > 0.02 * propellant_mass) {
    throw std::invalid_argument(
        "StageParams: thrust/isp/burn_duration inconsistent with propellant "
        "mass by more than 2%");
  }
}

double VehicleConfig::stage_start_time(std::size_t i) const {
  double t = 0.0;
  for (std::size_t k = 0; k < i && k < stages.size(); ++k) {
    t += stages[k].burn_duration;
  }
  return t;
}

double VehicleConfig::stage_burnout_time(std::size_t i) const {
  return stage_start_time(i) + stages[i].burn_duration;
}

double VehicleConfig::final_burnout_time() const {
  return stages.empty() ? 0.0 : stage_burnout_time(stages.size() - 1);
}

int VehicleConfig::active_stage(double t) const {
  double start = 0.0;
  for (std::size_t i = 0; i < stages.size(); ++i) {
    const double end = start + stages[i].burn_duration;
    if (t >= start - kEventEps && t < end - kEventEps) {
      return static_cast<int>(i);
    }
    start = end;
  }
  return -1;
}

double VehicleConfig::total_mass() const {
  double m = payload_mass + spacecraft_mass;
  for (const auto& st : stages) {
    m += st.inert_mass + st.propellant_mass;
  }
  return m;
}

void VehicleConfig::validate(const Environment& env) const {
  if (stages.empty()) {
    throw std::invalid_argument("VehicleConfig: at least one stage required");
  }
  for (const auto& st : stages) {
    st.validate(env.g0);
  }
  if (frontal_area <= 0.0) {
    throw std::invalid_argument("VehicleConfig: frontal_area must be positive");
  }
}

double gravity(double h, const Environment& env) {
  const double ratio = env.earth_radius / (env.earth_radius + h);
  return env.g0 * ratio * ratio;
}

double air_density(double h, const Environment& env) {
  return env.rho0 * std::exp(-h / env.scale_height);
}

double mass_flow_rate(const StageParams& stage, const Environment& env) {
  return stage.thrust / (stage.isp * env.g0);
}

double thrust_at(const VehicleConfig& cfg, double t) {
  const int stage = cfg.active_stage(t);
  return stage < 0 ? 0.0 : cfg.stages[static_cast<std::size_t>(stage)].thrust;
}

double exhaust_mass_flow_at(const VehicleConfig& cfg, const Environment& env,
                            double t) {
  const int stage = cfg.active_stage(t);
  return stage < 0
             ? 0.0
             : mass_flow_rate(cfg.stages[static_cast<std::size_t>(stage)], env);
}

double drag(const StateVector& s, const VehicleConfig& cfg,
            const Environment& env) {
  return 0.5 * air_density(s.altitude, env) * s.speed * s.speed *
         s.drag_coeff * cfg.frontal_area;
}

StateVector derivative(const StateVector& s, const VehicleConfig& cfg,
                       const Environment& env, double t) {
  if (!s.finite()) {
    throw std::invalid_argument("derivative: non-finite state component");
  }
  if (s.mass <= 0.0) {
    throw std::domain_error("derivative: mass must be positive");
  }
  if (s.speed <= 0.0) {
    throw std::domain_error(
        "derivative: speed must be positive (gamma rate is singular at v=0)");
  }
  if (s.altitude <= -1000.0) {
    throw std::domain_error("derivative: altitude below -1000 m");
  }
  FrozenInputs in;
  in.thrust = thrust_at(cfg, t);
  in.mass_flow = exhaust_mass_flow_at(cfg, env, t);
  return rates(s, in, cfg, env);
}

Mat8 jacobian(const StateVector& s, const VehicleConfig& cfg,
              const Environment& env, double t) {
  if (!s.finite()) {
    throw std::invalid_argument("jacobian: non-finite state component");
  }
  if (s.speed <= 0.0) {
    throw std::domain_error("jacobian: speed must be positive");
  }
  ++g_jacobian_count;
  const double re = env.earth_radius;
  const double r = re + s.altitude;
  const double g = gravity(s.altitude, env);
  const double d = drag(s, cfg, env);
  const double thrust = thrust_at(cfg, t);
  const double sg = std::sin(s.fpa);
  const double cg = std::cos(s.fpa);
  const double v = s.speed;
  const double m = s.mass;

  Mat8 jac = Mat8::Zero();

  // downrange rate: re/(re+h) * v * cos(gamma)
  jac(0, 1) = -re * v * cg / (r * r);
  jac(0, 2) = re * cg / r;
  jac(0, 3) = -re * v * sg / r;

  // altitude rate: v * sin(gamma)
  jac(1, 2) = sg;
  jac(1, 3) = v * cg;

  // speed rate: T/m - D/m - g*sin(gamma), D = 0.5*rho(h)*v^2*C*A
  jac(2, 1) = d / (m * env.scale_height) + 2.0 * g * sg / r;
  jac(2, 2) = -2.0 * d / (m * v);
  jac(2, 3) = -g * cg;
  jac(2, 4) = -(thrust - d) / (m * m);
  jac(2, 5) = -0.5 * air_density(s.altitude, env) * v * v * cfg.frontal_area / m;

  // gamma rate: -(g/v - v/r) * cos(gamma)
  jac(3, 1) = (2.0 * g / (v * r) - v / (r * r)) * cg;
  jac(3, 2) = (g / (v * v) + 1.0 / r) * cg;
  jac(3, 3) = (g / v - v / r) * sg;

  // mass, drag coefficient and clock drift rows are constant; the clock bias
  // rate is the clock drift state.
  jac(6, 7) = 1.0;

  return jac;
}

StateVector propagate(const StateVector& s, double dt, int substeps,
                      const VehicleConfig& cfg, const Environment& env,
                      double t0, const RateForcing* forcing) {
  return propagate_impl(s, dt, substeps, cfg, env, t0, -1, nullptr, forcing);
}

StateVector propagate_with_midpoint(const StateVector& s, double dt,
                                    int substeps, const VehicleConfig& cfg,
                                    const Environment& env, double t0,
                                    StateVector* midpoint) {
  if (substeps % 2 != 0) {
    throw std::invalid_argument(
        "propagate_with_midpoint: substeps must be even");
  }
  return propagate_impl(s, dt, substeps, cfg, env, t0, substeps / 2, midpoint,
                        nullptr);
}

Mat8 state_transition_matrix(const Mat8& jac, double dt) {
  if (!jac.allFinite() || !std::isfinite(dt)) {
    throw std::invalid_argument("state_transition_matrix: non-finite input");
  }
  Mat8 a = jac * dt;

  // Osborne balancing with power-of-two factors (exact in floating point).
  // Flight-phase Jacobians are badly scaled (entries spanning ~1e-8..1e3 across
  // the position/angle couplings), and equilibration cuts the squaring count
  // substantially.
  Vec8 scale = Vec8::Ones();
  for (int sweep = 0; sweep < 4; ++sweep) {
    bool changed = false;
    for (int i = 0; i < kStateDim; ++i) {
      double row = 0.0, col = 0.0;
      for (int j = 0; j < kStateDim; ++j) {
        if (j == i) continue;
        row += std::abs(a(i, j));
        col += std::abs(a(j, i));
      }
      if (row == 0.0 || col == 0.0) continue;
      const int shift =
          static_cast<int>(std::lround(0.5 * std::log2(col / row)));
      if (shift == 0) continue;
      const double f = std::ldexp(1.0, -shift);
      a.row(i) *= 1.0 / f;
      a.col(i) *= f;
      scale(i) *= f;
      changed = true;
    }
    if (!changed) break;
  }

  // Scale so the series converges fast, then square back.
  const double norm = a.cwiseAbs().rowwise().sum().maxCoeff();
  int squarings = 0;
  if (norm > 0.5) {
    squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
  }
  a *= std::ldexp(1.0, -squarings);

  Mat8 result = Mat8::Identity();
  Mat8 term = Mat8::Identity();
  for (int k = 1; k <= 30; ++k) {
    term = (term * a) / static_cast<double>(k);
    result += term;
    if (term.cwiseAbs().maxCoeff() < 1e-19) {
      break;
    }
  }
  for (int i = 0; i < squarings; ++i) {
    result = result * result;
  }
  // Undo the balancing similarity.
  for (int i = 0; i < kStateDim; ++i) {
    for (int j = 0; j < kStateDim; ++j) {
      result(i, j) *= scale(i) / scale(j);
    }
  }
  return result;
}

std::uint64_t propagation_count() { return g_propagation_count; }

void reset_propagation_count() { g_propagation_count = 0; }

std::uint64_t jacobian_count() { return g_jacobian_count; }

void reset_jacobian_count() { g_jacobian_count = 0; }

}  // namespace lvnav::dynamics
