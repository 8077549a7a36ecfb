// Python bindings for the core simulation and estimation operations.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "lvnav/dynamics.hpp"
#include "lvnav/estimators.hpp"
#include "lvnav/gnss.hpp"
#include "lvnav/harness.hpp"
#include "lvnav/scenario.hpp"

namespace py = pybind11;
using namespace lvnav;

PYBIND11_MODULE(_core, m) {
  m.doc() = "Launch-ascent GNSS navigation simulator and Kalman filter "
            "benchmark";

  // ---- dynamics ----
  py::class_<dynamics::StateVector>(m, "StateVector")
      .def(py::init<>())
      .def_readwrite("downrange", &dynamics::StateVector::downrange)
      .def_readwrite("altitude", &dynamics::StateVector::altitude)
      .def_readwrite("speed", &dynamics::StateVector::speed)
      .def_readwrite("fpa", &dynamics::StateVector::fpa)
      .def_readwrite("mass", &dynamics::StateVector::mass)
      .def_readwrite("drag_coeff", &dynamics::StateVector::drag_coeff)
      .def_readwrite("clock_bias", &dynamics::StateVector::clock_bias)
      .def_readwrite("clock_drift", &dynamics::StateVector::clock_drift)
      .def("to_array", &dynamics::StateVector::to_vector)
      .def_static("from_array", &dynamics::StateVector::from_vector)
      .def("__repr__", [](const dynamics::StateVector& s) {
        return "StateVector(x=" + std::to_string(s.downrange) +
               ", h=" + std::to_string(s.altitude) +
               ", v=" + std::to_string(s.speed) + ")";
      });

  py::class_<dynamics::StageParams>(m, "StageParams")
      .def(py::init<>())
      .def_readwrite("inert_mass", &dynamics::StageParams::inert_mass)
      .def_readwrite("propellant_mass", &dynamics::StageParams::propellant_mass)
      .def_readwrite("thrust", &dynamics::StageParams::thrust)
      .def_readwrite("isp", &dynamics::StageParams::isp)
      .def_readwrite("burn_duration", &dynamics::StageParams::burn_duration);

  py::class_<dynamics::Environment>(m, "Environment")
      .def(py::init<>())
      .def_readwrite("earth_radius", &dynamics::Environment::earth_radius)
      .def_readwrite("g0", &dynamics::Environment::g0)
      .def_readwrite("rho0", &dynamics::Environment::rho0)
      .def_readwrite("scale_height", &dynamics::Environment::scale_height);

  py::class_<dynamics::VehicleConfig>(m, "VehicleConfig")
      .def(py::init<>())
      .def_readwrite("stages", &dynamics::VehicleConfig::stages)
      .def_readwrite("payload_mass", &dynamics::VehicleConfig::payload_mass)
      .def_readwrite("spacecraft_mass", &dynamics::VehicleConfig::spacecraft_mass)
      .def_readwrite("frontal_area", &dynamics::VehicleConfig::frontal_area)
      .def_readwrite("pitch_kick_time", &dynamics::VehicleConfig::pitch_kick_time)
      .def_readwrite("pitch_kick_angle", &dynamics::VehicleConfig::pitch_kick_angle)
      .def("total_mass", &dynamics::VehicleConfig::total_mass)
      .def("final_burnout_time", &dynamics::VehicleConfig::final_burnout_time);

  m.def("gravity", &dynamics::gravity, py::arg("altitude"), py::arg("env"));
  m.def("air_density", &dynamics::air_density, py::arg("altitude"), py::arg("env"));
  m.def("mass_flow_rate", &dynamics::mass_flow_rate);
  m.def("drag", &dynamics::drag);
  m.def("derivative", &dynamics::derivative, py::arg("state"), py::arg("vehicle"),
        py::arg("env"), py::arg("t"));
  m.def("jacobian", &dynamics::jacobian);
  m.def(
      "propagate",
      [](const dynamics::StateVector& s, double dt, int substeps,
         const dynamics::VehicleConfig& cfg, const dynamics::Environment& env,
         double t0) { return dynamics::propagate(s, dt, substeps, cfg, env, t0); },
      py::arg("state"), py::arg("dt"), py::arg("substeps"), py::arg("vehicle"),
      py::arg("env"), py::arg("t0"));
  m.def("state_transition_matrix", &dynamics::state_transition_matrix);

  // ---- gnss ----
  py::class_<gnss::GnssSatellite>(m, "GnssSatellite")
      .def(py::init<>())
      .def_readwrite("index", &gnss::GnssSatellite::index)
      .def_readwrite("position", &gnss::GnssSatellite::position)
      .def_readwrite("velocity", &gnss::GnssSatellite::velocity)
      .def_readwrite("clock_bias_s", &gnss::GnssSatellite::clock_bias_s);

  py::class_<gnss::ConstellationConfig>(m, "ConstellationConfig")
      .def(py::init<>())
      .def_readwrite("semi_major_axis", &gnss::ConstellationConfig::semi_major_axis)
      .def_readwrite("inclination", &gnss::ConstellationConfig::inclination)
      .def_readwrite("planes", &gnss::ConstellationConfig::planes)
      .def_readwrite("slots_per_plane", &gnss::ConstellationConfig::slots_per_plane)
      .def("count", &gnss::ConstellationConfig::count);

  m.def("constellation_at", &gnss::constellation_at);
  m.def("saastamoinen_tropo", &gnss::saastamoinen_tropo, py::arg("elevation"),
        py::arg("altitude"));
  m.def("graphic_combine", &gnss::graphic_combine, py::arg("pseudorange"),
        py::arg("carrier_range"), py::arg("ambiguity"));
  m.def("pdop", &gnss::pdop, py::arg("sat_positions"), py::arg("user"));
  m.def("elevation_angle", &gnss::elevation_angle);

  // ---- estimators ----
  py::enum_<estimators::FilterKind>(m, "FilterKind")
      .value("EKF", estimators::FilterKind::Ekf)
      .value("UKF", estimators::FilterKind::Ukf)
      .value("SPUKF", estimators::FilterKind::Spukf)
      .value("ESPUKF", estimators::FilterKind::Espukf);

  py::class_<estimators::FilterStepRecord>(m, "FilterStepRecord")
      .def_readonly("epoch", &estimators::FilterStepRecord::epoch)
      .def_readonly("estimate", &estimators::FilterStepRecord::estimate)
      .def_readonly("cov_trace", &estimators::FilterStepRecord::cov_trace)
      .def_readonly("err_downrange", &estimators::FilterStepRecord::err_downrange)
      .def_readonly("err_altitude", &estimators::FilterStepRecord::err_altitude)
      .def_readonly("err_speed", &estimators::FilterStepRecord::err_speed)
      .def_readonly("err_fpa", &estimators::FilterStepRecord::err_fpa)
      .def_readonly("predict_seconds", &estimators::FilterStepRecord::predict_seconds)
      .def_readonly("update_seconds", &estimators::FilterStepRecord::update_seconds)
      .def_readonly("diverged", &estimators::FilterStepRecord::diverged);

  py::class_<estimators::FilterRun>(m, "FilterRun")
      .def_readonly("steps", &estimators::FilterRun::steps)
      .def_readonly("diverged", &estimators::FilterRun::diverged)
      .def_property_readonly("kind", [](const estimators::FilterRun& r) {
        return estimators::to_string(r.kind);
      });

  // ---- scenario ----
  py::class_<scenario::ScenarioConfig>(m, "ScenarioConfig")
      .def(py::init<>())
      .def_readwrite("vehicle", &scenario::ScenarioConfig::vehicle)
      .def_readwrite("environment", &scenario::ScenarioConfig::environment)
      .def_readwrite("channels", &scenario::ScenarioConfig::channels)
      .def_readwrite("duration", &scenario::ScenarioConfig::duration)
      .def_readwrite("epoch_rate_hz", &scenario::ScenarioConfig::epoch_rate_hz)
      .def_readwrite("seed", &scenario::ScenarioConfig::seed)
      .def_readwrite("init_mean", &scenario::ScenarioConfig::init_mean)
      .def_readwrite("init_cov_diag", &scenario::ScenarioConfig::init_cov_diag)
      .def("validate", &scenario::ScenarioConfig::validate);

  py::class_<scenario::TruthSample>(m, "TruthSample")
      .def_readonly("t", &scenario::TruthSample::t)
      .def_readonly("state", &scenario::TruthSample::state)
      .def_readonly("ecef_pos", &scenario::TruthSample::ecef_pos)
      .def_readonly("ecef_vel", &scenario::TruthSample::ecef_vel);

  m.def("build_crs5", &scenario::build_crs5);
  m.def("generate_truth", &scenario::generate_truth);
  m.def("load_config", &scenario::load_config);
  m.def("save_config", &scenario::save_config);
  m.def(
      "run_filter",
      [](const std::string& kind, const scenario::ScenarioConfig& cfg,
         std::uint64_t run_seed) {
        const auto truth = scenario::generate_truth(cfg);
        const auto stream = scenario::generate_observations(truth, cfg, run_seed);
        return estimators::run_filter(
            estimators::filter_kind_from_string(kind), cfg.initial_belief(),
            stream.epochs, stream.truth_states, cfg.filter_models());
      },
      py::arg("kind"), py::arg("config"), py::arg("run_seed") = 1,
      "Run one filter over one synthesized noise realization.");

  // ---- harness ----
  py::class_<harness::CellStats>(m, "CellStats")
      .def_property_readonly("filter", [](const harness::CellStats& c) {
        return estimators::to_string(c.kind);
      })
      .def_readonly("channels", &harness::CellStats::channels)
      .def_readonly("median_pos_err", &harness::CellStats::median_pos_err)
      .def_readonly("mean_pos_err", &harness::CellStats::mean_pos_err)
      .def_readonly("p95_pos_err", &harness::CellStats::p95_pos_err)
      .def_readonly("median_vel_err", &harness::CellStats::median_vel_err)
      .def_readonly("mean_step_ms", &harness::CellStats::mean_step_ms)
      .def_readonly("reduction_vs_ukf_pct", &harness::CellStats::reduction_vs_ukf_pct)
      .def_readonly("pos_err_ratio", &harness::CellStats::pos_err_ratio)
      .def_readonly("diverged_runs", &harness::CellStats::diverged_runs);

  py::class_<harness::MonteCarloReport>(m, "MonteCarloReport")
      .def_readonly("cells", &harness::MonteCarloReport::cells)
      .def_readonly("runs", &harness::MonteCarloReport::runs)
      .def_readonly("sigma_pseudorange", &harness::MonteCarloReport::sigma_pseudorange);

  py::class_<harness::TimingRow>(m, "TimingRow")
      .def_property_readonly("filter", [](const harness::TimingRow& r) {
        return estimators::to_string(r.kind);
      })
      .def_readonly("mean_step_ms", &harness::TimingRow::mean_step_ms)
      .def_readonly("reduction_vs_ukf_pct", &harness::TimingRow::reduction_vs_ukf_pct);

  py::class_<harness::TimingReport>(m, "TimingReport")
      .def_readonly("rows", &harness::TimingReport::rows)
      .def_readonly("steps", &harness::TimingReport::steps);

  m.def(
      "run_campaign",
      [](const scenario::ScenarioConfig& cfg, int runs,
         const std::vector<std::string>& filters,
         const std::vector<int>& channel_counts) {
        std::vector<estimators::FilterKind> kinds;
        for (const auto& f : filters) {
          kinds.push_back(estimators::filter_kind_from_string(f));
        }
        return harness::run_campaign(cfg, runs, kinds, channel_counts);
      },
      py::arg("config"), py::arg("runs"),
      py::arg("filters") = std::vector<std::string>{"ekf", "spukf", "espukf", "ukf"},
      py::arg("channel_counts") = std::vector<int>{6});
  m.def(
      "benchmark_timing",
      [](const scenario::ScenarioConfig& cfg, int steps,
         const std::vector<std::string>& filters) {
        std::vector<estimators::FilterKind> kinds;
        for (const auto& f : filters) {
          kinds.push_back(estimators::filter_kind_from_string(f));
        }
        return harness::benchmark_timing(cfg, kinds, steps);
      },
      py::arg("config"), py::arg("steps") = 1000,
      py::arg("filters") = std::vector<std::string>{"ekf", "spukf", "espukf", "ukf"});
  m.def("position_error_ratio", &harness::position_error_ratio,
        py::arg("pdop"), py::arg("sigma_range"), py::arg("median_err"));
}
