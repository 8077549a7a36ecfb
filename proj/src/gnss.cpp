#include "lvnav/gnss.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace lvnav::gnss {

namespace {

constexpr double kElevationMaskFloor = 5.0 * std::numbers::pi / 180.0;
constexpr double kTropoCutoffAltitude = 86e3;  // m

}  // namespace

std::vector<GnssSatellite> constellation_at(double t,
                                            const ConstellationConfig& cfg) {
  if (t < 0.0) {
    throw std::invalid_argument("constellation_at: t must be >= 0");
  }
  const double a = cfg.semi_major_axis;
  const double n = std::sqrt(kEarthMu / (a * a * a));  // mean motion
  const double vorb = n * a;
  const double ci = std::cos(cfg.inclination);
  const double si = std::sin(cfg.inclination);
  const double two_pi = 2.0 * std::numbers::pi;

  std::vector<GnssSatellite> sats;
  sats.reserve(static_cast<std::size_t>(cfg.count()));
  int index = 0;
  for (int p = 0; p < cfg.planes; ++p) {
    const double raan = cfg.raan_offset + two_pi * p / cfg.planes;
    const double cr = std::cos(raan);
    const double sr = std::sin(raan);
    for (int s = 0; s < cfg.slots_per_plane; ++s) {
      const double anomaly = two_pi * s / cfg.slots_per_plane +
                             cfg.phase_step_per_plane * p + n * t;
      const double cu = std::cos(anomaly);
      const double su = std::sin(anomaly);
      // In-plane unit vectors rotated by inclination then RAAN.
      const Vec3 pos(a * (cr * cu - sr * su * ci),
                     a * (sr * cu + cr * su * ci), a * (su * si));
      const Vec3 vel(vorb * (-cr * su - sr * cu * ci),
                     vorb * (-sr * su + cr * cu * ci), vorb * (cu * si));
      sats.push_back(GnssSatellite{index++, pos, vel, 0.0});
    }
  }
  return sats;
}

LaunchSiteFrame::LaunchSiteFrame(double latitude, double longitude,
                                 double azimuth, double earth_radius)
    : earth_radius_(earth_radius) {
  const double cl = std::cos(latitude);
  const double sl = std::sin(latitude);
  const double co = std::cos(longitude);
  const double so = std::sin(longitude);
  up_ = Vec3(cl * co, cl * so, sl);
  const Vec3 east(-so, co, 0.0);
  const Vec3 north(-sl * co, -sl * so, cl);
  track_ = std::sin(azimuth) * east + std::cos(azimuth) * north;
}

Vec3 LaunchSiteFrame::radial_dir(double x) const {
  const double xi = x / earth_radius_;
  return std::cos(xi) * up_ + std::sin(xi) * track_;
}

Vec3 LaunchSiteFrame::along_dir(double x) const {
  const double xi = x / earth_radius_;
  return -std::sin(xi) * up_ + std::cos(xi) * track_;
}

Vec3 LaunchSiteFrame::position(double x, double h) const {
  return (earth_radius_ + h) * radial_dir(x);
}

Vec3 LaunchSiteFrame::velocity(double x, double v, double fpa) const {
  return v * std::sin(fpa) * radial_dir(x) + v * std::cos(fpa) * along_dir(x);
}

void LaunchSiteFrame::user_ecef(const dynamics::StateVector& s, Vec3* pos,
                                Vec3* vel) const {
  if (pos != nullptr) {
    *pos = position(s.downrange, s.altitude);
  }
  if (vel != nullptr) {
    *vel = velocity(s.downrange, s.speed, s.fpa);
  }
}

double elevation_angle(const Vec3& user, const Vec3& sat_position) {
  const Vec3 up = user.normalized();
  const Vec3 los = (sat_position - user).normalized();
  return std::asin(std::clamp(up.dot(los), -1.0, 1.0));
}

double true_range(const Vec3& user, const GnssSatellite& sat) {
  if (!user.allFinite() || !sat.position.allFinite()) {
    throw std::invalid_argument("true_range: non-finite input");
  }
  return (sat.position - user).norm();
}

double saastamoinen_tropo(double elevation, double h) {
  if (elevation <= kElevationMaskFloor ||
      elevation > std::numbers::pi / 2 + 1e-12) {
    throw std::invalid_argument(
        "saastamoinen_tropo: elevation outside (5 deg, 90 deg]");
  }
  if (h < 0.0) {
    throw std::invalid_argument("saastamoinen_tropo: negative altitude");
  }
  if (h > kTropoCutoffAltitude) {
    return 0.0;
  }
  // Zenith delay from default surface meteorology (P hPa, T K, e hPa),
  // attenuated with altitude on the density scale height.
  constexpr double pressure = 1013.25;
  constexpr double temperature = 291.15;
  constexpr double vapor = 11.75;
  const double zenith =
      0.002277 * (pressure + (1255.0 / temperature + 0.05) * vapor);
  const double attenuated = zenith * std::exp(-h / 7500.0);
  return attenuated / std::sin(elevation);
}

double iono_obliquity(double elevation, double earth_radius,
                      double shell_height) {
  const double s = earth_radius * std::cos(elevation) /
                   (earth_radius + shell_height);
  return 1.0 / std::sqrt(1.0 - s * s);
}

GnssObservation synthesize_observation(const dynamics::StateVector& truth,
                                       double t,
                                       const std::vector<GnssSatellite>& sats,
                                       const ErrorBudget& budget,
                                       const LaunchSiteFrame& frame,
                                       std::mt19937_64& rng,
                                       AmbiguityBook& ambiguities) {
  Vec3 user_pos, user_vel;
  frame.user_ecef(truth, &user_pos, &user_vel);

  GnssObservation obs;
  obs.epoch = t;
  obs.degraded = sats.size() < 4;
  obs.channels.reserve(sats.size());

  std::normal_distribution<double> unit_normal(0.0, 1.0);
  for (const auto& sat : sats) {
    ChannelObservation ch;
    ch.sat_index = sat.index;
    ch.sat_position = sat.position;
    ch.sat_velocity = sat.velocity;
    ch.sat_clock_bias_s = sat.clock_bias_s;
    ch.elevation = elevation_angle(user_pos, sat.position);

    const double range = true_range(user_pos, sat);
    const double clock_terms = truth.clock_bias - kSpeedOfLight * sat.clock_bias_s;

    double iono = 0.0;
    if (budget.use_iono) {
      iono = budget.iono_zenith_delay * iono_obliquity(ch.elevation);
    }
    double tropo = 0.0;
    if (budget.use_tropo && truth.altitude <= kTropoCutoffAltitude &&
        ch.elevation > kElevationMaskFloor) {
      tropo = saastamoinen_tropo(ch.elevation, std::max(truth.altitude, 0.0));
    }
    ch.iono_delay = iono;
    ch.tropo_delay = tropo;

    auto it = ambiguities.find(sat.index);
    if (it == ambiguities.end()) {
      // Fix the ambiguity near the true cycle count on first acquisition.
      const long long n0 = static_cast<long long>(std::llround(range / kL1Wavelength));
      const long long jitter = static_cast<long long>(
          std::uniform_int_distribution<int>(-100, 100)(rng));
      it = ambiguities.emplace(sat.index, n0 + jitter).first;
    }
    ch.ambiguity = it->second;

    const double noise_rho = budget.sigma_pseudorange * unit_normal(rng);
    const double noise_phi = budget.sigma_carrier * unit_normal(rng);
    const double noise_rate = budget.sigma_range_rate * unit_normal(rng);

    ch.pseudorange = range + clock_terms + iono + tropo + noise_rho;
    ch.carrier_range = range + clock_terms - iono + tropo +
                       kL1Wavelength * static_cast<double>(ch.ambiguity) +
                       noise_phi;

    const Vec3 los = (sat.position - user_pos).normalized();
    ch.range_rate =
        los.dot(sat.velocity - user_vel) + truth.clock_drift + noise_rate;

    obs.channels.push_back(ch);
  }
  return obs;
}

double graphic_combine(double rho, double phi, long long ambiguity) {
  return 0.5 * (rho + (phi - kL1Wavelength * static_cast<double>(ambiguity)));
}

std::vector<GnssSatellite> visible_satellites(
    const std::vector<GnssSatellite>& sats, const Vec3& user,
    double elevation_mask) {
  std::vector<GnssSatellite> out;
  for (const auto& sat : sats) {
    if (elevation_angle(user, sat.position) > elevation_mask) {
      out.push_back(sat);
    }
  }
  return out;
}

std::vector<GnssSatellite> select_channels(
    const std::vector<GnssSatellite>& visible, int k, const Vec3& user) {
  if (k > static_cast<int>(visible.size())) {
    throw std::invalid_argument(
        "select_channels: requested " + std::to_string(k) +
        " channels but only " + std::to_string(visible.size()) + " visible");
  }
  std::vector<std::pair<double, const GnssSatellite*>> ranked;
  ranked.reserve(visible.size());
  for (const auto& sat : visible) {
    ranked.emplace_back(elevation_angle(user, sat.position), &sat);
  }
  std::sort(ranked.begin(), ranked.end(),
            [](const auto& a, const auto& b) {
              if (a.first != b.first) return a.first > b.first;
              return a.second->index < b.second->index;
            });
  std::vector<GnssSatellite> out;
  out.reserve(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    out.push_back(*ranked[static_cast<std::size_t>(i)].second);
  }
  return out;
}

double pdop(const std::vector<Vec3>& sat_positions, const Vec3& user) {
  if (sat_positions.size() < 4) {
    throw std::invalid_argument("pdop: at least 4 satellites required");
  }
  MatrixXd geometry(static_cast<Eigen::Index>(sat_positions.size()), 4);
  for (Eigen::Index i = 0; i < geometry.rows(); ++i) {
    const Vec3 los =
        (sat_positions[static_cast<std::size_t>(i)] - user).normalized();
    geometry(i, 0) = -los.x();
    geometry(i, 1) = -los.y();
    geometry(i, 2) = -los.z();
    geometry(i, 3) = 1.0;
  }
  const Eigen::Matrix4d info = geometry.transpose() * geometry;
  Eigen::FullPivLU<Eigen::Matrix4d> lu(info);
  if (!lu.isInvertible()) {
    throw std::runtime_error("pdop: singular satellite geometry");
  }
  const Eigen::Matrix4d cov = lu.inverse();
  return std::sqrt(cov(0, 0) + cov(1, 1) + cov(2, 2));
}

}  // namespace lvnav::gnss
