#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <vector>

#include "lvnav/dynamics.hpp"
#include "lvnav/linalg.hpp"

namespace lvnav::gnss {

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s
inline constexpr double kL1Wavelength = 0.1903;       // m
inline constexpr double kEarthMu = 3.986004418e14;    // m^3/s^2

struct GnssSatellite {
  int index = 0;
  Vec3 position = Vec3::Zero();  ///< ECEF, m
  Vec3 velocity = Vec3::Zero();  ///< ECEF, m/s
  double clock_bias_s = 0.0;     ///< satellite clock bias, s
};

/// Circular-orbit shell in evenly spaced planes; stands in for a broadcast
/// almanac.
struct ConstellationConfig {
  double semi_major_axis = 26560e3;  ///< m
  double inclination = 0.959931;     ///< rad (55 deg)
  int planes = 6;
  int slots_per_plane = 4;
  double raan_offset = 0.0;          ///< rad, plane 0 ascending node
  double phase_step_per_plane = 0.2617993877991494;  ///< rad (15 deg stagger)

  int count() const { return planes * slots_per_plane; }
};

/// Satellite states at mission time t. Deterministic in (t, config).
std::vector<GnssSatellite> constellation_at(double t,
                                            const ConstellationConfig& cfg);

/// Embeds the planar trajectory into ECEF: down-range distance follows the
/// great circle leaving the launch site along the launch azimuth, altitude is
/// measured along the local radial.
class LaunchSiteFrame {
 public:
  LaunchSiteFrame() : LaunchSiteFrame(0.0, 0.0, 0.0, 6378137.0) {}
  LaunchSiteFrame(double latitude, double longitude, double azimuth,
                  double earth_radius);

  /// Radial (up) direction at down-range distance x.
  Vec3 radial_dir(double x) const;
  /// Along-track direction at down-range distance x.
  Vec3 along_dir(double x) const;

  Vec3 position(double x, double h) const;
  Vec3 velocity(double x, double v, double fpa) const;
  void user_ecef(const dynamics::StateVector& s, Vec3* pos, Vec3* vel) const;

  double earth_radius() const { return earth_radius_; }

 private:
  double earth_radius_;
  Vec3 up_;     // site radial
  Vec3 track_;  // site tangent along the launch azimuth
};

/// Elevation of a satellite above the local (spherical) horizon, rad.
double elevation_angle(const Vec3& user, const Vec3& sat_position);

/// Euclidean distance between user antenna and satellite.
double true_range(const Vec3& user, const GnssSatellite& sat);

/// Saastamoinen zenith delay with default surface meteorology, mapped by
/// 1/sin(elevation). Decays with receiver altitude and is zero above 86 km.
/// Rejects elevations at or below the 5 degree mask.
double saastamoinen_tropo(double elevation, double h);

/// Thin-shell ionosphere obliquity factor for a given elevation.
double iono_obliquity(double elevation, double earth_radius = 6378137.0,
                      double shell_height = 350e3);

struct ErrorBudget {
  double sigma_pseudorange = 5.0;   ///< m
  double sigma_carrier = 0.05;      ///< m
  double sigma_range_rate = 0.2;    ///< m/s
  double iono_zenith_delay = 5.0;   ///< m
  bool use_iono = true;
  bool use_tropo = true;
};

struct ChannelObservation {
  int sat_index = 0;
  double pseudorange = 0.0;    ///< m
  double carrier_range = 0.0;  ///< m
  double range_rate = 0.0;     ///< m/s
  long long ambiguity = 0;     ///< cycles, truth-side
  double elevation = 0.0;      ///< rad, truth-side
  double iono_delay = 0.0;     ///< m, truth-side slant value
  double tropo_delay = 0.0;    ///< m, truth-side slant value
  double sat_clock_bias_s = 0.0;  ///< broadcast value, known to the receiver
  Vec3 sat_position = Vec3::Zero();
  Vec3 sat_velocity = Vec3::Zero();
};

struct GnssObservation {
  double epoch = 0.0;
  std::vector<ChannelObservation> channels;
  double pdop = 0.0;
  bool degraded = false;  ///< fewer than 4 satellites above the mask
};

/// Integer ambiguities held fixed per satellite for the life of one
/// noise realization.
using AmbiguityBook = std::map<int, long long>;

/// Synthesizes one epoch of observables for the given (already selected)
/// satellites. Noise is drawn from `rng` in channel order; pass the same
/// seeded engine to reproduce a stream bit-for-bit.
GnssObservation synthesize_observation(const dynamics::StateVector& truth,
                                       double t,
                                       const std::vector<GnssSatellite>& sats,
                                       const ErrorBudget& budget,
                                       const LaunchSiteFrame& frame,
                                       std::mt19937_64& rng,
                                       AmbiguityBook& ambiguities);

/// GRAPHIC combination (rho + (phi - lambda*N)) / 2; cancels the first-order
/// ionosphere and halves the pseudo-range noise.
double graphic_combine(double rho, double phi, long long ambiguity);

/// Satellites above the elevation mask as seen from `user`.
std::vector<GnssSatellite> visible_satellites(
    const std::vector<GnssSatellite>& sats, const Vec3& user,
    double elevation_mask);

/// The k highest-elevation satellites; ties broken by ascending index.
std::vector<GnssSatellite> select_channels(
    const std::vector<GnssSatellite>& visible, int k, const Vec3& user);

/// Position dilution of precision from unit line-of-sight geometry.
double pdop(const std::vector<Vec3>& sat_positions, const Vec3& user);

}  // namespace lvnav::gnss
