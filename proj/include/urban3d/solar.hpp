#pragma once

#include <chrono>
#include <optional>
#include <span>
#include <vector>

#include "urban3d/bvh.hpp"
#include "urban3d/geometry.hpp"
#include "urban3d/timeutil.hpp"

namespace urban3d::solar {

/// Elevation above the horizon and compass azimuth (0 = north, clockwise).
struct SunPosition {
  double elevation_deg = 0.0;
  double azimuth_deg = 0.0;
};

/// Low-order Fourier-series solar geometry (declination and equation of time
/// from the day angle), no refraction. Accurate to a few tenths of a degree.
SunPosition sun_position(double lat_deg, double lon_deg, Timestamp t);

double declination_deg(Timestamp t);
/// Equation of time in minutes.
double equation_of_time_min(Timestamp t);

/// Instant of local solar noon (UTC) on the given civil date.
Timestamp solar_noon_utc(int year, unsigned month, unsigned day, double lon_deg);

/// Unit vector from the ground towards the sun in the ENU frame.
geo::Vec3 sun_direction(const SunPosition& sun);

struct WeatherRecord {
  Timestamp time;
  double ghi = 0.0;  // W/m^2
  double dhi = 0.0;  // W/m^2
  double temp_c = 0.0;
};

/// Fixed-step series covering exactly one calendar year (UTC).
class WeatherSeries {
 public:
  /// Throws InputError on non-increasing or irregular timestamps, gaps,
  /// incomplete year coverage, or records violating 0 <= dhi <= ghi.
  explicit WeatherSeries(std::vector<WeatherRecord> records,
                         std::chrono::seconds step = std::chrono::hours{1});

  const std::vector<WeatherRecord>& records() const { return records_; }
  std::chrono::seconds step() const { return step_; }
  double step_hours() const { return static_cast<double>(step_.count()) / 3600.0; }
  int year() const { return year_of(records_.front().time); }
  std::size_t size() const { return records_.size(); }

  /// Instant at which irradiance of record i is evaluated (interval midpoint).
  Timestamp sample_instant(std::size_t i) const { return records_[i].time + step_ / 2; }

 private:
  std::vector<WeatherRecord> records_;
  std::chrono::seconds step_;
};

/// Night records must carry no irradiance beyond 5 W/m^2 twilight slack.
void validate_against_sun(const WeatherSeries& series, double lat_deg, double lon_deg);

struct IrradianceConfig {
  double albedo = 0.2;
  int samples_per_surface = 4;
  double temp_coeff_gamma = -0.004;  // 1/K
  double noct_c = 45.0;
  double system_losses = 0.14;  // wiring, inverter, soiling; fraction of DC output
};

void validate_config(const IrradianceConfig& cfg);

struct SurfaceIrradiance {
  geo::SurfaceId surface_id{0};
  double poa_annual_kwh_m2 = 0.0;
  double pv_potential_h = 0.0;  // full-load hours per kW peak
  double shaded_fraction = 0.0;
};

/// Cosine of the angle between the sun vector and the surface normal.
double incidence_cos(const SunPosition& sun, double tilt_deg, double azimuth_deg);

/// Plane-of-array irradiance with an isotropic sky, W/m^2.
double transpose_poa(const WeatherRecord& record, const SunPosition& sun, double tilt_deg,
                     double azimuth_deg, double albedo, bool beam_shaded);

/// AC output per kW peak (kW/kWp): linear cell-temperature correction, then
/// a flat system-loss factor.
double pv_output_per_kwp(double poa_wm2, double temp_c, const IrradianceConfig& cfg);

enum class ShadingBackend { Bvh, BruteForce };

/// Ray-offset along the surface normal that prevents self-intersection.
inline constexpr double kRayOffset = 1e-3;

/// Occluder geometry with both the accelerated and the exhaustive query path.
class ShadingScene {
 public:
  explicit ShadingScene(geo::TriangleMesh mesh);

  const geo::TriangleMesh& mesh() const { return mesh_; }
  bool empty() const { return mesh_.empty(); }
  const geo::Bvh& bvh() const { return *bvh_; }
  /// Diagonal of the scene bounding box; shadow rays stop there.
  double diameter() const { return diameter_; }
  const geo::Aabb& bounds() const { return bounds_; }

  bool occluded(const geo::Ray& ray, geo::SurfaceId ignore,
                ShadingBackend backend = ShadingBackend::Bvh) const;

 private:
  geo::TriangleMesh mesh_;
  std::optional<geo::Bvh> bvh_;
  geo::Aabb bounds_;
  double diameter_ = 0.0;
};

/// Casts a ray from `point` (offset along `normal`) toward the sun.
bool is_beam_shaded(const ShadingScene& scene, geo::Point3 point, geo::Vec3 normal,
                    const SunPosition& sun, geo::SurfaceId own_surface,
                    ShadingBackend backend = ShadingBackend::Bvh);

/// Stratified sample points: the centroid for one sample, otherwise points
/// halfway between the centroid and the vertices (the quadrant centres of a
/// rectangle for four samples), continuing at quarter and three-quarter
/// radii when more samples than vertices are requested.
std::vector<geo::Point3> surface_sample_points(const geo::Polygon3& surface, int count);

/// Sun positions at each record's sample instant.
std::vector<SunPosition> sun_table(const WeatherSeries& weather, double lat_deg, double lon_deg);

SurfaceIrradiance annual_surface_irradiance(const geo::Polygon3& surface, const ShadingScene& scene,
                                            const WeatherSeries& weather, double lat_deg,
                                            double lon_deg, const IrradianceConfig& cfg,
                                            ShadingBackend backend = ShadingBackend::Bvh);

SurfaceIrradiance annual_surface_irradiance(const geo::Polygon3& surface, const ShadingScene& scene,
                                            const WeatherSeries& weather,
                                            std::span<const SunPosition> suns,
                                            const IrradianceConfig& cfg,
                                            ShadingBackend backend = ShadingBackend::Bvh);

/// All surfaces, partitioned over `threads` workers; results are independent
/// of the worker count.
std::vector<SurfaceIrradiance> annual_irradiance(std::span<const geo::Polygon3> surfaces,
                                                 const ShadingScene& scene,
                                                 const WeatherSeries& weather, double lat_deg,
                                                 double lon_deg, const IrradianceConfig& cfg,
                                                 unsigned threads = 1,
                                                 ShadingBackend backend = ShadingBackend::Bvh);

}  // namespace urban3d::solar
