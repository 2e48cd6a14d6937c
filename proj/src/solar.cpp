#include "urban3d/solar.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "urban3d/error.hpp"
#include "urban3d/parallel.hpp"

namespace urban3d::solar {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kDeg = kPi / 180.0;
constexpr double kSolarConstant = 1367.0;  // W/m^2, caps recovered DNI
constexpr double kMinSinElevation = 0.01;

// Fractional-year day angle (radians).
double day_angle(Timestamp t) {
  const double days_in_year = is_leap_year(year_of(t)) ? 366.0 : 365.0;
  return 2.0 * kPi / days_in_year * (day_of_year(t) - 1 + (utc_hours(t) - 12.0) / 24.0);
}

double declination_rad(double g) {
  return 0.006918 - 0.399912 * std::cos(g) + 0.070257 * std::sin(g) - 0.006758 * std::cos(2 * g) +
         0.000907 * std::sin(2 * g) - 0.002697 * std::cos(3 * g) + 0.00148 * std::sin(3 * g);
}

double eot_minutes(double g) {
  return 229.18 * (0.000075 + 0.001868 * std::cos(g) - 0.032077 * std::sin(g) -
                   0.014615 * std::cos(2 * g) - 0.040849 * std::sin(2 * g));
}

}  // namespace

double declination_deg(Timestamp t) { return declination_rad(day_angle(t)) / kDeg; }

double equation_of_time_min(Timestamp t) { return eot_minutes(day_angle(t)); }

SunPosition sun_position(double lat_deg, double lon_deg, Timestamp t) {
  const double g = day_angle(t);
  const double decl = declination_rad(g);
  const double true_solar_min = utc_hours(t) * 60.0 + eot_minutes(g) + 4.0 * lon_deg;
  const double hour_angle = (true_solar_min / 4.0 - 180.0) * kDeg;
  const double lat = lat_deg * kDeg;

  const double sin_elev =
      std::sin(lat) * std::sin(decl) + std::cos(lat) * std::cos(decl) * std::cos(hour_angle);
  SunPosition sun;
  sun.elevation_deg = std::asin(std::clamp(sin_elev, -1.0, 1.0)) / kDeg;
  // Azimuth measured from north, clockwise.
  double az = std::atan2(std::sin(hour_angle),
                         std::cos(hour_angle) * std::sin(lat) - std::tan(decl) * std::cos(lat)) /
                  kDeg +
              180.0;
  az = std::fmod(az, 360.0);
  if (az < 0.0) az += 360.0;
  sun.azimuth_deg = az;
  return sun;
}

Timestamp solar_noon_utc(int year, unsigned month, unsigned day, double lon_deg) {
  Timestamp t = make_utc(year, month, day, 12);
  for (int iter = 0; iter < 3; ++iter) {
    const double minutes = 720.0 - 4.0 * lon_deg - equation_of_time_min(t);
    t = make_utc(year, month, day) + std::chrono::seconds{std::lround(minutes * 60.0)};
  }
  return t;
}

geo::Vec3 sun_direction(const SunPosition& sun) {
  const double e = sun.elevation_deg * kDeg;
  const double a = sun.azimuth_deg * kDeg;
  return {std::cos(e) * std::sin(a), std::cos(e) * std::cos(a), std::sin(e)};
}

WeatherSeries::WeatherSeries(std::vector<WeatherRecord> records, std::chrono::seconds step)
    : records_(std::move(records)), step_(step) {
  if (step_.count() <= 0) throw InputError("weather: step must be positive");
  if (records_.empty()) throw InputError("weather: empty series");
  const int year = year_of(records_.front().time);
  const Timestamp start = make_utc(year, 1, 1);
  const Timestamp end = make_utc(year + 1, 1, 1);
  if (records_.front().time != start) {
    throw InputError("weather: series must start at " + format_rfc3339(start) + ", found " +
                     format_rfc3339(records_.front().time));
  }
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const auto& r = records_[i];
    const std::string where = "weather record " + std::to_string(i) + " (" + format_rfc3339(r.time) + ")";
    if (i > 0) {
      const auto delta = r.time - records_[i - 1].time;
      if (delta <= std::chrono::seconds{0}) throw InputError(where + ": timestamps not increasing");
      if (delta != step_) throw InputError(where + ": gap or irregular step");
    }
    if (!std::isfinite(r.ghi) || !std::isfinite(r.dhi) || !std::isfinite(r.temp_c)) {
      throw InputError(where + ": non-finite value");
    }
    if (r.dhi < 0.0 || r.dhi > r.ghi) throw InputError(where + ": requires 0 <= dhi <= ghi");
  }
  if (records_.back().time + step_ != end) {
    throw InputError("weather: series does not cover the full year " + std::to_string(year));
  }
}

void validate_against_sun(const WeatherSeries& series, double lat_deg, double lon_deg) {
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto sun = sun_position(lat_deg, lon_deg, series.sample_instant(i));
    if (sun.elevation_deg <= 0.0 && series.records()[i].ghi > 5.0) {
      throw InputError("weather record " + std::to_string(i) + " (" +
                       format_rfc3339(series.records()[i].time) +
                       "): irradiance reported while the sun is below the horizon");
    }
  }
}

void validate_config(const IrradianceConfig& cfg) {
  if (!(cfg.albedo >= 0.0 && cfg.albedo <= 1.0)) throw InputError("albedo must be in [0, 1]");
  if (cfg.samples_per_surface < 1) throw InputError("samples per surface must be >= 1");
  if (!std::isfinite(cfg.temp_coeff_gamma) || !std::isfinite(cfg.noct_c)) {
    throw InputError("non-finite PV temperature parameters");
  }
  if (!(cfg.system_losses >= 0.0 && cfg.system_losses < 1.0)) {
    throw InputError("system losses must be in [0, 1)");
  }
}

double incidence_cos(const SunPosition& sun, double tilt_deg, double azimuth_deg) {
  const double b = tilt_deg * kDeg;
  const double e = sun.elevation_deg * kDeg;
  const double c = std::cos(b) * std::sin(e) +
                   std::sin(b) * std::cos(e) * std::cos((sun.azimuth_deg - azimuth_deg) * kDeg);
  return std::clamp(c, -1.0, 1.0);
}

namespace {

double transpose_with_cos(const WeatherRecord& r, double sin_elev, double cos_theta, double tilt_rad,
                          double albedo, bool beam_shaded) {
  if (sin_elev <= 0.0) return 0.0;
  double beam = 0.0;
  if (!beam_shaded) {
    const double dni = std::clamp((r.ghi - r.dhi) / std::max(sin_elev, kMinSinElevation), 0.0,
                                  kSolarConstant);
    beam = dni * std::max(cos_theta, 0.0);
  }
  const double cos_b = std::cos(tilt_rad);
  const double diffuse = r.dhi * (1.0 + cos_b) / 2.0;
  const double reflected = r.ghi * albedo * (1.0 - cos_b) / 2.0;
  return beam + diffuse + reflected;
}

}  // namespace

double transpose_poa(const WeatherRecord& record, const SunPosition& sun, double tilt_deg,
                     double azimuth_deg, double albedo, bool beam_shaded) {
  return transpose_with_cos(record, std::sin(sun.elevation_deg * kDeg),
                            incidence_cos(sun, tilt_deg, azimuth_deg), tilt_deg * kDeg, albedo,
                            beam_shaded);
}

double pv_output_per_kwp(double poa_wm2, double temp_c, const IrradianceConfig& cfg) {
  const double cell_temp = temp_c + poa_wm2 * (cfg.noct_c - 20.0) / 800.0;
  const double p = poa_wm2 / 1000.0 * (1.0 + cfg.temp_coeff_gamma * (cell_temp - 25.0));
  return std::max(p * (1.0 - cfg.system_losses), 0.0);
}

ShadingScene::ShadingScene(geo::TriangleMesh mesh) : mesh_(std::move(mesh)) {
  if (mesh_.empty()) return;
  bvh_.emplace(mesh_);
  bounds_ = bvh_->bounds();
  diameter_ = bounds_.diagonal();
}

bool ShadingScene::occluded(const geo::Ray& ray, geo::SurfaceId ignore,
                            ShadingBackend backend) const {
  if (mesh_.empty()) return false;
  if (backend == ShadingBackend::BruteForce) return geo::ray_occluded_brute_force(mesh_, ray, ignore);
  return bvh_->occluded(ray, ignore);
}

bool is_beam_shaded(const ShadingScene& scene, geo::Point3 point, geo::Vec3 normal,
                    const SunPosition& sun, geo::SurfaceId own_surface, ShadingBackend backend) {
  if (scene.empty()) return false;
  geo::Ray ray;
  ray.origin = point + normal * kRayOffset;
  ray.direction = sun_direction(sun);
  ray.t_min = 0.0;
  ray.t_max = scene.diameter() + 1.0;
  return scene.occluded(ray, own_surface, backend);
}

std::vector<geo::Point3> surface_sample_points(const geo::Polygon3& surface, int count) {
  if (count < 1) throw InputError("sample count must be >= 1");
  const geo::Point3 c = geo::polygon_centroid(surface);
  if (count == 1) return {c};
  const auto& v = surface.vertices;
  const auto n = static_cast<int>(v.size());
  std::vector<geo::Point3> out;
  out.reserve(static_cast<std::size_t>(count));
  constexpr double kFractions[] = {0.5, 0.25, 0.75};
  for (int j = 0; j < count; ++j) {
    int vertex;
    double f;
    if (count <= n) {
      vertex = j * n / count;
      f = 0.5;
    } else {
      vertex = j % n;
      f = kFractions[(j / n) % 3];
    }
    out.push_back(c + (v[static_cast<std::size_t>(vertex)] - c) * f);
  }
  return out;
}

std::vector<SunPosition> sun_table(const WeatherSeries& weather, double lat_deg, double lon_deg) {
  std::vector<SunPosition> suns(weather.size());
  for (std::size_t i = 0; i < weather.size(); ++i) {
    suns[i] = sun_position(lat_deg, lon_deg, weather.sample_instant(i));
  }
  return suns;
}

SurfaceIrradiance annual_surface_irradiance(const geo::Polygon3& surface, const ShadingScene& scene,
                                            const WeatherSeries& weather, double lat_deg,
                                            double lon_deg, const IrradianceConfig& cfg,
                                            ShadingBackend backend) {
  const auto suns = sun_table(weather, lat_deg, lon_deg);
  return annual_surface_irradiance(surface, scene, weather, suns, cfg, backend);
}

SurfaceIrradiance annual_surface_irradiance(const geo::Polygon3& surface, const ShadingScene& scene,
                                            const WeatherSeries& weather,
                                            std::span<const SunPosition> suns,
                                            const IrradianceConfig& cfg, ShadingBackend backend) {
  validate_config(cfg);
  if (suns.size() != weather.size()) throw InputError("sun table does not match weather series");
  const geo::Vec3 normal = geo::polygon_normal(surface);
  const auto orientation = geo::tilt_azimuth_of_normal(normal);
  const double tilt_rad = orientation.tilt_deg * kDeg;
  const auto samples = surface_sample_points(surface, cfg.samples_per_surface);
  const double inv_samples = 1.0 / static_cast<double>(samples.size());
  const double dt = weather.step_hours();

  std::vector<geo::Point3> origins;
  origins.reserve(samples.size());
  for (const auto& p : samples) origins.push_back(p + normal * kRayOffset);

  double poa_wh = 0.0, pv_h = 0.0;
  std::size_t instants = 0, shaded = 0;
  geo::Ray ray;
  ray.t_min = 0.0;
  ray.t_max = scene.diameter() + 1.0;
  const auto& records = weather.records();
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& rec = records[i];
    const SunPosition& sun = suns[i];
    if (sun.elevation_deg <= 0.0 || rec.ghi <= 0.0) continue;
    const double sin_elev = std::sin(sun.elevation_deg * kDeg);
    const double cos_theta = incidence_cos(sun, orientation.tilt_deg, orientation.azimuth_deg);
    const bool back_facing = cos_theta <= 0.0;
    ray.direction = sun_direction(sun);
    double poa_sum = 0.0, p_sum = 0.0;
    for (const auto& origin : origins) {
      bool blocked = back_facing;
      if (!blocked && !scene.empty()) {
        ray.origin = origin;
        blocked = scene.occluded(ray, surface.surface_id, backend);
      }
      shaded += blocked ? 1 : 0;
      const double poa = transpose_with_cos(rec, sin_elev, cos_theta, tilt_rad, cfg.albedo, blocked);
      poa_sum += poa;
      p_sum += pv_output_per_kwp(poa, rec.temp_c, cfg);
    }
    instants += samples.size();
    poa_wh += poa_sum * inv_samples * dt;
    pv_h += p_sum * inv_samples * dt;
  }

  SurfaceIrradiance out;
  out.surface_id = surface.surface_id;
  out.poa_annual_kwh_m2 = poa_wh / 1000.0;
  out.pv_potential_h = pv_h;
  out.shaded_fraction = instants == 0 ? 0.0 : static_cast<double>(shaded) / static_cast<double>(instants);
  return out;
}

std::vector<SurfaceIrradiance> annual_irradiance(std::span<const geo::Polygon3> surfaces,
                                                 const ShadingScene& scene,
                                                 const WeatherSeries& weather, double lat_deg,
                                                 double lon_deg, const IrradianceConfig& cfg,
                                                 unsigned threads, ShadingBackend backend) {
  validate_config(cfg);
  const auto suns = sun_table(weather, lat_deg, lon_deg);
  std::vector<SurfaceIrradiance> out(surfaces.size());
  parallel_for(surfaces.size(), threads, [&](std::size_t i) {
    out[i] = annual_surface_irradiance(surfaces[i], scene, weather, suns, cfg, backend);
  });
  return out;
}

}  // namespace urban3d::solar
