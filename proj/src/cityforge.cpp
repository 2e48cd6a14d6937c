#include "urban3d/cityforge.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <numeric>

#include <Eigen/Dense>

#include "urban3d/error.hpp"
#include "urban3d/features.hpp"
#include "urban3d/gp.hpp"
#include "urban3d/linear.hpp"
#include "urban3d/random.hpp"

namespace urban3d::forge {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kDeg = kPi / 180.0;
constexpr double kTerrainMargin = 20.0;
constexpr double kCellSize = 32.0;
constexpr double kMinCell = 12.0;

// Independent generator streams per concern, so that changing how one part
// draws never shifts another.
enum Stream : std::uint64_t {
  kTerrainStream = 1,
  kLayoutStream,
  kBuildingStream,
  kDistrictStream,
  kDwellingStream,
  kWeatherStream,
  kGpStream,
  kNoiseStream,
  kDrawStream,
};

double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }

class ValueNoise {
 public:
  ValueNoise(Rng& rng, double x0, double y0, double cell, std::size_t nx, std::size_t ny)
      : x0_(x0), y0_(y0), cell_(cell), nx_(nx), ny_(ny), v_(nx * ny) {
    for (double& v : v_) v = rng.uniform();
  }

  double at(double x, double y) const {
    const double fx = std::clamp((x - x0_) / cell_, 0.0, static_cast<double>(nx_ - 1));
    const double fy = std::clamp((y - y0_) / cell_, 0.0, static_cast<double>(ny_ - 1));
    const auto ix = std::min<std::size_t>(static_cast<std::size_t>(fx), nx_ - 2);
    const auto iy = std::min<std::size_t>(static_cast<std::size_t>(fy), ny_ - 2);
    const double tx = smoothstep(fx - static_cast<double>(ix));
    const double ty = smoothstep(fy - static_cast<double>(iy));
    auto v = [&](std::size_t i, std::size_t j) { return v_[j * nx_ + i]; };
    return (1 - ty) * ((1 - tx) * v(ix, iy) + tx * v(ix + 1, iy)) +
           ty * ((1 - tx) * v(ix, iy + 1) + tx * v(ix + 1, iy + 1));
  }

 private:
  double x0_, y0_, cell_;
  std::size_t nx_, ny_;
  std::vector<double> v_;
};

std::size_t grid_side(std::size_t n) {
  auto g = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n))));
  while (g * g < n) ++g;
  return g;
}

std::size_t pick_weighted(Rng& rng, std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  double u = rng.uniform() * total;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    u -= weights[i];
    if (u < 0.0) return i;
  }
  return weights.size() - 1;
}

struct Frame {
  geo::Vec2 c;
  geo::Vec2 u;
  geo::Vec2 v;
  double a;  // half length along u
  double b;  // half width along v
};

geo::Point3 at(const Frame& f, double su, double sv, double z) {
  return {f.c.x + su * f.u.x + sv * f.v.x, f.c.y + su * f.u.y + sv * f.v.y, z};
}

enum class RoofShape { Flat, Gable, Hip };

}  // namespace

void validate_config(const CityConfig& cfg) {
  if (cfg.n_buildings < 1) throw InputError("city: at least 1 building is required");
  if (cfg.n_buildings > 200000) throw InputError("city: at most 200000 buildings are supported");
  if (!(cfg.extent_m >= 0.0) || !std::isfinite(cfg.extent_m)) throw InputError("city: extent must be >= 0");
  if (!(cfg.terrain_amplitude_m >= 0.0) || !std::isfinite(cfg.terrain_amplitude_m)) {
    throw InputError("city: terrain amplitude must be >= 0");
  }
  if (!(cfg.terrain_spacing_m > 0.0)) throw InputError("city: terrain spacing must be > 0");
  const auto& m = cfg.roof_mix;
  if (m.flat < 0 || m.gable < 0 || m.hip < 0 || std::abs(m.flat + m.gable + m.hip - 1.0) > 1e-9) {
    throw InputError("city: roof mix fractions must be >= 0 and sum to 1");
  }
  if (cfg.district_cols < 1 || cfg.district_rows < 1) throw InputError("city: district grid must be >= 1x1");
  if (cfg.min_dwellings < 1 || cfg.max_dwellings < cfg.min_dwellings) {
    throw InputError("city: dwelling counts must satisfy 1 <= min <= max");
  }
  if (!(cfg.dwelling_size_median_m2 > 0.0) || !(cfg.dwelling_size_sigma >= 0.0)) {
    throw InputError("city: dwelling size parameters must be positive");
  }
  if (std::abs(cfg.origin.lat_deg) > 66.0) throw InputError("city: |latitude| must be <= 66");
  if (city_extent(cfg) / static_cast<double>(grid_side(cfg.n_buildings)) < kMinCell) {
    throw InputError("city: extent too small for the number of buildings (need >= " +
                     std::to_string(kMinCell) + " m per grid cell)");
  }
}

double city_extent(const CityConfig& cfg) {
  if (cfg.extent_m > 0.0) return cfg.extent_m;
  return kCellSize * static_cast<double>(grid_side(cfg.n_buildings));
}

Terrain gen_terrain(const CityConfig& cfg) {
  const double half = 0.5 * city_extent(cfg) + kTerrainMargin;
  Terrain t;
  t.spacing = cfg.terrain_spacing_m;
  t.x0 = -half;
  t.y0 = -half;
  t.nx = static_cast<std::size_t>(std::ceil(2.0 * half / t.spacing)) + 1;
  t.ny = t.nx;
  t.heights.assign(t.nx * t.ny, 0.0);
  if (cfg.terrain_amplitude_m == 0.0) return t;

  Rng rng(derive_seed(cfg.seed, kTerrainStream));
  const double coarse = 250.0, fine = 90.0;
  auto count = [&](double cell) { return static_cast<std::size_t>(std::ceil(2.0 * half / cell)) + 2; };
  const ValueNoise n1(rng, -half, -half, coarse, count(coarse), count(coarse));
  const ValueNoise n2(rng, -half, -half, fine, count(fine), count(fine));
  for (std::size_t iy = 0; iy < t.ny; ++iy) {
    for (std::size_t ix = 0; ix < t.nx; ++ix) {
      const double x = t.x0 + t.spacing * static_cast<double>(ix);
      const double y = t.y0 + t.spacing * static_cast<double>(iy);
      t.heights[iy * t.nx + ix] = n1.at(x, y) + 0.35 * n2.at(x, y);
    }
  }
  const auto [lo, hi] = std::minmax_element(t.heights.begin(), t.heights.end());
  const double min = *lo, range = *hi - *lo;
  for (double& h : t.heights) h = range > 0.0 ? cfg.terrain_amplitude_m * (h - min) / range : 0.0;
  return t;
}

CityModel gen_city(const CityConfig& cfg) {
  validate_config(cfg);
  CityModel city;
  city.origin = cfg.origin;
  city.terrain = gen_terrain(cfg);
  const double extent = city_extent(cfg);
  const double half = 0.5 * extent;

  // Districts: regular grid, outer edges padded so boundary centroids count.
  {
    Rng rng(derive_seed(cfg.seed, kDistrictStream));
    const int nd = cfg.district_cols * cfg.district_rows;
    std::vector<int> order(static_cast<std::size_t>(nd));
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order.begin(), order.end());
    const auto n_a = static_cast<int>(std::lround(0.654 * nd));
    const std::array<double, 5> hood_weights = {0.166, 0.612, 0.049, 0.060, 0.113};
    std::vector<std::string> muni(static_cast<std::size_t>(nd));
    for (int k = 0; k < nd; ++k) muni[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])] = k < n_a ? "A" : "B";
    const double dw = extent / cfg.district_cols, dh = extent / cfg.district_rows;
    for (int r = 0; r < cfg.district_rows; ++r) {
      for (int c = 0; c < cfg.district_cols; ++c) {
        const int k = r * cfg.district_cols + c;
        District d;
        char name[16];
        std::snprintf(name, sizeof name, "D%02d", k + 1);
        d.name = name;
        d.municipality = muni[static_cast<std::size_t>(k)];
        d.neighborhood = feat::kNeighborhoods[pick_weighted(rng, hood_weights)];
        double xa = -half + c * dw, xb = xa + dw, ya = -half + r * dh, yb = ya + dh;
        if (c == 0) xa -= 1.0;
        if (c == cfg.district_cols - 1) xb += 1.0;
        if (r == 0) ya -= 1.0;
        if (r == cfg.district_rows - 1) yb += 1.0;
        d.polygon = {{xa, ya}, {xb, ya}, {xb, yb}, {xa, yb}};
        city.districts.push_back(std::move(d));
      }
    }
  }

  const std::size_t g = grid_side(cfg.n_buildings);
  const double cell = extent / static_cast<double>(g);
  std::vector<std::size_t> cells(g * g);
  {
    Rng rng(derive_seed(cfg.seed, kLayoutStream));
    std::iota(cells.begin(), cells.end(), 0);
    rng.shuffle(cells.begin(), cells.end());
    cells.resize(cfg.n_buildings);
    std::sort(cells.begin(), cells.end());
  }

  Rng rng(derive_seed(cfg.seed, kBuildingStream));
  Rng drng(derive_seed(cfg.seed, kDwellingStream));
  const std::array<double, 3> roof_weights = {cfg.roof_mix.flat, cfg.roof_mix.gable, cfg.roof_mix.hip};
  const std::array<double, 6> function_weights = {0.216, 0.130, 0.332, 0.267, 0.014, 0.041};
  std::uint32_t next_surface = 1;
  auto sid = [&] { return geo::SurfaceId{next_surface++}; };

  for (std::size_t k = 0; k < cells.size(); ++k) {
    const double cx = -half + cell * (static_cast<double>(cells[k] % g) + 0.5);
    const double cy = -half + cell * (static_cast<double>(cells[k] / g) + 0.5);
    double len = rng.uniform(8.0, 22.0);
    double wid = rng.uniform(6.0, std::min(len - 1.0, 14.0));
    const double max_diag = cell - 2.0;
    const double diag = std::hypot(len, wid);
    if (diag > max_diag) {
      len *= max_diag / diag;
      wid *= max_diag / diag;
    }
    const double theta = rng.uniform(0.0, kPi);
    const double slack = std::max(0.0, 0.5 * max_diag - 0.5 * std::hypot(len, wid));
    Frame f{{cx + rng.uniform(-slack, slack) / std::sqrt(2.0), cy + rng.uniform(-slack, slack) / std::sqrt(2.0)},
            {std::cos(theta), std::sin(theta)},
            {-std::sin(theta), std::cos(theta)},
            0.5 * len,
            0.5 * wid};
    const auto shape = static_cast<RoofShape>(pick_weighted(rng, roof_weights));
    const double eave_rel = rng.uniform(3.0, 18.0);
    const double pitch = rng.uniform(20.0, 40.0) * kDeg;
    const std::string function = feat::kBuildingFunctions[pick_weighted(rng, function_weights)];

    double z0 = city.terrain.height_at(f.c.x, f.c.y);
    for (double su : {-1.0, 1.0}) {
      for (double sv : {-1.0, 1.0}) {
        const auto p = at(f, su * f.a, sv * f.b, 0.0);
        z0 = std::min(z0, city.terrain.height_at(p.x, p.y));
      }
    }
    const double ze = z0 + eave_rel;
    const double rise = shape == RoofShape::Flat ? 0.0 : f.b * std::tan(pitch);
    const double zr = ze + rise;
    const double a = f.a, b = f.b;

    Building bld;
    bld.id = static_cast<std::uint32_t>(k + 1);
    bld.function = function;
    const std::array<geo::Point3, 4> lo = {at(f, -a, -b, z0), at(f, a, -b, z0), at(f, a, b, z0), at(f, -a, b, z0)};
    const std::array<geo::Point3, 4> hi = {at(f, -a, -b, ze), at(f, a, -b, ze), at(f, a, b, ze), at(f, -a, b, ze)};
    bld.walls.push_back({{lo[0], lo[3], lo[2], lo[1]}, sid()});

    if (shape == RoofShape::Gable) {
      const auto r0 = at(f, -a, 0.0, zr), r1 = at(f, a, 0.0, zr);
      bld.walls.push_back({{lo[0], lo[1], hi[1], hi[0]}, sid()});
      bld.walls.push_back({{lo[1], lo[2], hi[2], r1, hi[1]}, sid()});
      bld.walls.push_back({{lo[2], lo[3], hi[3], hi[2]}, sid()});
      bld.walls.push_back({{lo[3], lo[0], hi[0], r0, hi[3]}, sid()});
      bld.roofs.push_back({{hi[0], hi[1], r1, r0}, sid()});
      bld.roofs.push_back({{hi[2], hi[3], r0, r1}, sid()});
    } else {
      for (int e = 0; e < 4; ++e) {
        const int n = (e + 1) % 4;
        bld.walls.push_back({{lo[static_cast<std::size_t>(e)], lo[static_cast<std::size_t>(n)],
                              hi[static_cast<std::size_t>(n)], hi[static_cast<std::size_t>(e)]},
                             sid()});
      }
      if (shape == RoofShape::Flat) {
        bld.roofs.push_back({{hi[0], hi[1], hi[2], hi[3]}, sid()});
      } else {
        const auto r0 = at(f, -(a - b), 0.0, zr), r1 = at(f, a - b, 0.0, zr);
        bld.roofs.push_back({{hi[0], hi[1], r1, r0}, sid()});
        bld.roofs.push_back({{hi[1], hi[2], r1}, sid()});
        bld.roofs.push_back({{hi[2], hi[3], r0, r1}, sid()});
        bld.roofs.push_back({{hi[3], hi[0], r0}, sid()});
      }
    }

    const auto n_dw = static_cast<int>(drng.uniform_index(
                          static_cast<std::uint64_t>(cfg.max_dwellings - cfg.min_dwellings + 1))) +
                      cfg.min_dwellings;
    for (int d = 0; d < n_dw; ++d) {
      Dwelling dw;
      dw.size_m2 = std::clamp(cfg.dwelling_size_median_m2 * std::exp(cfg.dwelling_size_sigma * drng.normal()), 20.0,
                              480.0);
      dw.rooms = static_cast<int>(std::clamp(std::lround(dw.size_m2 / 32.0 + 0.5 * drng.normal()), 1L, 7L));
      bld.dwellings.push_back(dw);
    }
    city.buildings.push_back(std::move(bld));
  }
  validate_city(city);
  return city;
}

solar::WeatherSeries gen_weather(std::uint64_t seed, double lat_deg, double lon_deg, int year) {
  if (!(std::abs(lat_deg) <= 66.0)) throw InputError("weather: |latitude| must be <= 66");
  if (!(std::abs(lon_deg) <= 180.0)) throw InputError("weather: |longitude| must be <= 180");
  if (year < 1901 || year > 2099) throw InputError("weather: year must be in 1901..2099");
  Rng rng(derive_seed(seed, kWeatherStream));
  const Timestamp start = make_utc(year, 1, 1);
  const int hours = is_leap_year(year) ? 8784 : 8760;
  const double days = is_leap_year(year) ? 366.0 : 365.0;
  std::vector<solar::WeatherRecord> recs;
  recs.reserve(static_cast<std::size_t>(hours));

  double daily = 0.0, hourly = 0.0;
  const double southern = lat_deg < 0 ? 1.0 : -1.0;
  for (int h = 0; h < hours; ++h) {
    if (h % 24 == 0) daily = 0.6 * daily + std::sqrt(1.0 - 0.36) * rng.normal();
    hourly = 0.8 * hourly + 0.6 * rng.normal();
    solar::WeatherRecord r;
    r.time = start + std::chrono::hours{h};
    const Timestamp mid = r.time + std::chrono::minutes{30};
    const double doy = static_cast<double>(day_of_year(mid)) - 1.0 + utc_hours(mid) / 24.0;
    const double season = std::cos(2.0 * kPi * (doy - 15.0) / days);  // +1 mid January
    const auto sun = solar::sun_position(lat_deg, lon_deg, mid);
    const double cos_z = std::sin(sun.elevation_deg * kDeg);
    if (cos_z > 0.0) {
      const double clear = 1098.0 * cos_z * std::exp(-0.057 / cos_z);
      const double kc = std::clamp(0.56 + 0.06 * southern * season + 0.22 * daily + 0.10 * hourly, 0.1, 1.0);
      r.ghi = kc * clear;
      const double extra = 1367.0 * (1.0 + 0.033 * std::cos(2.0 * kPi * doy / days)) * cos_z;
      const double kt = std::min(r.ghi / extra, 1.0);
      double frac;
      if (kt <= 0.22) {
        frac = 1.0 - 0.09 * kt;
      } else if (kt <= 0.8) {
        frac = 0.9511 - 0.1604 * kt + 4.388 * kt * kt - 16.638 * kt * kt * kt + 12.336 * kt * kt * kt * kt;
      } else {
        frac = 0.165;
      }
      r.dhi = std::clamp(frac, 0.0, 1.0) * r.ghi;
    }
    const double solar_hour = std::fmod(utc_hours(mid) + lon_deg / 15.0 + 48.0, 24.0);
    r.temp_c = 9.5 + 9.5 * southern * season - 4.0 * std::cos(2.0 * kPi * (solar_hour - 3.0) / 24.0) +
               1.5 * daily;
    recs.push_back(r);
  }
  return solar::WeatherSeries(std::move(recs));
}

RentLabelConfig default_rent_labels(std::uint64_t seed) {
  RentLabelConfig c;
  c.seed = seed;
  c.coefficients = {
      {"apartment_size", 9.0},
      {"number_of_rooms", 40.0},
      {"building_volume", 0.12},
      {"elevation", 6.0},
  };
  const std::array<double, 12> district = {0.0, 60.0, -40.0, 110.0, -80.0, 30.0,
                                           -20.0, 90.0, -60.0, 20.0, 70.0, -100.0};
  for (std::size_t k = 0; k < district.size(); ++k) {
    char name[32];
    std::snprintf(name, sizeof name, "district=D%02zu", k + 1);
    c.coefficients[name] = district[k];
  }
  return c;
}

PvLabelConfig default_pv_labels(std::uint64_t seed) {
  PvLabelConfig c;
  c.seed = seed;
  c.coefficients = {
      {"pv_potential", 0.008},
      {"roof_surface", 0.008},
      {"roof_inclination", -0.02},
      {"roof_orientation", -0.004},
      {"roof_type=A frame", 0.4},
      {"building_function=housing", 0.9},
      {"building_function=main building", 0.6},
      {"building_function=business", -0.4},
      {"building_function=outbuilding", -1.0},
      {"building_function=other", -0.4},
      {"building_density=low", 0.5},
      {"building_density=high", -0.5},
      {"neighborhood=residential", 0.4},
      {"neighborhood=historic", -0.7},
      {"neighborhood=industrial", -0.5},
      {"neighborhood=commercial", -0.3},
      {"municipality=B", 0.4},
  };
  return c;
}

void validate_config(const RentLabelConfig& c) {
  if (!(c.gp_sigma2 >= 0.0) || !(c.gp_phi > 0.0) || !(c.noise_sd >= 0.0)) {
    throw InputError("rent labels: need gp_sigma2 >= 0, gp_phi > 0, noise_sd >= 0");
  }
  for (const auto& [k, v] : c.coefficients) {
    if (!std::isfinite(v)) throw InputError("rent labels: non-finite coefficient '" + k + "'");
  }
}

void validate_config(const PvLabelConfig& c) {
  if (!(c.base_rate > 0.0 && c.base_rate < 1.0)) throw InputError("pv labels: base rate must be in (0, 1)");
  if (!(c.gp_sigma2 >= 0.0) || !(c.gp_phi > 0.0)) throw InputError("pv labels: need gp_sigma2 >= 0, gp_phi > 0");
  for (const auto& [k, v] : c.coefficients) {
    if (!std::isfinite(v)) throw InputError("pv labels: non-finite coefficient '" + k + "'");
  }
}

std::vector<double> sample_gp(std::span<const geo::Point3> sites, double sigma2, double phi,
                              std::uint64_t seed) {
  const std::size_t n = sites.size();
  std::vector<double> out(n, 0.0);
  if (n == 0 || sigma2 == 0.0) return out;
  Rng rng(derive_seed(seed, kGpStream));
  if (n <= 2000) {
    Eigen::MatrixXd k = models::cov_matrix(sites, sites, sigma2, phi);
    k.diagonal().array() += 1e-10 * sigma2;
    const Eigen::LLT<Eigen::MatrixXd> llt(k);
    if (llt.info() != Eigen::Success) throw ModelError("GP sampling: covariance not positive definite");
    Eigen::VectorXd z(static_cast<Eigen::Index>(n));
    for (auto& v : z) v = rng.normal();
    const Eigen::VectorXd w = llt.matrixL() * z;
    for (std::size_t i = 0; i < n; ++i) out[i] = w(static_cast<Eigen::Index>(i));
    return out;
  }
  // The exponential kernel's spectral measure in 3D is a multivariate Cauchy
  // with scale phi: a Gaussian direction divided by |N(0,1)|.
  constexpr int kFeatures = 2000;
  const double scale = std::sqrt(2.0 * sigma2 / kFeatures);
  for (int f = 0; f < kFeatures; ++f) {
    double g = 0.0;
    do {
      g = std::abs(rng.normal());
    } while (g == 0.0);
    const geo::Vec3 w{phi * rng.normal() / g, phi * rng.normal() / g, phi * rng.normal() / g};
    const double b = rng.uniform(0.0, 2.0 * kPi);
    for (std::size_t i = 0; i < n; ++i) out[i] += scale * std::cos(geo::dot(w, sites[i]) + b);
  }
  return out;
}

namespace {

Eigen::VectorXd linear_truth(const feat::FeatureTable& table, const std::map<std::string, double>& coef) {
  std::vector<std::string> cols;
  for (const auto& s : table.specs()) {
    if (!s.outcome) cols.push_back(s.name);
  }
  const feat::Design d = feat::design_matrix(table, cols, false);
  Eigen::VectorXd eta = Eigen::VectorXd::Zero(d.x.rows());
  for (const auto& [name, value] : coef) {
    const auto it = std::find(d.names.begin(), d.names.end(), name);
    if (it == d.names.end()) throw InputError("labels: coefficient '" + name + "' matches no feature column");
    eta += value * d.x.col(it - d.names.begin());
  }
  return eta;
}

}  // namespace

std::vector<double> label_rents(CityModel& city, const RentLabelConfig& cfg) {
  validate_config(cfg);
  for (auto& b : city.buildings) {
    for (auto& d : b.dwellings) d.rent = 0.0;
  }
  const feat::FeatureTable table = feat::rent_table(city);
  const Eigen::VectorXd mean = linear_truth(table, cfg.coefficients).array() + cfg.intercept;

  const auto buildings = feat::extract_building_features(city);
  std::vector<geo::Point3> sites;
  std::map<std::uint32_t, std::size_t> site_of;
  for (const auto& f : buildings) {
    site_of[f.building_id] = sites.size();
    sites.push_back({f.centroid.x, f.centroid.y, f.elevation});
  }
  const auto w = sample_gp(sites, cfg.gp_sigma2, cfg.gp_phi, cfg.seed);
  Rng noise(derive_seed(cfg.seed, kNoiseStream));

  std::map<std::uint32_t, Building*> by_id;
  for (auto& b : city.buildings) by_id[b.id] = &b;
  std::vector<double> out;
  std::size_t row = 0;
  for (const auto& f : buildings) {
    Building& b = *by_id.at(f.building_id);
    for (auto& d : b.dwellings) {
      const double m = mean(static_cast<Eigen::Index>(row++));
      out.push_back(m);
      const double rent = m + w[site_of.at(f.building_id)] + cfg.noise_sd * noise.normal();
      d.rent = std::max(rent, cfg.floor);
    }
  }
  return out;
}

PvLabels label_pv(const CityModel& city, std::span<const solar::SurfaceIrradiance> irradiance,
                  const PvLabelConfig& cfg) {
  validate_config(cfg);
  std::map<std::uint32_t, bool> none;
  for (const auto& b : city.buildings) {
    for (const auto& r : b.roofs) none[geo::to_underlying(r.surface_id)] = false;
  }
  const feat::FeatureTable table = feat::monotone_transform(feat::pv_table(city, irradiance, none));
  Eigen::VectorXd eta = linear_truth(table, cfg.coefficients);

  const auto roofs = feat::extract_roof_features(city, irradiance);
  std::vector<geo::Point3> sites;
  for (const auto& r : roofs) sites.push_back({r.centroid.x, r.centroid.y, 0.0});
  const auto w = sample_gp(sites, cfg.gp_sigma2, cfg.gp_phi, cfg.seed);
  for (Eigen::Index i = 0; i < eta.size(); ++i) eta(i) += w[static_cast<std::size_t>(i)];

  auto rate = [&](double a) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) s += models::logistic(a + eta(i));
    return s / static_cast<double>(eta.size());
  };
  double lo = -60.0 - eta.maxCoeff(), hi = 60.0 - eta.minCoeff();
  if (!(rate(lo) < cfg.base_rate && rate(hi) > cfg.base_rate)) {
    throw ModelError("pv labels: base rate cannot be reached by any intercept");
  }
  for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
    const double mid = 0.5 * (lo + hi);
    (rate(mid) < cfg.base_rate ? lo : hi) = mid;
  }
  PvLabels out;
  out.intercept = 0.5 * (lo + hi);
  out.expected_rate = rate(out.intercept);

  Rng draw(derive_seed(cfg.seed, kDrawStream));
  std::size_t positives = 0;
  for (std::size_t i = 0; i < roofs.size(); ++i) {
    const bool y = draw.bernoulli(models::logistic(out.intercept + eta(static_cast<Eigen::Index>(i))));
    positives += y ? 1 : 0;
    out.adopted[geo::to_underlying(roofs[i].surface_id)] = y;
  }
  out.realized_rate = static_cast<double>(positives) / static_cast<double>(roofs.size());
  return out;
}

}  // namespace urban3d::forge
