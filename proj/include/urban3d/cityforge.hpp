#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "urban3d/city.hpp"
#include "urban3d/solar.hpp"

namespace urban3d::forge {

struct RoofMix {
  double flat = 0.17;
  double gable = 0.68;
  double hip = 0.15;
};

struct CityConfig {
  std::uint64_t seed = 1;
  std::size_t n_buildings = 50;
  double extent_m = 0.0;  // side of the square city; 0 picks 32 m per grid cell
  double terrain_amplitude_m = 20.0;
  double terrain_spacing_m = 10.0;
  RoofMix roof_mix;
  int district_cols = 4;
  int district_rows = 3;
  int min_dwellings = 1;
  int max_dwellings = 6;
  double dwelling_size_median_m2 = 74.0;
  double dwelling_size_sigma = 0.48;  // log scale
  GeoOrigin origin;
};

void validate_config(const CityConfig& cfg);

/// Side length actually used for the city square.
double city_extent(const CityConfig& cfg);

/// Two-octave value noise scaled to [0, amplitude], covering the city plus
/// a 20 m margin.
Terrain gen_terrain(const CityConfig& cfg);

/// Jittered grid of rotated rectangular buildings standing on the terrain,
/// districts as a regular grid, dwellings without rent labels.
CityModel gen_city(const CityConfig& cfg);

/// Hourly synthetic year: Haurwitz clear sky times an autocorrelated
/// clearness index, Erbs diffuse split, sinusoidal temperature.
solar::WeatherSeries gen_weather(std::uint64_t seed, double lat_deg, double lon_deg, int year);

/// Coefficients are keyed by design-column names of the showcase table
/// (numeric column name, or "column=level" for a category indicator).
/// PV coefficients apply to the monotone-transformed orientation and
/// inclination.
struct RentLabelConfig {
  std::uint64_t seed = 1;
  double intercept = 200.0;
  std::map<std::string, double> coefficients;
  double gp_sigma2 = 6400.0;
  double gp_phi = 1.0 / 150.0;  // 1/m, over building sites (x, y, elevation)
  double noise_sd = 60.0;
  double floor = 150.0;
};

struct PvLabelConfig {
  std::uint64_t seed = 1;
  std::map<std::string, double> coefficients;
  double base_rate = 0.02;
  double gp_sigma2 = 0.8;
  double gp_phi = 1.0 / 200.0;  // 1/m, planar roof centroids
};

RentLabelConfig default_rent_labels(std::uint64_t seed);
PvLabelConfig default_pv_labels(std::uint64_t seed);
void validate_config(const RentLabelConfig& cfg);
void validate_config(const PvLabelConfig& cfg);

/// Sets the rent of every dwelling. Returns the per-dwelling noise-free mean
/// in rent-table row order.
std::vector<double> label_rents(CityModel& city, const RentLabelConfig& cfg);

struct PvLabels {
  std::map<std::uint32_t, bool> adopted;
  double intercept = 0.0;  // calibrated
  double expected_rate = 0.0;
  double realized_rate = 0.0;
};

/// Logistic adoption with the intercept found by bisection so that the mean
/// adoption probability equals the base rate, then seeded Bernoulli draws.
PvLabels label_pv(const CityModel& city, std::span<const solar::SurfaceIrradiance> irradiance,
                  const PvLabelConfig& cfg);

/// Zero-mean Gaussian field with exponential covariance at the sites: exact
/// Cholesky up to 2000 sites, random Fourier features beyond.
std::vector<double> sample_gp(std::span<const geo::Point3> sites, double sigma2, double phi,
                              std::uint64_t seed);

}  // namespace urban3d::forge
