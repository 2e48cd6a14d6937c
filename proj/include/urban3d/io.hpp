#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "urban3d/city.hpp"
#include "urban3d/cityforge.hpp"
#include "urban3d/solar.hpp"

namespace urban3d::io {

using Json = nlohmann::ordered_json;

inline constexpr int kCityFormatVersion = 1;
inline constexpr const char* kVersion = "1.0.0";

// City document (JSON):
//   format "urban3d-city", version, origin {lat, lon},
//   terrain {x0, y0, spacing, nx, ny, heights (row-major)},
//   buildings [{id, function, dwellings [{size_m2, rooms, rent?}],
//               roofs [{id, vertices [[x,y,z]...]}], walls [...]}],
//   districts [{name, municipality, neighborhood, polygon [[x,y]...]}]
Json city_to_json(const CityModel& city);
/// Schema and geometry validation; errors name the JSON path.
CityModel city_from_json(const Json& doc);

void write_city(const std::filesystem::path& path, const CityModel& city);
CityModel read_city(const std::filesystem::path& path);

/// timestamp_utc,ghi_wm2,dhi_wm2,temp_c
void write_weather(std::ostream& os, const solar::WeatherSeries& w);
solar::WeatherSeries read_weather(std::istream& is, const std::string& source);

/// surface_id,building_id,poa_kwh_m2,pv_potential_h,shaded_fraction
void write_irradiance(std::ostream& os, const CityModel& city,
                      const std::vector<solar::SurfaceIrradiance>& rows);
std::vector<solar::SurfaceIrradiance> read_irradiance(std::istream& is, const std::string& source);

Json truth_to_json(const forge::CityConfig& city, const forge::RentLabelConfig& rent,
                   const forge::PvLabelConfig& pv, std::uint64_t weather_seed, int year);

/// Lower-case hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);
std::string sha256_bytes(const std::string& bytes);

/// Writes text, creating parent directories. Throws IoError.
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);
/// JSON with two-space indentation and a trailing newline.
std::string dump(const Json& doc);

}  // namespace urban3d::io
