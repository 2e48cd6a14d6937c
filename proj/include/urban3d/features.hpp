#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "urban3d/city.hpp"
#include "urban3d/solar.hpp"

namespace urban3d::feat {

enum class Dim { D1, D2, D3, NonSpatial };
enum class Kind { Entity, Relation };
enum class Showcase { Rent, Pv };

std::string to_string(Dim d);
std::string to_string(Kind k);
std::string to_string(Showcase s);
Dim parse_dim(const std::string& s);
Kind parse_kind(const std::string& s);
Showcase parse_showcase(const std::string& s);

/// Column registry entry. `dim`/`kind` follow the typology of the feature
/// tables; `ablation_tier` is the first ablation row (1D, 2D or 3D) that
/// includes the column. The two differ for geocoordinates of rent listings,
/// which are typed as 3D relations but enter the 2D model.
struct ColumnSpec {
  std::string name;
  Dim dim = Dim::NonSpatial;
  Kind kind = Kind::Entity;
  std::string unit;
  std::vector<std::string> levels;  // empty for numeric columns
  bool outcome = false;
  Dim ablation_tier = Dim::D3;

  bool categorical() const { return !levels.empty(); }
};

/// Registered columns of a showcase in output order, outcome last.
/// `district_levels` fills the rent district domain.
std::vector<ColumnSpec> registry(Showcase showcase,
                                 const std::vector<std::string>& district_levels = {});

inline const std::vector<std::string> kNeighborhoods = {"historic", "residential", "commercial",
                                                        "industrial", "mixed"};
inline const std::vector<std::string> kMunicipalities = {"A", "B"};
inline const std::vector<std::string> kDensityLevels = {"low", "medium", "high"};
inline const std::vector<std::string> kRoofTypes = {"flat", "A frame", "other"};
inline const std::vector<std::string> kBuildingFunctions = {"main building", "outbuilding", "housing",
                                                            "business",      "public",      "other"};
inline const std::vector<std::string> kPvSystemLevels = {"absent", "present"};

/// Column-major table; categorical cells hold the level index.
class FeatureTable {
 public:
  FeatureTable() = default;
  FeatureTable(Showcase showcase, std::vector<ColumnSpec> specs);

  Showcase showcase() const { return showcase_; }
  std::size_t rows() const { return ids_.size(); }
  std::size_t cols() const { return specs_.size(); }
  const std::vector<ColumnSpec>& specs() const { return specs_; }
  const std::vector<std::string>& ids() const { return ids_; }

  std::optional<std::size_t> find(const std::string& name) const;
  /// Throws InputError when the column is missing.
  std::size_t index(const std::string& name) const;
  const ColumnSpec& spec(const std::string& name) const { return specs_[index(name)]; }
  const std::vector<double>& column(const std::string& name) const { return data_[index(name)]; }
  std::vector<double>& column(const std::string& name) { return data_[index(name)]; }
  const std::vector<double>& column(std::size_t j) const { return data_[j]; }
  std::size_t outcome_index() const;
  const std::vector<double>& outcome() const { return data_[outcome_index()]; }

  /// Appends one observation; `values` follows spec order.
  void add_row(std::string id, std::span<const double> values);
  /// Rows at the given positions, in that order.
  FeatureTable subset(std::span<const std::size_t> rows) const;
  /// Throws InputError on non-finite numeric cells or out-of-domain codes.
  void validate() const;

 private:
  Showcase showcase_ = Showcase::Rent;
  std::vector<ColumnSpec> specs_;
  std::vector<std::string> ids_;
  std::vector<std::vector<double>> data_;
};

struct BuildingFeatures {
  std::uint32_t building_id = 0;
  geo::Vec2 centroid;
  double elevation = 0.0;
  double latitude = 0.0;
  double longitude = 0.0;
  std::size_t district = 0;
  double building_volume = 0.0;
  double footprint_area = 0.0;
  std::string function;
};

/// One record per building in id order. Throws InputError naming any
/// building whose footprint centroid lies outside every district.
std::vector<BuildingFeatures> extract_building_features(const CityModel& city);

enum class RoofType { Flat, AFrame, Other };
std::string to_string(RoofType t);
RoofType classify_roof_type(std::span<const geo::TiltAzimuth> surfaces);
RoofType classify_roof_type(const Building& building);

enum class DensityClass { Low, Medium, High };

struct DensityResult {
  std::vector<double> per_km2;
  std::vector<DensityClass> classes;
  double q1 = 0.0;
  double q2 = 0.0;
};

/// Centroids within `radius_m` (the building itself included) per km^2,
/// split at the empirical terciles: low <= q1 < medium <= q2 < high.
DensityResult density_class(std::span<const geo::Vec2> centroids, double radius_m = 250.0);

struct RoofFeatures {
  geo::SurfaceId surface_id{0};
  std::uint32_t building_id = 0;
  geo::Point3 centroid;
  double latitude = 0.0;
  double longitude = 0.0;
  double orientation_deg = 0.0;
  double inclination_deg = 0.0;
  double area_m2 = 0.0;
  RoofType roof_type = RoofType::Flat;
  double pv_potential = 0.0;
};

/// One record per roof surface in building order. Throws InputError for a
/// roof without an irradiance record.
std::vector<RoofFeatures> extract_roof_features(const CityModel& city,
                                                std::span<const solar::SurfaceIrradiance> irradiance);

/// Rent table: one row per dwelling. Dwellings without a rent are rejected.
FeatureTable rent_table(const CityModel& city);

/// PV table: one row per roof surface; `adopted` maps surface ids to the
/// PV-system outcome and must cover every roof.
FeatureTable pv_table(const CityModel& city, std::span<const solar::SurfaceIrradiance> irradiance,
                      const std::map<std::uint32_t, bool>& adopted, double density_radius_m = 250.0);

/// Degrees from south for orientation, degrees from 30 for inclination.
double monotone_orientation(double azimuth_deg);
double monotone_inclination(double tilt_deg);
FeatureTable monotone_transform(FeatureTable table);

/// Feature columns of an ablation row (`tier` in D1..D3), in table order.
std::vector<std::string> select_tier(const FeatureTable& table, Dim tier);
std::vector<std::string> select_tier(Showcase showcase, Dim tier);

/// Numeric design matrix: numeric columns as-is, categoricals one-hot with
/// the first level dropped when `drop_first` is set.
struct Design {
  Eigen::MatrixXd x;
  std::vector<std::string> names;
};
Design design_matrix(const FeatureTable& table, std::span<const std::string> columns, bool drop_first);

/// Sites for spatial models: equirectangular metres about the mean
/// geocoordinate, with elevation as z when the table has it.
std::vector<geo::Point3> site_coordinates(const FeatureTable& table);

void write_csv(std::ostream& os, const FeatureTable& table);
FeatureTable read_csv(std::istream& is, const std::string& source, Showcase showcase,
                      std::vector<ColumnSpec> specs);

/// Key-value schema sidecar ("key = value" lines, '#' comments).
void write_schema(std::ostream& os, const FeatureTable& table);
std::pair<Showcase, std::vector<ColumnSpec>> read_schema(std::istream& is, const std::string& source);

}  // namespace urban3d::feat
