#include "urban3d/features.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <set>

#include "urban3d/csv.hpp"
#include "urban3d/error.hpp"
#include "urban3d/numfmt.hpp"

namespace urban3d::feat {

std::string to_string(Dim d) {
  switch (d) {
    case Dim::D1:
      return "1D";
    case Dim::D2:
      return "2D";
    case Dim::D3:
      return "3D";
    case Dim::NonSpatial:
      break;
  }
  return "non-spatial";
}

std::string to_string(Kind k) { return k == Kind::Entity ? "entity" : "relation"; }
std::string to_string(Showcase s) { return s == Showcase::Rent ? "rent" : "pv"; }

Dim parse_dim(const std::string& s) {
  if (s == "1D") return Dim::D1;
  if (s == "2D") return Dim::D2;
  if (s == "3D") return Dim::D3;
  if (s == "non-spatial") return Dim::NonSpatial;
  throw InputError("unknown tier '" + s + "'");
}

Kind parse_kind(const std::string& s) {
  if (s == "entity") return Kind::Entity;
  if (s == "relation") return Kind::Relation;
  throw InputError("unknown kind '" + s + "'");
}

Showcase parse_showcase(const std::string& s) {
  if (s == "rent") return Showcase::Rent;
  if (s == "pv") return Showcase::Pv;
  throw InputError("unknown showcase '" + s + "' (expected rent or pv)");
}

std::vector<ColumnSpec> registry(Showcase showcase, const std::vector<std::string>& district_levels) {
  using enum Dim;
  using enum Kind;
  if (showcase == Showcase::Rent) {
    return {
        {"elevation", D3, Relation, "m", {}, false, D3},
        {"latitude", D3, Relation, "deg", {}, false, D2},
        {"longitude", D3, Relation, "deg", {}, false, D2},
        {"district", D2, Relation, "", district_levels, false, D2},
        {"building_volume", D3, Entity, "m3", {}, false, D3},
        {"apartment_size", D2, Entity, "m2", {}, false, D2},
        {"number_of_rooms", D1, Entity, "", {}, false, D1},
        {"apartment_rent", NonSpatial, Entity, "EUR/month", {}, true, NonSpatial},
    };
  }
  return {
      {"pv_potential", D3, Relation, "h/a", {}, false, D3},
      {"municipality", D2, Relation, "", kMunicipalities, false, D2},
      {"neighborhood", D2, Relation, "", kNeighborhoods, false, D2},
      {"building_density", D2, Relation, "", kDensityLevels, false, D2},
      {"latitude", D2, Relation, "deg", {}, false, D2},
      {"longitude", D2, Relation, "deg", {}, false, D2},
      {"roof_orientation", D3, Entity, "deg", {}, false, D3},
      {"roof_inclination", D3, Entity, "deg", {}, false, D3},
      {"roof_surface", D3, Entity, "m2", {}, false, D3},
      {"roof_type", D3, Entity, "", kRoofTypes, false, D3},
      {"building_function", NonSpatial, Entity, "", kBuildingFunctions, false, D1},
      {"pv_system", D1, Entity, "", kPvSystemLevels, true, NonSpatial},
  };
}

// ---------------------------------------------------------------------------
// FeatureTable

FeatureTable::FeatureTable(Showcase showcase, std::vector<ColumnSpec> specs)
    : showcase_(showcase), specs_(std::move(specs)), data_(specs_.size()) {
  std::set<std::string> names;
  std::size_t outcomes = 0;
  for (const auto& s : specs_) {
    if (!names.insert(s.name).second) throw InputError("duplicate column '" + s.name + "'");
    outcomes += s.outcome ? 1 : 0;
  }
  if (outcomes != 1) throw InputError("feature table needs exactly one outcome column");
}

std::optional<std::size_t> FeatureTable::find(const std::string& name) const {
  for (std::size_t j = 0; j < specs_.size(); ++j) {
    if (specs_[j].name == name) return j;
  }
  return std::nullopt;
}

std::size_t FeatureTable::index(const std::string& name) const {
  if (auto j = find(name)) return *j;
  throw InputError("feature table has no column '" + name + "'");
}

std::size_t FeatureTable::outcome_index() const {
  for (std::size_t j = 0; j < specs_.size(); ++j) {
    if (specs_[j].outcome) return j;
  }
  throw InputError("feature table has no outcome column");
}

void FeatureTable::add_row(std::string id, std::span<const double> values) {
  if (values.size() != specs_.size()) throw InputError("row width does not match columns");
  ids_.push_back(std::move(id));
  for (std::size_t j = 0; j < values.size(); ++j) data_[j].push_back(values[j]);
}

FeatureTable FeatureTable::subset(std::span<const std::size_t> rows) const {
  FeatureTable out(showcase_, specs_);
  out.ids_.reserve(rows.size());
  for (auto& col : out.data_) col.reserve(rows.size());
  for (auto r : rows) {
    out.ids_.push_back(ids_[r]);
    for (std::size_t j = 0; j < specs_.size(); ++j) out.data_[j].push_back(data_[j][r]);
  }
  return out;
}

void FeatureTable::validate() const {
  for (std::size_t j = 0; j < specs_.size(); ++j) {
    const auto& s = specs_[j];
    for (std::size_t i = 0; i < data_[j].size(); ++i) {
      const double v = data_[j][i];
      const std::string where = "row " + ids_[i] + ", column " + s.name;
      if (!std::isfinite(v)) throw InputError(where + ": non-finite value");
      if (s.categorical() &&
          (v < 0 || v >= static_cast<double>(s.levels.size()) || v != std::floor(v))) {
        throw InputError(where + ": level code out of domain");
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Extraction

std::vector<BuildingFeatures> extract_building_features(const CityModel& city) {
  std::vector<const Building*> order;
  for (const auto& b : city.buildings) order.push_back(&b);
  std::sort(order.begin(), order.end(), [](auto* a, auto* b) { return a->id < b->id; });

  std::vector<BuildingFeatures> out;
  out.reserve(order.size());
  for (const Building* b : order) {
    BuildingFeatures f;
    f.building_id = b->id;
    f.centroid = b->footprint_centroid();
    const auto district = city.district_of(f.centroid);
    if (!district) {
      throw InputError("building " + std::to_string(b->id) + ": footprint centroid (" +
                       format_double(f.centroid.x) + ", " + format_double(f.centroid.y) +
                       ") lies outside every district");
    }
    f.district = *district;
    f.elevation = city.terrain.height_at(f.centroid.x, f.centroid.y);
    const LatLon ll = to_geodetic(city.origin, f.centroid);
    f.latitude = ll.lat_deg;
    f.longitude = ll.lon_deg;
    f.building_volume = geo::mesh_volume(b->mesh());
    f.footprint_area = b->footprint_area();
    f.function = b->function;
    out.push_back(std::move(f));
  }
  return out;
}

std::string to_string(RoofType t) { return kRoofTypes[static_cast<std::size_t>(t)]; }

RoofType classify_roof_type(std::span<const geo::TiltAzimuth> surfaces) {
  constexpr double kFlatLimit = 5.0;
  std::vector<geo::TiltAzimuth> sloped;
  for (const auto& s : surfaces) {
    if (s.tilt_deg >= kFlatLimit) sloped.push_back(s);
  }
  if (sloped.empty()) return RoofType::Flat;
  if (sloped.size() != 2) return RoofType::Other;
  if (std::abs(sloped[0].tilt_deg - sloped[1].tilt_deg) > 10.0) return RoofType::Other;
  double d = std::fmod(std::abs(sloped[0].azimuth_deg - sloped[1].azimuth_deg), 360.0);
  d = std::min(d, 360.0 - d);
  return d >= 165.0 ? RoofType::AFrame : RoofType::Other;
}

RoofType classify_roof_type(const Building& building) {
  std::vector<geo::TiltAzimuth> o;
  for (const auto& r : building.roofs) o.push_back(geo::polygon_tilt_azimuth(r));
  return classify_roof_type(o);
}

namespace {

// Linear interpolation between order statistics (Hyndman-Fan type 7).
double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

DensityResult density_class(std::span<const geo::Vec2> centroids, double radius_m) {
  if (centroids.size() < 3) throw InputError("density classes need at least 3 buildings");
  if (!(radius_m > 0.0)) throw InputError("density radius must be positive");
  DensityResult out;
  const double r2 = radius_m * radius_m;
  const double area_km2 = std::numbers::pi * r2 / 1e6;
  out.per_km2.resize(centroids.size());
  for (std::size_t i = 0; i < centroids.size(); ++i) {
    std::size_t count = 0;
    for (const auto& c : centroids) {
      const double dx = c.x - centroids[i].x, dy = c.y - centroids[i].y;
      if (dx * dx + dy * dy <= r2) ++count;
    }
    out.per_km2[i] = static_cast<double>(count) / area_km2;
  }
  out.q1 = quantile(out.per_km2, 1.0 / 3.0);
  out.q2 = quantile(out.per_km2, 2.0 / 3.0);
  out.classes.reserve(centroids.size());
  for (double d : out.per_km2) {
    out.classes.push_back(d <= out.q1 ? DensityClass::Low
                                      : (d <= out.q2 ? DensityClass::Medium : DensityClass::High));
  }
  return out;
}

std::vector<RoofFeatures> extract_roof_features(const CityModel& city,
                                                std::span<const solar::SurfaceIrradiance> irradiance) {
  std::map<std::uint32_t, double> pv;
  for (const auto& r : irradiance) pv[geo::to_underlying(r.surface_id)] = r.pv_potential_h;

  std::vector<const Building*> order;
  for (const auto& b : city.buildings) order.push_back(&b);
  std::sort(order.begin(), order.end(), [](auto* a, auto* b) { return a->id < b->id; });

  std::vector<RoofFeatures> out;
  for (const Building* b : order) {
    const RoofType type = classify_roof_type(*b);
    for (const auto& roof : b->roofs) {
      const auto id = geo::to_underlying(roof.surface_id);
      const auto it = pv.find(id);
      if (it == pv.end()) {
        throw InputError("roof surface " + std::to_string(id) + " of building " +
                         std::to_string(b->id) + " has no irradiance record");
      }
      RoofFeatures f;
      f.surface_id = roof.surface_id;
      f.building_id = b->id;
      f.centroid = geo::polygon_centroid(roof);
      const LatLon ll = to_geodetic(city.origin, {f.centroid.x, f.centroid.y});
      f.latitude = ll.lat_deg;
      f.longitude = ll.lon_deg;
      const auto o = geo::polygon_tilt_azimuth(roof);
      f.orientation_deg = o.azimuth_deg;
      f.inclination_deg = o.tilt_deg;
      f.area_m2 = geo::polygon_area(roof);
      f.roof_type = type;
      f.pv_potential = it->second;
      out.push_back(f);
    }
  }
  return out;
}

namespace {

double level_code(const std::vector<std::string>& levels, const std::string& value,
                  const std::string& what) {
  const auto it = std::find(levels.begin(), levels.end(), value);
  if (it == levels.end()) throw InputError(what + ": value '" + value + "' is not a declared level");
  return static_cast<double>(it - levels.begin());
}

std::vector<std::string> district_names(const CityModel& city) {
  std::vector<std::string> names;
  for (const auto& d : city.districts) names.push_back(d.name);
  return names;
}

}  // namespace

FeatureTable rent_table(const CityModel& city) {
  const auto buildings = extract_building_features(city);
  FeatureTable table(Showcase::Rent, registry(Showcase::Rent, district_names(city)));
  std::map<std::uint32_t, const Building*> by_id;
  for (const auto& b : city.buildings) by_id[b.id] = &b;
  for (const auto& f : buildings) {
    const Building& b = *by_id.at(f.building_id);
    for (std::size_t k = 0; k < b.dwellings.size(); ++k) {
      const Dwelling& d = b.dwellings[k];
      if (!d.rent) {
        throw InputError("building " + std::to_string(b.id) + ", dwelling " + std::to_string(k) +
                         ": no rent label");
      }
      const double row[] = {f.elevation,
                            f.latitude,
                            f.longitude,
                            static_cast<double>(f.district),
                            f.building_volume,
                            d.size_m2,
                            static_cast<double>(d.rooms),
                            *d.rent};
      table.add_row("b" + std::to_string(b.id) + "-" + std::to_string(k), row);
    }
  }
  return table;
}

FeatureTable pv_table(const CityModel& city, std::span<const solar::SurfaceIrradiance> irradiance,
                      const std::map<std::uint32_t, bool>& adopted, double density_radius_m) {
  const auto buildings = extract_building_features(city);
  const auto roofs = extract_roof_features(city, irradiance);
  std::vector<geo::Vec2> centroids;
  for (const auto& b : buildings) centroids.push_back(b.centroid);
  const auto density = density_class(centroids, density_radius_m);
  std::map<std::uint32_t, std::size_t> row_of;
  for (std::size_t i = 0; i < buildings.size(); ++i) row_of[buildings[i].building_id] = i;

  FeatureTable table(Showcase::Pv, registry(Showcase::Pv));
  for (const auto& r : roofs) {
    const std::size_t bi = row_of.at(r.building_id);
    const auto& b = buildings[bi];
    const auto& district = city.districts[b.district];
    const auto sid = geo::to_underlying(r.surface_id);
    const auto label = adopted.find(sid);
    if (label == adopted.end()) {
      throw InputError("roof surface " + std::to_string(sid) + " has no PV-system label");
    }
    const std::string tag = "building " + std::to_string(b.building_id);
    const double row[] = {r.pv_potential,
                          level_code(kMunicipalities, district.municipality, tag + " municipality"),
                          level_code(kNeighborhoods, district.neighborhood, tag + " neighborhood"),
                          static_cast<double>(density.classes[bi]),
                          r.latitude,
                          r.longitude,
                          r.orientation_deg,
                          r.inclination_deg,
                          r.area_m2,
                          static_cast<double>(r.roof_type),
                          level_code(kBuildingFunctions, b.function, tag + " function"),
                          label->second ? 1.0 : 0.0};
    table.add_row(std::to_string(sid), row);
  }
  return table;
}

double monotone_orientation(double azimuth_deg) { return std::abs(azimuth_deg - 180.0); }
double monotone_inclination(double tilt_deg) { return std::abs(tilt_deg - 30.0); }

FeatureTable monotone_transform(FeatureTable table) {
  if (table.find("roof_orientation")) {
    for (double& v : table.column("roof_orientation")) v = monotone_orientation(v);
  }
  if (table.find("roof_inclination")) {
    for (double& v : table.column("roof_inclination")) v = monotone_inclination(v);
  }
  return table;
}

std::vector<std::string> select_tier(const FeatureTable& table, Dim tier) {
  if (tier == Dim::NonSpatial) throw InputError("ablation tier must be 1D, 2D or 3D");
  const auto wanted = select_tier(table.showcase(), tier);
  for (const auto& name : wanted) table.index(name);
  return wanted;
}

std::vector<std::string> select_tier(Showcase showcase, Dim tier) {
  if (tier == Dim::NonSpatial) throw InputError("ablation tier must be 1D, 2D or 3D");
  std::vector<std::string> out;
  for (const auto& s : registry(showcase)) {
    if (!s.outcome && static_cast<int>(s.ablation_tier) <= static_cast<int>(tier)) {
      out.push_back(s.name);
    }
  }
  return out;
}

Design design_matrix(const FeatureTable& table, std::span<const std::string> columns,
                     bool drop_first) {
  Design d;
  std::size_t width = 0;
  for (const auto& name : columns) {
    const auto& s = table.spec(name);
    width += s.categorical() ? s.levels.size() - (drop_first ? 1 : 0) : 1;
  }
  const auto n = static_cast<Eigen::Index>(table.rows());
  d.x = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(width));
  Eigen::Index c = 0;
  for (const auto& name : columns) {
    const auto& s = table.spec(name);
    const auto& col = table.column(name);
    if (!s.categorical()) {
      for (Eigen::Index i = 0; i < n; ++i) d.x(i, c) = col[static_cast<std::size_t>(i)];
      d.names.push_back(name);
      ++c;
      continue;
    }
    const std::size_t first = drop_first ? 1 : 0;
    for (std::size_t l = first; l < s.levels.size(); ++l) {
      for (Eigen::Index i = 0; i < n; ++i) {
        d.x(i, c) = col[static_cast<std::size_t>(i)] == static_cast<double>(l) ? 1.0 : 0.0;
      }
      d.names.push_back(name + "=" + s.levels[l]);
      ++c;
    }
  }
  return d;
}

std::vector<geo::Point3> site_coordinates(const FeatureTable& table) {
  const auto& lat = table.column("latitude");
  const auto& lon = table.column("longitude");
  const auto elev = table.find("elevation");
  double mlat = 0.0, mlon = 0.0;
  for (std::size_t i = 0; i < lat.size(); ++i) {
    mlat += lat[i];
    mlon += lon[i];
  }
  const double n = static_cast<double>(std::max<std::size_t>(lat.size(), 1));
  const GeoOrigin origin{mlat / n, mlon / n};
  std::vector<geo::Point3> out(lat.size());
  for (std::size_t i = 0; i < lat.size(); ++i) {
    const auto p = to_local(origin, {lat[i], lon[i]});
    out[i] = {p.x, p.y, elev ? table.column(*elev)[i] : 0.0};
  }
  return out;
}

// ---------------------------------------------------------------------------
// Persistence

void write_csv(std::ostream& os, const FeatureTable& table) {
  os << "id";
  for (const auto& s : table.specs()) os << ',' << s.name;
  os << '\n';
  for (std::size_t i = 0; i < table.rows(); ++i) {
    os << csv::quote(table.ids()[i]);
    for (std::size_t j = 0; j < table.cols(); ++j) {
      const auto& s = table.specs()[j];
      const double v = table.column(j)[i];
      os << ',';
      if (s.categorical()) {
        os << csv::quote(s.levels[static_cast<std::size_t>(v)]);
      } else {
        os << format_double(v);
      }
    }
    os << '\n';
  }
}

FeatureTable read_csv(std::istream& is, const std::string& source, Showcase showcase,
                      std::vector<ColumnSpec> specs) {
  FeatureTable table(showcase, std::move(specs));
  std::string line;
  std::size_t line_no = 0;
  if (!csv::next_line(is, line, line_no)) throw InputError(source + ": empty feature file");
  const auto header = csv::split(line);
  if (header.size() != table.cols() + 1 || header[0] != "id") {
    throw InputError(source + ":1: header does not match the schema");
  }
  for (std::size_t j = 0; j < table.cols(); ++j) {
    if (header[j + 1] != table.specs()[j].name) {
      throw InputError(source + ":1: expected column '" + table.specs()[j].name + "', found '" +
                       header[j + 1] + "'");
    }
  }
  std::vector<double> row(table.cols());
  while (csv::next_line(is, line, line_no)) {
    const auto fields = csv::split(line);
    const std::string where = source + ":" + std::to_string(line_no);
    if (fields.size() != header.size()) {
      throw InputError(where + ": expected " + std::to_string(header.size()) + " fields, found " +
                       std::to_string(fields.size()));
    }
    for (std::size_t j = 0; j < table.cols(); ++j) {
      const auto& s = table.specs()[j];
      if (s.categorical()) {
        row[j] = level_code(s.levels, fields[j + 1], where + " field " + s.name);
      } else {
        const auto v = parse_double(fields[j + 1]);
        if (!v || !std::isfinite(*v)) {
          throw InputError(where + " field " + s.name + ": invalid number '" + fields[j + 1] + "'");
        }
        row[j] = *v;
      }
    }
    table.add_row(fields[0], row);
  }
  return table;
}

void write_schema(std::ostream& os, const FeatureTable& table) {
  os << "# urban3d feature schema\n";
  os << "format = 1\n";
  os << "showcase = " << to_string(table.showcase()) << '\n';
  os << "rows = " << table.rows() << '\n';
  for (const auto& s : table.specs()) {
    const std::string k = "column." + s.name + ".";
    os << "column = " << s.name << '\n';
    os << k << "tier = " << to_string(s.dim) << '\n';
    os << k << "kind = " << to_string(s.kind) << '\n';
    os << k << "unit = " << s.unit << '\n';
    os << k << "type = " << (s.categorical() ? "categorical" : "numeric") << '\n';
    if (s.categorical()) {
      os << k << "levels = ";
      for (std::size_t l = 0; l < s.levels.size(); ++l) os << (l ? "|" : "") << s.levels[l];
      os << '\n';
    }
    os << k << "role = " << (s.outcome ? "outcome" : "feature") << '\n';
    if (!s.outcome) os << k << "ablation = " << to_string(s.ablation_tier) << '\n';
  }
}

std::pair<Showcase, std::vector<ColumnSpec>> read_schema(std::istream& is, const std::string& source) {
  std::optional<Showcase> showcase;
  std::vector<ColumnSpec> specs;
  std::string line;
  std::size_t line_no = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(is, line)) {
    ++line_no;
    const std::string where = source + ":" + std::to_string(line_no);
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw InputError(where + ": expected 'key = value'");
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key == "format") {
      if (value != "1") throw InputError(where + ": unsupported schema format " + value);
    } else if (key == "showcase") {
      showcase = parse_showcase(value);
    } else if (key == "rows") {
      // informational
    } else if (key == "column") {
      ColumnSpec s;
      s.name = value;
      specs.push_back(s);
    } else if (key.rfind("column.", 0) == 0) {
      const auto dot = key.rfind('.');
      const std::string name = key.substr(7, dot - 7);
      const std::string attr = key.substr(dot + 1);
      if (specs.empty() || specs.back().name != name) {
        throw InputError(where + ": attribute for undeclared column '" + name + "'");
      }
      auto& s = specs.back();
      if (attr == "tier") {
        s.dim = parse_dim(value);
      } else if (attr == "kind") {
        s.kind = parse_kind(value);
      } else if (attr == "unit") {
        s.unit = value;
      } else if (attr == "type") {
        if (value != "numeric" && value != "categorical") throw InputError(where + ": bad type");
      } else if (attr == "levels") {
        s.levels.clear();
        std::size_t start = 0;
        while (true) {
          const auto bar = value.find('|', start);
          s.levels.push_back(value.substr(start, bar - start));
          if (bar == std::string::npos) break;
          start = bar + 1;
        }
      } else if (attr == "role") {
        s.outcome = value == "outcome";
      } else if (attr == "ablation") {
        s.ablation_tier = parse_dim(value);
      } else {
        throw InputError(where + ": unknown attribute '" + attr + "'");
      }
    } else {
      throw InputError(where + ": unknown key '" + key + "'");
    }
  }
  if (!showcase) throw InputError(source + ": schema lacks a showcase");
  const auto expected = registry(*showcase);
  if (expected.size() != specs.size()) {
    throw InputError(source + ": column set does not match the " + to_string(*showcase) + " registry");
  }
  for (std::size_t j = 0; j < specs.size(); ++j) {
    const auto& e = expected[j];
    const auto& s = specs[j];
    if (e.name != s.name || e.dim != s.dim || e.kind != s.kind || e.outcome != s.outcome ||
        (!e.levels.empty() && e.levels != s.levels)) {
      throw InputError(source + ": column '" + s.name + "' does not match the registry");
    }
  }
  return {*showcase, specs};
}

}  // namespace urban3d::feat
