#include "urban3d/io.hpp"

#include <openssl/evp.h>

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "urban3d/csv.hpp"
#include "urban3d/error.hpp"
#include "urban3d/numfmt.hpp"
#include "urban3d/timeutil.hpp"

namespace urban3d::io {

namespace fs = std::filesystem;

namespace {

Json point3(const geo::Point3& p) { return Json::array({p.x, p.y, p.z}); }

Json polygon_json(const geo::Polygon3& p) {
  Json v = Json::array();
  for (const auto& q : p.vertices) v.push_back(point3(q));
  return Json{{"id", geo::to_underlying(p.surface_id)}, {"vertices", std::move(v)}};
}

// Typed access with the JSON path in every message.
class Cursor {
 public:
  Cursor(const Json& j, std::string path) : j_(j), path_(std::move(path)) {}

  Cursor operator[](const std::string& key) const {
    if (!j_.is_object()) fail("expected an object");
    const auto it = j_.find(key);
    if (it == j_.end()) throw InputError("city: missing field " + path_ + "." + key);
    return Cursor(*it, path_ + "." + key);
  }
  Cursor operator[](std::size_t i) const { return Cursor(j_.at(i), path_ + "[" + std::to_string(i) + "]"); }
  bool has(const std::string& key) const { return j_.is_object() && j_.contains(key); }

  std::size_t size() const {
    if (!j_.is_array()) fail("expected an array");
    return j_.size();
  }
  double number() const {
    if (!j_.is_number()) fail("expected a number");
    const double v = j_.get<double>();
    if (!std::isfinite(v)) fail("non-finite number");
    return v;
  }
  std::uint64_t uint() const {
    if (!j_.is_number_unsigned() && !(j_.is_number_integer() && j_.get<long long>() >= 0)) {
      fail("expected a non-negative integer");
    }
    return j_.get<std::uint64_t>();
  }
  std::string string() const {
    if (!j_.is_string()) fail("expected a string");
    return j_.get<std::string>();
  }
  geo::Point3 point() const {
    if (size() != 3) fail("expected [x, y, z]");
    return {(*this)[0].number(), (*this)[1].number(), (*this)[2].number()};
  }
  geo::Polygon3 polygon() const {
    geo::Polygon3 p;
    const std::uint64_t id = (*this)["id"].uint();
    if (id > 0xFFFFFFFFull) fail("surface id out of range");
    p.surface_id = geo::SurfaceId{static_cast<std::uint32_t>(id)};
    const Cursor v = (*this)["vertices"];
    for (std::size_t i = 0; i < v.size(); ++i) p.vertices.push_back(v[i].point());
    try {
      geo::validate_polygon(p);
    } catch (const InputError& e) {
      fail(e.what());
    }
    return p;
  }
  [[noreturn]] void fail(const std::string& msg) const { throw InputError("city: " + path_ + ": " + msg); }

 private:
  const Json& j_;
  std::string path_;
};

void check_header(const std::vector<std::string>& got, const std::vector<std::string>& want,
                  const std::string& source) {
  if (got != want) {
    std::string w;
    for (const auto& s : want) w += (w.empty() ? "" : ",") + s;
    throw InputError(source + ":1: expected header '" + w + "'");
  }
}

double field_number(const std::vector<std::string>& f, std::size_t k, const std::vector<std::string>& header,
                    const std::string& where) {
  const auto v = parse_double(f[k]);
  if (!v || !std::isfinite(*v)) {
    throw InputError(where + ": field '" + header[k] + "': not a finite number: '" + f[k] + "'");
  }
  return *v;
}

}  // namespace

Json city_to_json(const CityModel& city) {
  Json doc;
  doc["format"] = "urban3d-city";
  doc["version"] = kCityFormatVersion;
  doc["origin"] = {{"lat", city.origin.lat_deg}, {"lon", city.origin.lon_deg}};
  const Terrain& t = city.terrain;
  doc["terrain"] = {{"x0", t.x0}, {"y0", t.y0}, {"spacing", t.spacing}, {"nx", t.nx}, {"ny", t.ny},
                    {"heights", t.heights}};
  Json buildings = Json::array();
  for (const auto& b : city.buildings) {
    Json jb;
    jb["id"] = b.id;
    jb["function"] = b.function;
    Json dw = Json::array();
    for (const auto& d : b.dwellings) {
      Json jd{{"size_m2", d.size_m2}, {"rooms", d.rooms}};
      if (d.rent) jd["rent"] = *d.rent;
      dw.push_back(std::move(jd));
    }
    jb["dwellings"] = std::move(dw);
    jb["roofs"] = Json::array();
    for (const auto& p : b.roofs) jb["roofs"].push_back(polygon_json(p));
    jb["walls"] = Json::array();
    for (const auto& p : b.walls) jb["walls"].push_back(polygon_json(p));
    buildings.push_back(std::move(jb));
  }
  doc["buildings"] = std::move(buildings);
  Json districts = Json::array();
  for (const auto& d : city.districts) {
    Json poly = Json::array();
    for (const auto& v : d.polygon) poly.push_back(Json::array({v.x, v.y}));
    districts.push_back({{"name", d.name},
                         {"municipality", d.municipality},
                         {"neighborhood", d.neighborhood},
                         {"polygon", std::move(poly)}});
  }
  doc["districts"] = std::move(districts);
  return doc;
}

CityModel city_from_json(const Json& doc) {
  const Cursor root(doc, "$");
  if (root["format"].string() != "urban3d-city") root["format"].fail("expected \"urban3d-city\"");
  if (root["version"].uint() != static_cast<std::uint64_t>(kCityFormatVersion)) {
    root["version"].fail("unsupported version");
  }
  CityModel city;
  city.origin.lat_deg = root["origin"]["lat"].number();
  city.origin.lon_deg = root["origin"]["lon"].number();
  if (std::abs(city.origin.lat_deg) > 90.0) root["origin"]["lat"].fail("latitude out of range");
  if (std::abs(city.origin.lon_deg) > 180.0) root["origin"]["lon"].fail("longitude out of range");

  const Cursor t = root["terrain"];
  city.terrain.x0 = t["x0"].number();
  city.terrain.y0 = t["y0"].number();
  city.terrain.spacing = t["spacing"].number();
  city.terrain.nx = t["nx"].uint();
  city.terrain.ny = t["ny"].uint();
  const Cursor h = t["heights"];
  city.terrain.heights.reserve(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) city.terrain.heights.push_back(h[i].number());

  const Cursor bs = root["buildings"];
  for (std::size_t i = 0; i < bs.size(); ++i) {
    const Cursor jb = bs[i];
    Building b;
    const std::uint64_t id = jb["id"].uint();
    if (id > 0xFFFFFFFFull) jb["id"].fail("building id out of range");
    b.id = static_cast<std::uint32_t>(id);
    b.function = jb["function"].string();
    const Cursor dw = jb["dwellings"];
    for (std::size_t k = 0; k < dw.size(); ++k) {
      Dwelling d;
      d.size_m2 = dw[k]["size_m2"].number();
      const std::uint64_t rooms = dw[k]["rooms"].uint();
      if (rooms < 1 || rooms > 100) dw[k]["rooms"].fail("rooms must be in 1..100");
      d.rooms = static_cast<int>(rooms);
      if (dw[k].has("rent")) d.rent = dw[k]["rent"].number();
      b.dwellings.push_back(d);
    }
    const Cursor roofs = jb["roofs"];
    for (std::size_t k = 0; k < roofs.size(); ++k) b.roofs.push_back(roofs[k].polygon());
    const Cursor walls = jb["walls"];
    for (std::size_t k = 0; k < walls.size(); ++k) b.walls.push_back(walls[k].polygon());
    city.buildings.push_back(std::move(b));
  }

  const Cursor ds = root["districts"];
  for (std::size_t i = 0; i < ds.size(); ++i) {
    District d;
    d.name = ds[i]["name"].string();
    d.municipality = ds[i]["municipality"].string();
    d.neighborhood = ds[i]["neighborhood"].string();
    const Cursor poly = ds[i]["polygon"];
    if (poly.size() < 3) poly.fail("district polygon needs at least 3 vertices");
    for (std::size_t k = 0; k < poly.size(); ++k) {
      if (poly[k].size() != 2) poly[k].fail("expected [x, y]");
      d.polygon.push_back({poly[k][0].number(), poly[k][1].number()});
    }
    city.districts.push_back(std::move(d));
  }
  validate_city(city);
  return city;
}

void write_city(const fs::path& path, const CityModel& city) { write_text(path, dump(city_to_json(city))); }

CityModel read_city(const fs::path& path) {
  const std::string text = read_text(path);
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw InputError(path.string() + ": malformed JSON: " + e.what());
  }
  try {
    return city_from_json(doc);
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

void write_weather(std::ostream& os, const solar::WeatherSeries& w) {
  os << "timestamp_utc,ghi_wm2,dhi_wm2,temp_c\n";
  for (const auto& r : w.records()) {
    os << format_rfc3339(r.time) << ',' << format_double(r.ghi) << ',' << format_double(r.dhi) << ','
       << format_double(r.temp_c) << '\n';
  }
}

solar::WeatherSeries read_weather(std::istream& is, const std::string& source) {
  const std::vector<std::string> header = {"timestamp_utc", "ghi_wm2", "dhi_wm2", "temp_c"};
  std::string line;
  std::size_t line_no = 0;
  if (!csv::next_line(is, line, line_no)) throw InputError(source + ": empty weather file");
  check_header(csv::split(line), header, source);
  std::vector<solar::WeatherRecord> recs;
  while (csv::next_line(is, line, line_no)) {
    const auto f = csv::split(line);
    const std::string where = source + ":" + std::to_string(line_no);
    if (f.size() != header.size()) {
      throw InputError(where + ": expected " + std::to_string(header.size()) + " fields, got " +
                       std::to_string(f.size()));
    }
    solar::WeatherRecord r;
    try {
      r.time = parse_rfc3339(f[0]);
    } catch (const InputError& e) {
      throw InputError(where + ": field 'timestamp_utc': " + e.what());
    }
    r.ghi = field_number(f, 1, header, where);
    r.dhi = field_number(f, 2, header, where);
    r.temp_c = field_number(f, 3, header, where);
    if (r.ghi < 0.0 || r.dhi < 0.0 || r.dhi > r.ghi) {
      throw InputError(where + ": irradiance must satisfy 0 <= dhi_wm2 <= ghi_wm2");
    }
    recs.push_back(r);
  }
  if (recs.size() < 2) throw InputError(source + ": weather file needs at least 2 records");
  const auto step = std::chrono::duration_cast<std::chrono::seconds>(recs[1].time - recs[0].time);
  try {
    return solar::WeatherSeries(std::move(recs), step);
  } catch (const InputError& e) {
    throw InputError(source + ": " + e.what());
  }
}

void write_irradiance(std::ostream& os, const CityModel& city, const std::vector<solar::SurfaceIrradiance>& rows) {
  std::map<std::uint32_t, std::uint32_t> owner;
  for (const auto& b : city.buildings) {
    for (const auto& r : b.roofs) owner[geo::to_underlying(r.surface_id)] = b.id;
  }
  os << "surface_id,building_id,poa_kwh_m2,pv_potential_h,shaded_fraction\n";
  for (const auto& r : rows) {
    const auto id = geo::to_underlying(r.surface_id);
    os << id << ',' << owner.at(id) << ',' << format_double(r.poa_annual_kwh_m2) << ','
       << format_double(r.pv_potential_h) << ',' << format_double(r.shaded_fraction) << '\n';
  }
}

std::vector<solar::SurfaceIrradiance> read_irradiance(std::istream& is, const std::string& source) {
  const std::vector<std::string> header = {"surface_id", "building_id", "poa_kwh_m2", "pv_potential_h",
                                           "shaded_fraction"};
  std::string line;
  std::size_t line_no = 0;
  if (!csv::next_line(is, line, line_no)) throw InputError(source + ": empty irradiance file");
  check_header(csv::split(line), header, source);
  std::vector<solar::SurfaceIrradiance> out;
  while (csv::next_line(is, line, line_no)) {
    const auto f = csv::split(line);
    const std::string where = source + ":" + std::to_string(line_no);
    if (f.size() != header.size()) {
      throw InputError(where + ": expected " + std::to_string(header.size()) + " fields, got " +
                       std::to_string(f.size()));
    }
    const double id = field_number(f, 0, header, where);
    if (id < 1 || id > 4294967294.0 || id != std::floor(id)) {
      throw InputError(where + ": field 'surface_id': not a valid surface id");
    }
    solar::SurfaceIrradiance r;
    r.surface_id = geo::SurfaceId{static_cast<std::uint32_t>(id)};
    r.poa_annual_kwh_m2 = field_number(f, 2, header, where);
    r.pv_potential_h = field_number(f, 3, header, where);
    r.shaded_fraction = field_number(f, 4, header, where);
    if (r.pv_potential_h < 0.0 || r.pv_potential_h > 8784.0) {
      throw InputError(where + ": field 'pv_potential_h': out of range");
    }
    if (r.shaded_fraction < 0.0 || r.shaded_fraction > 1.0) {
      throw InputError(where + ": field 'shaded_fraction': must be in [0, 1]");
    }
    out.push_back(r);
  }
  return out;
}

Json truth_to_json(const forge::CityConfig& city, const forge::RentLabelConfig& rent,
                   const forge::PvLabelConfig& pv, std::uint64_t weather_seed, int year) {
  Json doc;
  doc["format"] = "urban3d-truth";
  doc["version"] = 1;
  doc["city"] = {{"seed", city.seed},
                 {"buildings", city.n_buildings},
                 {"extent_m", forge::city_extent(city)},
                 {"terrain_amplitude_m", city.terrain_amplitude_m},
                 {"roof_mix", {{"flat", city.roof_mix.flat}, {"gable", city.roof_mix.gable}, {"hip", city.roof_mix.hip}}},
                 {"district_grid", {city.district_cols, city.district_rows}}};
  doc["weather"] = {{"seed", weather_seed}, {"year", year}};
  Json rc = Json::object();
  for (const auto& [k, v] : rent.coefficients) rc[k] = v;
  doc["rent"] = {{"seed", rent.seed},
                 {"intercept", rent.intercept},
                 {"coefficients", std::move(rc)},
                 {"gp_sigma2", rent.gp_sigma2},
                 {"gp_phi", rent.gp_phi},
                 {"noise_sd", rent.noise_sd},
                 {"floor", rent.floor}};
  Json pc = Json::object();
  for (const auto& [k, v] : pv.coefficients) pc[k] = v;
  doc["pv"] = {{"seed", pv.seed},
               {"coefficients", std::move(pc)},
               {"base_rate", pv.base_rate},
               {"gp_sigma2", pv.gp_sigma2},
               {"gp_phi", pv.gp_phi}};
  return doc;
}

std::string sha256_bytes(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw IoError("SHA-256 computation failed");
  }
  std::string out;
  char buf[3];
  for (unsigned i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", md[i]);
    out += buf;
  }
  return out;
}

std::string sha256_file(const fs::path& path) { return sha256_bytes(read_text(path)); }

void write_text(const fs::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  os.close();
  if (!os) throw IoError("write failed for " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  if (is.bad()) throw IoError("read failed for " + path.string());
  return ss.str();
}

std::string dump(const Json& doc) { return doc.dump(2) + "\n"; }

}  // namespace urban3d::io
