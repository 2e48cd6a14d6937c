#include "urban3d/cli.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "urban3d/ablation.hpp"
#include "urban3d/cityforge.hpp"
#include "urban3d/error.hpp"
#include "urban3d/features.hpp"
#include "urban3d/io.hpp"
#include "urban3d/numfmt.hpp"
#include "urban3d/random.hpp"
#include "urban3d/shadow_map.hpp"
#include "urban3d/solar.hpp"

namespace urban3d::cli {

namespace fs = std::filesystem;
using io::Json;

namespace {

// Lets `--config file.json` supply any option of the subcommand; values
// given on the command line take precedence.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App*, bool, bool, std::string) const override { return "{}\n"; }

  std::vector<CLI::ConfigItem> from_config(std::istream& is) const override {
    Json doc;
    try {
      doc = Json::parse(is);
    } catch (const Json::parse_error& e) {
      throw CLI::ConversionError("config file: malformed JSON: " + std::string(e.what()));
    }
    if (!doc.is_object()) throw CLI::ConversionError("config file: top level must be an object");
    std::vector<CLI::ConfigItem> items;
    for (const auto& [key, value] : doc.items()) {
      CLI::ConfigItem item;
      item.name = key;
      auto text = [](const Json& v) {
        if (v.is_string()) return v.get<std::string>();
        if (v.is_boolean()) return std::string(v.get<bool>() ? "true" : "false");
        return v.dump();
      };
      if (value.is_array()) {
        for (const auto& v : value) item.inputs.push_back(text(v));
      } else {
        item.inputs.push_back(text(value));
      }
      items.push_back(std::move(item));
    }
    return items;
  }
};

struct Run {
  std::string command;
  Json config = Json::object();
  Json seeds = Json::object();
  Json inputs = Json::object();
  Json outputs = Json::object();
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  void input(const fs::path& p) { inputs[p.generic_string()] = io::sha256_file(p); }
  void output(const fs::path& p, const std::string& text) {
    io::write_text(p, text);
    outputs[p.generic_string()] = io::sha256_bytes(text);
  }
  void finish(const fs::path& manifest) {
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    Json doc;
    doc["command"] = command;
    doc["version"] = io::kVersion;
    doc["artifacts"] = {{"city_format", io::kCityFormatVersion}, {"model_format", 1}};
    doc["config"] = config;
    doc["seeds"] = seeds;
    // Paths are stored relative to the manifest so reruns elsewhere compare equal.
    const fs::path base = fs::absolute(manifest).parent_path();
    const auto relative = [&](const Json& files) {
      Json rel = Json::object();
      for (const auto& [k, v] : files.items()) {
        rel[fs::absolute(k).lexically_normal().lexically_relative(base).generic_string()] = v;
      }
      return rel;
    };
    doc["inputs"] = relative(inputs);
    doc["outputs"] = relative(outputs);
    doc["wall_clock_s"] = secs;
    io::write_text(manifest, io::dump(doc));
  }
};

Json echo_options(const CLI::App& app) {
  Json out = Json::object();
  for (const CLI::Option* opt : app.get_options()) {
    if (opt->get_lnames().empty()) continue;
    const std::string& name = opt->get_lnames().front();
    if (name == "help" || name == "config") continue;
    std::string value;
    if (opt->count() > 0) {
      for (const auto& r : opt->results()) value += (value.empty() ? "" : ",") + r;
    } else {
      value = opt->get_default_str();
    }
    out[name] = value;
  }
  return out;
}

fs::path with_suffix(const fs::path& p, const std::string& suffix) { return fs::path(p.string() + suffix); }

forge::PvLabelConfig pv_labels_from_truth(const fs::path& path) {
  Json doc;
  try {
    doc = Json::parse(io::read_text(path));
  } catch (const Json::parse_error& e) {
    throw InputError(path.string() + ": malformed JSON: " + e.what());
  }
  try {
    const Json& pv = doc.at("pv");
    forge::PvLabelConfig c;
    c.seed = pv.at("seed").get<std::uint64_t>();
    c.base_rate = pv.at("base_rate").get<double>();
    c.gp_sigma2 = pv.at("gp_sigma2").get<double>();
    c.gp_phi = pv.at("gp_phi").get<double>();
    for (const auto& [k, v] : pv.at("coefficients").items()) c.coefficients[k] = v.get<double>();
    forge::validate_config(c);
    return c;
  } catch (const Json::exception& e) {
    throw InputError(path.string() + ": truth sidecar: " + e.what());
  }
}

// --- commands --------------------------------------------------------------

struct GenCityArgs {
  forge::CityConfig city;
  int year = 2023;
  std::string out_dir;
};

void cmd_gen_city(const GenCityArgs& a, Run& run, std::ostream& out) {
  // Density terciles downstream need at least three buildings.
  if (a.city.n_buildings < 3) throw InputError("gen-city: --buildings must be at least 3");
  const fs::path dir(a.out_dir);
  CityModel city = forge::gen_city(a.city);
  const auto rent = forge::default_rent_labels(derive_seed(a.city.seed, 0xA1));
  const auto pv = forge::default_pv_labels(derive_seed(a.city.seed, 0xA2));
  forge::label_rents(city, rent);
  const std::uint64_t weather_seed = derive_seed(a.city.seed, 0xA3);
  const auto weather = forge::gen_weather(weather_seed, city.origin.lat_deg, city.origin.lon_deg, a.year);

  run.seeds = {{"city", a.city.seed}, {"weather", weather_seed}, {"rent_labels", rent.seed}, {"pv_labels", pv.seed}};
  run.output(dir / "city.json", io::dump(io::city_to_json(city)));
  std::ostringstream w;
  io::write_weather(w, weather);
  run.output(dir / "weather.csv", w.str());
  run.output(dir / "truth.json", io::dump(io::truth_to_json(a.city, rent, pv, weather_seed, a.year)));
  run.finish(dir / "manifest.json");
  std::size_t roofs = 0, dwellings = 0;
  for (const auto& b : city.buildings) {
    roofs += b.roofs.size();
    dwellings += b.dwellings.size();
  }
  out << "wrote " << (dir / "city.json").string() << ": " << city.buildings.size() << " buildings, " << roofs
      << " roof surfaces, " << dwellings << " dwellings\n";
}

struct IrradianceArgs {
  std::string city;
  std::string weather;
  std::string out;
  int samples = 4;
  double albedo = 0.2;
  unsigned threads = 1;
};

void cmd_irradiance(const IrradianceArgs& a, Run& run, std::ostream& out) {
  const CityModel city = io::read_city(a.city);
  run.input(a.city);
  std::ifstream ws(a.weather, std::ios::binary);
  if (!ws) throw IoError("cannot open " + a.weather);
  const auto weather = io::read_weather(ws, a.weather);
  run.input(a.weather);
  solar::validate_against_sun(weather, city.origin.lat_deg, city.origin.lon_deg);
  solar::IrradianceConfig cfg;
  cfg.samples_per_surface = a.samples;
  cfg.albedo = a.albedo;
  solar::validate_config(cfg);

  std::vector<geo::Polygon3> roofs;
  for (const auto& b : city.buildings) roofs.insert(roofs.end(), b.roofs.begin(), b.roofs.end());
  const solar::ShadingScene scene(city.scene_mesh());
  const auto rows = solar::annual_irradiance(roofs, scene, weather, city.origin.lat_deg, city.origin.lon_deg, cfg,
                                             a.threads);
  std::ostringstream os;
  io::write_irradiance(os, city, rows);
  run.output(a.out, os.str());
  run.finish(with_suffix(a.out, ".manifest.json"));
  out << "wrote " << a.out << ": " << rows.size() << " roof surfaces, " << scene.mesh().size()
      << " scene triangles\n";
}

struct ShadowArgs {
  std::string city;
  std::string time;
  double res = 1.0;
  std::string out;
};

void cmd_shadow_map(const ShadowArgs& a, Run& run, std::ostream& out) {
  const CityModel city = io::read_city(a.city);
  run.input(a.city);
  const Timestamp t = parse_rfc3339(a.time);
  const auto raster = solar::shadow_map(city, t, city.origin.lat_deg, city.origin.lon_deg, a.res);
  std::string prefix = a.out;
  for (const char* ext : {".pgm", ".svg"}) {
    if (prefix.size() > 4 && prefix.compare(prefix.size() - 4, 4, ext) == 0) prefix.resize(prefix.size() - 4);
  }
  std::ostringstream pgm, svg;
  solar::write_pgm(pgm, raster);
  solar::write_svg(svg, raster);
  run.output(prefix + ".pgm", pgm.str());
  run.output(prefix + ".svg", svg.str());
  run.finish(prefix + ".manifest.json");
  out << "wrote " << prefix << ".pgm/.svg: " << raster.nx << "x" << raster.ny << " cells, "
      << raster.count(solar::CellState::Shaded) << " shaded, sun elevation "
      << format_double(raster.sun.elevation_deg) << " deg\n";
}

struct FeaturesArgs {
  std::string city;
  std::string irradiance;
  std::string showcase;
  std::string truth;
  std::string out;
  double density_radius = 250.0;
};

fs::path schema_path(const fs::path& csv) {
  fs::path p = csv;
  return p.replace_extension(".schema");
}

void cmd_features(const FeaturesArgs& a, Run& run, std::ostream& out) {
  const feat::Showcase showcase = feat::parse_showcase(a.showcase);
  if (showcase == feat::Showcase::Pv && a.irradiance.empty()) {
    throw InputError("features: --irradiance is required for the pv showcase");
  }
  const CityModel city = io::read_city(a.city);
  run.input(a.city);
  feat::FeatureTable table;
  if (showcase == feat::Showcase::Rent) {
    table = feat::rent_table(city);
  } else {
    std::ifstream is(a.irradiance, std::ios::binary);
    if (!is) throw IoError("cannot open " + a.irradiance);
    const auto irr = io::read_irradiance(is, a.irradiance);
    run.input(a.irradiance);
    forge::PvLabelConfig labels = forge::default_pv_labels(1);
    if (!a.truth.empty()) {
      labels = pv_labels_from_truth(a.truth);
      run.input(a.truth);
    }
    run.seeds["pv_labels"] = labels.seed;
    const auto adopted = forge::label_pv(city, irr, labels);
    table = feat::pv_table(city, irr, adopted.adopted, a.density_radius);
  }
  table.validate();
  std::ostringstream csv, schema;
  feat::write_csv(csv, table);
  feat::write_schema(schema, table);
  run.output(a.out, csv.str());
  run.output(schema_path(a.out), schema.str());
  run.finish(with_suffix(a.out, ".manifest.json"));
  out << "wrote " << a.out << ": " << table.rows() << " rows, " << table.cols() << " columns\n";
}

struct AblateArgs {
  std::string features;
  std::string schema;
  std::string showcase;
  std::vector<std::string> models;
  std::uint64_t seed = 1;
  std::string out;
  unsigned threads = 1;
  int trees = 500;
  int sem_restarts = 3;
  std::size_t sem_knots = 0;
  double test_fraction = 0.2;
};

void cmd_ablate(const AblateArgs& a, Run& run, std::ostream& out) {
  const fs::path schema = a.schema.empty() ? schema_path(a.features) : fs::path(a.schema);
  std::ifstream ss(schema, std::ios::binary);
  if (!ss) throw IoError("cannot open " + schema.string());
  auto [showcase, specs] = feat::read_schema(ss, schema.string());
  run.input(schema);
  if (!a.showcase.empty() && feat::parse_showcase(a.showcase) != showcase) {
    throw InputError("ablate: --showcase " + a.showcase + " does not match the schema (" +
                     feat::to_string(showcase) + ")");
  }
  std::ifstream fs_in(a.features, std::ios::binary);
  if (!fs_in) throw IoError("cannot open " + a.features);
  const feat::FeatureTable table = feat::read_csv(fs_in, a.features, showcase, std::move(specs));
  run.input(a.features);

  eval::AblationConfig cfg;
  cfg.models = a.models;
  cfg.seed = a.seed;
  cfg.threads = a.threads;
  cfg.rf_trees = a.trees;
  cfg.sem_restarts = a.sem_restarts;
  cfg.sem_knots = a.sem_knots;
  cfg.split.test_fraction = a.test_fraction;
  run.seeds["ablation"] = a.seed;
  const auto report = eval::run_ablation(table, cfg);
  std::string prefix = a.out;
  for (const char* ext : {".csv", ".md"}) {
    const std::string e(ext);
    if (prefix.size() > e.size() && prefix.compare(prefix.size() - e.size(), e.size(), e) == 0) {
      prefix.resize(prefix.size() - e.size());
    }
  }
  const std::string md = eval::render_markdown(report);
  run.output(prefix + ".csv", eval::render_csv(report));
  run.output(prefix + ".md", md);
  run.finish(prefix + ".manifest.json");
  out << md;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"3D urban analytics: synthetic cities, solar irradiance, features and model ablation"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Expand all help");
  const auto formatter = std::make_shared<JsonConfig>();
  auto add = [&](const std::string& name, const std::string& help) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->config_formatter(formatter);
    sub->set_config("--config", "", "JSON object of option values; command-line flags win");
    return sub;
  };

  GenCityArgs gen;
  CLI::App* gen_cmd = add("gen-city", "Generate a synthetic city, weather year and ground-truth sidecar");
  gen_cmd->add_option("--seed", gen.city.seed, "Generator seed")->capture_default_str();
  gen_cmd->add_option("--buildings", gen.city.n_buildings, "Number of buildings (>= 3)")->capture_default_str();
  gen_cmd->add_option("--extent", gen.city.extent_m, "City side length in m (0: automatic)")->capture_default_str();
  gen_cmd->add_option("--terrain-amplitude", gen.city.terrain_amplitude_m, "Terrain relief in m")
      ->capture_default_str();
  gen_cmd->add_option("--year", gen.year, "Weather year (UTC)")->capture_default_str();
  gen_cmd->add_option("--out-dir", gen.out_dir, "Output directory")->required();

  IrradianceArgs irr;
  CLI::App* irr_cmd = add("irradiance", "Annual ray-traced irradiance and PV potential per roof surface");
  irr_cmd->add_option("--city", irr.city, "City JSON file")->required();
  irr_cmd->add_option("--weather", irr.weather, "Weather CSV file")->required();
  irr_cmd->add_option("--out", irr.out, "Output CSV file")->required();
  irr_cmd->add_option("--samples", irr.samples, "Sample points per surface")->capture_default_str();
  irr_cmd->add_option("--albedo", irr.albedo, "Ground reflectance")->capture_default_str();
  irr_cmd->add_option("--threads", irr.threads, "Worker threads")->capture_default_str();

  ShadowArgs sh;
  CLI::App* sh_cmd = add("shadow-map", "Render beam shadows at one instant as PGM and SVG");
  sh_cmd->add_option("--city", sh.city, "City JSON file")->required();
  sh_cmd->add_option("--time", sh.time, "UTC instant, e.g. 2023-06-21T07:00:00Z")->required();
  sh_cmd->add_option("--res", sh.res, "Cell size in m")->capture_default_str();
  sh_cmd->add_option("--out", sh.out, "Output path prefix")->required();

  FeaturesArgs fa;
  CLI::App* fa_cmd = add("features", "Extract the feature table of a showcase");
  fa_cmd->add_option("--city", fa.city, "City JSON file")->required();
  fa_cmd->add_option("--irradiance", fa.irradiance, "Irradiance CSV (pv showcase)");
  fa_cmd->add_option("--showcase", fa.showcase, "rent or pv")->required();
  fa_cmd->add_option("--truth", fa.truth, "Ground-truth sidecar with the PV label model");
  fa_cmd->add_option("--density-radius", fa.density_radius, "Building density radius in m")->capture_default_str();
  fa_cmd->add_option("--out", fa.out, "Output CSV file; the schema goes next to it")->required();

  AblateArgs ab;
  CLI::App* ab_cmd = add("ablate", "Fit every model on every feature tier and report held-out performance");
  ab_cmd->add_option("--features", ab.features, "Feature CSV file")->required();
  ab_cmd->add_option("--schema", ab.schema, "Schema sidecar (default: next to the CSV)");
  ab_cmd->add_option("--showcase", ab.showcase, "Expected showcase (rent or pv)");
  ab_cmd->add_option("--models", ab.models, "Comma-separated model list")->delimiter(',');
  ab_cmd->add_option("--seed", ab.seed, "Split and model seed")->capture_default_str();
  ab_cmd->add_option("--out", ab.out, "Output path prefix for .csv and .md")->required();
  ab_cmd->add_option("--threads", ab.threads, "Worker threads")->capture_default_str();
  ab_cmd->add_option("--trees", ab.trees, "Random forest size")->capture_default_str();
  ab_cmd->add_option("--sem-restarts", ab.sem_restarts, "SEM optimizer restarts")->capture_default_str();
  ab_cmd->add_option("--sem-knots", ab.sem_knots, "SEM knots (0: automatic)")->capture_default_str();
  ab_cmd->add_option("--test-fraction", ab.test_fraction, "Hold-out fraction")->capture_default_str();

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 2;
  }

  Run run;
  try {
    for (CLI::App* sub : app.get_subcommands()) {
      run.command = sub->get_name();
      run.config = echo_options(*sub);
      if (sub == gen_cmd) cmd_gen_city(gen, run, out);
      if (sub == irr_cmd) cmd_irradiance(irr, run, out);
      if (sub == sh_cmd) cmd_shadow_map(sh, run, out);
      if (sub == fa_cmd) cmd_features(fa, run, out);
      if (sub == ab_cmd) cmd_ablate(ab, run, out);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}

}  // namespace urban3d::cli
