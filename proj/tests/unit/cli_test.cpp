#include <filesystem>
#include <map>
#include <sstream>

#include "doctest.h"
#include "urban3d/cli.hpp"
#include "urban3d/io.hpp"

using namespace urban3d;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "urban3d");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("urban3d_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// File contents keyed by name. Manifests lose the wall clock and the echoed
// options, which hold the run directory.
std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    std::string text = io::read_text(e.path());
    const std::string name = e.path().filename().string();
    if (name.find("manifest.json") != std::string::npos) {
      io::Json doc = io::Json::parse(text);
      doc.erase("wall_clock_s");
      doc.erase("config");
      text = io::dump(doc);
    }
    files[name] = text;
  }
  return files;
}

// gen-city, irradiance, shadow-map, features and ablate into `dir`.
void pipeline(const fs::path& dir, const std::string& threads) {
  const std::string d = dir.string();
  REQUIRE(run({"gen-city", "--seed", "7", "--buildings", "40", "--out-dir", d}).code == 0);
  REQUIRE(run({"irradiance", "--city", d + "/city.json", "--weather", d + "/weather.csv", "--out",
               d + "/irr.csv", "--samples", "1", "--threads", threads})
              .code == 0);
  REQUIRE(run({"shadow-map", "--city", d + "/city.json", "--time", "2023-06-21T07:00:00Z", "--res",
               "4", "--out", d + "/shadow"})
              .code == 0);
  REQUIRE(run({"features", "--city", d + "/city.json", "--showcase", "rent", "--out",
               d + "/rent.csv"})
              .code == 0);
  REQUIRE(run({"features", "--city", d + "/city.json", "--showcase", "pv", "--irradiance",
               d + "/irr.csv", "--truth", d + "/truth.json", "--out", d + "/pv.csv"})
              .code == 0);
  REQUIRE(run({"ablate", "--features", d + "/rent.csv", "--models", "OLS,RF", "--trees", "20",
               "--threads", threads, "--out", d + "/report"})
              .code == 0);
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("exit codes") {
    const fs::path dir = fresh_dir("codes");
    const std::string d = dir.string();
    CHECK(run({}).code == 2);
    CHECK(run({"frobnicate"}).code == 2);
    CHECK(run({"gen-city", "--buildings", "2", "--out-dir", d}).code == 2);
    CHECK(run({"gen-city", "--buildings", "x", "--out-dir", d}).code == 2);
    CHECK(run({"irradiance", "--city", d + "/none.json", "--weather", d + "/none.csv", "--out",
               d + "/irr.csv"})
              .code == 3);

    REQUIRE(run({"gen-city", "--seed", "1", "--buildings", "5", "--out-dir", d}).code == 0);
    CHECK(run({"shadow-map", "--city", d + "/city.json", "--time", "2023-12-21T23:00:00Z", "--out",
               d + "/night"})
              .code == 2);
    CHECK(run({"features", "--city", d + "/city.json", "--showcase", "pv", "--out", d + "/pv.csv"})
              .code == 2);
    CHECK(run({"features", "--city", d + "/city.json", "--showcase", "pizza", "--out",
               d + "/x.csv"})
              .code == 2);
    io::write_text(dir / "broken.json", "{\"format\": \"urban3d-city\"");
    CHECK(run({"features", "--city", d + "/broken.json", "--showcase", "rent", "--out",
               d + "/x.csv"})
              .code == 2);
    fs::remove_all(dir);
  }

  TEST_CASE("ablate reports a failing cell with exit 4") {
    const fs::path dir = fresh_dir("model");
    const std::string d = dir.string();
    REQUIRE(run({"gen-city", "--seed", "2", "--buildings", "4", "--out-dir", d}).code == 0);
    REQUIRE(run({"features", "--city", d + "/city.json", "--showcase", "rent", "--out",
                 d + "/rent.csv"})
                .code == 0);
    // Too few rows for the spatial model.
    const Result r = run({"ablate", "--features", d + "/rent.csv", "--models", "SEM", "--out",
                          d + "/report"});
    CHECK(r.code == 4);
    CHECK(r.err.find("SEM") != std::string::npos);
    fs::remove_all(dir);
  }

  TEST_CASE("reruns and thread counts give identical files") {
    const fs::path a = fresh_dir("det_a"), b = fresh_dir("det_b"), c = fresh_dir("det_c");
    pipeline(a, "1");
    pipeline(b, "1");
    pipeline(c, "8");
    const auto sa = snapshot(a), sb = snapshot(b), sc = snapshot(c);
    CHECK(sa.size() >= 15);
    CHECK(sb.size() == sa.size());
    for (const auto& [name, text] : sa) {
      CAPTURE(name);
      CHECK(sb.at(name) == text);
      if (name.find("manifest.json") == std::string::npos) CHECK(sc.at(name) == text);
    }
    const io::Json manifest = io::Json::parse(io::read_text(a / "manifest.json"));
    CHECK(manifest["command"] == "gen-city");
    CHECK(manifest.contains("wall_clock_s"));
    CHECK(manifest["outputs"].size() == 3);
    CHECK(manifest["outputs"].contains("city.json"));
    const std::string md = io::read_text(a / "report.md");
    CHECK(md.find("| Intercept") != std::string::npos);
    for (const auto& p : {a, b, c}) fs::remove_all(p);
  }

  TEST_CASE("config file values yield to flags") {
    const fs::path dir = fresh_dir("config");
    const std::string d = dir.string();
    io::write_text(dir / "gen.json", "{\"seed\": 3, \"buildings\": 6}");
    REQUIRE(run({"gen-city", "--config", d + "/gen.json", "--buildings", "4", "--out-dir", d})
                .code == 0);
    const io::Json city = io::Json::parse(io::read_text(dir / "city.json"));
    CHECK(city["buildings"].size() == 4);
    const io::Json manifest = io::Json::parse(io::read_text(dir / "manifest.json"));
    CHECK(manifest.dump().find("\"seed\"") != std::string::npos);
    fs::remove_all(dir);
  }
}
