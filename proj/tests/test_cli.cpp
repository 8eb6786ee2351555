#include "magnify/cli.hpp"
#include "magnify/report.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

std::string map_path(const char* name) { return std::string(MAGNIFY_MAPS_DIR) + "/" + name; }

struct Scratch {
  fs::path dir;
  Scratch() {
    dir = fs::temp_directory_path() / ("magnify_cli_test_" + std::to_string(std::random_device{}()));
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
  std::string path(const char* name) const { return (dir / name).string(); }
};

struct Run {
  int code = -1;
  std::string err;
};

// Runs the tool in-process with stdout and stderr captured.
Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  auto* old_out = std::cout.rdbuf(out.rdbuf());
  auto* old_err = std::cerr.rdbuf(err.rdbuf());
  Run r;
  r.code = magnify::cli::run(args);
  std::cout.rdbuf(old_out);
  std::cerr.rdbuf(old_err);
  r.err = err.str();
  return r;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Json load(const std::string& path) { return Json::parse(slurp(path)); }

std::vector<std::pair<double, double>> read_csv(const std::string& path) {
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "scale,value");
  std::vector<std::pair<double, double>> rows;
  while (std::getline(in, line)) {
    const auto comma = line.find(',');
    rows.emplace_back(std::stod(line.substr(0, comma)), std::stod(line.substr(comma + 1)));
  }
  return rows;
}

double regression_slope(const std::vector<std::pair<double, double>>& rows) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& [x, y] : rows) {
    const double lx = std::log(x), ly = std::log(y);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double n = static_cast<double>(rows.size());
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

TEST_CASE("certify on the complex square succeeds with an antipodal note") {
  Scratch s;
  const Run r = run({"certify", "--map", map_path("csq.poly"), "--point", "0,0", "--mode", "quadratic", "--seed", "42",
                     "--out", s.path("r.json")});
  CHECK(r.code == 0);
  const Json j = load(s.path("r.json"));
  const Json& cert = j["results"]["certificate"];
  CHECK(std::abs(cert["regularity"]["margin"].get<double>() - 1.0) <= 1e-6);
  CHECK(std::abs(cert["regularity"]["c_hat"].get<double>() - 1.0) <= 1e-6);
  CHECK(cert["antipodal_note"] == true);
  CHECK(cert["status"] == "certified_up_to_antipodes");
  CHECK(j["outcome"]["exit_code"] == 0);
  CHECK(j["config"]["seed"] == 42);
}

TEST_CASE("certify on coordinate squares is refused at the margin stage") {
  Scratch s;
  const Run r = run({"certify", "--map", map_path("diag.poly"), "--point", "0,0", "--mode", "quadratic", "--out",
                     s.path("r.json")});
  CHECK(r.code == 1);
  const Json j = load(s.path("r.json"));
  const Json& cert = j["results"]["certificate"];
  CHECK(cert["status"] == "refused");
  CHECK(cert["failed_stage"] == 2);
  const auto w = cert["regularity"]["witness"].get<std::vector<double>>();
  CHECK(std::min(std::abs(w[0]), std::abs(w[1])) <= 1e-3);
  CHECK(j["outcome"]["exit_code"] == 1);
}

TEST_CASE("invert on the complex square returns both square roots") {
  Scratch s;
  const Run r = run({"invert", "--map", map_path("csq.poly"), "--point", "0,0", "--target", "0,4", "--out",
                     s.path("r.json")});
  CHECK(r.code == 0);
  const Json j = load(s.path("r.json"));
  const Json& pre = j["results"]["solution"]["preimages"];
  REQUIRE(pre.size() == 2);
  const double root = std::sqrt(2.0);
  for (const auto& p : pre) {
    const auto v = p["point"].get<std::vector<double>>();
    CHECK(std::abs(std::abs(v[0]) - root) <= 1e-7);
    CHECK(std::abs(v[1] - v[0]) <= 1e-7);
  }
  CHECK(pre[0]["point"][0].get<double>() * pre[1]["point"][0].get<double>() < 0.0);
}

TEST_CASE("regular inversion through the tool") {
  Scratch s;
  const Run r = run({"invert", "--map", map_path("quad1d.poly"), "--point", "0", "--target", "0.1", "--out",
                     s.path("r.json")});
  CHECK(r.code == 0);
  const Json j = load(s.path("r.json"));
  CHECK(j["results"]["method"] == "regular");
  const double expected = 0.2 / (1.0 + std::sqrt(1.4));
  CHECK(std::abs(j["results"]["solution"]["preimages"][0]["point"][0].get<double>() - expected) <= 1e-12);
  const Run far = run({"invert", "--map", map_path("quad1d.poly"), "--point", "0", "--target", "10", "--out",
                       s.path("far.json")});
  CHECK(far.code == 1);
  CHECK(fs::exists(s.path("far.json")));
}

TEST_CASE("CSV of the k = 1 remainder on the complex square has log-slope 2") {
  Scratch s;
  const Run r = run({"expand", "--map", map_path("csq.poly"), "--point", "0,0", "--order", "1", "--out",
                     s.path("r.json"), "--csv", s.path("r.csv"), "--series", "remainder"});
  CHECK(r.code == 0);
  const auto rows = read_csv(s.path("r.csv"));
  REQUIRE(rows.size() == 9);
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].first > rows[i - 1].first);
  CHECK(std::abs(regression_slope(rows) - 2.0) <= 0.1);
  // 17 significant digits round-trip exactly.
  const Json j = load(s.path("r.json"));
  for (const auto& p : j["series"]["remainder"]) {
    bool found = false;
    for (const auto& row : rows) found = found || (row.first == p[0].get<double>() && row.second == p[1].get<double>());
    CHECK(found);
  }
}

TEST_CASE("sweep CSV is ascending and the tool reports b") {
  Scratch s;
  const Run r = run({"sweep", "--map", map_path("quad1d.poly"), "--point", "0", "--out", s.path("r.json"), "--csv",
                     s.path("r.csv"), "--series", "sweep"});
  CHECK(r.code == 0);
  const Json j = load(s.path("r.json"));
  CHECK(std::abs(j["results"]["sweep"]["largest_passing"].get<double>() - 0.25) <= 0.02);
  const auto rows = read_csv(s.path("r.csv"));
  REQUIRE(rows.size() == 49);
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].first > rows[i - 1].first);
}

TEST_CASE("falsify reports a finding with exit 1 and a written report") {
  Scratch s;
  const Run r = run({"falsify", "--map", map_path("csq.poly"), "--point", "0,0", "--out", s.path("r.json")});
  CHECK(r.code == 1);
  const Json j = load(s.path("r.json"));
  CHECK(j["results"]["audit"]["clean"] == false);
  const Run clean = run({"falsify", "--map", map_path("quad1d.poly"), "--point", "0", "--radius", "0.25", "--out",
                         s.path("c.json")});
  CHECK(clean.code == 0);
}

TEST_CASE("usage errors exit 2") {
  Scratch s;
  const std::string out = s.path("r.json");
  CHECK(run({}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({"certify", "--map", map_path("nope.poly"), "--point", "0,0", "--out", out}).code == 2);
  CHECK(run({"certify", "--map", map_path("csq.poly"), "--point", "0,x", "--out", out}).code == 2);
  CHECK(run({"certify", "--map", map_path("csq.poly"), "--point", "0,0,0", "--out", out}).code == 2);
  CHECK(run({"certify", "--map", map_path("csq.poly"), "--point", "0,0", "--tol", "-1", "--out", out}).code == 2);
  CHECK(run({"expand", "--map", map_path("csq.poly"), "--point", "0,0", "--csv", s.path("r.csv"), "--out", out}).code ==
        2);
  CHECK(run({"expand", "--map", map_path("csq.poly"), "--point", "0,0", "--csv", s.path("r.csv"), "--series", "",
             "--out", out})
            .code == 2);
  CHECK(run({"expand", "--map", map_path("csq.poly"), "--point", "0,0", "--csv", s.path("r.csv"), "--series",
             "nonsense", "--out", out})
            .code == 2);
  CHECK(run({"falsify", "--map", map_path("csq.poly"), "--point", "0,0", "--samples", "10", "--out", out}).code == 2);
}

TEST_CASE("config files override flags with a notice") {
  Scratch s;
  {
    std::ofstream cfg(s.path("c.json"));
    cfg << R"({"seed": 7, "mode": "first"})";
  }
  const Run r = run({"certify", "--map", map_path("quad1d.poly"), "--point", "0", "--seed", "9", "--config",
                     s.path("c.json"), "--out", s.path("r.json")});
  CHECK(r.code == 0);
  CHECK(r.err.find("notice") != std::string::npos);
  CHECK(r.err.find("seed") != std::string::npos);
  CHECK(load(s.path("r.json"))["config"]["seed"] == 7);

  {
    std::ofstream cfg(s.path("bad.json"));
    cfg << R"({"sede": 7})";
  }
  CHECK(run({"certify", "--map", map_path("quad1d.poly"), "--point", "0", "--config", s.path("bad.json"), "--out",
             s.path("r.json")})
            .code == 2);
  {
    std::ofstream cfg(s.path("type.json"));
    cfg << R"({"seed": "seven"})";
  }
  CHECK(run({"certify", "--map", map_path("quad1d.poly"), "--point", "0", "--config", s.path("type.json"), "--out",
             s.path("r.json")})
            .code == 2);
  {
    std::ofstream cfg(s.path("full.json"));
    cfg << R"({"map": ")" << map_path("csq.poly") << R"(", "point": [0, 0], "mode": "quadratic"})";
  }
  CHECK(run({"certify", "--config", s.path("full.json"), "--out", s.path("r.json")}).code == 0);
}

TEST_CASE("normalized reports are byte-identical across runs") {
  Scratch s;
  const std::vector<std::string> args = {"certify", "--map",   map_path("quad1d.poly"), "--point",
                                         "0",       "--mode",  "first",                 "--normalize",
                                         "--out",   s.path("r.json")};
  REQUIRE(run(args).code == 0);
  const std::string first = slurp(s.path("r.json"));
  REQUIRE(run(args).code == 0);
  CHECK(slurp(s.path("r.json")) == first);
  CHECK(load(s.path("r.json"))["timings"]["normalized"] == true);
}

TEST_CASE("emit_csv rejects empty and unknown series") {
  Json report;
  report["series"] = {{"remainder", {{0.5, 2.0}, {0.25, 1.0}}}};
  std::ostringstream csv;
  magnify::emit_csv(report, "remainder", csv);
  CHECK(csv.str() == "scale,value\n0.25,1\n0.5,2\n");
  std::ostringstream sink;
  CHECK_THROWS_AS(magnify::emit_csv(report, "", sink), magnify::UsageError);
  CHECK_THROWS_AS(magnify::emit_csv(report, "sweep", sink), magnify::UsageError);
}
