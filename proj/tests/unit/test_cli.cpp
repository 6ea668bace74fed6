#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include <nlohmann/json.hpp>

#include "commands.hpp"
#include "svg.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace dynbound::cli;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string sys(const std::string& name) { return std::string(DYNBOUND_SYSTEMS_DIR) + "/" + name; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("dynbound_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string write_system(const std::string& name, const std::string& text) {
    const auto p = dir_ / name;
    std::ofstream(p) << text;
    return p.string();
  }
  std::string out(const std::string& sub = "out") const { return (dir_ / sub).string(); }

  fs::path dir_;
};

std::vector<std::string> last_csv_row(const std::string& text) {
  std::istringstream in(text);
  std::string line, last;
  while (std::getline(in, line)) {
    if (!line.empty()) last = line;
  }
  std::vector<std::string> cells;
  std::stringstream ss(last);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  return cells;
}

}  // namespace

TEST(CliVector, ParsesCommaSeparatedNumbers) {
  EXPECT_EQ(parse_vector("1,2.5,-3"), (std::vector<double>{1, 2.5, -3}));
  EXPECT_EQ(parse_vector(" +1e-3 , 4"), (std::vector<double>{1e-3, 4}));
  EXPECT_THROW(parse_vector("1,,2"), std::invalid_argument);
  EXPECT_THROW(parse_vector("1,a"), std::invalid_argument);
}

TEST(Svg, DecimatesToLimit) {
  std::vector<std::pair<double, double>> pts;
  for (int i = 0; i < 100001; ++i) pts.emplace_back(i, -i);
  const auto d = decimate(pts);
  EXPECT_LE(d.size(), kMaxPolylinePoints);
  EXPECT_EQ(d.front(), pts.front());
  EXPECT_EQ(d.back(), pts.back());
  EXPECT_EQ(decimate({{1, 2}}).size(), 1u);
}

TEST_F(CliTest, SimulateDecayCsv) {
  const auto f = write_system("decay.sys", "dx/dt = -x\n");
  const auto r = run_cli({"simulate", "--system", f, "--x0", "1", "--t1", "1", "--out", out()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto text = slurp(fs::path(out()) / "trajectory.csv");
  EXPECT_EQ(text.substr(0, text.find('\n')), "t,x");
  const auto row = last_csv_row(text);
  EXPECT_EQ(std::stod(row[0]), 1.0);
  EXPECT_NEAR(std::stod(row[1]), std::exp(-1.0), 1e-8);
}

TEST_F(CliTest, SimulateLorenzProjection) {
  const auto r = run_cli({"simulate", "--system", sys("lorenz.sys"), "--x0", "1,1,1", "--t1", "100", "--project",
                          "x,z", "--out", out()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto svg = slurp(fs::path(out()) / "projection.svg");
  EXPECT_NE(svg.find("width=\"800\" height=\"600\""), std::string::npos);
  EXPECT_EQ(svg.find("<script"), std::string::npos);
  std::smatch m;
  ASSERT_TRUE(std::regex_search(svg, m, std::regex(R"(x in \[([^,]+), ([^\]]+)\]; z in \[([^,]+), ([^\]]+)\])")));
  EXPECT_GE(std::stod(m[1]), -25.0);
  EXPECT_LE(std::stod(m[2]), 25.0);
  EXPECT_GE(std::stod(m[3]), 0.0);
  EXPECT_LE(std::stod(m[4]), 50.0);
  const auto polyline = svg.substr(svg.find("<polyline"));
  const auto points = std::count(polyline.begin(), polyline.end(), ',');
  EXPECT_GT(points, 1000);
  EXPECT_LE(points, static_cast<long>(kMaxPolylinePoints));
}

TEST_F(CliTest, MissingFileExitsOne) {
  const auto r = run_cli({"simulate", "--system", (dir_ / "nope.sys").string(), "--out", out()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("cannot open"), std::string::npos);
}

TEST_F(CliTest, ParseErrorExitsOneWithLocation) {
  const auto f = write_system("bad.sys", "dx/dt = x ** y\n");
  const auto r = run_cli({"simulate", "--system", f, "--out", out()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("line 1, column 12"), std::string::npos) << r.err;
  const auto p = run_cli({"refute", "--system", sys("fig1-placeholder.sys")});
  EXPECT_EQ(p.code, 1);
  EXPECT_NE(p.err.find("no equations found"), std::string::npos);
}

TEST_F(CliTest, UsageErrorsExitOne) {
  EXPECT_EQ(run_cli({}).code, 1);
  EXPECT_EQ(run_cli({"simulate"}).code, 1);
  EXPECT_EQ(run_cli({"frobnicate", "--system", sys("lorenz.sys")}).code, 1);
  EXPECT_EQ(run_cli({"simulate", "--system", sys("lorenz.sys"), "--x0", "1,2", "--out", out()}).code, 1);
  EXPECT_EQ(run_cli({"simulate", "--system", sys("lorenz.sys"), "--project", "x,w", "--out", out()}).code, 1);
  EXPECT_EQ(run_cli({"section", "--system", sys("lorenz.sys"), "--plane", "0,0/1", "--out", out()}).code, 1);
  EXPECT_EQ(run_cli({"simulate", "--system", sys("lorenz.sys"), "--tol", "-1"}).code, 1);
  EXPECT_EQ(run_cli({"bounds-check", "--system", sys("lorenz.sys"), "--j", "7", "--out", out()}).code, 1);
  EXPECT_EQ(run_cli({"--help"}).code, 0);
}

TEST_F(CliTest, IntegrationErrorExitsTwo) {
  const auto f = write_system("blow.sys", "dx/dt = x^2\n");
  const auto r = run_cli({"simulate", "--system", f, "--x0", "1", "--t1", "2", "--out", out()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("integration error"), std::string::npos);
  EXPECT_TRUE(fs::exists(fs::path(out()) / "trajectory.csv"));  // partial run is kept
}

TEST_F(CliTest, BoundsCheckEquilibriumHeld) {
  const auto r = run_cli({"bounds-check", "--system", sys("equilibrium.sys"), "--x0", "0,0,0", "--stdout"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json::parse(r.out);
  EXPECT_TRUE(j["forward_holds"].get<bool>());
  EXPECT_TRUE(j["backward_holds"].get<bool>());
  EXPECT_EQ(j["runs"][0]["reports"][0]["component"], 3);
  EXPECT_EQ(j["runs"][0]["reports"][0]["backward_reached"], -50.0);
  EXPECT_FALSE(fs::exists("bounds.json"));
}

TEST_F(CliTest, BoundsCheckLinearFlowUserAsserted) {
  const auto f = write_system("line.sys", "dz/dt = 1\n");
  const auto r =
      run_cli({"bounds-check", "--system", f, "--x0", "0", "--j", "1", "--alpha", "-1", "--out", out()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json::parse(slurp(fs::path(out()) / "bounds.json"));
  EXPECT_EQ(j["certificates"][0]["source"], "user-asserted");
  EXPECT_TRUE(j["forward_holds"].get<bool>());
  EXPECT_TRUE(j["backward_holds"].get<bool>());
  EXPECT_TRUE(j["naive_backward_violated"].get<bool>());
}

TEST_F(CliTest, BoundsCheckClosedOrbit) {
  const auto r = run_cli({"bounds-check", "--system", sys("closed-orbit.sys"), "--x0", "1,0,0", "--t-back",
                          "62.83185307179586", "--t-fwd", "62.83185307179586", "--stdout"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json::parse(r.out);
  EXPECT_TRUE(j["forward_holds"].get<bool>());
  EXPECT_TRUE(j["backward_holds"].get<bool>());
}

TEST_F(CliTest, BoundsCheckFalseAssertionExitsThree) {
  const auto f = write_system("decay.sys", "dx/dt = -x\n");
  const auto r = run_cli({"bounds-check", "--system", f, "--x0", "1", "--j", "1", "--alpha", "5", "--t-back", "1",
                          "--t-fwd", "1", "--out", out()});
  EXPECT_EQ(r.code, 3);
}

TEST_F(CliTest, BoundsCheckWithoutCertificateSkips) {
  const auto r = run_cli({"bounds-check", "--system", sys("lorenz.sys"), "--samples", "1", "--stdout"});
  EXPECT_EQ(r.code, 0);
  EXPECT_TRUE(json::parse(r.out)["certificates"].empty());
  EXPECT_NE(r.err.find("no component"), std::string::npos);
}

TEST_F(CliTest, BoundsCheckSamplesAreSeeded) {
  auto once = [&](const std::string& seed, const std::string& sub) {
    const auto r = run_cli({"bounds-check", "--system", sys("closed-orbit.sys"), "--samples", "4", "--seed", seed,
                            "--t-back", "5", "--t-fwd", "5", "--out", out(sub)});
    EXPECT_EQ(r.code, 0) << r.err;
    return slurp(fs::path(out(sub)) / "bounds.json");
  };
  const auto a = once("7", "a"), b = once("7", "b"), c = once("8", "c");
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  const auto j = json::parse(a);
  ASSERT_EQ(j["runs"].size(), 4u);
  for (const auto& run : j["runs"]) {
    for (double v : run["x0"]) {
      EXPECT_GE(v, -5.0);
      EXPECT_LT(v, 5.0);
    }
  }
}

TEST_F(CliTest, RefuteExamples) {
  const auto eq = run_cli({"refute", "--system", sys("equilibrium.sys"), "--x0", "0,0,0", "--stdout"});
  ASSERT_EQ(eq.code, 0) << eq.err;
  EXPECT_EQ(json::parse(eq.out)["verdict"], "bounded backward orbit found — original Theorem 1 claim falsified");

  const auto ring = run_cli({"refute", "--system", sys("closed-orbit.sys"), "--x0", "1,0,0", "--stdout"});
  ASSERT_EQ(ring.code, 0) << ring.err;
  EXPECT_TRUE(json::parse(ring.out)["falsified"].get<bool>());

  const auto f = write_system("cubic.sys", "dx/dt = 1\ndy/dt = 0\ndz/dt = x^2\n");
  const auto cubic = run_cli({"refute", "--system", f, "--x0", "0,0,5", "--horizon", "100", "--stdout"});
  ASSERT_EQ(cubic.code, 0) << cubic.err;
  EXPECT_EQ(json::parse(cubic.out)["verdict"], "orbit escaped backward — no counterexample from this seed");

  const auto none = run_cli({"refute", "--system", sys("lorenz.sys"), "--stdout"});
  EXPECT_EQ(none.code, 1);
}

TEST_F(CliTest, SectionCsv) {
  const auto r = run_cli({"section", "--system", sys("closed-orbit.sys"), "--x0", "1,0,0", "--plane",
                          "0,0,0/0,1,0/positive", "--iterates", "3", "--out", out()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto text = slurp(fs::path(out()) / "section.csv");
  EXPECT_EQ(text.substr(0, text.find('\n')), "iterate,u,v,t");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 5);

  const auto f = write_system("drift.sys", "dx/dt = 1\ndy/dt = 0\ndz/dt = 0\n");
  const auto nr = run_cli({"section", "--system", f, "--x0", "0,0,0", "--plane", "0,0,0/1,0,0/positive",
                           "--max-time", "5", "--out", out("nr")});
  EXPECT_EQ(nr.code, 2);
}

TEST_F(CliTest, UpoWritesCensusAndOrbits) {
  const auto r = run_cli({"upo", "--system", sys("stuart-landau.sys"), "--x0", "0.5,0.1,0.4", "--plane",
                          "0,0,0/0,1,0/positive", "--iterates", "10", "--k-max", "2", "--transient", "30", "--out",
                          out()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json::parse(slurp(fs::path(out()) / "census.json"));
  ASSERT_EQ(j.size(), 1u);
  EXPECT_EQ(j[0]["stability"], "stable");
  const auto csv = slurp(fs::path(out()) / "orbit_0.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "t,x,y,z");
}

TEST_F(CliTest, LyapunovJsonAndHistory) {
  const auto f = write_system("diag.sys", "dx/dt = -x\ndy/dt = -2*y\ndz/dt = -3*z\n");
  const auto r = run_cli({"lyapunov", "--system", f, "--transient", "0", "--total", "100", "--interval", "0.5",
                          "--out", out()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json::parse(slurp(fs::path(out()) / "lyapunov.json"));
  EXPECT_NEAR(j["exponents"][0].get<double>(), -1.0, 1e-6);
  EXPECT_NEAR(j["exponents"][2].get<double>(), -3.0, 1e-6);
  EXPECT_TRUE(fs::exists(fs::path(out()) / "lyapunov_history.csv"));
}

TEST_F(CliTest, OutputsAreByteIdenticalAcrossRuns) {
  for (const auto& sub : {"a", "b"}) {
    ASSERT_EQ(run_cli({"simulate", "--system", sys("lorenz.sys"), "--t1", "20", "--project", "x,z", "--out", out(sub)})
                  .code,
              0);
    ASSERT_EQ(run_cli({"section", "--system", sys("lorenz.sys"), "--plane", "0,0,27/0,0,1/both", "--transient", "10",
                       "--iterates", "50", "--out", out(sub)})
                  .code,
              0);
  }
  for (const char* name : {"trajectory.csv", "projection.svg", "section.csv"}) {
    EXPECT_EQ(slurp(fs::path(out("a")) / name), slurp(fs::path(out("b")) / name)) << name;
  }
}
