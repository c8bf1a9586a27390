#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "homp/diagnostics.hpp"
#include "homp/experiment.hpp"

using namespace homp;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / fmt::format("homp_test_{}_{}", name, ::getpid());
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  const fs::path path = dir / "config.json";
  std::ofstream(path) << text;
  return path;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<std::string> lines(const fs::path& path) {
  std::ifstream in(path);
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) out.push_back(line);
  return out;
}

int cli(const std::string& command, const fs::path& config, const fs::path& out, std::string* err_text = nullptr,
        int jobs = 1) {
  CliRequest req;
  req.command = command;
  req.config_path = config.string();
  req.out_dir = out.string();
  req.jobs = jobs;
  req.quiet = true;
  std::ostringstream o, e;
  const int code = run_cli(req, o, e);
  if (err_text) *err_text = e.str();
  return code;
}

std::string config_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigurationError& e) {
    return e.what();
  }
  return "";
}

const char* kRotation = R"({"problem":{"kind":"bilinear","A":[[1]]},"methods":[{"name":"homp_p2","T":64}]})";

const char* kCubicCompare = R"({
  "problem": {"kind": "cubic_reg", "n": 3, "seed": 7},
  "methods": [{"name": "mp", "T": [16, 32, 64, 128]}, {"name": "homp_p2", "T": [16, 32, 64, 128]}],
  "monitors": {"sum_bound": true, "band": true}
})";

}  // namespace

TEST(Config, Errors) {
  EXPECT_NE(config_error(R"({"problem":{"kind":"bilinear"},"methods":[]})").find("'methods'"), std::string::npos);
  EXPECT_NE(config_error(R"({"problem":{"kind":"bilinear","foo":1},"methods":[{"name":"mp","T":4}]})")
                .find("'problem.foo'"),
            std::string::npos);
  const std::string syntax = config_error("{\n  \"problem\": {\"kind\": \"bilinear\"},\n  \"methods\": [,]\n}");
  EXPECT_NE(syntax.find("line 3"), std::string::npos) << syntax;
  EXPECT_NE(config_error(R"({"problem":{"kind":"bilinear"},"methods":[{"name":"mp","T":0}]})"), "");
  EXPECT_NE(config_error(R"({"problem":{"kind":"nope"},"methods":[{"name":"mp","T":4}]})"), "");
  EXPECT_NE(config_error(R"({"problem":{"kind":"bilinear","rho":-1},"methods":[{"name":"mp","T":4}]})"), "");
}

TEST(Config, Defaults) {
  const ExperimentConfig c = parse_config(R"({"seed":5,"problem":{"kind":"cubic_reg","n":2},
    "methods":[{"name":"homp_general","p":3,"T":[4,8]}]})");
  EXPECT_EQ(c.problem.seed, 5u);
  EXPECT_EQ(c.methods[0].label(), "homp_general_p3");
  EXPECT_EQ(c.methods[0].T, (std::vector<int>{4, 8}));
  EXPECT_EQ(c.start, StartPolicy::kUnit);
}

TEST(Cli, ConfigErrorExitsTwo) {
  const fs::path dir = scratch("cfg");
  std::string err;
  EXPECT_EQ(cli("solve", write_config(dir, R"({"problem":{"kind":"bilinear"},"methods":[]})"), dir / "out", &err), 2);
  EXPECT_NE(err.find("methods"), std::string::npos);
  EXPECT_EQ(cli("solve", dir / "missing.json", dir / "out"), 2);
  // solve takes exactly one run
  EXPECT_EQ(cli("solve", write_config(dir, kCubicCompare), dir / "out"), 2);
  fs::remove_all(dir);
}

TEST(Cli, SolveRotation) {
  const fs::path dir = scratch("solve");
  ASSERT_EQ(cli("solve", write_config(dir, kRotation), dir / "out"), 0);
  const std::vector<std::string> rows = lines(dir / "out" / "trajectory.csv");
  ASSERT_EQ(rows.size(), 65u);
  EXPECT_EQ(rows[0], "t,gamma_t,step_norm,eg_norm,branch,inner_iters,implicit_residual,fnorm,merit");
  const nlohmann::json summary = nlohmann::json::parse(slurp(dir / "out" / "summary.json"));
  EXPECT_GT(summary["runs"][0]["Gamma_T"].get<double>(), 0.0);
  EXPECT_EQ(summary["runs"][0]["iterations"].get<int>(), 64);
  EXPECT_EQ(summary["exit_status"].get<int>(), 0);
  fs::remove_all(dir);
}

TEST(Cli, CompareSlopesAndRowCounts) {
  const fs::path dir = scratch("compare");
  ASSERT_EQ(cli("compare", write_config(dir, kCubicCompare), dir / "out"), 0);
  const nlohmann::json summary = nlohmann::json::parse(slurp(dir / "out" / "summary.json"));
  ASSERT_EQ(summary["slopes"].size(), 2u);
  const double mp = summary["slopes"]["mp"]["slope"].get<double>();
  const double homp = summary["slopes"]["homp_p2"]["slope"].get<double>();
  EXPECT_LT(homp, mp);

  std::map<std::string, std::vector<RatePoint>> grid;
  for (const nlohmann::json& run : summary["runs"]) {
    const std::vector<std::string> rows = lines(dir / "out" / run["csv"].get<std::string>());
    EXPECT_EQ(static_cast<int>(rows.size()) - 1, run["iterations"].get<int>());
    const std::string& last = rows.back();
    const double merit = std::stod(last.substr(last.rfind(',') + 1));
    EXPECT_DOUBLE_EQ(merit, run["merit"].get<double>());
    grid[run["method"].get<std::string>()].push_back({static_cast<double>(run["T"].get<int>()), merit});
  }
  EXPECT_NEAR(fit_rate(grid["mp"]).slope, mp, 1e-12);
  EXPECT_NEAR(fit_rate(grid["homp_p2"]).slope, homp, 1e-12);

  CliRequest rate;
  rate.command = "rate";
  rate.input_dir = (dir / "out").string();
  rate.quiet = true;
  std::ostringstream o, e;
  ASSERT_EQ(run_cli(rate, o, e), 0) << e.str();
  const nlohmann::json fitted = nlohmann::json::parse(slurp(dir / "out" / "rate.json"));
  EXPECT_NEAR(fitted["homp_p2"]["slope"].get<double>(), homp, 1e-12);
  fs::remove_all(dir);
}

TEST(Cli, Deterministic) {
  const fs::path dir = scratch("det");
  const fs::path config = write_config(dir, kCubicCompare);
  ASSERT_EQ(cli("compare", config, dir / "a"), 0);
  ASSERT_EQ(cli("compare", config, dir / "b", nullptr, 4), 0);
  int compared = 0;
  for (const auto& entry : fs::directory_iterator(dir / "a")) {
    EXPECT_EQ(slurp(entry.path()), slurp(dir / "b" / entry.path().filename())) << entry.path().filename();
    ++compared;
  }
  EXPECT_EQ(compared, 9);
  fs::remove_all(dir);
}

TEST(Cli, NumericalFailureExitsThree) {
  const fs::path dir = scratch("fail");
  const char* text = R"({"problem":{"kind":"cubic_reg","n":2,"seed":1},
    "methods":[{"name":"mp","T":200,"gamma":1e100}]})";
  std::string err;
  EXPECT_EQ(cli("compare", write_config(dir, text), dir / "out", &err), 3);
  EXPECT_NE(err.find("numerical failure"), std::string::npos) << err;
  fs::remove_all(dir);
}

TEST(Cli, MonitorViolationExitsFour) {
  // Mirror Prox with gamma = 3 / L on a rotation breaks the sum bound.
  const fs::path dir = scratch("viol");
  const char* text = R"({"problem":{"kind":"bilinear","A":[[1]]},
    "methods":[{"name":"mp","T":20,"gamma":3}], "monitors":{"sum_bound":true}})";
  std::string err;
  EXPECT_EQ(cli("compare", write_config(dir, text), dir / "out", &err), 4);
  EXPECT_NE(err.find("sum_bound"), std::string::npos) << err;
  fs::remove_all(dir);
}

TEST(Cli, CheckModePasses) {
  const fs::path dir = scratch("check");
  const char* text = R"({"problem":{"kind":"monotone_quadratic","n":4,"seed":3},
    "methods":[{"name":"mp","T":[8,16,32]},{"name":"homp_p2","T":[8,16,32]}]})";
  std::string err;
  EXPECT_EQ(cli("check", write_config(dir, text), dir / "out", &err), 0) << err;
  const nlohmann::json summary = nlohmann::json::parse(slurp(dir / "out" / "summary.json"));
  EXPECT_TRUE(summary.contains("property_checks"));
  fs::remove_all(dir);
}

#ifdef HOMP_CLI_PATH
TEST(Binary, ExitCodesAndEnvOutput) {
  const fs::path dir = scratch("bin");
  const fs::path config = write_config(dir, kRotation);
  const std::string env_out = (dir / "env_out").string();
  const std::string cmd =
      fmt::format("HOMP_OUT_DIR='{}' '{}' solve --config '{}' --quiet", env_out, HOMP_CLI_PATH, config.string());
  int status = std::system(cmd.c_str());
  ASSERT_TRUE(WIFEXITED(status));
  EXPECT_EQ(WEXITSTATUS(status), 0);
  EXPECT_EQ(lines(fs::path(env_out) / "trajectory.csv").size(), 65u);

  status = std::system(fmt::format("'{}' solve --quiet 2>/dev/null", HOMP_CLI_PATH).c_str());
  ASSERT_TRUE(WIFEXITED(status));
  EXPECT_EQ(WEXITSTATUS(status), 2);
  status = std::system(fmt::format("'{}' frobnicate 2>/dev/null", HOMP_CLI_PATH).c_str());
  ASSERT_TRUE(WIFEXITED(status));
  EXPECT_EQ(WEXITSTATUS(status), 2);
  fs::remove_all(dir);
}
#endif
