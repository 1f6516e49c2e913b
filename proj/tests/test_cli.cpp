// Drives the nlgrade executable end to end.

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string output;
};

Result run(const std::string& args) {
  const auto log = fs::temp_directory_path() / "nlgrade_cli_log.txt";
  const std::string cmd = std::string(NLGRADE_CLI) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  Result r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(log);
  std::stringstream ss;
  ss << in.rdbuf();
  r.output = ss.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<double>> read_csv(const fs::path& p, std::string* header = nullptr) {
  std::ifstream in(p);
  std::string line;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!line.empty() && std::isalpha(static_cast<unsigned char>(line[0]))) {
      if (header) *header = line;
      continue;
    }
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(row);
  }
  return rows;
}

fs::path out_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("nlgrade_cli_" + name);
  fs::remove_all(p);
  return p;
}

const std::string smoke = std::string("--config ") + NLGRADE_CONFIGS + "/smoke.ini";

}  // namespace

TEST(Cli, SmokeRunWritesAllArtifacts) {
  const auto dir = out_dir("smoke");
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = run("optimize " + smoke + " -o " + dir.string());
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_LT(secs, 60.0);
  for (const char* f : {"history.csv", "report.csv", "final.vtk", "rho.pgm", "alpha.pgm",
                        "rho_threshold.pgm", "config.ini", "stage_iter0001_beta1.pgm",
                        "stage_iter0301_beta64.pgm"})
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  // every artifact carries the same config hash
  const std::string hist = slurp(dir / "history.csv");
  const auto pos = hist.find("config_hash=");
  ASSERT_NE(pos, std::string::npos);
  const std::string tag = hist.substr(pos, 12 + 16);
  for (const auto& e : fs::directory_iterator(dir))
    EXPECT_NE(slurp(e.path()).find(tag), std::string::npos) << e.path();
  std::string header;
  const auto rows = read_csv(dir / "history.csv", &header);
  EXPECT_EQ(header, "iter,beta,compliance,volume,change");
  EXPECT_GE(rows.size(), 301u);
}

TEST(Cli, DeterministicAcrossThreadCounts) {
  const auto a = out_dir("det_a"), b = out_dir("det_b");
  ASSERT_EQ(run("optimize " + smoke + " -o " + a.string() + " --threads 1").code, 0);
  ASSERT_EQ(run("optimize " + smoke + " -o " + b.string() + " --threads 3").code, 0);
  for (const char* f : {"history.csv", "rho.pgm", "alpha.pgm", "rho_threshold.pgm", "final.vtk"})
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
}

TEST(Cli, ValidationErrorsExitTwo) {
  const auto dir = out_dir("bad");
  auto r = run("optimize " + smoke + " -o " + dir.string() + " --set filters.delta=6");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find("exceeds half the smallest domain dimension"), std::string::npos) << r.output;
  r = run("optimize " + smoke + " --set filters.nonsense=1");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find("unknown key"), std::string::npos);
  EXPECT_EQ(run("optimize --config /nonexistent/x.ini").code, 2);
  EXPECT_EQ(run("frobnicate").code, 2);
  EXPECT_EQ(run("").code, 2);
}

TEST(Cli, CheckGradients) {
  const auto r = run("check-gradients");
  EXPECT_EQ(r.code, 0) << r.output;
  EXPECT_NE(r.output.find("OK"), std::string::npos);
}

TEST(Cli, Bar1dSweeps) {
  const auto dir = out_dir("bar");
  ASSERT_EQ(run("bar1d --config " + std::string(NLGRADE_CONFIGS) + "/bar1d.ini -o " + dir.string()).code, 0);
  std::string header;
  for (double z : {1.0}) {
    (void)z;
    for (const auto& row : read_csv(dir / "eeff_zeta1.csv", &header)) EXPECT_EQ(row[1], 1.0);
  }
  EXPECT_EQ(header, "t,E_eff,E_surface,E_max");
  for (const char* f : {"eeff_zeta0.csv", "eeff_zeta0.5.csv"}) {
    const auto rows = read_csv(dir / f);
    ASSERT_EQ(rows.size(), 30u);
    for (std::size_t k = 1; k < rows.size(); ++k) EXPECT_GT(rows[k][1], rows[k - 1][1]);
  }
  for (const auto& row : read_csv(dir / "eeff_zeta0.csv"))
    if (row[0] >= 0.8 - 1e-9) EXPECT_NEAR(row[2], 0.5, 2e-3);
  EXPECT_TRUE(fs::exists(dir / "profile_t2_zeta0.csv"));
}

TEST(Cli, SizeEffectTableShape) {
  const auto dir = out_dir("se");
  const auto r = run("size-effect " + smoke + " -o " + dir.string() +
                     " --set studies.scales=1,2 --set optimizer.max_iterations=20");
  ASSERT_EQ(r.code, 0) << r.output;
  std::string header;
  const auto rows = read_csv(dir / "size_effect.csv", &header);
  EXPECT_EQ(rows.size(), 4u);
  EXPECT_NE(header.find("ratio_graded"), std::string::npos);
  // c0 row: delta=0-optimized, delta=0-evaluated, so its plain ratio is 1
  EXPECT_DOUBLE_EQ(rows[0][8], 1.0);
  EXPECT_DOUBLE_EQ(rows[2][8], 1.0);
}

TEST(Cli, MeshDependencyShapeAndMetadata) {
  const auto dir = out_dir("md");
  const auto r = run("mesh-dependency " + smoke + " -o " + dir.string() +
                     " --set studies.levels=2 --set studies.mesh_max_iterations=15");
  ASSERT_EQ(r.code, 0) << r.output;
  const auto rows = read_csv(dir / "mesh_dependency.csv");
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_DOUBLE_EQ(rows[2][1], 0.5 * rows[0][1]);
  const std::string text = slurp(dir / "mesh_dependency.csv");
  EXPECT_NE(text.find("projection=off"), std::string::npos);
  EXPECT_NE(text.find("radius_factor=1.3"), std::string::npos);
  int runs = 0;
  for (const auto& e : fs::directory_iterator(dir)) runs += e.is_directory();
  EXPECT_EQ(runs, 4);
  const std::string cfg = slurp(dir / "level0_delta0" / "config.ini");
  EXPECT_NE(cfg.find("projection=false"), std::string::npos);
}

TEST(Cli, EvaluateStoredDesign) {
  const auto dir = out_dir("ev");
  ASSERT_EQ(run("optimize " + smoke + " -o " + dir.string()).code, 0);
  const auto r = run("evaluate " + smoke + " --design " + (dir / "final.vtk").string() + " --delta 0");
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_NE(r.output.find("compliance"), std::string::npos);
  EXPECT_EQ(run("evaluate " + smoke + " --design " + (dir / "final.vtk").string() + " --field nope").code, 2);
}
