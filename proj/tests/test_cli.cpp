// Runs the ddqkd executable as a subprocess and checks outputs and exit codes.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

#include <gtest/gtest.h>

namespace {

struct CliRun {
  int status = -1;
  std::string out;
};

CliRun run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " " + DDQKD_CLI_PATH + " " + args + " 2>/dev/null";
  CliRun r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe)
    return r;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0)
    r.out.append(buf, n);
  const int st = pclose(pipe);
  r.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

std::filesystem::path temp_file(const std::string& name, const std::string& text) {
  const auto path = std::filesystem::temp_directory_path() / ("ddqkd_cli_test_" + name);
  std::ofstream(path) << text;
  return path;
}

const char* kHonestObs = "p_eta1 = 0.00866393\np_eta2 = 0.00451927\n"
                         "omega_t_eta1 = 1.77777777778\nomega_t_eta2 = 1.77777777778\n"
                         "omega_w_eta1 = 1.77777777778\nomega_w_eta2 = 1.77777777778\n"
                         "distance_km = 50\n";

} // namespace

TEST(Cli, PresetsList) {
  const CliRun r = run("presets list");
  EXPECT_EQ(r.status, 0);
  EXPECT_NE(r.out.find("fig2a"), std::string::npos);
  EXPECT_NE(r.out.find("fig2b"), std::string::npos);
  EXPECT_NE(r.out.find("fig3"), std::string::npos);
  EXPECT_EQ(run("presets show fig3").status, 0);
  EXPECT_EQ(run("presets show nope").status, 1);
}

TEST(Cli, SweepFig2aRowsAndReruns) {
  const CliRun a = run("sweep --preset fig2a");
  ASSERT_EQ(a.status, 0);
  std::size_t lines = 0;
  for (char c : a.out)
    lines += c == '\n';
  EXPECT_EQ(lines, 1u + 21u * 3u);
  EXPECT_EQ(a.out, run("sweep --preset fig2a").out);
  EXPECT_EQ(a.out, run("sweep --preset fig2a", "DDQKD_THREADS=3").out);
  EXPECT_EQ(a.out, run("sweep --preset fig2a --threads 7").out);
}

TEST(Cli, SweepToFile) {
  const auto path = std::filesystem::temp_directory_path() / "ddqkd_cli_test_sweep.csv";
  std::filesystem::remove(path);
  ASSERT_EQ(run("sweep -p fig3 -s grid=0,100 -o " + path.string()).status, 0);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "axis_value,protocol,f_lb,zeta_t_ub,zeta_w_ub,delta_i,mutual_info,holevo_ub");
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run("").status, 1);
  EXPECT_EQ(run("frobnicate").status, 1);
  EXPECT_EQ(run("sweep --preset fig2a --set grid=").status, 1);
  EXPECT_EQ(run("sweep --set colour=red").status, 1);
  EXPECT_EQ(run("sweep --set mu").status, 1);
  EXPECT_EQ(run("sweep --set eta2=1").status, 1);
  EXPECT_EQ(run("sweep --config /nonexistent/file").status, 1);
  EXPECT_EQ(run("validate --set attack=tunnel --set strength=1").status, 1);
  EXPECT_EQ(run("--help").status, 0);
}

TEST(Cli, ConfigFile) {
  const auto cfg = temp_file("cfg", "# custom\nmu = 0.05\ngrid = 0:40:20\nprotocols = detector-decoy\n");
  const CliRun r = run("sweep --config " + cfg.string());
  EXPECT_EQ(r.status, 0);
  EXPECT_NE(r.out.find("40,detector-decoy,"), std::string::npos);
}

TEST(Cli, ValidateHonestAndAttacked) {
  const CliRun honest = run("validate -p fig2a -s n_frames=400000");
  EXPECT_EQ(honest.status, 0);
  EXPECT_NE(honest.out.find("result: PASS"), std::string::npos);
  EXPECT_EQ(honest.out, run("validate -p fig2a -s n_frames=400000", "DDQKD_THREADS=4").out);

  const CliRun pns = run("validate -p fig2a -s n_frames=400000 -s attack=pns-suppress-single -s strength=1");
  EXPECT_EQ(pns.status, 0);
  EXPECT_NE(pns.out.find("result: PASS"), std::string::npos);
}

TEST(Cli, ValidateFailureExitCode) {
  // At a 0.5 sigma threshold this seed lands the F bound above the truth.
  const CliRun r = run("validate -p fig2a -s n_frames=200000 -s sigma_threshold=0.5 -s seed=1 "
                       "-s attack=pns-suppress-single -s strength=0.3 -s distance_km=20");
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.out.find("result: FAIL"), std::string::npos);
}

TEST(Cli, BoundsFromFileAndStdin) {
  const auto obs = temp_file("obs", kHonestObs);
  const CliRun f = run("bounds " + obs.string());
  ASSERT_EQ(f.status, 0);
  EXPECT_NE(f.out.find("f_lb: 0.90"), std::string::npos);
  const CliRun s = run("bounds < " + obs.string());
  EXPECT_EQ(s.out, f.out);
  const CliRun ci = run("bounds --resamples 200 " + obs.string());
  EXPECT_EQ(ci.status, 1); // resampling needs standard errors
}

TEST(Cli, BoundsGuardExitCode) {
  const auto obs = temp_file("obs_bad", "p_eta1 = 0.004\np_eta2 = 0.008\n"
                                        "omega_t_eta1 = 1\nomega_t_eta2 = 1\n"
                                        "omega_w_eta1 = 1\nomega_w_eta2 = 1\n");
  const CliRun r = run("bounds " + obs.string());
  EXPECT_EQ(r.status, 3);
  EXPECT_NE(r.out.find("zeta_t_ub: inf"), std::string::npos);
}
