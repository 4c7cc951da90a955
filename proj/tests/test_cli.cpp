// Exercises the installed binary end to end: exit codes, stderr naming, and
// byte-level reproducibility of artifacts. The binary path arrives via the
// GFBED_CLI environment variable set by CTest.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "gfbed/io.hpp"

namespace fs = std::filesystem;

namespace {

std::string cli_path() {
  const char* p = std::getenv("GFBED_CLI");
  REQUIRE(p != nullptr);
  return p;
}

struct RunOutput {
  int exit_code = -1;
  std::string out;
  std::string err;
};

RunOutput run_cli(const std::string& args) {
  static int counter = 0;
  fs::path dir = fs::temp_directory_path() / "gfbed_cli_test";
  fs::create_directories(dir);
  fs::path out_f = dir / ("out" + std::to_string(counter) + ".txt");
  fs::path err_f = dir / ("err" + std::to_string(counter) + ".txt");
  ++counter;
  std::string cmd = cli_path() + " " + args + " >" + out_f.string() + " 2>" + err_f.string();
  int status = std::system(cmd.c_str());
  RunOutput r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = gfbed::io::read_file(out_f.string());
  r.err = gfbed::io::read_file(err_f.string());
  return r;
}

fs::path write_config(const std::string& name, const std::string& body) {
  fs::path dir = fs::temp_directory_path() / "gfbed_cli_test";
  fs::create_directories(dir);
  fs::path p = dir / name;
  std::ofstream(p) << body;
  return p;
}

const char* kSmokeBody =
    "model = linear\n"
    "measurements = 2\n"
    "epochs = 4\n"
    "prior_samples = 48\n"
    "lr_psi = 0.005\n"
    "lr_xi = 0.2\n"
    "hidden_layers = 8\n"
    "es_pairs = 2\n"
    "seed = 3\n"
    "mh_chain_len = 2000\n"
    "mh_burn_in = 200\n"
    "nmc_n = 50\n"
    "nmc_m = 50\n";

}  // namespace

TEST_CASE("validate-config accepts a good config and echoes the resolution") {
  fs::path cfg = write_config("ok.cfg", kSmokeBody);
  RunOutput r = run_cli("validate-config --config " + cfg.string());
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("config ok") != std::string::npos);
  CHECK(r.out.find("hidden_layers = 8") != std::string::npos);
}

TEST_CASE("missing lr_xi exits 2 and names the key") {
  fs::path cfg = write_config("missing.cfg",
                              "model = linear\nmeasurements = 1\nepochs = 1\n"
                              "prior_samples = 4\nlr_psi = 0.001\n");
  RunOutput r = run_cli("validate-config --config " + cfg.string());
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("lr_xi") != std::string::npos);
}

TEST_CASE("unknown subcommand and missing config exit nonzero") {
  RunOutput r = run_cli("frobnicate");
  CHECK(r.exit_code != 0);
  RunOutput r2 = run_cli("run --config /nonexistent/path.cfg");
  CHECK(r2.exit_code == 2);
}

TEST_CASE("run produces byte-identical artifacts for the same seed") {
  fs::path cfg = write_config("smoke.cfg", kSmokeBody);
  fs::path out1 = fs::temp_directory_path() / "gfbed_cli_test" / "r1";
  fs::path out2 = fs::temp_directory_path() / "gfbed_cli_test" / "r2";
  fs::remove_all(out1);
  fs::remove_all(out2);

  RunOutput a = run_cli("run --config " + cfg.string() + " --out " + out1.string());
  REQUIRE(a.exit_code == 0);
  RunOutput b = run_cli("run --config " + cfg.string() + " --out " + out2.string());
  REQUIRE(b.exit_code == 0);

  auto bytes = [](const fs::path& p) { return gfbed::io::read_file(p.string()); };
  CHECK(bytes(out1 / "trace.csv") == bytes(out2 / "trace.csv"));
  CHECK(bytes(out1 / "critic.txt") == bytes(out2 / "critic.txt"));

  // a different seed changes the trace
  fs::path out3 = fs::temp_directory_path() / "gfbed_cli_test" / "r3";
  fs::remove_all(out3);
  RunOutput c = run_cli("run --config " + cfg.string() + " --out " + out3.string() + " --seed 99");
  REQUIRE(c.exit_code == 0);
  CHECK(bytes(out1 / "trace.csv") != bytes(out3 / "trace.csv"));

  // posterior runs off the artifacts and reproduces byte for byte
  RunOutput p1 = run_cli("posterior " + out1.string() + " --sampler categorical");
  REQUIRE(p1.exit_code == 0);
  RunOutput p2 = run_cli("posterior " + out1.string() + " --sampler categorical");
  REQUIRE(p2.exit_code == 0);
  CHECK(bytes(out1 / "posterior_categorical.csv") != "");
  CHECK(p1.out == p2.out);
}

TEST_CASE("nmc-ref prints a value for the linear model and exits 4 on quantum") {
  fs::path cfg = write_config("smoke2.cfg", kSmokeBody);
  fs::path out = fs::temp_directory_path() / "gfbed_cli_test" / "nmc";
  fs::remove_all(out);
  RunOutput r = run_cli("nmc-ref --config " + cfg.string() + " --out " + out.string() + " --xi 5,5");
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("nmc_ref = ") != std::string::npos);
  CHECK(fs::exists(out / "nmc_ref.csv"));

  fs::path qcfg = write_config("quantum.cfg",
                               "model = quantum\nmeasurements = 1\nepochs = 1\n"
                               "prior_samples = 4\nlr_psi = 0.001\nlr_xi = 0.01\n");
  RunOutput q = run_cli("nmc-ref --config " + qcfg.string() + " --out " + out.string() + " --xi 0.5,0");
  CHECK(q.exit_code == 4);
  CHECK(q.err.find("quantum") != std::string::npos);
}

TEST_CASE("posterior on a directory without artifacts exits 3") {
  fs::path empty = fs::temp_directory_path() / "gfbed_cli_test" / "empty";
  fs::create_directories(empty);
  RunOutput r = run_cli("posterior " + empty.string());
  CHECK(r.exit_code == 3);
}
