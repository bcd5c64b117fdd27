#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct Scratch {
  fs::path path;
  Scratch() {
    path = fs::temp_directory_path() / ("chac_cli_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~Scratch() { fs::remove_all(path); }

  RunResult run(const std::string& args, const std::string& env = "") const {
    const fs::path o = path / "stdout.txt", e = path / "stderr.txt";
    const std::string cmd = env + " '" CHAC_CLI_PATH "' " + args + " >'" + o.string() + "' 2>'" + e.string() + "'";
    const int status = std::system(cmd.c_str());
    RunResult r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(o);
    r.err = slurp(e);
    return r;
  }
};

const std::string kConfigs = CHAC_CONFIG_DIR;

bool contains(const std::string& s, const std::string& what) { return s.find(what) != std::string::npos; }

}  // namespace

TEST_CASE("quickstart run produces estimates and an error table") {
  Scratch s;
  const fs::path out = s.path / "qs";
  const auto r = s.run("run --config '" + kConfigs + "/ip1_quickstart.toml' --out '" + out.string() + "' --jobs 2");
  INFO(r.err);
  REQUIRE(r.code == 0);
  for (const char* f : {"invert/g1.csv", "invert/errors.dat", "invert/manifest.json", "invert/timings.json",
                        "measure/exp0/manifest.json", "simulate/manifest.json", "report/manifest.json"})
    CHECK_MESSAGE(fs::exists(out / f), f);

  const auto rep = s.run("report --dir '" + out.string() + "'");
  CHECK(rep.code == 0);
  CHECK(contains(rep.out, "inversion mode: ip1"));
}

TEST_CASE("validate-potential accepts the bundled model") {
  Scratch s;
  const auto r = s.run("validate-potential --manifest '" + kConfigs + "/ip1_model.json'");
  INFO(r.err);
  CHECK(r.code == 0);
}

TEST_CASE("user errors exit with status 1") {
  Scratch s;
  const auto missing = s.run("run --config '" + (s.path / "absent.toml").string() + "'");
  CHECK(missing.code == 1);
  CHECK(contains(missing.err, "absent.toml"));

  CHECK(s.run("run").code == 1);
  CHECK(s.run("frobnicate").code == 1);
  CHECK(s.run("validate-potential --manifest '" + (s.path / "nope.json").string() + "'").code == 1);

  const auto jobs = s.run("run --config '" + kConfigs + "/ip1_quickstart.toml' --out '" + (s.path / "j").string() + "'",
                          "CHAC_JOBS=zero");
  CHECK(jobs.code == 1);
  CHECK(contains(jobs.err, "CHAC_JOBS"));

  CHECK(s.run("report --dir '" + s.path.string() + "'").code == 1);
}

TEST_CASE("stage failures name the stage") {
  Scratch s;
  const auto r = s.run("invert --config '" + kConfigs + "/ip1_quickstart.toml' --out '" + (s.path / "empty").string() + "'");
  CHECK(r.code == 1);
  CHECK(contains(r.err, "stage 'invert'"));
}
