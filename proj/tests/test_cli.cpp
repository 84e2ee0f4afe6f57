#include "genlabel/util.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

namespace fs = std::filesystem;
using genlabel::Json;
using genlabel::read_text_file;

namespace {

struct Sandbox {
  fs::path dir;
  Sandbox() {
    dir = fs::temp_directory_path() / ("genlabel_cli_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Sandbox() { fs::remove_all(dir); }
  std::string path(const std::string& name) const { return (dir / name).string(); }

  // Runs the CLI with stdout sent to `out` (inside the sandbox); returns the exit code.
  int run(const std::string& args, const std::string& out = "stdout.txt") const {
    const std::string cmd = std::string("\"") + GENLABEL_CLI_PATH + "\" " + args + " > \"" +
                            path(out) + "\" 2> \"" + path("stderr.txt") + "\"";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }
  std::string text(const std::string& name) const { return read_text_file(path(name)); }
};

}  // namespace

TEST_CASE("cli: gen-data, train and eval are byte-identical across reruns") {
  Sandbox sb;
  REQUIRE(sb.run("gen-data moon --n 20 --seed 3 -o " + sb.path("a.csv")) == 0);
  REQUIRE(sb.run("gen-data moon --n 20 --seed 3 -o " + sb.path("b.csv")) == 0);
  CHECK(sb.text("a.csv") == sb.text("b.csv"));
  CHECK(sb.text("a.csv").substr(0, 12) == "x0,x1,label\n");

  const std::string train = "train --data " + sb.path("a.csv") +
                            " --method mixup --hidden 8,8 --epochs 5 --batch-size 8 --seed 4 --out-dir ";
  REQUIRE(sb.run(train + sb.path("r1")) == 0);
  REQUIRE(sb.run(train + sb.path("r2")) == 0);
  CHECK(sb.text("r1/model.json") == sb.text("r2/model.json"));

  const Json manifest = Json::parse(sb.text("r1/manifest.json"));
  for (const char* key : {"command", "config", "seed", "dataset_fingerprint", "metrics", "artifacts",
                          "duration_seconds"})
    CHECK(manifest.contains(key));
  CHECK(manifest["config"]["method"] == "mixup");

  // A manifest works as a config source.
  REQUIRE(sb.run("train --config " + sb.path("r1/manifest.json") + " --data " + sb.path("a.csv") +
                 " --out-dir " + sb.path("r3")) == 0);
  CHECK(sb.text("r3/model.json") == sb.text("r1/model.json"));

  const std::string model = " --model " + sb.path("r1/model.json") + " --data " + sb.path("a.csv");
  REQUIRE(sb.run("eval" + model + " -o " + sb.path("m1.json"), "e1.txt") == 0);
  REQUIRE(sb.run("eval" + model + " -o " + sb.path("m2.json"), "e2.txt") == 0);
  CHECK(sb.text("m1.json") == sb.text("m2.json"));
  CHECK(Json::parse(sb.text("m1.json")).contains("clean_accuracy"));

  REQUIRE(sb.run("attack" + model + " --epsilon 0.1") == 0);
  REQUIRE(sb.run("boundary --model " + sb.path("r1/model.json") + " --resolution 10 -o " +
                 sb.path("grid.csv")) == 0);
  const std::string grid = sb.text("grid.csv");
  CHECK(grid.substr(0, grid.find('\n')) == "x0,x1,class,p0,p1");
}

TEST_CASE("cli: theory example1") {
  Sandbox sb;
  REQUIRE(sb.run("theory example1") == 0);
  const std::string out = sb.text("stdout.txt");
  CHECK(out.find("theta_mixup 0.4375") != std::string::npos);
  CHECK(out.find("theta_no_mi 0.5") != std::string::npos);
}

TEST_CASE("cli: exit codes") {
  Sandbox sb;
  CHECK(sb.run("--help") == 0);
  CHECK(sb.run("frobnicate") == 2);
  CHECK(sb.run("train --data " + sb.path("missing.csv")) == 2);
  CHECK(sb.run("gen-data spiral -o " + sb.path("x.csv")) == 2);
  REQUIRE(sb.run("gen-data circle --n 10 -o " + sb.path("c.csv")) == 0);
  CHECK(sb.run("train --data " + sb.path("c.csv") + " --method cutmix") == 2);
  CHECK(sb.run("train --data " + sb.path("c.csv") + " --epochs 0") == 2);
  CHECK(sb.run("train --data " + sb.path("c.csv") + " --label-column nope") == 2);
  CHECK(sb.run("theory example3 --alpha 0.5") == 2);
  // A step size this large overflows the parameters on the first update.
  CHECK(sb.run("train --data " + sb.path("c.csv") + " --lr 1e300 --momentum 0 --out-dir " +
               sb.path("boom")) == 3);
}
