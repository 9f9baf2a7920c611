#include "bilevel/cli.hpp"

#include "bilevel/io.hpp"
#include "bilevel/segmentation.hpp"
#include "bilevel/types.hpp"

#include <doctest.h>

#include "testutil.hpp"

#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

using namespace bilevel;
using testutil::TempDir;

namespace {

int run(const std::vector<std::string>& args) { return cli::cli_main(args); }

bool exists(const std::string& path) { return std::filesystem::exists(path); }

int count_lines(const std::string& text) {
  int n = 0;
  for (const char c : text) n += c == '\n' ? 1 : 0;
  return n;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("bare invocation and help") {
  CHECK(run({}) == 1);
  CHECK(run({"--help"}) == 0);
  CHECK(run({"toy-gradients", "--help"}) == 0);
  CHECK(run({"no-such-command"}) == 1);
  CHECK(run({"toy-gradients", "--no-such-flag", "1"}) == 1);
}

TEST_CASE("gradient runs write deterministic stamped tables") {
  TempDir dir("cligrad");
  const std::vector<std::string> args = {"toy-gradients", "--n", "30", "--out",
                                         dir.file("out")};
  REQUIRE(run(args) == 0);
  CHECK(exists(dir.file("out/manifest.txt")));
  CHECK(exists(dir.file("out/contributions.csv")));
  const std::string first = testutil::read_file(dir.file("out/gradients.csv"));
  CHECK(count_lines(first) == 8);  // hash comment + header + six estimators
  CHECK(first.rfind("# config_hash = ", 0) == 0);

  const std::string manifest = testutil::read_file(dir.file("out/manifest.txt"));
  CHECK(manifest.find("command = toy-gradients") != std::string::npos);
  CHECK(manifest.find("n = 30") != std::string::npos);

  // A second identical run reproduces the table byte for byte.
  REQUIRE(run(args) == 0);
  CHECK(testutil::read_file(dir.file("out/gradients.csv")) == first);
}

TEST_CASE("config files fill unset flags and explicit flags win") {
  TempDir dir("clicfg");
  testutil::write_file(dir.file("run.cfg"), "theta = 0.5\nn = 40\nkinds = proj-gd\n");
  REQUIRE(run({"toy-gradients", "--config", dir.file("run.cfg"), "--theta", "0.25", "--out",
               dir.file("out")}) == 0);
  const std::string manifest = testutil::read_file(dir.file("out/manifest.txt"));
  CHECK(manifest.find("theta = 0.25") != std::string::npos);  // flag beats file
  CHECK(manifest.find("n = 40") != std::string::npos);        // file fills the rest
  CHECK(manifest.find("kinds = proj-gd") != std::string::npos);
  const std::string grads = testutil::read_file(dir.file("out/gradients.csv"));
  CHECK(count_lines(grads) == 3);  // single estimator selected by the file

  testutil::write_file(dir.file("bad.cfg"), "nonsense = 1\n");
  CHECK(run({"toy-gradients", "--config", dir.file("bad.cfg"), "--out", dir.file("o2")}) == 1);
  testutil::write_file(dir.file("broken.cfg"), "theta 0.5\n");
  CHECK(run({"toy-gradients", "--config", dir.file("broken.cfg"), "--out", dir.file("o3")}) ==
        1);
}

TEST_CASE("usage errors and numerical failures use distinct exit codes") {
  TempDir dir("clierr");
  CHECK(run({"toy-gradients", "--kinds", "nope", "--out", dir.file("a")}) == 1);
  CHECK(run({"toy-gradients", "--x0=-1", "--out", dir.file("b")}) == 1);
  CHECK(run({"check-grad", "--out", dir.file("c")}) == 1);  // module missing
  // An impossible tolerance turns the gradient check into a numerical failure.
  CHECK(run({"check-grad", "--module", "toy", "--kinds", "bregman-fb", "--n", "30",
             "--tol-exact", "1e-30", "--out", dir.file("d")}) == 2);
}

TEST_CASE("sweeps cover the grid and threading does not change the bytes") {
  TempDir dir("clisweep");
  const std::vector<std::string> args = {
      "toy-sweep", "--kinds", "bregman-fb,proj-gd", "--thetas", "0,0.3",
      "--n",       "5,20",    "--out",              dir.file("out")};
  REQUIRE(run(args) == 0);
  const std::string serial = testutil::read_file(dir.file("out/sweep.csv"));
  CHECK(count_lines(serial) == 10);  // hash + header + 2*2*2 rows
  CHECK(exists(dir.file("out/energies.csv")));
  CHECK(exists(dir.file("out/contributions.csv")));

  setenv("BILEVEL_THREADS", "3", 1);
  const int rc = run(args);
  unsetenv("BILEVEL_THREADS");
  REQUIRE(rc == 0);
  CHECK(testutil::read_file(dir.file("out/sweep.csv")) == serial);
}

TEST_CASE("gradient checks pass for both modules") {
  TempDir dir("clicheck");
  CHECK(run({"check-grad", "--module", "toy", "--kinds", "bregman-fb,proj-gd,bregman-fb2",
             "--n", "60", "--out", dir.file("toy")}) == 0);
  CHECK(exists(dir.file("toy/check.csv")));
  CHECK(run({"check-grad", "--module", "segmentation", "--nx", "4", "--ny", "3", "--labels",
             "2", "--n-inner", "5", "--out", dir.file("seg")}) == 0);
  const std::string table = testutil::read_file(dir.file("seg/check.csv"));
  CHECK(table.find("fail") == std::string::npos);
}

TEST_CASE("synthetic training writes a model and a log") {
  TempDir dir("clitrain");
  REQUIRE(run({"segment-train", "--synthetic", "8x8x1", "--iters", "2", "--n-inner", "4",
               "--rate", "1e-2", "--out", dir.file("out")}) == 0);
  CHECK(exists(dir.file("out/model.txt")));
  const std::string log = testutil::read_file(dir.file("out/training_log.csv"));
  CHECK(count_lines(log) == 4);  // hash + header + 2 iterations
  const seg::LinearUnaryModel model = io::load_model(dir.file("out/model.txt"));
  CHECK(model.channels() == 3);
  CHECK(model.labels() == 3);

  CHECK(run({"segment-train", "--out", dir.file("x")}) == 1);  // no dataset given
  CHECK(run({"segment-train", "--synthetic", "8x8", "--out", dir.file("y")}) == 1);
}

TEST_CASE("image training and inference round trip on a two-band picture") {
  TempDir dir("cliinfer");

  // 6x6 feature image: dark left band, bright right band; labels follow it.
  io::ImageU8 feat;
  feat.width = 6;
  feat.height = 6;
  feat.channels = 1;
  feat.data.assign(36, 0);
  io::ImageU8 gt = feat;
  for (int j = 0; j < 6; ++j)
    for (int i = 0; i < 6; ++i) {
      feat.data[static_cast<size_t>(i + 6 * j)] = i < 3 ? 40 : 200;
      gt.data[static_cast<size_t>(i + 6 * j)] = i < 3 ? 0 : 1;
    }
  io::write_pnm(dir.file("f.pgm"), feat);
  io::write_pnm(dir.file("gt.pgm"), gt);
  testutil::write_file(dir.file("list.txt"), "f.pgm;gt.pgm\n");

  REQUIRE(run({"segment-train", "--manifest", dir.file("list.txt"), "--labels", "2", "--iters",
               "2", "--n-inner", "4", "--out", dir.file("train")}) == 0);

  // A handcrafted model separates the bands exactly.
  seg::LinearUnaryModel model;
  model.weights = Mat(1, 2);
  model.weights << 10.0, -10.0;
  model.bias = Vec(2);
  model.bias << -5.0, 5.0;
  model.log_smoothness = -2.0;
  io::save_model(dir.file("model.txt"), model);

  REQUIRE(run({"segment-infer", "--model", dir.file("model.txt"), "--image", dir.file("f.pgm"),
               "--gt", dir.file("gt.pgm"), "--n-inner", "30", "--out",
               dir.file("out")}) == 0);
  CHECK(exists(dir.file("out/labels.pgm")));
  const io::ImageU8 labels = io::read_pnm(dir.file("out/labels.pgm"));
  CHECK(labels.width == 6);
  CHECK(labels.height == 6);
  CHECK(labels.data == gt.data);
  const std::string metrics = testutil::read_file(dir.file("out/metrics.csv"));
  CHECK(metrics.find("1,1") != std::string::npos);

  // Without ground truth there are labels but no metrics table.
  REQUIRE(run({"segment-infer", "--model", dir.file("model.txt"), "--image", dir.file("f.pgm"),
               "--n-inner", "10", "--out", dir.file("nogt")}) == 0);
  CHECK(exists(dir.file("nogt/labels.pgm")));
  CHECK_FALSE(exists(dir.file("nogt/metrics.csv")));

  CHECK(run({"segment-infer", "--image", dir.file("f.pgm"), "--out", dir.file("z")}) == 1);
}

}  // TEST_SUITE
