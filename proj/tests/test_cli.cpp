#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "ambient/io.hpp"

using namespace ambient;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(ATW_BIN) + " " + args + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

std::string tmp_dir() {
  const auto d = std::filesystem::temp_directory_path() / "atw_cli_test";
  std::filesystem::create_directories(d);
  return d.string();
}

}  // namespace

TEST_CASE("cli exit codes: usage errors") {
  CHECK(run("") == 1);                       // no subcommand
  CHECK(run("sample") == 1);                 // missing required options
  CHECK(run("frobnicate") == 1);             // unknown subcommand
}

TEST_CASE("cli pipeline: dataset, train, sample, eval-dist") {
  const std::string dir = tmp_dir();
  const std::string cfg_path = dir + "/run.cfg";
  {
    std::ofstream cfg(cfg_path);
    cfg << "mixture.preset = m1\n"
        << "schedule.t_n = 0.5\n"
        << "dataset.count = 2048\n"
        << "net.hidden = 16,16\n"
        << "net.embed_dim = 8\n"
        << "train.phase1_steps = 120\n"
        << "train.batch_size = 64\n"
        << "train.eval_every = 60\n"
        << "train.out_dir = " << dir << "/run\n"
        << "eval.n_points = 200\n"
        << "sampler.n = 256\n";
  }

  CHECK(run("config-echo --config " + cfg_path) == 0);
  CHECK(run("make-dataset --config " + cfg_path + " --out " + dir + "/data.bin") == 0);
  CHECK(load_dataset(dir + "/data.bin").count() == 2048);

  CHECK(run("train --config " + cfg_path) == 0);
  CHECK(std::filesystem::exists(dir + "/run/final.ckpt"));
  CHECK(std::filesystem::exists(dir + "/run/metrics.jsonl"));

  CHECK(run("sample --config " + cfg_path + " --checkpoint " + dir + "/run/final.ckpt --out " +
            dir + "/gen.bin --steps 25 --sampler ddim --n 256 --seed 3") == 0);
  CHECK(load_dataset(dir + "/gen.bin").count() == 256);

  CHECK(run("eval-denoiser --config " + cfg_path + " --checkpoint " + dir +
            "/run/final.ckpt --csv " + dir + "/mse.csv") == 0);
  CHECK(std::filesystem::exists(dir + "/mse.csv"));

  CHECK(run("eval-dist --a " + dir + "/data.bin --b " + dir + "/gen.bin") == 0);

  // Runtime errors map to exit 2.
  CHECK(run("sample --config " + cfg_path + " --checkpoint " + dir + "/missing.ckpt --out " +
            dir + "/x.bin") == 2);

  std::filesystem::remove_all(dir);
}
