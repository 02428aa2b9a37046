/**
 * Copyright 2026 The bandflow Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "bandflow/checkpoint.hpp"
#include "bandflow/wav.hpp"
#include "doctest.h"
#include "fixtures.hpp"
#include "json.hpp"

namespace bandflow {
namespace {

constexpr double kTau = 6.2831853071795864769;

int run_cli_cmd(const std::string& args, const std::string& log_prefix) {
  const std::string cmd = std::string(BANDFLOW_CLI_PATH) + " " + args + " > " +
                          log_prefix + ".out 2> " + log_prefix + ".err";
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// step,loss,lr columns of a metrics CSV; wallclock is run-dependent.
std::vector<std::string> metric_rows(const std::string& path) {
  std::ifstream in(path);
  std::string line;
  std::vector<std::string> rows;
  while (std::getline(in, line)) {
    size_t third = line.find(',');
    third = line.find(',', third + 1);
    third = line.find(',', third + 1);
    rows.push_back(line.substr(0, third));
  }
  return rows;
}

// Shared workspace: fixture corpus, one short toy training run, and an
// 8 kHz probe input. Built once; every test reuses the artifacts.
struct Workspace {
  std::string dir = "cli_work";
  std::string manifest;
  std::string ckpt;
  std::string input8k;

  Workspace() {
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    manifest = testing::write_fixture_corpus(dir + "/corpus");

    Waveform in;
    in.sample_rate = 8000;
    in.samples.assign(2800, 0.0);
    for (const double f : {450.0, 1210.0, 2600.0}) {
      for (size_t i = 0; i < in.samples.size(); ++i) {
        in.samples[i] +=
            0.2 * std::sin(kTau * f * static_cast<double>(i) / 8000.0);
      }
    }
    input8k = dir + "/input8k.wav";
    write_wav(input8k, in, WavFormat::kPcm16);

    const int rc = run_cli_cmd("train --toy --steps 12 --batch 1 --seed 7 " +
                                   std::string("--data ") + manifest +
                                   " --out " + dir + "/run1",
                               dir + "/train1");
    REQUIRE(rc == 0);
    ckpt = dir + "/run1/checkpoint.bf";
  }
};

Workspace& ws() {
  static Workspace w;
  return w;
}

}  // namespace

TEST_CASE("help and usage exits") {
  CHECK(run_cli_cmd("--help", "cli_help") == 0);
  CHECK(run_cli_cmd("", "cli_nocmd") == 1);
  CHECK(run_cli_cmd("train", "cli_noargs") == 1);
  CHECK(slurp("cli_noargs.err").find("usage error") != std::string::npos);
  CHECK(run_cli_cmd("train no_such_config.json", "cli_nocfg") == 1);
}

TEST_CASE("missing data manifest is a data error") {
  const int rc = run_cli_cmd(
      "train --toy --steps 2 --data no_such_manifest.tsv --out cli_tmp",
      "cli_nodata");
  CHECK(rc == 2);
  CHECK(slurp("cli_nodata.err").find("data error") != std::string::npos);
}

TEST_CASE("toy training writes a loadable checkpoint") {
  Workspace& w = ws();
  const CheckpointData ckpt = load_checkpoint(w.ckpt);
  CHECK(ckpt.step == 12);
  CHECK(ckpt.has_opt);
  CHECK(ckpt.config.base_channels == 8);
  CHECK(ckpt.config.d_cond == 16);

  const std::string out = slurp(w.dir + "/train1.out");
  CHECK(out.find("params=200898") != std::string::npos);
  CHECK(out.find("done: smoothed loss") != std::string::npos);

  const auto rows = metric_rows(w.dir + "/run1/metrics.csv");
  REQUIRE(rows.size() == 13);
  CHECK(rows[0] == "step,loss,lr");
}

TEST_CASE("same seed reproduces the metrics trajectory") {
  Workspace& w = ws();
  const int rc = run_cli_cmd("train --toy --steps 12 --batch 1 --seed 7 " +
                                 std::string("--data ") + w.manifest +
                                 " --out " + w.dir + "/run2",
                             w.dir + "/train2");
  REQUIRE(rc == 0);
  const auto a = metric_rows(w.dir + "/run1/metrics.csv");
  const auto b = metric_rows(w.dir + "/run2/metrics.csv");
  CHECK(a == b);
}

TEST_CASE("upsample defaults echo and write 48 kHz output") {
  Workspace& w = ws();
  const std::string out_wav = w.dir + "/up_default.wav";
  const std::string pgm = w.dir + "/up_default.pgm";
  const int rc =
      run_cli_cmd(std::string("upsample ") + w.input8k + " " + out_wav +
                      " --checkpoint " + w.ckpt + " --seed 5 --spectrogram " +
                      pgm,
                  w.dir + "/up1");
  REQUIRE(rc == 0);

  const std::string log = slurp(w.dir + "/up1.out");
  CHECK(log.find("omega=1.5 steps=4") != std::string::npos);

  const Waveform out = read_wav(out_wav);
  CHECK(out.sample_rate == 48000);
  CHECK(out.samples.size() == 2800u * 6u);

  const std::string img = slurp(pgm);
  CHECK(img.substr(0, 2) == "P5");
}

TEST_CASE("guidance scale changes the output") {
  Workspace& w = ws();
  const std::string a_path = w.dir + "/up_w10.wav";
  const std::string b_path = w.dir + "/up_w20.wav";
  REQUIRE(run_cli_cmd(std::string("upsample ") + w.input8k + " " + a_path +
                          " --checkpoint " + w.ckpt + " --omega 1.0 --seed 3",
                      w.dir + "/up_a") == 0);
  REQUIRE(run_cli_cmd(std::string("upsample ") + w.input8k + " " + b_path +
                          " --checkpoint " + w.ckpt + " --omega 2.0 --seed 3",
                      w.dir + "/up_b") == 0);
  const Waveform a = read_wav(a_path);
  const Waveform b = read_wav(b_path);
  REQUIRE(a.samples.size() == b.samples.size());
  double l2 = 0.0;
  for (size_t i = 0; i < a.samples.size(); ++i) {
    const double d = a.samples[i] - b.samples[i];
    l2 += d * d;
  }
  CHECK(l2 > 0.0);
}

TEST_CASE("corrupt checkpoint is a data error") {
  Workspace& w = ws();
  const std::string bad = w.dir + "/bad.bf";
  std::ofstream(bad) << "not a checkpoint";
  const int rc = run_cli_cmd(std::string("upsample ") + w.input8k + " " +
                                 w.dir + "/never.wav --checkpoint " + bad,
                             w.dir + "/up_bad");
  CHECK(rc == 2);
  CHECK(slurp(w.dir + "/up_bad.err").find("data error") != std::string::npos);
}

TEST_CASE("full-rate input is rejected") {
  Workspace& w = ws();
  Waveform hr;
  hr.sample_rate = 48000;
  hr.samples.assign(4096, 0.1);
  const std::string path = w.dir + "/already48k.wav";
  write_wav(path, hr, WavFormat::kPcm16);
  const int rc = run_cli_cmd(std::string("upsample ") + path + " " + w.dir +
                                 "/never2.wav --checkpoint " + w.ckpt,
                             w.dir + "/up_48k");
  CHECK(rc == 2);
}

TEST_CASE("self evaluation scores zero per row") {
  Workspace& w = ws();
  const int rc = run_cli_cmd(std::string("eval ") + w.manifest +
                                 " --self --rates 8000 --out " + w.dir +
                                 "/selfrep",
                             w.dir + "/ev_self");
  REQUIRE(rc == 0);

  std::ifstream in(w.dir + "/selfrep.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line == "item,domain,input_rate,lsd_hf,lsd_full,runtime_ms");
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    CHECK(line.find(",8000,0.000000,0.000000,") != std::string::npos);
  }
  CHECK(rows == testing::kFixtureClips);

  nlohmann::json j;
  std::ifstream jin(w.dir + "/selfrep.json");
  jin >> j;
  CHECK(j["config"]["mode"] == "self");
  CHECK(j["rows"].size() == static_cast<size_t>(testing::kFixtureClips));
}

TEST_CASE("report has one row per item per rate") {
  Workspace& w = ws();
  const int rc = run_cli_cmd(std::string("eval ") + w.manifest +
                                 " --self --rates 8000,16000 --out " + w.dir +
                                 "/pairrep",
                             w.dir + "/ev_pair");
  REQUIRE(rc == 0);
  const auto rows = metric_rows(w.dir + "/pairrep.csv");
  CHECK(rows.size() == 1u + 2u * testing::kFixtureClips);
}

TEST_CASE("unknown eval rate names the supported set") {
  Workspace& w = ws();
  const int rc = run_cli_cmd(std::string("eval ") + w.manifest +
                                 " --self --rates 44100 --out " + w.dir +
                                 "/badrep",
                             w.dir + "/ev_bad");
  CHECK(rc == 2);
  const std::string err = slurp(w.dir + "/ev_bad.err");
  CHECK(err.find("8000") != std::string::npos);
  CHECK(err.find("24000") != std::string::npos);
}

TEST_CASE("inspect-config prints effective defaults as JSON") {
  Workspace& w = ws();
  REQUIRE(run_cli_cmd("inspect-config --toy", w.dir + "/ins_toy") == 0);
  nlohmann::json toy = nlohmann::json::parse(slurp(w.dir + "/ins_toy.out"));
  CHECK(toy["model"]["base_channels"] == 8);
  CHECK(toy["model"]["d_cond"] == 16);
  CHECK(toy["train"]["total_steps"] == 2000);
  CHECK(toy["train"]["batch_size"] == 4);

  // A sparse config file keeps defaults for everything it omits.
  const std::string cfg_path = w.dir + "/sparse.json";
  std::ofstream(cfg_path) << R"({"train": {"batch_size": 3}})";
  REQUIRE(run_cli_cmd("inspect-config " + cfg_path, w.dir + "/ins_file") == 0);
  nlohmann::json j = nlohmann::json::parse(slurp(w.dir + "/ins_file.out"));
  CHECK(j["train"]["batch_size"] == 3);
  CHECK(j["train"]["sigma_min"] == 0.1);
  CHECK(j["model"]["base_channels"] == 96);
}

}  // namespace bandflow
