// Copyright 2026 The VoxTrack Authors
// SPDX-License-Identifier: Apache-2.0

// Drives the installed command-line tool as a subprocess.

#include <doctest.h>
#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

const std::string kTmp = VOXTRACK_TEST_TMP;

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Run cli(const std::string& args) {
  fs::create_directories(kTmp);
  const std::string err_path = kTmp + "/stderr.txt";
  const std::string cmd = std::string("\"") + VOXTRACK_CLI_PATH + "\" " + args + " 2>\"" + err_path + "\"";
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  char buf[4096];
  for (std::size_t n; (n = std::fread(buf, 1, sizeof(buf), p)) > 0;) r.out.append(buf, n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.err = slurp(err_path);
  return r;
}

const std::string kSmall =
    " --set model.voxel.voxel_size=[0.5,0.5,0.5] --set model.voxel.extent_min=[-2,-2,-2]"
    " --set model.voxel.extent_max=[2,2,2] --set model.backbone.num_stages=2"
    " --set model.backbone.base_channels=2 --set model.head.hidden=[8]";

}  // namespace

TEST_CASE("usage errors exit with status 2") {
  CHECK(cli("").code == 2);
  const Run bad = cli("frobnicate");
  CHECK(bad.code == 2);
  CHECK(bad.err.find("\"error\":\"usage\"") != std::string::npos);
  CHECK(cli("train --out x").code == 2);
  const Run key = cli("synth --out " + kTmp + "/never --set model.nope=1");
  CHECK(key.code == 2);
  CHECK(key.err.find("\"error\":\"config\"") != std::string::npos);
  CHECK(cli("synth --out " + kTmp + "/never --set justakey").code == 2);
  CHECK(cli("eval --data /tmp --format kitti --pred x").code == 2);
  CHECK(cli("--help").code == 0);
}

TEST_CASE("full workflow") {
  const std::string data = kTmp + "/data", model = kTmp + "/model.bin", pred = kTmp + "/pred",
                    report = kTmp + "/report.jsonl", log = kTmp + "/log.jsonl";
  fs::remove_all(data);
  fs::remove_all(pred);

  const Run s = cli("synth --out " + data + " --set synth.sequences=2 --set synth.frames=4");
  REQUIRE(s.code == 0);
  CHECK(s.out.rfind("{\"type\":\"synth\"", 0) == 0);
  CHECK(fs::exists(data + "/seq_000001/gt.txt"));

  const Run t = cli("train --data " + data + " --out " + model + " --log " + log + " --set train.epochs=2" + kSmall);
  REQUIRE(t.code == 0);
  CHECK(t.out.find("\"epochs\":2") != std::string::npos);
  CHECK(t.out.find("\"steps\":12") != std::string::npos);
  CHECK(fs::exists(model));
  const std::string log_text = slurp(log);
  CHECK(std::count(log_text.begin(), log_text.end(), '\n') == 2);

  // Resuming from a checkpoint also works.
  CHECK(cli("train --data " + data + " --out " + kTmp + "/model2.bin --init " + model + " --set train.epochs=1" + kSmall).code == 0);

  const Run tr = cli("track --model " + model + " --data " + data + " --out " + pred);
  REQUIRE(tr.code == 0);
  CHECK(tr.out.find("\"sequences\":2") != std::string::npos);
  CHECK(fs::exists(pred + "/seq_000000.txt"));

  const Run e = cli("eval --data " + data + " --pred " + pred + " --out " + report);
  REQUIRE(e.code == 0);
  CHECK(e.out.find("\"frames\":6") != std::string::npos);
  CHECK(slurp(report).find("\"type\":\"bucket_summary\"") != std::string::npos);

  const Run b = cli("bench --model " + model + " --set bench.frames=3 --set bench.warmup=1");
  REQUIRE(b.code == 0);
  CHECK(b.out.find("\"frames_per_rep\":3") != std::string::npos);

  fs::remove(pred + "/seq_000001.txt");
  const Run missing = cli("eval --data " + data + " --pred " + pred);
  CHECK(missing.code == 1);
  CHECK(missing.err.find("\"error\":\"io\"") != std::string::npos);
  CHECK(cli("track --model " + data + "/seq_000000/gt.txt --data " + data + " --out " + pred).code == 1);
}

TEST_CASE("configuration files") {
  const std::string cfg = kTmp + "/cfg.json";
  std::ofstream(cfg) << R"({"synth": {"sequences": 1, "frames": 3}})";
  const std::string data = kTmp + "/cfgdata";
  fs::remove_all(data);
  REQUIRE(cli("synth --config " + cfg + " --out " + data).code == 0);
  int n = 0;
  for (const auto& entry : fs::directory_iterator(data)) n += entry.is_directory() ? 1 : 0;
  CHECK(n == 1);
  std::ofstream(kTmp + "/broken.json") << "{";
  CHECK(cli("synth --config " + kTmp + "/broken.json --out " + data).code == 2);
}
