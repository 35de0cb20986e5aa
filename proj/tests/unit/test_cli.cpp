// Copyright 2026 The ssir Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "ssir/binary_io.hpp"
#include "ssir/checkpoint.hpp"
#include "ssir/cli.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
  int code = -1;
  std::string out;
};

// Runs the installed tool through the shell so exit codes are the real ones.
Result tool(const std::string& args, const std::string& env = "") {
  const fs::path log = fs::temp_directory_path() / "ssir_cli_test.out";
  const std::string cmd = env + " '" + std::string(SSIR_TOOL_PATH) + "' " + args + " > '" + log.string() + "' 2>&1";
  const int status = std::system(cmd.c_str());
  Result r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(log);
  std::stringstream ss;
  ss << in.rdbuf();
  r.out = ss.str();
  return r;
}

fs::path fresh_dir(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("ssir_cli_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

json read_json(const fs::path& p) { return json::parse(ssir::io::read_file(p)); }

void write_text(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

const char* kSmallGen = "--participants 2 --samples-per-word 10 --repeats-per-phrase 10 --augment-factor 1";
const char* kSmallConfig =
    R"({"train": {"epochs": 1, "max_batches_per_epoch": 2, "batch_size": 8, "beam_width": 2},)"
    R"( "model": {"hidden_dim": 16, "n_heads": 2, "n_attn_blocks": 1}})";

}  // namespace

TEST_CASE("usage errors exit with 2") {
  CHECK(tool("").code == ssir::cli::kInvalidFlags);
  CHECK(tool("frobnicate").code == ssir::cli::kInvalidFlags);
  CHECK(tool("gen").code == ssir::cli::kInvalidFlags);
  CHECK(tool("gen --out x --participants notanumber").code == ssir::cli::kInvalidFlags);
  CHECK(tool("ablate --data a --out b --mode rows").code == ssir::cli::kInvalidFlags);
  CHECK(tool("--help").code == ssir::cli::kOk);
  const auto v = tool("--version");
  CHECK(v.code == ssir::cli::kOk);
  CHECK(v.out.find(ssir::cli::version()) != std::string::npos);
}

TEST_CASE("missing inputs exit with 3 and bad formats with 4") {
  const auto dir = fresh_dir("io");
  CHECK(tool("train --data " + (dir / "missing.ssir").string() + " --out " + dir.string()).code ==
        ssir::cli::kIoError);
  write_text(dir / "junk.ssir", "not a container");
  CHECK(tool("train --data " + (dir / "junk.ssir").string() + " --out " + dir.string()).code ==
        ssir::cli::kFormatError);
  write_text(dir / "junk.ssim", "SSIMxxxxxxxxxxxxxxxx");
  CHECK(tool("decode --model " + (dir / "junk.ssim").string() + " --input " + (dir / "junk.ssir").string()).code ==
        ssir::cli::kFormatError);
}

TEST_CASE("gen is deterministic and honors SSIR_SEED") {
  const auto a = fresh_dir("gen_a"), b = fresh_dir("gen_b"), c = fresh_dir("gen_c");
  REQUIRE(tool(std::string("gen ") + kSmallGen + " --seed 5 --out " + a.string()).code == 0);
  REQUIRE(tool(std::string("gen ") + kSmallGen + " --seed 9 --out " + b.string(), "SSIR_SEED=5").code == 0);
  REQUIRE(tool(std::string("gen ") + kSmallGen + " --seed 6 --out " + c.string()).code == 0);
  const auto bytes_a = ssir::io::read_file(a / "dataset.ssir");
  CHECK(bytes_a == ssir::io::read_file(b / "dataset.ssir"));
  CHECK(bytes_a != ssir::io::read_file(c / "dataset.ssir"));

  const auto m = read_json(a / "run_manifest.json");
  for (const char* key : {"command", "argv", "config", "seed", "inputs", "artifacts", "tool_version", "started_at",
                          "finished_at"})
    CHECK(m.contains(key));
  CHECK(m.at("command") == "gen");
  CHECK(m.at("seed") == 5);
  CHECK(read_json(b / "run_manifest.json").at("seed") == 5);
  CHECK(tool("gen --out " + a.string(), "SSIR_SEED=abc").code == ssir::cli::kInvalidFlags);
}

TEST_CASE("train, eval and decode end to end") {
  const auto dir = fresh_dir("e2e");
  REQUIRE(tool(std::string("gen ") + kSmallGen + " --seed 1 --out " + dir.string()).code == 0);
  write_text(dir / "config.json", kSmallConfig);
  const std::string data = (dir / "dataset.ssir").string();
  const auto run_dir = dir / "run";
  REQUIRE(tool("train --quiet --data " + data + " --config " + (dir / "config.json").string() + " --out " +
               run_dir.string())
              .code == 0);
  CHECK(fs::exists(run_dir / "model.ssim"));
  std::ifstream log(run_dir / "train_log.jsonl");
  std::string line;
  std::size_t lines = 0;
  while (std::getline(log, line)) {
    const auto rec = json::parse(line);
    for (const char* key : {"epoch", "train_loss", "val_word_accuracy", "wall_time_s"}) CHECK(rec.contains(key));
    ++lines;
  }
  CHECK(lines == 1);
  const auto manifest = read_json(run_dir / "run_manifest.json");
  CHECK(manifest.at("command") == "train");
  CHECK(manifest.at("config").at("model").at("hidden_dim") == 16);

  const auto ckpt = ssir::model::load_checkpoint(run_dir / "model.ssim");
  CHECK(ckpt.params.config.hidden_dim == 16);
  CHECK(ckpt.inputs.feature_dim() == 36);

  const auto report_path = dir / "eval" / "report.json";
  REQUIRE(tool("eval --data " + data + " --model " + (run_dir / "model.ssim").string() + " --report " +
               report_path.string())
              .code == 0);
  const auto report = read_json(report_path);
  CHECK(report.at("word_accuracy").get<double>() >= 0.0);
  CHECK(report.at("word_accuracy").get<double>() <= 1.0);
  CHECK(report.at("per_length").contains("1"));
  const auto csv = ssir::io::read_file(dir / "eval" / "accuracy_by_length.csv");
  CHECK(csv.rfind("group,mean,std\n", 0) == 0);
  CHECK(fs::exists(dir / "eval" / "accuracy_by_participant.csv"));
  CHECK(fs::exists(dir / "eval" / "run_manifest.json"));

  const auto dec = tool("decode --model " + (run_dir / "model.ssim").string() + " --input " + data + " --beam-width 1");
  CHECK(dec.code == 0);
  for (const char* key : {"sample:", "reference:", "transcription:", "log_prob:"})
    CHECK(dec.out.find(key) != std::string::npos);
  CHECK(tool("decode --model " + (run_dir / "model.ssim").string() + " --input " + data + " --sample-id 999999999")
            .code == ssir::cli::kInvalidFlags);

  // Channel subset gives a model with a narrower input.
  const auto sub_dir = dir / "sub";
  REQUIRE(tool("train --quiet --data " + data + " --config " + (dir / "config.json").string() +
               " --channels 0,2 --axes 0,1,2 --out " + sub_dir.string())
              .code == 0);
  CHECK(ssir::model::load_checkpoint(sub_dir / "model.ssim").params.config.input_dim == 6);
}

TEST_CASE("training twice gives the same checkpoint") {
  const auto dir = fresh_dir("det");
  REQUIRE(tool(std::string("gen ") + kSmallGen + " --seed 2 --out " + dir.string()).code == 0);
  write_text(dir / "config.json", kSmallConfig);
  const std::string common =
      "train --quiet --seed 4 --data " + (dir / "dataset.ssir").string() + " --config " + (dir / "config.json").string();
  REQUIRE(tool(common + " --out " + (dir / "a").string()).code == 0);
  REQUIRE(tool(common + " --out " + (dir / "b").string()).code == 0);
  CHECK(ssir::io::read_file(dir / "a" / "model.ssim") == ssir::io::read_file(dir / "b" / "model.ssim"));
}

TEST_CASE("bad configs and infeasible targets") {
  const auto dir = fresh_dir("cfg");
  REQUIRE(tool(std::string("gen ") + kSmallGen + " --seed 3 --out " + dir.string()).code == 0);
  const std::string data = (dir / "dataset.ssir").string();
  write_text(dir / "bad.json", "{\"train\": ");
  CHECK(tool("train --data " + data + " --config " + (dir / "bad.json").string() + " --out " + dir.string()).code ==
        ssir::cli::kFormatError);
  write_text(dir / "extra.json", R"({"optimizer": {}})");
  CHECK(tool("train --data " + data + " --config " + (dir / "extra.json").string() + " --out " + dir.string()).code ==
        ssir::cli::kFormatError);
  write_text(dir / "neg.json", R"({"train": {"lr": -1}})");
  CHECK(tool("train --data " + data + " --config " + (dir / "neg.json").string() + " --out " + dir.string()).code ==
        ssir::cli::kInvalidFlags);
  CHECK(tool("train --data " + data + " --channels 7 --out " + dir.string()).code == ssir::cli::kInvalidFlags);
  // Sentences of three words cannot fit in two output frames.
  write_text(dir / "stride.json", R"({"model": {"downsample_stride": 100, "hidden_dim": 16, "n_heads": 2}})");
  const auto r = tool("train --data " + data + " --config " + (dir / "stride.json").string() + " --out " + dir.string());
  CHECK(r.code == ssir::cli::kInfeasible);
  CHECK(r.out.find("infeasible") != std::string::npos);
}

TEST_CASE("in-process entry point") {
  CHECK(ssir::cli::run(std::vector<std::string>{"ssir", "--version"}) == ssir::cli::kOk);
  CHECK(ssir::cli::run(std::vector<std::string>{"ssir", "eval"}) == ssir::cli::kInvalidFlags);
}

TEST_CASE("ablate and cross write their tables") {
  const auto dir = fresh_dir("tables");
  REQUIRE(tool(std::string("gen ") + kSmallGen + " --seed 7 --out " + dir.string()).code == 0);
  write_text(dir / "config.json", kSmallConfig);
  const std::string common = " --data " + (dir / "dataset.ssir").string() + " --config " + (dir / "config.json").string();
  REQUIRE(tool("ablate --mode axes" + common + " --out " + (dir / "abl").string()).code == 0);
  const auto rows = read_json(dir / "abl" / "ablation_axes.json");
  REQUIRE(rows.is_array());
  CHECK(rows.size() == 11);
  const auto csv = ssir::io::read_file(dir / "abl" / "ablation_axes.csv");
  CHECK(csv.rfind("group,mean,std\n", 0) == 0);
  CHECK(fs::exists(dir / "abl" / "run_manifest.json"));

  REQUIRE(tool("cross --k 2 --augment-factor 1 --participants 0" + common + " --out " + (dir / "cross").string()).code ==
          0);
  const auto cross = ssir::io::read_file(dir / "cross" / "cross_participant.csv");
  CHECK(cross.rfind("group,mean,std\n", 0) == 0);
  CHECK(cross.find("standard") != std::string::npos);
  CHECK(cross.find("few_shot") != std::string::npos);
  CHECK(tool("cross --k 50" + common + " --out " + (dir / "cross").string()).code == ssir::cli::kInvalidFlags);
}
