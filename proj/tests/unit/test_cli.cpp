// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The countx Authors

#include "countx/cli/cli.hpp"
#include "countx/io/image_io.hpp"
#include "countx/model/checkpoint.hpp"

#include "fixture.hpp"
#include "test_support.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>

using namespace countx;
using countx::testing::TempDir;
using nlohmann::json;

namespace {

int invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "countx");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return cli::run(static_cast<int>(argv.size()), argv.data());
}

json read_json(const std::filesystem::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

}  // namespace

TEST_CASE("usage errors exit 2") {
  CHECK(invoke({}) == cli::kExitUsage);
  CHECK(invoke({"evaluate", "--split", "test"}) == cli::kExitUsage);
  CHECK(invoke({"infer", "--checkpoint", "stub:zero", "--text", "x"}) == cli::kExitUsage);
  CHECK(invoke({"infer", "--checkpoint", "stub:zero", "--bogus"}) == cli::kExitUsage);
  CHECK(invoke({"evaluate", "--checkpoint", "stub:zero", "--split", "train", "--data-root", "/"}) ==
        cli::kExitUsage);
  CHECK(invoke({"serve"}) == cli::kExitUsage);
  CHECK(invoke({"dataset"}) == cli::kExitUsage);
  CHECK(invoke({"infer", "--help"}) == cli::kExitOk);
}

TEST_CASE("evaluate, infer and dataset validate on the fixture") {
  TempDir dir("cli");
  countx::testing::write_fixture(dir.path(), countx::testing::clean_specs());
  const auto root = dir.path().string();

  CHECK(invoke({"dataset", "validate", "--data-root", root}) == cli::kExitOk);
  const auto report = read_json(dir / "dataset_report.json");
  CHECK(report.contains("splits"));

  const auto out = (dir / "eval" / "test.json").string();
  REQUIRE(invoke({"evaluate", "--checkpoint", "stub:zero", "--split", "test", "--prompt-mode", "description",
                  "--data-root", root, "--out", out}) == cli::kExitOk);
  const auto r = read_json(out);
  CHECK(r["mae"] == 12.5);
  CHECK(r["rmse"] == std::sqrt(162.5));
  CHECK(r["n"] == 2);

  const auto image = (dir / "images_384_VarV2" / "5.jpg").string();
  const auto overlay = (dir / "o" / "pens.png").string();
  const auto result = (dir / "o" / "pens.json").string();
  REQUIRE(invoke({"infer", "--checkpoint", "stub:uniform:0.5", "--image", image, "--text", "the sea shells",
                  "--overlay-out", overlay, "--json-out", result}) == cli::kExitOk);
  CHECK(io::sniff_format(io::read_file(overlay)) == io::ImageFormat::kPng);
  const auto j = read_json(result);
  CHECK(j["count"].get<double>() == doctest::Approx(0.5 * 576 * 384 / 60.0).epsilon(1e-12));
  CHECK(j["prompt"] == "the sea shells");

  CHECK(invoke({"evaluate", "--checkpoint", (dir / "missing.safetensors").string(), "--data-root", root}) ==
        cli::kExitFailure);
  CHECK(invoke({"evaluate", "--checkpoint", "stub:bogus", "--data-root", root}) == cli::kExitFailure);
}

TEST_CASE("dataset validate reports violations with exit 1") {
  TempDir dir("cli-bad");
  auto specs = countx::testing::clean_specs();
  specs[4].cls = "apples";  // class shared between train and test
  countx::testing::write_fixture(dir.path(), specs);
  const auto report = (dir / "r.json").string();
  CHECK(invoke({"dataset", "validate", "--data-root", dir.path().string(), "--report-out", report}) ==
        cli::kExitFailure);
  CHECK(read_json(report)["ok"] == false);
}

TEST_CASE("train writes checkpoints and is reproducible") {
  TempDir dir("cli-train");
  countx::testing::write_fixture(dir.path(), countx::testing::clean_specs());
  {
    std::ofstream cfg(dir / "cfg.json");
    cfg << R"({"model": "toy", "train": {"batch_size": 2, "base_lr": 1e-3, "warmup_epochs": 1,
              "total_epochs": 2, "validation": {"working_height": 64, "window_side": 64, "stride": 32}}})";
  }
  const auto run_once = [&](const std::string& name) {
    return invoke({"train", "--data-root", dir.path().string(), "--config", (dir / "cfg.json").string(), "--out",
                   (dir / name).string(), "--seed", "7"});
  };
  REQUIRE(run_once("a") == cli::kExitOk);
  REQUIRE(run_once("b") == cli::kExitOk);
  CHECK(std::filesystem::exists(dir / "a" / "metrics.jsonl"));
  const auto a = read_checkpoint<float>(dir / "a" / "best.safetensors");
  const auto b = read_checkpoint<float>(dir / "b" / "best.safetensors");
  CHECK(a.metadata.seed == 7);
  CHECK(a.metadata.epoch == b.metadata.epoch);
  for (const auto& [name, value] : a.parameters) CHECK(value == b.parameters.at(name));

  const auto ck = (dir / "a" / "best.safetensors").string();
  CHECK(invoke({"evaluate", "--checkpoint", ck, "--split", "val", "--data-root", dir.path().string(),
                "--working-height", "64", "--window-side", "64", "--stride", "32"}) == cli::kExitOk);

  std::ofstream(dir / "bad.json") << R"({"model": "toy", "optimizer": {}})";
  CHECK(invoke({"train", "--data-root", dir.path().string(), "--config", (dir / "bad.json").string(), "--out",
                (dir / "c").string()}) == cli::kExitFailure);
}
