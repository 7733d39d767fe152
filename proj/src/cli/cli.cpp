// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The countx Authors

#include "countx/cli/cli.hpp"

#include "countx/dataset/fsc147.hpp"
#include "countx/eval/evaluation.hpp"
#include "countx/infer/overlay.hpp"
#include "countx/io/image_io.hpp"
#include "countx/model/pretrained.hpp"
#include "countx/service/service.hpp"
#include "countx/train/trainer.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <csignal>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <pthread.h>
#include <thread>

namespace countx::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kExitCodes =
    "Exit codes: 0 success, 1 validation or runtime failure, 2 usage error.";

void write_json(const fs::path& path, const json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

data::DatasetIndex load_index(const fs::path& root, const fs::path& descriptions) {
  return data::load_fsc147(data::Fsc147Layout::from_root(root, descriptions));
}

struct DataFlags {
  fs::path root;
  fs::path descriptions;
};

void add_data_flags(CLI::App* cmd, DataFlags& d) {
  cmd->add_option("--data-root", d.root, "FSC-147 root (images_384_VarV2/, annotation_FSC147_384.json, "
                                         "Train_Test_Val_FSC_147.json, optional ImageClasses_FSC147.txt)")
      ->required()
      ->check(CLI::ExistingDirectory);
  cmd->add_option("--descriptions", d.descriptions,
                  "FSC-147-D JSON: {\"img.jpg\": \"text\"} or {\"img.jpg\": {\"text_description\": ...}} "
                  "(default <data-root>/FSC-147-D.json)")
      ->check(CLI::ExistingFile);
}

// ---------------------------------------------------------------- train

struct TrainFlags {
  DataFlags data;
  fs::path config;
  fs::path out;
  std::optional<fs::path> pretrained;
  fs::path merges;
  std::uint64_t seed = 1234;
  std::optional<std::size_t> limit;
};

ModelConfig model_from_json(const json& j) {
  if (j.is_string()) {
    const auto name = j.get<std::string>();
    if (name == "toy") return ModelConfig::toy();
    if (name == "default") return ModelConfig{};
    throw ConfigError("model must be \"toy\", \"default\" or an object, got \"" + name + "\"");
  }
  try {
    ModelConfig c = j.value("base", std::string("default")) == "toy" ? ModelConfig::toy() : ModelConfig{};
    json merged = c;
    for (const auto& [k, v] : j.items())
      if (k != "base") merged[k] = v;
    c = merged.get<ModelConfig>();
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("model config: ") + e.what());
  }
}

int run_train(const TrainFlags& f, bool seed_given) {
  const json cfg_json = read_json_file(f.config);
  for (const auto& [k, v] : cfg_json.items())
    if (k != "model" && k != "train") throw ConfigError("unknown config key: " + k);
  const ModelConfig model_cfg = model_from_json(cfg_json.value("model", json("default")));
  train::TrainConfig tc;
  try {
    if (cfg_json.contains("train")) tc = cfg_json.at("train").get<train::TrainConfig>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("train config: ") + e.what());
  }
  if (seed_given || !cfg_json.contains("train") || !cfg_json["train"].contains("seed")) tc.seed = f.seed;
  tc.density_scale = model_cfg.density_scale;
  tc.validate();

  const auto index = load_index(f.data.root, f.data.descriptions);
  auto train_records = index.split("train");
  auto val_records = index.split("val");
  if (f.limit) {
    train_records.resize(std::min(train_records.size(), *f.limit));
    val_records.resize(std::min(val_records.size(), *f.limit));
  }
  std::cout << "train: " << train_records.size() << " samples, val: " << val_records.size() << " samples\n";

  auto model = init_model<float>(model_cfg, f.pretrained, tc.seed);
  const auto tokenizer = make_tokenizer(model_cfg, f.merges);
  train::FitOptions opts;
  opts.out_dir = f.out;
  opts.on_epoch = [](const train::EpochRecord& r) {
    std::cout << "epoch " << r.epoch << "  loss " << std::setprecision(6) << r.train_loss << "  val_mae "
              << r.val_mae << "  val_rmse " << r.val_rmse << "  lr " << r.lr << std::endl;
  };
  const auto result = train::fit(model, train::record_source(std::move(train_records)),
                                 train::record_source(std::move(val_records)), tokenizer, tc, opts);
  const auto& best = result.records[result.best_index];
  std::cout << "best epoch " << best.epoch << " val_mae " << best.val_mae << " -> "
            << (f.out / "best.safetensors").string() << '\n';
  return kExitOk;
}

// ------------------------------------------------------------- evaluate

struct EvalFlags {
  std::string checkpoint;
  fs::path merges;
  std::string split = "test";
  std::string prompt_mode = "description";
  DataFlags data;
  std::optional<fs::path> out;
  infer::InferenceConfig inference;
};

int run_evaluate(const EvalFlags& f) {
  const auto predictor = infer::load_predictor(f.checkpoint, f.merges);
  const auto index = load_index(f.data.root, f.data.descriptions);
  const auto result =
      eval::evaluate_split(*predictor, index, f.split, eval::parse_prompt_mode(f.prompt_mode), f.inference);
  std::cout << eval::summary_header() << '\n' << result.summary_row() << '\n';
  if (f.out) {
    write_json(*f.out, result.to_json());
    std::cout << "results: " << f.out->string() << '\n';
  }
  return kExitOk;
}

// ---------------------------------------------------------------- infer

struct InferFlags {
  std::string checkpoint;
  fs::path merges;
  fs::path image;
  std::string text;
  std::optional<fs::path> overlay_out;
  std::optional<fs::path> json_out;
  infer::InferenceConfig inference;
};

int run_infer(const InferFlags& f) {
  const auto predictor = infer::load_predictor(f.checkpoint, f.merges);
  const RgbImage image = io::read_image(f.image);
  const auto result = infer::predict(*predictor, image, f.text, f.inference);
  const fs::path overlay =
      f.overlay_out.value_or(f.image.parent_path() / (f.image.stem().string() + "_overlay.png"));
  if (overlay.has_parent_path()) fs::create_directories(overlay.parent_path());
  infer::write_overlay_png(overlay, infer::resize_to_height(image, f.inference.working_height), result.density);

  std::cout << "prompt: " << result.prompt << '\n'
            << "count: " << std::fixed << std::setprecision(2) << result.count << " (" << std::llround(result.count)
            << ")\n"
            << "overlay: " << overlay.string() << '\n';
  if (f.json_out) {
    write_json(*f.json_out, {{"image", f.image.string()},
                             {"prompt", result.prompt},
                             {"count", result.count},
                             {"rounded_count", std::llround(result.count)},
                             {"window_counts", result.window_counts},
                             {"density_width", result.density.cols()},
                             {"density_height", result.density.rows()},
                             {"overlay", overlay.string()},
                             {"model_id", predictor->model_id()}});
  }
  return kExitOk;
}

// ---------------------------------------------------------------- serve

struct ServeFlags {
  std::string checkpoint;
  fs::path merges;
  bool no_model = false;
  service::ServerConfig server;
  infer::InferenceConfig inference;
};

int run_serve(ServeFlags f) {
  std::shared_ptr<const infer::DensityPredictor> predictor;
  if (!f.no_model) predictor = infer::load_predictor(f.checkpoint, f.merges);
  auto svc = std::make_shared<service::CountService>(predictor, f.inference);
  service::HttpServer server(svc, f.server);

  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  const int port = server.bind();
  std::cout << "listening on http://" << f.server.host << ':' << port << "  model: "
            << (predictor ? predictor->model_id() : std::string("none")) << std::endl;
  std::thread waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    server.stop();
  });
  server.listen();
  pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  std::cout << "stopped" << std::endl;
  return kExitOk;
}

// ------------------------------------------------------ dataset validate

struct ValidateFlags {
  DataFlags data;
  std::optional<fs::path> report_out;
  std::size_t min_count = 7;
};

int run_validate(const ValidateFlags& f) {
  const fs::path report_path = f.report_out.value_or(f.data.root / "dataset_report.json");
  data::DatasetReport report;
  try {
    report = data::validate_dataset(load_index(f.data.root, f.data.descriptions), {f.min_count});
  } catch (const ValidationError& e) {
    json j{{"ok", false}, {"violations", e.offenders()}};
    write_json(report_path, j);
    std::cerr << "error: " << e.what() << '\n';
    std::cout << "report: " << report_path.string() << '\n';
    return kExitFailure;
  }
  write_json(report_path, report.to_json());
  for (const auto& [name, s] : report.splits)
    std::cout << name << ": " << s.samples << " images, " << s.classes << " classes, counts " << s.counts.min
              << ".." << s.counts.max << '\n';
  for (const auto& v : report.violations) std::cerr << "violation: " << v << '\n';
  std::cout << "report: " << report_path.string() << '\n';
  return report.ok() ? kExitOk : kExitFailure;
}

void add_inference_flags(CLI::App* cmd, infer::InferenceConfig& c) {
  cmd->add_option("--working-height", c.working_height, "resize height before windowing")->capture_default_str();
  cmd->add_option("--window-side", c.window_side, "window side in resized pixels")->capture_default_str();
  cmd->add_option("--stride", c.stride, "window stride")->capture_default_str();
  cmd->add_option("--threads", c.threads, "concurrent windows, 0 = all cores")->capture_default_str();
}

void add_checkpoint_flags(CLI::App* cmd, std::string& checkpoint, fs::path& merges, bool required) {
  auto* opt = cmd->add_option("--checkpoint", checkpoint,
                              "safetensors checkpoint written by `train`, or stub:zero / stub:uniform:<v>");
  if (required) opt->required();
  cmd->add_option("--merges", merges, "BPE merges file (default: byte-level tokenizer)")
      ->check(CLI::ExistingFile);
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Text-specified object counting: train, evaluate, infer and serve.", "countx"};
  app.require_subcommand(1);
  app.footer(kExitCodes);
  app.set_version_flag("--version", "countx 0.1.0");

  TrainFlags tf;
  auto* train_cmd = app.add_subcommand("train", "Fine-tune a model on the FSC-147 train split");
  add_data_flags(train_cmd, tf.data);
  train_cmd->add_option("--config", tf.config,
                        "JSON {\"model\": \"toy\" | \"default\" | {...}, \"train\": {batch_size, base_lr, ...}}")
      ->required()
      ->check(CLI::ExistingFile);
  train_cmd->add_option("--out", tf.out, "output directory: best/last.safetensors, metrics.jsonl, "
                                         "train_config.json")
      ->required();
  train_cmd->add_option("--pretrained", tf.pretrained, "safetensors CLIP export for the encoders")
      ->check(CLI::ExistingFile);
  train_cmd->add_option("--merges", tf.merges, "BPE merges file (default: byte-level tokenizer)")
      ->check(CLI::ExistingFile);
  auto* seed_opt = train_cmd->add_option("--seed", tf.seed, "overrides train.seed")->capture_default_str();
  train_cmd->add_option("--limit", tf.limit, "use at most N samples per split");
  train_cmd->footer(kExitCodes);

  EvalFlags ef;
  auto* eval_cmd = app.add_subcommand("evaluate", "Report MAE/RMSE of a checkpoint on a split");
  add_checkpoint_flags(eval_cmd, ef.checkpoint, ef.merges, true);
  eval_cmd->add_option("--split", ef.split, "split to evaluate")
      ->check(CLI::IsMember({"val", "test"}))
      ->capture_default_str();
  eval_cmd->add_option("--prompt-mode", ef.prompt_mode, "prompt source")
      ->check(CLI::IsMember({"class-name", "description"}))
      ->capture_default_str();
  add_data_flags(eval_cmd, ef.data);
  eval_cmd->add_option("--out", ef.out, "JSON results: {split, prompt_mode, model_id, n, mae, rmse, records}");
  add_inference_flags(eval_cmd, ef.inference);
  eval_cmd->footer(kExitCodes);

  InferFlags inf;
  auto* infer_cmd = app.add_subcommand("infer", "Count the objects described by --text in one image");
  add_checkpoint_flags(infer_cmd, inf.checkpoint, inf.merges, true);
  infer_cmd->add_option("--image", inf.image, "PNG or JPEG image")->required()->check(CLI::ExistingFile);
  infer_cmd->add_option("--text", inf.text, "what to count, e.g. \"the sea shells\"")->required();
  infer_cmd->add_option("--overlay-out", inf.overlay_out, "overlay PNG (default <image stem>_overlay.png)");
  infer_cmd->add_option("--json-out", inf.json_out, "JSON result: {count, rounded_count, window_counts, ...}");
  add_inference_flags(infer_cmd, inf.inference);
  infer_cmd->footer(kExitCodes);

  ServeFlags sf;
  auto* serve_cmd = app.add_subcommand("serve", "HTTP API: POST /api/count, GET /api/health, GET /api/model");
  add_checkpoint_flags(serve_cmd, sf.checkpoint, sf.merges, false);
  auto* no_model = serve_cmd->add_flag("--no-model", sf.no_model, "start without a model (count returns 503)");
  serve_cmd->get_option("--checkpoint")->excludes(no_model);
  serve_cmd->add_option("--host", sf.server.host, "bind address")->capture_default_str();
  serve_cmd->add_option("--port", sf.server.port, "port, 0 picks a free one")->capture_default_str();
  serve_cmd->add_option("--max-payload", sf.server.max_payload, "request size limit in bytes")
      ->capture_default_str();
  serve_cmd->add_option("--cors-origin", sf.server.cors_origin, "Access-Control-Allow-Origin value")
      ->capture_default_str();
  serve_cmd->add_option("--ui-dir", sf.server.ui_dir, "static files served under /ui")
      ->check(CLI::ExistingDirectory);
  add_inference_flags(serve_cmd, sf.inference);
  serve_cmd->footer(std::string("POST /api/count takes multipart (image file, description) or JSON "
                                "{image: base64, description, return_overlay, return_density, window_side, "
                                "stride}. Errors are {code, message}. ") +
                    kExitCodes);

  ValidateFlags vf;
  auto* dataset_cmd = app.add_subcommand("dataset", "Dataset utilities");
  dataset_cmd->require_subcommand(1);
  auto* validate_cmd = dataset_cmd->add_subcommand("validate", "Check dataset integrity and write a report");
  add_data_flags(validate_cmd, vf.data);
  validate_cmd->add_option("--report-out", vf.report_out, "JSON report (default <data-root>/dataset_report.json)");
  validate_cmd->add_option("--min-count", vf.min_count, "minimum annotated dots per image")->capture_default_str();
  validate_cmd->footer(kExitCodes);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n";
    const CLI::App* failed = &app;
    for (auto* sub : app.get_subcommands()) {
      failed = sub;
      for (auto* inner : sub->get_subcommands()) failed = inner;
    }
    std::cerr << failed->help();
    return kExitUsage;
  }
  if (serve_cmd->parsed() && !sf.no_model && sf.checkpoint.empty()) {
    std::cerr << "error: serve needs --checkpoint or --no-model\n\n" << serve_cmd->help();
    return kExitUsage;
  }

  try {
    if (train_cmd->parsed()) return run_train(tf, seed_opt->count() > 0);
    if (eval_cmd->parsed()) return run_evaluate(ef);
    if (infer_cmd->parsed()) return run_infer(inf);
    if (serve_cmd->parsed()) return run_serve(sf);
    if (validate_cmd->parsed()) return run_validate(vf);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    for (const auto& o : e.offenders()) std::cerr << "  " << o << '\n';
    return kExitFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace countx::cli
