// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The countx Authors

#include "countx/io/base64.hpp"
#include "countx/io/image_io.hpp"
#include "countx/service/service.hpp"

#include "test_support.hpp"

#include <doctest.h>
#include <httplib.h>

#include <cmath>
#include <future>
#include <thread>

using namespace countx;
using namespace countx::service;
using nlohmann::json;

namespace {

// Server on a free port, serving from a background thread.
struct RunningServer {
  explicit RunningServer(std::shared_ptr<const infer::DensityPredictor> predictor, ServerConfig cfg = {}) {
    cfg.port = 0;
    server = std::make_unique<HttpServer>(std::make_shared<CountService>(std::move(predictor)), cfg);
    port = server->bind();
    thread = std::thread([this] { server->listen(); });
  }
  ~RunningServer() {
    server->stop();
    thread.join();
  }
  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port);
    c.set_read_timeout(60);
    return c;
  }
  std::unique_ptr<HttpServer> server;
  int port = 0;
  std::thread thread;
};

std::string png_bytes(int w, int h) {
  const auto bytes = io::encode_png(RgbImage::filled(w, h, 0.3f, 0.6f, 0.2f));
  return {bytes.begin(), bytes.end()};
}

json count_json(const std::string& png, const std::string& description, bool overlay = true) {
  return {{"image", io::base64_encode(std::span(reinterpret_cast<const std::uint8_t*>(png.data()), png.size()))},
          {"description", description},
          {"return_overlay", overlay}};
}

}  // namespace

TEST_CASE("count service without transport") {
  const CountService svc(std::make_shared<infer::ConstantPredictor>(0.5));
  const std::string png = png_bytes(48, 32);
  CountRequest req;
  req.image.assign(png.begin(), png.end());
  req.description = "the pens";
  const auto out = svc.handle_count(req);
  CHECK(out["count"].get<double>() == doctest::Approx(0.5 * 576 * 384 / 60.0).epsilon(1e-12));
  CHECK(out["rounded_count"] == std::llround(0.5 * 576 * 384 / 60.0));
  CHECK(out["density_width"] == 576);
  CHECK(out.contains("overlay"));
  CHECK_FALSE(out.contains("density"));
  req.return_density = true;
  req.return_overlay = false;
  const auto raw = svc.handle_count(req);
  CHECK(raw["density"].size() == 576 * 384);
  CHECK_FALSE(raw.contains("overlay"));

  auto status_of = [&](CountRequest r) {
    try {
      svc.handle_count(r);
    } catch (const ApiError& e) {
      return e.status();
    }
    return 200;
  };
  CountRequest blank = req;
  blank.description = "  ";
  CHECK(status_of(blank) == 400);
  CountRequest junk = req;
  junk.image = {1, 2, 3};
  CHECK(status_of(junk) == 415);
  CountRequest bad_stride = req;
  bad_stride.stride = 0;
  CHECK(status_of(bad_stride) == 400);
  CHECK(svc.health()["requests"].get<int>() >= 5);

  const CountService empty(nullptr);
  CHECK(empty.health()["model_loaded"] == false);
  CHECK(empty.model_info()["loaded"] == false);
  try {
    empty.handle_count(req);
    FAIL("expected 503");
  } catch (const ApiError& e) {
    CHECK(e.status() == 503);
    CHECK(e.code() == "model_not_loaded");
  }
}

TEST_CASE("request parsers") {
  const auto r = parse_json_request(R"({"image": "data:image/png;base64,AAEC", "description": "x", "stride": 64})");
  CHECK(r.image == std::vector<std::uint8_t>{0, 1, 2});
  CHECK(r.stride == 64);
  CHECK(r.return_overlay);
  CHECK_THROWS_AS(parse_json_request("{"), ApiError);
  CHECK_THROWS_AS(parse_json_request(R"({"image": "!!"})"), ApiError);
  CHECK_THROWS_AS(parse_json_request(R"({"stride": "wide"})"), ApiError);
  const auto f = parse_form_request({{"image", "abc"}, {"description", "y"}, {"return_overlay", "false"}});
  CHECK(f.image.size() == 3);
  CHECK_FALSE(f.return_overlay);
  CHECK_THROWS_AS(parse_form_request({{"window_side", "big"}}), ApiError);
}

TEST_CASE("http endpoints") {
  ServerConfig cfg;
  cfg.max_payload = 1 << 20;
  RunningServer srv(std::make_shared<infer::ConstantPredictor>(0.25), cfg);
  auto cli = srv.client();

  const auto health = cli.Get("/api/health");
  REQUIRE(health);
  CHECK(health->status == 200);
  CHECK(json::parse(health->body)["model_loaded"] == true);
  CHECK(health->get_header_value("Access-Control-Allow-Origin") == "*");

  const auto model = cli.Get("/api/model");
  REQUIRE(model);
  CHECK(json::parse(model->body)["model_id"] == "stub:uniform:0.25");

  const std::string png = png_bytes(48, 32);
  const double expected = 0.25 * 576 * 384 / 60.0;
  const auto res = cli.Post("/api/count", count_json(png, "the pens").dump(), "application/json");
  REQUIRE(res);
  CHECK(res->status == 200);
  const auto body = json::parse(res->body);
  CHECK(body["count"].get<double>() == doctest::Approx(expected).epsilon(1e-12));
  const auto overlay = io::base64_decode(body["overlay"].get<std::string>());
  CHECK(io::sniff_format(overlay) == io::ImageFormat::kPng);

  const auto small = cli.Post("/api/count", count_json(png, "the pens", false).dump(), "application/json");
  REQUIRE(small);
  CHECK_FALSE(json::parse(small->body).contains("overlay"));
  CHECK(small->body.size() < res->body.size());

  httplib::MultipartFormDataItems form{{"image", png, "a.png", "image/png"}, {"description", "the pens", "", ""}};
  const auto multipart = cli.Post("/api/count", form);
  REQUIRE(multipart);
  CHECK(multipart->status == 200);
  CHECK(json::parse(multipart->body)["count"] == body["count"]);

  const auto no_text = cli.Post("/api/count", count_json(png, "").dump(), "application/json");
  REQUIRE(no_text);
  CHECK(no_text->status == 400);
  CHECK(json::parse(no_text->body)["code"] == "missing_description");

  const std::string junk = "not an image at all";
  const auto bad = cli.Post("/api/count", count_json(junk, "x").dump(), "application/json");
  REQUIRE(bad);
  CHECK(bad->status == 415);
  CHECK(json::parse(bad->body).contains("message"));

  const auto huge = cli.Post("/api/count", std::string((1 << 20) + 10, 'a'), "application/json");
  REQUIRE(huge);
  CHECK(huge->status == 413);
  CHECK(json::parse(huge->body)["code"] == "payload_too_large");

  const auto text = cli.Post("/api/count", "hello", "text/plain");
  REQUIRE(text);
  CHECK(text->status == 415);

  const auto missing = cli.Get("/api/nothing");
  REQUIRE(missing);
  CHECK(missing->status == 404);
  CHECK(json::parse(missing->body)["code"] == "not_found");

  const auto preflight = cli.Options("/api/count");
  REQUIRE(preflight);
  CHECK(preflight->status == 204);
  CHECK(preflight->get_header_value("Access-Control-Allow-Methods").find("POST") != std::string::npos);
}

TEST_CASE("concurrent requests agree with serial ones") {
  auto model = std::make_shared<const CountingModel<float>>(ModelConfig::toy(), 3);
  auto pred = std::make_shared<infer::ModelPredictor<float>>(model, make_tokenizer(model->config()));
  RunningServer srv(pred);
  RgbImage im(90, 60);
  for (int y = 0; y < 60; ++y)
    for (int x = 0; x < 90; ++x)
      for (int c = 0; c < 3; ++c) im.at(c, y, x) = static_cast<float>((x * (c + 1) + y) % 23) / 22.0f;
  const auto bytes = io::encode_png(im);
  const std::string png(bytes.begin(), bytes.end());
  const std::vector<std::string> prompts{"the apples", "the boats", "small birds", "the pens"};
  std::vector<double> serial;
  for (const auto& p : prompts) {
    auto cli = srv.client();
    serial.push_back(json::parse(cli.Post("/api/count", count_json(png, p, false).dump(), "application/json")->body)
                         .at("count")
                         .get<double>());
  }
  std::vector<std::future<double>> futures;
  for (int rep = 0; rep < 3; ++rep)
    for (const auto& p : prompts)
      futures.push_back(std::async(std::launch::async, [&, p] {
        auto cli = srv.client();
        return json::parse(cli.Post("/api/count", count_json(png, p, false).dump(), "application/json")->body)
            .at("count")
            .get<double>();
      }));
  for (std::size_t i = 0; i < futures.size(); ++i) CHECK(futures[i].get() == serial[i % prompts.size()]);
}

TEST_CASE("no-model server and static ui") {
  countx::testing::TempDir ui("ui");
  std::ofstream(ui / "index.html") << "<html>countx</html>";
  ServerConfig cfg;
  cfg.ui_dir = ui.path();
  RunningServer srv(nullptr, cfg);
  auto cli = srv.client();
  CHECK(json::parse(cli.Get("/api/health")->body)["model_loaded"] == false);
  const auto res = cli.Post("/api/count", count_json(png_bytes(8, 8), "x").dump(), "application/json");
  REQUIRE(res);
  CHECK(res->status == 503);
  const auto page = cli.Get("/ui/index.html");
  REQUIRE(page);
  CHECK(page->status == 200);
  CHECK(page->body.find("countx") != std::string::npos);
}
