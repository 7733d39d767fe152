// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The countx Authors

#include "countx/service/service.hpp"

#include "countx/infer/overlay.hpp"
#include "countx/io/base64.hpp"
#include "countx/io/image_io.hpp"

#include <httplib.h>

#include <chrono>
#include <cmath>

namespace countx::service {

namespace {

using nlohmann::json;

bool parse_flag(const std::string& v, const std::string& name) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off" || v.empty()) return false;
  throw ApiError(400, "invalid_option", name + " must be a boolean");
}

int parse_int(const std::string& v, const std::string& name) {
  try {
    std::size_t used = 0;
    const int n = std::stoi(v, &used);
    if (used == v.size()) return n;
  } catch (const std::exception&) {
  }
  throw ApiError(400, "invalid_option", name + " must be an integer");
}

json error_body(const std::string& code, const std::string& message) {
  return {{"code", code}, {"message", message}};
}

}  // namespace

CountService::CountService(std::shared_ptr<const infer::DensityPredictor> predictor,
                           infer::InferenceConfig inference)
    : predictor_(std::move(predictor)), inference_(inference) {
  inference_.validate();
}

json CountService::handle_count(const CountRequest& request) const {
  ++requests_;
  if (!predictor_) throw ApiError(503, "model_not_loaded", "no model is loaded");
  if (clean_text(request.description).empty())
    throw ApiError(400, "missing_description", "a non-empty description is required");
  if (request.image.empty()) throw ApiError(400, "missing_image", "an image is required");

  infer::InferenceConfig cfg = inference_;
  if (request.window_side) cfg.window_side = *request.window_side;
  if (request.stride) cfg.stride = *request.stride;
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw ApiError(400, "invalid_option", e.what());
  }

  RgbImage image;
  try {
    image = io::decode_image(request.image);
  } catch (const InputError& e) {
    throw ApiError(415, "unsupported_image", e.what());
  }

  const auto start = std::chrono::steady_clock::now();
  infer::CountResult result;
  try {
    result = infer::predict(*predictor_, image, request.description, cfg);
  } catch (const InputError& e) {
    throw ApiError(400, "invalid_request", e.what());
  }
  json out{{"count", result.count},
           {"rounded_count", std::llround(result.count)},
           {"window_counts", result.window_counts},
           {"density_width", result.density.cols()},
           {"density_height", result.density.rows()},
           {"prompt", result.prompt},
           {"model_id", predictor_->model_id()}};
  if (request.return_overlay) {
    const RgbImage resized = infer::resize_to_height(image, cfg.working_height);
    out["overlay"] = io::base64_encode(io::encode_png(infer::render_overlay(resized, result.density)));
  }
  if (request.return_density) {
    const auto& d = result.density;
    out["density"] = std::vector<double>(d.data(), d.data() + d.size());
  }
  const auto elapsed = std::chrono::steady_clock::now() - start;
  out["timing_ms"] = std::chrono::duration<double, std::milli>(elapsed).count();
  return out;
}

json CountService::health() const {
  return {{"status", "ok"},
          {"model_loaded", model_loaded()},
          {"requests", requests_.load()},
          {"errors", errors_.load()}};
}

json CountService::model_info() const {
  if (!predictor_) return {{"loaded", false}};
  json j = predictor_->describe();
  j["loaded"] = true;
  j["inference"] = inference_;
  return j;
}

CountRequest parse_json_request(const std::string& body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::parse_error& e) {
    throw ApiError(400, "bad_request", std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw ApiError(400, "bad_request", "JSON body must be an object");
  CountRequest r;
  try {
    if (j.contains("image")) r.image = io::base64_decode(j.at("image").get<std::string>());
    r.description = j.value("description", std::string());
    r.return_overlay = j.value("return_overlay", r.return_overlay);
    r.return_density = j.value("return_density", r.return_density);
    if (j.contains("window_side")) r.window_side = j.at("window_side").get<int>();
    if (j.contains("stride")) r.stride = j.at("stride").get<int>();
  } catch (const json::exception& e) {
    throw ApiError(400, "bad_request", e.what());
  } catch (const InputError& e) {
    throw ApiError(400, "bad_request", std::string("image: ") + e.what());
  }
  return r;
}

CountRequest parse_form_request(const std::map<std::string, std::string>& fields) {
  CountRequest r;
  const auto get = [&](const char* k) -> const std::string* {
    const auto it = fields.find(k);
    return it == fields.end() ? nullptr : &it->second;
  };
  if (const auto* v = get("image")) r.image.assign(v->begin(), v->end());
  if (const auto* v = get("description")) r.description = *v;
  if (const auto* v = get("return_overlay")) r.return_overlay = parse_flag(*v, "return_overlay");
  if (const auto* v = get("return_density")) r.return_density = parse_flag(*v, "return_density");
  if (const auto* v = get("window_side")) r.window_side = parse_int(*v, "window_side");
  if (const auto* v = get("stride")) r.stride = parse_int(*v, "stride");
  return r;
}

HttpServer::HttpServer(std::shared_ptr<const CountService> service, ServerConfig config)
    : service_(std::move(service)), config_(std::move(config)), server_(std::make_unique<httplib::Server>()) {
  if (!service_) throw ConfigError("server needs a service");
  install_routes();
}

HttpServer::~HttpServer() { stop(); }

void HttpServer::install_routes() {
  auto& s = *server_;
  s.set_payload_max_length(config_.max_payload);
  s.set_default_headers({{"Access-Control-Allow-Origin", config_.cors_origin},
                         {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                         {"Access-Control-Allow-Headers", "Content-Type"}});

  const auto send = [](httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  };

  s.set_error_handler([this, send](const httplib::Request&, httplib::Response& res) {
    if (!res.body.empty()) return httplib::Server::HandlerResponse::Unhandled;
    service_->record_error();
    if (res.status == 413)
      send(res, 413, error_body("payload_too_large",
                                "request exceeds " + std::to_string(config_.max_payload) + " bytes"));
    else if (res.status == 404)
      send(res, 404, error_body("not_found", "no such endpoint"));
    else
      send(res, res.status, error_body("http_error", httplib::status_message(res.status)));
    return httplib::Server::HandlerResponse::Handled;
  });

  s.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  s.Get("/api/health", [this, send](const httplib::Request&, httplib::Response& res) {
    send(res, 200, service_->health());
  });

  s.Get("/api/model", [this, send](const httplib::Request&, httplib::Response& res) {
    send(res, 200, service_->model_info());
  });

  s.Post("/api/count", [this, send](const httplib::Request& req, httplib::Response& res) {
    try {
      CountRequest request;
      const std::string type = req.get_header_value("Content-Type");
      if (req.is_multipart_form_data()) {
        std::map<std::string, std::string> fields;
        for (const auto& [name, part] : req.files) fields.emplace(name, part.content);
        request = parse_form_request(fields);
      } else if (type.starts_with("application/json")) {
        request = parse_json_request(req.body);
      } else {
        throw ApiError(415, "unsupported_media_type", "use multipart/form-data or application/json");
      }
      send(res, 200, service_->handle_count(request));
    } catch (const ApiError& e) {
      service_->record_error();
      send(res, e.status(), error_body(e.code(), e.what()));
    } catch (const std::exception& e) {
      service_->record_error();
      send(res, 500, error_body("internal_error", e.what()));
    }
  });

  if (config_.ui_dir) {
    if (!s.set_mount_point("/ui", config_.ui_dir->string()))
      throw ConfigError("ui directory not found: " + config_.ui_dir->string());
    s.Get("/", [](const httplib::Request&, httplib::Response& res) { res.set_redirect("/ui/"); });
  }
}

int HttpServer::bind() {
  port_ = config_.port == 0 ? server_->bind_to_any_port(config_.host)
                            : (server_->bind_to_port(config_.host, config_.port) ? config_.port : -1);
  if (port_ < 0)
    throw Error("cannot bind " + config_.host + ":" + std::to_string(config_.port));
  return port_;
}

void HttpServer::listen() {
  if (port_ < 0) throw Error("listen() before bind()");
  server_->listen_after_bind();
}

void HttpServer::stop() {
  if (server_ && server_->is_running()) server_->stop();
}

}  // namespace countx::service
