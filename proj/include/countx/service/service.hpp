// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The countx Authors

#pragma once

#include "countx/infer/sliding_window.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>

namespace httplib {
class Server;
}

namespace countx::service {

/// Error reported to clients as {"code", "message"} with an HTTP status.
class ApiError : public Error {
 public:
  ApiError(int status, std::string code, const std::string& message)
      : Error(message), status_(status), code_(std::move(code)) {}
  int status() const { return status_; }
  const std::string& code() const { return code_; }

 private:
  int status_;
  std::string code_;
};

struct CountRequest {
  std::vector<std::uint8_t> image;
  std::string description;
  bool return_overlay = true;
  bool return_density = false;
  std::optional<int> window_side;
  std::optional<int> stride;
};

/// Transport-free request handling over one immutable predictor.
class CountService {
 public:
  /// `predictor` may be null (no model loaded).
  CountService(std::shared_ptr<const infer::DensityPredictor> predictor, infer::InferenceConfig inference = {});

  bool model_loaded() const { return predictor_ != nullptr; }

  /// Throws ApiError: 503 model_not_loaded, 400 missing_description /
  /// invalid_option, 415 unsupported_image.
  nlohmann::json handle_count(const CountRequest& request) const;
  nlohmann::json health() const;
  nlohmann::json model_info() const;

  void record_error() const { ++errors_; }

 private:
  std::shared_ptr<const infer::DensityPredictor> predictor_;
  infer::InferenceConfig inference_;
  mutable std::atomic<std::uint64_t> requests_{0};
  mutable std::atomic<std::uint64_t> errors_{0};
};

/// JSON body: {"image": base64 (data URL prefix allowed), "description",
/// "return_overlay", "return_density", "window_side", "stride"}. Throws
/// ApiError 400 on malformed input.
CountRequest parse_json_request(const std::string& body);
/// Multipart fields by name, the "image" entry holding the raw file bytes.
CountRequest parse_form_request(const std::map<std::string, std::string>& fields);

struct ServerConfig {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::size_t max_payload = 16u << 20;
  std::string cors_origin = "*";
  std::optional<std::filesystem::path> ui_dir;
};

/// HTTP front end: POST /api/count, GET /api/health, GET /api/model, CORS
/// preflight on /api/*, and static files under /ui when ui_dir is set.
class HttpServer {
 public:
  HttpServer(std::shared_ptr<const CountService> service, ServerConfig config);
  ~HttpServer();

  /// Binds the socket and returns the port. Throws Error when binding fails.
  int bind();
  /// Serves until stop(); bind() must have succeeded.
  void listen();
  void stop();
  int port() const { return port_; }

 private:
  void install_routes();

  std::shared_ptr<const CountService> service_;
  ServerConfig config_;
  std::unique_ptr<httplib::Server> server_;
  int port_ = -1;
};

}  // namespace countx::service
