#pragma once

#include <fmt/format.h>

#include <atomic>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "entangle/engine.hpp"

namespace entangle {

// ---------------------------------------------------------------------------
// Operations shared by the CLI and the HTTP service. Each returns the
// payload both shells emit.

namespace ops {

inline nlohmann::json activations(const Engine& engine, const SixCProfile& scenario) {
  return to_json(engine.activate(scenario));
}

inline nlohmann::json matrix(const Engine& engine, std::optional<KappaScheme> scheme) {
  return to_json(*engine.matrix(scheme));
}

inline std::string matrix_csv(const Engine& engine, std::optional<KappaScheme> scheme) {
  return to_csv(*engine.matrix(scheme));
}

inline nlohmann::json graph(const Engine& engine, const SixCProfile& scenario, std::size_t top_n,
                            std::optional<KappaScheme> scheme) {
  return to_json(engine.graph(scenario, top_n, scheme));
}

inline nlohmann::json synthesize(const Engine& engine, const SynthesisDescriptor& d) {
  return to_json(engine.synthesize(d));
}

inline nlohmann::json evaluate(const Engine& engine, const std::string& synthesis, const std::vector<std::string>& inputs,
                               const std::string& label, const std::optional<EvaluationConfig>& cfg) {
  return to_json(engine.evaluate(synthesis, engine.resolve_inputs(inputs), label, cfg));
}

inline nlohmann::json compare_reports(const nlohmann::json& entangled, const nlohmann::json& baseline) {
  return to_json(compare(evaluation_report_from_json(entangled), evaluation_report_from_json(baseline)));
}

inline nlohmann::json compare_modes(const Engine& engine, const SynthesisDescriptor& d) {
  return to_json(engine.compare_modes(d));
}

inline RadarData radar(const nlohmann::json& reports) {
  if (!reports.is_array()) throw Error(ErrorCode::invalid_input, "reports: expected an array");
  std::vector<EvaluationReport> parsed;
  for (const auto& r : reports) parsed.push_back(evaluation_report_from_json(r));
  return radar_export(parsed);
}

/// "m1,m2" -> {"m1","m2"}; a lone filter expression stays whole.
inline std::vector<std::string> split_ids(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    auto comma = s.find(',', start);
    auto piece = trim(s.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (!piece.empty()) out.emplace_back(piece);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace ops

// ---------------------------------------------------------------------------
// Transport-independent request handling

struct ApiRequest {
  std::string method;
  std::string path;
  std::map<std::string, std::string> query;
  std::string body;
  std::string request_id;  // generated when empty
};

struct ApiResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
  std::string request_id;

  nlohmann::json json() const { return nlohmann::json::parse(body); }
};

inline int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_input:
    case ErrorCode::parse_error: return 400;
    case ErrorCode::not_found: return 404;
    case ErrorCode::invariant_violation:
    case ErrorCode::duplicate_id: return 422;
    case ErrorCode::provider_unavailable:
    case ErrorCode::provider_refusal:
    case ErrorCode::empty_narrative: return 502;
    case ErrorCode::provider_timeout: return 504;
    case ErrorCode::config_error:
    case ErrorCode::io_error: return 500;
  }
  return 500;
}

inline nlohmann::json error_record(ErrorCode code, std::string_view message, std::string_view request_id = {}) {
  nlohmann::json j{{"code", to_string(code)}, {"message", message}};
  if (!request_id.empty()) j["request_id"] = request_id;
  return j;
}

class Service {
 public:
  explicit Service(std::shared_ptr<const Engine> engine) : engine_(std::move(engine)) {}

  const Engine& engine() const { return *engine_; }

  ApiResponse handle(const ApiRequest& req) const {
    ApiResponse res;
    res.request_id = req.request_id.empty() ? fmt::format("req-{:08x}", ++counter_) : req.request_id;
    try {
      route(req, res);
    } catch (const Error& e) {
      fail(res, http_status(e.code()), e.code(), e.what());
    } catch (const nlohmann::json::exception& e) {
      fail(res, 400, ErrorCode::invalid_input, e.what());
    } catch (const std::exception& e) {
      fail(res, 500, ErrorCode::io_error, e.what());
    }
    return res;
  }

 private:
  static void ok(ApiResponse& res, const nlohmann::json& j) {
    res.status = 200;
    res.content_type = "application/json";
    res.body = j.dump();
  }

  static void fail(ApiResponse& res, int status, ErrorCode code, std::string_view message) {
    res.status = status;
    res.content_type = "application/json";
    res.body = error_record(code, message, res.request_id).dump();
  }

  static nlohmann::json parse_body(const ApiRequest& req) {
    try {
      return nlohmann::json::parse(req.body);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::parse_error, fmt::format("request body is not JSON: {}", e.what()));
    }
  }

  static std::optional<std::string> query(const ApiRequest& req, const std::string& key) {
    auto it = req.query.find(key);
    if (it == req.query.end() || it->second.empty()) return std::nullopt;
    return it->second;
  }

  static std::optional<KappaScheme> scheme_param(const std::optional<std::string>& s) {
    if (!s) return std::nullopt;
    try {
      return parse_kappa_scheme(*s);
    } catch (const Error& e) {
      throw Error(ErrorCode::invalid_input, fmt::format("scheme: {}", e.what()));
    }
  }

  void route(const ApiRequest& req, ApiResponse& res) const {
    const auto& m = req.method;
    const auto& p = req.path;
    auto expect = [&](const char* method) {
      if (m != method)
        throw Error(ErrorCode::invalid_input, fmt::format("{} does not accept {}", p, m));
    };
    const Engine& e = *engine_;
    if (p == "/health") {
      expect("GET");
      ok(res, e.health());
    } else if (p == "/library") {
      expect("GET");
      auto lib = e.library();
      if (auto f = query(req, "filter")) lib = filter_axioms(lib, AxiomFilter::parse(*f));
      ok(res, library_to_json(lib));
    } else if (p == "/activations") {
      expect("POST");
      ok(res, ops::activations(e, profile_from_json(parse_body(req))));
    } else if (p == "/matrix") {
      expect("GET");
      auto scheme = scheme_param(query(req, "scheme"));
      if (query(req, "format").value_or("json") == "csv") {
        res.status = 200;
        res.content_type = "text/csv";
        res.body = ops::matrix_csv(e, scheme);
      } else {
        ok(res, ops::matrix(e, scheme));
      }
    } else if (p == "/graph") {
      expect("POST");
      auto body = parse_body(req);
      auto scenario = profile_from_json(body.at("scenario"));
      auto top_n = body.value("top_n", e.config().top_n);
      std::optional<std::string> scheme;
      if (body.contains("scheme") && !body["scheme"].is_null()) scheme = body["scheme"].get<std::string>();
      ok(res, ops::graph(e, scenario, top_n, scheme_param(scheme)));
    } else if (p == "/synthesize") {
      expect("POST");
      auto body = parse_body(req);
      auto out = ops::synthesize(e, synthesis_descriptor_from_json(body));
      e.audit("synthesize", body, out);
      ok(res, out);
    } else if (p == "/evaluate") {
      expect("POST");
      auto body = parse_body(req);
      std::vector<std::string> inputs;
      if (body.contains("inputs")) {
        if (body["inputs"].is_string()) inputs = ops::split_ids(body["inputs"].get<std::string>());
        else inputs = body["inputs"].get<std::vector<std::string>>();
      }
      std::optional<EvaluationConfig> cfg;
      if (body.contains("config")) cfg = evaluation_config_from_json(body["config"], e.config().evaluation);
      ok(res, ops::evaluate(e, body.at("synthesis").get<std::string>(), inputs, body.value("label", "synthesis"), cfg));
    } else if (p == "/compare") {
      expect("POST");
      auto body = parse_body(req);
      if (body.contains("scenario")) {
        auto out = ops::compare_modes(e, synthesis_descriptor_from_json(body));
        e.audit("compare", body, out);
        ok(res, out);
      } else {
        ok(res, ops::compare_reports(body.at("entangled"), body.at("baseline")));
      }
    } else if (p == "/radar") {
      expect("POST");
      auto body = parse_body(req);
      auto data = ops::radar(body.at("reports"));
      if (body.value("format", "json") == "svg") {
        res.status = 200;
        res.content_type = "image/svg+xml";
        res.body = radar_svg(data);
      } else {
        ok(res, to_json(data));
      }
    } else {
      throw Error(ErrorCode::not_found, fmt::format("no endpoint {} {}", m, p));
    }
  }

  std::shared_ptr<const Engine> engine_;
  mutable std::atomic<std::uint64_t> counter_{0};
};

// ---------------------------------------------------------------------------
// HTTP transport

/// Serves a Service over HTTP. listen() blocks; start() runs on a thread.
class HttpServer {
 public:
  explicit HttpServer(std::shared_ptr<const Service> service) : service_(std::move(service)) {
    auto handler = [this](const httplib::Request& hreq, httplib::Response& hres) {
      ApiRequest req{hreq.method, hreq.path, {}, hreq.body, hreq.get_header_value("X-Request-Id")};
      for (const auto& [k, v] : hreq.params) req.query[k] = v;
      auto res = service_->handle(req);
      hres.status = res.status;
      hres.set_header("X-Request-Id", res.request_id);
      hres.set_content(res.body, res.content_type);
    };
    server_.Get(R"(/.*)", handler);
    server_.Post(R"(/.*)", handler);
    server_.Put(R"(/.*)", handler);
    server_.Delete(R"(/.*)", handler);
  }

  ~HttpServer() { stop(); }

  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds host:port; port 0 picks a free port. Returns the bound port.
  int bind(const std::string& host, int port) {
    int bound = port == 0 ? server_.bind_to_any_port(host) : (server_.bind_to_port(host, port) ? port : -1);
    if (bound < 0) throw Error(ErrorCode::config_error, fmt::format("cannot bind {}:{}", host, port));
    return bound;
  }

  void listen() { server_.listen_after_bind(); }

  void start() {
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  void stop() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

 private:
  std::shared_ptr<const Service> service_;
  httplib::Server server_;
  std::thread thread_;
};

inline std::pair<std::string, int> parse_bind(std::string_view bind) {
  auto colon = bind.rfind(':');
  if (colon == std::string_view::npos) throw Error(ErrorCode::config_error, fmt::format("bind '{}' must be host:port", bind));
  std::string host(bind.substr(0, colon));
  int port = 0;
  try {
    port = std::stoi(std::string(bind.substr(colon + 1)));
  } catch (const std::exception&) {
    throw Error(ErrorCode::config_error, fmt::format("bind '{}' has no valid port", bind));
  }
  if (port < 0 || port > 65535) throw Error(ErrorCode::config_error, fmt::format("bind '{}' port out of range", bind));
  return {host.empty() ? "0.0.0.0" : host, port};
}

}  // namespace entangle
