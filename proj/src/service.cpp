#include "mrgrank/service.hpp"

#include <charconv>
#include <cmath>
#include <thread>

#include <httplib.h>

#include "mrgrank/error.hpp"

namespace mrgrank {

namespace {

struct HttpError {
  int status;
  std::string code;
  std::string message;
};

const char* status_code(int status) {
  switch (status) {
    case 400: return "bad_request";
    case 404: return "not_found";
    case 405: return "method_not_allowed";
    case 409: return "conflict";
    case 422: return "unprocessable";
    default: return "internal";
  }
}

[[noreturn]] void fail(int status, std::string message) {
  throw HttpError{status, status_code(status), std::move(message)};
}

int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::OutOfRange:
    case ErrorCode::Parse: return 400;
    case ErrorCode::NotFound: return 404;
    case ErrorCode::InvalidState: return 409;
    default: return 500;
  }
}

HttpResponse json_response(int status, const nlohmann::json& body) {
  return {status, body.dump(), "application/json"};
}

const std::string* single(const HttpRequest& r, const std::string& key) {
  auto it = r.query.find(key);
  return it == r.query.end() ? nullptr : &it->second;
}

ItemKind kind_param(const HttpRequest& r) {
  const std::string* v = single(r, "kind");
  if (!v) fail(400, "missing query parameter: kind");
  auto kind = parse_kind(*v);
  if (!kind) fail(400, "unknown kind: " + *v);
  return *kind;
}

std::optional<std::size_t> count_param(const HttpRequest& r, const std::string& key) {
  const std::string* v = single(r, key);
  if (!v) return std::nullopt;
  std::size_t out = 0;
  auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
  if (v->empty() || ec != std::errc() || ptr != v->data() + v->size()) {
    fail(400, key + " must be a non-negative integer");
  }
  return out;
}

nlohmann::json edit_json(const EditResult& e) {
  nlohmann::json changes = nlohmann::json::array();
  for (const ItemDelta& d : e.changes) {
    changes.push_back({{"id", d.id},
                       {"old_score", d.old_score},
                       {"new_score", d.new_score},
                       {"old_u", d.old_u},
                       {"new_u", d.new_u}});
  }
  return {{"item_id", e.item_id},
          {"bucket", e.bucket},
          {"old_prior", e.old_prior},
          {"new_prior", e.new_prior},
          {"noop", e.noop},
          {"affected", e.affected},
          {"changes", std::move(changes)},
          {"stats",
           {{"changed_transitions", e.stats.changed_transitions},
            {"touched_walks", e.stats.touched_walks},
            {"touched_steps", e.stats.touched_steps},
            {"indexed_steps", e.stats.indexed_steps}}}};
}

ScoreEdit parse_edit(const std::string& id, const std::string& body) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception&) {
    fail(400, "request body is not valid JSON");
  }
  if (!j.is_object()) fail(400, "request body must be a JSON object");
  ScoreEdit e;
  e.item_id = id;
  const bool has_ui = j.contains("ui_score"), has_prior = j.contains("prior");
  if (has_ui == has_prior) fail(400, "give exactly one of ui_score or prior");
  if (has_ui) {
    const auto& v = j["ui_score"];
    if (!v.is_number()) fail(422, "ui_score must be an integer in [1, 10]");
    const double x = v.get<double>();
    if (x != std::floor(x) || x < 1 || x > 10) fail(422, "ui_score must be an integer in [1, 10]");
    e.ui_score = static_cast<int>(x);
  } else {
    const auto& v = j["prior"];
    if (!v.is_number()) fail(422, "prior must be a number");
    e.prior = v.get<double>();
    if (!(*e.prior > 0.0) || !std::isfinite(*e.prior)) fail(422, "non-positive prior");
  }
  return e;
}

std::vector<std::string> sources_param(const HttpRequest& r) {
  std::vector<std::string> out;
  auto [lo, hi] = r.query.equal_range("source");
  for (auto it = lo; it != hi; ++it) out.push_back(it->second);
  if (out.empty()) fail(400, "missing query parameter: source");
  return out;
}

}  // namespace

HttpResponse Service::handle(const HttpRequest& r) {
  try {
    const std::string& p = r.path;
    const bool get = r.method == "GET", post = r.method == "POST";
    if (p == "/api/health") {
      if (!get) fail(405, "use GET");
      return json_response(200, {{"status", "ok"}});
    }
    if (p == "/api/summary") {
      if (!get) fail(405, "use GET");
      return json_response(200, read([](const Session& s) { return s.summary_json(); }));
    }
    if (p == "/api/rankings") {
      if (!get) fail(405, "use GET");
      const ItemKind kind = kind_param(r);
      const std::size_t top = count_param(r, "top").value_or(20);
      return json_response(200, read([&](const Session& s) { return s.rankings_json(kind, top); }));
    }
    if (p == "/api/clusters" || p == "/api/layout") {
      if (!get) fail(405, "use GET");
      const ItemKind kind = kind_param(r);
      const auto level = count_param(r, "level");
      return json_response(200, read([&](const Session& s) {
        s.state();
        const std::size_t l = s.resolve_level(kind, level);
        return p == "/api/clusters" ? s.clusters_json(kind, l) : s.layout_json(kind, l);
      }));
    }
    if (p == "/api/propagation") {
      if (!get) fail(405, "use GET");
      const auto sources = sources_param(r);
      return json_response(200, read([&](const Session& s) {
        s.state();
        try {
          return s.propagation_json(sources);
        } catch (const Error& e) {
          if (e.code() == ErrorCode::Parse) fail(404, e.what());
          throw;
        }
      }));
    }
    if (p == "/api/solve") {
      if (!post) fail(405, "use POST");
      const std::string* m = single(r, "method");
      const auto method = parse_method(m ? *m : "mc");
      if (!method) fail(400, "method must be exact or mc");
      return json_response(200, write([&](Session& s) {
        s.solve(*method);
        return s.summary_json();
      }));
    }
    if (p == "/api/renormalize") {
      if (!post) fail(405, "use POST");
      return json_response(200, write([](Session& s) {
        s.renormalize();
        return s.summary_json();
      }));
    }
    constexpr std::string_view items = "/api/items/", score = "/score";
    if (p.size() > items.size() + score.size() && p.starts_with(items) && p.ends_with(score)) {
      if (!post) fail(405, "use POST");
      const std::string id = p.substr(items.size(), p.size() - items.size() - score.size());
      const ScoreEdit e = parse_edit(id, r.body);
      return json_response(200, write([&](Session& s) {
        if (!s.catalog().find(e.item_id)) fail(404, "unknown item: " + e.item_id);
        try {
          return edit_json(s.edit(e));
        } catch (const Error& err) {
          if (err.code() == ErrorCode::OutOfRange) fail(422, err.what());
          throw;
        }
      }));
    }
    fail(404, "no such endpoint: " + p);
  } catch (const HttpError& e) {
    return json_response(e.status, {{"error", e.code}, {"message", e.message}});
  } catch (const Error& e) {
    const int status = status_for(e.code());
    return json_response(status, {{"error", status_code(status)}, {"message", e.what()}});
  } catch (const std::exception& e) {
    return json_response(500, {{"error", "internal"}, {"message", e.what()}});
  }
}

HttpResponse Service::handle(std::string_view method, std::string_view target, std::string body) {
  HttpRequest r;
  r.method = std::string(method);
  const auto q = target.find('?');
  r.path = httplib::detail::decode_url(std::string(target.substr(0, q)), false);
  if (q != std::string_view::npos) {
    httplib::Params params;
    httplib::detail::parse_query_text(std::string(target.substr(q + 1)), params);
    for (auto& [k, v] : params) r.query.emplace(k, v);
  }
  r.body = std::move(body);
  return handle(r);
}

struct HttpServer::Impl {
  explicit Impl(Service& s) : service(s) {
    auto route = [this](const httplib::Request& req, httplib::Response& res) {
      HttpRequest r;
      r.method = req.method;
      r.path = req.path;
      for (const auto& [k, v] : req.params) r.query.emplace(k, v);
      r.body = req.body;
      const HttpResponse out = service.handle(r);
      res.status = out.status;
      res.set_header("Access-Control-Allow-Origin", "*");
      res.set_content(out.body, out.content_type);
    };
    server.Get(".*", route);
    server.Post(".*", route);
    server.Put(".*", route);
    server.Delete(".*", route);
    server.Patch(".*", route);
  }

  Service& service;
  httplib::Server server;
  std::thread thread;
};

HttpServer::HttpServer(Service& service) : impl_(std::make_unique<Impl>(service)) {}

HttpServer::~HttpServer() { stop(); }

int HttpServer::start(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = impl_->server.bind_to_any_port(host);
  } else if (!impl_->server.bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound < 0) throw Error(ErrorCode::Io, "cannot bind " + host + ":" + std::to_string(port));
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return bound;
}

void HttpServer::run(const std::string& host, int port) {
  if (!impl_->server.listen(host, port)) {
    throw Error(ErrorCode::Io, "cannot listen on " + host + ":" + std::to_string(port));
  }
}

void HttpServer::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace mrgrank
