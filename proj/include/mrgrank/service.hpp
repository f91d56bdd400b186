#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <string_view>

#include "mrgrank/session.hpp"

namespace mrgrank {

struct HttpRequest {
  std::string method;
  std::string path;                               // decoded
  std::multimap<std::string, std::string> query;  // decoded
  std::string body;
};

struct HttpResponse {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

/// Routes JSON API requests onto a Session. GET handlers run under a shared
/// lock and POST handlers under an exclusive one, so a reader sees the state
/// either before or after an edit, never in between.
class Service {
 public:
  explicit Service(Session session) : session_(std::move(session)) {}

  HttpResponse handle(const HttpRequest& request);
  /// `target` is a raw request target such as "/api/rankings?kind=user&top=5".
  HttpResponse handle(std::string_view method, std::string_view target, std::string body = {});

  template <class Fn>
  auto read(Fn&& fn) const {
    std::shared_lock lock(mutex_);
    return fn(static_cast<const Session&>(session_));
  }
  template <class Fn>
  auto write(Fn&& fn) {
    std::unique_lock lock(mutex_);
    return fn(session_);
  }

 private:
  mutable std::shared_mutex mutex_;
  Session session_;
};

/// HTTP/1.1 front end for a Service.
class HttpServer {
 public:
  explicit HttpServer(Service& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds and starts serving on a background thread; port 0 picks a free
  /// port. Returns the bound port.
  int start(const std::string& host, int port);
  /// Serves on the calling thread until stop() is called from elsewhere.
  void run(const std::string& host, int port);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace mrgrank
