#include "mrgrank/mrgrank.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

#include "mrgrank/error.hpp"
#include "mrgrank/service.hpp"
#include "mrgrank/synth.hpp"

struct mrg_session {
  explicit mrg_session(mrgrank::Session s) : service(std::move(s)) {}
  mrgrank::Service service;
};

struct mrg_server {
  explicit mrg_server(mrgrank::Service& s) : http(s) {}
  mrgrank::HttpServer http;
};

namespace {

thread_local std::string last_error;

mrg_status status_of(mrgrank::ErrorCode code) {
  using mrgrank::ErrorCode;
  switch (code) {
    case ErrorCode::InvalidArgument: return MRG_INVALID_ARGUMENT;
    case ErrorCode::NotFound: return MRG_NOT_FOUND;
    case ErrorCode::OutOfRange: return MRG_OUT_OF_RANGE;
    case ErrorCode::InvalidState: return MRG_INVALID_STATE;
    case ErrorCode::Parse: return MRG_PARSE;
    case ErrorCode::Io: return MRG_IO;
    case ErrorCode::Numeric: return MRG_NUMERIC;
  }
  return MRG_INTERNAL;
}

template <class Fn>
mrg_status guarded(Fn&& fn) {
  try {
    fn();
    last_error.clear();
    return MRG_OK;
  } catch (const mrgrank::Error& e) {
    last_error = e.what();
    return status_of(e.code());
  } catch (const std::exception& e) {
    last_error = e.what();
    return MRG_INTERNAL;
  } catch (...) {
    last_error = "unknown error";
    return MRG_INTERNAL;
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw mrgrank::Error(mrgrank::ErrorCode::InvalidArgument, what);
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size() + 1);
  return out;
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string part;
  while (std::getline(in, part, ',')) {
    if (!part.empty()) out.push_back(part);
  }
  return out;
}

}  // namespace

extern "C" {

const char* mrg_version(void) { return "0.1.0"; }

const char* mrg_last_error(void) { return last_error.c_str(); }

void mrg_string_free(char* s) { std::free(s); }

mrg_status mrg_session_build(const char* config_path, const char* posts_path,
                             const char* users_path, mrg_session** out) {
  return guarded([&] {
    require(posts_path && users_path && out, "posts, users and out are required");
    *out = nullptr;
    mrgrank::EngineConfig config = config_path ? mrgrank::load_config(config_path) : mrgrank::EngineConfig{};
    auto session = mrgrank::Session::build(std::move(config), mrgrank::load_corpus(posts_path, users_path));
    *out = new mrg_session(std::move(session));
  });
}

mrg_status mrg_session_load(const char* path, mrg_session** out) {
  return guarded([&] {
    require(path && out, "path and out are required");
    *out = nullptr;
    *out = new mrg_session(mrgrank::Session::load(path));
  });
}

mrg_status mrg_session_save(mrg_session* session, const char* path) {
  return guarded([&] {
    require(session && path, "session and path are required");
    session->service.read([&](const mrgrank::Session& s) {
      s.save(path);
      return 0;
    });
  });
}

void mrg_session_free(mrg_session* session) { delete session; }

mrg_status mrg_session_set_seed(mrg_session* session, uint64_t seed) {
  return guarded([&] {
    require(session, "session is required");
    session->service.write([&](mrgrank::Session& s) {
      s.set_seed(seed);
      return 0;
    });
  });
}

mrg_status mrg_session_set_walks(mrg_session* session, size_t walks_per_node) {
  return guarded([&] {
    require(session && walks_per_node > 0, "walks_per_node must be positive");
    session->service.write([&](mrgrank::Session& s) {
      s.set_walks_per_node(walks_per_node);
      return 0;
    });
  });
}

mrg_status mrg_session_set_edit_log(mrg_session* session, const char* path) {
  return guarded([&] {
    require(session && path, "session and path are required");
    session->service.write([&](mrgrank::Session& s) {
      s.set_edit_log(path);
      return 0;
    });
  });
}

mrg_status mrg_session_solve(mrg_session* session, const char* method) {
  return guarded([&] {
    require(session && method, "session and method are required");
    const auto m = mrgrank::parse_method(method);
    require(m.has_value(), "method must be exact or mc");
    session->service.write([&](mrgrank::Session& s) {
      s.solve(*m);
      return 0;
    });
  });
}

mrg_status mrg_session_request(mrg_session* session, const char* method, const char* target,
                               const char* body, int* http_status, char** response) {
  return guarded([&] {
    require(session && method && target && http_status && response,
            "session, method, target, http_status and response are required");
    *response = nullptr;
    const auto r = session->service.handle(method, target, body ? body : "");
    *http_status = r.status;
    *response = copy_string(r.body);
  });
}

mrg_status mrg_session_summary(mrg_session* session, char** json) {
  return guarded([&] {
    require(session && json, "session and json are required");
    *json = nullptr;
    *json = copy_string(session->service.read([](const mrgrank::Session& s) { return s.summary_json().dump(); }));
  });
}

mrg_status mrg_session_export_svg(mrg_session* session, const char* sources, const char* svg_path) {
  return guarded([&] {
    require(session && sources && svg_path, "session, sources and path are required");
    const std::string svg = session->service.read(
        [&](const mrgrank::Session& s) { return s.flows_svg(split_csv(sources)); });
    std::ofstream f(svg_path, std::ios::binary | std::ios::trunc);
    if (!f) throw mrgrank::Error(mrgrank::ErrorCode::Io, std::string("cannot write ") + svg_path);
    f << svg;
  });
}

mrg_status mrg_session_write_walks(mrg_session* session, const char* path) {
  return guarded([&] {
    require(session && path, "session and path are required");
    session->service.read([&](const mrgrank::Session& s) {
      if (!s.walks()) throw mrgrank::Error(mrgrank::ErrorCode::InvalidState, "no Monte Carlo walks stored");
      std::ofstream f(path, std::ios::binary | std::ios::trunc);
      if (!f) throw mrgrank::Error(mrgrank::ErrorCode::Io, std::string("cannot write ") + path);
      s.walks()->write_snapshot(f);
      return 0;
    });
  });
}

mrg_status mrg_server_start(mrg_session* session, const char* host, int port, mrg_server** out,
                            int* bound_port) {
  return guarded([&] {
    require(session && host && out, "session, host and out are required");
    *out = nullptr;
    auto server = std::make_unique<mrg_server>(session->service);
    const int p = server->http.start(host, port);
    if (bound_port) *bound_port = p;
    *out = server.release();
  });
}

void mrg_server_stop(mrg_server* server) { delete server; }

mrg_status mrg_server_run(mrg_session* session, const char* host, int port) {
  return guarded([&] {
    require(session && host, "session and host are required");
    mrgrank::HttpServer http(session->service);
    http.run(host, port);
  });
}

mrg_status mrg_generate_synthetic(const char* dir, uint64_t seed) {
  return guarded([&] {
    require(dir, "dir is required");
    mrgrank::SyntheticSpec spec;
    spec.seed = seed;
    mrgrank::write_synthetic(mrgrank::generate_synthetic(spec), dir);
  });
}

}  // extern "C"
