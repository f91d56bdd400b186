// mrgrank command line: build, solve, serve and export sessions through the C API.

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "mrgrank/mrgrank.h"

namespace {

int report(mrg_status st) {
  if (st != MRG_OK) std::fprintf(stderr, "mrgrank: %s\n", mrg_last_error());
  return st == MRG_OK ? 0 : 1 + static_cast<int>(st);
}

std::optional<std::uint64_t> env_seed() {
  const char* v = std::getenv("MRGRANK_SEED");
  if (!v || !*v) return std::nullopt;
  char* end = nullptr;
  const unsigned long long s = std::strtoull(v, &end, 10);
  if (*end != '\0') {
    std::fprintf(stderr, "mrgrank: ignoring malformed MRGRANK_SEED=%s\n", v);
    return std::nullopt;
  }
  return s;
}

struct Handle {
  mrg_session* s = nullptr;
  ~Handle() { mrg_session_free(s); }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Uncertainty-aware mutual-reinforcement ranking"};
  app.require_subcommand(1);

  std::string config, posts, users, output, session_path, method = "mc", flows, host = "127.0.0.1";
  std::string dir, edit_log, target, body, http_method = "GET";
  std::optional<std::size_t> walks;
  std::optional<std::uint64_t> seed;
  int port = 8080;
  std::uint64_t synth_seed = 7;

  auto* build = app.add_subcommand("build", "Ingest a corpus into a session file");
  build->add_option("-c,--config", config, "Engine configuration (JSON)");
  build->add_option("--posts", posts, "Posts, one JSON object per line")->required();
  build->add_option("--users", users, "Users, one JSON object per line")->required();
  build->add_option("-o,--output", output, "Session file to write")->required();

  auto* solve = app.add_subcommand("solve", "Rank a session in place");
  solve->add_option("session", session_path)->required();
  solve->add_option("--method", method, "exact or mc")->check(CLI::IsMember({"exact", "mc"}));
  solve->add_option("--walks", walks, "Walks per item (mc)");
  solve->add_option("--seed", seed, "Random seed (mc)");
  solve->add_option("-o,--output", output, "Write here instead of in place");

  auto* serve = app.add_subcommand("serve", "Serve the JSON API");
  serve->add_option("session", session_path)->required();
  serve->add_option("--port", port);
  serve->add_option("--host", host);
  serve->add_option("--edit-log", edit_log, "Append score edits to this JSONL file");

  auto* svg = app.add_subcommand("export-svg", "Render flows from clusters to SVG");
  svg->add_option("session", session_path)->required();
  svg->add_option("--flows", flows, "Comma-separated source cluster ids")->required();
  svg->add_option("-o,--output", output)->required();

  auto* query = app.add_subcommand("query", "Run one API request and print the JSON body");
  query->add_option("session", session_path)->required();
  query->add_option("target", target, "e.g. /api/rankings?kind=user&top=10")->required();
  query->add_option("-X,--request", http_method);
  query->add_option("-d,--data", body);
  query->add_option("-o,--output", output, "Save the session afterwards (for POST)");

  auto* walks_cmd = app.add_subcommand("walks", "Write the stored walk snapshot");
  walks_cmd->add_option("session", session_path)->required();
  walks_cmd->add_option("-o,--output", output)->required();

  auto* synth = app.add_subcommand("synth", "Generate the planted-salience corpus");
  synth->add_option("--dir", dir)->required();
  synth->add_option("--seed", synth_seed);

  CLI11_PARSE(app, argc, argv);

  if (synth->parsed()) return report(mrg_generate_synthetic(dir.c_str(), synth_seed));

  Handle h;
  if (build->parsed()) {
    mrg_status st = mrg_session_build(config.empty() ? nullptr : config.c_str(), posts.c_str(),
                                      users.c_str(), &h.s);
    if (st != MRG_OK) return report(st);
    if (auto s = env_seed()) {
      if ((st = mrg_session_set_seed(h.s, *s)) != MRG_OK) return report(st);
    }
    if ((st = mrg_session_save(h.s, output.c_str())) != MRG_OK) return report(st);
    char* summary = nullptr;
    if ((st = mrg_session_summary(h.s, &summary)) != MRG_OK) return report(st);
    std::cout << summary << '\n';
    mrg_string_free(summary);
    return 0;
  }

  mrg_status st = mrg_session_load(session_path.c_str(), &h.s);
  if (st != MRG_OK) return report(st);

  if (solve->parsed()) {
    if (!seed) seed = env_seed();
    if (seed && (st = mrg_session_set_seed(h.s, *seed)) != MRG_OK) return report(st);
    if (walks && (st = mrg_session_set_walks(h.s, *walks)) != MRG_OK) return report(st);
    if ((st = mrg_session_solve(h.s, method.c_str())) != MRG_OK) return report(st);
    if ((st = mrg_session_save(h.s, (output.empty() ? session_path : output).c_str())) != MRG_OK) {
      return report(st);
    }
    char* summary = nullptr;
    if ((st = mrg_session_summary(h.s, &summary)) != MRG_OK) return report(st);
    std::cout << summary << '\n';
    mrg_string_free(summary);
    return 0;
  }
  if (serve->parsed()) {
    if (!edit_log.empty() && (st = mrg_session_set_edit_log(h.s, edit_log.c_str())) != MRG_OK) {
      return report(st);
    }
    std::fprintf(stderr, "mrgrank: serving %s on http://%s:%d\n", session_path.c_str(), host.c_str(), port);
    return report(mrg_server_run(h.s, host.c_str(), port));
  }
  if (svg->parsed()) return report(mrg_session_export_svg(h.s, flows.c_str(), output.c_str()));
  if (walks_cmd->parsed()) return report(mrg_session_write_walks(h.s, output.c_str()));
  if (query->parsed()) {
    int status = 0;
    char* response = nullptr;
    st = mrg_session_request(h.s, http_method.c_str(), target.c_str(), body.c_str(), &status, &response);
    if (st != MRG_OK) return report(st);
    std::cout << response << '\n';
    mrg_string_free(response);
    if (!output.empty() && (st = mrg_session_save(h.s, output.c_str())) != MRG_OK) return report(st);
    return status >= 400 ? 1 : 0;
  }
  return 0;
}
