#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>

#include <httplib.h>
#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string kCli = MRGRANK_CLI;
const std::string kData = std::string(MRGRANK_DATA_DIR) + "/synthetic/";

struct Run {
  int code = 0;
  std::string out;
};

Run run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + (env.empty() ? "" : " ") + "\"" + kCli + "\" " + args + " 2>/dev/null";
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name)
      : path(fs::temp_directory_path() / ("mrgrank_cli_" + name + "_" + std::to_string(::getpid()))) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& f) const { return (path / f).string(); }
};

std::string build_args(const std::string& out) {
  return "build -c " + kData + "config.json --posts " + kData + "posts.jsonl --users " + kData +
         "users.jsonl -o " + out;
}

}  // namespace

TEST_CASE("build then solve exact and mc") {
  TempDir t("solve");
  const auto built = run(build_args(t / "s.bin"));
  REQUIRE(built.code == 0);
  CHECK(json::parse(built.out)["solved"] == false);

  const auto exact = run("solve " + (t / "s.bin") + " --method exact -o " + (t / "exact.bin"));
  REQUIRE(exact.code == 0);
  CHECK(json::parse(exact.out)["method"] == "exact");

  const auto mc = run("solve " + (t / "s.bin") + " --method mc --walks 40 --seed 11");
  REQUIRE(mc.code == 0);
  const auto summary = json::parse(mc.out);
  CHECK(summary["method"] == "mc");
  CHECK(summary["walks"] == 40 * summary["items"].get<int>());

  const auto q = run("query " + (t / "s.bin") + " '/api/rankings?kind=hashtag&top=5'");
  REQUIRE(q.code == 0);
  CHECK(json::parse(q.out)["items"].size() == 5);
}

TEST_CASE("seed flag and environment give identical snapshots") {
  TempDir t("seed");
  REQUIRE(run(build_args(t / "s.bin")).code == 0);
  REQUIRE(run("solve " + (t / "s.bin") + " --walks 30 --seed 5 -o " + (t / "a.bin")).code == 0);
  REQUIRE(run("solve " + (t / "s.bin") + " --walks 30 -o " + (t / "b.bin"), "MRGRANK_SEED=5").code == 0);
  REQUIRE(run("solve " + (t / "s.bin") + " --walks 30 -o " + (t / "c.bin"), "MRGRANK_SEED=6").code == 0);
  REQUIRE(run("walks " + (t / "a.bin") + " -o " + (t / "a.walks")).code == 0);
  REQUIRE(run("walks " + (t / "b.bin") + " -o " + (t / "b.walks")).code == 0);
  REQUIRE(run("walks " + (t / "c.bin") + " -o " + (t / "c.walks")).code == 0);
  CHECK(slurp(t / "a.walks") == slurp(t / "b.walks"));
  CHECK(slurp(t / "a.walks") != slurp(t / "c.walks"));

  REQUIRE(run(build_args(t / "env.bin"), "MRGRANK_SEED=5").code == 0);
  REQUIRE(run("solve " + (t / "env.bin") + " --walks 30").code == 0);
  REQUIRE(run("walks " + (t / "env.bin") + " -o " + (t / "env.walks")).code == 0);
  CHECK(slurp(t / "env.walks") == slurp(t / "a.walks"));
}

TEST_CASE("query edits persist with -o") {
  TempDir t("edit");
  REQUIRE(run(build_args(t / "s.bin")).code == 0);
  REQUIRE(run("solve " + (t / "s.bin") + " --walks 30").code == 0);
  const auto top = json::parse(run("query " + (t / "s.bin") + " '/api/rankings?kind=user&top=1'").out);
  const std::string id = top["items"][0]["id"];
  const auto edit = run("query " + (t / "s.bin") + " /api/items/" + id + "/score -X POST -d '{\"ui_score\": 1}' -o " +
                        (t / "edited.bin"));
  REQUIRE(edit.code == 0);
  const auto after = json::parse(run("query " + (t / "edited.bin") + " '/api/rankings?kind=user&top=100'").out);
  bool found = false;
  for (const auto& item : after["items"]) {
    if (item["id"] != id) continue;
    found = true;
    CHECK(item["score"].get<double>() < top["items"][0]["score"].get<double>());
  }
  CHECK(found);
  CHECK(run("query " + (t / "s.bin") + " /api/items/nobody/score -X POST -d '{\"ui_score\": 1}'").code == 1);
}

TEST_CASE("export-svg") {
  TempDir t("svg");
  REQUIRE(run(build_args(t / "s.bin")).code == 0);
  REQUIRE(run("solve " + (t / "s.bin") + " --walks 30").code == 0);
  const auto clusters = json::parse(run("query " + (t / "s.bin") + " '/api/clusters?kind=user'").out)["clusters"];
  const std::string flows = clusters[0]["id"].get<std::string>() + "," + clusters[2]["id"].get<std::string>();
  REQUIRE(run("export-svg " + (t / "s.bin") + " --flows " + flows + " -o " + (t / "f.svg")).code == 0);
  CHECK(slurp(t / "f.svg").find("<svg") == 0);
  CHECK(run("export-svg " + (t / "s.bin") + " --flows user:4:999999 -o " + (t / "g.svg")).code == 3);
}

TEST_CASE("synth matches the bundled corpus") {
  TempDir t("synth");
  REQUIRE(run("synth --dir " + t.path.string() + " --seed 7").code == 0);
  CHECK(slurp(t / "users.jsonl") == slurp(kData + "users.jsonl"));
  CHECK(slurp(t / "planted.json") == slurp(kData + "planted.json"));
}

TEST_CASE("error exit codes") {
  TempDir t("errors");
  CHECK(run("build --posts /nonexistent.jsonl --users /nonexistent.jsonl -o " + (t / "s.bin")).code == 7);
  CHECK(run("solve /nonexistent.bin").code == 7);
  CHECK(run("solve x --method newton").code != 0);
  CHECK(run("").code != 0);
  REQUIRE(run(build_args(t / "s.bin")).code == 0);
  CHECK(run("walks " + (t / "s.bin") + " -o " + (t / "w")).code == 5);
}

TEST_CASE("serve answers on the requested port") {
  TempDir t("serve");
  REQUIRE(run(build_args(t / "s.bin")).code == 0);
  REQUIRE(run("solve " + (t / "s.bin") + " --method exact").code == 0);

  int port = 0;
  {
    httplib::Server probe;
    port = probe.bind_to_any_port("127.0.0.1");
  }
  REQUIRE(port > 0);

  const pid_t pid = fork();
  REQUIRE(pid >= 0);
  if (pid == 0) {
    const std::string session = t / "s.bin";
    const std::string p = std::to_string(port);
    execl(kCli.c_str(), kCli.c_str(), "serve", session.c_str(), "--port", p.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }

  httplib::Client client("127.0.0.1", port);
  httplib::Result r;
  for (int i = 0; i < 100 && !r; ++i) {
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
    r = client.Get("/api/health");
  }
  kill(pid, SIGTERM);
  int status = 0;
  waitpid(pid, &status, 0);
  REQUIRE(r);
  CHECK(r->status == 200);
}
