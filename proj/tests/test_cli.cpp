#include <doctest.h>

#include <algorithm>
#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace {

const std::string kCli = SSRD_CLI;
const std::filesystem::path kData = SSRD_DATA_DIR;

struct Run {
  int status = -1;
  std::string out;
};

/// Runs the CLI with stderr discarded.
Run run(const std::string& args) {
  Run r;
  const std::string cmd = kCli + " " + args + " 2>/dev/null";
  FILE* p = ::popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = std::fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
  const int st = ::pclose(p);
  r.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

std::string scenario(const std::string& name) { return (kData / "scenarios" / (name + ".scn")).string(); }

}  // namespace

TEST_CASE("count") {
  CHECK(run("count -N 7 -k 2 -T 5").out == "15120\n");
  CHECK(run("count -N 2 -k 2 -T 1").out == "1\n");
  CHECK(run("count --scenario " + scenario("shanghai7")).out == "25410\n");
  const auto none = run("count -N 5 -k 1 -T 4");
  CHECK(none.status == 0);
  CHECK(none.out == "0\n");
}

TEST_CASE("enumerate lists sequences") {
  const auto r = run("enumerate -N 3 -k 1 -T 3");
  CHECK(r.status == 0);
  CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 6);
  CHECK(r.out.rfind("[[0],[1],[2]]\n", 0) == 0);
}

TEST_CASE("evaluate prints the option value") {
  const auto r = run("evaluate --scenario " + scenario("shanghai4") + " --sequence myopia-h --seed 5");
  REQUIRE(r.status == 0);
  CHECK(r.out.find("option_value,") != std::string::npos);
  CHECK(r.out.find("seed,5\n") != std::string::npos);
  CHECK(run("evaluate --scenario " + scenario("shanghai4") + " --sequence myopia-h --seed 5").out == r.out);
}

TEST_CASE("exit codes") {
  CHECK(run("").status == 2);
  CHECK(run("count -N 3").status == 2);
  CHECK(run("bogus").status == 2);
  CHECK(run("evaluate --scenario /nonexistent.scn --sequence myopia-h").status == 3);
  CHECK(run("evaluate --scenario " + scenario("shanghai4") + " --sequence '[[0,1,2],[3]]'").status == 4);
  CHECK(run("evaluate --scenario " + scenario("shanghai4") + " --sequence '[[0'").status == 3);
}

TEST_CASE("export and myopia") {
  const auto q0 = run("export --what q0 --scenario " + scenario("shanghai4"));
  CHECK(q0.status == 0);
  CHECK(std::count(q0.out.begin(), q0.out.end(), '\n') >= 4);
  const auto m = run("myopia --mode both --scenario " + scenario("shanghai4"));
  CHECK(m.status == 0);
  CHECK(m.out.find("myopia-h") != std::string::npos);
  CHECK(m.out.find("myopia-l") != std::string::npos);
}

TEST_CASE("serve over stdio") {
  const auto dir = std::filesystem::temp_directory_path() / "ssrd_cli_test";
  std::filesystem::create_directories(dir);
  const auto script = dir / "script.jsonl";
  std::ofstream(script) << R"({"id":1,"verb":"hello"})" << "\n" << R"({"id":2,"verb":"close"})" << "\n";
  Run r;
  {
    const std::string cmd = kCli + " serve --stdio --scenarios " + (kData / "scenarios").string() + " < " +
                            script.string() + " 2>/dev/null";
    FILE* p = ::popen(cmd.c_str(), "r");
    REQUIRE(p != nullptr);
    std::array<char, 4096> buf{};
    std::size_t n;
    while ((n = std::fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
    r.status = WEXITSTATUS(::pclose(p));
  }
  CHECK(r.status == 0);
  CHECK(r.out.find("\"version\":\"ssrd/1\"") != std::string::npos);
  CHECK(r.out.find("shanghai7") != std::string::npos);
  CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 2);
}

TEST_CASE("policy lists keep sequence literals intact") {
  const auto r = run("metrics --scenario " + scenario("shanghai4") + " --policies 'myopia-l,[[0,1],[2,3]]' -R 1");
  REQUIRE(r.status == 0);
  CHECK(r.out.find("literal#0,2,0,") != std::string::npos);
  CHECK(r.out.find("\"[[0,1],[2,3]]\"") != std::string::npos);
  // Commas outside quotes match the header on every row.
  std::istringstream lines(r.out);
  std::string line;
  long fields = -1;
  while (std::getline(lines, line)) {
    long n = 0;
    bool quoted = false;
    for (char ch : line) {
      if (ch == '"') quoted = !quoted;
      if (ch == ',' && !quoted) ++n;
    }
    if (fields < 0) fields = n;
    CHECK(n == fields);
  }
}

TEST_CASE("key/value reports quote sequence literals") {
  const auto e = run("evaluate --scenario " + scenario("shanghai5") + " --sequence myopia-l");
  REQUIRE(e.status == 0);
  CHECK(e.out.find("sequence,\"[[") != std::string::npos);
  const auto all = run("enumerate --evaluate --scenario " + scenario("shanghai4"));
  REQUIRE(all.status == 0);
  CHECK(all.out.find("best_sequence,\"[[") != std::string::npos);
}
