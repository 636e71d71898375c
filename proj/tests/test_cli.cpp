#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Outcome {
  int code = -1;
  std::string out;
};

std::string binary() {
  if (const char* b = std::getenv("CORESCOPE_BIN")) return b;
#ifdef CORESCOPE_BIN
  return CORESCOPE_BIN;
#else
  return "corescope";
#endif
}

Outcome run(const std::string& args) {
  const std::string cmd = binary() + " " + args + " 2>/dev/null";
  Outcome o;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return o;
  char buf[4096];
  for (std::size_t n; (n = std::fread(buf, 1, sizeof buf, p)) > 0;) o.out.append(buf, n);
  const int status = pclose(p);
  o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return o;
}

std::vector<json> lines(const std::string& out) {
  std::vector<json> v;
  std::istringstream in(out);
  for (std::string l; std::getline(in, l);)
    if (!l.empty()) v.push_back(json::parse(l));
  return v;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

class Cli : public ::testing::Test {
 protected:
  fs::path dir;
  void SetUp() override {
    dir = fs::temp_directory_path() /
          (std::string("corescope_cli_") + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  void TearDown() override { fs::remove_all(dir); }
  std::string store() const { return "--store " + (dir / "store").string() + " "; }
  std::string infra_args() const {
    return "gen-infra --width 30 --height 30 --max-num-cities 3 --number-of-agents 6 --flatland-seed-value 7 ";
  }
};

}  // namespace

TEST_F(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("no-such-command").code, 2);
  EXPECT_EQ(run("gen-infra --width -3").code, 2);
  EXPECT_EQ(run("verify").code, 2);
  EXPECT_EQ(run("--help").code, 0);
}

TEST_F(Cli, GeneratorsAreReproducible) {
  const auto a = dir / "a.json", b = dir / "b.json";
  ASSERT_EQ(run(store() + infra_args() + "--out " + a.string()).code, 0);
  ASSERT_EQ(run(store() + infra_args() + "--out " + b.string()).code, 0);
  EXPECT_EQ(slurp(a), slurp(b));
  const auto s1 = dir / "s1.json", s2 = dir / "s2.json";
  for (const auto& s : {s1, s2})
    ASSERT_EQ(run(store() + "gen-schedule --infrastructure " + a.string() + " --schedule-id 1 --out " + s.string()).code,
              0);
  EXPECT_EQ(slurp(s1), slurp(s2));
  const auto out = run(store() + "gen-malfunction --schedule " + s1.string() +
                       " --malfunction-agent-id 2 --earliest-malfunction 4 --malfunction-duration 9 --out " +
                       (dir / "m.json").string());
  ASSERT_EQ(out.code, 0);
  const auto ev = lines(out.out).back();
  EXPECT_EQ(ev["train"], 2);
  EXPECT_EQ(ev["duration"], 9);
  EXPECT_EQ(run(store() + "gen-malfunction --schedule " + s1.string() + " --malfunction-agent-id 99").code, 2);
}

TEST_F(Cli, VerifyFindsConflictsInACorruptedSchedule) {
  ASSERT_EQ(run(store() + infra_args() + "--infra-id 0").code, 0);
  ASSERT_EQ(run(store() + "gen-schedule --infra-id 0 --schedule-id 0").code, 0);
  const auto sched = dir / "store/infra/0/schedule/0/schedule.json";
  ASSERT_TRUE(fs::exists(sched));
  const auto ok = run(store() + "verify --schedule " + sched.string());
  EXPECT_EQ(ok.code, 0);
  EXPECT_EQ(lines(ok.out).back()["problems"], 0);

  // Train 1 copies the run of train 0.
  json j = json::parse(slurp(sched));
  j["runs"][1]["waypoints"] = j["runs"][0]["waypoints"];
  const auto bad = dir / "bad.json";
  std::ofstream(bad) << j.dump();
  const auto r = run(store() + "verify --schedule " + bad.string());
  EXPECT_EQ(r.code, 1);
  int conflicts = 0;
  for (const auto& l : lines(r.out))
    if (l["event"] == "conflict") {
      ++conflicts;
      EXPECT_EQ(l["trains"], json::array({0, 1}));
    }
  EXPECT_GT(conflicts, 0);
  EXPECT_EQ(run(store() + "verify --schedule " + (dir / "missing.json").string()).code, 2);
}

TEST_F(Cli, AgendaRunAnalyzeAndRender) {
  const auto cfg = dir / "agenda.json";
  std::ofstream(cfg) << R"({"agenda_id": "tiny",
    "infrastructure": {"width": [30, 30, 1], "height": [30, 30, 1], "max_num_cities": [3, 3, 1],
                       "number_of_agents": [5, 5, 1]},
    "schedule": {"schedule_id": [0, 0, 1]},
    "reschedule": {"malfunction_train_id": [0, 2, 2], "earliest_malfunction": [5, 5, 1]},
    "runs": {"random_seeds": 2, "timing_repeats": 1}})";
  const auto dry = run(store() + "run-agenda --dry-run --config " + cfg.string());
  ASSERT_EQ(dry.code, 0);
  EXPECT_EQ(lines(dry.out).front()["experiments"], 2);
  const auto r = run(store() + "run-agenda --workers 2 --config " + cfg.string());
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(lines(r.out).back()["done"], 2);
  EXPECT_EQ(lines(run(store() + "run-agenda --config " + cfg.string()).out).back()["resumed"], 2);

  const auto a = run(store() + "analyze --agenda-id tiny --out " + (dir / "report").string());
  ASSERT_EQ(a.code, 0) << a.out;
  EXPECT_EQ(lines(a.out).back()["kept"], 2);
  EXPECT_TRUE(fs::exists(dir / "report/metrics.csv"));
  EXPECT_TRUE(fs::exists(dir / "report/speedup.svg"));
  EXPECT_EQ(run(store() + "analyze --agenda-id tiny --bins 0").code, 2);
  EXPECT_EQ(run(store() + "analyze --agenda-id tiny --min-time 5 --max-time 1").code, 2);

  ASSERT_EQ(run(store() + "render --infra-id 0 --schedule-id 0 --out " + (dir / "map.svg").string()).code, 0);
  EXPECT_EQ(slurp(dir / "map.svg").rfind("<svg", 0), 0u);
}
