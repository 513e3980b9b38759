#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "orchvis/cli.hpp"
#include "orchvis/json_util.hpp"

using namespace orchvis;
namespace fs = std::filesystem;

namespace {

const std::string kData = ORCHVIS_DATA_DIR_DEFAULT;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string tmp(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("orchvis_cli_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return (dir / name).string();
}

std::string scenario_file(const std::string& name) { return kData + "/scenarios/" + name + ".json"; }

}  // namespace

TEST(Cli, CleanAutoExitsZero) {
  auto r = cli({"run", "--scenario", scenario_file("clean"), "--autonomy", "auto", "--seed", "0", "--out", tmp("clean.json")});
  EXPECT_EQ(r.code, 0) << r.err;
  auto report = jsonu::read_file(tmp("clean.json"));
  EXPECT_EQ(report.at("root_status"), "achieved");
  EXPECT_EQ(report.at("event_log"), default_log_path(tmp("clean.json")));
  EXPECT_TRUE(fs::exists(default_log_path(tmp("clean.json"))));
}

TEST(Cli, Fig3GatedWaitsWithCandidates) {
  auto r = cli({"run", "--scenario", scenario_file("fig3_conflict"), "--autonomy", "conflict_gated", "--seed", "4",
                "--out", tmp("fig3.json")});
  EXPECT_EQ(r.code, 2) << r.err;
  auto report = jsonu::read_file(tmp("fig3.json"));
  ASSERT_EQ(report.at("conflicts").size(), 1u);
  EXPECT_EQ(report.at("conflicts")[0].at("kind"), "temporal_overlap");
  ASSERT_FALSE(report.at("repair_proposals").empty());
  EXPECT_FALSE(report.at("repair_proposals")[0].at("candidates").empty());
}

TEST(Cli, RunIsDeterministic) {
  for (const char* name : {"a.json", "b.json"}) {
    cli({"run", "--scenario", scenario_file("slow_hotel"), "--seed", "9", "--out", tmp(name), "--log", tmp("same.log")});
  }
  EXPECT_EQ(jsonu::read_text(tmp("a.json")), jsonu::read_text(tmp("b.json")));
}

TEST(Cli, ReplayPrintsTheRunReport) {
  cli({"run", "--scenario", scenario_file("budget_overrun"), "--out", tmp("budget.json")});
  auto r = cli({"replay", "--log", default_log_path(tmp("budget.json"))});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, jsonu::read_text(tmp("budget.json")));
}

TEST(Cli, ReplayOfTruncatedLogFails) {
  cli({"run", "--scenario", scenario_file("clean"), "--out", tmp("t.json")});
  std::string text = jsonu::read_text(default_log_path(tmp("t.json")));
  std::size_t cut = 0;
  for (int i = 0; i < 4; ++i) cut = text.find('\n', cut) + 1;
  jsonu::write_file(tmp("t.log"), text.substr(0, cut + 10));
  auto r = cli({"replay", "--log", tmp("t.log")});
  EXPECT_EQ(r.code, 1);
  auto err = Json::parse(r.err);
  EXPECT_EQ(err.at("error"), "gapless-violation");
  EXPECT_EQ(err.at("message"), "gapless-violation at seq 5");
}

TEST(Cli, VerifyFlightEvidence) {
  auto goals = kData + "/goals/sf_trip.json";
  auto evidence = kData + "/evidence/flight_F01.json";
  auto r = cli({"verify", "--goals", goals, "--evidence", evidence, "--lambda", "0.5"});
  ASSERT_EQ(r.code, 0) << r.err;
  auto out = Json::parse(r.out);
  EXPECT_TRUE(out.at("reports")[0].at("achieved").get<bool>());
  auto zero = Json::parse(cli({"verify", "--goals", goals, "--evidence", evidence, "--lambda", "0"}).out);
  const auto& rep = zero.at("reports")[0];
  // Every hard constraint holds, so S is the hard fraction alone.
  EXPECT_DOUBLE_EQ(rep.at("score").get<double>(), 1.0);
}

TEST(Cli, ErrorsAreMachineReadable) {
  jsonu::write_file(tmp("broken.json"), "{\"nodes\": [");
  auto r = cli({"verify", "--goals", tmp("broken.json"), "--evidence", kData + "/evidence/flight_F01.json"});
  EXPECT_EQ(r.code, 1);
  auto err = Json::parse(r.err);
  EXPECT_EQ(err.at("error"), "syntax-error");
  EXPECT_TRUE(err.at("detail").contains("position"));
  EXPECT_NE(err.at("message").get<std::string>().find("broken.json"), std::string::npos);

  auto usage = cli({"run", "--autonomy", "sometimes"});
  EXPECT_EQ(usage.code, 1);
  EXPECT_EQ(Json::parse(usage.err).at("error"), "usage");
}
