// Acceptance suite: one line per criterion, nonzero exit if any fails.

#include <unistd.h>

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>

#include "oracles.hpp"
#include "orchvis/conflict_engine.hpp"
#include "orchvis/goal_dsl.hpp"
#include "orchvis/scenario.hpp"
#include "support.hpp"

using namespace orchvis;
using namespace orchvis::testing;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Records the first failure only; later checks keep running for the counts.
struct Check {
  Outcome out;
  void fail(const std::string& why) {
    if (out.pass) out.detail = why;
    out.pass = false;
  }
  void expect(bool ok, const std::string& why) {
    if (!ok) fail(why);
  }
};

fs::path scratch() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / ("orchvis_acceptance_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

bool touches(const Event& e, const std::string& goal) {
  const Json& p = e.payload;
  if (p.value("goal_id", "") == goal || p.value("task_id", "") == task_id_for(goal)) return true;
  return e.kind == EventKind::VerificationReport && p.at("report").at("goal_id") == goal;
}

std::vector<Json> subsequence(const std::vector<Event>& events, const std::string& goal) {
  std::vector<Json> out;
  for (const auto& e : events) {
    if (touches(e, goal)) out.push_back(Json{{"kind", std::string(to_string(e.kind))}, {"payload", e.payload}});
  }
  return out;
}

// Runs the installed tool and captures stdout.
int run_tool(const std::string& args, std::string& out) {
  std::string cmd = std::string(ORCHVIS_TOOL_PATH) + " " + args + " 2>/dev/null";
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) return -1;
  std::array<char, 4096> buf{};
  out.clear();
  std::size_t n;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) out.append(buf.data(), n);
  int status = ::pclose(pipe);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string shell_quoted(const std::string& s) { return "'" + s + "'"; }

Outcome verifier_oracle() {
  Check ck;
  VerifierCaseGenerator gen(20260101);
  double worst = 0;
  for (int i = 0; i < 10000; ++i) {
    auto vc = gen.make();
    double lambda = (i % 5) * 0.25;
    auto want = brute_force_verdict(vc, lambda);
    auto got = evaluate_fields(vc.goal, vc.fields, VerifierConfig{lambda, 0.1});
    auto sat = got.satisfied, vio = got.violated;
    std::sort(sat.begin(), sat.end());
    std::sort(vio.begin(), vio.end());
    auto ws = want.satisfied, wv = want.violated;
    std::sort(ws.begin(), ws.end());
    std::sort(wv.begin(), wv.end());
    worst = std::max(worst, std::abs(got.score - want.score));
    ck.expect(sat == ws && vio == wv, "case " + std::to_string(i) + ": satisfied/violated differ");
    ck.expect(std::abs(got.score - want.score) <= 1e-9, "case " + std::to_string(i) + ": score differs");
    ck.expect(got.achieved == want.achieved, "case " + std::to_string(i) + ": achieved differs");
  }
  if (ck.out.pass) {
    std::ostringstream os;
    os << "10000 cases, max |dS| " << worst << " (tol 1e-9)";
    ck.out.detail = os.str();
  }
  return ck.out;
}

Outcome matcher_oracle() {
  Check ck;
  std::mt19937_64 rng(424242);
  int tasks = 0, none = 0;
  for (int i = 0; i < 1000; ++i) {
    auto mi = random_matcher_instance(rng);
    for (const auto& [id, t] : mi.tasks.tasks) {
      ++tasks;
      std::string want = brute_force_match(t, mi.registry);
      std::string got;
      try {
        got = match_task(t, mi.registry).chosen;
      } catch (const Error& e) {
        ck.expect(e.code() == "no-eligible-agent", "instance " + std::to_string(i) + ": unexpected " + e.code());
      }
      if (want.empty()) ++none;
      ck.expect(got == want, "instance " + std::to_string(i) + " task " + id + ": got '" + got + "' want '" + want + "'");
    }
  }
  if (ck.out.pass) {
    ck.out.detail = "1000 instances, " + std::to_string(tasks) + " tasks (" + std::to_string(none) +
                    " without an eligible agent), exact";
  }
  return ck.out;
}

Outcome interval_and_budget_oracle() {
  Check ck;
  std::mt19937_64 rng(97);
  std::size_t overlaps = 0, breaches = 0;
  for (int i = 0; i < 1000; ++i) {
    auto evidence = random_interval_evidence(rng);
    auto want = brute_force_overlaps(evidence);
    std::set<std::pair<std::string, std::string>> got;
    for (const auto& c : detect_temporal(evidence)) {
      if (c.kind == ConflictKind::temporal_overlap && c.involved_goal_ids.size() == 2) {
        got.insert({c.involved_goal_ids[0], c.involved_goal_ids[1]});
      } else {
        ck.fail("interval case " + std::to_string(i) + ": malformed record " + c.id);
      }
    }
    overlaps += want.size();
    ck.expect(got == want, "interval case " + std::to_string(i) + ": overlap sets differ");

    auto bc = random_budget_case(rng);
    auto sums = brute_force_budget(bc);
    std::set<std::string> got_nodes, want_nodes;
    for (const auto& [id, sum] : sums) want_nodes.insert(id);
    for (const auto& c : detect_budget(bc.graph, bc.evidence)) {
      for (const auto& g : c.involved_goal_ids) {
        if (!bc.graph.is_leaf(g)) got_nodes.insert(g);
      }
    }
    breaches += want_nodes.size();
    ck.expect(got_nodes == want_nodes, "budget case " + std::to_string(i) + ": breached nodes differ");
  }
  if (ck.out.pass) {
    ck.out.detail = "1000 interval sets (" + std::to_string(overlaps) + " overlaps), 1000 budget trees (" +
                    std::to_string(breaches) + " breaches), exact";
  }
  return ck.out;
}

Outcome repairs_eliminate_conflicts() {
  Check ck;
  std::size_t checked = 0, fig3 = 0;
  for (const auto& file : scenario_files(ORCHVIS_DATA_DIR_DEFAULT)) {
    Scenario sc = load_scenario(file);
    if (sc.expected.empty()) continue;
    Env env = sc.env();
    auto run = run_scenario(sc, Autonomy::conflict_gated, 1);
    const auto& s = run.state;
    std::set<std::pair<ConflictKind, std::vector<std::string>>> want, got;
    for (const auto& x : sc.expected) want.insert({x.kind, x.involved_goal_ids});
    for (const auto& [id, c] : s.conflicts) {
      auto ids = c.involved_goal_ids;
      std::sort(ids.begin(), ids.end());
      got.insert({c.kind, ids});
    }
    ck.expect(got == want, sc.name + ": open conflicts differ from the annotation");
    for (const auto& [id, c] : s.conflicts) {
      // The candidates the session proposed; static contradictions get none.
      auto stored = s.proposals.find(id);
      if (stored == s.proposals.end()) continue;
      for (const auto& cand : stored->second) {
        ++checked;
        if (sc.name == "fig3_conflict") ++fig3;
        auto sim = simulate(s, cand.moves, env);
        for (const auto& after : detect_all(sim.state, env)) {
          ck.expect(after.id != id, sc.name + ": " + cand.id + " leaves the conflict in simulation");
        }
        // Apply for real through the executor and re-detect.
        try {
          auto applied = step(s, command(CommandKind::apply_plan_update, Json{{"candidate_id", cand.id}, {"approve", true}}), env);
          ck.expect(!conflict_present(applied.state, env, id), sc.name + ": " + cand.id + " leaves the conflict when applied");
        } catch (const Error& e) {
          ck.fail(sc.name + ": applying " + cand.id + " failed: " + e.code());
        }
      }
    }
  }
  ck.expect(fig3 >= 1, "no candidate for the fig3_conflict scenario");
  if (ck.out.pass) {
    ck.out.detail = std::to_string(checked) + " candidates applied and rechecked, " + std::to_string(fig3) + " for fig3_conflict";
  }
  return ck.out;
}

Outcome branch_isolation() {
  Check ck;
  const auto& sc = scenario("fig3_conflict");
  auto faulty = run_scenario(sc, Autonomy::conflict_gated, 1);
  FaultSchedule none;
  auto clean = run_scenario(sc, Autonomy::conflict_gated, 1, &none);
  auto a = subsequence(faulty.events, "hotel");
  auto b = subsequence(clean.events, "hotel");
  ck.expect(!a.empty(), "no hotel events");
  ck.expect(a == b, "hotel subsequences differ (" + std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
  if (ck.out.pass) ck.out.detail = std::to_string(a.size()) + " hotel events identical to the fault-free run";
  return ck.out;
}

Outcome autonomy_exit_codes() {
  Check ck;
  const auto& sc = scenario("fig3_conflict");
  auto manual = run_scenario(sc, Autonomy::manual, 1);
  auto gated = run_scenario(sc, Autonomy::conflict_gated, 1);
  auto autom = run_scenario(sc, Autonomy::auto_, 1);
  ck.expect(manual.exit_code == 2, "manual exit " + std::to_string(manual.exit_code));
  ck.expect(gated.exit_code == 2, "conflict_gated exit " + std::to_string(gated.exit_code));
  ck.expect(autom.exit_code == 0, "auto exit " + std::to_string(autom.exit_code));
  bool pair = false;
  for (std::size_t i = 0; i + 1 < autom.events.size(); ++i) {
    const auto& p = autom.events[i];
    const auto& q = autom.events[i + 1];
    pair = pair || (p.kind == EventKind::RepairProposed && q.kind == EventKind::PlanUpdated &&
                    q.payload.value("candidate_id", "") == p.payload.value("selected", "-"));
  }
  ck.expect(pair, "auto run has no RepairProposed -> PlanUpdated pair");
  if (ck.out.pass) ck.out.detail = "manual 2, conflict_gated 2, auto 0 with RepairProposed -> PlanUpdated";
  return ck.out;
}

Outcome replay_determinism() {
  Check ck;
  int runs = 0;
  for (const auto& file : scenario_files(ORCHVIS_DATA_DIR_DEFAULT)) {
    Scenario sc = load_scenario(file);
    for (Autonomy level : {Autonomy::manual, Autonomy::conflict_gated, Autonomy::auto_}) {
      std::string tag = sc.name + "/" + std::string(to_string(level));
      auto report = (scratch() / (sc.name + "_" + std::string(to_string(level)) + ".json")).string();
      auto log = (scratch() / (sc.name + "_" + std::string(to_string(level)) + ".log")).string();
      std::string ignored, replayed;
      int code = run_tool("run --scenario " + shell_quoted(file) + " --autonomy " + std::string(to_string(level)) +
                              " --seed 3 --out " + shell_quoted(report) + " --log " + shell_quoted(log),
                          ignored);
      auto live = run_scenario(sc, level, 3);
      ck.expect(code == live.exit_code, tag + ": tool exit " + std::to_string(code));
      ck.expect(state_to_json(fold(read_log(log))) == state_to_json(live.state), tag + ": fold(log) differs from the live state");
      ck.expect(run_tool("replay --log " + shell_quoted(log), replayed) == 0, tag + ": replay failed");
      ck.expect(replayed == jsonu::read_text(report), tag + ": replay differs from the run report");
      ++runs;
    }
  }
  if (ck.out.pass) ck.out.detail = std::to_string(runs) + " scenario runs, fold and replay identical";
  return ck.out;
}

Outcome round_trip_and_fuzz() {
  Check ck;
  GraphGenerator gen(8080);
  std::vector<std::string> texts;
  for (int i = 0; i < 500; ++i) {
    auto g = gen.make(40);
    auto text = serialize_document(g, ontology());
    try {
      auto back = parse_document(text, ontology());
      ck.expect(back == g, "graph " + std::to_string(i) + " does not round-trip");
      ck.expect(serialize_document(back, ontology()) == text, "graph " + std::to_string(i) + " text differs");
    } catch (const Error& e) {
      ck.fail("graph " + std::to_string(i) + " rejected: " + e.code());
    }
    texts.push_back(std::move(text));
  }
  std::mt19937_64 rng(77);
  int rejected = 0, accepted = 0;
  for (int i = 0; i < 5000; ++i) {
    std::string text = texts[rng() % texts.size()];
    std::size_t pos = rng() % text.size();
    char byte = static_cast<char>(rng() % 256);
    if (byte == text[pos]) byte = static_cast<char>(byte ^ 1);
    text[pos] = byte;
    try {
      auto g = parse_document(text, ontology());
      auto problems = validate_graph(g, ontology());
      ck.expect(problems.empty(), "mutation " + std::to_string(i) + " yields an invalid graph");
      ++accepted;
    } catch (const Error&) {
      ++rejected;
    } catch (const std::exception& e) {
      ck.fail("mutation " + std::to_string(i) + " raised a non-engine exception: " + e.what());
    }
  }
  if (ck.out.pass) {
    ck.out.detail = "500 round trips exact; 5000 mutations: " + std::to_string(rejected) + " rejected, " +
                    std::to_string(accepted) + " accepted and valid";
  }
  return ck.out;
}

Outcome reconcile_classes() {
  Check ck;
  auto internal = sf_trip();
  {
    auto user = internal;
    user.at("hotel").title = "Boutique hotel near Union Square";
    auto r = reconcile(internal, user, ontology());
    ck.expect(r.rejected.empty() && r.changes_applied.size() == 1 && r.reconciled == user, "retitle not accepted cleanly");
  }
  {
    auto user = internal;
    user.at("flight").attributes["budget"] = TypedValue::raw(ValueKind::money, "cheap");
    auto r = reconcile(internal, user, ontology());
    ck.expect(r.rejected.size() == 1 && r.rejected[0].reason == "unparseable-value" && r.reconciled == internal,
              "unparseable budget not rejected");
  }
  {
    auto user = internal;
    user.nodes.erase("flight");
    auto r = reconcile(internal, user, ontology());
    ck.expect(r.rejected.size() == 1 && r.rejected[0].reason == "dangling-condition-reference" &&
                  r.reconciled.contains("flight") && validate_graph(r.reconciled, ontology()).empty(),
              "dangling-reference deletion not rejected");
  }
  if (ck.out.pass) ck.out.detail = "accept, reject-unparseable, reject-dangling-reference";
  return ck.out;
}

struct Criterion {
  int number;
  const char* name;
  double limit_s;
  std::function<Outcome()> body;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "verifier vs brute force", 10, verifier_oracle},
      {2, "matcher vs brute force", 30, matcher_oracle},
      {3, "temporal and budget detectors vs direct scans", 10, interval_and_budget_oracle},
      {4, "every repair candidate eliminates its conflict", 20, repairs_eliminate_conflicts},
      {5, "hotel branch isolated from the flight fault", 5, branch_isolation},
      {6, "autonomy exit codes on fig3_conflict", 10, autonomy_exit_codes},
      {7, "fold and replay reproduce every run", 10, replay_determinism},
      {8, "document round trip and mutation robustness", 30, round_trip_and_fuzz},
      {9, "reconcile classes on the sf_trip goals", 5, reconcile_classes},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.body();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    bool in_time = elapsed < c.limit_s;
    bool pass = o.pass && in_time;
    failures += !pass;
    std::printf("criterion %d %s: %s (%s; %.2f s, limit %.0f s%s)\n", c.number, c.name, pass ? "PASS" : "FAIL",
                o.detail.c_str(), elapsed, c.limit_s, in_time ? "" : ", over the limit");
    std::fflush(stdout);
  }
  std::error_code ec;
  fs::remove_all(scratch(), ec);
  return failures == 0 ? 0 : 1;
}
