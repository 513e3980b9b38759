#pragma once

#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "orchvis/conflict_engine.hpp"
#include "orchvis/session.hpp"

namespace orchvis {

struct SessionInit {
  std::string session_id;
  std::string scenario;
  std::uint64_t seed = 0;
  VerifierConfig config;
  Autonomy autonomy = Autonomy::conflict_gated;
  GoalGraph graph;
};

struct StepResult {
  SessionState state;
  std::vector<Event> events;
};

// GoalUpdated with the session block, then the compiled and assigned plan
// (PlanUpdated, phase planning). Throws no-eligible-agent and planner errors.
StepResult begin_session(const SessionInit& init, const Env& env);

// Pure transition. On error the input state is untouched and nothing is
// emitted. Throws invalid-command, unknown-goal, wrong-phase,
// invariant-violation, conflict-not-present.
StepResult step(const SessionState& state, const Command& command, const Env& env);

// True when the guard list admits the task against current evidence.
bool guards_hold(const TaskSpec& task, const SessionState& state);

// Nothing left to do without a human: no running task and no automatic move.
bool awaiting_user(const SessionState& state);

// --- driver ----------------------------------------------------------------------

// Owns a session and its simulated agents. Every submitted command is
// stepped, then ready tasks are invoked in TaskStarted order until no task
// is running. Delayed results are re-queued for the given number of rounds.
class SessionRunner {
 public:
  using Sink = std::function<void(const Event&)>;

  SessionRunner(const Env& env, SimulatedAgents& agents);

  // begin_session plus the events it emits.
  void begin(const SessionInit& init);
  // Rebuild from an existing log (the agents see past calls as made).
  void restore(const std::vector<Event>& events);

  // Steps the command and drives agents to quiescence. Returns the events
  // emitted by this call.
  std::vector<Event> submit(const Command& command);
  void pump();

  void set_sink(Sink sink) { sink_ = std::move(sink); }
  const SessionState& state() const { return state_; }
  const std::vector<Event>& events() const { return events_; }

 private:
  struct Pending {
    std::string task_id;
    std::int64_t started_at = 0;
  };
  struct Held {
    std::int64_t started_at = 0;
    int rounds = 0;
    Command finished;
  };

  void absorb(std::vector<Event> events, SessionState next, std::vector<Event>* out);
  Command invoke(const std::string& task_id);

  Env env_;
  SimulatedAgents* agents_;
  SessionState state_;
  std::vector<Event> events_;
  std::deque<Pending> queue_;
  std::map<std::string, std::int64_t> started_;  // latest TaskStarted seq per task
  std::map<std::string, Held> held_;
  Sink sink_;
};

// --- event log -------------------------------------------------------------------

// One compact event per line.
void append_event(const std::string& path, const Event& e);
void write_log(const std::string& path, const std::vector<Event>& events);

// Reads and checks a log. A final line that does not parse is a truncated
// write and reported as gapless-violation at the next seq; other bad lines
// raise corrupt-event; seq must run 1, 2, 3, ... (gapless-violation).
std::vector<Event> read_log(const std::string& path);
std::vector<Event> parse_log(const std::string& text);

}  // namespace orchvis
