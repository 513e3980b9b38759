#pragma once

#include <chrono>
#include <condition_variable>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "orchvis/intent_provider.hpp"
#include "orchvis/scenario.hpp"

namespace httplib {
class Server;
}

namespace orchvis {

struct ServiceConfig {
  std::string data_dir = ORCHVIS_DATA_DIR_DEFAULT;
  std::string log_dir;  // default: <data_dir>/sessions
  std::string base_scenario = "clean";  // agents and fixtures for sessions created from text
  std::string intents;  // scripted intent table; default: <data_dir>/intents.json
  std::chrono::milliseconds heartbeat{15000};
  EnvLookup env;  // default: std::getenv
};

// One live session. All mutations go through submit() under the lock; readers
// take the lock for a consistent snapshot.
class ServiceSession {
 public:
  ServiceSession(std::string id, std::string created_at, std::shared_ptr<const Scenario> scenario,
                 std::uint64_t seed, std::string log_path);

  const std::string& id() const { return id_; }
  const std::string& created_at() const { return created_at_; }
  const Scenario& scenario() const { return *scenario_; }
  const std::string& log_path() const { return log_path_; }

  void begin(const SessionInit& init);
  void restore(const std::vector<Event>& events);
  std::vector<Event> submit(const Command& command);

  // Snapshot under the lock.
  template <typename F>
  auto read(F f) const {
    std::lock_guard<std::mutex> lock(mu_);
    return f(runner_.state(), runner_.events());
  }

  // Blocks until an event with seq >= from_seq exists, the session completes,
  // or the timeout passes. Returns the events from from_seq on.
  std::vector<Event> wait_from(std::int64_t from_seq, std::chrono::milliseconds timeout, bool* completed) const;
  void wake_all();

 private:
  std::string id_;
  std::string created_at_;
  std::shared_ptr<const Scenario> scenario_;
  std::string log_path_;
  SimulatedAgents agents_;
  SessionRunner runner_;
  mutable std::mutex mu_;
  mutable std::condition_variable cv_;
  bool closing_ = false;
};

struct HttpReply {
  int status = 200;
  Json body;
};

// HTTP statuses for engine error codes.
int http_status_for(const std::string& code);
Json error_body(const Error& e);

// Session registry and the resource handlers. Handlers are plain functions
// of (path params, request body) so they can be exercised without a socket;
// mount() binds them to an httplib server.
class Service {
 public:
  explicit Service(ServiceConfig config);
  ~Service();

  const ServiceConfig& config() const { return config_; }

  // Re-opens every session found in the log directory by replaying its log.
  // Returns the number recovered.
  std::size_t recover();

  HttpReply create_session(const Json& body);
  HttpReply list_sessions() const;
  HttpReply get_session(const std::string& sid) const;
  HttpReply get_report(const std::string& sid) const;
  HttpReply patch_goal(const std::string& sid, const std::string& gid, const Json& body);
  HttpReply put_goals(const std::string& sid, const Json& body);
  HttpReply confirm(const std::string& sid);
  HttpReply get_plan(const std::string& sid) const;
  HttpReply get_conflicts(const std::string& sid) const;
  HttpReply resolve(const std::string& sid, const std::string& cid, const Json& body);
  HttpReply set_autonomy(const std::string& sid, const Json& body);
  HttpReply pause(const std::string& sid, const Json& body);
  HttpReply resume(const std::string& sid, const Json& body);
  HttpReply command(const std::string& sid, const Json& body);

  std::shared_ptr<ServiceSession> find(const std::string& sid) const;

  void mount(httplib::Server& server);
  // Binds and blocks until stop().
  void serve(const std::string& host, int port);
  void stop();

 private:
  HttpReply submit(const std::string& sid, Command command, const std::function<Json(const SessionState&)>& view);
  std::shared_ptr<ServiceSession> find_if_exists(const std::string& sid) const;
  std::shared_ptr<const Scenario> scenario_named(const std::string& name);
  std::string next_session_id();
  void write_meta(const ServiceSession& s, const Json& extra) const;

  ServiceConfig config_;
  std::shared_ptr<const Ontology> ontology_;
  std::vector<Exemplar> exemplars_;
  std::unique_ptr<ProviderBackend> backend_;
  mutable std::mutex mu_;
  std::mutex create_mu_;  // id choice through registration
  std::map<std::string, std::shared_ptr<ServiceSession>> sessions_;
  std::map<std::string, std::shared_ptr<const Scenario>> scenarios_;
  std::unique_ptr<httplib::Server> server_;
};

// SSE frame for one event: "event: <Kind>\nid: <seq>\ndata: <line>\n\n".
std::string sse_frame(const Event& e);
inline constexpr const char* kSseHeartbeat = ": heartbeat\n\n";
inline constexpr const char* kSseEnd = "event: end\ndata: {}\n\n";

}  // namespace orchvis
