#include "orchvis/service.hpp"

#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <regex>

#include "httplib.h"
#include "orchvis/goal_dsl.hpp"
#include "orchvis/json_util.hpp"

namespace orchvis {

namespace fs = std::filesystem;

namespace {

std::string wall_clock_now() {
  std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

HttpReply failure(const Error& e) { return HttpReply{http_status_for(e.code()), error_body(e)}; }

Json with_seq(Json body, const SessionState& s) {
  body["seq"] = s.seq;
  return body;
}

Json plan_view(const SessionState& s) {
  return Json{{"phase", std::string(to_string(s.phase))},
              {"task_graph", to_json(s.tasks)},
              {"match", to_json(s.match)}};
}

Json conflicts_view(const SessionState& s) {
  Json list = Json::array();
  for (const auto& [id, c] : s.conflicts) {
    Json cands = Json::array();
    auto it = s.proposals.find(id);
    if (it != s.proposals.end()) {
      for (const auto& cand : it->second) cands.push_back(to_json(cand));
    }
    Json entry{{"conflict", to_json(c)}, {"candidates", cands}};
    if (s.pending && s.pending->conflict_id == id) entry["pending_candidate"] = s.pending->candidate_id;
    list.push_back(entry);
  }
  return Json{{"conflicts", list}, {"autonomy", std::string(to_string(s.autonomy))}};
}

Json paused_view(const SessionState& s) {
  Json list = Json::array();
  for (const auto& b : s.paused) list.push_back(to_json(b));
  return Json{{"paused", list}};
}

void reply(httplib::Response& res, const HttpReply& r) {
  res.status = r.status;
  res.set_content(jsonu::compact(r.body), "application/json");
}

Json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return Json::object();
  Json j = jsonu::parse_text(req.body, "request body");
  if (!j.is_object()) throw Error("invalid-command", "request body must be an object", Json::object());
  return j;
}

const std::string& need_string(const Json& body, const char* key) {
  if (!body.contains(key) || !body[key].is_string()) {
    throw Error("invalid-command", std::string("field '") + key + "' must be a string", Json{{"field", key}});
  }
  return body[key].get_ref<const std::string&>();
}

}  // namespace

// --- session -------------------------------------------------------------------

ServiceSession::ServiceSession(std::string id, std::string created_at, std::shared_ptr<const Scenario> scenario,
                               std::uint64_t seed, std::string log_path)
    : id_(std::move(id)),
      created_at_(std::move(created_at)),
      scenario_(std::move(scenario)),
      log_path_(std::move(log_path)),
      agents_(scenario_->registry, scenario_->fixtures, scenario_->faults, *scenario_->ontology, seed),
      runner_(scenario_->env(), agents_) {
  runner_.set_sink([this](const Event& e) { append_event(log_path_, e); });
}

void ServiceSession::begin(const SessionInit& init) {
  {
    std::lock_guard<std::mutex> lock(mu_);
    runner_.begin(init);
  }
  cv_.notify_all();
}

void ServiceSession::restore(const std::vector<Event>& events) {
  {
    std::lock_guard<std::mutex> lock(mu_);
    runner_.restore(events);
    runner_.pump();
  }
  cv_.notify_all();
}

std::vector<Event> ServiceSession::submit(const Command& command) {
  std::vector<Event> out;
  {
    std::lock_guard<std::mutex> lock(mu_);
    out = runner_.submit(command);
  }
  cv_.notify_all();
  return out;
}

std::vector<Event> ServiceSession::wait_from(std::int64_t from_seq, std::chrono::milliseconds timeout,
                                             bool* completed) const {
  std::unique_lock<std::mutex> lock(mu_);
  auto ready = [&] {
    return static_cast<std::int64_t>(runner_.events().size()) >= from_seq ||
           runner_.state().phase == Phase::completed || closing_;
  };
  cv_.wait_for(lock, timeout, ready);
  std::vector<Event> out;
  for (const auto& e : runner_.events()) {
    if (e.seq >= from_seq) out.push_back(e);
  }
  *completed = runner_.state().phase == Phase::completed || closing_;
  return out;
}

void ServiceSession::wake_all() {
  {
    std::lock_guard<std::mutex> lock(mu_);
    closing_ = true;
  }
  cv_.notify_all();
}

// --- errors --------------------------------------------------------------------

int http_status_for(const std::string& code) {
  static const std::map<std::string, int> table{
      {"unknown-session", 404},     {"unknown-goal", 404},          {"unknown-conflict", 404},
      {"stale-candidate", 409},     {"wrong-phase", 409},           {"conflict-not-present", 409},
      {"invariant-violation", 422}, {"exhausted-repairs", 422},     {"provider-unavailable", 503},
      {"invalid-command", 400},     {"schema-error", 400},          {"syntax-error", 400},
      {"no-eligible-agent", 422},   {"unknown-scenario", 404}};
  auto it = table.find(code);
  return it == table.end() ? 500 : it->second;
}

Json error_body(const Error& e) {
  return Json{{"error", e.code()}, {"message", e.what()}, {"detail", e.detail()}};
}

std::string sse_frame(const Event& e) {
  return "event: " + std::string(to_string(e.kind)) + "\nid: " + std::to_string(e.seq) + "\ndata: " + event_line(e) +
         "\n\n";
}

// --- service -------------------------------------------------------------------

Service::Service(ServiceConfig config) : config_(std::move(config)) {
  if (config_.log_dir.empty()) config_.log_dir = (fs::path(config_.data_dir) / "sessions").string();
  if (!config_.env) config_.env = [](const char* n) { return static_cast<const char*>(std::getenv(n)); };
  fs::create_directories(config_.log_dir);
  ontology_ = scenario_named(config_.base_scenario)->ontology;
  exemplars_ = load_exemplars((fs::path(config_.data_dir) / "exemplars.json").string(), *ontology_);
  if (config_.intents.empty()) config_.intents = (fs::path(config_.data_dir) / "intents.json").string();
  backend_ = default_backend(config_.intents, config_.env);
}

Service::~Service() { stop(); }

std::shared_ptr<const Scenario> Service::scenario_named(const std::string& name) {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = scenarios_.find(name);
  if (it != scenarios_.end()) return it->second;
  static const std::regex safe("^[A-Za-z0-9_.-]+$");
  fs::path file = fs::path(config_.data_dir) / "scenarios" / (name + ".json");
  if (!std::regex_match(name, safe) || !fs::exists(file)) {
    throw Error("unknown-scenario", "no scenario '" + name + "'", Json{{"scenario", name}});
  }
  auto sc = std::make_shared<const Scenario>(load_scenario(file.string()));
  scenarios_[name] = sc;
  return sc;
}

std::string Service::next_session_id() {
  std::lock_guard<std::mutex> lock(mu_);
  for (std::size_t n = sessions_.size() + 1;; ++n) {
    std::string id = "s" + std::to_string(n);
    if (!sessions_.count(id) && !fs::exists(fs::path(config_.log_dir) / (id + ".log"))) return id;
  }
}

void Service::write_meta(const ServiceSession& s, const Json& extra) const {
  Json meta = extra;
  meta["session_id"] = s.id();
  meta["created_at"] = s.created_at();
  meta["scenario"] = s.scenario().name;
  jsonu::write_file((fs::path(config_.log_dir) / (s.id() + ".meta.json")).string(), jsonu::canonical(meta));
}

std::shared_ptr<ServiceSession> Service::find(const std::string& sid) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = sessions_.find(sid);
  if (it == sessions_.end()) throw Error("unknown-session", "no session '" + sid + "'", Json{{"session_id", sid}});
  return it->second;
}

std::size_t Service::recover() {
  std::size_t count = 0;
  std::vector<fs::path> logs;
  for (const auto& entry : fs::directory_iterator(config_.log_dir)) {
    if (entry.path().extension() == ".log") logs.push_back(entry.path());
  }
  std::sort(logs.begin(), logs.end());
  for (const auto& log : logs) {
    std::string id = log.stem().string();
    if (find_if_exists(id)) continue;
    auto events = read_log(log.string());
    if (events.empty()) continue;
    SessionState folded = fold(events);
    std::string created_at;
    fs::path meta = log.parent_path() / (id + ".meta.json");
    if (fs::exists(meta)) created_at = jsonu::read_file(meta.string()).value("created_at", "");
    auto session = std::make_shared<ServiceSession>(id, created_at, scenario_named(folded.scenario), folded.seed,
                                                    log.string());
    session->restore(events);
    std::lock_guard<std::mutex> lock(mu_);
    sessions_[id] = session;
    ++count;
  }
  return count;
}

std::shared_ptr<ServiceSession> Service::find_if_exists(const std::string& sid) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = sessions_.find(sid);
  return it == sessions_.end() ? nullptr : it->second;
}

HttpReply Service::create_session(const Json& body) {
  try {
    if (!body.is_object()) throw Error("invalid-command", "request body must be an object", Json::object());
    Autonomy autonomy = Autonomy::conflict_gated;
    if (body.contains("autonomy")) {
      try {
        autonomy = autonomy_from_string(need_string(body, "autonomy"));
      } catch (const Error&) {
        throw Error("invalid-command", "unknown autonomy level", Json{{"field", "autonomy"}});
      }
    }
    std::uint64_t seed = 0;
    if (body.contains("seed")) {
      if (!body["seed"].is_number_unsigned()) {
        throw Error("invalid-command", "seed must be a non-negative integer", Json{{"field", "seed"}});
      }
      seed = body["seed"].get<std::uint64_t>();
    }
    std::shared_ptr<const Scenario> sc;
    GoalGraph graph;
    Json intent = Json::object();
    if (body.contains("scenario")) {
      sc = scenario_named(need_string(body, "scenario"));
      graph = sc->goals;
    } else {
      const std::string& text = need_string(body, "task_text");
      if (text.find_first_not_of(" \t\r\n") == std::string::npos) {
        throw Error("invalid-command", "task_text is empty", Json{{"field", "task_text"}});
      }
      sc = scenario_named(config_.base_scenario);
      IntentRequest req{text, exemplars_, sc->ontology, 3};
      auto res = propose_goals(req, *backend_);
      graph = std::move(res.graph);
      intent = Json{{"provider_id", res.provider_id},
                    {"rounds_used", res.rounds_used},
                    {"transcript", to_json(res.raw_transcript)}};
    }
    std::lock_guard<std::mutex> creating(create_mu_);
    std::string id = next_session_id();
    auto log = (fs::path(config_.log_dir) / (id + ".log")).string();
    auto session = std::make_shared<ServiceSession>(id, wall_clock_now(), sc, seed, log);
    session->begin(SessionInit{id, sc->name, seed, sc->config, autonomy, graph});
    write_meta(*session, body);
    {
      std::lock_guard<std::mutex> lock(mu_);
      sessions_[id] = session;
    }
    Json out = session->read([&](const SessionState& s, const std::vector<Event>&) {
      return with_seq(Json{{"session_id", id},
                           {"phase", std::string(to_string(s.phase))},
                           {"document", Json::parse(serialize_document(s.goals, *sc->ontology))}},
                      s);
    });
    out.update(intent);
    return HttpReply{201, out};
  } catch (const Error& e) {
    return failure(e);
  }
}

HttpReply Service::list_sessions() const {
  std::vector<std::shared_ptr<ServiceSession>> all;
  {
    std::lock_guard<std::mutex> lock(mu_);
    for (const auto& [_, s] : sessions_) all.push_back(s);
  }
  Json list = Json::array();
  for (const auto& s : all) {
    list.push_back(s->read([&](const SessionState& st, const std::vector<Event>&) {
      return Json{{"session_id", s->id()},
                  {"created_at", s->created_at()},
                  {"scenario", st.scenario},
                  {"phase", std::string(to_string(st.phase))},
                  {"seq", st.seq}};
    }));
  }
  return HttpReply{200, Json{{"sessions", list}}};
}

HttpReply Service::get_session(const std::string& sid) const {
  try {
    auto s = find(sid);
    return HttpReply{200, s->read([&](const SessionState& st, const std::vector<Event>&) {
                       return with_seq(Json{{"state", state_to_json(st)}, {"created_at", s->created_at()}}, st);
                     })};
  } catch (const Error& e) {
    return failure(e);
  }
}

HttpReply Service::get_report(const std::string& sid) const {
  try {
    auto s = find(sid);
    return HttpReply{200, s->read([&](const SessionState& st, const std::vector<Event>& events) {
                       return with_seq(build_report(events, s->log_path()), st);
                     })};
  } catch (const Error& e) {
    return failure(e);
  }
}

HttpReply Service::submit(const std::string& sid, Command cmd, const std::function<Json(const SessionState&)>& view) {
  try {
    auto s = find(sid);
    cmd = command_from_json(to_json(cmd));
    s->submit(cmd);
    return HttpReply{200, s->read([&](const SessionState& st, const std::vector<Event>&) { return with_seq(view(st), st); })};
  } catch (const Error& e) {
    return failure(e);
  }
}

HttpReply Service::patch_goal(const std::string& sid, const std::string& gid, const Json& body) {
  try {
    auto s = find(sid);
    bool known = s->read([&](const SessionState& st, const std::vector<Event>&) { return st.goals.contains(gid); });
    if (!known) throw Error("unknown-goal", "no goal '" + gid + "'", Json{{"goal_id", gid}});
  } catch (const Error& e) {
    return failure(e);
  }
  Command c{CommandKind::user_edit, Json{{"goal_id", gid}, {"patch", body}}, Origin::user};
  return submit(sid, c, [&](const SessionState& st) { return Json{{"goal", node_to_json(st.goals.at(gid))}}; });
}

HttpReply Service::put_goals(const std::string& sid, const Json& body) {
  Command c{CommandKind::user_edit, Json{{"graph", body}}, Origin::user};
  return submit(sid, c, [](const SessionState& st) { return Json{{"graph", graph_to_json(st.goals)}}; });
}

HttpReply Service::confirm(const std::string& sid) {
  return submit(sid, Command{CommandKind::start, Json::object(), Origin::user}, plan_view);
}

HttpReply Service::get_plan(const std::string& sid) const {
  try {
    return HttpReply{200, find(sid)->read([](const SessionState& st, const std::vector<Event>&) {
                       return with_seq(plan_view(st), st);
                     })};
  } catch (const Error& e) {
    return failure(e);
  }
}

HttpReply Service::get_conflicts(const std::string& sid) const {
  try {
    return HttpReply{200, find(sid)->read([](const SessionState& st, const std::vector<Event>&) {
                       return with_seq(conflicts_view(st), st);
                     })};
  } catch (const Error& e) {
    return failure(e);
  }
}

HttpReply Service::resolve(const std::string& sid, const std::string& cid, const Json& body) {
  Json payload;
  try {
    auto s = find(sid);
    const std::string& cand = need_string(body, "candidate_id");
    int verdict = s->read([&](const SessionState& st, const std::vector<Event>&) {
      if (!st.conflicts.count(cid)) return 404;
      auto it = st.proposals.find(cid);
      if (it == st.proposals.end()) return 409;
      for (const auto& c : it->second) {
        if (c.id == cand) return 200;
      }
      return 409;
    });
    if (verdict == 404) throw Error("unknown-conflict", "no open conflict '" + cid + "'", Json{{"conflict_id", cid}});
    if (verdict == 409) {
      throw Error("stale-candidate", "candidate '" + cand + "' is not a current proposal for " + cid,
                  Json{{"conflict_id", cid}, {"candidate_id", cand}});
    }
    payload = Json{{"candidate_id", cand}};
    if (body.contains("approve")) payload["approve"] = body["approve"];
  } catch (const Error& e) {
    return failure(e);
  }
  return submit(sid, Command{CommandKind::apply_plan_update, payload, Origin::user}, conflicts_view);
}

HttpReply Service::set_autonomy(const std::string& sid, const Json& body) {
  Json payload = body.is_object() && body.contains("level") ? Json{{"level", body["level"]}} : Json::object();
  return submit(sid, Command{CommandKind::set_autonomy, payload, Origin::user}, conflicts_view);
}

HttpReply Service::pause(const std::string& sid, const Json& body) {
  return submit(sid, Command{CommandKind::pause_branch, body, Origin::user}, paused_view);
}

HttpReply Service::resume(const std::string& sid, const Json& body) {
  return submit(sid, Command{CommandKind::resume_branch, body, Origin::user}, paused_view);
}

HttpReply Service::command(const std::string& sid, const Json& body) {
  try {
    Command c = command_from_json(body);
    return submit(sid, c, [](const SessionState& st) { return Json{{"phase", std::string(to_string(st.phase))}}; });
  } catch (const Error& e) {
    return failure(e);
  }
}

void Service::mount(httplib::Server& server) {
  using httplib::Request;
  using httplib::Response;
  auto guarded = [](auto handler) {
    return [handler](const Request& req, Response& res) {
      try {
        reply(res, handler(req));
      } catch (const Error& e) {
        reply(res, failure(e));
      } catch (const std::exception& e) {
        reply(res, HttpReply{500, Json{{"error", "internal"}, {"message", e.what()}, {"detail", Json::object()}}});
      }
    };
  };
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
  server.Options(R"(/.*)", [](const Request&, Response& res) {
    res.set_header("Access-Control-Allow-Methods", "GET, POST, PATCH, PUT, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type, Last-Event-ID");
    res.status = 204;
  });

  server.Post("/sessions", guarded([this](const Request& r) { return create_session(parse_body(r)); }));
  server.Get("/sessions", guarded([this](const Request&) { return list_sessions(); }));
  server.Get(R"(/sessions/([^/]+))", guarded([this](const Request& r) { return get_session(r.matches[1]); }));
  server.Get(R"(/sessions/([^/]+)/report)", guarded([this](const Request& r) { return get_report(r.matches[1]); }));
  server.Patch(R"(/sessions/([^/]+)/goals/([^/]+))", guarded([this](const Request& r) {
                 return patch_goal(r.matches[1], r.matches[2], parse_body(r));
               }));
  server.Put(R"(/sessions/([^/]+)/goals)",
             guarded([this](const Request& r) { return put_goals(r.matches[1], parse_body(r)); }));
  server.Post(R"(/sessions/([^/]+)/confirm)", guarded([this](const Request& r) { return confirm(r.matches[1]); }));
  server.Get(R"(/sessions/([^/]+)/plan)", guarded([this](const Request& r) { return get_plan(r.matches[1]); }));
  server.Get(R"(/sessions/([^/]+)/conflicts)",
             guarded([this](const Request& r) { return get_conflicts(r.matches[1]); }));
  server.Post(R"(/sessions/([^/]+)/conflicts/([^/]+)/resolve)", guarded([this](const Request& r) {
                return resolve(r.matches[1], r.matches[2], parse_body(r));
              }));
  server.Post(R"(/sessions/([^/]+)/autonomy)",
              guarded([this](const Request& r) { return set_autonomy(r.matches[1], parse_body(r)); }));
  server.Post(R"(/sessions/([^/]+)/pause)",
              guarded([this](const Request& r) { return pause(r.matches[1], parse_body(r)); }));
  server.Post(R"(/sessions/([^/]+)/resume)",
              guarded([this](const Request& r) { return resume(r.matches[1], parse_body(r)); }));
  server.Post(R"(/sessions/([^/]+)/commands)",
              guarded([this](const Request& r) { return command(r.matches[1], parse_body(r)); }));

  server.Get(R"(/sessions/([^/]+)/events)", [this](const Request& req, Response& res) {
    std::shared_ptr<ServiceSession> session;
    std::int64_t from = 1;
    try {
      session = find(req.matches[1]);
      auto parse_seq = [](const std::string& text, const char* what) -> std::int64_t {
        try {
          std::size_t used = 0;
          long long v = std::stoll(text, &used);
          if (used == text.size() && v >= 0) return v;
        } catch (const std::exception&) {
        }
        throw Error("invalid-command", std::string(what) + " must be a non-negative integer", Json{{"value", text}});
      };
      if (req.has_param("from_seq")) from = parse_seq(req.get_param_value("from_seq"), "from_seq");
      if (req.has_header("Last-Event-ID")) from = parse_seq(req.get_header_value("Last-Event-ID"), "Last-Event-ID") + 1;
    } catch (const Error& e) {
      reply(res, failure(e));
      return;
    }
    from = std::max<std::int64_t>(from, 1);
    auto next = std::make_shared<std::int64_t>(from);
    auto heartbeat = config_.heartbeat;
    res.set_header("Cache-Control", "no-cache");
    res.set_chunked_content_provider("text/event-stream", [session, next, heartbeat](std::size_t,
                                                                                      httplib::DataSink& sink) {
      bool completed = false;
      auto events = session->wait_from(*next, heartbeat, &completed);
      if (events.empty()) {
        if (completed) {
          sink.write(kSseEnd, std::char_traits<char>::length(kSseEnd));
          sink.done();
          return true;
        }
        return sink.write(kSseHeartbeat, std::char_traits<char>::length(kSseHeartbeat));
      }
      std::string chunk;
      for (const auto& e : events) chunk += sse_frame(e);
      *next = events.back().seq + 1;
      return sink.write(chunk.data(), chunk.size());
    });
  });
}

void Service::serve(const std::string& host, int port) {
  server_ = std::make_unique<httplib::Server>();
  mount(*server_);
  if (!server_->listen(host, port)) {
    throw Error("io-error", "cannot listen on " + host + ":" + std::to_string(port), Json{{"port", port}});
  }
}

void Service::stop() {
  std::vector<std::shared_ptr<ServiceSession>> all;
  {
    std::lock_guard<std::mutex> lock(mu_);
    for (const auto& [_, s] : sessions_) all.push_back(s);
  }
  for (const auto& s : all) s->wake_all();
  if (server_) server_->stop();
}

}  // namespace orchvis
