#include "coherent/backend.hpp"

#include <httplib.h>
#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <regex>
#include <sstream>
#include <thread>

#include "coherent/world.hpp"

namespace coherent {

namespace {

using json = nlohmann::json;

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> lines;
  std::string line;
  std::istringstream in{std::string(text)};
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

std::string strip_decoration(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    if (c == '`' || c == '*') continue;
    out.push_back(c);
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// ScriptedBackend

ScriptedBackend::ScriptedBackend(std::vector<std::string> replies) { add_channel("", std::move(replies)); }

ScriptedBackend::ScriptedBackend(ScriptedBackend&& other) noexcept {
  std::lock_guard lock(other.mu_);
  channels_ = std::move(other.channels_);
  transcript_ = std::move(other.transcript_);
}

void ScriptedBackend::add_channel(std::string channel, std::vector<std::string> replies, bool repeat_last) {
  std::lock_guard lock(mu_);
  Channel& c = channels_[std::move(channel)];
  for (auto& r : replies) c.replies.push_back(std::move(r));
  c.repeat_last = repeat_last;
}

ScriptedBackend ScriptedBackend::from_json(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw SchemaError("", std::string("script is not valid JSON: ") + e.what());
  }
  auto replies_of = [](const json& arr, const std::string& where) {
    if (!arr.is_array()) throw SchemaError(where, "expected an array of strings");
    std::vector<std::string> out;
    for (const auto& r : arr) {
      if (!r.is_string()) throw SchemaError(where, "expected an array of strings");
      out.push_back(r.get<std::string>());
    }
    return out;
  };
  ScriptedBackend b;
  if (j.is_array()) {
    b.add_channel("", replies_of(j, ""));
  } else if (j.is_object()) {
    for (const auto& [name, value] : j.items()) {
      if (value.is_object()) {
        const bool repeat = value.value("repeat_last", false);
        b.add_channel(name, replies_of(value.value("replies", json::array()), name + "/replies"), repeat);
      } else {
        b.add_channel(name, replies_of(value, name));
      }
    }
  } else {
    throw SchemaError("", "script must be an array or an object of channels");
  }
  return b;
}

ScriptedBackend ScriptedBackend::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open script " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

ScriptedBackend::Channel* ScriptedBackend::route(const std::string& tag) {
  if (auto it = channels_.find(tag); it != channels_.end()) return &it->second;
  Channel* best = nullptr;
  std::size_t best_len = 0;
  for (auto& [name, ch] : channels_) {
    if (name.empty() || name.size() < best_len) continue;
    if (tag.compare(0, name.size(), name) == 0) {
      best = &ch;
      best_len = name.size();
    }
  }
  if (best) return best;
  if (auto it = channels_.find(""); it != channels_.end()) return &it->second;
  return nullptr;
}

std::string ScriptedBackend::complete(const std::vector<ChatMessage>& messages, const CompletionParams& params) {
  std::lock_guard lock(mu_);
  transcript_.push_back(messages);
  Channel* ch = route(params.tag);
  if (!ch) throw ScriptExhausted("no scripted channel for '" + params.tag + "'");
  if (ch->replies.empty()) {
    if (ch->repeat_last && !ch->last.empty()) return ch->last;
    throw ScriptExhausted("scripted replies exhausted for '" + params.tag + "'");
  }
  ch->last = std::move(ch->replies.front());
  ch->replies.pop_front();
  return ch->last;
}

std::size_t ScriptedBackend::calls() const {
  std::lock_guard lock(mu_);
  return transcript_.size();
}

std::vector<std::vector<ChatMessage>> ScriptedBackend::transcript() const {
  std::lock_guard lock(mu_);
  return transcript_;
}

// ---------------------------------------------------------------------------
// HttpBackend

HttpBackend::HttpBackend(HttpConfig config)
    : config_(std::move(config)), in_flight_(std::max(1, std::min(config_.max_in_flight, 1024))) {
  if (config_.max_retries < 0) throw DomainError("max_retries must be non-negative");
  api_key_ = config_.api_key;
  if (api_key_.empty()) {
    if (const char* env = std::getenv("COHERENT_API_KEY")) api_key_ = env;
  }
}

HttpBackend::~HttpBackend() = default;

HttpTelemetry HttpBackend::telemetry() const {
  return HttpTelemetry{requests_.load(), retries_.load(), completions_.load(), failures_.load()};
}

std::string HttpBackend::request_body(const std::vector<ChatMessage>& messages, const CompletionParams& params) const {
  json body;
  body["model"] = config_.model;
  json msgs = json::array();
  for (const auto& m : messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
  body["messages"] = std::move(msgs);
  body["temperature"] = params.temperature;
  if (params.max_tokens > 0) body["max_tokens"] = params.max_tokens;
  if (params.seed) body["seed"] = *params.seed;
  return body.dump();
}

std::string HttpBackend::response_content(std::string_view body) {
  try {
    const json j = json::parse(body);
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw EndpointError(200, std::string("malformed completion response: ") + e.what());
  }
}

std::string HttpBackend::complete(const std::vector<ChatMessage>& messages, const CompletionParams& params) {
  for (const auto& m : messages) {
    if (m.content.empty()) throw DomainError("chat message content must be non-empty");
  }
  struct Slot {
    std::counting_semaphore<1024>& s;
    explicit Slot(std::counting_semaphore<1024>& sem) : s(sem) { s.acquire(); }
    ~Slot() { s.release(); }
  } slot(in_flight_);

  httplib::Client client(config_.base_url);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());
  if (!api_key_.empty()) client.set_bearer_token_auth(api_key_);

  const std::string body = request_body(messages, params);
  auto backoff = config_.initial_backoff;
  std::string last_error;
  bool last_was_timeout = false;
  int last_status = 0;

  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      ++retries_;
      std::this_thread::sleep_for(backoff);
      backoff = std::chrono::milliseconds(static_cast<long long>(std::llround(backoff.count() * config_.backoff_multiplier)));
    }
    ++requests_;
    const auto t0 = std::chrono::steady_clock::now();
    auto res = client.Post(config_.path, body, "application/json");
    const auto elapsed = std::chrono::steady_clock::now() - t0;
    if (!res) {
      // httplib reports an expired read timeout as a read error.
      last_was_timeout = res.error() == httplib::Error::Read && elapsed >= config_.timeout * 9 / 10;
      last_error = httplib::to_string(res.error());
      last_status = 0;
      continue;
    }
    last_was_timeout = false;
    last_status = res->status;
    if (res->status == 200) {
      ++completions_;
      return response_content(res->body);
    }
    if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    ++failures_;
    throw EndpointError(res->status, "HTTP " + std::to_string(res->status) + " from " + config_.base_url + config_.path);
  }
  ++failures_;
  if (last_was_timeout) throw Timeout("request to " + config_.base_url + config_.path + " timed out");
  throw EndpointError(last_status, "giving up after " + std::to_string(config_.max_retries) + " retries: " + last_error);
}

// ---------------------------------------------------------------------------
// Parsers

std::optional<std::string> resolve_robot(std::string_view mention, std::span<const std::string> robots) {
  std::string m = trim(strip_decoration(mention));
  m.erase(std::remove_if(m.begin(), m.end(), [](char c) { return c == '<' || c == '>'; }), m.end());
  while (!m.empty() && (m.back() == '.' || m.back() == ',')) m.pop_back();
  const std::string id = normalize_id(trim(m));
  if (id.empty()) return std::nullopt;
  for (const auto& r : robots) {
    if (normalize_id(r) == id) return r;
  }
  return std::nullopt;
}

namespace {

const std::regex& assignment_line() {
  static const std::regex re(R"(^\s*(?:[-*]\s*)?(?:\d+\s*[.)]\s*)?(<[^<>:]+>|[A-Za-z][A-Za-z0-9_ \-]*)\s*:\s*(\S.*?)\s*$)");
  return re;
}

std::optional<Assignment> match_assignment(const std::string& raw, std::span<const std::string> robots, bool& shaped) {
  const std::string line = strip_decoration(raw);
  std::smatch m;
  if (!std::regex_match(line, m, assignment_line())) return std::nullopt;
  shaped = true;
  auto robot = resolve_robot(m[1].str(), robots);
  if (!robot) return std::nullopt;
  return Assignment{*robot, m[2].str()};
}

}  // namespace

Assignment parse_assignment(std::string_view text, std::span<const std::string> robots) {
  const auto lines = split_lines(text);
  bool shaped = false;
  std::string unknown;
  for (auto it = lines.rbegin(); it != lines.rend(); ++it) {
    bool line_shaped = false;
    if (auto a = match_assignment(*it, robots, line_shaped)) return *a;
    if (line_shaped && unknown.empty()) {
      std::smatch m;
      const std::string line = strip_decoration(*it);
      std::regex_match(line, m, assignment_line());
      unknown = trim(m[1].str());
    }
    shaped = shaped || line_shaped;
  }
  if (shaped) throw UnknownRobot(unknown);
  throw ParseError("no '<robot>: subtask' line in completion");
}

std::optional<Assignment> parse_first_numbered(std::string_view text, std::span<const std::string> robots) {
  static const std::regex first(R"(^\s*(?:[-*]\s*)?1\s*[.)]\s*(.*)$)");
  for (const auto& raw : split_lines(text)) {
    std::smatch m;
    const std::string line = strip_decoration(raw);
    if (!std::regex_match(line, m, first)) continue;
    bool shaped = false;
    return match_assignment(m[1].str(), robots, shaped);
  }
  return std::nullopt;
}

std::vector<Action> scan_actions(std::string_view text) {
  static const std::regex re(R"(\[\s*([A-Za-z_]+)\s*\]\s*<([^<>\n]+)>(?:\s*(into|on)\s*<([^<>\n]+)>)?)");
  std::vector<Action> out;
  const std::string s(text);
  for (auto it = std::sregex_iterator(s.begin(), s.end(), re); it != std::sregex_iterator(); ++it) {
    const std::smatch& m = *it;
    std::string verb_text = m[1].str();
    std::transform(verb_text.begin(), verb_text.end(), verb_text.begin(), [](unsigned char c) { return std::tolower(c); });
    const auto verb = verb_from_string(verb_text);
    if (!verb) continue;
    Action a;
    a.verb = *verb;
    a.args.push_back(normalize_id(trim(m[2].str())));
    if (arity(*verb) == 2) {
      if (!m[4].matched) continue;
      const std::string conn = m[3].str();
      if ((*verb == Verb::kPutInto) != (conn == "into")) continue;
      a.args.push_back(normalize_id(trim(m[4].str())));
    }
    out.push_back(std::move(a));
  }
  return out;
}

ExecutorChoice parse_executor_choice(std::string_view text, std::span<const Action> feasible) {
  ExecutorChoice choice;
  for (const Action& a : scan_actions(text)) {
    if (std::find(feasible.begin(), feasible.end(), a) != feasible.end()) {
      choice.action = a;
      choice.attempted.reset();
      return choice;
    }
    if (!choice.attempted) choice.attempted = a;
  }
  static const std::regex wait_re(R"(\bwait(ing)?\b|\bremain still\b|\bno action\b)", std::regex::icase);
  const std::string s(text);
  choice.declared_wait = std::regex_search(s, wait_re);
  return choice;
}

std::optional<RobotAction> parse_robot_action(std::string_view text, std::span<const std::string> robots) {
  const auto lines = split_lines(text);
  for (auto it = lines.rbegin(); it != lines.rend(); ++it) {
    const std::string line = strip_decoration(*it);
    const auto actions = scan_actions(line);
    if (actions.empty()) continue;
    const std::string prefix = line.substr(0, line.find('['));
    // `robot: [verb] ...` first, then any robot named before the action.
    if (const auto colon = prefix.rfind(':'); colon != std::string::npos) {
      static const std::regex numbered(R"(^\s*(?:[-*]\s*)?\d+\s*[.)]\s*)");
      const std::string head = std::regex_replace(prefix.substr(0, colon), numbered, "");
      if (auto r = resolve_robot(head, robots)) return RobotAction{*r, actions.front()};
    }
    const std::string norm = normalize_id(prefix);
    std::optional<std::string> best;
    for (const auto& r : robots) {
      const std::string id = normalize_id(r);
      std::size_t pos = 0;
      while ((pos = norm.find(id, pos)) != std::string::npos) {
        const std::size_t end = pos + id.size();
        const bool left_ok = pos == 0 || !std::isalnum(static_cast<unsigned char>(norm[pos - 1]));
        // "robotic_arm" must not match inside "robotic_arm_1".
        const bool right_ok = end == norm.size() ||
                              (!std::isalnum(static_cast<unsigned char>(norm[end])) &&
                               !(norm[end] == '_' && end + 1 < norm.size() && std::isdigit(static_cast<unsigned char>(norm[end + 1]))));
        if (left_ok && right_ok && (!best || id.size() > normalize_id(*best).size())) best = r;
        pos = end;
      }
    }
    if (best) return RobotAction{*best, actions.front()};
  }
  return std::nullopt;
}

}  // namespace coherent
