#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "coherent/actions.hpp"
#include "coherent/errors.hpp"

namespace coherent {

/// Re-queries after an unparseable completion, for every LLM-backed planner.
inline constexpr int kFormatRetries = 2;

struct ChatMessage {
  std::string role;  // system | user | assistant
  std::string content;
  friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

struct CompletionParams {
  double temperature = 0.0;
  int max_tokens = 512;
  std::optional<std::uint64_t> seed;
  /// Names the caller ("assigner", "executor:robotic_dog", ...). Scripted
  /// backends route on it; the HTTP backend ignores it.
  std::string tag;
};

class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string name() const = 0;
  /// Throws EndpointError, ScriptExhausted or Timeout.
  virtual std::string complete(const std::vector<ChatMessage>& messages, const CompletionParams& params) = 0;
};

/// Replays canned replies. Either one shared queue, or named channels keyed by
/// the caller tag; a tag without its own channel falls back to the longest
/// channel name that prefixes it (so "executor" serves every executor).
class ScriptedBackend : public Backend {
 public:
  explicit ScriptedBackend(std::vector<std::string> replies);
  ScriptedBackend() = default;
  ScriptedBackend(ScriptedBackend&& other) noexcept;
  ScriptedBackend& operator=(ScriptedBackend&&) = delete;

  /// `replies` are served in order; with `repeat_last` the final reply is
  /// served forever instead of raising ScriptExhausted.
  void add_channel(std::string channel, std::vector<std::string> replies, bool repeat_last = false);

  /// Script files: a JSON array of strings, or an object mapping channel
  /// names to arrays (or to {"replies": [...], "repeat_last": true}).
  static ScriptedBackend from_json(std::string_view json_text);
  static ScriptedBackend load(const std::filesystem::path& path);

  std::string name() const override { return "scripted"; }
  std::string complete(const std::vector<ChatMessage>& messages, const CompletionParams& params) override;

  std::size_t calls() const;
  /// Every request seen so far, in call order (for prompt assertions).
  std::vector<std::vector<ChatMessage>> transcript() const;

 private:
  struct Channel {
    std::deque<std::string> replies;
    bool repeat_last = false;
    std::string last;
  };
  Channel* route(const std::string& tag);

  mutable std::mutex mu_;
  std::map<std::string, Channel> channels_;  // "" is the shared queue
  std::vector<std::vector<ChatMessage>> transcript_;
};

/// Wraps a callable; handy for fuzzing and for priors computed in tests.
class FunctionBackend : public Backend {
 public:
  using Fn = std::function<std::string(const std::vector<ChatMessage>&, const CompletionParams&)>;
  explicit FunctionBackend(Fn fn, std::string name = "function") : fn_(std::move(fn)), name_(std::move(name)) {}
  std::string name() const override { return name_; }
  std::string complete(const std::vector<ChatMessage>& messages, const CompletionParams& params) override {
    return fn_(messages, params);
  }

 private:
  Fn fn_;
  std::string name_;
};

struct HttpConfig {
  std::string base_url = "http://127.0.0.1:8000";  // scheme://host[:port]
  std::string path = "/v1/chat/completions";
  std::string model = "gpt-4-0125-preview";
  std::string api_key;  // empty: read COHERENT_API_KEY
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{200};
  double backoff_multiplier = 2.0;
  std::chrono::milliseconds timeout{30000};
  int max_in_flight = 4;
};

struct HttpTelemetry {
  std::uint64_t requests = 0;   // HTTP attempts, including retries
  std::uint64_t retries = 0;
  std::uint64_t completions = 0;
  std::uint64_t failures = 0;
};

class HttpBackend : public Backend {
 public:
  explicit HttpBackend(HttpConfig config);
  ~HttpBackend() override;

  std::string name() const override { return "http"; }
  std::string complete(const std::vector<ChatMessage>& messages, const CompletionParams& params) override;

  HttpTelemetry telemetry() const;
  const HttpConfig& config() const noexcept { return config_; }

  /// Request body sent for `messages` (exposed for tests).
  std::string request_body(const std::vector<ChatMessage>& messages, const CompletionParams& params) const;
  /// Extracts choices[0].message.content; throws EndpointError when absent.
  static std::string response_content(std::string_view body);

 private:
  HttpConfig config_;
  std::string api_key_;
  std::counting_semaphore<1024> in_flight_;
  std::atomic<std::uint64_t> requests_{0}, retries_{0}, completions_{0}, failures_{0};
};

// ---------------------------------------------------------------------------
// Protocol parsers

struct Assignment {
  std::string robot;
  std::string subtask;
  friend bool operator==(const Assignment&, const Assignment&) = default;
};

/// Maps a free-form robot mention ("<Robotic Dog>", "robotic dog") to one of
/// `robots`; nullopt when nothing matches.
std::optional<std::string> resolve_robot(std::string_view mention, std::span<const std::string> robots);

/// Last line of the form `<robot>: subtask` (optionally numbered) whose robot
/// resolves. Throws ParseError when no line has the shape, UnknownRobot when
/// lines have it but none names a scene robot.
Assignment parse_assignment(std::string_view text, std::span<const std::string> robots);

/// Numbered proposal lists ("1. <dog>: ..."): the item numbered 1, if any.
std::optional<Assignment> parse_first_numbered(std::string_view text, std::span<const std::string> robots);

/// Every `[verb] <arg> (into|on <arg>)` occurrence in text order. Entity
/// names are normalized ("dining table" -> dining_table). Unknown verbs and
/// wrong arities are skipped.
std::vector<Action> scan_actions(std::string_view text);

struct ExecutorChoice {
  std::optional<Action> action;     // first feasible action mentioned
  std::optional<Action> attempted;  // first grammatical action, when none was feasible
  bool declared_wait = false;
  bool unparseable() const { return !action && !attempted && !declared_wait; }
};

/// Never returns an action outside `feasible`; everything else is a wait.
ExecutorChoice parse_executor_choice(std::string_view text, std::span<const Action> feasible);

/// Reply line for scripted policies: `robot: [verb] <args>`; returns nullopt
/// unless the robot resolves and an action is present.
struct RobotAction {
  std::string robot;
  Action action;
};
std::optional<RobotAction> parse_robot_action(std::string_view text, std::span<const std::string> robots);

}  // namespace coherent
