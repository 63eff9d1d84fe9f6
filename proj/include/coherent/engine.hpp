#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "coherent/actions.hpp"
#include "coherent/errors.hpp"
#include "coherent/tasks.hpp"
#include "coherent/world.hpp"

namespace coherent {

/// One engine iteration. `action` is the action the planner asked for (also
/// when it was rejected); it is absent when the planner chose to wait.
struct TransitionRecord {
  int iteration = 0;
  std::optional<std::string> robot;
  std::optional<Action> action;
  std::optional<ValidationOutcome> validation;  // absent when no action was attempted
  std::string digest;                           // digest of the post-state
  std::string note;

  bool executed() const { return validation && validation->executable; }
};

struct EpisodeResult {
  std::string task_id;
  std::string planner;
  bool success = false;
  int steps_taken = 0;
  int budget = 0;
  std::vector<TransitionRecord> trace;
  std::vector<Relation> goal;
  WorldState final_state;
};

/// What a planner wants to happen in one iteration. An empty decision (or a
/// robot without an action) is a wait: the step is still consumed.
struct Decision {
  std::optional<std::string> robot;
  std::optional<Action> action;
  std::string note;
};

class Planner {
 public:
  virtual ~Planner() = default;
  virtual std::string name() const = 0;
  /// Called once before the first decision of an episode.
  virtual void begin(const WorldState& /*initial*/, const TaskSpec& /*task*/) {}
  virtual Decision decide(const WorldState& state, std::span<const TransitionRecord> history) = 0;
  /// Called after the engine has validated (and possibly applied) the
  /// decision. Planners may append to `record.note`; nothing else is theirs.
  virtual void observe(TransitionRecord& /*record*/, const WorldState& /*before*/, const WorldState& /*after*/) {}
};

/// Raised when a planner throws; carries the trace up to the failure.
class PlannerError : public Error {
 public:
  PlannerError(const std::string& message, std::vector<TransitionRecord> partial)
      : Error(message), partial_(std::move(partial)) {}
  const std::vector<TransitionRecord>& partial_trace() const noexcept { return partial_; }

 private:
  std::vector<TransitionRecord> partial_;
};

int step_budget(int gt_steps);

EpisodeResult run_episode(const SceneSpec& scene, const TaskSpec& task, Planner& planner, int budget);
EpisodeResult run_episode(const SceneSpec& scene, const TaskSpec& task, Planner& planner);

/// Replays the task's oracle script, one line per iteration.
class ScriptPlanner : public Planner {
 public:
  explicit ScriptPlanner(std::vector<ScriptStep> script) : script_(std::move(script)) {}
  std::string name() const override { return "script"; }
  void begin(const WorldState&, const TaskSpec&) override { next_ = 0; }
  Decision decide(const WorldState& state, std::span<const TransitionRecord> history) override;

 private:
  std::vector<ScriptStep> script_;
  std::size_t next_ = 0;
};

// Trace files: one JSON object per line with keys iteration, robot, action,
// valid, reason, digest, and optionally detail and note.
std::string trace_line(const TransitionRecord& record);
void write_trace(std::ostream& out, std::span<const TransitionRecord> trace);
std::vector<TransitionRecord> read_trace(std::istream& in);

struct ReplayReport {
  bool ok = true;
  int records = 0;
  int first_mismatch = 0;  // iteration index, 0 when ok
  std::string message;
  WorldState final_state;
};

/// Re-applies every record marked valid from the scene's initial state and
/// compares each recorded digest with the recomputed one.
ReplayReport replay_trace(const SceneSpec& scene, std::span<const TransitionRecord> trace);

}  // namespace coherent
