#pragma once

#include <cstddef>
#include <deque>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "coherent/actions.hpp"
#include "coherent/backend.hpp"
#include "coherent/engine.hpp"
#include "coherent/tasks.hpp"
#include "coherent/world.hpp"

namespace coherent {

inline constexpr std::size_t kHistoryWindow = 5;

enum class FeedbackKind { kFailure, kSuccessPartial, kSuccessComplete };
enum class FailureSituation { kWrongStep, kWrongRobot, kExecutionLimit };

std::string_view to_string(FeedbackKind kind);
std::string_view to_string(FailureSituation situation);

struct Feedback {
  FeedbackKind kind = FeedbackKind::kSuccessComplete;
  std::optional<FailureSituation> situation;  // set iff kind == kFailure
  std::string detail;
  std::string progress;  // success kinds only

  /// Single line used in the dialogue history and in trace notes.
  std::string render() const;
};

struct HistoryEntry {
  int iteration = 0;
  std::string proposal;  // raw assigner reply (reasoning included)
  std::optional<Assignment> assignment;
  std::string outcome;   // executed or attempted action, or "waited"
  std::optional<Feedback> feedback;
};

struct AssignerContext {
  std::string instruction;
  std::string background;
  std::string capabilities;
  std::string observations;
  std::string notes;
  std::vector<std::string> robots;
  std::deque<HistoryEntry> history;
  bool use_history = true;
};

AssignerContext make_assigner_context(const WorldState& state, const TaskSpec& task, bool use_history = true);

/// Text of the history section: "none" when empty or disabled.
std::string render_history(const AssignerContext& ctx);
std::vector<ChatMessage> build_assigner_prompt(const AssignerContext& ctx);

struct Proposal {
  std::optional<Assignment> assignment;  // nullopt: no-op iteration
  std::string reply;
  int queries = 0;
  std::string error;
};

/// Queries the assigner (with up to kFormatRetries format reminders) and
/// records the proposal as the newest history entry.
Proposal propose(AssignerContext& ctx, Backend& backend, int iteration);

struct ExecutionResult {
  std::vector<Action> feasible;
  ExecutorChoice choice;
  std::string reply;
  int queries = 0;
  /// What goes to the engine: the feasible choice, or else the attempted
  /// action so that its rejection reason is recorded. Empty for a wait.
  std::optional<Action> submitted() const { return choice.action ? choice.action : choice.attempted; }
};

std::vector<ChatMessage> build_executor_prompt(const WorldState& state, const Assignment& assignment,
                                               std::span<const Action> feasible);
ExecutionResult execute_assigned(const WorldState& state, const Assignment& assignment, Backend& backend);

/// Self-reflection on one cycle. `validation` is absent when the executor waited.
Feedback reflect(const Assignment& assignment, const ExecutionResult& execution,
                 const std::optional<ValidationOutcome>& validation, const WorldState& before, const WorldState& after);
/// Feedback for an iteration whose proposal could not be parsed.
Feedback proposal_failure_feedback(const Proposal& proposal);

/// Attaches feedback to the newest history entry, enforces the window and
/// refreshes observations from `after`.
void adjust(AssignerContext& ctx, const Feedback& feedback, std::string outcome, const WorldState& after);

struct PefaOptions {
  bool use_history = true;
};

class PefaPlanner : public Planner {
 public:
  PefaPlanner(Backend& backend, PefaOptions options = {}) : backend_(backend), options_(options) {}

  std::string name() const override { return options_.use_history ? "pefa" : "pefa-no-history"; }
  void begin(const WorldState& initial, const TaskSpec& task) override;
  Decision decide(const WorldState& state, std::span<const TransitionRecord> history) override;
  void observe(TransitionRecord& record, const WorldState& before, const WorldState& after) override;

  const AssignerContext& context() const noexcept { return ctx_; }
  /// One entry per iteration, in order.
  const std::vector<Feedback>& feedback_log() const noexcept { return feedback_log_; }
  /// Assigner prompts sent so far (first query of each iteration).
  const std::vector<std::vector<ChatMessage>>& assigner_prompts() const noexcept { return prompts_; }

 private:
  Backend& backend_;
  PefaOptions options_;
  AssignerContext ctx_;
  Proposal proposal_;
  std::optional<ExecutionResult> execution_;
  std::vector<Feedback> feedback_log_;
  std::vector<std::vector<ChatMessage>> prompts_;
};

struct PefaEpisode {
  EpisodeResult result;
  std::vector<Feedback> feedback;
};

PefaEpisode run_pefa(const SceneSpec& scene, const TaskSpec& task, Backend& backend, int budget, PefaOptions options = {});

}  // namespace coherent
