#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "coherent/backend.hpp"
#include "coherent/engine.hpp"
#include "coherent/search.hpp"
#include "coherent/tasks.hpp"
#include "coherent/world.hpp"

namespace coherent {

// ---------------------------------------------------------------------------
// CMRS: one central prompt per step that directly names a robot action.

class CmrsPlanner : public Planner {
 public:
  explicit CmrsPlanner(Backend& backend) : backend_(backend) {}
  std::string name() const override { return "cmrs"; }
  void begin(const WorldState& initial, const TaskSpec& task) override;
  Decision decide(const WorldState& state, std::span<const TransitionRecord> history) override;

  std::vector<ChatMessage> build_prompt(const WorldState& state) const;

 private:
  Backend& backend_;
  std::string instruction_;
  std::vector<std::string> robots_;
};

// ---------------------------------------------------------------------------
// DMRS: robots talk in scene order for `rounds` rounds; the last robot
// summarizes the dialogue into one action.

class DmrsPlanner : public Planner {
 public:
  DmrsPlanner(Backend& backend, int rounds);
  std::string name() const override { return rounds_ == 1 ? "dmrs1" : "dmrs2"; }
  void begin(const WorldState& initial, const TaskSpec& task) override;
  Decision decide(const WorldState& state, std::span<const TransitionRecord> history) override;
  void observe(TransitionRecord& record, const WorldState& before, const WorldState& after) override;

  /// Utterances of the most recent cycle, "robot: text", in speaking order.
  const std::vector<std::string>& last_dialogue() const noexcept { return dialogue_; }

 private:
  Backend& backend_;
  int rounds_;
  std::string instruction_;
  std::vector<std::string> robots_;
  std::vector<std::string> dialogue_;
  std::set<std::string> seen_digests_;
};

// Trace-note tags for the three dialogue failure modes.
inline constexpr std::string_view kTagCapability = "reason1_capability_misjudged";
inline constexpr std::string_view kTagHallucination = "reason2_hallucinated_action";
inline constexpr std::string_view kTagCycle = "reason3_repetitive_cycle";

// ---------------------------------------------------------------------------
// Tree search over the union of every robot's feasible moves.

struct Move {
  int robot_slot = 0;
  GroundAction action;
  std::string text;  // "robot: [verb] <args>", the tie-break key
};

std::vector<Move> joint_moves(const WorldState& state);

struct MctsParams {
  double c_puct = 1.5;  // PUCT exploration (LLM-MCTS)
  double c_uct = 1.5;   // UCB1 exploration (primitive MCTS)
  double discount = 0.95;
  int rollout_depth = 0;  // plies counted from the root; must be >= 1
  int iterations = 1000;
  std::uint64_t seed = 0;
};

/// Supplies π(a|h) for the children of a node. Must return one non-negative
/// weight per move summing to 1.
class PriorSource {
 public:
  virtual ~PriorSource() = default;
  virtual std::vector<double> priors(const WorldState& state, const std::vector<Move>& moves) = 0;
};

class UniformPrior : public PriorSource {
 public:
  std::vector<double> priors(const WorldState& state, const std::vector<Move>& moves) override;
};

/// Asks a backend to weight the moves; cached per state digest. A backend
/// error or an unusable reply falls back to uniform priors for that state.
class LlmPrior : public PriorSource {
 public:
  LlmPrior(Backend& backend, std::string instruction) : backend_(backend), instruction_(std::move(instruction)) {}
  std::vector<double> priors(const WorldState& state, const std::vector<Move>& moves) override;

  std::size_t queries() const noexcept { return queries_; }
  std::size_t fallbacks() const noexcept { return fallbacks_; }

 private:
  Backend& backend_;
  std::string instruction_;
  std::unordered_map<std::string, std::vector<double>> cache_;
  std::size_t queries_ = 0;
  std::size_t fallbacks_ = 0;
};

/// Reply format `robot: [verb] <args> = weight`; unlisted moves share the
/// residual mass, then the vector is normalized. nullopt when no line maps
/// to a move.
std::optional<std::vector<double>> parse_prior_reply(std::string_view reply, const std::vector<Move>& moves,
                                                     std::span<const std::string> robots);

struct MctsNode {
  WorldState state;
  bool terminal = false;
  bool expanded = false;
  std::uint64_t visits = 0;
  double value = 0.0;            // W
  std::uint64_t rollouts = 0;    // rollouts started at this node
  std::vector<Move> moves;
  std::vector<double> priors;
  std::vector<std::unique_ptr<MctsNode>> children;  // parallel to moves

  double mean() const { return visits ? value / static_cast<double>(visits) : 0.0; }
};

struct MctsResult {
  Move move;
  std::unique_ptr<MctsNode> root;
};

/// Select / expand / rollout / backpropagate. Reward is discount^(d-1) for a
/// goal first reached d plies below the root, else 0. Returns the most
/// visited root child; ties go to the lexicographically smallest move text.
/// Throws DomainError when iterations < 1 or the root has no moves.
///
/// With a PriorSource, children are selected by PUCT
/// Q + c_puct * pi * sqrt(N) / (1 + n). Without one (primitive MCTS), by
/// UCB1 Q + c_uct * sqrt(ln N / n) after every child has one visit.
MctsResult mcts_search(const WorldState& state, std::span<const CompiledRelation> goal, const MctsParams& params,
                       PriorSource& priors);
MctsResult mcts_search(const WorldState& state, std::span<const CompiledRelation> goal, const MctsParams& params);
MctsResult llm_mcts_search(const WorldState& state, std::span<const CompiledRelation> goal, Backend& backend,
                           const std::string& instruction, const MctsParams& params);

class MctsPlanner : public Planner {
 public:
  /// `backend` null: primitive MCTS with uniform priors.
  MctsPlanner(MctsParams params, Backend* backend = nullptr) : params_(params), backend_(backend) {}
  std::string name() const override { return backend_ ? "llm-mcts" : "mcts"; }
  void begin(const WorldState& initial, const TaskSpec& task) override;
  Decision decide(const WorldState& state, std::span<const TransitionRecord> history) override;

 private:
  MctsParams params_;
  Backend* backend_;
  std::vector<CompiledRelation> goal_;
  int rollout_depth_ = 0;
  std::unique_ptr<PriorSource> prior_;
};

EpisodeResult run_cmrs(const SceneSpec& scene, const TaskSpec& task, Backend& backend, int budget);
EpisodeResult run_dmrs(const SceneSpec& scene, const TaskSpec& task, Backend& backend, int rounds, int budget);

}  // namespace coherent
