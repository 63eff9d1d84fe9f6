#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "coherent/world.hpp"

namespace coherent {

enum class Verb { kLandOn, kMoveTowards, kTakeoffFrom, kOpen, kClose, kGrab, kPutInto, kPutOn };

std::string_view to_string(Verb verb);
std::optional<Verb> verb_from_string(std::string_view text);
constexpr int arity(Verb v) { return (v == Verb::kPutInto || v == Verb::kPutOn) ? 2 : 1; }

/// Ordered verb list of an archetype, as in the published action table.
std::span<const Verb> archetype_verbs(Archetype archetype);
bool supports(Archetype archetype, Verb verb);

/// Textual action: `[grab] <apple>`, `[putinto] <apple> into <basket>`,
/// `[puton] <apple> on <dining_table>`.
struct Action {
  Verb verb = Verb::kGrab;
  std::vector<std::string> args;

  std::string render() const;
  friend bool operator==(const Action&, const Action&) = default;
};

/// Action resolved against a scene. `second` is kNoEntity for unary verbs.
struct GroundAction {
  Verb verb = Verb::kGrab;
  EntityIndex first = kNoEntity;
  EntityIndex second = kNoEntity;
  friend bool operator==(const GroundAction&, const GroundAction&) = default;
};

/// Throws ParseError on unknown verb, wrong arity or a verb the archetype lacks.
Action parse_action(std::string_view text, Archetype archetype);
/// Grammar-only parse (no archetype check).
Action parse_action_any(std::string_view text);

enum class FailureCode {
  kNotNear,
  kHeightLimit,
  kHandsFull,
  kHandsEmpty,
  kClosedBlocking,
  kWrongKind,
  kNotSupportedByRobot,
  kPoseConflict,
};

std::string_view to_string(FailureCode code);
std::optional<FailureCode> failure_code_from_string(std::string_view text);

struct ValidationOutcome {
  bool executable = true;
  std::optional<FailureCode> reason;
  std::string detail;

  static ValidationOutcome ok() { return {}; }
  static ValidationOutcome fail(FailureCode code, std::string detail) { return {false, code, std::move(detail)}; }
};

GroundAction ground(const Scene& scene, const Action& action);  // throws UnknownEntity
Action unground(const Scene& scene, const GroundAction& action);
std::string render(const Scene& scene, const GroundAction& action);

ValidationOutcome validate(const WorldState& state, int robot_slot, const GroundAction& action);
ValidationOutcome validate(const WorldState& state, std::string_view robot, const Action& action);

/// Transition function. Throws PreconditionViolated (state untouched) when
/// validate() rejects the action.
WorldState apply(const WorldState& state, int robot_slot, const GroundAction& action);
WorldState apply(const WorldState& state, std::string_view robot, const Action& action);
/// apply() without re-validating; callers must have validated.
void apply_in_place(WorldState& state, int robot_slot, const GroundAction& action);

/// Rule-generated feasible actions, sorted by rendered text.
std::vector<GroundAction> feasible_ground_actions(const WorldState& state, int robot_slot);
std::vector<Action> feasible_actions(const WorldState& state, std::string_view robot);

/// Every grammatical action over the scene's entities for the archetype's
/// verbs, sorted by rendered text. Exponential only in arity (<= 2).
std::vector<GroundAction> all_grammatical_actions(const Scene& scene, int robot_slot);

}  // namespace coherent
