#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "coherent/errors.hpp"
#include "coherent/scene_spec.hpp"

namespace coherent {

using EntityIndex = std::int32_t;
inline constexpr EntityIndex kNoEntity = -1;

enum class EntityKind { kObject, kSurface, kContainer, kDoor, kFloor, kRoom, kRobot };
enum class Height { kLow, kHigh };
enum class Pose { kGrounded, kAirborne };
enum class Predicate { kOn, kIn, kHeldBy, kNear, kInsideRoom, kConnects, kOpen, kClosed };

std::string_view to_string(EntityKind kind);
std::string_view to_string(Predicate predicate);
std::string_view to_string(Archetype archetype);
std::optional<Predicate> predicate_from_string(std::string_view text);
std::optional<Archetype> archetype_from_string(std::string_view text);

constexpr bool is_unary(Predicate p) { return p == Predicate::kOpen || p == Predicate::kClosed; }

/// A symbolic relation such as `ON(apple, coffee_table)` or `OPEN(fridge)`.
struct Relation {
  Predicate predicate = Predicate::kOn;
  std::string subject;
  std::optional<std::string> object;

  std::string render() const;
  friend bool operator==(const Relation&, const Relation&) = default;
};

/// Parses `PREDICATE(a, b)` / `PREDICATE(a)`. Whitespace tolerant; enforces arity.
Relation parse_relation(std::string_view text);
/// One relation per non-blank line.
std::vector<Relation> parse_relations(std::string_view text);

/// Lowercases and maps spaces/hyphens to underscores ("Coffee Table" -> "coffee_table").
std::string normalize_id(std::string_view text);

struct Entity {
  std::string id;
  EntityKind kind = EntityKind::kObject;
  EntityIndex room = kNoEntity;  // fixtures only; dynamic for everything else
  Height height = Height::kLow;
  bool openable = false;
  EntityIndex carrier = kNoEntity;  // quadrotor carrying this basket
  std::array<EntityIndex, 2> connects{kNoEntity, kNoEntity};  // doors
};

struct RobotInfo {
  EntityIndex entity = kNoEntity;
  Archetype archetype = Archetype::kRoboticDog;
  EntityIndex basket = kNoEntity;
  std::vector<EntityIndex> workspace;  // robotic arm only, sorted
};

/// Static part of a scene: entity table, robots, topology. Shared read-only
/// between every state derived from one build_scene call.
class Scene {
 public:
  const std::string& name() const noexcept { return name_; }
  const std::string& description() const noexcept { return description_; }

  std::span<const Entity> entities() const noexcept { return entities_; }
  const Entity& entity(EntityIndex e) const { return entities_.at(static_cast<std::size_t>(e)); }
  const std::string& id(EntityIndex e) const { return entity(e).id; }
  EntityKind kind(EntityIndex e) const { return entity(e).kind; }

  EntityIndex find(std::string_view id) const;
  EntityIndex require(std::string_view id) const;  // throws UnknownEntity

  std::span<const RobotInfo> robots() const noexcept { return robots_; }
  const RobotInfo& robot(int slot) const { return robots_.at(static_cast<std::size_t>(slot)); }
  int robot_slot(EntityIndex e) const;              // -1 when e is not a robot
  int require_robot(std::string_view id) const;     // throws UnknownRobot

  std::span<const EntityIndex> objects() const noexcept { return objects_; }
  std::span<const EntityIndex> openables() const noexcept { return openables_; }
  std::span<const EntityIndex> rooms() const noexcept { return rooms_; }
  std::span<const EntityIndex> doors() const noexcept { return doors_; }

  /// Door connecting two rooms, preferring an open one is the caller's job;
  /// this returns every door between them.
  std::vector<EntityIndex> doors_between(EntityIndex a, EntityIndex b) const;

  /// Position of an action's rendered text among all grammatical actions of
  /// this scene. Lets hot loops sort actions without rendering them. `verb`
  /// is the Verb enumerator value; `second` is kNoEntity for unary verbs.
  std::int32_t action_rank(int verb, EntityIndex first, EntityIndex second) const {
    const auto n = entities_.size();
    return action_rank_[(static_cast<std::size_t>(verb) * n + static_cast<std::size_t>(first)) * (n + 1) +
                        static_cast<std::size_t>(second + 1)];
  }

 private:
  friend class SceneBuilder;
  std::vector<std::int32_t> action_rank_;
  std::string name_;
  std::string description_;
  std::vector<Entity> entities_;
  std::unordered_map<std::string, EntityIndex> index_;
  std::vector<RobotInfo> robots_;
  std::vector<int> slot_of_entity_;
  std::vector<EntityIndex> objects_;
  std::vector<EntityIndex> openables_;
  std::vector<EntityIndex> rooms_;
  std::vector<EntityIndex> doors_;
};

struct Placement {
  Predicate predicate = Predicate::kOn;  // kOn, kIn or kHeldBy
  EntityIndex host = kNoEntity;
  friend bool operator==(const Placement&, const Placement&) = default;
};

struct RobotState {
  EntityIndex room = kNoEntity;
  Pose pose = Pose::kGrounded;
  EntityIndex landed_on = kNoEntity;  // quadrotor, when grounded
  EntityIndex near = kNoEntity;       // dog/quadrotor; arms use their workspace
  friend bool operator==(const RobotState&, const RobotState&) = default;
};

/// Full symbolic scene graph. A value type: copies are cheap (the static
/// scene is shared) and transitions produce new states.
class WorldState {
 public:
  WorldState() = default;
  explicit WorldState(std::shared_ptr<const Scene> scene);

  const Scene& scene() const { return *scene_; }
  const std::shared_ptr<const Scene>& scene_ptr() const noexcept { return scene_; }

  Placement placement(EntityIndex object) const { return placement_.at(static_cast<std::size_t>(object)); }
  bool is_open(EntityIndex e) const;
  const RobotState& robot(int slot) const { return robots_.at(static_cast<std::size_t>(slot)); }
  EntityIndex held_object(int slot) const;

  EntityIndex room_of(EntityIndex e) const;
  bool located_in(EntityIndex e, EntityIndex room) const;
  /// True when e sits IN a closed container.
  bool enclosed(EntityIndex e) const;
  /// Physical anchor used for reachability; two entities sharing a spot are
  /// within manipulation range of one another.
  EntityIndex spot_of(EntityIndex e) const;
  /// Near targets of the robot (its single NEAR, or an arm's workspace).
  std::vector<EntityIndex> near_targets(int slot) const;
  bool reaches(int slot, EntityIndex e) const;

  bool holds(Predicate p, EntityIndex subject, EntityIndex object) const;
  /// Membership of `r` in relations(); throws UnknownEntity on unknown ids.
  bool holds(const Relation& r) const;

  /// Every relation of the state, sorted by rendered text.
  std::vector<Relation> relations() const;
  /// Hex FNV-1a over the sorted rendered relation list.
  std::string digest() const;
  /// Compact byte encoding of the dynamic state (search keys).
  std::string key() const;
  /// key() into a caller-owned buffer (cleared first) to avoid reallocations.
  void key_into(std::string& out) const;

  friend bool operator==(const WorldState& a, const WorldState& b) {
    return a.scene_ == b.scene_ && a.placement_ == b.placement_ && a.open_ == b.open_ &&
           a.robots_ == b.robots_;
  }

  // Mutators for the transition function.
  void set_placement(EntityIndex object, Placement p) { placement_.at(static_cast<std::size_t>(object)) = p; }
  void set_open(EntityIndex e, bool open) { open_.at(static_cast<std::size_t>(e)) = open ? 1 : 0; }
  RobotState& robot_mut(int slot) { return robots_.at(static_cast<std::size_t>(slot)); }

 private:
  std::shared_ptr<const Scene> scene_;
  std::vector<Placement> placement_;
  std::vector<std::uint8_t> open_;
  std::vector<RobotState> robots_;
};

/// Human-readable list of invariant violations; empty when the state is sound.
std::vector<std::string> invariant_violations(const WorldState& state);

WorldState build_scene(const SceneSpec& spec);

struct Observation {
  std::string observer;
  std::string room;
  std::vector<Relation> visible_relations;
};

Observation observe(const WorldState& state, std::string_view robot);
std::string render_observation(const Observation& obs);
std::string render_relations(std::span<const Relation> relations);

/// Goal relations resolved to indices for fast repeated checks.
struct CompiledRelation {
  Predicate predicate;
  EntityIndex subject;
  EntityIndex object;
};
std::vector<CompiledRelation> compile_goal(const Scene& scene, std::span<const Relation> goal);
bool goal_satisfied(const WorldState& state, std::span<const CompiledRelation> goal);
bool check_goal(const WorldState& state, std::span<const Relation> goal);

std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace coherent
