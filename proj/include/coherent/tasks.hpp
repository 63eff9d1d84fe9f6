#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "coherent/actions.hpp"
#include "coherent/scene_spec.hpp"
#include "coherent/world.hpp"

namespace coherent {

inline constexpr int kSchemaVersion = 1;

enum class Category { kMono = 1, kDual = 2, kTrio = 3 };

std::string_view to_string(Category category);
std::optional<Category> category_from_string(std::string_view text);
/// Inclusive ground-truth step range for a category.
std::pair<int, int> gt_range(Category category);

/// One line of a robot script: `robotic_dog: [grab] <apple>`.
struct ScriptStep {
  std::string robot;
  Action action;

  std::string render() const { return robot + ": " + action.render(); }
  friend bool operator==(const ScriptStep&, const ScriptStep&) = default;
};

/// Parses `robot: [verb] <args>`; the robot part may use spaces and angle
/// brackets ("<robotic dog>: ...").
ScriptStep parse_script_step(std::string_view text);

struct TaskSpec {
  std::string id;
  std::string scene;
  std::string instruction;
  std::vector<Relation> goal;
  int gt_steps = 0;
  Category category = Category::kMono;
  std::vector<ScriptStep> oracle;
};

SceneSpec parse_scene(std::string_view json_text);
/// Validates against `scene` (goal/oracle references, archetype verbs, GT range).
TaskSpec parse_task(std::string_view json_text, const SceneSpec& scene);

SceneSpec load_scene(const std::filesystem::path& path);
TaskSpec load_task(const std::filesystem::path& path, const SceneSpec& scene);
/// Task file that either embeds its scene (top-level scene keys) or names a
/// scene file through `scene` (resolved relative to the task file).
std::pair<SceneSpec, TaskSpec> load_task(const std::filesystem::path& path);

/// A scene bundle: `{"schema": 1, "scene": {...}, "tasks": [{...}, ...]}`.
struct SceneBundle {
  SceneSpec scene;
  std::vector<TaskSpec> tasks;
};
SceneBundle parse_bundle(std::string_view json_text);

struct SuiteEntry {
  const SceneSpec* scene = nullptr;
  const TaskSpec* task = nullptr;
};

/// The shipped benchmark: five scenes, eight tasks each (2 mono, 3 dual, 3 trio).
const std::vector<SceneBundle>& builtin_bundles();
std::vector<SuiteEntry> builtin_suite();
/// Looks up a built-in task by id; throws DomainError if absent.
SuiteEntry builtin_task(std::string_view task_id);

/// Smallest number of robot archetypes whose robots can reach the goal within
/// 2 x gt_steps. Throws Unsolvable when even the full team cannot.
Category verify_category(const SceneSpec& scene, const TaskSpec& task);

}  // namespace coherent
