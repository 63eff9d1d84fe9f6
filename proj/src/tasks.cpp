#include "coherent/tasks.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <mutex>
#include <sstream>

#include "coherent/embedded.hpp"
#include "coherent/search.hpp"

namespace coherent {

using nlohmann::json;

namespace {

json parse_json(std::string_view text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError(origin, std::string("invalid JSON: ") + e.what());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const json& field(const json& obj, const char* key, const std::string& path) {
  if (!obj.is_object()) throw SchemaError(path, "expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(path + "/" + key, "missing field");
  return *it;
}

std::string get_string(const json& obj, const char* key, const std::string& path) {
  const json& v = field(obj, key, path);
  if (!v.is_string()) throw SchemaError(path + "/" + key, "expected a string");
  return v.get<std::string>();
}

std::optional<std::string> opt_string(const json& obj, const char* key, const std::string& path) {
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw SchemaError(path + "/" + key, "expected a string");
  return it->get<std::string>();
}

std::optional<bool> opt_bool(const json& obj, const char* key, const std::string& path) {
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_boolean()) throw SchemaError(path + "/" + key, "expected a boolean");
  return it->get<bool>();
}

const json& get_array(const json& obj, const char* key, const std::string& path) {
  const json& v = field(obj, key, path);
  if (!v.is_array()) throw SchemaError(path + "/" + key, "expected an array");
  return v;
}

void check_schema_version(const json& doc, const std::string& path) {
  const auto it = doc.find("schema");
  if (it == doc.end()) throw SchemaError(path + "/schema", "missing field");
  if (!it->is_number_integer() || it->get<int>() != kSchemaVersion) {
    throw SchemaError(path + "/schema", "unsupported schema version (expected " + std::to_string(kSchemaVersion) + ")");
  }
}

SceneSpec scene_from_json(const json& doc, const std::string& root) {
  SceneSpec spec;
  spec.name = get_string(doc, "name", root);
  spec.description = opt_string(doc, "description", root).value_or("");
  const json& rooms = get_array(doc, "rooms", root);
  for (std::size_t i = 0; i < rooms.size(); ++i) {
    if (!rooms[i].is_string()) throw SchemaError(root + "/rooms/" + std::to_string(i), "expected a string");
    spec.rooms.push_back(rooms[i].get<std::string>());
  }
  if (doc.contains("doors")) {
    const json& doors = get_array(doc, "doors", root);
    for (std::size_t i = 0; i < doors.size(); ++i) {
      const std::string path = root + "/doors/" + std::to_string(i);
      DoorSpec d;
      d.id = get_string(doors[i], "id", path);
      const json& c = get_array(doors[i], "connects", path);
      if (c.size() != 2 || !c[0].is_string() || !c[1].is_string()) {
        throw SchemaError(path + "/connects", "expected two room ids");
      }
      d.room_a = c[0].get<std::string>();
      d.room_b = c[1].get<std::string>();
      d.open = opt_bool(doors[i], "open", path).value_or(false);
      spec.doors.push_back(std::move(d));
    }
  }
  const json& entities = get_array(doc, "entities", root);
  for (std::size_t i = 0; i < entities.size(); ++i) {
    const std::string path = root + "/entities/" + std::to_string(i);
    const json& e = entities[i];
    EntitySpec es;
    es.id = get_string(e, "id", path);
    es.kind = get_string(e, "kind", path);
    es.room = opt_string(e, "room", path).value_or("");
    es.height = opt_string(e, "height", path);
    es.open = opt_bool(e, "open", path);
    es.on = opt_string(e, "on", path);
    es.in = opt_string(e, "in", path);
    es.held_by = opt_string(e, "held_by", path);
    spec.entities.push_back(std::move(es));
  }
  const json& robots = get_array(doc, "robots", root);
  for (std::size_t i = 0; i < robots.size(); ++i) {
    const std::string path = root + "/robots/" + std::to_string(i);
    const json& r = robots[i];
    RobotSpec rs;
    rs.id = get_string(r, "id", path);
    const std::string archetype = get_string(r, "archetype", path);
    const auto arch = archetype_from_string(archetype);
    if (!arch || normalize_id(archetype) != archetype) throw SchemaError(path + "/archetype", "unknown archetype '" + archetype + "'");
    rs.archetype = *arch;
    rs.room = get_string(r, "room", path);
    rs.pose = opt_string(r, "pose", path).value_or("grounded");
    rs.on = opt_string(r, "on", path);
    rs.near = opt_string(r, "near", path);
    rs.basket = opt_string(r, "basket", path);
    if (r.contains("workspace")) {
      const json& w = get_array(r, "workspace", path);
      for (std::size_t k = 0; k < w.size(); ++k) {
        if (!w[k].is_string()) throw SchemaError(path + "/workspace/" + std::to_string(k), "expected a string");
        rs.workspace.push_back(w[k].get<std::string>());
      }
    }
    if (rs.archetype == Archetype::kQuadrotor && !rs.basket) throw SchemaError(path + "/basket", "quadrotor needs a basket id");
    spec.robots.push_back(std::move(rs));
  }
  // Dangling references, arity and uniqueness are checked by construction.
  build_scene(spec);
  return spec;
}

TaskSpec task_from_json(const json& doc, const SceneSpec& scene_spec, const std::string& root) {
  const WorldState state = build_scene(scene_spec);
  const Scene& scene = state.scene();
  TaskSpec task;
  task.id = get_string(doc, "id", root);
  task.scene = scene_spec.name;
  if (const auto it = doc.find("scene"); it != doc.end() && it->is_string()) {
    const std::string named = it->get<std::string>();
    const std::string stem = std::filesystem::path(named).stem().string();
    if (named != scene_spec.name && stem != scene_spec.name) {
      throw SchemaError(root + "/scene", "task refers to scene '" + named + "' but was given '" + scene_spec.name + "'");
    }
  }
  task.instruction = get_string(doc, "instruction", root);
  if (task.instruction.empty()) throw SchemaError(root + "/instruction", "empty instruction");

  const json& goal = get_array(doc, "goal", root);
  for (std::size_t i = 0; i < goal.size(); ++i) {
    const std::string path = root + "/goal/" + std::to_string(i);
    if (!goal[i].is_string()) throw SchemaError(path, "expected a relation string");
    Relation r;
    try {
      r = parse_relation(goal[i].get<std::string>());
    } catch (const ParseError& e) {
      throw SchemaError(path, e.what());
    }
    if (scene.find(r.subject) == kNoEntity) throw SchemaError(path, "unknown entity '" + r.subject + "'");
    if (r.object && scene.find(*r.object) == kNoEntity) throw SchemaError(path, "unknown entity '" + *r.object + "'");
    task.goal.push_back(std::move(r));
  }

  const json& gt = field(doc, "gt_steps", root);
  if (!gt.is_number_integer()) throw SchemaError(root + "/gt_steps", "expected an integer");
  task.gt_steps = gt.get<int>();
  const std::string category = get_string(doc, "category", root);
  const auto cat = category_from_string(category);
  if (!cat) throw SchemaError(root + "/category", "category must be mono, dual or trio");
  task.category = *cat;
  const auto [lo, hi] = gt_range(task.category);
  if (task.gt_steps < lo || task.gt_steps > hi) {
    throw SchemaError(root + "/gt_steps", "gt_steps " + std::to_string(task.gt_steps) + " outside " + category + " range " +
                                              std::to_string(lo) + "-" + std::to_string(hi));
  }

  if (doc.contains("oracle")) {
    const json& oracle = get_array(doc, "oracle", root);
    for (std::size_t i = 0; i < oracle.size(); ++i) {
      const std::string path = root + "/oracle/" + std::to_string(i);
      if (!oracle[i].is_string()) throw SchemaError(path, "expected a script line");
      ScriptStep step;
      try {
        step = parse_script_step(oracle[i].get<std::string>());
        const int slot = scene.require_robot(step.robot);
        if (!supports(scene.robot(slot).archetype, step.action.verb)) throw ParseError("verb not available to " + step.robot);
        ground(scene, step.action);
      } catch (const Error& e) {
        throw SchemaError(path, e.what());
      }
      task.oracle.push_back(std::move(step));
    }
    if (static_cast<int>(task.oracle.size()) != task.gt_steps) {
      throw SchemaError(root + "/oracle", "oracle script has " + std::to_string(task.oracle.size()) +
                                              " steps but gt_steps is " + std::to_string(task.gt_steps));
    }
  }
  return task;
}

bool looks_like_scene(const json& doc) { return doc.is_object() && doc.contains("rooms") && doc.contains("entities"); }

}  // namespace

std::string_view to_string(Category category) {
  switch (category) {
    case Category::kMono: return "mono";
    case Category::kDual: return "dual";
    case Category::kTrio: return "trio";
  }
  return "?";
}

std::optional<Category> category_from_string(std::string_view text) {
  if (text == "mono") return Category::kMono;
  if (text == "dual") return Category::kDual;
  if (text == "trio") return Category::kTrio;
  return std::nullopt;
}

std::pair<int, int> gt_range(Category category) {
  switch (category) {
    case Category::kMono: return {4, 8};
    case Category::kDual: return {8, 12};
    case Category::kTrio: return {10, 16};
  }
  return {0, 0};
}

ScriptStep parse_script_step(std::string_view text) {
  const auto bracket = text.find('[');
  const auto colon = text.substr(0, bracket).rfind(':');
  if (colon == std::string_view::npos) throw ParseError("expected 'robot: [verb] <args>' in '" + std::string(text) + "'");
  std::string robot(text.substr(0, colon));
  robot.erase(std::remove_if(robot.begin(), robot.end(), [](char c) { return c == '<' || c == '>'; }), robot.end());
  ScriptStep step;
  step.robot = normalize_id(robot);
  if (step.robot.empty()) throw ParseError("missing robot in '" + std::string(text) + "'");
  step.action = parse_action_any(text.substr(colon + 1));
  return step;
}

SceneSpec parse_scene(std::string_view json_text) {
  const json doc = parse_json(json_text, "");
  check_schema_version(doc, "");
  return scene_from_json(doc, "");
}

TaskSpec parse_task(std::string_view json_text, const SceneSpec& scene) {
  const json doc = parse_json(json_text, "");
  check_schema_version(doc, "");
  return task_from_json(doc, scene, "");
}

SceneSpec load_scene(const std::filesystem::path& path) { return parse_scene(read_file(path)); }

TaskSpec load_task(const std::filesystem::path& path, const SceneSpec& scene) { return parse_task(read_file(path), scene); }

std::pair<SceneSpec, TaskSpec> load_task(const std::filesystem::path& path) {
  const json doc = parse_json(read_file(path), path.string());
  check_schema_version(doc, "");
  SceneSpec scene;
  if (looks_like_scene(doc)) {
    scene = scene_from_json(doc, "");
  } else {
    const std::string ref = get_string(doc, "scene", "");
    std::filesystem::path scene_path = path.parent_path() / ref;
    if (!scene_path.has_extension()) scene_path += ".json";
    scene = load_scene(scene_path);
  }
  TaskSpec task = task_from_json(doc, scene, "");
  return {std::move(scene), std::move(task)};
}

SceneBundle parse_bundle(std::string_view json_text) {
  const json doc = parse_json(json_text, "");
  check_schema_version(doc, "");
  SceneBundle bundle;
  bundle.scene = scene_from_json(field(doc, "scene", ""), "/scene");
  const json& tasks = get_array(doc, "tasks", "");
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    bundle.tasks.push_back(task_from_json(tasks[i], bundle.scene, "/tasks/" + std::to_string(i)));
  }
  return bundle;
}

const std::vector<SceneBundle>& builtin_bundles() {
  static const std::vector<SceneBundle> bundles = [] {
    std::vector<SceneBundle> out;
    for (const auto& [name, text] : embedded_files()) {
      if (!name.starts_with("data/suite/")) continue;
      try {
        out.push_back(parse_bundle(text));
      } catch (const SchemaError& e) {
        throw SchemaError(std::string(name) + ":" + e.path(), e.what());
      }
    }
    return out;
  }();
  return bundles;
}

std::vector<SuiteEntry> builtin_suite() {
  std::vector<SuiteEntry> out;
  for (const SceneBundle& b : builtin_bundles()) {
    for (const TaskSpec& t : b.tasks) out.push_back({&b.scene, &t});
  }
  return out;
}

SuiteEntry builtin_task(std::string_view task_id) {
  for (const SuiteEntry& e : builtin_suite()) {
    if (e.task->id == task_id) return e;
  }
  throw DomainError("no built-in task '" + std::string(task_id) + "'");
}

Category verify_category(const SceneSpec& scene_spec, const TaskSpec& task) {
  const WorldState start = build_scene(scene_spec);
  const Scene& scene = start.scene();
  const auto goal = compile_goal(scene, task.goal);
  const int budget = 2 * task.gt_steps;

  std::vector<Archetype> present;
  for (const RobotInfo& r : scene.robots()) {
    if (std::find(present.begin(), present.end(), r.archetype) == present.end()) present.push_back(r.archetype);
  }
  std::sort(present.begin(), present.end());
  const int n = static_cast<int>(present.size());
  for (int size = 1; size <= n; ++size) {
    for (unsigned mask = 1; mask < (1u << n); ++mask) {
      if (std::popcount(mask) != size) continue;
      std::vector<int> slots;
      for (std::size_t s = 0; s < scene.robots().size(); ++s) {
        const auto pos = std::find(present.begin(), present.end(), scene.robots()[s].archetype) - present.begin();
        if (mask & (1u << pos)) slots.push_back(static_cast<int>(s));
      }
      if (shortest_plan_parallel(start, goal, slots, budget).solved) return static_cast<Category>(size);
    }
  }
  throw Unsolvable("task '" + task.id + "' has no plan within " + std::to_string(budget) + " steps");
}

}  // namespace coherent
