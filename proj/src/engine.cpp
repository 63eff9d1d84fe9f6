#include "coherent/engine.hpp"

#include <json.hpp>

#include <algorithm>
#include <istream>
#include <ostream>

namespace coherent {

namespace {

using ordered_json = nlohmann::ordered_json;

// Checks a decision against the current state. Unknown robots or entities are
// reported as WRONG_KIND so that a hallucinated name still yields a record.
ValidationOutcome check_decision(const WorldState& state, const std::string& robot, const Action& action,
                                 int& slot, GroundAction& ground_action) {
  const Scene& sc = state.scene();
  const EntityIndex robot_entity = sc.find(robot);
  slot = robot_entity == kNoEntity ? -1 : sc.robot_slot(robot_entity);
  if (slot < 0) return ValidationOutcome::fail(FailureCode::kWrongKind, "'" + robot + "' is not a robot in this scene");
  try {
    ground_action = ground(sc, action);
  } catch (const UnknownEntity& e) {
    return ValidationOutcome::fail(FailureCode::kWrongKind, e.what());
  } catch (const ParseError& e) {
    return ValidationOutcome::fail(FailureCode::kWrongKind, e.what());
  }
  ValidationOutcome v = validate(state, slot, ground_action);
  if (!v.executable) return v;
  // Belt and braces: anything applied must also be on the rule-generated list.
  const auto feasible = feasible_ground_actions(state, slot);
  if (std::find(feasible.begin(), feasible.end(), ground_action) == feasible.end()) {
    return ValidationOutcome::fail(FailureCode::kWrongKind, action.render() + " is not in the feasible-action list");
  }
  return v;
}

}  // namespace

int step_budget(int gt_steps) {
  if (gt_steps < 1) throw DomainError("gt_steps must be >= 1, got " + std::to_string(gt_steps));
  return 2 * gt_steps;
}

EpisodeResult run_episode(const SceneSpec& scene, const TaskSpec& task, Planner& planner, int budget) {
  if (budget < 0) throw DomainError("budget must be non-negative");
  WorldState state = build_scene(scene);
  const auto goal = compile_goal(state.scene(), task.goal);

  EpisodeResult result;
  result.task_id = task.id;
  result.planner = planner.name();
  result.budget = budget;
  result.goal = task.goal;

  try {
    planner.begin(state, task);
  } catch (const std::exception& e) {
    throw PlannerError(planner.name() + " failed to start: " + e.what(), {});
  }

  while (!goal_satisfied(state, goal) && result.steps_taken < budget) {
    Decision d;
    try {
      d = planner.decide(state, result.trace);
    } catch (const std::exception& e) {
      throw PlannerError(planner.name() + " raised at iteration " + std::to_string(result.steps_taken + 1) + ": " + e.what(),
                         result.trace);
    }
    TransitionRecord rec;
    rec.iteration = result.steps_taken + 1;
    rec.robot = d.robot;
    rec.note = d.note;
    const WorldState before = state;
    if (d.robot && d.action) {
      rec.action = d.action;
      int slot = -1;
      GroundAction g;
      rec.validation = check_decision(state, *d.robot, *d.action, slot, g);
      if (rec.validation->executable) apply_in_place(state, slot, g);
    }
    rec.digest = state.digest();
    result.trace.push_back(rec);
    ++result.steps_taken;
    try {
      TransitionRecord& stored = result.trace.back();
      const TransitionRecord frozen = stored;
      planner.observe(stored, before, state);
      const std::string note = std::move(stored.note);
      stored = frozen;
      stored.note = note;
    } catch (const std::exception& e) {
      throw PlannerError(planner.name() + " raised while observing iteration " + std::to_string(rec.iteration) + ": " + e.what(),
                         result.trace);
    }
  }
  result.success = goal_satisfied(state, goal);
  result.final_state = std::move(state);
  return result;
}

EpisodeResult run_episode(const SceneSpec& scene, const TaskSpec& task, Planner& planner) {
  return run_episode(scene, task, planner, step_budget(task.gt_steps));
}

Decision ScriptPlanner::decide(const WorldState&, std::span<const TransitionRecord>) {
  if (next_ >= script_.size()) return Decision{std::nullopt, std::nullopt, "script exhausted"};
  const ScriptStep& step = script_[next_++];
  return Decision{step.robot, step.action, ""};
}

std::string trace_line(const TransitionRecord& r) {
  ordered_json j;
  j["iteration"] = r.iteration;
  j["robot"] = r.robot ? ordered_json(*r.robot) : ordered_json(nullptr);
  j["action"] = r.action ? ordered_json(r.action->render()) : ordered_json(nullptr);
  j["valid"] = r.executed();
  j["reason"] = (r.validation && r.validation->reason) ? ordered_json(std::string(to_string(*r.validation->reason)))
                                                       : ordered_json(nullptr);
  j["digest"] = r.digest;
  if (r.validation && !r.validation->detail.empty()) j["detail"] = r.validation->detail;
  if (!r.note.empty()) j["note"] = r.note;
  return j.dump();
}

void write_trace(std::ostream& out, std::span<const TransitionRecord> trace) {
  for (const TransitionRecord& r : trace) out << trace_line(r) << '\n';
  if (!out) throw IoError("failed to write trace");
}

std::vector<TransitionRecord> read_trace(std::istream& in) {
  std::vector<TransitionRecord> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "line " + std::to_string(lineno);
    ordered_json j;
    try {
      j = ordered_json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw SchemaError(where, std::string("invalid JSON: ") + e.what());
    }
    try {
      TransitionRecord r;
      r.iteration = j.at("iteration").get<int>();
      if (!j.at("robot").is_null()) r.robot = j.at("robot").get<std::string>();
      if (!j.at("action").is_null()) {
        r.action = parse_action_any(j.at("action").get<std::string>());
        ValidationOutcome v;
        v.executable = j.at("valid").get<bool>();
        if (!j.at("reason").is_null()) {
          const auto code = failure_code_from_string(j.at("reason").get<std::string>());
          if (!code) throw SchemaError(where + "/reason", "unknown failure code");
          v.reason = code;
        }
        if (j.contains("detail")) v.detail = j.at("detail").get<std::string>();
        r.validation = v;
      }
      r.digest = j.at("digest").get<std::string>();
      if (j.contains("note")) r.note = j.at("note").get<std::string>();
      if (!out.empty() && r.iteration <= out.back().iteration) throw SchemaError(where + "/iteration", "not increasing");
      out.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(where, e.what());
    } catch (const ParseError& e) {
      throw SchemaError(where + "/action", e.what());
    }
  }
  return out;
}

ReplayReport replay_trace(const SceneSpec& scene, std::span<const TransitionRecord> trace) {
  ReplayReport report;
  WorldState state = build_scene(scene);
  for (const TransitionRecord& r : trace) {
    ++report.records;
    if (r.executed()) {
      try {
        state = apply(state, *r.robot, *r.action);
      } catch (const Error& e) {
        report.ok = false;
        report.first_mismatch = r.iteration;
        report.message = "iteration " + std::to_string(r.iteration) + ": recorded valid action cannot be applied: " + e.what();
        break;
      }
    }
    const std::string digest = state.digest();
    if (digest != r.digest) {
      report.ok = false;
      report.first_mismatch = r.iteration;
      report.message = "iteration " + std::to_string(r.iteration) + ": digest " + digest + " != recorded " + r.digest;
      break;
    }
  }
  report.final_state = std::move(state);
  return report;
}

}  // namespace coherent
