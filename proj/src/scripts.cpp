#include "coherent/scripts.hpp"

#include <json.hpp>

namespace coherent {

namespace {

std::string bracket(const std::string& id) { return "<" + id + ">"; }

}  // namespace

std::string subtask_text(const ScriptStep& step) {
  const auto& a = step.action.args;
  switch (step.action.verb) {
    case Verb::kGrab: return "pick up the " + bracket(a[0]);
    case Verb::kPutOn: return "put the " + bracket(a[0]) + " on the " + bracket(a[1]);
    case Verb::kPutInto: return "put the " + bracket(a[0]) + " into the " + bracket(a[1]);
    case Verb::kOpen: return "open the " + bracket(a[0]);
    case Verb::kClose: return "close the " + bracket(a[0]);
    case Verb::kMoveTowards: return "move towards the " + bracket(a[0]);
    case Verb::kTakeoffFrom: return "take off from the " + bracket(a[0]);
    case Verb::kLandOn: return "land on the " + bracket(a[0]);
  }
  return {};
}

std::string oracle_script_json(const SceneSpec& scene, const TaskSpec& task, std::string_view planner) {
  if (task.oracle.empty()) throw DomainError("task " + task.id + " ships no oracle plan");
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  const auto line = [](const ScriptStep& s) { return s.robot + ": " + s.action.render(); };

  if (planner == "pefa" || planner == "pefa-no-history") {
    std::vector<std::string> assigner;
    std::map<std::string, std::vector<std::string>> executors;
    for (std::size_t i = 0; i < task.oracle.size(); ++i) {
      std::string reply = "Remaining plan:";
      for (std::size_t k = i, n = 1; k < task.oracle.size() && n <= 3; ++k, ++n) {
        reply += "\n" + std::to_string(n) + ". " + bracket(task.oracle[k].robot) + ": " + subtask_text(task.oracle[k]);
      }
      assigner.push_back(reply);
      executors[task.oracle[i].robot].push_back("I will execute " + task.oracle[i].action.render());
    }
    j["assigner"] = assigner;
    for (auto& [robot, replies] : executors) j["executor:" + robot] = replies;
  } else if (planner == "cmrs") {
    std::vector<std::string> replies;
    for (const auto& s : task.oracle) replies.push_back(line(s));
    j["cmrs"] = replies;
  } else if (planner == "dmrs1" || planner == "dmrs2") {
    const int rounds = planner == "dmrs1" ? 1 : 2;
    std::map<std::string, std::vector<std::string>> speakers;
    std::vector<std::string> summaries;
    for (const auto& s : task.oracle) {
      for (int r = 0; r < rounds; ++r) {
        for (const auto& robot : scene.robots) {
          speakers[robot.id].push_back("I suggest " + bracket(s.robot) + " execute " + s.action.render());
        }
      }
      summaries.push_back(line(s));
    }
    for (auto& [robot, replies] : speakers) j["dmrs:" + robot] = replies;
    j["dmrs:summary"] = summaries;
  } else if (planner == "llm-mcts") {
    std::string reply;
    for (const auto& s : task.oracle) reply += line(s) + " = 0.9\n";
    j["prior"] = {{"replies", {reply}}, {"repeat_last", true}};
  } else {
    throw DomainError("planner '" + std::string(planner) + "' does not use a text backend");
  }
  return j.dump(2);
}

ScriptedBackend oracle_backend(const SceneSpec& scene, const TaskSpec& task, std::string_view planner) {
  return ScriptedBackend::from_json(oracle_script_json(scene, task, planner));
}

}  // namespace coherent
