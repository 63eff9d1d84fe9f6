#pragma once

#include <string>
#include <string_view>

#include "coherent/backend.hpp"
#include "coherent/tasks.hpp"

namespace coherent {

/// Natural-language subtask for one oracle step ("pick up the <apple>").
std::string subtask_text(const ScriptStep& step);

/// Channel script (see ScriptedBackend::from_json) that makes `planner`
/// follow the task's oracle plan: assigner/executor replies for "pefa",
/// "cmrs" replies, per-robot dialogue plus summaries for "dmrs1"/"dmrs2",
/// and a standing prior favouring oracle moves for "llm-mcts".
/// Throws DomainError for planners that take no backend.
std::string oracle_script_json(const SceneSpec& scene, const TaskSpec& task, std::string_view planner);
ScriptedBackend oracle_backend(const SceneSpec& scene, const TaskSpec& task, std::string_view planner);

}  // namespace coherent
