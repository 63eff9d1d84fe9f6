#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "coherent/actions.hpp"
#include "coherent/world.hpp"

namespace coherent {

struct PlanStep {
  int robot_slot = 0;
  GroundAction action;
  friend bool operator==(const PlanStep&, const PlanStep&) = default;
};

struct SearchResult {
  bool solved = false;
  std::vector<PlanStep> plan;
  std::size_t states_visited = 0;
};

/// Breadth-first search over joint symbolic states where one robot acts per
/// step. Only robots in `active_slots` act; the rest stay put. Successors are
/// generated in slot order, then feasible-action order, so the returned plan
/// is the lexicographically first shortest plan under that ordering.
SearchResult shortest_plan(const WorldState& start, std::span<const CompiledRelation> goal,
                           std::span<const int> active_slots, int max_depth);

/// Level-synchronous OpenMP variant. Frontier expansion runs in parallel;
/// deduplication is a serial merge in frontier order, so results are identical
/// to shortest_plan().
SearchResult shortest_plan_parallel(const WorldState& start, std::span<const CompiledRelation> goal,
                                    std::span<const int> active_slots, int max_depth);

/// Set of first steps that begin some shortest plan (all robots active).
/// Used as an oracle for the tree-search baselines.
std::vector<PlanStep> optimal_first_steps(const WorldState& start, std::span<const CompiledRelation> goal,
                                          int max_depth);

std::vector<int> all_slots(const Scene& scene);

}  // namespace coherent
