#include "coherent/search.hpp"

#include <omp.h>

#include <algorithm>
#include <string>
#include <unordered_map>

namespace coherent {

namespace {

struct Node {
  std::int64_t parent = -1;
  PlanStep step;
};

struct Successor {
  std::size_t from = 0;  // index into the frontier
  PlanStep step;
  WorldState state;
  std::string key;
};

std::vector<PlanStep> unwind(const std::vector<Node>& nodes, std::int64_t leaf) {
  std::vector<PlanStep> plan;
  for (std::int64_t i = leaf; nodes[static_cast<std::size_t>(i)].parent >= 0; i = nodes[static_cast<std::size_t>(i)].parent) {
    plan.push_back(nodes[static_cast<std::size_t>(i)].step);
  }
  std::reverse(plan.begin(), plan.end());
  return plan;
}

using SeenMap = std::unordered_map<std::string, std::int64_t>;

void expand(const WorldState& state, std::size_t from, std::span<const int> active_slots, const SeenMap& seen,
            std::vector<Successor>& out) {
  // One scratch state and key buffer per call: copy-assignment reuses their
  // storage, so duplicates (the common case) cost no allocation.
  WorldState next = state;
  std::string key;
  for (int slot : active_slots) {
    for (const GroundAction& g : feasible_ground_actions(state, slot)) {
      next = state;
      apply_in_place(next, slot, g);
      next.key_into(key);
      if (seen.contains(key)) continue;
      out.push_back(Successor{from, {slot, g}, next, key});
    }
  }
}

constexpr std::size_t kBlock = 2048;

// Shared driver; `parallel` selects how each frontier block is expanded. The
// seen-set is only read during expansion and only written during the serial
// merge, which walks blocks in frontier order.
SearchResult bfs(const WorldState& start, std::span<const CompiledRelation> goal, std::span<const int> active_slots,
                 int max_depth, bool parallel) {
  SearchResult result;
  std::vector<Node> nodes{Node{}};
  SeenMap seen{{start.key(), 0}};
  if (goal_satisfied(start, goal)) {
    result.solved = true;
    result.states_visited = 1;
    return result;
  }
  std::vector<WorldState> frontier{start};
  std::vector<std::int64_t> frontier_ids{0};

  for (int depth = 1; depth <= max_depth && !frontier.empty(); ++depth) {
    std::vector<WorldState> next;
    std::vector<std::int64_t> next_ids;
    for (std::size_t block = 0; block < frontier.size(); block += kBlock) {
      const std::size_t end = std::min(frontier.size(), block + kBlock);
      std::vector<std::vector<Successor>> per_state(end - block);
      if (parallel) {
#pragma omp parallel for schedule(dynamic, 16)
        for (std::int64_t i = static_cast<std::int64_t>(block); i < static_cast<std::int64_t>(end); ++i) {
          const auto u = static_cast<std::size_t>(i);
          expand(frontier[u], u, active_slots, seen, per_state[u - block]);
        }
      } else {
        for (std::size_t i = block; i < end; ++i) expand(frontier[i], i, active_slots, seen, per_state[i - block]);
      }
      for (auto& bucket : per_state) {
        for (Successor& s : bucket) {
          if (seen.contains(s.key)) continue;
          const auto id = static_cast<std::int64_t>(nodes.size());
          nodes.push_back(Node{frontier_ids[s.from], s.step});
          seen.emplace(std::move(s.key), id);
          if (goal_satisfied(s.state, goal)) {
            result.solved = true;
            result.plan = unwind(nodes, id);
            result.states_visited = nodes.size();
            return result;
          }
          next.push_back(std::move(s.state));
          next_ids.push_back(id);
        }
      }
    }
    frontier = std::move(next);
    frontier_ids = std::move(next_ids);
  }
  result.states_visited = nodes.size();
  return result;
}

}  // namespace

std::vector<int> all_slots(const Scene& scene) {
  std::vector<int> slots(scene.robots().size());
  for (std::size_t i = 0; i < slots.size(); ++i) slots[i] = static_cast<int>(i);
  return slots;
}

SearchResult shortest_plan(const WorldState& start, std::span<const CompiledRelation> goal,
                           std::span<const int> active_slots, int max_depth) {
  return bfs(start, goal, active_slots, max_depth, false);
}

SearchResult shortest_plan_parallel(const WorldState& start, std::span<const CompiledRelation> goal,
                                    std::span<const int> active_slots, int max_depth) {
  return bfs(start, goal, active_slots, max_depth, true);
}

std::vector<PlanStep> optimal_first_steps(const WorldState& start, std::span<const CompiledRelation> goal,
                                          int max_depth) {
  const auto slots = all_slots(start.scene());
  const SearchResult best = shortest_plan(start, goal, slots, max_depth);
  std::vector<PlanStep> out;
  if (!best.solved || best.plan.empty()) return out;
  const int remaining = static_cast<int>(best.plan.size()) - 1;
  for (int slot : slots) {
    for (const GroundAction& g : feasible_ground_actions(start, slot)) {
      WorldState next = start;
      apply_in_place(next, slot, g);
      const SearchResult r = shortest_plan(next, goal, slots, remaining);
      if (r.solved && static_cast<int>(r.plan.size()) == remaining) out.push_back({slot, g});
    }
  }
  return out;
}

}  // namespace coherent
