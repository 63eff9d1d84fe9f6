#pragma once

// Shared fixtures for the unit suites.

#include <random>
#include <string>
#include <vector>

#include "coherent/actions.hpp"
#include "coherent/tasks.hpp"
#include "coherent/world.hpp"

namespace testsupport {

// Eight entities: two rooms, one closed door, a low table, a high shelf, a
// closed box, a ball and one dog. Small enough for brute-force oracles.
inline const char* kRoomScene = R"({
  "schema": 1,
  "name": "den",
  "rooms": ["den", "hall"],
  "doors": [{"id": "hall_door", "connects": ["den", "hall"], "open": false}],
  "entities": [
    {"id": "table", "kind": "surface", "room": "den", "height": "low"},
    {"id": "shelf", "kind": "surface", "room": "den", "height": "high"},
    {"id": "box", "kind": "container", "room": "den", "open": false},
    {"id": "ball", "kind": "object", "on": "table"}
  ],
  "robots": [{"id": "dog", "archetype": "robotic_dog", "room": "den"}]
})";

inline coherent::WorldState room_state() { return coherent::build_scene(coherent::parse_scene(kRoomScene)); }

inline coherent::WorldState apartment() { return coherent::build_scene(*coherent::builtin_task("apartment_apple_to_dining_table").scene); }

// Every (slot, action) pair feasible in `s`, in slot then list order.
inline std::vector<std::pair<int, coherent::GroundAction>> all_feasible(const coherent::WorldState& s) {
  std::vector<std::pair<int, coherent::GroundAction>> out;
  for (int slot = 0; slot < static_cast<int>(s.scene().robots().size()); ++slot) {
    for (const auto& g : coherent::feasible_ground_actions(s, slot)) out.emplace_back(slot, g);
  }
  return out;
}

// Applies `steps` uniformly random feasible actions and calls `visit` on
// every state along the way (the start state included).
template <typename Visit>
void random_walk(coherent::WorldState s, int steps, std::uint64_t seed, Visit&& visit) {
  std::mt19937_64 rng(seed);
  visit(s);
  for (int i = 0; i < steps; ++i) {
    const auto moves = all_feasible(s);
    if (moves.empty()) break;
    const auto& [slot, g] = moves[std::uniform_int_distribution<std::size_t>(0, moves.size() - 1)(rng)];
    s = coherent::apply(s, slot, g);
    visit(s);
  }
}

}  // namespace testsupport
