#include <doctest.h>

#include "coherent/tasks.hpp"
#include "coherent/world.hpp"
#include "support.hpp"

using namespace coherent;
using testsupport::apartment;

TEST_CASE("relations parse and render in the PREDICATE(a, b) format") {
  const Relation on = parse_relation("ON(apple, coffee_table)");
  CHECK(on.predicate == Predicate::kOn);
  CHECK(on.subject == "apple");
  CHECK(on.object == "coffee_table");
  CHECK(on.render() == "ON(apple, coffee_table)");
  CHECK(parse_relation("  OPEN( fridge ) ").render() == "OPEN(fridge)");
  CHECK_THROWS_AS(parse_relation("OPEN(fridge, door)"), ParseError);
  CHECK_THROWS_AS(parse_relation("ON(apple)"), ParseError);
  CHECK_THROWS_AS(parse_relation("ABOVE(apple, table)"), ParseError);
}

TEST_CASE("normalize_id maps display names onto entity ids") {
  CHECK(normalize_id("Coffee Table") == "coffee_table");
  CHECK(normalize_id("robotic-dog") == "robotic_dog");
  CHECK(normalize_id("apple") == "apple");
}

TEST_CASE("build_scene") {
  SUBCASE("apple sits on the coffee table of the apartment") {
    const WorldState s = apartment();
    CHECK(s.holds(parse_relation("ON(apple, coffee_table)")));
    CHECK(invariant_violations(s).empty());
  }
  SUBCASE("degenerate specs are schema errors") {
    CHECK_THROWS_AS(parse_scene(R"({"schema": 1, "name": "x", "rooms": ["a"], "doors": [], "entities": [], "robots": []})"),
                    SchemaError);
    const std::string dup = R"({"schema": 1, "name": "x", "rooms": ["a"], "doors": [],
      "entities": [{"id": "t", "kind": "surface", "room": "a", "height": "low"},
                   {"id": "apple", "kind": "object", "on": "t"}, {"id": "apple", "kind": "object", "on": "t"}],
      "robots": [{"id": "dog", "archetype": "robotic_dog", "room": "a"}]})";
    CHECK_THROWS_AS(parse_scene(dup), SchemaError);
  }
  SUBCASE("identical specs give identical states") {
    CHECK(apartment().digest() == apartment().digest());
  }
}

TEST_CASE("observe hides other rooms and closed containers") {
  const WorldState s = apartment();
  const Observation dog = observe(s, "robotic_dog");
  const std::string dog_text = render_observation(dog);
  CHECK(dog.room == "living_room");
  CHECK(dog_text.find("ON(apple, coffee_table)") != std::string::npos);
  CHECK(dog_text.find("milk") == std::string::npos);  // kitchen

  const std::string drone_text = render_observation(observe(s, "quadrotor"));
  CHECK(drone_text.find("apple") == std::string::npos);  // living room
  CHECK(drone_text.find("milk") == std::string::npos);   // closed fridge
  CHECK(drone_text.find("CLOSED(fridge)") != std::string::npos);

  CHECK_THROWS_AS(observe(s, "robotic_cat"), UnknownRobot);
}

TEST_CASE("render_observation edge cases") {
  CHECK(render_observation(Observation{}) == "");
  const std::vector<Relation> open{parse_relation("OPEN(fridge)")};
  CHECK(render_relations(open) == "OPEN(fridge)");
}

TEST_CASE("check_goal") {
  const WorldState s = apartment();
  CHECK(check_goal(s, std::vector<Relation>{parse_relation("ON(apple, coffee_table)")}));
  CHECK_FALSE(check_goal(s, std::vector<Relation>{parse_relation("ON(apple, dining_table)")}));
  CHECK(check_goal(s, std::vector<Relation>{}));
  CHECK_THROWS_AS(check_goal(s, std::vector<Relation>{parse_relation("ON(pear, dining_table)")}), UnknownEntity);

  const WorldState held = apply(apply(s, "robotic_dog", parse_action_any("[movetowards] <apple>")), "robotic_dog",
                                parse_action_any("[grab] <apple>"));
  CHECK(held.holds(parse_relation("HELD_BY(apple, robotic_dog)")));
  CHECK_FALSE(check_goal(held, std::vector<Relation>{parse_relation("ON(apple, dining_table)")}));
}

TEST_CASE("properties over random walks in every built-in scene") {
  std::uint64_t seed = 1;
  int states = 0;
  for (const SceneBundle& b : builtin_bundles()) {
    testsupport::random_walk(build_scene(b.scene), 2500, seed++, [&](const WorldState& s) {
      ++states;
      const Scene& sc = s.scene();
      REQUIRE(invariant_violations(s).empty());

      // Exactly one location relation per movable object.
      const auto rels = s.relations();
      for (EntityIndex o : sc.objects()) {
        int n = 0;
        for (const Relation& r : rels) {
          if (r.subject == sc.id(o) &&
              (r.predicate == Predicate::kOn || r.predicate == Predicate::kIn || r.predicate == Predicate::kHeldBy)) {
            ++n;
          }
        }
        REQUIRE(n == 1);
      }

      for (const RobotInfo& r : sc.robots()) {
        const Observation obs = observe(s, sc.id(r.entity));
        const EntityIndex room = sc.require(obs.room);
        for (const Relation& rel : obs.visible_relations) {
          for (const std::string* id : {&rel.subject, rel.object ? &*rel.object : nullptr}) {
            if (!id) continue;
            const EntityIndex e = sc.require(*id);
            if (sc.kind(e) == EntityKind::kRoom) continue;
            REQUIRE(s.located_in(e, room));
            REQUIRE_FALSE(s.enclosed(e));
          }
        }
        // Pure, and the rendering parses back to the same list.
        const std::string text = render_observation(obs);
        REQUIRE(render_observation(observe(s, sc.id(r.entity))) == text);
        REQUIRE(parse_relations(text) == obs.visible_relations);
      }
    });
  }
  CHECK(states > 10000);
}
