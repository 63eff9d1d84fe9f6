#include <doctest.h>
#include <json.hpp>

#include <thread>

#include "coherent/backend.hpp"

using namespace coherent;

namespace {

const std::vector<std::string> kRobots{"robotic_dog", "quadrotor", "robotic_arm", "robotic_arm_1"};
const std::vector<ChatMessage> kHello{{"user", "hello"}};

CompletionParams tagged(std::string tag) {
  CompletionParams p;
  p.tag = std::move(tag);
  return p;
}

}  // namespace

TEST_CASE("scripted replies in order, then exhaustion") {
  ScriptedBackend b({"r1", "r2"});
  CHECK(b.complete(kHello, {}) == "r1");
  CHECK(b.complete(kHello, {}) == "r2");
  CHECK_THROWS_AS(b.complete(kHello, {}), ScriptExhausted);
  CHECK(b.calls() == 3);
  CHECK(b.transcript().size() == 3);
  CHECK(b.transcript().front() == kHello);
}

TEST_CASE("channel routing by tag") {
  ScriptedBackend b = ScriptedBackend::from_json(R"({
    "assigner": ["a1"],
    "executor": {"replies": ["e"], "repeat_last": true},
    "executor:quadrotor": ["q1"]
  })");
  CHECK(b.complete(kHello, tagged("assigner")) == "a1");
  CHECK(b.complete(kHello, tagged("executor:quadrotor")) == "q1");
  CHECK(b.complete(kHello, tagged("executor:robotic_dog")) == "e");  // prefix fallback
  CHECK(b.complete(kHello, tagged("executor:robotic_dog")) == "e");  // repeat_last
  CHECK_THROWS_AS(b.complete(kHello, tagged("executor:quadrotor")), ScriptExhausted);
  CHECK_THROWS_AS(b.complete(kHello, tagged("cmrs")), ScriptExhausted);
  CHECK_THROWS_AS(ScriptedBackend::from_json("{\"a\": 3}"), SchemaError);
  CHECK_THROWS_AS(ScriptedBackend::from_json("nope"), SchemaError);
}

TEST_CASE("scripted backend is safe to share between threads") {
  std::vector<std::string> replies(400, "x");
  ScriptedBackend b(replies);
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&] {
      for (int i = 0; i < 100; ++i) b.complete(kHello, {});
    });
  }
  for (auto& t : threads) t.join();
  CHECK(b.calls() == 400);
  CHECK_THROWS_AS(b.complete(kHello, {}), ScriptExhausted);
}

TEST_CASE("resolve_robot") {
  CHECK(resolve_robot("<Robotic Dog>", kRobots) == "robotic_dog");
  CHECK(resolve_robot("robotic dog", kRobots) == "robotic_dog");
  CHECK(resolve_robot("**quadrotor**", kRobots) == "quadrotor");
  CHECK_FALSE(resolve_robot("submarine", kRobots));
}

TEST_CASE("parse_assignment") {
  CHECK(parse_assignment("<robotic dog>: pick up the <apple> and give it to <quadrotor>", kRobots) ==
        Assignment{"robotic_dog", "pick up the <apple> and give it to <quadrotor>"});
  CHECK(parse_assignment("Reasoning first.\n<quadrotor>: take off\n2. <robotic arm>: place the apple", kRobots) ==
        Assignment{"robotic_arm", "place the apple"});
  CHECK_THROWS_AS(parse_assignment("I think we are done.", kRobots), ParseError);
  CHECK_THROWS_AS(parse_assignment("<submarine>: dive", kRobots), UnknownRobot);
  CHECK_THROWS_AS(parse_assignment("", kRobots), ParseError);
}

TEST_CASE("parse_first_numbered picks item one") {
  const char* plan =
      "The dog is closest.\n"
      "1. <robotic dog>: pick up the <apple> and give it to <quadrotor>\n"
      "2. <quadrotor>: transport the <apple> to the <dining table>\n"
      "3. <robotic arm>: put the <apple> on the <dining table>\n";
  CHECK(parse_first_numbered(plan, kRobots) == Assignment{"robotic_dog", "pick up the <apple> and give it to <quadrotor>"});
  CHECK_FALSE(parse_first_numbered("<quadrotor>: fly", kRobots));
}

TEST_CASE("scan_actions and parse_executor_choice") {
  const auto found = scan_actions("first [movetowards] <dining table> then [puton] <apple> on <dining table>; [fly] <x>");
  REQUIRE(found.size() == 2);
  CHECK(found[0] == Action{Verb::kMoveTowards, {"dining_table"}});
  CHECK(found[1] == Action{Verb::kPutOn, {"apple", "dining_table"}});

  const std::vector<Action> feasible{parse_action_any("[grab] <apple>"), parse_action_any("[movetowards] <basket>")};
  const ExecutorChoice grab = parse_executor_choice("I will execute [grab] <apple>.", feasible);
  CHECK(grab.action == parse_action_any("[grab] <apple>"));

  const ExecutorChoice halluc = parse_executor_choice("[takeoff_from] <kitchen_floor>", feasible);
  CHECK_FALSE(halluc.action);
  CHECK(halluc.attempted == parse_action_any("[takeoff_from] <kitchen_floor>"));

  const ExecutorChoice empty = parse_executor_choice("", feasible);
  CHECK_FALSE(empty.action);
  CHECK(empty.unparseable());

  CHECK(parse_executor_choice("I cannot do this, I will wait.", feasible).declared_wait);

  // A later feasible mention wins over an earlier infeasible one.
  const ExecutorChoice later = parse_executor_choice("[grab] <vase> or rather [movetowards] <basket>", feasible);
  CHECK(later.action == parse_action_any("[movetowards] <basket>"));
}

TEST_CASE("parse_robot_action") {
  const auto a = parse_robot_action("robotic_arm_1: [grab] <apple>", kRobots);
  REQUIRE(a);
  CHECK(a->robot == "robotic_arm_1");
  const auto b = parse_robot_action("I suggest <robotic dog> execute [movetowards] <apple>.", kRobots);
  REQUIRE(b);
  CHECK(b->robot == "robotic_dog");
  CHECK(b->action == parse_action_any("[movetowards] <apple>"));
  const auto c = parse_robot_action("I suggest <robotic arm_1> execute [grab] <apple>", kRobots);
  REQUIRE(c);
  CHECK(c->robot == "robotic_arm_1");
  CHECK_FALSE(parse_robot_action("submarine: [grab] <apple>", kRobots));
  CHECK_FALSE(parse_robot_action("robotic_dog: nothing to do", kRobots));
}

TEST_CASE("HTTP request body and response extraction") {
  HttpConfig cfg;
  cfg.model = "m";
  cfg.api_key = "k";
  HttpBackend b(cfg);
  CompletionParams p;
  p.temperature = 0.5;
  p.seed = 7;
  const std::string body = b.request_body({{"system", "s"}, {"user", "u"}}, p);
  CHECK(body.find("\"model\":\"m\"") != std::string::npos);
  const auto parsed = nlohmann::json::parse(body);
  CHECK(parsed["messages"] == nlohmann::json::parse(R"([{"role": "system", "content": "s"}, {"role": "user", "content": "u"}])"));
  CHECK(body.find("\"temperature\":0.5") != std::string::npos);
  CHECK(body.find("\"seed\":7") != std::string::npos);

  CHECK(HttpBackend::response_content(R"({"choices":[{"message":{"role":"assistant","content":"hi"}}]})") == "hi");
  CHECK_THROWS_AS(HttpBackend::response_content(R"({"choices":[]})"), EndpointError);
  CHECK_THROWS_AS(HttpBackend::response_content("<html>"), EndpointError);
  CHECK_THROWS_AS(b.complete({{"user", ""}}, {}), DomainError);
}
