#include <doctest.h>

#include <sstream>

#include "coherent/pefa.hpp"
#include "coherent/prompts.hpp"
#include "coherent/scripts.hpp"
#include "scenarios.hpp"

using namespace coherent;

namespace {

struct Apple {
  SuiteEntry e = builtin_task(scenarios::kAppleTask);
  WorldState s = build_scene(*e.scene);
};

WorldState step(const WorldState& s, const char* robot, const char* action) {
  return apply(s, robot, parse_action_any(action));
}

std::string user_text(const std::vector<ChatMessage>& m) { return m.at(1).content; }

int count(const std::string& hay, const std::string& needle) {
  int n = 0;
  for (std::size_t pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) ++n;
  return n;
}

std::vector<FailureSituation> failures(const std::vector<Feedback>& log) {
  std::vector<FailureSituation> out;
  for (const Feedback& f : log) {
    if (f.kind == FeedbackKind::kFailure) out.push_back(*f.situation);
  }
  return out;
}

}  // namespace

TEST_CASE("assigner prompt composition") {
  Apple a;
  const AssignerContext ctx = make_assigner_context(a.s, *a.e.task);
  const auto msgs = build_assigner_prompt(ctx);
  REQUIRE(msgs.size() == 2);
  CHECK(msgs[0].role == "system");
  CHECK(msgs[1].role == "user");
  for (int slot = 0; slot < 3; ++slot) CHECK(msgs[0].content.find(capability_blurb(a.s.scene(), slot)) != std::string::npos);
  CHECK(user_text(msgs).find("ON(apple, coffee_table)") != std::string::npos);
  CHECK(user_text(msgs).find(a.e.task->instruction) != std::string::npos);
  CHECK(render_history(ctx) == "none");
  CHECK(user_text(msgs).find("<robot name>: subtask") != std::string::npos);
  // Same context, same bytes.
  CHECK(build_assigner_prompt(ctx) == msgs);
}

TEST_CASE("propose") {
  Apple a;
  SUBCASE("faithful first proposal") {
    AssignerContext ctx = make_assigner_context(a.s, *a.e.task);
    ScriptedBackend b = ScriptedBackend::from_json(scenarios::worked_example());
    const Proposal p = propose(ctx, b, 1);
    REQUIRE(p.assignment);
    CHECK(*p.assignment == Assignment{"robotic_dog", "pick up the <apple> and give it to <quadrotor>"});
    CHECK(p.queries == 1);
    REQUIRE(ctx.history.size() == 1);
    CHECK(ctx.history.back().proposal == p.reply);
  }
  SUBCASE("unformatted replies degrade to a no-op after the retries") {
    AssignerContext ctx = make_assigner_context(a.s, *a.e.task);
    ScriptedBackend b({"hmm", "let me think", "still thinking"});
    const Proposal p = propose(ctx, b, 1);
    CHECK_FALSE(p.assignment);
    CHECK(p.queries == 1 + kFormatRetries);
    // The re-queries carry the previous reply and a reminder.
    CHECK(b.transcript().back().size() == 2 + 2 * kFormatRetries);
    CHECK(proposal_failure_feedback(p).situation == FailureSituation::kWrongStep);
  }
  SUBCASE("a grab assigned to the quadrotor is accepted here") {
    AssignerContext ctx = make_assigner_context(a.s, *a.e.task);
    ScriptedBackend b({"<quadrotor>: pick up the <apple>"});
    CHECK(propose(ctx, b, 1).assignment->robot == "quadrotor");
  }
  SUBCASE("an unknown robot is not re-queried") {
    AssignerContext ctx = make_assigner_context(a.s, *a.e.task);
    ScriptedBackend b({"<submarine>: dive"});
    const Proposal p = propose(ctx, b, 1);
    CHECK_FALSE(p.assignment);
    CHECK(p.queries == 1);
    CHECK(proposal_failure_feedback(p).situation == FailureSituation::kWrongRobot);
  }
}

TEST_CASE("execute_assigned") {
  Apple a;
  SUBCASE("grab once near the apple") {
    const WorldState near = step(a.s, "robotic_dog", "[movetowards] <apple>");
    ScriptedBackend b({"I choose [grab] <apple>"});
    const ExecutionResult r = execute_assigned(near, {"robotic_dog", "pick up the apple"}, b);
    CHECK(r.choice.action == parse_action_any("[grab] <apple>"));
    CHECK(r.submitted() == r.choice.action);
    // The executor sees its own feasible list.
    CHECK(b.transcript().front().at(1).content.find("[grab] <apple>") != std::string::npos);
    CHECK(b.transcript().front().at(1).content.find("pick up the apple") != std::string::npos);
  }
  SUBCASE("a hallucinated grab from afar is not chosen") {
    ScriptedBackend b({"[grab] <apple>"});
    const ExecutionResult r = execute_assigned(a.s, {"robotic_dog", "pick up the apple"}, b);
    CHECK_FALSE(r.choice.action);
    CHECK(r.choice.attempted == parse_action_any("[grab] <apple>"));
  }
  SUBCASE("an arm asked to walk has nothing to pick") {
    ScriptedBackend b({"I have no locomotion, I will wait."});
    const ExecutionResult r = execute_assigned(a.s, {"robotic_arm", "walk to the <kitchen>"}, b);
    CHECK_FALSE(r.submitted());
    const Feedback f = reflect({"robotic_arm", "walk to the <kitchen>"}, r, std::nullopt, a.s, a.s);
    CHECK(f.situation == FailureSituation::kWrongRobot);
    CHECK(f.detail.find("different type of robot") != std::string::npos);
  }
}

TEST_CASE("reflect") {
  Apple a;
  const WorldState near = step(a.s, "robotic_dog", "[movetowards] <apple>");
  const WorldState held = step(near, "robotic_dog", "[grab] <apple>");

  SUBCASE("height limit") {
    const WorldState at_table = step(held, "robotic_dog", "[movetowards] <dining_table>");
    const Assignment as{"robotic_dog", "put the <apple> on the <dining table>"};
    ExecutionResult ex;
    ex.choice.attempted = parse_action_any("[puton] <apple> on <dining_table>");
    const auto v = validate(at_table, "robotic_dog", *ex.choice.attempted);
    const Feedback f = reflect(as, ex, v, at_table, at_table);
    CHECK(f.kind == FeedbackKind::kFailure);
    CHECK(f.situation == FailureSituation::kExecutionLimit);
    CHECK(f.detail.find("height") != std::string::npos);
  }
  SUBCASE("partial progress") {
    const Assignment as{"robotic_dog", "pick up the <apple> and give it to <quadrotor>"};
    ExecutionResult ex;
    ex.choice.action = parse_action_any("[grab] <apple>");
    const Feedback f = reflect(as, ex, ValidationOutcome::ok(), near, held);
    CHECK(f.kind == FeedbackKind::kSuccessPartial);
    CHECK_FALSE(f.situation);
    CHECK(f.progress.find("further actions") != std::string::npos);
  }
  SUBCASE("complete") {
    const Assignment as{"robotic_dog", "pick up the <apple>"};
    ExecutionResult ex;
    ex.choice.action = parse_action_any("[grab] <apple>");
    CHECK(reflect(as, ex, ValidationOutcome::ok(), near, held).kind == FeedbackKind::kSuccessComplete);
  }
  SUBCASE("not near is a wrong step") {
    const Assignment as{"robotic_dog", "pick up the <apple>"};
    ExecutionResult ex;
    ex.choice.attempted = parse_action_any("[grab] <apple>");
    const Feedback f = reflect(as, ex, validate(a.s, "robotic_dog", *ex.choice.attempted), a.s, a.s);
    CHECK(f.situation == FailureSituation::kWrongStep);
    CHECK(f.detail.find("NOT_NEAR") != std::string::npos);
  }
}

TEST_CASE("adjust keeps the newest five and shows feedback verbatim") {
  Apple a;
  AssignerContext ctx = make_assigner_context(a.s, *a.e.task);
  for (int i = 1; i <= 5; ++i) ctx.history.push_back(HistoryEntry{i, "p", std::nullopt, "", std::nullopt});
  ScriptedBackend b({"<robotic dog>: move to the <apple>"});
  propose(ctx, b, 6);
  Feedback f;
  f.kind = FeedbackKind::kFailure;
  f.situation = FailureSituation::kWrongStep;
  f.detail = "robotic_dog is too far from the <apple> to grab it";
  adjust(ctx, f, "waited", a.s);
  CHECK(ctx.history.size() == 5);
  CHECK(ctx.history.front().iteration == 2);
  CHECK(user_text(build_assigner_prompt(ctx)).find(f.detail) != std::string::npos);
}

TEST_CASE("history window over seven cycles") {
  Apple a;
  ScriptedBackend b = ScriptedBackend::from_json(scenarios::worked_example());
  PefaPlanner planner(b);
  run_episode(*a.e.scene, *a.e.task, planner, 8);
  REQUIRE(planner.assigner_prompts().size() == 8);
  const std::string eighth = user_text(planner.assigner_prompts()[7]);
  for (int i = 1; i <= 7; ++i) {
    CAPTURE(i);
    CHECK(count(eighth, "[iteration " + std::to_string(i) + "]") == (i >= 3 ? 1 : 0));
  }
  CHECK(planner.context().history.size() == kHistoryWindow);

  ScriptedBackend b2 = ScriptedBackend::from_json(scenarios::worked_example());
  PefaPlanner ablated(b2, {false});
  run_episode(*a.e.scene, *a.e.task, ablated, 8);
  for (const auto& p : ablated.assigner_prompts()) CHECK(user_text(p).find("[iteration") == std::string::npos);
  CHECK(ablated.name() == "pefa-no-history");
}

TEST_CASE("run_pefa") {
  Apple a;
  SUBCASE("faithful plan succeeds") {
    ScriptedBackend b = ScriptedBackend::from_json(scenarios::worked_example());
    const PefaEpisode ep = run_pefa(*a.e.scene, *a.e.task, b, step_budget(a.e.task->gt_steps));
    CHECK(ep.result.success);
    CHECK(ep.result.steps_taken == 11);
    CHECK(failures(ep.feedback).empty());
    CHECK(ep.feedback.back().kind == FeedbackKind::kSuccessComplete);
  }
  SUBCASE("one wrong proposal then recovery") {
    ScriptedBackend b = ScriptedBackend::from_json(scenarios::wrong_robot_variant());
    const PefaEpisode ep = run_pefa(*a.e.scene, *a.e.task, b, step_budget(a.e.task->gt_steps));
    CHECK(ep.result.success);
    CHECK(failures(ep.feedback) == std::vector<FailureSituation>{FailureSituation::kWrongRobot});
  }
  SUBCASE("an impossible robot every time") {
    ScriptedBackend b;
    b.add_channel("assigner", {"<submarine>: dive"}, true);
    const PefaEpisode ep = run_pefa(*a.e.scene, *a.e.task, b, step_budget(a.e.task->gt_steps));
    CHECK_FALSE(ep.result.success);
    CHECK(ep.result.steps_taken == 2 * a.e.task->gt_steps);
    CHECK(failures(ep.feedback).size() == ep.feedback.size());
    for (const auto s : failures(ep.feedback)) CHECK(s == FailureSituation::kWrongRobot);
  }
  SUBCASE("deterministic end to end") {
    std::string traces[2];
    for (auto& t : traces) {
      ScriptedBackend b = ScriptedBackend::from_json(scenarios::height_limit_variant());
      std::ostringstream out;
      write_trace(out, run_pefa(*a.e.scene, *a.e.task, b, 20).result.trace);
      t = out.str();
    }
    CHECK(traces[0] == traces[1]);
  }
}

TEST_CASE("oracle-derived scripts drive every built-in task to success") {
  for (const SuiteEntry& e : builtin_suite()) {
    CAPTURE(e.task->id);
    ScriptedBackend b = oracle_backend(*e.scene, *e.task, "pefa");
    const PefaEpisode ep = run_pefa(*e.scene, *e.task, b, step_budget(e.task->gt_steps));
    CHECK(ep.result.success);
    CHECK(ep.result.steps_taken == e.task->gt_steps);
  }
}
