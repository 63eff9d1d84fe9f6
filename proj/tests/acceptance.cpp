// Acceptance run: one line per criterion, "[PASS]" or "[FAIL]", followed by
// the measurements behind the verdict. Exit status is the number of failures.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include <unistd.h>

#include "coherent/baselines.hpp"
#include "coherent/evaluation.hpp"
#include "coherent/pefa.hpp"
#include "coherent/scripts.hpp"
#include "http_stub.hpp"
#include "scenarios.hpp"

using namespace coherent;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v, int decimals) { return format_fixed(v, decimals); }

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// 1. Published results table: count-weighted category cells against the printed average column.

struct TableRow {
  const char* method;
  const char* row_label;  // as written in the source table, used to locate the row
  double sr[3];            // negative: no SR column
  double as[3];
  double avg_sr;
  double avg_as;
};

constexpr TableRow kTable[] = {
    {"DMRS-1D", "DMRS-1D", {0.700, 0.467, 0.667}, {10.6, 18.0, 20.7}, 0.600, 17.2},
    {"DMRS-2D", "DMRS-2D", {0.500, 0.267, 0.400}, {11.5, 19.9, 24.5}, 0.375, 19.6},
    {"CMRS", "CMRS", {0.900, 0.533, 0.533}, {7.9, 16.4, 22.2}, 0.625, 16.5},
    {"Primitive MCTS", "Primitive MCTS", {0.000, 0.000, 0.000}, {14.0, 21.5, 26.9}, 0.000, 21.7},
    {"LLM-MCTS", "LLM-MCTS", {0.700, 0.067, 0.000}, {10.2, 20.9, 26.9}, 0.200, 20.5},
    {"COHERENT w/o history", "COHERENT w/o history", {0.900, 0.933, 0.467}, {9.0, 13.9, 23.9}, 0.750, 16.5},
    {"COHERENT", "COHERENT (Ours)", {0.900, 1.000, 1.000}, {7.4, 11.9, 16.1}, 0.975, 12.4},
    {"GT", "Ground Truth (GT)", {-1, -1, -1}, {6.5, 10.3, 12.9}, -1, 10.3},
};
constexpr int kCounts[3] = {10, 15, 15};

// Every number of a row must appear, in order, on the source line naming it.
bool row_matches_source(const TableRow& row, const std::string& source) {
  std::istringstream in(source);
  std::string line;
  while (std::getline(in, line)) {
    if (line.find(row.row_label) == std::string::npos || line.find('&') == std::string::npos) continue;
    std::vector<std::string> want;
    for (int c = 0; c < 3; ++c) {
      if (row.sr[c] >= 0) want.push_back(fmt(row.sr[c], 3));
      want.push_back(fmt(row.as[c], 1));
    }
    if (row.avg_sr >= 0) want.push_back(fmt(row.avg_sr, 3));
    want.push_back(fmt(row.avg_as, 1));
    std::size_t pos = line.find('&');
    bool ok = true;
    for (const auto& w : want) {
      pos = line.find(w, pos);
      if (pos == std::string::npos) {
        ok = false;
        break;
      }
      pos += w.size();
    }
    if (ok) return true;
  }
  return false;
}

// Can integer step totals, each rounding to its printed cell, give a mean that
// rounds to the printed average? (Cells are printed to one decimal.)
bool integer_totals_reachable(const TableRow& row) {
  int lo_total = 0, hi_total = 0;
  for (int c = 0; c < 3; ++c) {
    const double lo = (row.as[c] - 0.05) * kCounts[c], hi = (row.as[c] + 0.05) * kCounts[c];
    int lo_i = static_cast<int>(std::ceil(lo - 1e-9)), hi_i = static_cast<int>(std::floor(hi - 1e-9));
    if (lo_i > hi_i) return false;
    lo_total += lo_i;
    hi_total += hi_i;
  }
  for (int t = lo_total; t <= hi_total; ++t) {
    if (format_as(t / 40.0) == fmt(row.avg_as, 1)) return true;
  }
  return false;
}

Verdict criterion1() {
  const auto t0 = Clock::now();
  const std::string source = slurp(fs::path(COHERENT_SOURCE_DIR) / "paper.md");
  Verdict v{true, ""};
  std::string reachable;
  for (const TableRow& row : kTable) {
    std::vector<CellSummary> cells;
    for (int c = 0; c < 3; ++c) cells.push_back({row.sr[c] < 0 ? 0.0 : row.sr[c], row.as[c], kCounts[c]});
    const CellSummary avg = weighted_average(cells);
    const bool sr_ok = row.avg_sr < 0 || std::abs(avg.sr - row.avg_sr) <= 0.001 + 1e-9;
    const bool as_ok = std::abs(avg.as - row.avg_as) <= 0.05 + 1e-9;
    const bool source_ok = source.empty() || row_matches_source(row, source);
    if (!(sr_ok && as_ok && source_ok)) {
      v.pass = false;
      v.detail += std::string(" ") + row.method + ":";
      if (!sr_ok) v.detail += " SR " + fmt(avg.sr, 4) + " vs " + fmt(row.avg_sr, 3);
      if (!as_ok) v.detail += " AS " + fmt(avg.as, 3) + " vs " + fmt(row.avg_as, 1);
      if (!source_ok) v.detail += " row not found in source table";
      v.detail += ";";
    }
    if (!as_ok && integer_totals_reachable(row)) reachable += std::string(" ") + row.method;
  }
  if (source.empty()) v.detail += " (source table not found; values not cross-checked)";
  if (!reachable.empty()) v.detail += " integer step totals reproduce the printed average for:" + reachable + ";";
  const double s = seconds_since(t0);
  if (s >= 1.0) v.pass = false;
  v.detail = "8 rows, counts (10,15,15)," + v.detail + " " + fmt(s, 3) + " s";
  return v;
}

// ---------------------------------------------------------------------------
// 2. Scoring over randomized episodes run through the engine.

// Follows the oracle script, but at each step may wait or take a random
// feasible action instead. The script pointer only advances on its own steps.
class NoisyOracle : public Planner {
 public:
  NoisyOracle(std::vector<ScriptStep> script, std::uint64_t seed, double noise)
      : script_(std::move(script)), rng_(seed), noise_(noise) {}
  std::string name() const override { return "noisy-oracle"; }
  Decision decide(const WorldState& state, std::span<const TransitionRecord>) override {
    std::uniform_real_distribution<double> u(0, 1);
    if (next_ < script_.size() && u(rng_) >= noise_) {
      const auto& s = script_[next_++];
      return {s.robot, s.action, ""};
    }
    if (u(rng_) < 0.5) return {};
    const auto& robots = state.scene().robots();
    const int slot = static_cast<int>(rng_() % robots.size());
    const std::string id = state.scene().entity(robots[slot].entity).id;
    const auto acts = feasible_actions(state, id);
    if (acts.empty()) return {};
    return {id, acts[rng_() % acts.size()], ""};
  }

 private:
  std::vector<ScriptStep> script_;
  std::mt19937_64 rng_;
  double noise_;
  std::size_t next_ = 0;
};

Verdict criterion2() {
  const auto t0 = Clock::now();
  const auto suite = builtin_suite();
  std::mt19937_64 rng(2024);
  int successes = 0, failures = 0, violations = 0;
  for (int i = 0; i < 1000; ++i) {
    const SuiteEntry& e = suite[rng() % suite.size()];
    const double noise = std::uniform_real_distribution<double>(0.0, 0.6)(rng);
    NoisyOracle planner(e.task->oracle, rng(), noise);
    const EpisodeResult r = run_episode(*e.scene, *e.task, planner);
    const ScoredEpisode s = score_episode(r, *e.task);
    // Independent recount: re-apply the executed actions, note the first
    // step after which the goal holds.
    WorldState st = build_scene(*e.scene);
    int reached = check_goal(st, e.task->goal) ? 0 : -1;
    for (std::size_t k = 0; k < r.trace.size() && reached < 0; ++k) {
      const auto& rec = r.trace[k];
      if (rec.executed()) st = apply(st, *rec.robot, *rec.action);
      if (check_goal(st, e.task->goal)) reached = static_cast<int>(k) + 1;
    }
    const int gt = e.task->gt_steps;
    const bool expect = reached >= 0 && reached <= 2 * gt;
    const int expect_steps = expect ? reached : 2 * gt + 1;
    if (s.success != expect || s.recorded_steps != expect_steps) ++violations;
    (expect ? successes : failures)++;
  }
  const double sec = seconds_since(t0);
  return {violations == 0 && sec < 5.0 && successes > 0 && failures > 0,
          "1000 episodes (" + std::to_string(successes) + " successes, " + std::to_string(failures) +
              " failures), rule violations " + std::to_string(violations) + ", " + fmt(sec, 2) + " s"};
}

// ---------------------------------------------------------------------------
// 3. Oracle replay and category verification.

Verdict criterion3() {
  const auto t0 = Clock::now();
  int ok = 0, cat_ok = 0;
  std::string bad;
  const auto suite = builtin_suite();
  for (const SuiteEntry& e : suite) {
    ScriptPlanner p(e.task->oracle);
    const EpisodeResult r = run_episode(*e.scene, *e.task, p);
    if (r.success && r.steps_taken == e.task->gt_steps) {
      ++ok;
    } else {
      bad += " " + e.task->id;
    }
    try {
      if (verify_category(*e.scene, *e.task) == e.task->category) {
        ++cat_ok;
      } else {
        bad += " " + e.task->id + "(category)";
      }
    } catch (const Unsolvable&) {
      bad += " " + e.task->id + "(unsolvable)";
    }
  }
  const double sec = seconds_since(t0);
  const int n = static_cast<int>(suite.size());
  return {n == 40 && ok == n && cat_ok == n && sec < 120,
          std::to_string(ok) + "/" + std::to_string(n) + " oracle runs in exactly GT steps, " + std::to_string(cat_ok) + "/" +
              std::to_string(n) + " categories confirmed" + (bad.empty() ? "" : "; failing:" + bad) + ", " + fmt(sec, 2) + " s"};
}

// ---------------------------------------------------------------------------
// 4 and 5. Scripted PEFA dialogues on the apple task.

PefaEpisode run_script(const std::string& script) {
  const SuiteEntry e = builtin_task(scenarios::kAppleTask);
  ScriptedBackend b = ScriptedBackend::from_json(script);
  return run_pefa(*e.scene, *e.task, b, 2 * e.task->gt_steps);
}

bool trace_has(const EpisodeResult& r, const std::string& robot, const std::string& action) {
  for (const auto& rec : r.trace) {
    if (rec.executed() && rec.robot == robot && rec.action->render() == action) return true;
  }
  return false;
}

// Index of the first failure feedback of the given kind, or -1.
int first_failure(const PefaEpisode& ep, FailureSituation s) {
  for (std::size_t i = 0; i < ep.feedback.size(); ++i) {
    if (ep.feedback[i].kind == FeedbackKind::kFailure && ep.feedback[i].situation == s) return static_cast<int>(i);
  }
  return -1;
}

Verdict criterion4() {
  const auto t0 = Clock::now();
  const PefaEpisode faithful = run_script(scenarios::worked_example());
  const auto& r = faithful.result;
  const bool roles = trace_has(r, "robotic_dog", "[grab] <apple>") &&
                     trace_has(r, "robotic_dog", "[putinto] <apple> into <basket>") &&
                     trace_has(r, "quadrotor", "[land_on] <dining_table>") &&
                     trace_has(r, "robotic_arm", "[puton] <apple> on <dining_table>");

  const PefaEpisode faulty = run_script(scenarios::height_limit_variant());
  int height_at = -1;
  for (std::size_t i = 0; i < faulty.result.trace.size(); ++i) {
    const auto& v = faulty.result.trace[i].validation;
    if (v && !v->executable && v->reason == FailureCode::kHeightLimit) {
      height_at = static_cast<int>(i);
      break;
    }
  }
  const int limit_at = first_failure(faulty, FailureSituation::kExecutionLimit);
  const bool recovered = faulty.result.success && height_at >= 0 && limit_at == height_at;
  const double sec = seconds_since(t0);
  return {r.success && roles && recovered && sec < 10,
          "worked example " + std::string(r.success ? "succeeds" : "fails") + " in " + std::to_string(r.steps_taken) +
              " steps, dog/quadrotor/arm roles " + (roles ? "present" : "missing") + "; faulty variant HEIGHT_LIMIT at iteration " +
              std::to_string(height_at + 1) + ", execution_limit feedback at " + std::to_string(limit_at + 1) + ", " +
              (faulty.result.success ? "recovers in " + std::to_string(faulty.result.steps_taken) + " steps" : "no recovery") +
              ", " + fmt(sec, 2) + " s"};
}

Verdict criterion5() {
  const auto t0 = Clock::now();
  struct Case {
    const char* label;
    std::string script;
    FailureSituation situation;
  };
  const Case cases[] = {{"wrong_step", scenarios::wrong_step_variant(), FailureSituation::kWrongStep},
                        {"wrong_robot", scenarios::wrong_robot_variant(), FailureSituation::kWrongRobot},
                        {"execution_limit", scenarios::height_limit_variant(), FailureSituation::kExecutionLimit}};
  bool pass = true;
  std::string detail;
  for (const Case& c : cases) {
    const PefaEpisode ep = run_script(c.script);
    const bool seen = first_failure(ep, c.situation) >= 0;
    const bool ok = seen && ep.result.success;
    pass = pass && ok;
    detail += std::string(c.label) + (seen ? " raised" : " missing") + (ep.result.success ? ", recovered in " : ", not recovered after ") +
              std::to_string(ep.result.steps_taken) + "/" + std::to_string(ep.result.budget) + " steps; ";
  }
  const double sec = seconds_since(t0);
  return {pass && sec < 10, detail + fmt(sec, 2) + " s"};
}

// ---------------------------------------------------------------------------
// 6. History window.

int count_of(const std::string& hay, const std::string& needle) {
  int n = 0;
  for (std::size_t p = hay.find(needle); p != std::string::npos; p = hay.find(needle, p + 1)) ++n;
  return n;
}

Verdict criterion6() {
  const SuiteEntry e = builtin_task(scenarios::kAppleTask);
  ScriptedBackend b = ScriptedBackend::from_json(scenarios::worked_example());
  PefaPlanner planner(b);
  const int cycles = 9;
  run_episode(*e.scene, *e.task, planner, cycles);
  bool pass = static_cast<int>(planner.assigner_prompts().size()) == cycles;
  std::string shown;
  if (pass) {
    const std::string user = planner.assigner_prompts().back().back().content;
    for (int i = 1; i < cycles; ++i) {
      const int n = count_of(user, "[iteration " + std::to_string(i) + "]");
      if (n) shown += " " + std::to_string(i);
      pass = pass && n == (i >= cycles - 5 ? 1 : 0);
    }
  }
  return {pass, "prompt at cycle " + std::to_string(cycles) + " shows iterations" + shown};
}

// ---------------------------------------------------------------------------
// 7. Tree-search sanity.

// The task's scene restricted to the robots its oracle uses plus, when that
// leaves one robot, the next robot in scene order.
std::optional<SceneSpec> two_robot_scene(const SceneSpec& scene, const TaskSpec& task) {
  std::set<std::string> used;
  for (const auto& s : task.oracle) used.insert(s.robot);
  SceneSpec out = scene;
  out.robots.clear();
  for (const auto& r : scene.robots) {
    if (used.count(r.id)) out.robots.push_back(r);
  }
  for (const auto& r : scene.robots) {
    if (!used.count(r.id) && out.robots.size() < 2) out.robots.push_back(r);
  }
  try {
    build_scene(out);
  } catch (const Error&) {
    return std::nullopt;
  }
  return out;
}

Verdict criterion7() {
  const auto t0 = Clock::now();
  constexpr int kSeeds = 100;
  int tasks_at_95 = 0, evaluated = 0;
  std::string rates;
  bool llm_ok = true;
  int llm_tasks = 0;
  for (const SuiteEntry& e : builtin_suite()) {
    if (e.task->gt_steps > 6) continue;
    const auto scene = two_robot_scene(*e.scene, *e.task);
    if (!scene) continue;
    const WorldState st = build_scene(*scene);
    const auto goal = compile_goal(st.scene(), e.task->goal);
    const auto optimal = optimal_first_steps(st, goal, e.task->gt_steps);
    const auto is_optimal = [&](const Move& m) {
      return std::find(optimal.begin(), optimal.end(), PlanStep{m.robot_slot, m.action}) != optimal.end();
    };
    ++evaluated;
    int hits = 0;
    for (int seed = 0; seed < kSeeds; ++seed) {
      MctsParams p;
      p.iterations = 1000;
      p.rollout_depth = 2 * e.task->gt_steps;
      p.seed = static_cast<std::uint64_t>(seed);
      if (is_optimal(mcts_search(st, goal, p).move)) ++hits;
    }
    if (hits >= 95) ++tasks_at_95;
    rates += " " + e.task->id + "=" + std::to_string(hits) + "%";

    // Scripted prior: 0.99 on the oracle's first action.
    const std::string favoured = e.task->oracle.front().render();
    FunctionBackend prior([&](const auto&, const auto&) { return favoured + " = 0.99"; });
    MctsParams p;
    p.iterations = 100;
    p.rollout_depth = 2 * e.task->gt_steps;
    const MctsResult r = llm_mcts_search(st, goal, prior, e.task->instruction, p);
    ++llm_tasks;
    llm_ok = llm_ok && r.move.text == favoured;
  }
  const double sec = seconds_since(t0);
  return {tasks_at_95 >= 3 && llm_ok && sec < 60,
          "primitive MCTS, 1000 iterations x " + std::to_string(kSeeds) + " seeds, two-robot scenes:" + rates + " (" +
              std::to_string(tasks_at_95) + "/" + std::to_string(evaluated) + " at >= 95%); LLM-MCTS 0.99 prior, 100 iterations: " +
              (llm_ok ? "oracle action on all " : "missed on some of ") + std::to_string(llm_tasks) + " tasks; " + fmt(sec, 1) + " s"};
}

// ---------------------------------------------------------------------------
// 8. Determinism of bench outputs.

std::map<std::string, std::string> tree_contents(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& f : fs::recursive_directory_iterator(dir)) {
    if (f.is_regular_file()) out[fs::relative(f.path(), dir).string()] = slurp(f.path());
  }
  return out;
}

Verdict criterion8() {
  const auto t0 = Clock::now();
  const fs::path root = fs::temp_directory_path() / ("coherent_accept_" + std::to_string(::getpid()));
  fs::remove_all(root);
  const auto suite = builtin_suite();
  std::size_t files = 0;
  bool same = true;
  for (const char* planner : {"pefa", "cmrs", "dmrs1", "dmrs2", "llm-mcts", "mcts"}) {
    RunOptions o;
    o.planner = planner;
    o.seed = 17;
    o.mcts_iterations = 100;
    for (int run = 0; run < 2; ++run) {
      write_bench_outputs(run_bench(suite, o, run == 0 ? 1 : 4), root / planner / std::to_string(run));
    }
    const auto a = tree_contents(root / planner / "0");
    const auto b = tree_contents(root / planner / "1");
    files += a.size();
    same = same && a == b;
  }
  fs::remove_all(root);
  return {same, std::to_string(files) + " files per run over 6 planners x 40 tasks, runs with 1 and 4 workers " +
                    (same ? "byte-identical" : "DIFFER") + ", " + fmt(seconds_since(t0), 1) + " s"};
}

// ---------------------------------------------------------------------------
// 9. Fuzzed completions never smuggle in an infeasible action.

class Fuzzer {
 public:
  explicit Fuzzer(std::uint64_t seed) : rng_(seed) {}

  std::string operator()(const std::vector<ChatMessage>&, const CompletionParams&) {
    ++calls_;
    static const std::vector<std::string> robots{"robotic_dog", "<robotic dog>", "quadrotor", "<quadrotor>", "robotic_arm",
                                                 "robotic arm", "submarine", "<robot>", "", "robotic_dog_2"};
    static const std::vector<std::string> verbs{"movetowards", "grab", "putinto", "puton", "open", "close", "takeoff_from",
                                                "land_on", "teleport", "fly", "", "GRAB"};
    static const std::vector<std::string> things{"apple", "milk", "vase", "basket", "dining table", "dining_table", "fridge",
                                                 "kitchen", "living_room", "coffee_table", "moon", "apple>", "", "kitchen_floor",
                                                 "counter", "wall_shelf"};
    auto pick = [&](const std::vector<std::string>& v) { return v[rng_() % v.size()]; };
    std::string out;
    const int lines = 1 + static_cast<int>(rng_() % 4);
    for (int i = 0; i < lines; ++i) {
      switch (rng_() % 7) {
        case 0: out += pick(robots) + ": [" + pick(verbs) + "] <" + pick(things) + ">"; break;
        case 1: out += "1. " + pick(robots) + ": pick up the <" + pick(things) + ">"; break;
        case 2: out += pick(robots) + ": [" + pick(verbs) + "] <" + pick(things) + "> into <" + pick(things) + ">"; break;
        case 3: out += "I will execute [" + pick(verbs) + "] <" + pick(things) + "> on <" + pick(things) + ">"; break;
        case 4: out += pick(robots) + ": [" + pick(verbs) + "] <" + pick(things) + "> = " + std::to_string(rng_() % 100 / 10.0); break;
        case 5: out += "I suggest " + pick(robots) + " execute [" + pick(verbs) + "] <" + pick(things) + ">"; break;
        default: {
          const int n = static_cast<int>(rng_() % 40);
          for (int k = 0; k < n; ++k) out += static_cast<char>(32 + rng_() % 95);
        }
      }
      out += '\n';
    }
    return out;
  }
  std::size_t calls() const { return calls_; }

 private:
  std::mt19937_64 rng_;
  std::size_t calls_ = 0;
};

Verdict criterion9() {
  const auto t0 = Clock::now();
  const auto suite = builtin_suite();
  Fuzzer fuzz(99);
  FunctionBackend backend([&](const auto& m, const auto& p) { return fuzz(m, p); });
  int episodes = 0, steps = 0, applied = 0, rejected = 0, leaks = 0;
  const char* planners[] = {"pefa", "cmrs", "dmrs1", "dmrs2", "llm-mcts"};
  while (fuzz.calls() < 10000) {
    const SuiteEntry& e = suite[static_cast<std::size_t>(episodes) % suite.size()];
    RunOptions o;
    o.planner = planners[episodes % 5];
    o.mcts_iterations = 20;
    ++episodes;
    const EpisodeResult r = run_task(*e.scene, *e.task, o, &backend);
    WorldState st = build_scene(*e.scene);
    for (const auto& rec : r.trace) {
      ++steps;
      if (rec.executed()) {
        const auto feasible = feasible_actions(st, *rec.robot);
        if (std::find(feasible.begin(), feasible.end(), *rec.action) == feasible.end()) ++leaks;
        st = apply(st, *rec.robot, *rec.action);
        ++applied;
      } else {
        if (rec.action) ++rejected;
        if (rec.digest != st.digest()) ++leaks;  // a rejected or waiting step must not change the state
      }
    }
  }
  const double sec = seconds_since(t0);
  return {leaks == 0, std::to_string(fuzz.calls()) + " fuzzed completions over " + std::to_string(episodes) + " episodes, " +
                          std::to_string(steps) + " steps: " + std::to_string(applied) + " applied (all feasible), " +
                          std::to_string(rejected) + " rejected without effect, violations " + std::to_string(leaks) + ", " +
                          fmt(sec, 1) + " s"};
}

// ---------------------------------------------------------------------------
// 10. HTTP contract against a local stub.

Verdict criterion10() {
  using httpstub::Stub;
  const auto t0 = Clock::now();
  const std::vector<ChatMessage> prompt{{"system", "You plan for robots."}, {"user", "<robotic dog>: ?"}};
  std::string fails;

  {
    Stub stub([](int, const httplib::Request&, httplib::Response& res) { httpstub::reply(res, "ok"); });
    HttpBackend b(stub.config());
    CompletionParams p;
    p.temperature = 0.0;
    const std::string got = b.complete(prompt, p);
    const auto body = nlohmann::json::parse(stub.bodies().at(0));
    const bool mapped = got == "ok" && body["model"] == "stub-model" && body["messages"].size() == 2 &&
                        body["messages"][1]["role"] == "user" && body["messages"][1]["content"] == "<robotic dog>: ?";
    if (!mapped) fails += " field-mapping";
    if (stub.auth().at(0) != "Bearer secret-token") fails += " bearer";
  }
  {
    Stub stub([](int n, const httplib::Request&, httplib::Response& res) {
      if (n < 2) {
        res.status = 500;
      } else {
        httpstub::reply(res, "third time");
      }
    });
    HttpBackend b(stub.config());
    const bool ok = b.complete(prompt, {}) == "third time" && stub.count() == 3 && b.telemetry().retries == 2;
    if (!ok) fails += " retry-on-500";
  }
  {
    Stub stub([](int, const httplib::Request&, httplib::Response& res) {
      std::this_thread::sleep_for(std::chrono::milliseconds(600));
      httpstub::reply(res, "late");
    });
    HttpConfig c = stub.config();
    c.timeout = std::chrono::milliseconds(150);
    c.max_retries = 0;
    HttpBackend b(c);
    const auto t = Clock::now();
    bool timed_out = false;
    try {
      b.complete(prompt, {});
    } catch (const Timeout&) {
      timed_out = true;
    } catch (const Error&) {
    }
    if (!timed_out || seconds_since(t) > 0.55) fails += " timeout";
  }
  const double sec = seconds_since(t0);
  return {fails.empty() && sec < 5, "field mapping, bearer auth, retry on 500 (3 requests), 150 ms timeout" +
                                        (fails.empty() ? std::string(" all verified") : "; failed:" + fails) + ", " +
                                        fmt(sec, 2) + " s"};
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Verdict()>> criteria[] = {
      {"metrics arithmetic", criterion1},     {"scoring rules", criterion2},      {"oracle completeness", criterion3},
      {"worked example", criterion4},         {"feedback taxonomy", criterion5},  {"history window", criterion6},
      {"tree-search sanity", criterion7},     {"determinism", criterion8},        {"hallucination containment", criterion9},
      {"HTTP contract", criterion10},
  };
  int failed = 0;
  int index = 0;
  for (const auto& [name, run] : criteria) {
    ++index;
    Verdict v;
    try {
      v = run();
    } catch (const std::exception& ex) {
      v = {false, std::string("threw: ") + ex.what()};
    }
    failed += v.pass ? 0 : 1;
    std::cout << (v.pass ? "[PASS] " : "[FAIL] ") << index << ". " << name << ": " << v.detail << std::endl;
  }
  std::cout << (10 - failed) << "/10 criteria met" << std::endl;
  return failed;
}
