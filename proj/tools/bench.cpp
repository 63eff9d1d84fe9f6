// Timing of the parallel kernels against their serial references:
// breadth-first search (shortest_plan vs shortest_plan_parallel) on the
// longest suite tasks, and a whole-suite bench with 1 vs N workers.

#include <omp.h>

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <iostream>

#include "coherent/evaluation.hpp"
#include "coherent/search.hpp"

using namespace coherent;
using Clock = std::chrono::steady_clock;

namespace {

template <class F>
double best_of(int reps, F&& f) {
  double best = 1e300;
  for (int i = 0; i < reps; ++i) {
    const auto t0 = Clock::now();
    f();
    best = std::min(best, std::chrono::duration<double, std::milli>(Clock::now() - t0).count());
  }
  return best;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Serial vs parallel timings"};
  int reps = 3;
  int threads = omp_get_max_threads();
  int min_gt = 10;
  std::string planner = "mcts";
  int iterations = 200;
  app.add_option("--reps", reps, "Repetitions per measurement (best is reported)")->check(CLI::PositiveNumber);
  app.add_option("--threads", threads, "OpenMP threads for the parallel runs")->check(CLI::PositiveNumber);
  app.add_option("--min-gt", min_gt, "Only time BFS on tasks with at least this many GT steps");
  app.add_option("--planner", planner, "Planner for the suite timing");
  app.add_option("--mcts-iterations", iterations, "Tree-search iterations for the suite timing");
  CLI11_PARSE(app, argc, argv);

  std::printf("threads available: %d, used: %d\n\n", omp_get_num_procs(), threads);
  std::printf("%-36s %4s %10s %10s %10s %8s\n", "task", "gt", "states", "serial ms", "omp ms", "same");
  for (const SuiteEntry& e : builtin_suite()) {
    if (e.task->gt_steps < min_gt) continue;
    const WorldState start = build_scene(*e.scene);
    const auto goal = compile_goal(start.scene(), e.task->goal);
    const auto slots = all_slots(start.scene());
    SearchResult serial, parallel;
    const double ts = best_of(reps, [&] { serial = shortest_plan(start, goal, slots, e.task->gt_steps); });
    omp_set_num_threads(threads);
    const double tp = best_of(reps, [&] { parallel = shortest_plan_parallel(start, goal, slots, e.task->gt_steps); });
    const bool same = serial.plan == parallel.plan && serial.states_visited == parallel.states_visited;
    std::printf("%-36s %4d %10zu %10.1f %10.1f %8s\n", e.task->id.c_str(), e.task->gt_steps, serial.states_visited, ts, tp,
                same ? "yes" : "NO");
  }

  RunOptions o;
  o.planner = planner;
  o.mcts_iterations = iterations;
  const auto suite = builtin_suite();
  BenchResult one, many;
  const double t1 = best_of(1, [&] { one = run_bench(suite, o, 1); });
  const double tn = best_of(1, [&] { many = run_bench(suite, o, threads); });
  const bool same = scores_csv(one.method, one.scores) == scores_csv(many.method, many.scores);
  std::printf("\nsuite (%s, %zu tasks): 1 worker %.0f ms, %d workers %.0f ms, identical scores: %s\n", planner.c_str(),
              suite.size(), t1, threads, tn, same ? "yes" : "NO");
  return same ? 0 : 1;
}
