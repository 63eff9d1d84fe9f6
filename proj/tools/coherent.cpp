// Command-line entry point: run, bench, replay, list-tasks, report.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "coherent/engine.hpp"
#include "coherent/evaluation.hpp"
#include "coherent/tasks.hpp"

namespace fs = std::filesystem;
using namespace coherent;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void print_episode(const EpisodeResult& r, const TaskSpec& task) {
  const ScoredEpisode s = score_episode(r, task);
  std::cout << task.id << " planner=" << r.planner << " success=" << (s.success ? "true" : "false")
            << " steps=" << r.steps_taken << " budget=" << r.budget << " recorded=" << s.recorded_steps << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Heterogeneous multi-robot task planning simulator and benchmark"};
  app.require_subcommand(1);

  RunOptions opts;
  std::string endpoint, model;
  std::string out_dir = "out";
  std::string format = "plain";
  int workers = 1;

  auto add_planner_flags = [&](CLI::App* cmd) {
    cmd->add_option("--planner", opts.planner, "pefa | cmrs | dmrs1 | dmrs2 | mcts | llm-mcts")
        ->check(CLI::IsMember({"pefa", "cmrs", "dmrs1", "dmrs2", "mcts", "llm-mcts"}));
    cmd->add_option("--backend", opts.backend, "Text backend")->check(CLI::IsMember({"scripted", "http"}));
    cmd->add_option("--script", opts.script,
                    "Scripted replies (file for run, directory of <task>.json for bench); default: derived from the oracle plan");
    cmd->add_option("--endpoint", endpoint, "Base URL of a chat-completions server, e.g. https://api.openai.com");
    cmd->add_option("--model", model, "Model name sent to the endpoint");
    cmd->add_option("--seed", opts.seed, "Seed for tree search");
    cmd->add_flag("--no-history", [&](std::int64_t) { opts.use_history = false; }, "Drop dialogue history from assigner prompts");
    cmd->add_option("--mcts-iterations", opts.mcts_iterations, "Tree-search iterations per decision")->check(CLI::PositiveNumber);
    cmd->add_option("--out", out_dir, "Output directory");
  };

  auto* run = app.add_subcommand("run", "Run one task");
  std::string task_id, task_file;
  run->add_option("--task", task_id, "Built-in task id");
  run->add_option("--task-file", task_file, "Task JSON file (embedded scene or scene reference)");
  add_planner_flags(run);

  auto* bench = app.add_subcommand("bench", "Run the built-in suite");
  std::vector<std::string> only;
  bench->add_option("--tasks", only, "Restrict to these task ids");
  bench->add_option("--workers", workers, "Concurrent episodes")->check(CLI::PositiveNumber);
  bench->add_option("--format", format, "Report printed to stdout")->check(CLI::IsMember({"plain", "csv", "markdown"}));
  add_planner_flags(bench);

  auto* replay = app.add_subcommand("replay", "Check a trace file against its task");
  std::string trace_path, replay_task;
  replay->add_option("trace", trace_path, "Trace (.jsonl)")->required();
  replay->add_option("--task", replay_task, "Task id (default: file name up to the first '.')");

  auto* list = app.add_subcommand("list-tasks", "List built-in tasks");

  auto* report = app.add_subcommand("report", "Aggregate scores.csv files into a report");
  std::vector<std::string> score_files;
  report->add_option("scores", score_files, "scores.csv files written by bench")->required();
  report->add_option("--format", format, "plain | csv | markdown")->check(CLI::IsMember({"plain", "csv", "markdown"}));
  report->add_option("--out", out_dir, "Write report.<ext> here instead of stdout");

  CLI11_PARSE(app, argc, argv);

  if (!endpoint.empty()) opts.http.base_url = endpoint;
  if (!model.empty()) opts.http.model = model;

  try {
    if (*run) {
      if (task_id.empty() == task_file.empty()) throw DomainError("give exactly one of --task or --task-file");
      SceneSpec scene;
      TaskSpec task;
      if (!task_id.empty()) {
        const SuiteEntry e = builtin_task(task_id);
        scene = *e.scene;
        task = *e.task;
      } else {
        std::tie(scene, task) = load_task(task_file);
      }
      const EpisodeResult r = run_task(scene, task, opts);
      print_episode(r, task);
      fs::create_directories(out_dir);
      const fs::path path = fs::path(out_dir) / (task.id + "." + r.planner + ".jsonl");
      std::ofstream f(path, std::ios::binary);
      if (!f) throw IoError("cannot write " + path.string());
      write_trace(f, r.trace);
      std::cout << "trace: " << path.string() << '\n';
      return 0;
    }
    if (*bench) {
      std::vector<SuiteEntry> entries;
      for (const SuiteEntry& e : builtin_suite()) {
        if (only.empty() || std::find(only.begin(), only.end(), e.task->id) != only.end()) entries.push_back(e);
      }
      const BenchResult b = run_bench(entries, opts, workers);
      write_bench_outputs(b, out_dir);
      const MetricsTable tables[] = {b.table};
      std::cout << render_report(tables, *report_format_from_string(format));
      return 0;
    }
    if (*replay) {
      std::string id = replay_task;
      if (id.empty()) {
        id = fs::path(trace_path).filename().string();
        id = id.substr(0, id.find('.'));
      }
      const SuiteEntry e = builtin_task(id);
      std::ifstream in(trace_path, std::ios::binary);
      if (!in) throw IoError("cannot open " + trace_path);
      const auto trace = read_trace(in);
      const ReplayReport rep = replay_trace(*e.scene, trace);
      const bool goal = check_goal(rep.final_state, e.task->goal);
      std::cout << id << " records=" << rep.records << " digests=" << (rep.ok ? "match" : "MISMATCH")
                << " goal=" << (goal ? "reached" : "not reached") << '\n';
      if (!rep.ok) std::cout << rep.message << '\n';
      return rep.ok ? 0 : 1;
    }
    if (*list) {
      for (const SuiteEntry& e : builtin_suite()) {
        std::cout << e.task->id << '\t' << e.scene->name << '\t' << to_string(e.task->category) << '\t' << e.task->gt_steps
                  << '\t' << e.task->instruction << '\n';
      }
      return 0;
    }
    if (*report) {
      std::vector<MetricsTable> tables;
      for (const auto& file : score_files) {
        for (const MethodScores& m : parse_scores_csv(read_file(file))) tables.push_back(aggregate(m.episodes, m.method));
      }
      const ReportFormat fmt = *report_format_from_string(format);
      if (app.get_subcommand("report")->count("--out")) {
        fs::create_directories(out_dir);
        emit_report(tables, fmt, fs::path(out_dir) / ("report." + std::string(extension(fmt))));
      } else {
        std::cout << render_report(tables, fmt);
      }
      return 0;
    }
  } catch (const PlannerError& e) {
    std::cerr << "planner error: " << e.what() << " (after " << e.partial_trace().size() << " iterations)\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
