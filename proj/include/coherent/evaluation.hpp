#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "coherent/backend.hpp"
#include "coherent/baselines.hpp"
#include "coherent/engine.hpp"
#include "coherent/tasks.hpp"

namespace coherent {

struct ScoredEpisode {
  std::string task_id;
  Category category = Category::kMono;
  std::string scene;
  int gt_steps = 0;
  bool success = false;
  int recorded_steps = 0;
};

/// Success requires the goal within 2 x gt steps; failures record 2 x gt + 1.
ScoredEpisode score_episode(const EpisodeResult& result, int gt_steps);
ScoredEpisode score_episode(const EpisodeResult& result, const TaskSpec& task);

struct MetricsCell {
  std::string name;
  int count = 0;
  int successes = 0;
  long long step_sum = 0;

  double sr() const { return count ? static_cast<double>(successes) / count : 0.0; }
  double as() const { return count ? static_cast<double>(step_sum) / count : 0.0; }
};

struct MetricsTable {
  std::string method;
  std::vector<MetricsCell> by_category;  // mono, dual, trio (always present)
  std::vector<MetricsCell> by_scene;     // sorted by scene name
  MetricsCell overall;
};

/// Throws EmptyInput for an empty list. Order of `episodes` does not matter.
MetricsTable aggregate(std::span<const ScoredEpisode> episodes, std::string method = "");

/// Count-weighted mean of per-cell (SR, AS) pairs, as used to build an
/// "Average" column from category cells.
struct CellSummary {
  double sr = 0;
  double as = 0;
  int count = 0;
};
CellSummary weighted_average(std::span<const CellSummary> cells);

/// Half-up decimal rounding (a 1e-9 nudge absorbs binary representation error).
std::string format_fixed(double value, int decimals);
std::string format_sr(double sr);  // 3 decimals
std::string format_as(double as);  // 1 decimal

enum class ReportFormat { kPlain, kCsv, kMarkdown };
std::optional<ReportFormat> report_format_from_string(std::string_view text);
std::string_view extension(ReportFormat format);

std::string render_report(std::span<const MetricsTable> tables, ReportFormat format);
/// Writes render_report(...) to `path`; throws IoError.
void emit_report(std::span<const MetricsTable> tables, ReportFormat format, const std::filesystem::path& path);

/// Per-episode CSV (`method,task,scene,category,gt_steps,success,recorded_steps`)
/// written by bench and read back by `report`.
std::string scores_csv(std::string_view method, std::span<const ScoredEpisode> episodes);
struct MethodScores {
  std::string method;
  std::vector<ScoredEpisode> episodes;
};
std::vector<MethodScores> parse_scores_csv(std::string_view text);

// ---------------------------------------------------------------------------
// Running planners over tasks

inline constexpr std::string_view kPlannerNames[] = {"pefa", "cmrs", "dmrs1", "dmrs2", "mcts", "llm-mcts"};

struct RunOptions {
  std::string planner = "pefa";
  std::string backend = "scripted";  // scripted | http
  /// Scripted backend: a script file for `run`, or a directory of
  /// <task>.json files for `bench`; empty means "derive from the oracle".
  std::filesystem::path script;
  HttpConfig http;
  std::uint64_t seed = 0;
  bool use_history = true;
  int mcts_iterations = 1000;
};

/// Builds the planner; `backend` may be null for "mcts".
std::unique_ptr<Planner> make_planner(const RunOptions& options, Backend* backend);
bool planner_uses_backend(std::string_view planner);

/// One episode with the backend the options describe.
EpisodeResult run_task(const SceneSpec& scene, const TaskSpec& task, const RunOptions& options,
                       Backend* shared_backend = nullptr);

struct BenchResult {
  std::string method;
  std::vector<EpisodeResult> episodes;  // suite order
  std::vector<ScoredEpisode> scores;
  MetricsTable table;
};

/// Runs every entry; `workers` > 1 distributes episodes over OpenMP threads.
/// Results are stored by suite index, so output does not depend on workers.
BenchResult run_bench(std::span<const SuiteEntry> entries, const RunOptions& options, int workers);

/// Writes traces/<task>.<planner>.jsonl, scores.csv and report.{txt,csv,md}.
void write_bench_outputs(const BenchResult& bench, const std::filesystem::path& out_dir);

}  // namespace coherent
