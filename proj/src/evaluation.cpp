#include "coherent/evaluation.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "coherent/pefa.hpp"
#include "coherent/scripts.hpp"

namespace coherent {

ScoredEpisode score_episode(const EpisodeResult& result, int gt_steps) {
  if (gt_steps < 1) throw DomainError("gt_steps must be >= 1, got " + std::to_string(gt_steps));
  ScoredEpisode s;
  s.task_id = result.task_id;
  s.gt_steps = gt_steps;
  s.success = result.success && result.steps_taken <= 2 * gt_steps;
  s.recorded_steps = s.success ? result.steps_taken : 2 * gt_steps + 1;
  return s;
}

ScoredEpisode score_episode(const EpisodeResult& result, const TaskSpec& task) {
  ScoredEpisode s = score_episode(result, task.gt_steps);
  s.category = task.category;
  s.scene = task.scene;
  return s;
}

MetricsTable aggregate(std::span<const ScoredEpisode> episodes, std::string method) {
  if (episodes.empty()) throw EmptyInput("no episodes to aggregate");
  MetricsTable t;
  t.method = std::move(method);
  for (Category c : {Category::kMono, Category::kDual, Category::kTrio}) t.by_category.push_back({std::string(to_string(c))});
  std::map<std::string, MetricsCell> scenes;
  t.overall.name = "average";
  auto add = [](MetricsCell& cell, const ScoredEpisode& e) {
    ++cell.count;
    cell.successes += e.success ? 1 : 0;
    cell.step_sum += e.recorded_steps;
  };
  for (const ScoredEpisode& e : episodes) {
    add(t.by_category[static_cast<std::size_t>(e.category) - 1], e);
    MetricsCell& sc = scenes[e.scene];
    sc.name = e.scene;
    add(sc, e);
    add(t.overall, e);
  }
  for (auto& [name, cell] : scenes) t.by_scene.push_back(cell);
  return t;
}

CellSummary weighted_average(std::span<const CellSummary> cells) {
  CellSummary out;
  double sr = 0, as = 0;
  for (const CellSummary& c : cells) {
    if (c.count < 0) throw DomainError("negative cell count");
    sr += c.sr * c.count;
    as += c.as * c.count;
    out.count += c.count;
  }
  if (out.count == 0) throw EmptyInput("no tasks in any cell");
  out.sr = sr / out.count;
  out.as = as / out.count;
  return out;
}

std::string format_fixed(double value, int decimals) {
  const double scale = std::pow(10.0, decimals);
  const double rounded = std::floor(value * scale + 0.5 + 1e-9) / scale;
  std::ostringstream out;
  out << std::fixed << std::setprecision(decimals) << rounded;
  return out.str();
}

std::string format_sr(double sr) { return format_fixed(sr, 3); }
std::string format_as(double as) { return format_fixed(as, 1); }

std::optional<ReportFormat> report_format_from_string(std::string_view text) {
  if (text == "plain") return ReportFormat::kPlain;
  if (text == "csv") return ReportFormat::kCsv;
  if (text == "markdown" || text == "md") return ReportFormat::kMarkdown;
  return std::nullopt;
}

std::string_view extension(ReportFormat format) {
  switch (format) {
    case ReportFormat::kPlain: return "txt";
    case ReportFormat::kCsv: return "csv";
    case ReportFormat::kMarkdown: return "md";
  }
  return "txt";
}

namespace {

std::string sr_text(const MetricsCell& c) { return c.count ? format_sr(c.sr()) : "-"; }
std::string as_text(const MetricsCell& c) { return c.count ? format_as(c.as()) : "-"; }

std::vector<const MetricsCell*> columns(const MetricsTable& t) {
  std::vector<const MetricsCell*> cols;
  for (const auto& c : t.by_category) cols.push_back(&c);
  for (const auto& c : t.by_scene) cols.push_back(&c);
  cols.push_back(&t.overall);
  return cols;
}

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

}  // namespace

std::string render_report(std::span<const MetricsTable> tables, ReportFormat format) {
  std::ostringstream out;
  switch (format) {
    case ReportFormat::kCsv:
      out << "method,cell,sr,as,count\n";
      for (const auto& t : tables) {
        for (const MetricsCell* c : columns(t)) {
          out << t.method << ',' << c->name << ',' << sr_text(*c) << ',' << as_text(*c) << ',' << c->count << '\n';
        }
      }
      break;
    case ReportFormat::kMarkdown:
      for (const auto& t : tables) {
        const auto cols = columns(t);
        out << "| method |";
        for (const auto* c : cols) out << ' ' << c->name << " SR | " << c->name << " AS |";
        out << "\n|---|";
        for (std::size_t i = 0; i < cols.size(); ++i) out << "---:|---:|";
        out << "\n| " << t.method << " |";
        for (const auto* c : cols) out << ' ' << sr_text(*c) << " | " << as_text(*c) << " |";
        out << "\n\n";
      }
      break;
    case ReportFormat::kPlain:
      for (const auto& t : tables) {
        out << "method: " << t.method << '\n';
        out << pad("cell", 14) << pad("SR", 8) << pad("AS", 8) << "count\n";
        for (const auto* c : columns(t)) {
          out << pad(c->name, 14) << pad(sr_text(*c), 8) << pad(as_text(*c), 8) << c->count << '\n';
        }
        out << '\n';
      }
      break;
  }
  return out.str();
}

void emit_report(std::span<const MetricsTable> tables, ReportFormat format, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path.string());
  f << render_report(tables, format);
  if (!f) throw IoError("failed writing " + path.string());
}

std::string scores_csv(std::string_view method, std::span<const ScoredEpisode> episodes) {
  std::ostringstream out;
  out << "method,task,scene,category,gt_steps,success,recorded_steps\n";
  for (const auto& e : episodes) {
    out << method << ',' << e.task_id << ',' << e.scene << ',' << to_string(e.category) << ',' << e.gt_steps << ','
        << (e.success ? 1 : 0) << ',' << e.recorded_steps << '\n';
  }
  return out.str();
}

std::vector<MethodScores> parse_scores_csv(std::string_view text) {
  std::vector<MethodScores> out;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.rfind("method,", 0) == 0) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string field;
    while (std::getline(ls, field, ',')) f.push_back(field);
    const std::string where = "line " + std::to_string(lineno);
    if (f.size() != 7) throw SchemaError(where, "expected 7 fields");
    ScoredEpisode e;
    e.task_id = f[1];
    e.scene = f[2];
    const auto cat = category_from_string(f[3]);
    if (!cat) throw SchemaError(where + "/category", "unknown category '" + f[3] + "'");
    e.category = *cat;
    try {
      e.gt_steps = std::stoi(f[4]);
      e.success = std::stoi(f[5]) != 0;
      e.recorded_steps = std::stoi(f[6]);
    } catch (const std::exception&) {
      throw SchemaError(where, "non-numeric field");
    }
    auto it = std::find_if(out.begin(), out.end(), [&](const MethodScores& m) { return m.method == f[0]; });
    if (it == out.end()) {
      out.push_back({f[0], {}});
      it = out.end() - 1;
    }
    it->episodes.push_back(std::move(e));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Running

bool planner_uses_backend(std::string_view planner) { return planner != "mcts"; }

std::unique_ptr<Planner> make_planner(const RunOptions& o, Backend* backend) {
  const bool known = std::find(std::begin(kPlannerNames), std::end(kPlannerNames), o.planner) != std::end(kPlannerNames);
  if (!known) throw DomainError("unknown planner '" + o.planner + "'");
  if (planner_uses_backend(o.planner) && !backend) throw DomainError("planner '" + o.planner + "' needs a backend");
  MctsParams mp;
  mp.iterations = o.mcts_iterations;
  mp.seed = o.seed;
  if (o.planner == "pefa") return std::make_unique<PefaPlanner>(*backend, PefaOptions{o.use_history});
  if (o.planner == "cmrs") return std::make_unique<CmrsPlanner>(*backend);
  if (o.planner == "dmrs1") return std::make_unique<DmrsPlanner>(*backend, 1);
  if (o.planner == "dmrs2") return std::make_unique<DmrsPlanner>(*backend, 2);
  if (o.planner == "mcts") return std::make_unique<MctsPlanner>(mp);
  return std::make_unique<MctsPlanner>(mp, backend);
}

namespace {

std::string script_planner_key(const RunOptions& o) { return o.planner; }

std::unique_ptr<Backend> make_backend(const SceneSpec& scene, const TaskSpec& task, const RunOptions& o, bool bench) {
  if (!planner_uses_backend(o.planner)) return nullptr;
  if (o.backend == "http") return std::make_unique<HttpBackend>(o.http);
  if (o.backend != "scripted") throw DomainError("unknown backend '" + o.backend + "'");
  if (o.script.empty()) {
    return std::make_unique<ScriptedBackend>(oracle_backend(scene, task, script_planner_key(o)));
  }
  const std::filesystem::path file = bench ? o.script / (task.id + ".json") : o.script;
  return std::make_unique<ScriptedBackend>(ScriptedBackend::load(file));
}

EpisodeResult run_with(const SceneSpec& scene, const TaskSpec& task, const RunOptions& o, Backend* backend) {
  auto planner = make_planner(o, backend);
  return run_episode(scene, task, *planner);
}

}  // namespace

EpisodeResult run_task(const SceneSpec& scene, const TaskSpec& task, const RunOptions& o, Backend* shared) {
  if (shared) return run_with(scene, task, o, shared);
  auto backend = make_backend(scene, task, o, false);
  return run_with(scene, task, o, backend.get());
}

BenchResult run_bench(std::span<const SuiteEntry> entries, const RunOptions& o, int workers) {
  if (entries.empty()) throw EmptyInput("no tasks selected");
  if (workers < 1) throw DomainError("workers must be >= 1");
  BenchResult bench;
  bench.method = o.planner == "pefa" && !o.use_history ? "pefa-no-history" : o.planner;
  bench.episodes.resize(entries.size());
  std::vector<std::exception_ptr> errors(entries.size());
  // One HTTP client serves every worker; scripted backends are per episode.
  std::unique_ptr<Backend> shared;
  if (o.backend == "http" && planner_uses_backend(o.planner)) shared = std::make_unique<HttpBackend>(o.http);

  const long n = static_cast<long>(entries.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(workers)
  for (long i = 0; i < n; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    try {
      const SuiteEntry& e = entries[idx];
      if (shared) {
        bench.episodes[idx] = run_with(*e.scene, *e.task, o, shared.get());
      } else {
        auto backend = make_backend(*e.scene, *e.task, o, true);
        bench.episodes[idx] = run_with(*e.scene, *e.task, o, backend.get());
      }
    } catch (...) {
      errors[idx] = std::current_exception();
    }
  }
  for (const auto& err : errors) {
    if (err) std::rethrow_exception(err);
  }
  for (std::size_t i = 0; i < entries.size(); ++i) {
    bench.episodes[i].planner = bench.method;
    bench.scores.push_back(score_episode(bench.episodes[i], *entries[i].task));
  }
  bench.table = aggregate(bench.scores, bench.method);
  return bench;
}

void write_bench_outputs(const BenchResult& bench, const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir / "traces", ec);
  if (ec) throw IoError("cannot create " + (out_dir / "traces").string() + ": " + ec.message());
  for (const EpisodeResult& ep : bench.episodes) {
    const auto path = out_dir / "traces" / (ep.task_id + "." + bench.method + ".jsonl");
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write " + path.string());
    write_trace(f, ep.trace);
  }
  {
    const auto path = out_dir / "scores.csv";
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write " + path.string());
    f << scores_csv(bench.method, bench.scores);
  }
  const MetricsTable tables[] = {bench.table};
  for (ReportFormat fmt : {ReportFormat::kPlain, ReportFormat::kCsv, ReportFormat::kMarkdown}) {
    emit_report(tables, fmt, out_dir / ("report." + std::string(extension(fmt))));
  }
}

}  // namespace coherent
