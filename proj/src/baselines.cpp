#include "coherent/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <regex>
#include <sstream>

#include "coherent/prompts.hpp"

namespace coherent {

namespace {

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::string one_line(std::string_view text) {
  std::string out;
  bool space = false;
  for (char c : text) {
    if (c == '\n' || c == '\r' || c == '\t') c = ' ';
    if (c == ' ') {
      if (!space && !out.empty()) out.push_back(' ');
      space = true;
    } else {
      out.push_back(c);
      space = false;
    }
  }
  while (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

struct Conclusion {
  std::optional<RobotAction> robot_action;
  bool unknown_robot = false;
  int queries = 0;
};

// Shared by CMRS and the DMRS summary: one `robot: [verb] <args>` line, with
// format reminders when the reply holds no action at all.
Conclusion query_robot_action(Backend& backend, std::vector<ChatMessage> messages, const std::string& tag,
                              const std::vector<std::string>& robots) {
  Conclusion c;
  CompletionParams params;
  params.tag = tag;
  for (int attempt = 0; attempt <= kFormatRetries; ++attempt) {
    const std::string reply = backend.complete(messages, params);
    ++c.queries;
    c.robot_action = parse_robot_action(reply, robots);
    if (c.robot_action) return c;
    if (!scan_actions(reply).empty()) {
      c.unknown_robot = true;
      return c;
    }
    messages.push_back({"assistant", reply.empty() ? std::string("(empty reply)") : reply});
    messages.push_back({"user", render_template("cmrs_reminder", {{"robots", join(robots, ", ")}})});
  }
  return c;
}

Decision to_decision(const Conclusion& c, std::string note) {
  Decision d;
  if (c.robot_action) {
    d.robot = c.robot_action->robot;
    d.action = c.robot_action->action;
  } else {
    note += c.unknown_robot ? "no-op: reply names no robot of this team" : "no-op: unparseable reply";
  }
  d.note = std::move(note);
  return d;
}

}  // namespace

// ---------------------------------------------------------------------------
// CMRS

void CmrsPlanner::begin(const WorldState& initial, const TaskSpec& task) {
  instruction_ = task.instruction;
  robots_ = robot_ids(initial.scene());
}

std::vector<ChatMessage> CmrsPlanner::build_prompt(const WorldState& state) const {
  const Scene& sc = state.scene();
  std::string sections;
  for (int slot = 0; slot < static_cast<int>(sc.robots().size()); ++slot) {
    if (slot) sections += "\n\n";
    const auto feasible = feasible_actions(state, sc.id(sc.robot(slot).entity));
    sections += observation_section(state, slot) + "\nExecutable actions of " + sc.id(sc.robot(slot).entity) + ":\n" +
                action_list(feasible);
  }
  const std::string system = render_template("cmrs_system", {{"background", std::string(template_text("background"))},
                                                             {"capabilities", capabilities_section(sc)},
                                                             {"notes", render_template("notes", {})}});
  const std::string user = render_template("cmrs_user", {{"instruction", instruction_}, {"robot_sections", sections}});
  return {{"system", system}, {"user", user}};
}

Decision CmrsPlanner::decide(const WorldState& state, std::span<const TransitionRecord>) {
  return to_decision(query_robot_action(backend_, build_prompt(state), "cmrs", robots_), "");
}

EpisodeResult run_cmrs(const SceneSpec& scene, const TaskSpec& task, Backend& backend, int budget) {
  CmrsPlanner planner(backend);
  return run_episode(scene, task, planner, budget);
}

// ---------------------------------------------------------------------------
// DMRS

DmrsPlanner::DmrsPlanner(Backend& backend, int rounds) : backend_(backend), rounds_(rounds) {
  if (rounds != 1 && rounds != 2) throw DomainError("dialogue rounds must be 1 or 2");
}

void DmrsPlanner::begin(const WorldState& initial, const TaskSpec& task) {
  if (initial.scene().robots().size() < 2) throw DomainError("dialogue planners need at least two robots");
  instruction_ = task.instruction;
  robots_ = robot_ids(initial.scene());
  dialogue_.clear();
  seen_digests_ = {initial.digest()};
}

Decision DmrsPlanner::decide(const WorldState& state, std::span<const TransitionRecord>) {
  const Scene& sc = state.scene();
  dialogue_.clear();
  for (int round = 0; round < rounds_; ++round) {
    for (int slot = 0; slot < static_cast<int>(robots_.size()); ++slot) {
      const std::string& me = robots_[static_cast<std::size_t>(slot)];
      std::vector<std::string> others;
      for (const auto& r : robots_) {
        if (r != me) others.push_back(r);
      }
      const auto feasible = feasible_actions(state, me);
      const std::string prompt = render_template(
          "dmrs_speaker", {{"robot", me},
                           {"others", join(others, ", ")},
                           {"capability", capability_blurb(sc, slot)},
                           {"instruction", instruction_},
                           {"observation", observation_section(state, slot)},
                           {"actions", action_list(feasible)},
                           {"dialogue", dialogue_.empty() ? std::string("(nobody has spoken yet)") : join(dialogue_, "\n")}});
      CompletionParams params;
      params.tag = "dmrs:" + me;
      const std::string reply = backend_.complete({{"user", prompt}}, params);
      dialogue_.push_back(me + ": " + one_line(reply));
    }
  }
  const std::string& last = robots_.back();
  const std::string summary = render_template(
      "dmrs_summary", {{"robot", last}, {"instruction", instruction_}, {"dialogue", join(dialogue_, "\n")}});
  const Conclusion c = query_robot_action(backend_, {{"user", summary}}, "dmrs:summary", robots_);

  std::string note = "dialogue " + std::to_string(dialogue_.size()) + " utterances";
  if (c.robot_action) {
    const int slot = sc.require_robot(c.robot_action->robot);
    if (!supports(sc.robot(slot).archetype, c.robot_action->action.verb)) {
      note += "; " + std::string(kTagCapability);
    } else {
      const auto feasible = feasible_actions(state, c.robot_action->robot);
      if (std::find(feasible.begin(), feasible.end(), c.robot_action->action) == feasible.end()) {
        note += "; " + std::string(kTagHallucination);
      }
    }
  }
  return to_decision(c, note + (c.robot_action ? "" : "; "));
}

void DmrsPlanner::observe(TransitionRecord& record, const WorldState&, const WorldState& after) {
  if (!record.executed()) return;
  if (!seen_digests_.insert(after.digest()).second) {
    record.note += "; " + std::string(kTagCycle);
  }
}

EpisodeResult run_dmrs(const SceneSpec& scene, const TaskSpec& task, Backend& backend, int rounds, int budget) {
  DmrsPlanner planner(backend, rounds);
  return run_episode(scene, task, planner, budget);
}

// ---------------------------------------------------------------------------
// MCTS

std::vector<Move> joint_moves(const WorldState& state) {
  const Scene& sc = state.scene();
  std::vector<Move> moves;
  for (int slot = 0; slot < static_cast<int>(sc.robots().size()); ++slot) {
    const std::string prefix = sc.id(sc.robot(slot).entity) + ": ";
    for (const GroundAction& g : feasible_ground_actions(state, slot)) {
      moves.push_back(Move{slot, g, prefix + render(sc, g)});
    }
  }
  std::sort(moves.begin(), moves.end(), [](const Move& a, const Move& b) { return a.text < b.text; });
  return moves;
}

std::vector<double> UniformPrior::priors(const WorldState&, const std::vector<Move>& moves) {
  if (moves.empty()) return {};
  return std::vector<double>(moves.size(), 1.0 / static_cast<double>(moves.size()));
}

std::optional<std::vector<double>> parse_prior_reply(std::string_view reply, const std::vector<Move>& moves,
                                                     std::span<const std::string> robots) {
  static const std::regex line_re(R"(^(.*\S)\s*[=:]\s*([0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?)\s*$)");
  std::vector<double> weight(moves.size(), 0.0);
  std::vector<char> listed(moves.size(), 0);
  std::istringstream in{std::string(reply)};
  std::string line;
  bool any = false;
  while (std::getline(in, line)) {
    std::smatch m;
    if (!std::regex_match(line, m, line_re)) continue;
    const auto ra = parse_robot_action(m[1].str(), robots);
    if (!ra) continue;
    const std::string key = ra->robot + ": " + ra->action.render();
    const auto it = std::lower_bound(moves.begin(), moves.end(), key, [](const Move& mv, const std::string& k) { return mv.text < k; });
    if (it == moves.end() || it->text != key) continue;
    const double w = std::stod(m[2].str());
    if (!std::isfinite(w) || w < 0) continue;
    const auto i = static_cast<std::size_t>(it - moves.begin());
    weight[i] += w;
    listed[i] = 1;
    any = true;
  }
  if (!any) return std::nullopt;
  double listed_sum = 0;
  std::size_t unlisted = 0;
  for (std::size_t i = 0; i < moves.size(); ++i) {
    if (listed[i]) listed_sum += weight[i];
    else ++unlisted;
  }
  const double residual = std::max(0.0, 1.0 - listed_sum);
  if (unlisted > 0) {
    for (std::size_t i = 0; i < moves.size(); ++i) {
      if (!listed[i]) weight[i] = residual / static_cast<double>(unlisted);
    }
  }
  double total = 0;
  for (double w : weight) total += w;
  if (!(total > 0)) return std::nullopt;
  for (double& w : weight) w /= total;
  return weight;
}

std::vector<double> LlmPrior::priors(const WorldState& state, const std::vector<Move>& moves) {
  const std::string digest = state.digest();
  if (const auto it = cache_.find(digest); it != cache_.end() && it->second.size() == moves.size()) return it->second;

  std::vector<double> result;
  std::vector<std::string> texts;
  for (const Move& m : moves) texts.push_back(m.text);
  const std::string prompt = render_template("llm_mcts_prior", {{"instruction", instruction_},
                                                                {"state", render_relations(state.relations())},
                                                                {"moves", join(texts, "\n")}});
  CompletionParams params;
  params.tag = "prior";
  ++queries_;
  try {
    const std::string reply = backend_.complete({{"user", prompt}}, params);
    if (auto parsed = parse_prior_reply(reply, moves, robot_ids(state.scene()))) result = std::move(*parsed);
  } catch (const Error&) {
    // Unreachable endpoint or exhausted script: this node searches uninformed.
  }
  if (result.empty()) {
    ++fallbacks_;
    result = UniformPrior{}.priors(state, moves);
  }
  cache_[digest] = result;
  return result;
}

namespace {

class Search {
 public:
  Search(std::span<const CompiledRelation> goal, const MctsParams& p, PriorSource& priors, bool puct)
      : goal_(goal), p_(p), priors_(priors), puct_(puct), rng_(p.seed) {}

  void expand(MctsNode& node) {
    node.expanded = true;
    node.moves = joint_moves(node.state);
    node.priors = priors_.priors(node.state, node.moves);
    node.children.clear();
    node.children.reserve(node.moves.size());
    for (const Move& m : node.moves) {
      auto child = std::make_unique<MctsNode>();
      child->state = node.state;
      apply_in_place(child->state, m.robot_slot, m.action);
      child->terminal = goal_satisfied(child->state, goal_);
      node.children.push_back(std::move(child));
    }
  }

  // Uniformly random play from `state` (at `depth` plies below the root).
  double rollout(const WorldState& start, int depth) {
    WorldState s = start;
    std::vector<std::pair<int, GroundAction>> moves;
    while (depth < p_.rollout_depth) {
      moves.clear();
      for (int slot = 0; slot < static_cast<int>(s.scene().robots().size()); ++slot) {
        for (const GroundAction& g : feasible_ground_actions(s, slot)) moves.emplace_back(slot, g);
      }
      if (moves.empty()) break;
      std::uniform_int_distribution<std::size_t> pick(0, moves.size() - 1);
      const auto& [slot, g] = moves[pick(rng_)];
      apply_in_place(s, slot, g);
      ++depth;
      if (goal_satisfied(s, goal_)) return reward(depth);
    }
    return 0.0;
  }

  double reward(int depth) const { return std::pow(p_.discount, depth - 1); }

  std::size_t select(const MctsNode& node) const { return puct_ ? select_puct(node) : select_ucb1(node); }

  // UCB1: unvisited children first (in move order), then Q + c * sqrt(ln N / n).
  std::size_t select_ucb1(const MctsNode& node) const {
    const double log_n = std::log(static_cast<double>(node.visits));
    std::size_t best = 0;
    double best_score = -1.0;
    for (std::size_t i = 0; i < node.children.size(); ++i) {
      const MctsNode& c = *node.children[i];
      if (c.visits == 0) return i;
      const double score = c.mean() + p_.c_uct * std::sqrt(log_n / static_cast<double>(c.visits));
      if (score > best_score) {
        best_score = score;
        best = i;
      }
    }
    return best;
  }

  std::size_t select_puct(const MctsNode& node) const {
    const double sqrt_n = std::sqrt(static_cast<double>(node.visits));
    std::size_t best = 0;
    double best_score = -1.0;
    for (std::size_t i = 0; i < node.children.size(); ++i) {
      const MctsNode& c = *node.children[i];
      const double score = c.mean() + p_.c_puct * node.priors[i] * sqrt_n / (1.0 + static_cast<double>(c.visits));
      if (score > best_score) {  // strict: earlier (lexicographically smaller) moves win ties
        best_score = score;
        best = i;
      }
    }
    return best;
  }

  void iterate(MctsNode& root) {
    std::vector<MctsNode*> path{&root};
    MctsNode* node = &root;
    int depth = 0;
    while (node->expanded && !node->terminal && !node->children.empty()) {
      node = node->children[select(*node)].get();
      path.push_back(node);
      ++depth;
    }
    double value = 0.0;
    if (node->terminal) {
      value = reward(depth);
    } else {
      if (!node->expanded && depth < p_.rollout_depth) expand(*node);
      value = rollout(node->state, depth);
    }
    ++node->rollouts;
    for (MctsNode* n : path) {
      ++n->visits;
      n->value += value;
    }
  }

 private:
  std::span<const CompiledRelation> goal_;
  const MctsParams& p_;
  PriorSource& priors_;
  bool puct_;
  std::mt19937_64 rng_;
};

MctsResult run_search(const WorldState& state, std::span<const CompiledRelation> goal, const MctsParams& params,
                      PriorSource& priors, bool puct) {
  if (params.iterations < 1) throw DomainError("MCTS needs at least one iteration");
  if (params.rollout_depth < 1) throw DomainError("MCTS rollout depth must be >= 1");
  Search search(goal, params, priors, puct);
  auto root = std::make_unique<MctsNode>();
  root->state = state;
  root->terminal = goal_satisfied(state, goal);
  search.expand(*root);
  if (root->moves.empty()) throw DomainError("no robot has a feasible action");
  for (int i = 0; i < params.iterations; ++i) search.iterate(*root);

  std::size_t best = 0;
  for (std::size_t i = 1; i < root->children.size(); ++i) {
    if (root->children[i]->visits > root->children[best]->visits) best = i;
  }
  MctsResult result;
  result.move = root->moves[best];
  result.root = std::move(root);
  return result;
}

}  // namespace

MctsResult mcts_search(const WorldState& state, std::span<const CompiledRelation> goal, const MctsParams& params,
                       PriorSource& priors) {
  return run_search(state, goal, params, priors, true);
}

MctsResult mcts_search(const WorldState& state, std::span<const CompiledRelation> goal, const MctsParams& params) {
  UniformPrior uniform;
  return run_search(state, goal, params, uniform, false);
}

MctsResult llm_mcts_search(const WorldState& state, std::span<const CompiledRelation> goal, Backend& backend,
                           const std::string& instruction, const MctsParams& params) {
  LlmPrior prior(backend, instruction);
  return mcts_search(state, goal, params, prior);
}

void MctsPlanner::begin(const WorldState& initial, const TaskSpec& task) {
  goal_ = compile_goal(initial.scene(), task.goal);
  rollout_depth_ = params_.rollout_depth > 0 ? params_.rollout_depth : 2 * task.gt_steps;
  if (backend_) prior_ = std::make_unique<LlmPrior>(*backend_, task.instruction);
  else prior_.reset();
}

Decision MctsPlanner::decide(const WorldState& state, std::span<const TransitionRecord> history) {
  if (joint_moves(state).empty()) return Decision{std::nullopt, std::nullopt, "no feasible move"};
  MctsParams p = params_;
  p.rollout_depth = rollout_depth_;
  // A distinct but reproducible stream per decision.
  p.seed = params_.seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(history.size()) + 1;
  const MctsResult r = prior_ ? mcts_search(state, goal_, p, *prior_) : mcts_search(state, goal_, p);
  const Scene& sc = state.scene();
  Decision d;
  d.robot = sc.id(sc.robot(r.move.robot_slot).entity);
  d.action = unground(sc, r.move.action);
  d.note = "visits " + std::to_string(r.root->children.empty() ? 0 : r.root->visits);
  return d;
}

}  // namespace coherent
