#include "coherent/pefa.hpp"

#include <algorithm>
#include <cctype>

#include "coherent/prompts.hpp"

namespace coherent {

std::string_view to_string(FeedbackKind kind) {
  switch (kind) {
    case FeedbackKind::kFailure: return "failure";
    case FeedbackKind::kSuccessPartial: return "success_partial";
    case FeedbackKind::kSuccessComplete: return "success_complete";
  }
  return "?";
}

std::string_view to_string(FailureSituation situation) {
  switch (situation) {
    case FailureSituation::kWrongStep: return "wrong_step";
    case FailureSituation::kWrongRobot: return "wrong_robot";
    case FailureSituation::kExecutionLimit: return "execution_limit";
  }
  return "?";
}

std::string Feedback::render() const {
  std::string out(to_string(kind));
  if (situation) out += "/" + std::string(to_string(*situation));
  if (!detail.empty()) out += ": " + detail;
  if (!progress.empty()) out += (detail.empty() ? ": " : " ") + progress;
  return out;
}

// ---------------------------------------------------------------------------
// Assigner side

AssignerContext make_assigner_context(const WorldState& state, const TaskSpec& task, bool use_history) {
  AssignerContext ctx;
  ctx.instruction = task.instruction;
  ctx.background = std::string(template_text("background"));
  while (!ctx.background.empty() && ctx.background.back() == '\n') ctx.background.pop_back();
  ctx.capabilities = capabilities_section(state.scene());
  ctx.notes = render_template("notes", {});
  ctx.observations = observations_section(state);
  ctx.robots = robot_ids(state.scene());
  ctx.use_history = use_history;
  return ctx;
}

std::string render_history(const AssignerContext& ctx) {
  if (!ctx.use_history || ctx.history.empty()) return "none";
  std::string out;
  for (const HistoryEntry& h : ctx.history) {
    if (!out.empty()) out += "\n\n";
    out += "[iteration " + std::to_string(h.iteration) + "]\n";
    out += "proposal:\n" + h.proposal + "\n";
    out += "dispatched: " + (h.assignment ? h.assignment->robot + ": " + h.assignment->subtask : std::string("nothing")) + "\n";
    out += "outcome: " + (h.outcome.empty() ? std::string("pending") : h.outcome) + "\n";
    out += "feedback: " + (h.feedback ? h.feedback->render() : std::string("pending"));
  }
  return out;
}

std::vector<ChatMessage> build_assigner_prompt(const AssignerContext& ctx) {
  const std::string system = render_template(
      "assigner_system", {{"background", ctx.background}, {"capabilities", ctx.capabilities}, {"notes", ctx.notes}});
  const std::string user = render_template("assigner_user", {{"observations", ctx.observations},
                                                             {"history", render_history(ctx)},
                                                             {"instruction", ctx.instruction}});
  return {{"system", system}, {"user", user}};
}

namespace {

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

void trim_history(AssignerContext& ctx) {
  while (ctx.history.size() > kHistoryWindow) ctx.history.pop_front();
}

}  // namespace

Proposal propose(AssignerContext& ctx, Backend& backend, int iteration) {
  Proposal p;
  std::vector<ChatMessage> messages = build_assigner_prompt(ctx);
  CompletionParams params;
  params.tag = "assigner";
  for (int attempt = 0; attempt <= kFormatRetries; ++attempt) {
    p.reply = backend.complete(messages, params);
    ++p.queries;
    try {
      // Numbered plans dispatch their first item; otherwise the last
      // well-formed line is taken.
      if (auto first = parse_first_numbered(p.reply, ctx.robots)) {
        p.assignment = std::move(first);
      } else {
        p.assignment = parse_assignment(p.reply, ctx.robots);
      }
      p.error.clear();
      break;
    } catch (const UnknownRobot& e) {
      p.error = e.what();
      break;  // well-formed but names nobody in the team; not a format issue
    } catch (const ParseError& e) {
      p.error = e.what();
      messages.push_back({"assistant", p.reply.empty() ? std::string("(empty reply)") : p.reply});
      messages.push_back({"user", render_template("assigner_reminder", {{"robots", join(ctx.robots, ", ")}})});
    }
  }
  HistoryEntry entry;
  entry.iteration = iteration;
  entry.proposal = p.reply;
  entry.assignment = p.assignment;
  ctx.history.push_back(std::move(entry));
  trim_history(ctx);
  return p;
}

void adjust(AssignerContext& ctx, const Feedback& feedback, std::string outcome, const WorldState& after) {
  if (!ctx.history.empty()) {
    ctx.history.back().feedback = feedback;
    ctx.history.back().outcome = std::move(outcome);
  }
  trim_history(ctx);
  ctx.observations = observations_section(after);
}

// ---------------------------------------------------------------------------
// Executor side

std::vector<ChatMessage> build_executor_prompt(const WorldState& state, const Assignment& a,
                                               std::span<const Action> feasible) {
  const Scene& sc = state.scene();
  const int slot = sc.require_robot(a.robot);
  const std::string system =
      render_template("executor_system", {{"robot", a.robot}, {"capability", capability_blurb(sc, slot)}});
  const std::string user = render_template("executor_user", {{"subtask", a.subtask},
                                                             {"observation", observation_section(state, slot)},
                                                             {"actions", action_list(feasible)}});
  return {{"system", system}, {"user", user}};
}

ExecutionResult execute_assigned(const WorldState& state, const Assignment& a, Backend& backend) {
  ExecutionResult r;
  r.feasible = feasible_actions(state, a.robot);
  std::vector<ChatMessage> messages = build_executor_prompt(state, a, r.feasible);
  CompletionParams params;
  params.tag = "executor:" + a.robot;
  for (int attempt = 0; attempt <= kFormatRetries; ++attempt) {
    r.reply = backend.complete(messages, params);
    ++r.queries;
    r.choice = parse_executor_choice(r.reply, r.feasible);
    if (!r.choice.unparseable()) break;
    messages.push_back({"assistant", r.reply.empty() ? std::string("(empty reply)") : r.reply});
    messages.push_back({"user", render_template("executor_reminder", {})});
  }
  return r;
}

// ---------------------------------------------------------------------------
// Reflection

namespace {

enum class Intent { kNone, kGrab, kPutOn, kPutInto, kOpen, kClose, kMove, kDeliver, kTakeoff, kLand };

bool has_word(const std::string& text, std::string_view word) {
  std::size_t pos = 0;
  while ((pos = text.find(word, pos)) != std::string::npos) {
    const std::size_t end = pos + word.size();
    const bool left = pos == 0 || !std::isalpha(static_cast<unsigned char>(text[pos - 1]));
    const bool right = end >= text.size() || !std::isalpha(static_cast<unsigned char>(text[end]));
    if (left && right) return true;
    pos = end;
  }
  return false;
}

bool has_any(const std::string& text, std::initializer_list<std::string_view> words) {
  return std::any_of(words.begin(), words.end(), [&](std::string_view w) { return has_word(text, w); });
}

Intent classify_intent(const std::string& subtask) {
  // Entity names in angle brackets never carry the verb.
  std::string t;
  int depth = 0;
  for (char c : subtask) {
    if (c == '<') ++depth;
    if (depth == 0) t.push_back(c);
    if (c == '>' && depth > 0) --depth;
  }
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
  std::replace(t.begin(), t.end(), '_', ' ');
  if (has_any(t, {"take off", "takeoff"})) return Intent::kTakeoff;
  if (has_any(t, {"land"})) return Intent::kLand;
  if (has_any(t, {"open"})) return Intent::kOpen;
  if (has_any(t, {"close", "shut"})) return Intent::kClose;
  if (has_any(t, {"give", "hand", "load"})) return Intent::kPutInto;
  if (has_any(t, {"put", "place", "drop", "set"})) {
    if (has_any(t, {"into", "in", "inside"})) return Intent::kPutInto;
    return Intent::kPutOn;
  }
  if (has_any(t, {"transport", "carry", "bring", "deliver"})) return Intent::kDeliver;
  if (has_any(t, {"pick up", "grab", "take", "fetch", "get"})) return Intent::kGrab;
  if (has_any(t, {"move", "go", "walk", "navigate", "approach", "fly", "head"})) return Intent::kMove;
  return Intent::kNone;
}

std::optional<Verb> primary_verb(Intent intent) {
  switch (intent) {
    case Intent::kGrab: return Verb::kGrab;
    case Intent::kPutOn: return Verb::kPutOn;
    case Intent::kPutInto: return Verb::kPutInto;
    case Intent::kOpen: return Verb::kOpen;
    case Intent::kClose: return Verb::kClose;
    case Intent::kMove:
    case Intent::kDeliver: return Verb::kMoveTowards;
    case Intent::kTakeoff: return Verb::kTakeoffFrom;
    case Intent::kLand: return Verb::kLandOn;
    case Intent::kNone: return std::nullopt;
  }
  return std::nullopt;
}

// Scene entities named in the subtask, in order of first mention. Longer
// ids win where names overlap ("dining_table" over "table").
std::vector<EntityIndex> mentioned_entities(const Scene& sc, const std::string& subtask) {
  const std::string text = normalize_id(subtask);
  std::vector<EntityIndex> ids;
  for (EntityIndex e = 0; e < static_cast<EntityIndex>(sc.entities().size()); ++e) ids.push_back(e);
  std::sort(ids.begin(), ids.end(), [&](EntityIndex a, EntityIndex b) {
    return sc.id(a).size() != sc.id(b).size() ? sc.id(a).size() > sc.id(b).size() : a < b;
  });
  std::vector<char> covered(text.size(), 0);
  std::vector<std::pair<std::size_t, EntityIndex>> hits;
  for (EntityIndex e : ids) {
    const std::string& id = sc.id(e);
    std::size_t pos = 0;
    while ((pos = text.find(id, pos)) != std::string::npos) {
      const std::size_t end = pos + id.size();
      const bool left = pos == 0 || !std::isalnum(static_cast<unsigned char>(text[pos - 1]));
      const bool right = end == text.size() ||
                         (!std::isalnum(static_cast<unsigned char>(text[end])) &&
                          !(text[end] == '_' && end + 1 < text.size() && std::isdigit(static_cast<unsigned char>(text[end + 1]))));
      const bool free = std::none_of(covered.begin() + static_cast<long>(pos), covered.begin() + static_cast<long>(end),
                                     [](char c) { return c != 0; });
      if (left && right && free) {
        std::fill(covered.begin() + static_cast<long>(pos), covered.begin() + static_cast<long>(end), 1);
        hits.emplace_back(pos, e);
      }
      pos = end;
    }
  }
  std::sort(hits.begin(), hits.end());
  std::vector<EntityIndex> out;
  for (const auto& [pos, e] : hits) {
    if (std::find(out.begin(), out.end(), e) == out.end()) out.push_back(e);
  }
  return out;
}

struct Reading {
  Intent intent = Intent::kNone;
  EntityIndex object = kNoEntity;  // first movable object mentioned
  EntityIndex target = kNoEntity;  // last non-object entity other than the actor
};

Reading read_subtask(const Scene& sc, int slot, const std::string& subtask) {
  Reading r;
  r.intent = classify_intent(subtask);
  const EntityIndex self = sc.robot(slot).entity;
  for (EntityIndex e : mentioned_entities(sc, subtask)) {
    if (e == self) continue;
    if (sc.kind(e) == EntityKind::kObject) {
      if (r.object == kNoEntity) r.object = e;
    } else {
      r.target = e;
    }
  }
  // "give it to <quadrotor>" means its basket.
  if (r.target != kNoEntity && sc.kind(r.target) == EntityKind::kRobot) {
    const int other = sc.robot_slot(r.target);
    if (r.intent == Intent::kPutInto && sc.robot(other).basket != kNoEntity) r.target = sc.robot(other).basket;
  }
  return r;
}

// The action the subtask most plausibly asks for; used to explain a wait.
std::optional<Action> intended_action(const WorldState& st, int slot, const Reading& r) {
  const Scene& sc = st.scene();
  auto id = [&](EntityIndex e) { return sc.id(e); };
  switch (r.intent) {
    case Intent::kGrab:
      if (r.object != kNoEntity) return Action{Verb::kGrab, {id(r.object)}};
      break;
    case Intent::kPutOn:
    case Intent::kPutInto: {
      EntityIndex obj = r.object != kNoEntity ? r.object : st.held_object(slot);
      if (obj != kNoEntity && r.target != kNoEntity) {
        return Action{r.intent == Intent::kPutOn ? Verb::kPutOn : Verb::kPutInto, {id(obj), id(r.target)}};
      }
      break;
    }
    case Intent::kOpen:
    case Intent::kClose:
      if (r.target != kNoEntity) return Action{r.intent == Intent::kOpen ? Verb::kOpen : Verb::kClose, {id(r.target)}};
      break;
    case Intent::kMove:
    case Intent::kDeliver:
      if (r.target != kNoEntity) return Action{Verb::kMoveTowards, {id(r.target)}};
      if (r.object != kNoEntity) return Action{Verb::kMoveTowards, {id(r.object)}};
      break;
    case Intent::kTakeoff: {
      const EntityIndex s = st.robot(slot).landed_on;
      if (s != kNoEntity) return Action{Verb::kTakeoffFrom, {id(s)}};
      if (r.target != kNoEntity) return Action{Verb::kTakeoffFrom, {id(r.target)}};
      break;
    }
    case Intent::kLand:
      if (r.target != kNoEntity) return Action{Verb::kLandOn, {id(r.target)}};
      break;
    case Intent::kNone:
      break;
  }
  return std::nullopt;
}

// nullopt: no checkable completion condition.
std::optional<bool> subtask_done(const WorldState& st, int slot, const Reading& r) {
  const Scene& sc = st.scene();
  const EntityIndex self = sc.robot(slot).entity;
  switch (r.intent) {
    case Intent::kGrab:
      if (r.object == kNoEntity) return std::nullopt;
      return st.holds(Predicate::kHeldBy, r.object, self);
    case Intent::kPutOn:
      if (r.object == kNoEntity || r.target == kNoEntity) return std::nullopt;
      return st.holds(Predicate::kOn, r.object, r.target);
    case Intent::kPutInto:
      if (r.object == kNoEntity || r.target == kNoEntity) return std::nullopt;
      return st.holds(Predicate::kIn, r.object, r.target);
    case Intent::kOpen:
      if (r.target == kNoEntity) return std::nullopt;
      return st.is_open(r.target);
    case Intent::kClose:
      if (r.target == kNoEntity) return std::nullopt;
      return !st.is_open(r.target);
    case Intent::kMove:
      if (r.target == kNoEntity) return std::nullopt;
      if (sc.kind(r.target) == EntityKind::kRoom) return st.robot(slot).room == r.target;
      return st.holds(Predicate::kNear, self, r.target) || st.holds(Predicate::kOn, self, r.target);
    case Intent::kDeliver:
      if (r.object == kNoEntity || r.target == kNoEntity) return std::nullopt;
      if (sc.kind(r.target) == EntityKind::kRoom) return st.room_of(r.object) == r.target;
      return st.spot_of(r.object) == st.spot_of(r.target);
    case Intent::kTakeoff:
      return st.robot(slot).pose == Pose::kAirborne;
    case Intent::kLand:
      if (r.target == kNoEntity) return st.robot(slot).pose == Pose::kGrounded;
      return st.holds(Predicate::kOn, self, r.target);
    case Intent::kNone:
      return std::nullopt;
  }
  return std::nullopt;
}

Feedback failure(FailureSituation s, std::string detail) {
  Feedback f;
  f.kind = FeedbackKind::kFailure;
  f.situation = s;
  f.detail = std::move(detail);
  return f;
}

Feedback classify_rejection(const Scene& sc, int slot, const std::string& robot, const Action& action,
                            const ValidationOutcome& v) {
  const std::string what = robot + " cannot " + action.render() + ": " + v.detail;
  const FailureCode code = v.reason.value_or(FailureCode::kWrongKind);
  if (code == FailureCode::kNotSupportedByRobot) {
    return failure(FailureSituation::kWrongRobot, what + ". It lacks this capability; assign a different type of robot.");
  }
  if (code == FailureCode::kHeightLimit) {
    return failure(FailureSituation::kExecutionLimit, what + ". The surface is too high for it (height limit).");
  }
  if (code == FailureCode::kClosedBlocking && !supports(sc.robot(slot).archetype, Verb::kOpen)) {
    return failure(FailureSituation::kExecutionLimit, what + ". It cannot open the way itself; another robot must open it first.");
  }
  return failure(FailureSituation::kWrongStep, what + " (" + std::string(to_string(code)) + "). Another step is needed first.");
}

}  // namespace

Feedback reflect(const Assignment& a, const ExecutionResult& ex, const std::optional<ValidationOutcome>& validation,
                 const WorldState& before, const WorldState& after) {
  const Scene& sc = before.scene();
  const int slot = sc.require_robot(a.robot);
  const Archetype arch = sc.robot(slot).archetype;
  const Reading reading = read_subtask(sc, slot, a.subtask);

  if (validation && validation->executable) {
    Feedback f;
    const auto done = subtask_done(after, slot, reading);
    const std::string act = ex.choice.action ? ex.choice.action->render() : std::string("an action");
    if (!done || *done) {
      f.kind = FeedbackKind::kSuccessComplete;
      f.progress = a.robot + " executed " + act + "; the subtask is complete.";
    } else {
      f.kind = FeedbackKind::kSuccessPartial;
      f.progress = a.robot + " executed " + act + "; further actions are required to finish the subtask.";
    }
    return f;
  }

  // Asking a robot for something its type never does is the assigner's error,
  // whatever the executor replied.
  if (const auto verb = primary_verb(reading.intent); verb && !supports(arch, *verb)) {
    return failure(FailureSituation::kWrongRobot, a.robot + " (" + std::string(to_string(arch)) + ") cannot " +
                                                      std::string(to_string(*verb)) +
                                                      "; the subtask needs a different type of robot.");
  }
  if (reading.intent == Intent::kOpen || reading.intent == Intent::kClose) {
    if (reading.target != kNoEntity && sc.kind(reading.target) == EntityKind::kDoor && arch != Archetype::kRoboticDog) {
      return failure(FailureSituation::kWrongRobot,
                     a.robot + " cannot operate doors; the subtask needs a different type of robot.");
    }
  }
  if (validation && ex.submitted()) return classify_rejection(sc, slot, a.robot, *ex.submitted(), *validation);

  // The executor waited: explain with the action the subtask asked for.
  if (const auto intended = intended_action(before, slot, reading)) {
    ValidationOutcome v;
    try {
      v = validate(before, a.robot, *intended);
    } catch (const Error& e) {
      v = ValidationOutcome::fail(FailureCode::kWrongKind, e.what());
    }
    if (!v.executable) return classify_rejection(sc, slot, a.robot, *intended, v);
  }
  return failure(FailureSituation::kWrongStep,
                 a.robot + " found no executable action for '" + a.subtask + "' and waited.");
}

Feedback proposal_failure_feedback(const Proposal& p) {
  if (p.error.rfind("unknown robot", 0) == 0) {
    return failure(FailureSituation::kWrongRobot, p.error + "; assign one of the listed robots.");
  }
  return failure(FailureSituation::kWrongStep,
                 "the proposal could not be parsed (" + p.error + "); reply with '<robot>: subtask'.");
}

// ---------------------------------------------------------------------------
// Planner

void PefaPlanner::begin(const WorldState& initial, const TaskSpec& task) {
  ctx_ = make_assigner_context(initial, task, options_.use_history);
  proposal_ = {};
  execution_.reset();
  feedback_log_.clear();
  prompts_.clear();
}

Decision PefaPlanner::decide(const WorldState& state, std::span<const TransitionRecord> history) {
  const int iteration = static_cast<int>(history.size()) + 1;
  ctx_.observations = observations_section(state);
  prompts_.push_back(build_assigner_prompt(ctx_));
  proposal_ = propose(ctx_, backend_, iteration);
  execution_.reset();
  if (!proposal_.assignment) return Decision{std::nullopt, std::nullopt, "proposal rejected: " + proposal_.error};

  const Assignment& a = *proposal_.assignment;
  execution_ = execute_assigned(state, a, backend_);
  Decision d;
  d.robot = a.robot;
  d.action = execution_->submitted();
  d.note = "assign " + a.robot + ": " + a.subtask;
  return d;
}

void PefaPlanner::observe(TransitionRecord& record, const WorldState& before, const WorldState& after) {
  Feedback fb;
  std::string outcome;
  if (!proposal_.assignment) {
    fb = proposal_failure_feedback(proposal_);
    outcome = "no assignment";
  } else {
    fb = reflect(*proposal_.assignment, *execution_, record.validation, before, after);
    if (record.action) {
      outcome = (record.executed() ? "executed " : "attempted ") + record.action->render();
    } else {
      outcome = "waited";
    }
  }
  adjust(ctx_, fb, outcome, after);
  feedback_log_.push_back(fb);
  if (!record.note.empty()) record.note += " | ";
  record.note += "feedback " + fb.render();
}

PefaEpisode run_pefa(const SceneSpec& scene, const TaskSpec& task, Backend& backend, int budget, PefaOptions options) {
  PefaPlanner planner(backend, options);
  PefaEpisode ep;
  ep.result = run_episode(scene, task, planner, budget);
  ep.feedback = planner.feedback_log();
  return ep;
}

}  // namespace coherent
