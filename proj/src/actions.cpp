#include "coherent/actions.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace coherent {

namespace {

constexpr std::array<std::pair<Verb, std::string_view>, 8> kVerbNames{{
    {Verb::kLandOn, "land_on"},
    {Verb::kMoveTowards, "movetowards"},
    {Verb::kTakeoffFrom, "takeoff_from"},
    {Verb::kOpen, "open"},
    {Verb::kClose, "close"},
    {Verb::kGrab, "grab"},
    {Verb::kPutInto, "putinto"},
    {Verb::kPutOn, "puton"},
}};

constexpr std::array<Verb, 3> kQuadrotorVerbs{Verb::kLandOn, Verb::kMoveTowards, Verb::kTakeoffFrom};
constexpr std::array<Verb, 6> kDogVerbs{Verb::kOpen, Verb::kClose, Verb::kGrab,
                                        Verb::kPutInto, Verb::kPutOn, Verb::kMoveTowards};
constexpr std::array<Verb, 5> kArmVerbs{Verb::kOpen, Verb::kClose, Verb::kGrab, Verb::kPutInto, Verb::kPutOn};

constexpr std::array<std::pair<FailureCode, std::string_view>, 8> kFailureNames{{
    {FailureCode::kNotNear, "NOT_NEAR"},
    {FailureCode::kHeightLimit, "HEIGHT_LIMIT"},
    {FailureCode::kHandsFull, "HANDS_FULL"},
    {FailureCode::kHandsEmpty, "HANDS_EMPTY"},
    {FailureCode::kClosedBlocking, "CLOSED_BLOCKING"},
    {FailureCode::kWrongKind, "WRONG_KIND"},
    {FailureCode::kNotSupportedByRobot, "NOT_SUPPORTED_BY_ROBOT"},
    {FailureCode::kPoseConflict, "POSE_CONFLICT"},
}};

bool is_surface(EntityKind k) { return k == EntityKind::kSurface || k == EntityKind::kFloor; }

std::string_view skip_ws(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  return s;
}

// Reads "<...>" at the front of `s`; returns the normalized id.
std::optional<std::string> take_angle(std::string_view& s) {
  s = skip_ws(s);
  if (s.empty() || s.front() != '<') return std::nullopt;
  const auto close = s.find('>');
  if (close == std::string_view::npos) return std::nullopt;
  std::string id = normalize_id(s.substr(1, close - 1));
  s.remove_prefix(close + 1);
  if (id.empty()) return std::nullopt;
  return id;
}

struct Ctx {
  const WorldState& state;
  const Scene& scene;
  int slot;
  const RobotInfo& info;
  const RobotState& rs;
  EntityIndex held;
};

bool carrier_airborne(const WorldState& state, EntityIndex container) {
  const EntityIndex carrier = state.scene().entity(container).carrier;
  if (carrier == kNoEntity) return false;
  return state.robot(state.scene().robot_slot(carrier)).pose == Pose::kAirborne;
}

bool basket_full(const WorldState& state, EntityIndex basket) {
  for (EntityIndex o : state.scene().objects()) {
    if (state.placement(o) == Placement{Predicate::kIn, basket}) return true;
  }
  return false;
}

ValidationOutcome validate_room_move(const Ctx& c, EntityIndex target) {
  if (target == c.rs.room) return ValidationOutcome::fail(FailureCode::kPoseConflict, "already inside " + c.scene.id(target));
  const auto doors = c.scene.doors_between(c.rs.room, target);
  if (doors.empty()) {
    return ValidationOutcome::fail(FailureCode::kNotNear, "no door connects " + c.scene.id(c.rs.room) + " and " + c.scene.id(target));
  }
  for (EntityIndex d : doors) {
    if (c.state.is_open(d)) return ValidationOutcome::ok();
  }
  return ValidationOutcome::fail(FailureCode::kClosedBlocking, c.scene.id(doors.front()) + " is closed");
}

ValidationOutcome validate_impl(const Ctx& c, const GroundAction& a) {
  const Scene& sc = c.scene;
  const WorldState& st = c.state;
  const std::string& robot_id = sc.id(c.info.entity);
  if (!supports(c.info.archetype, a.verb)) {
    return ValidationOutcome::fail(FailureCode::kNotSupportedByRobot,
                                   robot_id + " (" + std::string(to_string(c.info.archetype)) + ") cannot " +
                                       std::string(to_string(a.verb)));
  }
  const EntityIndex x = a.first;
  const EntityIndex y = a.second;
  const EntityKind xk = sc.kind(x);
  const std::string& xid = sc.id(x);
  switch (a.verb) {
    case Verb::kGrab: {
      if (xk != EntityKind::kObject) return ValidationOutcome::fail(FailureCode::kWrongKind, xid + " is not an object");
      if (c.held != kNoEntity) return ValidationOutcome::fail(FailureCode::kHandsFull, robot_id + " is already holding " + sc.id(c.held));
      const Placement p = st.placement(x);
      if (p.predicate == Predicate::kHeldBy) return ValidationOutcome::fail(FailureCode::kNotNear, xid + " is held by " + sc.id(p.host));
      if (!st.located_in(x, c.rs.room)) return ValidationOutcome::fail(FailureCode::kNotNear, xid + " is in another room");
      if (st.enclosed(x)) return ValidationOutcome::fail(FailureCode::kClosedBlocking, sc.id(p.host) + " is closed");
      if (p.predicate == Predicate::kIn && carrier_airborne(st, p.host)) {
        return ValidationOutcome::fail(FailureCode::kPoseConflict, sc.id(sc.entity(p.host).carrier) + " is airborne");
      }
      if (!st.reaches(c.slot, x)) return ValidationOutcome::fail(FailureCode::kNotNear, xid + " is not within " + robot_id + "'s manipulation range");
      return ValidationOutcome::ok();
    }
    case Verb::kPutOn: {
      if (xk != EntityKind::kObject) return ValidationOutcome::fail(FailureCode::kWrongKind, xid + " is not an object");
      if (!is_surface(sc.kind(y))) return ValidationOutcome::fail(FailureCode::kWrongKind, sc.id(y) + " is not a surface");
      if (c.held != x) return ValidationOutcome::fail(FailureCode::kHandsEmpty, robot_id + " is not holding " + xid);
      if (c.info.archetype == Archetype::kRoboticDog && sc.entity(y).height == Height::kHigh) {
        return ValidationOutcome::fail(FailureCode::kHeightLimit, sc.id(y) + " is a high surface beyond " + robot_id + "'s reach height");
      }
      if (!st.reaches(c.slot, y)) return ValidationOutcome::fail(FailureCode::kNotNear, sc.id(y) + " is not within " + robot_id + "'s manipulation range");
      return ValidationOutcome::ok();
    }
    case Verb::kPutInto: {
      if (xk != EntityKind::kObject) return ValidationOutcome::fail(FailureCode::kWrongKind, xid + " is not an object");
      if (sc.kind(y) != EntityKind::kContainer) return ValidationOutcome::fail(FailureCode::kWrongKind, sc.id(y) + " is not a container");
      if (c.held != x) return ValidationOutcome::fail(FailureCode::kHandsEmpty, robot_id + " is not holding " + xid);
      if (!st.located_in(y, c.rs.room)) return ValidationOutcome::fail(FailureCode::kNotNear, sc.id(y) + " is in another room");
      if (!st.is_open(y)) return ValidationOutcome::fail(FailureCode::kClosedBlocking, sc.id(y) + " is closed");
      if (carrier_airborne(st, y)) return ValidationOutcome::fail(FailureCode::kPoseConflict, sc.id(sc.entity(y).carrier) + " is airborne");
      if (sc.entity(y).carrier != kNoEntity && basket_full(st, y)) {
        return ValidationOutcome::fail(FailureCode::kHandsFull, sc.id(y) + " already carries an object");
      }
      if (!st.reaches(c.slot, y)) return ValidationOutcome::fail(FailureCode::kNotNear, sc.id(y) + " is not within " + robot_id + "'s manipulation range");
      return ValidationOutcome::ok();
    }
    case Verb::kOpen:
    case Verb::kClose: {
      const bool container = xk == EntityKind::kContainer && sc.entity(x).carrier == kNoEntity;
      const bool door = xk == EntityKind::kDoor && c.info.archetype == Archetype::kRoboticDog;
      if (!container && !door) return ValidationOutcome::fail(FailureCode::kWrongKind, xid + " cannot be opened or closed by " + robot_id);
      if (c.held != kNoEntity) return ValidationOutcome::fail(FailureCode::kHandsFull, robot_id + " is holding " + sc.id(c.held));
      if (!st.located_in(x, c.rs.room)) return ValidationOutcome::fail(FailureCode::kNotNear, xid + " is in another room");
      const bool want_open = a.verb == Verb::kOpen;
      if (st.is_open(x) == want_open) {
        return ValidationOutcome::fail(FailureCode::kPoseConflict, xid + (want_open ? " is already open" : " is already closed"));
      }
      if (!st.reaches(c.slot, x)) return ValidationOutcome::fail(FailureCode::kNotNear, xid + " is not within " + robot_id + "'s manipulation range");
      return ValidationOutcome::ok();
    }
    case Verb::kMoveTowards: {
      const bool quad = c.info.archetype == Archetype::kQuadrotor;
      if (quad && c.rs.pose == Pose::kGrounded) return ValidationOutcome::fail(FailureCode::kPoseConflict, robot_id + " must take off first");
      if (xk == EntityKind::kRoom) return validate_room_move(c, x);
      if (quad && !is_surface(xk)) return ValidationOutcome::fail(FailureCode::kWrongKind, xid + " is not a surface or room");
      if (xk == EntityKind::kRobot) return ValidationOutcome::fail(FailureCode::kWrongKind, "robots are not navigation targets");
      if (xk == EntityKind::kObject && st.placement(x).predicate == Predicate::kHeldBy) {
        return ValidationOutcome::fail(FailureCode::kWrongKind, xid + " is held by " + sc.id(st.placement(x).host));
      }
      if (!st.located_in(x, c.rs.room)) return ValidationOutcome::fail(FailureCode::kNotNear, xid + " is in another room");
      if (st.enclosed(x)) return ValidationOutcome::fail(FailureCode::kClosedBlocking, sc.id(st.placement(x).host) + " is closed");
      if (xk == EntityKind::kContainer && carrier_airborne(st, x)) {
        return ValidationOutcome::fail(FailureCode::kPoseConflict, sc.id(sc.entity(x).carrier) + " is airborne");
      }
      if (xk == EntityKind::kObject && st.placement(x).predicate == Predicate::kIn && carrier_airborne(st, st.placement(x).host)) {
        return ValidationOutcome::fail(FailureCode::kPoseConflict, xid + " is in flight");
      }
      if (c.rs.near != kNoEntity && st.spot_of(c.rs.near) == st.spot_of(x)) {
        return ValidationOutcome::fail(FailureCode::kPoseConflict, robot_id + " is already near " + xid);
      }
      return ValidationOutcome::ok();
    }
    case Verb::kLandOn: {
      if (!is_surface(xk)) return ValidationOutcome::fail(FailureCode::kWrongKind, xid + " is not a surface");
      if (c.rs.pose == Pose::kGrounded) return ValidationOutcome::fail(FailureCode::kPoseConflict, robot_id + " is already landed");
      if (!st.reaches(c.slot, x)) return ValidationOutcome::fail(FailureCode::kNotNear, robot_id + " is not near " + xid);
      return ValidationOutcome::ok();
    }
    case Verb::kTakeoffFrom: {
      if (!is_surface(xk)) return ValidationOutcome::fail(FailureCode::kWrongKind, xid + " is not a surface");
      if (c.rs.pose == Pose::kAirborne) return ValidationOutcome::fail(FailureCode::kPoseConflict, robot_id + " is already airborne");
      if (c.rs.landed_on != x) return ValidationOutcome::fail(FailureCode::kNotNear, robot_id + " is not resting on " + xid);
      return ValidationOutcome::ok();
    }
  }
  return ValidationOutcome::fail(FailureCode::kWrongKind, "unknown verb");
}

bool well_formed(const GroundAction& a) {
  return a.first != kNoEntity && ((arity(a.verb) == 2) == (a.second != kNoEntity));
}

}  // namespace

std::string_view to_string(Verb verb) {
  for (const auto& [v, name] : kVerbNames) {
    if (v == verb) return name;
  }
  return "?";
}

std::optional<Verb> verb_from_string(std::string_view text) {
  for (const auto& [v, name] : kVerbNames) {
    if (name == text) return v;
  }
  return std::nullopt;
}

std::span<const Verb> archetype_verbs(Archetype archetype) {
  switch (archetype) {
    case Archetype::kQuadrotor: return kQuadrotorVerbs;
    case Archetype::kRoboticDog: return kDogVerbs;
    case Archetype::kRoboticArm: return kArmVerbs;
  }
  return {};
}

bool supports(Archetype archetype, Verb verb) {
  const auto verbs = archetype_verbs(archetype);
  return std::find(verbs.begin(), verbs.end(), verb) != verbs.end();
}

std::string_view to_string(FailureCode code) {
  for (const auto& [c, name] : kFailureNames) {
    if (c == code) return name;
  }
  return "?";
}

std::optional<FailureCode> failure_code_from_string(std::string_view text) {
  for (const auto& [c, name] : kFailureNames) {
    if (name == text) return c;
  }
  return std::nullopt;
}

std::string Action::render() const {
  std::string out = "[";
  out += to_string(verb);
  out += "] <";
  out += args.empty() ? std::string() : args[0];
  out += '>';
  if (args.size() > 1) {
    out += verb == Verb::kPutOn ? " on <" : " into <";
    out += args[1];
    out += '>';
  }
  return out;
}

Action parse_action_any(std::string_view text) {
  std::string_view s = skip_ws(text);
  if (s.empty() || s.front() != '[') throw ParseError("action must start with [verb]: '" + std::string(text) + "'");
  const auto close = s.find(']');
  if (close == std::string_view::npos) throw ParseError("unterminated verb in '" + std::string(text) + "'");
  const std::string verb_text = normalize_id(s.substr(1, close - 1));
  const auto verb = verb_from_string(verb_text);
  if (!verb) throw ParseError("unknown verb '" + verb_text + "'");
  s.remove_prefix(close + 1);
  Action a;
  a.verb = *verb;
  auto first = take_angle(s);
  if (!first) throw ParseError("missing <argument> in '" + std::string(text) + "'");
  a.args.push_back(std::move(*first));
  s = skip_ws(s);
  if (arity(a.verb) == 2) {
    const std::string_view joiner = a.verb == Verb::kPutOn ? "on" : "into";
    if (s.substr(0, joiner.size()) != joiner) {
      throw ParseError("expected '" + std::string(joiner) + " <...>' in '" + std::string(text) + "'");
    }
    s.remove_prefix(joiner.size());
    auto second = take_angle(s);
    if (!second) throw ParseError("missing second <argument> in '" + std::string(text) + "'");
    a.args.push_back(std::move(*second));
    s = skip_ws(s);
  }
  if (!s.empty()) throw ParseError("trailing text after action in '" + std::string(text) + "'");
  return a;
}

Action parse_action(std::string_view text, Archetype archetype) {
  Action a = parse_action_any(text);
  if (!supports(archetype, a.verb)) {
    throw ParseError("verb '" + std::string(to_string(a.verb)) + "' not available to " + std::string(to_string(archetype)));
  }
  return a;
}

GroundAction ground(const Scene& scene, const Action& action) {
  if (static_cast<int>(action.args.size()) != arity(action.verb)) throw ParseError("wrong arity for " + action.render());
  GroundAction g{action.verb, scene.require(action.args[0]), kNoEntity};
  if (action.args.size() > 1) g.second = scene.require(action.args[1]);
  return g;
}

Action unground(const Scene& scene, const GroundAction& action) {
  Action a{action.verb, {scene.id(action.first)}};
  if (action.second != kNoEntity) a.args.push_back(scene.id(action.second));
  return a;
}

std::string render(const Scene& scene, const GroundAction& action) { return unground(scene, action).render(); }

ValidationOutcome validate(const WorldState& state, int robot_slot, const GroundAction& action) {
  if (!well_formed(action)) return ValidationOutcome::fail(FailureCode::kWrongKind, "malformed action");
  const Ctx c{state, state.scene(), robot_slot, state.scene().robot(robot_slot), state.robot(robot_slot),
              state.held_object(robot_slot)};
  return validate_impl(c, action);
}

ValidationOutcome validate(const WorldState& state, std::string_view robot, const Action& action) {
  const int slot = state.scene().require_robot(robot);
  return validate(state, slot, ground(state.scene(), action));
}

void apply_in_place(WorldState& state, int robot_slot, const GroundAction& a) {
  const Scene& sc = state.scene();
  const EntityIndex actor = sc.robot(robot_slot).entity;

  // Spots of every mobile NEAR target before the transition.
  constexpr std::size_t kInline = 8;
  std::array<EntityIndex, kInline> inline_spots{};
  std::vector<EntityIndex> heap_spots;
  if (sc.robots().size() > kInline) heap_spots.resize(sc.robots().size());
  const std::span<EntityIndex> spot_before = heap_spots.empty()
                                                 ? std::span<EntityIndex>(inline_spots.data(), sc.robots().size())
                                                 : std::span<EntityIndex>(heap_spots);
  std::fill(spot_before.begin(), spot_before.end(), kNoEntity);
  for (std::size_t s = 0; s < sc.robots().size(); ++s) {
    const EntityIndex n = state.robot(static_cast<int>(s)).near;
    if (n != kNoEntity) spot_before[s] = state.spot_of(n);
  }

  RobotState& rs = state.robot_mut(robot_slot);
  switch (a.verb) {
    case Verb::kGrab:
      state.set_placement(a.first, {Predicate::kHeldBy, actor});
      break;
    case Verb::kPutOn:
      state.set_placement(a.first, {Predicate::kOn, a.second});
      break;
    case Verb::kPutInto:
      state.set_placement(a.first, {Predicate::kIn, a.second});
      break;
    case Verb::kOpen:
      state.set_open(a.first, true);
      break;
    case Verb::kClose:
      state.set_open(a.first, false);
      break;
    case Verb::kMoveTowards:
      if (sc.kind(a.first) == EntityKind::kRoom) {
        rs.room = a.first;
        rs.near = kNoEntity;
      } else {
        rs.near = a.first;
      }
      break;
    case Verb::kLandOn:
      rs.pose = Pose::kGrounded;
      rs.landed_on = a.first;
      rs.near = a.first;
      break;
    case Verb::kTakeoffFrom:
      rs.pose = Pose::kAirborne;
      rs.landed_on = kNoEntity;
      rs.near = a.first;
      break;
  }

  for (std::size_t s = 0; s < sc.robots().size(); ++s) {
    const int slot = static_cast<int>(s);
    RobotState& other = state.robot_mut(slot);
    if (other.near == kNoEntity) continue;
    const bool self_moved = slot == robot_slot && (a.verb == Verb::kMoveTowards || a.verb == Verb::kLandOn ||
                                                   a.verb == Verb::kTakeoffFrom);
    if (self_moved) continue;
    if (state.enclosed(other.near)) {
      other.near = state.placement(other.near).host;
      continue;
    }
    if (state.spot_of(other.near) == spot_before[s]) continue;
    if (slot == robot_slot) {
      const EntityIndex stay = spot_before[s];
      other.near = (stay == kNoEntity || stay == actor || sc.kind(stay) == EntityKind::kRobot) ? kNoEntity : stay;
    } else {
      other.near = kNoEntity;
    }
  }
}

WorldState apply(const WorldState& state, int robot_slot, const GroundAction& action) {
  const ValidationOutcome v = validate(state, robot_slot, action);
  if (!v.executable) {
    throw PreconditionViolated(render(state.scene(), action) + ": " + std::string(to_string(*v.reason)) + " (" + v.detail + ")");
  }
  WorldState next = state;
  apply_in_place(next, robot_slot, action);
  return next;
}

WorldState apply(const WorldState& state, std::string_view robot, const Action& action) {
  const int slot = state.scene().require_robot(robot);
  return apply(state, slot, ground(state.scene(), action));
}

std::vector<GroundAction> feasible_ground_actions(const WorldState& st, int slot) {
  const Scene& sc = st.scene();
  const RobotInfo& info = sc.robot(slot);
  const RobotState& rs = st.robot(slot);
  const EntityIndex held = st.held_object(slot);
  const auto n = static_cast<EntityIndex>(sc.entities().size());
  std::vector<GroundAction> out;
  out.reserve(32);

  auto add_room_moves = [&] {
    for (EntityIndex d : sc.doors()) {
      if (!st.is_open(d)) continue;
      const auto& c = sc.entity(d).connects;
      const EntityIndex other = c[0] == rs.room ? c[1] : (c[1] == rs.room ? c[0] : kNoEntity);
      if (other == kNoEntity) continue;
      const GroundAction g{Verb::kMoveTowards, other, kNoEntity};
      if (std::find(out.begin(), out.end(), g) == out.end()) out.push_back(g);
    }
  };
  const EntityIndex near_spot = rs.near == kNoEntity ? kNoEntity : st.spot_of(rs.near);

  switch (info.archetype) {
    case Archetype::kQuadrotor:
      if (rs.pose == Pose::kGrounded) {
        out.push_back({Verb::kTakeoffFrom, rs.landed_on, kNoEntity});
        break;
      }
      if (rs.near != kNoEntity && is_surface(sc.kind(rs.near))) out.push_back({Verb::kLandOn, rs.near, kNoEntity});
      add_room_moves();
      for (EntityIndex e = 0; e < n; ++e) {
        if (is_surface(sc.kind(e)) && sc.entity(e).room == rs.room && e != near_spot) {
          out.push_back({Verb::kMoveTowards, e, kNoEntity});
        }
      }
      break;
    case Archetype::kRoboticDog:
    case Archetype::kRoboticArm: {
      const bool dog = info.archetype == Archetype::kRoboticDog;
      for (EntityIndex e = 0; e < n; ++e) {
        const Entity& ent = sc.entity(e);
        if (!st.located_in(e, rs.room)) continue;
        switch (ent.kind) {
          case EntityKind::kObject: {
            const Placement p = st.placement(e);
            if (p.predicate == Predicate::kHeldBy || st.enclosed(e)) break;
            const bool in_flight = p.predicate == Predicate::kIn && carrier_airborne(st, p.host);
            if (held == kNoEntity && !in_flight && st.reaches(slot, e)) out.push_back({Verb::kGrab, e, kNoEntity});
            if (dog && !in_flight && st.spot_of(e) != near_spot) out.push_back({Verb::kMoveTowards, e, kNoEntity});
            break;
          }
          case EntityKind::kSurface:
          case EntityKind::kFloor:
            if (held != kNoEntity && !(dog && ent.height == Height::kHigh) && st.reaches(slot, e)) {
              out.push_back({Verb::kPutOn, held, e});
            }
            if (dog && e != near_spot) out.push_back({Verb::kMoveTowards, e, kNoEntity});
            break;
          case EntityKind::kContainer: {
            const bool basket = ent.carrier != kNoEntity;
            const bool flying = basket && carrier_airborne(st, e);
            const bool reach = st.reaches(slot, e);
            if (held != kNoEntity && st.is_open(e) && !flying && reach && !(basket && basket_full(st, e))) {
              out.push_back({Verb::kPutInto, held, e});
            }
            if (!basket && held == kNoEntity && reach) out.push_back({st.is_open(e) ? Verb::kClose : Verb::kOpen, e, kNoEntity});
            if (dog && !flying && st.spot_of(e) != near_spot) out.push_back({Verb::kMoveTowards, e, kNoEntity});
            break;
          }
          case EntityKind::kDoor:
            if (!dog) break;
            if (held == kNoEntity && st.reaches(slot, e)) out.push_back({st.is_open(e) ? Verb::kClose : Verb::kOpen, e, kNoEntity});
            if (e != near_spot) out.push_back({Verb::kMoveTowards, e, kNoEntity});
            break;
          default:
            break;
        }
      }
      if (dog) add_room_moves();
      break;
    }
  }

  auto rank = [&sc](const GroundAction& g) { return sc.action_rank(static_cast<int>(g.verb), g.first, g.second); };
  std::sort(out.begin(), out.end(), [&](const GroundAction& a, const GroundAction& b) { return rank(a) < rank(b); });
  return out;
}

std::vector<Action> feasible_actions(const WorldState& state, std::string_view robot) {
  const int slot = state.scene().require_robot(robot);
  std::vector<Action> out;
  for (const GroundAction& g : feasible_ground_actions(state, slot)) out.push_back(unground(state.scene(), g));
  return out;
}

std::vector<GroundAction> all_grammatical_actions(const Scene& scene, int robot_slot) {
  const auto n = static_cast<EntityIndex>(scene.entities().size());
  std::vector<std::pair<std::string, GroundAction>> keyed;
  for (Verb v : archetype_verbs(scene.robot(robot_slot).archetype)) {
    for (EntityIndex a = 0; a < n; ++a) {
      if (arity(v) == 1) {
        const GroundAction g{v, a, kNoEntity};
        keyed.emplace_back(render(scene, g), g);
        continue;
      }
      for (EntityIndex b = 0; b < n; ++b) {
        const GroundAction g{v, a, b};
        keyed.emplace_back(render(scene, g), g);
      }
    }
  }
  std::sort(keyed.begin(), keyed.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
  std::vector<GroundAction> out;
  out.reserve(keyed.size());
  for (auto& [text, g] : keyed) out.push_back(g);
  return out;
}

}  // namespace coherent
