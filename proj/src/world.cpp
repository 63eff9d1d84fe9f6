#include "coherent/world.hpp"

#include "coherent/actions.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <set>
#include <utility>

namespace coherent {

namespace {

constexpr std::array<std::pair<Predicate, std::string_view>, 8> kPredicateNames{{
    {Predicate::kOn, "ON"},
    {Predicate::kIn, "IN"},
    {Predicate::kHeldBy, "HELD_BY"},
    {Predicate::kNear, "NEAR"},
    {Predicate::kInsideRoom, "INSIDE_ROOM"},
    {Predicate::kConnects, "CONNECTS"},
    {Predicate::kOpen, "OPEN"},
    {Predicate::kClosed, "CLOSED"},
}};

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool is_fixture(EntityKind k) {
  return k == EntityKind::kSurface || k == EntityKind::kFloor || k == EntityKind::kContainer;
}

bool is_placeable_surface(EntityKind k) { return k == EntityKind::kSurface || k == EntityKind::kFloor; }

}  // namespace

std::string_view to_string(EntityKind kind) {
  switch (kind) {
    case EntityKind::kObject: return "object";
    case EntityKind::kSurface: return "surface";
    case EntityKind::kContainer: return "container";
    case EntityKind::kDoor: return "door";
    case EntityKind::kFloor: return "floor";
    case EntityKind::kRoom: return "room";
    case EntityKind::kRobot: return "robot";
  }
  return "?";
}

std::string_view to_string(Predicate predicate) {
  for (const auto& [p, name] : kPredicateNames) {
    if (p == predicate) return name;
  }
  return "?";
}

std::string_view to_string(Archetype archetype) {
  switch (archetype) {
    case Archetype::kQuadrotor: return "quadrotor";
    case Archetype::kRoboticDog: return "robotic_dog";
    case Archetype::kRoboticArm: return "robotic_arm";
  }
  return "?";
}

std::optional<Predicate> predicate_from_string(std::string_view text) {
  for (const auto& [p, name] : kPredicateNames) {
    if (name == text) return p;
  }
  return std::nullopt;
}

std::optional<Archetype> archetype_from_string(std::string_view text) {
  const std::string norm = normalize_id(text);
  if (norm == "quadrotor") return Archetype::kQuadrotor;
  if (norm == "robotic_dog") return Archetype::kRoboticDog;
  if (norm == "robotic_arm") return Archetype::kRoboticArm;
  return std::nullopt;
}

std::string normalize_id(std::string_view text) {
  text = trim(text);
  std::string out;
  out.reserve(text.size());
  bool pending_sep = false;
  for (char c : text) {
    if (c == ' ' || c == '-' || c == '\t') {
      pending_sep = !out.empty();
      continue;
    }
    if (pending_sep) {
      out.push_back('_');
      pending_sep = false;
    }
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

std::string Relation::render() const {
  std::string out(to_string(predicate));
  out += '(';
  out += subject;
  if (object) {
    out += ", ";
    out += *object;
  }
  out += ')';
  return out;
}

Relation parse_relation(std::string_view text) {
  const std::string_view s = trim(text);
  const auto open = s.find('(');
  if (open == std::string_view::npos || s.empty() || s.back() != ')') {
    throw ParseError("malformed relation '" + std::string(s) + "'");
  }
  const auto pred = predicate_from_string(trim(s.substr(0, open)));
  if (!pred) throw ParseError("unknown predicate in '" + std::string(s) + "'");
  const std::string_view inner = s.substr(open + 1, s.size() - open - 2);
  Relation r;
  r.predicate = *pred;
  const auto comma = inner.find(',');
  if (comma == std::string_view::npos) {
    r.subject = std::string(trim(inner));
  } else {
    r.subject = std::string(trim(inner.substr(0, comma)));
    const std::string_view rest = trim(inner.substr(comma + 1));
    if (rest.find(',') != std::string_view::npos) throw ParseError("too many arguments in '" + std::string(s) + "'");
    r.object = std::string(rest);
  }
  if (r.subject.empty() || (r.object && r.object->empty())) {
    throw ParseError("empty argument in '" + std::string(s) + "'");
  }
  if (is_unary(r.predicate) == r.object.has_value()) {
    throw ParseError("wrong arity for " + std::string(to_string(r.predicate)) + " in '" + std::string(s) + "'");
  }
  return r;
}

std::vector<Relation> parse_relations(std::string_view text) {
  std::vector<Relation> out;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    const std::string_view line = trim(text.substr(0, nl));
    if (!line.empty()) out.push_back(parse_relation(line));
    if (nl == std::string_view::npos) break;
    text.remove_prefix(nl + 1);
  }
  return out;
}

std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// ---------------------------------------------------------------------------
// Scene

EntityIndex Scene::find(std::string_view id) const {
  const auto it = index_.find(std::string(id));
  return it == index_.end() ? kNoEntity : it->second;
}

EntityIndex Scene::require(std::string_view id) const {
  const EntityIndex e = find(id);
  if (e == kNoEntity) throw UnknownEntity(std::string(id));
  return e;
}

int Scene::robot_slot(EntityIndex e) const {
  if (e < 0 || static_cast<std::size_t>(e) >= slot_of_entity_.size()) return -1;
  return slot_of_entity_[static_cast<std::size_t>(e)];
}

int Scene::require_robot(std::string_view id) const {
  const int slot = robot_slot(find(id));
  if (slot < 0) throw UnknownRobot(std::string(id));
  return slot;
}

std::vector<EntityIndex> Scene::doors_between(EntityIndex a, EntityIndex b) const {
  std::vector<EntityIndex> out;
  for (EntityIndex d : doors_) {
    const auto& c = entity(d).connects;
    if ((c[0] == a && c[1] == b) || (c[0] == b && c[1] == a)) out.push_back(d);
  }
  return out;
}

// Two-pass construction: register every id, then resolve references.
class SceneBuilder {
 public:
  explicit SceneBuilder(const SceneSpec& spec) : spec_(spec) {}

  std::pair<std::shared_ptr<Scene>, WorldState> build() {
    auto scene = std::make_shared<Scene>();
    scene_ = scene.get();
    scene_->name_ = spec_.name;
    scene_->description_ = spec_.description;

    if (spec_.rooms.empty()) throw SchemaError("rooms", "scene has no rooms");
    if (spec_.entities.empty()) throw SchemaError("entities", "scene has no entities");
    if (spec_.robots.empty()) throw SchemaError("robots", "scene has no robots");

    for (std::size_t i = 0; i < spec_.rooms.size(); ++i) {
      add(spec_.rooms[i], EntityKind::kRoom, "rooms/" + std::to_string(i));
    }
    for (std::size_t i = 0; i < spec_.doors.size(); ++i) {
      add(spec_.doors[i].id, EntityKind::kDoor, "doors/" + std::to_string(i));
    }
    for (std::size_t i = 0; i < spec_.entities.size(); ++i) {
      const auto& es = spec_.entities[i];
      const std::string path = "entities/" + std::to_string(i);
      EntityKind kind;
      if (es.kind == "object") kind = EntityKind::kObject;
      else if (es.kind == "surface") kind = EntityKind::kSurface;
      else if (es.kind == "container") kind = EntityKind::kContainer;
      else if (es.kind == "floor") kind = EntityKind::kFloor;
      else throw SchemaError(path + "/kind", "invalid entity kind '" + es.kind + "'");
      add(es.id, kind, path);
    }
    for (std::size_t i = 0; i < spec_.robots.size(); ++i) {
      const auto& rs = spec_.robots[i];
      add(rs.id, EntityKind::kRobot, "robots/" + std::to_string(i));
      if (rs.basket) add(*rs.basket, EntityKind::kContainer, "robots/" + std::to_string(i) + "/basket");
    }

    scene_->slot_of_entity_.assign(scene_->entities_.size(), -1);
    resolve_rooms_and_doors();
    resolve_fixtures();
    resolve_robots();

    WorldState state(scene);
    state_ = &state;
    place_robots();
    place_objects();

    for (std::size_t e = 0; e < scene_->entities_.size(); ++e) {
      const Entity& ent = scene_->entities_[e];
      if (ent.kind == EntityKind::kObject) scene_->objects_.push_back(static_cast<EntityIndex>(e));
      if (ent.openable) scene_->openables_.push_back(static_cast<EntityIndex>(e));
    }
    const auto violations = invariant_violations(state);
    if (!violations.empty()) throw SchemaError("", "scene violates invariants: " + violations.front());
    rank_actions();
    return {scene, std::move(state)};
  }

 private:
  EntityIndex add(const std::string& id, EntityKind kind, const std::string& path) {
    if (id.empty()) throw SchemaError(path + "/id", "missing id");
    if (normalize_id(id) != id) throw SchemaError(path + "/id", "id '" + id + "' must be lowercase with underscores");
    if (scene_->index_.contains(id)) throw SchemaError(path + "/id", "duplicate id '" + id + "'");
    const auto idx = static_cast<EntityIndex>(scene_->entities_.size());
    Entity ent;
    ent.id = id;
    ent.kind = kind;
    scene_->entities_.push_back(ent);
    scene_->index_.emplace(id, idx);
    paths_.push_back(path);
    return idx;
  }

  void rank_actions() {
    const auto n = static_cast<EntityIndex>(scene_->entities_.size());
    constexpr int kVerbs = static_cast<int>(Verb::kPutOn) + 1;
    std::vector<std::pair<std::string, std::size_t>> keyed;
    for (int v = 0; v < kVerbs; ++v) {
      const auto verb = static_cast<Verb>(v);
      for (EntityIndex a = 0; a < n; ++a) {
        for (EntityIndex b = kNoEntity; b < n; ++b) {
          if ((arity(verb) == 2) != (b != kNoEntity)) continue;
          Action act{verb, {scene_->entities_[static_cast<std::size_t>(a)].id}};
          if (b != kNoEntity) act.args.push_back(scene_->entities_[static_cast<std::size_t>(b)].id);
          const std::size_t slot = (static_cast<std::size_t>(v) * static_cast<std::size_t>(n) + static_cast<std::size_t>(a)) *
                                       (static_cast<std::size_t>(n) + 1) + static_cast<std::size_t>(b + 1);
          keyed.emplace_back(act.render(), slot);
        }
      }
    }
    std::sort(keyed.begin(), keyed.end());
    scene_->action_rank_.assign(static_cast<std::size_t>(kVerbs) * static_cast<std::size_t>(n) * (static_cast<std::size_t>(n) + 1), -1);
    for (std::size_t i = 0; i < keyed.size(); ++i) scene_->action_rank_[keyed[i].second] = static_cast<std::int32_t>(i);
  }

  EntityIndex ref(const std::string& id, const std::string& path) const {
    const EntityIndex e = scene_->find(id);
    if (e == kNoEntity) throw SchemaError(path, "dangling reference '" + id + "'");
    return e;
  }

  EntityIndex ref_room(const std::string& id, const std::string& path) const {
    const EntityIndex e = ref(id, path);
    if (scene_->entities_[static_cast<std::size_t>(e)].kind != EntityKind::kRoom) {
      throw SchemaError(path, "'" + id + "' is not a room");
    }
    return e;
  }

  Entity& at(EntityIndex e) { return scene_->entities_[static_cast<std::size_t>(e)]; }

  void resolve_rooms_and_doors() {
    for (const auto& r : spec_.rooms) {
      const EntityIndex e = scene_->find(r);
      at(e).room = e;
      scene_->rooms_.push_back(e);
    }
    for (std::size_t i = 0; i < spec_.doors.size(); ++i) {
      const auto& ds = spec_.doors[i];
      const std::string path = "doors/" + std::to_string(i) + "/connects";
      const EntityIndex a = ref_room(ds.room_a, path);
      const EntityIndex b = ref_room(ds.room_b, path);
      if (a == b) throw SchemaError(path, "door '" + ds.id + "' must connect two distinct rooms");
      const EntityIndex d = scene_->find(ds.id);
      at(d).connects = {a, b};
      at(d).room = a;
      at(d).openable = true;
      scene_->doors_.push_back(d);
      door_open_.emplace_back(d, ds.open);
    }
  }

  void resolve_fixtures() {
    for (std::size_t i = 0; i < spec_.entities.size(); ++i) {
      const auto& es = spec_.entities[i];
      const std::string path = "entities/" + std::to_string(i);
      const EntityIndex e = scene_->find(es.id);
      Entity& ent = at(e);
      if (es.height && ent.kind != EntityKind::kSurface) {
        throw SchemaError(path + "/height", "height only applies to surfaces");
      }
      if (es.open && ent.kind != EntityKind::kContainer) {
        throw SchemaError(path + "/open", "openness only applies to containers");
      }
      if (ent.kind == EntityKind::kObject) {
        const int n = (es.on ? 1 : 0) + (es.in ? 1 : 0) + (es.held_by ? 1 : 0);
        if (n != 1) throw SchemaError(path, "object '" + es.id + "' needs exactly one of on/in/held_by");
        if (!es.room.empty()) throw SchemaError(path + "/room", "objects are located by on/in/held_by");
        continue;
      }
      if (es.on || es.in || es.held_by) throw SchemaError(path, "fixtures cannot be placed on/in/held_by");
      if (es.room.empty()) throw SchemaError(path + "/room", "missing room");
      ent.room = ref_room(es.room, path + "/room");
      if (ent.kind == EntityKind::kSurface && es.height) {
        if (*es.height == "high") ent.height = Height::kHigh;
        else if (*es.height != "low") throw SchemaError(path + "/height", "height must be low or high");
      }
      if (ent.kind == EntityKind::kContainer) ent.openable = true;
    }
  }

  void resolve_robots() {
    for (std::size_t i = 0; i < spec_.robots.size(); ++i) {
      const auto& rs = spec_.robots[i];
      const std::string path = "robots/" + std::to_string(i);
      RobotInfo info;
      info.entity = scene_->find(rs.id);
      info.archetype = rs.archetype;
      at(info.entity).room = kNoEntity;
      if (rs.basket) {
        if (rs.archetype != Archetype::kQuadrotor) throw SchemaError(path + "/basket", "only quadrotors carry baskets");
        info.basket = scene_->find(*rs.basket);
        at(info.basket).carrier = info.entity;
        at(info.basket).openable = false;
      }
      if (!rs.workspace.empty() && rs.archetype != Archetype::kRoboticArm) {
        throw SchemaError(path + "/workspace", "only robotic arms have a workspace");
      }
      if (rs.archetype == Archetype::kRoboticArm) {
        if (rs.workspace.empty()) throw SchemaError(path + "/workspace", "robotic arm needs a workspace");
        const EntityIndex room = ref_room(rs.room, path + "/room");
        for (std::size_t w = 0; w < rs.workspace.size(); ++w) {
          const std::string wpath = path + "/workspace/" + std::to_string(w);
          const EntityIndex t = ref(rs.workspace[w], wpath);
          const Entity& te = at(t);
          if (!is_fixture(te.kind) || te.carrier != kNoEntity) {
            throw SchemaError(wpath, "workspace entries must be surfaces, floors or containers");
          }
          if (te.room != room) throw SchemaError(wpath, "workspace entry outside the arm's room");
          info.workspace.push_back(t);
        }
        std::sort(info.workspace.begin(), info.workspace.end());
        info.workspace.erase(std::unique(info.workspace.begin(), info.workspace.end()), info.workspace.end());
        if (rs.near) throw SchemaError(path + "/near", "robotic arms are stationary; use workspace");
      }
      scene_->slot_of_entity_[static_cast<std::size_t>(info.entity)] = static_cast<int>(scene_->robots_.size());
      scene_->robots_.push_back(std::move(info));
    }
  }

  void place_robots() {
    for (std::size_t i = 0; i < spec_.robots.size(); ++i) {
      const auto& rs = spec_.robots[i];
      const std::string path = "robots/" + std::to_string(i);
      const RobotInfo& info = scene_->robots_[i];
      RobotState& st = state_->robot_mut(static_cast<int>(i));
      st.room = ref_room(rs.room, path + "/room");
      if (rs.pose == "airborne") {
        if (rs.archetype != Archetype::kQuadrotor) throw SchemaError(path + "/pose", "only quadrotors fly");
        st.pose = Pose::kAirborne;
        if (rs.on) throw SchemaError(path + "/on", "airborne quadrotor cannot be on a surface");
      } else if (rs.pose == "grounded") {
        st.pose = Pose::kGrounded;
        if (rs.archetype == Archetype::kQuadrotor) {
          if (!rs.on) throw SchemaError(path + "/on", "grounded quadrotor needs a landing surface");
          st.landed_on = ref(*rs.on, path + "/on");
          const Entity& s = at(st.landed_on);
          if (!is_placeable_surface(s.kind)) throw SchemaError(path + "/on", "quadrotor must land on a surface or floor");
          if (s.room != st.room) throw SchemaError(path + "/on", "landing surface outside the robot's room");
        } else if (rs.on) {
          throw SchemaError(path + "/on", "only quadrotors rest on surfaces");
        }
      } else {
        throw SchemaError(path + "/pose", "pose must be grounded or airborne");
      }
      if (rs.near) {
        const EntityIndex t = ref(*rs.near, path + "/near");
        const Entity& te = at(t);
        if (te.kind == EntityKind::kRoom || t == info.entity) throw SchemaError(path + "/near", "invalid near target");
        if (rs.archetype == Archetype::kQuadrotor && !is_placeable_surface(te.kind)) {
          throw SchemaError(path + "/near", "quadrotors hover near surfaces or floors only");
        }
        deferred_near_.emplace_back(static_cast<int>(i), t, path + "/near");
      }
    }
    for (const auto& [d, open] : door_open_) state_->set_open(d, open);
  }

  void place_objects() {
    std::vector<int> held_count(scene_->robots_.size(), 0);
    std::vector<int> basket_count(scene_->entities_.size(), 0);
    for (std::size_t i = 0; i < spec_.entities.size(); ++i) {
      const auto& es = spec_.entities[i];
      const std::string path = "entities/" + std::to_string(i);
      const EntityIndex e = scene_->find(es.id);
      const Entity& ent = at(e);
      if (ent.kind == EntityKind::kContainer) state_->set_open(e, es.open.value_or(false));
      if (ent.kind != EntityKind::kObject) continue;
      Placement p;
      if (es.on) {
        p = {Predicate::kOn, ref(*es.on, path + "/on")};
        if (!is_placeable_surface(at(p.host).kind)) throw SchemaError(path + "/on", "ON must target a surface or floor");
      } else if (es.in) {
        p = {Predicate::kIn, ref(*es.in, path + "/in")};
        if (at(p.host).kind != EntityKind::kContainer) throw SchemaError(path + "/in", "IN must target a container");
        if (at(p.host).carrier != kNoEntity && ++basket_count[static_cast<std::size_t>(p.host)] > 1) {
          throw SchemaError(path + "/in", "basket capacity is one object");
        }
      } else {
        p = {Predicate::kHeldBy, ref(*es.held_by, path + "/held_by")};
        const int slot = scene_->robot_slot(p.host);
        if (slot < 0) throw SchemaError(path + "/held_by", "HELD_BY must target a robot");
        if (scene_->robots_[static_cast<std::size_t>(slot)].archetype == Archetype::kQuadrotor) {
          throw SchemaError(path + "/held_by", "quadrotors cannot hold objects");
        }
        if (++held_count[static_cast<std::size_t>(slot)] > 1) throw SchemaError(path + "/held_by", "robot already holds an object");
      }
      state_->set_placement(e, p);
    }
    for (const auto& [slot, target, path] : deferred_near_) {
      if (!state_->located_in(target, state_->robot(slot).room)) throw SchemaError(path, "near target outside the robot's room");
      state_->robot_mut(slot).near = target;
    }
  }

  const SceneSpec& spec_;
  Scene* scene_ = nullptr;
  WorldState* state_ = nullptr;
  std::vector<std::string> paths_;
  std::vector<std::pair<EntityIndex, bool>> door_open_;
  std::vector<std::tuple<int, EntityIndex, std::string>> deferred_near_;
};

WorldState build_scene(const SceneSpec& spec) { return SceneBuilder(spec).build().second; }

// ---------------------------------------------------------------------------
// WorldState

WorldState::WorldState(std::shared_ptr<const Scene> scene) : scene_(std::move(scene)) {
  const std::size_t n = scene_->entities().size();
  placement_.assign(n, Placement{});
  open_.assign(n, 0);
  robots_.assign(scene_->robots().size(), RobotState{});
}

bool WorldState::is_open(EntityIndex e) const {
  const Entity& ent = scene_->entity(e);
  if (ent.carrier != kNoEntity) return true;
  return open_.at(static_cast<std::size_t>(e)) != 0;
}

EntityIndex WorldState::held_object(int slot) const {
  const EntityIndex r = scene_->robot(slot).entity;
  for (EntityIndex o : scene_->objects()) {
    const Placement& p = placement_[static_cast<std::size_t>(o)];
    if (p.predicate == Predicate::kHeldBy && p.host == r) return o;
  }
  return kNoEntity;
}

EntityIndex WorldState::room_of(EntityIndex e) const {
  const Entity& ent = scene_->entity(e);
  switch (ent.kind) {
    case EntityKind::kRoom:
    case EntityKind::kDoor:
      return ent.room;
    case EntityKind::kRobot:
      return robots_[static_cast<std::size_t>(scene_->robot_slot(e))].room;
    case EntityKind::kObject:
      return room_of(placement_[static_cast<std::size_t>(e)].host);
    default:
      return ent.carrier != kNoEntity ? room_of(ent.carrier) : ent.room;
  }
}

bool WorldState::located_in(EntityIndex e, EntityIndex room) const {
  const Entity& ent = scene_->entity(e);
  if (ent.kind == EntityKind::kDoor) return ent.connects[0] == room || ent.connects[1] == room;
  return room_of(e) == room;
}

bool WorldState::enclosed(EntityIndex e) const {
  if (scene_->kind(e) != EntityKind::kObject) return false;
  const Placement& p = placement_[static_cast<std::size_t>(e)];
  return p.predicate == Predicate::kIn && !is_open(p.host);
}

EntityIndex WorldState::spot_of(EntityIndex e) const {
  const Entity& ent = scene_->entity(e);
  if (ent.kind == EntityKind::kObject) {
    const Placement& p = placement_[static_cast<std::size_t>(e)];
    return p.predicate == Predicate::kHeldBy ? p.host : spot_of(p.host);
  }
  if (ent.carrier != kNoEntity) return spot_of(ent.carrier);
  if (ent.kind == EntityKind::kRobot) {
    const RobotState& rs = robots_[static_cast<std::size_t>(scene_->robot_slot(e))];
    if (rs.pose == Pose::kGrounded && rs.landed_on != kNoEntity) return rs.landed_on;
  }
  return e;
}

std::vector<EntityIndex> WorldState::near_targets(int slot) const {
  const RobotInfo& info = scene_->robot(slot);
  if (info.archetype == Archetype::kRoboticArm) return info.workspace;
  const EntityIndex n = robots_[static_cast<std::size_t>(slot)].near;
  if (n == kNoEntity) return {};
  return {n};
}

bool WorldState::reaches(int slot, EntityIndex e) const {
  const RobotState& rs = robots_[static_cast<std::size_t>(slot)];
  if (!located_in(e, rs.room) || enclosed(e)) return false;
  const EntityIndex target_spot = spot_of(e);
  const RobotInfo& info = scene_->robot(slot);
  if (info.archetype == Archetype::kRoboticArm) {
    return std::any_of(info.workspace.begin(), info.workspace.end(),
                       [&](EntityIndex w) { return spot_of(w) == target_spot; });
  }
  return rs.near != kNoEntity && spot_of(rs.near) == target_spot;
}

bool WorldState::holds(Predicate p, EntityIndex s, EntityIndex o) const {
  const Entity& se = scene_->entity(s);
  switch (p) {
    case Predicate::kOn:
      if (se.kind == EntityKind::kObject) return placement_[static_cast<std::size_t>(s)] == Placement{p, o};
      if (se.kind == EntityKind::kRobot) {
        const RobotState& rs = robots_[static_cast<std::size_t>(scene_->robot_slot(s))];
        return rs.pose == Pose::kGrounded && rs.landed_on != kNoEntity && rs.landed_on == o;
      }
      return false;
    case Predicate::kIn:
      return se.kind == EntityKind::kObject && placement_[static_cast<std::size_t>(s)] == Placement{p, o};
    case Predicate::kHeldBy:
      if (se.kind == EntityKind::kObject) return placement_[static_cast<std::size_t>(s)] == Placement{p, o};
      return se.carrier != kNoEntity && se.carrier == o;
    case Predicate::kNear: {
      if (se.kind != EntityKind::kRobot) return false;
      const auto targets = near_targets(scene_->robot_slot(s));
      return std::find(targets.begin(), targets.end(), o) != targets.end();
    }
    case Predicate::kInsideRoom:
      if (se.kind == EntityKind::kRobot) return robots_[static_cast<std::size_t>(scene_->robot_slot(s))].room == o;
      return is_fixture(se.kind) && se.carrier == kNoEntity && se.room == o;
    case Predicate::kConnects:
      return se.kind == EntityKind::kDoor && (se.connects[0] == o || se.connects[1] == o);
    case Predicate::kOpen:
      return (se.openable || se.carrier != kNoEntity) && is_open(s);
    case Predicate::kClosed:
      return se.openable && !is_open(s);
  }
  return false;
}

bool WorldState::holds(const Relation& r) const {
  const EntityIndex s = scene_->require(r.subject);
  const EntityIndex o = r.object ? scene_->require(*r.object) : kNoEntity;
  if (is_unary(r.predicate) != (o == kNoEntity)) return false;
  return holds(r.predicate, s, o);
}

std::vector<Relation> WorldState::relations() const {
  std::vector<Relation> out;
  const Scene& sc = *scene_;
  auto add = [&](Predicate p, EntityIndex s, EntityIndex o) {
    Relation r{p, sc.id(s), std::nullopt};
    if (o != kNoEntity) r.object = sc.id(o);
    out.push_back(std::move(r));
  };
  for (std::size_t i = 0; i < sc.entities().size(); ++i) {
    const auto e = static_cast<EntityIndex>(i);
    const Entity& ent = sc.entity(e);
    switch (ent.kind) {
      case EntityKind::kObject: {
        const Placement& p = placement_[i];
        add(p.predicate, e, p.host);
        break;
      }
      case EntityKind::kDoor:
        add(Predicate::kConnects, e, ent.connects[0]);
        add(Predicate::kConnects, e, ent.connects[1]);
        add(is_open(e) ? Predicate::kOpen : Predicate::kClosed, e, kNoEntity);
        break;
      case EntityKind::kSurface:
      case EntityKind::kFloor:
        add(Predicate::kInsideRoom, e, ent.room);
        break;
      case EntityKind::kContainer:
        if (ent.carrier != kNoEntity) {
          add(Predicate::kHeldBy, e, ent.carrier);
          add(Predicate::kOpen, e, kNoEntity);
        } else {
          add(Predicate::kInsideRoom, e, ent.room);
          add(is_open(e) ? Predicate::kOpen : Predicate::kClosed, e, kNoEntity);
        }
        break;
      case EntityKind::kRobot: {
        const int slot = sc.robot_slot(e);
        const RobotState& rs = robots_[static_cast<std::size_t>(slot)];
        add(Predicate::kInsideRoom, e, rs.room);
        if (rs.pose == Pose::kGrounded && rs.landed_on != kNoEntity) add(Predicate::kOn, e, rs.landed_on);
        for (EntityIndex t : near_targets(slot)) add(Predicate::kNear, e, t);
        break;
      }
      case EntityKind::kRoom:
        break;
    }
  }
  std::vector<std::pair<std::string, std::size_t>> keyed;
  keyed.reserve(out.size());
  for (std::size_t i = 0; i < out.size(); ++i) keyed.emplace_back(out[i].render(), i);
  std::sort(keyed.begin(), keyed.end());
  std::vector<Relation> sorted;
  sorted.reserve(out.size());
  for (const auto& [text, i] : keyed) sorted.push_back(std::move(out[i]));
  return sorted;
}

std::string WorldState::digest() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const Relation& r : relations()) {
    h = fnv1a64(r.render(), h);
    h = fnv1a64("\n", h);
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string WorldState::key() const {
  std::string k;
  key_into(k);
  return k;
}

void WorldState::key_into(std::string& k) const {
  const Scene& sc = *scene_;
  k.resize(sc.objects().size() * 3 + sc.openables().size() + robots_.size() * 7);
  char* out = k.data();
  auto put16 = [&out](EntityIndex v) {
    const auto u = static_cast<std::uint16_t>(v);
    *out++ = static_cast<char>(u & 0xff);
    *out++ = static_cast<char>(u >> 8);
  };
  for (EntityIndex o : sc.objects()) {
    const Placement& p = placement_[static_cast<std::size_t>(o)];
    *out++ = static_cast<char>(p.predicate);
    put16(p.host);
  }
  for (EntityIndex e : sc.openables()) *out++ = static_cast<char>(open_[static_cast<std::size_t>(e)]);
  for (const RobotState& rs : robots_) {
    put16(rs.room);
    *out++ = static_cast<char>(rs.pose);
    put16(rs.landed_on);
    put16(rs.near);
  }
}

std::vector<std::string> invariant_violations(const WorldState& state) {
  std::vector<std::string> out;
  const Scene& sc = state.scene();
  std::vector<int> held(sc.robots().size(), 0);
  std::vector<int> basket_load(sc.entities().size(), 0);
  for (EntityIndex o : sc.objects()) {
    const std::string& id = sc.id(o);
    const Placement p = state.placement(o);
    const EntityKind hk = p.host == kNoEntity ? EntityKind::kRoom : sc.kind(p.host);
    int locations = 0;
    for (EntityIndex h = 0; h < static_cast<EntityIndex>(sc.entities().size()); ++h) {
      for (Predicate pr : {Predicate::kOn, Predicate::kIn, Predicate::kHeldBy}) {
        if (state.holds(pr, o, h)) ++locations;
      }
    }
    if (locations != 1) out.push_back(id + " has " + std::to_string(locations) + " location relations");
    switch (p.predicate) {
      case Predicate::kOn:
        if (hk != EntityKind::kSurface && hk != EntityKind::kFloor) out.push_back(id + " is ON a non-surface");
        break;
      case Predicate::kIn:
        if (hk != EntityKind::kContainer) out.push_back(id + " is IN a non-container");
        else if (sc.entity(p.host).carrier != kNoEntity) ++basket_load[static_cast<std::size_t>(p.host)];
        break;
      case Predicate::kHeldBy: {
        const int slot = sc.robot_slot(p.host);
        if (slot < 0) out.push_back(id + " is HELD_BY a non-robot");
        else if (++held[static_cast<std::size_t>(slot)] > 1) out.push_back(sc.id(p.host) + " holds more than one object");
        else if (sc.robot(slot).archetype == Archetype::kQuadrotor) out.push_back(id + " is held by a quadrotor");
        break;
      }
      default:
        out.push_back(id + " has an invalid placement predicate");
    }
  }
  for (std::size_t b = 0; b < basket_load.size(); ++b) {
    if (basket_load[b] > 1) out.push_back(sc.entities()[b].id + " exceeds basket capacity");
  }
  for (std::size_t s = 0; s < sc.robots().size(); ++s) {
    const int slot = static_cast<int>(s);
    const RobotState& rs = state.robot(slot);
    const RobotInfo& info = sc.robot(slot);
    const std::string& rid = sc.id(info.entity);
    for (EntityIndex t : state.near_targets(slot)) {
      if (state.enclosed(t)) out.push_back(rid + " is NEAR " + sc.id(t) + " inside a closed container");
      if (!state.located_in(t, rs.room)) out.push_back(rid + " is NEAR " + sc.id(t) + " in another room");
    }
    if (info.archetype == Archetype::kQuadrotor) {
      if ((rs.pose == Pose::kGrounded) != (rs.landed_on != kNoEntity)) out.push_back(rid + " pose/landing mismatch");
      if (rs.landed_on != kNoEntity && state.room_of(rs.landed_on) != rs.room) out.push_back(rid + " landed in another room");
    } else if (rs.pose != Pose::kGrounded) {
      out.push_back(rid + " is airborne but cannot fly");
    }
  }
  for (EntityIndex d : sc.doors()) {
    const auto& c = sc.entity(d).connects;
    if (!state.holds(Predicate::kConnects, d, c[0]) || !state.holds(Predicate::kConnects, d, c[1]) || c[0] == c[1]) {
      out.push_back(sc.id(d) + " connectivity is not symmetric");
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Observation

Observation observe(const WorldState& state, std::string_view robot) {
  const Scene& sc = state.scene();
  const int slot = sc.require_robot(robot);
  const EntityIndex room = state.robot(slot).room;
  auto visible = [&](const std::string& id) {
    const EntityIndex e = sc.find(id);
    if (sc.kind(e) == EntityKind::kRoom) return true;
    return state.located_in(e, room) && !state.enclosed(e);
  };
  Observation obs;
  obs.observer = std::string(robot);
  obs.room = sc.id(room);
  for (Relation& r : state.relations()) {
    if (visible(r.subject) && (!r.object || visible(*r.object))) obs.visible_relations.push_back(std::move(r));
  }
  return obs;
}

std::string render_relations(std::span<const Relation> relations) {
  std::string out;
  for (const Relation& r : relations) {
    if (!out.empty()) out += '\n';
    out += r.render();
  }
  return out;
}

std::string render_observation(const Observation& obs) { return render_relations(obs.visible_relations); }

std::vector<CompiledRelation> compile_goal(const Scene& scene, std::span<const Relation> goal) {
  std::vector<CompiledRelation> out;
  out.reserve(goal.size());
  for (const Relation& r : goal) {
    out.push_back({r.predicate, scene.require(r.subject), r.object ? scene.require(*r.object) : kNoEntity});
  }
  return out;
}

bool goal_satisfied(const WorldState& state, std::span<const CompiledRelation> goal) {
  return std::all_of(goal.begin(), goal.end(),
                     [&](const CompiledRelation& r) { return state.holds(r.predicate, r.subject, r.object); });
}

bool check_goal(const WorldState& state, std::span<const Relation> goal) {
  return goal_satisfied(state, compile_goal(state.scene(), goal));
}

}  // namespace coherent
