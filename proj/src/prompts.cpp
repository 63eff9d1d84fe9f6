#include "coherent/prompts.hpp"

#include "coherent/embedded.hpp"
#include "coherent/errors.hpp"

namespace coherent {

std::string_view template_text(std::string_view name) {
  const std::string key = "templates/" + std::string(kTemplateVersion) + "/" + std::string(name) + ".txt";
  const auto text = embedded_file(key);
  if (!text) throw DomainError("missing prompt template '" + key + "'");
  return *text;
}

std::string render_template(std::string_view name, const std::map<std::string, std::string>& vars) {
  const std::string_view text = template_text(name);
  std::string out;
  out.reserve(text.size() + 256);
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t open = text.find("{{", pos);
    if (open == std::string_view::npos) {
      out.append(text.substr(pos));
      break;
    }
    const std::size_t close = text.find("}}", open + 2);
    if (close == std::string_view::npos) throw DomainError("unterminated placeholder in template " + std::string(name));
    out.append(text.substr(pos, open - pos));
    const std::string key(text.substr(open + 2, close - open - 2));
    const auto it = vars.find(key);
    if (it == vars.end()) throw DomainError("template " + std::string(name) + " needs a value for {{" + key + "}}");
    out.append(it->second);
    pos = close + 2;
  }
  // Template files end with a newline; messages should not.
  while (!out.empty() && out.back() == '\n') out.pop_back();
  return out;
}

std::string capability_blurb(const Scene& scene, int slot) {
  const RobotInfo& info = scene.robot(slot);
  std::map<std::string, std::string> vars{{"robot", scene.id(info.entity)}};
  switch (info.archetype) {
    case Archetype::kQuadrotor:
      vars["basket"] = info.basket == kNoEntity ? "none" : scene.id(info.basket);
      return render_template("capability_quadrotor", vars);
    case Archetype::kRoboticDog:
      return render_template("capability_robotic_dog", vars);
    case Archetype::kRoboticArm: {
      std::string ws;
      for (std::size_t i = 0; i < info.workspace.size(); ++i) {
        if (i) ws += i + 1 == info.workspace.size() ? " and " : ", ";
        ws += "<" + scene.id(info.workspace[i]) + ">";
      }
      vars["workspace"] = ws.empty() ? "nothing" : ws;
      return render_template("capability_robotic_arm", vars);
    }
  }
  return {};
}

std::string capabilities_section(const Scene& scene) {
  std::string out;
  for (int slot = 0; slot < static_cast<int>(scene.robots().size()); ++slot) {
    if (slot) out += '\n';
    out += "- " + capability_blurb(scene, slot);
  }
  return out;
}

std::string observation_section(const WorldState& state, int slot) {
  const Scene& sc = state.scene();
  const Observation obs = observe(state, sc.id(sc.robot(slot).entity));
  std::string body = render_observation(obs);
  if (body.empty()) body = "(nothing visible)";
  return obs.observer + " (in " + obs.room + "):\n" + body;
}

std::string observations_section(const WorldState& state) {
  std::string out;
  for (int slot = 0; slot < static_cast<int>(state.scene().robots().size()); ++slot) {
    if (slot) out += "\n\n";
    out += observation_section(state, slot);
  }
  return out;
}

std::string action_list(std::span<const Action> actions) {
  if (actions.empty()) return "(none)";
  std::string out;
  for (std::size_t i = 0; i < actions.size(); ++i) {
    if (i) out += '\n';
    out += actions[i].render();
  }
  return out;
}

std::vector<std::string> robot_ids(const Scene& scene) {
  std::vector<std::string> ids;
  for (const RobotInfo& r : scene.robots()) ids.push_back(scene.id(r.entity));
  return ids;
}

}  // namespace coherent
