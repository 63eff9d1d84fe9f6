#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "coherent/actions.hpp"
#include "coherent/world.hpp"

namespace coherent {

inline constexpr std::string_view kTemplateVersion = "v1";

/// Raw text of templates/<version>/<name>.txt; throws DomainError if absent.
std::string_view template_text(std::string_view name);

/// Substitutes `{{key}}` placeholders. Throws DomainError for a placeholder
/// without a value, so template edits cannot silently drop context.
std::string render_template(std::string_view name, const std::map<std::string, std::string>& vars);

std::string capability_blurb(const Scene& scene, int robot_slot);
/// One capability paragraph per robot, in scene order.
std::string capabilities_section(const Scene& scene);
/// "robot (room):" header followed by the robot's visible relations.
std::string observation_section(const WorldState& state, int robot_slot);
std::string observations_section(const WorldState& state);
/// One rendered action per line.
std::string action_list(std::span<const Action> actions);

std::vector<std::string> robot_ids(const Scene& scene);

}  // namespace coherent
