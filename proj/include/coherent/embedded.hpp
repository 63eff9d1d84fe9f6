#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace coherent {

/// Files compiled into the library (benchmark bundles, prompt templates),
/// keyed by their path relative to the repository root, sorted by name.
std::span<const std::pair<std::string_view, std::string_view>> embedded_files();
std::optional<std::string_view> embedded_file(std::string_view name);

}  // namespace coherent
