#pragma once

#include <string_view>
#include <utility>
#include <vector>

namespace tcnet::detail {

// (name, JSON text) of every file in presets/, sorted by name.
const std::vector<std::pair<std::string_view, std::string_view>>& embedded_presets();

}  // namespace tcnet::detail
