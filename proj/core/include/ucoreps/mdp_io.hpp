#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "ucoreps/mdp.hpp"

namespace ucoreps {

/**
 * Plain-text MDP description.
 *
 *     # comment
 *     ucoreps-mdp 1
 *     layers 1 3 3 1
 *     actions 2
 *     state 1 0 left          (optional label: layer, index, name)
 *     action 0 stay           (optional label: index, name)
 *     row 0 0 1 0.2 0.5 0.3   (layer, state, action, then P(.|x,a) over the next layer)
 *
 * Every decision pair needs exactly one `row`. Rows must sum to 1 within
 * `load_row_tolerance`; rows off by more than `structural_tolerance` are
 * rescaled, so short decimal inputs such as 0.333 0.333 0.334 load cleanly.
 */
inline constexpr double load_row_tolerance = 1e-9;

LayeredMdp parse_mdp(std::string_view text);
LayeredMdp load_mdp(const std::filesystem::path& path);

/// Serializes with 17 significant digits, so parse_mdp(format_mdp(m)) reproduces m exactly.
std::string format_mdp(const LayeredMdp& mdp);
void save_mdp(const LayeredMdp& mdp, const std::filesystem::path& path);

} // namespace ucoreps
