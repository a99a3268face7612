#pragma once

#include <functional>
#include <string>
#include <vector>

namespace fcnet {

/// Records a non-fatal condition (best-effort result, degenerate input).
/// Thread-safe. Messages go to the installed handler, stderr by default.
void warn(const std::string& message);

/// Replaces the warning handler; an empty function restores the default.
void set_warning_handler(std::function<void(const std::string&)> handler);

/// Warnings recorded since the last call, in arrival order.
std::vector<std::string> take_warnings();

}  // namespace fcnet
