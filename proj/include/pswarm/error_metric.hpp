#pragma once

#include <algorithm>
#include <cmath>

#include "pswarm/types.hpp"

namespace pswarm {

/// Iteration error definition: relative normalizes the position and velocity
/// differences by the current iterate's norms, absolute takes them as-is.
enum class ErrorMode { relative, absolute };

/// Guards the relative metric against division blow-ups near the origin.
inline constexpr double error_norm_floor = 1e-30;

/// Error contributed by one 3-component quantity (position or velocity).
inline double component_error(double delta_norm, double current_norm, ErrorMode mode) {
    if (mode == ErrorMode::absolute) {
        return delta_norm;
    }
    return delta_norm / std::max(current_norm, error_norm_floor);
}

} // namespace pswarm
