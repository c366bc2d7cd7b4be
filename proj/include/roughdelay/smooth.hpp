#pragma once

#include <cmath>

#include "roughdelay/grid.hpp"

namespace roughdelay {

/// The smooth planar driver x_t = (sin t, cos 2t) and its derivative.
inline Vector sin_cos(double t) { return Vector{{std::sin(t), std::cos(2.0 * t)}}; }
inline Vector sin_cos_rate(double t) { return Vector{{std::cos(t), -2.0 * std::sin(2.0 * t)}}; }

inline GridPath sin_cos_path(const Grid& grid) {
  return GridPath::from_function(grid, 0, grid.last(), 2, 1, [](double t) { return Matrix(sin_cos(t)); });
}

}  // namespace roughdelay
