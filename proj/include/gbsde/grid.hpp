#pragma once

#include <cstddef>
#include <stdexcept>

namespace gbsde {

/// Uniform time grid 0 = t_0 < t_1 < ... < t_N = T.
class TimeGrid {
 public:
  TimeGrid(double horizon, std::size_t steps)
      : horizon_(horizon), steps_(steps), dt_(horizon / static_cast<double>(steps)) {
    if (!(horizon > 0.0)) throw std::invalid_argument("grid horizon must be positive");
    if (steps < 1) throw std::invalid_argument("grid needs at least one step");
  }

  double horizon() const { return horizon_; }
  std::size_t steps() const { return steps_; }
  double dt() const { return dt_; }

  /// Node time; the last node is exactly the horizon.
  double node(std::size_t i) const {
    return i == steps_ ? horizon_ : dt_ * static_cast<double>(i);
  }

  bool operator==(const TimeGrid&) const = default;

 private:
  double horizon_;
  std::size_t steps_;
  double dt_;
};

}  // namespace gbsde
