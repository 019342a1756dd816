#pragma once

// Test-only reference implementations, kept independent of the library code
// they check.

#include <algorithm>
#include <cmath>

namespace oracles {

// Gipps speed law evaluated directly from the canonical published
// expressions, one term at a time:
//   v_acc = v + 2.5 a tau (1 - v/V) sqrt(0.025 + v/V)
//   v_brk = b tau + sqrt(b^2 tau^2 - b [2 (x_l - s_l - x) - v tau - v_l^2 / bhat])
// and the follower's next speed is min(v_acc, v_brk), floored at zero. A
// negative radicand reads as a panic stop (0).
inline double gipps_speed(double x, double v, double desired_speed,
                          double max_accel, double b, double bhat, double tau,
                          double leader_x, double leader_v,
                          double leader_len) {
  const double accel_part =
      v + 2.5 * max_accel * tau * (1.0 - v / desired_speed) *
              std::sqrt(0.025 + v / desired_speed);
  const double gap = leader_x - leader_len - x;
  const double radicand =
      b * b * tau * tau - b * (2.0 * gap - v * tau - leader_v * leader_v / bhat);
  if (radicand < 0.0) return 0.0;
  const double brake_part = b * tau + std::sqrt(radicand);
  return std::max(0.0, std::min(accel_part, brake_part));
}

}  // namespace oracles
