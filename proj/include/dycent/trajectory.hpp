#pragma once

#include <cstdint>
#include <optional>

namespace dycent {

/// One log row. Row k describes the step taken from iterate x_k: f and
/// grad_norm are evaluated at x_k (under the step's minibatch, if any).
/// Angle/step fields are set only for the angle-based method; acc_train only
/// on rows that close an epoch.
struct TrajectoryRecord {
    std::int64_t iter = 0;
    double f = 0.0;
    double grad_norm = 0.0;
    std::optional<double> theta_deg;
    std::optional<double> d_raw;
    std::optional<double> d_used;
    std::optional<bool> doubled;
    std::optional<double> acc_train;
};

} // namespace dycent
