#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "dycent/objective.hpp"
#include "dycent/trajectory.hpp"
#include "dycent/vecmath.hpp"

namespace dycent {

enum class BaselineMethod { sgd, sgdm, adam, rmsprop, adabelief, diffgrad, angulargrad_cos, angulargrad_tan };

std::string_view to_string(BaselineMethod m) noexcept;
/// Throws ConfigError listing the valid names.
BaselineMethod parse_baseline_method(std::string_view name);
const std::vector<BaselineMethod>& all_baseline_methods();

/// Hyperparameters of the comparison optimizers. Only the fields a method
/// uses are consulted; rmsprop uses beta2 as its squared-gradient decay.
struct BaselineConfig {
    BaselineMethod method = BaselineMethod::sgd;
    double lr = 1e-3;
    double momentum = 0.9;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    /// Canonical defaults: lr 1e-3, momentum 0.9, betas (0.9, 0.999),
    /// rmsprop decay 0.99, eps 1e-8.
    static BaselineConfig defaults(BaselineMethod method);
    void validate() const;
};

/// Moment accumulators, zero-initialized and sized on the first step.
struct BaselineState {
    ParamVector m;           ///< first moment / momentum buffer
    ParamVector v;           ///< second moment (or belief variance)
    ParamVector prev_grad;   ///< diffGrad, AngularGrad
    ParamVector prev_angle;  ///< AngularGrad: elementwise angle of the previous step (radians)
    ParamVector last_coefficient;  ///< diffGrad friction / AngularGrad coefficient of the last step
    std::int64_t step = 0;
};

/// Elementwise diffGrad friction 1 / (1 + exp(-|prev - g|)), in [0.5, 1).
double diffgrad_friction(double prev_grad, double grad) noexcept;

/// Elementwise AngularGrad angle atan(|(prev - g) / (1 + prev g)|) in [0, pi/2].
double angulargrad_angle(double prev_grad, double grad) noexcept;

/// 0.5 tanh(|cos a|) + 0.5 (cos variant) or 0.5 tanh(|tan a|) + 0.5 (tan variant).
double angulargrad_coefficient(double angle, BaselineMethod variant);

/// Applies one update given the gradient at x.
ParamVector baseline_update(const ParamVector& x, const ParamVector& grad, const BaselineConfig& cfg,
                            BaselineState& state);

/// Evaluates grad f(x) and applies one update.
ParamVector baseline_step(const ParamVector& x, const Objective& obj, const BaselineConfig& cfg,
                          BaselineState& state);

struct BaselineRun {
    std::vector<TrajectoryRecord> records;
    ParamVector x_final;
    bool stopped_at_stationary = false;
};

/// Up to max_iters updates; stops when grad f is exactly zero. seed is
/// accepted for interface symmetry with the angle-based run; every baseline
/// is deterministic.
BaselineRun run_baseline(const ParamVector& x0, const Objective& obj, const BaselineConfig& cfg,
                         std::int64_t max_iters, std::uint64_t seed = 0);

} // namespace dycent
