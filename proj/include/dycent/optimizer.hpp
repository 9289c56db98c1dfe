#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "dycent/errors.hpp"
#include "dycent/objective.hpp"
#include "dycent/vecmath.hpp"

namespace dycent {

enum class AverageInit {
    zero,       ///< d_avg starts at 0 (literal reading of the update rule)
    first_step  ///< the first step seeds d_avg with its own d, so step 1 never doubles
};

/// Hyperparameters of the angle-based step.
struct DycentConfig {
    double h = 1e-2;        ///< perpendicular probe distance
    double beta = 0.9;      ///< EMA decay of the step size
    double epsilon = 1e-8;  ///< radians added to the measured angle
    bool enable_doubling = true;
    bool clamp_nonnegative_step = false;
    AverageInit d_avg_init = AverageInit::first_step;

    /// Throws ConfigError unless h > 0, epsilon > 0 and 0 <= beta < 1.
    void validate() const;
};

struct DycentState {
    explicit DycentState(std::uint64_t seed = 0) : rng(seed) {}

    double d_avg = 0.0;
    bool has_average = false;
    std::uint64_t step_count = 0;
    RngHandle rng;
};

/// Everything one iteration computed.
struct StepTrace {
    ParamVector x1;  ///< current iterate
    ParamVector x2;  ///< probe point x1 - h_probe * p1
    ParamVector g1;  ///< -grad f(x1)
    ParamVector g2;  ///< -grad f(x2)
    ParamVector p1;  ///< unit vector orthogonal to g1
    double h_probe = 0.0;
    double h_step = 0.0;  ///< h multiplying cot(theta); differs from h_probe only in constrained mode
    double theta = 0.0;   ///< radians, epsilon included
    double d_raw = 0.0;   ///< h_step * cot(theta)
    double d_used = 0.0;  ///< after doubling / clamping
    bool doubled = false;
    double d_avg = 0.0;   ///< EMA after this step's update
    double f_before = 0.0;
    double f_after = 0.0;
    ParamVector x_new;
};

struct StepResult {
    ParamVector x_new;
    StepTrace trace;
};

/// The gradient vanished at x; the angle construction is undefined there.
class StationaryPointError : public Error {
public:
    explicit StationaryPointError(ParamVector x)
        : Error("stationary point: gradient is exactly zero"), x_(std::move(x)) {}
    const ParamVector& point() const noexcept { return x_; }

private:
    ParamVector x_;
};

/// A step produced a non-finite quantity. Carries the partial trace.
class NumericalError : public Error {
public:
    NumericalError(const std::string& what, StepTrace trace) : Error(what), trace_(std::move(trace)) {}
    const StepTrace& trace() const noexcept { return trace_; }

private:
    StepTrace trace_;
};

/// d_avg <- beta * d_avg + (1 - beta) * d (first_step mode: the first call sets d_avg = d).
double update_average(DycentState& state, const DycentConfig& cfg, double d);

/// (2d, true) iff doubling is enabled and d < d_avg, else (d, false).
std::pair<double, bool> maybe_double(double d, double d_avg, const DycentConfig& cfg);

/// One iteration with the fixed probe distance cfg.h.
///
/// Throws StationaryPointError when grad f(x) == 0 and NumericalError when
/// the step size comes out non-finite.
StepResult dycent_step(const ParamVector& x, const Objective& obj, const DycentConfig& cfg, DycentState& state);

/// Settings of the constrained mode used by the descent checks.
///
/// The probe distance is probe_fraction * |grad f| / L. After measuring
/// theta, the step's h is replaced by the largest admissible value
/// |grad f| / (L cot theta), so every step has length |grad f| / L. Doubling
/// is never applied in this mode since it would break the bound.
struct ConstrainedMode {
    double lipschitz = 1.0;
    double probe_fraction = 0.1;
};

StepResult dycent_step_constrained(const ParamVector& x, const Objective& obj, const DycentConfig& cfg,
                                   DycentState& state, const ConstrainedMode& mode);

struct DycentRun {
    std::vector<StepTrace> traces;
    ParamVector x_final;
    bool stopped_at_stationary = false;
};

/// Up to max_iters steps from x0 with a state seeded by seed; stops early at
/// a stationary point. NumericalError propagates with the offending trace.
DycentRun run(const ParamVector& x0, const Objective& obj, const DycentConfig& cfg, std::int64_t max_iters,
              std::uint64_t seed);

DycentRun run_constrained(const ParamVector& x0, const Objective& obj, const DycentConfig& cfg,
                          const ConstrainedMode& mode, std::int64_t max_iters, std::uint64_t seed);

} // namespace dycent
