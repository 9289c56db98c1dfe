#include "dycent/optimizer.hpp"

#include <cmath>
#include <string>

#include "dycent/theory.hpp"

namespace dycent {

void DycentConfig::validate() const {
    if (!(h > 0.0) || !std::isfinite(h)) throw ConfigError("dycent: h must be a positive finite number");
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw ConfigError("dycent: epsilon must be > 0");
    if (!(beta >= 0.0 && beta < 1.0)) throw ConfigError("dycent: beta must lie in [0, 1)");
}

double update_average(DycentState& state, const DycentConfig& cfg, double d) {
    if (!state.has_average && cfg.d_avg_init == AverageInit::first_step) {
        state.d_avg = d;
    } else {
        state.d_avg = cfg.beta * state.d_avg + (1.0 - cfg.beta) * d;
    }
    state.has_average = true;
    return state.d_avg;
}

std::pair<double, bool> maybe_double(double d, double d_avg, const DycentConfig& cfg) {
    if (cfg.enable_doubling && d < d_avg) return {2.0 * d, true};
    return {d, false};
}

namespace {

double cot(double theta) { return std::cos(theta) / std::sin(theta); }

// Steps 2-7: gradient, perpendicular probe, second gradient, angle.
StepTrace probe(const ParamVector& x, const Objective& obj, double h_probe, const DycentConfig& cfg,
                DycentState& state) {
    StepTrace t;
    t.x1 = x;
    t.f_before = obj.value(x);
    t.g1 = -obj.gradient(x);
    const double g1_norm = norm(t.g1);
    if (g1_norm == 0.0) throw StationaryPointError(x);
    if (!std::isfinite(g1_norm)) throw NumericalError("dycent: non-finite gradient", t);

    t.p1 = sample_perpendicular(t.g1, state.rng);
    t.h_probe = h_probe;
    t.x2 = x;
    axpy(-h_probe, t.p1, t.x2);
    t.g2 = -obj.gradient(t.x2);
    const double g2_norm = norm(t.g2);
    if (!(g2_norm > 0.0) || !std::isfinite(g2_norm)) {
        throw NumericalError("dycent: probe gradient is zero or non-finite", t);
    }
    t.theta = angle_between(t.g1, t.g2) + cfg.epsilon;
    return t;
}

// Step 13: move d_used along the normalized g1.
StepResult finish(StepTrace t, const Objective& obj, DycentState& state) {
    if (!std::isfinite(t.d_used)) {
        throw NumericalError("dycent: non-finite step size (theta=" + std::to_string(t.theta) + ")", t);
    }
    t.x_new = t.x1;
    axpy(t.d_used / norm(t.g1), t.g1, t.x_new);
    t.f_after = obj.value(t.x_new);
    ++state.step_count;
    ParamVector x_new = t.x_new;
    return {std::move(x_new), std::move(t)};
}

} // namespace

StepResult dycent_step(const ParamVector& x, const Objective& obj, const DycentConfig& cfg, DycentState& state) {
    if (x.size() < 2) throw DimensionError("dycent_step: dimension must be >= 2");
    StepTrace t = probe(x, obj, cfg.h, cfg, state);
    t.h_step = cfg.h;
    t.d_raw = cfg.h * cot(t.theta);
    if (!std::isfinite(t.d_raw)) throw NumericalError("dycent: non-finite step size", t);

    t.d_avg = update_average(state, cfg, t.d_raw);
    auto [d, doubled] = maybe_double(t.d_raw, t.d_avg, cfg);
    if (cfg.clamp_nonnegative_step) d = std::max(d, 0.0);
    t.d_used = d;
    t.doubled = doubled;
    return finish(std::move(t), obj, state);
}

StepResult dycent_step_constrained(const ParamVector& x, const Objective& obj, const DycentConfig& cfg,
                                   DycentState& state, const ConstrainedMode& mode) {
    if (x.size() < 2) throw DimensionError("dycent_step_constrained: dimension must be >= 2");
    if (!(mode.lipschitz > 0.0)) throw ConfigError("constrained mode: Lipschitz constant must be > 0");
    if (!(mode.probe_fraction > 0.0)) throw ConfigError("constrained mode: probe_fraction must be > 0");

    const double grad_norm = norm(obj.gradient(x));
    if (grad_norm == 0.0) throw StationaryPointError(x);
    StepTrace t = probe(x, obj, mode.probe_fraction * grad_norm / mode.lipschitz, cfg, state);

    t.h_step = constrained_h(grad_norm, mode.lipschitz, t.theta);
    t.d_raw = t.h_step * cot(t.theta);
    t.d_avg = update_average(state, cfg, t.d_raw);
    t.d_used = t.d_raw;
    t.doubled = false;
    return finish(std::move(t), obj, state);
}

namespace {

template <typename StepFn>
DycentRun run_loop(const ParamVector& x0, std::int64_t max_iters, StepFn&& step) {
    if (max_iters < 1) throw ConfigError("run: max_iters must be >= 1");
    DycentRun out;
    out.traces.reserve(static_cast<std::size_t>(max_iters));
    ParamVector x = x0;
    for (std::int64_t it = 0; it < max_iters; ++it) {
        try {
            StepResult r = step(x);
            x = std::move(r.x_new);
            out.traces.push_back(std::move(r.trace));
        } catch (const StationaryPointError&) {
            out.stopped_at_stationary = true;
            break;
        }
    }
    out.x_final = std::move(x);
    return out;
}

} // namespace

DycentRun run(const ParamVector& x0, const Objective& obj, const DycentConfig& cfg, std::int64_t max_iters,
              std::uint64_t seed) {
    cfg.validate();
    DycentState state(seed);
    return run_loop(x0, max_iters, [&](const ParamVector& x) { return dycent_step(x, obj, cfg, state); });
}

DycentRun run_constrained(const ParamVector& x0, const Objective& obj, const DycentConfig& cfg,
                          const ConstrainedMode& mode, std::int64_t max_iters, std::uint64_t seed) {
    cfg.validate();
    DycentState state(seed);
    return run_loop(x0, max_iters,
                    [&](const ParamVector& x) { return dycent_step_constrained(x, obj, cfg, state, mode); });
}

} // namespace dycent
