#include "dycent/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace dycent {

double constrained_h(double grad_norm, double lipschitz, double theta) {
    if (!(lipschitz > 0.0)) throw ConfigError("constrained_h: Lipschitz constant must be > 0");
    if (!(theta > 0.0)) throw ConfigError("constrained_h: theta must be > 0");
    if (theta >= std::numbers::pi / 2) {
        throw VacuousConstraintError("constrained_h: theta >= pi/2 gives cot(theta) <= 0 (theta=" +
                                     std::to_string(theta) + ")");
    }
    return grad_norm / (lipschitz * (std::cos(theta) / std::sin(theta)));
}

DescentReport check_descent(std::span<const StepTrace> trajectory, double lipschitz, double tol) {
    if (!(lipschitz > 0.0)) throw ConfigError("check_descent: Lipschitz constant must be > 0");
    DescentReport r;
    r.min_decrease_margin = std::numeric_limits<double>::infinity();
    for (const StepTrace& t : trajectory) {
        const double g = norm(t.g1);
        const double bound = g * g / (2.0 * lipschitz);
        const double margin = (t.f_before - t.f_after) - bound;
        r.min_decrease_margin = std::min(r.min_decrease_margin, margin);
        if (t.f_after > t.f_before - bound + tol) ++r.violations;
        r.constrained_h_used.push_back(t.h_step);
        ++r.steps_checked;
    }
    return r;
}

double WolfeReport::armijo_rate() const {
    if (armijo_pass.empty()) return 1.0;
    return static_cast<double>(std::count(armijo_pass.begin(), armijo_pass.end(), true)) /
           static_cast<double>(armijo_pass.size());
}

double WolfeReport::curvature_rate() const {
    if (curvature_pass.empty()) return 1.0;
    return static_cast<double>(std::count(curvature_pass.begin(), curvature_pass.end(), true)) /
           static_cast<double>(curvature_pass.size());
}

bool check_armijo(const StepTrace& trace, double c1, double tol) {
    const double g = norm(trace.g1);
    if (g == 0.0) return trace.f_after <= trace.f_before + tol;
    // grad^T p = -|g|^2 and alpha = d_used / |g|.
    const double alpha = trace.d_used / g;
    return trace.f_after <= trace.f_before - c1 * alpha * g * g + tol;
}

bool check_curvature(const StepTrace& trace, const Objective& obj, double c2) {
    // g1 = -grad f(x1) is p itself.
    const ParamVector& p = trace.g1;
    const double lhs = std::abs(dot(obj.gradient(trace.x_new), p));
    const double rhs = std::abs(dot(trace.g1, p));
    return lhs <= c2 * rhs;
}

WolfeReport check_wolfe(std::span<const StepTrace> trajectory, const Objective& obj, double c1, double c2) {
    if (!(0.0 < c1 && c1 < c2 && c2 < 1.0)) throw ConfigError("check_wolfe: need 0 < c1 < c2 < 1");
    WolfeReport r;
    r.c1 = c1;
    r.c2 = c2;
    for (const StepTrace& t : trajectory) {
        r.armijo_pass.push_back(check_armijo(t, c1));
        r.curvature_pass.push_back(check_curvature(t, obj, c2));
    }
    return r;
}

double estimate_lipschitz(const Objective& obj, std::size_t region_samples, RngHandle& rng, SampleBox box) {
    if (region_samples < 2) throw ConfigError("estimate_lipschitz: need at least 2 samples");
    if (!(box.hi > box.lo)) throw ConfigError("estimate_lipschitz: empty sampling box");
    std::vector<ParamVector> xs;
    std::vector<ParamVector> gs;
    xs.reserve(region_samples);
    gs.reserve(region_samples);
    for (std::size_t k = 0; k < region_samples; ++k) {
        ParamVector x(obj.dim());
        for (double& v : x) v = rng.uniform(box.lo, box.hi);
        gs.push_back(obj.gradient(x));
        xs.push_back(std::move(x));
    }
    double best = 0.0;
    for (std::size_t i = 0; i < region_samples; ++i) {
        for (std::size_t j = i + 1; j < region_samples; ++j) {
            const double dx = norm(xs[i] - xs[j]);
            if (dx == 0.0) continue;
            best = std::max(best, norm(gs[i] - gs[j]) / dx);
        }
    }
    return best;
}

} // namespace dycent
