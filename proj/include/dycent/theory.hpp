#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dycent/errors.hpp"
#include "dycent/objective.hpp"
#include "dycent/optimizer.hpp"

namespace dycent {

/// theta >= pi/2 makes cot(theta) <= 0 and the h bound meaningless.
class VacuousConstraintError : public Error {
public:
    using Error::Error;
};

/// Largest admissible probe distance grad_norm / (L cot theta).
///
/// Uses the gradient norm, the quantity the descent argument substitutes;
/// the step h * cot(theta) then equals grad_norm / L exactly.
double constrained_h(double grad_norm, double lipschitz, double theta);

struct DescentReport {
    std::size_t steps_checked = 0;
    std::size_t violations = 0;
    /// min over steps of (f_before - f_after) - |grad f|^2 / (2L); +inf when empty
    double min_decrease_margin = 0.0;
    std::vector<double> constrained_h_used;
};

/// Counts steps with f_after > f_before - |grad f(x1)|^2 / (2L) + tol.
DescentReport check_descent(std::span<const StepTrace> trajectory, double lipschitz, double tol = 1e-10);

struct WolfeReport {
    double c1 = 0.0;
    double c2 = 0.0;
    std::vector<bool> armijo_pass;
    std::vector<bool> curvature_pass;

    double armijo_rate() const;
    double curvature_rate() const;
};

/// Sufficient decrease f(x1 + a p) <= f(x1) + c1 a grad f(x1)^T p with
/// p = -grad f(x1) and a = d_used / |grad f(x1)|, so that x_new = x1 + a p.
/// tol absorbs rounding when the inequality is tight.
bool check_armijo(const StepTrace& trace, double c1, double tol = 1e-10);

/// Strong curvature condition |grad f(x_new)^T p| <= c2 |grad f(x1)^T p|.
/// Measurement only: the method does not guarantee it. obj must evaluate
/// the same data the step saw.
bool check_curvature(const StepTrace& trace, const Objective& obj, double c2);

/// Evaluates both Wolfe conditions on every step; requires 0 < c1 < c2 < 1.
WolfeReport check_wolfe(std::span<const StepTrace> trajectory, const Objective& obj, double c1, double c2);

/// Axis-aligned sampling box [lo, hi]^n.
struct SampleBox {
    double lo = -1.0;
    double hi = 1.0;
};

/// max over all sampled pairs of |grad f(x) - grad f(y)| / |x - y|: a lower
/// bound on the true Lipschitz constant over the box.
double estimate_lipschitz(const Objective& obj, std::size_t region_samples, RngHandle& rng, SampleBox box = {});

} // namespace dycent
