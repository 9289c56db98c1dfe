#include "dycent/baselines.hpp"

#include <array>
#include <cmath>
#include <string>

#include "dycent/errors.hpp"

namespace dycent {
namespace {

constexpr std::array<std::pair<BaselineMethod, std::string_view>, 8> kNames{{
    {BaselineMethod::sgd, "sgd"},
    {BaselineMethod::sgdm, "sgdm"},
    {BaselineMethod::adam, "adam"},
    {BaselineMethod::rmsprop, "rmsprop"},
    {BaselineMethod::adabelief, "adabelief"},
    {BaselineMethod::diffgrad, "diffgrad"},
    {BaselineMethod::angulargrad_cos, "angulargrad_cos"},
    {BaselineMethod::angulargrad_tan, "angulargrad_tan"},
}};

void ensure_sized(BaselineState& s, std::size_t n) {
    if (s.m.size() == n) return;
    if (s.step != 0) throw DimensionError("baseline: parameter dimension changed mid-run");
    s.m = ParamVector(n);
    s.v = ParamVector(n);
    s.prev_grad = ParamVector(n);
    s.prev_angle = ParamVector(n);
    s.last_coefficient = ParamVector(n, 1.0);
}

} // namespace

std::string_view to_string(BaselineMethod m) noexcept {
    for (const auto& [method, name] : kNames) {
        if (method == m) return name;
    }
    return "?";
}

BaselineMethod parse_baseline_method(std::string_view name) {
    for (const auto& [method, n] : kNames) {
        if (n == name) return method;
    }
    std::string valid;
    for (const auto& [method, n] : kNames) valid += (valid.empty() ? "" : ", ") + std::string(n);
    throw ConfigError("unknown baseline optimizer '" + std::string(name) + "' (valid: " + valid + ")");
}

const std::vector<BaselineMethod>& all_baseline_methods() {
    static const std::vector<BaselineMethod> methods = [] {
        std::vector<BaselineMethod> out;
        for (const auto& [m, n] : kNames) out.push_back(m);
        return out;
    }();
    return methods;
}

BaselineConfig BaselineConfig::defaults(BaselineMethod method) {
    BaselineConfig c;
    c.method = method;
    if (method == BaselineMethod::rmsprop) c.beta2 = 0.99;
    return c;
}

void BaselineConfig::validate() const {
    if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("baseline: lr must be > 0");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("baseline: momentum must lie in [0, 1)");
    if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigError("baseline: beta1 must lie in [0, 1)");
    if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("baseline: beta2 must lie in [0, 1)");
    if (!(eps > 0.0)) throw ConfigError("baseline: eps must be > 0");
}

double diffgrad_friction(double prev_grad, double grad) noexcept {
    return 1.0 / (1.0 + std::exp(-std::abs(prev_grad - grad)));
}

double angulargrad_angle(double prev_grad, double grad) noexcept {
    return std::atan(std::abs((prev_grad - grad) / (1.0 + prev_grad * grad)));
}

double angulargrad_coefficient(double angle, BaselineMethod variant) {
    switch (variant) {
    case BaselineMethod::angulargrad_cos: return 0.5 * std::tanh(std::abs(std::cos(angle))) + 0.5;
    case BaselineMethod::angulargrad_tan: return 0.5 * std::tanh(std::abs(std::tan(angle))) + 0.5;
    default: throw ConfigError("angulargrad_coefficient: not an AngularGrad variant");
    }
}

ParamVector baseline_update(const ParamVector& x, const ParamVector& grad, const BaselineConfig& cfg,
                            BaselineState& s) {
    if (x.size() != grad.size()) throw DimensionError("baseline_update: gradient length differs from x");
    ensure_sized(s, x.size());
    ++s.step;
    const std::size_t n = x.size();
    const double t = static_cast<double>(s.step);
    const double bc1 = 1.0 - std::pow(cfg.beta1, t);
    const double bc2 = 1.0 - std::pow(cfg.beta2, t);
    ParamVector out = x;

    switch (cfg.method) {
    case BaselineMethod::sgd:
        axpy(-cfg.lr, grad, out);
        break;

    case BaselineMethod::sgdm:
        for (std::size_t i = 0; i < n; ++i) {
            s.m[i] = cfg.momentum * s.m[i] + grad[i];
            out[i] -= cfg.lr * s.m[i];
        }
        break;

    case BaselineMethod::rmsprop:
        for (std::size_t i = 0; i < n; ++i) {
            s.v[i] = cfg.beta2 * s.v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
            out[i] -= cfg.lr * grad[i] / (std::sqrt(s.v[i]) + cfg.eps);
        }
        break;

    case BaselineMethod::adam:
        for (std::size_t i = 0; i < n; ++i) {
            s.m[i] = cfg.beta1 * s.m[i] + (1.0 - cfg.beta1) * grad[i];
            s.v[i] = cfg.beta2 * s.v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
            const double m_hat = s.m[i] / bc1;
            const double v_hat = s.v[i] / bc2;
            out[i] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
        }
        break;

    case BaselineMethod::adabelief:
        for (std::size_t i = 0; i < n; ++i) {
            s.m[i] = cfg.beta1 * s.m[i] + (1.0 - cfg.beta1) * grad[i];
            const double r = grad[i] - s.m[i];
            s.v[i] = cfg.beta2 * s.v[i] + (1.0 - cfg.beta2) * r * r + cfg.eps;
            const double denom = std::sqrt(s.v[i]) / std::sqrt(bc2) + cfg.eps;
            out[i] -= (cfg.lr / bc1) * s.m[i] / denom;
        }
        break;

    case BaselineMethod::diffgrad:
        for (std::size_t i = 0; i < n; ++i) {
            s.m[i] = cfg.beta1 * s.m[i] + (1.0 - cfg.beta1) * grad[i];
            s.v[i] = cfg.beta2 * s.v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
            const double friction = diffgrad_friction(s.prev_grad[i], grad[i]);
            s.last_coefficient[i] = friction;
            const double step_size = cfg.lr * std::sqrt(bc2) / bc1;
            out[i] -= step_size * friction * s.m[i] / (std::sqrt(s.v[i]) + cfg.eps);
            s.prev_grad[i] = grad[i];
        }
        break;

    case BaselineMethod::angulargrad_cos:
    case BaselineMethod::angulargrad_tan:
        for (std::size_t i = 0; i < n; ++i) {
            s.m[i] = cfg.beta1 * s.m[i] + (1.0 - cfg.beta1) * grad[i];
            s.v[i] = cfg.beta2 * s.v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
            const double angle = angulargrad_angle(s.prev_grad[i], grad[i]);
            // The smaller of the current and previous angle drives the coefficient.
            const double chosen = s.step == 1 ? angle : std::min(angle, s.prev_angle[i]);
            const double coef = angulargrad_coefficient(chosen, cfg.method);
            s.last_coefficient[i] = coef;
            const double step_size = cfg.lr * std::sqrt(bc2) / bc1;
            out[i] -= step_size * coef * s.m[i] / (std::sqrt(s.v[i]) + cfg.eps);
            s.prev_grad[i] = grad[i];
            s.prev_angle[i] = angle;
        }
        break;
    }
    return out;
}

ParamVector baseline_step(const ParamVector& x, const Objective& obj, const BaselineConfig& cfg,
                          BaselineState& state) {
    return baseline_update(x, obj.gradient(x), cfg, state);
}

BaselineRun run_baseline(const ParamVector& x0, const Objective& obj, const BaselineConfig& cfg,
                         std::int64_t max_iters, std::uint64_t /*seed*/) {
    if (max_iters < 1) throw ConfigError("run_baseline: max_iters must be >= 1");
    cfg.validate();
    BaselineRun out;
    out.records.reserve(static_cast<std::size_t>(max_iters));
    BaselineState state;
    ParamVector x = x0;
    for (std::int64_t it = 0; it < max_iters; ++it) {
        const ParamVector g = obj.gradient(x);
        TrajectoryRecord rec;
        rec.iter = it;
        rec.f = obj.value(x);
        rec.grad_norm = norm(g);
        out.records.push_back(rec);
        if (rec.grad_norm == 0.0) {
            out.stopped_at_stationary = true;
            break;
        }
        x = baseline_update(x, g, cfg, state);
    }
    out.x_final = std::move(x);
    return out;
}

} // namespace dycent
