#include "dycent/vecmath.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "dycent/errors.hpp"

namespace dycent {
namespace {

void require_same_size(const ParamVector& a, const ParamVector& b, const char* op) {
    if (a.size() != b.size()) {
        throw DimensionError(std::string(op) + ": length mismatch (" + std::to_string(a.size()) +
                             " vs " + std::to_string(b.size()) + ")");
    }
}

} // namespace

bool ParamVector::all_finite() const noexcept {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

ParamVector& ParamVector::operator+=(const ParamVector& other) {
    require_same_size(*this, other, "operator+=");
    for (std::size_t i = 0; i < size(); ++i) values_[i] += other.values_[i];
    return *this;
}

ParamVector& ParamVector::operator-=(const ParamVector& other) {
    require_same_size(*this, other, "operator-=");
    for (std::size_t i = 0; i < size(); ++i) values_[i] -= other.values_[i];
    return *this;
}

ParamVector& ParamVector::operator*=(double s) noexcept {
    for (double& v : values_) v *= s;
    return *this;
}

ParamVector operator+(ParamVector a, const ParamVector& b) { return a += b; }
ParamVector operator-(ParamVector a, const ParamVector& b) { return a -= b; }
ParamVector operator*(double s, ParamVector a) { return a *= s; }
ParamVector operator*(ParamVector a, double s) { return a *= s; }
ParamVector operator-(ParamVector a) { return a *= -1.0; }

void axpy(double alpha, const ParamVector& x, ParamVector& y) {
    require_same_size(x, y, "axpy");
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

double dot(const ParamVector& a, const ParamVector& b) {
    require_same_size(a, b, "dot");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm(const ParamVector& a) noexcept {
    // Scaled accumulation avoids overflow for very large entries.
    double scale = 0.0;
    for (double v : a) scale = std::max(scale, std::abs(v));
    if (scale == 0.0 || !std::isfinite(scale)) return scale;
    double s = 0.0;
    for (double v : a) {
        const double r = v / scale;
        s += r * r;
    }
    return scale * std::sqrt(s);
}

double max_abs_diff(const ParamVector& a, const ParamVector& b) {
    require_same_size(a, b, "max_abs_diff");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

double RngHandle::uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::uint64_t RngHandle::uniform_index(std::uint64_t n) {
    if (n == 0) throw ConfigError("uniform_index: empty range");
    // Rejection sampling removes modulo bias.
    const std::uint64_t limit = (~std::uint64_t{0}) - (~std::uint64_t{0}) % n;
    std::uint64_t r = engine_();
    while (r >= limit) r = engine_();
    return r % n;
}

double RngHandle::normal() {
    // Box-Muller; u1 in (0, 1] keeps the log finite.
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

ParamVector RngHandle::normal_vector(std::size_t n) {
    ParamVector v(n);
    for (double& x : v) x = normal();
    return v;
}

ParamVector sample_perpendicular(const ParamVector& g, RngHandle& rng) {
    if (g.size() < 2) {
        throw DimensionError("sample_perpendicular: no perpendicular direction exists for n < 2");
    }
    const double gnorm = norm(g);
    if (!(gnorm > 0.0)) throw ZeroGradientError("sample_perpendicular: zero vector has no orthogonal plane");
    ParamVector unit_g = (1.0 / gnorm) * g;
    for (;;) {
        ParamVector z = rng.normal_vector(g.size());
        const double znorm = norm(z);
        // Two projection passes: the second removes the rounding residue of the first.
        for (int pass = 0; pass < 2; ++pass) axpy(-dot(z, unit_g), unit_g, z);
        const double pnorm = norm(z);
        if (pnorm < 1e-12 * znorm || pnorm == 0.0) continue;
        z *= 1.0 / pnorm;
        return z;
    }
}

double angle_between(const ParamVector& a, const ParamVector& b) {
    require_same_size(a, b, "angle_between");
    const double na = norm(a);
    const double nb = norm(b);
    if (!(na > 0.0) || !(nb > 0.0)) throw ZeroGradientError("angle_between: zero-norm input");
    // 2*atan2(|u - v|, |u + v|) on the unit vectors: accurate near 0 and pi,
    // where arccos of a rounded cosine loses about half the digits.
    ParamVector diff(a.size()), sum(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double u = a[i] / na;
        const double v = b[i] / nb;
        diff[i] = u - v;
        sum[i] = u + v;
    }
    return 2.0 * std::atan2(norm(diff), norm(sum));
}

} // namespace dycent
