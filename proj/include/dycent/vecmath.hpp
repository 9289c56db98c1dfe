#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <vector>

namespace dycent {

/// Flat real-valued parameter / gradient vector.
///
/// The length is fixed at construction; arithmetic between vectors of
/// different lengths throws DimensionError.
class ParamVector {
public:
    ParamVector() = default;
    explicit ParamVector(std::size_t n, double fill = 0.0) : values_(n, fill) {}
    ParamVector(std::initializer_list<double> il) : values_(il) {}
    explicit ParamVector(std::vector<double> values) : values_(std::move(values)) {}

    std::size_t size() const noexcept { return values_.size(); }
    bool empty() const noexcept { return values_.empty(); }

    double& operator[](std::size_t i) noexcept { return values_[i]; }
    double operator[](std::size_t i) const noexcept { return values_[i]; }

    auto begin() noexcept { return values_.begin(); }
    auto end() noexcept { return values_.end(); }
    auto begin() const noexcept { return values_.begin(); }
    auto end() const noexcept { return values_.end(); }

    std::span<double> span() noexcept { return values_; }
    std::span<const double> span() const noexcept { return values_; }
    const std::vector<double>& values() const noexcept { return values_; }

    bool all_finite() const noexcept;

    ParamVector& operator+=(const ParamVector& other);
    ParamVector& operator-=(const ParamVector& other);
    ParamVector& operator*=(double s) noexcept;

    friend bool operator==(const ParamVector&, const ParamVector&) = default;

private:
    std::vector<double> values_;
};

ParamVector operator+(ParamVector a, const ParamVector& b);
ParamVector operator-(ParamVector a, const ParamVector& b);
ParamVector operator*(double s, ParamVector a);
ParamVector operator*(ParamVector a, double s);
ParamVector operator-(ParamVector a);

/// y += alpha * x
void axpy(double alpha, const ParamVector& x, ParamVector& y);

double dot(const ParamVector& a, const ParamVector& b);
double norm(const ParamVector& a) noexcept;
double max_abs_diff(const ParamVector& a, const ParamVector& b);

/// Seeded random stream with a platform-independent output sequence.
///
/// Built on mt19937_64 (whose output is fixed by the standard); uniform and
/// normal variates are derived here rather than through <random>
/// distributions, whose algorithms are implementation-defined.
class RngHandle {
public:
    explicit RngHandle(std::uint64_t seed = 0) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const noexcept { return seed_; }

    std::uint64_t next_u64() { return engine_(); }
    /// Uniform on [0, 1) with 53 random mantissa bits.
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Uniform integer in [0, n); n > 0.
    std::uint64_t uniform_index(std::uint64_t n);
    double normal();
    ParamVector normal_vector(std::size_t n);

    /// In-place Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::swap(items[i - 1], items[uniform_index(i)]);
        }
    }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

/// Random unit vector orthogonal to g, uniform on the unit sphere of g's
/// orthogonal hyperplane (Gaussian draw, project out g, normalize).
///
/// Throws ZeroGradientError for g == 0 and DimensionError for size < 2.
ParamVector sample_perpendicular(const ParamVector& g, RngHandle& rng);

/// Angle in radians between a and b, in [0, pi], from the half-angle
/// formula on the normalized vectors. Throws ZeroGradientError on zero-norm input.
double angle_between(const ParamVector& a, const ParamVector& b);

constexpr double rad_to_deg(double rad) noexcept { return rad * 57.29577951308232; }

} // namespace dycent
