#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>

#include "dycent/errors.hpp"
#include "dycent/objective.hpp"
#include "dycent/optimizer.hpp"

using namespace dycent;

namespace {

DycentConfig exact_cfg(double h) {
    DycentConfig c;
    c.h = h;
    c.epsilon = 1e-12;
    c.enable_doubling = false;
    return c;
}

void check_trace_consistency(const StepTrace& t, const DycentConfig& cfg) {
    CHECK(t.theta >= cfg.epsilon);
    CHECK(std::abs(dot(t.p1, t.g1)) <= 1e-10 * norm(t.g1));
    CHECK(std::abs(norm(t.p1) - 1.0) <= 1e-12);
    for (std::size_t i = 0; i < t.x1.size(); ++i) CHECK(t.x2[i] == t.x1[i] - t.h_probe * t.p1[i]);
    const double cot = 1.0 / std::tan(t.theta);
    CHECK(std::abs(t.d_raw - t.h_step * cot) <= 1e-12 * std::abs(t.h_step * cot) + 1e-300);
    if (t.doubled) CHECK(t.d_used == 2.0 * t.d_raw);
    const ParamVector expect = t.x1 + (t.d_used / norm(t.g1)) * t.g1;
    CHECK(max_abs_diff(expect, t.x_new) <= 1e-12 * (1.0 + norm(t.x1) + std::abs(t.d_used)));
}

} // namespace

TEST_CASE("config validation") {
    DycentConfig c;
    CHECK_NOTHROW(c.validate());
    c.h = 0.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.epsilon = 0.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.beta = 1.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c.beta = -0.1;
    CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("one step reaches the minimum of the isotropic quadratic") {
    auto f = isotropic_quadratic(2);
    SUBCASE("epsilon 1e-12") {
        DycentState s(1);
        const DycentConfig cfg = exact_cfg(0.1);
        const StepResult r = dycent_step({1.0, 0.0}, *f, cfg, s);
        CHECK(r.trace.theta == doctest::Approx(std::atan(0.1)).epsilon(1e-10));
        CHECK(r.trace.d_raw == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(norm(r.x_new) <= 1e-6);
        check_trace_consistency(r.trace, cfg);
    }
    SUBCASE("epsilon 1e-8") {
        DycentState s(1);
        DycentConfig cfg = exact_cfg(0.1);
        cfg.epsilon = 1e-8;
        CHECK(norm(dycent_step({1.0, 0.0}, *f, cfg, s).x_new) <= 1e-6);
    }
    SUBCASE("theta = pi/4 gives d = h") {
        DycentState s(2);
        const StepResult r = dycent_step({0.01, 0.0}, *f, exact_cfg(0.01), s);
        CHECK(r.trace.theta == doctest::Approx(std::numbers::pi / 4).epsilon(1e-10));
        CHECK(r.trace.d_raw == doctest::Approx(0.01).epsilon(1e-9));
    }
}

TEST_CASE("step-size averaging") {
    DycentConfig zero;
    zero.d_avg_init = AverageInit::zero;
    DycentState s;
    CHECK(update_average(s, zero, 1.0) == doctest::Approx(0.1).epsilon(1e-15));

    DycentConfig first;
    DycentState s2;
    CHECK(update_average(s2, first, 0.5) == 0.5);
    CHECK(update_average(s2, first, 1.5) == doctest::Approx(0.6).epsilon(1e-15));

    DycentConfig none;
    none.beta = 0.0;
    DycentState s3;
    for (double d : {0.3, -2.0, 7.0}) CHECK(update_average(s3, none, d) == d);
}

TEST_CASE("doubling rule") {
    DycentConfig c;
    CHECK(maybe_double(0.05, 0.1, c) == std::pair{0.1, true});
    CHECK(maybe_double(0.2, 0.1, c) == std::pair{0.2, false});
    CHECK(maybe_double(0.1, 0.1, c) == std::pair{0.1, false});
    c.enable_doubling = false;
    CHECK(maybe_double(0.05, 0.1, c) == std::pair{0.05, false});
}

TEST_CASE("stationary and degenerate inputs") {
    auto a = toy_a();
    DycentState s;
    CHECK_THROWS_AS(dycent_step({-2.0, 0.0}, *a, DycentConfig{}, s), StationaryPointError);
    CHECK(s.step_count == 0);
    const DycentRun r = run({-2.0, 0.0}, *a, DycentConfig{}, 10, 0);
    CHECK(r.traces.empty());
    CHECK(r.stopped_at_stationary);
    CHECK(r.x_final == ParamVector{-2.0, 0.0});

    auto q = isotropic_quadratic(2);
    CHECK_THROWS_AS(run({1.0, 1.0}, *q, DycentConfig{}, 0, 0), ConfigError);
    auto q1 = isotropic_quadratic(1);
    CHECK_THROWS_AS(dycent_step({1.0}, *q1, DycentConfig{}, s), DimensionError);
    DycentConfig bad;
    bad.h = -1.0;
    CHECK_THROWS_AS(run({1.0, 1.0}, *q, bad, 5, 0), ConfigError);
}

TEST_CASE("pathological angle raises a numerical error carrying the trace") {
    // A linear surface has identical gradients everywhere, so theta is just
    // epsilon; with a tiny epsilon cot overflows to a huge but finite value
    // while an absurd h makes the step non-finite.
    auto l = linear({1.0, 1.0});
    DycentConfig cfg;
    cfg.h = 1e300;
    cfg.epsilon = 1e-300;
    DycentState s;
    try {
        dycent_step({0.0, 0.0}, *l, cfg, s);
        FAIL("expected NumericalError");
    } catch (const NumericalError& e) {
        CHECK(e.trace().x1 == ParamVector{0.0, 0.0});
        CHECK(e.trace().theta == doctest::Approx(1e-300));
    }
}

TEST_CASE("toy B run from (3, 3)") {
    auto b = toy_b();
    const DycentConfig cfg;
    const DycentRun r = run({3.0, 3.0}, *b, cfg, 1000, 7);
    CHECK(r.traces.size() == 1000);
    std::uint64_t i = 0;
    for (const auto& t : r.traces) {
        CHECK(t.x_new.all_finite());
        CHECK(std::isfinite(t.d_used));
        CHECK(std::isfinite(t.d_avg));
        check_trace_consistency(t, cfg);
        ++i;
    }
    CHECK(r.x_final == r.traces.back().x_new);
}

TEST_CASE("isotropic convergence within three iterations") {
    RngHandle rng(17);
    for (int k = 0; k < 50; ++k) {
        const std::size_t n = 2 + rng.uniform_index(8);
        auto f = isotropic_quadratic(n);
        ParamVector x0 = rng.normal_vector(n);
        x0 *= rng.uniform(0.1, 10.0) / norm(x0);
        DycentConfig cfg;
        cfg.epsilon = 1e-12;
        const DycentRun r = run(x0, *f, cfg, 3, rng.next_u64());
        CHECK(norm(r.x_final) <= 1e-6);
    }
}

TEST_CASE("determinism and scale equivariance") {
    auto b = toy_b();
    std::shared_ptr<Objective> inner = toy_b();
    auto b10 = scaled(inner, 10.0);
    const DycentConfig cfg;
    const DycentRun r1 = run({3.0, 3.0}, *b, cfg, 300, 5);
    const DycentRun r2 = run({3.0, 3.0}, *b, cfg, 300, 5);
    const DycentRun r10 = run({3.0, 3.0}, *b10, cfg, 300, 5);
    REQUIRE(r1.traces.size() == r2.traces.size());
    REQUIRE(r1.traces.size() == r10.traces.size());
    for (std::size_t i = 0; i < r1.traces.size(); ++i) {
        CHECK(r1.traces[i].x_new == r2.traces[i].x_new);
        CHECK(r1.traces[i].theta == r2.traces[i].theta);
        CHECK(max_abs_diff(r1.traces[i].x_new, r10.traces[i].x_new) <= 1e-12);
    }
    const DycentRun other = run({3.0, 3.0}, *b, cfg, 300, 6);
    CHECK_FALSE(other.traces.back().x_new == r1.traces.back().x_new);
}

TEST_CASE("clamped steps are never negative") {
    auto r = rosenbrock(4);
    DycentConfig cfg;
    cfg.enable_doubling = false;
    cfg.clamp_nonnegative_step = true;
    cfg.h = 0.5;
    DycentState s(3);
    ParamVector x{-1.2, 1.0, -1.2, 1.0};
    for (int k = 0; k < 200; ++k) {
        const StepResult res = dycent_step(x, *r, cfg, s);
        CHECK(res.trace.d_used >= 0.0);
        x = res.x_new;
    }
    CHECK(s.step_count == 200);
}

TEST_CASE("constrained mode steps exactly |grad f| / L") {
    RngHandle rng(8);
    for (int k = 0; k < 30; ++k) {
        const std::size_t n = 2 + rng.uniform_index(6);
        const double lipschitz = rng.uniform(1.0, 10.0);
        auto q = random_spd_quadratic(n, 0.1 * lipschitz, lipschitz, rng);
        const DycentRun r = run_constrained(rng.normal_vector(n), *q, DycentConfig{}, {lipschitz, 0.1}, 20, k);
        for (const auto& t : r.traces) {
            const double target = norm(t.g1) / lipschitz;
            CHECK(std::abs(t.d_used - target) <= 1e-12 * target);
            CHECK_FALSE(t.doubled);
            CHECK(t.h_probe == doctest::Approx(0.1 * norm(t.g1) / lipschitz).epsilon(1e-14));
        }
    }
    auto q = isotropic_quadratic(2);
    DycentState s;
    CHECK_THROWS_AS(dycent_step_constrained({1.0, 1.0}, *q, DycentConfig{}, s, {0.0, 0.1}), ConfigError);
}
