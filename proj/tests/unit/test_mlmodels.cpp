#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "dycent/baselines.hpp"
#include "dycent/errors.hpp"
#include "dycent/mlmodels.hpp"
#include "oracles.hpp"

using namespace dycent;
namespace fs = std::filesystem;

namespace {

// Straightforward forward pass used to cross-check the library's loss.
double reference_loss(const ParamVector& p, const MlpSpec& s, const Dataset& d, const std::vector<std::size_t>& rows) {
    const std::size_t in = s.input_dim, hid = s.hidden_dim, out = s.num_classes;
    const std::size_t w2_off = in * hid + hid, b2_off = w2_off + hid * out;
    double total = 0.0;
    for (std::size_t r : rows) {
        std::vector<double> h(hid), z(out);
        for (std::size_t j = 0; j < hid; ++j) {
            double a = p[in * hid + j];
            for (std::size_t i = 0; i < in; ++i) a += p[j * in + i] * d.features[r * in + i];
            h[j] = s.activation == Activation::tanh ? std::tanh(a) : std::max(a, 0.0);
        }
        for (std::size_t c = 0; c < out; ++c) {
            z[c] = p[b2_off + c];
            for (std::size_t j = 0; j < hid; ++j) z[c] += p[w2_off + c * hid + j] * h[j];
        }
        double denom = 0.0;
        for (double v : z) denom += std::exp(v);
        total += std::log(denom) - z[static_cast<std::size_t>(d.labels[r])];
    }
    return total / static_cast<double>(rows.size());
}

std::vector<std::size_t> all_rows(const Dataset& d) {
    std::vector<std::size_t> r(d.rows);
    for (std::size_t i = 0; i < d.rows; ++i) r[i] = i;
    return r;
}

fs::path write_temp(const std::string& name, const std::string& body) {
    const fs::path p = fs::temp_directory_path() / ("dycent_test_" + name);
    std::ofstream(p) << body;
    return p;
}

} // namespace

TEST_CASE("two moons") {
    const Dataset d = make_two_moons(1000, 0.1, 3);
    CHECK(d.rows == 1000);
    CHECK(d.cols == 2);
    CHECK(std::count(d.labels.begin(), d.labels.end(), 0) == 500);
    CHECK_NOTHROW(d.validate());

    const Dataset a = make_two_moons(4, 0.0, 1), b = make_two_moons(4, 0.0, 1);
    CHECK(a.features == b.features);
    CHECK(a.labels == std::vector<int>{0, 0, 1, 1});
    // Noiseless endpoints of the two arcs.
    CHECK(a.features[0] == doctest::Approx(1.0));
    CHECK(std::abs(a.features[1]) <= 1e-15);
    CHECK(a.features[4] == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(a.features[5] == doctest::Approx(0.5));

    const Dataset c = make_two_moons(100, 0.1, 4);
    CHECK(c.features != make_two_moons(100, 0.1, 5).features);
    CHECK_THROWS_AS(make_two_moons(100, -0.1, 0), ConfigError);
    CHECK_THROWS_AS(make_two_moons(1, 0.1, 0), ConfigError);
}

TEST_CASE("spec and initialization") {
    MlpSpec s;
    s.input_dim = 3;
    s.hidden_dim = 5;
    s.num_classes = 4;
    CHECK(s.param_count() == 3 * 5 + 5 + 5 * 4 + 4);
    const ParamVector p = init_params(s);
    CHECK(p.size() == s.param_count());
    for (std::size_t j = 15; j < 20; ++j) CHECK(p[j] == 0.0);
    CHECK(init_params(s) == p);
    s.hidden_dim = 0;
    CHECK_THROWS_AS(s.validate(), ConfigError);
    CHECK(parse_activation("relu") == Activation::relu);
    CHECK(to_string(Activation::tanh) == "tanh");
    CHECK_THROWS_AS(parse_activation("gelu"), ConfigError);
}

TEST_CASE("loss matches reference forward pass and finite differences") {
    auto data = std::make_shared<const Dataset>(make_two_moons(60, 0.2, 7));
    RngHandle rng(8);
    for (Activation act : {Activation::tanh, Activation::relu}) {
        for (double scale : {0.3, 1.0, 3.0}) {
            MlpSpec s;
            s.hidden_dim = 6;
            s.activation = act;
            auto obj = mlp_objective(s, data);
            for (int k = 0; k < 20; ++k) {
                ParamVector p = rng.normal_vector(s.param_count());
                p *= scale;
                CHECK(obj->value(p) == doctest::Approx(reference_loss(p, s, *data, all_rows(*data))).epsilon(1e-12));
                CHECK(obj->value(p) >= 0.0);
                CHECK(oracle::gradient_error(*obj, p) <= 1e-4);
            }
        }
    }
}

TEST_CASE("uniform logits and row duplication") {
    for (std::size_t classes : {2u, 3u, 5u}) {
        Dataset d;
        d.rows = 10;
        d.cols = 2;
        d.num_classes = static_cast<int>(classes);
        RngHandle rng(classes);
        for (std::size_t i = 0; i < d.rows; ++i) {
            d.features.push_back(rng.normal());
            d.features.push_back(rng.normal());
            d.labels.push_back(static_cast<int>(i % classes));
        }
        MlpSpec s;
        s.num_classes = classes;
        auto obj = mlp_objective(s, std::make_shared<const Dataset>(d));
        CHECK(obj->value(ParamVector(s.param_count())) == doctest::Approx(std::log(static_cast<double>(classes))).epsilon(1e-15));

        Dataset twice = d;
        twice.rows *= 2;
        twice.features.insert(twice.features.end(), d.features.begin(), d.features.end());
        twice.labels.insert(twice.labels.end(), d.labels.begin(), d.labels.end());
        auto obj2 = mlp_objective(s, std::make_shared<const Dataset>(twice));
        const ParamVector p = init_params(s);
        CHECK(obj2->value(p) == doctest::Approx(obj->value(p)).epsilon(1e-14));
    }
}

TEST_CASE("minibatches") {
    auto data = std::make_shared<const Dataset>(make_two_moons(40, 0.1, 9));
    MlpSpec s;
    auto obj = mlp_objective(s, data);
    const ParamVector p = init_params(s);
    const double full = obj->value(p);
    const ParamVector full_grad = obj->gradient(p);

    BatchContext all;
    all.batch_indices = all_rows(*data);
    obj->set_batch(all);
    CHECK(obj->value(p) == doctest::Approx(full).epsilon(1e-15));

    BatchContext one;
    one.batch_indices = {7};
    obj->set_batch(one);
    CHECK(obj->value(p) == doctest::Approx(reference_loss(p, s, *data, {7})).epsilon(1e-13));

    // Disjoint partition into 4 equal batches: the mean of batch gradients is the full gradient.
    ParamVector mean(p.size());
    double mean_loss = 0.0;
    for (std::size_t b = 0; b < 4; ++b) {
        BatchContext ctx;
        for (std::size_t i = b * 10; i < (b + 1) * 10; ++i) ctx.batch_indices.push_back(i);
        obj->set_batch(ctx);
        CHECK(oracle::gradient_error(*obj, p) <= 1e-4);
        mean += 0.25 * obj->gradient(p);
        mean_loss += 0.25 * obj->value(p);
    }
    CHECK(max_abs_diff(mean, full_grad) <= 1e-12);
    CHECK(mean_loss == doctest::Approx(full).epsilon(1e-14));

    obj->use_full_batch();
    CHECK(obj->value(p) == full);

    BatchContext bad;
    bad.batch_indices = {40};
    CHECK_THROWS_AS(obj->set_batch(bad), ConfigError);
    CHECK_THROWS_AS(obj->set_batch(BatchContext{}), ConfigError);
    CHECK_THROWS_AS(obj->value(ParamVector(3)), DimensionError);
}

TEST_CASE("shape mismatches are rejected") {
    auto data = std::make_shared<const Dataset>(make_two_moons(10, 0.1, 0));
    MlpSpec s;
    s.input_dim = 3;
    CHECK_THROWS_AS(mlp_objective(s, data), DimensionError);
}

TEST_CASE("accuracy") {
    const Dataset d = make_two_moons(100, 0.1, 1);
    MlpSpec s;
    CHECK(accuracy(ParamVector(s.param_count()), s, d) == 0.5);
    Dataset empty;
    CHECK_THROWS_AS(accuracy(ParamVector(s.param_count()), s, empty), ConfigError);
    CHECK_THROWS_AS(accuracy(ParamVector(3), s, d), DimensionError);
}

TEST_CASE("noiseless moons can be fit perfectly") {
    auto data = std::make_shared<const Dataset>(make_two_moons(200, 0.0, 0));
    MlpSpec s;
    s.hidden_dim = 16;
    auto obj = mlp_objective(s, data);
    BaselineConfig c = BaselineConfig::defaults(BaselineMethod::adam);
    c.lr = 1e-2;
    BaselineState st;
    ParamVector p = init_params(s);
    for (int k = 0; k < 4000; ++k) p = baseline_step(p, *obj, c, st);
    CHECK(accuracy(p, s, *data) == 1.0);
}

TEST_CASE("csv loading") {
    const auto good = write_temp("good.csv", "f0,f1,label\n0.5,1.5,0\n-1,2e-3,2\n");
    const Dataset d = load_dataset_csv(good);
    CHECK(d.rows == 2);
    CHECK(d.cols == 2);
    CHECK(d.num_classes == 3);
    CHECK(d.features == std::vector<double>{0.5, 1.5, -1.0, 2e-3});
    CHECK(d.labels == std::vector<int>{0, 2});

    auto expect_io = [](const fs::path& p, const std::string& needle) {
        try {
            load_dataset_csv(p);
            FAIL("expected IoError for " << p);
        } catch (const IoError& e) {
            CHECK(e.path() == p.string());
            CHECK(std::string(e.what()).find(needle) != std::string::npos);
        }
    };
    expect_io(write_temp("cell.csv", "f0,f1,label\n0.5,1.5,0\n0.1,abc,1\n"), "row 3");
    expect_io(write_temp("label.csv", "f0,label\n0.5,x\n"), "row 2");
    expect_io(write_temp("width.csv", "f0,f1,label\n0.5,0\n"), "row 2");
    expect_io(write_temp("header.csv", "a,b,label\n0.5,1,0\n"), "header");
    expect_io(write_temp("empty.csv", ""), "header");
    expect_io(fs::temp_directory_path() / "dycent_test_missing.csv", "cannot open");
}
