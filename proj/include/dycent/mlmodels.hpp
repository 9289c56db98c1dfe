#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "dycent/objective.hpp"
#include "dycent/vecmath.hpp"

namespace dycent {

/// Row-major feature matrix with one integer class label per row.
struct Dataset {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> features;
    std::vector<int> labels;
    int num_classes = 2;

    std::span<const double> row(std::size_t i) const { return {features.data() + i * cols, cols}; }
    /// Throws ConfigError on out-of-range labels, NaN features or shape errors.
    void validate() const;
};

/// Two interleaving half circles: floor(n/2) rows on the outer moon
/// (cos t, sin t), label 0, then the inner moon (1 - cos t, 0.5 - sin t),
/// label 1, with t evenly spaced on [0, pi]. Gaussian noise of standard
/// deviation `noise` is added to every coordinate.
Dataset make_two_moons(std::size_t n, double noise, std::uint64_t seed);

/// Reads a CSV with header f0,...,fk,label. Errors name the offending line.
Dataset load_dataset_csv(const std::filesystem::path& path);

enum class Activation { relu, tanh };
Activation parse_activation(std::string_view name);
std::string_view to_string(Activation a) noexcept;

/// One hidden layer perceptron. Flattened parameter layout:
/// W1 (hidden x input, row-major), b1 (hidden), W2 (classes x hidden), b2 (classes).
struct MlpSpec {
    std::size_t input_dim = 2;
    std::size_t hidden_dim = 16;
    std::size_t num_classes = 2;
    Activation activation = Activation::tanh;
    std::uint64_t init_seed = 0;

    std::size_t param_count() const noexcept {
        return input_dim * hidden_dim + hidden_dim + hidden_dim * num_classes + num_classes;
    }
    void validate() const;
};

/// Weights ~ N(0, 1/fan_in), biases zero, drawn from spec.init_seed.
ParamVector init_params(const MlpSpec& spec);

/// Mean softmax cross-entropy over the pinned batch (all rows until
/// set_batch is called), with gradients by backpropagation.
class MlpObjective final : public Objective {
public:
    MlpObjective(MlpSpec spec, std::shared_ptr<const Dataset> data);

    std::string name() const override { return "mlp"; }
    std::size_t dim() const override { return spec_.param_count(); }
    double value(const ParamVector& params) const override;
    ParamVector gradient(const ParamVector& params) const override;
    bool dataset_backed() const override { return true; }
    void set_batch(const BatchContext& ctx) override;

    /// Restores the full-dataset batch.
    void use_full_batch();

    const MlpSpec& spec() const noexcept { return spec_; }
    const Dataset& data() const noexcept { return *data_; }
    std::span<const std::size_t> batch() const noexcept { return batch_; }

private:
    double evaluate(const ParamVector& params, ParamVector* grad) const;

    MlpSpec spec_;
    std::shared_ptr<const Dataset> data_;
    std::vector<std::size_t> batch_;
};

std::unique_ptr<MlpObjective> mlp_objective(const MlpSpec& spec, std::shared_ptr<const Dataset> data);

/// Fraction of rows whose argmax logit matches the label; ties go to the
/// lowest class index.
double accuracy(const ParamVector& params, const MlpSpec& spec, const Dataset& data);

} // namespace dycent
