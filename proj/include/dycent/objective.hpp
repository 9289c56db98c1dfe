#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dycent/vecmath.hpp"

namespace dycent {

/// Rows of a dataset-backed objective that subsequent evaluations average over.
struct BatchContext {
    std::vector<std::size_t> batch_indices;
    int epoch = 0;
    int step = 0;
};

/// Scalar field with an exact gradient.
///
/// value() and gradient() are deterministic functions of x and, for
/// dataset-backed objectives, of the batch pinned by set_batch(). Analytic
/// objectives are stateless; dataset-backed ones carry the pinned batch and
/// must be confined to a single run.
class Objective {
public:
    virtual ~Objective() = default;

    virtual std::string name() const = 0;
    virtual std::size_t dim() const = 0;
    virtual double value(const ParamVector& x) const = 0;
    virtual ParamVector gradient(const ParamVector& x) const = 0;

    /// Known global Lipschitz constant of the gradient, when one exists.
    virtual std::optional<double> lipschitz_bound() const { return std::nullopt; }

    virtual bool dataset_backed() const { return false; }
    virtual void set_batch(const BatchContext& ctx);

protected:
    void check_dim(const ParamVector& x) const;
};

/// Pins the minibatch of a dataset-backed objective; throws UnsupportedError otherwise.
void set_batch(Objective& obj, const BatchContext& ctx);

/// f(x, y) = -y^2 sin x
std::unique_ptr<Objective> toy_a();

/// f(x, y) = -sin(x^2 + y^2) / (x^2 + y^2); the origin is patched with the
/// Taylor expansion -1 + r^4/6 below r^2 = 1e-8.
std::unique_ptr<Objective> toy_b();

/// f(x) = 0.5 |x|^2, L = 1.
std::unique_ptr<Objective> isotropic_quadratic(std::size_t n);

/// sum_i (1 - x_i)^2 + 100 (x_{i+1} - x_i^2)^2
std::unique_ptr<Objective> rosenbrock(std::size_t n);

/// f(x) = 0.5 x^T A x with a dense symmetric positive semi-definite A
/// (row-major n*n) and its largest eigenvalue as the Lipschitz bound.
std::unique_ptr<Objective> quadratic(std::size_t n, std::vector<double> a_row_major, double lipschitz);

/// Random SPD quadratic A = Q diag(lambda) Q^T with Q a random orthogonal
/// matrix, lambda_0 = lipschitz exactly and the other eigenvalues uniform in
/// [min_eig, lipschitz].
std::unique_ptr<Objective> random_spd_quadratic(std::size_t n, double min_eig, double lipschitz, RngHandle& rng);

/// f(x) = c^T x (L = 0).
std::unique_ptr<Objective> linear(ParamVector c);

/// f(x) = factor * inner(x). The wrapper shares ownership of inner.
std::unique_ptr<Objective> scaled(std::shared_ptr<Objective> inner, double factor);

} // namespace dycent
