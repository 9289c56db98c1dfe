#include "dycent/objective.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "dycent/errors.hpp"

namespace dycent {

void Objective::set_batch(const BatchContext&) {
    throw UnsupportedError("set_batch: objective '" + name() + "' is not dataset-backed");
}

void Objective::check_dim(const ParamVector& x) const {
    if (x.size() != dim()) {
        throw DimensionError(name() + ": expected dimension " + std::to_string(dim()) + ", got " +
                             std::to_string(x.size()));
    }
}

void set_batch(Objective& obj, const BatchContext& ctx) { obj.set_batch(ctx); }

namespace {

class ToyA final : public Objective {
public:
    std::string name() const override { return "toy_a"; }
    std::size_t dim() const override { return 2; }

    double value(const ParamVector& p) const override {
        check_dim(p);
        return -p[1] * p[1] * std::sin(p[0]);
    }

    ParamVector gradient(const ParamVector& p) const override {
        check_dim(p);
        const double x = p[0], y = p[1];
        return {-y * y * std::cos(x), -2.0 * y * std::sin(x)};
    }
};

class ToyB final : public Objective {
public:
    static constexpr double kPatchRadiusSq = 1e-8;

    std::string name() const override { return "toy_b"; }
    std::size_t dim() const override { return 2; }

    double value(const ParamVector& p) const override {
        check_dim(p);
        const double u = p[0] * p[0] + p[1] * p[1];
        if (u < kPatchRadiusSq) return -1.0 + u * u / 6.0;
        return -std::sin(u) / u;
    }

    ParamVector gradient(const ParamVector& p) const override {
        check_dim(p);
        const double u = p[0] * p[0] + p[1] * p[1];
        double df_du;
        if (u < kPatchRadiusSq) {
            df_du = u / 3.0;
        } else {
            df_du = (std::sin(u) - u * std::cos(u)) / (u * u);
        }
        return {2.0 * p[0] * df_du, 2.0 * p[1] * df_du};
    }
};

class IsotropicQuadratic final : public Objective {
public:
    explicit IsotropicQuadratic(std::size_t n) : n_(n) {}

    std::string name() const override { return "isotropic_quadratic"; }
    std::size_t dim() const override { return n_; }
    std::optional<double> lipschitz_bound() const override { return 1.0; }

    double value(const ParamVector& x) const override {
        check_dim(x);
        return 0.5 * dot(x, x);
    }

    ParamVector gradient(const ParamVector& x) const override {
        check_dim(x);
        return x;
    }

private:
    std::size_t n_;
};

class Rosenbrock final : public Objective {
public:
    explicit Rosenbrock(std::size_t n) : n_(n) {}

    std::string name() const override { return "rosenbrock"; }
    std::size_t dim() const override { return n_; }

    double value(const ParamVector& x) const override {
        check_dim(x);
        double f = 0.0;
        for (std::size_t i = 0; i + 1 < n_; ++i) {
            const double a = 1.0 - x[i];
            const double b = x[i + 1] - x[i] * x[i];
            f += a * a + 100.0 * b * b;
        }
        return f;
    }

    ParamVector gradient(const ParamVector& x) const override {
        check_dim(x);
        ParamVector g(n_);
        for (std::size_t i = 0; i + 1 < n_; ++i) {
            const double b = x[i + 1] - x[i] * x[i];
            g[i] += -2.0 * (1.0 - x[i]) - 400.0 * x[i] * b;
            g[i + 1] += 200.0 * b;
        }
        return g;
    }

private:
    std::size_t n_;
};

class DenseQuadratic final : public Objective {
public:
    DenseQuadratic(std::size_t n, std::vector<double> a, double lipschitz)
        : n_(n), a_(std::move(a)), lipschitz_(lipschitz) {}

    std::string name() const override { return "quadratic"; }
    std::size_t dim() const override { return n_; }
    std::optional<double> lipschitz_bound() const override { return lipschitz_; }

    double value(const ParamVector& x) const override { return 0.5 * dot(x, gradient(x)); }

    ParamVector gradient(const ParamVector& x) const override {
        check_dim(x);
        ParamVector g(n_);
        for (std::size_t i = 0; i < n_; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < n_; ++j) s += a_[i * n_ + j] * x[j];
            g[i] = s;
        }
        return g;
    }

private:
    std::size_t n_;
    std::vector<double> a_;
    double lipschitz_;
};

class Linear final : public Objective {
public:
    explicit Linear(ParamVector c) : c_(std::move(c)) {}

    std::string name() const override { return "linear"; }
    std::size_t dim() const override { return c_.size(); }
    std::optional<double> lipschitz_bound() const override { return 0.0; }

    double value(const ParamVector& x) const override {
        check_dim(x);
        return dot(c_, x);
    }

    ParamVector gradient(const ParamVector& x) const override {
        check_dim(x);
        return c_;
    }

private:
    ParamVector c_;
};

class Scaled final : public Objective {
public:
    Scaled(std::shared_ptr<Objective> inner, double factor) : inner_(std::move(inner)), factor_(factor) {}

    std::string name() const override { return "scaled(" + inner_->name() + ")"; }
    std::size_t dim() const override { return inner_->dim(); }
    std::optional<double> lipschitz_bound() const override {
        if (auto l = inner_->lipschitz_bound()) return std::abs(factor_) * *l;
        return std::nullopt;
    }
    bool dataset_backed() const override { return inner_->dataset_backed(); }
    void set_batch(const BatchContext& ctx) override { inner_->set_batch(ctx); }

    double value(const ParamVector& x) const override { return factor_ * inner_->value(x); }
    ParamVector gradient(const ParamVector& x) const override { return factor_ * inner_->gradient(x); }

private:
    std::shared_ptr<Objective> inner_;
    double factor_;
};

} // namespace

std::unique_ptr<Objective> toy_a() { return std::make_unique<ToyA>(); }

std::unique_ptr<Objective> toy_b() { return std::make_unique<ToyB>(); }

std::unique_ptr<Objective> isotropic_quadratic(std::size_t n) {
    if (n < 1) throw DimensionError("isotropic_quadratic: n must be >= 1");
    return std::make_unique<IsotropicQuadratic>(n);
}

std::unique_ptr<Objective> rosenbrock(std::size_t n) {
    if (n < 2) throw DimensionError("rosenbrock: n must be >= 2");
    return std::make_unique<Rosenbrock>(n);
}

std::unique_ptr<Objective> quadratic(std::size_t n, std::vector<double> a_row_major, double lipschitz) {
    if (n < 1 || a_row_major.size() != n * n) throw DimensionError("quadratic: matrix must be n*n with n >= 1");
    return std::make_unique<DenseQuadratic>(n, std::move(a_row_major), lipschitz);
}

std::unique_ptr<Objective> random_spd_quadratic(std::size_t n, double min_eig, double lipschitz, RngHandle& rng) {
    if (n < 1) throw DimensionError("random_spd_quadratic: n must be >= 1");
    if (!(min_eig > 0.0) || !(lipschitz >= min_eig)) {
        throw ConfigError("random_spd_quadratic: need 0 < min_eig <= lipschitz");
    }
    // Modified Gram-Schmidt on a Gaussian matrix gives a random orthogonal basis.
    std::vector<ParamVector> q;
    q.reserve(n);
    while (q.size() < n) {
        ParamVector v = rng.normal_vector(n);
        for (int pass = 0; pass < 2; ++pass) {
            for (const auto& u : q) axpy(-dot(v, u), u, v);
        }
        const double nv = norm(v);
        if (nv < 1e-8) continue;
        q.push_back((1.0 / nv) * v);
    }
    std::vector<double> eig(n);
    eig[0] = lipschitz;
    for (std::size_t k = 1; k < n; ++k) eig[k] = rng.uniform(min_eig, lipschitz);

    std::vector<double> a(n * n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) a[i * n + j] += eig[k] * q[k][i] * q[k][j];
        }
    }
    // Exact symmetry.
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double s = 0.5 * (a[i * n + j] + a[j * n + i]);
            a[i * n + j] = a[j * n + i] = s;
        }
    }
    return std::make_unique<DenseQuadratic>(n, std::move(a), lipschitz);
}

std::unique_ptr<Objective> linear(ParamVector c) {
    if (c.empty()) throw DimensionError("linear: coefficient vector is empty");
    return std::make_unique<Linear>(std::move(c));
}

std::unique_ptr<Objective> scaled(std::shared_ptr<Objective> inner, double factor) {
    if (!inner) throw ConfigError("scaled: null objective");
    return std::make_unique<Scaled>(std::move(inner), factor);
}

} // namespace dycent
