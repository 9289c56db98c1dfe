#include "dycent/mlmodels.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

#include "dycent/errors.hpp"

namespace dycent {

void Dataset::validate() const {
    if (num_classes < 2) throw ConfigError("dataset: need at least 2 classes");
    if (features.size() != rows * cols) throw DimensionError("dataset: feature matrix shape mismatch");
    if (labels.size() != rows) throw DimensionError("dataset: one label per row required");
    for (std::size_t i = 0; i < rows; ++i) {
        if (labels[i] < 0 || labels[i] >= num_classes) {
            throw ConfigError("dataset: label out of range at row " + std::to_string(i));
        }
    }
    for (double v : features) {
        if (std::isnan(v)) throw ConfigError("dataset: NaN feature");
    }
}

Dataset make_two_moons(std::size_t n, double noise, std::uint64_t seed) {
    if (n < 2) throw ConfigError("make_two_moons: n must be >= 2");
    if (!(noise >= 0.0)) throw ConfigError("make_two_moons: noise must be >= 0");
    RngHandle rng(seed);
    Dataset d;
    d.rows = n;
    d.cols = 2;
    d.num_classes = 2;
    d.features.reserve(2 * n);
    d.labels.reserve(n);

    const std::size_t n_outer = n / 2;
    const std::size_t n_inner = n - n_outer;
    auto param = [](std::size_t i, std::size_t count) {
        return count > 1 ? std::numbers::pi * static_cast<double>(i) / static_cast<double>(count - 1) : 0.0;
    };
    for (std::size_t i = 0; i < n_outer; ++i) {
        const double t = param(i, n_outer);
        d.features.push_back(std::cos(t));
        d.features.push_back(std::sin(t));
        d.labels.push_back(0);
    }
    for (std::size_t i = 0; i < n_inner; ++i) {
        const double t = param(i, n_inner);
        d.features.push_back(1.0 - std::cos(t));
        d.features.push_back(0.5 - std::sin(t));
        d.labels.push_back(1);
    }
    if (noise > 0.0) {
        for (double& v : d.features) v += noise * rng.normal();
    }
    return d;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) {
        while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
        const auto first = cell.find_first_not_of(' ');
        cells.push_back(first == std::string::npos ? std::string{} : cell.substr(first));
    }
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

bool parse_number(const std::string& s, double& out) {
    const char* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, out);
    return ec == std::errc{} && ptr == end && !s.empty();
}

} // namespace

Dataset load_dataset_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError(path.string(), "cannot open dataset");

    std::string line;
    if (!std::getline(in, line)) throw IoError(path.string(), "empty file (missing header)");
    const auto header = split_csv_line(line);
    if (header.size() < 2 || header.back() != "label") {
        throw IoError(path.string(), "header must be f0,...,fk,label");
    }
    for (std::size_t j = 0; j + 1 < header.size(); ++j) {
        if (header[j] != "f" + std::to_string(j)) {
            throw IoError(path.string(), "header column " + std::to_string(j) + " must be 'f" + std::to_string(j) +
                                             "', found '" + header[j] + "'");
        }
    }

    Dataset d;
    d.cols = header.size() - 1;
    int max_label = 0;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != header.size()) {
            throw IoError(path.string(), "row " + std::to_string(line_no) + ": expected " +
                                             std::to_string(header.size()) + " cells, found " +
                                             std::to_string(cells.size()));
        }
        for (std::size_t j = 0; j < d.cols; ++j) {
            double v;
            if (!parse_number(cells[j], v) || std::isnan(v)) {
                throw IoError(path.string(), "row " + std::to_string(line_no) + ", column " + header[j] +
                                                 ": non-numeric cell '" + cells[j] + "'");
            }
            d.features.push_back(v);
        }
        int label = -1;
        const std::string& lc = cells.back();
        auto [ptr, ec] = std::from_chars(lc.data(), lc.data() + lc.size(), label);
        if (ec != std::errc{} || ptr != lc.data() + lc.size() || label < 0) {
            throw IoError(path.string(), "row " + std::to_string(line_no) + ": label must be a non-negative integer, found '" +
                                             lc + "'");
        }
        max_label = std::max(max_label, label);
        d.labels.push_back(label);
        ++d.rows;
    }
    if (d.rows == 0) throw IoError(path.string(), "no data rows");
    d.num_classes = std::max(2, max_label + 1);
    d.validate();
    return d;
}

Activation parse_activation(std::string_view name) {
    if (name == "relu") return Activation::relu;
    if (name == "tanh") return Activation::tanh;
    throw ConfigError("unknown activation '" + std::string(name) + "' (valid: relu, tanh)");
}

std::string_view to_string(Activation a) noexcept { return a == Activation::relu ? "relu" : "tanh"; }

void MlpSpec::validate() const {
    if (input_dim < 1 || hidden_dim < 1 || num_classes < 1) throw ConfigError("mlp: all dimensions must be >= 1");
}

ParamVector init_params(const MlpSpec& spec) {
    spec.validate();
    RngHandle rng(spec.init_seed);
    ParamVector w(spec.param_count());
    std::size_t k = 0;
    const double s1 = 1.0 / std::sqrt(static_cast<double>(spec.input_dim));
    const double s2 = 1.0 / std::sqrt(static_cast<double>(spec.hidden_dim));
    for (std::size_t i = 0; i < spec.hidden_dim * spec.input_dim; ++i) w[k++] = s1 * rng.normal();
    k += spec.hidden_dim;
    for (std::size_t i = 0; i < spec.num_classes * spec.hidden_dim; ++i) w[k++] = s2 * rng.normal();
    return w;
}

namespace {

struct Layout {
    std::size_t w1, b1, w2, b2;
    explicit Layout(const MlpSpec& s)
        : w1(0), b1(s.input_dim * s.hidden_dim), w2(b1 + s.hidden_dim), b2(w2 + s.hidden_dim * s.num_classes) {}
};

// Hidden pre-activations and logits for one row.
void forward(const MlpSpec& spec, const Layout& L, const ParamVector& w, std::span<const double> x,
             std::vector<double>& z, std::vector<double>& a, std::vector<double>& logits) {
    for (std::size_t h = 0; h < spec.hidden_dim; ++h) {
        double s = w[L.b1 + h];
        for (std::size_t j = 0; j < spec.input_dim; ++j) s += w[L.w1 + h * spec.input_dim + j] * x[j];
        z[h] = s;
        a[h] = spec.activation == Activation::tanh ? std::tanh(s) : std::max(s, 0.0);
    }
    for (std::size_t c = 0; c < spec.num_classes; ++c) {
        double s = w[L.b2 + c];
        for (std::size_t h = 0; h < spec.hidden_dim; ++h) s += w[L.w2 + c * spec.hidden_dim + h] * a[h];
        logits[c] = s;
    }
}

} // namespace

MlpObjective::MlpObjective(MlpSpec spec, std::shared_ptr<const Dataset> data)
    : spec_(spec), data_(std::move(data)) {
    spec_.validate();
    if (!data_) throw ConfigError("mlp_objective: null dataset");
    data_->validate();
    if (data_->cols != spec_.input_dim) {
        throw DimensionError("mlp_objective: dataset has " + std::to_string(data_->cols) +
                             " features but the network expects " + std::to_string(spec_.input_dim));
    }
    if (static_cast<std::size_t>(data_->num_classes) > spec_.num_classes) {
        throw DimensionError("mlp_objective: dataset has more classes than the network outputs");
    }
    if (data_->rows == 0) throw ConfigError("mlp_objective: empty dataset");
    use_full_batch();
}

void MlpObjective::use_full_batch() {
    batch_.resize(data_->rows);
    for (std::size_t i = 0; i < batch_.size(); ++i) batch_[i] = i;
}

void MlpObjective::set_batch(const BatchContext& ctx) {
    if (ctx.batch_indices.empty()) throw ConfigError("set_batch: empty batch");
    for (std::size_t i : ctx.batch_indices) {
        if (i >= data_->rows) throw ConfigError("set_batch: row index " + std::to_string(i) + " out of range");
    }
    batch_ = ctx.batch_indices;
}

double MlpObjective::value(const ParamVector& params) const { return evaluate(params, nullptr); }

ParamVector MlpObjective::gradient(const ParamVector& params) const {
    ParamVector g(dim());
    evaluate(params, &g);
    return g;
}

double MlpObjective::evaluate(const ParamVector& w, ParamVector* grad) const {
    check_dim(w);
    const Layout L(spec_);
    const std::size_t H = spec_.hidden_dim, C = spec_.num_classes, D = spec_.input_dim;
    std::vector<double> z(H), a(H), logits(C), dlogits(C), dz(H);
    double loss = 0.0;

    for (std::size_t r : batch_) {
        const auto x = data_->row(r);
        const int y = data_->labels[r];
        forward(spec_, L, w, x, z, a, logits);
        const double mx = *std::max_element(logits.begin(), logits.end());
        double sum = 0.0;
        for (std::size_t c = 0; c < C; ++c) sum += std::exp(logits[c] - mx);
        const double lse = mx + std::log(sum);
        loss += lse - logits[static_cast<std::size_t>(y)];
        if (!grad) continue;

        for (std::size_t c = 0; c < C; ++c) dlogits[c] = std::exp(logits[c] - lse);
        dlogits[static_cast<std::size_t>(y)] -= 1.0;

        ParamVector& g = *grad;
        for (std::size_t c = 0; c < C; ++c) {
            g[L.b2 + c] += dlogits[c];
            for (std::size_t h = 0; h < H; ++h) g[L.w2 + c * H + h] += dlogits[c] * a[h];
        }
        for (std::size_t h = 0; h < H; ++h) {
            double da = 0.0;
            for (std::size_t c = 0; c < C; ++c) da += w[L.w2 + c * H + h] * dlogits[c];
            const double deriv = spec_.activation == Activation::tanh ? 1.0 - a[h] * a[h] : (z[h] > 0.0 ? 1.0 : 0.0);
            dz[h] = da * deriv;
        }
        for (std::size_t h = 0; h < H; ++h) {
            g[L.b1 + h] += dz[h];
            for (std::size_t j = 0; j < D; ++j) g[L.w1 + h * D + j] += dz[h] * x[j];
        }
    }
    const double inv = 1.0 / static_cast<double>(batch_.size());
    if (grad) *grad *= inv;
    return loss * inv;
}

std::unique_ptr<MlpObjective> mlp_objective(const MlpSpec& spec, std::shared_ptr<const Dataset> data) {
    return std::make_unique<MlpObjective>(spec, std::move(data));
}

double accuracy(const ParamVector& params, const MlpSpec& spec, const Dataset& data) {
    if (data.rows == 0) throw ConfigError("accuracy: empty dataset");
    if (params.size() != spec.param_count()) throw DimensionError("accuracy: parameter count mismatch");
    if (data.cols != spec.input_dim) throw DimensionError("accuracy: feature dimension mismatch");
    const Layout L(spec);
    std::vector<double> z(spec.hidden_dim), a(spec.hidden_dim), logits(spec.num_classes);
    std::size_t correct = 0;
    for (std::size_t r = 0; r < data.rows; ++r) {
        forward(spec, L, params, data.row(r), z, a, logits);
        // max_element returns the first maximum: ties resolve to the lowest index.
        const auto pred = static_cast<int>(std::max_element(logits.begin(), logits.end()) - logits.begin());
        if (pred == data.labels[r]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(data.rows);
}

} // namespace dycent
