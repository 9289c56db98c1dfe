#include "dycent/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <future>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "dycent/errors.hpp"

namespace dycent::harness {

using nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Config parsing

namespace {

const std::set<std::string> kObjectives{"toy_a", "toy_b", "isotropic_quadratic", "rosenbrock", "moons", "csv"};

const std::vector<std::string> kKeys{
    "objective", "dim",       "n_samples",   "noise",       "data_seed",     "data_path",     "hidden",
    "activation", "init_seed", "optimizer",  "h",           "beta",          "epsilon",       "doubling",
    "clamp",     "d_avg_init", "lr",         "momentum",    "beta1",         "beta2",         "eps",
    "x0",        "max_iters", "seed",        "batch_size",  "epochs",        "h_decay_factor", "h_decay_epoch",
    "output_prefix", "repeats"};

std::string join(const std::vector<std::string>& items) {
    std::string out;
    for (const auto& s : items) out += (out.empty() ? "" : ", ") + s;
    return out;
}

std::string join(const std::set<std::string>& items) { return join(std::vector<std::string>(items.begin(), items.end())); }

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return {};
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

double parse_real(const std::string& section, const std::string& key, const std::string& raw) {
    const std::string s = trim(raw);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty() || !std::isfinite(v)) {
        throw ConfigError("[" + section + "] " + key + ": expected a real number, got '" + raw + "'");
    }
    return v;
}

template <typename Int>
Int parse_int(const std::string& section, const std::string& key, const std::string& raw) {
    const std::string s = trim(raw);
    Int v{};
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
        throw ConfigError("[" + section + "] " + key + ": expected an integer, got '" + raw + "'");
    }
    return v;
}

bool parse_bool(const std::string& section, const std::string& key, const std::string& raw) {
    const std::string s = trim(raw);
    if (s == "true" || s == "1" || s == "on" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "off" || s == "no") return false;
    throw ConfigError("[" + section + "] " + key + ": expected true/false, got '" + raw + "'");
}

const std::map<std::string, ParamVector>& presets() {
    static const std::map<std::string, ParamVector> p{
        {"toy_a_init", kToyAInit}, {"toy_a_init_perturbed", kToyAInitPerturbed}, {"toy_b_init", kToyBInit}};
    return p;
}

bool is_toy(const std::string& objective) { return objective == "toy_a" || objective == "toy_b"; }

} // namespace

void RunConfig::validate() const {
    if (!kObjectives.count(objective)) {
        throw ConfigError("unknown objective '" + objective + "' (valid: " + join(kObjectives) + ")");
    }
    if (!is_dycent()) parse_baseline_method(optimizer);
    if (is_dycent()) {
        dycent.validate();
    } else {
        baseline.validate();
    }
    if (max_iters < 1) throw ConfigError("[" + name + "] max_iters must be >= 1");
    if (repeats < 1) throw ConfigError("[" + name + "] repeats must be >= 1");
    if (objective == "csv" && data_path.empty()) throw ConfigError("[" + name + "] objective csv needs data_path");
    if ((objective == "isotropic_quadratic" && dim < 1) || (objective == "rosenbrock" && dim < 2)) {
        throw ConfigError("[" + name + "] dim too small for " + objective);
    }
    if (epochs) {
        if (!dataset_objective()) throw ConfigError("[" + name + "] epochs require a dataset objective");
        if (*epochs < 1) throw ConfigError("[" + name + "] epochs must be >= 1");
        if (!batch_size) throw ConfigError("[" + name + "] epochs require batch_size");
    }
    if (batch_size && *batch_size < 1) throw ConfigError("[" + name + "] batch_size must be >= 1");
    if (batch_size && !epochs) throw ConfigError("[" + name + "] batch_size requires epochs");
    if (h_schedule) {
        if (!epochs) throw ConfigError("[" + name + "] h_decay_* requires epoch mode");
        if (!(h_schedule->decay_factor > 0.0)) throw ConfigError("[" + name + "] h_decay_factor must be > 0");
    }
    if (!x0_preset.empty() && x0) throw ConfigError("[" + name + "] both a preset and explicit x0");
}

std::vector<RunConfig> parse_config_text(const std::string& text) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    std::istringstream in(text);
    try {
        pt::ini_parser::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("config syntax: ") + e.what());
    }

    std::vector<RunConfig> out;
    for (const auto& [section, body] : tree) {
        if (body.empty()) throw ConfigError("config: key '" + section + "' outside of a [section]");

        std::map<std::string, std::string> kv;
        for (const auto& [key, val] : body) {
            if (std::find(kKeys.begin(), kKeys.end(), key) == kKeys.end()) {
                throw ConfigError("[" + section + "] unknown key '" + key + "' (valid: " + join(kKeys) + ")");
            }
            kv[key] = val.get_value<std::string>();
        }
        auto get = [&](const std::string& k) -> const std::string* {
            auto it = kv.find(k);
            return it == kv.end() ? nullptr : &it->second;
        };

        RunConfig c;
        c.name = section;
        if (auto v = get("objective")) c.objective = trim(*v);
        if (auto v = get("optimizer")) c.optimizer = trim(*v);
        if (!c.is_dycent()) c.baseline = BaselineConfig::defaults(parse_baseline_method(c.optimizer));
        if (is_toy(c.objective)) c.baseline.lr = 1e-2;

        if (auto v = get("dim")) c.dim = parse_int<std::size_t>(section, "dim", *v);
        if (auto v = get("n_samples")) c.n_samples = parse_int<std::size_t>(section, "n_samples", *v);
        if (auto v = get("noise")) c.noise = parse_real(section, "noise", *v);
        if (auto v = get("data_seed")) c.data_seed = parse_int<std::uint64_t>(section, "data_seed", *v);
        if (auto v = get("data_path")) c.data_path = trim(*v);
        if (auto v = get("hidden")) c.hidden = parse_int<std::size_t>(section, "hidden", *v);
        if (auto v = get("activation")) c.activation = parse_activation(trim(*v));
        if (auto v = get("init_seed")) c.init_seed = parse_int<std::uint64_t>(section, "init_seed", *v);

        if (auto v = get("h")) c.dycent.h = parse_real(section, "h", *v);
        if (auto v = get("beta")) c.dycent.beta = parse_real(section, "beta", *v);
        if (auto v = get("epsilon")) c.dycent.epsilon = parse_real(section, "epsilon", *v);
        if (auto v = get("doubling")) c.dycent.enable_doubling = parse_bool(section, "doubling", *v);
        if (auto v = get("clamp")) c.dycent.clamp_nonnegative_step = parse_bool(section, "clamp", *v);
        if (auto v = get("d_avg_init")) {
            const std::string m = trim(*v);
            if (m == "zero") {
                c.dycent.d_avg_init = AverageInit::zero;
            } else if (m == "first_step") {
                c.dycent.d_avg_init = AverageInit::first_step;
            } else {
                throw ConfigError("[" + section + "] d_avg_init must be zero or first_step");
            }
        }

        if (auto v = get("lr")) c.baseline.lr = parse_real(section, "lr", *v);
        if (auto v = get("momentum")) c.baseline.momentum = parse_real(section, "momentum", *v);
        if (auto v = get("beta1")) c.baseline.beta1 = parse_real(section, "beta1", *v);
        if (auto v = get("beta2")) c.baseline.beta2 = parse_real(section, "beta2", *v);
        if (auto v = get("eps")) c.baseline.eps = parse_real(section, "eps", *v);

        if (auto v = get("x0")) {
            const std::string s = trim(*v);
            if (presets().count(s) || s == "mlp_init" || s == "ones" || s == "rosenbrock_init") {
                c.x0_preset = s;
            } else {
                std::vector<double> vals;
                std::stringstream ss(s);
                std::string item;
                while (std::getline(ss, item, ',')) vals.push_back(parse_real(section, "x0", item));
                if (vals.empty()) throw ConfigError("[" + section + "] x0 is empty");
                c.x0 = ParamVector(std::move(vals));
            }
        }
        if (auto v = get("max_iters")) c.max_iters = parse_int<std::int64_t>(section, "max_iters", *v);
        if (auto v = get("seed")) c.seed = parse_int<std::uint64_t>(section, "seed", *v);
        if (auto v = get("batch_size")) c.batch_size = parse_int<std::size_t>(section, "batch_size", *v);
        if (auto v = get("epochs")) c.epochs = parse_int<int>(section, "epochs", *v);
        if (get("h_decay_factor") || get("h_decay_epoch")) {
            HSchedule s;
            if (auto v = get("h_decay_factor")) s.decay_factor = parse_real(section, "h_decay_factor", *v);
            if (auto v = get("h_decay_epoch")) s.at_epoch = parse_int<int>(section, "h_decay_epoch", *v);
            c.h_schedule = s;
        }
        if (auto v = get("output_prefix")) c.output_prefix = trim(*v);
        if (auto v = get("repeats")) c.repeats = parse_int<int>(section, "repeats", *v);

        c.validate();
        out.push_back(std::move(c));
    }
    if (out.empty()) throw ConfigError("config: no [sections] found");
    return out;
}

std::vector<RunConfig> parse_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError(path.string(), "cannot open config");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

std::vector<RunConfig> expand_repeats(const RunConfig& cfg) {
    if (cfg.repeats <= 1) return {cfg};
    std::vector<RunConfig> out;
    for (int k = 0; k < cfg.repeats; ++k) {
        RunConfig c = cfg;
        c.seed = cfg.seed + static_cast<std::uint64_t>(k);
        c.repeats = 1;
        c.name = cfg.name + "-s" + std::to_string(c.seed);
        if (!c.output_prefix.empty()) c.output_prefix += "-s" + std::to_string(c.seed);
        out.push_back(std::move(c));
    }
    return out;
}

ordered_json config_to_json(const RunConfig& c) {
    ordered_json j;
    j["name"] = c.name;
    j["objective"] = c.objective;
    if (c.objective == "isotropic_quadratic" || c.objective == "rosenbrock") j["dim"] = c.dim;
    if (c.dataset_objective()) {
        if (c.objective == "moons") {
            j["n_samples"] = c.n_samples;
            j["noise"] = c.noise;
            j["data_seed"] = c.data_seed;
        } else {
            j["data_path"] = c.data_path;
        }
        j["hidden"] = c.hidden;
        j["activation"] = std::string(to_string(c.activation));
        j["init_seed"] = c.init_seed;
    }
    j["optimizer"] = c.optimizer;
    if (c.is_dycent()) {
        j["h"] = c.dycent.h;
        j["beta"] = c.dycent.beta;
        j["epsilon"] = c.dycent.epsilon;
        j["doubling"] = c.dycent.enable_doubling;
        j["clamp"] = c.dycent.clamp_nonnegative_step;
        j["d_avg_init"] = c.dycent.d_avg_init == AverageInit::zero ? "zero" : "first_step";
    } else {
        j["lr"] = c.baseline.lr;
        j["momentum"] = c.baseline.momentum;
        j["beta1"] = c.baseline.beta1;
        j["beta2"] = c.baseline.beta2;
        j["eps"] = c.baseline.eps;
    }
    if (!c.x0_preset.empty()) {
        j["x0"] = c.x0_preset;
    } else if (c.x0) {
        j["x0"] = c.x0->values();
    } else {
        j["x0"] = "default";
    }
    j["max_iters"] = c.max_iters;
    j["seed"] = c.seed;
    j["batch_size"] = c.batch_size ? ordered_json(*c.batch_size) : ordered_json(nullptr);
    j["epochs"] = c.epochs ? ordered_json(*c.epochs) : ordered_json(nullptr);
    if (c.h_schedule) {
        j["h_decay_factor"] = c.h_schedule->decay_factor;
        j["h_decay_epoch"] = c.h_schedule->at_epoch;
    } else {
        j["h_decay_factor"] = nullptr;
        j["h_decay_epoch"] = nullptr;
    }
    j["output_prefix"] = c.output_prefix;
    j["repeats"] = c.repeats;
    return j;
}

std::string config_hash(const RunConfig& cfg) {
    const std::string s = config_to_json(cfg).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

// ---------------------------------------------------------------------------
// Objectives and start points

namespace {

std::shared_ptr<const Dataset> build_dataset(const RunConfig& cfg) {
    if (cfg.objective == "moons") return std::make_shared<const Dataset>(make_two_moons(cfg.n_samples, cfg.noise, cfg.data_seed));
    return std::make_shared<const Dataset>(load_dataset_csv(cfg.data_path));
}

MlpSpec build_spec(const RunConfig& cfg, const Dataset& data) {
    MlpSpec spec;
    spec.input_dim = data.cols;
    spec.hidden_dim = cfg.hidden;
    spec.num_classes = static_cast<std::size_t>(data.num_classes);
    spec.activation = cfg.activation;
    spec.init_seed = cfg.init_seed;
    return spec;
}

} // namespace

std::unique_ptr<Objective> build_objective(const RunConfig& cfg) {
    if (cfg.objective == "toy_a") return toy_a();
    if (cfg.objective == "toy_b") return toy_b();
    if (cfg.objective == "isotropic_quadratic") return isotropic_quadratic(cfg.dim);
    if (cfg.objective == "rosenbrock") return rosenbrock(cfg.dim);
    if (cfg.dataset_objective()) {
        auto data = build_dataset(cfg);
        const MlpSpec spec = build_spec(cfg, *data);
        return mlp_objective(spec, std::move(data));
    }
    throw ConfigError("unknown objective '" + cfg.objective + "' (valid: " + join(kObjectives) + ")");
}

ParamVector resolve_x0(const RunConfig& cfg) {
    if (cfg.x0) return *cfg.x0;
    std::string preset = cfg.x0_preset;
    if (preset.empty()) {
        if (cfg.objective == "toy_a") preset = "toy_a_init_perturbed";
        else if (cfg.objective == "toy_b") preset = "toy_b_init";
        else if (cfg.objective == "rosenbrock") preset = "rosenbrock_init";
        else if (cfg.objective == "isotropic_quadratic") preset = "ones";
        else preset = "mlp_init";
    }
    if (auto it = presets().find(preset); it != presets().end()) return it->second;
    if (preset == "ones") return ParamVector(cfg.dim, 1.0);
    if (preset == "rosenbrock_init") {
        ParamVector x(cfg.dim);
        for (std::size_t i = 0; i < cfg.dim; ++i) x[i] = i % 2 == 0 ? -1.2 : 1.0;
        return x;
    }
    if (preset == "mlp_init") {
        if (!cfg.dataset_objective()) throw ConfigError("[" + cfg.name + "] mlp_init needs a dataset objective");
        auto data = build_dataset(cfg);
        return init_params(build_spec(cfg, *data));
    }
    throw ConfigError("[" + cfg.name + "] unknown x0 preset '" + preset + "'");
}

// ---------------------------------------------------------------------------
// Execution

namespace {

/// Common face of the angle method and the baselines inside the harness.
class Stepper {
public:
    virtual ~Stepper() = default;
    /// Fills rec (f, grad_norm, method fields) and returns the next iterate,
    /// or nullopt at a stationary point.
    virtual std::optional<ParamVector> step(const ParamVector& x, const Objective& obj, TrajectoryRecord& rec) = 0;
    virtual void set_scale(double factor) = 0;
};

class DycentStepper final : public Stepper {
public:
    DycentStepper(const DycentConfig& cfg, std::uint64_t seed) : base_(cfg), cfg_(cfg), state_(seed) {}

    std::optional<ParamVector> step(const ParamVector& x, const Objective& obj, TrajectoryRecord& rec) override {
        try {
            StepResult r = dycent_step(x, obj, cfg_, state_);
            rec.f = r.trace.f_before;
            rec.grad_norm = norm(r.trace.g1);
            rec.theta_deg = rad_to_deg(r.trace.theta);
            rec.d_raw = r.trace.d_raw;
            rec.d_used = r.trace.d_used;
            rec.doubled = r.trace.doubled;
            return std::move(r.x_new);
        } catch (const StationaryPointError&) {
            rec.f = obj.value(x);
            rec.grad_norm = 0.0;
            return std::nullopt;
        }
    }

    void set_scale(double factor) override { cfg_.h = base_.h * factor; }

private:
    DycentConfig base_;
    DycentConfig cfg_;
    DycentState state_;
};

class BaselineStepper final : public Stepper {
public:
    explicit BaselineStepper(const BaselineConfig& cfg) : base_(cfg), cfg_(cfg) {}

    std::optional<ParamVector> step(const ParamVector& x, const Objective& obj, TrajectoryRecord& rec) override {
        const ParamVector g = obj.gradient(x);
        rec.f = obj.value(x);
        rec.grad_norm = norm(g);
        if (rec.grad_norm == 0.0) return std::nullopt;
        ParamVector next = baseline_update(x, g, cfg_, state_);
        if (!next.all_finite()) {
            StepTrace t;
            t.x1 = x;
            throw NumericalError("baseline: non-finite iterate", std::move(t));
        }
        return next;
    }

    void set_scale(double factor) override { cfg_.lr = base_.lr * factor; }

private:
    BaselineConfig base_;
    BaselineConfig cfg_;
    BaselineState state_;
};

std::unique_ptr<Stepper> make_stepper(const RunConfig& cfg) {
    if (cfg.is_dycent()) return std::make_unique<DycentStepper>(cfg.dycent, cfg.seed);
    BaselineConfig b = cfg.baseline;
    b.method = parse_baseline_method(cfg.optimizer);
    return std::make_unique<BaselineStepper>(b);
}

} // namespace

ExperimentResult execute(const RunConfig& cfg) {
    cfg.validate();
    ExperimentResult res;
    res.config = cfg;

    auto obj = build_objective(cfg);
    auto* mlp = dynamic_cast<MlpObjective*>(obj.get());
    ParamVector x = resolve_x0(cfg);
    if (x.size() != obj->dim()) {
        throw ConfigError("[" + cfg.name + "] x0 has dimension " + std::to_string(x.size()) + ", objective expects " +
                          std::to_string(obj->dim()));
    }
    auto stepper = make_stepper(cfg);
    res.best_f = std::numeric_limits<double>::infinity();
    bool stop = false;
    std::int64_t iter = 0;

    auto do_step = [&](int epoch) {
        TrajectoryRecord rec;
        rec.iter = iter;
        try {
            auto next = stepper->step(x, *obj, rec);
            res.records.push_back(rec);
            res.record_epoch.push_back(epoch);
            if (!next) {
                res.stopped_at_stationary = true;
                stop = true;
                return;
            }
            x = std::move(*next);
            ++iter;
        } catch (const NumericalError&) {
            ++res.nonfinite_steps;
            stop = true;
        }
    };

    if (!cfg.epoch_mode()) {
        for (std::int64_t it = 0; it < cfg.max_iters && !stop; ++it) {
            do_step(0);
            if (!res.records.empty() && res.records.back().f < res.best_f && res.records.back().iter == it) {
                res.best_f = res.records.back().f;
                res.best_iter = it;
            }
        }
    } else {
        std::vector<std::size_t> order(mlp->data().rows);
        std::iota(order.begin(), order.end(), std::size_t{0});
        RngHandle shuffle_rng(cfg.seed ^ 0x9E3779B97F4A7C15ULL);
        const std::size_t bs = *cfg.batch_size;
        for (int epoch = 1; epoch <= *cfg.epochs && !stop; ++epoch) {
            stepper->set_scale(cfg.h_schedule && epoch >= cfg.h_schedule->at_epoch ? cfg.h_schedule->decay_factor : 1.0);
            shuffle_rng.shuffle(order);
            int step_in_epoch = 0;
            for (std::size_t start = 0; start < order.size() && !stop; start += bs) {
                BatchContext ctx;
                ctx.batch_indices.assign(order.begin() + static_cast<std::ptrdiff_t>(start),
                                         order.begin() + static_cast<std::ptrdiff_t>(std::min(start + bs, order.size())));
                ctx.epoch = epoch;
                ctx.step = step_in_epoch++;
                mlp->set_batch(ctx);
                do_step(epoch);
            }
            mlp->use_full_batch();
            if (!x.all_finite()) break;
            const double loss = mlp->value(x);
            if (!res.records.empty()) res.records.back().acc_train = accuracy(x, mlp->spec(), mlp->data());
            if (loss < res.best_f) {
                res.best_f = loss;
                res.best_iter = iter;
            }
        }
    }

    if (mlp) mlp->use_full_batch();
    res.iterations = iter;
    res.x_final = x;
    res.final_f = x.all_finite() ? obj->value(x) : std::numeric_limits<double>::quiet_NaN();
    if (!cfg.epoch_mode() && res.final_f < res.best_f) {
        res.best_f = res.final_f;
        res.best_iter = iter;
    }
    res.zero_gradient_start = !res.records.empty() && res.records.front().grad_norm == 0.0;
    if (mlp && x.all_finite()) res.final_accuracy = accuracy(x, mlp->spec(), mlp->data());
    return res;
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

void write_trajectory_csv(std::ostream& out, const std::vector<TrajectoryRecord>& records) {
    out << kCsvHeader << '\n';
    auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string{}; };
    for (const auto& r : records) {
        out << r.iter << ',' << format_double(r.f) << ',' << format_double(r.grad_norm) << ',' << opt(r.theta_deg) << ','
            << opt(r.d_raw) << ',' << opt(r.d_used) << ',' << (r.doubled ? (*r.doubled ? "1" : "0") : "") << ','
            << opt(r.acc_train) << '\n';
    }
}

namespace {

ordered_json number_or_null(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); }

std::string output_stem(const RunConfig& cfg) {
    return cfg.output_prefix.empty() ? cfg.name + "-" + config_hash(cfg) : cfg.output_prefix;
}

void ensure_dir(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError(dir.string(), "cannot create output directory: " + ec.message());
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError(path.string(), "cannot open for writing");
    out << content;
    if (!out) throw IoError(path.string(), "write failed");
}

} // namespace

ordered_json summary_to_json(const ExperimentResult& r) {
    ordered_json j;
    j["config"] = config_to_json(r.config);
    j["final_f"] = number_or_null(r.final_f);
    j["best_f"] = number_or_null(r.best_f);
    j["best_iter"] = r.best_iter;
    j["iterations"] = r.iterations;
    j["stopped_at_stationary"] = r.stopped_at_stationary;
    j["zero_gradient_start"] = r.zero_gradient_start;
    j["nonfinite_steps"] = r.nonfinite_steps;
    j["final_accuracy"] = r.final_accuracy ? ordered_json(*r.final_accuracy) : ordered_json(nullptr);
    j["files"] = r.files;
    return j;
}

ExperimentResult run_experiment(const RunConfig& cfg, const std::filesystem::path& out_dir) {
    ExperimentResult r = execute(cfg);
    ensure_dir(out_dir);
    const std::string stem = output_stem(cfg);
    const auto csv_path = out_dir / (stem + ".csv");
    const auto json_path = out_dir / (stem + ".json");
    std::ostringstream csv;
    write_trajectory_csv(csv, r.records);
    write_file(csv_path, csv.str());
    r.files = {csv_path.string(), json_path.string()};
    write_file(json_path, summary_to_json(r).dump(2) + "\n");
    return r;
}

// ---------------------------------------------------------------------------
// Comparison

std::string ComparisonTable::to_csv() const {
    std::ostringstream os;
    os << "name,optimizer,final_f,best_f,iters_to_best,final_accuracy\n";
    for (const auto& r : rows) {
        os << r.name << ',' << r.optimizer << ',' << format_double(r.final_f) << ',' << format_double(r.best_f) << ','
           << r.iters_to_best << ',' << (r.final_accuracy ? format_double(*r.final_accuracy) : "") << '\n';
    }
    return os.str();
}

std::string ComparisonTable::to_text() const {
    std::size_t wn = 4, wo = 9;
    for (const auto& r : rows) {
        wn = std::max(wn, r.name.size());
        wo = std::max(wo, r.optimizer.size());
    }
    std::ostringstream os;
    os << std::left << std::setw(static_cast<int>(wn) + 2) << "name" << std::setw(static_cast<int>(wo) + 2) << "optimizer"
       << std::right << std::setw(16) << "final_f" << std::setw(16) << "best_f" << std::setw(14) << "iters_to_best"
       << std::setw(12) << "accuracy" << '\n';
    for (const auto& r : rows) {
        os << std::left << std::setw(static_cast<int>(wn) + 2) << r.name << std::setw(static_cast<int>(wo) + 2)
           << r.optimizer << std::right << std::setw(16) << std::setprecision(8) << r.final_f << std::setw(16)
           << r.best_f << std::setw(14) << r.iters_to_best << std::setw(12)
           << (r.final_accuracy ? format_double(*r.final_accuracy) : std::string("-")) << '\n';
    }
    return os.str();
}

namespace {

ordered_json objective_signature(const RunConfig& c) {
    ordered_json j = config_to_json(c);
    ordered_json sig;
    for (const char* k : {"objective", "dim", "n_samples", "noise", "data_seed", "data_path", "hidden", "activation", "init_seed"}) {
        if (j.contains(k)) sig[k] = j[k];
    }
    return sig;
}

} // namespace

ComparisonTable run_comparison(const std::vector<RunConfig>& cfgs, const std::optional<std::filesystem::path>& out_dir,
                               bool parallel) {
    if (cfgs.empty()) throw ConfigError("compare: no configurations");
    const RunConfig& ref = cfgs.front();
    const ordered_json ref_sig = objective_signature(ref);
    const ParamVector ref_x0 = resolve_x0(ref);
    for (const auto& c : cfgs) {
        if (objective_signature(c) != ref_sig) {
            throw ConfigError("compare: [" + c.name + "] uses a different objective than [" + ref.name + "]");
        }
        if (resolve_x0(c) != ref_x0) throw ConfigError("compare: [" + c.name + "] has a different x0");
        if (c.max_iters != ref.max_iters || c.epochs != ref.epochs || c.batch_size != ref.batch_size) {
            throw ConfigError("compare: [" + c.name + "] has a different iteration budget");
        }
    }

    auto job = [&](const RunConfig& c) { return out_dir ? run_experiment(c, *out_dir) : execute(c); };
    ComparisonTable table;
    if (parallel && cfgs.size() > 1) {
        std::vector<std::future<ExperimentResult>> futures;
        for (const auto& c : cfgs) futures.push_back(std::async(std::launch::async, job, std::cref(c)));
        for (auto& f : futures) table.results.push_back(f.get());
    } else {
        for (const auto& c : cfgs) table.results.push_back(job(c));
    }
    for (const auto& r : table.results) {
        table.rows.push_back({r.config.name, r.config.optimizer, r.final_f, r.best_f, r.best_iter, r.final_accuracy});
    }
    if (out_dir) {
        write_file(*out_dir / "comparison.csv", table.to_csv());
        write_file(*out_dir / "comparison.txt", table.to_text());
    }
    return table;
}

// ---------------------------------------------------------------------------
// Theory suite

namespace {

ParamVector random_start(std::size_t n, RngHandle& rng) {
    ParamVector x = rng.normal_vector(n);
    x *= rng.uniform(0.1, 10.0) / norm(x);
    return x;
}

void accumulate(TheoryFamilyReport& fam, const DycentRun& run, const Objective& obj, double lipschitz) {
    const DescentReport d = check_descent(run.traces, lipschitz, 1e-10);
    fam.descent.steps_checked += d.steps_checked;
    fam.descent.violations += d.violations;
    fam.descent.min_decrease_margin = std::min(fam.descent.min_decrease_margin, d.min_decrease_margin);
    const double c1 = 1.0 / (2.0 * lipschitz);
    for (const StepTrace& t : run.traces) {
        fam.armijo_rate += check_armijo(t, c1) ? 1.0 : 0.0;
        fam.curvature_rate += check_curvature(t, obj, 0.9) ? 1.0 : 0.0;
        const double target = norm(t.g1) / lipschitz;
        fam.max_step_identity_error = std::max(fam.max_step_identity_error, std::abs(t.d_used - target) / target);
    }
    ++fam.runs;
}

void finalize(TheoryFamilyReport& fam) {
    const double n = static_cast<double>(fam.descent.steps_checked);
    fam.armijo_rate = n > 0 ? fam.armijo_rate / n : 1.0;
    fam.curvature_rate = n > 0 ? fam.curvature_rate / n : 1.0;
}

ordered_json family_json(const TheoryFamilyReport& f) {
    ordered_json j;
    j["family"] = f.family;
    j["runs"] = f.runs;
    j["steps_checked"] = f.descent.steps_checked;
    j["violations"] = f.descent.violations;
    j["min_decrease_margin"] = number_or_null(f.descent.min_decrease_margin);
    j["armijo_pass_rate"] = f.armijo_rate;
    j["curvature_pass_rate"] = f.curvature_rate;
    j["max_step_identity_error"] = f.max_step_identity_error;
    return j;
}

} // namespace

ordered_json TheoryReport::to_json() const {
    ordered_json j;
    j["seed"] = seed;
    j["tolerance"] = 1e-10;
    j["c1"] = "1/(2L)";
    j["c2"] = 0.9;
    j["total_steps"] = total_steps;
    j["total_violations"] = total_violations;
    j["armijo_pass_rate"] = armijo_rate;
    j["curvature_pass_rate"] = curvature_rate;
    j["families"] = ordered_json::array();
    for (const auto& f : families) j["families"].push_back(family_json(f));
    j["toy_b_fixed_h"] = {{"steps", toy_b_steps}, {"curvature_pass_rate", toy_b_curvature_rate}};
    return j;
}

TheoryReport run_theory_suite(std::uint64_t seed) {
    TheoryReport rep;
    rep.seed = seed;
    RngHandle rng(seed);
    DycentConfig cfg;
    cfg.enable_doubling = false;

    TheoryFamilyReport iso;
    iso.family = "isotropic_quadratic";
    iso.descent.min_decrease_margin = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 1000; ++k) {
        const std::size_t n = 2 + rng.uniform_index(9);
        auto obj = isotropic_quadratic(n);
        const ParamVector x0 = random_start(n, rng);
        const DycentRun run = run_constrained(x0, *obj, cfg, {1.0, 0.1}, 10, rng.next_u64());
        accumulate(iso, run, *obj, 1.0);
    }
    finalize(iso);

    TheoryFamilyReport spd;
    spd.family = "random_spd_quadratic";
    spd.descent.min_decrease_margin = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 200; ++k) {
        const std::size_t n = 2 + rng.uniform_index(11);
        const double lipschitz = rng.uniform(1.0, 10.0);
        auto obj = random_spd_quadratic(n, 0.05 * lipschitz, lipschitz, rng);
        const ParamVector x0 = random_start(n, rng);
        const DycentRun run = run_constrained(x0, *obj, cfg, {lipschitz, 0.1}, 50, rng.next_u64());
        accumulate(spd, run, *obj, lipschitz);
    }
    finalize(spd);

    rep.families = {iso, spd};
    double armijo = 0.0, curvature = 0.0;
    for (const auto& f : rep.families) {
        rep.total_steps += f.descent.steps_checked;
        rep.total_violations += f.descent.violations;
        armijo += f.armijo_rate * static_cast<double>(f.descent.steps_checked);
        curvature += f.curvature_rate * static_cast<double>(f.descent.steps_checked);
    }
    rep.armijo_rate = rep.total_steps ? armijo / static_cast<double>(rep.total_steps) : 1.0;
    rep.curvature_rate = rep.total_steps ? curvature / static_cast<double>(rep.total_steps) : 1.0;

    auto toy = toy_b();
    const DycentRun toy_run = run(kToyBInit, *toy, DycentConfig{}, 1000, seed);
    std::size_t pass = 0;
    for (const auto& t : toy_run.traces) pass += check_curvature(t, *toy, 0.9) ? 1 : 0;
    rep.toy_b_steps = toy_run.traces.size();
    rep.toy_b_curvature_rate = rep.toy_b_steps ? static_cast<double>(pass) / static_cast<double>(rep.toy_b_steps) : 1.0;
    return rep;
}

// ---------------------------------------------------------------------------
// Angles

namespace {

double median_of(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    const double hi = v[mid];
    if (v.size() % 2 == 1) return hi;
    const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lo + hi);
}

} // namespace

std::vector<EpochAngleStats> angle_stats_by_epoch(const ExperimentResult& r) {
    std::map<int, std::vector<double>> by_epoch;
    for (std::size_t i = 0; i < r.records.size(); ++i) {
        if (r.records[i].theta_deg) by_epoch[r.record_epoch[i]].push_back(*r.records[i].theta_deg);
    }
    std::vector<EpochAngleStats> out;
    for (auto& [epoch, vals] : by_epoch) {
        EpochAngleStats s;
        s.epoch = epoch;
        s.steps = vals.size();
        s.mean_deg = std::accumulate(vals.begin(), vals.end(), 0.0) / static_cast<double>(vals.size());
        s.min_deg = *std::min_element(vals.begin(), vals.end());
        s.max_deg = *std::max_element(vals.begin(), vals.end());
        s.median_deg = median_of(std::move(vals));
        out.push_back(s);
    }
    return out;
}

double median_angle_deg(const ExperimentResult& r, int first_epoch, int last_epoch) {
    std::vector<double> vals;
    for (std::size_t i = 0; i < r.records.size(); ++i) {
        const int e = r.record_epoch[i];
        if (e >= first_epoch && e <= last_epoch && r.records[i].theta_deg) vals.push_back(*r.records[i].theta_deg);
    }
    return median_of(std::move(vals));
}

RunConfig default_angle_config() {
    RunConfig c;
    c.name = "angles";
    c.objective = "moons";
    c.n_samples = 1000;
    c.noise = 0.1;
    c.hidden = 16;
    c.activation = Activation::tanh;
    c.optimizer = "dycent";
    c.dycent.h = 1e-3;
    c.dycent.epsilon = 1e-2;
    c.batch_size = 32;
    c.epochs = 50;
    return c;
}

} // namespace dycent::harness
