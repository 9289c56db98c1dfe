#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dycent/baselines.hpp"
#include "dycent/mlmodels.hpp"
#include "dycent/objective.hpp"
#include "dycent/optimizer.hpp"
#include "dycent/theory.hpp"
#include "dycent/trajectory.hpp"

#include "json.hpp"

namespace dycent::harness {

/// Multiplies h (angle method) or lr (baselines) by decay_factor from epoch
/// at_epoch (1-based) onwards.
struct HSchedule {
    double decay_factor = 0.1;
    int at_epoch = 80;
};

/// Named starting points.
inline const ParamVector kToyAInit{-2.0, 0.0};
inline const ParamVector kToyAInitPerturbed{-2.0, 0.1};
inline const ParamVector kToyBInit{3.0, 3.0};

/// One experiment: objective, optimizer, start point and budget.
struct RunConfig {
    std::string name = "run";

    // Objective: toy_a | toy_b | isotropic_quadratic | rosenbrock | moons | csv
    std::string objective = "toy_b";
    std::size_t dim = 2;
    std::size_t n_samples = 1000;
    double noise = 0.1;
    std::uint64_t data_seed = 0;
    std::string data_path;
    std::size_t hidden = 16;
    Activation activation = Activation::tanh;
    std::uint64_t init_seed = 0;

    // Optimizer: dycent or a baseline name.
    std::string optimizer = "dycent";
    DycentConfig dycent;
    BaselineConfig baseline;

    /// Preset name (toy_a_init, toy_a_init_perturbed, toy_b_init, mlp_init,
    /// ones, rosenbrock_init) or empty when x0 holds explicit values.
    std::string x0_preset;
    std::optional<ParamVector> x0;

    std::int64_t max_iters = 1000;
    std::uint64_t seed = 0;
    std::optional<std::size_t> batch_size;
    std::optional<int> epochs;
    std::optional<HSchedule> h_schedule;
    std::string output_prefix;
    int repeats = 1;

    bool dataset_objective() const { return objective == "moons" || objective == "csv"; }
    bool epoch_mode() const { return epochs.has_value(); }
    bool is_dycent() const { return optimizer == "dycent"; }
    /// Throws ConfigError on inconsistent settings.
    void validate() const;
};

/// Parses key/value sections ("[name]" then "key = value" lines, ';' or '#'
/// comments); one RunConfig per section. Unknown keys are rejected.
std::vector<RunConfig> parse_config_text(const std::string& text);
std::vector<RunConfig> parse_config_file(const std::filesystem::path& path);

/// Copies of cfg with seeds seed, seed+1, ... for cfg.repeats > 1.
std::vector<RunConfig> expand_repeats(const RunConfig& cfg);

/// Every field, defaults included.
nlohmann::ordered_json config_to_json(const RunConfig& cfg);
/// 16 hex digits of FNV-1a over the canonical config echo.
std::string config_hash(const RunConfig& cfg);

/// Objective described by cfg; dataset objectives get their own dataset copy.
std::unique_ptr<Objective> build_objective(const RunConfig& cfg);
ParamVector resolve_x0(const RunConfig& cfg);

struct ExperimentResult {
    RunConfig config;
    std::vector<TrajectoryRecord> records;
    std::vector<int> record_epoch;  ///< 1-based epoch of each record (0 in iteration mode)
    ParamVector x_final;
    double final_f = 0.0;
    double best_f = 0.0;
    std::int64_t best_iter = 0;
    std::int64_t iterations = 0;
    bool stopped_at_stationary = false;
    bool zero_gradient_start = false;
    std::size_t nonfinite_steps = 0;
    std::optional<double> final_accuracy;
    std::vector<std::string> files;
};

/// Runs the experiment in memory. Deterministic given the config.
ExperimentResult execute(const RunConfig& cfg);

/// execute() plus <out_dir>/<stem>.csv and <stem>.json, stem being
/// output_prefix or "<name>-<hash>".
ExperimentResult run_experiment(const RunConfig& cfg, const std::filesystem::path& out_dir);

nlohmann::ordered_json summary_to_json(const ExperimentResult& r);

inline constexpr const char* kCsvHeader = "iter,f,grad_norm,theta_deg,d_raw,d_used,doubled,acc_train";
void write_trajectory_csv(std::ostream& out, const std::vector<TrajectoryRecord>& records);
/// Shortest round-trip decimal form.
std::string format_double(double v);

struct ComparisonRow {
    std::string name;
    std::string optimizer;
    double final_f = 0.0;
    double best_f = 0.0;
    std::int64_t iters_to_best = 0;
    std::optional<double> final_accuracy;
};

struct ComparisonTable {
    std::vector<ComparisonRow> rows;
    std::vector<ExperimentResult> results;

    std::string to_csv() const;
    std::string to_text() const;
};

/// Requires every config to share objective, x0 and budget. Runs are
/// independent and may execute concurrently; results keep config order.
ComparisonTable run_comparison(const std::vector<RunConfig>& cfgs, const std::optional<std::filesystem::path>& out_dir,
                               bool parallel = true);

struct TheoryFamilyReport {
    std::string family;
    std::size_t runs = 0;
    DescentReport descent;
    double armijo_rate = 0.0;
    double curvature_rate = 0.0;
    double max_step_identity_error = 0.0;  ///< max |d_used - |grad f| / L|, relative to |grad f| / L
};

struct TheoryReport {
    std::uint64_t seed = 0;
    std::vector<TheoryFamilyReport> families;
    std::size_t total_steps = 0;
    std::size_t total_violations = 0;
    double armijo_rate = 0.0;
    double curvature_rate = 0.0;
    double toy_b_curvature_rate = 0.0;  ///< fixed-h run from (3, 3), measurement only
    std::size_t toy_b_steps = 0;

    nlohmann::ordered_json to_json() const;
};

/// Constrained-mode runs on isotropic and random SPD quadratics with the
/// descent and Wolfe checks, plus curvature statistics of a toy B run.
TheoryReport run_theory_suite(std::uint64_t seed);

struct EpochAngleStats {
    int epoch = 0;
    std::size_t steps = 0;
    double median_deg = 0.0;
    double mean_deg = 0.0;
    double min_deg = 0.0;
    double max_deg = 0.0;
};

std::vector<EpochAngleStats> angle_stats_by_epoch(const ExperimentResult& r);
/// Median logged angle (degrees) over epochs first..last inclusive.
double median_angle_deg(const ExperimentResult& r, int first_epoch, int last_epoch);

/// Default angle experiment: two-moons MLP (hidden 16, batch 32), angle-based optimizer.
RunConfig default_angle_config();

} // namespace dycent::harness
