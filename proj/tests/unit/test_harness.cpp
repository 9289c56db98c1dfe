#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "dycent/errors.hpp"
#include "dycent/harness.hpp"

using namespace dycent;
using namespace dycent::harness;
namespace fs = std::filesystem;

namespace {

std::string csv_of(const ExperimentResult& r) {
    std::ostringstream os;
    write_trajectory_csv(os, r.records);
    return os.str();
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("dycent_harness_" + name);
    fs::remove_all(p);
    return p;
}

RunConfig toy(const std::string& objective, const std::string& optimizer) {
    RunConfig c;
    c.name = objective + "_" + optimizer;
    c.objective = objective;
    c.optimizer = optimizer;
    c.baseline = optimizer == "dycent" ? BaselineConfig{} : BaselineConfig::defaults(parse_baseline_method(optimizer));
    c.baseline.lr = 1e-2;
    c.seed = 7;
    return c;
}

} // namespace

TEST_CASE("presets") {
    CHECK(kToyAInit == ParamVector{-2.0, 0.0});
    CHECK(kToyBInit == ParamVector{3.0, 3.0});
    CHECK(kToyAInitPerturbed == ParamVector{-2.0, 0.1});
    RunConfig c = toy("toy_a", "sgd");
    CHECK(resolve_x0(c) == kToyAInitPerturbed);
    c.x0_preset = "toy_a_init";
    CHECK(resolve_x0(c) == kToyAInit);
    CHECK(resolve_x0(toy("toy_b", "dycent")) == kToyBInit);
    c.x0_preset = "nowhere";
    CHECK_THROWS_AS(resolve_x0(c), ConfigError);
}

TEST_CASE("config parsing") {
    const std::string text = R"(
; comment
# another comment
[a]
objective = toy_b
optimizer = dycent
h = 0.05
doubling = false
d_avg_init = zero
seed = 3
max_iters = 20

[b]
objective = toy_a
optimizer = adam
x0 = -2.0, 0.25

[c]
objective = moons
optimizer = rmsprop
batch_size = 16
epochs = 4
h_decay_factor = 0.5
h_decay_epoch = 2
repeats = 3
)";
    const auto cfgs = parse_config_text(text);
    REQUIRE(cfgs.size() == 3);
    CHECK(cfgs[0].name == "a");
    CHECK(cfgs[0].dycent.h == 0.05);
    CHECK_FALSE(cfgs[0].dycent.enable_doubling);
    CHECK(cfgs[0].dycent.d_avg_init == AverageInit::zero);
    CHECK(cfgs[0].seed == 3);
    CHECK(cfgs[0].max_iters == 20);
    CHECK(cfgs[1].baseline.method == BaselineMethod::adam);
    CHECK(cfgs[1].baseline.lr == 1e-2);
    CHECK(*cfgs[1].x0 == ParamVector{-2.0, 0.25});
    CHECK(cfgs[2].baseline.beta2 == 0.99);
    CHECK(cfgs[2].baseline.lr == 1e-3);
    CHECK(cfgs[2].h_schedule->decay_factor == 0.5);
    CHECK(cfgs[2].h_schedule->at_epoch == 2);

    const auto reps = expand_repeats(cfgs[2]);
    REQUIRE(reps.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) CHECK(reps[i].seed == i);
    CHECK(reps[0].name != reps[1].name);
}

TEST_CASE("config errors name the valid options") {
    auto expect = [](const std::string& text, const std::string& needle) {
        try {
            parse_config_text(text);
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            CHECK_MESSAGE(std::string(e.what()).find(needle) != std::string::npos, e.what());
        }
    };
    expect("[x]\nobjective = toy_c\n", "toy_b");
    expect("[x]\noptimizer = lbfgs\n", "adabelief");
    expect("[x]\nlearning_rate = 1\n", "valid:");
    expect("[x]\nh = abc\n", "real number");
    expect("[x]\nh = -1\n", "h must be");
    expect("[x]\nmax_iters = 0\n", "max_iters");
    expect("[x]\nobjective = toy_b\nepochs = 3\n", "dataset");
    expect("", "no [sections]");
    expect("[x]\nactivation = gelu\n", "relu");
    CHECK_THROWS_AS(parse_config_file("/nonexistent/dycent.ini"), IoError);
}

TEST_CASE("config echo and hash") {
    const RunConfig c = toy("toy_b", "dycent");
    const auto j = config_to_json(c);
    for (const char* key : {"objective", "optimizer", "h", "beta", "epsilon", "doubling", "clamp", "d_avg_init", "x0",
                            "max_iters", "seed", "batch_size", "epochs", "h_decay_factor", "repeats"}) {
        CHECK_MESSAGE(j.contains(key), key);
    }
    CHECK(config_hash(c) == config_hash(c));
    CHECK(config_hash(c).size() == 16);
    RunConfig d = c;
    d.seed = 8;
    CHECK(config_hash(c) != config_hash(d));
}

TEST_CASE("toy B dycent run structure") {
    const ExperimentResult r = execute(toy("toy_b", "dycent"));
    REQUIRE(r.records.size() == 1000);
    for (std::size_t i = 0; i < r.records.size(); ++i) {
        CHECK(r.records[i].iter == static_cast<std::int64_t>(i));
        CHECK(r.records[i].theta_deg.has_value());
        CHECK(r.records[i].doubled.has_value());
        CHECK_FALSE(r.records[i].acc_train.has_value());
    }
    CHECK(r.iterations == 1000);
    CHECK(r.best_f <= r.final_f);
    CHECK(r.nonfinite_steps == 0);

    const std::string csv = csv_of(r);
    CHECK(csv.rfind(std::string(kCsvHeader) + "\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1001);
    CHECK(csv == csv_of(execute(toy("toy_b", "dycent"))));
}

TEST_CASE("baseline rows leave method columns empty") {
    const ExperimentResult r = execute(toy("toy_b", "adam"));
    const std::string csv = csv_of(r);
    std::istringstream in(csv);
    std::string header, row;
    std::getline(in, header);
    std::getline(in, row);
    CHECK(row.substr(row.size() - 5) == ",,,,,");
    CHECK_FALSE(r.records[0].theta_deg.has_value());
}

TEST_CASE("exact toy A init stops immediately") {
    RunConfig c = toy("toy_a", "sgd");
    c.x0_preset = "toy_a_init";
    const ExperimentResult r = execute(c);
    REQUIRE(r.records.size() == 1);
    CHECK(r.records[0].iter == 0);
    CHECK(r.records[0].grad_norm == 0.0);
    CHECK(r.zero_gradient_start);
    CHECK(r.stopped_at_stationary);
    CHECK(r.final_f == 0.0);

    c.optimizer = "dycent";
    const ExperimentResult d = execute(c);
    CHECK(d.records.size() == 1);
    CHECK(d.zero_gradient_start);
}

TEST_CASE("outputs on disk") {
    const fs::path dir = scratch("out");
    RunConfig c = toy("toy_b", "dycent");
    c.max_iters = 50;
    const ExperimentResult r = run_experiment(c, dir);
    REQUIRE(r.files.size() == 2);
    const std::string stem = c.name + "-" + config_hash(c);
    CHECK(fs::exists(dir / (stem + ".csv")));
    CHECK(fs::exists(dir / (stem + ".json")));
    const auto summary = nlohmann::json::parse(slurp(dir / (stem + ".json")));
    CHECK(summary.contains("config"));
    CHECK(summary.contains("final_f"));
    CHECK(summary.contains("best_f"));
    CHECK(summary["files"].size() == 2);
    CHECK(summary["config"]["h"] == 1e-2);

    const std::string first = slurp(dir / (stem + ".csv"));
    run_experiment(c, dir);
    CHECK(slurp(dir / (stem + ".csv")) == first);

    c.output_prefix = "named";
    run_experiment(c, dir);
    CHECK(fs::exists(dir / "named.csv"));

    // A regular file where a directory is needed.
    const fs::path blocker = scratch("blocker");
    std::ofstream(blocker) << "x";
    try {
        run_experiment(c, blocker / "sub");
        FAIL("expected IoError");
    } catch (const IoError& e) {
        CHECK(std::string(e.what()).find("blocker") != std::string::npos);
    }
}

TEST_CASE("epoch mode on two moons") {
    RunConfig c;
    c.name = "moons";
    c.objective = "moons";
    c.n_samples = 200;
    c.optimizer = "adam";
    c.baseline = BaselineConfig::defaults(BaselineMethod::adam);
    c.baseline.lr = 1e-2;
    c.batch_size = 32;
    c.epochs = 5;
    const ExperimentResult r = execute(c);
    CHECK(r.records.size() == 5 * 7);
    REQUIRE(r.final_accuracy.has_value());
    CHECK(*r.final_accuracy > 0.5);
    std::size_t with_acc = 0;
    for (const auto& rec : r.records) with_acc += rec.acc_train.has_value();
    CHECK(with_acc == 5);
    CHECK(r.record_epoch.front() == 1);
    CHECK(r.record_epoch.back() == 5);
    CHECK(csv_of(r) == csv_of(execute(c)));

    RunConfig sched = c;
    sched.h_schedule = HSchedule{0.0001, 3};
    const ExperimentResult s = execute(sched);
    CHECK(s.records[13].f == r.records[13].f);
    CHECK(s.records[20].f != r.records[20].f);
}

TEST_CASE("angle statistics") {
    RunConfig c = default_angle_config();
    CHECK(c.batch_size == 32u);
    CHECK(c.hidden == 16);
    c.n_samples = 200;
    c.epochs = 3;
    const ExperimentResult r = execute(c);
    const auto stats = angle_stats_by_epoch(r);
    REQUIRE(stats.size() == 3);
    for (const auto& s : stats) {
        CHECK(s.steps == 7);
        CHECK(s.min_deg <= s.median_deg);
        CHECK(s.median_deg <= s.max_deg);
    }
    const double m = median_angle_deg(r, 1, 3);
    CHECK(m > 0.0);
    CHECK(std::isnan(median_angle_deg(r, 10, 20)));
}

TEST_CASE("comparison") {
    std::vector<RunConfig> cfgs;
    for (const std::string opt : {"dycent", "sgd", "sgdm", "adam", "rmsprop", "adabelief", "diffgrad", "angulargrad_cos",
                                  "angulargrad_tan"}) {
        cfgs.push_back(toy("toy_b", opt));
    }
    const ComparisonTable t = run_comparison(cfgs, std::nullopt);
    REQUIRE(t.rows.size() == 9);
    CHECK(t.rows[0].optimizer == "dycent");
    for (std::size_t i = 1; i < t.rows.size(); ++i) CHECK(t.rows[0].final_f <= t.rows[i].final_f);
    const ComparisonTable serial = run_comparison(cfgs, std::nullopt, false);
    CHECK(serial.to_csv() == t.to_csv());
    CHECK(t.to_text().find("angulargrad_tan") != std::string::npos);

    CHECK(run_comparison({cfgs[1]}, std::nullopt).rows.size() == 1);

    RunConfig moved = cfgs[1];
    moved.x0 = ParamVector{2.0, 2.0};
    CHECK_THROWS_AS(run_comparison({cfgs[0], moved}, std::nullopt), ConfigError);
    CHECK_THROWS_AS(run_comparison({cfgs[0], toy("toy_a", "sgd")}, std::nullopt), ConfigError);
    RunConfig shorter = cfgs[1];
    shorter.max_iters = 10;
    CHECK_THROWS_AS(run_comparison({cfgs[0], shorter}, std::nullopt), ConfigError);
    CHECK_THROWS_AS(run_comparison({}, std::nullopt), ConfigError);

    const fs::path dir = scratch("cmp");
    run_comparison({cfgs[0], cfgs[1]}, dir);
    CHECK(fs::exists(dir / "comparison.csv"));
    CHECK(fs::exists(dir / "comparison.txt"));
}

TEST_CASE("theory suite") {
    const TheoryReport a = run_theory_suite(0);
    CHECK(a.total_steps >= 10000);
    CHECK(a.total_violations == 0);
    CHECK(a.armijo_rate == 1.0);
    CHECK(a.curvature_rate >= 0.0);
    CHECK(a.toy_b_steps == 1000);
    for (const auto& f : a.families) CHECK(f.max_step_identity_error <= 1e-12);
    CHECK(a.to_json().dump() == run_theory_suite(0).to_json().dump());
    CHECK(a.to_json().dump() != run_theory_suite(1).to_json().dump());
}

TEST_CASE("double formatting round-trips") {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 12345678.9}) CHECK(std::stod(format_double(v)) == v);
    CHECK(format_double(1.0) == "1");
    CHECK(format_double(std::nan("")) == "nan");
}
