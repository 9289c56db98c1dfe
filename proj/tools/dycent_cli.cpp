// Command-line front end for the experiment harness.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dycent/errors.hpp"
#include "dycent/harness.hpp"

namespace fs = std::filesystem;
using namespace dycent;
using namespace dycent::harness;

namespace {

enum ExitCode : int { kOk = 0, kOther = 1, kConfig = 2, kIo = 3, kNumerical = 4 };

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::int64_t> iters;
};

void apply(RunConfig& c, const Overrides& o) {
    if (o.seed) c.seed = *o.seed;
    if (o.iters) {
        if (c.epoch_mode()) {
            c.epochs = static_cast<int>(*o.iters);
        } else {
            c.max_iters = *o.iters;
        }
    }
    c.validate();
}

std::vector<RunConfig> load(const std::string& path, const Overrides& o) {
    std::vector<RunConfig> out;
    for (RunConfig c : parse_config_file(path)) {
        apply(c, o);
        for (auto& r : expand_repeats(c)) out.push_back(std::move(r));
    }
    return out;
}

void write_text(const fs::path& path, const std::string& text) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw IoError(path.parent_path().string(), "cannot create output directory: " + ec.message());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError(path.string(), "cannot open for writing");
    out << text;
    if (!out) throw IoError(path.string(), "write failed");
}

void print_summary(const ExperimentResult& r) {
    std::cout << r.config.name << ": final_f=" << format_double(r.final_f) << " best_f=" << format_double(r.best_f)
              << " iterations=" << r.iterations;
    if (r.final_accuracy) std::cout << " accuracy=" << format_double(*r.final_accuracy);
    if (r.zero_gradient_start) std::cout << " (zero gradient at start)";
    if (r.nonfinite_steps) std::cout << " (stopped: non-finite step)";
    std::cout << '\n';
    for (const auto& f : r.files) std::cout << "  wrote " << f << '\n';
}

int cmd_run(const std::string& config, const fs::path& out, const Overrides& o) {
    bool diverged = false;
    for (const RunConfig& c : load(config, o)) {
        const ExperimentResult r = run_experiment(c, out);
        print_summary(r);
        diverged = diverged || r.nonfinite_steps > 0;
    }
    return diverged ? kNumerical : kOk;
}

int cmd_compare(const std::string& config, const fs::path& out, const Overrides& o) {
    const ComparisonTable t = run_comparison(load(config, o), out);
    std::cout << t.to_text();
    std::cout << "wrote " << (out / "comparison.csv").string() << " and " << (out / "comparison.txt").string() << '\n';
    return kOk;
}

int cmd_theory(std::uint64_t seed, const fs::path& out) {
    const TheoryReport rep = run_theory_suite(seed);
    const fs::path path = out / "theory_report.json";
    write_text(path, rep.to_json().dump(2) + "\n");
    std::cout << "steps=" << rep.total_steps << " violations=" << rep.total_violations
              << " armijo_pass_rate=" << format_double(rep.armijo_rate)
              << " curvature_pass_rate=" << format_double(rep.curvature_rate) << '\n'
              << "wrote " << path.string() << '\n';
    return rep.total_violations == 0 ? kOk : kNumerical;
}

int cmd_angles(const std::string& config, const fs::path& out, const Overrides& o) {
    RunConfig c = config.empty() ? default_angle_config() : parse_config_file(config).front();
    apply(c, o);
    if (!c.is_dycent() || !c.epoch_mode()) throw ConfigError("angles: needs optimizer dycent in epoch mode");
    const ExperimentResult r = run_experiment(c, out);
    std::ostringstream csv;
    csv << "epoch,steps,median_deg,mean_deg,min_deg,max_deg\n";
    for (const auto& s : angle_stats_by_epoch(r)) {
        csv << s.epoch << ',' << s.steps << ',' << format_double(s.median_deg) << ',' << format_double(s.mean_deg) << ','
            << format_double(s.min_deg) << ',' << format_double(s.max_deg) << '\n';
    }
    const fs::path path = out / (c.name + "-angles.csv");
    write_text(path, csv.str());
    print_summary(r);
    const int last = *c.epochs;
    const int first = std::min(10, last);
    std::cout << "median theta (deg), epochs " << first << "-" << last << ": "
              << format_double(median_angle_deg(r, first, last)) << '\n'
              << "  wrote " << path.string() << '\n';
    return r.nonfinite_steps ? kNumerical : kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Angle-based step size optimizer: experiments, comparisons and checks"};
    app.require_subcommand(1);

    std::string config;
    std::string out_dir = "out";
    std::uint64_t seed = 0;
    std::int64_t iters = 0;

    auto add_common = [&](CLI::App* sub, bool config_required) {
        auto* opt = sub->add_option("--config", config, "run configuration file (INI sections)");
        if (config_required) opt->required()->check(CLI::ExistingFile);
        sub->add_option("--seed", seed, "override the seed of every run");
        sub->add_option("--out", out_dir, "output directory")->capture_default_str();
        sub->add_option("--iters", iters, "override max_iters (epochs in epoch mode)")->check(CLI::PositiveNumber);
    };

    CLI::App* run = app.add_subcommand("run", "run every section of a config file");
    add_common(run, true);
    CLI::App* compare = app.add_subcommand("compare", "run sections side by side and tabulate them");
    add_common(compare, true);
    CLI::App* theory = app.add_subcommand("theory", "constrained-mode descent and Wolfe checks");
    theory->add_option("--seed", seed, "suite seed")->capture_default_str();
    theory->add_option("--out", out_dir, "output directory")->capture_default_str();
    CLI::App* angles = app.add_subcommand("angles", "per-epoch angle statistics on the two-moons network");
    add_common(angles, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kConfig;
    }

    Overrides o;
    for (CLI::App* sub : {run, compare, angles}) {
        if (sub->parsed()) {
            if (sub->count("--seed")) o.seed = seed;
            if (sub->count("--iters")) o.iters = iters;
        }
    }

    try {
        if (run->parsed()) return cmd_run(config, out_dir, o);
        if (compare->parsed()) return cmd_compare(config, out_dir, o);
        if (theory->parsed()) return cmd_theory(seed, out_dir);
        if (angles->parsed()) return cmd_angles(config, out_dir, o);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfig;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << '\n';
        return kIo;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return kNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kOther;
    }
    return kOther;
}
