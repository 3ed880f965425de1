// Experiment driver: runs a declarative config through training, baseline
// sampling and Monte Carlo evaluation, and emits curve/scatter data as CSV
// and JSON.

#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "uep/experiment.hpp"

namespace {

int cmd_run(const std::string& config_path, const uep::RunOptions& options) {
    uep::ExperimentConfig cfg = uep::load_config(config_path);
    uep::RunOutput out = uep::run_experiment(cfg, options);
    std::cout << "wrote " << out.rows.size() << " result rows to " << out.out_dir << "/results.csv"
              << '\n';
    return 0;
}

int cmd_validate(const std::string& config_path) {
    uep::ExperimentConfig cfg = uep::load_config(config_path);
    const uep::ClassPartition p = cfg.partition();
    std::cout << config_path << ": ok (mode " << uep::to_string(cfg.mode) << ", M "
              << p.num_messages() << ", n " << cfg.n << ", " << p.num_classes() << " classes)"
              << '\n';
    return 0;
}

int cmd_compare(const std::string& ae_path, const std::string& baseline_path,
                const std::string& report_path) {
    auto read_points = [](const std::string& path) {
        std::ifstream is(path);
        if (!is) throw std::runtime_error("cannot open " + path);
        std::vector<std::pair<double, double>> pts;
        for (const uep::CsvRow& row : uep::parse_csv(is)) {
            if (row.p.size() < 2) throw std::runtime_error(path + ": rows need two classes");
            pts.emplace_back(row.p[0], row.p[1]);
        }
        return pts;
    };

    const auto ae = read_points(ae_path);
    const auto base = read_points(baseline_path);
    const uep::DominanceReport rep = uep::compare_frontiers(ae, base);

    std::size_t dominated = 0;
    for (std::size_t i = 0; i < ae.size(); ++i) {
        std::printf("ae point %zu (%.4g, %.4g): %s\n", i, ae[i].first, ae[i].second,
                    rep.ae_point_dominated[i] ? "dominated by a baseline point"
                                              : "not dominated");
        if (rep.ae_point_dominated[i]) ++dominated;
    }
    std::printf("ae points dominated: %zu of %zu\n", dominated, ae.size());
    std::printf("ae frontier dominates baseline frontier: %s\n",
                rep.ae_frontier_dominates_baseline ? "true" : "false");

    if (!report_path.empty()) {
        std::ofstream os(report_path);
        os << "{\n  \"ae_points_dominated\": " << dominated
           << ",\n  \"ae_point_count\": " << ae.size()
           << ",\n  \"baseline_point_count\": " << base.size()
           << ",\n  \"ae_frontier_dominates_baseline\": "
           << (rep.ae_frontier_dominates_baseline ? "true" : "false") << "\n}\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"uepsim: unequal-error-protection block-code workbench"};
    app.require_subcommand(1);

    std::string config_path, ae_csv, baseline_csv, report_path;
    uep::RunOptions options;
    bool serial = false;
    std::uint64_t seed_value = 0;

    CLI::App* run = app.add_subcommand("run", "run an experiment config");
    run->add_option("config", config_path, "config file (JSON)")->required();
    run->add_option("--out-dir", options.out_dir, "override the config's output directory");
    CLI::Option* seed_opt = run->add_option("--seed", seed_value, "override the master seed");
    run->add_option("--jobs", options.jobs, "worker threads (0 = library default)");
    run->add_flag("--serial", serial, "force the serial reference execution path");

    CLI::App* validate = app.add_subcommand("validate", "check a config against the schema");
    validate->add_option("config", config_path, "config file (JSON)")->required();

    CLI::App* compare = app.add_subcommand("compare", "dominance report for two results files");
    compare->add_option("ae_csv", ae_csv, "AE results.csv")->required();
    compare->add_option("baseline_csv", baseline_csv, "baseline results.csv")->required();
    compare->add_option("--report", report_path, "write a JSON report here");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            if (*seed_opt) options.seed = seed_value;
            if (serial) options.exec = uep::Execution::serial_reference;
            return cmd_run(config_path, options);
        }
        if (validate->parsed()) return cmd_validate(config_path);
        if (compare->parsed()) return cmd_compare(ae_csv, baseline_csv, report_path);
    } catch (const uep::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const uep::TrainingDiverged& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
