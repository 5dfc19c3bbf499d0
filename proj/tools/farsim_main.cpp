// Command-line front end: pretrain -> profile -> select -> retrain -> fleet.
// Every command is deterministic given (config, master seed); --jobs only
// changes how many threads do the work.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "farsim/config.hpp"
#include "farsim/json_io.hpp"
#include "farsim/rng.hpp"
#include "farsim/threads.hpp"

namespace fs = std::filesystem;
using farsim::jsonio::json;

namespace {

struct CommonOpts {
    std::string config_path;
    std::string out_override;
    std::optional<std::uint64_t> seed_override;
    int jobs = 0;
};

farsim::RunConfig load_config(const CommonOpts& opts) {
    farsim::RunConfig cfg = farsim::load_run_config(opts.config_path);
    if (opts.seed_override) {
        cfg.seed = *opts.seed_override;
        cfg.profile.base_seed = farsim::derive_seed(cfg.seed, "profile");
    }
    if (!opts.out_override.empty()) cfg.out_dir = opts.out_override;
    return cfg;
}

fs::path ensure_out_dir(const farsim::RunConfig& cfg) {
    fs::path dir(cfg.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw farsim::jsonio::IoError("cannot create output directory " + dir.string());
    return dir;
}

farsim::NetworkParams load_params(const std::string& path, const farsim::NetworkSpec& spec) {
    farsim::NetworkParams params = farsim::jsonio::params_from_json(farsim::jsonio::load_json(path));
    std::vector<int> dims;
    if (!params.weights.empty()) {
        dims.push_back(params.weights.front().rows());
        for (const auto& w : params.weights) dims.push_back(w.cols());
    }
    if (dims != spec.layer_dims)
        throw farsim::ConfigError("params in " + path + " do not match the configured network");
    return params;
}

std::string policy_tag(const farsim::Policy& policy) {
    std::string tag = policy.name();
    for (char& c : tag)
        if (c == ':') c = '_';
    return tag;
}

int cmd_pretrain(const CommonOpts& opts) {
    const farsim::RunConfig cfg = load_config(opts);
    const fs::path out = ensure_out_dir(cfg);
    const auto [train_data, test_data] = farsim::build_datasets(cfg);

    farsim::NetworkParams params =
        farsim::init_params(cfg.network, farsim::derive_seed(cfg.seed, "init"));
    farsim::TrainConfig tc = cfg.train;
    tc.seed = farsim::derive_seed(cfg.seed, "pretrain");
    auto [trained, trace] = farsim::train(std::move(params), train_data, test_data,
                                          cfg.pretrain_epochs, tc);
    const double baseline = trace.accuracies.back();

    farsim::jsonio::save_json(farsim::jsonio::params_to_json(trained),
                              (out / "pretrained_params.json").string());
    json metrics = {{"baseline_accuracy", baseline},
                    {"accuracy_constraint", cfg.accuracy_constraint},
                    {"epochs", cfg.pretrain_epochs},
                    {"eval_split", "test"},
                    {"trace", trace.accuracies}};
    farsim::jsonio::save_json(metrics, (out / "pretrain_metrics.json").string());

    std::cout << "baseline accuracy " << baseline << " (constraint " << cfg.accuracy_constraint
              << ")\n";
    if (baseline < cfg.accuracy_constraint)
        throw std::runtime_error("pretrain: baseline accuracy misses the constraint; "
                                 "the target is unreachable even without faults");
    return 0;
}

int cmd_profile(const CommonOpts& opts, const std::string& params_path) {
    const farsim::RunConfig cfg = load_config(opts);
    const fs::path out = ensure_out_dir(cfg);
    const auto [train_data, test_data] = farsim::build_datasets(cfg);
    const farsim::NetworkParams params = load_params(params_path, cfg.network);

    const farsim::ResilienceTable table =
        farsim::profile(params, cfg.network, train_data, test_data, cfg.array, cfg.profile);

    farsim::jsonio::save_json(farsim::jsonio::table_to_json(table),
                              (out / "resilience.json").string());
    farsim::jsonio::save_text(farsim::jsonio::resilience_csv(table),
                              (out / "resilience.csv").string());
    std::cout << "profiled " << table.entries.size() << " fault rates x "
              << cfg.profile.repeats << " repeats\n";
    return 0;
}

int cmd_select(const std::string& table_path, const std::string& map_path,
               const std::string& statistic) {
    const farsim::ResilienceTable table =
        farsim::jsonio::table_from_json(farsim::jsonio::load_json(table_path));
    const farsim::FaultMap map =
        farsim::jsonio::fault_map_from_json(farsim::jsonio::load_json(map_path));
    if (!(map.config() == table.array))
        throw farsim::ConfigError("fault map array geometry does not match the table");
    const int budget =
        farsim::select_budget(table, farsim::fault_rate(map), farsim::statistic_from_string(statistic));
    std::cout << budget << "\n";
    return 0;
}

int cmd_retrain(const CommonOpts& opts, const std::string& params_path,
                const std::string& map_path, int epochs) {
    const farsim::RunConfig cfg = load_config(opts);
    const fs::path out = ensure_out_dir(cfg);
    const auto [train_data, test_data] = farsim::build_datasets(cfg);
    const farsim::NetworkParams params = load_params(params_path, cfg.network);
    const farsim::FaultMap map =
        farsim::jsonio::fault_map_from_json(farsim::jsonio::load_json(map_path));
    const farsim::MaskSet masks = farsim::derive_maskset(cfg.network, map);

    farsim::TrainConfig tc = cfg.train;
    tc.seed = farsim::derive_seed(cfg.seed, "retrain");
    auto [tuned, trace] = farsim::train_masked(params, masks, train_data, test_data, epochs, tc);
    const double final_accuracy = trace.accuracies.back();

    farsim::jsonio::save_json(farsim::jsonio::params_to_json(tuned),
                              (out / "retrained_params.json").string());
    json metrics = {{"fault_rate", farsim::fault_rate(map)},
                    {"budget_epochs", epochs},
                    {"final_accuracy", final_accuracy},
                    {"meets_constraint", final_accuracy >= cfg.accuracy_constraint},
                    {"eval_split", "test"},
                    {"trace", trace.accuracies}};
    farsim::jsonio::save_json(metrics, (out / "retrain_metrics.json").string());
    std::cout << "final accuracy " << final_accuracy << " after " << epochs << " epochs\n";
    return 0;
}

int cmd_fleet(const CommonOpts& opts, const std::string& params_path,
              const std::string& table_path, const std::vector<std::string>& policy_args) {
    farsim::RunConfig cfg = load_config(opts);
    const fs::path out = ensure_out_dir(cfg);
    const auto [train_data, test_data] = farsim::build_datasets(cfg);
    const farsim::NetworkParams params = load_params(params_path, cfg.network);

    std::vector<farsim::Policy> policies = cfg.fleet.policies;
    if (!policy_args.empty()) {
        policies.clear();
        for (const std::string& p : policy_args) {
            try {
                policies.push_back(farsim::Policy::parse(p));
            } catch (const std::invalid_argument& ex) {
                throw farsim::ConfigError(ex.what());
            }
        }
    }
    for (const farsim::Policy& p : policies)
        if (p.kind == farsim::Policy::Kind::Fixed && p.fixed_epochs > cfg.profile.max_epochs)
            throw farsim::ConfigError("fixed policy epochs exceed profile.max_epochs");

    const bool needs_table = std::any_of(policies.begin(), policies.end(), [](const auto& p) {
        return p.kind == farsim::Policy::Kind::Reduce;
    });
    std::optional<farsim::ResilienceTable> table;
    if (needs_table) {
        if (table_path.empty())
            throw farsim::ConfigError("a reduce policy requires --table");
        table = farsim::jsonio::table_from_json(farsim::jsonio::load_json(table_path));
    }

    const std::vector<farsim::ChipRecord> fleet = farsim::generate_fleet(
        cfg.array, cfg.fleet.count, cfg.fleet.rates, farsim::derive_seed(cfg.seed, "fleet"));

    farsim::TrainConfig tc = cfg.train;
    tc.seed = farsim::derive_seed(cfg.seed, "fleet-train");

    std::vector<farsim::FleetReport> reports;
    for (const farsim::Policy& policy : policies) {
        farsim::FleetReport report =
            farsim::run_policy(params, cfg.network, train_data, test_data, fleet, policy,
                               table ? &*table : nullptr, cfg.accuracy_constraint, tc);
        const std::string tag = policy_tag(policy);
        farsim::jsonio::save_json(farsim::jsonio::report_to_json(report),
                                  (out / ("fleet_report_" + tag + ".json")).string());
        farsim::jsonio::save_text(farsim::jsonio::report_csv(report),
                                  (out / ("fleet_report_" + tag + ".csv")).string());
        std::cout << report.policy.name() << ": total_epochs " << report.total_epochs
                  << ", meeting " << report.num_meeting << "/" << fleet.size() << ", failed "
                  << report.num_failed << "\n";
        reports.push_back(std::move(report));
    }

    const farsim::PolicyComparison cmp = farsim::compare_policies(reports);
    farsim::jsonio::save_text(farsim::jsonio::comparison_csv(cmp),
                              (out / "fleet_summary.csv").string());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fault-aware retraining budget planner for systolic-array accelerators"};
    app.require_subcommand(1);

    CommonOpts opts;
    std::string params_path, table_path, map_path, statistic = "max";
    std::vector<std::string> policy_args;
    int epochs = 0;

    const auto add_common = [&](CLI::App* sub, bool needs_config) {
        auto* c = sub->add_option("--config", opts.config_path, "experiment config JSON");
        if (needs_config) c->required();
        sub->add_option("--out", opts.out_override, "override the config's output directory");
        sub->add_option("--seed", opts.seed_override, "override the config's master seed");
        sub->add_option("--jobs", opts.jobs, "parallelism hint; never affects results");
    };

    CLI::App* pretrain = app.add_subcommand("pretrain", "train the fault-free baseline model");
    add_common(pretrain, true);

    CLI::App* profile = app.add_subcommand("profile", "fault-injection resilience profiling");
    add_common(profile, true);
    profile->add_option("--params", params_path, "pretrained params JSON")->required();

    CLI::App* select = app.add_subcommand("select", "look up one chip's retraining budget");
    select->add_option("--table", table_path, "resilience table JSON")->required();
    select->add_option("--fault-map", map_path, "chip fault map JSON")->required();
    select->add_option("--statistic", statistic, "min|mean|max (default max)");

    CLI::App* retrain = app.add_subcommand("retrain", "prune-and-retrain for one fault map");
    add_common(retrain, true);
    retrain->add_option("--params", params_path, "pretrained params JSON")->required();
    retrain->add_option("--fault-map", map_path, "chip fault map JSON")->required();
    retrain->add_option("--epochs", epochs, "retraining budget in epochs")
        ->required()
        ->check(CLI::NonNegativeNumber);

    CLI::App* fleet = app.add_subcommand("fleet", "run retraining policies over a chip fleet");
    add_common(fleet, true);
    fleet->add_option("--params", params_path, "pretrained params JSON")->required();
    fleet->add_option("--table", table_path, "resilience table JSON (reduce policies)");
    fleet->add_option("--policies", policy_args, "policies, e.g. reduce:max fixed:5")
        ->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        farsim::set_jobs(opts.jobs);
        if (app.got_subcommand(pretrain)) return cmd_pretrain(opts);
        if (app.got_subcommand(profile)) return cmd_profile(opts, params_path);
        if (app.got_subcommand(select)) return cmd_select(table_path, map_path, statistic);
        if (app.got_subcommand(retrain)) return cmd_retrain(opts, params_path, map_path, epochs);
        if (app.got_subcommand(fleet)) return cmd_fleet(opts, params_path, table_path, policy_args);
        std::cerr << "no subcommand\n";
        return 2;
    } catch (const farsim::ConfigError& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 2;
    } catch (const farsim::RateBeyondProfileError& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 3;
    } catch (const farsim::UnrecoverableError& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 4;
    } catch (const farsim::IdxError& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 5;
    } catch (const farsim::jsonio::IoError& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 5;
    } catch (const nlohmann::json::exception& ex) {
        // malformed fields in params/table/map files
        std::cerr << "error: " << ex.what() << "\n";
        return 5;
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 1;
    }
}
