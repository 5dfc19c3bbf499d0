#include "farsim/resilience.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <utility>

#include "farsim/rng.hpp"

namespace farsim {

std::string to_string(Statistic s) {
    switch (s) {
        case Statistic::Min: return "min";
        case Statistic::Mean: return "mean";
        case Statistic::Max: return "max";
    }
    return "max";
}

Statistic statistic_from_string(const std::string& s) {
    if (s == "min") return Statistic::Min;
    if (s == "mean") return Statistic::Mean;
    if (s == "max") return Statistic::Max;
    throw std::invalid_argument("unknown statistic: " + s);
}

void ProfileConfig::validate() const {
    if (fault_rates.empty()) throw std::invalid_argument("profile: empty fault_rates list");
    for (std::size_t i = 0; i < fault_rates.size(); ++i) {
        if (fault_rates[i] < 0.0 || fault_rates[i] > 1.0)
            throw std::invalid_argument("profile: fault rates must be in [0, 1]");
        if (i > 0 && fault_rates[i] <= fault_rates[i - 1])
            throw std::invalid_argument("profile: fault_rates must be strictly increasing");
    }
    if (repeats < 1) throw std::invalid_argument("profile: repeats must be >= 1");
    if (max_epochs < 1) throw std::invalid_argument("profile: max_epochs must be >= 1");
    if (accuracy_target <= 0.0 || accuracy_target > 1.0)
        throw std::invalid_argument("profile: accuracy_target must be in (0, 1]");
}

std::optional<int> epochs_to_target(const EpochTrace& trace, double target) {
    for (std::size_t k = 0; k < trace.accuracies.size(); ++k)
        if (trace.accuracies[k] >= target) return static_cast<int>(k);
    return std::nullopt;
}

namespace {

ResilienceEntry aggregate_entry(double rate, std::vector<std::optional<int>> per_repeat) {
    ResilienceEntry e;
    e.fault_rate = rate;
    e.epochs_per_repeat = std::move(per_repeat);
    int mn = 0, mx = 0;
    long sum = 0;
    int reached = 0;
    for (const auto& r : e.epochs_per_repeat) {
        if (!r) continue;
        if (reached == 0 || *r < mn) mn = *r;
        if (reached == 0 || *r > mx) mx = *r;
        sum += *r;
        ++reached;
    }
    if (reached > 0) {
        e.min_epochs = mn;
        e.max_epochs = mx;
        e.mean_epochs = static_cast<double>(sum) / reached;
    }
    e.reachable = reached == static_cast<int>(e.epochs_per_repeat.size());
    return e;
}

}  // namespace

ResilienceTable profile(const NetworkParams& pretrained, const NetworkSpec& spec,
                        const Dataset& train_data, const Dataset& test_data,
                        const ArrayConfig& array, const ProfileConfig& cfg) {
    cfg.validate();
    spec.validate();
    array.validate();

    const double baseline = evaluate(pretrained, test_data);
    if (baseline < cfg.accuracy_target)
        std::fprintf(stderr,
                     "warning: baseline accuracy %.4f is below the target %.4f; "
                     "the target is unreachable even without faults\n",
                     baseline, cfg.accuracy_target);

    const int num_rates = static_cast<int>(cfg.fault_rates.size());
    const int total = num_rates * cfg.repeats;
    std::vector<std::optional<int>> cells(total);
    std::string first_error;

    // Every cell derives its own seeds, so scheduling cannot change results.
    // Retraining stops at the first target crossing: epochs_to_target is a
    // first-crossing search, so the outcome matches a full max_epochs run.
#pragma omp parallel for schedule(dynamic)
    for (int cell = 0; cell < total; ++cell) {
        try {
            const int ri = cell / cfg.repeats;
            const int k = cell % cfg.repeats;
            const std::uint64_t map_seed =
                derive_seed(cfg.base_seed, "fault-map", static_cast<std::uint64_t>(ri),
                            static_cast<std::uint64_t>(k));
            const FaultMap map = generate_fault_map(array, cfg.fault_rates[ri], map_seed);
            const MaskSet masks = derive_maskset(spec, map);
            TrainConfig tc = cfg.train_cfg;
            tc.seed = derive_seed(cfg.base_seed, "retrain", static_cast<std::uint64_t>(ri),
                                  static_cast<std::uint64_t>(k));
            auto [params, trace] = train_masked_until(pretrained, masks, train_data, test_data,
                                                      cfg.max_epochs, tc, cfg.accuracy_target);
            cells[cell] = epochs_to_target(trace, cfg.accuracy_target);
        } catch (const std::exception& ex) {
#pragma omp critical
            if (first_error.empty()) first_error = ex.what();
        }
    }
    if (!first_error.empty()) throw std::runtime_error("profile: " + first_error);

    ResilienceTable table;
    table.accuracy_target = cfg.accuracy_target;
    table.array = array;
    table.spec_hash = spec.hash();
    table.config = cfg;
    for (int ri = 0; ri < num_rates; ++ri) {
        std::vector<std::optional<int>> per_repeat(cells.begin() + ri * cfg.repeats,
                                                   cells.begin() + (ri + 1) * cfg.repeats);
        table.entries.push_back(aggregate_entry(cfg.fault_rates[ri], std::move(per_repeat)));
    }
    return table;
}

namespace {

double statistic_value(const ResilienceEntry& e, Statistic s) {
    switch (s) {
        case Statistic::Min: return static_cast<double>(*e.min_epochs);
        case Statistic::Mean: return *e.mean_epochs;
        case Statistic::Max: return static_cast<double>(*e.max_epochs);
    }
    return static_cast<double>(*e.max_epochs);
}

// Round up, forgiving float noise just below an integer.
int ceil_budget(double v) { return static_cast<int>(std::ceil(v - 1e-9)); }

}  // namespace

int select_budget(const ResilienceTable& table, double chip_rate, Statistic statistic) {
    if (table.entries.empty()) throw std::invalid_argument("select_budget: empty table");
    if (chip_rate < 0.0) throw std::invalid_argument("select_budget: negative chip rate");

    const auto& entries = table.entries;
    const int n = static_cast<int>(entries.size());

    // Monotone envelope: running maximum of the statistic over increasing
    // rate, defined only at reachable entries. A dip in the raw curve is
    // sampling noise and must not lower the budget of a harder chip.
    std::vector<std::optional<double>> envelope(n);
    double running = 0.0;
    bool any = false;
    for (int i = 0; i < n; ++i) {
        if (!entries[i].reachable) continue;
        const double v = statistic_value(entries[i], statistic);
        running = any ? std::max(running, v) : v;
        any = true;
        envelope[i] = running;
    }

    const auto value_at = [&](int i) -> int {
        if (!envelope[i])
            throw UnrecoverableError("select_budget: entry at rate " +
                                     std::to_string(entries[i].fault_rate) +
                                     " never reached the accuracy target");
        return ceil_budget(*envelope[i]);
    };

    if (chip_rate <= entries.front().fault_rate) return value_at(0);
    if (chip_rate > entries.back().fault_rate)
        throw RateBeyondProfileError("select_budget: chip rate " + std::to_string(chip_rate) +
                                     " exceeds the profiled range");

    // first entry with rate >= chip_rate
    int hi = 0;
    while (entries[hi].fault_rate < chip_rate) ++hi;
    if (entries[hi].fault_rate == chip_rate) return value_at(hi);

    const int lo = hi - 1;
    if (!envelope[lo] || !envelope[hi])
        throw UnrecoverableError("select_budget: a bracketing entry never reached the target");
    const double r0 = entries[lo].fault_rate;
    const double r1 = entries[hi].fault_rate;
    const double v = *envelope[lo] + (*envelope[hi] - *envelope[lo]) * (chip_rate - r0) / (r1 - r0);
    return ceil_budget(v);
}

}  // namespace farsim
