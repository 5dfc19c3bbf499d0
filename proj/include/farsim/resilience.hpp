#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "farsim/dataio.hpp"
#include "farsim/faultsim.hpp"
#include "farsim/numnet.hpp"

namespace farsim {

enum class Statistic { Min, Mean, Max };

std::string to_string(Statistic s);
Statistic statistic_from_string(const std::string& s);

struct ProfileConfig {
    std::vector<double> fault_rates;  // strictly increasing, in [0, 1]
    int repeats = 1;
    int max_epochs = 1;
    double accuracy_target = 0.9;
    TrainConfig train_cfg;
    std::uint64_t base_seed = 0;

    void validate() const;
};

// Outcome of `repeats` independent fault-injection experiments at one rate.
// epochs_per_repeat holds the first epoch count reaching the accuracy
// target, or nullopt when max_epochs was not enough. The min/mean/max
// statistics summarize the repeats that reached the target; `reachable` is
// true only when every repeat did.
struct ResilienceEntry {
    double fault_rate = 0.0;
    std::vector<std::optional<int>> epochs_per_repeat;
    std::optional<int> min_epochs;
    std::optional<double> mean_epochs;
    std::optional<int> max_epochs;
    bool reachable = false;
};

struct ResilienceTable {
    double accuracy_target = 0.0;
    ArrayConfig array;
    std::uint64_t spec_hash = 0;
    std::vector<ResilienceEntry> entries;  // sorted by fault_rate
    ProfileConfig config;
};

// Smallest k with trace.accuracies[k] >= target (k = 0 means no retraining
// was needed); nullopt when the trace never crosses the target.
std::optional<int> epochs_to_target(const EpochTrace& trace, double target);

// Fault-injection profiling: for every (rate, repeat) cell, generate a
// fault map from a seed derived from (base_seed, rate index, repeat index),
// prune-and-retrain a fresh copy of the pretrained params, and record the
// first epoch reaching the target. Cells are independent jobs; results do
// not depend on execution order or thread count.
ResilienceTable profile(const NetworkParams& pretrained, const NetworkSpec& spec,
                        const Dataset& train_data, const Dataset& test_data,
                        const ArrayConfig& array, const ProfileConfig& cfg);

// The chip's fault rate lies beyond the profiled range; the table cannot
// certify it at the accuracy target.
struct RateBeyondProfileError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A bracketing table entry never reached the target, so no budget
// guarantees the constraint.
struct UnrecoverableError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Retraining budget for one chip: takes the chosen statistic's curve over
// the tabulated rates, makes it monotone with a running maximum, and reads
// it at chip_rate (rates below the first entry clamp to it; rates between
// entries interpolate linearly and round up).
int select_budget(const ResilienceTable& table, double chip_rate, Statistic statistic);

}  // namespace farsim
