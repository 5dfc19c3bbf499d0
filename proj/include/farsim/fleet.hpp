#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "farsim/resilience.hpp"

namespace farsim {

// One simulated faulty chip.
struct ChipRecord {
    std::string chip_id;
    FaultMap fault_map;
};

// How much retraining each chip receives: budget looked up in a resilience
// table (variant "reduce"), or the same fixed epoch count for every chip.
struct Policy {
    enum class Kind { Reduce, Fixed };
    Kind kind = Kind::Reduce;
    Statistic statistic = Statistic::Max;  // Reduce only
    int fixed_epochs = 0;                  // Fixed only

    static Policy reduce(Statistic s) { return {Kind::Reduce, s, 0}; }
    static Policy fixed(int epochs) { return {Kind::Fixed, Statistic::Max, epochs}; }

    std::string name() const;                      // "reduce:max", "fixed:5"
    static Policy parse(const std::string& text);  // inverse of name()
};

struct RateDistribution {
    enum class Kind { Uniform, Explicit };
    Kind kind = Kind::Uniform;
    double lo = 0.0, hi = 0.0;   // Uniform
    std::vector<double> rates;   // Explicit; length must equal the fleet size

    static RateDistribution uniform(double lo, double hi);
    static RateDistribution explicit_rates(std::vector<double> rates);
};

// `count` chips with independent fault maps; chip i's map and rate are
// derived from (seed, i), so fleets are reproducible and order-independent.
std::vector<ChipRecord> generate_fleet(const ArrayConfig& array, int count,
                                       const RateDistribution& dist, std::uint64_t seed);

struct ChipResult {
    std::string chip_id;
    double fault_rate = 0.0;
    std::optional<int> budget_epochs;      // nullopt when the chip was rejected
    std::string failed_reason;             // "RATE_BEYOND_PROFILE" or "UNRECOVERABLE"
    std::optional<double> final_accuracy;  // absent when rejected
    bool meets_constraint = false;
};

struct FleetReport {
    Policy policy;
    double accuracy_constraint = 0.0;
    std::vector<ChipResult> chips;
    long long total_epochs = 0;  // sum of budgets over non-failed chips
    int num_meeting = 0;
    int num_failed = 0;
};

// Retrains the one pretrained model for every chip in the fleet under the
// given policy and evaluates the result. Chips whose budget lookup fails
// are recorded FAILED and consume no training. Reduce policies require a
// table profiled at the same constraint, array and network.
FleetReport run_policy(const NetworkParams& pretrained, const NetworkSpec& spec,
                       const Dataset& train_data, const Dataset& test_data,
                       const std::vector<ChipRecord>& fleet, const Policy& policy,
                       const ResilienceTable* table, double constraint,
                       const TrainConfig& train_cfg);

struct PolicyComparison {
    struct Row {
        std::string policy;
        long long total_epochs = 0;
        int num_meeting = 0;
        int num_failed = 0;
    };
    std::vector<Row> rows;
    std::vector<std::string> chip_ids;
    // per policy, per chip; nullopt for rejected chips
    std::vector<std::vector<std::optional<double>>> accuracies;
};

// Side-by-side totals for reports over the same fleet and constraint.
PolicyComparison compare_policies(const std::vector<FleetReport>& reports);

}  // namespace farsim
