#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "farsim/dataio.hpp"
#include "farsim/fleet.hpp"
#include "farsim/numnet.hpp"
#include "farsim/resilience.hpp"

namespace farsim {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DatasetConfig {
    enum class Type { Synthetic, Idx };
    Type type = Type::Synthetic;
    // synthetic
    int classes = 2;
    int features = 2;
    int samples_per_class = 100;
    double spread = 1.0;
    // idx
    std::string train_images, train_labels, test_images, test_labels;
    bool normalize = true;
};

struct FleetConfig {
    int count = 1;
    RateDistribution rates;
    std::vector<Policy> policies;
};

// One experiment configuration. A single master seed drives everything;
// per-subsystem seeds are derived from it with purpose tags, so a config
// file pins the entire pipeline byte for byte.
struct RunConfig {
    std::uint64_t seed = 0;
    std::string out_dir = "out";
    double accuracy_constraint = 0.9;
    NetworkSpec network;
    TrainConfig train;       // seed filled per command from the master seed
    int pretrain_epochs = 1;
    ArrayConfig array;
    DatasetConfig dataset;
    ProfileConfig profile;   // accuracy_target/train/base_seed filled from the rest
    FleetConfig fleet;
};

// Parses and validates a config JSON document. Unknown keys anywhere are
// rejected: a typo that silently falls back to a default would make the
// experiment irreproducible.
RunConfig parse_run_config(const std::string& json_text, const std::string& origin);
RunConfig load_run_config(const std::string& path);

// Builds the train/test pair the config describes. Deterministic: the
// synthetic generator is seeded from the master seed, so every command
// sees the same data.
std::pair<Dataset, Dataset> build_datasets(const RunConfig& cfg);

}  // namespace farsim
