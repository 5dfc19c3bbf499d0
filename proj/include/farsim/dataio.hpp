#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "farsim/matrix.hpp"

namespace farsim {

struct Dataset {
    Matrix inputs;            // samples x features
    std::vector<int> labels;  // in [0, num_classes)
    int num_classes = 0;
    std::string split;        // "train" or "test"

    int size() const { return inputs.rows(); }
    int features() const { return inputs.cols(); }
    void validate() const;
};

// Gaussian clusters around seeded random centers, one cluster per class.
// Deterministic 80/20 train/test split by interleaving: within each class,
// every fifth sample goes to the test set.
std::pair<Dataset, Dataset> synth_clusters(int num_classes, int features, int samples_per_class,
                                           double cluster_spread, std::uint64_t seed);

enum class IdxErrorKind { BadMagic, Truncated, CountMismatch };

struct IdxError : std::runtime_error {
    IdxErrorKind kind;
    IdxError(IdxErrorKind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
};

// Loads an IDX image/label pair (big-endian header, magic 0x00000803 for
// 3-D unsigned-byte images, 0x00000801 for labels). Images are flattened
// row-major; normalize divides bytes by 255.
Dataset load_idx(const std::string& images_path, const std::string& labels_path, bool normalize);

// One row per sample, features then label, for external inspection/plotting.
void write_dataset_csv(const Dataset& ds, const std::string& path);

}  // namespace farsim
