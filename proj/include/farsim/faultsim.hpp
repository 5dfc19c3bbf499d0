#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "farsim/masks.hpp"
#include "farsim/matrix.hpp"
#include "farsim/numnet.hpp"

namespace farsim {

// Geometry of the weight-stationary PE grid.
struct ArrayConfig {
    int rows = 1;
    int cols = 1;

    int num_pes() const { return rows * cols; }
    void validate() const;
    bool operator==(const ArrayConfig&) const = default;
};

// Permanently faulty PEs of one chip. Coordinates are kept sorted
// lexicographically (the canonical form used by reports); membership checks
// go through a bitmap. Immutable after construction.
class FaultMap {
public:
    FaultMap(ArrayConfig cfg, std::vector<std::pair<int, int>> faulty, std::uint64_t seed = 0);

    const ArrayConfig& config() const { return cfg_; }
    std::uint64_t seed() const { return seed_; }
    const std::vector<std::pair<int, int>>& faulty() const { return coords_; }
    int fault_count() const { return static_cast<int>(coords_.size()); }

    bool is_faulty(int r, int c) const {
        return grid_[static_cast<std::size_t>(r) * cfg_.cols + c] != 0;
    }

    bool operator==(const FaultMap& o) const {
        return cfg_ == o.cfg_ && coords_ == o.coords_;
    }

private:
    ArrayConfig cfg_;
    std::uint64_t seed_ = 0;
    std::vector<std::pair<int, int>> coords_;
    std::vector<std::uint8_t> grid_;
};

// Marks exactly round(fault_rate * R * C) distinct PEs faulty, chosen
// uniformly without replacement; deterministic for a fixed seed.
FaultMap generate_fault_map(const ArrayConfig& cfg, double fault_rate, std::uint64_t seed);

double fault_rate(const FaultMap& map);

// Weight W[i][j] resides on PE (i mod R, j mod C): tiles of the weight
// matrix are folded onto the array cyclically. The mask zeroes every weight
// hosted by a faulty PE.
Mask derive_mask(int input_dim, int output_dim, const FaultMap& map);

// One mask per weight matrix of the network; biases excluded.
MaskSet derive_maskset(const NetworkSpec& spec, const FaultMap& map);

// Brute-force tile-level simulation of the faulty weight-stationary
// execution: partitions W into R x C tiles and drops every partial product
// computed by a faulty PE. Independent oracle for the mask semantics.
std::vector<double> systolic_matmul_oracle(const Matrix& w, const std::vector<double>& x,
                                           const FaultMap& map);

}  // namespace farsim
