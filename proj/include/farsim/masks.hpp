#pragma once

#include <cstdint>
#include <vector>

namespace farsim {

// Binary keep/prune matrix over one weight matrix. 1 = keep, 0 = pruned
// (the weight sits on a faulty PE and must stay exactly zero).
struct Mask {
    int rows = 0;
    int cols = 0;
    std::vector<std::uint8_t> keep;  // row-major

    Mask() = default;
    Mask(int r, int c, std::uint8_t fill = 1)
        : rows(r), cols(c),
          keep(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), fill) {}

    std::uint8_t at(int i, int j) const {
        return keep[static_cast<std::size_t>(i) * cols + j];
    }
    void set(int i, int j, std::uint8_t v) {
        keep[static_cast<std::size_t>(i) * cols + j] = v;
    }

    bool operator==(const Mask&) const = default;
};

// One mask per weight matrix of a network; biases are never masked.
struct MaskSet {
    std::vector<Mask> layers;

    bool operator==(const MaskSet&) const = default;
};

}  // namespace farsim
