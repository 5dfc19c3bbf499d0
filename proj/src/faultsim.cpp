#include "farsim/faultsim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "farsim/rng.hpp"

namespace farsim {

void ArrayConfig::validate() const {
    if (rows < 1 || cols < 1) throw std::invalid_argument("ArrayConfig: rows and cols must be >= 1");
}

FaultMap::FaultMap(ArrayConfig cfg, std::vector<std::pair<int, int>> faulty, std::uint64_t seed)
    : cfg_(cfg), seed_(seed), coords_(std::move(faulty)) {
    cfg_.validate();
    for (const auto& [r, c] : coords_)
        if (r < 0 || r >= cfg_.rows || c < 0 || c >= cfg_.cols)
            throw std::invalid_argument("FaultMap: PE coordinate out of range");
    std::sort(coords_.begin(), coords_.end());
    coords_.erase(std::unique(coords_.begin(), coords_.end()), coords_.end());
    grid_.assign(static_cast<std::size_t>(cfg_.rows) * cfg_.cols, 0);
    for (const auto& [r, c] : coords_) grid_[static_cast<std::size_t>(r) * cfg_.cols + c] = 1;
}

FaultMap generate_fault_map(const ArrayConfig& cfg, double fault_rate, std::uint64_t seed) {
    cfg.validate();
    if (fault_rate < 0.0 || fault_rate > 1.0)
        throw std::invalid_argument("generate_fault_map: fault_rate must be in [0, 1]");
    const int total = cfg.num_pes();
    const int count = static_cast<int>(std::llround(fault_rate * total));

    // Partial Fisher-Yates: the first `count` slots end up holding a uniform
    // sample without replacement.
    std::vector<int> cells(total);
    std::iota(cells.begin(), cells.end(), 0);
    Rng rng(seed);
    std::vector<std::pair<int, int>> coords;
    coords.reserve(count);
    for (int i = 0; i < count; ++i) {
        const int j = i + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(total - i)));
        std::swap(cells[i], cells[j]);
        coords.emplace_back(cells[i] / cfg.cols, cells[i] % cfg.cols);
    }
    return FaultMap(cfg, std::move(coords), seed);
}

double fault_rate(const FaultMap& map) {
    return static_cast<double>(map.fault_count()) / map.config().num_pes();
}

Mask derive_mask(int input_dim, int output_dim, const FaultMap& map) {
    if (input_dim < 1 || output_dim < 1)
        throw std::invalid_argument("derive_mask: dimensions must be >= 1");
    const int rows = map.config().rows;
    const int cols = map.config().cols;
    Mask mask(input_dim, output_dim, 1);
    for (int i = 0; i < input_dim; ++i)
        for (int j = 0; j < output_dim; ++j)
            if (map.is_faulty(i % rows, j % cols)) mask.set(i, j, 0);
    return mask;
}

MaskSet derive_maskset(const NetworkSpec& spec, const FaultMap& map) {
    spec.validate();
    MaskSet set;
    for (int l = 0; l + 1 < static_cast<int>(spec.layer_dims.size()); ++l)
        set.layers.push_back(derive_mask(spec.layer_dims[l], spec.layer_dims[l + 1], map));
    return set;
}

std::vector<double> systolic_matmul_oracle(const Matrix& w, const std::vector<double>& x,
                                           const FaultMap& map) {
    if (static_cast<int>(x.size()) != w.rows())
        throw std::invalid_argument("systolic_matmul_oracle: dimension mismatch");
    const int rows = map.config().rows;
    const int cols = map.config().cols;
    const int in_dim = w.rows();
    const int out_dim = w.cols();
    std::vector<double> y(out_dim, 0.0);

    const int tiles_r = (in_dim + rows - 1) / rows;
    const int tiles_c = (out_dim + cols - 1) / cols;
    for (int tr = 0; tr < tiles_r; ++tr) {
        for (int tc = 0; tc < tiles_c; ++tc) {
            for (int r = 0; r < rows; ++r) {
                const int i = tr * rows + r;
                if (i >= in_dim) break;
                for (int c = 0; c < cols; ++c) {
                    const int j = tc * cols + c;
                    if (j >= out_dim) break;
                    if (map.is_faulty(r, c)) continue;  // bypassed PE contributes nothing
                    y[j] += x[i] * w(i, j);
                }
            }
        }
    }
    return y;
}

}  // namespace farsim
