#include "farsim/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>

#include "farsim/rng.hpp"

namespace farsim {

void Dataset::validate() const {
    if (inputs.rows() != static_cast<int>(labels.size()))
        throw std::invalid_argument("Dataset: inputs/labels size mismatch");
    if (num_classes < 1) throw std::invalid_argument("Dataset: num_classes must be >= 1");
    for (int y : labels)
        if (y < 0 || y >= num_classes) throw std::invalid_argument("Dataset: label out of range");
    for (std::size_t i = 0; i < inputs.size(); ++i)
        if (!std::isfinite(inputs.data()[i]))
            throw std::invalid_argument("Dataset: non-finite feature");
}

std::pair<Dataset, Dataset> synth_clusters(int num_classes, int features, int samples_per_class,
                                           double cluster_spread, std::uint64_t seed) {
    if (num_classes < 1 || features < 1 || samples_per_class < 1)
        throw std::invalid_argument("synth_clusters: all counts must be >= 1");
    if (cluster_spread <= 0.0)
        throw std::invalid_argument("synth_clusters: cluster_spread must be > 0");

    Matrix centers(num_classes, features);
    Rng center_rng(derive_seed(seed, "centers"));
    for (int k = 0; k < num_classes; ++k)
        for (int f = 0; f < features; ++f) centers(k, f) = center_rng.next_normal();

    const int test_per_class = samples_per_class / 5;  // every fifth sample
    const int train_per_class = samples_per_class - test_per_class;
    Dataset train{Matrix(num_classes * train_per_class, features), {}, num_classes, "train"};
    Dataset test{Matrix(num_classes * test_per_class, features), {}, num_classes, "test"};
    int train_row = 0, test_row = 0;

    for (int k = 0; k < num_classes; ++k) {
        Rng rng(derive_seed(seed, "samples", static_cast<std::uint64_t>(k)));
        for (int s = 0; s < samples_per_class; ++s) {
            const bool to_test = s % 5 == 4;
            Dataset& dst = to_test ? test : train;
            double* row = dst.inputs.row(to_test ? test_row++ : train_row++);
            for (int f = 0; f < features; ++f)
                row[f] = centers(k, f) + cluster_spread * rng.next_normal();
            dst.labels.push_back(k);
        }
    }
    return {std::move(train), std::move(test)};
}

namespace {

constexpr std::uint32_t kImagesMagic = 0x00000803;  // 3-D unsigned-byte tensor
constexpr std::uint32_t kLabelsMagic = 0x00000801;  // 1-D unsigned-byte tensor

std::uint32_t read_be32(std::ifstream& in, const std::string& path) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4))
        throw IdxError(IdxErrorKind::Truncated, "idx: truncated header in " + path);
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) | (std::uint32_t(b[2]) << 8) |
           std::uint32_t(b[3]);
}

std::vector<unsigned char> read_payload(std::ifstream& in, std::size_t count,
                                        const std::string& path) {
    std::vector<unsigned char> bytes(count);
    if (!in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(count)))
        throw IdxError(IdxErrorKind::Truncated, "idx: truncated payload in " + path);
    return bytes;
}

}  // namespace

Dataset load_idx(const std::string& images_path, const std::string& labels_path, bool normalize) {
    std::ifstream images(images_path, std::ios::binary);
    if (!images) throw std::runtime_error("idx: cannot open " + images_path);
    if (read_be32(images, images_path) != kImagesMagic)
        throw IdxError(IdxErrorKind::BadMagic, "idx: bad image magic in " + images_path);
    const std::uint32_t count = read_be32(images, images_path);
    const std::uint32_t rows = read_be32(images, images_path);
    const std::uint32_t cols = read_be32(images, images_path);
    const std::size_t pixels = std::size_t(count) * rows * cols;
    const auto image_bytes = read_payload(images, pixels, images_path);

    std::ifstream labels(labels_path, std::ios::binary);
    if (!labels) throw std::runtime_error("idx: cannot open " + labels_path);
    if (read_be32(labels, labels_path) != kLabelsMagic)
        throw IdxError(IdxErrorKind::BadMagic, "idx: bad label magic in " + labels_path);
    const std::uint32_t label_count = read_be32(labels, labels_path);
    if (label_count != count)
        throw IdxError(IdxErrorKind::CountMismatch,
                       "idx: " + std::to_string(count) + " images vs " +
                           std::to_string(label_count) + " labels");
    const auto label_bytes = read_payload(labels, label_count, labels_path);

    Dataset ds;
    ds.inputs = Matrix(static_cast<int>(count), static_cast<int>(rows * cols));
    const double scale = normalize ? 1.0 / 255.0 : 1.0;
    for (std::size_t i = 0; i < pixels; ++i)
        ds.inputs.data()[i] = static_cast<double>(image_bytes[i]) * scale;
    ds.labels.reserve(count);
    int max_label = 0;
    for (unsigned char y : label_bytes) {
        ds.labels.push_back(y);
        max_label = std::max(max_label, static_cast<int>(y));
    }
    ds.num_classes = max_label + 1;
    return ds;
}

void write_dataset_csv(const Dataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    char buf[64];
    for (int i = 0; i < ds.size(); ++i) {
        const double* row = ds.inputs.row(i);
        for (int f = 0; f < ds.features(); ++f) {
            const auto res = std::to_chars(buf, buf + sizeof(buf), row[f]);
            out.write(buf, res.ptr - buf);
            out.put(',');
        }
        out << ds.labels[i] << '\n';
    }
}

}  // namespace farsim
