#include "evosynth/data.hpp"

#include <algorithm>
#include <fstream>
#include <utility>

#include "evosynth/error.hpp"
#include "evosynth/rng.hpp"

namespace evosynth {

namespace {

constexpr uint32_t kImageMagic = 0x00000803;
constexpr uint32_t kLabelMagic = 0x00000801;

uint32_t read_be_u32(std::ifstream& f, const std::string& path, size_t offset,
                     const char* what) {
    unsigned char b[4];
    f.read(reinterpret_cast<char*>(b), 4);
    if (!f)
        fail("idx ", path, ": truncated reading ", what, " at offset ", offset);
    return (static_cast<uint32_t>(b[0]) << 24) | (static_cast<uint32_t>(b[1]) << 16) |
           (static_cast<uint32_t>(b[2]) << 8) | static_cast<uint32_t>(b[3]);
}

}  // namespace

Tensor load_idx_images(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) fail("idx: cannot open ", path);

    const uint32_t magic = read_be_u32(f, path, 0, "magic");
    require(magic == kImageMagic, "idx ", path, ": magic ", magic, ", expected ",
            kImageMagic, " (unsigned-byte images, 3 dims)");
    const uint32_t n = read_be_u32(f, path, 4, "image count");
    const uint32_t h = read_be_u32(f, path, 8, "row count");
    const uint32_t w = read_be_u32(f, path, 12, "column count");
    require(n > 0, "idx ", path, ": image count is 0");
    require(h > 0 && w > 0, "idx ", path, ": image dims ", h, "x", w);

    const size_t pixels = static_cast<size_t>(n) * h * w;
    std::vector<unsigned char> raw(pixels);
    f.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(pixels));
    if (!f)
        fail("idx ", path, ": truncated pixel data; expected ", pixels,
             " bytes after offset 16, got ", f.gcount());
    // trailing garbage would mean we mis-parsed the header
    char extra;
    f.read(&extra, 1);
    require(f.eof(), "idx ", path, ": trailing bytes after ", pixels, " pixels");

    Tensor images({n, 1, h, w});
    for (size_t i = 0; i < pixels; ++i)
        images[i] = static_cast<double>(raw[i]) / 255.0;
    return images;
}

std::vector<int> load_idx_labels(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) fail("idx: cannot open ", path);

    const uint32_t magic = read_be_u32(f, path, 0, "magic");
    require(magic == kLabelMagic, "idx ", path, ": magic ", magic, ", expected ",
            kLabelMagic, " (unsigned-byte labels, 1 dim)");
    const uint32_t n = read_be_u32(f, path, 4, "label count");
    require(n > 0, "idx ", path, ": label count is 0");

    std::vector<unsigned char> raw(n);
    f.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(n));
    if (!f)
        fail("idx ", path, ": truncated label data; expected ", n,
             " bytes after offset 8, got ", f.gcount());
    char extra;
    f.read(&extra, 1);
    require(f.eof(), "idx ", path, ": trailing bytes after ", n, " labels");

    return std::vector<int>(raw.begin(), raw.end());
}

Dataset load_dataset(const std::string& images_path, const std::string& labels_path) {
    Dataset ds;
    ds.images = load_idx_images(images_path);
    ds.labels = load_idx_labels(labels_path);
    require(ds.images.dim(0) == ds.labels.size(), "dataset: ", ds.images.dim(0),
            " images in ", images_path, " but ", ds.labels.size(), " labels in ",
            labels_path);
    return ds;
}

std::vector<std::vector<uint32_t>> batch_indices(size_t n, size_t batch_size, uint64_t seed) {
    require(n > 0, "batching: dataset is empty");
    require(batch_size > 0, "batching: batch size must be positive");

    std::vector<uint32_t> perm(n);
    for (size_t i = 0; i < n; ++i) perm[i] = static_cast<uint32_t>(i);
    Rng rng(seed);
    for (size_t i = n - 1; i > 0; --i)
        std::swap(perm[i], perm[rng.next_index(i + 1)]);

    std::vector<std::vector<uint32_t>> batches;
    for (size_t start = 0; start < n; start += batch_size) {
        const size_t end = std::min(n, start + batch_size);
        batches.emplace_back(perm.begin() + static_cast<ptrdiff_t>(start),
                             perm.begin() + static_cast<ptrdiff_t>(end));
    }
    return batches;
}

std::pair<Tensor, std::vector<int>> gather(const Dataset& dataset,
                                           const std::vector<uint32_t>& indices) {
    require(!indices.empty(), "gather: empty index list");
    const size_t C = dataset.images.dim(1), H = dataset.images.dim(2),
                 W = dataset.images.dim(3);
    const size_t stride = C * H * W;

    Tensor images({indices.size(), C, H, W});
    std::vector<int> labels(indices.size());
    for (size_t b = 0; b < indices.size(); ++b) {
        const uint32_t idx = indices[b];
        require(idx < dataset.size(), "gather: index ", idx, " out of range for ",
                dataset.size(), " samples");
        const double* src = dataset.images.data() + idx * stride;
        double* dst = images.data() + b * stride;
        for (size_t i = 0; i < stride; ++i) dst[i] = src[i];
        labels[b] = dataset.labels[idx];
    }
    return {std::move(images), std::move(labels)};
}

}  // namespace evosynth
