#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "evosynth/tensor.hpp"

namespace evosynth {

/// An image-classification split: images [N,1,H,W] scaled to [0,1], one
/// integer label per image.
struct Dataset {
    Tensor images;
    std::vector<int> labels;

    size_t size() const { return labels.size(); }
};

/// Reads an uncompressed big-endian IDX image file (magic 0x00000803).
/// Pixel bytes are scaled by 1/255. Any size is accepted, so small fixture
/// files work alongside canonical MNIST.
Tensor load_idx_images(const std::string& path);

/// Reads an uncompressed IDX label file (magic 0x00000801).
std::vector<int> load_idx_labels(const std::string& path);

/// Loads and pairs an image/label file; throws if the counts differ.
Dataset load_dataset(const std::string& images_path, const std::string& labels_path);

/// Deterministic batching: a Fisher-Yates permutation seeded by `seed`,
/// chopped into batches of `batch_size`; the final partial batch is kept.
std::vector<std::vector<uint32_t>> batch_indices(size_t n, size_t batch_size, uint64_t seed);

/// Materializes one batch.
std::pair<Tensor, std::vector<int>> gather(const Dataset& dataset,
                                           const std::vector<uint32_t>& indices);

}  // namespace evosynth
