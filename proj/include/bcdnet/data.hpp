#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "bcdnet/rng.hpp"
#include "bcdnet/tensor.hpp"

namespace bcdnet::data {

enum class Split { Train, Val, Test };

std::string_view to_string(Split split);
Split parse_split(std::string_view text);

struct Record {
  std::filesystem::path path;  // relative to the manifest root
  std::size_t label = 0;
  Split split = Split::Train;
};

struct SplitCounts {
  std::size_t train = 0;
  std::size_t val = 0;
  std::size_t test = 0;
};

// Apportions n items 7:2:1 by largest remainder (ties go to the earlier
// split), so each count is within one item of its exact share.
SplitCounts split_counts(std::size_t n);

struct DatasetManifest {
  std::filesystem::path root;
  std::vector<std::string> class_names;
  std::vector<Record> records;
  std::uint64_t seed = 0;

  std::vector<Record> split(Split which) const;

  // One line per record: split<TAB>class_index<TAB>relative_path.
  std::string to_tsv() const;
  void write_tsv(const std::filesystem::path& path) const;
};

// Expects root/<class>/<image>.png. Classes and files are taken in sorted
// order; each class is shuffled with its own seeded stream and cut 7:2:1.
DatasetManifest build_manifest(const std::filesystem::path& root, std::uint64_t seed);

// Channels-first RGB in [0, 1]. Grayscale is replicated to three channels
// and alpha is dropped.
Tensor<float> decode_png(const std::filesystem::path& path);
Tensor<float> decode_png(std::span<const std::uint8_t> bytes);

// Encodes a [3,H,W] tensor in [0, 1] as 8-bit RGB (values are rounded and
// clamped). Output bytes are a pure function of the pixels.
std::vector<std::uint8_t> encode_png(const Tensor<float>& image);
void write_png(const std::filesystem::path& path, const Tensor<float>& image);

struct AugmentPolicy {
  std::array<float, 3> mean{0.5f, 0.5f, 0.5f};
  std::array<float, 3> std{0.5f, 0.5f, 0.5f};
  double hflip_prob = 0.5;
  double vflip_prob = 0.5;
  double rotation_deg = 15.0;
  std::size_t target_hw = 224;

  void validate() const;
};

// Bilinear resize with corner-aligned sampling: output (i, j) reads source
// coordinate (i * (H-1)/(h-1), j * (W-1)/(w-1)); a size-1 axis samples 0.
Tensor<float> resize_bilinear(const Tensor<float>& image, std::size_t out_h, std::size_t out_w);
Tensor<float> hflip(const Tensor<float>& image);
Tensor<float> vflip(const Tensor<float>& image);
// Rotates counter-clockwise about the pixel-grid center, bilinear sampling,
// zero outside the source.
Tensor<float> rotate(const Tensor<float>& image, double degrees);
Tensor<float> normalize(const Tensor<float>& image, const AugmentPolicy& policy);

// Training path: resize -> hflip -> vflip -> rotation -> normalize.
Tensor<float> augment(const Tensor<float>& image, const AugmentPolicy& policy, Rng& rng);
// Evaluation path: resize -> normalize.
Tensor<float> preprocess(const Tensor<float>& image, const AugmentPolicy& policy);

struct Batch {
  Tensor<float> images;  // [N,3,H,W]
  std::vector<std::size_t> labels;
};

// Deterministic batch sequence over one split. The train split is shuffled
// with `shuffle_seed` and augmented; val/test keep manifest order and are
// only preprocessed. The last short batch is kept.
class BatchStream {
 public:
  BatchStream(const DatasetManifest& manifest, Split split, std::size_t batch_size,
              std::uint64_t shuffle_seed, const AugmentPolicy& policy, bool augment_train = true);

  std::size_t size() const { return order_.size(); }
  std::size_t batch_count() const { return (order_.size() + batch_size_ - 1) / batch_size_; }
  const std::vector<Record>& records() const { return records_; }
  // Record indices in delivery order.
  const std::vector<std::size_t>& order() const { return order_; }

  // nullopt when the epoch is exhausted.
  std::optional<Batch> next();

 private:
  Tensor<float> load(std::size_t record_index) const;

  std::filesystem::path root_;
  std::vector<Record> records_;
  std::vector<std::size_t> order_;
  std::size_t batch_size_;
  std::uint64_t shuffle_seed_;
  AugmentPolicy policy_;
  bool augment_;
  std::size_t cursor_ = 0;
};

// Per-channel mean and standard deviation of preprocessed (resize only)
// training images.
struct ChannelStats {
  std::array<float, 3> mean{};
  std::array<float, 3> std{};
};
ChannelStats compute_channel_stats(const DatasetManifest& manifest, std::size_t target_hw);

}  // namespace bcdnet::data
