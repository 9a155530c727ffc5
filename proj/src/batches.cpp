#include <cmath>

#include "bcdnet/data.hpp"
#include "bcdnet/kernels.hpp"

namespace bcdnet::data {

BatchStream::BatchStream(const DatasetManifest& manifest, Split split, std::size_t batch_size,
                         std::uint64_t shuffle_seed, const AugmentPolicy& policy, bool augment_train)
    : root_(manifest.root),
      records_(manifest.split(split)),
      batch_size_(batch_size),
      shuffle_seed_(shuffle_seed),
      policy_(policy),
      augment_(augment_train && split == Split::Train) {
  if (batch_size == 0) throw Error(ErrorKind::BadConfig, "batch_size must be >= 1");
  if (records_.empty()) {
    throw Error(ErrorKind::EmptySplit, "split '" + std::string(to_string(split)) + "' is empty");
  }
  policy_.validate();
  order_.resize(records_.size());
  for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
  if (split == Split::Train) {
    Rng rng(shuffle_seed);
    rng.shuffle(order_);
  }
}

Tensor<float> BatchStream::load(std::size_t record_index) const {
  const Tensor<float> image = decode_png(root_ / records_[record_index].path);
  if (!augment_) return preprocess(image, policy_);
  // One stream per record keeps augmentation independent of worker count.
  Rng rng(mix_seed(shuffle_seed_, record_index));
  return augment(image, policy_, rng);
}

std::optional<Batch> BatchStream::next() {
  if (cursor_ >= order_.size()) return std::nullopt;
  const std::size_t count = std::min(batch_size_, order_.size() - cursor_);
  const std::size_t hw = policy_.target_hw;
  const std::size_t per_image = 3 * hw * hw;
  Batch batch{Tensor<float>({count, 3, hw, hw}), std::vector<std::size_t>(count)};

  std::vector<std::string> errors(count);
  const bool parallel = exec_mode() == ExecMode::Fast;
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (long k = 0; k < static_cast<long>(count); ++k) {
    const std::size_t slot = static_cast<std::size_t>(k);
    const std::size_t index = order_[cursor_ + slot];
    try {
      const Tensor<float> image = load(index);
      std::copy(image.data().begin(), image.data().end(),
                batch.images.data().begin() + slot * per_image);
    } catch (const std::exception& e) {
      errors[slot] = e.what();
    }
    batch.labels[slot] = records_[index].label;
  }
  for (const std::string& e : errors) {
    if (!e.empty()) throw Error(ErrorKind::DecodeError, e);
  }
  cursor_ += count;
  return batch;
}

ChannelStats compute_channel_stats(const DatasetManifest& manifest, std::size_t target_hw) {
  const std::vector<Record> train = manifest.split(Split::Train);
  if (train.empty()) throw Error(ErrorKind::EmptySplit, "train split is empty");
  double sum[3] = {0, 0, 0};
  double sq[3] = {0, 0, 0};
  std::size_t count = 0;
  for (const Record& r : train) {
    const Tensor<float> image =
        resize_bilinear(decode_png(manifest.root / r.path), target_hw, target_hw);
    const std::size_t plane = target_hw * target_hw;
    for (std::size_t c = 0; c < 3; ++c) {
      for (std::size_t i = 0; i < plane; ++i) {
        const double v = image[c * plane + i];
        sum[c] += v;
        sq[c] += v * v;
      }
    }
    count += plane;
  }
  ChannelStats stats;
  for (std::size_t c = 0; c < 3; ++c) {
    const double mean = sum[c] / static_cast<double>(count);
    const double var = std::max(sq[c] / static_cast<double>(count) - mean * mean, 0.0);
    stats.mean[c] = static_cast<float>(mean);
    stats.std[c] = static_cast<float>(std::max(std::sqrt(var), 1e-6));
  }
  return stats;
}

}  // namespace bcdnet::data
