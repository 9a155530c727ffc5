#include <gtest/gtest.h>

#include <map>
#include <set>

#include "bcdnet/data.hpp"
#include "bcdnet/error.hpp"
#include "bcdnet/kernels.hpp"
#include "bcdnet/synth.hpp"
#include "golden.hpp"
#include "support.hpp"

using namespace bcdnet;
using namespace bcdnet::data;
using testing_support::TempDir;
namespace fs = std::filesystem;

namespace {

template <typename Fn>
ErrorKind kind_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::IoError;
}

// Sorted (path, size, content) listing of a tree.
std::string snapshot(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (entry.is_regular_file()) {
      files[fs::relative(entry.path(), root).string()] = testing_support::slurp(entry.path());
    }
  }
  std::string out;
  for (const auto& [name, content] : files) out += name + "\n" + content;
  return out;
}

void expect_png(const std::vector<std::uint8_t>& bytes, const std::vector<std::uint8_t>& rgb,
                std::size_t h, std::size_t w) {
  const Tensor<float> image = decode_png(bytes);
  ASSERT_EQ(image.shape(), (Shape{3, h, w}));
  for (std::size_t i = 0; i < h * w; ++i) {
    for (std::size_t c = 0; c < 3; ++c) {
      EXPECT_EQ(image[c * h * w + i], static_cast<float>(rgb[i * 3 + c]) / 255.0f);
    }
  }
}

}  // namespace

TEST(Split, CountsMatchLargestRemainder) {
  for (std::size_t i = 0; i < golden::kSplitSizes.size(); ++i) {
    const std::size_t n = golden::kSplitSizes[i];
    const SplitCounts c = split_counts(n);
    EXPECT_EQ(c.train, golden::kSplitCounts[3 * i]) << n;
    EXPECT_EQ(c.val, golden::kSplitCounts[3 * i + 1]) << n;
    EXPECT_EQ(c.test, golden::kSplitCounts[3 * i + 2]) << n;
  }
  const SplitCounts nine = split_counts(9);
  EXPECT_EQ(nine.train, 6u);
  EXPECT_EQ(nine.val, 2u);
  EXPECT_EQ(nine.test, 1u);
}

TEST(Split, NamesRoundTrip) {
  for (Split s : {Split::Train, Split::Val, Split::Test}) EXPECT_EQ(parse_split(to_string(s)), s);
  EXPECT_THROW(parse_split("holdout"), Error);
}

TEST(Manifest, PerClassSplitsAndDeterminism) {
  TempDir dir("manifest");
  write_synthetic_corpus(dir.path(), 10, 1, 8);
  const DatasetManifest a = build_manifest(dir.path(), 5), b = build_manifest(dir.path(), 5);
  const DatasetManifest c = build_manifest(dir.path(), 6);
  EXPECT_EQ(a.to_tsv(), b.to_tsv());
  EXPECT_NE(a.to_tsv(), c.to_tsv());
  EXPECT_EQ(a.class_names, kSyntheticClasses);
  ASSERT_EQ(a.records.size(), 20u);
  std::set<std::string> paths;
  std::map<std::pair<std::size_t, Split>, std::size_t> counts;
  for (const Record& r : a.records) {
    paths.insert(r.path.generic_string());
    ++counts[{r.label, r.split}];
    EXPECT_TRUE(fs::exists(a.root / r.path));
  }
  EXPECT_EQ(paths.size(), 20u);
  for (std::size_t label = 0; label < 2; ++label) {
    EXPECT_EQ((counts[{label, Split::Train}]), 7u);
    EXPECT_EQ((counts[{label, Split::Val}]), 2u);
    EXPECT_EQ((counts[{label, Split::Test}]), 1u);
  }
  const auto first = testing_support::lines(a.to_tsv()).front();
  EXPECT_EQ(std::count(first.begin(), first.end(), '\t'), 2);
}

TEST(Manifest, Errors) {
  TempDir dir("manifest_err");
  EXPECT_EQ(kind_of([&] { build_manifest(dir / "missing", 0); }), ErrorKind::NotFound);
  EXPECT_EQ(kind_of([&] { build_manifest(dir.path(), 0); }), ErrorKind::NoClasses);
  fs::create_directories(dir / "a");
  fs::create_directories(dir / "b");
  write_png(dir / "a" / "x.png", Tensor<float>({3, 2, 2}, 0.5f));
  EXPECT_EQ(kind_of([&] { build_manifest(dir.path(), 0); }), ErrorKind::EmptyClass);
}

TEST(Manifest, DoesNotTouchDataRoot) {
  TempDir dir("readonly");
  write_synthetic_corpus(dir.path(), 6, 2, 8);
  const std::string before = snapshot(dir.path());
  const DatasetManifest m = build_manifest(dir.path(), 0);
  AugmentPolicy policy;
  policy.target_hw = 8;
  BatchStream stream(m, Split::Train, 3, 0, policy);
  while (stream.next()) {
  }
  compute_channel_stats(m, 8);
  EXPECT_EQ(snapshot(dir.path()), before);
}

TEST(Png, DecodesReferenceFixtures) {
  expect_png(golden::kPngRgba, golden::kPngRgbaRgb, golden::kPngRgbaH, golden::kPngRgbaW);
  expect_png(golden::kPngGray, golden::kPngGrayRgb, golden::kPngGrayH, golden::kPngGrayW);
  expect_png(golden::kPngPalette, golden::kPngPaletteRgb, golden::kPngPaletteH,
             golden::kPngPaletteW);
  expect_png(golden::kPngOneBit, golden::kPngOneBitRgb, golden::kPngOneBitH, golden::kPngOneBitW);
}

TEST(Png, RejectsSixteenBitAndGarbage) {
  EXPECT_EQ(kind_of([] { decode_png(golden::kPng16Bit); }), ErrorKind::UnsupportedBitDepth);
  const std::vector<std::uint8_t> junk{1, 2, 3, 4, 5, 6, 7, 8, 9};
  EXPECT_EQ(kind_of([&] { decode_png(junk); }), ErrorKind::DecodeError);
  auto cut = golden::kPngRgba;
  cut.resize(cut.size() / 2);
  EXPECT_EQ(kind_of([&] { decode_png(cut); }), ErrorKind::DecodeError);
}

TEST(Png, EncodeDecodeRoundTrip) {
  Tensor<float> image({3, 4, 5});
  for (std::size_t i = 0; i < image.size(); ++i) image[i] = static_cast<float>(i * 4 % 256) / 255.0f;
  EXPECT_EQ(decode_png(encode_png(image)), image);
  EXPECT_EQ(encode_png(image), encode_png(image));
}

TEST(Augment, ResizeMatchesReference) {
  Tensor<float> image({3, 4, 5});
  const auto values = testing_support::pattern(60, 0.37, 0.1);
  for (std::size_t i = 0; i < 60; ++i) image[i] = static_cast<float>(values[i]);
  const Tensor<float> out = resize_bilinear(image, 7, 6);
  ASSERT_EQ(out.shape(), (Shape{3, 7, 6}));
  for (std::size_t i = 0; i < out.size(); ++i) EXPECT_NEAR(out[i], golden::kResize[i], 1e-6);
  EXPECT_EQ(resize_bilinear(image, 4, 5), image);
}

TEST(Augment, FlipsAndRotation) {
  Tensor<float> image({1, 5, 5});
  for (std::size_t i = 0; i < 25; ++i) image[i] = static_cast<float>(i);
  EXPECT_EQ(hflip(hflip(image)), image);
  EXPECT_EQ(vflip(vflip(image)), image);
  EXPECT_EQ(hflip(image).at({0, 1, 0}), image.at({0, 1, 4}));
  EXPECT_EQ(vflip(image).at({0, 0, 2}), image.at({0, 4, 2}));
  EXPECT_EQ(rotate(image, 0.0), image);
  // Quarter turn counter-clockwise: out[i][j] = in[j][n-1-i].
  const Tensor<float> r = rotate(image, 90.0);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j) EXPECT_NEAR(r.at({0, i, j}), image.at({0, j, 4 - i}), 1e-4);
  // Corners leave the frame under a small rotation of a larger image.
  Tensor<float> ones({1, 9, 9}, 1.0f);
  EXPECT_EQ(rotate(ones, 45.0).at({0, 0, 0}), 0.0f);
  EXPECT_EQ(rotate(ones, 45.0).at({0, 4, 4}), 1.0f);
}

TEST(Augment, NormalizeAndIdentityPolicy) {
  AugmentPolicy policy;
  policy.target_hw = 4;
  policy.mean = {0.1f, 0.2f, 0.3f};
  policy.std = {0.5f, 0.25f, 2.0f};
  Tensor<float> image({3, 4, 4}, 0.6f);
  const Tensor<float> n = normalize(image, policy);
  EXPECT_FLOAT_EQ(n.at({0, 0, 0}), (0.6f - 0.1f) / 0.5f);
  EXPECT_FLOAT_EQ(n.at({2, 3, 3}), (0.6f - 0.3f) / 2.0f);
  policy.hflip_prob = policy.vflip_prob = 0.0;
  policy.rotation_deg = 0.0;
  Rng rng(1);
  EXPECT_EQ(augment(image, policy, rng), preprocess(image, policy));
}

TEST(Augment, SeededAndPolicyValidated) {
  AugmentPolicy policy;
  policy.target_hw = 16;
  Tensor<float> image({3, 10, 10});
  for (std::size_t i = 0; i < image.size(); ++i) image[i] = static_cast<float>(i % 7) / 7.0f;
  Rng a(3), b(3);
  EXPECT_EQ(augment(image, policy, a), augment(image, policy, b));
  policy.hflip_prob = 1.5;
  EXPECT_THROW(policy.validate(), Error);
  policy = AugmentPolicy{};
  policy.std[1] = 0.0f;
  EXPECT_THROW(policy.validate(), Error);
}

class Batches : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new TempDir("batches");
    write_synthetic_corpus(dir_->path(), 10, 4, 12);
  }
  static void TearDownTestSuite() { delete dir_; }
  static TempDir* dir_;
};
TempDir* Batches::dir_ = nullptr;

TEST_F(Batches, CoversSplitOnceWithShortLastBatch) {
  const DatasetManifest m = build_manifest(dir_->path(), 0);
  AugmentPolicy policy;
  policy.target_hw = 16;
  BatchStream stream(m, Split::Train, 4, 9, policy);
  EXPECT_EQ(stream.size(), 14u);
  EXPECT_EQ(stream.batch_count(), 4u);
  std::vector<std::size_t> sizes;
  std::multiset<std::size_t> seen(stream.order().begin(), stream.order().end());
  while (auto batch = stream.next()) {
    EXPECT_EQ(batch->images.shape(), (Shape{batch->labels.size(), 3, 16, 16}));
    sizes.push_back(batch->labels.size());
  }
  EXPECT_EQ(sizes, (std::vector<std::size_t>{4, 4, 4, 2}));
  EXPECT_EQ(seen.size(), 14u);
  EXPECT_EQ(std::set<std::size_t>(seen.begin(), seen.end()).size(), 14u);
}

TEST_F(Batches, ShuffleIsSeededAndEvalKeepsOrder) {
  const DatasetManifest m = build_manifest(dir_->path(), 0);
  AugmentPolicy policy;
  policy.target_hw = 16;
  BatchStream a(m, Split::Train, 4, 1, policy), b(m, Split::Train, 4, 1, policy),
      c(m, Split::Train, 4, 2, policy);
  EXPECT_EQ(a.order(), b.order());
  EXPECT_NE(a.order(), c.order());
  BatchStream v(m, Split::Val, 4, 1, policy);
  for (std::size_t i = 0; i < v.order().size(); ++i) EXPECT_EQ(v.order()[i], i);
}

TEST_F(Batches, FastModeLoadsIdenticalBatches) {
  const DatasetManifest m = build_manifest(dir_->path(), 0);
  AugmentPolicy policy;
  policy.target_hw = 16;
  BatchStream serial(m, Split::Train, 5, 3, policy);
  std::vector<Tensor<float>> expected;
  while (auto batch = serial.next()) expected.push_back(batch->images);
  ScopedExecMode fast(ExecMode::Fast);
  BatchStream parallel(m, Split::Train, 5, 3, policy);
  for (const auto& e : expected) EXPECT_EQ(parallel.next()->images, e);
}

TEST_F(Batches, Errors) {
  TempDir tiny("tiny");
  write_synthetic_corpus(tiny.path(), 1, 0, 8);
  const DatasetManifest m = build_manifest(tiny.path(), 0);
  AugmentPolicy policy;
  policy.target_hw = 8;
  EXPECT_EQ(kind_of([&] { BatchStream(m, Split::Val, 2, 0, policy); }), ErrorKind::EmptySplit);
  const DatasetManifest full = build_manifest(dir_->path(), 0);
  EXPECT_EQ(kind_of([&] { BatchStream(full, Split::Train, 0, 0, policy); }), ErrorKind::BadConfig);
}

TEST_F(Batches, ChannelStatsMatchDirectComputation) {
  const DatasetManifest m = build_manifest(dir_->path(), 0);
  const ChannelStats stats = compute_channel_stats(m, 12);
  double sum[3] = {0, 0, 0}, sq[3] = {0, 0, 0};
  std::size_t count = 0;
  for (const Record& r : m.split(Split::Train)) {
    const Tensor<float> image = decode_png(m.root / r.path);
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t i = 0; i < 144; ++i) {
        sum[c] += image[c * 144 + i];
        sq[c] += static_cast<double>(image[c * 144 + i]) * image[c * 144 + i];
      }
    count += 144;
  }
  for (std::size_t c = 0; c < 3; ++c) {
    const double mean = sum[c] / count;
    EXPECT_NEAR(stats.mean[c], mean, 1e-5);
    EXPECT_NEAR(stats.std[c], std::sqrt(sq[c] / count - mean * mean), 1e-4);
  }
}

TEST(Synth, CorpusLayoutAndDeterminism) {
  TempDir a("synth_a"), b("synth_b"), c("synth_c");
  EXPECT_EQ(write_synthetic_corpus(a.path(), 20, 11), 40u);
  write_synthetic_corpus(b.path(), 20, 11);
  write_synthetic_corpus(c.path(), 20, 12);
  std::size_t files = 0;
  for (const auto& cls : kSyntheticClasses) {
    for (const auto& entry : fs::directory_iterator(a / cls)) {
      ++files;
      EXPECT_EQ(decode_png(entry.path()).shape(), (Shape{3, 50, 50}));
    }
  }
  EXPECT_EQ(files, 40u);
  EXPECT_EQ(snapshot(a.path()), snapshot(b.path()));
  EXPECT_NE(snapshot(a.path()), snapshot(c.path()));
}

TEST(Synth, ClassesDifferInHighFrequencyEnergy) {
  Rng rng(5);
  auto energy = [](const Tensor<float>& img) {
    double e = 0;
    for (std::size_t i = 0; i < 50; ++i)
      for (std::size_t j = 1; j < 50; ++j) e += std::abs(img.at({0, i, j}) - img.at({0, i, j - 1}));
    return e;
  };
  for (int k = 0; k < 10; ++k) {
    const double blob = energy(synthetic_image(0, rng)), stripe = energy(synthetic_image(1, rng));
    EXPECT_GT(stripe, blob);
  }
}
