#include <gtest/gtest.h>

#include <random>
#include <set>

#include "bcdnet/checkpoint.hpp"
#include "bcdnet/error.hpp"
#include "bcdnet/ops.hpp"
#include "support.hpp"

using namespace bcdnet;
using testing_support::TempDir;

namespace {

ModelConfig tiny() {
  ModelConfig c;
  c.input_hw = 8;
  c.block_channels = {2};
  c.fc_hidden = 3;
  return c;
}

void train_steps(Model<float>& model, Adam<float>& adam, int steps, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  const std::size_t hw = model.config().input_hw;
  for (int s = 0; s < steps; ++s) {
    const auto x = testing_support::random_tensor<float>({4, 3, hw, hw}, gen);
    Tape<float> tape;
    auto loss = ops::cross_entropy(model.forward(tape.leaf(x)), {0, 1, 1, 0});
    zero_grad<float>(model.parameters());
    tape.backward(loss);
    adam.step();
  }
}

ErrorKind decode_error(const std::vector<std::uint8_t>& bytes) {
  try {
    decode_checkpoint(bytes);
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::IoError;  // sentinel: accepted
}

}  // namespace

TEST(Checkpoint, Crc32KnownValue) {
  const std::string text = "123456789";
  EXPECT_EQ(crc32(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()), 0xCBF43926u);
}

TEST(Checkpoint, LayoutStartsWithMagicAndVersion) {
  Model<float> model(tiny(), 1);
  const auto bytes = encode_checkpoint(model, nullptr, {});
  ASSERT_GT(bytes.size(), 16u);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "BCDN");
  EXPECT_EQ(bytes[4], 1);
  EXPECT_EQ(bytes[5] | bytes[6] | bytes[7], 0);
}

TEST(Checkpoint, SaveLoadSaveIsByteIdentical) {
  TempDir dir("ckpt");
  Model<float> model(ModelConfig::micro(), 3);
  Adam<float> adam(model.parameters(), AdamConfig{});
  train_steps(model, adam, 2, 3);
  const nlohmann::json meta{{"epoch", 4}, {"note", "x"}};
  save_checkpoint(dir / "a.ckpt", model, &adam, meta);

  const Checkpoint ckpt = read_checkpoint(dir / "a.ckpt");
  auto loaded = load_model(ckpt);
  Adam<float> adam2(loaded->parameters(), AdamConfig{});
  load_optimizer(adam2, ckpt);
  save_checkpoint(dir / "b.ckpt", *loaded, &adam2, ckpt.meta);
  EXPECT_EQ(testing_support::slurp(dir / "a.ckpt"), testing_support::slurp(dir / "b.ckpt"));
  EXPECT_EQ(ckpt.meta, meta);
  EXPECT_EQ(ckpt.seed, 3u);
  EXPECT_EQ(ckpt.adam_steps, 2u);
}

TEST(Checkpoint, BuffersAndParametersRestored) {
  Model<float> model(tiny(), 5);
  Adam<float> adam(model.parameters(), AdamConfig{});
  train_steps(model, adam, 3, 5);
  const Checkpoint ckpt = decode_checkpoint(encode_checkpoint(model, nullptr, {}));
  EXPECT_FALSE(ckpt.has_optimizer);
  auto loaded = load_model(ckpt);
  const auto a = model.parameters(), b = loaded->parameters();
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i]->value, b[i]->value);
  const auto ba = model.buffers(), bb = loaded->buffers();
  for (std::size_t i = 0; i < ba.size(); ++i) EXPECT_EQ(*ba[i].tensor, *bb[i].tensor);
  model.set_mode(nn::Mode::Eval);
  loaded->set_mode(nn::Mode::Eval);
  std::mt19937_64 gen(1);
  const auto x = testing_support::random_tensor<float>({2, 3, 8, 8}, gen);
  EXPECT_EQ(model.forward(x), loaded->forward(x));
}

TEST(Checkpoint, ResumedTrainingMatchesUninterrupted) {
  ModelConfig config = tiny();
  config.dropout_rate = 0.0;
  Model<float> a(config, 6), b(config, 6);
  Adam<float> adam_a(a.parameters(), AdamConfig{});
  train_steps(a, adam_a, 2, 10);
  const Checkpoint mid = decode_checkpoint(encode_checkpoint(a, &adam_a, {}));
  train_steps(a, adam_a, 2, 11);

  load_into(b, mid);
  Adam<float> adam_b(b.parameters(), AdamConfig{});
  load_optimizer(adam_b, mid);
  train_steps(b, adam_b, 2, 11);
  const auto pa = a.parameters(), pb = b.parameters();
  for (std::size_t i = 0; i < pa.size(); ++i) EXPECT_EQ(pa[i]->value, pb[i]->value) << pa[i]->name;
}

TEST(Checkpoint, EverySingleByteCorruptionIsRejected) {
  Model<float> model(tiny(), 7);
  Adam<float> adam(model.parameters(), AdamConfig{});
  train_steps(model, adam, 1, 7);
  const auto bytes = encode_checkpoint(model, &adam, {{"k", 1}});
  const std::set<ErrorKind> allowed{ErrorKind::BadMagic, ErrorKind::VersionMismatch,
                                    ErrorKind::TruncatedFile, ErrorKind::ChecksumMismatch};
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    for (std::uint8_t flip : {0x01, 0x80, 0xFF}) {
      auto bad = bytes;
      bad[i] ^= flip;
      EXPECT_TRUE(allowed.count(decode_error(bad))) << "byte " << i << " flip " << int(flip);
    }
  }
}

TEST(Checkpoint, SpecificErrors) {
  Model<float> model(tiny(), 8);
  const auto bytes = encode_checkpoint(model, nullptr, {});
  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_EQ(decode_error(bad), ErrorKind::BadMagic);
  bad = bytes;
  bad[4] = 2;
  EXPECT_EQ(decode_error(bad), ErrorKind::VersionMismatch);
  bad = bytes;
  bad.resize(bytes.size() - 9);
  EXPECT_EQ(decode_error(bad), ErrorKind::TruncatedFile);
  bad = bytes;
  bad[bytes.size() - 10] ^= 0x10;  // inside the last tensor payload
  EXPECT_EQ(decode_error(bad), ErrorKind::ChecksumMismatch);
  EXPECT_EQ(decode_error({}), ErrorKind::TruncatedFile);
}

TEST(Checkpoint, OversizedShapeWithValidCrcIsTruncated) {
  Model<float> model(tiny(), 8);
  auto bad = encode_checkpoint(model, nullptr, {});
  const std::size_t header_len = bad[8] | bad[9] << 8 | bad[10] << 16 | bad[11] << 24;
  const std::size_t record = 12 + header_len;
  const std::size_t dims = record + 2 + (bad[record] | bad[record + 1] << 8) + 1;
  for (std::size_t i = 0; i < 8; ++i) bad[dims + i] = 0xFF;
  bad.resize(bad.size() - 4);
  const std::uint32_t crc = crc32(bad.data(), bad.size());
  for (int i = 0; i < 4; ++i) bad.push_back(static_cast<std::uint8_t>(crc >> (8 * i)));
  EXPECT_EQ(decode_error(bad), ErrorKind::TruncatedFile);
}

TEST(Checkpoint, MissingFileIsNotFound) {
  try {
    read_checkpoint("/nonexistent/dir/x.ckpt");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NotFound);
  }
}

TEST(Checkpoint, LoadIntoDifferentConfigFails) {
  Model<float> model(tiny(), 9);
  const Checkpoint ckpt = decode_checkpoint(encode_checkpoint(model, nullptr, {}));
  ModelConfig other = tiny();
  other.fc_hidden = 4;
  Model<float> target(other, 9);
  try {
    load_into(target, ckpt);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::BadConfig);
  }
}
