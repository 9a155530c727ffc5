#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "bcdnet/error.hpp"
#include "bcdnet/nn.hpp"
#include "bcdnet/ops.hpp"
#include "support.hpp"

using namespace bcdnet;
using testing_support::random_tensor;

TEST(HeUniform, BoundAndSpread) {
  Rng rng(1);
  const std::size_t fan_in = 50;
  const Tensor<double> w = nn::he_uniform<double>({200, 50}, fan_in, rng);
  const double bound = std::sqrt(6.0 / fan_in);
  double sum = 0, sq = 0;
  for (double v : w.data()) {
    EXPECT_LE(std::abs(v), bound);
    sum += v;
    sq += v * v;
  }
  const double n = static_cast<double>(w.size());
  EXPECT_NEAR(sum / n, 0.0, 0.01);
  EXPECT_NEAR(std::sqrt(sq / n), std::sqrt(2.0 / fan_in), 0.01);
}

TEST(Conv2dLayer, ParametersAndShapes) {
  Rng rng(2);
  nn::Conv2d<double> conv(3, 5, 3, 1, 1, rng, "c");
  auto params = conv.parameters();
  ASSERT_EQ(params.size(), 2u);
  EXPECT_EQ(params[0]->name, "c.weight");
  EXPECT_EQ(params[0]->value.shape(), (Shape{5, 3, 3, 3}));
  EXPECT_EQ(params[1]->name, "c.bias");
  Tape<double> tape;
  auto y = conv.forward(tape.leaf(Tensor<double>({2, 3, 7, 6})));
  EXPECT_EQ(y.shape(), (Shape{2, 5, 7, 6}));
}

TEST(LinearLayer, Shapes) {
  Rng rng(3);
  nn::Linear<double> fc(6, 4, rng, "fc");
  EXPECT_EQ(fc.weight().value.shape(), (Shape{4, 6}));
  Tape<double> tape;
  EXPECT_EQ(fc.forward(tape.leaf(Tensor<double>({3, 6}))).shape(), (Shape{3, 4}));
}

TEST(MaxPoolLayer, HalvesSpatialExtent) {
  nn::MaxPool2d<double> pool;
  Tape<double> tape;
  EXPECT_EQ(pool.forward(tape.leaf(Tensor<double>({1, 2, 8, 6}))).shape(), (Shape{1, 2, 4, 3}));
}

TEST(BatchNormLayer, RunningStatisticsUseBiasedVariance) {
  std::mt19937_64 gen(4);
  nn::BatchNorm2d<double> bn(2, 1e-5, 0.1, "bn");
  const auto x = random_tensor<double>({4, 2, 3, 3}, gen, -2.0, 3.0);
  Tape<double> tape;
  bn.forward(tape.leaf(x));
  for (std::size_t c = 0; c < 2; ++c) {
    double mean = 0, sq = 0;
    for (std::size_t n = 0; n < 4; ++n)
      for (std::size_t i = 0; i < 9; ++i) mean += x[(n * 2 + c) * 9 + i];
    mean /= 36.0;
    for (std::size_t n = 0; n < 4; ++n)
      for (std::size_t i = 0; i < 9; ++i) sq += std::pow(x[(n * 2 + c) * 9 + i] - mean, 2);
    EXPECT_NEAR(bn.running_mean()[c], 0.1 * mean, 1e-14);
    EXPECT_NEAR(bn.running_var()[c], 0.9 + 0.1 * sq / 36.0, 1e-14);
  }
  const auto names = bn.buffers();
  ASSERT_EQ(names.size(), 2u);
  EXPECT_EQ(names[0].name, "bn.running_mean");
  EXPECT_EQ(names[1].name, "bn.running_var");
}

TEST(BatchNormLayer, EvalUsesRunningStatisticsAndIsReadOnly) {
  nn::BatchNorm2d<double> bn(1, 1e-5, 0.1, "bn");
  bn.running_mean()[0] = 2.0;
  bn.running_var()[0] = 4.0;
  bn.gamma().value[0] = 3.0;
  bn.beta().value[0] = 0.5;
  bn.set_mode(nn::Mode::Eval);
  Tape<double> tape;
  auto y = bn.forward(tape.leaf(Tensor<double>({1, 1, 1, 2}, std::vector<double>{2.0, 6.0})));
  EXPECT_DOUBLE_EQ(y.value()[0], 0.5);
  EXPECT_NEAR(y.value()[1], 3.0 * 4.0 / std::sqrt(4.0 + 1e-5) + 0.5, 1e-12);
  EXPECT_EQ(bn.running_mean()[0], 2.0);
  EXPECT_EQ(bn.running_var()[0], 4.0);
}

TEST(BatchNormLayer, NormalizesEachChannel) {
  std::mt19937_64 gen(5);
  nn::BatchNorm2d<double> bn(3);
  const auto x = random_tensor<double>({8, 3, 4, 4}, gen, -5.0, 9.0);
  Tape<double> tape;
  const Tensor<double> y = bn.forward(tape.leaf(x)).value();
  const Tensor<double> mean = reduce(y, {0, 2, 3}, ReduceKind::Mean);
  for (std::size_t c = 0; c < 3; ++c) EXPECT_LE(std::abs(mean[c]), 1e-12);
}

TEST(BatchNormLayer, ConstantChannelDoesNotDivideByZero) {
  nn::BatchNorm2d<double> bn(1);
  Tape<double> tape;
  auto y = bn.forward(tape.leaf(Tensor<double>({2, 1, 2, 2}, 3.0)));
  for (double v : y.value().data()) EXPECT_EQ(v, 0.0);
}

TEST(DropoutLayer, RejectsInvalidRates) {
  EXPECT_THROW(nn::Dropout<double>(1.0), Error);
  EXPECT_THROW(nn::Dropout<double>(-0.1), Error);
  EXPECT_NO_THROW(nn::Dropout<double>(0.0));
}

TEST(DropoutLayer, EvalAndZeroRateAreIdentity) {
  const Tensor<double> x({2, 3}, std::vector<double>{1, 2, 3, 4, 5, 6});
  nn::Dropout<double> off(0.0, 1), eval(0.5, 1);
  eval.set_mode(nn::Mode::Eval);
  Tape<double> tape;
  auto v = tape.leaf(x);
  EXPECT_EQ(off.forward(v).value(), x);
  EXPECT_EQ(eval.forward(v).value(), x);
  EXPECT_EQ(tape.size(), 0u);
}

TEST(DropoutLayer, MaskIsInvertedAndSeeded) {
  const Tensor<double> x({1, 1000}, 1.0);
  nn::Dropout<double> a(0.25, 9), b(0.25, 9);
  Tape<double> tape;
  auto v = tape.leaf(x, true);
  auto ya = a.forward(v);
  const Tensor<double> yb = b.forward(v).value();
  EXPECT_EQ(ya.value(), yb);
  std::size_t zeros = 0;
  for (double y : ya.value().data()) {
    EXPECT_TRUE(y == 0.0 || y == 1.0 / 0.75);
    zeros += y == 0.0;
  }
  EXPECT_GT(zeros, 180u);
  EXPECT_LT(zeros, 320u);
  tape.backward(ops::sum(ya));
  EXPECT_EQ(tape.grad(v), ya.value());
}

TEST(DropoutLayer, ConsecutiveCallsDrawFreshMasks) {
  nn::Dropout<double> d(0.5, 3);
  Tape<double> tape;
  auto v = tape.leaf(Tensor<double>({1, 64}, 1.0));
  EXPECT_NE(d.forward(v).value(), d.forward(v).value());
}

TEST(FlattenLayer, KeepsBatchAxis) {
  nn::Flatten<double> f;
  Tape<double> tape;
  EXPECT_EQ(f.forward(tape.leaf(Tensor<double>({2, 3, 4, 5}))).shape(), (Shape{2, 60}));
}
