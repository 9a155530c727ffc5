#include <gtest/gtest.h>

#include "bcdnet/autograd.hpp"
#include "bcdnet/error.hpp"
#include "bcdnet/ops.hpp"

using namespace bcdnet;

TEST(Autograd, SharedInputAccumulates) {
  Tape<double> tape;
  auto x = tape.leaf(Tensor<double>({3}, std::vector<double>{1, 2, 3}), true);
  auto y = ops::sum(ops::mul(x, x));  // sum x^2
  tape.backward(y);
  EXPECT_EQ(y.value()[0], 14.0);
  EXPECT_EQ(tape.grad(x), Tensor<double>({3}, std::vector<double>{2, 4, 6}));
}

TEST(Autograd, ParameterGradientsAccumulateAcrossBackwardCalls) {
  Parameter<double> p("p", Tensor<double>({2}, std::vector<double>{1.5, -2.0}));
  for (int round = 0; round < 2; ++round) {
    Tape<double> tape;
    auto v = tape.parameter(p);
    tape.backward(ops::sum(ops::add(v, v)));
  }
  EXPECT_EQ(p.grad, Tensor<double>({2}, 4.0));
  std::vector<Parameter<double>*> params{&p};
  zero_grad<double>(params);
  EXPECT_EQ(p.grad, Tensor<double>({2}, 0.0));
}

TEST(Autograd, BackwardRequiresScalar) {
  Tape<double> tape;
  auto x = tape.leaf(Tensor<double>({2}, 1.0), true);
  try {
    tape.backward(ops::add(x, x));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NotScalar);
  }
}

TEST(Autograd, ConstantBranchesAreSkipped) {
  Tape<double> tape;
  auto c = tape.leaf(Tensor<double>({2}, 3.0), false);
  auto x = tape.leaf(Tensor<double>({2}, 1.0), true);
  auto k = ops::mul(c, c);  // no gradient needed
  auto y = ops::sum(ops::mul(k, x));
  EXPECT_FALSE(tape.requires_grad(k));
  EXPECT_TRUE(tape.requires_grad(y));
  tape.backward(y);
  EXPECT_EQ(tape.last_backward_visits(), 2u);
  EXPECT_EQ(tape.grad(x), Tensor<double>({2}, 9.0));
}

TEST(Autograd, TapeRecordsInOrderAndReplays) {
  Tape<double> tape;
  auto x = tape.leaf(Tensor<double>({1, 4}, std::vector<double>{-1, 2, -3, 4}), true);
  auto r = ops::relu(x);
  auto s = ops::sum(r);
  ASSERT_EQ(tape.size(), 2u);
  EXPECT_EQ(tape.node(0).op, "relu");
  EXPECT_EQ(tape.node(1).op, "sum");
  EXPECT_EQ(tape.producer(s), 1u);
  EXPECT_EQ(tape.producer(x), Tape<double>::kNoProducer);
  const auto replayed = tape.replay();
  ASSERT_EQ(replayed.size(), 2u);
  EXPECT_EQ(replayed[0], r.value());
  EXPECT_EQ(replayed[1], s.value());
}

TEST(Autograd, ReluPassesGradientOnlyForPositiveInputs) {
  Tape<double> tape;
  auto x = tape.leaf(Tensor<double>({4}, std::vector<double>{-1, 0, 2, 3}), true);
  tape.backward(ops::sum(ops::relu(x)));
  EXPECT_EQ(tape.grad(x), Tensor<double>({4}, std::vector<double>{0, 0, 1, 1}));
}

TEST(Autograd, FloatTapeWorks) {
  Tape<float> tape;
  auto x = tape.leaf(Tensor<float>({2}, std::vector<float>{1, 2}), true);
  tape.backward(ops::weighted_sum(x, Tensor<float>({2}, std::vector<float>{3, 4})));
  EXPECT_EQ(tape.grad(x), Tensor<float>({2}, std::vector<float>{3, 4}));
}
