#include <gtest/gtest.h>

#include <cmath>

#include "bcdnet/error.hpp"
#include "bcdnet/optim.hpp"
#include "golden.hpp"

using namespace bcdnet;

TEST(Adam, DefaultsMatchTrainingProtocol) {
  const AdamConfig c;
  EXPECT_EQ(c.lr, 0.005);
  EXPECT_EQ(c.beta1, 0.9);
  EXPECT_EQ(c.beta2, 0.999);
  EXPECT_EQ(c.eps, 1e-8);
}

TEST(Adam, MatchesReferenceTrajectory) {
  Parameter<double> p("p", Tensor<double>({3}, std::vector<double>{0.5, -1.0, 2.0}));
  Adam<double> adam({&p}, AdamConfig{});
  for (int step = 1; step <= 3; ++step) {
    for (std::size_t k = 0; k < 3; ++k) p.grad[k] = std::sin(step + static_cast<double>(k));
    adam.step();
    for (std::size_t k = 0; k < 3; ++k) {
      EXPECT_NEAR(p.value[k], golden::kAdamTrace[(step - 1) * 3 + k], 1e-14)
          << "step " << step << " k " << k;
    }
  }
  EXPECT_EQ(adam.steps(), 3u);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  Parameter<double> p("p", Tensor<double>({2}, std::vector<double>{0.0, 0.0}));
  p.grad[0] = 3.0;
  p.grad[1] = -0.01;
  Adam<double> adam({&p}, AdamConfig{});
  adam.step();
  EXPECT_NEAR(p.value[0], -0.005, 1e-10);
  EXPECT_NEAR(p.value[1], 0.005, 1e-8);
}

TEST(Adam, RejectsBadConfig) {
  AdamConfig c;
  c.beta1 = 1.0;
  EXPECT_THROW(c.validate(), Error);
  c = AdamConfig{};
  c.lr = -1;
  EXPECT_THROW(c.validate(), Error);
}

TEST(StepLR, MatchesClosedFormExactly) {
  StepLR sched;
  for (std::size_t e = 0; e < golden::kStepLr.size(); ++e) {
    EXPECT_EQ(sched.lr(), golden::kStepLr[e]) << "epoch " << e;
    EXPECT_EQ(step_lr(0.005, 0.1, 10, e), golden::kStepLr[e]);
    sched.step();
  }
}

TEST(StepLR, Validation) {
  StepLR s;
  s.step_size = 0;
  EXPECT_THROW(s.validate(), Error);
  s = StepLR{};
  s.gamma = 0;
  EXPECT_THROW(s.validate(), Error);
}
