#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bcdnet/gradcheck.hpp"

namespace bcdnet {

// Dropout reseeded before every forward so finite differences see one mask.
class SeedPinnedDropout : public nn::Module<double> {
 public:
  SeedPinnedDropout(double rate, std::uint64_t seed) : dropout_(rate, seed), seed_(seed) {}

  std::string kind() const override { return "dropout"; }
  Var<double> forward(Var<double> x) override {
    dropout_.reseed(seed_);
    return dropout_.forward(x);
  }

 private:
  nn::Dropout<double> dropout_;
  std::uint64_t seed_;
};

// Mean softmax cross-entropy against fixed labels, as a scalar-valued layer.
class CrossEntropyProbe : public nn::Module<double> {
 public:
  explicit CrossEntropyProbe(std::vector<std::size_t> labels) : labels_(std::move(labels)) {}

  std::string kind() const override { return "softmax_cross_entropy"; }
  Var<double> forward(Var<double> x) override;

 private:
  std::vector<std::size_t> labels_;
};

// Test fixture: forwards unchanged but scales the gradient flowing back
// into the wrapped layer by 1.5.
class CorruptedBackward : public nn::Module<double> {
 public:
  explicit CorruptedBackward(std::unique_ptr<nn::Module<double>> inner) : inner_(std::move(inner)) {}

  std::string kind() const override { return inner_->kind(); }
  Var<double> forward(Var<double> x) override;
  std::vector<Parameter<double>*> parameters() override { return inner_->parameters(); }

 private:
  std::unique_ptr<nn::Module<double>> inner_;
};

struct GradCheckSuiteOptions {
  std::size_t seeds = 10;
  double eps = 1e-5;
  double tol = 1e-4;
  // Layer name whose backward is deliberately corrupted.
  std::optional<std::string> corrupt;
};

// Names checked by the suite, in report order.
const std::vector<std::string>& gradcheck_layer_names();

// One aggregated report per layer (worst case over all seeds).
std::vector<GradCheckReport> run_gradcheck_suite(const GradCheckSuiteOptions& options);

}  // namespace bcdnet
