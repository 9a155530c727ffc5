#include "bcdnet/gradcheck_suite.hpp"

#include <algorithm>
#include <functional>

#include "bcdnet/ops.hpp"

namespace bcdnet {

Var<double> CrossEntropyProbe::forward(Var<double> x) { return ops::cross_entropy(x, labels_); }

Var<double> CorruptedBackward::forward(Var<double> x) {
  Var<double> y = inner_->forward(x);
  return y.tape->record(
      "corrupt", {y}, [](const Tape<double>::Inputs& in) { return *in[0]; },
      [](const Tape<double>::Inputs&, const Tensor<double>&, const Tensor<double>& gy,
         const std::vector<bool>&) {
        return std::vector<Tensor<double>>{map(gy, [](double g) { return 1.5 * g; })};
      });
}

namespace {

Tensor<double> uniform_tensor(Shape shape, Rng& rng, double lo, double hi) {
  Tensor<double> t(std::move(shape));
  for (double& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

// Values whose magnitude stays at least `gap` away from zero.
Tensor<double> away_from_zero(Shape shape, Rng& rng, double gap) {
  Tensor<double> t(std::move(shape));
  for (double& v : t.data()) v = (rng.bernoulli(0.5) ? 1.0 : -1.0) * rng.uniform(gap, 1.0);
  return t;
}

// Distinct grid values in random order, so pooling windows have no near-ties.
Tensor<double> distinct_values(Shape shape, Rng& rng) {
  Tensor<double> t(std::move(shape));
  std::vector<double> values(t.size());
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = -1.0 + 0.01 * static_cast<double>(i);
  rng.shuffle(values);
  std::copy(values.begin(), values.end(), t.data().begin());
  return t;
}

void randomize(Parameter<double>& p, Rng& rng, double lo, double hi) {
  for (double& v : p.value.data()) v = rng.uniform(lo, hi);
}

struct Case {
  std::unique_ptr<nn::Module<double>> layer;
  Tensor<double> input;
};

using CaseFactory = std::function<Case(Rng&, std::size_t seed)>;

const std::vector<std::pair<std::string, CaseFactory>>& factories() {
  static const std::vector<std::pair<std::string, CaseFactory>> table{
      {"conv2d",
       [](Rng& rng, std::size_t seed) {
         const std::size_t stride = 1 + seed % 2;
         auto conv = std::make_unique<nn::Conv2d<double>>(3, 4, 3, stride, 1, rng);
         randomize(conv->bias(), rng, -0.5, 0.5);
         return Case{std::move(conv), uniform_tensor({2, 3, 5, 5}, rng, -1.0, 1.0)};
       }},
      {"maxpool2d",
       [](Rng& rng, std::size_t seed) {
         const bool overlapping = seed % 2 == 1;
         auto pool = std::make_unique<nn::MaxPool2d<double>>(overlapping ? 3 : 2,
                                                             overlapping ? 1 : 2);
         return Case{std::move(pool), distinct_values({2, 2, 6, 6}, rng)};
       }},
      {"relu",
       [](Rng& rng, std::size_t) {
         return Case{std::make_unique<nn::ReLU<double>>(), away_from_zero({3, 7}, rng, 0.1)};
       }},
      {"linear",
       [](Rng& rng, std::size_t) {
         auto linear = std::make_unique<nn::Linear<double>>(4, 3, rng);
         randomize(linear->bias(), rng, -0.5, 0.5);
         return Case{std::move(linear), uniform_tensor({5, 4}, rng, -1.0, 1.0)};
       }},
      {"batchnorm2d",
       [](Rng& rng, std::size_t) {
         auto bn = std::make_unique<nn::BatchNorm2d<double>>(3);
         randomize(bn->gamma(), rng, 0.5, 1.5);
         randomize(bn->beta(), rng, -0.5, 0.5);
         return Case{std::move(bn), uniform_tensor({4, 3, 3, 3}, rng, -2.0, 2.0)};
       }},
      {"dropout",
       [](Rng& rng, std::size_t seed) {
         return Case{std::make_unique<SeedPinnedDropout>(0.5, 1000 + seed),
                     uniform_tensor({4, 6}, rng, -1.0, 1.0)};
       }},
      {"softmax_cross_entropy",
       [](Rng& rng, std::size_t) {
         std::vector<std::size_t> labels(4);
         for (auto& l : labels) l = rng.index(3);
         return Case{std::make_unique<CrossEntropyProbe>(labels),
                     uniform_tensor({4, 3}, rng, -2.0, 2.0)};
       }},
  };
  return table;
}

}  // namespace

const std::vector<std::string>& gradcheck_layer_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& [name, factory] : factories()) out.push_back(name);
    return out;
  }();
  return names;
}

std::vector<GradCheckReport> run_gradcheck_suite(const GradCheckSuiteOptions& options) {
  std::vector<GradCheckReport> reports;
  for (std::size_t index = 0; index < factories().size(); ++index) {
    const auto& [name, factory] = factories()[index];
    GradCheckReport total;
    total.layer = name;
    total.pass = true;
    for (std::size_t seed = 0; seed < options.seeds; ++seed) {
      Rng rng(mix_seed(seed, index));
      Case c = factory(rng, seed);
      if (options.corrupt && *options.corrupt == name) {
        c.layer = std::make_unique<CorruptedBackward>(std::move(c.layer));
      }
      const GradCheckReport r = grad_check(*c.layer, c.input, options.eps, options.tol, seed);
      total.max_rel_error = std::max(total.max_rel_error, r.max_rel_error);
      total.checked += r.checked;
      total.excluded += r.excluded;
      total.pass = total.pass && r.pass;
    }
    reports.push_back(total);
  }
  return reports;
}

}  // namespace bcdnet
