#include "bcdnet/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bcdnet/ops.hpp"

namespace bcdnet {

double relative_error(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / scale;
}

namespace {

constexpr double kKinkTolerance = 1e-3;
// Central differences cannot resolve a slope below roughly
// (rounding error of f) / eps; such probes carry no information.
constexpr double kRoundoffUlps = 64.0;

Tensor<double> run_forward(nn::Module<double>& layer, const Tensor<double>& input) {
  Tape<double> tape;
  return layer.forward(tape.leaf(input)).value();
}

double objective(nn::Module<double>& layer, const Tensor<double>& input,
                 const Tensor<double>& projection) {
  const Tensor<double> y = run_forward(layer, input);
  double acc = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) acc += y[i] * projection[i];
  return acc;
}

}  // namespace

GradCheckReport grad_check(nn::Module<double>& layer, const Tensor<double>& input, double eps,
                           double tol, std::uint64_t seed) {
  GradCheckReport report;
  report.layer = layer.kind();

  const Tensor<double> first = run_forward(layer, input);
  const Tensor<double> second = run_forward(layer, input);
  if (!(first == second)) {
    throw Error(ErrorKind::NonDeterministicLayer,
                layer.kind() + " produced different outputs for identical forwards");
  }

  Rng rng(seed);
  Tensor<double> projection(first.shape());
  for (double& r : projection.data()) r = rng.uniform(-1.0, 1.0);

  std::vector<Parameter<double>*> params = layer.parameters();
  zero_grad<double>(params);
  Tensor<double> input_grad;
  {
    Tape<double> tape;
    Var<double> x = tape.leaf(input, true);
    Var<double> loss = ops::weighted_sum(layer.forward(x), projection);
    tape.backward(loss);
    input_grad = tape.grad(x);
    if (input_grad.empty()) input_grad = Tensor<double>::zeros(input.shape());
  }

  const double base = objective(layer, input, projection);
  auto probe = [&](double& slot, double analytic, auto&& evaluate) {
    const double original = slot;
    slot = original + eps;
    const double plus = evaluate();
    slot = original - eps;
    const double minus = evaluate();
    slot = original;
    const double right = (plus - base) / eps;
    const double left = (base - minus) / eps;
    if (std::abs(right - left) >
        kKinkTolerance * std::max({1.0, std::abs(right), std::abs(left)})) {
      ++report.excluded;
      return;
    }
    const double numeric = (plus - minus) / (2.0 * eps);
    const double error = relative_error(analytic, numeric);
    const double floor = kRoundoffUlps * std::numeric_limits<double>::epsilon() *
                         std::max({std::abs(plus), std::abs(minus), std::abs(base)}) / eps;
    if (error > tol && std::max(std::abs(analytic), std::abs(numeric)) <= floor) {
      ++report.excluded;
      return;
    }
    report.max_rel_error = std::max(report.max_rel_error, error);
    ++report.checked;
  };

  Tensor<double> perturbed = input;
  for (std::size_t i = 0; i < perturbed.size(); ++i) {
    probe(perturbed[i], input_grad[i], [&] { return objective(layer, perturbed, projection); });
  }
  for (Parameter<double>* p : params) {
    const Tensor<double> analytic = p->grad;
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      probe(p->value[i], analytic[i], [&] { return objective(layer, input, projection); });
    }
  }
  zero_grad<double>(params);

  report.pass = report.checked > 0 && report.max_rel_error <= tol;
  return report;
}

}  // namespace bcdnet
