// bcdnet command-line driver.
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "bcdnet/commands.hpp"

namespace {

using namespace bcdnet;

struct ConfigFlags {
  std::string preset;
  std::string path;
  std::optional<bool> deterministic;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> batch_size;

  void attach(CLI::App* cmd) {
    cmd->add_option("--preset", preset, "reference or micro (default: reference)")
        ->check(CLI::IsMember({"reference", "micro"}));
    cmd->add_option("--config", path, "JSON config file")->check(CLI::ExistingFile);
    cmd->add_flag("--deterministic,!--fast", deterministic,
                  "serial kernels (default) or OpenMP kernels");
    cmd->add_option("--seed", seed, "random seed");
    cmd->add_option("--epochs", epochs, "number of epochs");
    cmd->add_option("--batch-size", batch_size, "batch size");
  }

  TrainConfig resolve() const {
    TrainConfig cfg = preset == "micro" ? TrainConfig::micro() : TrainConfig::reference();
    if (!path.empty()) {
      std::ifstream in(path);
      nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
      if (j.is_discarded() || !j.is_object()) {
        throw Error(ErrorKind::BadConfig, path + " is not a JSON object");
      }
      if (!preset.empty()) j["preset"] = preset;
      cfg = train_config_from_json(j);
    }
    apply_env_overrides(cfg);
    if (deterministic) cfg.deterministic = *deterministic;
    if (seed) cfg.seed = *seed;
    if (epochs) cfg.epochs = *epochs;
    if (batch_size) cfg.batch_size = *batch_size;
    return cfg;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bcdnet: breast cancer histopathology CNN"};
  app.require_subcommand(1);
  int code = app::kExitOk;

  app::SynthOptions synth;
  auto* synth_cmd = app.add_subcommand("synth", "write a synthetic two-class PNG corpus");
  synth_cmd->add_option("--out", synth.out_dir, "output directory")->required();
  synth_cmd->add_option("--n-per-class", synth.n_per_class, "images per class");
  synth_cmd->add_option("--seed", synth.seed, "random seed");
  synth_cmd->add_option("--size", synth.size, "image side in pixels");
  synth_cmd->callback([&] { code = app::cmd_synth(synth, std::cout, std::cerr); });

  app::TrainOptions train;
  ConfigFlags train_flags;
  auto* train_cmd = app.add_subcommand("train", "train a model");
  train_flags.attach(train_cmd);
  train_cmd->add_option("--data", train.data_root, "dataset root")->required();
  train_cmd->add_option("--out", train.out_dir, "run directory")->required();
  train_cmd->callback([&] {
    try {
      train.config = train_flags.resolve();
    } catch (const Error& e) {
      std::cerr << "error: " << e.what() << '\n';
      code = app::kExitIoError;
      return;
    }
    code = app::cmd_train(train, std::cout, std::cerr);
  });

  app::EvalOptions eval;
  std::string split = "test";
  std::string eval_out;
  bool fast = false;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  eval_cmd->add_option("--checkpoint", eval.checkpoint, "checkpoint file")->required();
  eval_cmd->add_option("--data", eval.data_root, "dataset root")->required();
  eval_cmd->add_option("--split", split, "train, val or test")
      ->check(CLI::IsMember({"train", "val", "test"}));
  eval_cmd->add_option("--out", eval_out, "result JSON path");
  eval_cmd->add_flag("--fast", fast, "OpenMP kernels");
  eval_cmd->callback([&] {
    eval.split = data::parse_split(split);
    if (!eval_out.empty()) eval.out_json = eval_out;
    eval.deterministic = !fast;
    code = app::cmd_eval(eval, std::cout, std::cerr);
  });

  app::GradcheckOptions grad;
  std::string fault;
  auto* grad_cmd = app.add_subcommand("gradcheck", "finite-difference check of every layer");
  grad_cmd->add_option("--seeds", grad.seeds, "random inputs per layer");
  grad_cmd->add_option("--inject-fault", fault, "corrupt one layer's backward")
      ->group("");
  grad_cmd->callback([&] {
    if (!fault.empty()) grad.corrupt = fault;
    code = app::cmd_gradcheck(grad, std::cout, std::cerr);
  });

  app::BenchOptions bench;
  ConfigFlags bench_flags;
  std::string bench_out;
  auto* bench_cmd = app.add_subcommand("bench", "throughput and memory benchmark");
  bench_flags.attach(bench_cmd);
  bench_cmd->add_option("--data", bench.data_root, "dataset root (default: random input)");
  bench_cmd->add_option("--batches", bench.batches, "timed batches");
  bench_cmd->add_option("--warmup", bench.warmup, "untimed warmup batches");
  bench_cmd->add_option("--out", bench_out, "result JSON path");
  bench_cmd->callback([&] {
    try {
      bench.config = bench_flags.resolve();
    } catch (const Error& e) {
      std::cerr << "error: " << e.what() << '\n';
      code = app::kExitIoError;
      return;
    }
    if (!bench_out.empty()) bench.out_json = bench_out;
    code = app::cmd_bench(bench, std::cout, std::cerr);
  });

  app::StatsOptions stats;
  std::string stats_config, stats_out;
  auto* stats_cmd = app.add_subcommand("stats", "per-channel mean/std of the train split");
  stats_cmd->add_option("--data", stats.data_root, "dataset root")->required();
  stats_cmd->add_option("--seed", stats.seed, "split seed");
  stats_cmd->add_option("--target-hw", stats.target_hw, "resize side");
  stats_cmd->add_option("--config", stats_config, "config to update");
  stats_cmd->add_option("--out", stats_out, "where to write the result");
  stats_cmd->callback([&] {
    if (!stats_config.empty()) stats.config = stats_config;
    if (!stats_out.empty()) stats.out_config = stats_out;
    code = app::cmd_stats(stats, std::cout, std::cerr);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int status = app.exit(e);
    return status == 0 ? 0 : app::kExitIoError;
  }
  return code;
}
