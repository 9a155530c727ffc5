#include "bcdnet/commands.hpp"

#include <sys/resource.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "bcdnet/checkpoint.hpp"
#include "bcdnet/gradcheck_suite.hpp"
#include "bcdnet/kernels.hpp"
#include "bcdnet/ops.hpp"
#include "bcdnet/synth.hpp"

namespace bcdnet::app {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

std::size_t peak_rss_bytes() {
  rusage usage{};
  getrusage(RUSAGE_SELF, &usage);
  return static_cast<std::size_t>(usage.ru_maxrss) * 1024;  // Linux reports KiB
}

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

int report_error(std::ostream& err, const std::exception& e) {
  err << "error: " << e.what() << '\n';
  return kExitIoError;
}

template <typename Fn>
int guarded(std::ostream& err, Fn&& body) {
  try {
    return body();
  } catch (const Error& e) {
    return report_error(err, e);
  } catch (const nlohmann::json::exception& e) {
    return report_error(err, e);
  } catch (const fs::filesystem_error& e) {
    return report_error(err, e);
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorKind::IoError, "failed writing " + path.string());
}

struct EpochStats {
  double loss = 0.0;
  double accuracy = 0.0;
};

struct Accumulator {
  double loss_sum = 0.0;
  std::size_t hits = 0;
  std::size_t count = 0;

  void add(const Tensor<float>& logits, const std::vector<std::size_t>& labels, double batch_loss) {
    loss_sum += batch_loss * static_cast<double>(labels.size());
    for (std::size_t n = 0; n < labels.size(); ++n) hits += argmax_row(logits, n) == labels[n];
    count += labels.size();
  }
  EpochStats stats() const {
    return {loss_sum / static_cast<double>(count),
            static_cast<double>(hits) / static_cast<double>(count)};
  }
};

EpochStats evaluate(Model<float>& model, const data::DatasetManifest& manifest, data::Split split,
                    std::size_t batch_size, const data::AugmentPolicy& policy) {
  model.set_mode(nn::Mode::Eval);
  data::BatchStream stream(manifest, split, batch_size, 0, policy);
  Accumulator acc;
  while (auto batch = stream.next()) {
    const Tensor<float> logits = model.forward(batch->images);
    const double loss = softmax_cross_entropy<float>(logits, batch->labels).loss;
    acc.add(logits, batch->labels, loss);
  }
  return acc.stats();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

int cmd_synth(const SynthOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const std::size_t n =
        data::write_synthetic_corpus(options.out_dir, options.n_per_class, options.seed, options.size);
    out << "wrote " << n << " images to " << options.out_dir.string() << '\n';
    return kExitOk;
  });
}

int cmd_train(const TrainOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const TrainConfig& cfg = options.config;
    cfg.validate();
    ScopedExecMode mode(cfg.deterministic ? ExecMode::Deterministic : ExecMode::Fast);

    fs::create_directories(options.out_dir);
    fs::remove(options.out_dir / "DONE");
    const data::DatasetManifest manifest = data::build_manifest(options.data_root, cfg.seed);
    if (manifest.class_names.size() != cfg.model.num_classes) {
      throw Error(ErrorKind::BadConfig, "dataset has " + std::to_string(manifest.class_names.size()) +
                                            " classes, model.num_classes is " +
                                            std::to_string(cfg.model.num_classes));
    }
    manifest.write_tsv(options.out_dir / "manifest.tsv");
    write_text(options.out_dir / "config.json", nlohmann::json(cfg).dump(2) + "\n");

    Model<float> model(cfg.model, cfg.seed);
    Adam<float> adam(model.parameters(), cfg.optim);
    StepLR schedule = cfg.scheduler();

    std::ofstream metrics(options.out_dir / "metrics.csv", std::ios::binary | std::ios::trunc);
    if (!metrics) throw Error(ErrorKind::IoError, "cannot write metrics.csv");
    metrics << kMetricsHeader << '\n';
    std::ofstream timing;
    if (cfg.deterministic) {
      timing.open(options.out_dir / "timing.csv", std::ios::binary | std::ios::trunc);
      timing << "epoch,split,epoch_wall_time_s,peak_rss_bytes\n";
    }

    const nlohmann::json meta_base{{"augment", augment_to_json(cfg.augment)},
                                   {"class_names", manifest.class_names}};
    double best_val = -1.0;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
      const double lr = schedule.lr();
      adam.set_lr(lr);

      const auto train_start = Clock::now();
      model.set_mode(nn::Mode::Train);
      data::BatchStream stream(manifest, data::Split::Train, cfg.batch_size,
                               mix_seed(cfg.seed, 1000 + epoch), cfg.augment);
      Accumulator acc;
      while (auto batch = stream.next()) {
        Tape<float> tape;
        Var<float> logits = model.forward(tape.leaf(std::move(batch->images)));
        Var<float> loss = ops::cross_entropy(logits, batch->labels);
        zero_grad<float>(model.parameters());
        tape.backward(loss);
        adam.step();
        acc.add(logits.value(), batch->labels, loss.value()[0]);
      }
      const EpochStats train = acc.stats();
      const double train_time = seconds_since(train_start);
      const std::size_t train_rss = peak_rss_bytes();

      const auto val_start = Clock::now();
      const EpochStats val =
          evaluate(model, manifest, data::Split::Val, cfg.batch_size, cfg.augment);
      const double val_time = seconds_since(val_start);
      const std::size_t val_rss = peak_rss_bytes();

      auto row = [&](const char* split, const EpochStats& s, double wall, std::size_t rss) {
        metrics << epoch << ',' << split << ',' << fmt(s.loss) << ',' << fmt(s.accuracy) << ','
                << fmt(lr) << ',';
        if (cfg.deterministic) {
          metrics << "0,0\n";
          timing << epoch << ',' << split << ',' << fmt(wall) << ',' << rss << '\n';
        } else {
          metrics << fmt(wall) << ',' << rss << '\n';
        }
      };
      row("train", train, train_time, train_rss);
      row("val", val, val_time, val_rss);
      metrics.flush();

      out << "epoch " << epoch << " lr " << lr << " train loss " << train.loss << " acc "
          << train.accuracy << " | val loss " << val.loss << " acc " << val.accuracy << '\n';

      nlohmann::json meta = meta_base;
      meta["epoch"] = epoch;
      meta["val_accuracy"] = val.accuracy;
      if (val.accuracy > best_val) {
        best_val = val.accuracy;
        save_checkpoint(options.out_dir / "best.ckpt", model, &adam, meta);
      }
      if (epoch + 1 == cfg.epochs) save_checkpoint(options.out_dir / "last.ckpt", model, &adam, meta);
      schedule.step();
    }
    write_text(options.out_dir / "DONE", "");
    return kExitOk;
  });
}

int cmd_eval(const EvalOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    ScopedExecMode mode(options.deterministic ? ExecMode::Deterministic : ExecMode::Fast);
    const Checkpoint ckpt = read_checkpoint(options.checkpoint);
    std::unique_ptr<Model<float>> model = load_model(ckpt);
    data::AugmentPolicy policy;
    policy.target_hw = ckpt.config.input_hw;
    if (ckpt.meta.contains("augment")) policy = augment_from_json(ckpt.meta["augment"], policy);

    const data::DatasetManifest manifest = data::build_manifest(options.data_root, ckpt.seed);
    const EpochStats stats = evaluate(*model, manifest, options.split, 16, policy);
    const std::size_t count = manifest.split(options.split).size();

    nlohmann::json result{{"checkpoint", options.checkpoint.generic_string()},
                          {"split", std::string(data::to_string(options.split))},
                          {"count", count},
                          {"accuracy", stats.accuracy},
                          {"loss", stats.loss}};
    const std::string text = result.dump(2) + "\n";
    out << text;
    const fs::path target =
        options.out_json.value_or(options.checkpoint.parent_path() /
                                  ("eval_" + std::string(data::to_string(options.split)) + ".json"));
    write_text(target, text);
    return kExitOk;
  });
}

int cmd_gradcheck(const GradcheckOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    ScopedExecMode mode(ExecMode::Deterministic);
    GradCheckSuiteOptions suite;
    suite.seeds = options.seeds;
    suite.corrupt = options.corrupt;
    const auto start = Clock::now();
    const std::vector<GradCheckReport> reports = run_gradcheck_suite(suite);

    out << std::left << std::setw(24) << "layer" << std::setw(16) << "max_rel_error"
        << std::setw(10) << "checked" << std::setw(10) << "excluded" << "status\n";
    std::vector<std::string> failed;
    for (const GradCheckReport& r : reports) {
      std::ostringstream e;
      e << std::scientific << std::setprecision(3) << r.max_rel_error;
      out << std::left << std::setw(24) << r.layer << std::setw(16) << e.str() << std::setw(10)
          << r.checked << std::setw(10) << r.excluded << (r.pass ? "PASS" : "FAIL") << '\n';
      if (!r.pass) failed.push_back(r.layer);
    }
    out << "eps " << suite.eps << ", tol " << suite.tol << ", " << suite.seeds << " seeds, "
        << std::fixed << std::setprecision(2) << seconds_since(start) << " s\n";
    if (!failed.empty()) {
      err << "gradient check failed:";
      for (const std::string& name : failed) err << ' ' << name;
      err << '\n';
      return kExitFailed;
    }
    return kExitOk;
  });
}

int cmd_bench(const BenchOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const TrainConfig& cfg = options.config;
    cfg.validate();
    if (options.batches < 1) throw Error(ErrorKind::BadConfig, "bench needs at least one batch");
    ScopedExecMode mode(cfg.deterministic ? ExecMode::Deterministic : ExecMode::Fast);

    const std::size_t n = cfg.batch_size, hw = cfg.model.input_hw;
    Tensor<float> images({n, cfg.model.in_channels, hw, hw});
    std::vector<std::size_t> labels(n);
    if (!options.data_root.empty()) {
      const data::DatasetManifest manifest = data::build_manifest(options.data_root, cfg.seed);
      data::BatchStream stream(manifest, data::Split::Train, n, cfg.seed, cfg.augment);
      data::Batch batch = *stream.next();
      std::copy(batch.images.data().begin(), batch.images.data().end(), images.data().begin());
      for (std::size_t i = 0; i < batch.labels.size(); ++i) labels[i] = batch.labels[i];
    } else {
      Rng rng(cfg.seed);
      for (float& v : images.data()) v = static_cast<float>(rng.uniform(-1.0, 1.0));
      for (auto& l : labels) l = rng.index(cfg.model.num_classes);
    }

    Model<float> model(cfg.model, cfg.seed);
    Adam<float> adam(model.parameters(), cfg.optim);

    auto time_loop = [&](auto&& step) {
      for (std::size_t i = 0; i < options.warmup; ++i) step();
      std::vector<double> times;
      for (std::size_t i = 0; i < options.batches; ++i) {
        const auto start = Clock::now();
        step();
        times.push_back(seconds_since(start));
      }
      return median(times);
    };

    model.set_mode(nn::Mode::Eval);
    const double forward_s = time_loop([&] { model.forward(images); });
    model.set_mode(nn::Mode::Train);
    const double train_s = time_loop([&] {
      Tape<float> tape;
      Var<float> loss = ops::cross_entropy(model.forward(tape.leaf(images)), labels);
      zero_grad<float>(model.parameters());
      tape.backward(loss);
      adam.step();
    });

    nlohmann::json result{{"imgs_per_s_forward", static_cast<double>(n) / forward_s},
                          {"imgs_per_s_train_step", static_cast<double>(n) / train_s},
                          {"peak_rss_bytes", peak_rss_bytes()},
                          {"param_count", model.parameter_count()},
                          {"batch_size", n},
                          {"batches", options.batches},
                          {"warmup", options.warmup},
                          {"mode", cfg.deterministic ? "deterministic" : "fast"}};
    const std::string text = result.dump(2) + "\n";
    out << text;
    if (options.out_json) write_text(*options.out_json, text);
    return kExitOk;
  });
}

int cmd_stats(const StatsOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const data::DatasetManifest manifest = data::build_manifest(options.data_root, options.seed);
    const data::ChannelStats stats = data::compute_channel_stats(manifest, options.target_hw);
    nlohmann::json result{{"augment", {{"mean", stats.mean}, {"std", stats.std}}},
                          {"train_images", manifest.split(data::Split::Train).size()},
                          {"target_hw", options.target_hw}};
    out << result.dump(2) << '\n';
    if (options.config) {
      std::ifstream in(*options.config);
      if (!in) throw Error(ErrorKind::NotFound, "cannot open config " + options.config->string());
      std::stringstream text;
      text << in.rdbuf();
      nlohmann::json cfg = nlohmann::json::parse(text.str(), nullptr, false);
      if (cfg.is_discarded() || !cfg.is_object()) {
        throw Error(ErrorKind::BadConfig, options.config->string() + " is not a JSON object");
      }
      cfg["augment"]["mean"] = stats.mean;
      cfg["augment"]["std"] = stats.std;
      write_text(options.out_config.value_or(*options.config), cfg.dump(2) + "\n");
    } else if (options.out_config) {
      write_text(*options.out_config, result.dump(2) + "\n");
    }
    return kExitOk;
  });
}

}  // namespace bcdnet::app
