// pag-sr: command-line front end for guided depth super-resolution.

#include <CLI11.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "pagsr/config_file.hpp"
#include "pagsr/data.hpp"
#include "pagsr/eval.hpp"
#include "pagsr/image_io.hpp"
#include "pagsr/training.hpp"
#include "pagsr/weights_io.hpp"

namespace {

using namespace pagsr;

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string one_line(std::string s) {
  for (char& c : s) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

// Builds training samples: patches, optional x8 augmentation, degradation.
std::vector<RgbdSample> build_training_set(const std::vector<DatasetEntry>& entries,
                                           const RunConfig& cfg) {
  DegradationSpec spec;
  spec.factor = cfg.train.scale;
  spec.noise_sigma = cfg.noise_sigma;
  std::vector<RgbdSample> samples;
  std::uint64_t seed = cfg.train.seed;
  for (const auto& e : entries) {
    std::vector<std::string> warnings;
    auto patches = crop_patches(e.depth, e.rgb, cfg.patch_size, cfg.patch_stride, &warnings);
    for (const auto& w : warnings) std::cerr << "warning: " << e.name << ": " << w << '\n';
    for (auto& p : patches) {
      std::string prov = e.name + "@" + std::to_string(p.y) + "," + std::to_string(p.x);
      RgbdSample base = make_sample(std::move(p.depth), std::move(p.rgb), spec, seed++, prov);
      if (cfg.augment) {
        for (auto& a : augment8(base)) {
          // Noise is re-drawn per transform so augmented copies stay independent.
          a.seed = seed++;
          a.depth_lr = degrade(a.depth_hr, spec, a.seed);
          samples.push_back(std::move(a));
        }
      } else {
        samples.push_back(std::move(base));
      }
    }
  }
  return samples;
}

int run_train(const std::string& config_path, const std::string& data_dir, int synthetic,
              const std::string& out_path, const std::string& loss_csv) {
  const RunConfig cfg = load_run_config(config_path);
  std::vector<DatasetEntry> entries;
  if (synthetic > 0) {
    const int size = std::max(cfg.patch_size, cfg.model.factor());
    for (int i = 0; i < synthetic; ++i) {
      auto scene = synthetic_scene(size, size, cfg.train.seed + 1000 + i);
      entries.push_back({"synthetic" + std::to_string(i), scene.depth, scene.rgb});
    }
  } else {
    entries = load_dataset(data_dir);
  }
  const auto samples = build_training_set(entries, cfg);
  if (samples.empty()) throw ConfigError("no training patches produced from " + data_dir);
  std::cerr << "training " << cfg.model.str() << " on " << samples.size() << " samples\n";

  auto weights = init_weights<float>(cfg.model);
  TrainConfig train_cfg = cfg.train;
  if (train_cfg.checkpoint_every > 0 && train_cfg.checkpoint_path.empty()) {
    train_cfg.checkpoint_path = out_path;
  }
  const auto started = std::chrono::steady_clock::now();
  const auto history = train(weights, samples, train_cfg, [&](const LossRecord& r) {
    if (r.step % 10 == 0 || r.step == 1) {
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
      std::cerr << "step " << r.step << " epoch " << r.epoch << " loss " << r.loss << " ("
                << secs << " s)\n";
    }
  });
  save_weights(weights, out_path);
  if (!loss_csv.empty()) {
    std::ofstream out(loss_csv);
    if (!out) throw IoError(loss_csv + ": cannot open for writing");
    write_loss_csv(history, out);
  }
  return 0;
}

int run_eval(const std::string& data_dir, const std::string& scales, const std::string& methods,
             const std::vector<std::string>& weights, const std::string& report_path,
             const std::string& table_path, double sigma, std::uint64_t seed) {
  EvalOptions opts;
  opts.scales.clear();
  for (const auto& s : split_csv(scales)) {
    try {
      opts.scales.push_back(std::stoi(s));
    } catch (const std::exception&) {
      throw ConfigError("invalid scale '" + s + "'");
    }
  }
  opts.methods = split_csv(methods);
  opts.noise_sigma = sigma;
  opts.seed = seed;
  for (const auto& w : weights) {
    // A weight file knows its own factor; key it by that.
    try {
      opts.weights[load_weights(w).config.factor()] = w;
    } catch (const Error& e) {
      std::cerr << "warning: skipping weights " << w << ": " << one_line(e.what()) << '\n';
    }
  }
  const auto report = eval_dataset(load_dataset(data_dir), opts);
  if (report_path.empty() || report_path == "-") {
    report.write_csv(std::cout);
  } else {
    std::ofstream out(report_path);
    if (!out) throw IoError(report_path + ": cannot open for writing");
    report.write_csv(out);
  }
  if (!table_path.empty()) {
    std::ofstream out(table_path);
    if (!out) throw IoError(table_path + ": cannot open for writing");
    report.write_table(out);
  } else {
    report.write_table(std::cerr);
  }
  return 0;
}

int run_degrade(const std::string& in, const std::string& out, int factor, double sigma,
                std::uint64_t seed) {
  const LoadedImage img = load_image(in);
  if (img.pixels.shape().c != 1) throw ShapeError(in + ": depth must be grayscale");
  DegradationSpec spec;
  spec.factor = factor;
  spec.noise_sigma = sigma;
  save_image(degrade(img.pixels, spec, seed), out, img.bit_depth);
  return 0;
}

int run_dump(const std::string& weights_path, const std::string& depth, const std::string& rgb,
             int stage, const std::string& variant, const std::string& out_dir) {
  if (variant != "with" && variant != "without") {
    throw ConfigError("variant must be 'with' or 'without', got '" + variant + "'");
  }
  const auto weights = load_weights(weights_path);
  const auto files = dump_features(weights, load_image(depth).pixels, load_image(rgb).pixels, stage,
                                   variant == "with" ? AttentionVariant::kWith
                                                     : AttentionVariant::kWithout,
                                   out_dir);
  for (const auto& f : files) std::cout << f.string() << '\n';
  return 0;
}

int run_synth(const std::string& out_dir, int count, int size, std::uint64_t seed) {
  std::filesystem::create_directories(out_dir);
  std::ofstream manifest(std::filesystem::path(out_dir) / "manifest.txt");
  for (int i = 0; i < count; ++i) {
    const auto scene = synthetic_scene(size, size, seed + i);
    const std::string name = "scene" + std::to_string(i);
    save_image(scene.depth, std::filesystem::path(out_dir) / (name + "_depth.png"), 16);
    save_image(scene.rgb, std::filesystem::path(out_dir) / (name + "_rgb.png"), 8);
    manifest << name << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Progressive attention-guided depth super-resolution"};
  app.require_subcommand(1);

  std::string config, data, out, loss_csv;
  int synthetic = 0;
  auto* train_cmd = app.add_subcommand("train", "Train a model for one scale factor");
  train_cmd->add_option("--config", config, "Flat key = value config file")->required();
  train_cmd->add_option("--data", data, "Dataset directory (<name>_depth / <name>_rgb pairs)");
  train_cmd->add_option("--synthetic", synthetic, "Train on N generated scenes instead of --data");
  train_cmd->add_option("--out", out, "Output weight file")->required();
  train_cmd->add_option("--loss-csv", loss_csv, "Write per-step loss history here");

  std::string weights, depth, rgb;
  auto* infer_cmd = app.add_subcommand("infer", "Super-resolve one depth map");
  infer_cmd->add_option("--weights", weights)->required();
  infer_cmd->add_option("--depth", depth, "Low-resolution depth map")->required();
  infer_cmd->add_option("--rgb", rgb, "High-resolution guidance image")->required();
  infer_cmd->add_option("--out", out, "Output 16-bit depth map (.png or .pgm)")->required();

  std::string scales = "2,4,8,16", methods = "bicubic", report, table;
  std::vector<std::string> weight_files;
  double sigma = 0.0;
  std::uint64_t seed = 0;
  auto* eval_cmd = app.add_subcommand("eval", "RMSE report over a dataset");
  eval_cmd->add_option("--data", data)->required();
  eval_cmd->add_option("--scales", scales, "Comma-separated factors");
  eval_cmd->add_option("--methods", methods, "Comma-separated: bicubic,pagnet");
  eval_cmd->add_option("--weights", weight_files, "Weight files (one per scale)");
  eval_cmd->add_option("--report", report, "CSV output path ('-' for stdout)");
  eval_cmd->add_option("--table", table, "Aligned text table output path");
  eval_cmd->add_option("--sigma", sigma, "Gaussian noise std in 8-bit units");
  eval_cmd->add_option("--seed", seed);

  int factor = 2;
  std::string in;
  auto* degrade_cmd = app.add_subcommand("degrade", "Synthesize a low-resolution depth map");
  degrade_cmd->add_option("--factor", factor)->required();
  degrade_cmd->add_option("--sigma", sigma);
  degrade_cmd->add_option("--seed", seed);
  degrade_cmd->add_option("--in", in, "High-resolution depth map")->required();
  degrade_cmd->add_option("--out", out)->required();

  int stage = 1;
  std::string variant = "with", out_dir = ".";
  auto* dump_cmd = app.add_subcommand("dump-features", "Write per-channel guidance feature maps");
  dump_cmd->add_option("--weights", weights)->required();
  dump_cmd->add_option("--depth", depth)->required();
  dump_cmd->add_option("--rgb", rgb)->required();
  dump_cmd->add_option("--stage", stage)->required();
  dump_cmd->add_option("--variant", variant, "with|without");
  dump_cmd->add_option("--out-dir", out_dir);

  int count = 4, size = 256;
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic RGB-D dataset");
  synth_cmd->add_option("--out-dir", out_dir)->required();
  synth_cmd->add_option("--count", count);
  synth_cmd->add_option("--size", size);
  synth_cmd->add_option("--seed", seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error: usage: " << one_line(e.what()) << '\n';
    return 2;
  }

  try {
    if (*train_cmd) {
      if (data.empty() && synthetic <= 0) throw ConfigError("train needs --data or --synthetic");
      return run_train(config, data, synthetic, out, loss_csv);
    }
    if (*infer_cmd) {
      infer(weights, depth, rgb, out);
      return 0;
    }
    if (*eval_cmd) return run_eval(data, scales, methods, weight_files, report, table, sigma, seed);
    if (*degrade_cmd) return run_degrade(in, out, factor, sigma, seed);
    if (*dump_cmd) return run_dump(weights, depth, rgb, stage, variant, out_dir);
    if (*synth_cmd) return run_synth(out_dir, count, size, seed);
  } catch (const pagsr::Error& e) {
    std::cerr << "error: " << e.kind() << ": " << one_line(e.what()) << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << one_line(e.what()) << '\n';
    return 1;
  }
  return 0;
}
