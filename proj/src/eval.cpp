#include "pagsr/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>

#include "pagsr/image_io.hpp"
#include "pagsr/resample.hpp"
#include "pagsr/weights_io.hpp"

namespace pagsr {

namespace {

void require_same_dims(const Tensor32& a, const Tensor32& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(what) + ": maps differ in size, " + a.shape().str() + " vs " +
                     b.shape().str());
  }
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

}  // namespace

double rmse(const Tensor32& pred, const Tensor32& gt) {
  require_same_dims(pred, gt, "rmse");
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.numel(); ++i) {
    const double d = (static_cast<double>(pred[i]) - gt[i]) * 255.0;
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(pred.numel()));
}

double masked_rmse(const Tensor32& pred, const Tensor32& gt) {
  require_same_dims(pred, gt, "masked_rmse");
  double acc = 0.0;
  std::size_t valid = 0;
  for (std::size_t i = 0; i < pred.numel(); ++i) {
    if (!(gt[i] > 0.0f)) continue;
    const double d = (static_cast<double>(pred[i]) - gt[i]) * 255.0;
    acc += d * d;
    ++valid;
  }
  return valid == 0 ? 0.0 : std::sqrt(acc / static_cast<double>(valid));
}

void EvalReport::write_csv(std::ostream& out) const {
  out << "image,scale,method,rmse,error\n";
  for (const auto& r : rows) {
    out << r.image << ',' << r.scale << ',' << r.method << ',';
    if (r.error.empty()) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.4f", r.rmse);
      out << buf;
    }
    out << ',' << r.error << '\n';
  }
}

void EvalReport::write_table(std::ostream& out) const {
  for (const auto& [key, value] : metadata) out << "# " << key << ": " << value << '\n';
  std::set<std::string> methods;
  std::set<int> scales;
  std::vector<std::string> images;
  for (const auto& r : rows) {
    methods.insert(r.method);
    scales.insert(r.scale);
    if (std::find(images.begin(), images.end(), r.image) == images.end()) images.push_back(r.image);
  }
  std::size_t name_width = 6;
  for (const auto& i : images) name_width = std::max(name_width, i.size());
  for (const auto& m : methods) {
    out << '\n' << m << '\n' << std::left << std::setw(static_cast<int>(name_width)) << "image";
    for (int s : scales) out << std::right << std::setw(10) << (std::to_string(s) + "x");
    out << '\n';
    for (const auto& img : images) {
      out << std::left << std::setw(static_cast<int>(name_width)) << img;
      for (int s : scales) {
        std::string cell = "-";
        for (const auto& r : rows) {
          if (r.image == img && r.scale == s && r.method == m) {
            if (r.error.empty()) {
              char buf[32];
              std::snprintf(buf, sizeof(buf), "%.2f", r.rmse);
              cell = buf;
            } else {
              cell = "err";
            }
          }
        }
        out << std::right << std::setw(10) << cell;
      }
      out << '\n';
    }
  }
}

Tensor32 center_crop_to_multiple(const Tensor32& t, int factor) {
  const Shape& s = t.shape();
  const int h = s.h - s.h % factor;
  const int w = s.w - s.w % factor;
  if (h < 1 || w < 1) {
    throw ShapeError("image " + std::to_string(s.h) + "x" + std::to_string(s.w) +
                     " is smaller than factor " + std::to_string(factor));
  }
  if (h == s.h && w == s.w) return t;
  const int y0 = (s.h - h) / 2;
  const int x0 = (s.w - w) / 2;
  Tensor32 out(Shape{s.n, s.c, h, w});
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) out.at(n, c, y, x) = t.at(n, c, y0 + y, x0 + x);
  return out;
}

Tensor32 super_resolve(const ModelWeights<float>& weights, const Tensor32& depth_lr,
                       const Tensor32& rgb) {
  const int f = weights.config.factor();
  const Shape& ds = depth_lr.shape();
  const Shape& rs = rgb.shape();
  if (rs.h != ds.h * f || rs.w != ds.w * f) {
    throw ShapeError("guidance is " + std::to_string(rs.h) + "x" + std::to_string(rs.w) +
                     " but depth is " + std::to_string(ds.h) + "x" + std::to_string(ds.w) +
                     "; expected ratio " + std::to_string(f) + " for these weights");
  }
  Tensor32 out = pagnet_forward<float>(depth_lr, rgb, weights, nullptr);
  for (float& v : out.data()) v = std::clamp(v, 0.0f, 1.0f);
  return out;
}

EvalReport eval_dataset(const std::vector<DatasetEntry>& dataset, const EvalOptions& options) {
  EvalReport report;
  std::vector<int> scales = options.scales;
  std::sort(scales.begin(), scales.end());
  scales.erase(std::unique(scales.begin(), scales.end()), scales.end());
  std::vector<std::string> methods = options.methods;
  std::sort(methods.begin(), methods.end());
  methods.erase(std::unique(methods.begin(), methods.end()), methods.end());
  for (const auto& m : methods) {
    if (m != "bicubic" && m != "pagnet") throw ConfigError("unknown method '" + m + "'");
  }
  std::vector<const DatasetEntry*> images;
  for (const auto& e : dataset) images.push_back(&e);
  std::sort(images.begin(), images.end(),
            [](const DatasetEntry* a, const DatasetEntry* b) { return a->name < b->name; });

  std::ostringstream desc;
  desc << "sigma=" << options.noise_sigma << ";seed=" << options.seed << ";scales=";
  for (int s : scales) desc << s << ' ';
  desc << ";methods=";
  for (const auto& m : methods) desc << m << ' ';
  std::string weights_list;
  for (const auto& [s, p] : options.weights) {
    desc << ";w" << s << '=' << p.string();
    weights_list += (weights_list.empty() ? "" : ",") + std::to_string(s) + ":" + p.string();
  }
  report.metadata["config_hash"] = hex(fnv1a(desc.str()));
  report.metadata["weights"] = weights_list.empty() ? "-" : weights_list;
  report.metadata["timestamp"] = std::to_string(
      std::chrono::duration_cast<std::chrono::seconds>(
          std::chrono::system_clock::now().time_since_epoch())
          .count());

  std::map<int, ModelWeights<float>> loaded;
  std::map<int, std::string> load_errors;
  auto weights_for = [&](int scale) -> const ModelWeights<float>* {
    if (loaded.count(scale)) return &loaded.at(scale);
    if (load_errors.count(scale)) return nullptr;
    auto it = options.weights.find(scale);
    if (it == options.weights.end()) {
      load_errors[scale] = "no weights for scale " + std::to_string(scale);
      return nullptr;
    }
    try {
      auto w = load_weights(it->second);
      if (w.config.factor() != scale) {
        load_errors[scale] = "weights are for factor " + std::to_string(w.config.factor());
        return nullptr;
      }
      return &loaded.emplace(scale, std::move(w)).first->second;
    } catch (const Error& e) {
      load_errors[scale] = e.what();
      return nullptr;
    }
  };

  for (const DatasetEntry* img : images) {
    for (int scale : scales) {
      const Tensor32 gt = center_crop_to_multiple(img->depth, scale);
      const Tensor32 rgb = center_crop_to_multiple(img->rgb, scale);
      if (gt.shape().h != img->depth.shape().h || gt.shape().w != img->depth.shape().w) {
        report.metadata["crop." + img->name + "." + std::to_string(scale)] =
            std::to_string(gt.shape().h) + "x" + std::to_string(gt.shape().w);
      }
      DegradationSpec spec;
      spec.factor = scale;
      spec.noise_sigma = options.noise_sigma;
      const Tensor32 lr = degrade(gt, spec, options.seed);
      for (const auto& method : methods) {
        EvalRow row{img->name, scale, method, 0.0, {}};
        if (method == "bicubic") {
          row.rmse = masked_rmse(bicubic_resample(lr, gt.shape().h, gt.shape().w), gt);
        } else if (const ModelWeights<float>* w = weights_for(scale)) {
          row.rmse = masked_rmse(super_resolve(*w, lr, rgb), gt);
        } else {
          row.error = load_errors.at(scale);
        }
        report.rows.push_back(std::move(row));
      }
    }
  }
  return report;
}

void infer(const std::filesystem::path& weights_path, const std::filesystem::path& depth_lr_path,
           const std::filesystem::path& rgb_path, const std::filesystem::path& out_path) {
  const ModelWeights<float> weights = load_weights(weights_path);
  const LoadedImage depth = load_image(depth_lr_path);
  const LoadedImage rgb = load_image(rgb_path);
  if (depth.pixels.shape().c != 1) throw ShapeError(depth_lr_path.string() + ": depth must be grayscale");
  if (rgb.pixels.shape().c != 3) throw ShapeError(rgb_path.string() + ": guidance must be RGB");
  save_image(super_resolve(weights, depth.pixels, rgb.pixels), out_path, 16);
}

FeatureDump compute_features(const ModelWeights<float>& weights, const Tensor32& depth_lr,
                             const Tensor32& rgb, int stage, AttentionVariant variant) {
  const StageFeatures<float> f = stage_features<float>(depth_lr, rgb, weights, stage);
  return {variant == AttentionVariant::kWith ? f.attended : f.guidance, f.attention};
}

std::vector<std::filesystem::path> dump_features(const ModelWeights<float>& weights,
                                                 const Tensor32& depth_lr, const Tensor32& rgb,
                                                 int stage, AttentionVariant variant,
                                                 const std::filesystem::path& out_dir) {
  const FeatureDump dump = compute_features(weights, depth_lr, rgb, stage, variant);
  std::filesystem::create_directories(out_dir);
  const std::string tag = "stage" + std::to_string(stage) + "_" +
                          (variant == AttentionVariant::kWith ? "with" : "without");
  const Shape& s = dump.features.shape();
  std::vector<std::filesystem::path> written;
  for (int c = 0; c < s.c; ++c) {
    Tensor32 plane(Shape{1, 1, s.h, s.w});
    const float* src = dump.features.raw() + dump.features.offset(0, c, 0, 0);
    const auto [lo, hi] = std::minmax_element(src, src + s.plane());
    const float range = *hi - *lo;
    for (std::size_t i = 0; i < s.plane(); ++i) {
      plane[i] = range > 0.0f ? (src[i] - *lo) / range : 0.0f;
    }
    char name[64];
    std::snprintf(name, sizeof(name), "%s_ch%03d.pgm", tag.c_str(), c);
    written.push_back(out_dir / name);
    save_image(plane, written.back(), 16);
  }
  Tensor32 att = dump.attention.reshaped(Shape{1, 1, s.h, s.w});
  written.push_back(out_dir / ("stage" + std::to_string(stage) + "_attention.pgm"));
  save_image(att, written.back(), 16);
  return written;
}

}  // namespace pagsr
