#include "pagsr/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>

#include "pagsr/image_io.hpp"
#include "pagsr/resample.hpp"

namespace pagsr {

namespace {

bool is_power_of_two(int v) { return v >= 1 && (v & (v - 1)) == 0; }

}  // namespace

void DegradationSpec::validate() const {
  if (!is_power_of_two(factor) || factor > 16) {
    throw ConfigError("degradation factor must be a power of two in [1, 16], got " +
                      std::to_string(factor));
  }
  if (!(noise_sigma >= 0.0)) throw ConfigError("noise sigma must be non-negative");
}

Tensor32 degrade(const Tensor32& depth_hr, const DegradationSpec& spec, std::uint64_t seed) {
  spec.validate();
  const Shape& s = depth_hr.shape();
  if (s.h % spec.factor != 0 || s.w % spec.factor != 0) {
    throw ShapeError("degrade: image " + std::to_string(s.h) + "x" + std::to_string(s.w) +
                     " is not divisible by factor " + std::to_string(spec.factor));
  }
  Tensor32 lr = bicubic_resample(depth_hr, s.h / spec.factor, s.w / spec.factor);
  if (spec.noise_sigma > 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, spec.noise_sigma / 255.0);
    for (float& v : lr.data()) {
      v = static_cast<float>(std::clamp(v + noise(rng), 0.0, 1.0));
    }
  }
  if (!spec.missing_mask.empty()) {
    const std::size_t plane = lr.shape().plane();
    if (spec.missing_mask.size() != plane) {
      throw ShapeError("degrade: missing mask has " + std::to_string(spec.missing_mask.size()) +
                       " entries, LR plane has " + std::to_string(plane));
    }
    for (std::size_t i = 0; i < lr.numel(); ++i) {
      if (spec.missing_mask[i % plane] != 0) lr[i] = 0.0f;
    }
  }
  return lr;
}

RgbdSample make_sample(Tensor32 depth_hr, Tensor32 rgb, const DegradationSpec& spec,
                       std::uint64_t seed, std::string provenance) {
  const Shape& ds = depth_hr.shape();
  const Shape& rs = rgb.shape();
  if (ds.c != 1 || rs.c != 3 || ds.h != rs.h || ds.w != rs.w) {
    throw ShapeError("make_sample: depth " + ds.str() + " and rgb " + rs.str() +
                     " are not an aligned [1,1,H,W]/[1,3,H,W] pair");
  }
  RgbdSample out;
  out.depth_lr = degrade(depth_hr, spec, seed);
  out.depth_hr = std::move(depth_hr);
  out.rgb = std::move(rgb);
  out.scale = spec.factor;
  out.provenance = std::move(provenance);
  out.degradation = spec;
  out.seed = seed;
  return out;
}

std::size_t patch_count(int h, int w, int size, int stride) {
  if (h < size || w < size) return 0;
  return static_cast<std::size_t>((h - size) / stride + 1) * ((w - size) / stride + 1);
}

namespace {

Tensor32 crop(const Tensor32& t, int y0, int x0, int size) {
  const Shape& s = t.shape();
  Tensor32 out(Shape{s.n, s.c, size, size});
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c)
      for (int y = 0; y < size; ++y) {
        const float* src = t.raw() + t.offset(n, c, y0 + y, x0);
        std::copy(src, src + size, out.raw() + out.offset(n, c, y, 0));
      }
  return out;
}

}  // namespace

std::vector<PatchPair> crop_patches(const Tensor32& depth, const Tensor32& rgb, int size,
                                    int stride, std::vector<std::string>* warnings) {
  if (size < 1 || stride < 1) throw ConfigError("crop_patches: size and stride must be positive");
  const Shape& ds = depth.shape();
  const Shape& rs = rgb.shape();
  if (ds.h != rs.h || ds.w != rs.w) {
    throw ShapeError("crop_patches: depth " + ds.str() + " and rgb " + rs.str() + " differ");
  }
  std::vector<PatchPair> out;
  if (ds.h < size || ds.w < size) {
    if (warnings != nullptr) {
      warnings->push_back("image " + std::to_string(ds.h) + "x" + std::to_string(ds.w) +
                          " is smaller than patch size " + std::to_string(size));
    }
    return out;
  }
  for (int y = 0; y + size <= ds.h; y += stride) {
    for (int x = 0; x + size <= ds.w; x += stride) {
      out.push_back(PatchPair{crop(depth, y, x, size), crop(rgb, y, x, size), y, x});
    }
  }
  return out;
}

namespace {

int flip_of(Dihedral d) { return static_cast<int>(d) / 4; }
int rot_of(Dihedral d) { return static_cast<int>(d) % 4; }
Dihedral make_dihedral(int flip, int rot) {
  return static_cast<Dihedral>(flip * 4 + ((rot % 4) + 4) % 4);
}

}  // namespace

Dihedral compose(Dihedral a, Dihedral b) {
  // Each element is F^f R^k. Since R F = F R^-1:
  // (F^fb R^kb)(F^fa R^ka) = F^(fa^fb) R^(ka + (fa ? -kb : kb)).
  const int fa = flip_of(a);
  const int fb = flip_of(b);
  return make_dihedral(fa ^ fb, rot_of(a) + (fa != 0 ? -rot_of(b) : rot_of(b)));
}

Tensor32 apply_dihedral(const Tensor32& t, Dihedral d) {
  const Shape& s = t.shape();
  if (s.h != s.w) {
    throw ShapeError("dihedral transform needs a square patch, got " + std::to_string(s.h) +
                     "x" + std::to_string(s.w));
  }
  const int m = s.h - 1;
  const int rot = rot_of(d);
  const bool flip = flip_of(d) != 0;
  Tensor32 out(s);
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c)
      for (int y = 0; y < s.h; ++y)
        for (int x = 0; x < s.w; ++x) {
          // Output pixel (y, x) reads the rotated image at (y, x'), x' undoing the flip.
          const int ry = y;
          const int rx = flip ? m - x : x;
          int sy = ry;
          int sx = rx;
          switch (rot) {
            case 1: sy = rx; sx = m - ry; break;      // counter-clockwise 90
            case 2: sy = m - ry; sx = m - rx; break;
            case 3: sy = m - rx; sx = ry; break;
            default: break;
          }
          out.at(n, c, y, x) = t.at(n, c, sy, sx);
        }
  return out;
}

std::array<RgbdSample, 8> augment8(const RgbdSample& sample) {
  const Shape& s = sample.depth_hr.shape();
  if (s.h != s.w) {
    throw ShapeError("augment8: patch must be square, got " + std::to_string(s.h) + "x" +
                     std::to_string(s.w));
  }
  std::array<RgbdSample, 8> out;
  for (std::size_t i = 0; i < kAllDihedral.size(); ++i) {
    const Dihedral d = kAllDihedral[i];
    RgbdSample& a = out[i];
    a = sample;
    a.depth_hr = apply_dihedral(sample.depth_hr, d);
    a.rgb = apply_dihedral(sample.rgb, d);
    a.depth_lr = apply_dihedral(sample.depth_lr, d);
    a.provenance = sample.provenance + "#d4-" + std::to_string(i);
  }
  return out;
}

SyntheticScene synthetic_scene(int h, int w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  SyntheticScene scene{Tensor32(Shape{1, 1, h, w}), Tensor32(Shape{1, 3, h, w})};

  struct Plane {
    double y0, x0, y1, x1;  // rectangle in relative coordinates
    double base, gy, gx;    // depth = base + gy*y + gx*x
    double r, g, b;
  };
  std::vector<Plane> planes;
  planes.push_back({0.0, 0.0, 1.0, 1.0, 0.6 + 0.2 * unit(rng), 0.1 * (unit(rng) - 0.5),
                    0.1 * (unit(rng) - 0.5), unit(rng), unit(rng), unit(rng)});
  const int objects = 3 + static_cast<int>(unit(rng) * 3);
  for (int i = 0; i < objects; ++i) {
    const double cy = unit(rng), cx = unit(rng);
    const double hh = 0.1 + 0.25 * unit(rng), hw = 0.1 + 0.25 * unit(rng);
    planes.push_back({cy - hh, cx - hw, cy + hh, cx + hw, 0.15 + 0.4 * unit(rng),
                      0.2 * (unit(rng) - 0.5), 0.2 * (unit(rng) - 0.5), unit(rng), unit(rng),
                      unit(rng)});
  }
  // Texture painted across everything, independent of depth edges.
  const double freq = 6.0 + 10.0 * unit(rng);
  const double phase = 6.283185307179586 * unit(rng);
  const double ty0 = unit(rng) * 0.5, tx0 = unit(rng) * 0.5;

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double ry = (y + 0.5) / h;
      const double rx = (x + 0.5) / w;
      const Plane* hit = &planes.front();
      for (const Plane& p : planes) {
        if (ry >= p.y0 && ry < p.y1 && rx >= p.x0 && rx < p.x1) hit = &p;
      }
      const double depth = hit->base + hit->gy * (ry - 0.5) + hit->gx * (rx - 0.5);
      scene.depth.at(0, 0, y, x) = static_cast<float>(std::clamp(depth, 0.02, 0.98));
      double tex = 0.0;
      if (ry > ty0 && ry < ty0 + 0.5 && rx > tx0 && rx < tx0 + 0.5) {
        tex = 0.25 * std::sin(freq * 6.283185307179586 * (rx + 0.5 * ry) + phase);
      }
      const double shade = 0.8 + 0.2 * (1.0 - depth);
      const double rgb[3] = {hit->r, hit->g, hit->b};
      for (int c = 0; c < 3; ++c) {
        scene.rgb.at(0, c, y, x) =
            static_cast<float>(std::clamp(shade * rgb[c] * 0.75 + tex + 0.1, 0.0, 1.0));
      }
    }
  }
  return scene;
}

namespace {

std::filesystem::path find_with_ext(const std::filesystem::path& root, const std::string& stem,
                                    std::initializer_list<const char*> exts) {
  for (const char* ext : exts) {
    auto p = root / (stem + ext);
    if (std::filesystem::exists(p)) return p;
  }
  return {};
}

}  // namespace

std::vector<DatasetEntry> load_dataset(const std::filesystem::path& root) {
  if (!std::filesystem::is_directory(root)) {
    throw IoError(root.string() + ": dataset directory does not exist");
  }
  std::set<std::string> names;
  const auto manifest = root / "manifest.txt";
  if (std::filesystem::exists(manifest)) {
    std::ifstream in(manifest);
    std::string line;
    while (std::getline(in, line)) {
      line.erase(std::find_if(line.rbegin(), line.rend(), [](unsigned char c) { return !std::isspace(c); }).base(),
                 line.end());
      if (!line.empty() && line.front() != '#') names.insert(line);
    }
  } else {
    const std::string suffix = "_depth";
    for (const auto& e : std::filesystem::directory_iterator(root)) {
      const std::string stem = e.path().stem().string();
      if (stem.size() > suffix.size() &&
          stem.compare(stem.size() - suffix.size(), suffix.size(), suffix) == 0) {
        names.insert(stem.substr(0, stem.size() - suffix.size()));
      }
    }
  }
  std::vector<DatasetEntry> out;
  for (const auto& name : names) {
    const auto depth_path = find_with_ext(root, name + "_depth", {".png", ".pgm"});
    const auto rgb_path = find_with_ext(root, name + "_rgb", {".png", ".ppm"});
    if (depth_path.empty() || rgb_path.empty()) {
      throw IoError(root.string() + ": missing depth or rgb file for '" + name + "'");
    }
    LoadedImage depth = load_image(depth_path);
    LoadedImage rgb = load_image(rgb_path);
    if (depth.pixels.shape().c != 1) throw IoError(depth_path.string() + ": depth must be grayscale");
    if (rgb.pixels.shape().c != 3) throw IoError(rgb_path.string() + ": guidance must be RGB");
    const Shape& ds = depth.pixels.shape();
    const Shape& rs = rgb.pixels.shape();
    if (ds.h != rs.h || ds.w != rs.w) {
      throw ShapeError("dataset entry '" + name + "': depth " + ds.str() + " and rgb " +
                       rs.str() + " differ in size");
    }
    out.push_back(DatasetEntry{name, std::move(depth.pixels), std::move(rgb.pixels)});
  }
  return out;
}

}  // namespace pagsr
