#include "pagsr/model.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "pagsr/resample.hpp"

namespace pagsr {

void ModelConfig::validate() const {
  if (upsample_exponent < 1 || upsample_exponent > 4) {
    throw ConfigError("upsample exponent must be in [1, 4], got " +
                      std::to_string(upsample_exponent));
  }
  if (base_channels < 2 || base_channels % 2 != 0) {
    throw ConfigError("base channels must be even and >= 2, got " +
                      std::to_string(base_channels));
  }
  if (rdb_layers < 1) throw ConfigError("rdb layers must be >= 1");
  if (growth_rate < 1) throw ConfigError("growth rate must be >= 1");
  if (guidance_channels < 1) throw ConfigError("guidance channels must be >= 1");
}

std::string ModelConfig::str() const {
  std::ostringstream os;
  os << "l=" << upsample_exponent << " C=" << base_channels << " D=" << rdb_layers
     << " G=" << growth_rate << " Cg=" << guidance_channels;
  return os.str();
}

namespace names {
std::string stage(int k) { return "stage" + std::to_string(k); }
std::string rdn_a(int k) { return stage(k) + ".rdn_a"; }
std::string rdn_b(int k) { return stage(k) + ".rdn_b"; }
std::string agfe(int k) { return stage(k) + ".agfe"; }
}  // namespace names

namespace {

struct LayerSpec {
  std::string prefix;
  int cout, cin, kh, kw;
};

void rdn_layers(std::vector<LayerSpec>& out, const std::string& prefix, const ModelConfig& cfg) {
  const int c = cfg.base_channels;
  const int g = cfg.growth_rate;
  for (int i = 0; i < kRdbPerRdn; ++i) {
    const std::string rdb = prefix + ".rdb" + std::to_string(i);
    for (int j = 0; j < cfg.rdb_layers; ++j) {
      out.push_back({rdb + ".conv" + std::to_string(j), g, c + j * g, 3, 3});
    }
    out.push_back({rdb + ".fuse", c, c + cfg.rdb_layers * g, 1, 1});
  }
  out.push_back({prefix + ".gff", c, kRdbPerRdn * c, 1, 1});
  out.push_back({prefix + ".refine", c, c, 3, 3});
}

std::vector<LayerSpec> layer_specs(const ModelConfig& cfg) {
  cfg.validate();
  const int c = cfg.base_channels;
  const int cg = cfg.guidance_channels;
  std::vector<LayerSpec> out;
  out.push_back({"entry", c, 1, 3, 3});
  out.push_back({"guide.entry", cg, 3, 3, 3});
  for (int j = 1; j < cfg.upsample_exponent; ++j) {
    const std::string level = "guide.level" + std::to_string(j);
    out.push_back({level + ".conv", cg, cg, 3, 3});
    out.push_back({level + ".down", cg, cg, 2, 2});
  }
  for (int k = 1; k <= cfg.upsample_exponent; ++k) {
    rdn_layers(out, names::rdn_a(k), cfg);
    out.push_back({names::stage(k) + ".expand", 4 * c, c, 1, 1});
    const std::string agfe = names::agfe(k);
    out.push_back({agfe + ".guide", cg, cg, 3, 3});
    out.push_back({agfe + ".att1a", c / 2, c, 9, 1});
    out.push_back({agfe + ".att1b", 1, c / 2, 1, 9});
    out.push_back({agfe + ".att2a", c / 2, c, 1, 9});
    out.push_back({agfe + ".att2b", 1, c / 2, 9, 1});
    out.push_back({names::stage(k) + ".fuse", c, c + cg, 3, 3});
    rdn_layers(out, names::rdn_b(k), cfg);
  }
  out.push_back({"recon", 1, c, 3, 3});
  return out;
}

template <typename T>
ModelWeights<T> build_weights(const ModelConfig& config, bool randomize) {
  ModelWeights<T> w{config, {}};
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (const LayerSpec& l : layer_specs(config)) {
    Tensor<T> weight = w.params.add(l.prefix + ".weight", Shape{l.cout, l.cin, l.kh, l.kw});
    w.params.add(l.prefix + ".bias", Shape{l.cout, 1, 1, 1});
    if (randomize) {
      const double std = std::sqrt(2.0 / (l.cin * l.kh * l.kw));
      for (T& v : weight.data()) v = static_cast<T>(std * normal(rng));
    }
  }
  return w;
}

template <typename T>
const Tensor<T>& layer_weight(const ParameterStore<T>& p, const std::string& prefix) {
  return p.get(prefix + ".weight");
}

// Sub-stage 1: refine depth features and upsample them x2.
template <typename T>
Tensor<T> upsample_features(const Tensor<T>& df, const ModelWeights<T>& w, int k, Tape<T>* tape) {
  const Tensor<T> refined = rdn_forward(df, w, names::rdn_a(k), tape);
  const Tensor<T> expanded = conv_layer(refined, w.params, names::stage(k) + ".expand", tape);
  return ops::pixel_shuffle(expanded, 2, tape);
}

// Sub-stage 2: fuse attended guidance with the upsampled features.
template <typename T>
Tensor<T> fuse_guidance(const Tensor<T>& up, const Tensor<T>& attended, const ModelWeights<T>& w,
                        int k, Tape<T>* tape) {
  const Tensor<T> joined = ops::concat_channels<T>({up, attended}, tape);
  const Tensor<T> fused = conv_layer(joined, w.params, names::stage(k) + ".fuse", tape);
  const Tensor<T> refined = rdn_forward(fused, w, names::rdn_b(k), tape);
  return ops::add(refined, up, tape);
}

template <typename T>
void check_stage_inputs(const Tensor<T>& df, const Tensor<T>& gf, const ModelConfig& cfg) {
  const Shape& ds = df.shape();
  const Shape& gs = gf.shape();
  if (ds.c != cfg.base_channels) {
    throw ShapeError("stage: depth features have " + std::to_string(ds.c) +
                     " channels, config expects " + std::to_string(cfg.base_channels));
  }
  if (gs.c != cfg.guidance_channels) {
    throw ShapeError("stage: guidance features have " + std::to_string(gs.c) +
                     " channels, config expects " + std::to_string(cfg.guidance_channels));
  }
  if (gs.n != ds.n || gs.h != 2 * ds.h || gs.w != 2 * ds.w) {
    throw ShapeError("stage: guidance " + gs.str() + " must be exactly twice the resolution of " +
                     "depth features " + ds.str());
  }
}

template <typename T>
void check_network_inputs(const Tensor<T>& dl, const Tensor<T>& ih, const ModelConfig& cfg) {
  const Shape& ds = dl.shape();
  const Shape& is = ih.shape();
  const int f = cfg.factor();
  if (ds.c != 1) throw ShapeError("pagnet: depth must have 1 channel, got " + ds.str());
  if (is.c != 3) throw ShapeError("pagnet: guidance must have 3 channels, got " + is.str());
  if (ds.n != is.n || is.h != ds.h * f || is.w != ds.w * f) {
    throw ShapeError("pagnet: guidance " + is.str() + " must be exactly " + std::to_string(f) +
                     "x the depth " + ds.str());
  }
}

}  // namespace

std::size_t parameter_count(const ModelConfig& config) {
  std::size_t total = 0;
  for (const LayerSpec& l : layer_specs(config)) {
    total += static_cast<std::size_t>(l.cout) * l.cin * l.kh * l.kw + l.cout;
  }
  return total;
}

template <typename T>
ModelWeights<T> init_weights(const ModelConfig& config) {
  return build_weights<T>(config, true);
}

template <typename T>
ModelWeights<T> zero_weights(const ModelConfig& config) {
  return build_weights<T>(config, false);
}

template <typename T>
Tensor<T> conv_layer(const Tensor<T>& x, const ParameterStore<T>& params, const std::string& prefix,
                     Tape<T>* tape, const ops::ConvParams* params_override) {
  const Tensor<T>& weight = layer_weight(params, prefix);
  const ops::ConvParams p = params_override != nullptr
                                ? *params_override
                                : ops::same_padding(weight.shape().h, weight.shape().w);
  return ops::conv2d(x, weight, params.get(prefix + ".bias"), p, tape);
}

template <typename T>
Tensor<T> rdb_forward(const Tensor<T>& x, const ModelWeights<T>& weights, const std::string& prefix,
                      Tape<T>* tape) {
  const ModelConfig& cfg = weights.config;
  if (x.shape().c != cfg.base_channels) {
    throw ShapeError(prefix + ": input has " + std::to_string(x.shape().c) +
                     " channels, expected " + std::to_string(cfg.base_channels));
  }
  std::vector<Tensor<T>> features{x};
  for (int j = 0; j < cfg.rdb_layers; ++j) {
    const Tensor<T> dense = features.size() == 1 ? x : ops::concat_channels(features, tape);
    const Tensor<T> conv = conv_layer(dense, weights.params, prefix + ".conv" + std::to_string(j), tape);
    features.push_back(ops::relu(conv, tape));
  }
  const Tensor<T> fused =
      conv_layer(ops::concat_channels(features, tape), weights.params, prefix + ".fuse", tape);
  return ops::add(fused, x, tape);
}

template <typename T>
Tensor<T> rdn_forward(const Tensor<T>& x, const ModelWeights<T>& weights, const std::string& prefix,
                      Tape<T>* tape) {
  std::vector<Tensor<T>> outputs;
  Tensor<T> h = x;
  for (int i = 0; i < kRdbPerRdn; ++i) {
    h = rdb_forward(h, weights, prefix + ".rdb" + std::to_string(i), tape);
    outputs.push_back(h);
  }
  const Tensor<T> global = conv_layer(ops::concat_channels(outputs, tape), weights.params,
                                      prefix + ".gff", tape);
  const Tensor<T> refined = conv_layer(global, weights.params, prefix + ".refine", tape);
  return ops::add(refined, x, tape);
}

template <typename T>
Tensor<T> attention_map(const Tensor<T>& df, const ModelWeights<T>& weights,
                        const std::string& prefix, Tape<T>* tape) {
  if (df.shape().c != weights.config.base_channels) {
    throw ShapeError(prefix + ": depth features have " + std::to_string(df.shape().c) +
                     " channels, expected " + std::to_string(weights.config.base_channels));
  }
  const auto& p = weights.params;
  const Tensor<T> set1 = conv_layer(conv_layer(df, p, prefix + ".att1a", tape), p,
                                    prefix + ".att1b", tape);
  const Tensor<T> set2 = conv_layer(conv_layer(df, p, prefix + ".att2a", tape), p,
                                    prefix + ".att2b", tape);
  return ops::sigmoid(ops::add(set1, set2, tape), tape);
}

template <typename T>
Tensor<T> agfe_forward(const Tensor<T>& df, const Tensor<T>& gf, const ModelWeights<T>& weights,
                       const std::string& prefix, Tape<T>* tape) {
  const Shape& ds = df.shape();
  const Shape& gs = gf.shape();
  if (ds.n != gs.n || ds.h != gs.h || ds.w != gs.w) {
    throw ShapeError(prefix + ": depth features " + ds.str() + " and guidance " + gs.str() +
                     " differ in N, H or W");
  }
  const Tensor<T> guidance = conv_layer(gf, weights.params, prefix + ".guide", tape);
  return ops::mul_broadcast(guidance, attention_map(df, weights, prefix, tape), tape);
}

template <typename T>
std::vector<Tensor<T>> guidance_pyramid(const Tensor<T>& ih, const ModelWeights<T>& weights,
                                        Tape<T>* tape) {
  const int l = weights.config.upsample_exponent;
  const Shape& s = ih.shape();
  const int div = 1 << (l - 1);
  if (s.c != 3) throw ShapeError("guidance_pyramid: expected 3 channels, got " + s.str());
  if (s.h % div != 0 || s.w % div != 0) {
    throw ShapeError("guidance_pyramid: height and width must be divisible by " +
                     std::to_string(div) + ", got " + std::to_string(s.h) + "x" +
                     std::to_string(s.w));
  }
  const ops::ConvParams down{{2, 2}, {0, 0}};
  std::vector<Tensor<T>> levels;
  levels.push_back(conv_layer(ih, weights.params, "guide.entry", tape));
  for (int j = 1; j < l; ++j) {
    const std::string level = "guide.level" + std::to_string(j);
    const Tensor<T> conv = conv_layer(levels.back(), weights.params, level + ".conv", tape);
    levels.push_back(conv_layer(conv, weights.params, level + ".down", tape, &down));
  }
  return levels;
}

template <typename T>
Tensor<T> stage_forward(const Tensor<T>& df, const Tensor<T>& gf, const ModelWeights<T>& weights,
                        int k, Tape<T>* tape) {
  check_stage_inputs(df, gf, weights.config);
  const Tensor<T> up = upsample_features(df, weights, k, tape);
  const Tensor<T> attended = agfe_forward(up, gf, weights, names::agfe(k), tape);
  return fuse_guidance(up, attended, weights, k, tape);
}

template <typename T>
Tensor<T> pagnet_forward(const Tensor<T>& dl, const Tensor<T>& ih, const ModelWeights<T>& weights,
                         Tape<T>* tape) {
  const ModelConfig& cfg = weights.config;
  check_network_inputs(dl, ih, cfg);
  const int l = cfg.upsample_exponent;
  const auto pyramid = guidance_pyramid(ih, weights, tape);
  Tensor<T> features = conv_layer(dl, weights.params, "entry", tape);
  for (int k = 1; k <= l; ++k) {
    // Stage k outputs resolution H / 2^(l-k), which is pyramid level l-k.
    features = stage_forward(features, pyramid[l - k], weights, k, tape);
  }
  Tensor<T> out = conv_layer(features, weights.params, "recon", tape);
  if (cfg.global_residual) {
    out = ops::add(out, bicubic_resample(dl, ih.shape().h, ih.shape().w), tape);
  }
  return out;
}

template <typename T>
StageFeatures<T> stage_features(const Tensor<T>& dl, const Tensor<T>& ih,
                                const ModelWeights<T>& weights, int k) {
  const ModelConfig& cfg = weights.config;
  if (k < 1 || k > cfg.upsample_exponent) {
    throw ConfigError("stage " + std::to_string(k) + " out of range [1, " +
                      std::to_string(cfg.upsample_exponent) + "]");
  }
  check_network_inputs(dl, ih, cfg);
  const int l = cfg.upsample_exponent;
  const auto pyramid = guidance_pyramid<T>(ih, weights, nullptr);
  Tensor<T> features = conv_layer<T>(dl, weights.params, "entry", nullptr);
  for (int s = 1; s < k; ++s) features = stage_forward<T>(features, pyramid[l - s], weights, s);
  const Tensor<T> up = upsample_features<T>(features, weights, k, nullptr);
  StageFeatures<T> out;
  out.guidance = conv_layer<T>(pyramid[l - k], weights.params, names::agfe(k) + ".guide", nullptr);
  out.attention = attention_map<T>(up, weights, names::agfe(k));
  out.attended = ops::mul_broadcast(out.guidance, out.attention);
  return out;
}

#define PAGSR_INSTANTIATE_MODEL(T)                                                              \
  template ModelWeights<T> init_weights<T>(const ModelConfig&);                                 \
  template ModelWeights<T> zero_weights<T>(const ModelConfig&);                                 \
  template Tensor<T> conv_layer(const Tensor<T>&, const ParameterStore<T>&, const std::string&, \
                                Tape<T>*, const ops::ConvParams*);                              \
  template Tensor<T> rdb_forward(const Tensor<T>&, const ModelWeights<T>&, const std::string&,  \
                                 Tape<T>*);                                                     \
  template Tensor<T> rdn_forward(const Tensor<T>&, const ModelWeights<T>&, const std::string&,  \
                                 Tape<T>*);                                                     \
  template Tensor<T> attention_map(const Tensor<T>&, const ModelWeights<T>&,                    \
                                   const std::string&, Tape<T>*);                               \
  template Tensor<T> agfe_forward(const Tensor<T>&, const Tensor<T>&, const ModelWeights<T>&,   \
                                  const std::string&, Tape<T>*);                                \
  template std::vector<Tensor<T>> guidance_pyramid(const Tensor<T>&, const ModelWeights<T>&,    \
                                                   Tape<T>*);                                   \
  template Tensor<T> stage_forward(const Tensor<T>&, const Tensor<T>&, const ModelWeights<T>&,  \
                                   int, Tape<T>*);                                              \
  template Tensor<T> pagnet_forward(const Tensor<T>&, const Tensor<T>&, const ModelWeights<T>&, \
                                    Tape<T>*);                                                  \
  template StageFeatures<T> stage_features(const Tensor<T>&, const Tensor<T>&,                  \
                                           const ModelWeights<T>&, int);

PAGSR_INSTANTIATE_MODEL(float)
PAGSR_INSTANTIATE_MODEL(double)

}  // namespace pagsr
