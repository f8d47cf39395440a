#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pagsr/ops.hpp"
#include "pagsr/parameters.hpp"

namespace pagsr {

struct ModelConfig {
  int upsample_exponent = 1;   // l; total factor is 2^l
  int base_channels = 64;      // C
  int rdb_layers = 4;          // D
  int growth_rate = 32;        // G
  int guidance_channels = 64;  // Cg
  std::uint64_t seed = 0;
  bool global_residual = true;  // add bicubic(D^l) to the reconstruction

  int factor() const { return 1 << upsample_exponent; }
  void validate() const;
  std::string str() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Number of residual dense blocks per residual dense network.
inline constexpr int kRdbPerRdn = 3;

template <typename T>
struct ModelWeights {
  ModelConfig config;
  ParameterStore<T> params;

  template <typename U>
  ModelWeights<U> cast() const {
    return ModelWeights<U>{config, params.template cast<U>()};
  }
};

/// Registers every layer the config implies with He-scaled Gaussian weights
/// (std = sqrt(2 / fan_in)) and zero biases. Deterministic in config.seed.
template <typename T>
ModelWeights<T> init_weights(const ModelConfig& config);

/// Same layout as init_weights with every value zero.
template <typename T>
ModelWeights<T> zero_weights(const ModelConfig& config);

/// Closed-form scalar parameter count for a configuration.
std::size_t parameter_count(const ModelConfig& config);

// Weight names. Each layer is stored as "<prefix>.weight" and "<prefix>.bias".
namespace names {
std::string stage(int k);  // k counts from 1
std::string rdn_a(int k);
std::string rdn_b(int k);
std::string agfe(int k);
}  // namespace names

/// Convolution with the layer's stored weight/bias; padding keeps spatial
/// size unless params says otherwise.
template <typename T>
Tensor<T> conv_layer(const Tensor<T>& x, const ParameterStore<T>& params, const std::string& prefix,
                     Tape<T>* tape, const ops::ConvParams* params_override = nullptr);

/// D densely connected 3x3 conv+ReLU layers, 1x1 local fusion, local residual.
template <typename T>
Tensor<T> rdb_forward(const Tensor<T>& x, const ModelWeights<T>& weights, const std::string& prefix,
                      Tape<T>* tape = nullptr);

/// Three chained RDBs, concatenated, 1x1 fusion, 3x3 refinement, residual.
template <typename T>
Tensor<T> rdn_forward(const Tensor<T>& x, const ModelWeights<T>& weights, const std::string& prefix,
                      Tape<T>* tape = nullptr);

/// Spatial attention from depth features: sigmoid of two separable branches
/// (9x1 then 1x9, and 1x9 then 9x1), each narrowing C -> C/2 -> 1.
template <typename T>
Tensor<T> attention_map(const Tensor<T>& df, const ModelWeights<T>& weights,
                        const std::string& prefix, Tape<T>* tape = nullptr);

/// Attention-guided feature extraction: 3x3 conv of the guidance features,
/// gated per pixel by attention_map(df).
template <typename T>
Tensor<T> agfe_forward(const Tensor<T>& df, const Tensor<T>& gf, const ModelWeights<T>& weights,
                       const std::string& prefix, Tape<T>* tape = nullptr);

/// Guidance features at every stage resolution, finest first:
/// element 0 is full resolution, element j is downsampled by 2^j.
template <typename T>
std::vector<Tensor<T>> guidance_pyramid(const Tensor<T>& ih, const ModelWeights<T>& weights,
                                        Tape<T>* tape = nullptr);

/// One x2 stage (k counts from 1). df is [N,C,h,w], gf is [N,Cg,2h,2w].
template <typename T>
Tensor<T> stage_forward(const Tensor<T>& df, const Tensor<T>& gf, const ModelWeights<T>& weights,
                        int k, Tape<T>* tape = nullptr);

/// Full network: dl [N,1,H/2^l,W/2^l] and ih [N,3,H,W] -> [N,1,H,W].
template <typename T>
Tensor<T> pagnet_forward(const Tensor<T>& dl, const Tensor<T>& ih, const ModelWeights<T>& weights,
                         Tape<T>* tape = nullptr);

/// Intermediate guidance features of one stage, for visualisation.
template <typename T>
struct StageFeatures {
  Tensor<T> guidance;   // 3x3-conv'd guidance features before gating [N,Cg,H,W]
  Tensor<T> attention;  // [N,1,H,W]
  Tensor<T> attended;   // guidance gated by attention
};

/// Runs the network up to stage k and returns that stage's AGFE internals.
template <typename T>
StageFeatures<T> stage_features(const Tensor<T>& dl, const Tensor<T>& ih,
                                const ModelWeights<T>& weights, int k);

}  // namespace pagsr
