#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "tsdeconv/ops.hpp"
#include "tsdeconv/tensor.hpp"

namespace tsdeconv {

using Eigen::VectorXd;

enum class FinalActivation : std::uint8_t { linear = 0, relu = 1 };

/// Architecture of the two-layer convolutional encoder / deconvolutional
/// decoder. Kernels are fixed at 3x3; pooling runs along the time axis only,
/// so each channel keeps its own argmax trace.
struct NetworkConfig {
  int channels = 1;   // C, signal channel count (tensor height)
  int length = 0;     // L, padded series length (tensor width)
  int filters1 = 8;   // feature maps after the first convolution
  int filters2 = 5;   // feature maps at the code layer
  int kernel_h = 3;
  int kernel_w = 3;
  int pool_w = 2;
  bool tie_weights = true;
  FinalActivation final_activation = FinalActivation::linear;

  int code_length() const { return (length + pool_w - 1) / pool_w; }
  int code_dim() const { return filters2 * channels * code_length(); }
  void validate() const;
};

/// All learnable parameters. With tied weights the decoder applies the
/// encoder filters in transpose mode and w1_dec / w2_dec stay empty; gradients
/// of both paths then accumulate into the shared filters.
struct ModelParams {
  Tensord w1;      // [filters1 x 1 x kh x kw]
  VectorXd b1;     // filters1
  Tensord w2;      // [filters2 x filters1 x kh x kw]
  VectorXd b2;     // filters2
  Tensord w2_dec;  // decoder copy of w2's shape (untied only)
  VectorXd c2;     // filters1
  Tensord w1_dec;  // decoder copy of w1's shape (untied only)
  VectorXd c1;     // 1
  bool tied = true;

  const Tensord& decoder_w2() const { return tied ? w2 : w2_dec; }
  const Tensord& decoder_w1() const { return tied ? w1 : w1_dec; }
};

/// Gradients aligned with ModelParams (decoder slots unused when tied).
struct ParamGrads {
  Tensord w1, w2, w2_dec, w1_dec;
  VectorXd b1, b2, c2, c1;
};

/// Adadelta hyperparameters and the training schedule.
struct TrainConfig {
  double learning_rate = 0.1;
  double rho = 0.95;
  double epsilon = 1e-6;
  int epochs = 200;
  int batch_size = 16;
  std::uint64_t seed = 0;

  void validate() const;
};

/// The learned representation: code-layer feature maps plus the pooling
/// switches needed to decode.
struct Code {
  Tensord maps;  // [filters2 x C x code_length]
  PoolIndices pool_indices;
};

/// Every intermediate activation of one forward pass, kept for backprop.
struct ForwardTrace {
  Tensord x;     // input  [1 x C x L]
  Tensord z1;    // conv1 pre-activation
  Tensord h1;    // relu(z1)
  Tensord p;     // pooled
  PoolIndices idx;
  Tensord z2;    // conv2 pre-activation
  Tensord code;  // relu(z2)
  Tensord zd2;   // decoder deconv2 pre-activation
  Tensord d2;    // relu(zd2)
  Tensord u;     // unpooled
  Tensord zd1;   // decoder deconv1 pre-activation
  Tensord y;     // reconstruction
};

ModelParams init_params(const NetworkConfig& cfg, std::uint64_t seed);

ForwardTrace forward(const ModelParams& params, const NetworkConfig& cfg, const Tensord& x);
Code forward_encode(const ModelParams& params, const NetworkConfig& cfg, const Tensord& x);
Tensord forward_decode(const ModelParams& params, const NetworkConfig& cfg, const Code& code);

/// Mean over all elements of (x - y)^2.
double reconstruction_loss(const Tensord& x, const Tensord& y);

/// Exact gradients of reconstruction_loss(trace.x, trace.y) for every entry
/// of ModelParams; unpooling routes gradients only through the recorded max
/// locations.
ParamGrads backward(const ModelParams& params, const NetworkConfig& cfg,
                    const ForwardTrace& trace);

/// Running averages E[g^2] and E[dx^2] per learnable array, initialized to 0.
struct AdadeltaState {
  std::vector<Eigen::ArrayXd> avg_sq_grad;
  std::vector<Eigen::ArrayXd> avg_sq_delta;

  static AdadeltaState like(const ModelParams& params);
};

/// One Adadelta update:
///   E[g^2]  <- rho E[g^2] + (1-rho) g^2
///   step     = sqrt(E[dx^2] + eps) / sqrt(E[g^2] + eps) * g
///   E[dx^2] <- rho E[dx^2] + (1-rho) step^2
///   param   -= lr * step
/// The accumulator tracks the unscaled step; applying the learning rate
/// inside it would shrink every subsequent step by lr and stall training.
void adadelta_step(ModelParams& params, const ParamGrads& grads, AdadeltaState& state,
                   const TrainConfig& tc);

using EpochCallback = std::function<void(int epoch, double mean_loss)>;

/// Trains on shuffled mini-batches; deterministic given the seed. Samples must
/// already be preprocessed to the configured C x L shape.
ModelParams train(const std::vector<Tensord>& samples, const NetworkConfig& cfg,
                  const TrainConfig& tc, const EpochCallback& on_epoch = {});

/// Per-map flat code vectors (row-major over channel then time) plus their
/// concatenation, the inputs to discretization and classification.
struct CodeFeatures {
  std::vector<VectorXd> per_map;
  VectorXd concatenated;
};

CodeFeatures encode_features(const ModelParams& params, const NetworkConfig& cfg, const Tensord& x);

/// Converts a C x L sample matrix into the 1 x C x L input tensor.
Tensord as_input_tensor(const Eigen::Ref<const Eigen::MatrixXd>& values);

void save_model(const std::filesystem::path& path, const NetworkConfig& cfg, const TrainConfig& tc,
                const ModelParams& params);

struct ModelFile {
  NetworkConfig config;
  TrainConfig train_config;
  ModelParams params;
};

ModelFile load_model(const std::filesystem::path& path);

}  // namespace tsdeconv
