#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "transtte/encoding.hpp"
#include "transtte/kernels.hpp"

namespace transtte {

/// Architecture hyperparameters. `toy` is the small test configuration,
/// `slim` the 12-layer, width-80 preset.
struct ModelConfig {
  std::uint32_t layers = 2;
  std::uint32_t width = 16;
  std::uint32_t heads = 4;
  std::uint32_t ffn_mult = 2;
  std::uint16_t max_degree = kDefaultMaxDegree;
  std::uint16_t max_hops = kDefaultMaxHops;
  std::uint32_t feature_dim = 0;
  std::uint64_t seed = 0;

  static ModelConfig toy(std::uint32_t feature_dim, std::uint64_t seed = 0);
  static ModelConfig slim(std::uint32_t feature_dim, std::uint64_t seed = 0);

  /// Throws InvalidConfig.
  void validate() const;

  std::size_t head_dim() const { return width / heads; }
  std::size_t ffn_width() const { return std::size_t{ffn_mult} * width; }
  std::size_t degree_buckets() const { return std::size_t{max_degree} + 1; }
  std::size_t hop_buckets() const { return std::size_t{max_hops} + 2; }
  std::size_t readout_in() const { return width + kTimeFeatures; }

  bool operator==(const ModelConfig&) const = default;
};

/// Location of one tensor inside the flat parameter vector.
struct Slot {
  std::size_t offset = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t size() const { return rows * cols; }
};

struct LayerSlots {
  Slot ln1_gain, ln1_shift;
  Slot wq, wk, wv, wo;
  Slot ln2_gain, ln2_shift;
  Slot ffn_w1, ffn_b1, ffn_w2, ffn_b2;
};

/// Declared field order of all learnable tensors. Checkpoints store the
/// blobs in this order.
struct ParamLayout {
  Slot in_proj_w, in_proj_b;
  Slot z_in, z_out;      // (max_degree + 1) x width
  Slot spatial_bias;     // heads x (max_hops + 2), shared by all layers
  std::vector<LayerSlots> layers;
  Slot readout_w1, readout_b1, readout_w2, readout_b2;
  std::size_t total = 0;

  static ParamLayout build(const ModelConfig& cfg);
  std::vector<std::pair<std::string, Slot>> named() const;
};

struct ModelParams {
  ModelConfig config;
  ParamLayout layout;
  std::vector<double> values;
  // Training-target standardization.
  double target_mean = 0.0;
  double target_std = 1.0;

  MatView view(const Slot& s) { return {values.data() + s.offset, s.rows, s.cols}; }
  ConstMatView view(const Slot& s) const { return {values.data() + s.offset, s.rows, s.cols}; }
};

/// Deterministic in cfg.seed. Weight matrices ~ U(-1/sqrt(width), 1/sqrt(width)),
/// degree embeddings ~ N(0, 0.02), spatial bias / biases / norm shifts zero,
/// norm gains one.
ModelParams init_params(const ModelConfig& cfg);

/// h0_i = x_i W_in + b_in + z_in[deg_in_i] + z_out[deg_out_i]. Throws ShapeMismatch.
Matrix input_embedding(const ModelParams& params, const EncodedRoute& route);

/// The spatial bias matrix of one head: B[i][j] = b_phi[head][phi(i, j)].
Matrix attention_bias(const ModelParams& params, std::size_t head, const SpatialEncodingTable& phi);

/// Multi-head self-attention of layer `layer` on its (already normalized)
/// input `x`, with the shared spatial bias added to every head's scores.
/// When `probs` is given it receives the per-head softmax matrices.
Matrix attention(const ModelParams& params, std::size_t layer, const Matrix& x,
                 const SpatialEncodingTable& phi, std::vector<Matrix>* probs = nullptr);

/// Forward pass returning the standardized prediction (before de-normalization).
double forward_normalized(const ModelParams& params, const EncodedRoute& route);

/// Predicted travel time in seconds. Throws ShapeMismatch, NonFiniteActivation.
double forward(const ModelParams& params, const EncodedRoute& route);

inline constexpr double kHuberDelta = 0.05;

/// Smoothed L1 on a standardized residual: r^2 / (2 delta) inside
/// [-delta, delta], |r| - delta / 2 outside.
double huber(double residual);
double huber_derivative(double residual);

/// Training loss of one prediction, in standardized units. Throws NonFinite.
double loss(double pred_s, double truth_s, double target_std);

struct LabeledRoute {
  EncodedRoute route;
  double travel_time_s = 0.0;
};

/// Mean batch loss; writes the exact gradient of that mean into `grad`
/// (sized like params.values). Samples run in parallel, each into its own
/// buffer, and are reduced in batch order.
double batch_gradient(const ModelParams& params, std::span<const LabeledRoute> batch,
                      std::span<double> grad);

namespace serial {
double batch_gradient(const ModelParams& params, std::span<const LabeledRoute> batch,
                      std::span<double> grad);
}  // namespace serial

}  // namespace transtte
