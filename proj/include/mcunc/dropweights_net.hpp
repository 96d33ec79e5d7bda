/*
   Copyright 2026 The mcunc Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mcunc/exec.hpp"
#include "mcunc/mc_store.hpp"

namespace mcunc {

/// Dense row-major matrix of features, one item per row.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  std::span<const double> row(std::size_t i) const noexcept {
    return std::span<const double>(data).subspan(i * cols, cols);
  }
  std::span<double> row(std::size_t i) noexcept { return std::span<double>(data).subspan(i * cols, cols); }
};

/// Fully-connected layer; `weights` is out x in, row-major.
struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> weights;
  std::vector<double> bias;
};

/// Either unmasked weights, or one Bernoulli(1 - p) keep-draw per weight entry
/// that is a pure function of (seed, pass, layer, row, column). Kept weights
/// are scaled by 1 / (1 - p). Biases are never masked.
struct MaskMode {
  bool sampled = false;
  std::uint64_t seed = 0;
  std::uint64_t pass = 0;

  static MaskMode off() noexcept { return {}; }
  static MaskMode sample(std::uint64_t seed, std::uint64_t pass) noexcept { return {true, seed, pass}; }
};

/// Uniform [0,1) draw for a single weight entry; the weight is kept when the
/// draw is >= the drop rate.
double mask_uniform(std::uint64_t seed, std::uint64_t pass, std::uint64_t layer, std::uint64_t row,
                    std::uint64_t col) noexcept;

/// ReLU MLP with per-weight dropout masks and class-weighted cross-entropy.
class DropweightNet {
 public:
  /// He-normal weights and zero biases drawn from `seed`.
  DropweightNet(std::vector<std::size_t> layer_sizes, double drop_rate, std::vector<double> class_weights,
                std::uint64_t seed);
  /// Takes explicit parameters (checkpoint loading, tests).
  DropweightNet(std::vector<std::size_t> layer_sizes, double drop_rate, std::vector<double> class_weights,
                std::uint64_t seed, std::vector<DenseLayer> layers);

  const std::vector<std::size_t>& layer_sizes() const noexcept { return layer_sizes_; }
  std::size_t input_dim() const noexcept { return layer_sizes_.front(); }
  std::size_t num_classes() const noexcept { return layer_sizes_.back(); }
  double drop_rate() const noexcept { return drop_rate_; }
  const std::vector<double>& class_weights() const noexcept { return class_weights_; }
  std::uint64_t seed() const noexcept { return seed_; }

  const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
  std::vector<DenseLayer>& layers() noexcept { return layers_; }

  /// Layers with masks applied and scaled for `mode`; unchanged copies when off.
  std::vector<DenseLayer> effective_layers(const MaskMode& mode) const;

 private:
  void validate() const;

  std::vector<std::size_t> layer_sizes_;
  double drop_rate_;
  std::vector<double> class_weights_;
  std::uint64_t seed_;
  std::vector<DenseLayer> layers_;
};

/// Softmax output. Throws DomainError for a non-finite or wrong-length input.
std::vector<double> forward(const DropweightNet& net, std::span<const double> x, const MaskMode& mode);

/// Forward pass through already-masked layers (see DropweightNet::effective_layers).
std::vector<double> forward_layers(std::span<const DenseLayer> layers, std::span<const double> x);

/// Pre-softmax outputs of the final layer.
std::vector<double> logits(const DropweightNet& net, std::span<const double> x, const MaskMode& mode);

inline constexpr double kLossEpsilon = 1e-12;

/// -alpha[label] * ln(p[label] + 1e-12).
double weighted_ce_loss(std::span<const double> output, std::size_t label, std::span<const double> class_weights);

/// Gradients of the batch-mean weighted cross-entropy w.r.t. raw (unmasked) parameters.
struct Gradients {
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> bias;
};

/// Mean weighted cross-entropy over the batch and its gradient. The mask for
/// `mode` is held fixed, so the gradient flows through kept weights only.
double loss_and_gradients(const DropweightNet& net, const Matrix& inputs, std::span<const std::size_t> labels,
                          const MaskMode& mode, Gradients& grads);

/// Mean weighted cross-entropy over the batch without gradients.
double batch_loss(const DropweightNet& net, const Matrix& inputs, std::span<const std::size_t> labels,
                  const MaskMode& mode);

struct TrainOptions {
  std::size_t epochs = 25;
  std::size_t batch_size = 8;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  /// On-plateau learning-rate multiplier; 1 disables it.
  double lr_decay = 1.0;
  std::size_t plateau_patience = 3;
};

struct TrainResult {
  std::vector<double> epoch_loss;
  std::vector<double> epoch_learning_rate;
};

/// Mini-batch Adam with a fresh weight mask for every batch. Throws
/// NumericalError on a non-finite loss.
TrainResult train(DropweightNet& net, const Matrix& inputs, std::span<const std::size_t> labels,
                  const TrainOptions& options);

/// Fraction of rows whose unmasked argmax equals the label.
double accuracy(const DropweightNet& net, const Matrix& inputs, std::span<const std::size_t> labels);

/// T sampled passes per item; pass t uses MaskMode::sample(seed, t) for every item.
McPredictionSet mc_predict(const DropweightNet& net, const Matrix& inputs, std::vector<std::string> item_ids,
                           std::size_t num_passes, std::uint64_t seed, Exec exec = Exec::parallel);

/// d ln p[target] / dx with masks off.
std::vector<double> input_gradient_saliency(const DropweightNet& net, std::span<const double> x,
                                            std::size_t target_class);

std::string checkpoint_json(const DropweightNet& net);
void save_checkpoint(const std::filesystem::path& path, const DropweightNet& net);
DropweightNet load_checkpoint(const std::filesystem::path& path);

}  // namespace mcunc
