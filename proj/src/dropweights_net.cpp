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

#include "mcunc/dropweights_net.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "json.hpp"
#include "mcunc/csv.hpp"
#include "mcunc/errors.hpp"

namespace mcunc {

namespace {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

struct Trace {
  std::vector<std::vector<double>> act;  // act[0] = input, act[l + 1] = output of layer l
  std::vector<std::vector<double>> pre;  // pre-activations per layer
  std::vector<double> probs;
};

void softmax_inplace(std::vector<double>& z) {
  const double zmax = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double& v : z) {
    v = std::exp(v - zmax);
    sum += v;
  }
  for (double& v : z) v /= sum;
}

Trace forward_trace(std::span<const DenseLayer> layers, std::span<const double> x) {
  Trace tr;
  tr.act.emplace_back(x.begin(), x.end());
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    const auto& a = tr.act.back();
    std::vector<double> z(layer.out);
    for (std::size_t r = 0; r < layer.out; ++r) {
      const double* w = layer.weights.data() + r * layer.in;
      double s = layer.bias[r];
      for (std::size_t c = 0; c < layer.in; ++c) s += w[c] * a[c];
      z[r] = s;
    }
    tr.pre.push_back(z);
    if (l + 1 < layers.size()) {
      for (double& v : z) v = v > 0.0 ? v : 0.0;
      tr.act.push_back(std::move(z));
    } else {
      softmax_inplace(z);
      tr.probs = std::move(z);
    }
  }
  return tr;
}

void check_input(const DropweightNet& net, std::span<const double> x) {
  if (x.size() != net.input_dim()) {
    throw DomainError("input has " + std::to_string(x.size()) + " features, network expects " +
                      std::to_string(net.input_dim()));
  }
  for (double v : x) {
    if (!std::isfinite(v)) throw DomainError("non-finite network input");
  }
}

// Accumulates d(loss)/d(effective params) for one item given dL/dz at the output.
void backprop(std::span<const DenseLayer> layers, const Trace& tr, std::vector<double> delta, Gradients& g) {
  for (std::size_t l = layers.size(); l-- > 0;) {
    const auto& layer = layers[l];
    const auto& a = tr.act[l];
    auto& gw = g.weights[l];
    auto& gb = g.bias[l];
    for (std::size_t r = 0; r < layer.out; ++r) {
      gb[r] += delta[r];
      double* row = gw.data() + r * layer.in;
      for (std::size_t c = 0; c < layer.in; ++c) row[c] += delta[r] * a[c];
    }
    if (l == 0) break;
    std::vector<double> prev(layer.in, 0.0);
    for (std::size_t r = 0; r < layer.out; ++r) {
      const double* w = layer.weights.data() + r * layer.in;
      for (std::size_t c = 0; c < layer.in; ++c) prev[c] += w[c] * delta[r];
    }
    const auto& z = tr.pre[l - 1];
    for (std::size_t c = 0; c < layer.in; ++c) {
      if (!(z[c] > 0.0)) prev[c] = 0.0;
    }
    delta = std::move(prev);
  }
}

// Gradient of (1/B) * -alpha_y ln(p_y + eps) w.r.t. the output logits.
std::vector<double> output_delta(const std::vector<double>& p, std::size_t label, double alpha, double inv_batch) {
  const double scale = -alpha * p[label] / (p[label] + kLossEpsilon) * inv_batch;
  std::vector<double> d(p.size());
  for (std::size_t k = 0; k < p.size(); ++k) d[k] = scale * ((k == label ? 1.0 : 0.0) - p[k]);
  return d;
}

Gradients zero_gradients(const DropweightNet& net) {
  Gradients g;
  for (const auto& layer : net.layers()) {
    g.weights.emplace_back(layer.weights.size(), 0.0);
    g.bias.emplace_back(layer.bias.size(), 0.0);
  }
  return g;
}

void check_batch(const DropweightNet& net, const Matrix& inputs, std::span<const std::size_t> labels) {
  if (inputs.rows != labels.size()) throw StructuralError("inputs and labels differ in length");
  if (inputs.cols != net.input_dim()) throw StructuralError("input width does not match the network");
  for (auto y : labels) {
    if (y >= net.num_classes()) throw DomainError("label out of range");
  }
}

}  // namespace

double mask_uniform(std::uint64_t seed, std::uint64_t pass, std::uint64_t layer, std::uint64_t row,
                    std::uint64_t col) noexcept {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ pass);
  h = splitmix64(h ^ layer);
  h = splitmix64(h ^ row);
  h = splitmix64(h ^ col);
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

DropweightNet::DropweightNet(std::vector<std::size_t> layer_sizes, double drop_rate,
                             std::vector<double> class_weights, std::uint64_t seed)
    : layer_sizes_(std::move(layer_sizes)),
      drop_rate_(drop_rate),
      class_weights_(std::move(class_weights)),
      seed_(seed) {
  if (layer_sizes_.size() < 2) throw DomainError("network needs at least an input and an output layer");
  std::mt19937_64 rng(seed_);
  for (std::size_t l = 0; l + 1 < layer_sizes_.size(); ++l) {
    DenseLayer layer;
    layer.in = layer_sizes_[l];
    layer.out = layer_sizes_[l + 1];
    std::normal_distribution<double> init(0.0, std::sqrt(2.0 / static_cast<double>(std::max<std::size_t>(layer.in, 1))));
    layer.weights.resize(layer.in * layer.out);
    for (double& w : layer.weights) w = init(rng);
    layer.bias.assign(layer.out, 0.0);
    layers_.push_back(std::move(layer));
  }
  validate();
}

DropweightNet::DropweightNet(std::vector<std::size_t> layer_sizes, double drop_rate,
                             std::vector<double> class_weights, std::uint64_t seed, std::vector<DenseLayer> layers)
    : layer_sizes_(std::move(layer_sizes)),
      drop_rate_(drop_rate),
      class_weights_(std::move(class_weights)),
      seed_(seed),
      layers_(std::move(layers)) {
  validate();
}

void DropweightNet::validate() const {
  if (layer_sizes_.size() < 2) throw DomainError("network needs at least an input and an output layer");
  if (layer_sizes_.back() < 2) throw DomainError("network needs at least two classes");
  for (auto s : layer_sizes_) {
    if (s == 0) throw DomainError("layer sizes must be positive");
  }
  if (!(drop_rate_ >= 0.0 && drop_rate_ < 1.0)) throw DomainError("drop rate must lie in [0, 1)");
  if (class_weights_.size() != layer_sizes_.back()) throw DomainError("one class weight per output class required");
  for (double a : class_weights_) {
    if (!(a > 0.0) || !std::isfinite(a)) throw DomainError("class weights must be positive");
  }
  if (layers_.size() + 1 != layer_sizes_.size()) throw StructuralError("layer count does not match layer_sizes");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    if (layer.in != layer_sizes_[l] || layer.out != layer_sizes_[l + 1] ||
        layer.weights.size() != layer.in * layer.out || layer.bias.size() != layer.out) {
      throw StructuralError("layer " + std::to_string(l) + " shape does not match layer_sizes");
    }
  }
}

std::vector<DenseLayer> DropweightNet::effective_layers(const MaskMode& mode) const {
  std::vector<DenseLayer> out = layers_;
  if (!mode.sampled) return out;
  const double scale = 1.0 / (1.0 - drop_rate_);
  for (std::size_t l = 0; l < out.size(); ++l) {
    auto& layer = out[l];
    for (std::size_t r = 0; r < layer.out; ++r) {
      for (std::size_t c = 0; c < layer.in; ++c) {
        double& w = layer.weights[r * layer.in + c];
        const bool keep = mask_uniform(mode.seed, mode.pass, l, r, c) >= drop_rate_;
        w = keep ? w * scale : 0.0;
      }
    }
  }
  return out;
}

std::vector<double> forward_layers(std::span<const DenseLayer> layers, std::span<const double> x) {
  return forward_trace(layers, x).probs;
}

std::vector<double> forward(const DropweightNet& net, std::span<const double> x, const MaskMode& mode) {
  check_input(net, x);
  if (!mode.sampled) return forward_layers(net.layers(), x);
  const auto layers = net.effective_layers(mode);
  return forward_layers(layers, x);
}

std::vector<double> logits(const DropweightNet& net, std::span<const double> x, const MaskMode& mode) {
  check_input(net, x);
  const auto layers = net.effective_layers(mode);
  return forward_trace(layers, x).pre.back();
}

double weighted_ce_loss(std::span<const double> output, std::size_t label, std::span<const double> class_weights) {
  if (label >= output.size() || label >= class_weights.size()) throw DomainError("label out of range");
  return -class_weights[label] * std::log(output[label] + kLossEpsilon);
}

double loss_and_gradients(const DropweightNet& net, const Matrix& inputs, std::span<const std::size_t> labels,
                          const MaskMode& mode, Gradients& grads) {
  check_batch(net, inputs, labels);
  if (inputs.rows == 0) throw DomainError("empty batch");
  const auto layers = net.effective_layers(mode);
  Gradients eff = zero_gradients(net);
  const double inv_batch = 1.0 / static_cast<double>(inputs.rows);
  double loss = 0.0;
  for (std::size_t i = 0; i < inputs.rows; ++i) {
    const auto tr = forward_trace(layers, inputs.row(i));
    const double alpha = net.class_weights()[labels[i]];
    loss += weighted_ce_loss(tr.probs, labels[i], net.class_weights());
    backprop(layers, tr, output_delta(tr.probs, labels[i], alpha, inv_batch), eff);
  }

  // Chain through the mask: d w_eff / d w = keep / (1 - p).
  if (mode.sampled) {
    const double scale = 1.0 / (1.0 - net.drop_rate());
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const auto& layer = layers[l];
      for (std::size_t r = 0; r < layer.out; ++r) {
        for (std::size_t c = 0; c < layer.in; ++c) {
          const bool keep = mask_uniform(mode.seed, mode.pass, l, r, c) >= net.drop_rate();
          eff.weights[l][r * layer.in + c] *= keep ? scale : 0.0;
        }
      }
    }
  }
  grads = std::move(eff);
  return loss * inv_batch;
}

double batch_loss(const DropweightNet& net, const Matrix& inputs, std::span<const std::size_t> labels,
                  const MaskMode& mode) {
  check_batch(net, inputs, labels);
  if (inputs.rows == 0) throw DomainError("empty batch");
  const auto layers = net.effective_layers(mode);
  double loss = 0.0;
  for (std::size_t i = 0; i < inputs.rows; ++i) {
    loss += weighted_ce_loss(forward_layers(layers, inputs.row(i)), labels[i], net.class_weights());
  }
  return loss / static_cast<double>(inputs.rows);
}

TrainResult train(DropweightNet& net, const Matrix& inputs, std::span<const std::size_t> labels,
                  const TrainOptions& options) {
  check_batch(net, inputs, labels);
  if (options.epochs < 1) throw DomainError("epochs must be >= 1");
  if (options.batch_size < 1) throw DomainError("batch size must be >= 1");
  if (inputs.rows == 0) throw DomainError("empty training set");
  if (!(options.learning_rate >= 0.0)) throw DomainError("learning rate must be >= 0");

  auto& layers = net.layers();
  std::vector<std::vector<double>> m_w, v_w, m_b, v_b;
  for (const auto& layer : layers) {
    m_w.emplace_back(layer.weights.size(), 0.0);
    v_w.emplace_back(layer.weights.size(), 0.0);
    m_b.emplace_back(layer.bias.size(), 0.0);
    v_b.emplace_back(layer.bias.size(), 0.0);
  }

  std::mt19937_64 shuffle_rng(splitmix64(options.seed ^ 0x7368756666ULL));
  const std::uint64_t mask_seed = splitmix64(options.seed ^ 0x6d61736bULL);
  std::vector<std::size_t> order(inputs.rows);
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainResult result;
  double lr = options.learning_rate;
  double best = std::numeric_limits<double>::infinity();
  std::size_t stale = 0;
  std::uint64_t step = 0;
  Gradients g;

  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
      const std::size_t end = std::min(order.size(), start + options.batch_size);
      Matrix batch(end - start, inputs.cols);
      std::vector<std::size_t> batch_labels(end - start);
      for (std::size_t i = start; i < end; ++i) {
        std::copy_n(inputs.row(order[i]).begin(), inputs.cols, batch.row(i - start).begin());
        batch_labels[i - start] = labels[order[i]];
      }
      const double loss = loss_and_gradients(net, batch, batch_labels, MaskMode::sample(mask_seed, step), g);
      if (!std::isfinite(loss)) {
        throw NumericalError("non-finite loss at epoch " + std::to_string(epoch) + ", step " + std::to_string(step));
      }
      epoch_loss += loss * static_cast<double>(end - start);
      ++step;

      const double bc1 = 1.0 - std::pow(options.beta1, static_cast<double>(step));
      const double bc2 = 1.0 - std::pow(options.beta2, static_cast<double>(step));
      const auto update = [&](std::vector<double>& param, const std::vector<double>& grad, std::vector<double>& m,
                              std::vector<double>& v) {
        for (std::size_t k = 0; k < param.size(); ++k) {
          m[k] = options.beta1 * m[k] + (1.0 - options.beta1) * grad[k];
          v[k] = options.beta2 * v[k] + (1.0 - options.beta2) * grad[k] * grad[k];
          param[k] -= lr * (m[k] / bc1) / (std::sqrt(v[k] / bc2) + options.adam_epsilon);
        }
      };
      for (std::size_t l = 0; l < layers.size(); ++l) {
        update(layers[l].weights, g.weights[l], m_w[l], v_w[l]);
        update(layers[l].bias, g.bias[l], m_b[l], v_b[l]);
      }
    }
    epoch_loss /= static_cast<double>(order.size());
    result.epoch_loss.push_back(epoch_loss);
    result.epoch_learning_rate.push_back(lr);

    if (options.lr_decay != 1.0) {
      if (epoch_loss < best) {
        best = epoch_loss;
        stale = 0;
      } else if (++stale >= options.plateau_patience) {
        lr *= options.lr_decay;
        stale = 0;
      }
    }
  }
  return result;
}

double accuracy(const DropweightNet& net, const Matrix& inputs, std::span<const std::size_t> labels) {
  check_batch(net, inputs, labels);
  if (inputs.rows == 0) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < inputs.rows; ++i) {
    const auto p = forward_layers(net.layers(), inputs.row(i));
    if (static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin()) == labels[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(inputs.rows);
}

McPredictionSet mc_predict(const DropweightNet& net, const Matrix& inputs, std::vector<std::string> item_ids,
                           std::size_t num_passes, std::uint64_t seed, Exec exec) {
  if (num_passes < 1) throw DomainError("number of MC passes must be >= 1");
  if (inputs.cols != net.input_dim()) throw StructuralError("input width does not match the network");
  if (item_ids.size() != inputs.rows) throw StructuralError("one item id per input row required");
  for (std::size_t i = 0; i < inputs.rows; ++i) check_input(net, inputs.row(i));

  const std::size_t N = inputs.rows;
  const std::size_t C = net.num_classes();
  std::vector<double> probs(num_passes * N * C);
  std::vector<std::vector<DenseLayer>> nets(num_passes);
  const auto passes = static_cast<std::ptrdiff_t>(num_passes);
  const auto pairs = static_cast<std::ptrdiff_t>(num_passes * N);

  const auto build = [&](std::ptrdiff_t t) {
    nets[static_cast<std::size_t>(t)] = net.effective_layers(MaskMode::sample(seed, static_cast<std::uint64_t>(t)));
  };
  const auto run = [&](std::ptrdiff_t k) {
    const auto t = static_cast<std::size_t>(k) / N;
    const auto n = static_cast<std::size_t>(k) % N;
    const auto p = forward_layers(nets[t], inputs.row(n));
    std::copy(p.begin(), p.end(), probs.begin() + static_cast<std::ptrdiff_t>((t * N + n) * C));
  };

  if (exec == Exec::serial) {
    for (std::ptrdiff_t t = 0; t < passes; ++t) build(t);
    for (std::ptrdiff_t k = 0; k < pairs; ++k) run(k);
  } else {
#pragma omp parallel
    {
#pragma omp for schedule(static)
      for (std::ptrdiff_t t = 0; t < passes; ++t) build(t);
#pragma omp for schedule(static)
      for (std::ptrdiff_t k = 0; k < pairs; ++k) run(k);
    }
  }
  return McPredictionSet(std::move(item_ids), num_passes, C, std::move(probs));
}

std::vector<double> input_gradient_saliency(const DropweightNet& net, std::span<const double> x,
                                            std::size_t target_class) {
  check_input(net, x);
  if (target_class >= net.num_classes()) throw DomainError("target class out of range");
  const auto& layers = net.layers();
  const auto tr = forward_trace(layers, x);

  // d ln p_t / dz_k = [k == t] - p_k
  std::vector<double> delta(tr.probs.size());
  for (std::size_t k = 0; k < delta.size(); ++k) delta[k] = (k == target_class ? 1.0 : 0.0) - tr.probs[k];
  for (std::size_t l = layers.size(); l-- > 0;) {
    const auto& layer = layers[l];
    std::vector<double> prev(layer.in, 0.0);
    for (std::size_t r = 0; r < layer.out; ++r) {
      const double* w = layer.weights.data() + r * layer.in;
      for (std::size_t c = 0; c < layer.in; ++c) prev[c] += w[c] * delta[r];
    }
    if (l > 0) {
      const auto& z = tr.pre[l - 1];
      for (std::size_t c = 0; c < layer.in; ++c) {
        if (!(z[c] > 0.0)) prev[c] = 0.0;
      }
    }
    delta = std::move(prev);
  }
  return delta;
}

std::string checkpoint_json(const DropweightNet& net) {
  nlohmann::ordered_json j;
  j["format"] = "mcunc-dropweights-v1";
  j["layer_sizes"] = net.layer_sizes();
  j["drop_rate"] = net.drop_rate();
  j["class_weights"] = net.class_weights();
  j["seed"] = net.seed();
  auto layers = nlohmann::ordered_json::array();
  for (const auto& layer : net.layers()) {
    nlohmann::ordered_json lj;
    lj["in"] = layer.in;
    lj["out"] = layer.out;
    lj["weights"] = layer.weights;
    lj["bias"] = layer.bias;
    layers.push_back(std::move(lj));
  }
  j["layers"] = std::move(layers);
  return j.dump() + "\n";
}

void save_checkpoint(const std::filesystem::path& path, const DropweightNet& net) {
  csv::write_file(path, checkpoint_json(net));
}

DropweightNet load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open checkpoint " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
    std::vector<DenseLayer> layers;
    for (const auto& lj : j.at("layers")) {
      DenseLayer layer;
      layer.in = lj.at("in").get<std::size_t>();
      layer.out = lj.at("out").get<std::size_t>();
      layer.weights = lj.at("weights").get<std::vector<double>>();
      layer.bias = lj.at("bias").get<std::vector<double>>();
      layers.push_back(std::move(layer));
    }
    return DropweightNet(j.at("layer_sizes").get<std::vector<std::size_t>>(), j.at("drop_rate").get<double>(),
                         j.at("class_weights").get<std::vector<double>>(), j.at("seed").get<std::uint64_t>(),
                         std::move(layers));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what(), 0);
  }
}

}  // namespace mcunc
