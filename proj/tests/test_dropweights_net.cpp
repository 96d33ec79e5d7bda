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

#include <cmath>
#include <numeric>

#include "doctest.h"
#include "mcunc/dropweights_net.hpp"
#include "mcunc/errors.hpp"
#include "mcunc/synthetic.hpp"
#include "mcunc/uncertainty.hpp"
#include "grad_check.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace mcunc;

namespace {

Matrix random_inputs(std::mt19937_64& rng, std::size_t rows, std::size_t cols) {
  std::normal_distribution<double> z(0.0, 1.0);
  Matrix m(rows, cols);
  for (double& v : m.data) v = z(rng);
  return m;
}

double param_sum(const DropweightNet& net) {
  double s = 0.0;
  for (const auto& l : net.layers()) {
    s += std::accumulate(l.weights.begin(), l.weights.end(), 0.0);
    s += std::accumulate(l.bias.begin(), l.bias.end(), 0.0);
  }
  return s;
}

// True when no hidden pre-activation lies within `margin` of the ReLU kink.
bool away_from_kinks(const DropweightNet& net, const Matrix& x, const MaskMode& mode, double margin) {
  const auto layers = net.effective_layers(mode);
  for (std::size_t i = 0; i < x.rows; ++i) {
    std::vector<double> a(x.row(i).begin(), x.row(i).end());
    for (std::size_t l = 0; l + 1 < layers.size(); ++l) {
      std::vector<double> z(layers[l].out);
      for (std::size_t r = 0; r < layers[l].out; ++r) {
        double s = layers[l].bias[r];
        for (std::size_t c = 0; c < layers[l].in; ++c) s += layers[l].weights[r * layers[l].in + c] * a[c];
        if (std::abs(s) < margin) return false;
        z[r] = s > 0 ? s : 0;
      }
      a = z;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("forward with p = 0 sampled masks equals masks off") {
  std::mt19937_64 rng(31);
  DropweightNet net({4, 6, 3}, 0.0, {1, 1, 1}, 5);
  const auto x = random_inputs(rng, 1, 4);
  CHECK(forward(net, x.row(0), MaskMode::sample(9, 3)) == forward(net, x.row(0), MaskMode::off()));
}

TEST_CASE("zero parameters give a uniform softmax") {
  DropweightNet net({3, 4, 5}, 0.3, {1, 1, 1, 1, 1}, 0);
  for (auto& l : net.layers()) {
    std::fill(l.weights.begin(), l.weights.end(), 0.0);
    std::fill(l.bias.begin(), l.bias.end(), 0.0);
  }
  const auto p = forward(net, std::vector<double>{1, -2, 3}, MaskMode::sample(1, 1));
  for (double v : p) CHECK(v == doctest::Approx(0.2).epsilon(1e-15));
}

TEST_CASE("sampled masks are deterministic in (seed, pass)") {
  std::mt19937_64 rng(32);
  DropweightNet net({5, 8, 3}, 0.5, {1, 1, 1}, 7);
  const auto x = random_inputs(rng, 1, 5);
  const auto a = forward(net, x.row(0), MaskMode::sample(3, 4));
  CHECK(forward(net, x.row(0), MaskMode::sample(3, 4)) == a);
  CHECK(forward(net, x.row(0), MaskMode::sample(3, 5)) != a);
  CHECK(mask_uniform(1, 2, 3, 4, 5) == mask_uniform(1, 2, 3, 4, 5));
  CHECK(mask_uniform(1, 2, 3, 4, 5) != mask_uniform(1, 2, 3, 5, 4));
}

TEST_CASE("forward rejects bad input") {
  DropweightNet net({2, 2}, 0.1, {1, 1}, 0);
  CHECK_THROWS_AS(forward(net, std::vector<double>{1.0, NAN}, MaskMode::off()), DomainError);
  CHECK_THROWS_AS(forward(net, std::vector<double>{1.0}, MaskMode::off()), DomainError);
}

TEST_CASE("network invariants are enforced") {
  CHECK_THROWS_AS(DropweightNet({3}, 0.1, {1}, 0), DomainError);
  CHECK_THROWS_AS(DropweightNet({3, 2}, 1.0, {1, 1}, 0), DomainError);
  CHECK_THROWS_AS(DropweightNet({3, 2}, -0.1, {1, 1}, 0), DomainError);
  CHECK_THROWS_AS(DropweightNet({3, 2}, 0.1, {1, 0}, 0), DomainError);
  CHECK_THROWS_AS(DropweightNet({3, 2}, 0.1, {1, 1, 1}, 0), DomainError);
}

TEST_CASE("weighted_ce_loss") {
  CHECK(weighted_ce_loss(std::vector<double>{0.0, 1.0}, 1, std::vector<double>{3, 5}) == doctest::Approx(0.0).epsilon(1e-11));
  const double inv_e = std::exp(-1.0);
  CHECK(weighted_ce_loss(std::vector<double>{inv_e, 1 - inv_e}, 0, std::vector<double>{1, 1}) ==
        doctest::Approx(1.0).epsilon(1e-11));
  const std::vector<double> alpha(kChestXrayClassWeights.begin(), kChestXrayClassWeights.end());
  CHECK(weighted_ce_loss(std::vector<double>{0.2, 0.2, 0.1, 0.5}, 3, alpha) ==
        doctest::Approx(50.0 * std::log(2.0)).epsilon(1e-10));
  CHECK(50.0 * std::log(2.0) == doctest::Approx(34.657).epsilon(1e-4));
}

TEST_CASE("property: class weight monotonicity on a misclassified item") {
  std::mt19937_64 rng(33);
  for (int trial = 0; trial < 50; ++trial) {
    auto p = oracle::random_simplex(rng, 4, false);
    const std::size_t label = static_cast<std::size_t>(trial) % 4;
    std::vector<double> alpha{1, 1, 1, 1};
    const double before = weighted_ce_loss(p, label, alpha);
    alpha[label] *= 1.5;
    CHECK(weighted_ce_loss(p, label, alpha) > before);
  }
}

TEST_CASE("gradient check on a [3,5,4] net with a fixed mask") {
  std::mt19937_64 rng(34);
  DropweightNet net({3, 5, 4}, 0.3, {2, 1, 3, 0.5}, 11);
  Matrix x;
  const auto mode = MaskMode::sample(17, 2);
  do {
    x = random_inputs(rng, 6, 3);
  } while (!away_from_kinks(net, x, mode, 1e-3) || !away_from_kinks(net, x, MaskMode::off(), 1e-3));
  const std::vector<std::size_t> y{0, 1, 2, 3, 1, 2};
  CHECK(gradcheck::worst_relative_error(net, x, y, mode) <= 1e-4);
  // Masks off exercises the unscaled path.
  CHECK(gradcheck::worst_relative_error(net, x, y, MaskMode::off()) <= 1e-4);
}

TEST_CASE("expected-mask identity: mean sampled logits approach unmasked logits") {
  std::mt19937_64 rng(35);
  DropweightNet net({6, 3}, 0.3, {1, 1, 1}, 3);
  const auto x = random_inputs(rng, 1, 6);
  const auto exact = logits(net, x.row(0), MaskMode::off());
  const std::size_t masks = 10000;
  std::vector<double> sum(3, 0.0), sumsq(3, 0.0);
  for (std::size_t m = 0; m < masks; ++m) {
    const auto z = logits(net, x.row(0), MaskMode::sample(99, m));
    for (std::size_t c = 0; c < 3; ++c) {
      sum[c] += z[c];
      sumsq[c] += z[c] * z[c];
    }
  }
  for (std::size_t c = 0; c < 3; ++c) {
    const double mean = sum[c] / masks;
    const double var = sumsq[c] / masks - mean * mean;
    const double se = std::sqrt(var / masks);
    CHECK(std::abs(mean - exact[c]) <= 3.0 * se);
  }
}

TEST_CASE("train: lr = 0 leaves parameters unchanged") {
  const auto data = generate_synthetic(1, std::vector<std::size_t>{20, 20}, 3, 0.0);
  DropweightNet net({3, 4, 2}, 0.2, {1, 1}, 2);
  const auto before = net.layers();
  TrainOptions opt;
  opt.epochs = 3;
  opt.learning_rate = 0.0;
  train(net, data.inputs, data.labels, opt);
  for (std::size_t l = 0; l < before.size(); ++l) {
    CHECK(net.layers()[l].weights == before[l].weights);
    CHECK(net.layers()[l].bias == before[l].bias);
  }
}

TEST_CASE("train: separable two-class data reaches >= 0.95 accuracy with masks off") {
  const auto data = generate_synthetic(3, std::vector<std::size_t>{50, 50}, 4, 0.0);
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < data.size(); ++i) rows.emplace_back(data.inputs.row(i).begin(), data.inputs.row(i).end());
  REQUIRE(oracle::perceptron_train_accuracy(rows, data.labels, 2, 100) == 1.0);

  DropweightNet net({4, 16, 2}, 0.1, {1, 1}, 4);
  TrainOptions opt;
  opt.seed = 5;
  const auto result = train(net, data.inputs, data.labels, opt);
  CHECK(result.epoch_loss.size() == 25);
  CHECK(result.epoch_loss.back() < result.epoch_loss.front());
  CHECK(accuracy(net, data.inputs, data.labels) >= 0.95);
}

TEST_CASE("train is deterministic in its seeds") {
  const auto data = generate_synthetic(6, std::vector<std::size_t>{30, 20, 10}, 3, 0.5);
  TrainOptions opt;
  opt.epochs = 4;
  opt.seed = 8;
  DropweightNet a({3, 8, 3}, 0.3, {1, 2, 3}, 9), b({3, 8, 3}, 0.3, {1, 2, 3}, 9);
  train(a, data.inputs, data.labels, opt);
  train(b, data.inputs, data.labels, opt);
  CHECK(checkpoint_json(a) == checkpoint_json(b));
}

TEST_CASE("train reports a non-finite loss") {
  const auto data = generate_synthetic(6, std::vector<std::size_t>{5, 5}, 2, 0.0);
  DropweightNet net({2, 2}, 0.0, {1, 1}, 0);
  net.layers()[0].weights[0] = NAN;
  TrainOptions opt;
  opt.epochs = 1;
  CHECK_THROWS_AS(train(net, data.inputs, data.labels, opt), NumericalError);
}

TEST_CASE("on-plateau decay lowers the learning rate only when enabled") {
  // One item with no effective update keeps the epoch loss exactly constant.
  Matrix x(1, 2);
  x.data = {0.5, -1.0};
  const std::vector<std::size_t> y{0};
  TrainOptions opt;
  opt.epochs = 8;
  opt.learning_rate = 1e-300;
  opt.lr_decay = 0.2;
  opt.plateau_patience = 2;
  DropweightNet net({2, 2}, 0.0, {1, 1}, 0);
  const auto r = train(net, x, y, opt);
  REQUIRE(r.epoch_learning_rate.size() == 8);
  CHECK(r.epoch_learning_rate.front() == 1e-300);
  CHECK(r.epoch_learning_rate.back() < 1e-300);

  opt.lr_decay = 1.0;
  DropweightNet net2({2, 2}, 0.0, {1, 1}, 0);
  const auto r2 = train(net2, x, y, opt);
  CHECK(std::all_of(r2.epoch_learning_rate.begin(), r2.epoch_learning_rate.end(), [](double v) { return v == 1e-300; }));
}

TEST_CASE("mc_predict") {
  std::mt19937_64 rng(36);
  const auto x = random_inputs(rng, 20, 4);
  std::vector<std::string> ids;
  for (int i = 0; i < 20; ++i) ids.push_back("q" + std::to_string(i));

  SUBCASE("p = 0 makes every pass identical and BALD zero") {
    DropweightNet net({4, 8, 3}, 0.0, {1, 1, 1}, 1);
    const auto s = mc_predict(net, x, ids, 6, 2);
    for (std::size_t t = 1; t < 6; ++t) {
      for (std::size_t n = 0; n < 20; ++n) {
        CHECK(std::equal(s.row(t, n).begin(), s.row(t, n).end(), s.row(0, n).begin()));
      }
    }
    const auto r = build_report(s);
    for (double b : r.bald) CHECK(b == 0.0);
  }
  SUBCASE("T = 1 mean equals the single pass") {
    DropweightNet net({4, 8, 3}, 0.4, {1, 1, 1}, 1);
    const auto s = mc_predict(net, x, ids, 1, 2);
    const auto m = predictive_mean(s);
    CHECK(std::equal(m.begin(), m.end(), s.probs().begin()));
  }
  SUBCASE("deterministic and schedule independent") {
    DropweightNet net({4, 8, 3}, 0.4, {1, 1, 1}, 1);
    const auto a = mc_predict(net, x, ids, 7, 3, Exec::parallel);
    const auto b = mc_predict(net, x, ids, 7, 3, Exec::parallel);
    const auto c = mc_predict(net, x, ids, 7, 3, Exec::serial);
    CHECK(std::equal(a.probs().begin(), a.probs().end(), b.probs().begin()));
    CHECK(std::equal(a.probs().begin(), a.probs().end(), c.probs().begin()));
  }
  SUBCASE("rejects T < 1") {
    DropweightNet net({4, 3}, 0.4, {1, 1, 1}, 1);
    CHECK_THROWS_AS(mc_predict(net, x, ids, 0, 3), DomainError);
  }
}

TEST_CASE("input_gradient_saliency") {
  SUBCASE("matches central finite differences on random nets") {
    std::mt19937_64 rng(37);
    for (std::uint64_t s = 0; s < 10; ++s) {
      DropweightNet net({5, 7, 6, 3}, 0.2, {1, 1, 1}, s);
      for (auto& l : net.layers()) {
        std::normal_distribution<double> z(0.0, 0.3);
        for (double& b : l.bias) b = z(rng);
      }
      Matrix x;
      do {
        x = random_inputs(rng, 1, 5);
      } while (!away_from_kinks(net, x, MaskMode::off(), 1e-3));
      const std::size_t target = s % 3;
      const auto g = input_gradient_saliency(net, x.row(0), target);
      for (std::size_t j = 0; j < 5; ++j) {
        auto xp = std::vector<double>(x.row(0).begin(), x.row(0).end());
        auto xm = xp;
        xp[j] += 1e-5;
        xm[j] -= 1e-5;
        const double fd = (std::log(forward(net, xp, MaskMode::off())[target]) -
                           std::log(forward(net, xm, MaskMode::off())[target])) / 2e-5;
        CHECK(oracle::relative_error(g[j], fd) <= 1e-4);
      }
    }
  }
  SUBCASE("zero first-layer weights give zero saliency") {
    DropweightNet net({3, 4, 2}, 0.0, {1, 1}, 1);
    std::fill(net.layers()[0].weights.begin(), net.layers()[0].weights.end(), 0.0);
    for (double g : input_gradient_saliency(net, std::vector<double>{1, 2, 3}, 1)) CHECK(g == 0.0);
  }
  SUBCASE("duplicated feature columns get equal saliency") {
    DropweightNet net({3, 4, 2}, 0.0, {1, 1}, 2);
    auto& w = net.layers()[0].weights;
    for (std::size_t r = 0; r < 4; ++r) w[r * 3 + 2] = w[r * 3 + 1];
    const auto g = input_gradient_saliency(net, std::vector<double>{0.3, -0.7, 0.5}, 0);
    CHECK(g[1] == g[2]);
  }
}

TEST_CASE("checkpoint JSON round-trips exactly") {
  testutil::TempDir dir;
  DropweightNet net({4, 9, 3}, 0.3, {2, 1, 50}, 123456789012345ULL);
  save_checkpoint(dir / "c.json", net);
  const auto back = load_checkpoint(dir / "c.json");
  CHECK(back.layer_sizes() == net.layer_sizes());
  CHECK(back.drop_rate() == net.drop_rate());
  CHECK(back.class_weights() == net.class_weights());
  CHECK(back.seed() == net.seed());
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    CHECK(back.layers()[l].weights == net.layers()[l].weights);
    CHECK(back.layers()[l].bias == net.layers()[l].bias);
  }
  CHECK(checkpoint_json(back) == checkpoint_json(net));
  CHECK(param_sum(back) == param_sum(net));
  testutil::write_text(dir / "bad.json", "{\"layers\": 3}");
  CHECK_THROWS_AS(load_checkpoint(dir / "bad.json"), ParseError);
}
