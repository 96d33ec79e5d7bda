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

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mcunc/dropweights_net.hpp"
#include "mcunc/mc_store.hpp"

namespace mcunc {

/// Chest X-ray class sizes (normal, bacterial pneumonia, viral pneumonia,
/// COVID-19) that the demo dataset mimics.
inline constexpr std::array<std::size_t, 4> kChestXrayClassCounts = {1583, 2786, 1504, 68};
/// Asymmetric class weights for the same four classes.
inline constexpr std::array<double, 4> kChestXrayClassWeights = {2.0, 2.0, 1.0, 50.0};

struct SyntheticDataset {
  std::vector<std::string> item_ids;
  Matrix inputs;
  std::vector<std::size_t> labels;
  std::vector<std::size_t> class_counts;

  std::size_t size() const noexcept { return labels.size(); }
  LabelSet label_set() const { return LabelSet(item_ids, labels); }
  SyntheticDataset subset(std::span<const std::size_t> rows) const;
};

/// Each count multiplied by `factor` and rounded to nearest; at least 1.
std::vector<std::size_t> scale_counts(std::span<const std::size_t> counts, double factor);

/// One isotropic Gaussian blob per class. Centers sit at radius 3 on the
/// first C coordinate axes (or on a regular polygon in the first two
/// coordinates when C > d); the noise standard deviation is 0.25 + overlap.
/// Rows are shuffled, so classes interleave. Deterministic in `seed`.
SyntheticDataset generate_synthetic(std::uint64_t seed, std::span<const std::size_t> n_per_class, std::size_t dim,
                                    double overlap);

struct TrainTestSplit {
  SyntheticDataset train;
  SyntheticDataset test;
};

/// Stratified split: round(test_fraction * count) items of each class go to
/// the test side, chosen by a seeded shuffle.
TrainTestSplit stratified_split(const SyntheticDataset& data, double test_fraction, std::uint64_t seed);

/// Feature CSV: header `item_id,x_0,...,x_{d-1}`.
std::string format_features(std::span<const std::string> item_ids, const Matrix& inputs);
void save_features(const std::filesystem::path& path, std::span<const std::string> item_ids, const Matrix& inputs);

struct FeatureTable {
  std::vector<std::string> item_ids;
  Matrix inputs;
};
FeatureTable load_features(const std::filesystem::path& path);

}  // namespace mcunc
