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
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mcunc {

/// Tolerance on |sum_c p - 1| for every (pass, item) row.
inline constexpr double kRowSumTolerance = 1e-6;

/// T stochastic softmax outputs for N items over C classes.
///
/// Stored pass-major: probs[(t * N + n) * C + c]. Construction validates and
/// renormalizes every row, so each instance is immutable and satisfies the
/// simplex invariant. Rows whose sum is already within 1e-12 of one are kept
/// unchanged, which makes load/save/load bit-stable.
class McPredictionSet {
 public:
  McPredictionSet(std::vector<std::string> item_ids, std::size_t num_passes, std::size_t num_classes,
                  std::vector<double> probs);

  std::size_t num_items() const noexcept { return item_ids_.size(); }
  std::size_t num_passes() const noexcept { return num_passes_; }
  std::size_t num_classes() const noexcept { return num_classes_; }
  const std::vector<std::string>& item_ids() const noexcept { return item_ids_; }
  std::span<const double> probs() const noexcept { return probs_; }

  std::span<const double> row(std::size_t pass, std::size_t item) const noexcept {
    return std::span<const double>(probs_).subspan((pass * item_ids_.size() + item) * num_classes_,
                                                   num_classes_);
  }
  double at(std::size_t pass, std::size_t item, std::size_t cls) const noexcept {
    return probs_[(pass * item_ids_.size() + item) * num_classes_ + cls];
  }

  /// New set holding only `items` (indices into this set), in that order.
  McPredictionSet select(std::span<const std::size_t> items) const;

 private:
  std::vector<std::string> item_ids_;
  std::size_t num_passes_;
  std::size_t num_classes_;
  std::vector<double> probs_;
};

/// Ground-truth class labels keyed by item id.
class LabelSet {
 public:
  LabelSet(std::vector<std::string> item_ids, std::vector<std::size_t> labels);

  std::size_t size() const noexcept { return item_ids_.size(); }
  const std::vector<std::string>& item_ids() const noexcept { return item_ids_; }
  const std::vector<std::size_t>& labels() const noexcept { return labels_; }

  /// Throws ValidationError if any label is >= num_classes.
  void check_classes(std::size_t num_classes) const;

  LabelSet select(std::span<const std::size_t> items) const;

 private:
  std::vector<std::string> item_ids_;
  std::vector<std::size_t> labels_;
};

McPredictionSet load_mc_predictions(const std::filesystem::path& path,
                                    std::optional<std::size_t> expected_classes = std::nullopt);
void save_mc_predictions(const std::filesystem::path& path, const McPredictionSet& preds);
std::string format_mc_predictions(const McPredictionSet& preds);

LabelSet load_labels(const std::filesystem::path& path);
void save_labels(const std::filesystem::path& path, const LabelSet& labels);

struct AlignedPair {
  McPredictionSet preds;
  LabelSet labels;
  std::size_t dropped_preds = 0;
  std::size_t dropped_labels = 0;
};

/// Restricts both sides to the shared item ids, in prediction order. Also
/// checks every retained label against the prediction class count.
AlignedPair align(const McPredictionSet& preds, const LabelSet& labels);

}  // namespace mcunc
