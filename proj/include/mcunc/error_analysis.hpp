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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mcunc/exec.hpp"
#include "mcunc/mc_store.hpp"
#include "mcunc/uncertainty.hpp"

namespace mcunc {

struct ErrorProfile {
  std::vector<std::string> item_ids;
  std::vector<double> wd_error;  // class-index units, in [0, C-1]
  std::vector<bool> correct;

  std::size_t size() const noexcept { return item_ids.size(); }
  double accuracy() const noexcept;
};

/// Rows are true classes, columns predicted classes.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t num_classes)
      : num_classes_(num_classes), counts_(num_classes * num_classes, 0) {}

  std::size_t num_classes() const noexcept { return num_classes_; }
  std::size_t operator()(std::size_t truth, std::size_t predicted) const noexcept {
    return counts_[truth * num_classes_ + predicted];
  }
  void add(std::size_t truth, std::size_t predicted) { ++counts_.at(truth * num_classes_ + predicted); }

  std::size_t total() const noexcept;
  std::size_t trace() const noexcept;

 private:
  std::size_t num_classes_;
  std::vector<std::size_t> counts_;
};

std::vector<double> one_hot(std::size_t label, std::size_t num_classes);

/// Exact 1-Wasserstein distance between two distributions on {0..C-1} with
/// ground metric |i - j|: the L1 distance between their CDFs.
double wasserstein_discrete(std::span<const double> p, std::span<const double> q);

/// Average ranks (1-based); tied values share the mean of the ranks they span.
std::vector<double> average_ranks(std::span<const double> values);

/// Pearson correlation of average ranks. Throws DomainError for N < 2 and
/// UndefinedCorrelation when either input is constant.
double spearman_rho(std::span<const double> x, std::span<const double> y);

ConfusionMatrix confusion_matrix(const UncertaintyReport& report, const LabelSet& labels);

ErrorProfile error_profile(const UncertaintyReport& report, const LabelSet& labels, Exec exec = Exec::parallel);

struct GroupStats {
  std::size_t count = 0;
  // Absent when count == 0. Standard deviations are population (divide by count).
  std::optional<double> ph_mean, ph_median, ph_std;
  std::optional<double> bald_mean, bald_median, bald_std;
};

struct GroupSummary {
  GroupStats correct;
  GroupStats erroneous;
  // erroneous mean minus correct mean; absent unless both groups are populated.
  std::optional<double> ph_mean_diff;
  std::optional<double> bald_mean_diff;
};

/// Statistics of normalized PH and BALD split by prediction correctness.
GroupSummary group_summary(const UncertaintyReport& report, const ErrorProfile& profile);

std::string summary_json(const GroupSummary& summary);
std::string format_confusion(const ConfusionMatrix& matrix);
std::string format_profile(const ErrorProfile& profile, const LabelSet& labels);

}  // namespace mcunc
