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
#include <span>
#include <string>
#include <vector>

#include "mcunc/exec.hpp"
#include "mcunc/mc_store.hpp"

namespace mcunc {

/// Per-item summary of an McPredictionSet. All entropies are in nats;
/// the *_norm fields divide by ln C.
struct UncertaintyReport {
  std::vector<std::string> item_ids;
  std::size_t num_classes = 0;
  std::vector<double> predictive_mean;  // N x C, row-major
  std::vector<std::size_t> predicted_class;
  std::vector<double> entropy_ph;
  std::vector<double> expected_entropy;
  std::vector<double> bald;
  std::vector<double> entropy_ph_norm;
  std::vector<double> bald_norm;

  std::size_t size() const noexcept { return item_ids.size(); }
  std::span<const double> mean_row(std::size_t item) const noexcept {
    return std::span<const double>(predictive_mean).subspan(item * num_classes, num_classes);
  }
};

/// Column average over passes; returns N x C row-major.
std::vector<double> predictive_mean(const McPredictionSet& preds, Exec exec = Exec::parallel);

/// -sum p ln p with 0 ln 0 = 0. Throws DomainError on a negative or non-finite entry.
double predictive_entropy(std::span<const double> dist);

/// Mean over passes of the per-pass entropy for one item.
double expected_entropy(const McPredictionSet& preds, std::size_t item);

/// H(mean) - E[H], clamped at 0. Throws NumericalError below -1e-9.
double bald(const McPredictionSet& preds, std::size_t item);

/// Index of the largest entry; ties go to the lowest index.
std::size_t argmax(std::span<const double> values) noexcept;

UncertaintyReport build_report(const McPredictionSet& preds, Exec exec = Exec::parallel);

std::string format_report(const UncertaintyReport& report);
void save_report(const std::filesystem::path& path, const UncertaintyReport& report);
UncertaintyReport load_report(const std::filesystem::path& path);

}  // namespace mcunc
