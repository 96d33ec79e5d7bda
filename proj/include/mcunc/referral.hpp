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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mcunc/exec.hpp"

namespace mcunc {

enum class ReferralControl { fraction, threshold };

struct ReferralPoint {
  double control = 0.0;
  std::size_t retained_count = 0;
  std::optional<double> retained_accuracy;  // absent when nothing is retained
  std::size_t retained_correct = 0;
};

struct ReferralCurve {
  ReferralControl control = ReferralControl::fraction;
  std::size_t total = 0;
  std::vector<ReferralPoint> points;
};

struct RandomBaseline {
  ReferralCurve curve;          // mean retained accuracy over trials
  std::vector<double> stddev;   // population std of retained accuracy across trials
  double analytic_expectation;  // overall accuracy; independent of the fraction
};

/// Number of items referred at fraction f: ceil(f * N), with products within
/// 1e-9 of an integer snapped to it so that e.g. 0.7 * 10 refers 7.
std::size_t referred_count(double fraction, std::size_t n);

/// Refers the ceil(f * N) most uncertain items at each fraction. Ties in
/// uncertainty are referred in item order. Fractions must be strictly
/// increasing and within [0, 1].
ReferralCurve refer_by_fraction(std::span<const double> uncertainty, const std::vector<bool>& correct,
                                std::span<const double> fractions);

/// Retains items with normalized uncertainty strictly below each threshold.
/// Thresholds must be strictly increasing and within [0, 1].
ReferralCurve refer_by_threshold(std::span<const double> uncertainty_norm, const std::vector<bool>& correct,
                                 std::span<const double> thresholds);

/// Refers uniformly random subsets of the same sizes as refer_by_fraction.
/// Trial k of fraction i draws from a generator seeded by (seed, i, k).
RandomBaseline random_referral_baseline(const std::vector<bool>& correct, std::span<const double> fractions,
                                        std::size_t trials, std::uint64_t seed, Exec exec = Exec::parallel);

/// Accuracy when retained items keep the model's answer and referred items
/// are resolved correctly with probability `human_accuracy`.
double combined_accuracy(const ReferralPoint& point, std::size_t total, double human_accuracy);

/// CSV `control_value,retained_count,retained_accuracy`; when
/// `human_accuracy` is set, adds a `combined_accuracy` column.
std::string format_curve(const ReferralCurve& curve, std::optional<double> human_accuracy = std::nullopt);
/// Curve columns plus `stddev,analytic_expectation`.
std::string format_baseline(const RandomBaseline& baseline);

}  // namespace mcunc
