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

#include "mcunc/referral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "mcunc/csv.hpp"
#include "mcunc/errors.hpp"

namespace mcunc {

namespace {

void check_grid(std::span<const double> grid, const char* what) {
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] >= 0.0 && grid[i] <= 1.0)) {
      throw DomainError(std::string(what) + " " + csv::format_double(grid[i]) + " outside [0, 1]");
    }
    if (i > 0 && !(grid[i] > grid[i - 1])) throw DomainError(std::string(what) + "s must be strictly increasing");
  }
}

void check_lengths(std::size_t a, std::size_t b) {
  if (a != b) throw StructuralError("uncertainty and correctness vectors differ in length");
  if (a == 0) throw DomainError("referral needs at least one item");
}

ReferralPoint point_from(double control, std::size_t retained, std::size_t hits) {
  ReferralPoint p;
  p.control = control;
  p.retained_count = retained;
  p.retained_correct = hits;
  if (retained > 0) p.retained_accuracy = static_cast<double>(hits) / static_cast<double>(retained);
  return p;
}

std::uint64_t mix(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::size_t referred_count(double fraction, std::size_t n) {
  const double exact = fraction * static_cast<double>(n);
  const double nearest = std::round(exact);
  const double k = std::abs(exact - nearest) <= 1e-9 ? nearest : std::ceil(exact);
  return std::min(n, static_cast<std::size_t>(k));
}

ReferralCurve refer_by_fraction(std::span<const double> uncertainty, const std::vector<bool>& correct,
                                std::span<const double> fractions) {
  check_lengths(uncertainty.size(), correct.size());
  check_grid(fractions, "fraction");
  const std::size_t n = uncertainty.size();

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return uncertainty[a] > uncertainty[b]; });

  // suffix_hits[k] = correct items among order[k..n).
  std::vector<std::size_t> suffix_hits(n + 1, 0);
  for (std::size_t k = n; k-- > 0;) suffix_hits[k] = suffix_hits[k + 1] + (correct[order[k]] ? 1 : 0);

  ReferralCurve curve{ReferralControl::fraction, n, {}};
  for (double f : fractions) {
    const std::size_t referred = referred_count(f, n);
    curve.points.push_back(point_from(f, n - referred, suffix_hits[referred]));
  }
  return curve;
}

ReferralCurve refer_by_threshold(std::span<const double> uncertainty_norm, const std::vector<bool>& correct,
                                 std::span<const double> thresholds) {
  check_lengths(uncertainty_norm.size(), correct.size());
  check_grid(thresholds, "threshold");
  ReferralCurve curve{ReferralControl::threshold, uncertainty_norm.size(), {}};
  for (double tau : thresholds) {
    std::size_t retained = 0, hits = 0;
    for (std::size_t i = 0; i < uncertainty_norm.size(); ++i) {
      if (uncertainty_norm[i] < tau) {
        ++retained;
        if (correct[i]) ++hits;
      }
    }
    curve.points.push_back(point_from(tau, retained, hits));
  }
  return curve;
}

RandomBaseline random_referral_baseline(const std::vector<bool>& correct, std::span<const double> fractions,
                                        std::size_t trials, std::uint64_t seed, Exec exec) {
  if (trials < 1) throw DomainError("random baseline needs at least one trial");
  if (correct.empty()) throw DomainError("referral needs at least one item");
  check_grid(fractions, "fraction");
  const std::size_t n = correct.size();
  const auto total_hits = static_cast<std::size_t>(std::count(correct.begin(), correct.end(), true));

  RandomBaseline out;
  out.curve = ReferralCurve{ReferralControl::fraction, n, {}};
  out.analytic_expectation = static_cast<double>(total_hits) / static_cast<double>(n);

  std::vector<double> trial_acc(trials);
  for (std::size_t fi = 0; fi < fractions.size(); ++fi) {
    const std::size_t referred = referred_count(fractions[fi], n);
    const std::size_t retained = n - referred;
    ReferralPoint point;
    point.control = fractions[fi];
    point.retained_count = retained;
    if (retained == 0) {
      out.curve.points.push_back(point);
      out.stddev.push_back(0.0);
      continue;
    }

    const auto run_trial = [&](std::size_t k) {
      std::mt19937_64 rng(mix(mix(seed ^ mix(fi)) ^ k));
      std::vector<std::size_t> idx(n);
      std::iota(idx.begin(), idx.end(), std::size_t{0});
      // Partial Fisher-Yates: idx[0..referred) is a uniform random subset.
      std::size_t referred_hits = 0;
      for (std::size_t j = 0; j < referred; ++j) {
        std::uniform_int_distribution<std::size_t> pick(j, n - 1);
        std::swap(idx[j], idx[pick(rng)]);
        if (correct[idx[j]]) ++referred_hits;
      }
      trial_acc[k] = static_cast<double>(total_hits - referred_hits) / static_cast<double>(retained);
    };
    if (exec == Exec::serial) {
      for (std::size_t k = 0; k < trials; ++k) run_trial(k);
    } else {
      const auto count = static_cast<std::ptrdiff_t>(trials);
#pragma omp parallel for schedule(static)
      for (std::ptrdiff_t k = 0; k < count; ++k) run_trial(static_cast<std::size_t>(k));
    }

    // Sequential reductions keep the result schedule-independent.
    double sum = 0.0;
    for (double a : trial_acc) sum += a;
    const double mean = sum / static_cast<double>(trials);
    double ss = 0.0;
    for (double a : trial_acc) ss += (a - mean) * (a - mean);
    point.retained_accuracy = mean;
    out.curve.points.push_back(point);
    out.stddev.push_back(std::sqrt(ss / static_cast<double>(trials)));
  }
  return out;
}

double combined_accuracy(const ReferralPoint& point, std::size_t total, double human_accuracy) {
  if (total == 0) throw DomainError("empty referral curve");
  if (!(human_accuracy >= 0.0 && human_accuracy <= 1.0)) throw DomainError("human accuracy must lie in [0, 1]");
  const auto referred = static_cast<double>(total - point.retained_count);
  return (static_cast<double>(point.retained_correct) + human_accuracy * referred) / static_cast<double>(total);
}

std::string format_curve(const ReferralCurve& curve, std::optional<double> human_accuracy) {
  std::string out = "control_value,retained_count,retained_accuracy";
  if (human_accuracy) out += ",combined_accuracy";
  out += '\n';
  for (const auto& p : curve.points) {
    out += csv::format_double(p.control) + ',' + std::to_string(p.retained_count) + ',';
    if (p.retained_accuracy) out += csv::format_double(*p.retained_accuracy);
    if (human_accuracy) out += ',' + csv::format_double(combined_accuracy(p, curve.total, *human_accuracy));
    out += '\n';
  }
  return out;
}

std::string format_baseline(const RandomBaseline& baseline) {
  std::string out = "control_value,retained_count,retained_accuracy,stddev,analytic_expectation\n";
  for (std::size_t i = 0; i < baseline.curve.points.size(); ++i) {
    const auto& p = baseline.curve.points[i];
    out += csv::format_double(p.control) + ',' + std::to_string(p.retained_count) + ',';
    if (p.retained_accuracy) out += csv::format_double(*p.retained_accuracy);
    out += ',' + csv::format_double(baseline.stddev[i]) + ',' + csv::format_double(baseline.analytic_expectation) + '\n';
  }
  return out;
}

}  // namespace mcunc
