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

#include "mcunc/error_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "json.hpp"
#include "mcunc/csv.hpp"
#include "mcunc/errors.hpp"

namespace mcunc {

namespace {

void require_aligned(const UncertaintyReport& report, const LabelSet& labels) {
  if (report.size() != labels.size()) throw StructuralError("report and labels differ in length");
  for (std::size_t i = 0; i < report.size(); ++i) {
    if (report.item_ids[i] != labels.item_ids()[i]) {
      throw StructuralError("report and labels are not aligned at position " + std::to_string(i));
    }
  }
  labels.check_classes(report.num_classes);
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

double pop_std_of(const std::vector<double>& v, double mean) {
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return std::sqrt(s / static_cast<double>(v.size()));
}

GroupStats stats_of(const std::vector<double>& ph, const std::vector<double>& bald) {
  GroupStats g;
  g.count = ph.size();
  if (g.count == 0) return g;
  g.ph_mean = mean_of(ph);
  g.ph_median = median_of(ph);
  g.ph_std = pop_std_of(ph, *g.ph_mean);
  g.bald_mean = mean_of(bald);
  g.bald_median = median_of(bald);
  g.bald_std = pop_std_of(bald, *g.bald_mean);
  return g;
}

nlohmann::ordered_json opt(const std::optional<double>& v) { return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr); }

nlohmann::ordered_json group_json(const GroupStats& g) {
  return {{"count", g.count},           {"ph_mean", opt(g.ph_mean)},     {"ph_median", opt(g.ph_median)},
          {"ph_std", opt(g.ph_std)},     {"bald_mean", opt(g.bald_mean)}, {"bald_median", opt(g.bald_median)},
          {"bald_std", opt(g.bald_std)}};
}

}  // namespace

double ErrorProfile::accuracy() const noexcept {
  if (correct.empty()) return 0.0;
  const auto hits = std::count(correct.begin(), correct.end(), true);
  return static_cast<double>(hits) / static_cast<double>(correct.size());
}

std::size_t ConfusionMatrix::total() const noexcept { return std::accumulate(counts_.begin(), counts_.end(), std::size_t{0}); }

std::size_t ConfusionMatrix::trace() const noexcept {
  std::size_t t = 0;
  for (std::size_t c = 0; c < num_classes_; ++c) t += (*this)(c, c);
  return t;
}

std::vector<double> one_hot(std::size_t label, std::size_t num_classes) {
  if (label >= num_classes) {
    throw DomainError("label " + std::to_string(label) + " out of range for " + std::to_string(num_classes) + " classes");
  }
  std::vector<double> v(num_classes, 0.0);
  v[label] = 1.0;
  return v;
}

double wasserstein_discrete(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw DomainError("wasserstein_discrete: length mismatch");
  double cdf_p = 0.0;
  double cdf_q = 0.0;
  double dist = 0.0;
  for (std::size_t k = 0; k + 1 < p.size(); ++k) {
    cdf_p += p[k];
    cdf_q += q[k];
    dist += std::abs(cdf_p - cdf_q);
  }
  return dist;
}

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && values[order[j]] == values[order[i]]) ++j;
    // Positions i..j-1 hold ranks i+1..j.
    const double rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = rank;
    i = j;
  }
  return ranks;
}

double spearman_rho(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DomainError("spearman_rho: length mismatch");
  if (x.size() < 2) throw DomainError("spearman_rho needs at least two observations");
  const auto constant = [](std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [&](double a) { return a == v.front(); });
  };
  if (constant(x) || constant(y)) throw UndefinedCorrelation("spearman_rho: constant input");

  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  // Both rank vectors have mean (n + 1) / 2.
  const double mean = 0.5 * static_cast<double>(x.size() + 1);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    const double dx = rx[i] - mean;
    const double dy = ry[i] - mean;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

ConfusionMatrix confusion_matrix(const UncertaintyReport& report, const LabelSet& labels) {
  require_aligned(report, labels);
  ConfusionMatrix m(report.num_classes);
  for (std::size_t i = 0; i < report.size(); ++i) m.add(labels.labels()[i], report.predicted_class[i]);
  return m;
}

ErrorProfile error_profile(const UncertaintyReport& report, const LabelSet& labels, Exec exec) {
  require_aligned(report, labels);
  const std::size_t N = report.size();
  const std::size_t C = report.num_classes;
  ErrorProfile profile;
  profile.item_ids = report.item_ids;
  profile.wd_error.assign(N, 0.0);
  std::vector<char> correct(N, 0);

  const auto item = [&](std::size_t n) {
    const std::size_t label = labels.labels()[n];
    profile.wd_error[n] = wasserstein_discrete(report.mean_row(n), one_hot(label, C));
    correct[n] = report.predicted_class[n] == label;
  };
  if (exec == Exec::serial) {
    for (std::size_t n = 0; n < N; ++n) item(n);
  } else {
    const auto count = static_cast<std::ptrdiff_t>(N);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t n = 0; n < count; ++n) item(static_cast<std::size_t>(n));
  }
  profile.correct.assign(correct.begin(), correct.end());
  return profile;
}

GroupSummary group_summary(const UncertaintyReport& report, const ErrorProfile& profile) {
  if (report.size() != profile.size()) throw StructuralError("report and error profile differ in length");
  std::vector<double> ph_ok, bald_ok, ph_bad, bald_bad;
  for (std::size_t i = 0; i < report.size(); ++i) {
    if (profile.correct[i]) {
      ph_ok.push_back(report.entropy_ph_norm[i]);
      bald_ok.push_back(report.bald_norm[i]);
    } else {
      ph_bad.push_back(report.entropy_ph_norm[i]);
      bald_bad.push_back(report.bald_norm[i]);
    }
  }
  GroupSummary s;
  s.correct = stats_of(ph_ok, bald_ok);
  s.erroneous = stats_of(ph_bad, bald_bad);
  if (s.correct.count && s.erroneous.count) {
    s.ph_mean_diff = *s.erroneous.ph_mean - *s.correct.ph_mean;
    s.bald_mean_diff = *s.erroneous.bald_mean - *s.correct.bald_mean;
  }
  return s;
}

std::string summary_json(const GroupSummary& summary) {
  nlohmann::ordered_json j;
  j["correct"] = group_json(summary.correct);
  j["erroneous"] = group_json(summary.erroneous);
  j["ph_mean_diff"] = opt(summary.ph_mean_diff);
  j["bald_mean_diff"] = opt(summary.bald_mean_diff);
  return j.dump(2) + "\n";
}

std::string format_confusion(const ConfusionMatrix& matrix) {
  const std::size_t C = matrix.num_classes();
  std::string out;
  for (std::size_t c = 0; c < C; ++c) out += (c ? "," : "") + std::to_string(c);
  out += '\n';
  for (std::size_t t = 0; t < C; ++t) {
    for (std::size_t p = 0; p < C; ++p) out += (p ? "," : "") + std::to_string(matrix(t, p));
    out += '\n';
  }
  return out;
}

std::string format_profile(const ErrorProfile& profile, const LabelSet& labels) {
  std::string out = "item_id,label,wd_error,correct\n";
  for (std::size_t i = 0; i < profile.size(); ++i) {
    out += profile.item_ids[i] + ',' + std::to_string(labels.labels()[i]) + ',' +
           csv::format_double(profile.wd_error[i]) + ',' + (profile.correct[i] ? "1" : "0") + '\n';
  }
  return out;
}

}  // namespace mcunc
