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

#include "mcunc/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <unordered_set>

#include "mcunc/csv.hpp"
#include "mcunc/errors.hpp"

namespace mcunc {

namespace {

constexpr double kCenterRadius = 3.0;
constexpr double kBaseNoise = 0.25;

std::string item_name(std::size_t i) {
  std::string digits = std::to_string(i);
  if (digits.size() < 5) digits.insert(0, 5 - digits.size(), '0');
  return "item_" + digits;
}

}  // namespace

SyntheticDataset SyntheticDataset::subset(std::span<const std::size_t> rows) const {
  SyntheticDataset out;
  out.inputs = Matrix(rows.size(), inputs.cols);
  out.class_counts.assign(class_counts.size(), 0);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto r = rows[k];
    out.item_ids.push_back(item_ids.at(r));
    out.labels.push_back(labels.at(r));
    ++out.class_counts[labels[r]];
    std::copy_n(inputs.row(r).begin(), inputs.cols, out.inputs.row(k).begin());
  }
  return out;
}

std::vector<std::size_t> scale_counts(std::span<const std::size_t> counts, double factor) {
  std::vector<std::size_t> out;
  for (auto c : counts) {
    out.push_back(std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(static_cast<double>(c) * factor))));
  }
  return out;
}

SyntheticDataset generate_synthetic(std::uint64_t seed, std::span<const std::size_t> n_per_class, std::size_t dim,
                                    double overlap) {
  const std::size_t C = n_per_class.size();
  if (C < 2) throw DomainError("synthetic data needs at least two classes");
  if (dim < 2) throw DomainError("synthetic data needs at least two features");
  if (!(overlap >= 0.0) || !std::isfinite(overlap)) throw DomainError("overlap must be >= 0");
  for (auto n : n_per_class) {
    if (n == 0) throw DomainError("every class needs at least one item");
  }

  Matrix centers(C, dim);
  for (std::size_t c = 0; c < C; ++c) {
    if (C <= dim) {
      centers.row(c)[c] = kCenterRadius;
    } else {
      const double angle = 2.0 * std::numbers::pi * static_cast<double>(c) / static_cast<double>(C);
      centers.row(c)[0] = kCenterRadius * std::cos(angle);
      centers.row(c)[1] = kCenterRadius * std::sin(angle);
    }
  }

  const std::size_t total = std::accumulate(n_per_class.begin(), n_per_class.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, kBaseNoise + overlap);

  std::vector<std::size_t> raw_labels;
  Matrix raw(total, dim);
  std::size_t k = 0;
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t i = 0; i < n_per_class[c]; ++i, ++k) {
      auto row = raw.row(k);
      for (std::size_t j = 0; j < dim; ++j) row[j] = centers.row(c)[j] + noise(rng);
      raw_labels.push_back(c);
    }
  }

  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);

  SyntheticDataset data;
  data.inputs = Matrix(total, dim);
  data.class_counts.assign(n_per_class.begin(), n_per_class.end());
  for (std::size_t i = 0; i < total; ++i) {
    data.item_ids.push_back(item_name(i));
    data.labels.push_back(raw_labels[order[i]]);
    std::copy_n(raw.row(order[i]).begin(), dim, data.inputs.row(i).begin());
  }
  return data;
}

TrainTestSplit stratified_split(const SyntheticDataset& data, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction >= 0.0 && test_fraction <= 1.0)) throw DomainError("test fraction must lie in [0, 1]");
  const std::size_t C = data.class_counts.size();
  std::vector<std::vector<std::size_t>> by_class(C);
  for (std::size_t i = 0; i < data.size(); ++i) by_class[data.labels[i]].push_back(i);

  std::mt19937_64 rng(seed);
  std::vector<char> is_test(data.size(), 0);
  for (auto& rows : by_class) {
    std::shuffle(rows.begin(), rows.end(), rng);
    const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(rows.size())));
    for (std::size_t k = 0; k < n_test; ++k) is_test[rows[k]] = 1;
  }
  std::vector<std::size_t> train_rows, test_rows;
  for (std::size_t i = 0; i < data.size(); ++i) (is_test[i] ? test_rows : train_rows).push_back(i);
  return {data.subset(train_rows), data.subset(test_rows)};
}

std::string format_features(std::span<const std::string> item_ids, const Matrix& inputs) {
  if (item_ids.size() != inputs.rows) throw StructuralError("one item id per feature row required");
  std::string out = "item_id";
  for (std::size_t j = 0; j < inputs.cols; ++j) out += ",x_" + std::to_string(j);
  out += '\n';
  for (std::size_t i = 0; i < inputs.rows; ++i) {
    out += item_ids[i];
    for (double v : inputs.row(i)) out += ',' + csv::format_double(v);
    out += '\n';
  }
  return out;
}

void save_features(const std::filesystem::path& path, std::span<const std::string> item_ids, const Matrix& inputs) {
  csv::write_file(path, format_features(item_ids, inputs));
}

FeatureTable load_features(const std::filesystem::path& path) {
  const auto table = csv::read(path);
  const auto& h = table.header;
  if (h.size() < 2 || h[0] != "item_id") throw ParseError("header must be item_id,x_0,...", 1);
  for (std::size_t j = 1; j < h.size(); ++j) {
    if (h[j] != "x_" + std::to_string(j - 1)) throw ParseError("unexpected column '" + h[j] + "'", 1);
  }
  FeatureTable out;
  out.inputs = Matrix(table.rows.size(), h.size() - 1);
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    if (!seen.insert(row.fields[0]).second) throw ValidationError("duplicate item_id '" + row.fields[0] + "'");
    out.item_ids.push_back(row.fields[0]);
    for (std::size_t j = 1; j < h.size(); ++j) {
      const double v = csv::parse_double(row.fields[j], row.line);
      if (!std::isfinite(v)) throw ParseError("non-finite feature", row.line);
      out.inputs.row(i)[j - 1] = v;
    }
  }
  if (out.item_ids.empty()) throw StructuralError(path.string() + ": no feature rows");
  return out;
}

}  // namespace mcunc
