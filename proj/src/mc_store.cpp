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

#include "mcunc/mc_store.hpp"

#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include "mcunc/csv.hpp"
#include "mcunc/errors.hpp"

namespace mcunc {

namespace {

void require_unique(const std::vector<std::string>& ids, const char* what) {
  std::unordered_set<std::string> seen;
  seen.reserve(ids.size());
  for (const auto& id : ids) {
    if (!seen.insert(id).second) {
      throw ValidationError(std::string("duplicate item_id '") + id + "' in " + what);
    }
  }
}

}  // namespace

McPredictionSet::McPredictionSet(std::vector<std::string> item_ids, std::size_t num_passes,
                                 std::size_t num_classes, std::vector<double> probs)
    : item_ids_(std::move(item_ids)),
      num_passes_(num_passes),
      num_classes_(num_classes),
      probs_(std::move(probs)) {
  if (num_passes_ < 1) throw StructuralError("McPredictionSet needs at least one pass");
  if (num_classes_ < 2) throw StructuralError("McPredictionSet needs at least two classes");
  if (item_ids_.empty()) throw StructuralError("McPredictionSet needs at least one item");
  if (probs_.size() != num_passes_ * item_ids_.size() * num_classes_) {
    throw StructuralError("probability tensor size does not match T*N*C");
  }
  require_unique(item_ids_, "predictions");

  const std::size_t n_items = item_ids_.size();
  for (std::size_t t = 0; t < num_passes_; ++t) {
    for (std::size_t n = 0; n < n_items; ++n) {
      double* row = probs_.data() + (t * n_items + n) * num_classes_;
      double sum = 0.0;
      for (std::size_t c = 0; c < num_classes_; ++c) {
        if (!std::isfinite(row[c]) || row[c] < 0.0 || row[c] > 1.0) {
          throw ValidationError("item '" + item_ids_[n] + "' pass " + std::to_string(t) +
                                ": probability outside [0,1]");
        }
        sum += row[c];
      }
      if (std::abs(sum - 1.0) > kRowSumTolerance) {
        throw ValidationError("item '" + item_ids_[n] + "' pass " + std::to_string(t) +
                              ": row sums to " + csv::format_double(sum));
      }
      if (std::abs(sum - 1.0) > 1e-12) {
        for (std::size_t c = 0; c < num_classes_; ++c) row[c] /= sum;
      }
    }
  }
}

McPredictionSet McPredictionSet::select(std::span<const std::size_t> items) const {
  std::vector<std::string> ids;
  ids.reserve(items.size());
  for (auto i : items) ids.push_back(item_ids_.at(i));
  std::vector<double> probs;
  probs.reserve(num_passes_ * items.size() * num_classes_);
  for (std::size_t t = 0; t < num_passes_; ++t) {
    for (auto i : items) {
      const auto r = row(t, i);
      probs.insert(probs.end(), r.begin(), r.end());
    }
  }
  return McPredictionSet(std::move(ids), num_passes_, num_classes_, std::move(probs));
}

LabelSet::LabelSet(std::vector<std::string> item_ids, std::vector<std::size_t> labels)
    : item_ids_(std::move(item_ids)), labels_(std::move(labels)) {
  if (item_ids_.size() != labels_.size()) throw StructuralError("label ids and values differ in length");
  require_unique(item_ids_, "labels");
}

void LabelSet::check_classes(std::size_t num_classes) const {
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] >= num_classes) {
      throw ValidationError("item '" + item_ids_[i] + "': label " + std::to_string(labels_[i]) +
                            " >= number of classes " + std::to_string(num_classes));
    }
  }
}

LabelSet LabelSet::select(std::span<const std::size_t> items) const {
  std::vector<std::string> ids;
  std::vector<std::size_t> labels;
  for (auto i : items) {
    ids.push_back(item_ids_.at(i));
    labels.push_back(labels_.at(i));
  }
  return LabelSet(std::move(ids), std::move(labels));
}

McPredictionSet load_mc_predictions(const std::filesystem::path& path,
                                    std::optional<std::size_t> expected_classes) {
  const auto table = csv::read(path);
  const auto& header = table.header;
  if (header.size() < 4 || header[0] != "item_id" || header[1] != "mc_pass") {
    throw ParseError("header must be item_id,mc_pass,p_0,...,p_{C-1}", 1);
  }
  const std::size_t num_classes = header.size() - 2;
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (header[c + 2] != "p_" + std::to_string(c)) {
      throw ParseError("unexpected column '" + header[c + 2] + "'", 1);
    }
  }
  if (expected_classes && *expected_classes != num_classes) {
    throw ValidationError("file has " + std::to_string(num_classes) + " classes, expected " +
                          std::to_string(*expected_classes));
  }
  if (table.rows.empty()) throw StructuralError(path.string() + ": no prediction rows");

  // First pass collects item order and the per-pass item sequences.
  std::vector<std::string> ids;
  std::unordered_map<std::string, std::size_t> index;
  struct Parsed {
    std::size_t item;
    std::size_t pass;
    std::size_t line;
    std::vector<double> p;
  };
  std::vector<Parsed> parsed;
  parsed.reserve(table.rows.size());
  std::size_t max_pass = 0;
  for (const auto& row : table.rows) {
    const auto pass = csv::parse_int(row.fields[1], row.line);
    if (pass < 0) throw ParseError("negative mc_pass", row.line);
    std::vector<double> p(num_classes);
    double sum = 0.0;
    for (std::size_t c = 0; c < num_classes; ++c) {
      p[c] = csv::parse_double(row.fields[c + 2], row.line);
      if (!std::isfinite(p[c]) || p[c] < 0.0 || p[c] > 1.0) {
        throw ValidationError("line " + std::to_string(row.line) + ": item '" + row.fields[0] + "' pass " +
                              std::to_string(pass) + ": probability outside [0,1]");
      }
      sum += p[c];
    }
    if (std::abs(sum - 1.0) > kRowSumTolerance) {
      throw ValidationError("line " + std::to_string(row.line) + ": item '" + row.fields[0] + "' pass " +
                            std::to_string(pass) + " sums to " + csv::format_double(sum));
    }
    const auto [it, inserted] = index.try_emplace(row.fields[0], ids.size());
    if (inserted) ids.push_back(row.fields[0]);
    max_pass = std::max(max_pass, static_cast<std::size_t>(pass));
    parsed.push_back({it->second, static_cast<std::size_t>(pass), row.line, std::move(p)});
  }

  const std::size_t n_items = ids.size();
  const std::size_t num_passes = max_pass + 1;
  std::vector<std::vector<std::size_t>> pass_order(num_passes);
  std::vector<std::size_t> passes_per_item(n_items, 0);
  std::vector<char> seen(num_passes * n_items, 0);
  for (const auto& r : parsed) {
    auto& flag = seen[r.pass * n_items + r.item];
    if (flag) {
      throw StructuralError("line " + std::to_string(r.line) + ": duplicate row for item '" + ids[r.item] +
                            "' pass " + std::to_string(r.pass));
    }
    flag = 1;
    ++passes_per_item[r.item];
    pass_order[r.pass].push_back(r.item);
  }
  for (std::size_t n = 0; n < n_items; ++n) {
    if (passes_per_item[n] != num_passes) {
      throw StructuralError("item '" + ids[n] + "' has " + std::to_string(passes_per_item[n]) +
                            " passes, expected " + std::to_string(num_passes));
    }
  }
  for (std::size_t t = 0; t < num_passes; ++t) {
    for (std::size_t k = 0; k < n_items; ++k) {
      if (pass_order[t][k] != k) {
        throw StructuralError("pass " + std::to_string(t) + " lists items in a different order than first appearance");
      }
    }
  }

  std::vector<double> probs(num_passes * n_items * num_classes);
  for (const auto& r : parsed) {
    std::copy(r.p.begin(), r.p.end(), probs.begin() + (r.pass * n_items + r.item) * num_classes);
  }
  return McPredictionSet(std::move(ids), num_passes, num_classes, std::move(probs));
}

std::string format_mc_predictions(const McPredictionSet& preds) {
  std::string out = "item_id,mc_pass";
  for (std::size_t c = 0; c < preds.num_classes(); ++c) out += ",p_" + std::to_string(c);
  out += '\n';
  for (std::size_t n = 0; n < preds.num_items(); ++n) {
    for (std::size_t t = 0; t < preds.num_passes(); ++t) {
      out += preds.item_ids()[n];
      out += ',';
      out += std::to_string(t);
      for (double p : preds.row(t, n)) {
        out += ',';
        out += csv::format_double(p);
      }
      out += '\n';
    }
  }
  return out;
}

void save_mc_predictions(const std::filesystem::path& path, const McPredictionSet& preds) {
  csv::write_file(path, format_mc_predictions(preds));
}

LabelSet load_labels(const std::filesystem::path& path) {
  const auto table = csv::read(path);
  if (table.header.size() != 2 || table.header[0] != "item_id" || table.header[1] != "label") {
    throw ParseError("header must be item_id,label", 1);
  }
  std::vector<std::string> ids;
  std::vector<std::size_t> labels;
  for (const auto& row : table.rows) {
    const auto label = csv::parse_int(row.fields[1], row.line);
    if (label < 0) throw ParseError("negative label", row.line);
    ids.push_back(row.fields[0]);
    labels.push_back(static_cast<std::size_t>(label));
  }
  return LabelSet(std::move(ids), std::move(labels));
}

void save_labels(const std::filesystem::path& path, const LabelSet& labels) {
  std::string out = "item_id,label\n";
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out += labels.item_ids()[i] + ',' + std::to_string(labels.labels()[i]) + '\n';
  }
  csv::write_file(path, out);
}

AlignedPair align(const McPredictionSet& preds, const LabelSet& labels) {
  std::unordered_map<std::string, std::size_t> label_index;
  for (std::size_t i = 0; i < labels.size(); ++i) label_index.emplace(labels.item_ids()[i], i);

  std::vector<std::size_t> pred_keep;
  std::vector<std::size_t> label_keep;
  for (std::size_t n = 0; n < preds.num_items(); ++n) {
    const auto it = label_index.find(preds.item_ids()[n]);
    if (it == label_index.end()) continue;
    pred_keep.push_back(n);
    label_keep.push_back(it->second);
  }
  if (pred_keep.empty()) throw StructuralError("predictions and labels share no item ids");

  auto aligned_labels = labels.select(label_keep);
  aligned_labels.check_classes(preds.num_classes());
  return AlignedPair{preds.select(pred_keep), std::move(aligned_labels), preds.num_items() - pred_keep.size(),
                     labels.size() - label_keep.size()};
}

}  // namespace mcunc
