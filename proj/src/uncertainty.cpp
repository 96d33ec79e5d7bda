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

#include "mcunc/uncertainty.hpp"

#include <cmath>

#include "mcunc/csv.hpp"
#include "mcunc/errors.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace mcunc {

int max_threads() noexcept {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace {

// Entropy without argument checks; callers hold simplex rows.
double entropy_unchecked(const double* p, std::size_t n) noexcept {
  double h = 0.0;
  for (std::size_t c = 0; c < n; ++c) {
    if (p[c] > 0.0) h -= p[c] * std::log(p[c]);
  }
  return h;
}

// Both averages are taken relative to pass 0, so T identical passes reproduce
// pass 0 bit for bit and their mutual information is exactly zero.
void mean_row_into(const McPredictionSet& preds, std::size_t item, double* out) noexcept {
  const std::size_t C = preds.num_classes();
  const std::size_t T = preds.num_passes();
  const auto first = preds.row(0, item);
  for (std::size_t c = 0; c < C; ++c) out[c] = 0.0;
  for (std::size_t t = 1; t < T; ++t) {
    const auto row = preds.row(t, item);
    for (std::size_t c = 0; c < C; ++c) out[c] += row[c] - first[c];
  }
  const double inv_t = 1.0 / static_cast<double>(T);
  for (std::size_t c = 0; c < C; ++c) out[c] = first[c] + out[c] * inv_t;
}

double expected_entropy_unchecked(const McPredictionSet& preds, std::size_t item) noexcept {
  const std::size_t C = preds.num_classes();
  const double h0 = entropy_unchecked(preds.row(0, item).data(), C);
  double shift = 0.0;
  for (std::size_t t = 1; t < preds.num_passes(); ++t) shift += entropy_unchecked(preds.row(t, item).data(), C) - h0;
  return h0 + shift / static_cast<double>(preds.num_passes());
}

double clamp_mutual_information(double mi, std::size_t item) {
  if (mi < -1e-9) {
    throw NumericalError("negative mutual information " + csv::format_double(mi) + " for item " +
                         std::to_string(item));
  }
  return mi < 0.0 ? 0.0 : mi;
}

// Fills every per-item field of `r` for one item.
void report_item(const McPredictionSet& preds, std::size_t n, double log_c, UncertaintyReport& r) {
  const std::size_t C = preds.num_classes();
  double* mean = r.predictive_mean.data() + n * C;
  mean_row_into(preds, n, mean);
  r.predicted_class[n] = argmax(std::span<const double>(mean, C));
  const double ph = entropy_unchecked(mean, C);
  const double eh = expected_entropy_unchecked(preds, n);
  const double mi = clamp_mutual_information(ph - eh, n);
  r.entropy_ph[n] = ph;
  r.expected_entropy[n] = eh;
  r.bald[n] = mi;
  r.entropy_ph_norm[n] = std::min(1.0, ph / log_c);
  r.bald_norm[n] = std::min(1.0, mi / log_c);
}

}  // namespace

std::size_t argmax(std::span<const double> values) noexcept {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

double predictive_entropy(std::span<const double> dist) {
  for (double p : dist) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw DomainError("entropy of a negative or non-finite probability");
  }
  return entropy_unchecked(dist.data(), dist.size());
}

std::vector<double> predictive_mean(const McPredictionSet& preds, Exec exec) {
  const std::size_t N = preds.num_items();
  const std::size_t C = preds.num_classes();
  std::vector<double> mean(N * C);
  if (exec == Exec::serial) {
    for (std::size_t n = 0; n < N; ++n) mean_row_into(preds, n, mean.data() + n * C);
  } else {
    const auto count = static_cast<std::ptrdiff_t>(N);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t n = 0; n < count; ++n) {
      mean_row_into(preds, static_cast<std::size_t>(n), mean.data() + static_cast<std::size_t>(n) * C);
    }
  }
  return mean;
}

double expected_entropy(const McPredictionSet& preds, std::size_t item) {
  if (item >= preds.num_items()) throw DomainError("item index out of range");
  return expected_entropy_unchecked(preds, item);
}

double bald(const McPredictionSet& preds, std::size_t item) {
  if (item >= preds.num_items()) throw DomainError("item index out of range");
  std::vector<double> mean(preds.num_classes());
  mean_row_into(preds, item, mean.data());
  const double ph = entropy_unchecked(mean.data(), mean.size());
  return clamp_mutual_information(ph - expected_entropy_unchecked(preds, item), item);
}

UncertaintyReport build_report(const McPredictionSet& preds, Exec exec) {
  const std::size_t N = preds.num_items();
  const std::size_t C = preds.num_classes();
  UncertaintyReport r;
  r.item_ids = preds.item_ids();
  r.num_classes = C;
  r.predictive_mean.assign(N * C, 0.0);
  r.predicted_class.assign(N, 0);
  r.entropy_ph.assign(N, 0.0);
  r.expected_entropy.assign(N, 0.0);
  r.bald.assign(N, 0.0);
  r.entropy_ph_norm.assign(N, 0.0);
  r.bald_norm.assign(N, 0.0);
  const double log_c = std::log(static_cast<double>(C));

  if (exec == Exec::serial) {
    for (std::size_t n = 0; n < N; ++n) report_item(preds, n, log_c, r);
    return r;
  }

  // Exceptions may not escape an OpenMP region; capture the first failure.
  const auto count = static_cast<std::ptrdiff_t>(N);
  std::vector<std::string> failures(N);
  bool failed = false;
#pragma omp parallel for schedule(static) reduction(|| : failed)
  for (std::ptrdiff_t n = 0; n < count; ++n) {
    try {
      report_item(preds, static_cast<std::size_t>(n), log_c, r);
    } catch (const std::exception& e) {
      failures[static_cast<std::size_t>(n)] = e.what();
      failed = true;
    }
  }
  if (failed) {
    for (const auto& f : failures) {
      if (!f.empty()) throw NumericalError(f);
    }
  }
  return r;
}

std::string format_report(const UncertaintyReport& report) {
  std::string out = "item_id,predicted_class,ph,bald,ph_norm,bald_norm,expected_entropy";
  for (std::size_t c = 0; c < report.num_classes; ++c) out += ",mean_" + std::to_string(c);
  out += '\n';
  for (std::size_t n = 0; n < report.size(); ++n) {
    out += report.item_ids[n];
    out += ',' + std::to_string(report.predicted_class[n]);
    for (double v : {report.entropy_ph[n], report.bald[n], report.entropy_ph_norm[n], report.bald_norm[n],
                     report.expected_entropy[n]}) {
      out += ',' + csv::format_double(v);
    }
    for (double v : report.mean_row(n)) out += ',' + csv::format_double(v);
    out += '\n';
  }
  return out;
}

void save_report(const std::filesystem::path& path, const UncertaintyReport& report) {
  csv::write_file(path, format_report(report));
}

UncertaintyReport load_report(const std::filesystem::path& path) {
  static constexpr const char* kFixed[] = {"item_id", "predicted_class", "ph", "bald",
                                           "ph_norm", "bald_norm", "expected_entropy"};
  const auto table = csv::read(path);
  const auto& h = table.header;
  if (h.size() < 9) throw ParseError("report header too short", 1);
  for (std::size_t i = 0; i < 7; ++i) {
    if (h[i] != kFixed[i]) throw ParseError("unexpected report column '" + h[i] + "'", 1);
  }
  UncertaintyReport r;
  r.num_classes = h.size() - 7;
  for (std::size_t c = 0; c < r.num_classes; ++c) {
    if (h[7 + c] != "mean_" + std::to_string(c)) throw ParseError("unexpected report column '" + h[7 + c] + "'", 1);
  }
  for (const auto& row : table.rows) {
    const auto& f = row.fields;
    r.item_ids.push_back(f[0]);
    const auto cls = csv::parse_int(f[1], row.line);
    if (cls < 0 || static_cast<std::size_t>(cls) >= r.num_classes) throw ParseError("predicted_class out of range", row.line);
    r.predicted_class.push_back(static_cast<std::size_t>(cls));
    r.entropy_ph.push_back(csv::parse_double(f[2], row.line));
    r.bald.push_back(csv::parse_double(f[3], row.line));
    r.entropy_ph_norm.push_back(csv::parse_double(f[4], row.line));
    r.bald_norm.push_back(csv::parse_double(f[5], row.line));
    r.expected_entropy.push_back(csv::parse_double(f[6], row.line));
    for (std::size_t c = 0; c < r.num_classes; ++c) r.predictive_mean.push_back(csv::parse_double(f[7 + c], row.line));
  }
  if (r.item_ids.empty()) throw StructuralError(path.string() + ": empty report");
  return r;
}

}  // namespace mcunc
