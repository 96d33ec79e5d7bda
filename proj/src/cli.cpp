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

#include "mcunc/cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <unordered_map>

#include "CLI11.hpp"
#include "mcunc/csv.hpp"
#include "mcunc/dropweights_net.hpp"
#include "mcunc/error_analysis.hpp"
#include "mcunc/errors.hpp"
#include "mcunc/mc_store.hpp"
#include "mcunc/referral.hpp"
#include "mcunc/synthetic.hpp"
#include "mcunc/uncertainty.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace mcunc::cli {

namespace {

// ---------------------------------------------------------------- config

json demo_data_defaults() {
  const auto counts = scale_counts(kChestXrayClassCounts, 0.1);
  return {{"class_counts", counts},
          {"dim", 8},
          {"overlap", 1.0},
          {"test_fraction", 0.2},
          {"hidden", std::vector<std::size_t>{32}},
          {"drop_rate", 0.3},
          {"class_weights", json(nullptr)},
          {"epochs", 25},
          {"batch_size", 8},
          {"learning_rate", 1e-3},
          {"lr_decay", 1.0},
          {"plateau_patience", 3}};
}

template <typename T>
T get(const json& c, const char* key) {
  if (!c.contains(key) || c.at(key).is_null()) throw ValidationError(std::string("missing config key '") + key + "'");
  try {
    return c.at(key).get<T>();
  } catch (const json::exception&) {
    throw ValidationError(std::string("config key '") + key + "' has the wrong type");
  }
}

fs::path input_path(const json& c, const char* key) {
  const fs::path p = get<std::string>(c, key);
  if (!fs::exists(p)) throw ValidationError(std::string(key) + ": no such file " + p.string());
  return p;
}

fs::path out_dir(const json& c) {
  const fs::path p = get<std::string>(c, "out");
  if (!fs::is_directory(p)) throw ValidationError("output directory does not exist: " + p.string());
  return p;
}

std::uint64_t seed_of(const json& c) {
  const auto& v = c.at("seed");
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
  throw ValidationError("seed must be a non-negative integer");
}

double snap(double v) { return std::round(v * 1e12) / 1e12; }

// Accepts a JSON array, "a,b,c" or "start:stop:step".
std::vector<double> parse_list(const json& v, const char* key) {
  std::vector<double> out;
  try {
    if (v.is_array()) {
      for (const auto& x : v) out.push_back(x.get<double>());
    } else if (v.is_string()) {
      const auto s = v.get<std::string>();
      if (s.find(':') != std::string::npos) {
        std::vector<std::string> parts;
        std::size_t start = 0;
        for (std::size_t pos; (pos = s.find(':', start)) != std::string::npos; start = pos + 1) {
          parts.push_back(s.substr(start, pos - start));
        }
        parts.push_back(s.substr(start));
        if (parts.size() != 3) throw ValidationError("");
        const double a = csv::parse_double(parts[0], 0);
        const double b = csv::parse_double(parts[1], 0);
        const double step = csv::parse_double(parts[2], 0);
        if (!(step > 0.0) || !(b >= a)) throw ValidationError("");
        const auto n = static_cast<std::size_t>(std::llround((b - a) / step));
        if (std::abs(a + static_cast<double>(n) * step - b) > 1e-9) throw ValidationError("");
        for (std::size_t i = 0; i <= n; ++i) out.push_back(snap(a + static_cast<double>(i) * step));
      } else {
        for (const auto& part : csv::split(s)) out.push_back(csv::parse_double(part, 0));
      }
    } else {
      throw ValidationError("");
    }
  } catch (const Error&) {
    throw ValidationError(std::string("malformed grid for '") + key + "'");
  } catch (const json::exception&) {
    throw ValidationError(std::string("malformed grid for '") + key + "'");
  }
  if (out.empty()) throw ValidationError(std::string("empty grid for '") + key + "'");
  return out;
}

std::vector<double> parse_grid(const json& v, const char* key) {
  auto out = parse_list(v, key);
  for (std::size_t i = 1; i < out.size(); ++i) {
    if (!(out[i] > out[i - 1])) throw ValidationError(std::string("grid '") + key + "' must be strictly increasing");
  }
  return out;
}

std::vector<std::size_t> parse_size_list(const json& v, const char* key) {
  std::vector<std::size_t> out;
  for (double x : parse_list(v, key)) {
    if (x < 0 || x != std::floor(x)) throw ValidationError(std::string("'") + key + "' must list non-negative integers");
    out.push_back(static_cast<std::size_t>(x));
  }
  return out;
}

// Resolves the demo dataset and network hyperparameters shared by train-demo and sweep.
struct DemoSetup {
  std::vector<std::size_t> class_counts;
  std::size_t dim;
  double overlap;
  double test_fraction;
  std::vector<std::size_t> hidden;
  std::vector<double> class_weights;
  TrainOptions train;
};

DemoSetup demo_setup(const json& c) {
  DemoSetup s;
  s.class_counts = get<std::vector<std::size_t>>(c, "class_counts");
  s.dim = get<std::size_t>(c, "dim");
  s.overlap = get<double>(c, "overlap");
  s.test_fraction = get<double>(c, "test_fraction");
  s.hidden = c.at("hidden").is_string() ? parse_size_list(c.at("hidden"), "hidden") : get<std::vector<std::size_t>>(c, "hidden");
  if (c.contains("class_weights") && !c.at("class_weights").is_null()) {
    s.class_weights = c.at("class_weights").is_string() ? parse_list(c.at("class_weights"), "class_weights")
                                                         : get<std::vector<double>>(c, "class_weights");
  } else if (s.class_counts.size() == kChestXrayClassWeights.size()) {
    s.class_weights.assign(kChestXrayClassWeights.begin(), kChestXrayClassWeights.end());
  } else {
    s.class_weights.assign(s.class_counts.size(), 1.0);
  }
  if (s.class_weights.size() != s.class_counts.size()) throw ValidationError("one class weight per class required");
  s.train.epochs = get<std::size_t>(c, "epochs");
  s.train.batch_size = get<std::size_t>(c, "batch_size");
  s.train.learning_rate = get<double>(c, "learning_rate");
  s.train.lr_decay = get<double>(c, "lr_decay");
  s.train.plateau_patience = get<std::size_t>(c, "plateau_patience");
  s.train.seed = seed_of(c);
  if (s.train.epochs < 1) throw ValidationError("epochs must be >= 1");
  if (s.train.batch_size < 1) throw ValidationError("batch_size must be >= 1");
  return s;
}

std::vector<std::size_t> layer_sizes_for(const DemoSetup& s) {
  std::vector<std::size_t> sizes{s.dim};
  sizes.insert(sizes.end(), s.hidden.begin(), s.hidden.end());
  sizes.push_back(s.class_counts.size());
  return sizes;
}

// ------------------------------------------------------------- analysis

json correlation_entry(std::span<const double> u, std::span<const double> err, const char* name) {
  try {
    return spearman_rho(u, err);
  } catch (const DomainError& e) {
    std::cerr << "warning: " << name << " undefined: " << e.what() << '\n';
    return nullptr;
  }
}

struct Analysis {
  UncertaintyReport report;
  LabelSet labels;
  ErrorProfile profile;
  json spearman_ph;
  json spearman_bald;
};

Analysis analyze(const McPredictionSet& preds_in, const LabelSet& labels_in) {
  auto aligned = align(preds_in, labels_in);
  if (aligned.dropped_preds || aligned.dropped_labels) {
    std::cerr << "note: dropped " << aligned.dropped_preds << " prediction items and " << aligned.dropped_labels
              << " label items without a counterpart\n";
  }
  auto report = build_report(aligned.preds);
  auto profile = error_profile(report, aligned.labels);
  auto ph = correlation_entry(report.entropy_ph, profile.wd_error, "spearman_ph_wd");
  auto bd = correlation_entry(report.bald, profile.wd_error, "spearman_bald_wd");
  return {std::move(report), std::move(aligned.labels), std::move(profile), std::move(ph), std::move(bd)};
}

std::string fmt_opt(const json& v) { return v.is_null() ? "" : csv::format_double(v.get<double>()); }

// ---------------------------------------------------------------- flags

enum class Kind { integer, real, text, grid };

struct FlagDef {
  const char* flag;
  const char* key;
  Kind kind;
  const char* help;
};

const std::map<std::string, std::vector<FlagDef>>& flag_table() {
  static const std::vector<FlagDef> demo = {
      {"--class-counts", "class_counts", Kind::grid, "items per class, e.g. 158,279,150,7"},
      {"--dim", "dim", Kind::integer, "feature dimension"},
      {"--overlap", "overlap", Kind::real, "extra per-feature noise std (0 = well separated)"},
      {"--test-fraction", "test_fraction", Kind::real, "stratified test share"},
      {"--hidden", "hidden", Kind::text, "hidden layer widths, comma separated"},
      {"--class-weights", "class_weights", Kind::text, "loss weight per class, comma separated"},
      {"--epochs", "epochs", Kind::integer, "training epochs"},
      {"--batch-size", "batch_size", Kind::integer, "mini-batch size"},
      {"--lr", "learning_rate", Kind::real, "Adam learning rate"},
      {"--lr-decay", "lr_decay", Kind::real, "on-plateau learning-rate multiplier (1 = off)"},
      {"--plateau-patience", "plateau_patience", Kind::integer, "epochs without improvement before decay"},
  };
  static const std::map<std::string, std::vector<FlagDef>> table = [] {
    std::map<std::string, std::vector<FlagDef>> t;
    t["train-demo"] = demo;
    t["train-demo"].push_back({"--drop-rate", "drop_rate", Kind::real, "dropweight rate p"});
    t["predict"] = {{"--checkpoint", "checkpoint", Kind::text, "model checkpoint JSON"},
                    {"--inputs", "inputs", Kind::text, "feature CSV"},
                    {"-T,--passes", "passes", Kind::integer, "MC passes per item"}};
    t["analyze"] = {{"--samples", "samples", Kind::text, "MC-samples CSV"},
                    {"--labels", "labels", Kind::text, "labels CSV"}};
    t["referral"] = {{"--report", "report", Kind::text, "uncertainty report CSV"},
                     {"--labels", "labels", Kind::text, "labels CSV"},
                     {"--fractions", "fractions", Kind::text, "referred-fraction grid"},
                     {"--thresholds", "thresholds", Kind::text, "normalized-uncertainty threshold grid"},
                     {"--trials", "trials", Kind::integer, "random-baseline trials"},
                     {"--measure", "measure", Kind::text, "ph or bald"},
                     {"--human-accuracy", "human_accuracy", Kind::real, "adds a combined_accuracy column"}};
    t["sweep"] = demo;
    t["sweep"].push_back({"--drop-rates", "drop_rates", Kind::text, "dropweight rate grid"});
    t["sweep"].push_back({"--passes-grid", "passes_grid", Kind::text, "MC pass-count grid"});
    t["sweep"].push_back({"--checkpoints", "checkpoints", Kind::text, "comma-separated checkpoints instead of training"});
    t["sweep"].push_back({"--inputs", "inputs", Kind::text, "feature CSV (with --checkpoints)"});
    t["sweep"].push_back({"--labels", "labels", Kind::text, "labels CSV (with --checkpoints)"});
    t["saliency"] = {{"--checkpoint", "checkpoint", Kind::text, "model checkpoint JSON"},
                     {"--inputs", "inputs", Kind::text, "feature CSV"},
                     {"--target-class", "target_class", Kind::integer, "class to explain (default: predicted)"}};
    return t;
  }();
  return table;
}

json flag_value(const std::string& raw, Kind kind, const char* flag) {
  try {
    switch (kind) {
      case Kind::integer: {
        const auto v = csv::parse_int(raw, 0);
        return v;
      }
      case Kind::real:
        return csv::parse_double(raw, 0);
      case Kind::grid: {
        json arr = json::array();
        for (const auto& part : csv::split(raw)) arr.push_back(csv::parse_int(part, 0));
        return arr;
      }
      case Kind::text:
        return raw;
    }
  } catch (const Error&) {
  }
  throw ValidationError(std::string("invalid value '") + raw + "' for " + flag);
}

json load_config_file(const std::string& path, const std::string& command) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open config " + path);
  json file;
  try {
    file = json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError("config " + path + ": " + e.what());
  }
  if (!file.is_object()) throw ValidationError("config must be a JSON object");
  json merged = json::object();
  for (const auto& [k, v] : file.items()) {
    if (!flag_table().contains(k)) merged[k] = v;
  }
  if (file.contains(command) && file.at(command).is_object()) {
    for (const auto& [k, v] : file.at(command).items()) merged[k] = v;
  }
  return merged;
}

}  // namespace

json default_config(std::string_view command) {
  json c = {{"seed", 0}, {"out", "."}};
  if (command == "train-demo" || command == "sweep") c.update(demo_data_defaults());
  if (command == "predict") c["passes"] = 50;
  if (command == "referral") {
    c["fractions"] = "0:1:0.1";
    c["thresholds"] = "0:1:0.05";
    c["trials"] = 1000;
    c["measure"] = "ph";
    c["human_accuracy"] = nullptr;
  }
  if (command == "sweep") {
    c["drop_rates"] = json::array({0.1, 0.3, 0.5});
    c["passes_grid"] = json::array({10, 25, 50});
    c["checkpoints"] = nullptr;
  }
  if (command == "saliency") c["target_class"] = nullptr;
  return c;
}

// ------------------------------------------------------------- commands

void cmd_train_demo(const json& c) {
  const auto out = out_dir(c);
  const auto setup = demo_setup(c);
  const double drop_rate = get<double>(c, "drop_rate");
  const auto seed = setup.train.seed;

  const auto data = generate_synthetic(seed, setup.class_counts, setup.dim, setup.overlap);
  const auto split = stratified_split(data, setup.test_fraction, seed + 1);
  DropweightNet net(layer_sizes_for(setup), drop_rate, setup.class_weights, seed);
  const auto result = train(net, split.train.inputs, split.train.labels, setup.train);

  save_checkpoint(out / "checkpoint.json", net);
  std::string loss = "epoch,loss,learning_rate\n";
  for (std::size_t e = 0; e < result.epoch_loss.size(); ++e) {
    loss += std::to_string(e) + ',' + csv::format_double(result.epoch_loss[e]) + ',' +
            csv::format_double(result.epoch_learning_rate[e]) + '\n';
  }
  csv::write_file(out / "loss.csv", loss);
  save_features(out / "train_features.csv", split.train.item_ids, split.train.inputs);
  save_labels(out / "train_labels.csv", split.train.label_set());
  save_features(out / "test_features.csv", split.test.item_ids, split.test.inputs);
  save_labels(out / "test_labels.csv", split.test.label_set());

  std::cout << "train accuracy (masks off): " << accuracy(net, split.train.inputs, split.train.labels) << '\n';
  if (split.test.size()) {
    std::cout << "test accuracy (masks off): " << accuracy(net, split.test.inputs, split.test.labels) << '\n';
  }
}

void cmd_predict(const json& c) {
  const auto out = out_dir(c);
  const auto net = load_checkpoint(input_path(c, "checkpoint"));
  const auto features = load_features(input_path(c, "inputs"));
  const auto passes = get<std::int64_t>(c, "passes");
  if (passes < 1) throw ValidationError("passes (T) must be >= 1");
  const auto preds = mc_predict(net, features.inputs, features.item_ids, static_cast<std::size_t>(passes), seed_of(c));
  save_mc_predictions(out / "mc_samples.csv", preds);
  std::cout << "wrote " << preds.num_items() * preds.num_passes() << " rows\n";
}

void cmd_analyze(const json& c) {
  const auto out = out_dir(c);
  const auto preds = load_mc_predictions(input_path(c, "samples"));
  const auto labels = load_labels(input_path(c, "labels"));
  const auto a = analyze(preds, labels);

  save_report(out / "report.csv", a.report);
  csv::write_file(out / "profile.csv", format_profile(a.profile, a.labels));
  csv::write_file(out / "summary.json", summary_json(group_summary(a.report, a.profile)));
  csv::write_file(out / "confusion.csv", format_confusion(confusion_matrix(a.report, a.labels)));
  nlohmann::ordered_json corr;
  corr["spearman_ph_wd"] = a.spearman_ph;
  corr["spearman_bald_wd"] = a.spearman_bald;
  corr["n"] = a.report.size();
  csv::write_file(out / "correlation.json", corr.dump(2) + "\n");
  std::cout << "accuracy: " << a.profile.accuracy() << "  spearman(PH, WD): " << a.spearman_ph.dump()
            << "  spearman(BALD, WD): " << a.spearman_bald.dump() << '\n';
}

void cmd_referral(const json& c) {
  const auto out = out_dir(c);
  const auto report = load_report(input_path(c, "report"));
  const auto labels = load_labels(input_path(c, "labels"));
  const auto fractions = parse_grid(c.at("fractions"), "fractions");
  const auto thresholds = parse_grid(c.at("thresholds"), "thresholds");
  const auto trials = get<std::int64_t>(c, "trials");
  if (trials < 1) throw ValidationError("trials must be >= 1");
  const auto measure = get<std::string>(c, "measure");
  if (measure != "ph" && measure != "bald") throw ValidationError("measure must be 'ph' or 'bald'");
  std::optional<double> human;
  if (c.contains("human_accuracy") && !c.at("human_accuracy").is_null()) {
    human = get<double>(c, "human_accuracy");
    if (!(*human >= 0.0 && *human <= 1.0)) throw ValidationError("human_accuracy must lie in [0, 1]");
  }

  std::unordered_map<std::string, std::size_t> label_of;
  for (std::size_t i = 0; i < labels.size(); ++i) label_of.emplace(labels.item_ids()[i], labels.labels()[i]);
  std::vector<double> u_raw, u_norm;
  std::vector<bool> correct;
  for (std::size_t i = 0; i < report.size(); ++i) {
    const auto it = label_of.find(report.item_ids[i]);
    if (it == label_of.end()) continue;
    if (it->second >= report.num_classes) throw ValidationError("label out of range for item '" + it->first + "'");
    u_raw.push_back(measure == "ph" ? report.entropy_ph[i] : report.bald[i]);
    u_norm.push_back(measure == "ph" ? report.entropy_ph_norm[i] : report.bald_norm[i]);
    correct.push_back(report.predicted_class[i] == it->second);
  }
  if (correct.empty()) throw StructuralError("report and labels share no item ids");

  for (double t : thresholds) {
    if (t < 0.0 || t > 1.0) throw ValidationError("thresholds must lie in [0, 1]");
  }
  for (double f : fractions) {
    if (f < 0.0 || f > 1.0) throw ValidationError("fractions must lie in [0, 1]");
  }
  csv::write_file(out / "referral_fraction.csv", format_curve(refer_by_fraction(u_raw, correct, fractions), human));
  csv::write_file(out / "referral_threshold.csv",
                  format_curve(refer_by_threshold(u_norm, correct, thresholds), human));
  csv::write_file(out / "referral_random.csv",
                  format_baseline(random_referral_baseline(correct, fractions, static_cast<std::size_t>(trials), seed_of(c))));
  std::cout << "referral curves written for " << correct.size() << " items\n";
}

void cmd_sweep(const json& c) {
  const auto out = out_dir(c);
  const auto seed = seed_of(c);
  const auto passes_grid = parse_size_list(c.at("passes_grid"), "passes_grid");
  for (auto t : passes_grid) {
    if (t < 1) throw ValidationError("passes_grid entries must be >= 1");
  }

  std::vector<DropweightNet> nets;
  Matrix test_inputs;
  std::vector<std::string> test_ids;
  std::optional<LabelSet> test_labels;

  if (c.contains("checkpoints") && !c.at("checkpoints").is_null()) {
    std::vector<std::string> paths;
    if (c.at("checkpoints").is_string()) {
      paths = csv::split(c.at("checkpoints").get<std::string>());
    } else {
      paths = get<std::vector<std::string>>(c, "checkpoints");
    }
    for (const auto& p : paths) {
      if (!fs::exists(p)) throw ValidationError("checkpoints: no such file " + p);
      nets.push_back(load_checkpoint(p));
    }
    auto features = load_features(input_path(c, "inputs"));
    test_inputs = std::move(features.inputs);
    test_ids = std::move(features.item_ids);
    test_labels = load_labels(input_path(c, "labels"));
  } else {
    const auto setup = demo_setup(c);
    const auto drop_rates = parse_grid(c.at("drop_rates"), "drop_rates");
    const auto data = generate_synthetic(seed, setup.class_counts, setup.dim, setup.overlap);
    const auto split = stratified_split(data, setup.test_fraction, seed + 1);
    if (split.test.size() == 0) throw ValidationError("sweep needs a non-empty test split");
    for (double p : drop_rates) {
      DropweightNet net(layer_sizes_for(setup), p, setup.class_weights, seed);
      train(net, split.train.inputs, split.train.labels, setup.train);
      nets.push_back(std::move(net));
    }
    test_inputs = split.test.inputs;
    test_ids = split.test.item_ids;
    test_labels = split.test.label_set();
  }

  std::string table = "p,T,spearman_ph_wd,spearman_bald_wd,mean_ph_correct,mean_ph_wrong,accuracy\n";
  for (const auto& net : nets) {
    for (auto passes : passes_grid) {
      try {
        const auto preds = mc_predict(net, test_inputs, test_ids, passes, seed);
        const auto a = analyze(preds, *test_labels);
        const auto summary = group_summary(a.report, a.profile);
        table += csv::format_double(net.drop_rate()) + ',' + std::to_string(passes) + ',' + fmt_opt(a.spearman_ph) +
                 ',' + fmt_opt(a.spearman_bald) + ',' +
                 (summary.correct.ph_mean ? csv::format_double(*summary.correct.ph_mean) : "") + ',' +
                 (summary.erroneous.ph_mean ? csv::format_double(*summary.erroneous.ph_mean) : "") + ',' +
                 csv::format_double(a.profile.accuracy()) + '\n';
      } catch (const Error& e) {
        throw NumericalError("sweep run p=" + csv::format_double(net.drop_rate()) + " T=" + std::to_string(passes) +
                             " failed: " + e.what());
      }
    }
  }
  csv::write_file(out / "sweep.csv", table);
  std::cout << "sweep wrote " << nets.size() * passes_grid.size() << " rows\n";
}

void cmd_saliency(const json& c) {
  const auto out = out_dir(c);
  const auto net = load_checkpoint(input_path(c, "checkpoint"));
  const auto features = load_features(input_path(c, "inputs"));
  std::optional<std::size_t> target;
  if (c.contains("target_class") && !c.at("target_class").is_null()) {
    const auto t = get<std::int64_t>(c, "target_class");
    if (t < 0 || static_cast<std::size_t>(t) >= net.num_classes()) throw ValidationError("target_class out of range");
    target = static_cast<std::size_t>(t);
  }
  std::string table = "item_id,target_class";
  for (std::size_t j = 0; j < features.inputs.cols; ++j) table += ",g_" + std::to_string(j);
  table += '\n';
  for (std::size_t i = 0; i < features.inputs.rows; ++i) {
    const auto x = features.inputs.row(i);
    const std::size_t cls = target ? *target : argmax(forward(net, x, MaskMode::off()));
    table += features.item_ids[i] + ',' + std::to_string(cls);
    for (double g : input_gradient_saliency(net, x, cls)) table += ',' + csv::format_double(g);
    table += '\n';
  }
  csv::write_file(out / "saliency.csv", table);
  std::cout << "saliency written for " << features.inputs.rows << " items\n";
}

// ------------------------------------------------------------------ run

int run(int argc, const char* const* argv) {
  CLI::App app{"Monte-Carlo dropweights uncertainty, error correlation and referral analysis"};
  app.require_subcommand(1);

  struct Bound {
    CLI::App* sub;
    std::string config_path;
    std::string seed;
    std::string out;
    std::map<std::string, std::string> raw;  // key -> flag text
    std::map<std::string, CLI::Option*> opts;
  };
  static const std::map<std::string, void (*)(const json&)> commands = {
      {"train-demo", cmd_train_demo}, {"predict", cmd_predict}, {"analyze", cmd_analyze},
      {"referral", cmd_referral},     {"sweep", cmd_sweep},     {"saliency", cmd_saliency}};
  static const std::map<std::string, std::string> descriptions = {
      {"train-demo", "train the dropweights demo network on synthetic imbalanced data"},
      {"predict", "write MC-dropweights samples for a feature file"},
      {"analyze", "uncertainty report, error correlation, confusion matrix, group summary"},
      {"referral", "uncertainty-aware and random referral curves"},
      {"sweep", "drop-rate x pass-count grid of correlation and accuracy"},
      {"saliency", "input-gradient saliency per item"}};

  std::map<std::string, Bound> bound;
  for (const auto& [name, fn] : commands) {
    auto& b = bound[name];
    b.sub = app.add_subcommand(name, descriptions.at(name));
    b.opts["config"] = b.sub->add_option("--config", b.config_path, "JSON config file");
    b.opts["seed"] = b.sub->add_option("--seed", b.seed, "random seed");
    b.opts["out"] = b.sub->add_option("--out", b.out, "existing output directory");
    for (const auto& def : flag_table().at(name)) {
      b.opts[def.key] = b.sub->add_option(def.flag, b.raw[def.key], def.help);
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  for (auto& [name, b] : bound) {
    if (!b.sub->parsed()) continue;
    try {
      json config = default_config(name);
      if (b.opts["config"]->count()) config.update(load_config_file(b.config_path, name));
      if (b.opts["seed"]->count()) config["seed"] = flag_value(b.seed, Kind::integer, "--seed");
      if (b.opts["out"]->count()) config["out"] = b.out;
      for (const auto& def : flag_table().at(name)) {
        if (b.opts[def.key]->count()) config[def.key] = flag_value(b.raw[def.key], def.kind, def.flag);
      }
      commands.at(name)(config);
      return kExitOk;
    } catch (const NumericalError& e) {
      std::cerr << "error: " << e.what() << '\n';
      return kExitNumerical;
    } catch (const Error& e) {
      std::cerr << "error: " << e.what() << '\n';
      return kExitConfig;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      return kExitNumerical;
    }
  }
  return kExitConfig;
}

}  // namespace mcunc::cli
