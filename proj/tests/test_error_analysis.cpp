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

#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "mcunc/error_analysis.hpp"
#include "mcunc/errors.hpp"
#include "oracles.hpp"

using namespace mcunc;

namespace {

UncertaintyReport report_from_means(std::size_t C, const std::vector<std::vector<double>>& means) {
  std::vector<std::string> ids;
  std::vector<double> flat;
  for (std::size_t i = 0; i < means.size(); ++i) {
    ids.push_back("i" + std::to_string(i));
    flat.insert(flat.end(), means[i].begin(), means[i].end());
  }
  return build_report(McPredictionSet(ids, 1, C, flat));
}

LabelSet labels_for(const UncertaintyReport& r, std::vector<std::size_t> labels) {
  return LabelSet(r.item_ids, std::move(labels));
}

}  // namespace

TEST_CASE("one_hot") {
  CHECK(one_hot(0, 2) == std::vector<double>{1, 0});
  CHECK(one_hot(3, 4) == std::vector<double>{0, 0, 0, 1});
  CHECK_THROWS_AS(one_hot(2, 2), DomainError);
}

TEST_CASE("wasserstein_discrete examples") {
  const std::vector<double> p{0.2, 0.3, 0.5};
  CHECK(wasserstein_discrete(p, p) == 0.0);
  CHECK(wasserstein_discrete(std::vector<double>{1, 0, 0, 0}, std::vector<double>{0, 0, 0, 1}) == 3.0);
  CHECK(oracle::transport_lp({1, 0, 0, 0}, {0, 0, 0, 1}) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(wasserstein_discrete(std::vector<double>{0.5, 0.5}, std::vector<double>{0, 1}) == 0.5);
  CHECK_THROWS_AS(wasserstein_discrete(std::vector<double>{1, 0}, std::vector<double>{1, 0, 0}), DomainError);
}

TEST_CASE("property: wasserstein_discrete agrees with the transport LP") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t C = 2 + static_cast<std::size_t>(trial) % 4;
    const auto p = oracle::random_simplex(rng, C);
    const auto q = oracle::random_simplex(rng, C);
    CHECK(std::abs(wasserstein_discrete(p, q) - oracle::transport_lp(p, q)) <= 1e-9);
  }
}

TEST_CASE("property: wasserstein_discrete is a metric") {
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t C = 2 + static_cast<std::size_t>(trial) % 4;
    const auto p = oracle::random_simplex(rng, C);
    const auto q = oracle::random_simplex(rng, C);
    const auto r = oracle::random_simplex(rng, C);
    const double pq = wasserstein_discrete(p, q);
    CHECK(std::abs(pq - wasserstein_discrete(q, p)) <= 1e-12);
    CHECK(pq <= wasserstein_discrete(p, r) + wasserstein_discrete(r, q) + 1e-12);
    CHECK(wasserstein_discrete(p, p) == 0.0);
    CHECK((pq > 0.0) == (p != q));
  }
}

TEST_CASE("spearman_rho examples") {
  CHECK(spearman_rho(std::vector<double>{1, 2, 3}, std::vector<double>{10, 20, 30}) == doctest::Approx(1.0));
  CHECK(spearman_rho(std::vector<double>{1, 2, 3}, std::vector<double>{30, 20, 10}) == doctest::Approx(-1.0));
  // scipy.stats.spearmanr: 0.9486832980505139 (average ranks, Pearson on ranks)
  CHECK(spearman_rho(std::vector<double>{1, 2, 2, 4}, std::vector<double>{1, 3, 2, 4}) ==
        doctest::Approx(0.9486832980505139).epsilon(1e-14));
  // scipy.stats.spearmanr: 0.8720815992723809
  CHECK(spearman_rho(std::vector<double>{0.3, 0.1, 0.2, 0.9, 0.5}, std::vector<double>{1, 0.2, 0.2, 3, 0.9}) ==
        doctest::Approx(0.8720815992723809).epsilon(1e-14));
  CHECK_THROWS_AS(spearman_rho(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}), UndefinedCorrelation);
  CHECK_THROWS_AS(spearman_rho(std::vector<double>{1, 2, 3}, std::vector<double>{5, 5, 5}), UndefinedCorrelation);
  CHECK_THROWS_AS(spearman_rho(std::vector<double>{1}, std::vector<double>{1}), DomainError);
}

TEST_CASE("average_ranks gives tied values the mean rank") {
  CHECK(average_ranks(std::vector<double>{1, 2, 2, 4}) == std::vector<double>{1, 2.5, 2.5, 4});
  CHECK(average_ranks(std::vector<double>{3, 3, 3}) == std::vector<double>{2, 2, 2});
}

TEST_CASE("property: spearman_rho rank invariants") {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> z(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> x(12), y(12), ex(12), neg(12);
    for (std::size_t i = 0; i < 12; ++i) {
      x[i] = std::round(z(rng) * 3.0);  // induce ties
      y[i] = x[i] + z(rng);
      ex[i] = std::exp(x[i]);
      neg[i] = -x[i];
    }
    if (std::all_of(x.begin(), x.end(), [&](double v) { return v == x[0]; })) continue;
    CHECK(spearman_rho(ex, y) == doctest::Approx(spearman_rho(x, y)).epsilon(1e-14));
    CHECK(spearman_rho(x, x) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(spearman_rho(x, neg) == doctest::Approx(-1.0).epsilon(1e-14));
    const double r = spearman_rho(x, y);
    CHECK(r >= -1.0);
    CHECK(r <= 1.0);
  }
}

TEST_CASE("confusion_matrix") {
  SUBCASE("all correct is diagonal") {
    const auto r = report_from_means(3, {{1, 0, 0}, {0, 1, 0}, {0, 1, 0}, {0, 0, 1}});
    const auto m = confusion_matrix(r, labels_for(r, {0, 1, 1, 2}));
    CHECK(m(0, 0) == 1);
    CHECK(m(1, 1) == 2);
    CHECK(m(2, 2) == 1);
    CHECK(m.trace() == 4);
    CHECK(m.total() == 4);
  }
  SUBCASE("single miss") {
    const auto r = report_from_means(2, {{0.7, 0.3}});
    const auto m = confusion_matrix(r, labels_for(r, {1}));
    CHECK(m(1, 0) == 1);
    CHECK(m(0, 0) + m(0, 1) + m(1, 1) == 0);
  }
  SUBCASE("misaligned inputs") {
    const auto r = report_from_means(2, {{0.7, 0.3}});
    CHECK_THROWS_AS(confusion_matrix(r, LabelSet({"zz"}, {0})), StructuralError);
  }
  SUBCASE("csv layout") {
    const auto r = report_from_means(2, {{0.7, 0.3}, {0.2, 0.8}});
    CHECK(format_confusion(confusion_matrix(r, labels_for(r, {1, 1}))) == "0,1\n0,0\n1,1\n");
  }
}

TEST_CASE("error_profile") {
  SUBCASE("exact one-hot mean") {
    const auto r = report_from_means(3, {{0, 1, 0}});
    const auto e = error_profile(r, labels_for(r, {1}));
    CHECK(e.wd_error[0] == 0.0);
    CHECK(e.correct[0]);
  }
  SUBCASE("binary miss") {
    const auto r = report_from_means(2, {{0.6, 0.4}});
    const auto e = error_profile(r, labels_for(r, {1}));
    CHECK(e.wd_error[0] == doctest::Approx(0.6).epsilon(1e-15));
    CHECK_FALSE(e.correct[0]);
  }
  SUBCASE("uniform mean against label 0") {
    const auto r = report_from_means(4, {{0.25, 0.25, 0.25, 0.25}});
    const auto e = error_profile(r, labels_for(r, {0}));
    CHECK(e.wd_error[0] == doctest::Approx(1.5).epsilon(1e-15));
  }
}

TEST_CASE("property: error profile bounds and confusion trace") {
  std::mt19937_64 rng(24);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t C = 2 + static_cast<std::size_t>(trial) % 4;
    std::vector<std::vector<double>> means;
    std::vector<std::size_t> labels;
    std::uniform_int_distribution<std::size_t> pick(0, C - 1);
    for (int i = 0; i < 15; ++i) {
      means.push_back(oracle::random_simplex(rng, C));
      labels.push_back(pick(rng));
    }
    const auto r = report_from_means(C, means);
    const auto l = labels_for(r, labels);
    const auto e = error_profile(r, l, Exec::serial);
    const auto ep = error_profile(r, l, Exec::parallel);
    CHECK(e.wd_error == ep.wd_error);
    for (std::size_t i = 0; i < e.size(); ++i) {
      CHECK(e.wd_error[i] >= 0.0);
      CHECK(e.wd_error[i] <= static_cast<double>(C - 1) + 1e-12);
      CHECK((e.wd_error[i] == 0.0) == (r.mean_row(i)[labels[i]] == 1.0));
    }
    const auto m = confusion_matrix(r, l);
    CHECK(m.total() == 15);
    CHECK(static_cast<double>(m.trace()) / 15.0 == doctest::Approx(e.accuracy()));
  }
}

TEST_CASE("group_summary") {
  SUBCASE("all correct leaves the erroneous group absent") {
    const auto r = report_from_means(2, {{0.9, 0.1}, {0.2, 0.8}});
    const auto s = group_summary(r, error_profile(r, labels_for(r, {0, 1})));
    CHECK(s.correct.count == 2);
    CHECK(s.erroneous.count == 0);
    CHECK_FALSE(s.erroneous.ph_mean.has_value());
    CHECK_FALSE(s.ph_mean_diff.has_value());
    const auto json = summary_json(s);
    CHECK(json.find("\"erroneous\"") != std::string::npos);
    CHECK(json.find("null") != std::string::npos);
  }
  SUBCASE("difference of group means") {
    UncertaintyReport r;
    r.item_ids = {"a", "b"};
    r.entropy_ph_norm = {0.1, 0.5};
    r.bald_norm = {0.0, 0.2};
    ErrorProfile e{{"a", "b"}, {0.0, 1.0}, {true, false}};
    const auto s = group_summary(r, e);
    CHECK(*s.ph_mean_diff == doctest::Approx(0.4).epsilon(1e-15));
    CHECK(*s.bald_mean_diff == doctest::Approx(0.2).epsilon(1e-15));
  }
  SUBCASE("random split matches re-summation") {
    std::mt19937_64 rng(25);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::bernoulli_distribution b(0.4);
    UncertaintyReport r;
    ErrorProfile e;
    for (int i = 0; i < 41; ++i) {
      r.item_ids.push_back("i" + std::to_string(i));
      r.entropy_ph_norm.push_back(u(rng));
      r.bald_norm.push_back(u(rng));
      e.item_ids.push_back(r.item_ids.back());
      e.wd_error.push_back(0.0);
      e.correct.push_back(b(rng));
    }
    long double ok = 0, bad = 0;
    std::size_t nok = 0, nbad = 0;
    std::vector<double> okv;
    for (int i = 0; i < 41; ++i) {
      if (e.correct[i]) {
        ok += r.entropy_ph_norm[i];
        ++nok;
        okv.push_back(r.entropy_ph_norm[i]);
      } else {
        bad += r.entropy_ph_norm[i];
        ++nbad;
      }
    }
    const auto s = group_summary(r, e);
    CHECK(s.correct.count == nok);
    CHECK(s.erroneous.count == nbad);
    CHECK(*s.correct.ph_mean == doctest::Approx(static_cast<double>(ok / nok)).epsilon(1e-13));
    CHECK(*s.erroneous.ph_mean == doctest::Approx(static_cast<double>(bad / nbad)).epsilon(1e-13));
    std::sort(okv.begin(), okv.end());
    const double med = okv.size() % 2 ? okv[okv.size() / 2] : 0.5 * (okv[okv.size() / 2 - 1] + okv[okv.size() / 2]);
    CHECK(*s.correct.ph_median == med);
  }
}
