// Copyright (c) 2026 The ecapa-cpp Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "ecapa/rng.hpp"
#include "ecapa/scoring.hpp"

using namespace ecapa;

namespace {

// Brute-force metric oracle: evaluates miss/fa at every midpoint between
// adjacent sorted scores plus both extremes, then resolves the EER crossing
// and the cost minimum from those points directly.
struct BruteForce {
  std::vector<OperatingPoint> points;

  BruteForce(std::vector<double> targets, std::vector<double> nontargets) {
    std::vector<double> all = targets;
    all.insert(all.end(), nontargets.begin(), nontargets.end());
    std::sort(all.begin(), all.end());
    all.erase(std::unique(all.begin(), all.end()), all.end());
    std::vector<double> thresholds;
    thresholds.push_back(all.front() - 1.0);
    for (std::size_t i = 0; i + 1 < all.size(); ++i)
      thresholds.push_back(0.5 * (all[i] + all[i + 1]));
    thresholds.push_back(all.back() + 1.0);
    for (double th : thresholds) {
      double miss = 0, fa = 0;
      for (double t : targets) miss += t < th ? 1 : 0;
      for (double n : nontargets) fa += n >= th ? 1 : 0;
      points.push_back({th, miss / static_cast<double>(targets.size()),
                        fa / static_cast<double>(nontargets.size())});
    }
  }

  double eer() const {
    for (std::size_t i = 0; i < points.size(); ++i) {
      const double d = points[i].p_miss - points[i].p_fa;
      if (d < 0) continue;
      if (d == 0 || i == 0) return points[i].p_miss;
      const auto& a = points[i - 1];
      const auto& b = points[i];
      const double denom = (b.p_miss - a.p_miss) - (b.p_fa - a.p_fa);
      const double lambda = (a.p_fa - a.p_miss) / denom;
      return a.p_miss + lambda * (b.p_miss - a.p_miss);
    }
    return 1.0;
  }

  double min_dcf(const DcfConfig& cfg) const {
    const double norm = std::min(cfg.c_miss * cfg.p_target, cfg.c_fa * (1 - cfg.p_target));
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : points)
      best = std::min(best, (cfg.c_miss * p.p_miss * cfg.p_target +
                             cfg.c_fa * p.p_fa * (1 - cfg.p_target)) /
                                norm);
    return best;
  }
};

Eigen::VectorXd unit(std::initializer_list<double> v) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double d : v) x[i++] = d;
  return x;
}

}  // namespace

TEST_CASE("cosine score closed forms") {
  const auto a = unit({1, 0, 0});
  CHECK(cosine_score(a, a) == doctest::Approx(1.0));
  CHECK(cosine_score(a, unit({0, 1, 0})) == doctest::Approx(0.0));
  CHECK(cosine_score(a, unit({1, 1, 0})) == doctest::Approx(0.7071067811865475));
  CHECK(cosine_score(unit({2, 0, 0}), unit({5, 0, 0})) == doctest::Approx(1.0));
  CHECK_THROWS_AS(cosine_score(a, unit({0, 0, 0})), std::invalid_argument);
}

TEST_CASE("adaptive s-norm reproduces the hand-evaluated fixture") {
  // Orthonormal cohort rows make the cosine scores equal the embedding
  // coordinates, so the top-3 score sets are exactly {0,.2,.4} and {.1,.3,.5}.
  Cohort cohort;
  cohort.top_n = 3;
  cohort.speakers = Eigen::MatrixXd::Identity(3, 4);
  const Eigen::VectorXd e = unit({0.0, 0.2, 0.4, std::sqrt(1 - 0.2)});
  const Eigen::VectorXd t = unit({0.1, 0.3, 0.5, std::sqrt(1 - 0.35)});
  const double got = adaptive_snorm(0.6, e, t, cohort);
  const double sd = std::sqrt(0.08 / 3.0);
  const double expect = 0.5 * ((0.6 - 0.2) / sd + (0.6 - 0.3) / sd);
  CHECK(got == doctest::Approx(expect).epsilon(1e-12));
  CHECK(got == doctest::Approx(2.1433).epsilon(1e-4));
}

TEST_CASE("s-norm of a raw score equal to both cohort means is zero") {
  CHECK(snorm_from_scores(0.2, {0.0, 0.2, 0.4}, {0.1, 0.2, 0.3}, 3) ==
        doctest::Approx(0.0));
}

TEST_CASE("s-norm is invariant to a common shift of raw and cohort scores") {
  Rng rng(3);
  for (int it = 0; it < 50; ++it) {
    std::vector<double> se, st;
    for (int i = 0; i < 12; ++i) se.push_back(rng.normal());
    for (int i = 0; i < 12; ++i) st.push_back(rng.normal());
    const double raw = rng.normal();
    const double c = rng.uniform(-5, 5);
    const double base = snorm_from_scores(raw, se, st, 6);
    std::vector<double> se2 = se, st2 = st;
    for (auto& x : se2) x += c;
    for (auto& x : st2) x += c;
    CHECK(snorm_from_scores(raw + c, se2, st2, 6) ==
          doctest::Approx(base).epsilon(1e-9));
  }
}

TEST_CASE("adaptive s-norm matches a direct top-N loop oracle") {
  Rng rng(5);
  Cohort cohort;
  cohort.top_n = 4;
  cohort.speakers.resize(7, 6);
  for (Eigen::Index i = 0; i < 7; ++i) {
    Eigen::VectorXd v(6);
    for (Eigen::Index j = 0; j < 6; ++j) v[j] = rng.normal();
    cohort.speakers.row(i) = v.normalized().transpose();
  }
  Eigen::VectorXd enr(6), t(6);
  for (Eigen::Index j = 0; j < 6; ++j) {
    enr[j] = rng.normal();
    t[j] = rng.normal();
  }
  const double raw = 0.37;
  const double got = adaptive_snorm(raw, enr, t, cohort);

  auto side = [&](const Eigen::VectorXd& emb) {
    std::vector<double> s;
    for (Eigen::Index i = 0; i < 7; ++i)
      s.push_back(cohort.speakers.row(i).transpose().dot(emb.normalized()));
    std::sort(s.begin(), s.end(), std::greater<double>());
    s.resize(4);
    double mu = 0;
    for (double x : s) mu += x;
    mu /= 4;
    double var = 0;
    for (double x : s) var += (x - mu) * (x - mu);
    return std::make_pair(mu, std::sqrt(var / 4));
  };
  const auto [me, sde] = side(enr);
  const auto [mt, sdt] = side(t);
  CHECK(got == doctest::Approx(0.5 * ((raw - me) / sde + (raw - mt) / sdt))
                   .epsilon(1e-12));
}

TEST_CASE("cohort building: unit self, degenerate rejection, loop oracle") {
  const Cohort single = build_cohort({{"a", unit({3, 4, 0})}}, 5);
  CHECK(single.speakers.rows() == 1);
  CHECK(single.speakers(0, 0) == doctest::Approx(0.6));
  CHECK(single.speakers(0, 1) == doctest::Approx(0.8));

  CHECK_THROWS_AS(build_cohort({{"a", unit({1, 0, 0})}, {"a", unit({-1, 0, 0})}}, 5),
                  std::invalid_argument);
  CHECK_THROWS_AS(build_cohort({{"a", unit({0, 0, 0})}}, 5), std::invalid_argument);

  Rng rng(7);
  std::vector<std::pair<std::string, Eigen::VectorXd>> embs;
  for (const char* spk : {"s1", "s2", "s3"})
    for (int u = 0; u < 4; ++u) {
      Eigen::VectorXd v(5);
      for (int j = 0; j < 5; ++j) v[j] = rng.normal();
      embs.emplace_back(spk, v);
    }
  const Cohort cohort = build_cohort(embs, 2);
  REQUIRE(cohort.speakers.rows() == 3);
  int row = 0;
  for (const char* spk : {"s1", "s2", "s3"}) {
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(5);
    for (const auto& [s, v] : embs)
      if (s == spk) mean += v.normalized();
    mean /= 4.0;
    mean.normalize();
    for (int j = 0; j < 5; ++j)
      CHECK(cohort.speakers(row, j) == doctest::Approx(mean[j]).epsilon(1e-12));
    ++row;
  }
}

TEST_CASE("eer fixtures") {
  CHECK(eer({2.0, 3.0}, {0.0, 1.0}).eer == doctest::Approx(0.0));
  CHECK(eer({0.9, 0.7, 0.5, 0.3}, {0.6, 0.2, 0.1, 0.05}).eer == doctest::Approx(0.25));
  CHECK(eer({1.0}, {2.0}).eer == doctest::Approx(1.0));
  CHECK_THROWS_AS(eer({}, {1.0}), std::invalid_argument);
  CHECK_THROWS_AS(eer({1.0}, {}), std::invalid_argument);
}

TEST_CASE("min_dcf fixtures") {
  CHECK(min_dcf({2.0, 3.0}, {0.0, 1.0}).min_dcf == doctest::Approx(0.0));
  CHECK(min_dcf({0.9, 0.7, 0.5, 0.3}, {0.6, 0.2, 0.1, 0.05}).min_dcf ==
        doctest::Approx(0.5));
  CHECK(min_dcf({0.4, 0.4}, {0.4, 0.4, 0.4}).min_dcf == doctest::Approx(1.0));
}

TEST_CASE("eer and min_dcf match the exhaustive midpoint oracle") {
  Rng rng(11);
  for (int it = 0; it < 300; ++it) {
    std::vector<double> targets, nontargets;
    const int nt = 1 + static_cast<int>(rng.uniform_int(0, 30));
    const int nn = 1 + static_cast<int>(rng.uniform_int(0, 30));
    const double sep = rng.uniform(0.0, 2.0);
    for (int i = 0; i < nt; ++i) targets.push_back(rng.normal() + sep);
    for (int i = 0; i < nn; ++i) nontargets.push_back(rng.normal());
    if (rng.uniform() < 0.2) {
      // inject ties across the two sets
      nontargets[0] = targets[0];
      if (nn > 1) nontargets[1] = targets[0];
    }
    const BruteForce oracle(targets, nontargets);
    CHECK(std::fabs(eer(targets, nontargets).eer - oracle.eer()) < 1e-12);
    const DcfConfig cfg;
    CHECK(std::fabs(min_dcf(targets, nontargets, cfg).min_dcf - oracle.min_dcf(cfg)) <
          1e-12);
    CHECK(min_dcf(targets, nontargets, cfg).min_dcf <= 1.0 + 1e-12);
  }
}

TEST_CASE("metrics are invariant under strictly increasing score maps") {
  Rng rng(13);
  for (int it = 0; it < 50; ++it) {
    std::vector<double> targets, nontargets;
    for (int i = 0; i < 15; ++i) targets.push_back(rng.normal() + 0.8);
    for (int i = 0; i < 25; ++i) nontargets.push_back(rng.normal());
    const double e0 = eer(targets, nontargets).eer;
    const double d0 = min_dcf(targets, nontargets, {}).min_dcf;
    const double a = rng.uniform(0.1, 3.0), b = rng.uniform(-2, 2);
    auto map = [&](double x) {
      switch (it % 3) {
        case 0: return a * x + b;
        case 1: return std::atan(x) * a + b;
        default: return x * x * x + 2.0 * x;
      }
    };
    std::vector<double> t2, n2;
    for (double x : targets) t2.push_back(map(x));
    for (double x : nontargets) n2.push_back(map(x));
    CHECK(std::fabs(eer(t2, n2).eer - e0) < 1e-12);
    CHECK(std::fabs(min_dcf(t2, n2, {}).min_dcf - d0) < 1e-12);
  }
}

TEST_CASE("trial and score files round-trip") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "ecapa_scoring_test";
  fs::create_directories(dir);
  {
    std::ofstream tf(dir / "trials.txt");
    tf << "1 e1 t1\n0 e1 t2\n# comment\n0 e2 t1\n";
  }
  const auto trials = read_trials((dir / "trials.txt").string());
  REQUIRE(trials.size() == 3);
  CHECK(trials[0].target);
  CHECK_FALSE(trials[2].target);

  std::vector<ScoredTrial> scored;
  for (std::size_t i = 0; i < trials.size(); ++i)
    scored.push_back({trials[i], 0.1 * static_cast<double>(i + 1), -1.0 + static_cast<double>(i)});
  write_scores((dir / "scores.txt").string(), scored, "test");
  const auto back = read_scores((dir / "scores.txt").string(), trials);
  REQUIRE(back.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back[i].raw == doctest::Approx(scored[i].raw).epsilon(1e-15));
    CHECK(back[i].norm == doctest::Approx(scored[i].norm).epsilon(1e-15));
  }

  const auto [t, n] = split_scores(back, false);
  CHECK(t.size() == 1);
  CHECK(n.size() == 2);

  std::ofstream bad(dir / "badtrials.txt");
  bad << "2 a b\n";
  bad.close();
  CHECK_THROWS_AS(read_trials((dir / "badtrials.txt").string()), std::invalid_argument);
  fs::remove_all(dir);
}
