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

#include "ecapa/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace ecapa {

double cosine_score(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  ECAPA_CHECK(a.size() == b.size(), "cosine_score: dimension mismatch "
                                        << a.size() << " vs " << b.size());
  const double na = a.norm(), nb = b.norm();
  ECAPA_CHECK(na > 0 && nb > 0, "cosine_score: zero-norm embedding");
  return a.dot(b) / (na * nb);
}

Cohort build_cohort(
    const std::vector<std::pair<std::string, Eigen::VectorXd>>& speaker_embeddings,
    int top_n) {
  ECAPA_CHECK(!speaker_embeddings.empty(), "build_cohort: no embeddings");
  ECAPA_CHECK(top_n >= 1, "build_cohort: top_n must be positive");

  std::map<std::string, std::pair<Eigen::VectorXd, int>> sums;
  for (const auto& [spk, emb] : speaker_embeddings) {
    const double n = emb.norm();
    ECAPA_CHECK(n > 0, "build_cohort: zero-norm embedding for speaker " << spk);
    auto it = sums.find(spk);
    if (it == sums.end()) {
      sums.emplace(spk, std::make_pair((emb / n).eval(), 1));
    } else {
      it->second.first += emb / n;
      it->second.second += 1;
    }
  }

  Cohort cohort;
  cohort.top_n = top_n;
  cohort.speakers.resize(static_cast<Eigen::Index>(sums.size()),
                         speaker_embeddings.front().second.size());
  Eigen::Index row = 0;
  for (const auto& [spk, acc] : sums) {
    const Eigen::VectorXd mean = acc.first / acc.second;
    const double n = mean.norm();
    ECAPA_CHECK(n > 0, "build_cohort: degenerate (zero-mean) cohort vector for speaker "
                           << spk);
    cohort.speakers.row(row++) = (mean / n).transpose();
  }
  return cohort;
}

namespace {

// Mean and population std of the N largest cohort scores for one side.
std::pair<double, double> top_n_stats(const std::vector<double>& scores, int top_n) {
  std::vector<double> s = scores;
  const auto n = std::min<std::size_t>(static_cast<std::size_t>(top_n), s.size());
  std::partial_sort(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(n), s.end(),
                    std::greater<double>());
  double mean = 0;
  for (std::size_t i = 0; i < n; ++i) mean += s[i];
  mean /= static_cast<double>(n);
  double var = 0;
  for (std::size_t i = 0; i < n; ++i) var += (s[i] - mean) * (s[i] - mean);
  var /= static_cast<double>(n);
  return {mean, std::sqrt(var)};
}

}  // namespace

double snorm_from_scores(double raw, const std::vector<double>& enroll_scores,
                         const std::vector<double>& test_scores, int top_n) {
  ECAPA_CHECK(!enroll_scores.empty() && !test_scores.empty(),
              "snorm_from_scores: empty cohort score list");
  ECAPA_CHECK(top_n >= 1, "snorm_from_scores: top_n must be positive");
  const auto [mu_e, sd_e] = top_n_stats(enroll_scores, top_n);
  const auto [mu_t, sd_t] = top_n_stats(test_scores, top_n);
  ECAPA_CHECK(sd_e > 0 && sd_t > 0,
              "snorm_from_scores: degenerate cohort (zero score spread)");
  return 0.5 * ((raw - mu_e) / sd_e + (raw - mu_t) / sd_t);
}

double adaptive_snorm(double raw, const Eigen::VectorXd& enroll,
                      const Eigen::VectorXd& test, const Cohort& cohort) {
  ECAPA_CHECK(cohort.speakers.rows() > 0, "adaptive_snorm: empty cohort");
  const double ne = enroll.norm(), nt = test.norm();
  ECAPA_CHECK(ne > 0 && nt > 0, "adaptive_snorm: zero-norm embedding");
  const Eigen::VectorXd se = cohort.speakers * (enroll / ne);
  const Eigen::VectorXd st = cohort.speakers * (test / nt);
  return snorm_from_scores(raw, {se.data(), se.data() + se.size()},
                           {st.data(), st.data() + st.size()}, cohort.top_n);
}

std::vector<OperatingPoint> operating_points(const std::vector<double>& targets,
                                             const std::vector<double>& nontargets) {
  ECAPA_CHECK(!targets.empty(), "metrics: no target trials");
  ECAPA_CHECK(!nontargets.empty(), "metrics: no nontarget trials");
  std::vector<double> thresholds;
  thresholds.reserve(targets.size() + nontargets.size() + 1);
  thresholds.insert(thresholds.end(), targets.begin(), targets.end());
  thresholds.insert(thresholds.end(), nontargets.begin(), nontargets.end());
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

  std::vector<double> ts = targets, ns = nontargets;
  std::sort(ts.begin(), ts.end());
  std::sort(ns.begin(), ns.end());

  std::vector<OperatingPoint> points;
  points.reserve(thresholds.size() + 1);
  auto add_point = [&](double th) {
    const auto miss = std::lower_bound(ts.begin(), ts.end(), th) - ts.begin();
    const auto acc = std::lower_bound(ns.begin(), ns.end(), th) - ns.begin();
    points.push_back({th, static_cast<double>(miss) / static_cast<double>(ts.size()),
                      static_cast<double>(ns.size() - acc) / static_cast<double>(ns.size())});
  };
  for (double th : thresholds) add_point(th);
  add_point(thresholds.back() + 1.0);  // reject everything
  return points;
}

EerResult eer(const std::vector<double>& targets,
              const std::vector<double>& nontargets) {
  const auto points = operating_points(targets, nontargets);
  // p_miss - p_fa rises monotonically from -? to +1; find the sign change.
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double diff = points[i].p_miss - points[i].p_fa;
    if (diff < 0) continue;
    if (diff == 0 || i == 0)
      return {points[i].p_miss, points[i].threshold};
    const auto& a = points[i - 1];
    const auto& b = points[i];
    const double denom = (b.p_miss - a.p_miss) - (b.p_fa - a.p_fa);
    const double lambda = (a.p_fa - a.p_miss) / denom;
    return {a.p_miss + lambda * (b.p_miss - a.p_miss),
            a.threshold + lambda * (b.threshold - a.threshold)};
  }
  return {1.0, points.back().threshold};
}

DcfResult min_dcf(const std::vector<double>& targets,
                  const std::vector<double>& nontargets, const DcfConfig& cfg) {
  ECAPA_CHECK(cfg.p_target > 0 && cfg.p_target < 1,
              "min_dcf: p_target must lie in (0,1)");
  ECAPA_CHECK(cfg.c_fa > 0 && cfg.c_miss > 0, "min_dcf: costs must be positive");
  const auto points = operating_points(targets, nontargets);
  const double norm =
      std::min(cfg.c_miss * cfg.p_target, cfg.c_fa * (1.0 - cfg.p_target));
  DcfResult best{std::numeric_limits<double>::infinity(), 0.0};
  for (const auto& p : points) {
    const double cost = cfg.c_miss * p.p_miss * cfg.p_target +
                        cfg.c_fa * p.p_fa * (1.0 - cfg.p_target);
    if (cost < best.min_dcf * norm) best = {cost / norm, p.threshold};
  }
  return best;
}

std::vector<Trial> read_trials(const std::string& path) {
  std::ifstream in(path);
  ECAPA_CHECK(in.good(), "read_trials: cannot open " << path);
  std::vector<Trial> trials;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string label, enroll, test;
    ECAPA_CHECK(ss >> label >> enroll >> test,
                "read_trials: bad line " << lineno << " in " << path << ": " << line);
    ECAPA_CHECK(label == "1" || label == "0",
                "read_trials: label must be 1 or 0 at line " << lineno << " in " << path);
    trials.push_back({enroll, test, label == "1"});
  }
  ECAPA_CHECK(!trials.empty(), "read_trials: no trials in " << path);
  return trials;
}

void write_scores(const std::string& path, const std::vector<ScoredTrial>& scored,
                  const std::string& header_comment) {
  std::ofstream out(path);
  ECAPA_CHECK(out.good(), "write_scores: cannot open " << path);
  if (!header_comment.empty()) out << "# " << header_comment << "\n";
  out.precision(17);
  for (const auto& s : scored)
    out << s.trial.enroll << " " << s.trial.test << " " << s.raw << " " << s.norm << "\n";
  ECAPA_CHECK(out.good(), "write_scores: write failed for " << path);
}

std::vector<ScoredTrial> read_scores(const std::string& path,
                                     const std::vector<Trial>& trials) {
  std::ifstream in(path);
  ECAPA_CHECK(in.good(), "read_scores: cannot open " << path);
  std::map<std::pair<std::string, std::string>, std::pair<double, double>> by_pair;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string enroll, test;
    double raw, norm;
    ECAPA_CHECK(ss >> enroll >> test >> raw >> norm,
                "read_scores: bad line " << lineno << " in " << path << ": " << line);
    by_pair[{enroll, test}] = {raw, norm};
  }
  std::vector<ScoredTrial> out;
  out.reserve(trials.size());
  for (const auto& t : trials) {
    const auto it = by_pair.find({t.enroll, t.test});
    ECAPA_CHECK(it != by_pair.end(), "read_scores: no score for trial "
                                         << t.enroll << " " << t.test);
    out.push_back({t, it->second.first, it->second.second});
  }
  return out;
}

std::pair<std::vector<double>, std::vector<double>> split_scores(
    const std::vector<ScoredTrial>& scored, bool use_norm) {
  std::vector<double> targets, nontargets;
  for (const auto& s : scored) {
    const double v = use_norm ? s.norm : s.raw;
    (s.trial.target ? targets : nontargets).push_back(v);
  }
  return {targets, nontargets};
}

}  // namespace ecapa
