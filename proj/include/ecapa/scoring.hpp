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
//
// Verification scoring backend: cosine trial scores, adaptive s-norm over a
// speaker-averaged cohort, and the EER / MinDCF detection metrics.

#ifndef ECAPA_SCORING_HPP_
#define ECAPA_SCORING_HPP_

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

#include "ecapa/common.hpp"

namespace ecapa {

struct Trial {
  std::string enroll;
  std::string test;
  bool target = false;
};

struct ScoredTrial {
  Trial trial;
  double raw = 0.0;
  double norm = 0.0;
};

// <a,b> / (|a||b|). Throws on zero-norm input.
double cosine_score(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

// Imposter cohort: one unit-normalized vector per training speaker (the
// mean of that speaker's length-normalized embeddings), plus the top-N
// selection size used during normalization.
struct Cohort {
  Eigen::MatrixXd speakers;  // rows are unit vectors
  int top_n = 1000;
};

Cohort build_cohort(
    const std::vector<std::pair<std::string, Eigen::VectorXd>>& speaker_embeddings,
    int top_n);

// Adaptive s-norm: z-normalizes the raw score against the top-N cohort
// scores of each side and averages the two. Population (1/N) standard
// deviation; a zero spread is an error.
double adaptive_snorm(double raw, const Eigen::VectorXd& enroll,
                      const Eigen::VectorXd& test, const Cohort& cohort);

// Score-level form of the same normalization, for callers that already
// have the cohort score lists.
double snorm_from_scores(double raw, const std::vector<double>& enroll_scores,
                         const std::vector<double>& test_scores, int top_n);

// One point of the detection-error staircase at a given threshold:
// p_miss = fraction of targets below, p_fa = fraction of nontargets at or
// above. Thresholds sweep the distinct score values plus one past the top,
// which covers every achievable operating point.
struct OperatingPoint {
  double threshold;
  double p_miss;
  double p_fa;
};

std::vector<OperatingPoint> operating_points(const std::vector<double>& targets,
                                             const std::vector<double>& nontargets);

struct EerResult {
  double eer;
  double threshold;
};

// Equal error rate: the crossing of the miss and false-alarm staircases,
// linearly interpolated between the two bracketing operating points.
EerResult eer(const std::vector<double>& targets,
              const std::vector<double>& nontargets);

struct DcfConfig {
  double p_target = 0.01;
  double c_fa = 1.0;
  double c_miss = 1.0;
};

struct DcfResult {
  double min_dcf;
  double threshold;
};

// Minimum of C_miss*P_miss*P_t + C_fa*P_fa*(1-P_t) over all thresholds,
// normalized by min(C_miss*P_t, C_fa*(1-P_t)).
DcfResult min_dcf(const std::vector<double>& targets,
                  const std::vector<double>& nontargets, const DcfConfig& cfg = {});

// File formats: trial lists are lines "label enroll_id test_id" with label
// in {1,0}; score files are lines "enroll_id test_id raw norm".
std::vector<Trial> read_trials(const std::string& path);
void write_scores(const std::string& path, const std::vector<ScoredTrial>& scored,
                  const std::string& header_comment = "");
std::vector<ScoredTrial> read_scores(const std::string& path,
                                     const std::vector<Trial>& trials);

// Splits scored trials into (targets, nontargets) for one score column.
std::pair<std::vector<double>, std::vector<double>> split_scores(
    const std::vector<ScoredTrial>& scored, bool use_norm);

}  // namespace ecapa

#endif  // ECAPA_SCORING_HPP_
