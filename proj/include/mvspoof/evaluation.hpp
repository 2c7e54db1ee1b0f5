// include/mvspoof/evaluation.hpp

// Copyright 2026  mvspoof authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// Equal error rate, score files and the cross-dataset evaluation report.

#ifndef MVSPOOF_EVALUATION_HPP_
#define MVSPOOF_EVALUATION_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mvspoof/corpus.hpp"
#include "mvspoof/trainer.hpp"

namespace mvspoof {

struct TrialScore {
  std::filesystem::path path;
  double score = 0.0;  // higher means more likely bonafide
  Label label = Label::kBonafide;
};

struct EerResult {
  double eer = 0.0;  // percent
  double threshold = 0.0;
};

/// FRR(t) is the fraction of bonafide scores below t and FAR(t) the fraction
/// of spoof scores at or above t. Thresholds sweep the distinct scores in
/// ascending order followed by +inf; the EER is linearly interpolated between
/// the first two adjacent sweep points where FAR - FRR changes sign.
EerResult compute_eer(const std::vector<double>& bonafide, const std::vector<double>& spoof);
EerResult compute_eer(const std::vector<TrialScore>& scores);

struct EvalRow {
  std::string dataset;
  std::string views;  // e.g. "duration+pron+w2v"
  std::string mode;
  double eer = 0.0;
  int n_bonafide = 0;
  int n_spoof = 0;
  double threshold = 0.0;
  int n_runs = 1;  // > 1 when averaged over seeds
};

struct EvalReport {
  std::vector<EvalRow> rows;
  std::string checkpoint;
  std::vector<std::uint64_t> seeds;
};

/// Scores every record with the frozen model, in parallel over `jobs`
/// threads; results are ordered as in the manifest.
std::vector<TrialScore> score_manifest(DetectorModel& model, const FeatureExtractor& extractor,
                                       const std::vector<View>& views,
                                       const TrialManifest& manifest, int jobs = 1);

/// One row per manifest. Fails when the extractor does not match the one the
/// checkpoint was trained with. When `score_dir` is non-empty, writes
/// <dataset>.scores there (suffixed with the manifest index on name clashes).
EvalReport cross_dataset_eval(const DetectorCheckpoint& checkpoint,
                              const FeatureExtractor& extractor,
                              const std::vector<TrialManifest>& manifests,
                              const std::filesystem::path& score_dir = {}, int jobs = 1);

/// Tab separated `path score label` lines; scores keep full precision.
void write_score_file(const std::filesystem::path& path, const std::vector<TrialScore>& scores);
std::vector<TrialScore> read_score_file(const std::filesystem::path& path);

/// Rows sharing (dataset, views, mode) are merged: EERs and thresholds are
/// averaged, counts must agree.
EvalReport average_reports(const std::vector<EvalReport>& reports);

/// Two decimals, ties to even.
std::string format_eer(double eer);

/// Aligned plain-text table.
std::string render_table(const EvalReport& report);
/// One `key=value ...` line per row, preceded by a metadata line.
std::string render_key_values(const EvalReport& report);
/// Both renderings separated by a blank line. Throws on an empty report.
std::string render_report(const EvalReport& report);
/// Parses render_key_values / render_report output back into a report.
EvalReport parse_report(const std::string& text);

}  // namespace mvspoof

#endif  // MVSPOOF_EVALUATION_HPP_
