// src/fusion.cpp

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

#include "mvspoof/fusion.hpp"

#include <algorithm>

namespace mvspoof {

const char* view_name(View v) {
  switch (v) {
    case View::kW2v: return "w2v";
    case View::kLfcc: return "lfcc";
    case View::kDuration: return "duration";
    case View::kPron: return "pron";
  }
  return "?";
}

View parse_view(const std::string& s) {
  if (s == "w2v") return View::kW2v;
  if (s == "lfcc") return View::kLfcc;
  if (s == "duration") return View::kDuration;
  if (s == "pron") return View::kPron;
  throw Error("unknown view '" + s + "' (expected w2v, lfcc, duration or pron)");
}

const char* fusion_mode_name(FusionMode m) {
  switch (m) {
    case FusionMode::kConcat: return "concat";
    case FusionMode::kAttention: return "attention";
    case FusionMode::kSingleView: return "single_view";
  }
  return "?";
}

FusionMode parse_fusion_mode(const std::string& s) {
  if (s == "concat") return FusionMode::kConcat;
  if (s == "attention") return FusionMode::kAttention;
  if (s == "single_view") return FusionMode::kSingleView;
  throw Error("unknown fusion mode '" + s + "' (expected concat, attention or single_view)");
}

bool FusionConfig::has(View v) const {
  return std::find(views.begin(), views.end(), v) != views.end();
}

View FusionConfig::key_view() const { return has(View::kLfcc) ? View::kLfcc : View::kW2v; }

std::vector<View> FusionConfig::query_views() const {
  std::vector<View> q;
  for (View v : views)
    if (v == View::kDuration || v == View::kPron) q.push_back(v);
  return q;
}

void FusionConfig::validate() const {
  MVSPOOF_CHECK(d_model > 0 && n_heads > 0 && d_model % n_heads == 0,
                "fusion d_model must be divisible by n_heads");
  MVSPOOF_CHECK(n_blocks >= 1 && ff_expansion >= 1, "fusion needs n_blocks >= 1 and ff_expansion >= 1");
  MVSPOOF_CHECK(duration_vocab >= 1, "duration vocabulary must be positive");
  MVSPOOF_CHECK(!views.empty(), "fusion needs at least one view");
  for (std::size_t i = 0; i < views.size(); ++i)
    for (std::size_t j = i + 1; j < views.size(); ++j)
      MVSPOOF_CHECK(views[i] != views[j], std::string("view listed twice: ") + view_name(views[i]));
  switch (mode) {
    case FusionMode::kSingleView:
      MVSPOOF_CHECK(views.size() == 1, "single_view mode takes exactly one view");
      break;
    case FusionMode::kConcat:
      break;
    case FusionMode::kAttention: {
      const int keys = static_cast<int>(has(View::kW2v)) + static_cast<int>(has(View::kLfcc));
      MVSPOOF_CHECK(keys == 1, "attention mode needs exactly one of w2v or lfcc as keys/values");
      MVSPOOF_CHECK(!query_views().empty(), "attention mode needs a duration or pron query view");
      break;
    }
  }
}

int FusionConfig::fused_dim() const {
  if (mode == FusionMode::kAttention) return d_model * static_cast<int>(query_views().size());
  int d = 0;
  for (View v : views) switch (v) {
      case View::kW2v: d += d_model; break;
      case View::kLfcc: d += lfcc_dim; break;
      case View::kDuration: d += 1; break;
      case View::kPron: d += pron_dim; break;
    }
  return d;
}

MatrixXd scaled_dot_attention(const MatrixXd& q, const MatrixXd& k, const MatrixXd& v) {
  MVSPOOF_CHECK(q.cols() == k.cols(), "attention: query and key widths differ");
  MVSPOOF_CHECK(k.rows() == v.rows() && k.rows() > 0, "attention: key and value lengths differ");
  MVSPOOF_CHECK(q.allFinite() && k.allFinite() && v.allFinite(), "attention: non-finite input");
  const double scale = 1.0 / std::sqrt(static_cast<double>(k.cols()));
  MatrixXd s(q.rows(), k.rows());
  s.noalias() = scale * (q * k.transpose());
  for (Eigen::Index r = 0; r < s.rows(); ++r) {
    const double m = s.row(r).maxCoeff();
    s.row(r) = (s.row(r).array() - m).exp().matrix();
    s.row(r) /= s.row(r).sum();
  }
  return s * v;
}

}  // namespace mvspoof
