// src/detector.cpp

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

#include "mvspoof/detector.hpp"

#include <cmath>

namespace mvspoof {

void DetectorConfig::validate() const {
  MVSPOOF_CHECK(input_dim > 0, "detector input_dim must be positive");
  MVSPOOF_CHECK(n_frames > 0, "detector n_frames must be positive");
  MVSPOOF_CHECK(!lcnn_channels.empty(), "detector needs at least one LCNN stage");
  for (int c : lcnn_channels)
    MVSPOOF_CHECK(c > 0 && c % 2 == 0, "LCNN channel counts must be positive and even");
  MVSPOOF_CHECK(blstm_hidden > 0 && blstm_layers >= 1, "detector BiLSTM sizes must be positive");
  MVSPOOF_CHECK(n_classes == 2, "the detector is a two-class model");
  MVSPOOF_CHECK(pooled_frames() >= 1 && pooled_width() >= 1,
                "detector input " + std::to_string(n_frames) + "x" + std::to_string(input_dim) +
                    " is too small for " + std::to_string(lcnn_channels.size()) + " pooling stages");
}

int DetectorConfig::pooled_frames() const {
  int h = n_frames;
  for (std::size_t s = 0; s < lcnn_channels.size(); ++s) h /= 2;
  return h;
}

int DetectorConfig::pooled_width() const {
  int w = input_dim;
  for (std::size_t s = 0; s < lcnn_channels.size(); ++s) w /= 2;
  return w;
}

double detector_loss(const MatrixXd& logits, const std::vector<int>& labels) {
  MVSPOOF_CHECK(logits.rows() > 0 && static_cast<std::size_t>(logits.rows()) == labels.size(),
                "detector_loss: batch and label counts differ");
  MVSPOOF_CHECK(logits.cols() == 2, "detector_loss expects two logits per row");
  double total = 0;
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const int y = labels[static_cast<std::size_t>(r)];
    MVSPOOF_CHECK(y == 0 || y == 1, "detector label must be 0 or 1");
    const double m = logits.row(r).maxCoeff();
    const double lse = m + std::log((logits.row(r).array() - m).exp().sum());
    total += lse - logits(r, y);
  }
  return total / static_cast<double>(logits.rows());
}

}  // namespace mvspoof
