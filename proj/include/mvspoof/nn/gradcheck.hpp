// mvspoof/nn/gradcheck.hpp

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

#ifndef MVSPOOF_NN_GRADCHECK_HPP_
#define MVSPOOF_NN_GRADCHECK_HPP_

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "mvspoof/nn/graph.hpp"

namespace mvspoof::nn {

struct GradCheckEntry {
  std::string name;
  double relative_error = 0.0;  // ||analytic - numeric|| / max(||analytic||, ||numeric||)
  double analytic_norm = 0.0;
  double numeric_norm = 0.0;
};

/// Compares backprop gradients of a scalar loss with central finite
/// differences for every parameter group. `loss` builds the loss on the graph
/// it is given and returns the [1 x 1] result.
template <class LossFn>
std::vector<GradCheckEntry> check_gradients(const ParamList<double>& params, LossFn&& loss,
                                            double eps = 1e-4) {
  zero_grad(params);
  {
    Graph<double> g;
    const Var<double> l = loss(g);
    g.backward(l);
  }
  auto eval = [&]() {
    Graph<double> g(false);
    return loss(g).value()(0, 0);
  };
  std::vector<GradCheckEntry> out;
  for (auto* p : params) {
    Matrix<double> numeric(p->value.rows(), p->value.cols());
    for (Index i = 0; i < p->value.size(); ++i) {
      double& w = p->value.data()[i];
      const double saved = w;
      w = saved + eps;
      const double lp = eval();
      w = saved - eps;
      const double lm = eval();
      w = saved;
      numeric.data()[i] = (lp - lm) / (2.0 * eps);
    }
    GradCheckEntry e;
    e.name = p->name;
    e.analytic_norm = p->grad.norm();
    e.numeric_norm = numeric.norm();
    const double denom = std::max(e.analytic_norm, e.numeric_norm);
    e.relative_error = denom < 1e-10 ? 0.0 : (p->grad - numeric).norm() / denom;
    out.push_back(e);
  }
  return out;
}

}  // namespace mvspoof::nn

#endif  // MVSPOOF_NN_GRADCHECK_HPP_
