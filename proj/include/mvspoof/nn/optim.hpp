// mvspoof/nn/optim.hpp

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

#ifndef MVSPOOF_NN_OPTIM_HPP_
#define MVSPOOF_NN_OPTIM_HPP_

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <string>

#include "mvspoof/nn/graph.hpp"
#include "mvspoof/util.hpp"

namespace mvspoof::nn {

struct AdamConfig {
  double lr = 5e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias correction. Moment buffers are keyed by parameter order,
/// so the same ParamList must be passed to every step().
template <typename T>
class Adam {
 public:
  explicit Adam(AdamConfig cfg) : cfg_(cfg) {}

  const AdamConfig& config() const { return cfg_; }
  std::int64_t steps() const { return t_; }

  void step(const ParamList<T>& params) {
    if (m_.empty()) {
      for (auto* p : params) {
        m_.push_back(Matrix<T>::Zero(p->value.rows(), p->value.cols()));
        v_.push_back(Matrix<T>::Zero(p->value.rows(), p->value.cols()));
      }
    }
    if (m_.size() != params.size()) throw Error("Adam: parameter list changed between steps");
    ++t_;
    const T b1 = static_cast<T>(cfg_.beta1), b2 = static_cast<T>(cfg_.beta2);
    const T c1 = static_cast<T>(1.0 - std::pow(cfg_.beta1, static_cast<double>(t_)));
    const T c2 = static_cast<T>(1.0 - std::pow(cfg_.beta2, static_cast<double>(t_)));
    const T lr = static_cast<T>(cfg_.lr), eps = static_cast<T>(cfg_.eps);
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto* p = params[i];
      if (p->frozen) continue;
      m_[i] = b1 * m_[i] + (T(1) - b1) * p->grad;
      v_[i] = b2 * v_[i] + (T(1) - b2) * p->grad.cwiseAbs2();
      p->value.array() -=
          lr * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + eps);
    }
  }

 private:
  AdamConfig cfg_;
  std::int64_t t_ = 0;
  std::vector<Matrix<T>> m_, v_;
};

/// Sum of squared gradients across the list.
template <typename T>
double grad_norm(const ParamList<T>& params) {
  double s = 0;
  for (auto* p : params) s += static_cast<double>(p->grad.squaredNorm());
  return std::sqrt(s);
}

/// Scales all gradients so their global norm is at most `max_norm`.
template <typename T>
void clip_grad_norm(const ParamList<T>& params, double max_norm) {
  const double n = grad_norm(params);
  if (n > max_norm && n > 0) {
    const T f = static_cast<T>(max_norm / n);
    for (auto* p : params) p->grad *= f;
  }
}

/// Writes each parameter as (name, rows, cols, float32 column-major data).
template <typename T>
void write_params(BinaryWriter& w, const ParamList<T>& params) {
  w.put<std::uint32_t>(static_cast<std::uint32_t>(params.size()));
  for (const auto* p : params) {
    w.put_string(p->name);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(p->value.rows()));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(p->value.cols()));
    for (Index i = 0; i < p->value.size(); ++i) w.put<float>(static_cast<float>(p->value.data()[i]));
  }
}

/// Reads tensors written by write_params into the matching parameters.
/// Every parameter must be present with the same shape.
template <typename T>
void read_params(BinaryReader& r, const ParamList<T>& params) {
  const auto n = r.get<std::uint32_t>();
  std::map<std::string, Parameter<T>*> by_name;
  for (auto* p : params) by_name[p->name] = p;
  std::size_t filled = 0;
  for (std::uint32_t k = 0; k < n; ++k) {
    const std::string name = r.get_string();
    const auto rows = r.get<std::uint32_t>();
    const auto cols = r.get<std::uint32_t>();
    auto it = by_name.find(name);
    if (it == by_name.end()) throw Error("checkpoint tensor '" + name + "' has no matching parameter");
    Parameter<T>* p = it->second;
    if (p->value.rows() != rows || p->value.cols() != cols)
      throw Error("checkpoint tensor '" + name + "' has shape " + std::to_string(rows) + "x" +
                  std::to_string(cols) + ", expected " + std::to_string(p->value.rows()) + "x" +
                  std::to_string(p->value.cols()));
    for (Index i = 0; i < p->value.size(); ++i) p->value.data()[i] = static_cast<T>(r.get<float>());
    p->zero_grad();
    ++filled;
  }
  if (filled != params.size()) throw Error("checkpoint is missing parameters");
}

/// Order-sensitive checksum of parameter values.
template <typename T>
std::uint64_t param_checksum(const ParamList<T>& params) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto* p : params) {
    h = fnv1a(p->name, h);
    h = fnv1a(p->value.data(), sizeof(T) * static_cast<std::size_t>(p->value.size()), h);
  }
  return h;
}

}  // namespace mvspoof::nn

#endif  // MVSPOOF_NN_OPTIM_HPP_
