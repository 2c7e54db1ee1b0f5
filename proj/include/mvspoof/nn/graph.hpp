// mvspoof/nn/graph.hpp

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

// A small reverse-mode automatic differentiation tape over dense matrices.
//
// Every value in a computation is a 2-d matrix (frames are rows). Operations
// append a node holding their output and, when any input requires a
// gradient, a closure that accumulates input gradients from the output
// gradient. Graph::backward() replays the closures in reverse creation order,
// which is a valid topological order because nodes can only reference
// earlier nodes.
//
// A Graph is single-use and single-threaded: build one per utterance, call
// backward() once, then discard it. Parameters live outside graphs and
// accumulate their gradients across graphs until zero_grad().

#ifndef MVSPOOF_NN_GRAPH_HPP_
#define MVSPOOF_NN_GRAPH_HPP_

#include <Eigen/Dense>
#include <cstddef>
#include <deque>
#include <functional>
#include <initializer_list>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mvspoof/util.hpp"

namespace mvspoof::nn {

template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

using Index = Eigen::Index;

/// A named trainable tensor with its gradient accumulator.
template <typename T>
struct Parameter {
  std::string name;
  Matrix<T> value;
  Matrix<T> grad;
  /// Frozen parameters enter graphs as constants.
  bool frozen = false;

  Parameter() = default;
  Parameter(std::string n, Matrix<T> v)
      : name(std::move(n)), value(std::move(v)),
        grad(Matrix<T>::Zero(value.rows(), value.cols())) {}

  void zero_grad() {
    if (grad.rows() != value.rows() || grad.cols() != value.cols())
      grad = Matrix<T>::Zero(value.rows(), value.cols());
    else
      grad.setZero();
  }
};

template <typename T>
using ParamList = std::vector<Parameter<T>*>;

template <typename T>
class Graph;

/// Handle to a node of a Graph.
template <typename T>
class Var {
 public:
  Var() = default;
  Var(Graph<T>* g, std::size_t id) : g_(g), id_(id) {}

  bool valid() const { return g_ != nullptr; }
  Graph<T>& graph() const { return *g_; }
  std::size_t id() const { return id_; }

  const Matrix<T>& value() const { return g_->value(*this); }
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  bool needs_grad() const { return g_->needs_grad(*this); }
  /// Gradient accumulator; allocated (zeroed) on first access.
  Matrix<T>& grad() const { return g_->grad(*this); }

 private:
  Graph<T>* g_ = nullptr;
  std::size_t id_ = 0;
};

template <typename T>
class Graph {
 public:
  using Mat = Matrix<T>;
  using Backward = std::function<void(const Mat& grad_out, const Mat& value_out)>;

  explicit Graph(bool record = true) : record_(record) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  bool recording() const { return record_; }

  Var<T> constant(Mat value) { return push(std::move(value), false, nullptr); }

  /// Leaf for a parameter. Repeated calls return the same node.
  Var<T> param(Parameter<T>& p) {
    auto it = param_nodes_.find(&p);
    if (it != param_nodes_.end()) return Var<T>(this, it->second);
    const bool needs = record_ && !p.frozen;
    Var<T> v = push(p.value, needs, nullptr);
    nodes_.back().param = needs ? &p : nullptr;
    param_nodes_.emplace(&p, v.id());
    return v;
  }

  /// Appends an op node. `backward` is kept only when some input needs a
  /// gradient.
  Var<T> emit(Mat value, std::initializer_list<Var<T>> inputs, Backward backward) {
    bool needs = false;
    if (record_)
      for (const auto& v : inputs) needs = needs || needs_grad(v);
    return push(std::move(value), needs, needs ? std::move(backward) : Backward());
  }

  Var<T> emit(Mat value, const std::vector<Var<T>>& inputs, Backward backward) {
    bool needs = false;
    if (record_)
      for (const auto& v : inputs) needs = needs || needs_grad(v);
    return push(std::move(value), needs, needs ? std::move(backward) : Backward());
  }

  const Mat& value(const Var<T>& v) const { return nodes_[v.id()].value; }
  bool needs_grad(const Var<T>& v) const { return nodes_[v.id()].needs_grad; }

  Mat& grad(const Var<T>& v) {
    Node& n = nodes_[v.id()];
    if (n.grad.size() == 0) n.grad = Mat::Zero(n.value.rows(), n.value.cols());
    return n.grad;
  }

  std::size_t size() const { return nodes_.size(); }

  /// Seeds d(root)/d(root) = 1 elementwise and propagates to parameters.
  void backward(const Var<T>& root) {
    MVSPOOF_CHECK(record_, "backward() on a graph built without recording");
    if (!needs_grad(root)) return;
    grad(root).setOnes();
    for (std::size_t i = root.id() + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (!n.needs_grad || n.grad.size() == 0) continue;
      if (n.backward) {
        n.backward(n.grad, n.value);
        n.backward = nullptr;
      }
      if (n.param != nullptr) n.param->grad += n.grad;
      n.grad.resize(0, 0);
    }
  }

 private:
  struct Node {
    Mat value;
    Mat grad;
    bool needs_grad = false;
    Backward backward;
    Parameter<T>* param = nullptr;
  };

  Var<T> push(Mat value, bool needs, Backward backward) {
    nodes_.push_back(Node{std::move(value), Mat(), needs, std::move(backward), nullptr});
    return Var<T>(this, nodes_.size() - 1);
  }

  bool record_;
  std::deque<Node> nodes_;
  std::unordered_map<Parameter<T>*, std::size_t> param_nodes_;
};

template <typename T>
void zero_grad(const ParamList<T>& params) {
  for (auto* p : params) p->zero_grad();
}

}  // namespace mvspoof::nn

#endif  // MVSPOOF_NN_GRAPH_HPP_
