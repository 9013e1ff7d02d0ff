#pragma once

// Reverse-mode automatic differentiation over dense row-major matrices.
//
// A Tape records every intermediate matrix produced during a forward pass
// together with a closure that pushes the node's gradient into its parents.
// Nodes are appended in topological order, so backward() is a single reverse
// sweep. Parameters live outside the tape (ParameterSet) and receive their
// gradients when the sweep reaches the leaf that references them.

#include "dgc/core/errors.hpp"
#include "dgc/core/types.hpp"

#include <deque>
#include <functional>
#include <initializer_list>
#include <string>
#include <utility>
#include <vector>

namespace dgc::ad {

template <typename T>
struct Parameter {
  Parameter(std::string n, Mat<T> v)
      : name(std::move(n)), value(std::move(v)), grad(Mat<T>::Zero(value.rows(), value.cols())) {}

  std::string name;
  Mat<T> value;
  Mat<T> grad;
};

/// Owns parameters with stable addresses; modules keep raw pointers into it.
template <typename T>
class ParameterSet {
 public:
  ParameterSet() = default;
  ParameterSet(const ParameterSet&) = delete;
  ParameterSet& operator=(const ParameterSet&) = delete;

  Parameter<T>& add(std::string name, Mat<T> init) {
    params_.emplace_back(std::move(name), std::move(init));
    return params_.back();
  }

  void zero_grad() {
    for (auto& p : params_) p.grad.setZero();
  }

  std::size_t size() const { return params_.size(); }
  Eigen::Index scalar_count() const {
    Eigen::Index n = 0;
    for (const auto& p : params_) n += p.value.size();
    return n;
  }

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  Parameter<T>* find(const std::string& name) {
    for (auto& p : params_)
      if (p.name == name) return &p;
    return nullptr;
  }

  std::vector<Mat<T>> snapshot() const {
    std::vector<Mat<T>> out;
    out.reserve(params_.size());
    for (const auto& p : params_) out.push_back(p.value);
    return out;
  }

  void restore(const std::vector<Mat<T>>& values) {
    if (values.size() != params_.size()) throw ShapeMismatch("parameter snapshot size mismatch");
    std::size_t i = 0;
    for (auto& p : params_) {
      const auto& v = values[i++];
      require_shape(v.rows() == p.value.rows() && v.cols() == p.value.cols(),
                    "parameter snapshot shape mismatch for " + p.name);
      p.value = v;
    }
  }

 private:
  std::deque<Parameter<T>> params_;
};

template <typename T>
class Tape;

/// Handle to a node on a tape.
template <typename T>
struct Var {
  Tape<T>* tape = nullptr;
  int id = -1;

  const Mat<T>& value() const { return tape->value(id); }
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  T scalar() const { return value()(0, 0); }
  bool valid() const { return tape != nullptr; }
};

template <typename T>
class Tape {
 public:
  // (tape, gradient of this node, value of this node)
  using Backward = std::function<void(Tape&, const Mat<T>&, const Mat<T>&)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var<T> constant(Mat<T> value) {
    Node& n = nodes_.emplace_back();
    n.own = std::move(value);
    return {this, static_cast<int>(nodes_.size()) - 1};
  }

  Var<T> param(Parameter<T>& p) {
    Node& n = nodes_.emplace_back();
    n.external = &p.value;
    n.param = &p;
    n.needs_grad = true;
    return {this, static_cast<int>(nodes_.size()) - 1};
  }

  /// Record an op result. The node needs a gradient iff any parent does.
  Var<T> make(Mat<T> value, std::initializer_list<Var<T>> parents, Backward backward) {
    bool needs = false;
    for (const auto& p : parents) needs = needs || nodes_[p.id].needs_grad;
    return push(std::move(value), needs, std::move(backward));
  }

  Var<T> make(Mat<T> value, const std::vector<Var<T>>& parents, Backward backward) {
    bool needs = false;
    for (const auto& p : parents) needs = needs || nodes_[p.id].needs_grad;
    return push(std::move(value), needs, std::move(backward));
  }

  const Mat<T>& value(int id) const {
    const Node& n = nodes_[id];
    return n.external ? *n.external : n.own;
  }

  bool needs_grad(int id) const { return nodes_[id].needs_grad; }

  template <typename Expr>
  void accumulate(int id, const Expr& g) {
    Node& n = nodes_[id];
    if (!n.needs_grad) return;
    if (n.grad.size() == 0) {
      n.grad = g;
    } else {
      n.grad.noalias() += g;
    }
  }

 private:
  Var<T> push(Mat<T> value, bool needs, Backward backward) {
    Node& n = nodes_.emplace_back();
    n.own = std::move(value);
    n.needs_grad = needs;
    if (needs) n.backward = std::move(backward);
    return {this, static_cast<int>(nodes_.size()) - 1};
  }

 public:

  /// Reverse sweep from a 1x1 root. Gradients land in Parameter::grad
  /// (accumulated, so callers zero them between steps). Intermediate
  /// buffers are released as the sweep passes them.
  void backward(const Var<T>& root) {
    require_shape(root.rows() == 1 && root.cols() == 1, "backward() needs a scalar root");
    Node& r = nodes_[root.id];
    if (!r.needs_grad) return;
    r.grad = Mat<T>::Ones(1, 1);
    for (int i = root.id; i >= 0; --i) {
      Node& n = nodes_[i];
      if (!n.needs_grad || n.grad.size() == 0) continue;
      if (n.param) {
        n.param->grad += n.grad;
      } else if (n.backward) {
        n.backward(*this, n.grad, n.own);
        n.backward = nullptr;
        n.own.resize(0, 0);
      }
      n.grad.resize(0, 0);
    }
  }

  std::size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

 private:
  struct Node {
    Mat<T> own;
    const Mat<T>* external = nullptr;
    Mat<T> grad;
    Parameter<T>* param = nullptr;
    bool needs_grad = false;
    Backward backward;
  };

  std::deque<Node> nodes_;
};

}  // namespace dgc::ad
