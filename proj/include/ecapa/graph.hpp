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

#ifndef ECAPA_GRAPH_HPP_
#define ECAPA_GRAPH_HPP_

#include <functional>
#include <utility>
#include <vector>

#include "ecapa/tensor.hpp"

namespace ecapa {

template <typename Scalar>
class Graph;

// Lightweight handle into one Graph. Operations on Vars append nodes to the
// owning graph; a Var stays valid for the graph's lifetime.
template <typename Scalar>
struct Var {
  Graph<Scalar>* graph = nullptr;
  int id = -1;

  const Tensor<Scalar>& value() const { return graph->value(id); }
  const Tensor<Scalar>& grad() const { return graph->grad(id); }
  const Shape& shape() const { return value().shape(); }
};

// Reverse-mode tape. Nodes are appended in execution order, which is a
// topological order by construction; backward() walks it once in reverse.
// A Graph is confined to one thread for the duration of a forward/backward
// pass; run data-parallel work on independent graphs.
template <typename Scalar>
class Graph {
 public:
  using BackwardFn = std::function<void(Graph&, int self)>;

  // Leaf that never needs a gradient (network inputs, constants).
  Var<Scalar> input(Tensor<Scalar> value) {
    return append(std::move(value), false, {}, nullptr);
  }

  // Trainable leaf; backward() fills its gradient.
  Var<Scalar> param(Tensor<Scalar> value) {
    return append(std::move(value), true, {}, nullptr);
  }

  // Appends an operation result. `fn` receives this graph and must
  // accumulate into the parents' grads; it may skip parents for which
  // requires_grad(parent) is false.
  Var<Scalar> make_node(Tensor<Scalar> value, std::vector<int> parents,
                        BackwardFn fn) {
    bool needs = false;
    for (int p : parents)
      needs = needs || nodes_[static_cast<std::size_t>(p)].requires_grad;
    return append(std::move(value), needs, std::move(parents), std::move(fn));
  }

  const Tensor<Scalar>& value(int id) const {
    return nodes_[static_cast<std::size_t>(id)].value;
  }

  // Gradient of the last backward() target w.r.t. node `id`. Zero (and
  // allocated on demand) for nodes the loss does not reach.
  const Tensor<Scalar>& grad(int id) {
    ensure_grad(id);
    return nodes_[static_cast<std::size_t>(id)].grad;
  }

  Tensor<Scalar>& grad_mut(int id) {
    ensure_grad(id);
    return nodes_[static_cast<std::size_t>(id)].grad;
  }

  bool requires_grad(int id) const {
    return nodes_[static_cast<std::size_t>(id)].requires_grad;
  }

  // Reverse sweep from a scalar loss. Gradients accumulate, so clear_grads()
  // (or a fresh graph) is needed between distinct losses.
  void backward(Var<Scalar> loss) {
    ECAPA_CHECK(loss.graph == this, "backward: loss from another graph");
    const auto& lnode = nodes_[static_cast<std::size_t>(loss.id)];
    ECAPA_CHECK(lnode.value.numel() == 1,
                "backward: loss must be scalar, got " << shape_str(lnode.value.shape()));
    grad_mut(loss.id)(0) = Scalar(1);
    for (int i = loss.id; i >= 0; --i) {
      auto& n = nodes_[static_cast<std::size_t>(i)];
      if (!n.requires_grad || !n.backward) continue;
      if (n.grad.empty()) continue;  // loss does not reach this node
      n.backward(*this, i);
    }
  }

  void clear_grads() {
    for (auto& n : nodes_) n.grad = Tensor<Scalar>();
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor<Scalar> value;
    Tensor<Scalar> grad;  // empty until touched
    bool requires_grad = false;
    std::vector<int> parents;
    BackwardFn backward;
  };

  Var<Scalar> append(Tensor<Scalar> value, bool needs, std::vector<int> parents,
                     BackwardFn fn) {
    Node n;
    n.value = std::move(value);
    n.requires_grad = needs;
    n.parents = std::move(parents);
    n.backward = std::move(fn);
    nodes_.push_back(std::move(n));
    return Var<Scalar>{this, static_cast<int>(nodes_.size()) - 1};
  }

  void ensure_grad(int id) {
    auto& n = nodes_[static_cast<std::size_t>(id)];
    if (n.grad.empty()) n.grad = Tensor<Scalar>::zeros(n.value.shape());
  }

  std::vector<Node> nodes_;
};

}  // namespace ecapa

#endif  // ECAPA_GRAPH_HPP_
