#pragma once

// Define-by-run reverse-mode differentiation. Every kernel call produces a
// Var; when gradients are enabled and any input requires them, the result
// keeps its inputs and a backward closure alive. A graph belongs to the
// thread that built it.

#include <functional>
#include <memory>
#include <vector>

#include "morphrl/numeric/array.hpp"

namespace morphrl {

struct Node {
  const char* op = "leaf";
  Array value;
  Array grad;  // empty until something accumulates into it
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  // Reads self.grad and accumulates into self.inputs[i]->grad.
  std::function<void(Node& self)> backward_fn;

  Node() = default;
  Node(const Node&) = delete;
  Node& operator=(const Node&) = delete;
  // Releases long input chains iteratively instead of recursively.
  ~Node();

  void accumulate(const Array& g);
  void accumulate_at(std::size_t i, double g);
  Array& grad_buffer();
};

class Var {
 public:
  Var() = default;
  explicit Var(Array value, bool requires_grad = false);

  const Array& value() const { return node_->value; }
  // In-place access for optimizers and finite differencing. Never call on a
  // Var whose value feeds a graph that has not been run backward yet.
  Array& mutable_value() { return node_->value; }
  const Array& grad() const { return node_->grad; }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  const Shape& shape() const { return node_->value.shape(); }
  std::size_t size() const { return node_->value.size(); }
  bool defined() const { return static_cast<bool>(node_); }
  const char* op() const { return node_->op; }

  // Same value, cut from the graph.
  Var detached() const { return Var(node_->value, false); }

  const std::shared_ptr<Node>& node() const { return node_; }

  static Var from_node(std::shared_ptr<Node> n) {
    Var v;
    v.node_ = std::move(n);
    return v;
  }

 private:
  std::shared_ptr<Node> node_;
};

inline Var constant(Array value) { return Var(std::move(value), false); }

bool grad_enabled();

// Disables graph recording on the current thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

namespace detail {
Var make_result(const char* op, Array value, std::vector<Var> inputs, std::function<void(Node&)> backward_fn);
}  // namespace detail

// Runs reverse accumulation from a scalar loss. Gradients of every node that
// requires them and is reachable from loss are reset and then filled in.
void run_backward(const Var& loss);

}  // namespace morphrl
