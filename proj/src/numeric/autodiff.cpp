#include "morphrl/numeric/autodiff.hpp"

#include <algorithm>
#include <unordered_set>

#include "morphrl/errors.hpp"

namespace morphrl {

namespace {
thread_local bool t_grad_enabled = true;
}

void Node::accumulate(const Array& g) {
  if (!requires_grad) return;
  if (g.size() != value.size()) {
    throw InvalidInput(std::string("gradient shape mismatch at ") + op + ": " + shape_string(g.shape()) + " vs " +
                       shape_string(value.shape()));
  }
  Array& buf = grad_buffer();
  auto dst = buf.data();
  auto src = g.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

void Node::accumulate_at(std::size_t i, double g) {
  if (!requires_grad) return;
  grad_buffer()[i] += g;
}

Array& Node::grad_buffer() {
  if (grad.size() != value.size() || grad.shape() != value.shape()) grad = Array(value.shape());
  return grad;
}

Var::Var(Array value, bool requires_grad) : node_(std::make_shared<Node>()) {
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
}

bool grad_enabled() { return t_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(t_grad_enabled) { t_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { t_grad_enabled = previous_; }

Node::~Node() {
  std::vector<std::shared_ptr<Node>> pending = std::move(inputs);
  while (!pending.empty()) {
    std::shared_ptr<Node> n = std::move(pending.back());
    pending.pop_back();
    if (n && n.use_count() == 1) {
      for (auto& in : n->inputs) pending.push_back(std::move(in));
      n->inputs.clear();
    }
  }
}

namespace detail {

Var make_result(const char* op, Array value, std::vector<Var> inputs, std::function<void(Node&)> backward_fn) {
  auto node = std::make_shared<Node>();
  node->op = op;
  node->value = std::move(value);
  if (t_grad_enabled) {
    const bool any = std::any_of(inputs.begin(), inputs.end(), [](const Var& v) { return v.requires_grad(); });
    if (any) {
      node->requires_grad = true;
      node->inputs.reserve(inputs.size());
      for (auto& in : inputs) node->inputs.push_back(in.node());
      node->backward_fn = std::move(backward_fn);
    }
  }
  return Var::from_node(std::move(node));
}

}  // namespace detail

void run_backward(const Var& loss) {
  if (!loss.defined() || loss.size() != 1) {
    throw InvalidInput("backward needs a scalar loss, got shape " +
                       (loss.defined() ? shape_string(loss.shape()) : std::string("<undefined>")));
  }
  if (!loss.requires_grad()) return;

  // Iterative post-order DFS; graphs over long chunks are too deep to recurse.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(loss.node().get(), 0);
  seen.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node* child = node->inputs[next++].get();
      if (child->requires_grad && seen.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (Node* n : order) n->grad = Array(n->value.shape());
  loss.node()->grad[0] = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward_fn) n->backward_fn(*n);
  }
}

}  // namespace morphrl
