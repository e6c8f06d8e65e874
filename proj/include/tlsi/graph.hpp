#pragma once

#include <deque>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "tlsi/array.hpp"

namespace tlsi {

// A named trainable (or frozen) dense array with a gradient accumulator.
// Parameters outlive the per-example computation graphs that reference them.
struct Parameter {
  std::string name;
  Array value;
  Array grad;
  bool trainable = true;
  bool grad_touched = false;  // set when any backward pass reached this parameter

  void zero_grad() {
    grad.fill(0.0);
    grad_touched = false;
  }
};

// Creation-ordered registry with unique names.
class ParameterStore {
 public:
  Parameter& create(const std::string& name, Array init, bool trainable = true);
  Parameter* find(const std::string& name);
  const Parameter* find(const std::string& name) const;

  std::size_t size() const { return params_.size(); }
  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  void zero_grads();

 private:
  std::deque<std::unique_ptr<Parameter>> params_;
};

class Graph;

// One tape entry: the value computed on construction, a gradient slot of the
// same shape, and the local backward rule recorded at construction.
struct Node {
  Array value;
  Array grad;
  std::function<void()> backward;
};

enum class Pointwise { Sigmoid, Tanh, Exp, Abs, Log, Add, Sub, Mul };

// Tape-style computation graph. Nodes are appended in evaluation order, so a
// reverse sweep over the tape is a reverse topological traversal. Graphs are
// rebuilt per example; Parameters persist and accumulate gradients across
// backward calls until explicitly reset.
class Graph {
 public:
  explicit Graph(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}

  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  bool grad_enabled() const { return grad_enabled_; }
  std::size_t size() const { return nodes_.size(); }

  // Leaves.
  Node* input(Array v);
  Node* param(Parameter& p);
  Node* gather(Parameter& table, std::size_t row);

  // Ops.
  Node* matmul(Node* a, Node* b);
  Node* pointwise(Pointwise op, Node* a, Node* b = nullptr);
  Node* add(Node* a, Node* b) { return pointwise(Pointwise::Add, a, b); }
  Node* sub(Node* a, Node* b) { return pointwise(Pointwise::Sub, a, b); }
  Node* mul(Node* a, Node* b) { return pointwise(Pointwise::Mul, a, b); }
  Node* sigmoid(Node* a) { return pointwise(Pointwise::Sigmoid, a); }
  Node* tanh(Node* a) { return pointwise(Pointwise::Tanh, a); }
  Node* exp(Node* a) { return pointwise(Pointwise::Exp, a); }
  Node* abs(Node* a) { return pointwise(Pointwise::Abs, a); }
  Node* log(Node* a) { return pointwise(Pointwise::Log, a); }
  Node* softmax(Node* a);
  Node* concat(std::span<Node* const> parts, std::size_t axis);
  Node* concat(std::initializer_list<Node*> parts, std::size_t axis) {
    return concat(std::span<Node* const>(parts.begin(), parts.size()), axis);
  }
  Node* reshape(Node* a, std::vector<std::size_t> shape);
  Node* scale(Node* a, double c);
  Node* clip(Node* a, double lo, double hi);

  // Seeds d(loss)=1 and sweeps the tape in reverse, once per call. Gradients
  // of reachable Parameters accumulate; calling again without resetting them
  // accumulates further.
  void backward(Node* loss);

 private:
  Node* make(Array value);

  bool grad_enabled_;
  std::deque<Node> nodes_;  // stable addresses
};

}  // namespace tlsi
