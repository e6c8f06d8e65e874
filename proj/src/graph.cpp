#include "tlsi/graph.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tlsi {

Parameter& ParameterStore::create(const std::string& name, Array init, bool trainable) {
  if (find(name)) throw std::invalid_argument("ParameterStore: duplicate parameter name '" + name + "'");
  auto p = std::make_unique<Parameter>();
  p->name = name;
  p->grad = Array::zeros(init.shape());
  p->value = std::move(init);
  p->trainable = trainable;
  params_.push_back(std::move(p));
  return *params_.back();
}

Parameter* ParameterStore::find(const std::string& name) {
  for (auto& p : params_)
    if (p->name == name) return p.get();
  return nullptr;
}

const Parameter* ParameterStore::find(const std::string& name) const {
  for (auto& p : params_)
    if (p->name == name) return p.get();
  return nullptr;
}

void ParameterStore::zero_grads() {
  for (auto& p : params_) p->zero_grad();
}

Node* Graph::make(Array value) {
  nodes_.emplace_back();
  Node* n = &nodes_.back();
  if (grad_enabled_) n->grad = Array::zeros(value.shape());
  n->value = std::move(value);
  return n;
}

Node* Graph::input(Array v) { return make(std::move(v)); }

Node* Graph::param(Parameter& p) {
  Node* n = make(p.value);
  if (grad_enabled_) {
    n->backward = [n, &p]() {
      for (std::size_t i = 0; i < n->grad.size(); ++i) p.grad[i] += n->grad[i];
      p.grad_touched = true;
    };
  }
  return n;
}

Node* Graph::gather(Parameter& table, std::size_t row) {
  if (table.value.rank() != 2)
    throw std::invalid_argument("gather: table " + table.name + " is not rank-2");
  const std::size_t v = table.value.rows(), d = table.value.cols();
  if (row >= v)
    throw std::out_of_range("gather: row " + std::to_string(row) + " out of range for " +
                            table.name + " " + table.value.shape_str());
  Array out({d});
  for (std::size_t j = 0; j < d; ++j) out[j] = table.value.at(row, j);
  Node* n = make(std::move(out));
  if (grad_enabled_) {
    n->backward = [n, &table, row, d]() {
      for (std::size_t j = 0; j < d; ++j) table.grad.at(row, j) += n->grad[j];
      table.grad_touched = true;
    };
  }
  return n;
}

Node* Graph::matmul(Node* a, Node* b) {
  if (a->value.rank() != 2 || b->value.rank() != 2 || a->value.cols() != b->value.rows())
    throw std::invalid_argument("matmul: incompatible shapes " + a->value.shape_str() + " and " +
                                b->value.shape_str());
  const std::size_t m = a->value.rows(), k = a->value.cols(), p = b->value.cols();
  Array out({m, p});
  const double* av = a->value.data();
  const double* bv = b->value.data();
  double* ov = out.data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t l = 0; l < k; ++l) {
      const double ail = av[i * k + l];
      const double* brow = bv + l * p;
      double* orow = ov + i * p;
      for (std::size_t j = 0; j < p; ++j) orow[j] += ail * brow[j];
    }
  Node* n = make(std::move(out));
  if (grad_enabled_) {
    n->backward = [n, a, b, m, k, p]() {
      // dA += dC * B^T, dB += A^T * dC
      const double* g = n->grad.data();
      const double* av = a->value.data();
      const double* bv = b->value.data();
      double* ga = a->grad.data();
      double* gb = b->grad.data();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t l = 0; l < k; ++l) {
          const double* grow = g + i * p;
          const double* brow = bv + l * p;
          double acc = 0.0;
          for (std::size_t j = 0; j < p; ++j) acc += grow[j] * brow[j];
          ga[i * k + l] += acc;
        }
      for (std::size_t l = 0; l < k; ++l)
        for (std::size_t i = 0; i < m; ++i) {
          const double ail = av[i * k + l];
          const double* grow = g + i * p;
          double* gbrow = gb + l * p;
          for (std::size_t j = 0; j < p; ++j) gbrow[j] += ail * grow[j];
        }
    };
  }
  return n;
}

static bool pointwise_is_binary(Pointwise op) {
  return op == Pointwise::Add || op == Pointwise::Sub || op == Pointwise::Mul;
}

Node* Graph::pointwise(Pointwise op, Node* a, Node* b) {
  if (pointwise_is_binary(op)) {
    if (!b) throw std::invalid_argument("pointwise: binary op missing second operand");
    if (!a->value.same_shape(b->value))
      throw std::invalid_argument("pointwise: shape mismatch " + a->value.shape_str() + " vs " +
                                  b->value.shape_str());
  } else if (b) {
    throw std::invalid_argument("pointwise: unary op with two operands");
  }
  const std::size_t nn = a->value.size();
  Array out(a->value.shape());
  switch (op) {
    case Pointwise::Add:
      for (std::size_t i = 0; i < nn; ++i) out[i] = a->value[i] + b->value[i];
      break;
    case Pointwise::Sub:
      for (std::size_t i = 0; i < nn; ++i) out[i] = a->value[i] - b->value[i];
      break;
    case Pointwise::Mul:
      for (std::size_t i = 0; i < nn; ++i) out[i] = a->value[i] * b->value[i];
      break;
    case Pointwise::Sigmoid:
      for (std::size_t i = 0; i < nn; ++i) out[i] = 1.0 / (1.0 + std::exp(-a->value[i]));
      break;
    case Pointwise::Tanh:
      for (std::size_t i = 0; i < nn; ++i) out[i] = std::tanh(a->value[i]);
      break;
    case Pointwise::Exp:
      for (std::size_t i = 0; i < nn; ++i) out[i] = std::exp(a->value[i]);
      break;
    case Pointwise::Abs:
      for (std::size_t i = 0; i < nn; ++i) out[i] = std::fabs(a->value[i]);
      break;
    case Pointwise::Log:
      for (std::size_t i = 0; i < nn; ++i) out[i] = std::log(a->value[i]);
      break;
  }
  Node* n = make(std::move(out));
  if (grad_enabled_) {
    switch (op) {
      case Pointwise::Add:
        n->backward = [n, a, b, nn]() {
          for (std::size_t i = 0; i < nn; ++i) {
            a->grad[i] += n->grad[i];
            b->grad[i] += n->grad[i];
          }
        };
        break;
      case Pointwise::Sub:
        n->backward = [n, a, b, nn]() {
          for (std::size_t i = 0; i < nn; ++i) {
            a->grad[i] += n->grad[i];
            b->grad[i] -= n->grad[i];
          }
        };
        break;
      case Pointwise::Mul:
        n->backward = [n, a, b, nn]() {
          for (std::size_t i = 0; i < nn; ++i) {
            a->grad[i] += n->grad[i] * b->value[i];
            b->grad[i] += n->grad[i] * a->value[i];
          }
        };
        break;
      case Pointwise::Sigmoid:
        n->backward = [n, a, nn]() {
          for (std::size_t i = 0; i < nn; ++i) {
            const double s = n->value[i];
            a->grad[i] += n->grad[i] * s * (1.0 - s);
          }
        };
        break;
      case Pointwise::Tanh:
        n->backward = [n, a, nn]() {
          for (std::size_t i = 0; i < nn; ++i) {
            const double t = n->value[i];
            a->grad[i] += n->grad[i] * (1.0 - t * t);
          }
        };
        break;
      case Pointwise::Exp:
        n->backward = [n, a, nn]() {
          for (std::size_t i = 0; i < nn; ++i) a->grad[i] += n->grad[i] * n->value[i];
        };
        break;
      case Pointwise::Abs:
        // subgradient 0 at exactly 0
        n->backward = [n, a, nn]() {
          for (std::size_t i = 0; i < nn; ++i) {
            const double x = a->value[i];
            const double sign = x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
            a->grad[i] += n->grad[i] * sign;
          }
        };
        break;
      case Pointwise::Log:
        n->backward = [n, a, nn]() {
          for (std::size_t i = 0; i < nn; ++i) a->grad[i] += n->grad[i] / a->value[i];
        };
        break;
    }
  }
  return n;
}

Node* Graph::softmax(Node* a) {
  const std::size_t nn = a->value.size();
  if (nn == 0 || (a->value.rank() == 2 && a->value.cols() != 1))
    throw std::invalid_argument("softmax: expects a non-empty vector, got " + a->value.shape_str());
  Array out(a->value.shape());
  double mx = a->value[0];
  for (std::size_t i = 1; i < nn; ++i) mx = std::max(mx, a->value[i]);
  double denom = 0.0;
  for (std::size_t i = 0; i < nn; ++i) {
    out[i] = std::exp(a->value[i] - mx);
    denom += out[i];
  }
  for (std::size_t i = 0; i < nn; ++i) out[i] /= denom;
  Node* n = make(std::move(out));
  if (grad_enabled_) {
    n->backward = [n, a, nn]() {
      double dot = 0.0;
      for (std::size_t i = 0; i < nn; ++i) dot += n->grad[i] * n->value[i];
      for (std::size_t i = 0; i < nn; ++i) a->grad[i] += n->value[i] * (n->grad[i] - dot);
    };
  }
  return n;
}

Node* Graph::concat(std::span<Node* const> parts, std::size_t axis) {
  if (parts.empty()) throw std::invalid_argument("concat: no parts");
  const std::size_t rank = parts[0]->value.rank();
  if (axis >= rank) throw std::invalid_argument("concat: axis out of range");
  for (Node* p : parts) {
    if (p->value.rank() != rank) throw std::invalid_argument("concat: mixed ranks");
    for (std::size_t d = 0; d < rank; ++d)
      if (d != axis && p->value.shape()[d] != parts[0]->value.shape()[d])
        throw std::invalid_argument("concat: shape mismatch " + p->value.shape_str() + " vs " +
                                    parts[0]->value.shape_str() + " on non-concat axis");
  }
  std::vector<std::size_t> shape = parts[0]->value.shape();
  shape[axis] = 0;
  for (Node* p : parts) shape[axis] += p->value.shape()[axis];

  Array out(shape);
  const std::size_t out_cols = out.cols();
  if (rank == 1 || axis == 0) {
    // contiguous blocks
    std::size_t off = 0;
    for (Node* p : parts) {
      std::copy(p->value.data(), p->value.data() + p->value.size(), out.data() + off);
      off += p->value.size();
    }
  } else {  // rank 2, axis 1
    std::size_t col_off = 0;
    for (Node* p : parts) {
      const std::size_t pc = p->value.cols();
      for (std::size_t r = 0; r < p->value.rows(); ++r)
        for (std::size_t c = 0; c < pc; ++c) out.at(r, col_off + c) = p->value.at(r, c);
      col_off += pc;
    }
  }
  Node* n = make(std::move(out));
  if (grad_enabled_) {
    std::vector<Node*> owned(parts.begin(), parts.end());
    if (rank == 1 || axis == 0) {
      n->backward = [n, owned = std::move(owned)]() {
        std::size_t off = 0;
        for (Node* p : owned) {
          for (std::size_t i = 0; i < p->grad.size(); ++i) p->grad[i] += n->grad[off + i];
          off += p->grad.size();
        }
      };
    } else {
      n->backward = [n, owned = std::move(owned), out_cols]() {
        std::size_t col_off = 0;
        for (Node* p : owned) {
          const std::size_t pc = p->value.cols();
          for (std::size_t r = 0; r < p->value.rows(); ++r)
            for (std::size_t c = 0; c < pc; ++c)
              p->grad.at(r, c) += n->grad[r * out_cols + col_off + c];
          col_off += pc;
        }
      };
    }
  }
  return n;
}

Node* Graph::reshape(Node* a, std::vector<std::size_t> shape) {
  Array out(std::move(shape), a->value.values());  // ctor rejects size mismatch
  Node* n = make(std::move(out));
  if (grad_enabled_) {
    n->backward = [n, a]() {
      for (std::size_t i = 0; i < a->grad.size(); ++i) a->grad[i] += n->grad[i];
    };
  }
  return n;
}

Node* Graph::scale(Node* a, double c) {
  Array out(a->value.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a->value[i] * c;
  Node* n = make(std::move(out));
  if (grad_enabled_) {
    n->backward = [n, a, c]() {
      for (std::size_t i = 0; i < a->grad.size(); ++i) a->grad[i] += n->grad[i] * c;
    };
  }
  return n;
}

Node* Graph::clip(Node* a, double lo, double hi) {
  Array out(a->value.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::clamp(a->value[i], lo, hi);
  Node* n = make(std::move(out));
  if (grad_enabled_) {
    n->backward = [n, a, lo, hi]() {
      for (std::size_t i = 0; i < a->grad.size(); ++i)
        if (a->value[i] > lo && a->value[i] < hi) a->grad[i] += n->grad[i];
    };
  }
  return n;
}

void Graph::backward(Node* loss) {
  if (!grad_enabled_) throw std::logic_error("backward: graph was built without gradients");
  if (loss->value.size() != 1)
    throw std::invalid_argument("backward: loss must be scalar, got " + loss->value.shape_str());
  for (Node& n : nodes_) n.grad.fill(0.0);
  loss->grad[0] = 1.0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it)
    if (it->backward) it->backward();
}

}  // namespace tlsi
