#pragma once

// Dense tensors with reverse-mode gradients. Each op returns a fresh node
// holding its value and a closure that scatters incoming gradients to the
// parents; backward() walks the graph once in reverse topological order.
// Nodes are tensor-granular, so graphs stay small and the per-op kernels are
// plain loops. Only the ops below exist; this is training infrastructure for
// the models in this library, not a general array language.

#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

namespace mann::nn {

inline thread_local bool grad_enabled = true;

// Disables graph recording in scope; forward values are still computed.
struct NoGradGuard {
  bool prev;
  NoGradGuard() : prev(grad_enabled) { grad_enabled = false; }
  ~NoGradGuard() { grad_enabled = prev; }
};

template <typename T>
class Tensor {
 public:
  struct Node {
    std::vector<int> shape;
    std::vector<T> val;
    std::vector<T> grad;  // allocated only when requires_grad
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward;
  };

  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node> n) : n_(std::move(n)) {}

  static Tensor zeros(std::vector<int> shape) {
    auto n = std::make_shared<Node>();
    std::size_t total = count(shape);
    n->shape = std::move(shape);
    n->val.assign(total, T{0});
    return Tensor(n);
  }

  static Tensor from(std::vector<int> shape, std::vector<T> values) {
    if (count(shape) != values.size()) throw std::invalid_argument("tensor shape/value mismatch");
    auto n = std::make_shared<Node>();
    n->shape = std::move(shape);
    n->val = std::move(values);
    return Tensor(n);
  }

  static Tensor scalar(T v) { return from({1}, {v}); }

  // trainable leaf; gradients accumulate until explicitly zeroed
  static Tensor leaf(std::vector<int> shape, std::vector<T> values) {
    Tensor t = from(std::move(shape), std::move(values));
    t.n_->requires_grad = true;
    t.n_->grad.assign(t.n_->val.size(), T{0});
    return t;
  }

  bool defined() const { return n_ != nullptr; }
  const std::vector<int>& shape() const { return n_->shape; }
  int dim(int i) const { return n_->shape[static_cast<std::size_t>(i)]; }
  int rank() const { return static_cast<int>(n_->shape.size()); }
  std::size_t numel() const { return n_->val.size(); }
  std::vector<T>& values() { return n_->val; }
  const std::vector<T>& values() const { return n_->val; }
  std::vector<T>& grad() { return n_->grad; }
  const std::vector<T>& grad() const { return n_->grad; }
  bool requires_grad() const { return n_ && n_->requires_grad; }
  std::shared_ptr<Node> node() const { return n_; }

  T item() const {
    if (numel() != 1) throw std::invalid_argument("item() on non-scalar tensor");
    return n_->val[0];
  }

  void zero_grad() {
    if (n_->requires_grad) n_->grad.assign(n_->val.size(), T{0});
  }

  // same values, no history
  Tensor detach() const { return from(n_->shape, n_->val); }

  void backward() const {
    if (numel() != 1) throw std::invalid_argument("backward() needs a scalar root");
    if (!n_->requires_grad) return;

    // reverse topological order via iterative post-order DFS
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, std::size_t>> stack;
    stack.push_back({n_.get(), 0});
    visited.insert(n_.get());
    while (!stack.empty()) {
      auto& [node, next] = stack.back();
      if (next < node->parents.size()) {
        Node* parent = node->parents[next++].get();
        if (parent->requires_grad && visited.insert(parent).second)
          stack.push_back({parent, 0});
      } else {
        order.push_back(node);
        stack.pop_back();
      }
    }

    n_->grad[0] += T{1};
    for (auto it = order.rbegin(); it != order.rend(); ++it)
      if ((*it)->backward) (*it)->backward(**it);
  }

  static std::size_t count(const std::vector<int>& shape) {
    std::size_t total = 1;
    for (int d : shape) {
      if (d <= 0) throw std::invalid_argument("non-positive tensor dimension");
      total *= static_cast<std::size_t>(d);
    }
    return total;
  }

 private:
  std::shared_ptr<Node> n_;
};

template <typename T>
struct Parameter {
  std::string name;
  Tensor<T> value;
  bool trainable = true;
};

namespace detail {

template <typename T>
Tensor<T> make_op(std::vector<int> shape, std::vector<T> val,
                  std::vector<Tensor<T>> inputs,
                  std::function<void(typename Tensor<T>::Node&)> backward) {
  Tensor<T> out = Tensor<T>::from(std::move(shape), std::move(val));
  bool needs = false;
  if (grad_enabled)
    for (const Tensor<T>& in : inputs)
      if (in.requires_grad()) needs = true;
  if (needs) {
    auto n = out.node();
    n->requires_grad = true;
    n->grad.assign(n->val.size(), T{0});
    for (const Tensor<T>& in : inputs) n->parents.push_back(in.node());
    n->backward = std::move(backward);
  }
  return out;
}

template <typename T>
inline std::vector<T>* grad_of(typename Tensor<T>::Node& self, std::size_t parent) {
  auto& p = *self.parents[parent];
  return p.requires_grad ? &p.grad : nullptr;
}

inline void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

}  // namespace detail

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  detail::require(a.shape() == b.shape(), "add: shape mismatch");
  std::vector<T> val(a.numel());
  for (std::size_t i = 0; i < val.size(); ++i) val[i] = a.values()[i] + b.values()[i];
  return detail::make_op<T>(a.shape(), std::move(val), {a, b},
                            [](typename Tensor<T>::Node& self) {
                              for (std::size_t p = 0; p < 2; ++p)
                                if (auto* g = detail::grad_of<T>(self, p))
                                  for (std::size_t i = 0; i < self.grad.size(); ++i)
                                    (*g)[i] += self.grad[i];
                            });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  detail::require(a.shape() == b.shape(), "sub: shape mismatch");
  std::vector<T> val(a.numel());
  for (std::size_t i = 0; i < val.size(); ++i) val[i] = a.values()[i] - b.values()[i];
  return detail::make_op<T>(a.shape(), std::move(val), {a, b},
                            [](typename Tensor<T>::Node& self) {
                              if (auto* g = detail::grad_of<T>(self, 0))
                                for (std::size_t i = 0; i < self.grad.size(); ++i)
                                  (*g)[i] += self.grad[i];
                              if (auto* g = detail::grad_of<T>(self, 1))
                                for (std::size_t i = 0; i < self.grad.size(); ++i)
                                  (*g)[i] -= self.grad[i];
                            });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  detail::require(a.shape() == b.shape(), "mul: shape mismatch");
  std::vector<T> val(a.numel());
  for (std::size_t i = 0; i < val.size(); ++i) val[i] = a.values()[i] * b.values()[i];
  return detail::make_op<T>(a.shape(), std::move(val), {a, b},
                            [](typename Tensor<T>::Node& self) {
                              const auto& av = self.parents[0]->val;
                              const auto& bv = self.parents[1]->val;
                              if (auto* g = detail::grad_of<T>(self, 0))
                                for (std::size_t i = 0; i < self.grad.size(); ++i)
                                  (*g)[i] += self.grad[i] * bv[i];
                              if (auto* g = detail::grad_of<T>(self, 1))
                                for (std::size_t i = 0; i < self.grad.size(); ++i)
                                  (*g)[i] += self.grad[i] * av[i];
                            });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T c) {
  std::vector<T> val(a.numel());
  for (std::size_t i = 0; i < val.size(); ++i) val[i] = a.values()[i] * c;
  return detail::make_op<T>(a.shape(), std::move(val), {a},
                            [c](typename Tensor<T>::Node& self) {
                              if (auto* g = detail::grad_of<T>(self, 0))
                                for (std::size_t i = 0; i < self.grad.size(); ++i)
                                  (*g)[i] += self.grad[i] * c;
                            });
}

template <typename T>
Tensor<T> add_n(const std::vector<Tensor<T>>& terms) {
  detail::require(!terms.empty(), "add_n: no terms");
  for (const auto& t : terms)
    detail::require(t.shape() == terms[0].shape(), "add_n: shape mismatch");
  std::vector<T> val(terms[0].numel(), T{0});
  for (const auto& t : terms)
    for (std::size_t i = 0; i < val.size(); ++i) val[i] += t.values()[i];
  return detail::make_op<T>(terms[0].shape(), std::move(val), terms,
                            [](typename Tensor<T>::Node& self) {
                              for (std::size_t p = 0; p < self.parents.size(); ++p)
                                if (auto* g = detail::grad_of<T>(self, p))
                                  for (std::size_t i = 0; i < self.grad.size(); ++i)
                                    (*g)[i] += self.grad[i];
                            });
}

template <typename T>
Tensor<T> mean_all(const Tensor<T>& a) {
  T sum{0};
  for (T v : a.values()) sum += v;
  T inv = T{1} / static_cast<T>(a.numel());
  return detail::make_op<T>({1}, {sum * inv}, {a},
                            [inv](typename Tensor<T>::Node& self) {
                              if (auto* g = detail::grad_of<T>(self, 0)) {
                                T gv = self.grad[0] * inv;
                                for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += gv;
                              }
                            });
}

// x:[in] or [rows,in], w:[in,out], bias:[out]
template <typename T>
Tensor<T> affine(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& bias) {
  detail::require(w.rank() == 2, "affine: weight must be rank 2");
  int in = w.dim(0), out = w.dim(1);
  detail::require(bias.rank() == 1 && bias.dim(0) == out, "affine: bias shape mismatch");
  bool batched = x.rank() == 2;
  int rows = batched ? x.dim(0) : 1;
  detail::require((batched ? x.dim(1) : x.dim(0)) == in, "affine: input width mismatch");

  std::vector<T> val(static_cast<std::size_t>(rows) * out);
  const T* xv = x.values().data();
  const T* wv = w.values().data();
  const T* bv = bias.values().data();
  for (int r = 0; r < rows; ++r) {
    T* o = val.data() + static_cast<std::size_t>(r) * out;
    for (int j = 0; j < out; ++j) o[j] = bv[j];
    const T* xr = xv + static_cast<std::size_t>(r) * in;
    for (int i = 0; i < in; ++i) {
      T xi = xr[i];
      const T* wr = wv + static_cast<std::size_t>(i) * out;
      for (int j = 0; j < out; ++j) o[j] += xi * wr[j];
    }
  }
  std::vector<int> shape = batched ? std::vector<int>{rows, out} : std::vector<int>{out};
  return detail::make_op<T>(
      std::move(shape), std::move(val), {x, w, bias},
      [rows, in, out](typename Tensor<T>::Node& self) {
        const auto& xv = self.parents[0]->val;
        const auto& wv = self.parents[1]->val;
        auto* gx = detail::grad_of<T>(self, 0);
        auto* gw = detail::grad_of<T>(self, 1);
        auto* gb = detail::grad_of<T>(self, 2);
        for (int r = 0; r < rows; ++r) {
          const T* go = self.grad.data() + static_cast<std::size_t>(r) * out;
          const T* xr = xv.data() + static_cast<std::size_t>(r) * in;
          if (gb)
            for (int j = 0; j < out; ++j) (*gb)[static_cast<std::size_t>(j)] += go[j];
          if (gx) {
            T* gxr = gx->data() + static_cast<std::size_t>(r) * in;
            for (int i = 0; i < in; ++i) {
              const T* wr = wv.data() + static_cast<std::size_t>(i) * out;
              T acc{0};
              for (int j = 0; j < out; ++j) acc += go[j] * wr[j];
              gxr[i] += acc;
            }
          }
          if (gw) {
            for (int i = 0; i < in; ++i) {
              T xi = xr[i];
              T* gwr = gw->data() + static_cast<std::size_t>(i) * out;
              for (int j = 0; j < out; ++j) gwr[j] += xi * go[j];
            }
          }
        }
      });
}

// affine without bias
template <typename T>
Tensor<T> matmul(const Tensor<T>& x, const Tensor<T>& w) {
  detail::require(w.rank() == 2, "matmul: weight must be rank 2");
  Tensor<T> zero_bias = Tensor<T>::zeros({w.dim(1)});
  // separate implementation would save the zero adds; not worth the code
  return affine(x, w, zero_bias);
}

template <typename T>
Tensor<T> relu(const Tensor<T>& a) {
  std::vector<T> val(a.numel());
  for (std::size_t i = 0; i < val.size(); ++i) val[i] = a.values()[i] > T{0} ? a.values()[i] : T{0};
  return detail::make_op<T>(a.shape(), std::move(val), {a},
                            [](typename Tensor<T>::Node& self) {
                              if (auto* g = detail::grad_of<T>(self, 0)) {
                                const auto& xv = self.parents[0]->val;
                                for (std::size_t i = 0; i < self.grad.size(); ++i)
                                  if (xv[i] > T{0}) (*g)[i] += self.grad[i];
                              }
                            });
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& a) {
  std::vector<T> val(a.numel());
  for (std::size_t i = 0; i < val.size(); ++i) {
    T x = a.values()[i];
    val[i] = x >= T{0} ? T{1} / (T{1} + std::exp(-x))
                       : std::exp(x) / (T{1} + std::exp(x));
  }
  return detail::make_op<T>(a.shape(), std::move(val), {a},
                            [](typename Tensor<T>::Node& self) {
                              if (auto* g = detail::grad_of<T>(self, 0))
                                for (std::size_t i = 0; i < self.grad.size(); ++i) {
                                  T s = self.val[i];
                                  (*g)[i] += self.grad[i] * s * (T{1} - s);
                                }
                            });
}

template <typename T>
Tensor<T> tanh(const Tensor<T>& a) {
  std::vector<T> val(a.numel());
  for (std::size_t i = 0; i < val.size(); ++i) val[i] = std::tanh(a.values()[i]);
  return detail::make_op<T>(a.shape(), std::move(val), {a},
                            [](typename Tensor<T>::Node& self) {
                              if (auto* g = detail::grad_of<T>(self, 0))
                                for (std::size_t i = 0; i < self.grad.size(); ++i) {
                                  T t = self.val[i];
                                  (*g)[i] += self.grad[i] * (T{1} - t * t);
                                }
                            });
}

// softmax over the last axis of a rank-1 or rank-2 tensor
template <typename T>
Tensor<T> softmax(const Tensor<T>& a) {
  detail::require(a.rank() == 1 || a.rank() == 2, "softmax: rank must be 1 or 2");
  int cols = a.dim(a.rank() - 1);
  int rows = a.rank() == 2 ? a.dim(0) : 1;
  std::vector<T> val(a.numel());
  for (int r = 0; r < rows; ++r) {
    const T* x = a.values().data() + static_cast<std::size_t>(r) * cols;
    T* o = val.data() + static_cast<std::size_t>(r) * cols;
    T mx = x[0];
    for (int j = 1; j < cols; ++j) mx = std::max(mx, x[j]);
    T sum{0};
    for (int j = 0; j < cols; ++j) {
      o[j] = std::exp(x[j] - mx);
      sum += o[j];
    }
    for (int j = 0; j < cols; ++j) o[j] /= sum;
  }
  return detail::make_op<T>(a.shape(), std::move(val), {a},
                            [rows, cols](typename Tensor<T>::Node& self) {
                              if (auto* g = detail::grad_of<T>(self, 0))
                                for (int r = 0; r < rows; ++r) {
                                  const T* s = self.val.data() + static_cast<std::size_t>(r) * cols;
                                  const T* go = self.grad.data() + static_cast<std::size_t>(r) * cols;
                                  T dot{0};
                                  for (int j = 0; j < cols; ++j) dot += go[j] * s[j];
                                  T* gx = g->data() + static_cast<std::size_t>(r) * cols;
                                  for (int j = 0; j < cols; ++j) gx[j] += s[j] * (go[j] - dot);
                                }
                            });
}

template <typename T>
Tensor<T> concat(const std::vector<Tensor<T>>& parts) {
  detail::require(!parts.empty(), "concat: no parts");
  int total = 0;
  for (const auto& p : parts) {
    detail::require(p.rank() == 1, "concat: rank-1 tensors only");
    total += p.dim(0);
  }
  std::vector<T> val;
  val.reserve(static_cast<std::size_t>(total));
  for (const auto& p : parts) val.insert(val.end(), p.values().begin(), p.values().end());
  return detail::make_op<T>({total}, std::move(val), parts,
                            [](typename Tensor<T>::Node& self) {
                              std::size_t at = 0;
                              for (std::size_t p = 0; p < self.parents.size(); ++p) {
                                std::size_t len = self.parents[p]->val.size();
                                if (auto* g = detail::grad_of<T>(self, p))
                                  for (std::size_t i = 0; i < len; ++i)
                                    (*g)[i] += self.grad[at + i];
                                at += len;
                              }
                            });
}

template <typename T>
Tensor<T> concat(const Tensor<T>& a, const Tensor<T>& b) {
  return concat<T>(std::vector<Tensor<T>>{a, b});
}

template <typename T>
Tensor<T> slice(const Tensor<T>& a, int start, int len) {
  detail::require(a.rank() == 1, "slice: rank-1 tensor only");
  detail::require(start >= 0 && len > 0 && start + len <= a.dim(0), "slice: out of range");
  std::vector<T> val(a.values().begin() + start, a.values().begin() + start + len);
  return detail::make_op<T>({len}, std::move(val), {a},
                            [start](typename Tensor<T>::Node& self) {
                              if (auto* g = detail::grad_of<T>(self, 0))
                                for (std::size_t i = 0; i < self.grad.size(); ++i)
                                  (*g)[static_cast<std::size_t>(start) + i] += self.grad[i];
                            });
}

// rows of a [v, m] matrix by index; indices may repeat
template <typename T>
Tensor<T> gather_rows(const Tensor<T>& table, const std::vector<int>& indices) {
  detail::require(table.rank() == 2, "gather_rows: table must be rank 2");
  int v = table.dim(0), m = table.dim(1);
  for (int i : indices) detail::require(i >= 0 && i < v, "gather_rows: index out of range");
  std::vector<T> val(indices.size() * static_cast<std::size_t>(m));
  for (std::size_t k = 0; k < indices.size(); ++k)
    for (int j = 0; j < m; ++j)
      val[k * m + j] = table.values()[static_cast<std::size_t>(indices[k]) * m + j];
  return detail::make_op<T>({static_cast<int>(indices.size()), m}, std::move(val), {table},
                            [indices, m](typename Tensor<T>::Node& self) {
                              if (auto* g = detail::grad_of<T>(self, 0))
                                for (std::size_t k = 0; k < indices.size(); ++k)
                                  for (int j = 0; j < m; ++j)
                                    (*g)[static_cast<std::size_t>(indices[k]) * m + j] +=
                                        self.grad[k * m + j];
                            });
}

template <typename T>
Tensor<T> stack_rows(const std::vector<Tensor<T>>& rows) {
  detail::require(!rows.empty(), "stack_rows: no rows");
  int n = rows[0].dim(0);
  for (const auto& r : rows)
    detail::require(r.rank() == 1 && r.dim(0) == n, "stack_rows: width mismatch");
  std::vector<T> val;
  val.reserve(rows.size() * static_cast<std::size_t>(n));
  for (const auto& r : rows) val.insert(val.end(), r.values().begin(), r.values().end());
  return detail::make_op<T>({static_cast<int>(rows.size()), n}, std::move(val), rows,
                            [n](typename Tensor<T>::Node& self) {
                              for (std::size_t p = 0; p < self.parents.size(); ++p)
                                if (auto* g = detail::grad_of<T>(self, p))
                                  for (int j = 0; j < n; ++j)
                                    (*g)[static_cast<std::size_t>(j)] +=
                                        self.grad[p * static_cast<std::size_t>(n) +
                                                  static_cast<std::size_t>(j)];
                            });
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& a, std::vector<int> shape) {
  detail::require(Tensor<T>::count(shape) == a.numel(), "reshape: element count mismatch");
  std::vector<T> val = a.values();
  return detail::make_op<T>(std::move(shape), std::move(val), {a},
                            [](typename Tensor<T>::Node& self) {
                              if (auto* g = detail::grad_of<T>(self, 0))
                                for (std::size_t i = 0; i < self.grad.size(); ++i)
                                  (*g)[i] += self.grad[i];
                            });
}

template <typename T>
Tensor<T> flatten(const Tensor<T>& a) {
  return reshape(a, {static_cast<int>(a.numel())});
}

template <typename T>
Tensor<T> row(const Tensor<T>& a, int r) {
  detail::require(a.rank() == 2, "row: rank-2 tensor only");
  detail::require(r >= 0 && r < a.dim(0), "row: out of range");
  int m = a.dim(1);
  std::vector<T> val(a.values().begin() + static_cast<std::size_t>(r) * m,
                     a.values().begin() + static_cast<std::size_t>(r + 1) * m);
  return detail::make_op<T>({m}, std::move(val), {a},
                            [r, m](typename Tensor<T>::Node& self) {
                              if (auto* g = detail::grad_of<T>(self, 0))
                                for (int j = 0; j < m; ++j)
                                  (*g)[static_cast<std::size_t>(r) * m + j] += self.grad[static_cast<std::size_t>(j)];
                            });
}

}  // namespace mann::nn
