#pragma once

// Reverse-mode differentiation over small dense row-major tensors.
//
// A Graph is a tape: every op evaluates eagerly when it is recorded and
// appends one node. backward() walks the tape in exact reverse order, so the
// floating-point evaluation order is fixed by the order ops were recorded.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "solar/errors.hpp"

namespace solar {

struct Tensor {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  Tensor() = default;
  Tensor(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), values(r * c, fill) {}
  Tensor(std::size_t r, std::size_t c, std::vector<double> v);

  static Tensor scalar(double v) { return Tensor(1, 1, v); }

  std::size_t size() const { return values.size(); }
  double& operator()(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }
  bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }
  bool all_finite() const;
  void fill(double v);
};

struct Param {
  std::string name;
  Tensor value;
  Tensor grad;
  Tensor adam_m;
  Tensor adam_v;
  std::uint64_t step_count = 0;

  Param() = default;
  Param(std::string n, Tensor init);

  void zero_grad() { grad.fill(0.0); }
  void reset_optimizer();
};

struct AdamOptions {
  double lr = 5e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Bias-corrected Adam. Throws NonFiniteError (index into `params`) before
/// touching any value if a gradient is not finite. Gradients are zeroed on
/// success.
void adam_step(std::span<Param* const> params, const AdamOptions& opt);

/// Euclidean norm over the concatenation of all gradients, in list order.
double grad_norm(std::span<const Param* const> params);

class Graph {
 public:
  using Node = std::size_t;

  struct Seed {
    Node node;
    Tensor grad;
  };

  Node constant(Tensor t);
  Node param(Param& p);

  /// x (N×in) · w (in×out) + b (1×out).
  Node affine(Node x, Node w, Node b);
  Node matmul(Node a, Node b);
  /// Same shape, or `b` broadcast as a 1×C row or a 1×1 scalar.
  Node add(Node a, Node b);
  Node sub(Node a, Node b);
  /// Elementwise; `b` may also be an N×1 column (per-row factor) or 1×1.
  Node mul(Node a, Node b);
  Node scale(Node a, double c);
  Node add_const(Node a, double c);

  Node sigmoid(Node a);
  Node tanh(Node a);
  Node exp(Node a);
  Node softplus(Node a);

  Node sum(Node a);
  Node mean(Node a);

  Node concat_cols(Node a, Node b);
  Node slice_cols(Node a, std::size_t begin, std::size_t end);
  Node reshape(Node a, std::size_t rows, std::size_t cols);
  /// Every row repeated `k` times consecutively.
  Node repeat_rows(Node a, std::size_t k);
  /// Row-wise x / sqrt(|x|^2 + eps).
  Node normalize_rows(Node a, double eps = 1e-12);

  /// Forward 1[sigmoid(s) > threshold]; backward d sigmoid(s)/ds.
  Node ste_gate(Node score, double threshold);
  /// Forward sign with ties to +1; backward identity where |x| <= clip.
  Node ste_sign(Node latent, double clip = 1.0);

  const Tensor& value(Node n) const;
  /// Gradient accumulated at `n` by the last backward (zeros if none reached it).
  Tensor grad(Node n) const;

  /// Seeds d(loss)/d(loss) = 1 at a scalar node and accumulates into params.
  void backward(Node loss);
  /// Seeds arbitrary upstream gradients (e.g. from an external renderer).
  void backward(std::span<const Seed> seeds);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct NodeData {
    Tensor value;
    std::function<void(Graph&, Node)> back;
    Param* param = nullptr;
  };

  Node push(Tensor value, std::function<void(Graph&, Node)> back, Param* p = nullptr);
  Tensor& grad_ref(Node n);
  const Tensor& upstream(Node n) const { return grads_[n]; }
  void check(Node n) const;
  void run_backward();

  std::vector<NodeData> nodes_;
  std::vector<Tensor> grads_;
  bool backward_done_ = false;
};

/// Sigmoid and softplus in overflow-safe forms.
double sigmoid(double x);
double softplus(double x);

}  // namespace solar
