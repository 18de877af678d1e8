#include "solar/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace solar {

Tensor::Tensor(std::size_t r, std::size_t c, std::vector<double> v) : rows(r), cols(c), values(std::move(v)) {
  if (values.size() != rows * cols) throw ShapeError("tensor value count does not match shape");
}

bool Tensor::all_finite() const {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

void Tensor::fill(double v) { std::fill(values.begin(), values.end(), v); }

Param::Param(std::string n, Tensor init)
    : name(std::move(n)),
      value(std::move(init)),
      grad(value.rows, value.cols),
      adam_m(value.rows, value.cols),
      adam_v(value.rows, value.cols) {}

void Param::reset_optimizer() {
  adam_m.fill(0.0);
  adam_v.fill(0.0);
  step_count = 0;
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

void adam_step(std::span<Param* const> params, const AdamOptions& opt) {
  for (std::size_t i = 0; i < params.size(); ++i)
    if (!params[i]->grad.all_finite()) throw NonFiniteError("non-finite gradient in " + params[i]->name, i);

  for (Param* p : params) {
    ++p->step_count;
    const double t = static_cast<double>(p->step_count);
    const double c1 = 1.0 - std::pow(opt.beta1, t);
    const double c2 = 1.0 - std::pow(opt.beta2, t);
    for (std::size_t k = 0; k < p->value.size(); ++k) {
      const double g = p->grad[k];
      p->adam_m[k] = opt.beta1 * p->adam_m[k] + (1.0 - opt.beta1) * g;
      p->adam_v[k] = opt.beta2 * p->adam_v[k] + (1.0 - opt.beta2) * g * g;
      const double mhat = p->adam_m[k] / c1;
      const double vhat = p->adam_v[k] / c2;
      p->value[k] -= opt.lr * mhat / (std::sqrt(vhat) + opt.eps);
    }
    p->zero_grad();
  }
}

double grad_norm(std::span<const Param* const> params) {
  double acc = 0.0;
  for (const Param* p : params)
    for (double g : p->grad.values) acc += g * g;
  return std::sqrt(acc);
}

// ---------------------------------------------------------------------------

Graph::Node Graph::push(Tensor value, std::function<void(Graph&, Node)> back, Param* p) {
  const Node id = nodes_.size();
  if (!value.all_finite()) throw NonFiniteError("non-finite value produced by graph node", id);
  nodes_.push_back(NodeData{std::move(value), std::move(back), p});
  return id;
}

void Graph::check(Node n) const {
  if (n >= nodes_.size()) throw Error("graph node id out of range");
}

const Tensor& Graph::value(Node n) const {
  check(n);
  return nodes_[n].value;
}

Tensor Graph::grad(Node n) const {
  check(n);
  if (n < grads_.size() && grads_[n].size() == nodes_[n].value.size()) return grads_[n];
  return Tensor(nodes_[n].value.rows, nodes_[n].value.cols);
}

Tensor& Graph::grad_ref(Node n) {
  Tensor& g = grads_[n];
  if (g.size() != nodes_[n].value.size()) g = Tensor(nodes_[n].value.rows, nodes_[n].value.cols);
  return g;
}

Graph::Node Graph::constant(Tensor t) { return push(std::move(t), nullptr); }

Graph::Node Graph::param(Param& p) { return push(p.value, nullptr, &p); }

Graph::Node Graph::affine(Node x, Node w, Node b) {
  const Tensor& X = value(x);
  const Tensor& W = value(w);
  const Tensor& B = value(b);
  if (X.cols != W.rows || B.rows != 1 || B.cols != W.cols) throw ShapeError("affine: shape mismatch");
  Tensor out(X.rows, W.cols);
  for (std::size_t i = 0; i < X.rows; ++i) {
    double* o = &out.values[i * W.cols];
    for (std::size_t j = 0; j < W.cols; ++j) o[j] = B.values[j];
    for (std::size_t k = 0; k < X.cols; ++k) {
      const double xv = X.values[i * X.cols + k];
      const double* wr = &W.values[k * W.cols];
      for (std::size_t j = 0; j < W.cols; ++j) o[j] += xv * wr[j];
    }
  }
  return push(std::move(out), [x, w, b](Graph& g, Node self) {
    const Tensor& dy = g.upstream(self);
    const Tensor& X = g.value(x);
    const Tensor& W = g.value(w);
    Tensor& dx = g.grad_ref(x);
    Tensor& dw = g.grad_ref(w);
    Tensor& db = g.grad_ref(b);
    for (std::size_t i = 0; i < X.rows; ++i) {
      const double* d = &dy.values[i * W.cols];
      for (std::size_t j = 0; j < W.cols; ++j) db.values[j] += d[j];
      for (std::size_t k = 0; k < X.cols; ++k) {
        const double xv = X.values[i * X.cols + k];
        const double* wr = &W.values[k * W.cols];
        double* dwr = &dw.values[k * W.cols];
        double acc = 0.0;
        for (std::size_t j = 0; j < W.cols; ++j) {
          acc += d[j] * wr[j];
          dwr[j] += xv * d[j];
        }
        dx.values[i * X.cols + k] += acc;
      }
    }
  });
}

Graph::Node Graph::matmul(Node a, Node b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  if (A.cols != B.rows) throw ShapeError("matmul: inner dimensions differ");
  Tensor out(A.rows, B.cols);
  for (std::size_t i = 0; i < A.rows; ++i)
    for (std::size_t k = 0; k < A.cols; ++k) {
      const double av = A(i, k);
      for (std::size_t j = 0; j < B.cols; ++j) out(i, j) += av * B(k, j);
    }
  return push(std::move(out), [a, b](Graph& g, Node self) {
    const Tensor& dy = g.upstream(self);
    const Tensor& A = g.value(a);
    const Tensor& B = g.value(b);
    Tensor& da = g.grad_ref(a);
    Tensor& dB = g.grad_ref(b);
    for (std::size_t i = 0; i < A.rows; ++i)
      for (std::size_t k = 0; k < A.cols; ++k) {
        double acc = 0.0;
        for (std::size_t j = 0; j < B.cols; ++j) {
          acc += dy(i, j) * B(k, j);
          dB(k, j) += A(i, k) * dy(i, j);
        }
        da(i, k) += acc;
      }
  });
}

namespace {

enum class Broadcast { same, row, column, scalar };

Broadcast broadcast_kind(const Tensor& a, const Tensor& b, bool allow_column) {
  if (a.same_shape(b)) return Broadcast::same;
  if (b.rows == 1 && b.cols == 1) return Broadcast::scalar;
  if (b.rows == 1 && b.cols == a.cols) return Broadcast::row;
  if (allow_column && b.cols == 1 && b.rows == a.rows) return Broadcast::column;
  throw ShapeError("elementwise op: incompatible shapes");
}

std::size_t bindex(Broadcast k, const Tensor& a, std::size_t i) {
  switch (k) {
    case Broadcast::same: return i;
    case Broadcast::row: return i % a.cols;
    case Broadcast::column: return i / a.cols;
    case Broadcast::scalar: return 0;
  }
  return 0;
}

}  // namespace

Graph::Node Graph::add(Node a, Node b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  const Broadcast k = broadcast_kind(A, B, true);
  Tensor out = A;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += B[bindex(k, A, i)];
  return push(std::move(out), [a, b, k](Graph& g, Node self) {
    const Tensor& dy = g.upstream(self);
    const Tensor& A = g.value(a);
    Tensor& da = g.grad_ref(a);
    Tensor& db = g.grad_ref(b);
    for (std::size_t i = 0; i < dy.size(); ++i) {
      da[i] += dy[i];
      db[bindex(k, A, i)] += dy[i];
    }
  });
}

Graph::Node Graph::sub(Node a, Node b) { return add(a, scale(b, -1.0)); }

Graph::Node Graph::mul(Node a, Node b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  const Broadcast k = broadcast_kind(A, B, true);
  Tensor out = A;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= B[bindex(k, A, i)];
  return push(std::move(out), [a, b, k](Graph& g, Node self) {
    const Tensor& dy = g.upstream(self);
    const Tensor& A = g.value(a);
    const Tensor& B = g.value(b);
    Tensor& da = g.grad_ref(a);
    Tensor& db = g.grad_ref(b);
    for (std::size_t i = 0; i < dy.size(); ++i) {
      const std::size_t j = bindex(k, A, i);
      da[i] += dy[i] * B[j];
      db[j] += dy[i] * A[i];
    }
  });
}

Graph::Node Graph::scale(Node a, double c) {
  Tensor out = value(a);
  for (double& v : out.values) v *= c;
  return push(std::move(out), [a, c](Graph& g, Node self) {
    const Tensor& dy = g.upstream(self);
    Tensor& da = g.grad_ref(a);
    for (std::size_t i = 0; i < dy.size(); ++i) da[i] += c * dy[i];
  });
}

Graph::Node Graph::add_const(Node a, double c) {
  Tensor out = value(a);
  for (double& v : out.values) v += c;
  return push(std::move(out), [a](Graph& g, Node self) {
    const Tensor& dy = g.upstream(self);
    Tensor& da = g.grad_ref(a);
    for (std::size_t i = 0; i < dy.size(); ++i) da[i] += dy[i];
  });
}

Graph::Node Graph::sigmoid(Node a) {
  Tensor out = value(a);
  for (double& v : out.values) v = solar::sigmoid(v);
  return push(std::move(out), [a](Graph& g, Node self) {
    const Tensor& dy = g.upstream(self);
    const Tensor& y = g.value(self);
    Tensor& da = g.grad_ref(a);
    for (std::size_t i = 0; i < dy.size(); ++i) da[i] += dy[i] * y[i] * (1.0 - y[i]);
  });
}

Graph::Node Graph::tanh(Node a) {
  Tensor out = value(a);
  for (double& v : out.values) v = std::tanh(v);
  return push(std::move(out), [a](Graph& g, Node self) {
    const Tensor& dy = g.upstream(self);
    const Tensor& y = g.value(self);
    Tensor& da = g.grad_ref(a);
    for (std::size_t i = 0; i < dy.size(); ++i) da[i] += dy[i] * (1.0 - y[i] * y[i]);
  });
}

Graph::Node Graph::exp(Node a) {
  Tensor out = value(a);
  for (double& v : out.values) v = std::exp(v);
  return push(std::move(out), [a](Graph& g, Node self) {
    const Tensor& dy = g.upstream(self);
    const Tensor& y = g.value(self);
    Tensor& da = g.grad_ref(a);
    for (std::size_t i = 0; i < dy.size(); ++i) da[i] += dy[i] * y[i];
  });
}

Graph::Node Graph::softplus(Node a) {
  Tensor out = value(a);
  for (double& v : out.values) v = solar::softplus(v);
  return push(std::move(out), [a](Graph& g, Node self) {
    const Tensor& dy = g.upstream(self);
    const Tensor& x = g.value(a);
    Tensor& da = g.grad_ref(a);
    for (std::size_t i = 0; i < dy.size(); ++i) da[i] += dy[i] * solar::sigmoid(x[i]);
  });
}

Graph::Node Graph::sum(Node a) {
  const Tensor& A = value(a);
  double acc = 0.0;
  for (double v : A.values) acc += v;
  return push(Tensor::scalar(acc), [a](Graph& g, Node self) {
    const double dy = g.upstream(self)[0];
    Tensor& da = g.grad_ref(a);
    for (double& v : da.values) v += dy;
  });
}

Graph::Node Graph::mean(Node a) {
  const std::size_t n = value(a).size();
  if (n == 0) throw ShapeError("mean of empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(n));
}

Graph::Node Graph::concat_cols(Node a, Node b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  if (A.rows != B.rows) throw ShapeError("concat_cols: row counts differ");
  Tensor out(A.rows, A.cols + B.cols);
  for (std::size_t i = 0; i < A.rows; ++i) {
    for (std::size_t j = 0; j < A.cols; ++j) out(i, j) = A(i, j);
    for (std::size_t j = 0; j < B.cols; ++j) out(i, A.cols + j) = B(i, j);
  }
  return push(std::move(out), [a, b](Graph& g, Node self) {
    const Tensor& dy = g.upstream(self);
    Tensor& da = g.grad_ref(a);
    Tensor& db = g.grad_ref(b);
    for (std::size_t i = 0; i < dy.rows; ++i) {
      for (std::size_t j = 0; j < da.cols; ++j) da(i, j) += dy(i, j);
      for (std::size_t j = 0; j < db.cols; ++j) db(i, j) += dy(i, da.cols + j);
    }
  });
}

Graph::Node Graph::slice_cols(Node a, std::size_t begin, std::size_t end) {
  const Tensor& A = value(a);
  if (begin >= end || end > A.cols) throw ShapeError("slice_cols: bad range");
  Tensor out(A.rows, end - begin);
  for (std::size_t i = 0; i < A.rows; ++i)
    for (std::size_t j = begin; j < end; ++j) out(i, j - begin) = A(i, j);
  return push(std::move(out), [a, begin](Graph& g, Node self) {
    const Tensor& dy = g.upstream(self);
    Tensor& da = g.grad_ref(a);
    for (std::size_t i = 0; i < dy.rows; ++i)
      for (std::size_t j = 0; j < dy.cols; ++j) da(i, begin + j) += dy(i, j);
  });
}

Graph::Node Graph::reshape(Node a, std::size_t rows, std::size_t cols) {
  const Tensor& A = value(a);
  if (rows * cols != A.size()) throw ShapeError("reshape: element count differs");
  Tensor out(rows, cols, A.values);
  return push(std::move(out), [a](Graph& g, Node self) {
    const Tensor& dy = g.upstream(self);
    Tensor& da = g.grad_ref(a);
    for (std::size_t i = 0; i < dy.size(); ++i) da[i] += dy[i];
  });
}

Graph::Node Graph::repeat_rows(Node a, std::size_t k) {
  const Tensor& A = value(a);
  Tensor out(A.rows * k, A.cols);
  for (std::size_t i = 0; i < A.rows; ++i)
    for (std::size_t r = 0; r < k; ++r)
      for (std::size_t j = 0; j < A.cols; ++j) out(i * k + r, j) = A(i, j);
  return push(std::move(out), [a, k](Graph& g, Node self) {
    const Tensor& dy = g.upstream(self);
    Tensor& da = g.grad_ref(a);
    for (std::size_t i = 0; i < da.rows; ++i)
      for (std::size_t r = 0; r < k; ++r)
        for (std::size_t j = 0; j < da.cols; ++j) da(i, j) += dy(i * k + r, j);
  });
}

Graph::Node Graph::normalize_rows(Node a, double eps) {
  const Tensor& A = value(a);
  Tensor out(A.rows, A.cols);
  for (std::size_t i = 0; i < A.rows; ++i) {
    double n2 = eps;
    for (std::size_t j = 0; j < A.cols; ++j) n2 += A(i, j) * A(i, j);
    const double inv = 1.0 / std::sqrt(n2);
    for (std::size_t j = 0; j < A.cols; ++j) out(i, j) = A(i, j) * inv;
  }
  return push(std::move(out), [a, eps](Graph& g, Node self) {
    const Tensor& dy = g.upstream(self);
    const Tensor& A = g.value(a);
    const Tensor& y = g.value(self);
    Tensor& da = g.grad_ref(a);
    for (std::size_t i = 0; i < A.rows; ++i) {
      double n2 = eps;
      for (std::size_t j = 0; j < A.cols; ++j) n2 += A(i, j) * A(i, j);
      const double inv = 1.0 / std::sqrt(n2);
      double dot = 0.0;
      for (std::size_t j = 0; j < A.cols; ++j) dot += dy(i, j) * y(i, j);
      for (std::size_t j = 0; j < A.cols; ++j) da(i, j) += inv * (dy(i, j) - y(i, j) * dot);
    }
  });
}

Graph::Node Graph::ste_gate(Node score, double threshold) {
  Tensor out = value(score);
  for (double& v : out.values) v = solar::sigmoid(v) > threshold ? 1.0 : 0.0;
  return push(std::move(out), [score](Graph& g, Node self) {
    const Tensor& dy = g.upstream(self);
    const Tensor& s = g.value(score);
    Tensor& ds = g.grad_ref(score);
    for (std::size_t i = 0; i < dy.size(); ++i) {
      const double sg = solar::sigmoid(s[i]);
      ds[i] += dy[i] * sg * (1.0 - sg);
    }
  });
}

Graph::Node Graph::ste_sign(Node latent, double clip) {
  Tensor out = value(latent);
  for (double& v : out.values) v = v >= 0.0 ? 1.0 : -1.0;
  return push(std::move(out), [latent, clip](Graph& g, Node self) {
    const Tensor& dy = g.upstream(self);
    const Tensor& x = g.value(latent);
    Tensor& dx = g.grad_ref(latent);
    for (std::size_t i = 0; i < dy.size(); ++i)
      if (std::abs(x[i]) <= clip) dx[i] += dy[i];
  });
}

// ---------------------------------------------------------------------------

void Graph::backward(Node loss) {
  check(loss);
  if (value(loss).size() != 1) throw ShapeError("backward: loss is not a scalar");
  const Seed seed{loss, Tensor::scalar(1.0)};
  backward(std::span<const Seed>(&seed, 1));
}

void Graph::backward(std::span<const Seed> seeds) {
  if (nodes_.empty()) throw Error("backward: graph has no forward evaluation");
  if (backward_done_) throw Error("backward: graph already differentiated");
  grads_.assign(nodes_.size(), Tensor());
  for (const Seed& s : seeds) {
    check(s.node);
    if (!s.grad.same_shape(value(s.node))) throw ShapeError("backward: seed shape mismatch");
    Tensor& g = grad_ref(s.node);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += s.grad[i];
  }
  run_backward();
  backward_done_ = true;
}

void Graph::run_backward() {
  for (std::size_t n = nodes_.size(); n-- > 0;) {
    if (grads_[n].size() == 0) continue;
    NodeData& nd = nodes_[n];
    if (nd.back) nd.back(*this, n);
    if (nd.param != nullptr) {
      Tensor& pg = nd.param->grad;
      for (std::size_t i = 0; i < pg.size(); ++i) pg[i] += grads_[n][i];
    }
  }
}

}  // namespace solar
