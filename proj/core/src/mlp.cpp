#include "solar/mlp.hpp"

#include <cmath>

namespace solar {

Mlp::Mlp(const std::vector<std::size_t>& widths, std::mt19937_64& rng, const std::string& name) {
  if (widths.size() < 2) throw ConfigError("mlp needs at least an input and an output width");
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const std::size_t in = widths[l], out = widths[l + 1];
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    Tensor w(in, out);
    for (double& v : w.values) v = dist(rng);
    const std::string tag = name + ".l" + std::to_string(l);
    layers_.push_back(DenseLayer{Param(tag + ".w", std::move(w)), Param(tag + ".b", Tensor(1, out))});
  }
}

Graph::Node Mlp::forward(Graph& g, Graph::Node input, bool trainable) {
  Graph::Node h = input;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    auto& layer = layers_[l];
    const auto w = trainable ? g.param(layer.weight) : g.constant(layer.weight.value);
    const auto b = trainable ? g.param(layer.bias) : g.constant(layer.bias.value);
    h = g.affine(h, w, b);
    if (l + 1 < layers_.size()) h = g.tanh(h);
  }
  return h;
}

Tensor Mlp::evaluate(const Tensor& input) const {
  Graph g;
  Graph::Node h = g.constant(input);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    h = g.affine(h, g.constant(layers_[l].weight.value), g.constant(layers_[l].bias.value));
    if (l + 1 < layers_.size()) h = g.tanh(h);
  }
  return g.value(h);
}

std::vector<Param*> Mlp::params() {
  std::vector<Param*> out;
  for (auto& l : layers_) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  return out;
}

std::vector<const Param*> Mlp::params() const {
  std::vector<const Param*> out;
  for (const auto& l : layers_) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  return out;
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.weight.value.size() + l.bias.value.size();
  return n;
}

std::vector<double> Mlp::flatten() const {
  std::vector<double> out;
  out.reserve(parameter_count());
  for (const auto& l : layers_) {
    out.insert(out.end(), l.weight.value.values.begin(), l.weight.value.values.end());
    out.insert(out.end(), l.bias.value.values.begin(), l.bias.value.values.end());
  }
  return out;
}

void Mlp::assign(std::span<const double> values) {
  if (values.size() != parameter_count()) throw ShapeError("mlp assign: parameter count differs");
  std::size_t k = 0;
  for (auto& l : layers_) {
    for (double& v : l.weight.value.values) v = values[k++];
    for (double& v : l.bias.value.values) v = values[k++];
  }
}

void Mlp::reset_optimizer() {
  for (Param* p : params()) {
    p->reset_optimizer();
    p->zero_grad();
  }
}

void round_to_float(std::span<double> values) {
  for (double& v : values) v = static_cast<double>(static_cast<float>(v));
}

void round_to_float(Mlp& net) {
  for (Param* p : net.params()) round_to_float(p->value.values);
}

}  // namespace solar
