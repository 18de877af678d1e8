#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "solar/autodiff.hpp"

namespace solar {

struct DenseLayer {
  Param weight;  // in x out
  Param bias;    // 1 x out
};

/// Fully connected network with tanh between layers and a linear output.
class Mlp {
 public:
  Mlp() = default;
  /// widths = {in, hidden..., out}; Glorot-uniform weights, zero biases.
  Mlp(const std::vector<std::size_t>& widths, std::mt19937_64& rng, const std::string& name);

  /// Records the network on `g`. Frozen networks are recorded as constants.
  Graph::Node forward(Graph& g, Graph::Node input, bool trainable);
  /// Plain evaluation without a tape.
  Tensor evaluate(const Tensor& input) const;

  std::vector<Param*> params();
  std::vector<const Param*> params() const;
  std::size_t parameter_count() const;
  std::size_t input_width() const { return layers_.front().weight.value.rows; }
  std::size_t output_width() const { return layers_.back().weight.value.cols; }

  /// Flattened parameters, layer by layer (weight then bias).
  std::vector<double> flatten() const;
  void assign(std::span<const double> values);
  void reset_optimizer();

  std::vector<DenseLayer>& layers() { return layers_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }

 private:
  std::vector<DenseLayer> layers_;
};

/// Rounds every value to the nearest float32, the precision used on the wire.
void round_to_float(std::span<double> values);
void round_to_float(Mlp& net);

}  // namespace solar
