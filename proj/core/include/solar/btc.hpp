#pragma once

// Binarized transformation networks. BTC_x maps an encoding of the previous
// anchor positions to a motion candidate plus two scale coefficients; BTC_f
// maps the same encoding to a feature residual. Only the weight signs are
// entropy coded; biases and per-layer scales travel at full precision.

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "solar/anchor_model.hpp"
#include "solar/autodiff.hpp"

namespace solar {

inline constexpr int kEncodingBands = 4;
inline constexpr std::size_t kEncodingWidth = 3 + 3 * 2 * kEncodingBands;

/// Raw coordinates followed by sin/cos(2^b * pi * x) for b < kEncodingBands.
Tensor positional_encoding(const Tensor& x);

struct BinarizedLinear {
  Param latent_w;  // in x out
  Param bias;      // 1 x out
  Param scale;     // 1 x 1

  Graph::Node forward(Graph& g, Graph::Node x, bool trainable, double clip);
  /// scale * sign(latent_w), ties to +1.
  Tensor effective_weight() const;
  std::vector<Param*> params() { return {&latent_w, &bias, &scale}; }
};

struct BtcNet {
  std::vector<BinarizedLinear> layers;

  Graph::Node forward(Graph& g, Graph::Node x, bool trainable, double clip);
  std::vector<Param*> params();
  std::vector<const Param*> params() const;
  std::size_t sign_count() const;
};

struct BtcConfig {
  std::size_t feature_dim = 16;
  std::size_t hidden = 48;
  double gamma_max = 1.0;
  double ste_clip = 1.0;
  double latent_init = 0.1;
  double output_scale_init = 1e-3;
  double gamma_bias_init = 0.5;
};

struct BtcPair {
  BtcConfig config;
  BtcNet btc_x;  // -> [dx(3), gamma_x, gamma_f]
  BtcNet btc_f;  // -> df(D)

  /// Fresh random networks.
  static BtcPair init(const BtcConfig& cfg, std::uint64_t seed);
  /// Same architecture with every latent, bias and scale zeroed.
  static BtcPair zeros(const BtcConfig& cfg);
  std::vector<Param*> params();
  std::vector<Param*> params_f();
};

struct BtcOutputNodes {
  Graph::Node dx;       // N x 3
  Graph::Node gamma_x;  // N x 1
  Graph::Node gamma_f;  // N x 1
  Graph::Node df;       // N x D
};

struct BtcOutputs {
  Tensor dx, gamma_x, gamma_f, df;
};

BtcOutputNodes btc_forward(Graph& g, BtcPair& pair, Graph::Node encoding, bool trainable);
BtcOutputs btc_forward(const BtcPair& pair, const Tensor& x_prev);

/// x_t = x_{t-1} + gamma_x * dx, f_t = f_{t-1} + gamma_f * df; l unchanged.
struct UpdatedNodes {
  Graph::Node x, f;
};
UpdatedNodes apply_updates(Graph& g, Graph::Node x_prev, Graph::Node f_prev, const BtcOutputNodes& out);
AnchorSet apply_updates(const AnchorSet& prev, const BtcOutputs& out);

struct SymbolCounts {
  std::uint64_t c_plus = 0;
  std::uint64_t c_minus = 0;
  std::uint64_t total() const { return c_plus + c_minus; }
};

SymbolCounts count_symbols(const BtcPair& pair);
/// Sign bits of every weight, btc_x layers first, each row-major; true = +1.
std::vector<bool> sign_bits(const BtcNet& net);

inline constexpr double kRateProbClamp = 1e-4;

/// C+ * -log2(p) + C- * -log2(1 - p).
double hard_rate(const SymbolCounts& counts, double p_b);

/// Relaxed bit count sum_w [sig(w/tau) * -log2 p + (1 - sig(w/tau)) * -log2(1-p)].
/// Adds d(rate)/d(latent) * weight into each latent's grad when `accumulate_weight` > 0.
double soft_rate(BtcPair& pair, double p_b, double tau, double accumulate_weight = 0.0);

/// Empirical +1 frequency clamped to [kRateProbClamp, 1 - kRateProbClamp].
double empirical_p_plus(const SymbolCounts& counts);

}  // namespace solar
