#include "solar/btc.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "solar/errors.hpp"

namespace solar {

Tensor positional_encoding(const Tensor& x) {
  if (x.cols != 3) throw ShapeError("positional encoding expects N x 3 positions");
  Tensor out(x.rows, kEncodingWidth);
  for (std::size_t i = 0; i < x.rows; ++i) {
    std::size_t c = 0;
    for (int j = 0; j < 3; ++j) out(i, c++) = x(i, j);
    for (int b = 0; b < kEncodingBands; ++b) {
      const double freq = std::ldexp(std::numbers::pi, b);
      for (int j = 0; j < 3; ++j) {
        out(i, c++) = std::sin(freq * x(i, j));
        out(i, c++) = std::cos(freq * x(i, j));
      }
    }
  }
  return out;
}

Graph::Node BinarizedLinear::forward(Graph& g, Graph::Node x, bool trainable, double clip) {
  if (!trainable) {
    return g.affine(x, g.constant(effective_weight()), g.constant(bias.value));
  }
  const auto w = g.mul(g.ste_sign(g.param(latent_w), clip), g.param(scale));
  return g.affine(x, w, g.param(bias));
}

Tensor BinarizedLinear::effective_weight() const {
  Tensor w = latent_w.value;
  const double s = scale.value[0];
  for (double& v : w.values) v = (v >= 0.0 ? 1.0 : -1.0) * s;
  return w;
}

Graph::Node BtcNet::forward(Graph& g, Graph::Node x, bool trainable, double clip) {
  Graph::Node h = x;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    h = layers[l].forward(g, h, trainable, clip);
    if (l + 1 < layers.size()) h = g.tanh(h);
  }
  return h;
}

std::vector<Param*> BtcNet::params() {
  std::vector<Param*> out;
  for (auto& l : layers)
    for (Param* p : l.params()) out.push_back(p);
  return out;
}

std::vector<const Param*> BtcNet::params() const {
  std::vector<const Param*> out;
  for (const auto& l : layers) {
    out.push_back(&l.latent_w);
    out.push_back(&l.bias);
    out.push_back(&l.scale);
  }
  return out;
}

std::size_t BtcNet::sign_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.latent_w.value.size();
  return n;
}

namespace {

BtcNet make_net(const std::vector<std::size_t>& widths, const BtcConfig& cfg, std::mt19937_64* rng,
                const std::string& name) {
  BtcNet net;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const std::size_t in = widths[l], out = widths[l + 1];
    Tensor w(in, out);
    double s = 0.0;
    if (rng) {
      std::uniform_real_distribution<double> dist(-cfg.latent_init, cfg.latent_init);
      for (double& v : w.values) v = dist(*rng);
      const bool last = l + 2 == widths.size();
      s = last ? cfg.output_scale_init : 1.0 / std::sqrt(static_cast<double>(in));
    }
    const std::string tag = name + ".l" + std::to_string(l);
    net.layers.push_back(BinarizedLinear{Param(tag + ".w", std::move(w)), Param(tag + ".b", Tensor(1, out)),
                                         Param(tag + ".s", Tensor::scalar(s))});
  }
  return net;
}

}  // namespace

BtcPair BtcPair::init(const BtcConfig& cfg, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  BtcPair p;
  p.config = cfg;
  p.btc_x = make_net({kEncodingWidth, cfg.hidden, 5}, cfg, &rng, "btc_x");
  p.btc_f = make_net({kEncodingWidth, cfg.hidden, cfg.feature_dim}, cfg, &rng, "btc_f");
  // gamma heads start away from zero so the product gamma * delta has gradient.
  Tensor& b = p.btc_x.layers.back().bias.value;
  b[3] = b[4] = cfg.gamma_bias_init;
  return p;
}

BtcPair BtcPair::zeros(const BtcConfig& cfg) {
  BtcPair p;
  p.config = cfg;
  p.btc_x = make_net({kEncodingWidth, cfg.hidden, 5}, cfg, nullptr, "btc_x");
  p.btc_f = make_net({kEncodingWidth, cfg.hidden, cfg.feature_dim}, cfg, nullptr, "btc_f");
  return p;
}

std::vector<Param*> BtcPair::params() {
  auto out = btc_x.params();
  for (Param* p : btc_f.params()) out.push_back(p);
  return out;
}

std::vector<Param*> BtcPair::params_f() { return btc_f.params(); }

BtcOutputNodes btc_forward(Graph& g, BtcPair& pair, Graph::Node encoding, bool trainable) {
  const double clip = pair.config.ste_clip;
  const auto ox = pair.btc_x.forward(g, encoding, trainable, clip);
  const auto of = pair.btc_f.forward(g, encoding, trainable, clip);
  BtcOutputNodes out;
  out.dx = g.slice_cols(ox, 0, 3);
  out.gamma_x = g.scale(g.tanh(g.slice_cols(ox, 3, 4)), pair.config.gamma_max);
  out.gamma_f = g.scale(g.tanh(g.slice_cols(ox, 4, 5)), pair.config.gamma_max);
  out.df = of;
  return out;
}

BtcOutputs btc_forward(const BtcPair& pair, const Tensor& x_prev) {
  Graph g;
  BtcPair copy = pair;
  const auto n = btc_forward(g, copy, g.constant(positional_encoding(x_prev)), false);
  return BtcOutputs{g.value(n.dx), g.value(n.gamma_x), g.value(n.gamma_f), g.value(n.df)};
}

UpdatedNodes apply_updates(Graph& g, Graph::Node x_prev, Graph::Node f_prev, const BtcOutputNodes& out) {
  return UpdatedNodes{g.add(x_prev, g.mul(out.dx, out.gamma_x)), g.add(f_prev, g.mul(out.df, out.gamma_f))};
}

AnchorSet apply_updates(const AnchorSet& prev, const BtcOutputs& out) {
  if (out.dx.rows != prev.size() || out.df.rows != prev.size() || out.df.cols != prev.feature_dim())
    throw ShapeError("apply_updates: BTC outputs do not match the anchor set");
  Graph g;
  BtcOutputNodes n{g.constant(out.dx), g.constant(out.gamma_x), g.constant(out.gamma_f), g.constant(out.df)};
  const auto u = apply_updates(g, g.constant(prev.x), g.constant(prev.f), n);
  AnchorSet next = prev;
  next.x = g.value(u.x);
  next.f = g.value(u.f);
  return next;
}

SymbolCounts count_symbols(const BtcPair& pair) {
  SymbolCounts c;
  for (const BtcNet* net : {&pair.btc_x, &pair.btc_f})
    for (const auto& l : net->layers)
      for (double v : l.latent_w.value.values) (v >= 0.0 ? c.c_plus : c.c_minus)++;
  return c;
}

std::vector<bool> sign_bits(const BtcNet& net) {
  std::vector<bool> bits;
  for (const auto& l : net.layers)
    for (double v : l.latent_w.value.values) bits.push_back(v >= 0.0);
  return bits;
}

double hard_rate(const SymbolCounts& counts, double p_b) {
  if (!(p_b > 0.0 && p_b < 1.0)) throw ConfigError("Bernoulli probability must lie in (0, 1)");
  return static_cast<double>(counts.c_plus) * -std::log2(p_b) +
         static_cast<double>(counts.c_minus) * -std::log2(1.0 - p_b);
}

double soft_rate(BtcPair& pair, double p_b, double tau, double accumulate_weight) {
  if (!(p_b >= kRateProbClamp && p_b <= 1.0 - kRateProbClamp))
    throw ConfigError("soft_rate: p_b outside the clamp range");
  if (!(tau > 0.0)) throw ConfigError("soft_rate: temperature must be positive");
  const double bits_plus = -std::log2(p_b);
  const double bits_minus = -std::log2(1.0 - p_b);
  double total = 0.0;
  for (BtcNet* net : {&pair.btc_x, &pair.btc_f})
    for (auto& l : net->layers) {
      auto& w = l.latent_w;
      for (std::size_t i = 0; i < w.value.size(); ++i) {
        const double s = sigmoid(w.value[i] / tau);
        total += s * bits_plus + (1.0 - s) * bits_minus;
        if (accumulate_weight > 0.0) w.grad[i] += accumulate_weight * (bits_plus - bits_minus) * s * (1.0 - s) / tau;
      }
    }
  return total;
}

double empirical_p_plus(const SymbolCounts& counts) {
  if (counts.total() == 0) return 0.5;
  const double p = static_cast<double>(counts.c_plus) / static_cast<double>(counts.total());
  return std::clamp(p, kRateProbClamp, 1.0 - kRateProbClamp);
}

}  // namespace solar
