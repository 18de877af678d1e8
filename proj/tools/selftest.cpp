#include "selftest.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "solar/codec.hpp"
#include "solar/entropy.hpp"
#include "solar/gradcheck.hpp"
#include "solar/mlp.hpp"

using namespace solar;

namespace {

bool arith_round_trip() {
  std::mt19937_64 rng(7);
  for (double p : {0.03, 0.3, 0.5, 0.91}) {
    std::vector<bool> bits(3001);
    std::bernoulli_distribution d(p);
    for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = d(rng);
    const auto q = quantize_probability(p);
    if (arith_decode(arith_encode(bits, q), bits.size(), q) != bits) return false;
  }
  return true;
}

bool iframe_round_trip() {
  std::mt19937_64 rng(11);
  const ModelShape shape;
  const std::size_t n = 40;
  AnchorSet a{Tensor(n, 3), Tensor(n, shape.feature_dim), Tensor(n, 3)};
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (double& v : a.x.values) v = u(rng);
  for (double& v : a.f.values) v = 0.3 * u(rng);
  for (double& v : a.l.values) v = 0.2 + 0.1 * u(rng);
  GaussianAttributeNet ng(shape.ng_config(), rng);
  MaskNet nm(shape.nm_config(), rng);
  const DecodedState s = decode_iframe(encode_iframe(a, ng, nm, 0), shape);
  auto within = [](const Tensor& ref, const Tensor& got, int bits) {
    double lo = ref.values[0], hi = lo;
    for (double v : ref.values) lo = std::min(lo, v), hi = std::max(hi, v);
    const double half = 0.5 * (hi - lo) / static_cast<double>((1u << bits) - 1u) * (1.0 + 1e-9);
    for (std::size_t i = 0; i < ref.size(); ++i)
      if (std::abs(ref[i] - got[i]) > half + 1e-15) return false;
    return true;
  };
  Mlp ref = ng.mlp();
  round_to_float(ref);
  return within(a.f, s.anchors.f, kFeatureBits) && within(a.l, s.anchors.l, kFeatureBits) &&
         s.ng.mlp().flatten() == ref.flatten() && s.frame == 0;
}

bool pframe_round_trip() {
  std::mt19937_64 rng(13);
  const ModelShape shape;
  MaskNet nm(shape.nm_config(), rng);
  GaussianAttributeNet ng(shape.ng_config(), rng);
  const BtcPair pair = BtcPair::init(shape.btc_config(), 5);
  const PFramePayload p = make_pframe_payload(pair, nm, &ng);
  const FrameRecord rec = encode_pframe(p, 3);
  const PFramePayload q = decode_pframe(rec, shape);
  if (q.p16 != p.p16 || q.nm != p.nm || q.ng != p.ng) return false;
  return sign_bits(q.btc.btc_x) == sign_bits(pair.btc_x) && sign_bits(q.btc.btc_f) == sign_bits(pair.btc_f);
}

}  // namespace

bool run_selftest(std::ostream& out) {
  bool all = true;
  auto line = [&](const std::string& name, bool ok, const std::string& detail = {}) {
    out << (ok ? "PASS " : "FAIL ") << name;
    if (!detail.empty()) out << "  " << detail;
    out << '\n';
    all = all && ok;
  };
  const std::pair<const char*, std::function<GradCheckStats(std::uint64_t)>> suites[] = {
      {"grad/render", check_render_gradients},   {"grad/attribute_net", check_attribute_net_gradients},
      {"grad/mask_net", check_mask_net_gradients}, {"grad/btc", check_btc_gradients},
      {"grad/losses", check_loss_gradients},
  };
  for (const auto& [name, fn] : suites) {
    GradCheckStats st;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) st.merge(fn(seed));
    char buf[96];
    std::snprintf(buf, sizeof buf, "%zu coords, %zu failed, max |g| %.3g, worst rel %.3g", st.checked, st.failed,
                  st.max_grad, st.worst_rel);
    line(name, st.ok(), std::string(buf) + (st.failed ? " at " + st.worst : ""));
  }
  line("codec/arith_round_trip", arith_round_trip());
  line("codec/iframe_round_trip", iframe_round_trip());
  line("codec/pframe_round_trip", pframe_round_trip());
  return all;
}
