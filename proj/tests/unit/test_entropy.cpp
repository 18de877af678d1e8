#include <doctest.h>

#include <cmath>
#include <random>
#include <string>

#include "solar/btc.hpp"
#include "solar/entropy.hpp"
#include "solar/errors.hpp"

using namespace solar;

namespace {

std::vector<bool> random_bits(std::mt19937_64& rng, std::size_t n, double p) {
  std::bernoulli_distribution b(p);
  std::vector<bool> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = b(rng);
  return v;
}

double shannon_bits(const std::vector<bool>& bits, double p) {
  double acc = 0.0;
  for (bool b : bits) acc += b ? -std::log2(p) : -std::log2(1.0 - p);
  return acc;
}

}  // namespace

TEST_CASE("CRC-32 check value") {
  const std::string s = "123456789";
  CHECK(crc32(std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size())) == 0xCBF43926u);
  CHECK(crc32({}) == 0u);
}

TEST_CASE("probability quantisation") {
  CHECK(quantize_probability(0.5) == 32768);
  CHECK(quantize_probability(0.0) == 1);
  CHECK(quantize_probability(1.0) == 65535);
  CHECK(quantize_probability(0.25) == 16384);
  CHECK(quantize_probability(1e-9) == 1);
}

TEST_CASE("trivial streams") {
  CHECK(arith_decode(arith_encode({}, 32768), 0, 32768).empty());
  CHECK(arith_encode({}, 32768).size() <= 4);
  CHECK(arith_decode(arith_encode({true}, 20000), 1, 20000) == std::vector<bool>{true});
  const std::vector<bool> eight{true, false, false, true, true, true, false, true};
  const auto coded = arith_encode(eight, 32768);
  CHECK(coded.size() <= 5);
  CHECK(arith_decode(coded, 8, 32768) == eight);
}

TEST_CASE("exact round trip over many symbols and probabilities") {
  std::mt19937_64 rng(1);
  for (double p : {0.01, 0.2, 0.5, 0.8, 0.97}) {
    const auto bits = random_bits(rng, 100000, p);
    for (double model : {p, 0.5, 1.0 - p}) {
      const auto p16 = quantize_probability(model);
      CHECK(arith_decode(arith_encode(bits, p16), bits.size(), p16) == bits);
    }
  }
}

TEST_CASE("extreme probabilities round trip") {
  std::mt19937_64 rng(2);
  const auto bits = random_bits(rng, 5000, 0.5);
  for (std::uint16_t p16 : {std::uint16_t(1), std::uint16_t(65535)})
    CHECK(arith_decode(arith_encode(bits, p16), bits.size(), p16) == bits);
  std::vector<bool> ones(20000, true);
  const auto coded = arith_encode(ones, 65535);
  CHECK(coded.size() < 10);
  CHECK(arith_decode(coded, ones.size(), 65535) == ones);
}

TEST_CASE("coded length is within 1% of the Shannon bound") {
  std::mt19937_64 rng(3);
  const auto bits = random_bits(rng, 10000, 0.8);
  std::size_t plus = 0;
  for (bool b : bits) plus += b;
  const double p_hat = static_cast<double>(plus) / bits.size();
  const double shannon = plus * -std::log2(0.8) + (bits.size() - plus) * -std::log2(0.2);
  const double coded = 8.0 * arith_encode(bits, quantize_probability(0.8)).size();
  CHECK(std::abs(coded - shannon) / shannon < 0.01);
  const auto p16 = quantize_probability(p_hat);
  const double at_hat = 8.0 * arith_encode(bits, p16).size();
  CHECK(std::abs(at_hat - shannon_bits(bits, p16 / 65536.0)) / at_hat < 0.01);
}

TEST_CASE("coded length never exceeds the hard rate plus 64 bits") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> up(0.02, 0.98);
  std::uniform_int_distribution<std::size_t> un(1, 5000);
  for (int trial = 0; trial < 100; ++trial) {
    const auto bits = random_bits(rng, un(rng), up(rng));
    SymbolCounts c;
    for (bool b : bits) (b ? c.c_plus : c.c_minus)++;
    const auto p16 = quantize_probability(empirical_p_plus(c));
    const double coded = 8.0 * arith_encode(bits, p16).size();
    const double hard = hard_rate(c, p16 / 65536.0);
    CHECK(coded >= hard - 1e-9);
    CHECK(coded <= hard + 64.0);
  }
}

TEST_CASE("decoding past the end of the input is an error") {
  std::mt19937_64 rng(5);
  const auto bits = random_bits(rng, 4000, 0.5);
  auto coded = arith_encode(bits, 32768);
  coded.resize(coded.size() / 2);
  CHECK_THROWS_AS(arith_decode(coded, bits.size(), 32768), FormatError);
}

TEST_CASE("adaptive integer coder round trip and adaptation") {
  std::mt19937_64 rng(6);
  for (int bits : {1, 5, 12, 16}) {
    std::vector<std::uint32_t> values(3000);
    std::uniform_int_distribution<std::uint32_t> u(0, (1u << bits) - 1);
    for (auto& v : values) v = u(rng);
    RangeEncoder enc;
    AdaptiveIntCoder ce(bits);
    for (auto v : values) ce.encode(enc, v);
    const auto coded = enc.finish();
    RangeDecoder dec(coded);
    AdaptiveIntCoder cd(bits);
    for (auto v : values) CHECK(cd.decode(dec) == v);
  }
  RangeEncoder enc;
  AdaptiveIntCoder c(12);
  for (int i = 0; i < 5000; ++i) c.encode(enc, 1234);
  CHECK(enc.finish().size() < 5000 * 12 / 8 / 20);
}

TEST_CASE("adaptive bit moves toward observed symbols") {
  AdaptiveBit b;
  b.update(true);
  CHECK(b.p16 > 32768);
  for (int i = 0; i < 1000; ++i) b.update(true);
  CHECK(b.p16 < 65536);
  CHECK(b.p16 > 60000);
  for (int i = 0; i < 1000; ++i) b.update(false);
  CHECK(b.p16 >= 1);
  CHECK(b.p16 < 5000);
}
