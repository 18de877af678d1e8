#include "solar/entropy.hpp"

#include <algorithm>
#include <cmath>

#include <zlib.h>

#include "solar/errors.hpp"

namespace solar {

namespace {
constexpr std::uint32_t kTop = 1u << 24;
}

void RangeEncoder::encode(bool bit, std::uint32_t p16) {
  const auto bound = static_cast<std::uint32_t>((static_cast<std::uint64_t>(range_) * p16) >> 16);
  if (bit) {
    range_ = bound;
  } else {
    low_ += bound;
    range_ -= bound;
  }
  while (range_ < kTop) {
    range_ <<= 8;
    shift_low();
  }
}

void RangeEncoder::shift_low() {
  if (static_cast<std::uint32_t>(low_) < 0xFF000000u || (low_ >> 32) != 0) {
    const auto carry = static_cast<std::uint8_t>(low_ >> 32);
    // The byte above the initial window is always zero and is not emitted.
    if (has_cache_) out_.push_back(static_cast<std::uint8_t>(cache_ + carry));
    for (; pending_ff_ > 0; --pending_ff_) out_.push_back(static_cast<std::uint8_t>(0xFF + carry));
    cache_ = static_cast<std::uint8_t>(low_ >> 24);
    has_cache_ = true;
  } else {
    ++pending_ff_;
  }
  low_ = (low_ & 0x00FFFFFFu) << 8;
}

std::vector<std::uint8_t> RangeEncoder::finish() {
  // Any value in [low, low + range) identifies the message; range >= 2^24, so
  // rounding low up to a multiple of 2^24 leaves a single significant byte.
  low_ = (low_ + 0x00FFFFFFu) & ~std::uint64_t{0x00FFFFFFu};
  shift_low();
  shift_low();
  std::vector<std::uint8_t> out = std::move(out_);
  *this = RangeEncoder();
  return out;
}

RangeDecoder::RangeDecoder(std::span<const std::uint8_t> bytes) : in_(bytes) {
  for (int i = 0; i < 4; ++i) code_ = (code_ << 8) | next();
}

std::uint8_t RangeDecoder::next() {
  if (pos_ < in_.size()) return in_[pos_++];
  // The encoder drops the all-zero tail of its final value.
  if (++pos_ > in_.size() + kMaxPadding) throw FormatError("truncated arithmetic-coded section");
  return 0;
}

bool RangeDecoder::decode(std::uint32_t p16) {
  const auto bound = static_cast<std::uint32_t>((static_cast<std::uint64_t>(range_) * p16) >> 16);
  bool bit;
  if (code_ < bound) {
    range_ = bound;
    bit = true;
  } else {
    code_ -= bound;
    range_ -= bound;
    bit = false;
  }
  while (range_ < kTop) {
    range_ <<= 8;
    code_ = (code_ << 8) | next();
  }
  return bit;
}

void AdaptiveBit::update(bool bit) {
  if (bit)
    p16 += (65536u - p16) >> 5;
  else
    p16 -= p16 >> 5;
  p16 = std::clamp<std::uint32_t>(p16, 64u, 65536u - 64u);
}

AdaptiveIntCoder::AdaptiveIntCoder(int bits) : bits_(bits), tree_(std::size_t{1} << bits) {
  if (bits < 1 || bits > 24) throw ConfigError("adaptive integer coder supports 1..24 bits");
}

void AdaptiveIntCoder::encode(RangeEncoder& enc, std::uint32_t value) {
  std::size_t node = 1;
  for (int b = bits_ - 1; b >= 0; --b) {
    const bool bit = ((value >> b) & 1u) != 0;
    enc.encode(bit, tree_[node].p16);
    tree_[node].update(bit);
    node = node * 2 + (bit ? 1 : 0);
  }
}

std::uint32_t AdaptiveIntCoder::decode(RangeDecoder& dec) {
  std::size_t node = 1;
  std::uint32_t value = 0;
  for (int b = bits_ - 1; b >= 0; --b) {
    const bool bit = dec.decode(tree_[node].p16);
    tree_[node].update(bit);
    value = (value << 1) | (bit ? 1u : 0u);
    node = node * 2 + (bit ? 1 : 0);
  }
  return value;
}

std::vector<std::uint8_t> arith_encode(const std::vector<bool>& bits, std::uint16_t p16) {
  if (p16 == 0) throw ConfigError("Bernoulli model probability must be in [1, 65535]");
  RangeEncoder enc;
  for (bool b : bits) enc.encode(b, p16);
  return enc.finish();
}

std::vector<bool> arith_decode(std::span<const std::uint8_t> bytes, std::size_t count, std::uint16_t p16) {
  if (p16 == 0) throw ConfigError("Bernoulli model probability must be in [1, 65535]");
  RangeDecoder dec(bytes);
  std::vector<bool> out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = dec.decode(p16);
  return out;
}

std::uint16_t quantize_probability(double p) {
  const double q = std::round(p * 65536.0);
  return static_cast<std::uint16_t>(std::clamp(q, 1.0, 65535.0));
}

std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
  return static_cast<std::uint32_t>(::crc32(0L, bytes.data(), static_cast<uInt>(bytes.size())));
}

}  // namespace solar
