#pragma once

// Binary range coder with 32-bit range, 64-bit low and carry propagation.
// Probabilities are 16-bit fixed point: p16 / 65536 is P(bit == 1).

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace solar {

class RangeEncoder {
 public:
  void encode(bool bit, std::uint32_t p16);
  /// Flushes and returns the coded bytes; the encoder is reset afterwards.
  std::vector<std::uint8_t> finish();

 private:
  void shift_low();

  std::uint64_t low_ = 0;
  std::uint32_t range_ = 0xFFFFFFFFu;
  std::uint8_t cache_ = 0;
  bool has_cache_ = false;
  std::uint64_t pending_ff_ = 0;
  std::vector<std::uint8_t> out_;
};

class RangeDecoder {
 public:
  explicit RangeDecoder(std::span<const std::uint8_t> bytes);
  /// Throws FormatError if decoding needs bytes past the end of the input.
  bool decode(std::uint32_t p16);

 private:
  std::uint8_t next();

  static constexpr std::size_t kMaxPadding = 4;
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
  std::uint32_t code_ = 0;
  std::uint32_t range_ = 0xFFFFFFFFu;
};

/// Adaptive probability with exponential-decay update (shift 5).
struct AdaptiveBit {
  std::uint32_t p16 = 32768;
  void update(bool bit);
};

/// Codes `bits`-bit unsigned integers MSB first through a binary context tree.
class AdaptiveIntCoder {
 public:
  explicit AdaptiveIntCoder(int bits);
  void encode(RangeEncoder& enc, std::uint32_t value);
  std::uint32_t decode(RangeDecoder& dec);

 private:
  int bits_;
  std::vector<AdaptiveBit> tree_;
};

/// Static Bernoulli model: `bits[i]` true means symbol +1.
std::vector<std::uint8_t> arith_encode(const std::vector<bool>& bits, std::uint16_t p16);
std::vector<bool> arith_decode(std::span<const std::uint8_t> bytes, std::size_t count, std::uint16_t p16);

/// round(65536 * p) clamped to [1, 65535].
std::uint16_t quantize_probability(double p);

/// IEEE CRC-32.
std::uint32_t crc32(std::span<const std::uint8_t> bytes);

}  // namespace solar
