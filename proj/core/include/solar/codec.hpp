#pragma once

// .solar bitstream: header, per-frame records and the decoder that rebuilds
// frame states. Layout is documented in docs/bitstream.md.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "solar/anchor_model.hpp"
#include "solar/btc.hpp"
#include "solar/render.hpp"

namespace solar {

inline constexpr std::uint16_t kFormatVersion = 1;
inline constexpr int kPositionBits = 16;
inline constexpr int kFeatureBits = 12;

/// Network architecture shared by encoder and decoder.
struct ModelShape {
  std::size_t feature_dim = 16;
  std::size_t gaussians_per_anchor = 5;
  std::size_t ng_hidden = 64;
  std::size_t nm_hidden = 16;
  std::size_t btc_hidden = 48;
  double scale_base = 0.05;
  double gamma_max = 1.0;

  AttributeNetConfig ng_config() const;
  MaskNetConfig nm_config() const;
  BtcConfig btc_config() const;
  bool operator==(const ModelShape&) const = default;
};

/// Global configuration block; everything a decoder needs besides the frames.
struct StreamHeader {
  std::uint16_t version = kFormatVersion;
  ModelShape shape;
  double eps_m = 0.01;
  double eps_d = 0.002;
  double lambda_ssim = 0.2;
  double lambda_e = 0.004;
  double lambda_s = 0.01;
  bool enable_aad = true;
  bool enable_ladar = true;
  std::uint32_t gop_size = 0;
  std::uint64_t seed = 0;
  Eigen::Vector3d scene_center = Eigen::Vector3d::Zero();
  Eigen::Vector3d background = Eigen::Vector3d::Zero();
  std::vector<Camera> cameras;   // training cameras
  std::optional<Camera> heldout;
};

enum class FrameKind : std::uint8_t { I = 'I', P = 'P' };

struct FrameRecord {
  std::uint32_t frame_index = 0;
  FrameKind kind = FrameKind::I;
  std::vector<std::uint8_t> payload;
  bool operator==(const FrameRecord&) const = default;
};

/// Record framing: u32 index, u8 kind, u32 payload length, u32 CRC, payload.
inline constexpr std::size_t kRecordHeaderBytes = 13;

struct Bitstream {
  StreamHeader header;
  std::vector<FrameRecord> frames;
};

/// What the decoder (and the closed-loop encoder) carries between frames.
struct DecodedState {
  AnchorSet anchors;
  GaussianAttributeNet ng;
  MaskNet nm;
  std::int64_t frame = -1;
  bool recalibrated = false;  // this frame carried an N_G section
};

/// Transmitted form of a P-frame. `btc` latents are exactly +-1 and biases,
/// scales and network values are rounded to float32.
struct PFramePayload {
  std::uint16_t p16 = 32768;
  BtcPair btc;
  std::vector<double> nm;
  std::optional<std::vector<double>> ng;
};

/// Section sizes of a P-frame payload, in bytes.
struct PFrameLayout {
  std::uint16_t p16 = 0;
  bool has_ng = false;
  std::uint32_t signs_x = 0, signs_f = 0;  // symbol counts
  std::uint32_t len_x = 0, len_f = 0, len_raw_btc = 0, len_nm = 0, len_ng = 0;
};

std::vector<std::uint8_t> serialize_header(const StreamHeader& h);
/// Parses magic, version and the config block; returns bytes consumed.
StreamHeader parse_header(std::span<const std::uint8_t> bytes, std::size_t* consumed = nullptr);

std::vector<std::uint8_t> serialize_record(const FrameRecord& r);

std::vector<std::uint8_t> serialize(const Bitstream& bs);
Bitstream parse_bitstream(std::span<const std::uint8_t> bytes);
void write_bitstream(const std::filesystem::path& path, const Bitstream& bs);
Bitstream read_bitstream(const std::filesystem::path& path);

/// Incremental parser: frame t needs only the prefix through frame t.
class BitstreamReader {
 public:
  explicit BitstreamReader(std::span<const std::uint8_t> bytes);
  const StreamHeader& header() const { return header_; }
  /// Next record, or nullopt at the end. Throws FormatError / CrcError naming
  /// the frame on truncation or corruption.
  std::optional<FrameRecord> next();

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
  std::uint32_t expected_ = 0;
  StreamHeader header_;
};

FrameRecord encode_iframe(const AnchorSet& anchors, const GaussianAttributeNet& ng, const MaskNet& nm,
                          std::uint32_t frame_index);
DecodedState decode_iframe(const FrameRecord& record, const ModelShape& shape);

PFramePayload make_pframe_payload(const BtcPair& trained, const MaskNet& nm, const GaussianAttributeNet* recal_ng);
FrameRecord encode_pframe(const PFramePayload& payload, std::uint32_t frame_index);
PFramePayload decode_pframe(const FrameRecord& record, const ModelShape& shape);
PFrameLayout pframe_layout(const FrameRecord& record);

/// Runs the transmitted BTC on the previous anchors and installs the networks.
DecodedState apply_pframe(const DecodedState& prev, const PFramePayload& payload, const ModelShape& shape);

/// Decodes one record on top of `prev`. Frames must arrive in index order and
/// the first must be an I-frame.
DecodedState decode_frame(const FrameRecord& record, const DecodedState& prev, const ModelShape& shape);

/// Total bytes the record occupies in the stream, framing included.
std::size_t measure_rate(const FrameRecord& record);
/// Coded sign bits plus the 16-bit probability, minus the hard rate at p16.
double estimate_gap(const FrameRecord& record, const SymbolCounts& counts);

/// Uniform quantizer used for I-frame attributes.
struct Quantizer {
  double min = 0.0;
  double max = 0.0;
  int bits = 16;

  std::uint32_t levels() const { return (1u << bits) - 1u; }
  double step() const { return (max - min) / static_cast<double>(levels()); }
  std::uint32_t quantize(double v) const;
  double reconstruct(std::uint32_t q) const;
};

}  // namespace solar
