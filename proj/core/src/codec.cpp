#include "solar/codec.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>

#include "solar/bytes.hpp"
#include "solar/entropy.hpp"
#include "solar/errors.hpp"

namespace solar {

namespace {

constexpr char kMagic[4] = {'S', 'O', 'L', 'R'};
constexpr std::uint8_t kFlagRecal = 1;
constexpr std::uint32_t kMaxCount = 1u << 28;

std::string frame_tag(std::uint32_t i) { return "frame " + std::to_string(i); }

void write_camera(ByteWriter& w, const Camera& c) {
  w.f64(c.fx);
  w.f64(c.fy);
  w.f64(c.cx);
  w.f64(c.cy);
  for (int r = 0; r < 3; ++r)
    for (int k = 0; k < 3; ++k) w.f64(c.rotation(r, k));
  for (int k = 0; k < 3; ++k) w.f64(c.translation[k]);
  w.u32(static_cast<std::uint32_t>(c.width));
  w.u32(static_cast<std::uint32_t>(c.height));
}

Camera read_camera(ByteReader& r) {
  Camera c;
  c.fx = r.f64();
  c.fy = r.f64();
  c.cx = r.f64();
  c.cy = r.f64();
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) c.rotation(i, k) = r.f64();
  for (int k = 0; k < 3; ++k) c.translation[k] = r.f64();
  c.width = static_cast<int>(r.u32());
  c.height = static_cast<int>(r.u32());
  return c;
}

void write_floats(ByteWriter& w, std::span<const double> v) {
  for (double x : v) w.f32(static_cast<float>(x));
}

std::vector<double> read_floats(ByteReader& r, std::size_t n) {
  std::vector<double> out(n);
  for (auto& v : out) v = static_cast<double>(r.f32());
  return out;
}

std::vector<double> rounded(std::vector<double> v) {
  round_to_float(v);
  return v;
}

std::uint32_t checked_count(std::uint32_t n, const char* what) {
  if (n > kMaxCount) throw FormatError(std::string("implausible ") + what + " count");
  return n;
}

}  // namespace

AttributeNetConfig ModelShape::ng_config() const {
  return AttributeNetConfig{feature_dim, ng_hidden, gaussians_per_anchor, scale_base};
}

MaskNetConfig ModelShape::nm_config() const { return MaskNetConfig{feature_dim, nm_hidden}; }

BtcConfig ModelShape::btc_config() const {
  BtcConfig c;
  c.feature_dim = feature_dim;
  c.hidden = btc_hidden;
  c.gamma_max = gamma_max;
  return c;
}

std::uint32_t Quantizer::quantize(double v) const {
  if (!(max > min)) return 0;
  const double q = std::round((v - min) / step());
  return static_cast<std::uint32_t>(std::clamp(q, 0.0, static_cast<double>(levels())));
}

double Quantizer::reconstruct(std::uint32_t q) const {
  if (!(max > min)) return min;
  return min + static_cast<double>(q) * step();
}

// ---------------------------------------------------------------- header

std::vector<std::uint8_t> serialize_header(const StreamHeader& h) {
  ByteWriter cfg;
  const ModelShape& s = h.shape;
  cfg.u32(static_cast<std::uint32_t>(s.feature_dim));
  cfg.u32(static_cast<std::uint32_t>(s.gaussians_per_anchor));
  cfg.u32(static_cast<std::uint32_t>(s.ng_hidden));
  cfg.u32(static_cast<std::uint32_t>(s.nm_hidden));
  cfg.u32(static_cast<std::uint32_t>(s.btc_hidden));
  cfg.f64(s.scale_base);
  cfg.f64(s.gamma_max);
  cfg.f64(h.eps_m);
  cfg.f64(h.eps_d);
  cfg.f64(h.lambda_ssim);
  cfg.f64(h.lambda_e);
  cfg.f64(h.lambda_s);
  cfg.u8(h.enable_aad ? 1 : 0);
  cfg.u8(h.enable_ladar ? 1 : 0);
  cfg.u32(h.gop_size);
  cfg.u64(h.seed);
  for (int k = 0; k < 3; ++k) cfg.f64(h.scene_center[k]);
  for (int k = 0; k < 3; ++k) cfg.f64(h.background[k]);
  cfg.u32(static_cast<std::uint32_t>(h.cameras.size()));
  for (const auto& c : h.cameras) write_camera(cfg, c);
  cfg.u8(h.heldout ? 1 : 0);
  if (h.heldout) write_camera(cfg, *h.heldout);

  ByteWriter w;
  for (char c : kMagic) w.u8(static_cast<std::uint8_t>(c));
  w.u16(h.version);
  w.u32(static_cast<std::uint32_t>(cfg.size()));
  w.bytes(cfg.data());
  return w.take();
}

StreamHeader parse_header(std::span<const std::uint8_t> bytes, std::size_t* consumed) {
  ByteReader r(bytes, "stream header");
  if (bytes.empty()) throw FormatError("empty bitstream");
  const auto magic = r.bytes(4);
  if (!std::equal(magic.begin(), magic.end(), kMagic)) throw FormatError("not a .solar bitstream (bad magic)");
  StreamHeader h;
  h.version = r.u16();
  if (h.version != kFormatVersion)
    throw FormatError("unsupported bitstream version " + std::to_string(h.version) + " (expected " +
                      std::to_string(kFormatVersion) + ")");
  const std::uint32_t len = r.u32();
  ByteReader c(r.bytes(len), "config block");
  ModelShape& s = h.shape;
  s.feature_dim = c.u32();
  s.gaussians_per_anchor = c.u32();
  s.ng_hidden = c.u32();
  s.nm_hidden = c.u32();
  s.btc_hidden = c.u32();
  s.scale_base = c.f64();
  s.gamma_max = c.f64();
  h.eps_m = c.f64();
  h.eps_d = c.f64();
  h.lambda_ssim = c.f64();
  h.lambda_e = c.f64();
  h.lambda_s = c.f64();
  h.enable_aad = c.u8() != 0;
  h.enable_ladar = c.u8() != 0;
  h.gop_size = c.u32();
  h.seed = c.u64();
  for (int k = 0; k < 3; ++k) h.scene_center[k] = c.f64();
  for (int k = 0; k < 3; ++k) h.background[k] = c.f64();
  const std::uint32_t ncam = checked_count(c.u32(), "camera");
  for (std::uint32_t i = 0; i < ncam; ++i) h.cameras.push_back(read_camera(c));
  if (c.u8() != 0) h.heldout = read_camera(c);
  if (!c.done()) throw FormatError("config block has trailing bytes");
  if (s.feature_dim == 0 || s.gaussians_per_anchor == 0 || s.ng_hidden == 0 || s.nm_hidden == 0 ||
      s.btc_hidden == 0 || s.feature_dim > 4096 || s.gaussians_per_anchor > 256 || s.ng_hidden > 4096 ||
      s.nm_hidden > 4096 || s.btc_hidden > 4096)
    throw FormatError("config block describes an invalid model shape");
  if (consumed) *consumed = r.position();
  return h;
}

// ---------------------------------------------------------------- records

std::vector<std::uint8_t> serialize_record(const FrameRecord& rec) {
  ByteWriter w;
  w.u32(rec.frame_index);
  w.u8(static_cast<std::uint8_t>(rec.kind));
  w.u32(static_cast<std::uint32_t>(rec.payload.size()));
  w.u32(crc32(rec.payload));
  w.bytes(rec.payload);
  return w.take();
}

std::vector<std::uint8_t> serialize(const Bitstream& bs) {
  auto out = serialize_header(bs.header);
  for (const auto& f : bs.frames) {
    const auto r = serialize_record(f);
    out.insert(out.end(), r.begin(), r.end());
  }
  return out;
}

BitstreamReader::BitstreamReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {
  header_ = parse_header(bytes, &pos_);
}

std::optional<FrameRecord> BitstreamReader::next() {
  if (pos_ == bytes_.size()) return std::nullopt;
  const std::uint32_t idx = expected_;
  ByteReader r(bytes_.subspan(pos_), frame_tag(idx) + " record");
  FrameRecord rec;
  rec.frame_index = r.u32();
  if (rec.frame_index != idx)
    throw FormatError("out-of-order frame: expected " + std::to_string(idx) + ", found " +
                      std::to_string(rec.frame_index));
  const std::uint8_t kind = r.u8();
  if (kind != static_cast<std::uint8_t>(FrameKind::I) && kind != static_cast<std::uint8_t>(FrameKind::P))
    throw FormatError(frame_tag(idx) + ": unknown frame kind");
  rec.kind = static_cast<FrameKind>(kind);
  const std::uint32_t len = r.u32();
  const std::uint32_t crc = r.u32();
  const auto payload = r.bytes(len);
  if (crc32(payload) != crc) throw CrcError(frame_tag(idx) + ": CRC mismatch");
  rec.payload.assign(payload.begin(), payload.end());
  pos_ += r.position();
  ++expected_;
  return rec;
}

Bitstream parse_bitstream(std::span<const std::uint8_t> bytes) {
  BitstreamReader reader(bytes);
  Bitstream bs;
  bs.header = reader.header();
  while (auto rec = reader.next()) bs.frames.push_back(std::move(*rec));
  return bs;
}

void write_bitstream(const std::filesystem::path& path, const Bitstream& bs) {
  const auto bytes = serialize(bs);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

Bitstream read_bitstream(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_bitstream(bytes);
}

// ---------------------------------------------------------------- I-frame

FrameRecord encode_iframe(const AnchorSet& anchors, const GaussianAttributeNet& ng, const MaskNet& nm,
                          std::uint32_t frame_index) {
  anchors.validate();
  const std::size_t n = anchors.size(), d = anchors.feature_dim();
  const auto& ngc = ng.config();
  ByteWriter w;
  w.u32(static_cast<std::uint32_t>(n));
  w.u32(static_cast<std::uint32_t>(d));
  w.u32(static_cast<std::uint32_t>(ngc.gaussians_per_anchor));
  w.u32(static_cast<std::uint32_t>(ngc.hidden));
  w.u32(static_cast<std::uint32_t>(nm.config().hidden));

  auto range_of = [](const Tensor& t, std::size_t col, std::size_t stride) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t i = col; i < t.size(); i += stride) {
      lo = std::min(lo, t[i]);
      hi = std::max(hi, t[i]);
    }
    if (t.size() == 0) lo = hi = 0.0;
    return std::pair{lo, hi};
  };

  Quantizer qx[3];
  for (int a = 0; a < 3; ++a) {
    const auto [lo, hi] = range_of(anchors.x, a, 3);
    qx[a] = Quantizer{lo, hi, kPositionBits};
    w.f64(lo);
    w.f64(hi);
  }
  const auto [flo, fhi] = range_of(anchors.f, 0, 1);
  const Quantizer qf{flo, fhi, kFeatureBits};
  w.f64(flo);
  w.f64(fhi);
  const auto [llo, lhi] = range_of(anchors.l, 0, 1);
  const Quantizer ql{llo, lhi, kFeatureBits};
  w.f64(llo);
  w.f64(lhi);

  RangeEncoder enc;
  AdaptiveIntCoder cx[3] = {AdaptiveIntCoder(kPositionBits), AdaptiveIntCoder(kPositionBits),
                            AdaptiveIntCoder(kPositionBits)};
  AdaptiveIntCoder cf(kFeatureBits), cl(kFeatureBits);
  for (std::size_t i = 0; i < n; ++i)
    for (int a = 0; a < 3; ++a) cx[a].encode(enc, qx[a].quantize(anchors.x(i, a)));
  for (double v : anchors.f.values) cf.encode(enc, qf.quantize(v));
  for (double v : anchors.l.values) cl.encode(enc, ql.quantize(v));
  const auto coded = enc.finish();
  w.u32(static_cast<std::uint32_t>(coded.size()));
  w.bytes(coded);

  const auto ngv = ng.mlp().flatten();
  const auto nmv = nm.mlp().flatten();
  w.u32(static_cast<std::uint32_t>(ngv.size()));
  write_floats(w, ngv);
  w.u32(static_cast<std::uint32_t>(nmv.size()));
  write_floats(w, nmv);
  return FrameRecord{frame_index, FrameKind::I, w.take()};
}

DecodedState decode_iframe(const FrameRecord& record, const ModelShape& shape) {
  if (record.kind != FrameKind::I) throw FormatError(frame_tag(record.frame_index) + " is not an I-frame");
  ByteReader r(record.payload, frame_tag(record.frame_index) + " I-frame payload");
  const std::uint32_t n = checked_count(r.u32(), "anchor");
  const std::uint32_t d = r.u32();
  const std::uint32_t k = r.u32(), hg = r.u32(), hm = r.u32();
  if (d != shape.feature_dim || k != shape.gaussians_per_anchor || hg != shape.ng_hidden || hm != shape.nm_hidden)
    throw FormatError(frame_tag(record.frame_index) + ": I-frame config echo disagrees with the stream header");
  if (n == 0) throw FormatError(frame_tag(record.frame_index) + ": I-frame has no anchors");

  Quantizer qx[3];
  for (auto& q : qx) {
    const double lo = r.f64(), hi = r.f64();
    q = Quantizer{lo, hi, kPositionBits};
  }
  const double flo = r.f64(), fhi = r.f64();
  const double llo = r.f64(), lhi = r.f64();
  const Quantizer qf{flo, fhi, kFeatureBits}, ql{llo, lhi, kFeatureBits};

  const std::uint32_t clen = r.u32();
  RangeDecoder dec(r.bytes(clen));
  AdaptiveIntCoder cx[3] = {AdaptiveIntCoder(kPositionBits), AdaptiveIntCoder(kPositionBits),
                            AdaptiveIntCoder(kPositionBits)};
  AdaptiveIntCoder cf(kFeatureBits), cl(kFeatureBits);
  DecodedState st;
  st.anchors.x = Tensor(n, 3);
  st.anchors.f = Tensor(n, d);
  st.anchors.l = Tensor(n, 3);
  for (std::size_t i = 0; i < n; ++i)
    for (int a = 0; a < 3; ++a) st.anchors.x(i, a) = qx[a].reconstruct(cx[a].decode(dec));
  for (double& v : st.anchors.f.values) v = qf.reconstruct(cf.decode(dec));
  for (double& v : st.anchors.l.values) v = ql.reconstruct(cl.decode(dec));

  std::mt19937_64 rng(0);
  st.ng = GaussianAttributeNet(shape.ng_config(), rng);
  st.nm = MaskNet(shape.nm_config(), rng);
  const std::uint32_t ngn = r.u32();
  if (ngn != st.ng.mlp().parameter_count()) throw FormatError(frame_tag(record.frame_index) + ": N_G size mismatch");
  st.ng.mlp().assign(read_floats(r, ngn));
  const std::uint32_t nmn = r.u32();
  if (nmn != st.nm.mlp().parameter_count()) throw FormatError(frame_tag(record.frame_index) + ": N_m size mismatch");
  st.nm.mlp().assign(read_floats(r, nmn));
  if (!r.done()) throw FormatError(frame_tag(record.frame_index) + ": I-frame payload has trailing bytes");
  st.anchors.validate();
  st.frame = record.frame_index;
  st.recalibrated = false;
  return st;
}

// ---------------------------------------------------------------- P-frame

PFramePayload make_pframe_payload(const BtcPair& trained, const MaskNet& nm, const GaussianAttributeNet* recal_ng) {
  PFramePayload p;
  p.p16 = quantize_probability(empirical_p_plus(count_symbols(trained)));
  p.btc = trained;
  for (BtcNet* net : {&p.btc.btc_x, &p.btc.btc_f})
    for (auto& l : net->layers) {
      for (double& v : l.latent_w.value.values) v = v >= 0.0 ? 1.0 : -1.0;
      round_to_float(l.bias.value.values);
      round_to_float(l.scale.value.values);
      for (Param* q : l.params()) q->reset_optimizer();
    }
  p.nm = rounded(nm.mlp().flatten());
  if (recal_ng) p.ng = rounded(recal_ng->mlp().flatten());
  return p;
}

FrameRecord encode_pframe(const PFramePayload& payload, std::uint32_t frame_index) {
  const auto bits_x = sign_bits(payload.btc.btc_x);
  const auto bits_f = sign_bits(payload.btc.btc_f);
  const auto coded_x = arith_encode(bits_x, payload.p16);
  const auto coded_f = arith_encode(bits_f, payload.p16);

  ByteWriter raw;
  for (const BtcNet* net : {&payload.btc.btc_x, &payload.btc.btc_f})
    for (const auto& l : net->layers) {
      write_floats(raw, l.bias.value.values);
      raw.f32(static_cast<float>(l.scale.value[0]));
    }
  ByteWriter nmw;
  write_floats(nmw, payload.nm);
  ByteWriter ngw;
  if (payload.ng) write_floats(ngw, *payload.ng);

  ByteWriter w;
  w.u16(payload.p16);
  w.u8(payload.ng ? kFlagRecal : 0);
  w.u32(static_cast<std::uint32_t>(bits_x.size()));
  w.u32(static_cast<std::uint32_t>(bits_f.size()));
  w.u32(static_cast<std::uint32_t>(coded_x.size()));
  w.u32(static_cast<std::uint32_t>(coded_f.size()));
  w.u32(static_cast<std::uint32_t>(raw.size()));
  w.u32(static_cast<std::uint32_t>(nmw.size()));
  w.u32(static_cast<std::uint32_t>(ngw.size()));
  w.bytes(coded_x);
  w.bytes(coded_f);
  w.bytes(raw.data());
  w.bytes(nmw.data());
  w.bytes(ngw.data());
  return FrameRecord{frame_index, FrameKind::P, w.take()};
}

namespace {

PFrameLayout read_layout(ByteReader& r, std::uint32_t idx) {
  PFrameLayout L;
  L.p16 = r.u16();
  const std::uint8_t flags = r.u8();
  if (flags & ~kFlagRecal) throw FormatError(frame_tag(idx) + ": unknown P-frame flags");
  L.has_ng = (flags & kFlagRecal) != 0;
  L.signs_x = checked_count(r.u32(), "sign");
  L.signs_f = checked_count(r.u32(), "sign");
  L.len_x = r.u32();
  L.len_f = r.u32();
  L.len_raw_btc = r.u32();
  L.len_nm = r.u32();
  L.len_ng = r.u32();
  if (L.p16 == 0) throw FormatError(frame_tag(idx) + ": zero symbol probability");
  if (L.has_ng != (L.len_ng > 0)) throw FormatError(frame_tag(idx) + ": recalibration flag and section disagree");
  return L;
}

}  // namespace

PFrameLayout pframe_layout(const FrameRecord& record) {
  if (record.kind != FrameKind::P) throw FormatError(frame_tag(record.frame_index) + " is not a P-frame");
  ByteReader r(record.payload, frame_tag(record.frame_index) + " P-frame header");
  return read_layout(r, record.frame_index);
}

PFramePayload decode_pframe(const FrameRecord& record, const ModelShape& shape) {
  const std::uint32_t idx = record.frame_index;
  if (record.kind != FrameKind::P) throw FormatError(frame_tag(idx) + " is not a P-frame");
  ByteReader r(record.payload, frame_tag(idx) + " P-frame payload");
  const PFrameLayout L = read_layout(r, idx);

  PFramePayload p;
  p.p16 = L.p16;
  p.btc = BtcPair::zeros(shape.btc_config());
  if (L.signs_x != p.btc.btc_x.sign_count() || L.signs_f != p.btc.btc_f.sign_count())
    throw FormatError(frame_tag(idx) + ": sign counts disagree with the stream header");

  const auto bits_x = arith_decode(r.bytes(L.len_x), L.signs_x, L.p16);
  const auto bits_f = arith_decode(r.bytes(L.len_f), L.signs_f, L.p16);
  auto install = [](BtcNet& net, const std::vector<bool>& bits) {
    std::size_t k = 0;
    for (auto& l : net.layers)
      for (double& v : l.latent_w.value.values) v = bits[k++] ? 1.0 : -1.0;
  };
  install(p.btc.btc_x, bits_x);
  install(p.btc.btc_f, bits_f);

  ByteReader raw(r.bytes(L.len_raw_btc), frame_tag(idx) + " BTC parameter section");
  for (BtcNet* net : {&p.btc.btc_x, &p.btc.btc_f})
    for (auto& l : net->layers) {
      l.bias.value.values = read_floats(raw, l.bias.value.size());
      l.scale.value[0] = static_cast<double>(raw.f32());
    }
  if (!raw.done()) throw FormatError(frame_tag(idx) + ": BTC parameter section size mismatch");

  std::mt19937_64 rng(0);
  const std::size_t nm_count = MaskNet(shape.nm_config(), rng).mlp().parameter_count();
  if (L.len_nm != nm_count * 4) throw FormatError(frame_tag(idx) + ": N_m section size mismatch");
  ByteReader nmr(r.bytes(L.len_nm), frame_tag(idx) + " N_m section");
  p.nm = read_floats(nmr, nm_count);

  if (L.has_ng) {
    const std::size_t ng_count = GaussianAttributeNet(shape.ng_config(), rng).mlp().parameter_count();
    if (L.len_ng != ng_count * 4) throw FormatError(frame_tag(idx) + ": N_G section size mismatch");
    ByteReader ngr(r.bytes(L.len_ng), frame_tag(idx) + " N_G section");
    p.ng = read_floats(ngr, ng_count);
  }
  if (!r.done()) throw FormatError(frame_tag(idx) + ": P-frame payload has trailing bytes");
  return p;
}

DecodedState apply_pframe(const DecodedState& prev, const PFramePayload& payload, const ModelShape& shape) {
  (void)shape;
  DecodedState st = prev;
  st.anchors = apply_updates(prev.anchors, btc_forward(payload.btc, prev.anchors.x));
  st.nm.mlp().assign(payload.nm);
  st.nm.mlp().reset_optimizer();
  st.recalibrated = payload.ng.has_value();
  if (payload.ng) {
    st.ng.mlp().assign(*payload.ng);
    st.ng.mlp().reset_optimizer();
  }
  st.frame = prev.frame + 1;
  return st;
}

DecodedState decode_frame(const FrameRecord& record, const DecodedState& prev, const ModelShape& shape) {
  if (record.frame_index != static_cast<std::uint64_t>(prev.frame + 1))
    throw FormatError("out-of-order frame: expected " + std::to_string(prev.frame + 1) + ", found " +
                      std::to_string(record.frame_index));
  if (record.kind == FrameKind::I) return decode_iframe(record, shape);
  if (prev.frame < 0) throw FormatError(frame_tag(record.frame_index) + ": P-frame before any I-frame");
  return apply_pframe(prev, decode_pframe(record, shape), shape);
}

std::size_t measure_rate(const FrameRecord& record) { return kRecordHeaderBytes + record.payload.size(); }

double estimate_gap(const FrameRecord& record, const SymbolCounts& counts) {
  const PFrameLayout L = pframe_layout(record);
  const double actual = 8.0 * static_cast<double>(L.len_x + L.len_f) + 16.0;
  return actual - hard_rate(counts, static_cast<double>(L.p16) / 65536.0);
}

}  // namespace solar
