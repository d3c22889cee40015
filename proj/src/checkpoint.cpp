#include <string>

#include "btfsyn/checkpoint.hpp"
#include "btfsyn/detail/bytes.hpp"

namespace btf {

namespace {

constexpr std::string_view kMagic = "TPLN";
constexpr std::string_view kPlaneMagic = "FPLN";
constexpr std::uint32_t kVersion = 1;

void write_plane_header(detail::ByteWriter& w, const FeaturePlane<float>& p) {
  w.u32(std::uint32_t(p.width()));
  w.u32(std::uint32_t(p.height()));
  w.u32(std::uint32_t(p.channels()));
  w.u8(std::uint8_t(p.wrap_u()));
  w.u8(std::uint8_t(p.wrap_v()));
  w.u16(0);
}

FeaturePlane<float> read_plane_header(detail::ByteReader& r) {
  const std::uint32_t w = r.u32();
  const std::uint32_t h = r.u32();
  const std::uint32_t c = r.u32();
  const std::uint8_t wu = r.u8();
  const std::uint8_t wv = r.u8();
  r.u16();
  if (w == 0 || h == 0 || c == 0 || wu > 1 || wv > 1) throw Error(ErrorKind::Format, "checkpoint: bad plane header");
  r.need(std::size_t(w) * h * c * 4);
  return FeaturePlane<float>(w, h, c, AddressMode(wu), AddressMode(wv));
}

void write_plane_data(detail::ByteWriter& w, const FeaturePlane<float>& p) {
  w.f32s({p.data().data(), std::size_t(p.data().size())});
}

void read_plane_data(detail::ByteReader& r, FeaturePlane<float>& p) {
  r.f32s({p.data().data(), std::size_t(p.data().size())});
}

void write_block(detail::ByteWriter& w, std::string_view tag, detail::ByteWriter&& payload) {
  w.bytes(tag);
  w.u64(payload.buffer().size());
  w.buffer().insert(w.buffer().end(), payload.buffer().begin(), payload.buffer().end());
}

detail::ByteWriter encode_gaussianization(const GaussianizedExemplar& g) {
  detail::ByteWriter w;
  w.u32(std::uint32_t(g.luts.size()));
  w.u32(std::uint32_t(g.lut_size()));
  for (const auto& lut : g.luts) {
    w.f32(lut.value_min);
    w.f32(lut.value_max);
    w.f32s(lut.forward);
    w.f32s(lut.inverse);
  }
  write_plane_header(w, g.gauss_plane);
  write_plane_data(w, g.gauss_plane);
  return w;
}

GaussianizedExemplar decode_gaussianization(detail::ByteReader& r) {
  GaussianizedExemplar g;
  const std::uint32_t channels = r.u32();
  const std::uint32_t size = r.u32();
  r.need(std::size_t(channels) * (8 + std::size_t(size) * 8));
  for (std::uint32_t c = 0; c < channels; ++c) {
    ChannelLut lut;
    lut.value_min = r.f32();
    lut.value_max = r.f32();
    lut.forward.resize(size);
    lut.inverse.resize(size);
    r.f32s(lut.forward);
    r.f32s(lut.inverse);
    g.luts.push_back(std::move(lut));
  }
  g.gauss_plane = read_plane_header(r);
  read_plane_data(r, g.gauss_plane);
  if (g.gauss_plane.channels() != Index(channels)) throw Error(ErrorKind::Format, "checkpoint: GLUT channel mismatch");
  return g;
}

detail::ByteWriter encode_trainer(const TrainerState& s) {
  detail::ByteWriter w;
  w.u32(s.epochs_completed);
  w.u64(std::uint64_t(s.adam.step));
  w.f32(s.adam.beta1);
  w.f32(s.adam.beta2);
  w.f32(s.adam.eps);
  w.u32(std::uint32_t(s.adam.m.size()));
  for (std::size_t i = 0; i < s.adam.m.size(); ++i) {
    w.u64(std::uint64_t(s.adam.m[i].size()));
    w.f32s({s.adam.m[i].data(), std::size_t(s.adam.m[i].size())});
    w.f32s({s.adam.v[i].data(), std::size_t(s.adam.v[i].size())});
  }
  return w;
}

TrainerState decode_trainer(detail::ByteReader& r) {
  TrainerState s;
  s.epochs_completed = r.u32();
  s.adam.step = long(r.u64());
  s.adam.beta1 = r.f32();
  s.adam.beta2 = r.f32();
  s.adam.eps = r.f32();
  const std::uint32_t slots = r.u32();
  for (std::uint32_t i = 0; i < slots; ++i) {
    const std::uint64_t n = r.u64();
    r.need(std::size_t(n) * 8);
    AdamWState<float>::Array m(n), v(n);
    r.f32s({m.data(), std::size_t(n)});
    r.f32s({v.data(), std::size_t(n)});
    s.adam.m.push_back(std::move(m));
    s.adam.v.push_back(std::move(v));
  }
  return s;
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt) {
  const auto& m = ckpt.model;
  m.validate();
  detail::ByteWriter w;
  w.bytes(kMagic);
  w.u32(kVersion);
  write_plane_header(w, m.plane_u);
  write_plane_header(w, m.plane_h);
  write_plane_header(w, m.plane_d);
  const auto dims = m.mlp.dims();
  w.u32(std::uint32_t(m.mlp.layer_count()));
  for (auto d : dims) w.u32(std::uint32_t(d));
  w.f32(m.mlp.leaky_slope);
  w.u8(m.mlp.output_activation ? 1 : 0);
  w.u8(std::uint8_t(m.output_space));
  w.u16(0);
  write_plane_data(w, m.plane_u);
  write_plane_data(w, m.plane_h);
  write_plane_data(w, m.plane_d);
  for (std::size_t k = 0; k < m.mlp.layer_count(); ++k) {
    const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> wk = m.mlp.weights[k];
    w.f32s({wk.data(), std::size_t(wk.size())});
    w.f32s({m.mlp.biases[k].data(), std::size_t(m.mlp.biases[k].size())});
  }

  std::uint32_t blocks = 0;
  detail::ByteWriter tail;
  if (ckpt.gaussianization) {
    write_block(tail, "GLUT", encode_gaussianization(*ckpt.gaussianization));
    ++blocks;
  }
  if (ckpt.quilted) {
    detail::ByteWriter q;
    q.u64(std::bit_cast<std::uint64_t>(ckpt.quilted->uv_scale));
    write_plane_header(q, ckpt.quilted->plane);
    write_plane_data(q, ckpt.quilted->plane);
    write_block(tail, "QPLN", std::move(q));
    ++blocks;
  }
  if (ckpt.trainer) {
    write_block(tail, "TRST", encode_trainer(*ckpt.trainer));
    ++blocks;
  }
  w.u32(blocks);
  w.buffer().insert(w.buffer().end(), tail.buffer().begin(), tail.buffer().end());
  return std::move(w.buffer());
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes, "checkpoint");
  if (bytes.size() < kMagic.size() || r.bytes(kMagic.size()) != kMagic) {
    throw Error(ErrorKind::Format, "checkpoint: bad magic");
  }
  if (const auto version = r.u32(); version != kVersion) {
    throw Error(ErrorKind::Version, "checkpoint: unsupported version " + std::to_string(version));
  }
  Checkpoint ckpt;
  auto& m = ckpt.model;
  m.plane_u = read_plane_header(r);
  m.plane_h = read_plane_header(r);
  m.plane_d = read_plane_header(r);
  const std::uint32_t layers = r.u32();
  if (layers == 0 || layers > 64) throw Error(ErrorKind::Format, "checkpoint: bad layer count");
  std::vector<Index> dims(layers + 1);
  for (auto& d : dims) {
    d = r.u32();
    if (d == 0 || d > 4096) throw Error(ErrorKind::Format, "checkpoint: bad layer dim");
  }
  const float slope = r.f32();
  m.mlp = MlpParams<float>::zeros(dims, slope);
  m.mlp.output_activation = r.u8() != 0;
  const std::uint8_t space = r.u8();
  if (space > 1) throw Error(ErrorKind::Format, "checkpoint: bad output space");
  m.output_space = OutputSpace(space);
  r.u16();
  read_plane_data(r, m.plane_u);
  read_plane_data(r, m.plane_h);
  read_plane_data(r, m.plane_d);
  for (std::size_t k = 0; k < m.mlp.layer_count(); ++k) {
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> wk(m.mlp.weights[k].rows(),
                                                                            m.mlp.weights[k].cols());
    r.f32s({wk.data(), std::size_t(wk.size())});
    m.mlp.weights[k] = wk;
    r.f32s({m.mlp.biases[k].data(), std::size_t(m.mlp.biases[k].size())});
  }
  m.validate();

  const std::uint32_t blocks = r.u32();
  for (std::uint32_t b = 0; b < blocks; ++b) {
    const std::string tag(r.bytes(4));
    const std::uint64_t length = r.u64();
    r.need(std::size_t(length));
    detail::ByteReader block(bytes.subspan(bytes.size() - r.remaining(), std::size_t(length)), "checkpoint block");
    r.skip(std::size_t(length));
    if (tag == "GLUT") {
      ckpt.gaussianization = decode_gaussianization(block);
    } else if (tag == "QPLN") {
      auto q = std::make_shared<QuiltedPlane>();
      q->uv_scale = std::bit_cast<double>(block.u64());
      q->plane = read_plane_header(block);
      read_plane_data(block, q->plane);
      ckpt.quilted = std::move(q);
    } else if (tag == "TRST") {
      ckpt.trainer = decode_trainer(block);
    } else {
      continue;
    }
    if (!block.at_end()) throw Error(ErrorKind::Corruption, "checkpoint: block " + tag + " has trailing bytes");
  }
  if (!r.at_end()) throw Error(ErrorKind::Corruption, "checkpoint: trailing bytes");
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  detail::write_file(path, encode_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(detail::read_file(path));
}

void save_plane(const FeaturePlane<float>& plane, const std::filesystem::path& path) {
  detail::ByteWriter w;
  w.bytes(kPlaneMagic);
  w.u32(kVersion);
  write_plane_header(w, plane);
  write_plane_data(w, plane);
  detail::write_file(path, w.buffer());
}

FeaturePlane<float> load_plane(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  detail::ByteReader r(bytes, "plane file");
  if (bytes.size() < 4 || r.bytes(4) != kPlaneMagic) throw Error(ErrorKind::Format, "plane file: bad magic");
  if (r.u32() != kVersion) throw Error(ErrorKind::Version, "plane file: unsupported version");
  auto plane = read_plane_header(r);
  read_plane_data(r, plane);
  if (!r.at_end()) throw Error(ErrorKind::Corruption, "plane file: trailing bytes");
  return plane;
}

}  // namespace btf
