#include <Eigen/Core>
#include <string>

#include "btfsyn/btf_data.hpp"
#include "btfsyn/detail/bytes.hpp"

namespace btf {

namespace {

constexpr std::string_view kMagic = "BTFD";
constexpr std::uint32_t kVersion = 1;

}  // namespace

std::vector<std::uint8_t> encode_btf(const BtfDataset& dataset, DiskScalar scalar) {
  dataset.validate();
  detail::ByteWriter w;
  w.bytes(kMagic);
  w.u32(kVersion);
  w.u32(dataset.width);
  w.u32(dataset.height);
  w.u32(std::uint32_t(dataset.pair_count()));
  w.u8(std::uint8_t(scalar));
  w.zeros(3);
  for (const auto& p : dataset.pairs) {
    w.f32s({p.wi.data(), 3});
    w.f32s({p.wo.data(), 3});
  }
  if (scalar == DiskScalar::F32) {
    w.f32s(dataset.data);
  } else {
    for (float v : dataset.data) w.u16(Eigen::numext::bit_cast<std::uint16_t>(Eigen::half(v)));
  }
  return std::move(w.buffer());
}

BtfDataset decode_btf(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes, "btf file");
  if (bytes.size() < kMagic.size() || r.bytes(kMagic.size()) != kMagic) {
    throw Error(ErrorKind::Format, "btf file: bad magic");
  }
  if (const auto version = r.u32(); version != kVersion) {
    throw Error(ErrorKind::Version, "btf file: unsupported version " + std::to_string(version));
  }
  BtfDataset d;
  d.width = r.u32();
  d.height = r.u32();
  const std::uint32_t n = r.u32();
  const auto scalar = r.u8();
  r.skip(3);
  if (scalar > 1) throw Error(ErrorKind::Format, "btf file: unknown scalar type");
  if (d.width == 0 || d.height == 0) throw Error(ErrorKind::Format, "btf file: empty spatial extent");

  const std::size_t values = std::size_t(n) * d.width * d.height * 3;
  const std::size_t payload = std::size_t(n) * 24 + values * (scalar == 0 ? 4 : 2);
  if (r.remaining() != payload) {
    throw Error(ErrorKind::Corruption, "btf file: payload size does not match header (expected " +
                                           std::to_string(payload) + " bytes, found " +
                                           std::to_string(r.remaining()) + ")");
  }
  d.pairs.resize(n);
  for (auto& p : d.pairs) {
    r.f32s({p.wi.data(), 3});
    r.f32s({p.wo.data(), 3});
  }
  d.data.resize(values);
  if (scalar == 0) {
    r.f32s(d.data);
  } else {
    for (float& v : d.data) v = float(Eigen::half(Eigen::half_impl::raw_uint16_to_half(r.u16())));
  }
  d.validate();
  return d;
}

void save_btf(const BtfDataset& dataset, const std::filesystem::path& path, DiskScalar scalar) {
  detail::write_file(path, encode_btf(dataset, scalar));
}

BtfDataset load_btf(const std::filesystem::path& path) { return decode_btf(detail::read_file(path)); }

}  // namespace btf
