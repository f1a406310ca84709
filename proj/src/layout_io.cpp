#include <cmath>
#include <cstdint>

#include "binary_io.hpp"
#include "semspace/spatial.hpp"

namespace semspace {

namespace {
constexpr char kLayMagic[4] = {'L', 'A', 'Y', '1'};
}

std::vector<unsigned char> encode_lay1(std::span<const LayoutPoint> points) {
  detail::ByteWriter w;
  w.bytes(kLayMagic, 4);
  w.put<std::uint64_t>(points.size());
  for (const auto& p : points) {
    if (p.node_id.size() > 0xFFFF) throw FormatError("LAY1: id longer than 65535 bytes");
    w.put<std::uint16_t>(static_cast<std::uint16_t>(p.node_id.size()));
    w.bytes(p.node_id.data(), p.node_id.size());
    w.put<float>(static_cast<float>(p.x));
    w.put<float>(static_cast<float>(p.y));
    w.put<std::uint8_t>(static_cast<std::uint8_t>(p.kind));
    w.put<float>(static_cast<float>(p.display_size));
  }
  return std::move(w.buffer());
}

std::vector<LayoutPoint> read_lay1(std::span<const unsigned char> bytes) {
  detail::ByteReader r(bytes, "LAY1");
  if (r.string(4, "magic") != std::string(kLayMagic, 4)) throw FormatError("LAY1: bad magic bytes");
  const auto count = r.get<std::uint64_t>("record count");
  std::vector<LayoutPoint> out;
  out.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(count, r.remaining() / 15 + 1)));
  for (std::uint64_t i = 0; i < count; ++i) {
    LayoutPoint p;
    const auto len = r.get<std::uint16_t>("id length");
    p.node_id = r.string(len, "id");
    p.x = r.get<float>("x");
    p.y = r.get<float>("y");
    const auto kind = r.get<std::uint8_t>("node kind");
    if (kind > 1) throw FormatError("LAY1: record " + std::to_string(i) + " has unknown node kind " + std::to_string(kind));
    p.kind = static_cast<NodeKind>(kind);
    p.display_size = r.get<float>("display size");
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.display_size) || p.display_size <= 0.0)
      throw FormatError("LAY1: record " + std::to_string(i) + " (\"" + p.node_id + "\") has invalid coordinates or size");
    p.importance = p.display_size;
    out.push_back(std::move(p));
  }
  if (r.remaining() != 0) throw FormatError("LAY1: trailing bytes after byte offset " + std::to_string(r.offset()));
  return out;
}

std::vector<LayoutPoint> read_lay1(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  try {
    return read_lay1(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_lay1(std::span<const LayoutPoint> points, const std::filesystem::path& path) {
  detail::write_file(path, encode_lay1(points));
}

}  // namespace semspace
