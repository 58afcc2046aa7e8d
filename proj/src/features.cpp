#include "subseg/features.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

namespace subseg {

namespace {

constexpr char kMagic[4] = {'S', 'P', 'F', 'T'};

void put_u32(std::string& out, uint32_t v) {
  char b[4] = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
               static_cast<char>((v >> 16) & 0xFF), static_cast<char>((v >> 24) & 0xFF)};
  out.append(b, 4);
}

uint32_t get_u32(const std::string& s, size_t off) {
  return static_cast<uint32_t>(static_cast<unsigned char>(s[off])) |
         static_cast<uint32_t>(static_cast<unsigned char>(s[off + 1])) << 8 |
         static_cast<uint32_t>(static_cast<unsigned char>(s[off + 2])) << 16 |
         static_cast<uint32_t>(static_cast<unsigned char>(s[off + 3])) << 24;
}

}  // namespace

std::string write_features(const FeatureMatrix& m) {
  if (m.frames == 0 || m.dims == 0)
    fail(Err::SizeMismatch, "feature matrix must be at least 1x1");
  if (m.data.size() != static_cast<size_t>(m.frames) * m.dims)
    fail(Err::SizeMismatch, "data length " + std::to_string(m.data.size()) + " != " +
                                std::to_string(m.frames) + "x" + std::to_string(m.dims));
  for (float v : m.data)
    if (!std::isfinite(v)) fail(Err::NonFiniteValue, "non-finite feature value");
  std::string out;
  out.reserve(16 + m.data.size() * 4);
  out.append(kMagic, 4);
  put_u32(out, m.frames);
  put_u32(out, m.dims);
  put_u32(out, m.frame_shift_ms);
  // f32 little-endian; on LE hosts this is a straight copy.
  static_assert(sizeof(float) == 4);
  for (float v : m.data) {
    uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(out, bits);
  }
  return out;
}

FeatureMatrix read_features(const std::string& bytes) {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    fail(Err::BadMagic, "not an SPFT file");
  FeatureMatrix m;
  m.frames = get_u32(bytes, 4);
  m.dims = get_u32(bytes, 8);
  m.frame_shift_ms = get_u32(bytes, 12);
  if (m.frames == 0 || m.dims == 0)
    fail(Err::SizeMismatch, "header declares an empty matrix");
  size_t count = static_cast<size_t>(m.frames) * m.dims;
  if (bytes.size() != 16 + count * 4)
    fail(Err::SizeMismatch, "payload has " + std::to_string((bytes.size() - 16) / 4) +
                                " values, header declares " + std::to_string(count));
  m.data.resize(count);
  for (size_t i = 0; i < count; ++i) {
    uint32_t bits = get_u32(bytes, 16 + i * 4);
    float v;
    std::memcpy(&v, &bits, 4);
    if (!std::isfinite(v)) fail(Err::NonFiniteValue, "non-finite value at index " + std::to_string(i));
    m.data[i] = v;
  }
  return m;
}

void write_features_file(const std::string& path, const FeatureMatrix& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Err::IoError, "cannot open " + path + " for writing");
  std::string bytes = write_features(m);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(Err::IoError, "write failed: " + path);
}

FeatureMatrix read_features_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Err::IoError, "cannot open " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return read_features(bytes);
}

}  // namespace subseg
