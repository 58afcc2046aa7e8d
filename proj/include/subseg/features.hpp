#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "subseg/error.hpp"

namespace subseg {

// frames x dims real-valued speech representation, row-major.
struct FeatureMatrix {
  uint32_t frames = 0;
  uint32_t dims = 0;
  uint32_t frame_shift_ms = 0;
  std::vector<float> data;  // frames * dims values

  const float* row(size_t t) const { return data.data() + t * dims; }
  float* row(size_t t) { return data.data() + t * dims; }
  size_t size() const { return data.size(); }
};

// SPFT binary format: magic "SPFT", little-endian u32 frames, u32 dims,
// u32 frame_shift_ms, then frames*dims little-endian f32, row-major.
std::string write_features(const FeatureMatrix& m);
FeatureMatrix read_features(const std::string& bytes);

void write_features_file(const std::string& path, const FeatureMatrix& m);
FeatureMatrix read_features_file(const std::string& path);

}  // namespace subseg
