#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "spr/tensor.hpp"

namespace spr {

/// Tensor container "SPT1": bytes 0-3 magic `SPT1`, bytes 4-7 little-endian
/// u32 header length H, bytes 8..8+H a JSON object
/// {"dtype": "c128"|"f64", "shape": [..], "order": "C"}, then the raw
/// little-endian payload (c128 = interleaved re, im doubles).
struct Spt {
  std::string dtype;
  std::vector<std::int64_t> shape;
  std::vector<double> f64;  // filled when dtype == "f64"
  std::vector<cplx> c128;   // filled when dtype == "c128"

  std::size_t element_count() const;
};

void save_spt_f64(const std::filesystem::path& path, std::span<const std::int64_t> shape,
                  std::span<const double> payload);
void save_spt_c128(const std::filesystem::path& path, std::span<const std::int64_t> shape,
                   std::span<const cplx> payload);
Spt load_spt(const std::filesystem::path& path);

/// Complex volumes are stored with shape [nt, nx, ny], matching memory order.
void save_volume(const std::filesystem::path& path, const ComplexVolume& x);
ComplexVolume load_volume(const std::filesystem::path& path);

nlohmann::json load_json(const std::filesystem::path& path);
void save_json(const std::filesystem::path& path, const nlohmann::json& j);

/// Write to a temporary sibling then rename, so partial files never appear.
void atomic_write_bytes(const std::filesystem::path& path, std::span<const char> bytes);

}  // namespace spr
