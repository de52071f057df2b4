// SPDX-License-Identifier: Apache-2.0
#pragma once

// Activation buffer compression: the forward pass stores x already reduced
// along L and quantized to INT8, and the g_w path consumes it directly.

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <variant>

#include "hot/backward.hpp"

namespace hot {

struct CompressedActivation {
  std::string layer_id;
  std::size_t original_L = 0;
  std::size_t cols = 0;
  HadamardConfig hadamard;
  std::variant<Matrix, QuantTensor> payload;  // Matrix only for the unquantized test mode

  std::size_t payload_rows() const;
};

/// Reduces x along L and quantizes it per the g_w mode of `cfg`
/// (HlaInt8 or HlaFp). Call after the forward output has been produced.
CompressedActivation compress_activation(const Matrix& x, const std::string& layer_id, const BackwardConfig& cfg);

/// g_w from a stored buffer; bit-identical to hot_gw(gy, x, cfg).
Matrix gw_from_compressed(const Matrix& gy, const CompressedActivation& cact, const BackwardConfig& cfg);

/// Resident size: payload bytes plus 4 bytes per FP32 scale. The layer id and
/// shape metadata live in the owning layer and are not counted.
std::size_t buffer_bytes(const CompressedActivation& cact);
/// buffer_bytes over the FP32 size of the original activation.
double compression_ratio(const CompressedActivation& cact);

/// buffer_bytes of an INT8 per-tensor buffer for an L × cols activation,
/// computed from shapes alone.
std::size_t abc_bytes(std::size_t L, std::size_t cols, const HadamardConfig& cfg);

// HOTA spill record: "HOTA", u32 id length, id bytes, u32 tile, u32 rank,
// u8 ordering, u32 original_L, u32 cols, u8 payload kind (0 HOTM, 1 HOTQ),
// then the embedded payload record.
void write_compressed(std::ostream& os, const CompressedActivation& cact);
CompressedActivation read_compressed(std::istream& is);
void spill_compressed(const std::filesystem::path& path, const CompressedActivation& cact);
CompressedActivation load_compressed(const std::filesystem::path& path);
/// On-disk size of the HOTA record for `cact`.
std::size_t spill_record_bytes(const CompressedActivation& cact);

}  // namespace hot
