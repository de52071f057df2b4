// SPDX-License-Identifier: Apache-2.0
#include "hot/abc.hpp"

#include <fstream>

#include "hot/binary_io.hpp"
#include "hot/errors.hpp"

namespace hot {

std::size_t CompressedActivation::payload_rows() const {
  return padded_length(original_L, hadamard.tile) / hadamard.tile * hadamard.rank;
}

CompressedActivation compress_activation(const Matrix& x, const std::string& layer_id, const BackwardConfig& cfg) {
  ReducedActivation r = reduce_activation(x, cfg);
  return CompressedActivation{layer_id, x.rows(), x.cols(), cfg.hadamard, std::move(r.payload)};
}

Matrix gw_from_compressed(const Matrix& gy, const CompressedActivation& cact, const BackwardConfig& cfg) {
  if (!(cact.hadamard == cfg.hadamard)) {
    throw std::invalid_argument("gw_from_compressed: buffer for '" + cact.layer_id +
                                "' was built with a different tile/rank/ordering");
  }
  return hot_gw_from_reduced(gy, ReducedActivation{cact.original_L, cact.payload}, cfg);
}

std::size_t buffer_bytes(const CompressedActivation& cact) {
  if (const auto* q = std::get_if<QuantTensor>(&cact.payload)) {
    return q->payload().size() + 4 * q->params().scales.size();
  }
  return 4 * std::get<Matrix>(cact.payload).size();
}

double compression_ratio(const CompressedActivation& cact) {
  const double original = 4.0 * static_cast<double>(cact.original_L) * static_cast<double>(cact.cols);
  return original == 0.0 ? 0.0 : static_cast<double>(buffer_bytes(cact)) / original;
}

std::size_t abc_bytes(std::size_t L, std::size_t cols, const HadamardConfig& cfg) {
  cfg.validate();
  return padded_length(L, cfg.tile) / cfg.tile * cfg.rank * cols + 4;
}

void write_compressed(std::ostream& os, const CompressedActivation& cact) {
  io::write_magic(os, "HOTA");
  io::write_u32(os, static_cast<std::uint32_t>(cact.layer_id.size()));
  os.write(cact.layer_id.data(), static_cast<std::streamsize>(cact.layer_id.size()));
  io::write_u32(os, static_cast<std::uint32_t>(cact.hadamard.tile));
  io::write_u32(os, static_cast<std::uint32_t>(cact.hadamard.rank));
  io::write_u8(os, static_cast<std::uint8_t>(cact.hadamard.ordering));
  io::write_u32(os, static_cast<std::uint32_t>(cact.original_L));
  io::write_u32(os, static_cast<std::uint32_t>(cact.cols));
  if (const auto* q = std::get_if<QuantTensor>(&cact.payload)) {
    io::write_u8(os, 1);
    write_quant_tensor(os, *q);
  } else {
    io::write_u8(os, 0);
    write_matrix(os, std::get<Matrix>(cact.payload));
  }
}

CompressedActivation read_compressed(std::istream& is) {
  io::expect_magic(is, "HOTA");
  CompressedActivation c;
  const std::uint32_t id_len = io::read_u32(is);
  if (id_len > 4096) throw DataError("HOTA: implausible layer id length");
  c.layer_id.resize(id_len);
  if (!is.read(c.layer_id.data(), id_len)) throw DataError("HOTA: truncated layer id");
  c.hadamard.tile = io::read_u32(is);
  c.hadamard.rank = io::read_u32(is);
  const std::uint8_t ordering = io::read_u8(is);
  if (ordering > 1) throw DataError("HOTA: unknown low-pass ordering");
  c.hadamard.ordering = static_cast<LowpassOrdering>(ordering);
  try {
    c.hadamard.validate();
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("HOTA: ") + e.what());
  }
  c.original_L = io::read_u32(is);
  c.cols = io::read_u32(is);
  const std::uint8_t kind = io::read_u8(is);
  if (kind == 1) {
    c.payload = read_quant_tensor(is);
  } else if (kind == 0) {
    c.payload = read_matrix(is);
  } else {
    throw DataError("HOTA: unknown payload kind");
  }
  const std::size_t rows = std::visit([](const auto& p) { return p.rows(); }, c.payload);
  const std::size_t cols = std::visit([](const auto& p) { return p.cols(); }, c.payload);
  if (rows != c.payload_rows() || cols != c.cols) throw DataError("HOTA: payload shape does not match header");
  return c;
}

void spill_compressed(const std::filesystem::path& path, const CompressedActivation& cact) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open " + path.string() + " for writing");
  write_compressed(os, cact);
  if (!os) throw DataError("failed writing " + path.string());
}

CompressedActivation load_compressed(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open " + path.string());
  return read_compressed(is);
}

std::size_t spill_record_bytes(const CompressedActivation& cact) {
  const std::size_t header = 4 + 4 + cact.layer_id.size() + 4 + 4 + 1 + 4 + 4 + 1;
  if (const auto* q = std::get_if<QuantTensor>(&cact.payload)) return header + quant_tensor_record_bytes(*q);
  return header + 12 + 4 * std::get<Matrix>(cact.payload).size();
}

}  // namespace hot
