#pragma once

#include <array>
#include <cstring>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "wattcast/dataset.hpp"
#include "wattcast/nn/tape.hpp"

namespace wattcast::nn {

// Layout (all integers uint64 LE, floats IEEE-754 binary64 LE):
//   magic "WCPARAMS" | version byte | count
//   per record: id length | id bytes | rank | dims... | row-major values
inline constexpr std::array<char, 8> kCheckpointMagic{'W', 'C', 'P', 'A', 'R', 'A', 'M', 'S'};
inline constexpr unsigned char kCheckpointVersion = 1;

inline void write_params(std::ostream& out, std::span<const Param> params) {
  out.write(kCheckpointMagic.data(), kCheckpointMagic.size());
  out.put(static_cast<char>(kCheckpointVersion));
  wattcast::detail::write_u64(out, params.size());
  for (const Param& p : params) {
    wattcast::detail::write_u64(out, p.id.size());
    out.write(p.id.data(), static_cast<std::streamsize>(p.id.size()));
    wattcast::detail::write_u64(out, p.value.rank());
    for (auto d : p.value.shape()) wattcast::detail::write_u64(out, d);
    for (double v : p.value.data()) wattcast::detail::write_f64(out, v);
  }
}

inline void save_params(std::span<const Param> params, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path + "'");
  write_params(out, params);
  if (!out) throw IoError("write failed for '" + path + "'");
}

/// Loads values into `params`, which must already have matching ids and
/// shapes in the same order.
inline void read_params(std::istream& in, std::span<Param> params) {
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kCheckpointMagic)
    throw IoError("checkpoint: bad magic header");
  const int version = in.get();
  if (version != kCheckpointVersion) throw IoError("checkpoint: unsupported version " + std::to_string(version));
  const auto count = wattcast::detail::read_u64(in);
  if (count != params.size())
    throw IoError("checkpoint: holds " + std::to_string(count) + " params, model has " +
                  std::to_string(params.size()));
  for (Param& p : params) {
    const auto len = wattcast::detail::read_u64(in);
    if (len > 4096) throw IoError("checkpoint: implausible id length");
    std::string id(len, '\0');
    in.read(id.data(), static_cast<std::streamsize>(len));
    if (id != p.id) throw IoError("checkpoint: expected param '" + p.id + "', found '" + id + "'");
    const auto rank = wattcast::detail::read_u64(in);
    Shape shape(rank);
    for (auto& d : shape) d = wattcast::detail::read_u64(in);
    if (shape != p.value.shape())
      throw IoError("checkpoint: shape " + shape_str(shape) + " for '" + id + "' does not match " +
                    shape_str(p.value.shape()));
    for (double& v : p.value.data()) v = wattcast::detail::read_f64(in);
  }
}

inline void load_params(std::span<Param> params, const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  read_params(in, params);
}

}  // namespace wattcast::nn
