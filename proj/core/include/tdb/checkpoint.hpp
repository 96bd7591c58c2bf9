#pragma once

#include <filesystem>
#include <iosfwd>

#include "tdb/model.hpp"

namespace tdb {

// Binary model container. Layout (all integers little-endian, reals IEEE-754 binary64):
//
//   magic      8 bytes  "TDBCKPT\0"
//   version    u32      currently 1
//   name_len   u32      length of the preset name
//   name       bytes    preset name (not NUL-terminated)
//   parts      u64      P
//   blocks     u64      D / P
//   flags      u8       bit 0: tied, bit 1: trainable core
//   heads      u64      rows of the head table
//   relations  u64      rows of the relation table
//   tails      u64      rows of the tail table (equals heads when tied)
//   core       f64[P^3]                   row-major W
//   head       f64[heads * D]
//   relation   f64[relations * D]
//   tail       f64[tails * D]              omitted when tied
//   checksum   u64      FNV-1a 64 over every preceding byte
//
// See docs/checkpoint-format.md.
inline constexpr std::uint32_t kCheckpointVersion = 1;

void write_checkpoint(std::ostream& out, const TdbModel& model);
void save_checkpoint(const std::filesystem::path& path, const TdbModel& model);

// Throws ParseError on malformed input and IntegrityError on checksum mismatch.
TdbModel read_checkpoint(std::istream& in);
TdbModel load_checkpoint(const std::filesystem::path& path);

}  // namespace tdb
