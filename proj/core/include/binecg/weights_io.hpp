#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

#include "binecg/model.hpp"

namespace binecg {

/// Packed weight file, all integers little-endian:
///
///   "BECG" | version u8 (1) | model kind u8 | record count u32 | records...
///
/// Each record is a kind byte, a u32 shape header and its payload:
///   0x01 real conv      out, in, kernel, stride, padding | out*in*kernel f32
///   0x02 binary conv    out, in, kernel, stride, padding | out rows of
///                       ceil(in*kernel / 64) u64 words, bit 1 = +1
///   0x03 batch norm     channels | gamma, beta, running mean, running var (f32 each)
///   0x04 real dense     out, in | out*in f32
///   0x05 binary dense   out, in | out rows of ceil(in / 64) u64 words
///   0x06 thresholds     channels | f32 per channel
///
/// Records follow the layer order of the network. Binary records keep only
/// the weight signs, so loading yields shadow weights of exactly +-1.
inline constexpr std::uint8_t kWeightFileVersion = 1;

void save_weights(std::ostream& out, const Network& network);
/// Throws FormatError naming the byte offset of any inconsistency.
Network load_weights(std::istream& in);

void save_weights(const std::filesystem::path& path, const Network& network);
Network load_weights(const std::filesystem::path& path);

/// Human-readable mirror of the weight file (binary weights appear as +-1).
std::string weights_to_json(const Network& network);
/// Throws ParseError (line 1) on malformed JSON or a layout mismatch.
Network weights_from_json(std::string_view text);

}  // namespace binecg
