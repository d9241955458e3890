#pragma once

#include <iosfwd>
#include <span>

namespace competevo::binio {

/// Little-endian IEEE-754 doubles, independent of host endianness.
void write_f64le(std::ostream& os, std::span<const double> values);

/// Throws CheckpointError with the byte offset on a short read.
void read_f64le(std::istream& is, std::span<double> out);

}  // namespace competevo::binio
