#include "competevo/binio.hpp"

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "competevo/errors.hpp"

namespace competevo::binio {

void write_f64le(std::ostream& os, std::span<const double> values) {
  std::string buf;
  buf.reserve(values.size() * 8);
  for (double v : values) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
  }
  os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

void read_f64le(std::istream& is, std::span<double> out) {
  std::vector<char> buf(out.size() * 8);
  is.read(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (is.gcount() != static_cast<std::streamsize>(buf.size())) {
    throw CheckpointError("binary stream truncated after " + std::to_string(is.gcount()) +
                          " of " + std::to_string(buf.size()) + " bytes");
  }
  for (std::size_t k = 0; k < out.size(); ++k) {
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) {
      bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[k * 8 + i])) << (8 * i);
    }
    out[k] = std::bit_cast<double>(bits);
  }
}

}  // namespace competevo::binio
