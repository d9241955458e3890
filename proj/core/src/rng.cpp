#include "competevo/rng.hpp"

#include <cmath>

namespace competevo {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;

std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace

std::uint64_t Rng::next_u64() { return splitmix64(state_); }

double Rng::uniform01() {
  // 53 random bits -> [0, 1).
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

double Rng::normal() {
  double u1 = uniform01();
  double u2 = uniform01();
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

std::uint32_t Rng::below(std::uint32_t n) {
  // Multiply-shift bounded draw; bias is < 2^-32, irrelevant here.
  return static_cast<std::uint32_t>((next_u64() >> 32) * static_cast<std::uint64_t>(n) >> 32);
}

std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = master ^ 0xd1b54a32d192ed03ULL;
  for (std::uint64_t p : path) {
    s ^= p + 0x9e3779b97f4a7c15ULL + (s << 6) + (s >> 2);
    splitmix64(s);
  }
  return splitmix64(s);
}

}  // namespace competevo
