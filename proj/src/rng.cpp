#include "enkf/rng.hpp"

#include <cmath>

namespace enkf {
namespace rng {

namespace {

constexpr uint32_t kMul0 = 0xD2511F53u;
constexpr uint32_t kMul1 = 0xCD9E8D57u;
constexpr uint32_t kWeyl0 = 0x9E3779B9u;
constexpr uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(uint32_t a, uint32_t b, uint32_t& hi, uint32_t& lo) {
  uint64_t p = static_cast<uint64_t>(a) * b;
  hi = static_cast<uint32_t>(p >> 32);
  lo = static_cast<uint32_t>(p);
}

}  // namespace

std::array<uint32_t, 4> philox4x32(uint64_t key, uint32_t c0, uint32_t c1, uint32_t c2,
                                   uint32_t c3) {
  uint32_t k0 = static_cast<uint32_t>(key);
  uint32_t k1 = static_cast<uint32_t>(key >> 32);
  for (int round = 0; round < 10; ++round) {
    uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, c0, hi0, lo0);
    mulhilo(kMul1, c2, hi1, lo1);
    uint32_t n0 = hi1 ^ c1 ^ k0;
    uint32_t n1 = lo1;
    uint32_t n2 = hi0 ^ c3 ^ k1;
    uint32_t n3 = lo0;
    c0 = n0;
    c1 = n1;
    c2 = n2;
    c3 = n3;
    k0 += kWeyl0;
    k1 += kWeyl1;
  }
  return {c0, c1, c2, c3};
}

}  // namespace rng

namespace {

// Strictly inside (0,1): min 2^-54, max 1 - 2^-54.
inline double to_unit(uint32_t hi, uint32_t lo) {
  uint64_t v = (static_cast<uint64_t>(hi) << 32) | lo;
  return (static_cast<double>(v >> 11) + 0.5) * 0x1p-53;
}

}  // namespace

void normal_draws_into(uint64_t seed, uint32_t stream, uint64_t t, uint64_t member,
                       Eigen::Ref<Eigen::VectorXd> out) {
  const auto n = out.size();
  constexpr double kTwoPi = 6.283185307179586476925286766559;
  for (Eigen::Index i = 0, block = 0; i < n; i += 2, ++block) {
    // Counter layout: (t lo, t hi, member lo, stream tag | block index).
    auto words = rng::philox4x32(seed, static_cast<uint32_t>(t), static_cast<uint32_t>(t >> 32),
                                 static_cast<uint32_t>(member),
                                 (stream << 24) | static_cast<uint32_t>(block));
    double u1 = to_unit(words[0], words[1]);
    double u2 = to_unit(words[2], words[3]);
    double r = std::sqrt(-2.0 * std::log(u1));
    out[i] = r * std::cos(kTwoPi * u2);
    if (i + 1 < n) out[i + 1] = r * std::sin(kTwoPi * u2);
  }
}

Eigen::VectorXd normal_draws(uint64_t seed, uint32_t stream, uint64_t t, uint64_t member, int n) {
  Eigen::VectorXd out(n);
  normal_draws_into(seed, stream, t, member, out);
  return out;
}

uint64_t derive_replicate_seed(uint64_t seed, uint64_t replicate) {
  NoiseStreams ids;
  auto words = rng::philox4x32(seed, static_cast<uint32_t>(replicate),
                               static_cast<uint32_t>(replicate >> 32), 0u, ids.derive << 24);
  return (static_cast<uint64_t>(words[0]) << 32) | words[1];
}

}  // namespace enkf
