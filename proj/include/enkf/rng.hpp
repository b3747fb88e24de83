#pragma once

#include <array>
#include <cstdint>

#include <Eigen/Dense>

namespace enkf {

// Substream identifiers. Streams with different ids are statistically
// independent for any fixed seed; truth and copy streams never overlap.
struct NoiseStreams {
  uint64_t seed = 0;
  uint32_t truth_init = 0;
  uint32_t truth_process = 1;
  uint32_t truth_meas = 2;
  uint32_t copy_init = 3;
  uint32_t copy_process = 4;
  uint32_t copy_meas = 5;
  uint32_t model_gen = 6;
  uint32_t derive = 7;
};

namespace rng {

// One 10-round Philox4x32 block: counter-based, so any (key, counter) word is
// random-access. Returns four independent 32-bit words.
std::array<uint32_t, 4> philox4x32(uint64_t key, uint32_t c0, uint32_t c1, uint32_t c2,
                                   uint32_t c3);

}  // namespace rng

// Standard normal draws addressed purely by (seed, stream, t, member).
// Identical arguments always reproduce identical output.
void normal_draws_into(uint64_t seed, uint32_t stream, uint64_t t, uint64_t member,
                       Eigen::Ref<Eigen::VectorXd> out);

Eigen::VectorXd normal_draws(uint64_t seed, uint32_t stream, uint64_t t, uint64_t member, int n);

// Independent per-replicate seed derived from the base seed.
uint64_t derive_replicate_seed(uint64_t seed, uint64_t replicate);

}  // namespace enkf
