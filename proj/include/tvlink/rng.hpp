#pragma once

#include <cstdint>

namespace tvlink {

// Counter-based 64-bit generator (SplitMix64).
//
// State update:   state += 0x9E3779B97F4A7C15
// Output scramble (mix64):
//   z  = state
//   z ^= z >> 30;  z *= 0xBF58476D1CE4E5B9
//   z ^= z >> 27;  z *= 0x94D049BB133111EB
//   z ^= z >> 31
//
// Draw k of a generator seeded with s is therefore mix64(s + (k+1)*GOLDEN),
// a pure function of (seed, draw index), so runs are bit-reproducible on any
// platform with 64-bit integers.
//
// Seed-splitting for concurrent tasks: stream(seed, id) starts from
// mix64(seed + id * 0xD1B54A32D192ED03), giving each (seed, stream-id) pair
// an independent, documented starting point.
class Rng {
  public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    static constexpr uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

    static uint64_t mix64(uint64_t z) {
        z ^= z >> 30;
        z *= 0xBF58476D1CE4E5B9ULL;
        z ^= z >> 27;
        z *= 0x94D049BB133111EBULL;
        z ^= z >> 31;
        return z;
    }

    static Rng stream(uint64_t seed, uint64_t stream_id) {
        return Rng(mix64(seed + stream_id * 0xD1B54A32D192ED03ULL));
    }

    uint64_t next_u64() {
        state_ += kGolden;
        return mix64(state_);
    }

    // Uniform double in [0, 1) with 53 random bits.
    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    uint64_t state() const { return state_; }

  private:
    uint64_t state_;
};

} // namespace tvlink
