#pragma once

// Seed derivation scheme used throughout the project.
//
// Every source of randomness (twirl sampling, trajectory noise, bootstrap
// resampling) draws from an mt19937_64 whose seed is derived from the
// experiment's master seed plus two counters:
//
//   seed = splitmix64( splitmix64(master ^ STREAM_TAG) + index )
//
// where STREAM_TAG identifies the consumer (one tag per purpose below) and
// index is a deterministic counter (gate number, trajectory number,
// resample number, ...).  Reordering or parallelising work therefore never
// changes which stream a consumer sees.

#include <cstdint>
#include <random>

namespace qemlab {

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Stream tags for the independent random streams of one experiment.
namespace seed_stream {
constexpr uint64_t twirl = 0x7477726cULL;       // "twrl"
constexpr uint64_t trajectory = 0x7472616aULL;  // "traj"
constexpr uint64_t bootstrap = 0x626f6f74ULL;   // "boot"
constexpr uint64_t readout = 0x726f7574ULL;     // "rout"
}  // namespace seed_stream

inline uint64_t derive_seed(uint64_t master, uint64_t stream_tag, uint64_t index) {
    return splitmix64(splitmix64(master ^ stream_tag) + index);
}

inline std::mt19937_64 make_rng(uint64_t master, uint64_t stream_tag, uint64_t index) {
    return std::mt19937_64(derive_seed(master, stream_tag, index));
}

}  // namespace qemlab
