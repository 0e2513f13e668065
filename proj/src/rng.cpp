#include "pedloc/rng.hpp"

namespace pedloc {

namespace {

// splitmix64 step, the standard 64-bit finalizer.
uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

uint64_t split_seed(uint64_t seed, uint64_t index) {
  return mix64(mix64(seed) ^ mix64(index + 0x51ed270b7a64f3a1ULL));
}

}  // namespace pedloc
