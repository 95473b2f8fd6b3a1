#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace powersim {

// splitmix64 finalizer; used to derive well-separated substream seeds.
std::uint64_t mix64(std::uint64_t x);

// Derives a substream seed from a master seed and a path of indices
// (stage tag, grid cell, iteration, ...). The derivation is pure, so the
// stream assigned to a task is independent of thread scheduling.
std::uint64_t derive_seed(std::uint64_t master,
                          std::initializer_list<std::uint64_t> path);

// One private random stream. All variates are produced from 64-bit draws
// through explicit, implementation-independent transformations, so a fixed
// seed yields the same sequence on every platform.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform on the open interval (0,1).
  double uniform();

  // Standard normal via the inverse CDF.
  double normal();

  // Uniform index in [0,n) without modulo bias.
  std::size_t uniform_index(std::size_t n);

  // Gamma(shape, 1) by Marsaglia-Tsang squeeze; shape > 0.
  double gamma(double shape);

  // Beta(a, b) from a pair of gamma draws; a, b > 0.
  double beta(double a, double b);

 private:
  std::mt19937_64 gen_;
};

}  // namespace powersim
