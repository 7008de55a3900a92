#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace odrop {

// Mixes a user seed with a stream identifier so that independent consumers
// (initialization, shuffling, sampling noise) never share a sequence.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

// Seeded generator with distribution code kept in-repo so that draws are
// identical across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  // Uniform on [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  bool bernoulli(double p) { return uniform() < p; }
  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  template <class T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[below(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace odrop
