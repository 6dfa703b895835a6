#pragma once

#include <cstdint>
#include <random>

namespace stella {

// Single seeded generator threaded through the whole program. Identical seed
// implies bit-identical runs in single-threaded mode.
class Rng {
  public:
    explicit Rng(uint64_t seed = 0) : engine_(seed) {}

    double uniform(double lo, double hi) {
        std::uniform_real_distribution<double> d(lo, hi);
        return d(engine_);
    }
    double normal(double mean = 0.0, double stddev = 1.0) {
        std::normal_distribution<double> d(mean, stddev);
        return d(engine_);
    }
    uint64_t next_u64() { return engine_(); }
    // Uniform integer in [0, n).
    uint64_t index(uint64_t n) {
        std::uniform_int_distribution<uint64_t> d(0, n - 1);
        return d(engine_);
    }
    bool bernoulli(double p) {
        std::bernoulli_distribution d(p);
        return d(engine_);
    }
    std::mt19937_64& engine() { return engine_; }

  private:
    std::mt19937_64 engine_;
};

}  // namespace stella
