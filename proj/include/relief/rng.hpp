#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace relief {

/// Counter-based deterministic RNG. Each draw hashes (key, counter), so a
/// stream is fully determined by its key and independent streams can be
/// derived with split(). Gaussian draws use Box-Muller on the uniform output,
/// keeping sequences identical across platforms and standard libraries.
class Rng {
public:
    explicit Rng(uint64_t seed) : key_(mix(seed ^ 0x2545F4914F6CDD1DULL)) {}

    // Derives an independent stream; the parent's state is untouched.
    Rng split(uint64_t stream) const { return Rng(key_, mix(key_ ^ mix(stream + 0x632BE59BD9B4E019ULL))); }

    uint64_t next_u64() { return mix(key_ + 0x9E3779B97F4A7C15ULL * ++counter_); }

    // Uniform in [0,1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n).
    uint64_t below(uint64_t n) { return n ? next_u64() % n : 0; }

    double normal();

    Eigen::MatrixXd normal_matrix(Eigen::Index rows, Eigen::Index cols, double mean = 0.0, double stddev = 1.0);
    Eigen::Vector3d normal_vec3() { return {normal(), normal(), normal()}; }

private:
    Rng(uint64_t key, uint64_t derived) : key_(derived) { (void)key; }

    static uint64_t mix(uint64_t z) {
        z += 0x9E3779B97F4A7C15ULL;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    uint64_t key_;
    uint64_t counter_ = 0;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace relief
