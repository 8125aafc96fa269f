#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace fyio {

/// Seedable, splittable random stream.
///
/// `split(i)` derives an independent child stream from the parent's seed and
/// the index alone, so replication i of an experiment always sees the same
/// numbers no matter how many other replications ran before it.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), engine_(mix(seed, 0x5eedULL)) {}

    std::uint64_t seed() const { return seed_; }

    Rng split(std::uint64_t index) const { return Rng(mix(seed_, index + 1)); }

    double uniform(double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(engine_);
    }

    double normal(double mean = 0.0, double stddev = 1.0) {
        return std::normal_distribution<double>(mean, stddev)(engine_);
    }

    Eigen::VectorXd uniform_vector(Eigen::Index n, double lo, double hi) {
        Eigen::VectorXd v(n);
        for (Eigen::Index i = 0; i < n; ++i) v[i] = uniform(lo, hi);
        return v;
    }

    Eigen::VectorXd normal_vector(Eigen::Index n, double stddev = 1.0) {
        Eigen::VectorXd v(n);
        for (Eigen::Index i = 0; i < n; ++i) v[i] = normal(0.0, stddev);
        return v;
    }

    std::mt19937_64& engine() { return engine_; }

private:
    // splitmix64 finalizer over (seed, salt)
    static std::uint64_t mix(std::uint64_t seed, std::uint64_t salt) {
        std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

}  // namespace fyio
