#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string>

namespace ierot {

/// Deterministic random source used everywhere in the project.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. The distributions below are implemented here rather than taken
/// from <random> because the standard library distributions are allowed to
/// differ between implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    /// Independent stream for a (seed, tag...) tuple, e.g. (seed, epoch, image).
    static Rng derive(std::uint64_t seed, std::initializer_list<std::uint64_t> tags);

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform integer in [0, bound), bound > 0. Unbiased (rejection).
    std::uint64_t uniform_index(std::uint64_t bound);

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01();

    /// Standard normal via Box-Muller; one value per call.
    double normal();

    std::string serialize() const;
    void deserialize(const std::string& state);

    friend bool operator==(const Rng& a, const Rng& b) { return a.engine_ == b.engine_; }

private:
    std::mt19937_64 engine_;
};

/// SplitMix64 finalizer; used to mix seeds and tags.
std::uint64_t mix64(std::uint64_t x);

}  // namespace ierot
