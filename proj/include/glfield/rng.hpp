#ifndef GLFIELD_RNG_HPP
#define GLFIELD_RNG_HPP

#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace glfield {

// Counter-based splittable random stream in the splitmix64 family
// (Steele/Lea/Flood; finalizer by Vigna). A stream is a 64-bit key plus a
// counter; the n-th output is a pure function of (key, n), so results do not
// depend on sharing, execution order, or worker count. Substreams are derived
// by hashing tags into the key.
class Rng {
  public:
    explicit Rng(std::uint64_t key) : key_(key) {}

    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    static std::uint64_t derive(std::uint64_t key, std::uint64_t tag) {
        return mix(key + 0x9E3779B97F4A7C15ull * (tag + 1));
    }

    static std::uint64_t derive(std::uint64_t key,
                                std::initializer_list<std::uint64_t> tags) {
        for (std::uint64_t t : tags)
            key = derive(key, t);
        return key;
    }

    Rng split(std::uint64_t tag) const { return Rng(derive(key_, tag)); }
    Rng split(std::initializer_list<std::uint64_t> tags) const {
        return Rng(derive(key_, tags));
    }

    std::uint64_t next_u64() {
        return mix(key_ + ++counter_ * 0x9E3779B97F4A7C15ull);
    }

    // Uniform in [0,1), 53 bits.
    double next_double() { return double(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in (0,1], so that -log() is finite.
    double next_open_double() {
        return (double(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    }

    double next_exp() { return -std::log(next_open_double()); }

    // Unbiased uniform on {0, ..., n-1}.
    std::uint64_t next_below(std::uint64_t n) {
        std::uint64_t threshold = (0 - n) % n;
        for (;;) {
            std::uint64_t r = next_u64();
            if (r >= threshold)
                return r % n;
        }
    }

    std::uint64_t key() const { return key_; }

  private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

// Named tags for substream derivation, so call sites stay greppable.
namespace rng_tag {
inline constexpr std::uint64_t trial = 0x7472696Cull;    // per-trial root
inline constexpr std::uint64_t neuron = 0x6E65756Eull;   // per-neuron stream
inline constexpr std::uint64_t routing = 0x726F7574ull;  // per-spike routing
inline constexpr std::uint64_t initial = 0x696E6974ull;  // initial conditions
inline constexpr std::uint64_t arrival = 0x61727276ull;  // PH input arrivals
inline constexpr std::uint64_t bootstrap = 0x626F6F74ull;
inline constexpr std::uint64_t ph = 0x7068ull; // PH fixed-point trials
} // namespace rng_tag

} // namespace glfield

#endif
