#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace stssl {

inline std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// xoshiro256** generator with explicitly serializable state. All random
/// draws in the project go through this type so runs replay bit-exactly.
class Rng {
public:
    Rng() : Rng(0) {}

    explicit Rng(std::uint64_t seed) {
        std::uint64_t x = seed;
        for (auto& w : s_) w = splitmix64(x);
    }

    /// Derives an independent child stream from a string tag.
    Rng split(std::string_view tag) const {
        std::uint64_t mix = fnv1a64(tag);
        for (auto w : s_) mix = fnv1a64(std::string_view(reinterpret_cast<const char*>(&w), 8), mix);
        return Rng(mix);
    }

    std::uint64_t next() {
        auto rotl = [](std::uint64_t v, int k) { return (v << k) | (v >> (64 - k)); };
        const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// Uniform double in [0,1).
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0,n). n must be positive.
    int uniform_int(int n) {
        if (n <= 0) throw std::invalid_argument("uniform_int: n must be positive");
        const std::uint64_t un = static_cast<std::uint64_t>(n);
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % un;
        std::uint64_t r;
        do {
            r = next();
        } while (r >= limit);
        return static_cast<int>(r % un);
    }

    bool bernoulli(double p) { return uniform() < p; }

    /// Standard normal via Box-Muller (no cached spare, fixed draw count).
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        if (u1 <= 0) u1 = 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    template <typename It>
    void shuffle(It first, It last) {
        const auto n = static_cast<long>(last - first);
        for (long i = n - 1; i > 0; --i) {
            const int j = uniform_int(static_cast<int>(i + 1));
            std::swap(first[i], first[j]);
        }
    }

    std::string state_hex() const {
        static const char* digits = "0123456789abcdef";
        std::string out;
        out.reserve(64);
        for (auto w : s_)
            for (int i = 15; i >= 0; --i) out.push_back(digits[(w >> (4 * i)) & 0xf]);
        return out;
    }

    void set_state_hex(const std::string& hex) {
        if (hex.size() != 64) throw std::invalid_argument("rng state: expected 64 hex chars");
        for (int w = 0; w < 4; ++w) {
            std::uint64_t v = 0;
            for (int i = 0; i < 16; ++i) {
                char c = hex[static_cast<std::size_t>(w * 16 + i)];
                v <<= 4;
                if (c >= '0' && c <= '9') v |= static_cast<std::uint64_t>(c - '0');
                else if (c >= 'a' && c <= 'f') v |= static_cast<std::uint64_t>(c - 'a' + 10);
                else throw std::invalid_argument("rng state: bad hex char");
            }
            s_[static_cast<std::size_t>(w)] = v;
        }
    }

private:
    std::array<std::uint64_t, 4> s_{};
};

}  // namespace stssl
