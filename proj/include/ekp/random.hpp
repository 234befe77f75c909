#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>

namespace ekp {

// splitmix64 finalizer; used to derive independent per-draw streams from
// (seed, counter) so that results do not depend on evaluation order.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Small counter-based bit stream: word(i) is a pure function of (seed, counter, i).
class SignStream {
public:
    SignStream(std::uint64_t seed, std::uint64_t counter)
        : state_(mix64(seed ^ mix64(counter + 0x632BE59BD9B4E019ULL))) {}

    // Fills sigma with +-1 entries.
    void fill_signs(Eigen::VectorXd& sigma) {
        std::uint64_t word = 0;
        int bits_left = 0;
        for (Eigen::Index i = 0; i < sigma.size(); ++i) {
            if (bits_left == 0) {
                word = next();
                bits_left = 64;
            }
            sigma[i] = (word & 1u) ? 1.0 : -1.0;
            word >>= 1;
            --bits_left;
        }
    }

    std::uint64_t next() {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t state_;
};

// Sequential helper stream for data generation; same generator everywhere so
// fixtures do not depend on the standard library's distributions.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : stream_(seed, 0) {}

    std::uint64_t bits() { return stream_.next(); }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(bits() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 1.0 - uniform();  // (0, 1]
        double u2 = uniform();
        double mag = std::sqrt(-2.0 * std::log(u1));
        spare_ = mag * std::sin(6.283185307179586476925286766559 * u2);
        have_spare_ = true;
        return mag * std::cos(6.283185307179586476925286766559 * u2);
    }

private:
    SignStream stream_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace ekp
