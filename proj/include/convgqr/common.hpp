#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace convgqr {

/// Malformed or inconsistent input data (parse failures, invariant
/// violations in files). CLI maps this to exit code 2.
struct data_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Numeric failure during computation (non-finite loss, undefined
/// statistic). CLI maps this to exit code 3.
struct numeric_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Deterministic xoshiro-free PRNG wrapper. std::mt19937_64 is fully
/// specified by the standard, but the distributions are not, so every
/// derived draw here is hand-rolled to keep outputs identical across
/// platforms and standard libraries.
class SplitRng {
public:
    explicit SplitRng(std::uint64_t seed) : state_(seed) {
        // splitmix64 warm-up so that small seeds diverge immediately
        next_u64();
    }

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform double in [lo, hi).
    double next_double(double lo, double hi) {
        return lo + (hi - lo) * next_double();
    }

    /// Uniform integer in [0, n). n must be positive.
    std::uint64_t next_below(std::uint64_t n) {
        // fixed-point multiply; bias is negligible for desk-scale n
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    /// Standard normal via Box-Muller on hand-rolled uniforms.
    double next_normal() {
        double u1 = next_double();
        double u2 = next_double();
        while (u1 <= 0.0) u1 = next_double();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(next_below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::uint64_t state_;
};

/// FNV-1a 64-bit hash. Used for vocabulary bucketing and manifest
/// content digests (non-cryptographic).
inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

namespace io {

// Little-endian encoders/decoders. Layouts in the on-disk formats are
// specified byte-exact, so this avoids depending on host endianness.

inline void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_f32(std::string& out, float v) {
    put_u32(out, std::bit_cast<std::uint32_t>(v));
}

inline void put_f64(std::string& out, double v) {
    put_u64(out, std::bit_cast<std::uint64_t>(v));
}

/// Cursor over an in-memory byte buffer; throws data_error on truncation.
class Reader {
public:
    Reader(std::string_view buf, std::string_view what) : buf_(buf), what_(what) {}

    std::uint32_t get_u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(buf_[pos_ + i]);
        pos_ += 4;
        return v;
    }

    std::uint64_t get_u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 7; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(buf_[pos_ + i]);
        pos_ += 8;
        return v;
    }

    float get_f32() { return std::bit_cast<float>(get_u32()); }
    double get_f64() { return std::bit_cast<double>(get_u64()); }

    std::string get_bytes(std::size_t n) {
        need(n);
        std::string s(buf_.substr(pos_, n));
        pos_ += n;
        return s;
    }

    /// Reads up to and excluding the next '\n'; consumes the newline.
    std::string get_line() {
        auto nl = buf_.find('\n', pos_);
        if (nl == std::string_view::npos)
            throw data_error(std::string(what_) + ": truncated payload (missing newline)");
        std::string s(buf_.substr(pos_, nl - pos_));
        pos_ = nl + 1;
        return s;
    }

    bool exhausted() const { return pos_ == buf_.size(); }
    std::size_t pos() const { return pos_; }

private:
    void need(std::size_t n) {
        if (buf_.size() - pos_ < n)
            throw data_error(std::string(what_) + ": truncated payload at byte " +
                             std::to_string(pos_));
    }

    std::string_view buf_;
    std::string_view what_;
    std::size_t pos_ = 0;
};

}  // namespace io

}  // namespace convgqr
