// Copyright 2026 The qfs Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef QFS_CORE_HPP
#define QFS_CORE_HPP

#include <algorithm>
#include <cstdint>
#include <exception>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace qfs {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

/// Hard ceiling on any dense outcome space (tables and statevectors).
inline constexpr std::uint64_t kStateCeiling = std::uint64_t{1} << 26;
/// Default ceiling on monomial enumeration.
inline constexpr std::uint64_t kEnumerationGuard = std::uint64_t{1} << 24;

enum class ErrorCode {
    InvalidArgument,
    IndexOutOfRange,
    UnsupportedFamily,
    InvalidMonomial,
    TooLarge,
    Overflow,
    LengthMismatch,
    NormalizationFailure,
    ParityViolation,
    OutOfRange,
    InvalidAlphabet,
    ShapeMismatch,
    DimMismatch,
    CollisionDetected,
    NumericalInstability,
    MissingTruthValues,
};

inline const char *to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
        case ErrorCode::UnsupportedFamily: return "UnsupportedFamily";
        case ErrorCode::InvalidMonomial: return "InvalidMonomial";
        case ErrorCode::TooLarge: return "TooLarge";
        case ErrorCode::Overflow: return "Overflow";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::NormalizationFailure: return "NormalizationFailure";
        case ErrorCode::ParityViolation: return "ParityViolation";
        case ErrorCode::OutOfRange: return "OutOfRange";
        case ErrorCode::InvalidAlphabet: return "InvalidAlphabet";
        case ErrorCode::ShapeMismatch: return "ShapeMismatch";
        case ErrorCode::DimMismatch: return "DimMismatch";
        case ErrorCode::CollisionDetected: return "CollisionDetected";
        case ErrorCode::NumericalInstability: return "NumericalInstability";
        case ErrorCode::MissingTruthValues: return "MissingTruthValues";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
   public:
    Error(ErrorCode code, const std::string &message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}
    ErrorCode code() const noexcept { return code_; }

   private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string &message) { throw Error(code, message); }

/// Size limits applied before allocating dense spaces. Callers may tighten
/// them; `max_states` can never exceed kStateCeiling.
struct Guards {
    std::uint64_t max_states = kStateCeiling;
    std::uint64_t max_monomials = kEnumerationGuard;
};

/// radix^length, or TooLarge if it exceeds `limit`.
inline std::uint64_t checked_power(std::uint64_t radix, std::size_t length, std::uint64_t limit) {
    std::uint64_t result = 1;
    for (std::size_t i = 0; i < length; ++i) {
        if (radix != 0 && result > limit / radix) {
            fail(ErrorCode::TooLarge,
                 std::to_string(radix) + "^" + std::to_string(length) + " exceeds limit " + std::to_string(limit));
        }
        result *= radix;
    }
    if (result > limit) {
        fail(ErrorCode::TooLarge,
             std::to_string(radix) + "^" + std::to_string(length) + " exceeds limit " + std::to_string(limit));
    }
    return result;
}

// Mixed-radix convention used by every table and statevector in the library:
// position 0 is the most significant digit.

inline void digits_of(std::uint64_t index, std::uint32_t radix, std::span<std::uint32_t> out) {
    for (std::size_t p = out.size(); p-- > 0;) {
        out[p] = static_cast<std::uint32_t>(index % radix);
        index /= radix;
    }
}

inline std::vector<std::uint32_t> digits_of(std::uint64_t index, std::uint32_t radix, std::size_t length) {
    std::vector<std::uint32_t> out(length);
    digits_of(index, radix, out);
    return out;
}

template <class Int>
std::uint64_t index_of_digits(std::span<const Int> digits, std::uint32_t radix) {
    std::uint64_t index = 0;
    for (auto d : digits) index = index * radix + static_cast<std::uint64_t>(d);
    return index;
}

inline BigInt factorial(unsigned n) {
    BigInt r = 1;
    for (unsigned i = 2; i <= n; ++i) r *= i;
    return r;
}

inline BigInt binomial(unsigned n, unsigned k) {
    if (k > n) return 0;
    k = std::min(k, n - k);
    BigInt r = 1;
    for (unsigned i = 1; i <= k; ++i) {
        r *= n - k + i;
        r /= i;
    }
    return r;
}

inline BigInt big_pow(const BigInt &base, unsigned exponent) {
    BigInt r = 1;
    for (unsigned i = 0; i < exponent; ++i) r *= base;
    return r;
}

inline std::string to_fraction_string(const Rational &r) {
    return boost::multiprecision::numerator(r).str() + "/" + boost::multiprecision::denominator(r).str();
}

inline Rational parse_fraction(const std::string &text) {
    auto slash = text.find('/');
    if (slash == std::string::npos) return Rational(BigInt(text));
    return Rational(BigInt(text.substr(0, slash)), BigInt(text.substr(slash + 1)));
}

/// Seeded random stream. Identical (seed, stream_id) pairs replay identical
/// draw sequences; independent streams are obtained by varying stream_id.
class RandomSource {
   public:
    explicit RandomSource(std::uint64_t seed, std::uint64_t stream_id = 0) : seed_(seed), stream_id_(stream_id) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(stream_id), static_cast<std::uint32_t>(stream_id >> 32),
                          0x9e3779b9u};
        engine_.seed(seq);
    }

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream_id() const noexcept { return stream_id_; }
    RandomSource split(std::uint64_t stream_id) const { return RandomSource(seed_, stream_id); }

    std::uint64_t bits() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform on [0, bound).
    std::uint64_t below(std::uint64_t bound) {
        if (bound == 0) fail(ErrorCode::InvalidArgument, "below(0)");
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
        std::uint64_t v;
        do {
            v = engine_();
        } while (v >= limit);
        return v % bound;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    double normal() { return std::normal_distribution<double>(0.0, 1.0)(engine_); }

    std::mt19937_64 &engine() noexcept { return engine_; }

   private:
    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::mt19937_64 engine_;
};

/// Runs fn(begin, end) over contiguous chunks of [0, count). Chunk boundaries
/// depend only on `count` and `threads`, and callers write disjoint outputs,
/// so results do not depend on scheduling.
template <class Fn>
void parallel_for(std::uint64_t count, unsigned threads, Fn &&fn) {
    if (threads <= 1 || count < 2 * threads) {
        fn(std::uint64_t{0}, count);
        return;
    }
    std::vector<std::thread> workers;
    std::vector<std::exception_ptr> errors(threads);
    workers.reserve(threads);
    const std::uint64_t chunk = (count + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
        const std::uint64_t begin = t * chunk;
        const std::uint64_t end = std::min(count, begin + chunk);
        if (begin >= end) break;
        workers.emplace_back([&fn, &errors, t, begin, end] {
            try {
                fn(begin, end);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    for (auto &w : workers) w.join();
    for (auto &e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

}  // namespace qfs

#endif  // QFS_CORE_HPP
