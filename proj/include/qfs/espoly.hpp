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

// Efficiently specifiable polynomial families.
//
// A family is a multilinear homogeneous polynomial with 0/1 coefficients whose
// monomials are indexed by [0, m) through a bijection h (monomial_of_index)
// with an efficiently computable inverse (index_of_monomial). Shipped families:
//
//   * Permanent over an n x n matrix: monomials are permutations, ranked by
//     their Lehmer code (factorial number system).
//   * HamiltonianCycle over an n x n matrix: monomials are n-cycles, ranked by
//     the Lehmer code of the visiting order after vertex 0.
//   * KLifted(base, k): every variable replaced by a sum of k fresh variables.
//
// Matrix-indexed variables use row-major layout, variable (i, j) = i * n + j.
// A lifted variable (i, c), the c-th copy of base variable i, has index
// i * k + c, so the k copies of a base variable form a contiguous block.

#ifndef QFS_ESPOLY_HPP
#define QFS_ESPOLY_HPP

#include <bit>
#include <cmath>
#include <numbers>
#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"
#include "qfs/core.hpp"

namespace qfs::espoly {

enum class Family { Permanent, HamiltonianCycle, KLifted };

inline const char *to_string(Family f) {
    switch (f) {
        case Family::Permanent: return "permanent";
        case Family::HamiltonianCycle: return "hamiltonian_cycle";
        case Family::KLifted: return "k_lifted";
    }
    return "unknown";
}

/// Largest matrix dimension accepted by the matrix families.
inline constexpr unsigned kMaxMatrixDim = 64;
/// Largest monomial count (in bits) a lift may produce.
inline constexpr unsigned kMaxMonomialCountBits = 1024;

class PolynomialSpec {
   public:
    static PolynomialSpec permanent(unsigned n) { return PolynomialSpec(Family::Permanent, n, 0); }
    static PolynomialSpec hamiltonian_cycle(unsigned n) { return PolynomialSpec(Family::HamiltonianCycle, n, 0); }

    Family family() const noexcept { return lift_k_ ? Family::KLifted : base_family_; }
    Family base_family() const noexcept { return base_family_; }
    bool is_lifted() const noexcept { return lift_k_ != 0; }
    std::optional<unsigned> lift_k() const {
        return lift_k_ ? std::optional<unsigned>(lift_k_) : std::nullopt;
    }
    /// Lift factor, 1 for an unlifted spec.
    unsigned copies() const noexcept { return lift_k_ ? lift_k_ : 1; }
    unsigned matrix_dim() const noexcept { return n_; }

    PolynomialSpec base() const { return PolynomialSpec(base_family_, n_, 0); }

    std::size_t base_n_vars() const noexcept { return std::size_t{n_} * n_; }
    std::size_t n_vars() const noexcept { return base_n_vars() * copies(); }
    unsigned degree() const noexcept { return n_; }
    const BigInt &monomial_count() const noexcept { return m_; }
    const BigInt &base_monomial_count() const noexcept { return base_m_; }

    /// Monomial count as an integer, or TooLarge above `limit`.
    std::uint64_t monomial_count_within(std::uint64_t limit) const {
        if (m_ > limit) {
            fail(ErrorCode::TooLarge, "monomial count " + m_.str() + " exceeds enumeration guard " + std::to_string(limit));
        }
        return static_cast<std::uint64_t>(m_);
    }

    std::string name() const {
        std::string s = std::string(to_string(base_family_)) + "(n=" + std::to_string(n_);
        if (lift_k_) s += ", k=" + std::to_string(lift_k_);
        return s + ")";
    }

    bool operator==(const PolynomialSpec &o) const {
        return base_family_ == o.base_family_ && n_ == o.n_ && lift_k_ == o.lift_k_;
    }

   private:
    friend PolynomialSpec lift_k_equivalent(const PolynomialSpec &spec, unsigned k);

    PolynomialSpec(Family family, unsigned n, unsigned k) : base_family_(family), n_(n), lift_k_(k) {
        if (n == 0 || n > kMaxMatrixDim) {
            fail(ErrorCode::InvalidArgument, "matrix dimension must be in [1, " + std::to_string(kMaxMatrixDim) + "]");
        }
        base_m_ = family == Family::Permanent ? factorial(n) : factorial(n - 1);
        m_ = base_m_ * big_pow(BigInt(copies()), n);
    }

    Family base_family_;
    unsigned n_;
    unsigned lift_k_;  // 0 when not lifted
    BigInt base_m_;
    BigInt m_;
};

/// Returns the k-valued equivalent of `spec`: each variable is replaced by the
/// sum of k fresh variables. k = 1 relabels nothing and keeps m.
inline PolynomialSpec lift_k_equivalent(const PolynomialSpec &spec, unsigned k) {
    if (k == 0) fail(ErrorCode::InvalidArgument, "lift factor k must be >= 1");
    if (spec.is_lifted()) fail(ErrorCode::UnsupportedFamily, "lifting an already lifted spec is not supported");
    const BigInt m = spec.monomial_count() * big_pow(BigInt(k), spec.degree());
    if (boost::multiprecision::msb(m) >= kMaxMonomialCountBits) {
        fail(ErrorCode::Overflow, "lifted monomial count exceeds " + std::to_string(kMaxMonomialCountBits) + " bits");
    }
    return PolynomialSpec(spec.base_family(), spec.matrix_dim(), k);
}

struct MonomialIndex {
    BigInt value;
    bool operator==(const MonomialIndex &) const = default;
};

/// Variable-incidence vector of one monomial, packed 64 bits per word.
/// Serialized as a 0/1 string with variable 0 leftmost.
class MonomialMask {
   public:
    MonomialMask() = default;
    explicit MonomialMask(std::size_t size) : size_(size), words_((size + 63) / 64, 0) {}

    /// Parses '0'/'1' characters; '|' and whitespace are ignored as separators.
    static MonomialMask from_string(std::string_view text) {
        std::string bits;
        for (char c : text) {
            if (c == '0' || c == '1') {
                bits.push_back(c);
            } else if (c != '|' && c != ' ' && c != '\t' && c != '_') {
                fail(ErrorCode::InvalidArgument, std::string("unexpected character in mask: ") + c);
            }
        }
        MonomialMask mask(bits.size());
        for (std::size_t i = 0; i < bits.size(); ++i) {
            if (bits[i] == '1') mask.set(i);
        }
        return mask;
    }

    std::size_t size() const noexcept { return size_; }
    bool test(std::size_t i) const { return (words_[i >> 6] >> (i & 63)) & 1u; }
    void set(std::size_t i, bool value = true) {
        const std::uint64_t bit = std::uint64_t{1} << (i & 63);
        if (value) {
            words_[i >> 6] |= bit;
        } else {
            words_[i >> 6] &= ~bit;
        }
    }
    std::size_t count() const {
        std::size_t c = 0;
        for (auto w : words_) c += static_cast<std::size_t>(std::popcount(w));
        return c;
    }
    std::vector<std::uint32_t> positions() const {
        std::vector<std::uint32_t> out;
        for (std::size_t w = 0; w < words_.size(); ++w) {
            for (std::uint64_t bits = words_[w]; bits != 0; bits &= bits - 1) {
                out.push_back(static_cast<std::uint32_t>(w * 64 + std::countr_zero(bits)));
            }
        }
        return out;
    }
    std::string to_string() const {
        std::string s(size_, '0');
        for (std::size_t i = 0; i < size_; ++i) {
            if (test(i)) s[i] = '1';
        }
        return s;
    }
    bool operator==(const MonomialMask &) const = default;

   private:
    std::size_t size_ = 0;
    std::vector<std::uint64_t> words_;
};

/// A point at which a polynomial is evaluated: exponents of a primitive l-th
/// root of unity, or bounded integers.
class Assignment {
   public:
    enum class Mode { RootOfUnity, Integer };

    static Assignment roots(unsigned ell, std::vector<std::int64_t> exponents) {
        if (ell < 1) fail(ErrorCode::InvalidArgument, "ell must be >= 1");
        for (auto e : exponents) {
            if (e < 0 || e >= static_cast<std::int64_t>(ell)) {
                fail(ErrorCode::OutOfRange, "root exponent " + std::to_string(e) + " outside [0, " +
                                                std::to_string(ell - 1) + "]");
            }
        }
        return Assignment(Mode::RootOfUnity, ell, std::move(exponents));
    }

    static Assignment integers(unsigned k, std::vector<std::int64_t> values) {
        for (auto v : values) {
            if (v > static_cast<std::int64_t>(k) || v < -static_cast<std::int64_t>(k)) {
                fail(ErrorCode::OutOfRange, "integer value " + std::to_string(v) + " outside [-" + std::to_string(k) +
                                                ", " + std::to_string(k) + "]");
            }
        }
        return Assignment(Mode::Integer, k, std::move(values));
    }

    Mode mode() const noexcept { return mode_; }
    unsigned ell() const noexcept { return param_; }
    unsigned k() const noexcept { return param_; }
    std::span<const std::int64_t> values() const noexcept { return values_; }
    std::size_t size() const noexcept { return values_.size(); }

    /// Every value has the parity of k (only meaningful in Integer mode).
    bool parity_valid() const {
        for (auto v : values_) {
            if (((v % 2) + 2) % 2 != param_ % 2) return false;
        }
        return true;
    }

   private:
    Assignment(Mode mode, unsigned param, std::vector<std::int64_t> values)
        : mode_(mode), param_(param), values_(std::move(values)) {}

    Mode mode_;
    unsigned param_;
    std::vector<std::int64_t> values_;
};

namespace detail {

/// Lehmer-code digits of `rank`, most significant first; digit i < count - i.
template <class Int>
void lehmer_digits(Int rank, unsigned count, std::span<std::uint32_t> out) {
    for (unsigned i = count; i-- > 0;) {
        const unsigned radix = count - i;
        out[i] = static_cast<std::uint32_t>(rank % radix);
        rank /= radix;
    }
}

/// Permutation sigma (one-line notation) of rank `rank` in lexicographic order.
template <class Int>
void permutation_of_rank(const Int &rank, unsigned n, std::span<std::uint32_t> sigma) {
    std::uint32_t digits[kMaxMatrixDim];
    std::uint32_t list[kMaxMatrixDim];
    lehmer_digits(rank, n, std::span<std::uint32_t>(digits, n));
    for (unsigned i = 0; i < n; ++i) list[i] = i;
    unsigned remaining = n;
    for (unsigned i = 0; i < n; ++i) {
        const unsigned pos = digits[i];
        sigma[i] = list[pos];
        for (unsigned j = pos; j + 1 < remaining; ++j) list[j] = list[j + 1];
        --remaining;
    }
}

/// The n-cycle of rank `rank`: vertex 0 is fixed as the start, the visiting
/// order of the remaining vertices is the rank-th arrangement of {1..n-1}, and
/// the walk closes back to 0. Written as sigma(i) = successor of i.
template <class Int>
void cycle_of_rank(const Int &rank, unsigned n, std::span<std::uint32_t> sigma) {
    if (n == 1) {
        sigma[0] = 0;
        return;
    }
    std::uint32_t digits[kMaxMatrixDim];
    std::uint32_t list[kMaxMatrixDim];
    lehmer_digits(rank, n - 1, std::span<std::uint32_t>(digits, n - 1));
    for (unsigned i = 0; i + 1 < n; ++i) list[i] = i + 1;
    unsigned remaining = n - 1;
    std::uint32_t prev = 0;
    for (unsigned i = 0; i + 1 < n; ++i) {
        const unsigned pos = digits[i];
        const std::uint32_t next = list[pos];
        sigma[prev] = next;
        prev = next;
        for (unsigned j = pos; j + 1 < remaining; ++j) list[j] = list[j + 1];
        --remaining;
    }
    sigma[prev] = 0;
}

template <class Int>
Int rank_of_arrangement(std::span<const std::uint32_t> sequence, std::vector<std::uint32_t> list) {
    Int rank = 0;
    const unsigned count = static_cast<unsigned>(sequence.size());
    for (unsigned i = 0; i < count; ++i) {
        auto it = std::find(list.begin(), list.end(), sequence[i]);
        if (it == list.end()) fail(ErrorCode::InvalidMonomial, "sequence is not an arrangement");
        rank = rank * (count - i) + static_cast<unsigned>(it - list.begin());
        list.erase(it);
    }
    return rank;
}

/// Reads a permutation out of an n x n row-major 0/1 mask.
inline std::vector<std::uint32_t> permutation_of_mask(const MonomialMask &mask, unsigned n) {
    if (mask.size() != std::size_t{n} * n) {
        fail(ErrorCode::InvalidMonomial, "mask length " + std::to_string(mask.size()) + " != n^2");
    }
    std::vector<std::uint32_t> sigma(n, n);
    std::vector<bool> column_used(n, false);
    for (unsigned i = 0; i < n; ++i) {
        for (unsigned j = 0; j < n; ++j) {
            if (!mask.test(std::size_t{i} * n + j)) continue;
            if (sigma[i] != n || column_used[j]) fail(ErrorCode::InvalidMonomial, "mask is not a permutation matrix");
            sigma[i] = j;
            column_used[j] = true;
        }
        if (sigma[i] == n) fail(ErrorCode::InvalidMonomial, "mask row " + std::to_string(i) + " is empty");
    }
    return sigma;
}

inline void write_matrix_mask(std::span<const std::uint32_t> sigma, unsigned n, std::span<std::uint32_t> vars) {
    for (unsigned i = 0; i < n; ++i) vars[i] = i * n + sigma[i];
}

/// Sorted variable indices of base monomial `rank`.
template <class Int>
void base_monomial_variables(const PolynomialSpec &spec, const Int &rank, std::span<std::uint32_t> vars) {
    std::uint32_t sigma[kMaxMatrixDim];
    const unsigned n = spec.matrix_dim();
    if (spec.base_family() == Family::Permanent) {
        permutation_of_rank(rank, n, std::span<std::uint32_t>(sigma, n));
    } else {
        cycle_of_rank(rank, n, std::span<std::uint32_t>(sigma, n));
    }
    write_matrix_mask(std::span<const std::uint32_t>(sigma, n), n, vars);
}

/// Sorted variable indices of monomial `rank` of a possibly lifted spec. The
/// lifted index is x * k^d + (y_1 ... y_d in base k, y_1 most significant).
template <class Int>
void monomial_variables(const PolynomialSpec &spec, Int rank, std::span<std::uint32_t> vars) {
    const unsigned k = spec.copies();
    const unsigned d = spec.degree();
    if (k == 1) {
        base_monomial_variables(spec, rank, vars);
        return;
    }
    std::uint32_t copy[kMaxMatrixDim];
    for (unsigned l = d; l-- > 0;) {
        copy[l] = static_cast<std::uint32_t>(rank % k);
        rank /= k;
    }
    base_monomial_variables(spec, rank, vars);
    for (unsigned l = 0; l < d; ++l) vars[l] = vars[l] * k + copy[l];
}

/// Exact integer sum with an __int128 fast path that spills to BigInt.
class ExactAccumulator {
   public:
    void add(__int128 v) {
        __int128 r;
        if (__builtin_add_overflow(small_, v, &r)) {
            big_ += to_big(small_);
            small_ = v;
        } else {
            small_ = r;
        }
    }
    void add(const BigInt &v) { big_ += v; }
    BigInt value() const { return big_ + to_big(small_); }

    static BigInt to_big(__int128 v) {
        const bool negative = v < 0;
        unsigned __int128 u = negative ? -static_cast<unsigned __int128>(v) : static_cast<unsigned __int128>(v);
        BigInt r = static_cast<std::uint64_t>(u >> 64);
        r <<= 64;
        r += static_cast<std::uint64_t>(u);
        return negative ? BigInt(-r) : r;
    }

   private:
    __int128 small_ = 0;
    BigInt big_ = 0;
};

inline void add_monomial_product(ExactAccumulator &acc, std::span<const std::int64_t> x,
                                 std::span<const std::uint32_t> vars) {
    __int128 prod = 1;
    for (auto v : vars) {
        if (__builtin_mul_overflow(prod, static_cast<__int128>(x[v]), &prod)) {
            BigInt big = 1;
            for (auto w : vars) big *= x[w];
            acc.add(big);
            return;
        }
    }
    acc.add(prod);
}

inline void check_length(const PolynomialSpec &spec, std::size_t size) {
    if (size != spec.n_vars()) {
        fail(ErrorCode::LengthMismatch,
             "assignment length " + std::to_string(size) + " != n_vars " + std::to_string(spec.n_vars()));
    }
}

}  // namespace detail

/// h(z): the variable-incidence mask of monomial z.
inline MonomialMask monomial_of_index(const PolynomialSpec &spec, const MonomialIndex &z) {
    if (z.value < 0 || z.value >= spec.monomial_count()) {
        fail(ErrorCode::IndexOutOfRange, "monomial index " + z.value.str() + " not in [0, " + spec.monomial_count().str() + ")");
    }
    std::vector<std::uint32_t> vars(spec.degree());
    if (spec.monomial_count() <= std::numeric_limits<std::uint64_t>::max()) {
        detail::monomial_variables(spec, static_cast<std::uint64_t>(z.value), std::span<std::uint32_t>(vars));
    } else {
        detail::monomial_variables(spec, z.value, std::span<std::uint32_t>(vars));
    }
    MonomialMask mask(spec.n_vars());
    for (auto v : vars) mask.set(v);
    return mask;
}

/// h^{-1}: the index of a mask, or InvalidMonomial if the mask violates the
/// family's structure.
inline MonomialIndex index_of_monomial(const PolynomialSpec &spec, const MonomialMask &mask) {
    if (mask.size() != spec.n_vars()) {
        fail(ErrorCode::InvalidMonomial,
             "mask length " + std::to_string(mask.size()) + " != n_vars " + std::to_string(spec.n_vars()));
    }
    const unsigned n = spec.matrix_dim();
    const unsigned k = spec.copies();
    MonomialMask base_mask = mask;
    std::vector<std::uint32_t> copy_of_var;
    if (k > 1) {
        base_mask = MonomialMask(spec.base_n_vars());
        copy_of_var.assign(spec.base_n_vars(), 0);
        for (auto pos : mask.positions()) {
            const std::uint32_t var = pos / k;
            if (base_mask.test(var)) fail(ErrorCode::InvalidMonomial, "two copies of one base variable are set");
            base_mask.set(var);
            copy_of_var[var] = pos % k;
        }
    }
    const auto sigma = detail::permutation_of_mask(base_mask, n);
    BigInt rank;
    if (spec.base_family() == Family::Permanent) {
        std::vector<std::uint32_t> list(n);
        for (unsigned i = 0; i < n; ++i) list[i] = i;
        rank = detail::rank_of_arrangement<BigInt>(sigma, list);
    } else {
        std::vector<std::uint32_t> order;
        std::uint32_t v = 0;
        for (unsigned step = 0; step + 1 < n; ++step) {
            v = sigma[v];
            if (v == 0) fail(ErrorCode::InvalidMonomial, "permutation is not a single n-cycle");
            order.push_back(v);
        }
        if (sigma[v] != 0) fail(ErrorCode::InvalidMonomial, "permutation is not a single n-cycle");
        std::vector<std::uint32_t> list(n - 1);
        for (unsigned i = 0; i + 1 < n; ++i) list[i] = i + 1;
        rank = detail::rank_of_arrangement<BigInt>(order, list);
    }
    if (k > 1) {
        for (unsigned i = 0; i < n; ++i) {
            rank = rank * k + copy_of_var[std::size_t{i} * n + sigma[i]];
        }
    }
    return MonomialIndex{rank};
}

/// Flattened variable lists of every monomial, in index order.
class MonomialList {
   public:
    MonomialList(const PolynomialSpec &spec, const Guards &guards = {})
        : degree_(spec.degree()), count_(spec.monomial_count_within(guards.max_monomials)) {
        vars_.resize(count_ * degree_);
        for (std::uint64_t z = 0; z < count_; ++z) {
            detail::monomial_variables(spec, z, std::span<std::uint32_t>(vars_.data() + z * degree_, degree_));
        }
    }

    std::uint64_t size() const noexcept { return count_; }
    unsigned degree() const noexcept { return degree_; }
    std::span<const std::uint32_t> operator[](std::uint64_t z) const {
        return {vars_.data() + z * degree_, degree_};
    }

   private:
    unsigned degree_;
    std::uint64_t count_;
    std::vector<std::uint32_t> vars_;
};

/// Q evaluated at roots of unity, held exactly as a histogram of exponent
/// residues: Q = sum_r counts[r] * omega^r with omega = exp(2 pi i / ell).
struct RootSum {
    unsigned ell = 2;
    std::vector<std::int64_t> counts;

    std::complex<double> value() const {
        std::complex<double> s = 0;
        for (unsigned r = 0; r < ell; ++r) {
            const double angle = 2.0 * std::numbers::pi * static_cast<double>(r) / static_cast<double>(ell);
            s += static_cast<double>(counts[r]) * std::polar(1.0, angle);
        }
        return s;
    }

    /// |Q|^2 via exact residue autocorrelations, one cosine per lag.
    double norm_squared() const {
        double total = 0;
        for (unsigned lag = 0; lag < ell; ++lag) {
            __int128 auto_corr = 0;
            for (unsigned r = 0; r < ell; ++r) {
                auto_corr += static_cast<__int128>(counts[r]) * counts[(r + lag) % ell];
            }
            if (auto_corr == 0) continue;
            total += static_cast<double>(auto_corr) * std::cos(2.0 * std::numbers::pi * lag / static_cast<double>(ell));
        }
        return std::max(total, 0.0);
    }

    /// Exact |Q|^2 when Q is an integer (ell = 1 or 2).
    BigInt integer_norm_squared() const {
        if (ell > 2) fail(ErrorCode::InvalidArgument, "integer norm requires ell <= 2");
        const BigInt q = ell == 1 ? BigInt(counts[0]) : BigInt(counts[0]) - counts[1];
        return q * q;
    }
};

inline RootSum evaluate_roots_by_enumeration(const MonomialList &monomials, unsigned ell,
                                             std::span<const std::int64_t> exponents) {
    RootSum out{ell, std::vector<std::int64_t>(ell, 0)};
    for (std::uint64_t z = 0; z < monomials.size(); ++z) {
        std::int64_t e = 0;
        for (auto v : monomials[z]) e += exponents[v];
        ++out.counts[static_cast<std::size_t>(e % ell)];
    }
    return out;
}

inline BigInt evaluate_integer_by_enumeration(const MonomialList &monomials, std::span<const std::int64_t> x) {
    detail::ExactAccumulator acc;
    for (std::uint64_t z = 0; z < monomials.size(); ++z) detail::add_monomial_product(acc, x, monomials[z]);
    return acc.value();
}

/// Streams over all monomials without caching them.
template <class Fn>
void for_each_monomial(const PolynomialSpec &spec, const Guards &guards, Fn &&fn) {
    const std::uint64_t m = spec.monomial_count_within(guards.max_monomials);
    std::vector<std::uint32_t> vars(spec.degree());
    for (std::uint64_t z = 0; z < m; ++z) {
        detail::monomial_variables(spec, z, std::span<std::uint32_t>(vars));
        fn(std::span<const std::uint32_t>(vars));
    }
}

using Scalar = std::variant<BigInt, std::complex<double>>;

inline BigInt evaluate_integer_by_enumeration(const PolynomialSpec &spec, std::span<const std::int64_t> x,
                                              const Guards &guards = {}) {
    detail::check_length(spec, x.size());
    detail::ExactAccumulator acc;
    for_each_monomial(spec, guards, [&](std::span<const std::uint32_t> vars) { detail::add_monomial_product(acc, x, vars); });
    return acc.value();
}

inline RootSum evaluate_roots_by_enumeration(const PolynomialSpec &spec, unsigned ell,
                                             std::span<const std::int64_t> exponents, const Guards &guards = {}) {
    detail::check_length(spec, exponents.size());
    RootSum out{ell, std::vector<std::int64_t>(ell, 0)};
    for_each_monomial(spec, guards, [&](std::span<const std::uint32_t> vars) {
        std::int64_t e = 0;
        for (auto v : vars) e += exponents[v];
        ++out.counts[static_cast<std::size_t>(e % ell)];
    });
    return out;
}

/// Sum over all monomials of the product of the selected variable values.
/// Exact integer in Integer mode, complex double in RootOfUnity mode.
inline Scalar evaluate_by_enumeration(const PolynomialSpec &spec, const Assignment &x, const Guards &guards = {}) {
    if (x.mode() == Assignment::Mode::Integer) return evaluate_integer_by_enumeration(spec, x.values(), guards);
    return evaluate_roots_by_enumeration(spec, x.ell(), x.values(), guards).value();
}

// ---------------------------------------------------------------------------
// Fast evaluation: Ryser inclusion-exclusion for the permanent and a
// Held-Karp subset DP (paths from vertex 0) for the Hamiltonian cycle sum.

/// Largest matrix dimension accepted by evaluate_fast.
inline constexpr unsigned kMaxFastDim = 20;

namespace detail {

inline double log2_bound(std::span<const std::int64_t> a) {
    std::int64_t max_abs = 0;
    for (auto v : a) max_abs = std::max<std::int64_t>(max_abs, v < 0 ? -v : v);
    return std::log2(static_cast<double>(max_abs) + 1.0);
}

template <class T, class Acc>
Acc ryser(std::span<const T> a, unsigned n) {
    std::vector<T> row_sums(n, T(0));
    Acc total = Acc(0);
    const std::uint64_t subsets = std::uint64_t{1} << n;
    for (std::uint64_t g = 1; g < subsets; ++g) {
        const unsigned col = static_cast<unsigned>(std::countr_zero(g));
        const std::uint64_t gray = g ^ (g >> 1);
        const bool added = (gray >> col) & 1u;
        for (unsigned i = 0; i < n; ++i) {
            if (added) {
                row_sums[i] += a[std::size_t{i} * n + col];
            } else {
                row_sums[i] -= a[std::size_t{i} * n + col];
            }
        }
        Acc prod = Acc(row_sums[0]);
        for (unsigned i = 1; i < n; ++i) prod *= Acc(row_sums[i]);
        if (std::popcount(gray) & 1) {
            total -= prod;
        } else {
            total += prod;
        }
    }
    return (n & 1) ? Acc(-total) : total;
}

template <class T, class Acc>
Acc held_karp(std::span<const T> a, unsigned n) {
    if (n == 1) return Acc(a[0]);
    const unsigned others = n - 1;
    const std::uint64_t subsets = std::uint64_t{1} << others;
    std::vector<Acc> dp(subsets * others, Acc(0));
    auto at = [n](unsigned i, unsigned j) { return std::size_t{i} * n + j; };
    for (unsigned v = 0; v < others; ++v) dp[(std::uint64_t{1} << v) * others + v] = Acc(a[at(0, v + 1)]);
    for (std::uint64_t mask = 1; mask < subsets; ++mask) {
        for (unsigned v = 0; v < others; ++v) {
            if (!((mask >> v) & 1u)) continue;
            const Acc &val = dp[mask * others + v];
            if (val == Acc(0)) continue;
            for (unsigned w = 0; w < others; ++w) {
                if ((mask >> w) & 1u) continue;
                dp[(mask | (std::uint64_t{1} << w)) * others + w] += val * Acc(a[at(v + 1, w + 1)]);
            }
        }
    }
    Acc total = Acc(0);
    for (unsigned v = 0; v < others; ++v) total += dp[(subsets - 1) * others + v] * Acc(a[at(v + 1, 0)]);
    return total;
}

inline void check_fast_dim(const PolynomialSpec &spec) {
    if (spec.matrix_dim() > kMaxFastDim) {
        fail(ErrorCode::TooLarge, "fast evaluation supports n <= " + std::to_string(kMaxFastDim));
    }
}

/// Block sums of a lifted assignment (identity when k = 1).
template <class T>
std::vector<T> block_sums(std::span<const T> x, unsigned k) {
    std::vector<T> out(x.size() / k, T(0));
    for (std::size_t i = 0; i < x.size(); ++i) out[i / k] += x[i];
    return out;
}

}  // namespace detail

/// Integer-mode fast evaluation, exact. Picks __int128 when the magnitude
/// bound provably fits and BigInt otherwise.
inline BigInt evaluate_integer_fast(const PolynomialSpec &spec, std::span<const std::int64_t> x) {
    detail::check_length(spec, x.size());
    detail::check_fast_dim(spec);
    const unsigned n = spec.matrix_dim();
    const auto matrix = detail::block_sums<std::int64_t>(x, spec.copies());
    const std::span<const std::int64_t> a(matrix);
    const double entry_bits = detail::log2_bound(a);
    if (spec.base_family() == Family::Permanent) {
        const double bits = n * (std::log2(static_cast<double>(n)) + entry_bits) + n + 2;
        if (bits < 120) return detail::ExactAccumulator::to_big(detail::ryser<std::int64_t, __int128>(a, n));
        return detail::ryser<std::int64_t, BigInt>(a, n);
    }
    const double bits = std::log2(static_cast<double>(factorial(n - 1))) + n * entry_bits + 2;
    if (bits < 120) return detail::ExactAccumulator::to_big(detail::held_karp<std::int64_t, __int128>(a, n));
    return detail::held_karp<std::int64_t, BigInt>(a, n);
}

inline std::complex<double> evaluate_roots_fast(const PolynomialSpec &spec, unsigned ell,
                                                std::span<const std::int64_t> exponents) {
    detail::check_length(spec, exponents.size());
    detail::check_fast_dim(spec);
    std::vector<std::complex<double>> z(exponents.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
        z[i] = std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(exponents[i]) / static_cast<double>(ell));
    }
    const auto matrix = detail::block_sums<std::complex<double>>(z, spec.copies());
    const std::span<const std::complex<double>> a(matrix);
    using C = std::complex<double>;
    if (spec.base_family() == Family::Permanent) return detail::ryser<C, C>(a, spec.matrix_dim());
    return detail::held_karp<C, C>(a, spec.matrix_dim());
}

inline Scalar evaluate_fast(const PolynomialSpec &spec, const Assignment &x) {
    if (x.mode() == Assignment::Mode::Integer) return evaluate_integer_fast(spec, x.values());
    return evaluate_roots_fast(spec, x.ell(), x.values());
}

/// phi: sums each block of k consecutive +-1 entries.
inline Assignment collapse_assignment(std::span<const std::int64_t> x, unsigned k) {
    if (k == 0) fail(ErrorCode::InvalidArgument, "k must be >= 1");
    if (x.size() % k != 0) {
        fail(ErrorCode::LengthMismatch, "length " + std::to_string(x.size()) + " is not a multiple of k=" + std::to_string(k));
    }
    for (auto v : x) {
        if (v != 1 && v != -1) fail(ErrorCode::InvalidAlphabet, "collapse expects +-1 entries");
    }
    return Assignment::integers(k, detail::block_sums<std::int64_t>(x, k));
}

inline nlohmann::json spec_to_json(const PolynomialSpec &spec) {
    nlohmann::json j;
    j["family"] = to_string(spec.base_family());
    j["n"] = spec.matrix_dim();
    if (spec.is_lifted()) j["k"] = *spec.lift_k();
    return j;
}

inline Family parse_family(const std::string &name) {
    if (name == "permanent" || name == "per") return Family::Permanent;
    if (name == "hamiltonian_cycle" || name == "hc" || name == "hamiltonian-cycle") return Family::HamiltonianCycle;
    fail(ErrorCode::UnsupportedFamily, "unknown family '" + name + "'");
}

inline PolynomialSpec make_spec(Family family, unsigned n, std::optional<unsigned> k = std::nullopt) {
    if (family == Family::KLifted) fail(ErrorCode::UnsupportedFamily, "KLifted needs a base family");
    PolynomialSpec spec =
        family == Family::Permanent ? PolynomialSpec::permanent(n) : PolynomialSpec::hamiltonian_cycle(n);
    return k ? lift_k_equivalent(spec, *k) : spec;
}

inline PolynomialSpec spec_from_json(const nlohmann::json &j) {
    std::optional<unsigned> k;
    if (j.contains("k") && !j["k"].is_null()) k = j["k"].get<unsigned>();
    return make_spec(parse_family(j.at("family").get<std::string>()), j.at("n").get<unsigned>(), k);
}

}  // namespace qfs::espoly

#endif  // QFS_ESPOLY_HPP
