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

// Exact target distributions and the sampling utilities around them.
//
// Tables are dense over a mixed-radix outcome space with position 0 most
// significant. Three families are built here:
//
//   roots     radix ell, Pr[y] = |Q(omega^y)|^2 / (ell^n m)
//   squashed  radix k+1, one digit c per variable counting the +1 entries of
//             its block, value y = 2c - k; Pr[y] = Q(y)^2 orbit(y) / (2^{kn} Var)
//   fold      radix 2, Pr[y] = (Walsh-Hadamard transform of f at y)^2 / 2^{2n}

#ifndef QFS_DIST_HPP
#define QFS_DIST_HPP

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "qfs/core.hpp"
#include "qfs/espoly.hpp"

namespace qfs::dist {

using espoly::Assignment;
using espoly::PolynomialSpec;

enum class Arithmetic { ExactRational, Double };

inline constexpr double kDoubleNormTolerance = 1e-9;

class ProbabilityTable {
   public:
    ProbabilityTable() = default;

    static ProbabilityTable exact(std::uint32_t radix, std::size_t length, std::vector<Rational> probs,
                                  std::optional<unsigned> class_k = std::nullopt) {
        ProbabilityTable t(radix, length, Arithmetic::ExactRational, class_k);
        t.check_size(probs.size());
        t.probs_.resize(probs.size());
        for (std::size_t i = 0; i < probs.size(); ++i) t.probs_[i] = static_cast<double>(probs[i]);
        t.exact_ = std::move(probs);
        return t;
    }

    static ProbabilityTable real(std::uint32_t radix, std::size_t length, std::vector<double> probs,
                                 std::optional<unsigned> class_k = std::nullopt) {
        ProbabilityTable t(radix, length, Arithmetic::Double, class_k);
        t.check_size(probs.size());
        t.probs_ = std::move(probs);
        return t;
    }

    std::uint32_t radix() const noexcept { return radix_; }
    std::size_t length() const noexcept { return length_; }
    std::uint64_t size() const noexcept { return probs_.size(); }
    Arithmetic arithmetic() const noexcept { return arithmetic_; }
    bool is_exact() const noexcept { return arithmetic_ == Arithmetic::ExactRational; }
    /// Set for class-indexed (squashed) tables: digit c stands for y = 2c - k.
    std::optional<unsigned> class_k() const noexcept { return class_k_; }

    std::span<const double> probs() const noexcept { return probs_; }
    std::span<const Rational> exact_probs() const noexcept { return exact_; }
    double operator[](std::uint64_t i) const { return probs_[i]; }

    std::vector<std::uint32_t> digits(std::uint64_t index) const { return digits_of(index, radix_, length_); }

    /// Outcome tuple: digits, or signed values y = 2c - k for class tables.
    std::vector<std::int64_t> outcome(std::uint64_t index) const {
        const auto d = digits(index);
        std::vector<std::int64_t> out(d.begin(), d.end());
        if (class_k_) {
            for (auto &v : out) v = 2 * v - static_cast<std::int64_t>(*class_k_);
        }
        return out;
    }

    /// Entries non-negative and summing to 1 (exactly, or within 1e-9).
    void validate() const {
        if (is_exact()) {
            Rational total = 0;
            for (const auto &p : exact_) {
                if (p < 0) fail(ErrorCode::NormalizationFailure, "negative probability");
                total += p;
            }
            if (total != 1) fail(ErrorCode::NormalizationFailure, "table sums to " + to_fraction_string(total));
            return;
        }
        double total = 0;
        for (double p : probs_) {
            if (p < 0) fail(ErrorCode::NormalizationFailure, "negative probability");
            total += p;
        }
        if (std::abs(total - 1.0) > kDoubleNormTolerance) {
            fail(ErrorCode::NormalizationFailure, "table sums to " + std::to_string(total));
        }
    }

    bool same_shape(const ProbabilityTable &o) const { return radix_ == o.radix_ && length_ == o.length_; }

   private:
    ProbabilityTable(std::uint32_t radix, std::size_t length, Arithmetic arithmetic, std::optional<unsigned> class_k)
        : radix_(radix), length_(length), arithmetic_(arithmetic), class_k_(class_k) {
        if (radix == 0) fail(ErrorCode::InvalidArgument, "radix must be positive");
        if (class_k && *class_k + 1 != radix) fail(ErrorCode::ShapeMismatch, "class table radix must be k+1");
    }

    void check_size(std::size_t size) const {
        if (size != checked_power(radix_, length_, kStateCeiling)) {
            fail(ErrorCode::ShapeMismatch, "table has " + std::to_string(size) + " entries, expected radix^length");
        }
    }

    std::uint32_t radix_ = 1;
    std::size_t length_ = 0;
    Arithmetic arithmetic_ = Arithmetic::Double;
    std::optional<unsigned> class_k_;
    std::vector<double> probs_;
    std::vector<Rational> exact_;
};

// ---------------------------------------------------------------------------
// Table construction

/// Pr[y] = |Q(omega_ell^{y_1}, ...)|^2 / (ell^n m). Exact for ell = 2.
inline ProbabilityTable exact_table_roots(const PolynomialSpec &spec, unsigned ell, const Guards &guards = {},
                                          unsigned threads = 1) {
    if (ell < 2) fail(ErrorCode::InvalidArgument, "ell must be >= 2");
    const std::size_t n = spec.n_vars();
    const std::uint64_t outcomes = checked_power(ell, n, std::min(guards.max_states, kStateCeiling));
    const espoly::MonomialList monomials(spec, guards);
    const BigInt m = spec.monomial_count();

    if (ell == 2) {
        const BigInt denominator = (BigInt(1) << n) * m;
        std::vector<Rational> probs(outcomes);
        parallel_for(outcomes, threads, [&](std::uint64_t begin, std::uint64_t end) {
            std::vector<std::int64_t> y(n);
            for (std::uint64_t idx = begin; idx < end; ++idx) {
                for (std::size_t p = 0; p < n; ++p) y[p] = (idx >> (n - 1 - p)) & 1u;
                probs[idx] = Rational(espoly::evaluate_roots_by_enumeration(monomials, 2, y).integer_norm_squared(),
                                      denominator);
            }
        });
        auto table = ProbabilityTable::exact(2, n, std::move(probs));
        table.validate();
        return table;
    }

    const double denominator = std::pow(static_cast<double>(ell), static_cast<double>(n)) * static_cast<double>(m);
    std::vector<double> probs(outcomes);
    parallel_for(outcomes, threads, [&](std::uint64_t begin, std::uint64_t end) {
        std::vector<std::uint32_t> digits(n);
        std::vector<std::int64_t> y(n);
        for (std::uint64_t idx = begin; idx < end; ++idx) {
            digits_of(idx, ell, digits);
            std::copy(digits.begin(), digits.end(), y.begin());
            probs[idx] = espoly::evaluate_roots_by_enumeration(monomials, ell, y).norm_squared() / denominator;
        }
    });
    auto table = ProbabilityTable::real(ell, n, std::move(probs));
    table.validate();
    return table;
}

/// Number of {+-1}^{kn} preimages of y under phi: prod_i C(k, (k + y_i) / 2).
inline BigInt orbit_weight(std::span<const std::int64_t> y, unsigned k) {
    BigInt w = 1;
    for (auto v : y) {
        if (v > static_cast<std::int64_t>(k) || v < -static_cast<std::int64_t>(k)) {
            fail(ErrorCode::OutOfRange, "value " + std::to_string(v) + " outside [-k, k]");
        }
        if ((((v % 2) + 2) % 2) != k % 2) fail(ErrorCode::ParityViolation, "value " + std::to_string(v) + " has wrong parity");
        w *= binomial(k, static_cast<unsigned>((static_cast<std::int64_t>(k) + v) / 2));
    }
    return w;
}

inline BigInt orbit_weight(const Assignment &y) { return orbit_weight(y.values(), y.k()); }

/// sum_{i=0}^{k} C(k, i) (k - 2i)^2, the per-variable second moment times 2^k.
inline BigInt binomial_second_moment_sum(unsigned k) {
    BigInt s = 0;
    for (unsigned i = 0; i <= k; ++i) {
        const std::int64_t centered = static_cast<std::int64_t>(k) - 2 * static_cast<std::int64_t>(i);
        s += binomial(k, i) * centered * centered;
    }
    return s;
}

/// Var = k^d m: variance of Q under B(0,k)^n.
inline BigInt variance_closed_form(const PolynomialSpec &spec, unsigned k) {
    return big_pow(BigInt(k), spec.degree()) * spec.monomial_count();
}

/// Class-indexed table over [-k, k]^n. Exact rationals throughout.
inline ProbabilityTable exact_table_squashed(const PolynomialSpec &spec, unsigned k, const Guards &guards = {},
                                             unsigned threads = 1) {
    if (k == 0) fail(ErrorCode::InvalidArgument, "k must be >= 1");
    if (spec.is_lifted()) fail(ErrorCode::UnsupportedFamily, "squashed tables are built from the base polynomial");
    const std::size_t n = spec.n_vars();
    const std::uint32_t radix = k + 1;
    const std::uint64_t outcomes = checked_power(radix, n, std::min(guards.max_states, kStateCeiling));
    const espoly::MonomialList monomials(spec, guards);

    std::vector<BigInt> class_size(radix);
    for (unsigned c = 0; c <= k; ++c) class_size[c] = binomial(k, c);
    const BigInt normalizer = (BigInt(1) << (std::size_t{k} * n)) * variance_closed_form(spec, k);

    std::vector<BigInt> weighted(outcomes);
    parallel_for(outcomes, threads, [&](std::uint64_t begin, std::uint64_t end) {
        std::vector<std::uint32_t> digits(n);
        std::vector<std::int64_t> y(n);
        for (std::uint64_t idx = begin; idx < end; ++idx) {
            digits_of(idx, radix, digits);
            BigInt orbit = 1;
            for (std::size_t p = 0; p < n; ++p) {
                y[p] = 2 * static_cast<std::int64_t>(digits[p]) - static_cast<std::int64_t>(k);
                orbit *= class_size[digits[p]];
            }
            const BigInt q = espoly::evaluate_integer_by_enumeration(monomials, y);
            weighted[idx] = q * q * orbit;
        }
    });

    BigInt total = 0;
    for (const auto &w : weighted) total += w;
    if (total != normalizer) {
        fail(ErrorCode::NormalizationFailure,
             "sum Q^2 orbit = " + total.str() + " but 2^{kn} k^d m = " + normalizer.str());
    }
    std::vector<Rational> probs(outcomes);
    for (std::uint64_t i = 0; i < outcomes; ++i) probs[i] = Rational(weighted[i], normalizer);
    return ProbabilityTable::exact(radix, n, std::move(probs), k);
}

/// Pushforward of a {0,1}^{kn} table (bit 0 = +1) under phi onto the class
/// table over [-k, k]^n. Variables form contiguous blocks of k bits.
inline ProbabilityTable collapse_table(const ProbabilityTable &lifted, unsigned k) {
    if (lifted.radix() != 2) fail(ErrorCode::ShapeMismatch, "pushforward expects a radix-2 table");
    if (k == 0 || lifted.length() % k != 0) fail(ErrorCode::LengthMismatch, "table length is not a multiple of k");
    const std::size_t n = lifted.length() / k;
    const std::uint64_t outcomes = checked_power(k + 1, n, kStateCeiling);
    const std::size_t width = lifted.length();
    auto class_index = [&](std::uint64_t idx) {
        std::uint64_t out = 0;
        for (std::size_t block = 0; block < n; ++block) {
            unsigned plus = 0;
            for (unsigned c = 0; c < k; ++c) {
                const std::size_t position = block * k + c;
                if (!((idx >> (width - 1 - position)) & 1u)) ++plus;
            }
            out = out * (k + 1) + plus;
        }
        return out;
    };
    if (lifted.is_exact()) {
        std::vector<Rational> probs(outcomes, Rational(0));
        for (std::uint64_t idx = 0; idx < lifted.size(); ++idx) probs[class_index(idx)] += lifted.exact_probs()[idx];
        return ProbabilityTable::exact(k + 1, n, std::move(probs), k);
    }
    std::vector<double> probs(outcomes, 0.0);
    for (std::uint64_t idx = 0; idx < lifted.size(); ++idx) probs[class_index(idx)] += lifted[idx];
    return ProbabilityTable::real(k + 1, n, std::move(probs), k);
}

inline constexpr unsigned kMaxFoldBits = 20;

namespace detail {

inline unsigned truth_table_bits(std::span<const int> truth_table, unsigned max_bits) {
    if (truth_table.empty() || !std::has_single_bit(truth_table.size())) {
        fail(ErrorCode::LengthMismatch, "truth table length must be a power of two");
    }
    const unsigned n = static_cast<unsigned>(std::countr_zero(truth_table.size()));
    if (n > max_bits) fail(ErrorCode::TooLarge, "truth table over more than " + std::to_string(max_bits) + " bits");
    for (int v : truth_table) {
        if (v != 1 && v != -1) fail(ErrorCode::InvalidAlphabet, "truth table entries must be +-1");
    }
    return n;
}

}  // namespace detail

/// Pr[y] = (sum_x (-1)^{<x,y>} f(x))^2 / 2^{2n}. Integer transform, so every
/// entry is an exact dyadic rational even when stored as a double.
inline ProbabilityTable exact_table_fold(std::span<const int> truth_table) {
    const unsigned n = detail::truth_table_bits(truth_table, kMaxFoldBits);
    std::vector<std::int64_t> w(truth_table.begin(), truth_table.end());
    for (std::size_t half = 1; half < w.size(); half <<= 1) {
        for (std::size_t i = 0; i < w.size(); i += 2 * half) {
            for (std::size_t j = i; j < i + half; ++j) {
                const std::int64_t a = w[j];
                const std::int64_t b = w[j + half];
                w[j] = a + b;
                w[j + half] = a - b;
            }
        }
    }
    const double scale = std::ldexp(1.0, -2 * static_cast<int>(n));
    std::vector<double> probs(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) probs[i] = static_cast<double>(w[i] * w[i]) * scale;
    auto table = ProbabilityTable::real(2, n, std::move(probs));
    table.validate();
    return table;
}

// ---------------------------------------------------------------------------
// Sampling

inline constexpr unsigned kExactBinomialLimit = 1u << 20;

struct BinomialDraw {
    Assignment assignment;
    /// True when k exceeded kExactBinomialLimit and a rounded normal was used.
    bool approximate = false;
};

/// One coordinate of B(0,k): 2 Binomial(k, 1/2) - k.
inline std::int64_t sample_binomial_value(unsigned k, RandomSource &rng, bool *approximate = nullptr) {
    if (k <= kExactBinomialLimit) {
        std::uint64_t plus = 0;
        unsigned remaining = k;
        for (; remaining >= 64; remaining -= 64) plus += std::popcount(rng.bits());
        if (remaining > 0) plus += std::popcount(rng.bits() & ((std::uint64_t{1} << remaining) - 1));
        return 2 * static_cast<std::int64_t>(plus) - static_cast<std::int64_t>(k);
    }
    if (approximate) *approximate = true;
    const double mean = 0.5 * k;
    const double sd = 0.5 * std::sqrt(static_cast<double>(k));
    const double c = std::clamp(std::round(mean + sd * rng.normal()), 0.0, static_cast<double>(k));
    return 2 * static_cast<std::int64_t>(c) - static_cast<std::int64_t>(k);
}

inline BinomialDraw sample_binomial_assignment(std::size_t n_vars, unsigned k, RandomSource &rng) {
    if (k == 0) fail(ErrorCode::InvalidArgument, "k must be >= 1");
    bool approximate = false;
    std::vector<std::int64_t> values(n_vars);
    for (auto &v : values) v = sample_binomial_value(k, rng, &approximate);
    return BinomialDraw{Assignment::integers(k, std::move(values)), approximate};
}

inline BinomialDraw sample_binomial_assignment(const PolynomialSpec &spec, unsigned k, RandomSource &rng) {
    return sample_binomial_assignment(spec.n_vars(), k, rng);
}

/// Inverse-CDF sampler over a table. Zero-probability outcomes are never
/// returned; ties resolve to the lowest index.
class TableSampler {
   public:
    explicit TableSampler(std::span<const double> probs) : cdf_(probs.size()) {
        double running = 0;
        for (std::size_t i = 0; i < probs.size(); ++i) {
            running += probs[i];
            cdf_[i] = running;
        }
        if (cdf_.empty() || running <= 0) fail(ErrorCode::NormalizationFailure, "table has no mass");
    }
    explicit TableSampler(const ProbabilityTable &t) : TableSampler(t.probs()) {}

    /// Outcome for a uniform u in [0, 1).
    std::uint64_t at(double u) const {
        const double target = u * cdf_.back();
        auto it = std::upper_bound(cdf_.begin(), cdf_.end(), target);
        if (it == cdf_.end()) {
            // Rounding pushed u * total onto the last cumulative value.
            it = std::lower_bound(cdf_.begin(), cdf_.end(), cdf_.back());
        }
        return static_cast<std::uint64_t>(it - cdf_.begin());
    }

    std::uint64_t draw(RandomSource &rng) const { return at(rng.uniform01()); }

   private:
    std::vector<double> cdf_;
};

inline std::uint64_t sample_from_table(const ProbabilityTable &t, RandomSource &rng) { return TableSampler(t).draw(rng); }

inline double tv_distance(const ProbabilityTable &a, const ProbabilityTable &b) {
    if (!a.same_shape(b)) fail(ErrorCode::ShapeMismatch, "tables differ in radix or length");
    double total = 0;
    for (std::uint64_t i = 0; i < a.size(); ++i) total += std::abs(a[i] - b[i]);
    return 0.5 * total;
}

inline Rational tv_distance_exact(const ProbabilityTable &a, const ProbabilityTable &b) {
    if (!a.same_shape(b)) fail(ErrorCode::ShapeMismatch, "tables differ in radix or length");
    if (!a.is_exact() || !b.is_exact()) fail(ErrorCode::InvalidArgument, "exact TV needs two exact tables");
    Rational total = 0;
    for (std::uint64_t i = 0; i < a.size(); ++i) total += abs(a.exact_probs()[i] - b.exact_probs()[i]);
    return total / 2;
}

// ---------------------------------------------------------------------------
// Variance

struct VarianceReport {
    BigInt closed_form;                 // k^d m
    Rational sum_form;                  // m (sum_i C(k,i)(k-2i)^2)^d / 2^{kd}
    std::optional<double> empirical;    // mean of Q(y)^2 over y ~ B(0,k)^n
    std::uint64_t samples = 0;

    bool forms_agree() const { return sum_form == Rational(closed_form); }
};

inline VarianceReport variance(const PolynomialSpec &spec, unsigned k, std::uint64_t samples = 0,
                               RandomSource *rng = nullptr) {
    if (k == 0) fail(ErrorCode::InvalidArgument, "k must be >= 1");
    if (spec.is_lifted()) fail(ErrorCode::UnsupportedFamily, "variance is defined on the base polynomial");
    VarianceReport report;
    report.closed_form = variance_closed_form(spec, k);
    const unsigned d = spec.degree();
    report.sum_form = Rational(spec.monomial_count() * big_pow(binomial_second_moment_sum(k), d),
                               BigInt(1) << (std::size_t{k} * d));
    if (samples > 0) {
        if (!rng) fail(ErrorCode::InvalidArgument, "empirical variance needs a random source");
        double total = 0;
        for (std::uint64_t s = 0; s < samples; ++s) {
            const auto draw = sample_binomial_assignment(spec, k, *rng);
            const BigInt q = espoly::evaluate_integer_fast(spec, draw.assignment.values());
            total += static_cast<double>(q * q);
        }
        report.empirical = total / static_cast<double>(samples);
        report.samples = samples;
    }
    return report;
}

// ---------------------------------------------------------------------------
// Serialization

inline nlohmann::json table_to_json(const ProbabilityTable &t) {
    nlohmann::json j;
    j["radix"] = t.radix();
    j["length"] = t.length();
    j["arithmetic"] = t.is_exact() ? "exact" : "double";
    if (t.class_k()) j["class_k"] = *t.class_k();
    nlohmann::json probs = nlohmann::json::array();
    if (t.is_exact()) {
        for (const auto &p : t.exact_probs()) probs.push_back(to_fraction_string(p));
    } else {
        for (double p : t.probs()) probs.push_back(p);
    }
    j["probs"] = std::move(probs);
    return j;
}

inline ProbabilityTable table_from_json(const nlohmann::json &j) {
    const auto radix = j.at("radix").get<std::uint32_t>();
    const auto length = j.at("length").get<std::size_t>();
    std::optional<unsigned> class_k;
    if (j.contains("class_k")) class_k = j["class_k"].get<unsigned>();
    const auto &probs = j.at("probs");
    if (!probs.empty() && probs[0].is_string()) {
        std::vector<Rational> exact;
        exact.reserve(probs.size());
        for (const auto &p : probs) exact.push_back(parse_fraction(p.get<std::string>()));
        return ProbabilityTable::exact(radix, length, std::move(exact), class_k);
    }
    return ProbabilityTable::real(radix, length, probs.get<std::vector<double>>(), class_k);
}

/// index,outcome,probability with the outcome tuple space-separated.
inline void write_table_csv(std::ostream &out, const ProbabilityTable &t) {
    out << "index,outcome,probability\n";
    nlohmann::json number;
    for (std::uint64_t i = 0; i < t.size(); ++i) {
        out << i << ',';
        const auto o = t.outcome(i);
        for (std::size_t p = 0; p < o.size(); ++p) out << (p ? " " : "") << o[p];
        out << ',';
        if (t.is_exact()) {
            out << to_fraction_string(t.exact_probs()[i]);
        } else {
            number = t[i];
            out << number.dump();
        }
        out << '\n';
    }
}

}  // namespace qfs::dist

#endif  // QFS_DIST_HPP
