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

#include "qfs/dist.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>

#include "oracles.hpp"

namespace {

using namespace qfs;
using namespace qfs::dist;
using espoly::PolynomialSpec;

template <class Fn>
void expect_error(ErrorCode code, Fn &&fn) {
    try {
        fn();
        ADD_FAILURE() << "expected " << to_string(code);
    } catch (const Error &e) {
        EXPECT_EQ(e.code(), code) << e.what();
    }
}

// Matrix polynomial at root-of-unity exponents, evaluated as complex numbers
// straight from the permutation sum.
std::complex<double> oracle_roots_value(const std::vector<std::int64_t> &y, unsigned ell, unsigned n, bool cycles) {
    std::vector<unsigned> p(n);
    std::iota(p.begin(), p.end(), 0u);
    std::complex<double> total = 0;
    do {
        if (cycles && !oracle::is_single_cycle(p)) continue;
        std::int64_t e = 0;
        for (unsigned i = 0; i < n; ++i) e += y[i * n + p[i]];
        total += std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(e % ell) / ell);
    } while (std::next_permutation(p.begin(), p.end()));
    return total;
}

TEST(Dist, roots_table_permanent_two_binary) {
    const auto t = exact_table_roots(PolynomialSpec::permanent(2), 2);
    ASSERT_EQ(t.size(), 16u);
    ASSERT_TRUE(t.is_exact());
    int eighths = 0;
    for (const auto &p : t.exact_probs()) {
        if (p == Rational(1, 8)) {
            ++eighths;
        } else {
            EXPECT_EQ(p, 0);
        }
    }
    EXPECT_EQ(eighths, 8);
}

TEST(Dist, roots_table_matches_brute_force_binary) {
    for (bool cycles : {false, true}) {
        for (unsigned n : {2u, 3u}) {
            const auto spec = cycles ? PolynomialSpec::hamiltonian_cycle(n) : PolynomialSpec::permanent(n);
            const auto t = exact_table_roots(spec, 2);
            const std::size_t vars = n * n;
            const oracle::Big m = cycles ? oracle::Big(n == 2 ? 1 : 2) : oracle::Big(n == 2 ? 2 : 6);
            for (std::uint64_t idx = 0; idx < t.size(); ++idx) {
                std::vector<std::int64_t> a(vars);
                for (std::size_t p = 0; p < vars; ++p) a[p] = ((idx >> (vars - 1 - p)) & 1u) ? -1 : 1;
                const auto q = oracle::matrix_polynomial(a, n, cycles);
                EXPECT_EQ(t.exact_probs()[idx], oracle::Frac(q * q, m << vars)) << n << " " << idx;
            }
            EXPECT_EQ(t.exact_probs()[0], Rational(spec.monomial_count(), BigInt(1) << vars));
        }
    }
}

TEST(Dist, roots_table_higher_ell_matches_oracle) {
    for (unsigned ell : {3u, 4u}) {
        const auto spec = PolynomialSpec::permanent(2);
        const auto t = exact_table_roots(spec, ell);
        EXPECT_EQ(t.arithmetic(), Arithmetic::Double);
        for (std::uint64_t idx = 0; idx < t.size(); ++idx) {
            const auto d = t.digits(idx);
            const std::vector<std::int64_t> y(d.begin(), d.end());
            const double expected = std::norm(oracle_roots_value(y, ell, 2, false)) / (std::pow(ell, 4) * 2);
            EXPECT_NEAR(t[idx], expected, 1e-12);
        }
    }
    const auto t = exact_table_roots(PolynomialSpec::permanent(3), 4);
    double total = 0;
    for (double p : t.probs()) total += p;
    EXPECT_NEAR(total, 1.0, 1e-9);
}

TEST(Dist, roots_table_normalizes_for_several_ell) {
    for (unsigned ell : {2u, 3u, 4u, 8u}) {
        EXPECT_NO_THROW(exact_table_roots(PolynomialSpec::permanent(2), ell)) << ell;
    }
    for (unsigned ell : {2u, 3u}) {
        EXPECT_NO_THROW(exact_table_roots(PolynomialSpec::hamiltonian_cycle(3), ell, {}, 2)) << ell;
    }
}

TEST(Dist, roots_table_errors) {
    expect_error(ErrorCode::InvalidArgument, [] { exact_table_roots(PolynomialSpec::permanent(2), 1); });
    expect_error(ErrorCode::TooLarge, [] { exact_table_roots(PolynomialSpec::permanent(6), 2); });
    Guards tight;
    tight.max_states = 8;
    expect_error(ErrorCode::TooLarge, [&] { exact_table_roots(PolynomialSpec::permanent(2), 2, tight); });
}

TEST(Dist, orbit_weight_examples) {
    const std::vector<std::int64_t> zero{0, 0};
    const std::vector<std::int64_t> extreme{2, -2};
    EXPECT_EQ(orbit_weight(zero, 2), 4);
    EXPECT_EQ(orbit_weight(extreme, 2), 1);
    BigInt total = 0;
    for (std::int64_t a = -3; a <= 3; a += 2) {
        for (std::int64_t b = -3; b <= 3; b += 2) {
            const std::vector<std::int64_t> y{a, b};
            total += orbit_weight(y, 3);
        }
    }
    EXPECT_EQ(total, BigInt(1) << 6);
    EXPECT_EQ(orbit_weight(Assignment::integers(2, {0, 2})), 2);
}

TEST(Dist, orbit_weight_errors) {
    const std::vector<std::int64_t> odd{1, 0};
    const std::vector<std::int64_t> wide{4, 0};
    expect_error(ErrorCode::ParityViolation, [&] { orbit_weight(odd, 2); });
    expect_error(ErrorCode::OutOfRange, [&] { orbit_weight(wide, 2); });
}

TEST(Dist, squashed_table_permanent_two) {
    const auto spec = PolynomialSpec::permanent(2);
    const auto t = exact_table_squashed(spec, 2);
    ASSERT_EQ(t.size(), 81u);
    ASSERT_EQ(t.class_k(), 2u);
    Rational total = 0;
    for (std::uint64_t idx = 0; idx < t.size(); ++idx) {
        total += t.exact_probs()[idx];
        const auto y = t.outcome(idx);
        const auto q = oracle::matrix_polynomial(y, 2, false);
        if (q == 0) {
            EXPECT_EQ(t.exact_probs()[idx], 0);
        }
        oracle::Big orbit = 1;
        for (auto v : y) orbit *= oracle::binom(2, static_cast<unsigned>((2 + v) / 2));
        EXPECT_EQ(t.exact_probs()[idx], oracle::Frac(q * q * orbit, oracle::Big(256) * 8));
    }
    EXPECT_EQ(total, 1);
}

TEST(Dist, squashed_normalization_identity) {
    for (unsigned k : {1u, 2u, 3u}) {
        oracle::Big lhs = 0;
        const unsigned n = 2;
        const std::size_t vars = 4;
        std::vector<std::int64_t> y(vars);
        const std::uint64_t outcomes = static_cast<std::uint64_t>(std::pow(k + 1, vars));
        for (std::uint64_t idx = 0; idx < outcomes; ++idx) {
            std::uint64_t rest = idx;
            oracle::Big orbit = 1;
            for (std::size_t p = vars; p-- > 0;) {
                const unsigned c = rest % (k + 1);
                rest /= k + 1;
                y[p] = 2 * static_cast<std::int64_t>(c) - k;
                orbit *= oracle::binom(k, c);
            }
            const auto q = oracle::matrix_polynomial(y, n, false);
            lhs += q * q * orbit;
        }
        oracle::Big k_pow_d = 1;
        for (unsigned i = 0; i < n; ++i) k_pow_d *= k;
        EXPECT_EQ(lhs, (oracle::Big(1) << (k * vars)) * k_pow_d * 2) << k;
        const auto t = exact_table_squashed(PolynomialSpec::permanent(2), k);
        EXPECT_NO_THROW(t.validate());
    }
}

TEST(Dist, squashed_equals_pushforward_of_lifted_roots) {
    struct Case {
        PolynomialSpec spec;
        unsigned k;
    };
    const std::vector<Case> cases{{PolynomialSpec::permanent(2), 1}, {PolynomialSpec::permanent(2), 2},
                                  {PolynomialSpec::permanent(2), 3}, {PolynomialSpec::permanent(2), 4},
                                  {PolynomialSpec::hamiltonian_cycle(2), 4}, {PolynomialSpec::hamiltonian_cycle(3), 1},
                                  {PolynomialSpec::permanent(3), 1}};
    for (const auto &c : cases) {
        const auto squashed = exact_table_squashed(c.spec, c.k);
        const auto lifted = exact_table_roots(espoly::lift_k_equivalent(c.spec, c.k), 2);
        const auto pushed = collapse_table(lifted, c.k);
        ASSERT_TRUE(pushed.same_shape(squashed));
        for (std::uint64_t i = 0; i < squashed.size(); ++i) {
            ASSERT_EQ(pushed.exact_probs()[i], squashed.exact_probs()[i]) << c.spec.name() << " k=" << c.k << " i=" << i;
        }
    }
}

TEST(Dist, fold_tables) {
    const std::vector<int> constant(8, 1);
    auto t = exact_table_fold(constant);
    EXPECT_EQ(t[0], 1.0);
    for (std::uint64_t i = 1; i < t.size(); ++i) EXPECT_EQ(t[i], 0.0);

    const std::vector<int> first_bit{1, 1, -1, -1};
    t = exact_table_fold(first_bit);
    EXPECT_EQ(t[0b10], 1.0);
    EXPECT_EQ(t[0b00] + t[0b01] + t[0b11], 0.0);

    RandomSource rng(7);
    std::vector<int> f(256);
    for (auto &v : f) v = (rng.bits() & 1) ? 1 : -1;
    t = exact_table_fold(f);
    double total = 0;
    for (double p : t.probs()) total += p;
    EXPECT_NEAR(total, 1.0, 1e-12);
    for (std::uint64_t y = 0; y < 256; y += 37) {
        double coefficient = 0;
        for (std::uint64_t x = 0; x < 256; ++x) coefficient += ((std::popcount(x & y) & 1) ? -1 : 1) * f[x];
        EXPECT_DOUBLE_EQ(t[y], coefficient * coefficient / 65536.0);
    }
}

TEST(Dist, fold_errors) {
    const std::vector<int> bad{1, 0};
    const std::vector<int> odd_length{1, 1, 1};
    expect_error(ErrorCode::InvalidAlphabet, [&] { exact_table_fold(bad); });
    expect_error(ErrorCode::LengthMismatch, [&] { exact_table_fold(odd_length); });
    const std::vector<int> huge(std::size_t{1} << 21, 1);
    expect_error(ErrorCode::TooLarge, [&] { exact_table_fold(huge); });
}

TEST(Dist, variance_examples) {
    const auto report = variance(PolynomialSpec::permanent(2), 2);
    EXPECT_EQ(report.closed_form, 8);
    EXPECT_TRUE(report.forms_agree());

    oracle::Big total = 0;
    for (unsigned bits = 0; bits < 256; ++bits) {
        std::vector<std::int64_t> y(4);
        for (unsigned v = 0; v < 4; ++v) {
            const int a = (bits >> (2 * v)) & 1 ? -1 : 1;
            const int b = (bits >> (2 * v + 1)) & 1 ? -1 : 1;
            y[v] = a + b;
        }
        const auto q = oracle::matrix_polynomial(y, 2, false);
        total += q * q;
    }
    EXPECT_EQ(total, 8 * 256);

    for (unsigned n = 2; n <= 5; ++n) {
        EXPECT_EQ(variance(PolynomialSpec::hamiltonian_cycle(n), 1).closed_form, factorial(n - 1));
        EXPECT_EQ(variance(PolynomialSpec::permanent(n), 1).closed_form, factorial(n));
    }
}

TEST(Dist, binomial_second_moment_identity) {
    for (unsigned k = 1; k <= 30; ++k) {
        oracle::Big lhs = 0;
        for (unsigned i = 0; i <= k; ++i) {
            const oracle::Big c = static_cast<std::int64_t>(k) - 2 * static_cast<std::int64_t>(i);
            lhs += oracle::binom(k, i) * c * c;
        }
        EXPECT_EQ(lhs, oracle::Big(k) << k) << k;
        EXPECT_EQ(binomial_second_moment_sum(k), BigInt(k) << k);
        EXPECT_TRUE(variance(PolynomialSpec::permanent(3), k).forms_agree()) << k;
    }
}

TEST(Dist, variance_empirical_within_bound) {
    RandomSource rng(11);
    const std::uint64_t samples = 20000;
    for (unsigned k : {1u, 2u, 4u}) {
        const auto report = variance(PolynomialSpec::permanent(3), k, samples, &rng);
        ASSERT_TRUE(report.empirical.has_value());
        const double closed = static_cast<double>(report.closed_form);
        EXPECT_LE(std::abs(*report.empirical - closed), 5 * closed / std::sqrt(samples)) << k;
    }
}

TEST(Dist, binomial_sampling_statistics) {
    RandomSource rng(3);
    const std::size_t draws = 100000;
    std::array<std::size_t, 3> k1{};
    std::array<std::size_t, 5> k2{};
    double sum6 = 0;
    for (std::size_t i = 0; i < draws; ++i) {
        k1[(sample_binomial_value(1, rng) + 1)]++;
        k2[(sample_binomial_value(2, rng) + 2)]++;
        sum6 += static_cast<double>(sample_binomial_value(6, rng));
    }
    EXPECT_EQ(k1[1], 0u);
    const double sd_half = std::sqrt(draws * 0.25);
    EXPECT_NEAR(static_cast<double>(k1[2]), draws / 2.0, 5 * sd_half);
    EXPECT_EQ(k2[1] + k2[3], 0u);
    EXPECT_NEAR(static_cast<double>(k2[2]), draws / 2.0, 5 * sd_half);
    EXPECT_NEAR(static_cast<double>(k2[0]), draws / 4.0, 5 * std::sqrt(draws * 0.1875));
    EXPECT_NEAR(sum6 / draws, 0.0, 4 * std::sqrt(6.0 / draws));

    const auto draw = sample_binomial_assignment(PolynomialSpec::permanent(3), 5, rng);
    EXPECT_FALSE(draw.approximate);
    EXPECT_EQ(draw.assignment.size(), 9u);
    EXPECT_TRUE(draw.assignment.parity_valid());

    const auto big = sample_binomial_assignment(4, kExactBinomialLimit + 2, rng);
    EXPECT_TRUE(big.approximate);
    EXPECT_TRUE(big.assignment.parity_valid());
}

TEST(Dist, sampling_is_reproducible) {
    RandomSource a(42, 5);
    RandomSource b(42, 5);
    for (int i = 0; i < 100; ++i) EXPECT_EQ(sample_binomial_value(9, a), sample_binomial_value(9, b));
    RandomSource c(42, 6);
    RandomSource d(42, 5);
    int same = 0;
    for (int i = 0; i < 100; ++i) same += c.bits() == d.bits();
    EXPECT_LT(same, 2);
}

TEST(Dist, sample_from_table_frequencies) {
    const auto t = exact_table_roots(PolynomialSpec::permanent(2), 3);
    TableSampler sampler(t);
    RandomSource rng(99);
    const std::size_t draws = 100000;
    std::vector<std::size_t> counts(t.size());
    for (std::size_t i = 0; i < draws; ++i) counts[sampler.draw(rng)]++;
    for (std::uint64_t i = 0; i < t.size(); ++i) {
        const double p = t[i];
        if (p < 1e-15) {
            EXPECT_EQ(counts[i], 0u);
            continue;
        }
        EXPECT_NEAR(static_cast<double>(counts[i]) / draws, p, 5 * std::sqrt(p * (1 - p) / draws)) << i;
    }
    EXPECT_EQ(sampler.at(0.0), 0u);
}

TEST(Dist, zero_entries_never_drawn) {
    const auto t = ProbabilityTable::real(2, 2, {0.0, 0.5, 0.0, 0.5});
    TableSampler sampler(t);
    EXPECT_EQ(sampler.at(0.0), 1u);
    EXPECT_EQ(sampler.at(0.4999), 1u);
    EXPECT_EQ(sampler.at(0.5), 3u);
    EXPECT_EQ(sampler.at(0.9999999999), 3u);
}

TEST(Dist, tv_distance_examples) {
    const auto t = exact_table_roots(PolynomialSpec::permanent(2), 2);
    EXPECT_EQ(tv_distance(t, t), 0.0);
    EXPECT_EQ(tv_distance_exact(t, t), 0);
    const auto a = ProbabilityTable::exact(2, 1, {Rational(1), Rational(0)});
    const auto b = ProbabilityTable::exact(2, 1, {Rational(0), Rational(1)});
    EXPECT_EQ(tv_distance(a, b), 1.0);
    EXPECT_EQ(tv_distance_exact(a, b), 1);
    const auto c = ProbabilityTable::real(3, 1, {1.0, 0.0, 0.0});
    expect_error(ErrorCode::ShapeMismatch, [&] { tv_distance(a, c); });
}

TEST(Dist, table_validation) {
    expect_error(ErrorCode::NormalizationFailure, [] { ProbabilityTable::real(2, 1, {0.5, 0.4}).validate(); });
    expect_error(ErrorCode::NormalizationFailure,
                 [] { ProbabilityTable::exact(2, 1, {Rational(3, 2), Rational(-1, 2)}).validate(); });
    expect_error(ErrorCode::ShapeMismatch, [] { ProbabilityTable::real(2, 2, {1.0}); });
}

TEST(Dist, json_and_csv_round_trip) {
    const auto t = exact_table_squashed(PolynomialSpec::permanent(2), 1);
    const auto j = table_to_json(t);
    EXPECT_EQ(j["probs"][0].get<std::string>(), to_fraction_string(t.exact_probs()[0]));
    const auto back = table_from_json(j);
    ASSERT_TRUE(back.is_exact());
    EXPECT_EQ(tv_distance_exact(t, back), 0);
    EXPECT_EQ(back.class_k(), 1u);

    const auto r = exact_table_roots(PolynomialSpec::permanent(2), 3);
    const auto rback = table_from_json(table_to_json(r));
    EXPECT_EQ(tv_distance(r, rback), 0.0);

    std::ostringstream csv;
    write_table_csv(csv, exact_table_squashed(PolynomialSpec::permanent(2), 2));
    const std::string text = csv.str();
    EXPECT_EQ(text.substr(0, text.find('\n')), "index,outcome,probability");
    EXPECT_NE(text.find("\n0,-2 -2 -2 -2,"), std::string::npos);
}

}  // namespace
