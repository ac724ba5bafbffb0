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

#include "qfs/espoly.hpp"

#include "gtest/gtest.h"

#include "oracles.hpp"

using namespace qfs;
using namespace qfs::espoly;

namespace {

std::string mask_at(const PolynomialSpec &spec, std::uint64_t z) {
    return monomial_of_index(spec, MonomialIndex{z}).to_string();
}

std::vector<std::int64_t> random_values(RandomSource &rng, std::size_t size, std::int64_t lo, std::int64_t hi) {
    std::vector<std::int64_t> v(size);
    for (auto &x : v) x = lo + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(hi - lo + 1)));
    return v;
}

}  // namespace

TEST(espoly, spec_invariants) {
    auto per = PolynomialSpec::permanent(4);
    EXPECT_EQ(per.n_vars(), 16u);
    EXPECT_EQ(per.degree(), 4u);
    EXPECT_EQ(per.monomial_count(), 24);
    EXPECT_EQ(per.family(), Family::Permanent);

    auto hc = PolynomialSpec::hamiltonian_cycle(5);
    EXPECT_EQ(hc.n_vars(), 25u);
    EXPECT_EQ(hc.monomial_count(), 24);

    auto lifted = lift_k_equivalent(PolynomialSpec::permanent(2), 2);
    EXPECT_EQ(lifted.family(), Family::KLifted);
    EXPECT_EQ(lifted.n_vars(), 8u);
    EXPECT_EQ(lifted.degree(), 2u);
    EXPECT_EQ(lifted.monomial_count(), 8);

    auto lifted3 = lift_k_equivalent(PolynomialSpec::hamiltonian_cycle(4), 3);
    EXPECT_EQ(lifted3.n_vars(), 48u);
    EXPECT_EQ(lifted3.monomial_count(), 6 * 81);
}

TEST(espoly, rejects_bad_specs) {
    EXPECT_THROW(PolynomialSpec::permanent(0), Error);
    EXPECT_THROW(lift_k_equivalent(PolynomialSpec::permanent(2), 0), Error);
    auto lifted = lift_k_equivalent(PolynomialSpec::permanent(2), 2);
    try {
        lift_k_equivalent(lifted, 2);
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.code(), ErrorCode::UnsupportedFamily);
    }
    try {
        lift_k_equivalent(PolynomialSpec::permanent(40), 1u << 30);
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.code(), ErrorCode::Overflow);
    }
}

TEST(espoly, permanent_unrank_examples) {
    EXPECT_EQ(mask_at(PolynomialSpec::permanent(2), 0), "1001");
    EXPECT_EQ(mask_at(PolynomialSpec::permanent(2), 1), "0110");
    EXPECT_EQ(mask_at(PolynomialSpec::permanent(3), 5), "001010100");
}

TEST(espoly, hamiltonian_cycle_unrank_examples) {
    auto hc = PolynomialSpec::hamiltonian_cycle(3);
    EXPECT_EQ(hc.monomial_count(), 2);
    // 0 -> 1 -> 2 -> 0 and 0 -> 2 -> 1 -> 0.
    EXPECT_EQ(mask_at(hc, 0), "010001100");
    EXPECT_EQ(mask_at(hc, 1), "001100010");
}

TEST(espoly, permanent_ranking_matches_lexicographic_enumeration) {
    for (unsigned n = 1; n <= 6; ++n) {
        auto spec = PolynomialSpec::permanent(n);
        const auto perms = oracle::permutations_lex(n);
        ASSERT_EQ(spec.monomial_count(), perms.size());
        for (std::size_t z = 0; z < perms.size(); ++z) {
            ASSERT_EQ(mask_at(spec, z), oracle::matrix_mask_string(perms[z])) << "n=" << n << " z=" << z;
        }
    }
}

TEST(espoly, hamiltonian_ranking_matches_visit_order_enumeration) {
    for (unsigned n = 1; n <= 6; ++n) {
        auto spec = PolynomialSpec::hamiltonian_cycle(n);
        const auto cycles = oracle::cycles_by_visit_order(n);
        ASSERT_EQ(spec.monomial_count(), cycles.size());
        for (std::size_t z = 0; z < cycles.size(); ++z) {
            ASSERT_EQ(mask_at(spec, z), oracle::matrix_mask_string(cycles[z])) << "n=" << n << " z=" << z;
        }
    }
}

TEST(espoly, rank_examples) {
    EXPECT_EQ(index_of_monomial(PolynomialSpec::permanent(2), MonomialMask::from_string("1001")).value, 0);
    EXPECT_EQ(index_of_monomial(PolynomialSpec::permanent(3), MonomialMask::from_string("001|010|100")).value, 5);
}

TEST(espoly, round_trip_and_structure) {
    for (unsigned n = 1; n <= 5; ++n) {
        for (auto spec : {PolynomialSpec::permanent(n), PolynomialSpec::hamiltonian_cycle(n)}) {
            const auto m = static_cast<std::uint64_t>(spec.monomial_count());
            for (std::uint64_t z = 0; z < m; ++z) {
                auto mask = monomial_of_index(spec, MonomialIndex{z});
                ASSERT_EQ(mask.count(), spec.degree());
                std::vector<unsigned> succ(n);
                for (auto pos : mask.positions()) succ[pos / n] = pos % n;
                if (spec.base_family() == Family::HamiltonianCycle) {
                    ASSERT_TRUE(oracle::is_single_cycle(succ));
                }
                ASSERT_EQ(index_of_monomial(spec, mask).value, z);
            }
        }
    }
}

TEST(espoly, big_index_path_beyond_64_bits) {
    auto spec = PolynomialSpec::permanent(22);
    ASSERT_GT(spec.monomial_count(), BigInt(std::numeric_limits<std::uint64_t>::max()));
    const std::vector<BigInt> indices = {BigInt(0), BigInt(12345678901234567ull), BigInt(spec.monomial_count() / 3),
                                         BigInt(spec.monomial_count() - 1)};
    for (const BigInt &z : indices) {
        auto mask = monomial_of_index(spec, MonomialIndex{z});
        EXPECT_EQ(mask.count(), 22u);
        EXPECT_EQ(index_of_monomial(spec, mask).value, z);
    }
    // The last permutation in lexicographic order is the reversal.
    auto last = monomial_of_index(spec, MonomialIndex{spec.monomial_count() - 1});
    for (unsigned i = 0; i < 22; ++i) EXPECT_TRUE(last.test(i * 22 + (21 - i)));
}

TEST(espoly, ranking_errors) {
    auto per = PolynomialSpec::permanent(3);
    try {
        monomial_of_index(per, MonomialIndex{6});
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.code(), ErrorCode::IndexOutOfRange);
    }
    EXPECT_THROW(monomial_of_index(per, MonomialIndex{-1}), Error);
    for (const char *bad : {"110000001", "100100001", "000010001", "1001"}) {
        try {
            index_of_monomial(per, MonomialMask::from_string(bad));
            FAIL() << bad;
        } catch (const Error &e) {
            EXPECT_EQ(e.code(), ErrorCode::InvalidMonomial) << bad;
        }
    }
    // A permutation that is not a single cycle: (0 1)(2) and the identity.
    auto hc = PolynomialSpec::hamiltonian_cycle(3);
    for (const char *bad : {"010100001", "100010001"}) {
        try {
            index_of_monomial(hc, MonomialMask::from_string(bad));
            FAIL() << bad;
        } catch (const Error &e) {
            EXPECT_EQ(e.code(), ErrorCode::InvalidMonomial) << bad;
        }
    }
    auto lifted = lift_k_equivalent(PolynomialSpec::permanent(2), 2);
    EXPECT_THROW(index_of_monomial(lifted, MonomialMask::from_string("11000011")), Error);
}

TEST(espoly, evaluate_by_enumeration_examples) {
    auto per2 = PolynomialSpec::permanent(2);
    EXPECT_EQ(std::get<BigInt>(evaluate_by_enumeration(per2, Assignment::integers(1, {1, 1, 1, 1}))), 2);
    EXPECT_EQ(std::get<BigInt>(evaluate_by_enumeration(per2, Assignment::integers(1, {1, 1, 1, -1}))), 0);
    auto hc3 = PolynomialSpec::hamiltonian_cycle(3);
    EXPECT_EQ(std::get<BigInt>(evaluate_by_enumeration(hc3, Assignment::integers(1, std::vector<std::int64_t>(9, 1)))), 2);
    // Root mode at ell = 2: exponent 1 is -1.
    auto v = std::get<std::complex<double>>(evaluate_by_enumeration(per2, Assignment::roots(2, {0, 0, 0, 1})));
    EXPECT_NEAR(v.real(), 0.0, 1e-12);
    EXPECT_NEAR(v.imag(), 0.0, 1e-12);
}

TEST(espoly, enumeration_matches_brute_force) {
    RandomSource rng(11);
    for (unsigned n = 1; n <= 5; ++n) {
        for (int rep = 0; rep < 20; ++rep) {
            auto a = random_values(rng, n * n, -3, 3);
            ASSERT_EQ(evaluate_integer_by_enumeration(PolynomialSpec::permanent(n), a),
                      oracle::matrix_polynomial(a, n, false));
            ASSERT_EQ(evaluate_integer_by_enumeration(PolynomialSpec::hamiltonian_cycle(n), a),
                      oracle::matrix_polynomial(a, n, true));
        }
    }
}

TEST(espoly, fast_matches_enumeration_integer) {
    RandomSource rng(7);
    struct Case {
        PolynomialSpec spec;
        std::int64_t bound;
    };
    std::vector<Case> cases = {
        {PolynomialSpec::permanent(2), 1},         {PolynomialSpec::permanent(3), 1},
        {PolynomialSpec::permanent(4), 3},         {PolynomialSpec::permanent(5), 3},
        {PolynomialSpec::hamiltonian_cycle(3), 3}, {PolynomialSpec::hamiltonian_cycle(4), 3},
        {PolynomialSpec::hamiltonian_cycle(5), 5},
    };
    for (const auto &c : cases) {
        MonomialList monomials(c.spec);
        for (int rep = 0; rep < 1000; ++rep) {
            auto a = random_values(rng, c.spec.n_vars(), -c.bound, c.bound);
            ASSERT_EQ(evaluate_integer_fast(c.spec, a), evaluate_integer_by_enumeration(monomials, a)) << c.spec.name();
        }
    }
}

TEST(espoly, fast_matches_enumeration_roots) {
    RandomSource rng(8);
    for (auto spec : {PolynomialSpec::permanent(3), PolynomialSpec::permanent(4), PolynomialSpec::hamiltonian_cycle(4),
                      PolynomialSpec::hamiltonian_cycle(5)}) {
        MonomialList monomials(spec);
        for (unsigned ell : {2u, 3u, 5u, 8u}) {
            for (int rep = 0; rep < 250; ++rep) {
                auto e = random_values(rng, spec.n_vars(), 0, ell - 1);
                auto fast = evaluate_roots_fast(spec, ell, e);
                auto slow = evaluate_roots_by_enumeration(monomials, ell, e).value();
                ASSERT_NEAR(std::abs(fast - slow), 0.0, 1e-9) << spec.name() << " ell=" << ell;
            }
        }
    }
}

TEST(espoly, fast_path_handles_large_magnitudes) {
    // Entries large enough to push the bound past __int128.
    const unsigned n = 6;
    std::vector<std::int64_t> a(n * n);
    RandomSource rng(3);
    for (auto &x : a) x = static_cast<std::int64_t>(rng.below(1ull << 40)) - (1ll << 39);
    EXPECT_EQ(evaluate_integer_fast(PolynomialSpec::permanent(n), a), oracle::matrix_polynomial(a, n, false));
    EXPECT_EQ(evaluate_integer_fast(PolynomialSpec::hamiltonian_cycle(n), a), oracle::matrix_polynomial(a, n, true));
    EXPECT_EQ(evaluate_integer_by_enumeration(PolynomialSpec::permanent(n), a), oracle::matrix_polynomial(a, n, false));
}

TEST(espoly, fast_guard) {
    std::vector<std::int64_t> a(21 * 21, 1);
    try {
        evaluate_integer_fast(PolynomialSpec::permanent(21), a);
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.code(), ErrorCode::TooLarge);
    }
    try {
        evaluate_integer_by_enumeration(PolynomialSpec::permanent(11), std::vector<std::int64_t>(121, 1));
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.code(), ErrorCode::TooLarge);
    }
}

TEST(espoly, homogeneity) {
    RandomSource rng(5);
    for (auto spec : {PolynomialSpec::permanent(4), PolynomialSpec::hamiltonian_cycle(4)}) {
        for (int rep = 0; rep < 50; ++rep) {
            auto a = random_values(rng, spec.n_vars(), -2, 2);
            const std::int64_t c = static_cast<std::int64_t>(rng.below(7)) - 3;
            auto scaled = a;
            for (auto &x : scaled) x *= c;
            EXPECT_EQ(evaluate_integer_fast(spec, scaled), big_pow(BigInt(c), spec.degree()) * evaluate_integer_fast(spec, a));
        }
    }
}

TEST(espoly, lift_semantics) {
    auto base = PolynomialSpec::permanent(2);
    auto lifted = lift_k_equivalent(base, 2);
    // x = 1 (anti-diagonal: variables 1, 2), y = (1, 0) -> index 1*4 + 1*2 + 0.
    EXPECT_EQ(mask_at(lifted, 6), "00011000");
    EXPECT_EQ(mask_at(lifted, 0), "10000010");

    // k = 1 is the base polynomial with the same masks.
    auto same = lift_k_equivalent(base, 1);
    EXPECT_EQ(same.monomial_count(), base.monomial_count());
    EXPECT_EQ(same.n_vars(), base.n_vars());
    for (std::uint64_t z = 0; z < 2; ++z) EXPECT_EQ(mask_at(same, z), mask_at(base, z));
}

TEST(espoly, lifted_masks_follow_copy_selection_rule) {
    // Bit (i, j) is set iff base variable i is in h(x) and its ordinal among
    // h(x)'s variables selects copy j.
    const unsigned k = 3;
    auto base = PolynomialSpec::permanent(3);
    auto lifted = lift_k_equivalent(base, k);
    for (std::uint64_t x = 0; x < 6; ++x) {
        const auto base_vars = monomial_of_index(base, MonomialIndex{x}).positions();
        for (std::uint64_t y = 0; y < 27; ++y) {
            const std::uint64_t digits[3] = {y / 9, (y / 3) % 3, y % 3};
            auto mask = monomial_of_index(lifted, MonomialIndex{x * 27 + y});
            MonomialMask expected(lifted.n_vars());
            for (unsigned l = 0; l < 3; ++l) expected.set(base_vars[l] * k + digits[l]);
            ASSERT_EQ(mask, expected);
        }
    }
}

TEST(espoly, lifted_round_trip) {
    for (unsigned k : {1u, 2u, 3u}) {
        for (auto base : {PolynomialSpec::permanent(3), PolynomialSpec::hamiltonian_cycle(4)}) {
            auto lifted = lift_k_equivalent(base, k);
            const auto m = static_cast<std::uint64_t>(lifted.monomial_count());
            for (std::uint64_t z = 0; z < m; ++z) {
                ASSERT_EQ(index_of_monomial(lifted, monomial_of_index(lifted, MonomialIndex{z})).value, z);
            }
        }
    }
}

TEST(espoly, collapse_examples) {
    auto y = collapse_assignment(std::vector<std::int64_t>{1, 1, 1, -1, -1, -1}, 2);
    ASSERT_EQ(y.size(), 3u);
    EXPECT_EQ(y.values()[0], 2);
    EXPECT_EQ(y.values()[1], 0);
    EXPECT_EQ(y.values()[2], -2);
    EXPECT_TRUE(y.parity_valid());

    auto all = collapse_assignment(std::vector<std::int64_t>(12, 1), 3);
    for (auto v : all.values()) EXPECT_EQ(v, 3);

    try {
        collapse_assignment(std::vector<std::int64_t>{1, 1, 1}, 2);
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.code(), ErrorCode::LengthMismatch);
    }
    EXPECT_THROW(collapse_assignment(std::vector<std::int64_t>{1, 0}, 2), Error);
}

TEST(espoly, lift_consistency_exhaustive) {
    // Q'_k(x) = Q(phi(x)) over all of {+-1}^{kn}, for kn <= 20.
    struct Case {
        PolynomialSpec base;
        unsigned k;
    };
    for (const auto &c : {Case{PolynomialSpec::permanent(2), 2}, Case{PolynomialSpec::permanent(2), 3},
                          Case{PolynomialSpec::permanent(2), 5}, Case{PolynomialSpec::hamiltonian_cycle(2), 4}}) {
        auto lifted = lift_k_equivalent(c.base, c.k);
        MonomialList lifted_monomials(lifted);
        MonomialList base_monomials(c.base);
        const std::size_t width = lifted.n_vars();
        ASSERT_LE(width, 20u);
        std::vector<std::int64_t> x(width);
        for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << width); ++bits) {
            for (std::size_t i = 0; i < width; ++i) x[i] = ((bits >> i) & 1) ? -1 : 1;
            auto y = collapse_assignment(x, c.k);
            ASSERT_EQ(evaluate_integer_by_enumeration(lifted_monomials, x),
                      evaluate_integer_by_enumeration(base_monomials, y.values()));
        }
    }
}

TEST(espoly, lift_consistency_sampled) {
    RandomSource rng(21);
    auto base = PolynomialSpec::permanent(3);
    auto lifted = lift_k_equivalent(base, 3);
    MonomialList lifted_monomials(lifted);
    for (int rep = 0; rep < 500; ++rep) {
        std::vector<std::int64_t> x(lifted.n_vars());
        for (auto &v : x) v = rng.below(2) ? 1 : -1;
        auto y = collapse_assignment(x, 3);
        ASSERT_EQ(evaluate_integer_by_enumeration(lifted_monomials, x), evaluate_integer_fast(base, y.values()));
        ASSERT_EQ(evaluate_integer_fast(lifted, x), evaluate_integer_fast(base, y.values()));
    }
}

TEST(espoly, assignment_validation) {
    EXPECT_THROW(Assignment::roots(3, {0, 3}), Error);
    EXPECT_THROW(Assignment::integers(2, {3}), Error);
    EXPECT_FALSE(Assignment::integers(2, {1, 2}).parity_valid());
    EXPECT_TRUE(Assignment::integers(3, {-3, 1}).parity_valid());
    try {
        evaluate_integer_fast(PolynomialSpec::permanent(2), std::vector<std::int64_t>{1, 1, 1});
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.code(), ErrorCode::LengthMismatch);
    }
}

TEST(espoly, json_and_mask_strings) {
    for (auto spec : {PolynomialSpec::permanent(3), PolynomialSpec::hamiltonian_cycle(5),
                      lift_k_equivalent(PolynomialSpec::permanent(2), 4)}) {
        EXPECT_EQ(spec_from_json(spec_to_json(spec)), spec);
    }
    EXPECT_EQ(spec_to_json(lift_k_equivalent(PolynomialSpec::permanent(2), 4)).dump(),
              R"({"family":"permanent","k":4,"n":2})");
    EXPECT_THROW(spec_from_json(nlohmann::json::parse(R"({"family":"determinant","n":2})")), Error);
    RandomSource rng(2);
    for (int rep = 0; rep < 20; ++rep) {
        std::string s(1 + rng.below(200), '0');
        for (auto &c : s) c = rng.below(2) ? '1' : '0';
        EXPECT_EQ(MonomialMask::from_string(s).to_string(), s);
    }
}
