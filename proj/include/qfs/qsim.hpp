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

// Dense statevector simulation of the three sampling circuits:
//
//   es        monomial superposition, QFT over Z_ell on every qudit, measure
//   squashed  monomial superposition on (k+1)-level qudits, U = L D~ R on
//             every qudit, measure; qudit level i reports class c = k - i
//   fold      phase state f(x) / 2^{n/2}, Hadamard on every qubit, measure
//
// The squashed transform U is applied as a dense (k+1) x (k+1) matrix.

#ifndef QFS_QSIM_HPP
#define QFS_QSIM_HPP

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include "json.hpp"
#include "qfs/core.hpp"
#include "qfs/dist.hpp"
#include "qfs/espoly.hpp"

namespace qfs::qsim {

using Complex = std::complex<double>;
using dist::ProbabilityTable;
using espoly::PolynomialSpec;

inline constexpr double kNormTolerance = 1e-9;
inline constexpr double kUnitarityTolerance = 1e-9;

/// Row-major square matrix acting on one qudit.
struct QuditGate {
    std::uint32_t dim = 0;
    std::vector<Complex> entries;

    Complex operator()(std::uint32_t row, std::uint32_t col) const { return entries[row * dim + col]; }

    QuditGate adjoint() const {
        QuditGate out{dim, std::vector<Complex>(entries.size())};
        for (std::uint32_t r = 0; r < dim; ++r) {
            for (std::uint32_t c = 0; c < dim; ++c) out.entries[c * dim + r] = std::conj(entries[r * dim + c]);
        }
        return out;
    }
};

class StateVector {
   public:
    StateVector(std::uint32_t qudit_dim, std::size_t num_qudits, std::uint64_t max_states = kStateCeiling)
        : dim_(qudit_dim), count_(num_qudits) {
        if (qudit_dim < 2) fail(ErrorCode::InvalidArgument, "qudit dimension must be >= 2");
        if (num_qudits == 0) fail(ErrorCode::InvalidArgument, "need at least one qudit");
        amps_.assign(checked_power(qudit_dim, num_qudits, std::min(max_states, kStateCeiling)), Complex(0));
    }

    /// |0...0>.
    static StateVector zero(std::uint32_t qudit_dim, std::size_t num_qudits) {
        StateVector s(qudit_dim, num_qudits);
        s.amps_[0] = 1;
        return s;
    }

    std::uint32_t qudit_dim() const noexcept { return dim_; }
    std::size_t num_qudits() const noexcept { return count_; }
    std::uint64_t size() const noexcept { return amps_.size(); }
    std::span<Complex> amps() noexcept { return amps_; }
    std::span<const Complex> amps() const noexcept { return amps_; }
    Complex &operator[](std::uint64_t i) { return amps_[i]; }
    const Complex &operator[](std::uint64_t i) const { return amps_[i]; }

    double norm() const {
        double total = 0;
        for (const auto &a : amps_) total += std::norm(a);
        return std::sqrt(total);
    }

    void check_normalized(const char *where) const {
        const double n = norm();
        if (std::abs(n - 1.0) > kNormTolerance) {
            fail(ErrorCode::NumericalInstability, std::string(where) + ": state norm drifted to " + std::to_string(n));
        }
    }

    /// Applies `gate` to the qudit at `position` (0 = most significant).
    void apply(const QuditGate &gate, std::size_t position, unsigned threads = 1) {
        if (gate.dim != dim_) fail(ErrorCode::DimMismatch, "gate dimension does not match qudit dimension");
        if (position >= count_) fail(ErrorCode::IndexOutOfRange, "qudit position out of range");
        std::uint64_t stride = 1;
        for (std::size_t p = position + 1; p < count_; ++p) stride *= dim_;
        const std::uint64_t groups = amps_.size() / dim_;
        parallel_for(groups, threads, [&](std::uint64_t begin, std::uint64_t end) {
            std::vector<Complex> in(dim_);
            for (std::uint64_t g = begin; g < end; ++g) {
                const std::uint64_t base = (g / stride) * stride * dim_ + g % stride;
                for (std::uint32_t j = 0; j < dim_; ++j) in[j] = amps_[base + j * stride];
                for (std::uint32_t i = 0; i < dim_; ++i) {
                    Complex acc = 0;
                    for (std::uint32_t j = 0; j < dim_; ++j) acc += gate(i, j) * in[j];
                    amps_[base + i * stride] = acc;
                }
            }
        });
    }

    void apply_all(const QuditGate &gate, unsigned threads = 1) {
        for (std::size_t p = 0; p < count_; ++p) apply(gate, p, threads);
    }

    /// |amp|^2 as a table over the qudit levels.
    ProbabilityTable measurement_table() const {
        std::vector<double> probs(amps_.size());
        for (std::size_t i = 0; i < amps_.size(); ++i) probs[i] = std::norm(amps_[i]);
        auto t = ProbabilityTable::real(dim_, count_, std::move(probs));
        t.validate();
        return t;
    }

   private:
    std::uint32_t dim_;
    std::size_t count_;
    std::vector<Complex> amps_;
};

// ---------------------------------------------------------------------------
// Gates

/// F[y][z] = omega^{yz} / sqrt(ell), omega = exp(2 pi i / ell).
inline QuditGate qft_gate(std::uint32_t ell) {
    if (ell < 2) fail(ErrorCode::InvalidArgument, "ell must be >= 2");
    QuditGate g{ell, std::vector<Complex>(std::size_t{ell} * ell)};
    const double scale = 1.0 / std::sqrt(static_cast<double>(ell));
    for (std::uint32_t y = 0; y < ell; ++y) {
        for (std::uint32_t z = 0; z < ell; ++z) {
            const double angle = 2.0 * std::numbers::pi * static_cast<double>((std::uint64_t{y} * z) % ell) / ell;
            g.entries[y * ell + z] = std::polar(scale, angle);
        }
    }
    return g;
}

inline void apply_qft_zl(StateVector &state, std::uint32_t ell, unsigned threads = 1) {
    if (state.qudit_dim() != ell) fail(ErrorCode::DimMismatch, "QFT order differs from qudit dimension");
    state.apply_all(qft_gate(ell), threads);
}

inline void apply_inverse_qft_zl(StateVector &state, std::uint32_t ell, unsigned threads = 1) {
    if (state.qudit_dim() != ell) fail(ErrorCode::DimMismatch, "QFT order differs from qudit dimension");
    state.apply_all(qft_gate(ell).adjoint(), threads);
}

// ---------------------------------------------------------------------------
// Squashed transform

struct SquashedTransform {
    unsigned k = 0;
    /// d_tilde[i][j] = e_j evaluated on i entries -1 and k - i entries +1.
    std::vector<std::vector<BigInt>> d_tilde;
    std::vector<double> L;
    std::vector<double> R;
    /// Row-major (k+1) x (k+1), real.
    std::vector<double> U;
    double r0 = 0;
    double r1 = 0;
    /// max |U^T U - I|.
    double unitarity_residual = 0;
    /// Columns of L D~ orthogonal in exact integer arithmetic.
    bool columns_orthogonal = false;

    std::uint32_t dim() const noexcept { return k + 1; }
    double u(unsigned i, unsigned j) const { return U[i * (k + 1) + j]; }

    QuditGate gate() const {
        QuditGate g{k + 1, std::vector<Complex>(U.begin(), U.end())};
        return g;
    }
};

inline constexpr unsigned kMaxSquashedK = 64;

/// e_j at a point with `minus` entries -1 and `plus` entries +1.
inline BigInt elementary_symmetric_on_class(unsigned minus, unsigned plus, unsigned j) {
    BigInt total = 0;
    for (unsigned a = 0; a <= std::min(j, minus); ++a) {
        if (j - a > plus) continue;
        const BigInt term = binomial(minus, a) * binomial(plus, j - a);
        if (a % 2) {
            total -= term;
        } else {
            total += term;
        }
    }
    return total;
}

inline SquashedTransform build_squashed_transform(unsigned k) {
    if (k == 0) fail(ErrorCode::InvalidArgument, "k must be >= 1");
    if (k > kMaxSquashedK) fail(ErrorCode::TooLarge, "k above " + std::to_string(kMaxSquashedK));
    SquashedTransform t;
    t.k = k;
    const unsigned size = k + 1;
    t.d_tilde.assign(size, std::vector<BigInt>(size));
    std::vector<BigInt> class_size(size);
    for (unsigned i = 0; i < size; ++i) {
        class_size[i] = binomial(k, i);
        for (unsigned j = 0; j < size; ++j) t.d_tilde[i][j] = elementary_symmetric_on_class(i, k - i, j);
    }

    // Gram matrix of L D~ in integers: G[j][j'] = sum_i C(k,i) D~[i][j] D~[i][j'].
    std::vector<BigInt> column_norm(size);
    t.columns_orthogonal = true;
    for (unsigned j = 0; j < size; ++j) {
        for (unsigned jj = j; jj < size; ++jj) {
            BigInt g = 0;
            for (unsigned i = 0; i < size; ++i) g += class_size[i] * t.d_tilde[i][j] * t.d_tilde[i][jj];
            if (j == jj) {
                column_norm[j] = g;
            } else if (g != 0) {
                t.columns_orthogonal = false;
            }
        }
    }
    if (!t.columns_orthogonal) fail(ErrorCode::NumericalInstability, "columns of L D~ are not orthogonal");

    t.L.resize(size);
    t.R.resize(size);
    t.U.resize(std::size_t{size} * size);
    for (unsigned i = 0; i < size; ++i) t.L[i] = std::sqrt(static_cast<double>(class_size[i]));
    for (unsigned j = 0; j < size; ++j) t.R[j] = 1.0 / std::sqrt(static_cast<double>(column_norm[j]));
    for (unsigned i = 0; i < size; ++i) {
        for (unsigned j = 0; j < size; ++j) {
            const BigInt &d = t.d_tilde[i][j];
            if (d == 0) continue;
            // sqrt of an exact rational keeps precision when the factors are large.
            const double magnitude =
                std::sqrt(static_cast<double>(Rational(class_size[i] * d * d, column_norm[j])));
            t.U[i * size + j] = d < 0 ? -magnitude : magnitude;
        }
    }
    t.r0 = t.R[0];
    t.r1 = t.R[1];

    double residual = 0;
    for (unsigned a = 0; a < size; ++a) {
        for (unsigned b = 0; b < size; ++b) {
            double dot = 0;
            for (unsigned i = 0; i < size; ++i) dot += t.U[i * size + a] * t.U[i * size + b];
            residual = std::max(residual, std::abs(dot - (a == b ? 1.0 : 0.0)));
        }
    }
    t.unitarity_residual = residual;
    if (residual > kUnitarityTolerance) {
        fail(ErrorCode::NumericalInstability, "squashed transform unitarity residual " + std::to_string(residual));
    }
    return t;
}

// ---------------------------------------------------------------------------
// Circuits

/// (1/sqrt m) sum_z |h(z)>, mask bits placed at qudit levels 0 and 1.
inline StateVector prepare_monomial_superposition(const PolynomialSpec &spec, std::uint32_t qudit_dim,
                                                  const Guards &guards = {}) {
    const std::size_t n = spec.n_vars();
    StateVector state(qudit_dim, n, guards.max_states);
    const std::uint64_t m = spec.monomial_count_within(guards.max_monomials);
    const double amplitude = 1.0 / std::sqrt(static_cast<double>(m));
    std::vector<std::uint64_t> place(n);
    std::uint64_t weight = 1;
    for (std::size_t p = n; p-- > 0;) {
        place[p] = weight;
        weight *= qudit_dim;
    }
    espoly::for_each_monomial(spec, guards, [&](std::span<const std::uint32_t> vars) {
        std::uint64_t index = 0;
        for (auto v : vars) index += place[v];
        if (state[index] != Complex(0)) fail(ErrorCode::CollisionDetected, "two monomials share a basis state");
        state[index] = amplitude;
    });
    return state;
}

inline StateVector es_sampler_state(const PolynomialSpec &spec, std::uint32_t ell, const Guards &guards = {},
                                    unsigned threads = 1) {
    auto state = prepare_monomial_superposition(spec, ell, guards);
    apply_qft_zl(state, ell, threads);
    state.check_normalized("es sampler");
    return state;
}

inline ProbabilityTable run_es_sampler_circuit(const PolynomialSpec &spec, std::uint32_t ell, const Guards &guards = {},
                                               unsigned threads = 1) {
    return es_sampler_state(spec, ell, guards, threads).measurement_table();
}

/// Final state of the squashed circuit, indexed by qudit level (level i holds
/// i entries equal to -1).
inline StateVector squashed_sampler_state(const PolynomialSpec &spec, unsigned k, const Guards &guards = {},
                                          unsigned threads = 1) {
    if (spec.is_lifted()) fail(ErrorCode::UnsupportedFamily, "squashed circuit runs on the base polynomial");
    const auto transform = build_squashed_transform(k);
    auto state = prepare_monomial_superposition(spec, k + 1, guards);
    state.apply_all(transform.gate(), threads);
    state.check_normalized("squashed sampler");
    return state;
}

/// Class-indexed table (digit c = number of +1 entries). Relabelling level i
/// to class k - i reverses every digit, which reverses the whole index.
inline ProbabilityTable squashed_measurement_table(const StateVector &state, unsigned k) {
    if (state.qudit_dim() != k + 1) fail(ErrorCode::DimMismatch, "state is not on (k+1)-level qudits");
    const std::uint64_t size = state.size();
    std::vector<double> probs(size);
    for (std::uint64_t i = 0; i < size; ++i) probs[size - 1 - i] = std::norm(state[i]);
    auto t = ProbabilityTable::real(k + 1, state.num_qudits(), std::move(probs), k);
    t.validate();
    return t;
}

inline ProbabilityTable run_squashed_sampler_circuit(const PolynomialSpec &spec, unsigned k, const Guards &guards = {},
                                                     unsigned threads = 1) {
    return squashed_measurement_table(squashed_sampler_state(spec, k, guards, threads), k);
}

/// alpha_y = r0^{n-d} r1^d Q(y) sqrt(orbit(y)) / sqrt(m), signed.
inline double squashed_amplitude_closed_form(const PolynomialSpec &spec, unsigned k, std::span<const std::int64_t> y,
                                             const Guards &guards = {}) {
    const double r0 = std::pow(2.0, -0.5 * k);
    const double r1 = 1.0 / std::sqrt(static_cast<double>(k) * std::pow(2.0, k));
    const BigInt orbit = dist::orbit_weight(y, k);
    const BigInt q = espoly::evaluate_integer_by_enumeration(spec, y, guards);
    const double n = static_cast<double>(spec.n_vars());
    const double d = spec.degree();
    return std::pow(r0, n - d) * std::pow(r1, d) * static_cast<double>(q) *
           std::sqrt(static_cast<double>(orbit) / static_cast<double>(spec.monomial_count()));
}

inline constexpr unsigned kMaxFoldCircuitBits = 13;

inline StateVector fold_sampler_state(std::span<const int> truth_table, unsigned threads = 1) {
    const unsigned n = dist::detail::truth_table_bits(truth_table, kMaxFoldCircuitBits);
    StateVector state(2, n);
    const double scale = std::ldexp(1.0, -static_cast<int>(n)) * std::sqrt(static_cast<double>(truth_table.size()));
    for (std::size_t x = 0; x < truth_table.size(); ++x) state[x] = scale * truth_table[x];
    state.apply_all(qft_gate(2), threads);
    state.check_normalized("fold sampler");
    return state;
}

inline ProbabilityTable run_fold_sampler_circuit(std::span<const int> truth_table, unsigned threads = 1) {
    return fold_sampler_state(truth_table, threads).measurement_table();
}

// ---------------------------------------------------------------------------
// Serialization

inline nlohmann::json state_to_json(const StateVector &s) {
    nlohmann::json amps = nlohmann::json::array();
    for (const auto &a : s.amps()) amps.push_back({a.real(), a.imag()});
    return {{"qudit_dim", s.qudit_dim()}, {"num_qudits", s.num_qudits()}, {"amps", std::move(amps)}};
}

inline nlohmann::json transform_to_json(const SquashedTransform &t) {
    nlohmann::json d = nlohmann::json::array();
    nlohmann::json u = nlohmann::json::array();
    for (unsigned i = 0; i <= t.k; ++i) {
        nlohmann::json drow = nlohmann::json::array();
        nlohmann::json urow = nlohmann::json::array();
        for (unsigned j = 0; j <= t.k; ++j) {
            drow.push_back(t.d_tilde[i][j].str());
            urow.push_back(t.u(i, j));
        }
        d.push_back(std::move(drow));
        u.push_back(std::move(urow));
    }
    return {{"k", t.k},
            {"d_tilde", std::move(d)},
            {"L", t.L},
            {"R", t.R},
            {"U", std::move(u)},
            {"r0", t.r0},
            {"r1", t.r1},
            {"unitarity_residual", t.unitarity_residual},
            {"columns_orthogonal", t.columns_orthogonal}};
}

}  // namespace qfs::qsim

#endif  // QFS_QSIM_HPP
