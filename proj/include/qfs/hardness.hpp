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

// Classical side: samplers with a controlled TV error, approximate counting,
// the additive average-case reductions (plain and squashed), the
// multiplicative lift, and anti-concentration experiments.
//
// Reduction schedule for target accuracy eps and confidence delta:
//   beta = eps delta / 16   (sampler TV error)
//   gamma = eps delta / 8   (relative counting error)
//   j = 4 / delta           (Markov constant)
// Plain: estimate = ell^n m q~_y, bound eps m.
// Squashed: estimate = q~_y 2^{kn} Var / orbit(y), bound eps Var.

#ifndef QFS_HARDNESS_HPP
#define QFS_HARDNESS_HPP

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "qfs/core.hpp"
#include "qfs/dist.hpp"
#include "qfs/espoly.hpp"

namespace qfs::hardness {

using dist::ProbabilityTable;
using espoly::PolynomialSpec;

// ---------------------------------------------------------------------------
// Samplers

enum class SamplerKind { Exact, PerturbedTV, Empirical };

inline const char *to_string(SamplerKind k) {
    switch (k) {
        case SamplerKind::Exact: return "exact";
        case SamplerKind::PerturbedTV: return "perturbed_tv";
        case SamplerKind::Empirical: return "empirical";
    }
    return "unknown";
}

/// A classical sampler with a known output table. The probability query
/// stands in for approximate counting on the sampler's randomness; without
/// it, estimators count over `randomness_bits` uniform bits with HashSketch.
class SamplerHandle {
   public:
    static constexpr unsigned kRandomnessBits = 16;

    SamplerHandle(SamplerKind kind, ProbabilityTable target, ProbabilityTable realized, double beta,
                  std::uint64_t sample_budget = 0)
        : kind_(kind),
          target_(std::move(target)),
          realized_(std::move(realized)),
          sampler_(realized_),
          beta_(beta),
          realized_tv_(dist::tv_distance(target_, realized_)),
          sample_budget_(sample_budget),
          probability_query_(kind != SamplerKind::Empirical) {}

    SamplerKind kind() const noexcept { return kind_; }
    const ProbabilityTable &target() const noexcept { return target_; }
    const ProbabilityTable &realized() const noexcept { return realized_; }
    double beta() const noexcept { return beta_; }
    double realized_tv() const noexcept { return realized_tv_; }
    std::uint64_t sample_budget() const noexcept { return sample_budget_; }
    bool has_probability_query() const noexcept { return probability_query_; }

    SamplerHandle without_probability_query() const {
        SamplerHandle copy = *this;
        copy.probability_query_ = false;
        return copy;
    }

    double probability(std::uint64_t y) const {
        if (!probability_query_) fail(ErrorCode::InvalidArgument, "sampler exposes no probability query");
        return realized_[y];
    }

    std::optional<Rational> exact_probability(std::uint64_t y) const {
        if (!probability_query_ || !realized_.is_exact()) return std::nullopt;
        return realized_.exact_probs()[y];
    }

    std::uint64_t draw(RandomSource &rng) const { return sampler_.draw(rng); }

    /// Deterministic output on the randomness string r in [0, 2^bits).
    std::uint64_t draw_from_bits(std::uint64_t r, unsigned bits = kRandomnessBits) const {
        return sampler_.at((static_cast<double>(r) + 0.5) * std::ldexp(1.0, -static_cast<int>(bits)));
    }

   private:
    SamplerKind kind_;
    ProbabilityTable target_;
    ProbabilityTable realized_;
    dist::TableSampler sampler_;
    double beta_;
    double realized_tv_;
    std::uint64_t sample_budget_;
    bool probability_query_;
};

inline SamplerHandle make_exact_sampler(const ProbabilityTable &target) {
    return SamplerHandle(SamplerKind::Exact, target, target, 0.0);
}

/// Greedy adversary. Donors: the top entries are lowered to a common water
/// level until beta mass is removed. Receiver: one minimum-probability entry
/// (ties broken by rng) takes all of it. Realized TV is min(beta, 1 - p_min).
inline SamplerHandle make_perturbed_sampler(const ProbabilityTable &target, double beta, RandomSource &rng) {
    if (!(beta >= 0.0 && beta <= 1.0)) fail(ErrorCode::InvalidArgument, "beta must lie in [0, 1]");
    if (beta == 0.0) return SamplerHandle(SamplerKind::PerturbedTV, target, target, 0.0);
    const auto p = target.probs();
    const std::uint64_t size = p.size();
    const double p_min = *std::min_element(p.begin(), p.end());
    std::vector<std::uint64_t> minimal;
    for (std::uint64_t i = 0; i < size; ++i) {
        if (p[i] == p_min) minimal.push_back(i);
    }
    const std::uint64_t receiver = minimal[rng.below(minimal.size())];
    const double moved = std::min(beta, 1.0 - p_min);

    // Water level: sum over donors of max(0, p_i - level) = moved.
    std::vector<double> sorted;
    sorted.reserve(size);
    for (std::uint64_t i = 0; i < size; ++i) {
        if (i != receiver) sorted.push_back(p[i]);
    }
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    double level = 0.0;
    double above = 0.0;
    for (std::size_t t = 0; t < sorted.size(); ++t) {
        above += sorted[t];
        const double next = t + 1 < sorted.size() ? sorted[t + 1] : 0.0;
        // Mass removed when lowering the top t+1 entries to `next`.
        const double removable = above - static_cast<double>(t + 1) * next;
        if (removable >= moved || t + 1 == sorted.size()) {
            level = std::max(0.0, (above - moved) / static_cast<double>(t + 1));
            break;
        }
    }
    std::vector<double> q(p.begin(), p.end());
    double removed = 0.0;
    for (std::uint64_t i = 0; i < size; ++i) {
        if (i == receiver || q[i] <= level) continue;
        removed += q[i] - level;
        q[i] = level;
    }
    q[receiver] += removed;
    auto realized = ProbabilityTable::real(target.radix(), target.length(), std::move(q), target.class_k());
    return SamplerHandle(SamplerKind::PerturbedTV, target, std::move(realized), beta);
}

/// Worst-case adversary for negative tests: moves beta mass from the largest
/// entry other than y onto y. Exactly two outcomes differ from the target.
inline SamplerHandle make_concentrated_sampler(const ProbabilityTable &target, double beta, std::uint64_t y) {
    if (!(beta >= 0.0 && beta <= 1.0)) fail(ErrorCode::InvalidArgument, "beta must lie in [0, 1]");
    if (y >= target.size()) fail(ErrorCode::IndexOutOfRange, "outcome out of range");
    std::vector<double> q(target.probs().begin(), target.probs().end());
    std::uint64_t donor = y == 0 ? 1 : 0;
    for (std::uint64_t i = 0; i < q.size(); ++i) {
        if (i != y && q[i] > q[donor]) donor = i;
    }
    const double moved = std::min(beta, q[donor]);
    q[donor] -= moved;
    q[y] += moved;
    auto realized = ProbabilityTable::real(target.radix(), target.length(), std::move(q), target.class_k());
    return SamplerHandle(SamplerKind::PerturbedTV, target, std::move(realized), beta);
}

/// Sampler whose table is the empirical distribution of `budget` draws from
/// the target. Exposes no probability query.
inline SamplerHandle make_empirical_sampler(const ProbabilityTable &target, std::uint64_t budget, RandomSource &rng) {
    if (budget == 0) fail(ErrorCode::InvalidArgument, "sample budget must be positive");
    const dist::TableSampler sampler(target);
    std::vector<std::uint64_t> counts(target.size(), 0);
    for (std::uint64_t s = 0; s < budget; ++s) ++counts[sampler.draw(rng)];
    std::vector<Rational> probs(target.size());
    for (std::uint64_t i = 0; i < counts.size(); ++i) probs[i] = Rational(BigInt(counts[i]), BigInt(budget));
    auto realized = ProbabilityTable::exact(target.radix(), target.length(), std::move(probs), target.class_k());
    return SamplerHandle(SamplerKind::Empirical, target, std::move(realized), 1.0, budget);
}

// ---------------------------------------------------------------------------
// Approximate counting

enum class CountBackend { ExactEnum, HashSketch, NoisyOracle };

inline const char *to_string(CountBackend b) {
    switch (b) {
        case CountBackend::ExactEnum: return "exact";
        case CountBackend::HashSketch: return "hash_sketch";
        case CountBackend::NoisyOracle: return "noisy_oracle";
    }
    return "unknown";
}

struct CountEstimate {
    double alpha = 0;            // estimated |event| / |domain|
    double epsilon = 0;
    double failure_bound = 0;
    std::uint64_t exact_count = 0;  // only meaningful for ExactEnum
};

inline constexpr std::uint64_t kCountDomainLimit = std::uint64_t{1} << 24;
/// Median-of-R amplification: R = 111 repetitions each succeeding with
/// probability >= 3/4 fail together with probability <= exp(-R/8) < 2^-20.
inline constexpr unsigned kSketchRepetitions = 111;
inline constexpr double kSketchFailureBound = 0x1.0p-20;

namespace detail {

/// Random affine map GF(2)^bits -> GF(2)^bits as three byte-indexed tables.
struct AffineHash {
    unsigned bits;
    std::uint32_t offset;
    std::array<std::array<std::uint32_t, 256>, 3> tables{};

    AffineHash(unsigned bits_, RandomSource &rng) : bits(bits_) {
        const std::uint32_t mask = bits == 32 ? ~0u : ((1u << bits) - 1);
        offset = static_cast<std::uint32_t>(rng.bits()) & mask;
        std::array<std::uint32_t, 24> columns{};
        for (unsigned c = 0; c < 24; ++c) columns[c] = c < bits ? static_cast<std::uint32_t>(rng.bits()) & mask : 0;
        for (unsigned t = 0; t < 3; ++t) {
            for (unsigned v = 0; v < 256; ++v) {
                std::uint32_t h = 0;
                for (unsigned b = 0; b < 8; ++b) {
                    if (v >> b & 1u) h ^= columns[8 * t + b];
                }
                tables[t][v] = h;
            }
        }
    }

    std::uint32_t operator()(std::uint32_t x) const {
        return offset ^ tables[0][x & 255u] ^ tables[1][(x >> 8) & 255u] ^ tables[2][(x >> 16) & 255u];
    }

    /// Length of the all-zero prefix of the hash, in [0, bits].
    unsigned zero_prefix(std::uint32_t x) const {
        const std::uint32_t h = (*this)(x);
        if (h == 0) return bits;
        return static_cast<unsigned>(std::countl_zero(h)) - (32 - bits);
    }
};

/// One sketch: smallest level j whose bucket holds at most `threshold`
/// members, scaled by 2^j.
inline double sketch_once(std::span<const std::uint32_t> members, unsigned bits, double threshold, RandomSource &rng) {
    if (members.size() <= threshold) return static_cast<double>(members.size());
    const AffineHash hash(bits, rng);
    std::vector<std::uint64_t> histogram(bits + 1, 0);
    for (auto x : members) ++histogram[hash.zero_prefix(x)];
    std::uint64_t bucket = members.size();
    for (unsigned j = 1; j <= bits; ++j) {
        bucket -= histogram[j - 1];
        if (static_cast<double>(bucket) <= threshold) return std::ldexp(static_cast<double>(bucket), static_cast<int>(j));
    }
    return std::ldexp(static_cast<double>(histogram[bits]), static_cast<int>(bits));
}

}  // namespace detail

/// Estimates |{x in [0, domain) : event(x)}| / domain.
///   ExactEnum    exact count
///   HashSketch   pairwise-independent hash halving, median of 111 sketches
///   NoisyOracle  exact value times a uniform factor in [1 - gamma, 1 + gamma]
inline CountEstimate approx_count(std::uint64_t domain, const std::function<bool(std::uint64_t)> &event, double epsilon,
                                  CountBackend backend, RandomSource &rng, double gamma = 0.0) {
    if (domain == 0) fail(ErrorCode::InvalidArgument, "empty domain");
    if (domain > kCountDomainLimit) fail(ErrorCode::TooLarge, "counting domain above 2^24");
    if (!(epsilon > 0.0)) fail(ErrorCode::InvalidArgument, "epsilon must be positive");
    std::vector<std::uint32_t> members;
    for (std::uint64_t x = 0; x < domain; ++x) {
        if (event(x)) members.push_back(static_cast<std::uint32_t>(x));
    }
    CountEstimate out;
    out.epsilon = epsilon;
    out.exact_count = members.size();
    const double truth = static_cast<double>(members.size()) / static_cast<double>(domain);
    switch (backend) {
        case CountBackend::ExactEnum:
            out.alpha = truth;
            out.epsilon = 0;
            break;
        case CountBackend::NoisyOracle:
            out.alpha = truth * (1.0 + gamma * rng.uniform(-1.0, 1.0));
            out.epsilon = gamma;
            break;
        case CountBackend::HashSketch: {
            const unsigned bits = std::max(1u, static_cast<unsigned>(std::bit_width(domain - 1)));
            const double threshold = std::ceil(64.0 / (epsilon * epsilon));
            std::vector<double> sketches(kSketchRepetitions);
            for (auto &s : sketches) s = detail::sketch_once(members, bits, threshold, rng);
            std::nth_element(sketches.begin(), sketches.begin() + kSketchRepetitions / 2, sketches.end());
            out.alpha = sketches[kSketchRepetitions / 2] / static_cast<double>(domain);
            out.failure_bound = kSketchFailureBound;
            break;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Estimators

struct Schedule {
    double epsilon = 0;
    double delta = 0;
    double beta = 0;
    double gamma = 0;
    double markov_j = 0;

    static Schedule from(double epsilon, double delta) {
        if (!(epsilon > 0.0) || !(delta > 0.0 && delta < 1.0)) {
            fail(ErrorCode::InvalidArgument, "need eps > 0 and 0 < delta < 1");
        }
        return Schedule{epsilon, delta, epsilon * delta / 16.0, epsilon * delta / 8.0, 4.0 / delta};
    }

    /// The schedule's gamma * j <= eps / 2, which makes the per-trial union
    /// bound argument go through.
    bool sound() const { return gamma * markov_j <= epsilon / 2.0 * (1.0 + 1e-12); }
};

struct Estimate {
    std::uint64_t outcome = 0;
    std::vector<std::int64_t> values;
    double q_tilde = 0;   // estimated sampler probability
    double q = 0;         // sampler probability
    double estimate = 0;  // scaled estimate of |Q|^2
    bool noise_event = false;
};

namespace detail {

inline std::pair<double, bool> estimate_probability(const SamplerHandle &sampler, std::uint64_t y, double gamma,
                                                    RandomSource &rng, double &q_out) {
    if (sampler.has_probability_query()) {
        const double q = sampler.probability(y);
        q_out = q;
        const double q_tilde = q * (1.0 + gamma * rng.uniform(-1.0, 1.0));
        return {q_tilde, false};
    }
    const unsigned bits = SamplerHandle::kRandomnessBits;
    const double eps = gamma > 0 ? gamma : 1e-9;
    const auto est = approx_count(
        std::uint64_t{1} << bits, [&](std::uint64_t r) { return sampler.draw_from_bits(r, bits) == y; }, eps,
        CountBackend::HashSketch, rng);
    q_out = static_cast<double>(est.exact_count) * std::ldexp(1.0, -static_cast<int>(bits));
    return {est.alpha, std::abs(est.alpha - q_out) > gamma * q_out};
}

}  // namespace detail

/// Plain reduction step: uniform y over [0, ell)^n, estimate ell^n m q~_y.
inline Estimate additive_estimator(const SamplerHandle &sampler, const PolynomialSpec &spec, unsigned ell,
                                   double gamma, RandomSource &rng) {
    const auto &t = sampler.target();
    if (t.radix() != ell || t.length() != spec.n_vars() || t.class_k()) {
        fail(ErrorCode::ShapeMismatch, "sampler does not target the ell-ary table of this polynomial");
    }
    Estimate e;
    e.outcome = rng.below(t.size());
    const auto digits = t.digits(e.outcome);
    e.values.assign(digits.begin(), digits.end());
    const BigInt scale_int = BigInt(t.size()) * spec.monomial_count();
    const auto exact = sampler.exact_probability(e.outcome);
    if (gamma == 0.0 && exact) {
        e.q = static_cast<double>(*exact);
        e.q_tilde = e.q;
        e.estimate = static_cast<double>(*exact * scale_int);
        return e;
    }
    auto [q_tilde, noise] = detail::estimate_probability(sampler, e.outcome, gamma, rng, e.q);
    e.q_tilde = q_tilde;
    e.noise_event = noise;
    e.estimate = q_tilde * static_cast<double>(scale_int);
    return e;
}

/// Squashed reduction step: y ~ B(0,k)^n, estimate q~_y 2^{kn} Var / orbit(y).
inline Estimate squashed_additive_estimator(const SamplerHandle &sampler, const PolynomialSpec &spec, unsigned k,
                                            double gamma, RandomSource &rng) {
    const auto &t = sampler.target();
    if (t.class_k() != k || t.length() != spec.n_vars()) {
        fail(ErrorCode::ShapeMismatch, "sampler does not target the squashed table of this polynomial");
    }
    Estimate e;
    const auto draw = dist::sample_binomial_assignment(spec, k, rng);
    e.values.assign(draw.assignment.values().begin(), draw.assignment.values().end());
    std::uint64_t index = 0;
    for (auto v : e.values) index = index * (k + 1) + static_cast<std::uint64_t>((v + static_cast<std::int64_t>(k)) / 2);
    e.outcome = index;
    const BigInt orbit = dist::orbit_weight(e.values, k);
    const Rational scale(((BigInt(1) << (std::size_t{k} * spec.n_vars())) * dist::variance_closed_form(spec, k)), orbit);
    const auto exact = sampler.exact_probability(index);
    if (gamma == 0.0 && exact) {
        e.q = static_cast<double>(*exact);
        e.q_tilde = e.q;
        e.estimate = static_cast<double>(*exact * scale);
        return e;
    }
    auto [q_tilde, noise] = detail::estimate_probability(sampler, index, gamma, rng, e.q);
    e.q_tilde = q_tilde;
    e.noise_event = noise;
    e.estimate = q_tilde * static_cast<double>(scale);
    return e;
}

// ---------------------------------------------------------------------------
// Reductions

enum class ReductionKind { Additive, Squashed };
enum class Adversary { Greedy, Concentrated };

struct ReductionConfig {
    PolynomialSpec spec = PolynomialSpec::permanent(2);
    ReductionKind kind = ReductionKind::Additive;
    unsigned ell = 2;  // additive
    unsigned k = 1;    // squashed
    double epsilon = 0.5;
    double delta = 0.25;
    std::optional<double> beta;   // overrides the schedule
    std::optional<double> gamma;  // overrides the schedule
    std::uint64_t trials = 1000;
    std::uint64_t seed = 0;
    Adversary adversary = Adversary::Greedy;
    std::uint64_t concentrated_outcome = 0;
    bool probability_query = true;
    unsigned threads = 1;
    Guards guards{};
};

struct TrialRecord {
    std::uint64_t trial = 0;
    std::uint64_t outcome = 0;
    std::vector<std::int64_t> values;
    double estimate = 0;
    std::optional<double> truth;
    double error = 0;
    bool failed = false;
    bool delta_event = false;  // |p - q| (per orbit) above eps / 2 scaled
    bool mass_event = false;   // q (per orbit) above j scaled
    bool noise_event = false;  // |q~ - q| > gamma q
};

struct ReductionReport {
    ReductionKind kind = ReductionKind::Additive;
    std::string polynomial;
    unsigned ell = 0;
    unsigned k = 0;
    Schedule schedule;
    std::uint64_t seed = 0;
    std::uint64_t trials = 0;
    double bound_scale = 0;     // m (plain) or Var (squashed)
    double additive_bound = 0;  // eps * bound_scale
    double realized_tv = 0;
    std::uint64_t failures = 0;
    double empirical_failure_rate = 0;
    std::uint64_t delta_events = 0;
    std::uint64_t mass_events = 0;
    std::uint64_t noise_events = 0;
    /// Every failure lies in one of the three events (checked when the
    /// schedule is sound).
    bool union_bound_consistent = true;
    std::vector<TrialRecord> records;

    bool within_delta() const { return empirical_failure_rate <= schedule.delta; }
};

namespace detail {

inline double exact_truth(const espoly::MonomialList &monomials, ReductionKind kind, unsigned ell,
                          std::span<const std::int64_t> values) {
    if (kind == ReductionKind::Squashed) {
        const BigInt q = espoly::evaluate_integer_by_enumeration(monomials, values);
        return static_cast<double>(q * q);
    }
    const auto sum = espoly::evaluate_roots_by_enumeration(monomials, ell, values);
    if (ell <= 2) return static_cast<double>(sum.integer_norm_squared());
    return sum.norm_squared();
}

}  // namespace detail

inline ReductionReport run_reduction(const ReductionConfig &config) {
    const auto &spec = config.spec;
    ReductionReport report;
    report.kind = config.kind;
    report.polynomial = spec.name();
    report.seed = config.seed;
    report.trials = config.trials;
    report.schedule = Schedule::from(config.epsilon, config.delta);
    if (config.beta) report.schedule.beta = *config.beta;
    if (config.gamma) report.schedule.gamma = *config.gamma;
    const Schedule &s = report.schedule;
    if (s.beta < 0 || s.gamma < 0) fail(ErrorCode::InvalidArgument, "beta and gamma must be non-negative");

    const bool squashed = config.kind == ReductionKind::Squashed;
    ProbabilityTable target;
    double outcome_space = 0;  // ell^n or 2^{kn}
    if (squashed) {
        report.k = config.k;
        target = dist::exact_table_squashed(spec, config.k, config.guards, config.threads);
        report.bound_scale = static_cast<double>(dist::variance_closed_form(spec, config.k));
        outcome_space = std::ldexp(1.0, static_cast<int>(config.k * spec.n_vars()));
    } else {
        report.ell = config.ell;
        target = dist::exact_table_roots(spec, config.ell, config.guards, config.threads);
        report.bound_scale = static_cast<double>(spec.monomial_count());
        outcome_space = static_cast<double>(target.size());
    }
    report.additive_bound = s.epsilon * report.bound_scale;

    RandomSource sampler_rng(config.seed, 0);
    SamplerHandle sampler = config.adversary == Adversary::Greedy
                                ? make_perturbed_sampler(target, s.beta, sampler_rng)
                                : make_concentrated_sampler(target, s.beta, config.concentrated_outcome);
    if (!config.probability_query) sampler = sampler.without_probability_query();
    report.realized_tv = sampler.realized_tv();

    const espoly::MonomialList monomials(spec, config.guards);
    report.records.resize(config.trials);
    parallel_for(config.trials, config.threads, [&](std::uint64_t begin, std::uint64_t end) {
        for (std::uint64_t t = begin; t < end; ++t) {
            RandomSource rng(config.seed, t + 1);
            const Estimate e = squashed ? squashed_additive_estimator(sampler, spec, config.k, s.gamma, rng)
                                        : additive_estimator(sampler, spec, config.ell, s.gamma, rng);
            TrialRecord &r = report.records[t];
            r.trial = t;
            r.outcome = e.outcome;
            r.values = e.values;
            r.estimate = e.estimate;
            r.truth = detail::exact_truth(monomials, config.kind, config.ell, e.values);
            r.error = std::abs(e.estimate - *r.truth);
            r.failed = r.error > report.additive_bound;
            double per_orbit = 1.0;
            if (squashed) per_orbit = static_cast<double>(dist::orbit_weight(e.values, config.k));
            const double p = target[e.outcome];
            r.delta_event = std::abs(p - e.q) / per_orbit > s.epsilon / 2.0 / outcome_space;
            r.mass_event = e.q / per_orbit > s.markov_j / outcome_space;
            r.noise_event = e.noise_event;
        }
    });

    for (const auto &r : report.records) {
        report.failures += r.failed;
        report.delta_events += r.delta_event;
        report.mass_events += r.mass_event;
        report.noise_events += r.noise_event;
        if (r.failed && !(r.delta_event || r.mass_event || r.noise_event) && s.sound()) {
            report.union_bound_consistent = false;
        }
    }
    report.empirical_failure_rate =
        config.trials ? static_cast<double>(report.failures) / static_cast<double>(config.trials) : 0.0;
    return report;
}

inline ReductionReport run_additive_reduction(ReductionConfig config) {
    config.kind = ReductionKind::Additive;
    return run_reduction(config);
}

inline ReductionReport run_squashed_reduction(ReductionConfig config) {
    config.kind = ReductionKind::Squashed;
    return run_reduction(config);
}

// ---------------------------------------------------------------------------
// Multiplicative lift

struct LiftReport {
    double p_value = 0;
    double epsilon_prime = 0;
    double delta_prime = 0;
    double variance = 0;
    std::uint64_t trials = 0;
    std::uint64_t zero_truth_trials = 0;
    std::uint64_t nonzero_trials = 0;
    std::uint64_t lifted_failures = 0;
    std::uint64_t additive_failures = 0;       // among nonzero trials
    std::uint64_t anticoncentration_events = 0;  // Q^2 < Var / p, among nonzero trials
    double lifted_failure_rate = 0;
    double additive_failure_rate = 0;
    double anticoncentration_rate = 0;
    /// Every lifted failure is an additive failure or an anti-concentration
    /// event, trial by trial.
    bool union_bound_holds = true;
    std::vector<std::uint64_t> lifted_failure_trials;
};

/// p(n, 1/delta) = n^2 / delta.
inline double polynomial_n2_over_delta(unsigned n, double delta) { return static_cast<double>(n) * n / delta; }

inline LiftReport multiplicative_lift(const ReductionReport &additive, double p_value) {
    if (!(p_value > 0)) fail(ErrorCode::InvalidArgument, "p must be positive");
    LiftReport lift;
    lift.p_value = p_value;
    lift.epsilon_prime = additive.schedule.epsilon * p_value;
    lift.delta_prime = 2 * additive.schedule.delta;
    lift.variance = additive.bound_scale;
    lift.trials = additive.records.size();
    if (additive.records.size() != additive.trials) {
        fail(ErrorCode::MissingTruthValues, "report carries no per-trial records");
    }
    const double anticoncentration_threshold = additive.bound_scale / p_value;
    for (const auto &r : additive.records) {
        if (!r.truth) fail(ErrorCode::MissingTruthValues, "trial " + std::to_string(r.trial) + " has no truth value");
        const double truth = *r.truth;
        if (truth == 0) {
            ++lift.zero_truth_trials;
            continue;
        }
        ++lift.nonzero_trials;
        const bool lifted_fail = r.error > lift.epsilon_prime * truth;
        const bool additive_fail = r.error > additive.additive_bound;
        const bool low = truth < anticoncentration_threshold;
        lift.lifted_failures += lifted_fail;
        lift.additive_failures += additive_fail;
        lift.anticoncentration_events += low;
        if (lifted_fail) {
            lift.lifted_failure_trials.push_back(r.trial);
            if (!additive_fail && !low) lift.union_bound_holds = false;
        }
    }
    if (lift.nonzero_trials) {
        const double n = static_cast<double>(lift.nonzero_trials);
        lift.lifted_failure_rate = lift.lifted_failures / n;
        lift.additive_failure_rate = lift.additive_failures / n;
        lift.anticoncentration_rate = lift.anticoncentration_events / n;
    }
    return lift;
}

// ---------------------------------------------------------------------------
// Anti-concentration

struct WilsonInterval {
    double lo = 0;
    double hi = 0;
};

inline WilsonInterval wilson_interval(std::uint64_t successes, std::uint64_t total, double z) {
    if (total == 0) return {0.0, 1.0};
    const double n = static_cast<double>(total);
    const double p = static_cast<double>(successes) / n;
    const double z2 = z * z;
    const double denom = 1 + z2 / n;
    const double center = (p + z2 / (2 * n)) / denom;
    const double half = z * std::sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / denom;
    return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

/// Sampling domain: B(0,k)^n (k = 1 gives uniform +-1) or uniform roots of
/// unity of order ell.
struct AnticoncentrationDomain {
    enum class Kind { Binomial, Roots } kind = Kind::Binomial;
    unsigned param = 1;

    static AnticoncentrationDomain binomial(unsigned k) { return {Kind::Binomial, k}; }
    static AnticoncentrationDomain roots(unsigned ell) { return {Kind::Roots, ell}; }
};

inline constexpr double kDefaultWilsonZ = 3.2905;  // two-sided 99.9%

struct TailRow {
    double fraction = 0;   // threshold = fraction * Var
    double threshold = 0;
    std::uint64_t count = 0;
    std::uint64_t samples = 0;
    double estimate = 0;
    WilsonInterval interval;
};

struct AnticoncentrationTable {
    std::string polynomial;
    AnticoncentrationDomain domain;
    double variance = 0;
    std::uint64_t samples = 0;
    std::uint64_t seed = 0;
    double z = kDefaultWilsonZ;
    std::uint64_t zero_count = 0;
    std::vector<TailRow> rows;
};

/// Empirical Pr[|Q|^2 < fraction * Var] per threshold. Evidence only.
inline AnticoncentrationTable anticoncentration_experiment(const PolynomialSpec &spec, AnticoncentrationDomain domain,
                                                           std::uint64_t samples, const std::vector<double> &fractions,
                                                           RandomSource &rng, double z = kDefaultWilsonZ) {
    if (spec.is_lifted()) fail(ErrorCode::UnsupportedFamily, "experiment runs on the base polynomial");
    if (domain.param == 0) fail(ErrorCode::InvalidArgument, "domain parameter must be positive");
    AnticoncentrationTable table;
    table.polynomial = spec.name();
    table.domain = domain;
    table.samples = samples;
    table.seed = rng.seed();
    table.z = z;
    const bool binomial = domain.kind == AnticoncentrationDomain::Kind::Binomial;
    table.variance = binomial ? static_cast<double>(dist::variance_closed_form(spec, domain.param))
                              : static_cast<double>(spec.monomial_count());
    std::vector<double> squares(samples);
    std::vector<std::int64_t> values(spec.n_vars());
    for (std::uint64_t s = 0; s < samples; ++s) {
        if (binomial) {
            for (auto &v : values) v = dist::sample_binomial_value(domain.param, rng);
            const BigInt q = espoly::evaluate_integer_fast(spec, values);
            squares[s] = static_cast<double>(q * q);
        } else {
            for (auto &v : values) v = static_cast<std::int64_t>(rng.below(domain.param));
            squares[s] = std::norm(espoly::evaluate_roots_fast(spec, domain.param, values));
        }
    }
    for (double q2 : squares) table.zero_count += q2 < 0.5;
    for (double f : fractions) {
        TailRow row;
        row.fraction = f;
        row.threshold = f * table.variance;
        row.samples = samples;
        for (double q2 : squares) row.count += q2 < row.threshold;
        row.estimate = samples ? static_cast<double>(row.count) / static_cast<double>(samples) : 0.0;
        row.interval = wilson_interval(row.count, samples, z);
        table.rows.push_back(row);
    }
    return table;
}

enum class Evaluator { Enumeration, Fast };

struct ExhaustiveRow {
    double fraction = 0;
    BigInt weight;  // number of points of the full grid below the threshold
    Rational probability;
};

struct ExhaustiveTailTable {
    std::string polynomial;
    unsigned k = 1;
    Evaluator evaluator = Evaluator::Fast;
    bool sign_reduced = false;
    BigInt total;  // 2^{kn}
    BigInt zero_weight;
    Rational zero_probability;
    std::vector<ExhaustiveRow> rows;
};

inline constexpr std::uint64_t kExhaustiveLimit = std::uint64_t{1} << 26;

/// Exact Pr_{y ~ B(0,k)^n}[Q(y)^2 < fraction * Var] by enumerating the class
/// grid with orbit weights. For the permanent with odd k, only matrices with
/// a positive first row and column are visited: row and column sign flips
/// preserve Q^2 and the distribution, and act freely with orbits of size
/// 2^{2n-1}.
inline ExhaustiveTailTable anticoncentration_exhaustive(const PolynomialSpec &spec, unsigned k,
                                                        const std::vector<double> &fractions, Evaluator evaluator,
                                                        const Guards &guards = {}) {
    if (spec.is_lifted()) fail(ErrorCode::UnsupportedFamily, "experiment runs on the base polynomial");
    if (k == 0) fail(ErrorCode::InvalidArgument, "k must be >= 1");
    ExhaustiveTailTable out;
    out.polynomial = spec.name();
    out.k = k;
    out.evaluator = evaluator;
    const unsigned n = spec.matrix_dim();
    const std::size_t vars = spec.n_vars();
    out.sign_reduced = spec.family() == espoly::Family::Permanent && k % 2 == 1 && n >= 1;

    // Free positions and the values each may take.
    std::vector<std::size_t> free_positions;
    for (std::size_t p = 0; p < vars; ++p) {
        const bool pinned = out.sign_reduced && (p / n == 0 || p % n == 0);
        if (!pinned) free_positions.push_back(p);
    }
    const unsigned radix = k + 1;
    const unsigned pinned_radix = (k + 1) / 2;  // positive classes only
    const std::size_t pinned_count = vars - free_positions.size();
    const std::uint64_t limit = std::min(guards.max_states, kExhaustiveLimit);
    std::uint64_t grid = checked_power(radix, free_positions.size(), limit);
    grid = checked_power(pinned_radix, pinned_count, limit / grid) * grid;

    std::vector<BigInt> class_size(radix);
    for (unsigned c = 0; c <= k; ++c) class_size[c] = binomial(k, c);
    const BigInt symmetry = out.sign_reduced ? BigInt(1) << (2 * n - 1) : BigInt(1);
    out.total = BigInt(1) << (std::size_t{k} * vars);

    const BigInt variance = dist::variance_closed_form(spec, k);
    std::vector<Rational> thresholds;
    for (double f : fractions) thresholds.push_back(Rational(f) * variance);
    std::vector<BigInt> weights(fractions.size(), 0);
    BigInt zero_weight = 0;

    std::optional<espoly::MonomialList> monomials;
    if (evaluator == Evaluator::Enumeration) monomials.emplace(spec, guards);

    std::vector<std::int64_t> y(vars);
    std::vector<std::uint32_t> free_digits(free_positions.size());
    std::vector<std::uint32_t> pinned_digits(pinned_count);
    const std::uint64_t free_grid = grid / checked_power(pinned_radix, pinned_count, limit);
    for (std::uint64_t idx = 0; idx < grid; ++idx) {
        digits_of(idx % free_grid, radix, free_digits);
        digits_of(idx / free_grid, pinned_radix, pinned_digits);
        BigInt w = symmetry;
        std::size_t fi = 0;
        std::size_t pi = 0;
        for (std::size_t p = 0; p < vars; ++p) {
            unsigned c;
            if (fi < free_positions.size() && free_positions[fi] == p) {
                c = free_digits[fi++];
            } else {
                c = (k + 1) / 2 + pinned_digits[pi++];  // classes with y > 0
            }
            y[p] = 2 * static_cast<std::int64_t>(c) - static_cast<std::int64_t>(k);
            w *= class_size[c];
        }
        const BigInt q = evaluator == Evaluator::Fast ? espoly::evaluate_integer_fast(spec, y)
                                                      : espoly::evaluate_integer_by_enumeration(*monomials, y);
        const BigInt q2 = q * q;
        if (q2 == 0) zero_weight += w;
        for (std::size_t t = 0; t < thresholds.size(); ++t) {
            if (Rational(q2) < thresholds[t]) weights[t] += w;
        }
    }
    out.zero_weight = zero_weight;
    out.zero_probability = Rational(zero_weight, out.total);
    for (std::size_t t = 0; t < fractions.size(); ++t) {
        out.rows.push_back({fractions[t], weights[t], Rational(weights[t], out.total)});
    }
    return out;
}

/// sqrt(n!) / n^{eps n}.
inline double tao_vu_threshold(unsigned n, double eps) {
    return std::exp(0.5 * std::lgamma(n + 1.0) - eps * n * std::log(static_cast<double>(n)));
}

// ---------------------------------------------------------------------------
// Serialization

inline nlohmann::json schedule_to_json(const Schedule &s) {
    return {{"epsilon", s.epsilon}, {"delta", s.delta}, {"beta", s.beta}, {"gamma", s.gamma}, {"markov_j", s.markov_j}};
}

inline nlohmann::json report_to_json(const ReductionReport &r, bool include_records = true) {
    nlohmann::json j{{"kind", r.kind == ReductionKind::Additive ? "additive" : "squashed"},
                     {"polynomial", r.polynomial},
                     {"schedule", schedule_to_json(r.schedule)},
                     {"seed", r.seed},
                     {"trials", r.trials},
                     {"bound_scale", r.bound_scale},
                     {"additive_bound", r.additive_bound},
                     {"realized_tv", r.realized_tv},
                     {"failures", r.failures},
                     {"empirical_failure_rate", r.empirical_failure_rate},
                     {"delta_events", r.delta_events},
                     {"mass_events", r.mass_events},
                     {"noise_events", r.noise_events},
                     {"union_bound_consistent", r.union_bound_consistent}};
    if (r.kind == ReductionKind::Additive) {
        j["ell"] = r.ell;
    } else {
        j["k"] = r.k;
    }
    if (include_records) {
        nlohmann::json records = nlohmann::json::array();
        for (const auto &t : r.records) {
            records.push_back({{"trial", t.trial},
                               {"outcome", t.values},
                               {"estimate", t.estimate},
                               {"truth", t.truth ? nlohmann::json(*t.truth) : nlohmann::json(nullptr)},
                               {"error", t.error},
                               {"failed", t.failed}});
        }
        j["records"] = std::move(records);
    }
    return j;
}

inline void write_records_csv(std::ostream &out, const ReductionReport &r) {
    out << "trial,outcome,estimate,truth,error,failed\n";
    for (const auto &t : r.records) {
        out << t.trial << ',';
        for (std::size_t p = 0; p < t.values.size(); ++p) out << (p ? " " : "") << t.values[p];
        out << ',' << nlohmann::json(t.estimate).dump() << ',' << (t.truth ? nlohmann::json(*t.truth).dump() : "")
            << ',' << nlohmann::json(t.error).dump() << ',' << (t.failed ? 1 : 0) << '\n';
    }
}

inline nlohmann::json lift_to_json(const LiftReport &l) {
    return {{"p", l.p_value},
            {"epsilon_prime", l.epsilon_prime},
            {"delta_prime", l.delta_prime},
            {"variance", l.variance},
            {"trials", l.trials},
            {"zero_truth_trials", l.zero_truth_trials},
            {"nonzero_trials", l.nonzero_trials},
            {"lifted_failures", l.lifted_failures},
            {"additive_failures", l.additive_failures},
            {"anticoncentration_events", l.anticoncentration_events},
            {"lifted_failure_rate", l.lifted_failure_rate},
            {"additive_failure_rate", l.additive_failure_rate},
            {"anticoncentration_rate", l.anticoncentration_rate},
            {"union_bound_holds", l.union_bound_holds}};
}

inline nlohmann::json anticoncentration_to_json(const AnticoncentrationTable &t) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto &r : t.rows) {
        rows.push_back({{"fraction", r.fraction},
                        {"threshold", r.threshold},
                        {"count", r.count},
                        {"samples", r.samples},
                        {"estimate", r.estimate},
                        {"ci", {r.interval.lo, r.interval.hi}}});
    }
    return {{"polynomial", t.polynomial},
            {"domain", t.domain.kind == AnticoncentrationDomain::Kind::Binomial ? "binomial" : "roots"},
            {"param", t.domain.param},
            {"variance", t.variance},
            {"samples", t.samples},
            {"z", t.z},
            {"zero_count", t.zero_count},
            {"rows", std::move(rows)}};
}

inline nlohmann::json exhaustive_to_json(const ExhaustiveTailTable &t) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto &r : t.rows) {
        rows.push_back({{"fraction", r.fraction}, {"weight", r.weight.str()}, {"probability", to_fraction_string(r.probability)}});
    }
    return {{"polynomial", t.polynomial},
            {"k", t.k},
            {"evaluator", t.evaluator == Evaluator::Fast ? "fast" : "enumeration"},
            {"sign_reduced", t.sign_reduced},
            {"total", t.total.str()},
            {"zero_probability", to_fraction_string(t.zero_probability)},
            {"rows", std::move(rows)}};
}

}  // namespace qfs::hardness

#endif  // QFS_HARDNESS_HPP
