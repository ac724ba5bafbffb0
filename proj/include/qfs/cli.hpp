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

// Batch command line. Every command prints one JSON document
//
//   {"command", "params", "seed", "results", "checks"}
//
// and exits 0 when all checks pass, 1 when a check fails, 2 on a bad
// configuration and 3 when a size guard rejects the request.

#ifndef QFS_CLI_HPP
#define QFS_CLI_HPP

#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "qfs/core.hpp"
#include "qfs/dist.hpp"
#include "qfs/espoly.hpp"
#include "qfs/hardness.hpp"
#include "qfs/qsim.hpp"

namespace qfs::cli {

using nlohmann::json;

enum class ExitCode : int { Ok = 0, CheckFailed = 1, Config = 2, TooLarge = 3 };

inline int exit_code_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::TooLarge:
        case ErrorCode::Overflow:
            return static_cast<int>(ExitCode::TooLarge);
        case ErrorCode::NormalizationFailure:
        case ErrorCode::NumericalInstability:
        case ErrorCode::CollisionDetected:
            return static_cast<int>(ExitCode::CheckFailed);
        default:
            return static_cast<int>(ExitCode::Config);
    }
}

struct Output {
    json params = json::object();
    json results = json::object();
    std::map<std::string, bool> checks;
    std::function<void(std::ostream &)> csv;
};

struct Options {
    std::uint64_t seed = 0;
    unsigned threads = 1;
    std::uint64_t max_states = kStateCeiling;
    std::uint64_t max_monomials = kEnumerationGuard;
    std::string format = "json";
    std::string output;

    std::string family = "permanent";
    unsigned n = 2;
    std::optional<unsigned> lift;
    unsigned ell = 2;
    unsigned k = 1;

    std::string mode = "integer";
    std::string values;
    std::string mask;
    std::string index;

    std::string truth;
    unsigned bits = 0;

    std::uint64_t samples = 0;
    bool verify = false;
    bool check_tv = false;
    bool emit_table = false;

    double epsilon = 0.5;
    double delta = 0.25;
    std::optional<double> beta;
    std::optional<double> gamma;
    std::uint64_t trials = 1000;
    std::string adversary = "greedy";
    std::uint64_t concentrated_outcome = 0;
    bool no_query = false;
    bool records = false;
    std::string base = "squashed";
    std::optional<double> p_value;

    std::string domain = "binomial";
    std::string thresholds = "0,0.0625,0.125,0.25,0.5,1";
    bool exhaustive = false;
    double z = hardness::kDefaultWilsonZ;

    std::string table_a;
    std::string table_b;

    Guards guards() const {
        Guards g;
        g.max_states = max_states;
        g.max_monomials = max_monomials;
        return g;
    }
};

namespace detail {

inline std::vector<std::string> split(const std::string &text) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        if (c == ',' || c == ' ') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

inline std::vector<std::int64_t> parse_ints(const std::string &text) {
    std::vector<std::int64_t> out;
    for (const auto &s : split(text)) {
        try {
            std::size_t used = 0;
            out.push_back(std::stoll(s, &used));
            if (used != s.size()) throw std::invalid_argument(s);
        } catch (const std::exception &) {
            fail(ErrorCode::InvalidArgument, "not an integer: " + s);
        }
    }
    return out;
}

inline std::vector<double> parse_doubles(const std::string &text) {
    std::vector<double> out;
    for (const auto &s : split(text)) {
        try {
            out.push_back(std::stod(s));
        } catch (const std::exception &) {
            fail(ErrorCode::InvalidArgument, "not a number: " + s);
        }
    }
    return out;
}

inline espoly::PolynomialSpec spec_of(const Options &o) {
    return espoly::make_spec(espoly::parse_family(o.family), o.n, o.lift);
}

inline json spec_params(const Options &o) {
    json p{{"family", o.family}, {"n", o.n}};
    if (o.lift) p["lift_k"] = *o.lift;
    return p;
}

inline std::vector<int> truth_table(const Options &o) {
    if (!o.truth.empty()) {
        std::vector<int> f;
        for (auto v : parse_ints(o.truth)) f.push_back(static_cast<int>(v));
        return f;
    }
    if (o.bits == 0) fail(ErrorCode::InvalidArgument, "give --truth or --bits");
    if (o.bits > dist::kMaxFoldBits) fail(ErrorCode::TooLarge, "--bits above 20");
    RandomSource rng(o.seed, 0);
    std::vector<int> f(std::size_t{1} << o.bits);
    for (auto &v : f) v = (rng.bits() & 1) ? 1 : -1;
    return f;
}

inline json table_summary(const dist::ProbabilityTable &t, bool include_probs) {
    json j{{"radix", t.radix()}, {"length", t.length()}, {"size", t.size()}, {"exact", t.is_exact()}};
    if (t.class_k()) j["class_k"] = *t.class_k();
    if (include_probs) j["table"] = dist::table_to_json(t);
    return j;
}

inline std::function<void(std::ostream &)> table_csv(dist::ProbabilityTable t) {
    return [t = std::move(t)](std::ostream &out) { dist::write_table_csv(out, t); };
}

inline dist::ProbabilityTable read_table(const std::string &path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::InvalidArgument, "cannot open " + path);
    try {
        return dist::table_from_json(json::parse(in));
    } catch (const json::exception &e) {
        fail(ErrorCode::InvalidArgument, std::string("bad table file ") + path + ": " + e.what());
    }
}

// --- poly ---------------------------------------------------------------

inline Output poly_info(const Options &o) {
    const auto spec = spec_of(o);
    Output out;
    out.params = spec_params(o);
    out.results = {{"name", spec.name()},
                   {"spec", espoly::spec_to_json(spec)},
                   {"n_vars", spec.n_vars()},
                   {"degree", spec.degree()},
                   {"monomial_count", spec.monomial_count().str()}};
    return out;
}

inline Output poly_eval(const Options &o) {
    const auto spec = spec_of(o);
    Output out;
    out.params = spec_params(o);
    out.params["mode"] = o.mode;
    auto values = parse_ints(o.values);
    out.params["values"] = values;
    const auto guards = o.guards();
    if (o.mode == "integer") {
        out.params["k"] = o.k;
        const auto x = espoly::Assignment::integers(o.k, values);
        const BigInt slow = espoly::evaluate_integer_by_enumeration(spec, x.values(), guards);
        out.results["value"] = slow.str();
        if (spec.matrix_dim() <= espoly::kMaxFastDim) {
            const BigInt fast = espoly::evaluate_integer_fast(spec, x.values());
            out.checks["enumeration_matches_fast"] = fast == slow;
        }
    } else if (o.mode == "roots") {
        out.params["ell"] = o.ell;
        const auto x = espoly::Assignment::roots(o.ell, values);
        const auto sum = espoly::evaluate_roots_by_enumeration(spec, o.ell, x.values(), guards);
        const auto v = sum.value();
        out.results["value"] = {v.real(), v.imag()};
        out.results["norm_squared"] = sum.norm_squared();
        out.results["residue_counts"] = sum.counts;
        if (spec.matrix_dim() <= espoly::kMaxFastDim) {
            const auto fast = espoly::evaluate_roots_fast(spec, o.ell, x.values());
            out.checks["enumeration_matches_fast"] = std::abs(fast - v) <= 1e-9 * std::max(1.0, std::abs(v));
        }
    } else {
        fail(ErrorCode::InvalidArgument, "--mode must be integer or roots");
    }
    return out;
}

inline Output poly_rank(const Options &o) {
    const auto spec = spec_of(o);
    Output out;
    out.params = spec_params(o);
    out.params["mask"] = o.mask;
    const auto mask = espoly::MonomialMask::from_string(o.mask);
    const auto index = espoly::index_of_monomial(spec, mask);
    out.results["rank"] = index.value.str();
    out.checks["round_trip"] = espoly::monomial_of_index(spec, index) == mask;
    return out;
}

inline Output poly_unrank(const Options &o) {
    const auto spec = spec_of(o);
    Output out;
    out.params = spec_params(o);
    out.params["index"] = o.index;
    BigInt value;
    try {
        value = BigInt(o.index);
    } catch (const std::exception &) {
        fail(ErrorCode::InvalidArgument, "not an integer: " + o.index);
    }
    const auto mask = espoly::monomial_of_index(spec, espoly::MonomialIndex{value});
    out.results["mask"] = mask.to_string();
    out.results["variables"] = mask.positions();
    out.checks["round_trip"] = espoly::index_of_monomial(spec, mask).value == value;
    return out;
}

// --- dist ---------------------------------------------------------------

inline Output dist_roots(const Options &o) {
    const auto spec = spec_of(o);
    Output out;
    out.params = spec_params(o);
    out.params["ell"] = o.ell;
    auto t = dist::exact_table_roots(spec, o.ell, o.guards(), o.threads);
    out.results = table_summary(t, true);
    out.checks["normalized"] = true;
    out.csv = table_csv(std::move(t));
    return out;
}

inline Output dist_squashed(const Options &o) {
    const auto spec = spec_of(o);
    Output out;
    out.params = spec_params(o);
    out.params["k"] = o.k;
    auto t = dist::exact_table_squashed(spec, o.k, o.guards(), o.threads);
    out.results = table_summary(t, true);
    out.checks["normalized"] = true;
    out.csv = table_csv(std::move(t));
    return out;
}

inline Output dist_fold(const Options &o) {
    const auto f = truth_table(o);
    Output out;
    out.params = {{"bits", o.bits}, {"truth", o.truth.empty() ? json("random") : json(o.truth)}};
    auto t = dist::exact_table_fold(f);
    out.results = table_summary(t, true);
    out.checks["normalized"] = true;
    out.csv = table_csv(std::move(t));
    return out;
}

inline Output dist_variance(const Options &o) {
    const auto spec = spec_of(o);
    Output out;
    out.params = spec_params(o);
    out.params["k"] = o.k;
    out.params["samples"] = o.samples;
    RandomSource rng(o.seed, 0);
    const auto report = dist::variance(spec, o.k, o.samples, &rng);
    out.results = {{"closed_form", report.closed_form.str()}, {"sum_form", to_fraction_string(report.sum_form)}};
    out.checks["closed_equals_sum_form"] = report.forms_agree();
    if (report.empirical) {
        out.results["empirical"] = *report.empirical;
        out.results["samples"] = report.samples;
        const double closed = static_cast<double>(report.closed_form);
        out.checks["empirical_within_5_sigma_bound"] =
            std::abs(*report.empirical - closed) <= 5 * closed / std::sqrt(static_cast<double>(report.samples));
    }
    return out;
}

// --- sim ----------------------------------------------------------------

inline void add_tv_check(Output &out, const dist::ProbabilityTable &simulated, const dist::ProbabilityTable &analytic,
                         double tolerance) {
    const double tv = dist::tv_distance(simulated, analytic);
    out.results["tv_vs_analytic"] = tv;
    out.results["tv_tolerance"] = tolerance;
    out.checks["tv_within_tolerance"] = tv <= tolerance;
}

inline Output sim_es(const Options &o) {
    const auto spec = spec_of(o);
    Output out;
    out.params = spec_params(o);
    out.params["ell"] = o.ell;
    const auto state = qsim::es_sampler_state(spec, o.ell, o.guards(), o.threads);
    auto simulated = state.measurement_table();
    out.results = table_summary(simulated, o.emit_table);
    out.results["norm"] = state.norm();
    add_tv_check(out, simulated, dist::exact_table_roots(spec, o.ell, o.guards(), o.threads), 1e-9);
    out.csv = table_csv(std::move(simulated));
    return out;
}

inline Output sim_squashed(const Options &o) {
    const auto spec = spec_of(o);
    Output out;
    out.params = spec_params(o);
    out.params["k"] = o.k;
    const auto state = qsim::squashed_sampler_state(spec, o.k, o.guards(), o.threads);
    auto simulated = qsim::squashed_measurement_table(state, o.k);
    out.results = table_summary(simulated, o.emit_table);
    out.results["norm"] = state.norm();
    const auto analytic = dist::exact_table_squashed(spec, o.k, o.guards(), o.threads);
    add_tv_check(out, simulated, analytic, 1e-9);
    double worst = 0;
    const std::uint64_t size = state.size();
    for (std::uint64_t i = 0; i < size; ++i) {
        const double alpha = qsim::squashed_amplitude_closed_form(spec, o.k, analytic.outcome(i), o.guards());
        worst = std::max(worst, std::abs(alpha * alpha - analytic[i]));
    }
    out.results["amplitude_formula_max_deviation"] = worst;
    out.checks["amplitude_formula"] = worst <= 1e-9;
    out.csv = table_csv(std::move(simulated));
    return out;
}

inline Output sim_fold(const Options &o) {
    const auto f = truth_table(o);
    Output out;
    out.params = {{"bits", o.bits}, {"truth", o.truth.empty() ? json("random") : json(o.truth)}};
    auto simulated = qsim::run_fold_sampler_circuit(f, o.threads);
    out.results = table_summary(simulated, o.emit_table);
    add_tv_check(out, simulated, dist::exact_table_fold(f), 1e-12);
    out.csv = table_csv(std::move(simulated));
    return out;
}

// --- squash -------------------------------------------------------------

inline Output squash_matrix(const Options &o) {
    Output out;
    out.params = {{"k", o.k}, {"verify", o.verify}};
    const auto t = qsim::build_squashed_transform(o.k);
    out.results = qsim::transform_to_json(t);
    if (o.verify) {
        out.checks["unitary"] = t.unitarity_residual <= qsim::kUnitarityTolerance;
        out.checks["columns_orthogonal_exact"] = t.columns_orthogonal;
        out.checks["r0"] = std::abs(t.r0 - std::pow(2.0, -0.5 * o.k)) <= 1e-12;
        out.checks["r1"] = std::abs(t.r1 - 1 / std::sqrt(o.k * std::pow(2.0, o.k))) <= 1e-12;
    }
    out.csv = [t](std::ostream &os) {
        os << "row,col,d_tilde,u\n";
        for (unsigned i = 0; i <= t.k; ++i) {
            for (unsigned j = 0; j <= t.k; ++j) os << i << ',' << j << ',' << t.d_tilde[i][j] << ',' << json(t.u(i, j)).dump() << '\n';
        }
    };
    return out;
}

// --- reduce -------------------------------------------------------------

inline hardness::ReductionConfig reduction_config(const Options &o, hardness::ReductionKind kind) {
    hardness::ReductionConfig c;
    c.spec = spec_of(o);
    c.kind = kind;
    c.ell = o.ell;
    c.k = o.k;
    c.epsilon = o.epsilon;
    c.delta = o.delta;
    c.beta = o.beta;
    c.gamma = o.gamma;
    c.trials = o.trials;
    c.seed = o.seed;
    if (o.adversary == "greedy") {
        c.adversary = hardness::Adversary::Greedy;
    } else if (o.adversary == "concentrated") {
        c.adversary = hardness::Adversary::Concentrated;
    } else {
        fail(ErrorCode::InvalidArgument, "--adversary must be greedy or concentrated");
    }
    c.concentrated_outcome = o.concentrated_outcome;
    c.probability_query = !o.no_query;
    c.threads = o.threads;
    c.guards = o.guards();
    return c;
}

inline json reduction_params(const Options &o, hardness::ReductionKind kind) {
    json p = spec_params(o);
    if (kind == hardness::ReductionKind::Additive) {
        p["ell"] = o.ell;
    } else {
        p["k"] = o.k;
    }
    p["trials"] = o.trials;
    p["adversary"] = o.adversary;
    p["probability_query"] = !o.no_query;
    return p;
}

inline Output reduce(const Options &o, hardness::ReductionKind kind) {
    Output out;
    out.params = reduction_params(o, kind);
    const auto report = hardness::run_reduction(reduction_config(o, kind));
    out.params["schedule"] = hardness::schedule_to_json(report.schedule);
    out.results = hardness::report_to_json(report, o.records);
    out.checks["failure_rate_within_delta"] = report.within_delta();
    out.checks["union_bound_consistent"] = report.union_bound_consistent;
    out.csv = [report](std::ostream &os) { hardness::write_records_csv(os, report); };
    return out;
}

inline Output reduce_lift(const Options &o) {
    hardness::ReductionKind kind;
    if (o.base == "squashed") {
        kind = hardness::ReductionKind::Squashed;
    } else if (o.base == "additive") {
        kind = hardness::ReductionKind::Additive;
    } else {
        fail(ErrorCode::InvalidArgument, "--base must be additive or squashed");
    }
    Output out;
    out.params = reduction_params(o, kind);
    out.params["base"] = o.base;
    const auto report = hardness::run_reduction(reduction_config(o, kind));
    const double p = o.p_value.value_or(hardness::polynomial_n2_over_delta(o.n, o.delta));
    out.params["p"] = p;
    out.params["schedule"] = hardness::schedule_to_json(report.schedule);
    const auto lift = hardness::multiplicative_lift(report, p);
    out.results = {{"additive", hardness::report_to_json(report, o.records)}, {"lift", hardness::lift_to_json(lift)}};
    out.checks["union_bound_holds"] = lift.union_bound_holds;
    out.csv = [report](std::ostream &os) { hardness::write_records_csv(os, report); };
    return out;
}

// --- anticon ------------------------------------------------------------

inline Output anticon(const Options &o) {
    const auto spec = spec_of(o);
    const auto fractions = parse_doubles(o.thresholds);
    Output out;
    out.params = spec_params(o);
    out.params["domain"] = o.domain;
    out.params["thresholds"] = fractions;
    out.params["samples"] = o.samples;
    out.params["z"] = o.z;
    hardness::AnticoncentrationDomain domain;
    if (o.domain == "binomial") {
        domain = hardness::AnticoncentrationDomain::binomial(o.k);
        out.params["k"] = o.k;
    } else if (o.domain == "roots") {
        domain = hardness::AnticoncentrationDomain::roots(o.ell);
        out.params["ell"] = o.ell;
    } else {
        fail(ErrorCode::InvalidArgument, "--domain must be binomial or roots");
    }
    std::optional<hardness::AnticoncentrationTable> mc;
    if (o.samples > 0) {
        RandomSource rng(o.seed, 0);
        mc = hardness::anticoncentration_experiment(spec, domain, o.samples, fractions, rng, o.z);
        out.results["monte_carlo"] = hardness::anticoncentration_to_json(*mc);
    }
    if (o.exhaustive) {
        if (domain.kind != hardness::AnticoncentrationDomain::Kind::Binomial) {
            fail(ErrorCode::InvalidArgument, "exhaustive tables are built over B(0,k)^n");
        }
        const auto fast = hardness::anticoncentration_exhaustive(spec, o.k, fractions, hardness::Evaluator::Fast, o.guards());
        const auto slow =
            hardness::anticoncentration_exhaustive(spec, o.k, fractions, hardness::Evaluator::Enumeration, o.guards());
        out.results["exhaustive"] = hardness::exhaustive_to_json(fast);
        bool same = true;
        for (std::size_t i = 0; i < fast.rows.size(); ++i) same = same && fast.rows[i].weight == slow.rows[i].weight;
        out.checks["evaluators_agree"] = same;
        if (mc) {
            bool covered = true;
            for (std::size_t i = 0; i < fast.rows.size(); ++i) {
                const double truth = static_cast<double>(fast.rows[i].probability);
                covered = covered && mc->rows[i].interval.lo <= truth && truth <= mc->rows[i].interval.hi;
            }
            // Evidence, not a gate: a miss is reported but does not fail the run.
            out.results["monte_carlo_covers_exhaustive"] = covered;
        }
    }
    out.csv = [mc](std::ostream &os) {
        os << "fraction,threshold,count,samples,estimate,ci_lo,ci_hi\n";
        if (!mc) return;
        for (const auto &r : mc->rows) {
            os << json(r.fraction).dump() << ',' << json(r.threshold).dump() << ',' << r.count << ',' << r.samples << ','
               << json(r.estimate).dump() << ',' << json(r.interval.lo).dump() << ',' << json(r.interval.hi).dump()
               << '\n';
        }
    };
    return out;
}

inline Output tv(const Options &o) {
    Output out;
    out.params = {{"a", o.table_a}, {"b", o.table_b}};
    const auto a = read_table(o.table_a);
    const auto b = read_table(o.table_b);
    out.results["tv"] = dist::tv_distance(a, b);
    if (a.is_exact() && b.is_exact()) out.results["tv_exact"] = to_fraction_string(dist::tv_distance_exact(a, b));
    return out;
}

}  // namespace detail

/// Parses argv and runs one command. Never throws.
inline int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
    CLI::App app{"Sampling distributions of efficiently specifiable polynomials", "qfs"};
    app.require_subcommand(1);
    app.fallthrough();
    Options o;
    if (const char *env = std::getenv("QFS_SEED")) {
        try {
            o.seed = std::stoull(env);
        } catch (const std::exception &) {
            err << "error: QFS_SEED is not an unsigned integer\n";
            return static_cast<int>(ExitCode::Config);
        }
    }
    app.add_option("--seed", o.seed, "Random seed (default: $QFS_SEED or 0)");
    app.add_option("--threads", o.threads, "Worker threads")->check(CLI::Range(1u, 256u));
    app.add_option("--max-states", o.max_states, "Dense state/table size guard")->check(CLI::Range(std::uint64_t{1}, kStateCeiling));
    app.add_option("--max-monomials", o.max_monomials, "Monomial enumeration guard");
    app.add_option("--format", o.format, "Output format")->check(CLI::IsMember({"json", "csv"}));
    app.add_option("--output", o.output, "Write output to this file instead of stdout");

    std::string command;
    std::function<Output(const Options &)> handler;
    auto leaf = [&](CLI::App *parent, const std::string &name, const std::string &desc,
                    std::function<Output(const Options &)> fn) {
        CLI::App *sub = parent->add_subcommand(name, desc);
        const std::string full = parent == &app ? name : parent->get_name() + " " + name;
        sub->callback([&, full, fn] {
            command = full;
            handler = fn;
        });
        return sub;
    };
    auto add_spec = [&](CLI::App *sub) {
        sub->add_option("--family", o.family, "permanent | hamiltonian_cycle");
        sub->add_option("--n", o.n, "Matrix dimension")->required();
        sub->add_option("--lift", o.lift, "Use the k-lifted polynomial");
    };

    CLI::App *poly = app.add_subcommand("poly", "Polynomial queries");
    poly->require_subcommand(1);
    add_spec(leaf(poly, "info", "Describe a polynomial", detail::poly_info));
    {
        auto *s = leaf(poly, "eval", "Evaluate at an assignment", detail::poly_eval);
        add_spec(s);
        s->add_option("--mode", o.mode, "integer | roots");
        s->add_option("--values", o.values, "Comma-separated values")->required();
        s->add_option("--k", o.k, "Integer bound");
        s->add_option("--ell", o.ell, "Root order");
    }
    {
        auto *s = leaf(poly, "rank", "Monomial mask to index", detail::poly_rank);
        add_spec(s);
        s->add_option("--mask", o.mask, "Bit string")->required();
    }
    {
        auto *s = leaf(poly, "unrank", "Index to monomial mask", detail::poly_unrank);
        add_spec(s);
        s->add_option("--index", o.index, "Monomial index")->required();
    }

    CLI::App *dist_cmd = app.add_subcommand("dist", "Exact distributions");
    dist_cmd->require_subcommand(1);
    {
        auto *s = leaf(dist_cmd, "roots", "Root-of-unity distribution", detail::dist_roots);
        add_spec(s);
        s->add_option("--ell", o.ell, "Root order");
    }
    {
        auto *s = leaf(dist_cmd, "squashed", "Squashed distribution", detail::dist_squashed);
        add_spec(s);
        s->add_option("--k", o.k, "Block size")->required();
    }
    {
        auto *s = leaf(dist_cmd, "fold", "Fourier distribution of a +-1 function", detail::dist_fold);
        s->add_option("--truth", o.truth, "Comma-separated +-1 truth table");
        s->add_option("--bits", o.bits, "Random truth table on this many bits");
    }
    {
        auto *s = leaf(dist_cmd, "variance", "Variance identities", detail::dist_variance);
        add_spec(s);
        s->add_option("--k", o.k, "Block size")->required();
        s->add_option("--samples", o.samples, "Monte Carlo samples");
    }

    CLI::App *sim = app.add_subcommand("sim", "Statevector simulation");
    sim->require_subcommand(1);
    {
        auto *s = leaf(sim, "es", "QFT sampling circuit", detail::sim_es);
        add_spec(s);
        s->add_option("--ell", o.ell, "Qudit dimension");
        s->add_flag("--check-tv", o.check_tv, "Compare with the analytic table (always on)");
        s->add_flag("--emit-table", o.emit_table, "Include the measured table");
    }
    {
        auto *s = leaf(sim, "squashed", "Squashed sampling circuit", detail::sim_squashed);
        add_spec(s);
        s->add_option("--k", o.k, "Block size")->required();
        s->add_flag("--check-tv", o.check_tv, "Compare with the analytic table (always on)");
        s->add_flag("--emit-table", o.emit_table, "Include the measured table");
    }
    {
        auto *s = leaf(sim, "fold", "Hadamard sampling circuit", detail::sim_fold);
        s->add_option("--truth", o.truth, "Comma-separated +-1 truth table");
        s->add_option("--bits", o.bits, "Random truth table on this many bits");
        s->add_flag("--check-tv", o.check_tv, "Compare with the analytic table (always on)");
        s->add_flag("--emit-table", o.emit_table, "Include the measured table");
    }

    CLI::App *squash = app.add_subcommand("squash", "Squashed transform");
    squash->require_subcommand(1);
    {
        auto *s = leaf(squash, "matrix", "Build L D~ R", detail::squash_matrix);
        s->add_option("--k", o.k, "Block size")->required();
        s->add_flag("--verify", o.verify, "Run unitarity and constant checks");
    }

    CLI::App *reduce = app.add_subcommand("reduce", "Average-case reductions");
    reduce->require_subcommand(1);
    auto add_reduce = [&](CLI::App *s) {
        add_spec(s);
        s->add_option("--ell", o.ell, "Root order (additive)");
        s->add_option("--k", o.k, "Block size (squashed)");
        s->add_option("--epsilon", o.epsilon, "Target accuracy");
        s->add_option("--delta", o.delta, "Target failure rate");
        s->add_option("--beta", o.beta, "Override sampler TV error");
        s->add_option("--gamma", o.gamma, "Override counting error");
        s->add_option("--trials", o.trials, "Number of trials");
        s->add_option("--adversary", o.adversary, "greedy | concentrated");
        s->add_option("--concentrated-outcome", o.concentrated_outcome, "Outcome index for the concentrated adversary");
        s->add_flag("--no-query", o.no_query, "Count over sampler randomness with HashSketch");
        s->add_flag("--records", o.records, "Include per-trial records");
    };
    add_reduce(leaf(reduce, "additive", "Uniform roots-of-unity reduction",
                    [](const Options &opt) { return detail::reduce(opt, hardness::ReductionKind::Additive); }));
    add_reduce(leaf(reduce, "squashed", "Binomial reduction through the squashed sampler",
                    [](const Options &opt) { return detail::reduce(opt, hardness::ReductionKind::Squashed); }));
    {
        auto *s = leaf(reduce, "lift", "Multiplicative reclassification", detail::reduce_lift);
        add_reduce(s);
        s->add_option("--base", o.base, "additive | squashed");
        s->add_option("--p", o.p_value, "Value of p(n, 1/delta) (default n^2/delta)");
    }

    {
        auto *s = leaf(&app, "anticon", "Anti-concentration tail tables", detail::anticon);
        add_spec(s);
        s->add_option("--domain", o.domain, "binomial | roots");
        s->add_option("--k", o.k, "Binomial parameter");
        s->add_option("--ell", o.ell, "Root order");
        s->add_option("--samples", o.samples, "Monte Carlo samples");
        s->add_option("--thresholds", o.thresholds, "Comma-separated fractions of Var");
        s->add_flag("--exhaustive", o.exhaustive, "Also enumerate exactly with both evaluators");
        s->add_option("--z", o.z, "Wilson interval z");
    }
    {
        auto *s = leaf(&app, "tv", "Total variation between two table files", detail::tv);
        s->add_option("--a", o.table_a, "First table (JSON)")->required();
        s->add_option("--b", o.table_b, "Second table (JSON)")->required();
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &e) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp &e) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError &e) {
        err << "error: " << e.what() << '\n';
        return static_cast<int>(ExitCode::Config);
    }
    if (!handler) {
        err << "error: no command given\n";
        return static_cast<int>(ExitCode::Config);
    }

    Output result;
    try {
        result = handler(o);
    } catch (const Error &e) {
        err << "error: " << e.what() << '\n';
        return exit_code_for(e.code());
    } catch (const std::exception &e) {
        err << "error: " << e.what() << '\n';
        return static_cast<int>(ExitCode::Config);
    }

    bool ok = true;
    json checks = json::object();
    for (const auto &[name, passed] : result.checks) {
        checks[name] = passed;
        ok = ok && passed;
    }
    std::ostringstream text;
    if (o.format == "csv" && result.csv) {
        result.csv(text);
    } else {
        json doc{{"command", command},
                 {"params", result.params},
                 {"seed", o.seed},
                 {"results", result.results},
                 {"checks", checks}};
        text << doc.dump(2) << '\n';
    }
    if (o.output.empty()) {
        out << text.str();
    } else {
        std::ofstream file(o.output);
        if (!file) {
            err << "error: cannot write " << o.output << '\n';
            return static_cast<int>(ExitCode::Config);
        }
        file << text.str();
    }
    if (!ok) {
        for (const auto &[name, passed] : result.checks) {
            if (!passed) err << "check failed: " << name << '\n';
        }
        return static_cast<int>(ExitCode::CheckFailed);
    }
    return 0;
}

}  // namespace qfs::cli

#endif  // QFS_CLI_HPP
