#pragma once

// Security analysis: leakage bound for a dishonest Alice, and cheating
// strategies for a dishonest Bob (non-legal pure signals, entangled signals).

#include <qpq/errors.hpp>
#include <qpq/protocol.hpp>
#include <qpq/qstate.hpp>
#include <qpq/random.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace qpq {

inline constexpr std::size_t max_enumerated_database = 16;
inline constexpr std::size_t max_ghz_database = 12;

// ---------------------------------------------------------------------------
// Leakage bound
// ---------------------------------------------------------------------------

enum class holevo_method { analytic, enumerate };

// Holevo quantity of the uniform ensemble of all 2^{N+1} honest signals, in
// bits. `analytic` returns log2(N+1); `enumerate` builds the ensemble and
// evaluates S(rho) - mean S(pure) numerically.
inline double holevo_bound(std::size_t n, holevo_method method) {
    if (n < 1) throw invalid_parameter("database size must be >= 1");
    if (method == holevo_method::analytic) return std::log2(static_cast<double>(n + 1));
    if (n > max_enumerated_database)
        throw resource_limit("enumerated Holevo bound supports N <= " + std::to_string(max_enumerated_database));

    const std::size_t modes = n + 1;
    const std::size_t count = std::size_t{1} << modes;
    std::vector<mode_vector> states;
    states.reserve(count);
    for (std::uint64_t mask = 0; mask < count; ++mask) states.push_back(prepare_signal(phase_string::from_mask(modes, mask)));
    const std::vector<double> probs(count, 1.0 / static_cast<double>(count));

    const double mixed = von_neumann_entropy(ensemble_density(states, probs));
    double pure = 0.0;
    for (const auto& s : states) pure += von_neumann_entropy(density_operator::projector(s.amplitudes()));
    return mixed - pure / static_cast<double>(count);
}

// ---------------------------------------------------------------------------
// Pure-state attack
// ---------------------------------------------------------------------------

// Alice's (r, k, d) statistics for an arbitrary signal with r uniform on 1..N.
class outcome_distribution {
public:
    explicit outcome_distribution(const mode_vector& a) : modes_(a.size()), probs_(2 * a.size() * (a.size() - 1)) {
        const double weight = 1.0 / static_cast<double>(database_size());
        for (std::size_t r = 1; r < modes_; ++r) {
            const auto table = interfere(a, r);
            for (std::size_t j = 0; j < 2 * modes_; ++j) probs_[(r - 1) * 2 * modes_ + j] = table.probabilities()[j] * weight;
        }
    }

    std::size_t database_size() const noexcept { return modes_ - 1; }
    std::size_t mode_count() const noexcept { return modes_; }

    double probability(std::size_t shift, std::size_t pair, detector d) const { return probs_[cell(shift, pair, d)]; }
    double marginal(std::size_t shift, std::size_t pair) const {
        return probability(shift, pair, detector::d0) + probability(shift, pair, detector::d1);
    }

    // Flat cell index ((r - 1) * L + k) * 2 + d.
    std::size_t cell(std::size_t shift, std::size_t pair, detector d) const {
        if (shift == 0 || shift >= modes_ || pair >= modes_) throw invalid_parameter("outcome cell out of range");
        return (shift - 1) * 2 * modes_ + outcome_table::index(pair, d);
    }
    std::span<const double> cells() const noexcept { return probs_; }

private:
    std::size_t modes_;
    std::vector<double> probs_;
};

inline outcome_distribution joint_outcome_distribution(const mode_vector& a) { return outcome_distribution(a); }

struct pmin_report {
    double pmin = 0.0;
    std::vector<double> per_shift; // entry r - 1
    bool is_legal = false;
};

// Smallest probability that Bob cannot predict Alice's recorded bit:
//   sum over r = 1..N and k = 0..N of min(|a_k + a_{k+r}|^2, |a_k - a_{k+r}|^2) / 4N.
inline pmin_report pmin(const mode_vector& a) {
    const std::size_t modes = a.size();
    const std::size_t n = modes - 1;
    pmin_report rep;
    rep.per_shift.assign(n, 0.0);
    for (std::size_t r = 1; r <= n; ++r) {
        double sum = 0.0;
        for (std::size_t k = 0; k < modes; ++k) {
            const amplitude& x = a[k];
            const amplitude& y = a[cyclic_add(k, r, modes)];
            sum += std::min(std::norm(x + y), std::norm(x - y));
        }
        rep.per_shift[r - 1] = sum / (4.0 * static_cast<double>(n));
    }
    for (double c : rep.per_shift) rep.pmin += c;
    rep.is_legal = rep.pmin <= exact_tolerance;
    return rep;
}

// max over sign strings S of |<Psi_S|a>|^2.
//
// For a fixed rotation theta the best signs are sgn Re(e^{-i theta} a_k); the
// sign pattern only changes where some Re(e^{-i theta} a_k) crosses zero, so
// one candidate per interval between those crossings covers every optimum.
inline double legal_overlap(const mode_vector& a) {
    const std::size_t modes = a.size();
    std::vector<double> breaks;
    breaks.reserve(modes + 1);
    for (std::size_t k = 0; k < modes; ++k) {
        if (std::abs(a[k]) == 0.0) continue;
        double b = std::fmod(std::arg(a[k]) + std::numbers::pi / 2, std::numbers::pi);
        if (b < 0.0) b += std::numbers::pi;
        breaks.push_back(b);
    }
    if (breaks.empty()) return 0.0;
    std::sort(breaks.begin(), breaks.end());
    breaks.push_back(breaks.front() + std::numbers::pi);

    double best = 0.0;
    for (std::size_t j = 0; j + 1 < breaks.size(); ++j) {
        const double theta = 0.5 * (breaks[j] + breaks[j + 1]);
        const amplitude rot = std::polar(1.0, -theta);
        amplitude sum{0.0, 0.0};
        for (std::size_t k = 0; k < modes; ++k) sum += (rot * a[k]).real() >= 0.0 ? a[k] : -a[k];
        best = std::max(best, std::norm(sum));
    }
    return std::min(1.0, best / static_cast<double>(modes));
}

// Phase-invariant distance sqrt(1 - max_S |<Psi_S|a>|^2) to the honest family.
inline double legal_distance(const mode_vector& a) { return std::sqrt(std::max(0.0, 1.0 - legal_overlap(a))); }

// ---------------------------------------------------------------------------
// Entangled attack
// ---------------------------------------------------------------------------

enum class ancilla_kind { qubit_register, generic };

struct entangled_attack {
    joint_state joint;
    ancilla_kind kind = ancilla_kind::generic;

    // Qubit q of a register ancilla is bit q of the ancilla index.
    std::size_t qubit_count() const {
        return kind == ancilla_kind::qubit_register ? static_cast<std::size_t>(std::countr_zero(joint.ancilla_dim())) : 0;
    }
};

// Bob keeps one qubit per pulse, entangled with the pulse sign:
//   sum_S |s_0 ... s_N> (x) sum_k (-1)^{s_k} |k>,  normalized over all 2^{N+1} strings.
inline entangled_attack build_ghz_attack(std::size_t n) {
    if (n < 1) throw invalid_parameter("database size must be >= 1");
    if (n > max_ghz_database) throw resource_limit("GHZ attack supports N <= " + std::to_string(max_ghz_database));
    const std::size_t modes = n + 1;
    const std::size_t dim = std::size_t{1} << modes;
    const double c = 1.0 / std::sqrt(static_cast<double>(modes) * static_cast<double>(dim));
    std::vector<amplitude> amps(dim * modes);
    for (std::size_t s = 0; s < dim; ++s)
        for (std::size_t k = 0; k < modes; ++k) amps[s * modes + k] = ((s >> k) & 1U) ? -c : c;
    return {joint_state(dim, modes, std::move(amps)), ancilla_kind::qubit_register};
}

enum class strategy_kind { honest_z, privacy_x, custom_basis };

struct bob_strategy {
    strategy_kind kind = strategy_kind::honest_z;
    // custom_basis only: row j is the j-th measurement vector; labels[j] is the
    // sign string Bob assumes after outcome j.
    Eigen::MatrixXcd basis;
    std::vector<phase_string> labels;

    static bob_strategy honest_z() { return {strategy_kind::honest_z, {}, {}}; }
    static bob_strategy privacy_x() { return {strategy_kind::privacy_x, {}, {}}; }
    static bob_strategy custom(Eigen::MatrixXcd rows, std::vector<phase_string> labels) {
        const auto d = rows.rows();
        if (rows.cols() != d) throw invalid_parameter("custom basis must be square");
        const Eigen::MatrixXcd gram = rows * rows.adjoint();
        if ((gram - Eigen::MatrixXcd::Identity(d, d)).cwiseAbs().maxCoeff() > norm_tolerance)
            throw invalid_parameter("custom basis rows are not orthonormal");
        if (labels.size() != static_cast<std::size_t>(d)) throw invalid_parameter("one label per basis vector required");
        return {strategy_kind::custom_basis, std::move(rows), std::move(labels)};
    }
};

inline const char* to_string(strategy_kind k) {
    switch (k) {
    case strategy_kind::honest_z: return "z";
    case strategy_kind::privacy_x: return "x";
    default: return "custom";
    }
}

struct attack_run_record {
    std::size_t pair = 0; // t
    detector det = detector::d0;
    std::uint8_t alice_bit = 0;
    std::size_t alice_shift = 0; // ground truth r, hidden from Bob
    std::uint8_t bob_bit_guess = 0;
    std::optional<std::size_t> bob_r_guess;
    bool privacy_breached = false;
    bool cheat_detected = false;
};

namespace detail {

// In-place Hadamard on every qubit of a 2^q register.
inline void hadamard_all(std::vector<amplitude>& v) {
    const double h = 1.0 / std::numbers::sqrt2;
    for (std::size_t half = 1; half < v.size(); half <<= 1) {
        for (std::size_t base = 0; base < v.size(); base += 2 * half) {
            for (std::size_t j = base; j < base + half; ++j) {
                const amplitude x = v[j];
                const amplitude y = v[j + half];
                v[j] = h * (x + y);
                v[j + half] = h * (x - y);
            }
        }
    }
}

template <class Rng>
std::size_t measure_register(std::span<const amplitude> state, Rng& rng) {
    std::vector<double> probs(state.size());
    for (std::size_t j = 0; j < state.size(); ++j) probs[j] = std::norm(state[j]);
    return sample_index(probs, rng);
}

} // namespace detail

// One query against a dishonest Bob holding the ancilla of `attack`. Alice
// picks a private r, measures, announces t; Bob then measures his ancilla
// according to `strategy` and commits to the key bit at Alice's position.
template <class Rng>
attack_run_record run_entangled_attack(const entangled_attack& attack, const bob_strategy& strategy, std::size_t n, Rng& rng) {
    const std::size_t modes = attack.joint.mode_count();
    if (modes != n + 1) throw invalid_parameter("attack mode count does not match N + 1");
    const std::size_t dim = attack.joint.ancilla_dim();
    if (strategy.kind != strategy_kind::custom_basis) {
        if (attack.kind != ancilla_kind::qubit_register || dim != (std::size_t{1} << modes))
            throw invalid_parameter("Z/X strategies need one ancilla qubit per pulse");
    } else {
        if (static_cast<std::size_t>(strategy.basis.rows()) != dim) throw invalid_parameter("custom basis dimension != ancilla dimension");
        for (const auto& label : strategy.labels)
            if (label.size() != modes) throw invalid_parameter("custom basis label length != N + 1");
    }

    attack_run_record rec;
    rec.alice_shift = uniform_index(rng, 1, n);
    const auto outcomes = interfere_joint(attack.joint, rec.alice_shift);
    std::vector<double> probs;
    probs.reserve(outcomes.size());
    for (const auto& o : outcomes) probs.push_back(o.probability);
    const auto& hit = outcomes[sample_index(probs, rng)];
    rec.pair = hit.pair;
    rec.det = hit.det;
    rec.alice_bit = static_cast<std::uint8_t>(hit.det == detector::d1);
    const std::size_t known = derive_known_position(rec.pair, rec.alice_shift, n);

    switch (strategy.kind) {
    case strategy_kind::honest_z: {
        const std::size_t s = detail::measure_register(hit.ancilla, rng);
        rec.bob_bit_guess = derive_key_bob(phase_string::from_mask(modes, s), rec.pair)[known];
        break;
    }
    case strategy_kind::privacy_x: {
        std::vector<amplitude> rotated = hit.ancilla;
        detail::hadamard_all(rotated);
        const std::size_t minus = detail::measure_register(rotated, rng);
        for (std::size_t q = 0; q < modes; ++q) {
            if (q != rec.pair && ((minus >> q) & 1U)) {
                rec.bob_r_guess = (q + modes - rec.pair) % modes;
                break;
            }
        }
        rec.privacy_breached = rec.bob_r_guess.has_value();
        rec.bob_bit_guess = static_cast<std::uint8_t>(uniform_index(rng, 0, 1));
        break;
    }
    case strategy_kind::custom_basis: {
        Eigen::Map<const Eigen::VectorXcd> anc(hit.ancilla.data(), static_cast<Eigen::Index>(dim));
        const Eigen::VectorXcd proj = strategy.basis.conjugate() * anc;
        std::vector<double> p(dim);
        for (std::size_t j = 0; j < dim; ++j) p[j] = std::norm(proj[static_cast<Eigen::Index>(j)]);
        const std::size_t j = sample_index(p, rng);
        rec.bob_bit_guess = derive_key_bob(strategy.labels[j], rec.pair)[known];
        break;
    }
    }
    rec.cheat_detected = rec.bob_bit_guess != rec.alice_bit;
    return rec;
}

// ---------------------------------------------------------------------------
// Numerical exploration of the pmin landscape
// ---------------------------------------------------------------------------

struct search_report {
    std::size_t samples = 0;
    double min_pmin = std::numeric_limits<double>::infinity();
    double min_pmin_nonlegal = std::numeric_limits<double>::infinity(); // distance > nonlegal_distance
    double min_gap_ratio = std::numeric_limits<double>::infinity();      // min pmin / distance^2
    std::vector<double> injected_pmin;
    double refined_pmin = std::numeric_limits<double>::infinity();
    double refined_distance = 0.0;
    std::vector<mode_vector> counterexamples;
};

struct search_options {
    double nonlegal_distance = 0.1;
    double counterexample_pmin = 1e-6;
    double counterexample_distance = 1e-2;
    std::size_t max_sweeps = 200;
};

namespace detail {

inline mode_vector from_polar(std::span<const double> mags, std::span<const double> phases) {
    std::vector<amplitude> amps(mags.size());
    for (std::size_t k = 0; k < mags.size(); ++k) amps[k] = std::polar(std::abs(mags[k]), phases[k]);
    return mode_vector::normalized(std::move(amps));
}

// Coordinate descent on magnitudes and phases; returns the best state seen.
inline mode_vector refine_pmin(const mode_vector& start, std::size_t max_sweeps) {
    const std::size_t modes = start.size();
    std::vector<double> mags(modes);
    std::vector<double> phases(modes);
    for (std::size_t k = 0; k < modes; ++k) {
        mags[k] = std::abs(start[k]);
        phases[k] = std::arg(start[k]);
    }
    double best = pmin(start).pmin;
    double step = 0.1;
    for (std::size_t sweep = 0; sweep < max_sweeps && step > 1e-7; ++sweep) {
        bool improved = false;
        for (std::size_t k = 0; k < 2 * modes; ++k) {
            double& x = k < modes ? mags[k] : phases[k - modes];
            for (double dir : {step, -step}) {
                const double saved = x;
                x += dir;
                const double val = pmin(from_polar(mags, phases)).pmin;
                if (val < best) {
                    best = val;
                    improved = true;
                    break;
                }
                x = saved;
            }
        }
        if (!improved) step *= 0.5;
    }
    return from_polar(mags, phases);
}

} // namespace detail

template <class Rng>
search_report search_attack_states(std::size_t n, std::size_t samples, Rng& rng, std::span<const mode_vector> injected = {},
                                   const search_options& opt = {}) {
    if (n < 1) throw invalid_parameter("database size must be >= 1");
    if (samples < 1) throw invalid_parameter("need at least one sample");
    const std::size_t modes = n + 1;

    search_report rep;
    rep.samples = samples;
    std::optional<mode_vector> best;
    double best_p = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < samples; ++j) {
        auto a = mode_vector::haar_random(modes, rng);
        const double p = pmin(a).pmin;
        const double dist = legal_distance(a);
        rep.min_pmin = std::min(rep.min_pmin, p);
        if (dist > opt.nonlegal_distance) rep.min_pmin_nonlegal = std::min(rep.min_pmin_nonlegal, p);
        if (dist > 0.0) rep.min_gap_ratio = std::min(rep.min_gap_ratio, p / (dist * dist));
        if (dist > opt.counterexample_distance && p < opt.counterexample_pmin) rep.counterexamples.push_back(a);
        if (p < best_p) {
            best_p = p;
            best = std::move(a);
        }
    }
    for (const auto& a : injected) {
        if (a.size() != modes) throw invalid_parameter("injected state has the wrong length");
        rep.injected_pmin.push_back(pmin(a).pmin);
    }

    const auto refined = detail::refine_pmin(*best, opt.max_sweeps);
    rep.refined_pmin = pmin(refined).pmin;
    rep.refined_distance = legal_distance(refined);
    if (rep.refined_distance > opt.counterexample_distance && rep.refined_pmin < opt.counterexample_pmin)
        rep.counterexamples.push_back(refined);
    return rep;
}

// ---------------------------------------------------------------------------
// Monte Carlo validation of the outcome distribution
// ---------------------------------------------------------------------------

struct deviation_report {
    std::size_t trials = 0;
    double max_abs_deviation = 0.0;
    double max_sigma = 0.0;          // max |f - p| / sqrt(p (1 - p) / trials)
    double chi_square = 0.0;         // over cells with p > 0
    std::size_t degrees_of_freedom = 0;
    std::size_t impossible_hits = 0; // draws landing in p = 0 cells
};

// Compares observed cell counts with the expected distribution.
inline deviation_report compare_frequencies(std::span<const std::size_t> counts, std::span<const double> probs) {
    if (counts.size() != probs.size()) throw invalid_parameter("count and probability tables differ in size");
    deviation_report rep;
    for (auto c : counts) rep.trials += c;
    if (rep.trials == 0) throw invalid_parameter("no samples");
    const double t = static_cast<double>(rep.trials);
    std::size_t live = 0;
    for (std::size_t j = 0; j < counts.size(); ++j) {
        const double p = probs[j];
        const double f = static_cast<double>(counts[j]) / t;
        const double dev = std::abs(f - p);
        rep.max_abs_deviation = std::max(rep.max_abs_deviation, dev);
        if (p <= 0.0) {
            rep.impossible_hits += counts[j];
            if (counts[j] > 0) rep.max_sigma = std::numeric_limits<double>::infinity();
            continue;
        }
        ++live;
        const double expected = p * t;
        const double diff = static_cast<double>(counts[j]) - expected;
        rep.chi_square += diff * diff / expected;
        const double se = std::sqrt(p * (1.0 - p) / t);
        if (se > 0.0) rep.max_sigma = std::max(rep.max_sigma, dev / se);
        else if (dev > 0.0) rep.max_sigma = std::numeric_limits<double>::infinity();
    }
    rep.degrees_of_freedom = live > 0 ? live - 1 : 0;
    return rep;
}

// Samples Alice's (r, k, d) for `trials` signals `a` and checks the empirical
// frequencies against joint_outcome_distribution.
template <class Rng>
deviation_report monte_carlo_vs_analytic(const mode_vector& a, std::size_t trials, Rng& rng) {
    if (trials < 1000) throw invalid_parameter("Monte Carlo validation needs >= 1000 trials");
    const std::size_t modes = a.size();
    const std::size_t n = modes - 1;
    const auto dist = joint_outcome_distribution(a);

    std::vector<outcome_table> tables;
    tables.reserve(n);
    for (std::size_t r = 1; r <= n; ++r) tables.push_back(interfere(a, r));

    std::vector<std::size_t> counts(dist.cells().size(), 0);
    for (std::size_t j = 0; j < trials; ++j) {
        const std::size_t r = uniform_index(rng, 1, n);
        const auto o = sample_outcome(tables[r - 1], rng);
        ++counts[dist.cell(r, o.pair, o.det)];
    }
    return compare_frequencies(counts, dist.cells());
}

} // namespace qpq
