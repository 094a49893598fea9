#include <qpq/adversary.hpp>

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <vector>

namespace {

using qpq::amplitude;
using qpq::detector;
using qpq::mode_vector;
using qpq::phase_string;

std::vector<amplitude> to_vec(const mode_vector& a) { return {a.amplitudes().begin(), a.amplitudes().end()}; }

mode_vector alt_state() { return mode_vector::normalized({1.0, amplitude{0, 1}, 1.0, amplitude{0, 1}}); }

// --- Holevo ------------------------------------------------------------------

TEST(Holevo, AnalyticValues) {
    EXPECT_DOUBLE_EQ(qpq::holevo_bound(1, qpq::holevo_method::analytic), 1.0);
    EXPECT_DOUBLE_EQ(qpq::holevo_bound(7, qpq::holevo_method::analytic), 3.0);
    EXPECT_THROW(qpq::holevo_bound(0, qpq::holevo_method::analytic), qpq::invalid_parameter);
}

TEST(Holevo, EnumerationMatchesJacobiOracle) {
    for (std::size_t n : {1U, 2U, 3U, 7U}) {
        const double oracle = qpq::oracle::holevo_by_enumeration(n);
        const double value = qpq::holevo_bound(n, qpq::holevo_method::enumerate);
        EXPECT_NEAR(value, oracle, 1e-9) << "N=" << n;
        EXPECT_NEAR(value, std::log2(double(n + 1)), 1e-9) << "N=" << n;
    }
    EXPECT_NEAR(qpq::oracle::holevo_by_enumeration(3), 2.0, 1e-9);
    EXPECT_NEAR(qpq::oracle::holevo_by_enumeration(7), 3.0, 1e-9);
}

TEST(Holevo, EnumerationCap) {
    EXPECT_THROW(qpq::holevo_bound(17, qpq::holevo_method::enumerate), qpq::resource_limit);
    EXPECT_NO_THROW(qpq::holevo_bound(17, qpq::holevo_method::analytic));
}

// --- Outcome distribution -----------------------------------------------------

TEST(OutcomeDistribution, LegalStatesFireOneDetector) {
    for (std::uint64_t mask = 0; mask < 32; ++mask) {
        const auto dist = qpq::joint_outcome_distribution(qpq::prepare_signal(phase_string::from_mask(5, mask)));
        for (std::size_t r = 1; r <= 4; ++r) {
            for (std::size_t k = 0; k < 5; ++k) {
                const bool d0 = dist.probability(r, k, detector::d0) > 1e-15;
                const bool d1 = dist.probability(r, k, detector::d1) > 1e-15;
                EXPECT_NE(d0, d1);
            }
        }
    }
}

TEST(OutcomeDistribution, BasisStateMarginal) {
    const auto dist = qpq::joint_outcome_distribution(mode_vector::basis(4, 0));
    EXPECT_NEAR(dist.marginal(1, 0), 1.0 / 6.0, 1e-12);
}

TEST(OutcomeDistribution, MarginalsAndTotals) {
    qpq::rng_type rng(21);
    for (int j = 0; j < 50; ++j) {
        const std::size_t modes = qpq::uniform_index(rng, 2, 9);
        const std::size_t n = modes - 1;
        const auto a = mode_vector::haar_random(modes, rng);
        const auto dist = qpq::joint_outcome_distribution(a);
        double total = 0.0;
        for (std::size_t r = 1; r <= n; ++r) {
            double per_r = 0.0;
            for (std::size_t k = 0; k < modes; ++k) {
                const double expected = (std::norm(a[k]) + std::norm(a[(k + r) % modes])) / (2.0 * n);
                EXPECT_NEAR(dist.marginal(r, k), expected, 1e-12);
                per_r += dist.marginal(r, k);
            }
            EXPECT_NEAR(per_r, 1.0 / n, 1e-12);
            total += per_r;
        }
        EXPECT_NEAR(total, 1.0, 1e-9);
    }
    const auto dist = qpq::joint_outcome_distribution(mode_vector::basis(3, 1));
    EXPECT_THROW(dist.probability(0, 0, detector::d0), qpq::invalid_parameter);
    EXPECT_THROW(dist.probability(3, 0, detector::d0), qpq::invalid_parameter);
}

// --- pmin ------------------------------------------------------------------------

TEST(Pmin, LegalStatesAreZeroExhaustive) {
    for (std::size_t modes = 2; modes <= 6; ++modes) {
        for (std::uint64_t mask = 0; mask < (1U << modes); ++mask) {
            const auto a = qpq::prepare_signal(phase_string::from_mask(modes, mask));
            const auto rep = qpq::pmin(a);
            EXPECT_LE(rep.pmin, 1e-12);
            EXPECT_TRUE(rep.is_legal);
            EXPECT_LE(qpq::legal_distance(a), 1e-7);
            // arbitrary global phase keeps it legal
            std::vector<amplitude> rotated = to_vec(a);
            for (auto& x : rotated) x *= std::polar(1.0, 0.3 * double(mask + 1));
            EXPECT_LE(qpq::pmin(mode_vector(rotated)).pmin, 1e-12);
        }
    }
}

TEST(Pmin, ReferenceStates) {
    const auto basis = qpq::pmin(mode_vector::basis(4, 0));
    EXPECT_NEAR(basis.pmin, 0.5, 1e-12);
    EXPECT_FALSE(basis.is_legal);
    for (double c : basis.per_shift) EXPECT_NEAR(c, 1.0 / 6.0, 1e-12);

    const auto alt = qpq::pmin(alt_state());
    EXPECT_NEAR(alt.pmin, 1.0 / 3.0, 1e-12);
    ASSERT_EQ(alt.per_shift.size(), 3U);
    EXPECT_NEAR(alt.per_shift[0], 1.0 / 6.0, 1e-12);
    EXPECT_NEAR(alt.per_shift[1], 0.0, 1e-12);
    EXPECT_NEAR(alt.per_shift[2], 1.0 / 6.0, 1e-12);

    EXPECT_NEAR(qpq::oracle::pmin_by_enumeration(to_vec(mode_vector::basis(4, 0))), 0.5, 1e-12);
    EXPECT_NEAR(qpq::oracle::pmin_by_enumeration(to_vec(alt_state())), 1.0 / 3.0, 1e-12);
}

TEST(Pmin, MatchesEnumerationOracleAndStaysInRange) {
    qpq::rng_type rng(31);
    for (int j = 0; j < 500; ++j) {
        const std::size_t modes = qpq::uniform_index(rng, 2, 10);
        const auto a = mode_vector::haar_random(modes, rng);
        const auto rep = qpq::pmin(a);
        EXPECT_NEAR(rep.pmin, qpq::oracle::pmin_by_enumeration(to_vec(a)), 1e-12);
        EXPECT_GE(rep.pmin, 0.0);
        EXPECT_LE(rep.pmin, 0.5 + 1e-12);
        double sum = 0.0;
        for (double c : rep.per_shift) sum += c;
        EXPECT_NEAR(sum, rep.pmin, 1e-12);
    }
}

TEST(Pmin, PhaseAndCyclicSymmetry) {
    qpq::rng_type rng(32);
    for (int j = 0; j < 200; ++j) {
        const std::size_t modes = qpq::uniform_index(rng, 2, 10);
        const auto a = mode_vector::haar_random(modes, rng);
        std::vector<amplitude> phased = to_vec(a);
        const amplitude ph = std::polar(1.0, qpq::uniform01(rng) * 6.283185307179586);
        for (auto& x : phased) x *= ph;
        std::vector<amplitude> cycled(modes);
        for (std::size_t k = 0; k < modes; ++k) cycled[(k + 1) % modes] = a[k];
        const double base = qpq::pmin(a).pmin;
        EXPECT_NEAR(qpq::pmin(mode_vector(phased)).pmin, base, 1e-12);
        EXPECT_NEAR(qpq::pmin(mode_vector(cycled)).pmin, base, 1e-12);
    }
}

// Small perturbations away from the legal family always cost something.
TEST(Pmin, PerturbedLegalStatesArePositive) {
    qpq::rng_type rng(33);
    for (int j = 0; j < 300; ++j) {
        const std::size_t modes = qpq::uniform_index(rng, 2, 8);
        const auto legal = qpq::prepare_signal(phase_string::random(modes, rng));
        const auto noise = mode_vector::haar_random(modes, rng);
        std::vector<amplitude> v = to_vec(legal);
        const double eps = 0.01 + 0.2 * qpq::uniform01(rng);
        for (std::size_t k = 0; k < modes; ++k) v[k] += eps * noise[k];
        const auto a = mode_vector::normalized(v);
        if (qpq::legal_distance(a) < 1e-3) continue;
        EXPECT_GT(qpq::pmin(a).pmin, 0.0);
        EXPECT_FALSE(qpq::pmin(a).is_legal);
    }
}

TEST(LegalDistance, MatchesBruteForce) {
    qpq::rng_type rng(34);
    for (int j = 0; j < 200; ++j) {
        const std::size_t modes = qpq::uniform_index(rng, 2, 8);
        const auto a = mode_vector::haar_random(modes, rng);
        double best = 0.0;
        for (std::uint64_t mask = 0; mask < (1U << modes); ++mask)
            best = std::max(best, std::norm(qpq::inner_product(qpq::oracle::signal(modes, mask), a.amplitudes())));
        EXPECT_NEAR(qpq::legal_overlap(a), best, 1e-12);
    }
}

// --- GHZ attack ------------------------------------------------------------------

TEST(GhzAttack, SmallestCaseAmplitudes) {
    const auto attack = qpq::build_ghz_attack(1);
    ASSERT_EQ(attack.joint.ancilla_dim(), 4U);
    ASSERT_EQ(attack.kind, qpq::ancilla_kind::qubit_register);
    EXPECT_EQ(attack.qubit_count(), 2U);
    const double c = 1.0 / std::sqrt(8.0);
    // ancilla index bit k is qubit k; |s0 s1> with s0 the first digit
    const double expected[4][2] = {{c, c}, {-c, c}, {c, -c}, {-c, -c}};
    for (std::size_t s = 0; s < 4; ++s)
        for (std::size_t k = 0; k < 2; ++k) EXPECT_NEAR(attack.joint.at(s, k).real(), expected[s][k], 1e-12);
    EXPECT_NEAR(qpq::squared_norm(attack.joint.amplitudes()), 1.0, 1e-9);
}

TEST(GhzAttack, ModesAreMaximallyMixed) {
    for (std::size_t n : {1U, 2U, 3U, 5U}) {
        const auto attack = qpq::build_ghz_attack(n);
        const std::vector<amplitude> amps(attack.joint.amplitudes().begin(), attack.joint.amplitudes().end());
        const auto rho = qpq::oracle::trace_out_ancilla(amps, attack.joint.ancilla_dim(), n + 1);
        for (std::size_t r = 0; r <= n; ++r)
            for (std::size_t c = 0; c <= n; ++c) EXPECT_NEAR(std::abs(rho[r][c] - (r == c ? 1.0 / (n + 1) : 0.0)), 0.0, 1e-12);
        const auto lib = qpq::reduced_mode_density(attack.joint);
        EXPECT_NEAR(qpq::von_neumann_entropy(lib), std::log2(double(n + 1)), 1e-9);
    }
}

TEST(GhzAttack, Caps) {
    EXPECT_THROW(qpq::build_ghz_attack(13), qpq::resource_limit);
    EXPECT_THROW(qpq::build_ghz_attack(0), qpq::invalid_parameter);
}

// After Alice detects pair t with shift r, Bob's register is a Bell pair on
// qubits (t, t+r) with |+> elsewhere: (|00> - |11>)/sqrt2 for D0 and
// (|01> - |10>)/sqrt2 for D1, each with half of the pair's 1/L mass.
TEST(GhzAttack, CollapseEnsemble) {
    const std::complex<double> h = 1.0 / std::sqrt(2.0);
    const std::complex<double> phi_minus[4] = {h, 0.0, 0.0, -h};
    const std::complex<double> psi_minus[4] = {0.0, h, -h, 0.0};
    for (std::size_t n : {1U, 2U, 3U, 4U}) {
        const std::size_t modes = n + 1;
        const auto attack = qpq::build_ghz_attack(n);
        for (std::size_t r = 1; r <= n; ++r) {
            const auto outcomes = qpq::interfere_joint(attack.joint, r);
            ASSERT_EQ(outcomes.size(), 2 * modes);
            double total = 0.0;
            for (const auto& o : outcomes) {
                EXPECT_NEAR(o.probability, 0.5 / double(modes), 1e-12);
                total += o.probability;
                const std::size_t partner = (o.pair + r) % modes;
                const auto expected = qpq::oracle::bell_times_plus(modes, o.pair, partner, o.det == detector::d0 ? phi_minus : psi_minus);
                EXPECT_GE(qpq::fidelity(o.ancilla, expected), 1.0 - 1e-9) << "N=" << n << " r=" << r << " t=" << o.pair;
            }
            EXPECT_NEAR(total, 1.0, 1e-9);
        }
    }
}

// The same collapse has zero overlap with the "+" Bell states, so any check
// against (|00> + |11>) and (|01> + |10>) cannot succeed.
TEST(GhzAttack, CollapseIsOrthogonalToPlusBellStates) {
    const std::complex<double> h = 1.0 / std::sqrt(2.0);
    const std::complex<double> phi_plus[4] = {h, 0.0, 0.0, h};
    const std::complex<double> psi_plus[4] = {0.0, h, h, 0.0};
    const auto attack = qpq::build_ghz_attack(3);
    for (const auto& o : qpq::interfere_joint(attack.joint, 2)) {
        const auto plus = qpq::oracle::bell_times_plus(4, o.pair, (o.pair + 2) % 4, o.det == detector::d0 ? phi_plus : psi_plus);
        EXPECT_NEAR(qpq::fidelity(o.ancilla, plus), 0.0, 1e-12);
    }
}

TEST(EntangledAttack, HonestZNeverCaught) {
    for (std::size_t n : {2U, 3U, 4U}) {
        const auto attack = qpq::build_ghz_attack(n);
        const auto strategy = qpq::bob_strategy::honest_z();
        qpq::rng_type rng(40 + n);
        for (int j = 0; j < 10000; ++j) {
            const auto rec = qpq::run_entangled_attack(attack, strategy, n, rng);
            ASSERT_FALSE(rec.cheat_detected);
            ASSERT_FALSE(rec.privacy_breached);
            ASSERT_FALSE(rec.bob_r_guess.has_value());
            ASSERT_EQ(rec.cheat_detected, rec.bob_bit_guess != rec.alice_bit);
        }
    }
}

TEST(EntangledAttack, PrivacyXHalfBreachHalfCaught) {
    const std::size_t n = 3;
    const auto attack = qpq::build_ghz_attack(n);
    const auto strategy = qpq::bob_strategy::privacy_x();
    qpq::rng_type rng(50);
    const int trials = 100000;
    int breached = 0, detected = 0;
    std::vector<int> per_r_trials(n + 1, 0), per_r_breach(n + 1, 0), per_r_detect(n + 1, 0);
    for (int j = 0; j < trials; ++j) {
        const auto rec = qpq::run_entangled_attack(attack, strategy, n, rng);
        ASSERT_EQ(rec.cheat_detected, rec.bob_bit_guess != rec.alice_bit);
        if (rec.privacy_breached) {
            ASSERT_TRUE(rec.bob_r_guess.has_value());
            ASSERT_EQ(*rec.bob_r_guess, rec.alice_shift);
        }
        breached += rec.privacy_breached;
        detected += rec.cheat_detected;
        ++per_r_trials[rec.alice_shift];
        per_r_breach[rec.alice_shift] += rec.privacy_breached;
        per_r_detect[rec.alice_shift] += rec.cheat_detected;
    }
    const double se = std::sqrt(0.25 / trials);
    EXPECT_LE(std::abs(breached / double(trials) - 0.5), 5 * se);
    EXPECT_LE(std::abs(detected / double(trials) - 0.5), 5 * se);
    for (std::size_t r = 1; r <= n; ++r) {
        const double se_r = std::sqrt(0.25 / per_r_trials[r]);
        EXPECT_LE(std::abs(per_r_breach[r] / double(per_r_trials[r]) - 0.5), 5 * se_r) << "r=" << r;
        EXPECT_LE(std::abs(per_r_detect[r] / double(per_r_trials[r]) - 0.5), 5 * se_r) << "r=" << r;
    }
}

TEST(EntangledAttack, CustomComputationalBasisActsLikeHonestZ) {
    const std::size_t n = 2;
    const auto attack = qpq::build_ghz_attack(n);
    const std::size_t dim = attack.joint.ancilla_dim();
    std::vector<phase_string> labels;
    for (std::size_t j = 0; j < dim; ++j) labels.push_back(phase_string::from_mask(n + 1, j));
    const auto strategy = qpq::bob_strategy::custom(Eigen::MatrixXcd::Identity(long(dim), long(dim)), labels);
    qpq::rng_type rng(60);
    for (int j = 0; j < 2000; ++j) ASSERT_FALSE(qpq::run_entangled_attack(attack, strategy, n, rng).cheat_detected);
}

TEST(EntangledAttack, DimensionMismatches) {
    qpq::rng_type rng(61);
    const auto attack = qpq::build_ghz_attack(2);
    EXPECT_THROW(qpq::run_entangled_attack(attack, qpq::bob_strategy::honest_z(), 3, rng), qpq::invalid_parameter);

    const qpq::entangled_attack generic{qpq::joint_state::from_modes(qpq::prepare_signal(phase_string({0, 1, 1}))), qpq::ancilla_kind::generic};
    EXPECT_THROW(qpq::run_entangled_attack(generic, qpq::bob_strategy::privacy_x(), 2, rng), qpq::invalid_parameter);

    std::vector<phase_string> labels(4, phase_string({0, 0, 0}));
    const auto small = qpq::bob_strategy::custom(Eigen::MatrixXcd::Identity(4, 4), labels);
    EXPECT_THROW(qpq::run_entangled_attack(attack, small, 2, rng), qpq::invalid_parameter);

    Eigen::MatrixXcd skew = Eigen::MatrixXcd::Identity(2, 2);
    skew(0, 1) = 0.5;
    EXPECT_THROW(qpq::bob_strategy::custom(skew, std::vector<phase_string>(2, phase_string({0, 0}))), qpq::invalid_parameter);
}

// --- search ------------------------------------------------------------------------

TEST(Search, NonLegalMinimumIsPositive) {
    qpq::rng_type rng(70);
    std::vector<mode_vector> injected;
    for (std::uint64_t mask = 0; mask < 16; ++mask) injected.push_back(qpq::prepare_signal(phase_string::from_mask(4, mask)));
    const auto rep = qpq::search_attack_states(3, 10000, rng, injected);
    EXPECT_GT(rep.min_pmin_nonlegal, 0.0);
    EXPECT_GT(rep.min_gap_ratio, 0.0);
    ASSERT_EQ(rep.injected_pmin.size(), 16U);
    for (double p : rep.injected_pmin) EXPECT_LE(p, 1e-12);
    EXPECT_TRUE(rep.counterexamples.empty());
    EXPECT_LE(rep.refined_pmin, rep.min_pmin);
}

TEST(Search, Reproducible) {
    qpq::rng_type a(71), b(71);
    const auto ra = qpq::search_attack_states(2, 500, a);
    const auto rb = qpq::search_attack_states(2, 500, b);
    EXPECT_EQ(ra.min_pmin, rb.min_pmin);
    EXPECT_EQ(ra.min_pmin_nonlegal, rb.min_pmin_nonlegal);
    EXPECT_EQ(ra.refined_pmin, rb.refined_pmin);
}

// --- Monte Carlo -------------------------------------------------------------------

TEST(MonteCarlo, LegalStateWithinBinomialError) {
    qpq::rng_type rng(80);
    const auto a = qpq::prepare_signal(phase_string({0, 1, 1, 0, 1}));
    const auto rep = qpq::monte_carlo_vs_analytic(a, 100000, rng);
    EXPECT_EQ(rep.trials, 100000U);
    EXPECT_LE(rep.max_sigma, 5.0);
    EXPECT_EQ(rep.impossible_hits, 0U);
}

TEST(MonteCarlo, DeterministicCellHasNoDeviation) {
    const std::vector<std::size_t> counts{0, 5000, 0};
    const std::vector<double> probs{0.0, 1.0, 0.0};
    const auto rep = qpq::compare_frequencies(counts, probs);
    EXPECT_EQ(rep.max_abs_deviation, 0.0);
    EXPECT_EQ(rep.max_sigma, 0.0);
    EXPECT_EQ(rep.chi_square, 0.0);
}

TEST(MonteCarlo, ImpossibleHitsAreFlagged) {
    const std::vector<std::size_t> counts{1, 999};
    const std::vector<double> probs{0.0, 1.0};
    const auto rep = qpq::compare_frequencies(counts, probs);
    EXPECT_EQ(rep.impossible_hits, 1U);
    EXPECT_TRUE(std::isinf(rep.max_sigma));
}

TEST(MonteCarlo, SeededRunsIdentical) {
    const auto a = alt_state();
    qpq::rng_type r1(81), r2(81);
    const auto x = qpq::monte_carlo_vs_analytic(a, 5000, r1);
    const auto y = qpq::monte_carlo_vs_analytic(a, 5000, r2);
    EXPECT_EQ(x.max_abs_deviation, y.max_abs_deviation);
    EXPECT_EQ(x.chi_square, y.chi_square);
    EXPECT_THROW(qpq::monte_carlo_vs_analytic(a, 999, r1), qpq::invalid_parameter);
}

} // namespace
