#pragma once

// Command-line front end. Every subcommand runs a batch of seeded trials,
// folds the per-trial results (in trial order) into a stat_report, writes the
// report and prints a one-line summary.
//
// Exit codes: 0 all verdicts passed, 1 a verdict failed, 2 usage error,
// 3 resource-limit or i/o error.

#include <qpq/adversary.hpp>
#include <qpq/errors.hpp>
#include <qpq/harness/report.hpp>
#include <qpq/harness/state_io.hpp>
#include <qpq/harness/trials.hpp>
#include <qpq/protocol.hpp>
#include <qpq/qstate.hpp>
#include <qpq/random.hpp>

#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace qpq::harness {

enum exit_code : int { exit_ok = 0, exit_verdict_failed = 1, exit_usage = 2, exit_resource = 3 };

struct common_options {
    std::uint64_t seed = 1;
    std::string format = "json";
    std::string out = "-";
    std::size_t workers = 1;
    double tol_sigma = 5.0;
};

namespace detail {

inline verdict within_sigma(std::string name, const metric& m, double expected, double se, double tol_sigma) {
    const double dev = std::abs(m.mean - expected);
    std::ostringstream os;
    os << "mean " << format_number(m.mean) << " vs " << format_number(expected) << ", |dev| " << format_number(dev)
       << " <= " << format_number(tol_sigma) << " * " << format_number(se);
    return {std::move(name), dev <= tol_sigma * se, os.str()};
}

inline verdict exact(std::string name, const metric& m, double expected) {
    const bool ok = m.count > 0 && m.min == expected && m.max == expected;
    return {std::move(name), ok, "min " + format_number(m.min) + ", max " + format_number(m.max) + ", expected " + format_number(expected)};
}

inline void json_config(stat_report& rep, const common_options& c) {
    rep.config["command"] = rep.command;
    rep.config["seed"] = c.seed;
    rep.config["format"] = c.format;
    rep.config["workers"] = c.workers;
    rep.config["tol_sigma"] = json_number(c.tol_sigma);
    rep.seed = c.seed;
}

// Alternating 1, i, 1, i, ... normalized.
inline mode_vector alternating_state(std::size_t modes) {
    std::vector<amplitude> amps(modes);
    for (std::size_t k = 0; k < modes; ++k) amps[k] = (k % 2 == 0) ? amplitude{1.0, 0.0} : amplitude{0.0, 1.0};
    return mode_vector::normalized(std::move(amps));
}

inline mode_vector preset_state(const std::string& preset, std::size_t n, std::uint64_t seed) {
    auto rng = trial_rng(seed, std::numeric_limits<std::uint64_t>::max());
    if (preset == "basis") return mode_vector::basis(n + 1, 0);
    if (preset == "legal") return prepare_signal(phase_string::random(n + 1, rng));
    if (preset == "alt") return alternating_state(n + 1);
    if (preset == "random") return mode_vector::haar_random(n + 1, rng);
    throw invalid_parameter("unknown state preset " + preset);
}

} // namespace detail

// --- query -----------------------------------------------------------------

struct query_options {
    std::size_t n = 8;
    std::size_t item = 0;
    std::size_t trials = 1000;
    double loss = 0.0;
    std::string mode = "ii";
    std::size_t max_rounds = 1000;
    std::string db;
    std::string transcripts;
};

inline stat_report run_query_command(const query_options& q, const common_options& c) {
    session_config cfg;
    cfg.database_size = q.n;
    cfg.mode = q.mode == "ii-prime" ? query_mode::double_check : query_mode::single_pass;
    cfg.loss_prob = q.loss;
    cfg.max_rounds = q.max_rounds;
    cfg.seed = c.seed;
    cfg.validate();
    if (q.item >= q.n) throw invalid_parameter("--item must be < --n");

    std::optional<database_record> db;
    if (!q.db.empty()) {
        bit_vector bits;
        for (char ch : q.db) {
            if (ch != '0' && ch != '1') throw invalid_parameter("--db must be a string of 0/1");
            bits.push_back(static_cast<std::uint8_t>(ch - '0'));
        }
        if (bits.size() != q.n) throw invalid_parameter("--db length must equal --n");
        db.emplace(std::move(bits));
    } else {
        auto rng = trial_rng(splitmix64(c.seed), std::numeric_limits<std::uint64_t>::max());
        db.emplace(database_record::random(q.n, rng));
    }

    struct trial {
        bool completed = false;
        bool correct = false;
        std::size_t known_bits = 0;
        std::size_t rounds = 0;
        bool consistent = true;
        std::optional<query_result> kept;
    };
    const bool keep = !q.transcripts.empty();
    auto results = run_trials<trial>(q.trials, c.workers, c.seed, [&](rng_type& rng, std::size_t) {
        trial t;
        try {
            auto res = run_query(cfg, *db, q.item, rng);
            t.completed = true;
            t.correct = true;
            t.known_bits = std::numeric_limits<std::size_t>::max();
            for (const auto& pass : res.passes) {
                t.correct = t.correct && pass.alice.decoded == (*db)[q.item];
                t.known_bits = std::min(t.known_bits, known_key_positions(pass.pub.announced_pair, pass.alice.shift, q.n).size());
            }
            t.rounds = res.rounds_used();
            t.consistent = res.consistent.value_or(true);
            if (keep) t.kept = std::move(res);
        } catch (const channel_failure&) {
            t.completed = false;
        }
        return t;
    });

    stat_report rep;
    rep.command = "query";
    detail::json_config(rep, c);
    rep.config["n"] = q.n;
    rep.config["item"] = q.item;
    rep.config["trials"] = q.trials;
    rep.config["loss_prob"] = json_number(q.loss);
    rep.config["mode"] = q.mode;
    rep.config["max_rounds"] = q.max_rounds;

    accumulator success, known, rounds, consistent;
    for (const auto& t : results) {
        if (!t.completed) {
            ++rep.channel_failures;
            continue;
        }
        success.add(t.correct ? 1.0 : 0.0);
        known.add(static_cast<double>(t.known_bits));
        rounds.add(static_cast<double>(t.rounds));
        consistent.add(t.consistent ? 1.0 : 0.0);
    }
    rep.metrics.push_back(success.to_metric("success_rate"));
    rep.metrics.push_back(known.to_metric("known_bits"));
    rep.metrics.push_back(rounds.to_metric("rounds_used"));
    if (cfg.mode == query_mode::double_check) rep.metrics.push_back(consistent.to_metric("consistency_rate"));

    rep.verdicts.push_back(detail::exact("success_rate", *rep.find("success_rate"), 1.0));
    rep.verdicts.push_back(detail::exact("known_bits", *rep.find("known_bits"), 1.0));
    if (cfg.mode == query_mode::double_check) rep.verdicts.push_back(detail::exact("consistency", *rep.find("consistency_rate"), 1.0));
    const double passes = cfg.mode == query_mode::double_check ? 2.0 : 1.0;
    const double expected_rounds = passes / (1.0 - q.loss);
    if (q.loss == 0.0) {
        rep.verdicts.push_back(detail::exact("rounds_used", *rep.find("rounds_used"), passes));
    } else {
        // Geometric rounds per pass: variance p / (1 - p)^2.
        const double se = std::sqrt(passes * q.loss / ((1.0 - q.loss) * (1.0 - q.loss)) / static_cast<double>(std::max<std::size_t>(rounds.count(), 1)));
        rep.verdicts.push_back(detail::within_sigma("rounds_used", *rep.find("rounds_used"), expected_rounds, se, c.tol_sigma));
    }

    if (keep) {
        auto arr = nlohmann::json::array();
        for (const auto& t : results)
            if (t.kept)
                for (const auto& pass : t.kept->passes) arr.push_back(transcript_to_json(pass));
        std::ofstream f(q.transcripts, std::ios::binary | std::ios::trunc);
        if (!f) throw io_error("cannot open transcript file " + q.transcripts);
        f << arr.dump(2) << '\n';
    }
    return rep;
}

// --- bitshare --------------------------------------------------------------

inline stat_report run_bitshare_command(std::size_t modes, std::size_t trials, const common_options& c) {
    if (modes < 2) throw invalid_parameter("--l must be >= 2");
    if (modes > max_honest_modes) throw resource_limit("--l exceeds 2^20");
    struct trial {
        bool agree = false;
        std::uint8_t value = 0;
    };
    auto results = run_trials<trial>(trials, c.workers, c.seed, [&](rng_type& rng, std::size_t) {
        const auto round = run_bit_share(modes, rng);
        return trial{round.alice_value == round.bob_value, round.agreed.value};
    });

    stat_report rep;
    rep.command = "bitshare";
    detail::json_config(rep, c);
    rep.config["l"] = modes;
    rep.config["trials"] = trials;
    accumulator agree, value;
    for (const auto& t : results) {
        agree.add(t.agree ? 1.0 : 0.0);
        value.add(t.value);
    }
    rep.metrics.push_back(agree.to_metric("agreement_rate"));
    rep.metrics.push_back(value.to_metric("shared_value"));
    rep.verdicts.push_back(detail::exact("agreement", *rep.find("agreement_rate"), 1.0));
    return rep;
}

// --- bound holevo ----------------------------------------------------------

inline stat_report run_holevo_command(std::size_t n, const std::string& method, const common_options& c) {
    const auto m = method == "enumerate" ? holevo_method::enumerate : holevo_method::analytic;
    const double value = holevo_bound(n, m);
    const double target = std::log2(static_cast<double>(n + 1));

    stat_report rep;
    rep.command = "bound holevo";
    detail::json_config(rep, c);
    rep.config["n"] = n;
    rep.config["method"] = method;
    rep.metrics.push_back(single_value("holevo_bits", value));
    rep.metrics.push_back(single_value("log2_n_plus_1", target));
    rep.verdicts.push_back({"holevo_equals_log2", std::abs(value - target) <= norm_tolerance,
                            "|" + format_number(value) + " - " + format_number(target) + "| <= 1e-9"});
    return rep;
}

// --- attack pure -----------------------------------------------------------

inline stat_report run_attack_pure_command(std::size_t n, const std::string& preset, const std::string& state_path, const common_options& c) {
    const auto a = state_path.empty() ? detail::preset_state(preset, n, c.seed) : load_state_file(state_path);
    const auto rep_p = pmin(a);

    stat_report rep;
    rep.command = "attack pure";
    detail::json_config(rep, c);
    rep.config["n"] = a.size() - 1;
    rep.config["state"] = state_path.empty() ? preset : state_path;
    rep.config["amplitudes"] = state_to_json(a.amplitudes());
    rep.metrics.push_back(single_value("pmin", rep_p.pmin));
    for (std::size_t r = 1; r <= rep_p.per_shift.size(); ++r) rep.metrics.push_back(single_value("pmin_r" + std::to_string(r), rep_p.per_shift[r - 1]));
    rep.metrics.push_back(single_value("is_legal", rep_p.is_legal ? 1.0 : 0.0));
    rep.metrics.push_back(single_value("legal_distance", legal_distance(a)));
    rep.verdicts.push_back({"pmin_in_range", rep_p.pmin >= -exact_tolerance && rep_p.pmin <= 0.5 + exact_tolerance,
                            "pmin " + format_number(rep_p.pmin) + " in [0, 1/2]"});
    return rep;
}

// --- attack entangled ------------------------------------------------------

inline stat_report run_attack_entangled_command(std::size_t n, const std::string& preset, const std::string& strategy_name,
                                                std::size_t trials, const common_options& c) {
    if (preset != "ghz") throw invalid_parameter("unknown entangled preset " + preset);
    const auto attack = build_ghz_attack(n);
    const auto strategy = strategy_name == "x" ? bob_strategy::privacy_x() : bob_strategy::honest_z();

    auto results = run_trials<attack_run_record>(trials, c.workers, c.seed,
                                                 [&](rng_type& rng, std::size_t) { return run_entangled_attack(attack, strategy, n, rng); });

    stat_report rep;
    rep.command = "attack entangled";
    detail::json_config(rep, c);
    rep.config["n"] = n;
    rep.config["preset"] = preset;
    rep.config["strategy"] = strategy_name;
    rep.config["trials"] = trials;

    accumulator detected, breached, correct_r;
    for (const auto& r : results) {
        detected.add(r.cheat_detected ? 1.0 : 0.0);
        breached.add(r.privacy_breached ? 1.0 : 0.0);
        if (r.privacy_breached) correct_r.add(r.bob_r_guess == r.alice_shift ? 1.0 : 0.0);
    }
    rep.metrics.push_back(detected.to_metric("detection_rate"));
    rep.metrics.push_back(breached.to_metric("breach_rate"));
    rep.metrics.push_back(correct_r.to_metric("breach_correct_rate"));

    if (strategy.kind == strategy_kind::honest_z) {
        rep.verdicts.push_back(detail::exact("detection_rate", *rep.find("detection_rate"), 0.0));
        rep.verdicts.push_back(detail::exact("breach_rate", *rep.find("breach_rate"), 0.0));
    } else {
        const double se = std::sqrt(0.25 / static_cast<double>(trials));
        rep.verdicts.push_back(detail::within_sigma("detection_rate", *rep.find("detection_rate"), 0.5, se, c.tol_sigma));
        rep.verdicts.push_back(detail::within_sigma("breach_rate", *rep.find("breach_rate"), 0.5, se, c.tol_sigma));
        const auto& m = *rep.find("breach_correct_rate");
        rep.verdicts.push_back({"breach_identifies_r", m.count == 0 || (m.min == 1.0 && m.max == 1.0),
                                "min " + format_number(m.min) + " over " + std::to_string(m.count) + " breaches"});
    }
    return rep;
}

// --- attack search ---------------------------------------------------------

inline stat_report run_attack_search_command(std::size_t n, std::size_t samples, const common_options& c) {
    auto rng = trial_rng(c.seed, 0);
    std::vector<mode_vector> injected;
    for (std::uint64_t mask = 0; mask < 8; ++mask) injected.push_back(prepare_signal(phase_string::from_mask(n + 1, mask * 0x9e37U)));
    const auto s = search_attack_states(n, samples, rng, injected);

    stat_report rep;
    rep.command = "attack search";
    detail::json_config(rep, c);
    rep.config["n"] = n;
    rep.config["samples"] = samples;
    rep.metrics.push_back(single_value("min_pmin", s.min_pmin));
    rep.metrics.push_back(single_value("min_pmin_nonlegal", s.min_pmin_nonlegal));
    rep.metrics.push_back(single_value("min_gap_ratio", s.min_gap_ratio));
    rep.metrics.push_back(single_value("refined_pmin", s.refined_pmin));
    rep.metrics.push_back(single_value("refined_distance", s.refined_distance));
    rep.metrics.push_back(single_value("counterexamples", static_cast<double>(s.counterexamples.size())));
    double worst_injected = 0.0;
    for (double p : s.injected_pmin) worst_injected = std::max(worst_injected, p);
    rep.metrics.push_back(single_value("injected_legal_max_pmin", worst_injected));

    rep.verdicts.push_back({"nonlegal_pmin_positive", s.min_pmin_nonlegal > 0.0, "min " + format_number(s.min_pmin_nonlegal)});
    rep.verdicts.push_back({"injected_legal_zero", worst_injected <= exact_tolerance, "max " + format_number(worst_injected)});
    rep.verdicts.push_back({"no_counterexample", s.counterexamples.empty(), std::to_string(s.counterexamples.size()) + " candidates"});
    return rep;
}

// --- validate mc -----------------------------------------------------------

inline stat_report run_validate_mc_command(std::size_t n, const std::string& preset, const std::string& state_path, std::size_t trials,
                                           const common_options& c) {
    const auto a = state_path.empty() ? detail::preset_state(preset, n, c.seed) : load_state_file(state_path);
    auto rng = trial_rng(c.seed, 0);
    const auto d = monte_carlo_vs_analytic(a, trials, rng);

    stat_report rep;
    rep.command = "validate mc";
    detail::json_config(rep, c);
    rep.config["n"] = a.size() - 1;
    rep.config["state"] = state_path.empty() ? preset : state_path;
    rep.config["trials"] = trials;
    rep.metrics.push_back(single_value("max_abs_deviation", d.max_abs_deviation));
    rep.metrics.push_back(single_value("max_sigma", d.max_sigma));
    rep.metrics.push_back(single_value("chi_square", d.chi_square));
    rep.metrics.push_back(single_value("degrees_of_freedom", static_cast<double>(d.degrees_of_freedom)));
    rep.metrics.push_back(single_value("impossible_hits", static_cast<double>(d.impossible_hits)));
    rep.verdicts.push_back({"cells_within_tolerance", d.max_sigma <= c.tol_sigma,
                            "max sigma " + format_number(d.max_sigma) + " <= " + format_number(c.tol_sigma)});
    rep.verdicts.push_back({"no_impossible_outcomes", d.impossible_hits == 0, std::to_string(d.impossible_hits) + " hits"});
    return rep;
}

// ---------------------------------------------------------------------------

inline std::string summary_line(const stat_report& rep) {
    std::size_t passed = 0;
    for (const auto& v : rep.verdicts) passed += v.passed ? 1 : 0;
    std::ostringstream os;
    os << rep.command << ": " << (rep.all_passed() ? "PASS" : "FAIL") << " (" << passed << '/' << rep.verdicts.size() << " verdicts)";
    for (const auto& m : rep.metrics) {
        if (m.name.rfind("pmin_r", 0) == 0) continue;
        os << ' ' << m.name << '=' << format_number(m.mean);
    }
    return os.str();
}

inline int cli_run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Simulator and security analyzer for the single-photon oblivious-key private query protocol", "qpq-sim"};
    app.require_subcommand(1);

    common_options common;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--seed", common.seed, "Base seed (falls back to $QPQ_SEED)")->envname("QPQ_SEED");
        sub->add_option("--format", common.format, "Report format")->check(CLI::IsMember({"json", "csv"}));
        sub->add_option("--out", common.out, "Report path, '-' for stdout");
        sub->add_option("--workers", common.workers, "Parallel workers")->check(CLI::Range(std::size_t{1}, std::size_t{256}));
        sub->add_option("--tol-sigma", common.tol_sigma, "Statistical verdict tolerance in standard errors")->check(CLI::PositiveNumber);
    };

    query_options q;
    auto* query = app.add_subcommand("query", "Honest query sessions (single pass or double check)");
    query->add_option("--n", q.n, "Database size N")->check(CLI::PositiveNumber);
    query->add_option("--item", q.item, "Queried item index");
    query->add_option("--trials", q.trials, "Number of sessions");
    query->add_option("--loss", q.loss, "Per-signal loss probability")->check(CLI::Range(0.0, 1.0));
    query->add_option("--mode", q.mode, "ii (single pass) or ii-prime (double check)")->check(CLI::IsMember({"ii", "ii-prime"}));
    query->add_option("--max-rounds", q.max_rounds, "Transmission attempts per pass")->check(CLI::PositiveNumber);
    query->add_option("--db", q.db, "Database as a 0/1 string (random if omitted)");
    query->add_option("--transcripts", q.transcripts, "Write session transcripts as JSON");
    add_common(query);

    std::size_t bs_modes = 4;
    std::size_t bs_trials = 1000;
    auto* bitshare = app.add_subcommand("bitshare", "Bit-sharing rounds over L pulses");
    bitshare->add_option("--l", bs_modes, "Number of pulses L");
    bitshare->add_option("--trials", bs_trials, "Number of rounds");
    add_common(bitshare);

    auto* bound = app.add_subcommand("bound", "Leakage bounds");
    bound->require_subcommand(1);
    std::size_t hv_n = 1;
    std::string hv_method = "analytic";
    auto* holevo = bound->add_subcommand("holevo", "Holevo bound on database leakage");
    holevo->add_option("--n", hv_n, "Database size N")->check(CLI::PositiveNumber);
    holevo->add_option("--method", hv_method, "analytic or enumerate")->check(CLI::IsMember({"analytic", "enumerate"}));
    add_common(holevo);

    auto* attack = app.add_subcommand("attack", "Dishonest-Bob analyses");
    attack->require_subcommand(1);
    std::size_t at_n = 3;
    std::string at_preset = "basis";
    std::string at_state;
    auto* pure = attack->add_subcommand("pure", "Minimum error probability of a pure-state signal");
    pure->add_option("--n", at_n, "Database size N")->check(CLI::PositiveNumber);
    pure->add_option("--preset", at_preset, "basis, legal, alt or random")->check(CLI::IsMember({"basis", "legal", "alt", "random"}));
    pure->add_option("--state", at_state, "JSON state file (array of [re, im])");
    add_common(pure);

    std::string en_preset = "ghz";
    std::string en_strategy = "z";
    std::size_t en_trials = 1000;
    auto* entangled = attack->add_subcommand("entangled", "Entangled-ancilla attack");
    entangled->add_option("--n", at_n, "Database size N")->check(CLI::PositiveNumber);
    entangled->add_option("--preset", en_preset, "Attack preset")->check(CLI::IsMember({"ghz"}));
    entangled->add_option("--strategy", en_strategy, "z (honest) or x (privacy)")->check(CLI::IsMember({"z", "x"}));
    entangled->add_option("--trials", en_trials, "Number of attacked queries");
    add_common(entangled);

    std::size_t se_samples = 10000;
    auto* search = attack->add_subcommand("search", "Random search over non-legal signals");
    search->add_option("--n", at_n, "Database size N")->check(CLI::PositiveNumber);
    search->add_option("--samples,--trials", se_samples, "Haar samples")->check(CLI::PositiveNumber);
    add_common(search);

    auto* validate = app.add_subcommand("validate", "Consistency checks");
    validate->require_subcommand(1);
    std::size_t mc_trials = 100000;
    std::string mc_preset = "random";
    auto* mc = validate->add_subcommand("mc", "Monte Carlo vs analytic outcome distribution");
    mc->add_option("--n", at_n, "Database size N")->check(CLI::PositiveNumber);
    mc->add_option("--preset", mc_preset, "basis, legal, alt or random")->check(CLI::IsMember({"basis", "legal", "alt", "random"}));
    mc->add_option("--state", at_state, "JSON state file (array of [re, im])");
    mc->add_option("--trials", mc_trials, "Samples");
    add_common(mc);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e, out, err);
        err << "error: " << e.what() << "\n\n" << app.help();
        return exit_usage;
    }

    try {
        stat_report rep;
        if (query->parsed()) rep = run_query_command(q, common);
        else if (bitshare->parsed()) rep = run_bitshare_command(bs_modes, bs_trials, common);
        else if (holevo->parsed()) rep = run_holevo_command(hv_n, hv_method, common);
        else if (pure->parsed()) rep = run_attack_pure_command(at_n, at_preset, at_state, common);
        else if (entangled->parsed()) rep = run_attack_entangled_command(at_n, en_preset, en_strategy, en_trials, common);
        else if (search->parsed()) rep = run_attack_search_command(at_n, se_samples, common);
        else rep = run_validate_mc_command(at_n, mc_preset, at_state, mc_trials, common);

        emit_report(rep, common.format == "csv" ? report_format::csv : report_format::json, common.out, out);
        (common.out == "-" ? err : out) << summary_line(rep) << '\n';
        return rep.all_passed() ? exit_ok : exit_verdict_failed;
    } catch (const invalid_parameter& e) {
        err << "error: " << e.what() << '\n';
        return exit_usage;
    } catch (const invalid_state& e) {
        err << "error: " << e.what() << '\n';
        return exit_usage;
    } catch (const resource_limit& e) {
        err << "error: " << e.what() << '\n';
        return exit_resource;
    } catch (const io_error& e) {
        err << "error: " << e.what() << '\n';
        return exit_resource;
    }
}

} // namespace qpq::harness
