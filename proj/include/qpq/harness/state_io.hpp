#pragma once

// JSON encodings shared by the CLI: state files (array of [re, im] pairs)
// and session transcripts.

#include <qpq/errors.hpp>
#include <qpq/protocol.hpp>
#include <qpq/qstate.hpp>

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <span>
#include <string>
#include <vector>

namespace qpq::harness {

inline constexpr double state_file_tolerance = 1e-6;

inline nlohmann::json state_to_json(std::span<const amplitude> amps) {
    auto arr = nlohmann::json::array();
    for (const auto& a : amps) arr.push_back({a.real(), a.imag()});
    return arr;
}

// Accepts states within 1e-6 of unit norm and renormalizes them.
inline mode_vector state_from_json(const nlohmann::json& doc) {
    if (!doc.is_array()) throw invalid_parameter("state must be a JSON array of [re, im] pairs");
    std::vector<amplitude> amps;
    for (const auto& e : doc) {
        if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number())
            throw invalid_parameter("state entries must be [re, im] number pairs");
        amps.emplace_back(e[0].get<double>(), e[1].get<double>());
    }
    if (amps.size() < 2) throw invalid_parameter("state needs at least 2 modes");
    for (const auto& a : amps)
        if (!std::isfinite(a.real()) || !std::isfinite(a.imag())) throw invalid_state("state has a non-finite amplitude");
    const double n = squared_norm(amps);
    if (std::abs(n - 1.0) > state_file_tolerance) throw invalid_state("state file is not unit norm (squared norm " + std::to_string(n) + ")");
    return mode_vector::normalized(std::move(amps));
}

inline mode_vector load_state_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw invalid_parameter("cannot open state file " + path);
    nlohmann::json doc;
    try {
        f >> doc;
    } catch (const nlohmann::json::parse_error& e) {
        throw invalid_parameter("state file " + path + " is not valid JSON: " + e.what());
    }
    return state_from_json(doc);
}

inline nlohmann::json transcript_to_json(const session_transcript& t) {
    return {
        {"public", {{"t", t.pub.announced_pair}, {"shift", t.pub.declared_shift}, {"ciphertext", t.pub.ciphertext}}},
        {"bob_private", {{"S", t.bob.secret.bits()}, {"key", t.bob.key}}},
        {"alice_private",
         {{"r", t.alice.shift},
          {"detector", to_string(t.alice.det)},
          {"known_pos", t.alice.known_pos},
          {"known_val", t.alice.known_val},
          {"decoded", t.alice.decoded}}},
        {"rounds_used", t.rounds_used},
    };
}

} // namespace qpq::harness
