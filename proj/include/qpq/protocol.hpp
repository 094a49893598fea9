#pragma once

// Honest-party state machines for the oblivious-key query protocol.
//
// One query, single pass:
//   1. Bob draws S in {0,1}^{N+1} and sends the (N+1)-pulse signal.
//   2. Alice interferes with a private shift r and detects pair t, learning
//      s_t xor s_{t+r}.
//   3. Alice announces t; both sides form the N-bit key s_t xor s_m over all
//      m != t, in increasing m.
//   4. Alice declares shift = (p - i) mod N, p being the key position she knows
//      and i the item she wants.
//   5. Bob encrypts item m with key[(m + shift) mod N].
//   6. Alice decrypts item i with her known bit.
//
// Lost signals restart steps 1-2 with a fresh S. The double-check mode runs
// two independent passes for the same item and compares the results.

#include <qpq/errors.hpp>
#include <qpq/qstate.hpp>
#include <qpq/random.hpp>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace qpq {

using bit_vector = std::vector<std::uint8_t>;

inline constexpr std::size_t max_honest_modes = std::size_t{1} << 20;

enum class query_mode { single_pass, double_check };

inline const char* to_string(query_mode m) { return m == query_mode::single_pass ? "ii" : "ii-prime"; }

struct session_config {
    std::size_t database_size = 1; // N
    query_mode mode = query_mode::single_pass;
    double loss_prob = 0.0;
    std::size_t max_rounds = 1000;
    std::uint64_t seed = 0;

    std::size_t mode_count() const noexcept { return database_size + 1; }

    void validate() const {
        if (database_size < 1) throw invalid_parameter("database size must be >= 1");
        if (mode_count() > max_honest_modes) throw resource_limit("N + 1 exceeds 2^20 modes");
        if (!(loss_prob >= 0.0 && loss_prob < 1.0)) throw invalid_parameter("loss probability must lie in [0, 1)");
        if (max_rounds < 1) throw invalid_parameter("max_rounds must be >= 1");
    }
};

class database_record {
public:
    explicit database_record(bit_vector items) : items_(std::move(items)) {
        if (items_.empty()) throw invalid_parameter("database must hold at least one item");
        for (auto b : items_)
            if (b > 1) throw invalid_parameter("database items are single bits");
    }

    template <class Rng>
    static database_record random(std::size_t size, Rng& rng) {
        bit_vector items(size);
        std::uniform_int_distribution<int> coin(0, 1);
        for (auto& b : items) b = static_cast<std::uint8_t>(coin(rng));
        return database_record(std::move(items));
    }

    std::size_t size() const noexcept { return items_.size(); }
    std::uint8_t operator[](std::size_t m) const { return items_[m]; }
    const bit_vector& items() const noexcept { return items_; }

private:
    bit_vector items_;
};

// Bob holds `bits`; Alice holds only (known_pos, known_val).
struct oblivious_key {
    bit_vector bits;
    std::size_t known_pos = 0;
    std::uint8_t known_val = 0;
};

struct shared_bit {
    std::size_t pair = 0; // i0
    std::size_t shift = 0; // r, public in the bit-sharing round
    std::uint8_t value = 0;
};

struct prepared_signal {
    phase_string secret;
    mode_vector signal;
};

struct detection {
    std::size_t pair = 0; // t
    detector det = detector::d0;
    std::uint8_t bit = 0;
};

template <class Rng>
prepared_signal bob_prepare_round(std::size_t modes, Rng& rng) {
    auto s = phase_string::random(modes, rng);
    auto signal = prepare_signal(s);
    return {std::move(s), std::move(signal)};
}

// nullopt means the signal was lost in the channel.
template <class Rng>
std::optional<detection> alice_measure(const mode_vector& signal, std::size_t shift, double loss_prob, Rng& rng) {
    if (shift == 0 || shift >= signal.size()) throw invalid_parameter("shift outside 1..L-1");
    if (!(loss_prob >= 0.0 && loss_prob < 1.0)) throw invalid_parameter("loss probability must lie in [0, 1)");
    if (loss_prob > 0.0 && uniform01(rng) < loss_prob) return std::nullopt;
    const auto o = sample_outcome(interfere(signal, shift), rng);
    return detection{o.pair, o.det, static_cast<std::uint8_t>(o.det == detector::d1)};
}

struct bit_share_round {
    shared_bit agreed;
    std::uint8_t alice_value = 0; // from the detector
    std::uint8_t bob_value = 0;   // from S, i0 and r
};

// One lossless round of the bit-sharing process over L pulses.
template <class Rng>
bit_share_round run_bit_share(std::size_t modes, Rng& rng) {
    if (modes < 2) throw invalid_parameter("bit sharing needs L >= 2");
    auto [s, signal] = bob_prepare_round(modes, rng);
    const std::size_t r = uniform_index(rng, 1, modes - 1);
    const auto d = alice_measure(signal, r, 0.0, rng);
    const std::uint8_t bob = s[d->pair] ^ s[cyclic_add(d->pair, r, modes)];
    return {{d->pair, r, d->bit}, d->bit, bob};
}

// key[m] = s_t xor s_{m'} with m' = m for m < t and m' = m + 1 otherwise.
inline bit_vector derive_key_bob(const phase_string& s, std::size_t announced) {
    if (announced >= s.size()) throw invalid_parameter("announced pair outside 0..N");
    const std::size_t n = s.size() - 1;
    bit_vector key(n);
    for (std::size_t m = 0; m < n; ++m) key[m] = s[announced] ^ s[m < announced ? m : m + 1];
    return key;
}

// Key position of s_t xor s_{t+r}.
constexpr std::size_t derive_known_position(std::size_t announced, std::size_t shift, std::size_t n) noexcept {
    const std::size_t u = cyclic_add(announced, shift, n + 1);
    return u < announced ? u : u - 1;
}

// Every key position whose value Alice can infer from (t, r): the positions
// whose partner pulse is t + r. Always exactly one for an honest run.
inline std::vector<std::size_t> known_key_positions(std::size_t announced, std::size_t shift, std::size_t n) {
    const std::size_t u = cyclic_add(announced, shift, n + 1);
    std::vector<std::size_t> out;
    for (std::size_t m = 0; m < n; ++m) {
        const std::size_t pulse = m < announced ? m : m + 1;
        if (pulse == u) out.push_back(m);
    }
    return out;
}

constexpr std::size_t alice_declare_shift(std::size_t known_pos, std::size_t item, std::size_t n) noexcept {
    return (known_pos + n - item % n) % n;
}

inline bit_vector bob_encrypt(const database_record& db, const bit_vector& key, std::size_t shift) {
    const std::size_t n = db.size();
    if (key.size() != n) throw invalid_parameter("key length differs from database size");
    bit_vector cipher(n);
    for (std::size_t m = 0; m < n; ++m) cipher[m] = db[m] ^ key[(m + shift) % n];
    return cipher;
}

inline std::uint8_t alice_decrypt(const bit_vector& cipher, std::size_t item, std::uint8_t known_val) {
    if (item >= cipher.size()) throw invalid_parameter("item index outside the database");
    return cipher[item] ^ (known_val & 1U);
}

struct public_record {
    std::size_t announced_pair = 0; // t
    std::size_t declared_shift = 0;
    bit_vector ciphertext;
};

struct bob_private_record {
    phase_string secret;
    bit_vector key;
};

struct alice_private_record {
    std::size_t shift = 0; // r, never published
    detector det = detector::d0;
    std::size_t known_pos = 0;
    std::uint8_t known_val = 0;
    std::uint8_t decoded = 0;
};

struct session_transcript {
    public_record pub;
    bob_private_record bob;
    alice_private_record alice;
    std::size_t rounds_used = 0;
};

struct query_result {
    std::vector<session_transcript> passes; // one, or two in double-check mode
    std::optional<bool> consistent;         // double-check verdict

    std::uint8_t value() const { return passes.front().alice.decoded; }
    std::size_t rounds_used() const {
        std::size_t total = 0;
        for (const auto& p : passes) total += p.rounds_used;
        return total;
    }
};

template <class Rng>
session_transcript run_query_pass(const session_config& cfg, const database_record& db, std::size_t item, Rng& rng) {
    const std::size_t n = cfg.database_size;
    const std::size_t modes = cfg.mode_count();
    const std::size_t r = uniform_index(rng, 1, n);

    for (std::size_t round = 1; round <= cfg.max_rounds; ++round) {
        auto prepared = bob_prepare_round(modes, rng);
        const auto got = alice_measure(prepared.signal, r, cfg.loss_prob, rng);
        if (!got) continue;

        const std::size_t t = got->pair;
        auto key = derive_key_bob(prepared.secret, t);
        const std::size_t p = derive_known_position(t, r, n);
        const std::size_t shift = alice_declare_shift(p, item, n);
        auto cipher = bob_encrypt(db, key, shift);
        const std::uint8_t decoded = alice_decrypt(cipher, item, got->bit);

        return session_transcript{
            {t, shift, std::move(cipher)},
            {std::move(prepared.secret), std::move(key)},
            {r, got->det, p, got->bit, decoded},
            round,
        };
    }
    throw channel_failure("no signal arrived in " + std::to_string(cfg.max_rounds) + " rounds");
}

template <class Rng>
query_result run_query(const session_config& cfg, const database_record& db, std::size_t item, Rng& rng) {
    cfg.validate();
    if (db.size() != cfg.database_size) throw invalid_parameter("database size differs from configured N");
    if (item >= cfg.database_size) throw invalid_parameter("item index outside 0..N-1");

    query_result result;
    result.passes.push_back(run_query_pass(cfg, db, item, rng));
    if (cfg.mode == query_mode::double_check) {
        result.passes.push_back(run_query_pass(cfg, db, item, rng));
        result.consistent = result.passes[0].alice.decoded == result.passes[1].alice.decoded;
    }
    return result;
}

} // namespace qpq
