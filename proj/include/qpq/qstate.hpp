#pragma once

// Single-photon multi-pulse states and the two-beam-splitter interferometer.
//
// A signal of L pulses lives in the L-dimensional single-photon subspace:
// basis state |k> means the photon occupies pulse k. Alice's interferometer
// splits the signal, cyclically shifts one arm by r pulses and recombines the
// arms, so pulse pair k mixes amplitude a_k with a_{(k+r) mod L}:
//
//   D0 (constructive):  (a_k + a_{k+r}) / 2
//   D1 (destructive):  i(a_k - a_{k+r}) / 2
//
// Global phases are dropped everywhere; no observable depends on them.

#include <qpq/errors.hpp>
#include <qpq/random.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace qpq {

using amplitude = std::complex<double>;

inline constexpr double norm_tolerance = 1e-9;
inline constexpr double exact_tolerance = 1e-12;

enum class detector : std::uint8_t { d0 = 0, d1 = 1 };

inline const char* to_string(detector d) { return d == detector::d0 ? "D0" : "D1"; }

// (k + r) mod L
constexpr std::size_t cyclic_add(std::size_t k, std::size_t r, std::size_t modulus) noexcept {
    return (k + r) % modulus;
}

inline double squared_norm(std::span<const amplitude> v) {
    double s = 0.0;
    for (const auto& a : v) s += std::norm(a);
    return s;
}

inline amplitude inner_product(std::span<const amplitude> a, std::span<const amplitude> b) {
    if (a.size() != b.size()) throw invalid_state("inner product of vectors with different lengths");
    amplitude s{0.0, 0.0};
    for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
    return s;
}

// |<a|b>|^2 for unit vectors.
inline double fidelity(std::span<const amplitude> a, std::span<const amplitude> b) {
    return std::norm(inner_product(a, b));
}

namespace detail {

inline void require_unit_norm(std::span<const amplitude> v, double tol, const char* what) {
    for (const auto& a : v) {
        if (!std::isfinite(a.real()) || !std::isfinite(a.imag()))
            throw invalid_state(std::string(what) + " has a non-finite amplitude");
    }
    const double n = squared_norm(v);
    if (std::abs(n - 1.0) > tol)
        throw invalid_state(std::string(what) + " is not unit norm (squared norm " + std::to_string(n) + ")");
}

} // namespace detail

// Bob's secret sign string S = s_0 ... s_{L-1}.
class phase_string {
public:
    explicit phase_string(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
        if (bits_.size() < 2) throw invalid_parameter("phase string needs length >= 2");
        for (auto b : bits_)
            if (b > 1) throw invalid_parameter("phase string entries must be 0 or 1");
    }

    // Bit k of `mask` becomes s_k.
    static phase_string from_mask(std::size_t length, std::uint64_t mask) {
        std::vector<std::uint8_t> bits(length);
        for (std::size_t k = 0; k < length; ++k) bits[k] = static_cast<std::uint8_t>((mask >> k) & 1U);
        return phase_string(std::move(bits));
    }

    template <class Rng>
    static phase_string random(std::size_t length, Rng& rng) {
        if (length < 2) throw invalid_parameter("phase string needs length >= 2");
        std::vector<std::uint8_t> bits(length);
        std::uniform_int_distribution<int> coin(0, 1);
        for (auto& b : bits) b = static_cast<std::uint8_t>(coin(rng));
        return phase_string(std::move(bits));
    }

    std::size_t size() const noexcept { return bits_.size(); }
    std::uint8_t operator[](std::size_t k) const { return bits_[k]; }
    const std::vector<std::uint8_t>& bits() const noexcept { return bits_; }

    std::uint64_t mask() const noexcept {
        std::uint64_t m = 0;
        for (std::size_t k = 0; k < bits_.size() && k < 64; ++k) m |= std::uint64_t{bits_[k]} << k;
        return m;
    }

    friend bool operator==(const phase_string&, const phase_string&) = default;

private:
    std::vector<std::uint8_t> bits_;
};

// Unit-norm amplitude vector over L optical modes.
class mode_vector {
public:
    explicit mode_vector(std::vector<amplitude> amps) : amps_(std::move(amps)) {
        if (amps_.size() < 2) throw invalid_state("mode vector needs at least 2 modes");
        detail::require_unit_norm(amps_, norm_tolerance, "mode vector");
    }

    // Rescales `amps` to unit norm; rejects the zero vector.
    static mode_vector normalized(std::vector<amplitude> amps) {
        const double n = std::sqrt(squared_norm(amps));
        if (!(n > 0.0) || !std::isfinite(n)) throw invalid_state("cannot normalize a zero or non-finite vector");
        for (auto& a : amps) a /= n;
        return mode_vector(std::move(amps));
    }

    // Haar-random pure state (normalized complex Gaussian vector).
    template <class Rng>
    static mode_vector haar_random(std::size_t length, Rng& rng) {
        std::normal_distribution<double> g(0.0, 1.0);
        std::vector<amplitude> amps(length);
        for (auto& a : amps) {
            const double re = g(rng);
            const double im = g(rng);
            a = {re, im};
        }
        return normalized(std::move(amps));
    }

    static mode_vector basis(std::size_t length, std::size_t k) {
        if (k >= length) throw invalid_parameter("basis index out of range");
        std::vector<amplitude> amps(length);
        amps[k] = 1.0;
        return mode_vector(std::move(amps));
    }

    std::size_t size() const noexcept { return amps_.size(); }
    const amplitude& operator[](std::size_t k) const { return amps_[k]; }
    std::span<const amplitude> amplitudes() const noexcept { return amps_; }

private:
    std::vector<amplitude> amps_;
};

// Unit-norm state on (ancilla of dimension D) x (L modes), stored with the
// ancilla index major: amps[a * L + k].
class joint_state {
public:
    joint_state(std::size_t ancilla_dim, std::size_t mode_count, std::vector<amplitude> amps)
        : ancilla_dim_(ancilla_dim), mode_count_(mode_count), amps_(std::move(amps)) {
        if (ancilla_dim_ < 1) throw invalid_state("ancilla dimension must be >= 1");
        if (mode_count_ < 2) throw invalid_state("joint state needs at least 2 modes");
        if (amps_.size() != ancilla_dim_ * mode_count_) throw invalid_state("joint amplitude count != D * L");
        detail::require_unit_norm(amps_, norm_tolerance, "joint state");
    }

    // |phi>_ancilla (x) |a>_modes
    static joint_state product(std::span<const amplitude> ancilla, const mode_vector& modes) {
        const std::size_t l = modes.size();
        std::vector<amplitude> amps(ancilla.size() * l);
        for (std::size_t a = 0; a < ancilla.size(); ++a)
            for (std::size_t k = 0; k < l; ++k) amps[a * l + k] = ancilla[a] * modes[k];
        return joint_state(ancilla.size(), l, std::move(amps));
    }

    static joint_state from_modes(const mode_vector& modes) {
        return joint_state(1, modes.size(), {modes.amplitudes().begin(), modes.amplitudes().end()});
    }

    std::size_t ancilla_dim() const noexcept { return ancilla_dim_; }
    std::size_t mode_count() const noexcept { return mode_count_; }
    const amplitude& at(std::size_t ancilla, std::size_t mode) const { return amps_[ancilla * mode_count_ + mode]; }
    std::span<const amplitude> amplitudes() const noexcept { return amps_; }

private:
    std::size_t ancilla_dim_;
    std::size_t mode_count_;
    std::vector<amplitude> amps_;
};

struct outcome {
    std::size_t pair = 0;
    detector det = detector::d0;
    friend bool operator==(const outcome&, const outcome&) = default;
};

// Interferometer output for one shift: amplitude and probability for every
// (pair k, detector d).
class outcome_table {
public:
    outcome_table(std::size_t shift, std::vector<amplitude> amps) : shift_(shift), amps_(std::move(amps)) {
        probs_.reserve(amps_.size());
        for (const auto& a : amps_) probs_.push_back(std::norm(a));
    }

    std::size_t shift() const noexcept { return shift_; }
    std::size_t mode_count() const noexcept { return amps_.size() / 2; }

    const amplitude& amplitude_at(std::size_t pair, detector d) const { return amps_[index(pair, d)]; }
    double probability(std::size_t pair, detector d) const { return probs_[index(pair, d)]; }
    double pair_probability(std::size_t pair) const {
        return probs_[index(pair, detector::d0)] + probs_[index(pair, detector::d1)];
    }
    double total_probability() const { return std::accumulate(probs_.begin(), probs_.end(), 0.0); }

    // Flat view, entry 2k + d.
    std::span<const double> probabilities() const noexcept { return probs_; }

    static constexpr std::size_t index(std::size_t pair, detector d) noexcept {
        return 2 * pair + static_cast<std::size_t>(d);
    }

private:
    std::size_t shift_;
    std::vector<amplitude> amps_;
    std::vector<double> probs_;
};

// amps[k] = (-1)^{s_k} / sqrt(L)
inline mode_vector prepare_signal(const phase_string& s) {
    const double c = 1.0 / std::sqrt(static_cast<double>(s.size()));
    std::vector<amplitude> amps(s.size());
    for (std::size_t k = 0; k < s.size(); ++k) amps[k] = s[k] ? -c : c;
    return mode_vector(std::move(amps));
}

namespace detail {

inline void require_shift(std::size_t shift, std::size_t modes) {
    if (shift == 0 || shift >= modes)
        throw invalid_parameter("shift r=" + std::to_string(shift) + " outside 1.." + std::to_string(modes - 1));
}

} // namespace detail

inline outcome_table interfere(const mode_vector& a, std::size_t shift) {
    const std::size_t l = a.size();
    detail::require_shift(shift, l);
    const amplitude i_unit{0.0, 1.0};
    std::vector<amplitude> out(2 * l);
    for (std::size_t k = 0; k < l; ++k) {
        const amplitude& x = a[k];
        const amplitude& y = a[cyclic_add(k, shift, l)];
        out[outcome_table::index(k, detector::d0)] = 0.5 * (x + y);
        out[outcome_table::index(k, detector::d1)] = 0.5 * i_unit * (x - y);
    }
    return outcome_table(shift, std::move(out));
}

struct joint_outcome {
    std::size_t pair = 0;
    detector det = detector::d0;
    double probability = 0.0;
    std::vector<amplitude> ancilla; // renormalized conditional ancilla state
};

// Identity on the ancilla tensored with the interferometer. Returns every
// outcome of nonzero probability with its post-measurement ancilla state.
inline std::vector<joint_outcome> interfere_joint(const joint_state& psi, std::size_t shift) {
    const std::size_t l = psi.mode_count();
    const std::size_t dim = psi.ancilla_dim();
    detail::require_shift(shift, l);
    const amplitude i_unit{0.0, 1.0};

    std::vector<joint_outcome> result;
    for (std::size_t k = 0; k < l; ++k) {
        const std::size_t partner = cyclic_add(k, shift, l);
        for (detector d : {detector::d0, detector::d1}) {
            std::vector<amplitude> anc(dim);
            double p = 0.0;
            for (std::size_t a = 0; a < dim; ++a) {
                const amplitude& x = psi.at(a, k);
                const amplitude& y = psi.at(a, partner);
                anc[a] = d == detector::d0 ? 0.5 * (x + y) : 0.5 * i_unit * (x - y);
                p += std::norm(anc[a]);
            }
            if (p > 0.0) {
                const double n = std::sqrt(p);
                for (auto& c : anc) c /= n;
                result.push_back({k, d, p, std::move(anc)});
            }
        }
    }
    return result;
}

// Inverse-CDF draw over `probs`; never returns a zero-probability index.
template <class Rng>
std::size_t sample_index(std::span<const double> probs, Rng& rng) {
    const double total = std::accumulate(probs.begin(), probs.end(), 0.0);
    const double u = uniform01(rng) * total;
    double acc = 0.0;
    std::size_t last_nonzero = probs.size();
    for (std::size_t j = 0; j < probs.size(); ++j) {
        if (probs[j] <= 0.0) continue;
        last_nonzero = j;
        acc += probs[j];
        if (u < acc) return j;
    }
    if (last_nonzero == probs.size()) throw invalid_state("cannot sample from an all-zero distribution");
    return last_nonzero;
}

template <class Rng>
outcome sample_outcome(const outcome_table& table, Rng& rng) {
    const std::size_t j = sample_index(table.probabilities(), rng);
    return {j / 2, static_cast<detector>(j % 2)};
}

// dim x dim complex matrix that is expected to be a density operator. The
// invariants are checked by validate(), not on construction, so malformed
// matrices can be rejected with a proper error.
class density_operator {
public:
    explicit density_operator(Eigen::MatrixXcd m) : m_(std::move(m)) {
        if (m_.rows() != m_.cols()) throw invalid_state("density operator must be square");
    }

    static density_operator projector(std::span<const amplitude> v) {
        Eigen::Map<const Eigen::VectorXcd> col(v.data(), static_cast<Eigen::Index>(v.size()));
        return density_operator(col * col.adjoint());
    }

    static density_operator maximally_mixed(std::size_t dim) {
        const auto n = static_cast<Eigen::Index>(dim);
        return density_operator(Eigen::MatrixXcd::Identity(n, n) / static_cast<double>(dim));
    }

    std::size_t dim() const noexcept { return static_cast<std::size_t>(m_.rows()); }
    const Eigen::MatrixXcd& matrix() const noexcept { return m_; }

    // Eigenvalues in ascending order; throws invalid_state on any violated
    // invariant (Hermitian, unit trace, positive semidefinite).
    Eigen::VectorXd validated_eigenvalues(double tol = norm_tolerance) const {
        if (!m_.allFinite()) throw invalid_state("density operator has non-finite entries");
        if ((m_ - m_.adjoint()).cwiseAbs().maxCoeff() > tol) throw invalid_state("density operator is not Hermitian");
        const amplitude tr = m_.trace();
        if (std::abs(tr.real() - 1.0) > tol || std::abs(tr.imag()) > tol)
            throw invalid_state("density operator trace is not 1");
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m_, Eigen::EigenvaluesOnly);
        if (es.info() != Eigen::Success) throw invalid_state("eigendecomposition failed");
        if (es.eigenvalues().minCoeff() < -tol) throw invalid_state("density operator has a negative eigenvalue");
        return es.eigenvalues();
    }

private:
    Eigen::MatrixXcd m_;
};

// Entropy in bits, with 0 log 0 = 0.
inline double von_neumann_entropy(const density_operator& rho) {
    const Eigen::VectorXd eig = rho.validated_eigenvalues();
    double h = 0.0;
    for (Eigen::Index j = 0; j < eig.size(); ++j) {
        const double lambda = eig[j];
        if (lambda > 0.0) h -= lambda * std::log2(lambda);
    }
    return h;
}

inline density_operator ensemble_density(std::span<const mode_vector> states, std::span<const double> probs) {
    if (states.empty()) throw invalid_parameter("ensemble is empty");
    if (states.size() != probs.size()) throw invalid_parameter("ensemble states and probabilities differ in length");
    const std::size_t dim = states.front().size();
    double total = 0.0;
    for (double p : probs) {
        if (!(p >= 0.0) || !std::isfinite(p)) throw invalid_parameter("ensemble probabilities must be finite and >= 0");
        total += p;
    }
    if (std::abs(total - 1.0) > norm_tolerance) throw invalid_parameter("ensemble probabilities do not sum to 1");

    const auto n = static_cast<Eigen::Index>(dim);
    Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(n, n);
    for (std::size_t j = 0; j < states.size(); ++j) {
        if (states[j].size() != dim) throw invalid_parameter("ensemble states have different dimensions");
        if (probs[j] == 0.0) continue;
        Eigen::Map<const Eigen::VectorXcd> col(states[j].amplitudes().data(), n);
        rho.noalias() += probs[j] * (col * col.adjoint());
    }
    return density_operator(std::move(rho));
}

// Reduced state of the modes after tracing out the ancilla.
inline density_operator reduced_mode_density(const joint_state& psi) {
    const auto l = static_cast<Eigen::Index>(psi.mode_count());
    Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(l, l);
    for (std::size_t a = 0; a < psi.ancilla_dim(); ++a) {
        Eigen::Map<const Eigen::VectorXcd> col(psi.amplitudes().data() + a * psi.mode_count(), l);
        rho.noalias() += col * col.adjoint();
    }
    return density_operator(std::move(rho));
}

} // namespace qpq
