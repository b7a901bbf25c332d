#include "fpb/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fpb {

namespace {

bool near_unit(double norm_sq) { return std::abs(norm_sq - 1.0) <= kAlgebraTol; }

}  // namespace

StateVec2 StateVec2::make(Amplitude a0, Amplitude a1, Basis basis) {
    StateVec2 s;
    s.a = {a0, a1};
    s.basis = basis;
    s.normalized = near_unit(s.norm_sq());
    return s;
}

double StateVec2::norm_sq() const { return std::norm(a[0]) + std::norm(a[1]); }

double StateVec2::norm() const { return std::sqrt(norm_sq()); }

Amplitude StateVec2::inner(const StateVec2& other) const {
    return std::conj(a[0]) * other.a[0] + std::conj(a[1]) * other.a[1];
}

StateVec2 StateVec2::unit() const {
    const double n = norm();
    if (n <= 0.0) throw std::invalid_argument("cannot normalize a zero state");
    StateVec2 s;
    s.a = {a[0] / n, a[1] / n};
    s.basis = basis;
    s.normalized = true;
    return s;
}

StateVec4 StateVec4::make(std::array<Amplitude, 4> amps) {
    StateVec4 s;
    s.a = amps;
    s.normalized = near_unit(s.norm_sq());
    return s;
}

double StateVec4::norm_sq() const {
    double t = 0.0;
    for (const auto& c : a) t += std::norm(c);
    return t;
}

double StateVec4::norm() const { return std::sqrt(norm_sq()); }

Amplitude StateVec4::inner(const StateVec4& other) const {
    Amplitude t = 0.0;
    for (std::size_t k = 0; k < 4; ++k) t += std::conj(a[k]) * other.a[k];
    return t;
}

template <std::size_t N>
Operator<N> Operator<N>::identity() {
    Operator op;
    for (std::size_t i = 0; i < N; ++i) op.at(i, i) = 1.0;
    return op;
}

template <std::size_t N>
Operator<N> Operator<N>::adjoint() const {
    Operator op;
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < N; ++j) op.at(i, j) = std::conj(at(j, i));
    return op;
}

template <std::size_t N>
Operator<N> Operator<N>::operator*(const Operator& rhs) const {
    Operator op;
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < N; ++j) {
            Amplitude t = 0.0;
            for (std::size_t k = 0; k < N; ++k) t += at(i, k) * rhs.at(k, j);
            op.at(i, j) = t;
        }
    return op;
}

template <std::size_t N>
Operator<N> Operator<N>::operator+(const Operator& rhs) const {
    Operator op;
    for (std::size_t k = 0; k < N * N; ++k) op.m[k] = m[k] + rhs.m[k];
    return op;
}

template <std::size_t N>
Operator<N> Operator<N>::operator-(const Operator& rhs) const {
    Operator op;
    for (std::size_t k = 0; k < N * N; ++k) op.m[k] = m[k] - rhs.m[k];
    return op;
}

template <std::size_t N>
Operator<N> Operator<N>::scaled(double factor) const {
    Operator op;
    for (std::size_t k = 0; k < N * N; ++k) op.m[k] = m[k] * factor;
    return op;
}

template <std::size_t N>
bool Operator<N>::is_unitary(double tol) const {
    const Operator gram = adjoint() * (*this);
    const Operator id = identity();
    for (std::size_t k = 0; k < N * N; ++k)
        if (std::abs(gram.m[k] - id.m[k]) > tol) return false;
    return true;
}

template <std::size_t N>
bool Operator<N>::is_hermitian(double tol) const {
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < N; ++j)
            if (std::abs(at(i, j) - std::conj(at(j, i))) > tol) return false;
    return true;
}

template struct Operator<2>;
template struct Operator<4>;

Operator2 outer(const StateVec2& s) {
    Operator2 op;
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j) op.at(i, j) = s.a[i] * std::conj(s.a[j]);
    return op;
}

Operator4 tensor_op(const Operator2& signal_op, const Operator2& probe_op) {
    Operator4 op;
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j)
            for (std::size_t k = 0; k < 2; ++k)
                for (std::size_t l = 0; l < 2; ++l)
                    op.at(2 * i + k, 2 * j + l) = signal_op.at(i, j) * probe_op.at(k, l);
    return op;
}

StateVec4 tensor_product(const StateVec2& signal, const StateVec2& probe) {
    return StateVec4::make({signal.a[0] * probe.a[0], signal.a[0] * probe.a[1],
                            signal.a[1] * probe.a[0], signal.a[1] * probe.a[1]});
}

StateVec2 apply_operator(const Operator2& op, const StateVec2& psi) {
    return StateVec2::make(op.at(0, 0) * psi.a[0] + op.at(0, 1) * psi.a[1],
                           op.at(1, 0) * psi.a[0] + op.at(1, 1) * psi.a[1], psi.basis);
}

StateVec4 apply_operator(const Operator4& op, const StateVec4& psi) {
    std::array<Amplitude, 4> out{};
    for (std::size_t i = 0; i < 4; ++i) {
        Amplitude t = 0.0;
        for (std::size_t j = 0; j < 4; ++j) t += op.at(i, j) * psi.a[j];
        out[i] = t;
    }
    return StateVec4::make(out);
}

StateVec2 signal_projection(const StateVec4& joint, const StateVec2& phi) {
    if (phi.basis != Basis::Signal)
        throw std::invalid_argument("signal_projection: phi must be a signal-basis state");
    if (!phi.normalized)
        throw std::invalid_argument("signal_projection: phi must be normalized");
    const Amplitude c0 = std::conj(phi.a[0]);
    const Amplitude c1 = std::conj(phi.a[1]);
    return StateVec2::make(c0 * joint.a[0] + c1 * joint.a[2],
                           c0 * joint.a[1] + c1 * joint.a[3], Basis::Probe);
}

std::array<double, 2> hermitian_eigenvalues(const Operator2& op) {
    if (!op.is_hermitian())
        throw std::invalid_argument("hermitian_eigenvalues: operator is not Hermitian");
    const double a = op.at(0, 0).real();
    const double d = op.at(1, 1).real();
    const double mean = 0.5 * (a + d);
    const double radius = std::hypot(0.5 * (a - d), std::abs(op.at(0, 1)));
    return {mean - radius, mean + radius};
}

std::array<double, 4> hermitian_eigenvalues(const Operator4& op) {
    if (!op.is_hermitian())
        throw std::invalid_argument("hermitian_eigenvalues: operator is not Hermitian");

    // Cyclic complex Jacobi. Each rotation strips the phase of the (p, q)
    // entry, then applies the standard real rotation that zeroes it.
    Operator4 w = op;
    double scale = 0.0;
    for (const auto& c : w.m) scale = std::max(scale, std::abs(c));
    const double stop = std::max(scale, 1.0) * 1e-15;

    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < 4; ++p)
            for (std::size_t q = p + 1; q < 4; ++q) off = std::max(off, std::abs(w.at(p, q)));
        if (off <= stop) break;

        for (std::size_t p = 0; p < 4; ++p) {
            for (std::size_t q = p + 1; q < 4; ++q) {
                const Amplitude apq = w.at(p, q);
                const double r = std::abs(apq);
                if (r <= stop) continue;

                const Amplitude phase = apq / r;
                const double app = w.at(p, p).real();
                const double aqq = w.at(q, q).real();
                const double tau = (aqq - app) / (2.0 * r);
                const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;

                // Column rotation V: V_pp = c, V_pq = s,
                // V_qp = -s * conj(phase), V_qq = c * conj(phase).
                for (std::size_t k = 0; k < 4; ++k) {
                    const Amplitude wkp = w.at(k, p);
                    const Amplitude wkq = w.at(k, q);
                    w.at(k, p) = wkp * c - wkq * (s * std::conj(phase));
                    w.at(k, q) = wkp * s + wkq * (c * std::conj(phase));
                }
                for (std::size_t k = 0; k < 4; ++k) {
                    const Amplitude wpk = w.at(p, k);
                    const Amplitude wqk = w.at(q, k);
                    w.at(p, k) = wpk * c - wqk * (s * phase);
                    w.at(q, k) = wpk * s + wqk * (c * phase);
                }
            }
        }
    }

    std::array<double, 4> eig{w.at(0, 0).real(), w.at(1, 1).real(), w.at(2, 2).real(),
                              w.at(3, 3).real()};
    std::sort(eig.begin(), eig.end());
    return eig;
}

double min_eigenvalue(const Operator2& op) { return hermitian_eigenvalues(op)[0]; }

double min_eigenvalue(const Operator4& op) { return hermitian_eigenvalues(op)[0]; }

namespace {

template <std::size_t N>
void validate_effects_impl(std::span<const Operator<N>> effects) {
    if (effects.empty()) throw std::invalid_argument("effect set is empty");
    Operator<N> sum;
    for (const auto& e : effects) {
        if (!e.is_hermitian())
            throw std::invalid_argument("effect is not Hermitian");
        if (min_eigenvalue(e) < -kOperatorTol)
            throw std::invalid_argument("effect is not positive semidefinite");
        sum = sum + e;
    }
    const Operator<N> id = Operator<N>::identity();
    for (std::size_t k = 0; k < N * N; ++k)
        if (std::abs(sum.m[k] - id.m[k]) > kOperatorTol)
            throw std::invalid_argument("effect set does not sum to identity");
}

template <typename State, std::size_t N>
std::vector<double> born_impl(const State& psi, std::span<const Operator<N>> effects) {
    validate_effects_impl<N>(effects);
    if (!psi.normalized)
        throw std::invalid_argument("born probabilities require a normalized state");
    std::vector<double> probs;
    probs.reserve(effects.size());
    for (const auto& e : effects) {
        const auto transformed = apply_operator(e, psi);
        double p = psi.inner(transformed).real();
        p = std::clamp(p, 0.0, 1.0);
        probs.push_back(p);
    }
    return probs;
}

}  // namespace

void validate_effects(std::span<const Operator2> effects) { validate_effects_impl<2>(effects); }

void validate_effects(std::span<const Operator4> effects) { validate_effects_impl<4>(effects); }

RandomStream::RandomStream(std::uint64_t seed, std::uint64_t shard)
    : seed_(seed), shard_(shard) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(shard), static_cast<std::uint32_t>(shard >> 32)};
    gen_.seed(seq);
}

double RandomStream::unit() {
    // 53 random bits -> [0, 1) with the usual dyadic spacing.
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
}

int RandomStream::bit() { return unit() < 0.5 ? 0 : 1; }

std::vector<double> born_probabilities(const StateVec2& psi,
                                       std::span<const Operator2> effects) {
    return born_impl(psi, effects);
}

std::vector<double> born_probabilities(const StateVec4& psi,
                                       std::span<const Operator4> effects) {
    return born_impl(psi, effects);
}

std::size_t sample_index(std::span<const double> probs, RandomStream& rng) {
    if (probs.empty()) throw std::invalid_argument("sample_index: empty probability vector");
    const double x = rng.unit();
    double cum = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        cum += probs[i];
        if (x < cum) return i;
    }
    // x fell into the rounding slack past the last boundary; return the last
    // outcome with nonzero probability.
    for (std::size_t i = probs.size(); i-- > 0;)
        if (probs[i] > 0.0) return i;
    return probs.size() - 1;
}

std::size_t sample_outcome(const StateVec2& psi, std::span<const Operator2> effects,
                           RandomStream& rng) {
    const auto probs = born_probabilities(psi, effects);
    return sample_index(probs, rng);
}

std::size_t sample_outcome(const StateVec4& psi, std::span<const Operator4> effects,
                           RandomStream& rng) {
    const auto probs = born_probabilities(psi, effects);
    return sample_index(probs, rng);
}

}  // namespace fpb
