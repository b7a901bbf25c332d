#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace fpb {

using Amplitude = std::complex<double>;

// Tolerance for algebraic identities (norms, unitarity, closed-form equalities).
inline constexpr double kAlgebraTol = 1e-12;
// Tolerance for operator-level checks (completeness, positivity), which
// accumulate more rounding.
inline constexpr double kOperatorTol = 1e-10;

// Coordinate frame a 2-dim state is expressed in: the signal polarization
// basis {e0, e1} or the probe polarization basis {w_a, w_b}.
enum class Basis { Signal, Probe };

// One qubit: two complex amplitudes in a declared orthonormal basis.
// Unnormalized states are first-class; `normalized` records whether the
// squared norm was within kAlgebraTol of 1 when the state was built.
struct StateVec2 {
    std::array<Amplitude, 2> a{};
    Basis basis = Basis::Signal;
    bool normalized = false;

    static StateVec2 make(Amplitude a0, Amplitude a1, Basis basis);

    double norm_sq() const;
    double norm() const;
    // <this|other>
    Amplitude inner(const StateVec2& other) const;
    // Normalized copy (throws std::invalid_argument on a zero vector).
    StateVec2 unit() const;
};

// Joint signal (x) probe state. Component order is signal-major:
// a[2*i + j] multiplies |signal_i> (x) |probe_j>. All modules rely on
// this ordering.
struct StateVec4 {
    std::array<Amplitude, 4> a{};
    bool normalized = false;

    static StateVec4 make(std::array<Amplitude, 4> amps);

    double norm_sq() const;
    double norm() const;
    Amplitude inner(const StateVec4& other) const;
};

// Dense square operator, row-major, dimension 2 (single subsystem) or 4
// (signal (x) probe). Unitarity and positivity are checkable predicates,
// never assumed.
template <std::size_t N>
struct Operator {
    std::array<Amplitude, N * N> m{};

    Amplitude& at(std::size_t i, std::size_t j) { return m[N * i + j]; }
    const Amplitude& at(std::size_t i, std::size_t j) const { return m[N * i + j]; }

    static Operator identity();
    static Operator zero() { return {}; }

    Operator adjoint() const;
    Operator operator*(const Operator& rhs) const;
    Operator operator+(const Operator& rhs) const;
    Operator operator-(const Operator& rhs) const;
    Operator scaled(double factor) const;

    // max_ij |(U^dag U - I)_ij| <= tol
    bool is_unitary(double tol = kAlgebraTol) const;
    bool is_hermitian(double tol = kOperatorTol) const;
};

using Operator2 = Operator<2>;
using Operator4 = Operator<4>;

// |s><s| (works for unnormalized s as well).
Operator2 outer(const StateVec2& s);

// Kronecker product, signal factor first (consistent with StateVec4 order).
Operator4 tensor_op(const Operator2& signal_op, const Operator2& probe_op);

// |signal> (x) |probe>; out[2i+j] = s_i * p_j. Norm is multiplicative.
StateVec4 tensor_product(const StateVec2& signal, const StateVec2& probe);

StateVec2 apply_operator(const Operator2& op, const StateVec2& psi);
StateVec4 apply_operator(const Operator4& op, const StateVec4& psi);

// <phi|_signal |Psi>: the (generally unnormalized) probe state multiplying
// the signal component phi. Its squared norm is the probability that a
// signal-side projective measurement onto phi succeeds.
// Requires phi normalized and expressed in the signal basis.
StateVec2 signal_projection(const StateVec4& joint, const StateVec2& phi);

// Eigenvalues of a Hermitian operator, ascending. The 2-dim case is closed
// form; the 4-dim case runs cyclic complex Jacobi sweeps.
std::array<double, 2> hermitian_eigenvalues(const Operator2& op);
std::array<double, 4> hermitian_eigenvalues(const Operator4& op);

double min_eigenvalue(const Operator2& op);
double min_eigenvalue(const Operator4& op);

// Throws std::invalid_argument unless every effect is Hermitian and positive
// semidefinite within kOperatorTol and the set sums to identity within
// kOperatorTol.
void validate_effects(std::span<const Operator2> effects);
void validate_effects(std::span<const Operator4> effects);

// Deterministic random stream: identical (seed, shard) always reproduces the
// identical draw sequence, independent of platform. Never shared between
// simulation shards.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed, std::uint64_t shard = 0);

    // Uniform in [0, 1); consumes one draw.
    double unit();
    // Fair bit; consumes one draw.
    int bit();

    std::uint64_t seed() const { return seed_; }
    std::uint64_t shard() const { return shard_; }

private:
    std::mt19937_64 gen_;
    std::uint64_t seed_;
    std::uint64_t shard_;
};

// Born-rule probabilities <psi|effect_i|psi> for a complete positive effect
// set. Validates the effects and requires psi normalized.
std::vector<double> born_probabilities(const StateVec2& psi,
                                       std::span<const Operator2> effects);
std::vector<double> born_probabilities(const StateVec4& psi,
                                       std::span<const Operator4> effects);

// Categorical draw over a probability vector; consumes exactly one uniform
// draw. The vector must (approximately) sum to 1; no validation is done here.
std::size_t sample_index(std::span<const double> probs, RandomStream& rng);

// Samples outcome i with probability <psi|effect_i|psi>; consumes exactly one
// uniform draw. Throws if the effects are not complete/positive or psi is not
// normalized.
std::size_t sample_outcome(const StateVec2& psi, std::span<const Operator2> effects,
                           RandomStream& rng);
std::size_t sample_outcome(const StateVec4& psi, std::span<const Operator4> effects,
                           RandomStream& rng);

}  // namespace fpb
