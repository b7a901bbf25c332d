#pragma once

#include <string_view>

#include "fpb/linalg.hpp"

namespace fpb {

// The four BB84 signal states: u/ubar span one conjugate basis, v/vbar the
// other. u and v carry bit 0, ubar and vbar carry bit 1.
enum class SignalKind { U, UBar, V, VBar };

// Publicly announced basis during reconciliation.
enum class SignalBasis { U, V };

// Probe-side projective detectors.
enum class WDetector { WPlus, WMinus };

// Polarization directions in the lab frame, radians. The signal states are
// expressed in {e0, e1} coordinates, so only angles relative to e0 matter;
// a rigid rotation of the whole frame changes nothing.
struct Geometry {
    double angle_e0 = 0.0;
    double angle_e1 = 0.0;
    double angle_u = 0.0;
    double angle_v = 0.0;

    // Entangler parameters absorbed into the construction: the two bases are
    // mutually unbiased (mu) and the probe phase is zero (theta).
    static constexpr double kMu = 0.78539816339744830961;     // pi/4
    static constexpr double kTheta = 0.0;
};

// e0 = 0, e1 = pi/2, u = -pi/8, v = -3pi/8. This orientation, together with
// the ubar/vbar sign convention below, is the one the entangler analysis is
// written in.
Geometry default_geometry();

// Throws std::invalid_argument unless e1 = e0 + pi/2, u = e0 - pi/8 and
// v = e0 - 3pi/8 (all within kAlgebraTol).
void validate_geometry(const Geometry& g);

// Sign convention for the orthogonal partners: ubar is u rotated by -pi/2,
// vbar is v rotated by +pi/2. Recorded here because the entangled-output
// expressions are sign-sensitive.
inline constexpr std::string_view kSignConvention =
    "ubar = R(-pi/2) u, vbar = R(+pi/2) v";

// Which probe basis the conditional flip acts in. WPlusMinus (the default)
// exchanges the w+ / w- superposition states, i.e. diag(1, -1) in {w_a, w_b};
// WaWb exchanges the basis states themselves and is kept only for
// exploration: it does not reproduce the tuned entangler outputs.
enum class FlipBasis { WPlusMinus, WaWb };

struct CnotConfig {
    // Control basis as signal-frame angles; flip branch first. Must be
    // orthogonal. Defaults to {e0, e1}.
    double control_angle0 = 0.0;
    double control_angle1 = 1.57079632679489661923;  // pi/2
    FlipBasis target_flip_basis = FlipBasis::WPlusMinus;
    std::string_view sign_convention = kSignConvention;
};

// Signal-basis coordinates of the four signal states under the geometry's
// sign convention. Result is normalized.
StateVec2 signal_state(SignalKind kind, const Geometry& g = default_geometry());

SignalBasis basis_of(SignalKind kind);
int bit_of(SignalKind kind);
SignalKind kind_of(SignalBasis basis, int bit);

// Initial probe states, probe basis, unit norm for all E in [0, 1/3]:
//   a2 = sqrt(1-2E) w_a + sqrt(2E) w_b   (the state fed into the entangler)
//   a1 = sqrt(1-2E) w_a - sqrt(2E) w_b
struct TargetStates {
    StateVec2 a2;
    StateVec2 a1;
};
TargetStates target_states(double error_rate);

// Unnormalized probe components of the entangled outputs, probe basis:
//   sigma_plus  = (sqrt(1-2E), -sqrt(E)),  |sigma_plus|^2  = 1 - E
//   sigma_minus = (sqrt(1-2E), +sqrt(E)),  |sigma_minus|^2 = 1 - E
//   sigma0      = (0, sqrt(E)),            |sigma0|^2      = E
struct SigmaStates {
    StateVec2 sigma_plus;
    StateVec2 sigma_minus;
    StateVec2 sigma0;
};
SigmaStates sigma_states(double error_rate);

// The entangling gate: flip the probe (in the configured basis) when the
// signal lies along the first control direction, pass it through otherwise.
// Independent of E; throws if the control directions are not orthogonal.
Operator4 cnot_unitary(const CnotConfig& cfg = {});

// cnot_unitary applied to signal_state(kind) (x) a2(E). Normalized output.
StateVec4 entangle(SignalKind kind, double error_rate, const CnotConfig& cfg = {});

// Probe measurement basis w+/- = (w_a +/- w_b)/sqrt(2), probe frame.
struct MeasurementBasis {
    StateVec2 w_plus;
    StateVec2 w_minus;
};
MeasurementBasis measurement_basis();

// Probability that the correct projective detector fires:
// 1/2 + sqrt(E(1-2E))/(1-E). Domain [0, 1/3].
double eve_correct_prob_projective(double error_rate);

// Renyi information gain about the sifted bit, in bits: log2(2 - Q^2).
double renyi_info(double error_rate);

// Overlap of the normalized probe states: Q = (1-3E)/(1-E). Equals the
// inconclusive rate of the optimal unambiguous discriminator.
double overlap_q(double error_rate);

// Inverse map: E = (1-R)/(3-R) for an inconclusive rate R in [0, 1].
double error_rate_from_inconclusive(double inconclusive_rate);

// Bit Eve assigns to a projective outcome once the basis is announced:
// w- means bit 0 in the u basis; w+ means bit 0 in the v basis.
int infer_bit_projective(WDetector outcome, SignalBasis basis);

// Everything derived from one operating point.
struct ProbeTuning {
    double error_rate;         // E
    double overlap_q;          // Q
    double inconclusive_rate;  // equals Q
    double conclusive_rate;    // 1 - Q
    double reflectance_r1;     // (1-Q)/(1+Q)
    StateVec2 target_a2;
    StateVec2 target_a1;
};
ProbeTuning tuning_from_error_rate(double error_rate);
ProbeTuning tuning_from_inconclusive_rate(double inconclusive_rate);

}  // namespace fpb
