#pragma once

#include <array>
#include <optional>

#include "fpb/linalg.hpp"
#include "fpb/probe.hpp"

namespace fpb {

enum class PovmOutcome { ConclusivePlus, ConclusiveMinus, Inconclusive };

// Optimal unambiguous discriminator for the two normalized probe states
// sigma_hat_plus / sigma_hat_minus with overlap Q:
//   pi_plus  = |d+><d+| / (1+Q),  d+ orthogonal to sigma_hat_minus
//   pi_minus = |d-><d-| / (1+Q),  d- orthogonal to sigma_hat_plus
//   pi_inconclusive = I - pi_plus - pi_minus
// A conclusive click never misidentifies; the inconclusive rate on either
// input is exactly Q.
struct UsdPovm {
    Operator2 pi_plus;
    Operator2 pi_minus;
    Operator2 pi_inconclusive;

    // Rank-1 data behind the conclusive elements. Outcome probabilities are
    // computed through these inner products so that the impossible outcome
    // on a sigma_hat input is exactly zero, not rounding noise.
    StateVec2 detector_plus_dir;
    StateVec2 detector_minus_dir;
    double conclusive_weight = 0.0;  // 1/(1+Q); 0 in the E = 0 degenerate case

    std::array<Operator2, 3> effects() const { return {pi_plus, pi_minus, pi_inconclusive}; }

    // {p_plus, p_minus, p_inconclusive} for a normalized probe state.
    std::array<double, 3> outcome_probabilities(const StateVec2& probe) const;
};

// Degenerate endpoints are built explicitly: E = 0 gives {0, 0, I} (the two
// inputs coincide, nothing is ever conclusive); E = 1/3 gives the projective
// measurement onto the now-orthogonal inputs.
UsdPovm build_usd_povm(double error_rate);

// Polarization-interferometer settings equivalent to the POVM: the conclusive
// arm interferes the (normalized) sum and difference of the probe states, and
// the inconclusive arm is tapped off with beamsplitter reflectance R1.
struct SeparatorStates {
    StateVec2 sum;   // along w_a
    StateVec2 diff;  // along -w_b
};

// Throws std::domain_error at E = 0, where the two probe states coincide and
// their difference direction is undefined.
SeparatorStates separator_states(double error_rate);

// R1 = (1-Q)/(1+Q), equal to tan^2(arccos(Q)/2). Domain Q in [0, 1].
double beamsplitter_reflectance(double overlap_q);

struct OpticalParams {
    StateVec2 separator_sum;
    StateVec2 separator_diff;
    double reflectance_r1;
};
OpticalParams optical_params(double error_rate);

// Bit Eve assigns to a conclusive outcome once the basis is announced:
// ConclusivePlus means bit 0 in the u basis and bit 1 in the v basis;
// ConclusiveMinus the reverse. Inconclusive carries no information.
std::optional<int> infer_bit_povm(PovmOutcome outcome, SignalBasis basis);

}  // namespace fpb
