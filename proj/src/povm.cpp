#include "fpb/povm.hpp"

#include <cmath>
#include <stdexcept>

namespace fpb {

namespace {

// Unit vector orthogonal to a real probe-basis state (x, y) -> (y, -x).
// For complex amplitudes the conjugated rotation keeps <perp|s> exactly zero.
StateVec2 perp(const StateVec2& s) {
    return StateVec2::make(std::conj(s.a[1]), -std::conj(s.a[0]), s.basis);
}

}  // namespace

std::array<double, 3> UsdPovm::outcome_probabilities(const StateVec2& probe) const {
    if (!probe.normalized)
        throw std::invalid_argument("outcome_probabilities: probe state must be normalized");
    const double p_plus = conclusive_weight * std::norm(detector_plus_dir.inner(probe));
    const double p_minus = conclusive_weight * std::norm(detector_minus_dir.inner(probe));
    const double p_inc = std::max(1.0 - p_plus - p_minus, 0.0);
    return {p_plus, p_minus, p_inc};
}

UsdPovm build_usd_povm(double error_rate) {
    const ProbeTuning tuning = tuning_from_error_rate(error_rate);
    const double q = tuning.overlap_q;

    UsdPovm povm;
    if (q >= 1.0) {
        // E = 0: identical inputs, never conclusive.
        povm.pi_inconclusive = Operator2::identity();
        povm.detector_plus_dir = StateVec2::make(0.0, 1.0, Basis::Probe);
        povm.detector_minus_dir = StateVec2::make(0.0, 1.0, Basis::Probe);
        povm.conclusive_weight = 0.0;
        return povm;
    }

    const SigmaStates sigma = sigma_states(tuning.error_rate);
    const StateVec2 sigma_hat_plus = sigma.sigma_plus.unit();
    const StateVec2 sigma_hat_minus = sigma.sigma_minus.unit();

    povm.detector_plus_dir = perp(sigma_hat_minus);
    povm.detector_minus_dir = perp(sigma_hat_plus);

    if (q <= 0.0) {
        // E = 1/3: orthogonal inputs, plain projective discrimination.
        povm.pi_plus = outer(sigma_hat_plus);
        povm.pi_minus = outer(sigma_hat_minus);
        povm.conclusive_weight = 1.0;
        return povm;
    }

    povm.conclusive_weight = 1.0 / (1.0 + q);
    povm.pi_plus = outer(povm.detector_plus_dir).scaled(povm.conclusive_weight);
    povm.pi_minus = outer(povm.detector_minus_dir).scaled(povm.conclusive_weight);
    povm.pi_inconclusive =
        Operator2::identity() - povm.pi_plus - povm.pi_minus;
    return povm;
}

SeparatorStates separator_states(double error_rate) {
    const SigmaStates sigma = sigma_states(error_rate);
    const StateVec2 sum = StateVec2::make(sigma.sigma_plus.a[0] + sigma.sigma_minus.a[0],
                                          sigma.sigma_plus.a[1] + sigma.sigma_minus.a[1],
                                          Basis::Probe);
    const StateVec2 diff = StateVec2::make(sigma.sigma_plus.a[0] - sigma.sigma_minus.a[0],
                                           sigma.sigma_plus.a[1] - sigma.sigma_minus.a[1],
                                           Basis::Probe);
    if (diff.norm() <= kAlgebraTol)
        throw std::domain_error(
            "separator_states: probe states coincide at E = 0, difference undefined");
    return {sum.unit(), diff.unit()};
}

double beamsplitter_reflectance(double overlap_q) {
    if (!(overlap_q >= -kAlgebraTol && overlap_q <= 1.0 + kAlgebraTol))
        throw std::domain_error("overlap must lie in [0, 1]");
    const double q = std::min(std::max(overlap_q, 0.0), 1.0);
    return (1.0 - q) / (1.0 + q);
}

OpticalParams optical_params(double error_rate) {
    const SeparatorStates sep = separator_states(error_rate);
    return {sep.sum, sep.diff, beamsplitter_reflectance(overlap_q(error_rate))};
}

std::optional<int> infer_bit_povm(PovmOutcome outcome, SignalBasis basis) {
    switch (outcome) {
        case PovmOutcome::ConclusivePlus: return basis == SignalBasis::U ? 0 : 1;
        case PovmOutcome::ConclusiveMinus: return basis == SignalBasis::U ? 1 : 0;
        case PovmOutcome::Inconclusive: return std::nullopt;
    }
    return std::nullopt;
}

}  // namespace fpb
