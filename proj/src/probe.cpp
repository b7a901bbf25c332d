#include "fpb/probe.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace fpb {

namespace {

constexpr double kPi = std::numbers::pi;
// Slack accepted on the closed interval [0, 1/3] so that grid endpoints
// computed in floating point are not rejected.
constexpr double kDomainEps = 1e-12;

void check_error_rate(double e) {
    if (!(e >= -kDomainEps && e <= 1.0 / 3.0 + kDomainEps))
        throw std::domain_error("error rate must lie in [0, 1/3]");
}

double clamp01(double x) {
    if (x < 0.0) return 0.0;
    if (x > 1.0) return 1.0;
    return x;
}

// Angle difference folded to [-pi, pi).
double wrap_angle(double a) {
    double r = std::remainder(a, 2.0 * kPi);
    if (r >= kPi) r -= 2.0 * kPi;
    return r;
}

StateVec2 signal_at(double rel_angle) {
    return StateVec2::make(std::cos(rel_angle), std::sin(rel_angle), Basis::Signal);
}

}  // namespace

Geometry default_geometry() {
    Geometry g;
    g.angle_e0 = 0.0;
    g.angle_e1 = kPi / 2.0;
    g.angle_u = -kPi / 8.0;
    g.angle_v = -3.0 * kPi / 8.0;
    return g;
}

void validate_geometry(const Geometry& g) {
    const double de1 = wrap_angle(g.angle_e1 - g.angle_e0 - kPi / 2.0);
    const double du = wrap_angle(g.angle_u - g.angle_e0 + kPi / 8.0);
    const double dv = wrap_angle(g.angle_v - g.angle_e0 + 3.0 * kPi / 8.0);
    if (std::abs(de1) > kAlgebraTol || std::abs(du) > kAlgebraTol || std::abs(dv) > kAlgebraTol)
        throw std::invalid_argument("geometry: angles do not satisfy the required layout");
}

StateVec2 signal_state(SignalKind kind, const Geometry& g) {
    validate_geometry(g);
    const double u = g.angle_u - g.angle_e0;
    const double v = g.angle_v - g.angle_e0;
    switch (kind) {
        case SignalKind::U: return signal_at(u);
        case SignalKind::UBar: return signal_at(u - kPi / 2.0);
        case SignalKind::V: return signal_at(v);
        case SignalKind::VBar: return signal_at(v + kPi / 2.0);
    }
    throw std::invalid_argument("signal_state: bad kind");
}

SignalBasis basis_of(SignalKind kind) {
    return (kind == SignalKind::U || kind == SignalKind::UBar) ? SignalBasis::U
                                                               : SignalBasis::V;
}

int bit_of(SignalKind kind) {
    return (kind == SignalKind::UBar || kind == SignalKind::VBar) ? 1 : 0;
}

SignalKind kind_of(SignalBasis basis, int bit) {
    if (basis == SignalBasis::U) return bit ? SignalKind::UBar : SignalKind::U;
    return bit ? SignalKind::VBar : SignalKind::V;
}

TargetStates target_states(double error_rate) {
    check_error_rate(error_rate);
    const double e = clamp01(error_rate);
    const double ca = std::sqrt(clamp01(1.0 - 2.0 * e));
    const double cb = std::sqrt(clamp01(2.0 * e));
    TargetStates t;
    t.a2 = StateVec2::make(ca, cb, Basis::Probe);
    t.a1 = StateVec2::make(ca, -cb, Basis::Probe);
    return t;
}

SigmaStates sigma_states(double error_rate) {
    check_error_rate(error_rate);
    const double e = clamp01(error_rate);
    const double ca = std::sqrt(clamp01(1.0 - 2.0 * e));
    const double cb = std::sqrt(e);
    SigmaStates s;
    s.sigma_plus = StateVec2::make(ca, -cb, Basis::Probe);
    s.sigma_minus = StateVec2::make(ca, cb, Basis::Probe);
    s.sigma0 = StateVec2::make(0.0, cb, Basis::Probe);
    return s;
}

Operator4 cnot_unitary(const CnotConfig& cfg) {
    const StateVec2 c0 = signal_at(cfg.control_angle0);
    const StateVec2 c1 = signal_at(cfg.control_angle1);
    if (std::abs(c0.inner(c1)) > kAlgebraTol)
        throw std::invalid_argument("cnot_unitary: control directions must be orthogonal");

    Operator2 flip;
    if (cfg.target_flip_basis == FlipBasis::WPlusMinus) {
        // Exchanging w+ and w- is diag(1, -1) in the {w_a, w_b} frame.
        flip.at(0, 0) = 1.0;
        flip.at(1, 1) = -1.0;
    } else {
        flip.at(0, 1) = 1.0;
        flip.at(1, 0) = 1.0;
    }

    const Operator4 gate =
        tensor_op(outer(c0), flip) + tensor_op(outer(c1), Operator2::identity());
    if (!gate.is_unitary())
        throw std::invalid_argument("cnot_unitary: configured gate is not unitary");
    return gate;
}

StateVec4 entangle(SignalKind kind, double error_rate, const CnotConfig& cfg) {
    const StateVec4 in = tensor_product(signal_state(kind), target_states(error_rate).a2);
    return apply_operator(cnot_unitary(cfg), in);
}

MeasurementBasis measurement_basis() {
    const double r = std::numbers::sqrt2 / 2.0;
    MeasurementBasis b;
    b.w_plus = StateVec2::make(r, r, Basis::Probe);
    b.w_minus = StateVec2::make(r, -r, Basis::Probe);
    return b;
}

double eve_correct_prob_projective(double error_rate) {
    check_error_rate(error_rate);
    const double e = clamp01(error_rate);
    const double p = 0.5 + std::sqrt(std::max(e * (1.0 - 2.0 * e), 0.0)) / (1.0 - e);
    return std::min(p, 1.0);
}

double renyi_info(double error_rate) {
    const double q = overlap_q(error_rate);
    return std::log2(2.0 - q * q);
}

double overlap_q(double error_rate) {
    check_error_rate(error_rate);
    const double e = clamp01(error_rate);
    // Separate statement so the numerator is not fused: at E = 1/3 the
    // product rounds to 1 and Q must come out exactly 0.
    const double three_e = 3.0 * e;
    const double q = (1.0 - three_e) / (1.0 - e);
    // e within kDomainEps of an endpoint can push q a hair outside [0, 1].
    return clamp01(q);
}

double error_rate_from_inconclusive(double inconclusive_rate) {
    if (!(inconclusive_rate >= -kDomainEps && inconclusive_rate <= 1.0 + kDomainEps))
        throw std::domain_error("inconclusive rate must lie in [0, 1]");
    const double r = clamp01(inconclusive_rate);
    return (1.0 - r) / (3.0 - r);
}

int infer_bit_projective(WDetector outcome, SignalBasis basis) {
    if (basis == SignalBasis::U) return outcome == WDetector::WMinus ? 0 : 1;
    return outcome == WDetector::WPlus ? 0 : 1;
}

ProbeTuning tuning_from_error_rate(double error_rate) {
    check_error_rate(error_rate);
    ProbeTuning t;
    t.error_rate = clamp01(error_rate);
    t.overlap_q = overlap_q(error_rate);
    t.inconclusive_rate = t.overlap_q;
    t.conclusive_rate = 1.0 - t.overlap_q;
    t.reflectance_r1 = (1.0 - t.overlap_q) / (1.0 + t.overlap_q);
    const TargetStates targets = target_states(error_rate);
    t.target_a2 = targets.a2;
    t.target_a1 = targets.a1;
    return t;
}

ProbeTuning tuning_from_inconclusive_rate(double inconclusive_rate) {
    return tuning_from_error_rate(error_rate_from_inconclusive(inconclusive_rate));
}

}  // namespace fpb
