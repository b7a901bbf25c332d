#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "fpb/linalg.hpp"
#include "fpb/povm.hpp"
#include "fpb/probe.hpp"

using namespace fpb;

namespace {

constexpr double kThird = 1.0 / 3.0;

double expect_prob(const StateVec2& s, const Operator2& m) {
    return s.inner(apply_operator(m, s)).real();
}

double completeness_residual(const UsdPovm& povm) {
    const Operator2 sum = povm.pi_plus + povm.pi_minus + povm.pi_inconclusive;
    const Operator2 dev = sum - Operator2::identity();
    double r = 0.0;
    for (const auto& c : dev.m) r = std::max(r, std::abs(c));
    return r;
}

}  // namespace

TEST_CASE("discriminator elements form a valid povm on the whole domain") {
    for (int i = 0; i <= 40; ++i) {
        const double e = kThird * i / 40;
        CAPTURE(e);
        const auto povm = build_usd_povm(e);

        CHECK(completeness_residual(povm) <= 1e-10);
        for (const auto& m : povm.effects()) {
            CHECK(m.is_hermitian(1e-12));
            CHECK(min_eigenvalue(m) >= -1e-10);
        }

        const auto sigma = sigma_states(e);
        const auto hat_plus = sigma.sigma_plus.unit();
        const auto hat_minus = sigma.sigma_minus.unit();

        // Unambiguity: a conclusive click never fires for the other input.
        CHECK(std::abs(expect_prob(hat_plus, povm.pi_minus)) <= 1e-12);
        CHECK(std::abs(expect_prob(hat_minus, povm.pi_plus)) <= 1e-12);

        // Inconclusive rate equals the state overlap on either input.
        const double q = overlap_q(e);
        CHECK(expect_prob(hat_plus, povm.pi_inconclusive) ==
              doctest::Approx(q).epsilon(1e-12));
        CHECK(expect_prob(hat_minus, povm.pi_inconclusive) ==
              doctest::Approx(q).epsilon(1e-12));
    }
}

TEST_CASE("conclusive probability at the half-overlap point") {
    const double e = 0.2;  // Q = 0.5
    const auto povm = build_usd_povm(e);
    const auto hat_plus = sigma_states(e).sigma_plus.unit();
    CHECK(expect_prob(hat_plus, povm.pi_plus) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(std::abs(expect_prob(hat_plus, povm.pi_minus)) <= 1e-15);
}

TEST_CASE("degenerate endpoints are explicit") {
    // E = 0: identical inputs, the povm never concludes.
    const auto never = build_usd_povm(0.0);
    for (std::size_t k = 0; k < 4; ++k) {
        CHECK(std::abs(never.pi_plus.m[k]) == 0.0);
        CHECK(std::abs(never.pi_minus.m[k]) == 0.0);
    }
    CHECK(completeness_residual(never) == 0.0);
    const auto any = StateVec2::make(0.6, 0.8, Basis::Probe);
    const auto p0 = never.outcome_probabilities(any);
    CHECK(p0[0] == 0.0);
    CHECK(p0[1] == 0.0);
    CHECK(p0[2] == 1.0);

    // E = 1/3: orthogonal inputs, plain projective discrimination.
    const auto proj = build_usd_povm(kThird);
    const auto sigma = sigma_states(kThird);
    const auto hat_plus = sigma.sigma_plus.unit();
    const auto hat_minus = sigma.sigma_minus.unit();
    CHECK(expect_prob(hat_plus, proj.pi_plus) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(expect_prob(hat_minus, proj.pi_minus) == doctest::Approx(1.0).epsilon(1e-12));
    for (std::size_t k = 0; k < 4; ++k) CHECK(std::abs(proj.pi_inconclusive.m[k]) == 0.0);
}

TEST_CASE("rank-1 outcome path agrees with the operator path") {
    RandomStream rng(3);
    for (double e : {0.05, 0.2, 0.3, kThird}) {
        const auto povm = build_usd_povm(e);
        const auto effects = povm.effects();
        for (int trial = 0; trial < 40; ++trial) {
            const Amplitude a0(rng.unit() - 0.5, rng.unit() - 0.5);
            const Amplitude a1(rng.unit() - 0.5, rng.unit() - 0.5);
            const auto psi = StateVec2::make(a0, a1, Basis::Probe).unit();
            const auto fast = povm.outcome_probabilities(psi);
            const auto slow =
                born_probabilities(psi, std::span<const Operator2>(effects));
            for (std::size_t k = 0; k < 3; ++k)
                CHECK(fast[k] == doctest::Approx(slow[k]).epsilon(1e-12));
        }
    }
}

TEST_CASE("impossible conclusive outcomes are exactly zero on sigma inputs") {
    for (double e : {0.01, 0.2, 0.25, kThird}) {
        const auto povm = build_usd_povm(e);
        const auto sigma = sigma_states(e);
        const auto on_plus = povm.outcome_probabilities(sigma.sigma_plus.unit());
        const auto on_minus = povm.outcome_probabilities(sigma.sigma_minus.unit());
        CHECK(on_plus[1] == 0.0);
        CHECK(on_minus[0] == 0.0);
    }
}

TEST_CASE("separator states") {
    const auto sep = separator_states(0.2);
    CHECK(sep.sum.a[0].real() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(std::abs(sep.sum.a[1]) < 1e-14);
    CHECK(std::abs(sep.diff.a[0]) < 1e-14);
    CHECK(sep.diff.a[1].real() == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(std::abs(sep.sum.inner(sep.diff)) < 1e-14);

    // Orthonormal across the domain, undefined where the inputs coincide.
    for (int i = 1; i <= 20; ++i) {
        const double e = kThird * i / 20;
        const auto s = separator_states(e);
        CHECK(s.sum.normalized);
        CHECK(s.diff.normalized);
        CHECK(std::abs(s.sum.inner(s.diff)) < 1e-13);
    }
    CHECK_THROWS_AS(separator_states(0.0), std::domain_error);
}

TEST_CASE("beamsplitter reflectance") {
    CHECK(beamsplitter_reflectance(1.0) == 0.0);
    CHECK(beamsplitter_reflectance(0.0) == 1.0);
    CHECK(beamsplitter_reflectance(0.5) == doctest::Approx(kThird).epsilon(1e-15));

    // Algebraic and trigonometric forms agree everywhere.
    for (int i = 0; i <= 100; ++i) {
        const double q = double(i) / 100;
        const double trig = std::pow(std::tan(0.5 * std::acos(q)), 2);
        CHECK(beamsplitter_reflectance(q) == doctest::Approx(trig).epsilon(1e-12));
    }

    CHECK_THROWS_AS(beamsplitter_reflectance(1.2), std::domain_error);
    CHECK_THROWS_AS(beamsplitter_reflectance(-0.2), std::domain_error);
}

TEST_CASE("optical parameters bundle") {
    const auto opt = optical_params(0.2);
    CHECK(opt.reflectance_r1 == doctest::Approx(kThird).epsilon(1e-14));
    CHECK(opt.separator_sum.a[0].real() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(opt.separator_diff.a[1].real() == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK_THROWS_AS(optical_params(0.0), std::domain_error);
}

TEST_CASE("conclusive bit assignment after reconciliation") {
    CHECK(infer_bit_povm(PovmOutcome::ConclusivePlus, SignalBasis::U) == 0);
    CHECK(infer_bit_povm(PovmOutcome::ConclusiveMinus, SignalBasis::U) == 1);
    CHECK(infer_bit_povm(PovmOutcome::ConclusivePlus, SignalBasis::V) == 1);
    CHECK(infer_bit_povm(PovmOutcome::ConclusiveMinus, SignalBasis::V) == 0);
    CHECK_FALSE(infer_bit_povm(PovmOutcome::Inconclusive, SignalBasis::U).has_value());
    CHECK_FALSE(infer_bit_povm(PovmOutcome::Inconclusive, SignalBasis::V).has_value());
}
