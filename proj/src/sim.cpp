#include "fpb/sim.hpp"

#include <cmath>
#include <stdexcept>
#include <string_view>

namespace fpb {

namespace {

constexpr double kRateTol = 1e-9;

struct Tally {
    std::uint64_t sent = 0;
    std::uint64_t received = 0;
    std::uint64_t sifted = 0;
    std::uint64_t sifted_errors = 0;
    std::uint64_t eve_correct = 0;
    std::uint64_t eve_measured = 0;
    std::uint64_t eve_conclusive = 0;

    void add(const Tally& o) {
        sent += o.sent;
        received += o.received;
        sifted += o.sifted;
        sifted_errors += o.sifted_errors;
        eve_correct += o.eve_correct;
        eve_measured += o.eve_measured;
        eve_conclusive += o.eve_conclusive;
    }

    void count(const PulseRecord& rec) {
        ++sent;
        if (rec.bob_received) ++received;
        if (rec.eve_outcome) {
            ++eve_measured;
            if (*rec.eve_outcome != EveOutcome::Inconclusive) ++eve_conclusive;
        }
        if (rec.sifted) {
            ++sifted;
            if (rec.bob_bit && *rec.bob_bit != rec.alice_bit) ++sifted_errors;
            if (rec.eve_guess && *rec.eve_guess == rec.alice_bit) ++eve_correct;
        }
    }
};

SessionStats finalize(const Tally& t, const SessionConfig& cfg) {
    SessionStats s;
    s.sent = t.sent;
    s.received = t.received;
    s.sifted = t.sifted;
    s.sifted_errors = t.sifted_errors;
    if (t.sifted > 0)
        s.qber = static_cast<double>(t.sifted_errors) / static_cast<double>(t.sifted);
    s.effective_transmission =
        t.sent > 0 ? static_cast<double>(t.received) / static_cast<double>(t.sent) : 0.0;

    if (cfg.eve_mode != EveMode::None) {
        const double e = cfg.resolved_error_rate();
        const double r_inc = overlap_q(e);
        if (t.sifted > 0)
            s.eve_accuracy = static_cast<double>(t.eve_correct) / static_cast<double>(t.sifted);
        if (t.eve_measured > 0)
            s.eve_conclusive_fraction =
                static_cast<double>(t.eve_conclusive) / static_cast<double>(t.eve_measured);
        s.renyi_info_analytic = renyi_info(e);
        switch (cfg.eve_mode) {
            case EveMode::Projective:
                s.eve_accuracy_expected = eve_correct_prob_projective(e);
                break;
            case EveMode::Povm:
                s.eve_accuracy_expected =
                    cfg.selective_relay ? 1.0 : (1.0 - r_inc) + 0.5 * r_inc;
                break;
            case EveMode::None:
                break;
        }
    }
    return s;
}

// Probe states and outcome distributions for one operating point. Derived
// from the entangled outputs, then cross-checked against the closed forms.
struct AttackTables {
    double flip_prob = 0.0;
    // Outcome probabilities per signal kind, indexed by SignalKind value.
    // Projective: {P(w+), P(w-)}; Povm: {P(+), P(-), P(?)} padded to 3.
    std::array<std::array<double, 3>, 4> probs{};
    std::array<std::size_t, 4> n_outcomes{};
};

constexpr std::array<SignalKind, 4> kKinds = {SignalKind::U, SignalKind::UBar, SignalKind::V,
                                              SignalKind::VBar};

SignalKind flipped(SignalKind kind) {
    switch (kind) {
        case SignalKind::U: return SignalKind::UBar;
        case SignalKind::UBar: return SignalKind::U;
        case SignalKind::V: return SignalKind::VBar;
        case SignalKind::VBar: return SignalKind::V;
    }
    throw std::invalid_argument("flipped: bad kind");
}

AttackTables build_attack_tables(EveMode mode, double e) {
    AttackTables tables;

    // Per-kind correlated probe state: the normalized probe component the
    // entangler attaches to the unflipped signal. The flip weight is the
    // squared norm of the component along the flipped signal.
    std::array<StateVec2, 4> probe_states;
    for (std::size_t k = 0; k < 4; ++k) {
        const SignalKind kind = kKinds[k];
        const StateVec4 joint = entangle(kind, e);
        const StateVec2 kept = signal_projection(joint, signal_state(kind));
        const StateVec2 flip = signal_projection(joint, signal_state(flipped(kind)));
        probe_states[k] = kept.unit();

        const double flip_p = flip.norm_sq();
        if (k == 0)
            tables.flip_prob = flip_p;
        else if (std::abs(flip_p - tables.flip_prob) > kAlgebraTol)
            throw std::logic_error("attack tables: flip weight differs across signal kinds");
    }
    if (std::abs(tables.flip_prob - e) > kAlgebraTol)
        throw std::logic_error("attack tables: flip weight does not match the error rate");

    // Cross-check the kind -> sigma_hat correlation before relying on it.
    const SigmaStates sigma = sigma_states(e);
    const double sigma_norm = sigma.sigma_plus.norm();
    if (sigma_norm > 0.0) {
        const StateVec2 hat_plus = sigma.sigma_plus.unit();
        const StateVec2 hat_minus = sigma.sigma_minus.unit();
        const auto expect = [&](std::size_t k, const StateVec2& hat) {
            const Amplitude dev0 = probe_states[k].a[0] - hat.a[0];
            const Amplitude dev1 = probe_states[k].a[1] - hat.a[1];
            if (std::abs(dev0) > kAlgebraTol || std::abs(dev1) > kAlgebraTol)
                throw std::logic_error("attack tables: probe correlation mismatch");
        };
        expect(0, hat_plus);   // u
        expect(1, hat_minus);  // ubar
        expect(2, hat_minus);  // v
        expect(3, hat_plus);   // vbar
    }

    if (mode == EveMode::Projective) {
        const MeasurementBasis basis = measurement_basis();
        for (std::size_t k = 0; k < 4; ++k) {
            const double p_plus = std::norm(basis.w_plus.inner(probe_states[k]));
            const double p_minus = std::norm(basis.w_minus.inner(probe_states[k]));
            tables.probs[k] = {p_plus, p_minus, 0.0};
            tables.n_outcomes[k] = 2;
        }
    } else {
        const UsdPovm povm = build_usd_povm(e);
        for (std::size_t k = 0; k < 4; ++k) {
            tables.probs[k] = povm.outcome_probabilities(probe_states[k]);
            tables.n_outcomes[k] = 3;
        }
    }
    return tables;
}

EveOutcome projective_label(std::size_t idx) {
    return idx == 0 ? EveOutcome::WPlus : EveOutcome::WMinus;
}

EveOutcome povm_label(std::size_t idx) {
    switch (idx) {
        case 0: return EveOutcome::ConclusivePlus;
        case 1: return EveOutcome::ConclusiveMinus;
        default: return EveOutcome::Inconclusive;
    }
}

PovmOutcome to_povm_outcome(EveOutcome o) {
    switch (o) {
        case EveOutcome::ConclusivePlus: return PovmOutcome::ConclusivePlus;
        case EveOutcome::ConclusiveMinus: return PovmOutcome::ConclusiveMinus;
        default: return PovmOutcome::Inconclusive;
    }
}

PulseRecord simulate_pulse(const SessionConfig& cfg, const AttackTables* tables,
                           RandomStream& rng) {
    PulseRecord rec;
    rec.alice_bit = static_cast<std::uint8_t>(rng.bit());
    rec.alice_basis = rng.bit() ? SignalBasis::V : SignalBasis::U;
    const SignalKind kind = kind_of(rec.alice_basis, rec.alice_bit);

    bool flip = false;
    if (tables) {
        flip = rng.unit() < tables->flip_prob;
        const auto k = static_cast<std::size_t>(kind);
        const std::span<const double> probs(tables->probs[k].data(), tables->n_outcomes[k]);
        const std::size_t outcome = sample_index(probs, rng);
        rec.eve_outcome = cfg.eve_mode == EveMode::Projective ? projective_label(outcome)
                                                              : povm_label(outcome);
    }

    if (cfg.selective_relay)
        rec.relayed = rec.eve_outcome && *rec.eve_outcome != EveOutcome::Inconclusive;
    else
        rec.relayed = true;

    rec.bob_received = rec.relayed;
    // Selective relay itself plays the role of the lossy channel; erasure is
    // only sampled on a conventionally forwarded pulse.
    if (rec.relayed && !cfg.selective_relay && cfg.channel_loss > 0.0)
        rec.bob_received = rng.unit() >= cfg.channel_loss;

    if (rec.bob_received) {
        rec.bob_basis = rng.bit() ? SignalBasis::V : SignalBasis::U;
        if (*rec.bob_basis == rec.alice_basis) {
            rec.bob_bit = static_cast<std::uint8_t>(rec.alice_bit ^ (flip ? 1 : 0));
            rec.sifted = true;
        } else {
            // Conjugate-basis measurement of any of the four signal states is
            // a fair coin.
            rec.bob_bit = static_cast<std::uint8_t>(rng.bit());
        }
    }

    if (rec.sifted && rec.eve_outcome) {
        if (cfg.eve_mode == EveMode::Projective) {
            const WDetector det =
                *rec.eve_outcome == EveOutcome::WPlus ? WDetector::WPlus : WDetector::WMinus;
            rec.eve_guess =
                static_cast<std::uint8_t>(infer_bit_projective(det, rec.alice_basis));
        } else {
            const auto inferred = infer_bit_povm(to_povm_outcome(*rec.eve_outcome),
                                                 rec.alice_basis);
            rec.eve_guess = inferred ? static_cast<std::uint8_t>(*inferred)
                                     : static_cast<std::uint8_t>(rng.bit());
        }
    }
    return rec;
}

}  // namespace

void SessionConfig::validate() const {
    if (n_pulses == 0) throw std::invalid_argument("config: n_pulses must be positive");
    if (shards == 0) throw std::invalid_argument("config: shards must be positive");
    if (!(channel_loss >= 0.0 && channel_loss <= 1.0))
        throw std::invalid_argument("config: channel_loss must lie in [0, 1]");

    if (eve_mode == EveMode::None) {
        if (error_rate || inconclusive_rate)
            throw std::invalid_argument(
                "config: probe rates are meaningless without an active probe");
        if (selective_relay)
            throw std::invalid_argument("config: selective relay requires the povm mode");
        return;
    }

    if (error_rate.has_value() == inconclusive_rate.has_value())
        throw std::invalid_argument(
            "config: exactly one of error_rate / inconclusive_rate must be set");
    if (selective_relay && eve_mode != EveMode::Povm)
        throw std::invalid_argument("config: selective relay requires the povm mode");

    const double e = resolved_error_rate();
    const double r_inc = overlap_q(e);  // also rejects rates outside the domain
    if (selective_relay && channel_loss > 0.0 &&
        std::abs(channel_loss - r_inc) > kRateTol)
        throw std::invalid_argument(
            "config: with selective relay the channel loss must equal the "
            "inconclusive rate being impersonated");
}

double SessionConfig::resolved_error_rate() const {
    if (error_rate) return *error_rate;
    if (inconclusive_rate) return error_rate_from_inconclusive(*inconclusive_rate);
    throw std::invalid_argument("config: no probe rate set");
}

SessionResult run_session(const SessionConfig& cfg) {
    cfg.validate();

    AttackTables tables;
    const bool eve_active = cfg.eve_mode != EveMode::None;
    if (eve_active) tables = build_attack_tables(cfg.eve_mode, cfg.resolved_error_rate());

    SessionResult result;
    if (cfg.keep_pulse_log) result.log.reserve(cfg.n_pulses);

    Tally total;
    const std::uint64_t shards = cfg.shards;
    const std::uint64_t chunk = cfg.n_pulses / shards;
    const std::uint64_t remainder = cfg.n_pulses % shards;
    for (std::uint64_t s = 0; s < shards; ++s) {
        const std::uint64_t block = chunk + (s < remainder ? 1 : 0);
        RandomStream rng(cfg.seed, s);
        Tally tally;
        for (std::uint64_t i = 0; i < block; ++i) {
            const PulseRecord rec = simulate_pulse(cfg, eve_active ? &tables : nullptr, rng);
            tally.count(rec);
            if (cfg.keep_pulse_log) result.log.push_back(rec);
        }
        total.add(tally);
    }

    result.stats = finalize(total, cfg);
    return result;
}

std::vector<std::size_t> sift(std::span<const PulseRecord> log) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < log.size(); ++i)
        if (log[i].sifted) idx.push_back(i);
    return idx;
}

SessionStats aggregate(std::span<const PulseRecord> log, const SessionConfig& cfg) {
    Tally tally;
    for (const auto& rec : log) tally.count(rec);
    return finalize(tally, cfg);
}

void write_pulse_log(std::ostream& out, std::span<const PulseRecord> log) {
    constexpr std::string_view header =
        "idx,alice_bit,alice_basis,eve_outcome,relayed,bob_received,bob_basis,bob_bit,"
        "sifted,eve_guess";
    out << header << '\n';

    const auto basis_label = [](SignalBasis b) { return b == SignalBasis::U ? 'u' : 'v'; };
    const auto outcome_label = [](EveOutcome o) -> std::string_view {
        switch (o) {
            case EveOutcome::WPlus: return "w+";
            case EveOutcome::WMinus: return "w-";
            case EveOutcome::ConclusivePlus: return "conclusive+";
            case EveOutcome::ConclusiveMinus: return "conclusive-";
            case EveOutcome::Inconclusive: return "inconclusive";
        }
        return "";
    };

    for (std::size_t i = 0; i < log.size(); ++i) {
        const PulseRecord& r = log[i];
        out << i << ',' << int(r.alice_bit) << ',' << basis_label(r.alice_basis) << ',';
        if (r.eve_outcome) out << outcome_label(*r.eve_outcome);
        out << ',' << int(r.relayed) << ',' << int(r.bob_received) << ',';
        if (r.bob_basis) out << basis_label(*r.bob_basis);
        out << ',';
        if (r.bob_bit) out << int(*r.bob_bit);
        out << ',' << int(r.sifted) << ',';
        if (r.eve_guess) out << int(*r.eve_guess);
        out << '\n';
    }
}

}  // namespace fpb
