#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

#include "doctest.h"
#include "fpb/sim.hpp"

using namespace fpb;

namespace {

SessionConfig base_config(EveMode mode, std::uint64_t pulses, std::uint64_t seed) {
    SessionConfig cfg;
    cfg.n_pulses = pulses;
    cfg.eve_mode = mode;
    cfg.seed = seed;
    return cfg;
}

PulseRecord sifted_record(int alice_bit, int bob_bit) {
    PulseRecord r;
    r.alice_bit = static_cast<std::uint8_t>(alice_bit);
    r.alice_basis = SignalBasis::U;
    r.relayed = true;
    r.bob_received = true;
    r.bob_basis = SignalBasis::U;
    r.bob_bit = static_cast<std::uint8_t>(bob_bit);
    r.sifted = true;
    return r;
}

}  // namespace

TEST_CASE("config validation") {
    SessionConfig cfg = base_config(EveMode::None, 0, 1);
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);  // no pulses

    cfg = base_config(EveMode::None, 100, 1);
    CHECK_NOTHROW(cfg.validate());

    cfg.error_rate = 0.2;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);  // rate without Eve

    cfg = base_config(EveMode::Projective, 100, 1);
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);  // no rate given

    cfg.error_rate = 0.2;
    cfg.inconclusive_rate = 0.5;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);  // both rates given

    cfg = base_config(EveMode::Projective, 100, 1);
    cfg.error_rate = 0.4;
    CHECK_THROWS_AS(cfg.validate(), std::domain_error);  // rate out of range

    cfg = base_config(EveMode::Projective, 100, 1);
    cfg.error_rate = 0.2;
    cfg.selective_relay = true;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);  // selective needs povm

    cfg = base_config(EveMode::Povm, 100, 1);
    cfg.inconclusive_rate = 0.5;
    cfg.selective_relay = true;
    CHECK_NOTHROW(cfg.validate());
    cfg.channel_loss = 0.5;  // equal to the impersonated rate: fine
    CHECK_NOTHROW(cfg.validate());
    cfg.channel_loss = 0.3;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

    cfg = base_config(EveMode::None, 100, 1);
    cfg.channel_loss = 1.5;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

    cfg = base_config(EveMode::None, 100, 1);
    cfg.shards = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("clean channel: no probe, no loss, no errors") {
    SessionConfig cfg = base_config(EveMode::None, 20000, 3);
    const auto res = run_session(cfg);
    const auto& st = res.stats;

    CHECK(st.sent == 20000);
    CHECK(st.received == 20000);
    CHECK(st.effective_transmission == 1.0);
    REQUIRE(st.qber.has_value());
    CHECK(*st.qber == 0.0);  // exact: nothing disturbs the signal
    CHECK_FALSE(st.eve_accuracy.has_value());
    CHECK_FALSE(st.eve_conclusive_fraction.has_value());
    CHECK_FALSE(st.renyi_info_analytic.has_value());

    // About half the received pulses survive sifting.
    const double sift_frac = double(st.sifted) / double(st.received);
    CHECK(std::abs(sift_frac - 0.5) < 0.0142);
}

TEST_CASE("loss thins the channel without adding errors") {
    SessionConfig cfg = base_config(EveMode::None, 20000, 4);
    cfg.channel_loss = 0.3;
    const auto st = run_session(cfg).stats;
    CHECK(std::abs(st.effective_transmission - 0.7) < 0.013);
    REQUIRE(st.qber.has_value());
    CHECK(*st.qber == 0.0);
}

TEST_CASE("projective attack at the working point") {
    SessionConfig cfg = base_config(EveMode::Projective, 200000, 7);
    cfg.error_rate = 0.2;
    const auto st = run_session(cfg).stats;

    REQUIRE(st.qber.has_value());
    CHECK(std::abs(*st.qber - 0.2) < 0.005);
    REQUIRE(st.eve_accuracy.has_value());
    CHECK(std::abs(*st.eve_accuracy - 0.9330127018922193) < 0.005);
    REQUIRE(st.eve_accuracy_expected.has_value());
    CHECK(*st.eve_accuracy_expected == doctest::Approx(0.9330127018922193).epsilon(1e-12));
    REQUIRE(st.eve_conclusive_fraction.has_value());
    CHECK(*st.eve_conclusive_fraction == 1.0);  // projective outcomes always conclude
    REQUIRE(st.renyi_info_analytic.has_value());
    CHECK(*st.renyi_info_analytic == doctest::Approx(std::log2(1.75)).epsilon(1e-12));
}

TEST_CASE("projective attack at maximum disturbance identifies every bit") {
    SessionConfig cfg = base_config(EveMode::Projective, 50000, 9);
    cfg.error_rate = 1.0 / 3.0;
    const auto st = run_session(cfg).stats;
    REQUIRE(st.eve_accuracy.has_value());
    CHECK(*st.eve_accuracy == 1.0);  // detectors never cross over at E = 1/3
    REQUIRE(st.qber.has_value());
    CHECK(std::abs(*st.qber - 1.0 / 3.0) < 0.012);
}

TEST_CASE("discriminator attack without selective relay") {
    SessionConfig cfg = base_config(EveMode::Povm, 200000, 5);
    cfg.inconclusive_rate = 0.5;
    const auto st = run_session(cfg).stats;

    REQUIRE(st.eve_conclusive_fraction.has_value());
    CHECK(std::abs(*st.eve_conclusive_fraction - 0.5) < 0.0045);
    REQUIRE(st.qber.has_value());
    CHECK(std::abs(*st.qber - 0.2) < 0.0051);
    // Conclusive pulses are always right, inconclusive ones are coin flips.
    REQUIRE(st.eve_accuracy.has_value());
    CHECK(std::abs(*st.eve_accuracy - 0.75) < 0.0055);
    REQUIRE(st.eve_accuracy_expected.has_value());
    CHECK(*st.eve_accuracy_expected == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(st.effective_transmission == 1.0);
}

TEST_CASE("conclusive outcomes are never wrong") {
    SessionConfig cfg = base_config(EveMode::Povm, 20000, 21);
    cfg.inconclusive_rate = 0.5;
    cfg.keep_pulse_log = true;
    const auto res = run_session(cfg);
    std::size_t conclusive_sifted = 0;
    for (const auto& rec : res.log) {
        if (!rec.sifted || !rec.eve_outcome) continue;
        if (*rec.eve_outcome == EveOutcome::Inconclusive) continue;
        ++conclusive_sifted;
        REQUIRE(rec.eve_guess.has_value());
        CHECK(*rec.eve_guess == rec.alice_bit);
    }
    CHECK(conclusive_sifted > 1000);
}

TEST_CASE("selective relay: perfect key knowledge at the impersonated loss") {
    SessionConfig cfg = base_config(EveMode::Povm, 200000, 7);
    cfg.inconclusive_rate = 0.5;
    cfg.selective_relay = true;
    const auto st = run_session(cfg).stats;

    REQUIRE(st.eve_accuracy.has_value());
    CHECK(*st.eve_accuracy == 1.0);  // only conclusive pulses reach Bob
    CHECK(std::abs(st.effective_transmission - 0.5) < 0.0045);
    REQUIRE(st.qber.has_value());
    CHECK(std::abs(*st.qber - 0.2) < 0.0072);
    CHECK(double(st.sifted) / double(st.sent) > 0.23);
    CHECK(double(st.sifted) / double(st.sent) < 0.27);

    // Indistinguishable, by transmission, from an honest channel with the
    // matching loss.
    SessionConfig honest = base_config(EveMode::None, 200000, 11);
    honest.channel_loss = 0.5;
    const auto hs = run_session(honest).stats;
    CHECK(std::abs(st.effective_transmission - hs.effective_transmission) < 0.0063);
    REQUIRE(hs.qber.has_value());
    CHECK(*hs.qber == 0.0);
}

TEST_CASE("fully inconclusive operating point suppresses everything") {
    SessionConfig cfg = base_config(EveMode::Povm, 1000, 2);
    cfg.inconclusive_rate = 1.0;  // E = 0
    cfg.selective_relay = true;
    const auto st = run_session(cfg).stats;
    CHECK(st.received == 0);
    CHECK(st.effective_transmission == 0.0);
    CHECK_FALSE(st.qber.has_value());
    CHECK_FALSE(st.eve_accuracy.has_value());
    REQUIRE(st.eve_conclusive_fraction.has_value());
    CHECK(*st.eve_conclusive_fraction == 0.0);
}

TEST_CASE("induced error rate tracks the configured operating point") {
    for (double e : {0.1, 0.25}) {
        for (EveMode mode : {EveMode::Projective, EveMode::Povm}) {
            SessionConfig cfg = base_config(mode, 50000, 31);
            cfg.error_rate = e;
            const auto st = run_session(cfg).stats;
            REQUIRE(st.qber.has_value());
            CAPTURE(e);
            CAPTURE(int(mode));
            CHECK(std::abs(*st.qber - e) < 0.012);
        }
    }
}

TEST_CASE("identical configs reproduce identical sessions") {
    SessionConfig cfg = base_config(EveMode::Povm, 30000, 42);
    cfg.error_rate = 0.25;
    cfg.shards = 3;
    cfg.keep_pulse_log = true;

    const auto a = run_session(cfg);
    const auto b = run_session(cfg);
    CHECK(a.stats.sent == b.stats.sent);
    CHECK(a.stats.received == b.stats.received);
    CHECK(a.stats.sifted == b.stats.sifted);
    CHECK(a.stats.sifted_errors == b.stats.sifted_errors);
    CHECK(a.stats.qber == b.stats.qber);
    CHECK(a.stats.eve_accuracy == b.stats.eve_accuracy);
    REQUIRE(a.log.size() == b.log.size());
    bool same = true;
    for (std::size_t i = 0; i < a.log.size(); ++i) {
        const auto& x = a.log[i];
        const auto& y = b.log[i];
        same = same && x.alice_bit == y.alice_bit && x.alice_basis == y.alice_basis &&
               x.eve_outcome == y.eve_outcome && x.relayed == y.relayed &&
               x.bob_received == y.bob_received && x.bob_basis == y.bob_basis &&
               x.bob_bit == y.bob_bit && x.sifted == y.sifted && x.eve_guess == y.eve_guess;
    }
    CHECK(same);

    // Shard count is part of the sampled path's identity; a different split
    // still yields a full-size, internally consistent session.
    SessionConfig other = cfg;
    other.shards = 1;
    const auto c = run_session(other);
    CHECK(c.stats.sent == a.stats.sent);
    CHECK(c.log.size() == a.log.size());
}

TEST_CASE("sift extracts received basis matches in order") {
    SessionConfig cfg = base_config(EveMode::Povm, 50000, 13);
    cfg.inconclusive_rate = 0.5;
    cfg.selective_relay = true;
    cfg.keep_pulse_log = true;
    const auto res = run_session(cfg);

    const auto idx = sift(res.log);
    CHECK(idx.size() == res.stats.sifted);
    for (std::size_t k = 1; k < idx.size(); ++k) CHECK(idx[k - 1] < idx[k]);
    for (std::size_t i : idx) {
        CHECK(res.log[i].sifted);
        CHECK(res.log[i].bob_received);
        REQUIRE(res.log[i].bob_basis.has_value());
        CHECK(*res.log[i].bob_basis == res.log[i].alice_basis);
    }

    // Sifted fraction of everything sent: relay keeps half, sifting halves it.
    const double frac = double(idx.size()) / double(res.log.size());
    CHECK(std::abs(frac - 0.25) < 0.008);
}

TEST_CASE("aggregate recomputes run statistics from the log") {
    SessionConfig cfg = base_config(EveMode::Povm, 5000, 17);
    cfg.inconclusive_rate = 0.5;
    cfg.keep_pulse_log = true;
    const auto res = run_session(cfg);

    const auto st = aggregate(res.log, cfg);
    CHECK(st.sent == res.stats.sent);
    CHECK(st.received == res.stats.received);
    CHECK(st.sifted == res.stats.sifted);
    CHECK(st.sifted_errors == res.stats.sifted_errors);
    CHECK(st.qber == res.stats.qber);
    CHECK(st.eve_accuracy == res.stats.eve_accuracy);
    CHECK(st.eve_conclusive_fraction == res.stats.eve_conclusive_fraction);
    CHECK(st.effective_transmission == res.stats.effective_transmission);
    CHECK(st.renyi_info_analytic == res.stats.renyi_info_analytic);
}

TEST_CASE("aggregate on a hand-built log") {
    std::vector<PulseRecord> log;
    log.push_back(sifted_record(0, 1));  // sifted, error
    log.push_back(sifted_record(1, 1));  // sifted, correct

    PulseRecord lost;
    lost.alice_bit = 0;
    lost.alice_basis = SignalBasis::V;
    lost.relayed = true;
    log.push_back(lost);  // never received

    PulseRecord unmatched;
    unmatched.alice_bit = 1;
    unmatched.alice_basis = SignalBasis::U;
    unmatched.relayed = true;
    unmatched.bob_received = true;
    unmatched.bob_basis = SignalBasis::V;
    unmatched.bob_bit = 0;
    log.push_back(unmatched);  // received, basis mismatch

    SessionConfig cfg = base_config(EveMode::None, 4, 1);
    const auto st = aggregate(log, cfg);
    CHECK(st.sent == 4);
    CHECK(st.received == 3);
    CHECK(st.sifted == 2);
    CHECK(st.sifted_errors == 1);
    REQUIRE(st.qber.has_value());
    CHECK(*st.qber == 0.5);
    CHECK(st.effective_transmission == 0.75);
    CHECK_FALSE(st.eve_accuracy.has_value());

    // No sifted pulses at all leaves the error rate undefined.
    const std::vector<PulseRecord> nothing_sifted = {lost, unmatched};
    SessionConfig cfg2 = base_config(EveMode::None, 2, 1);
    const auto st2 = aggregate(nothing_sifted, cfg2);
    CHECK_FALSE(st2.qber.has_value());
}

TEST_CASE("pulse log serialization") {
    SessionConfig cfg = base_config(EveMode::Povm, 50, 23);
    cfg.inconclusive_rate = 0.5;
    cfg.selective_relay = true;
    cfg.keep_pulse_log = true;
    const auto res = run_session(cfg);

    std::ostringstream os;
    write_pulse_log(os, res.log);
    std::istringstream is(os.str());
    std::string line;
    REQUIRE(std::getline(is, line));
    CHECK(line ==
          "idx,alice_bit,alice_basis,eve_outcome,relayed,bob_received,bob_basis,bob_bit,"
          "sifted,eve_guess");

    std::size_t rows = 0;
    while (std::getline(is, line)) {
        CAPTURE(line);
        CHECK(line.find(std::to_string(rows) + ",") == 0);
        // Suppressed pulses keep their Bob-side cells empty.
        if (line.find(",inconclusive,") != std::string::npos)
            CHECK(line.find(",0,0,,,0,") != std::string::npos);
        ++rows;
    }
    CHECK(rows == res.log.size());
}
