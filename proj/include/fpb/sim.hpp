#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "fpb/povm.hpp"
#include "fpb/probe.hpp"

namespace fpb {

enum class EveMode { None, Projective, Povm };

// Monte Carlo BB84 session. Exactly one of error_rate / inconclusive_rate
// must be set when Eve is active (they parameterize the same operating
// point); neither may be set when she is not.
struct SessionConfig {
    std::uint64_t n_pulses = 0;
    EveMode eve_mode = EveMode::None;
    std::optional<double> error_rate;
    std::optional<double> inconclusive_rate;
    double channel_loss = 0.0;   // erasure probability per forwarded pulse
    bool selective_relay = false;  // Povm only: forward conclusive pulses only
    std::uint64_t seed = 0;
    std::uint32_t shards = 1;
    bool keep_pulse_log = false;

    // Throws std::invalid_argument on inconsistent settings. With selective
    // relay the suppressed pulses already impersonate a loss of exactly the
    // inconclusive rate, so channel_loss must be 0 or equal to that rate.
    void validate() const;

    // E resolved from whichever rate was given (Eve active only).
    double resolved_error_rate() const;
};

enum class EveOutcome : std::uint8_t {
    WPlus,
    WMinus,
    ConclusivePlus,
    ConclusiveMinus,
    Inconclusive,
};

struct PulseRecord {
    std::uint8_t alice_bit = 0;
    SignalBasis alice_basis = SignalBasis::U;
    std::optional<EveOutcome> eve_outcome;
    bool relayed = false;
    bool bob_received = false;
    std::optional<SignalBasis> bob_basis;
    std::optional<std::uint8_t> bob_bit;
    bool sifted = false;
    // Bit Eve banks for this pulse after basis reconciliation. Set only for
    // sifted pulses of an attacked session; inconclusive outcomes fall back
    // to a fair coin so the accuracy stays well defined.
    std::optional<std::uint8_t> eve_guess;
};

struct SessionStats {
    std::uint64_t sent = 0;
    std::uint64_t received = 0;
    std::uint64_t sifted = 0;
    std::uint64_t sifted_errors = 0;
    std::optional<double> qber;          // unset when no pulses were sifted
    std::optional<double> eve_accuracy;  // unset without Eve or sifted pulses
    // Analytic expectation for eve_accuracy at the operating point.
    std::optional<double> eve_accuracy_expected;
    // Conclusive outcomes / measured pulses (projective counts everything).
    std::optional<double> eve_conclusive_fraction;
    double effective_transmission = 0.0;  // received / sent
    std::optional<double> renyi_info_analytic;
};

struct SessionResult {
    SessionStats stats;
    std::vector<PulseRecord> log;  // populated only with keep_pulse_log
};

// Runs the session. Deterministic for identical configs; shard k draws from
// RandomStream(seed, k) over its contiguous block of pulses, so changing the
// shard count changes the pulse-to-stream assignment (and hence the sampled
// path) but nothing else.
SessionResult run_session(const SessionConfig& cfg);

// Indices of sifted pulses (received and basis-matched), in pulse order.
std::vector<std::size_t> sift(std::span<const PulseRecord> log);

// Recomputes SessionStats from a pulse log. The config supplies the
// operating point for the analytic columns; counts must be consistent with
// run_session's accounting for the same log.
SessionStats aggregate(std::span<const PulseRecord> log, const SessionConfig& cfg);

// CSV pulse log, one row per pulse:
// idx,alice_bit,alice_basis,eve_outcome,relayed,bob_received,bob_basis,bob_bit,sifted,eve_guess
void write_pulse_log(std::ostream& out, std::span<const PulseRecord> log);

}  // namespace fpb
