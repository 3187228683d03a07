// Simulated network timing: RTT model, challenge scheduling, server
// behavior models (honest plus the three attackers), and the elapsed-time
// discrimination rule between honest proving and on-demand regeneration.
#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "loopin/amm.hpp"
#include "loopin/errors.hpp"
#include "loopin/pocps.hpp"
#include "loopin/rng.hpp"
#include "loopin/token.hpp"

namespace loopin::netsim {

enum class RttDistribution { Uniform, TruncatedNormal };

struct RttModel {
    SimTicks base = 20;
    SimTicks jitter_bound = 10;
    RttDistribution distribution = RttDistribution::Uniform;

    // Samples lie in [base - jitter_bound, base + jitter_bound].
    SimTicks sample(Rng& rng) const {
        const SimTicks lo = base > jitter_bound ? base - jitter_bound : 0;
        const SimTicks hi = base + jitter_bound;
        if (jitter_bound == 0) return base;
        if (distribution == RttDistribution::Uniform) return rng.range(lo, hi);
        const double v = rng.normal(static_cast<double>(base),
                                    static_cast<double>(jitter_bound) / 3.0);
        const double clamped = std::clamp(v, static_cast<double>(lo),
                                          static_cast<double>(hi));
        return static_cast<SimTicks>(std::llround(clamped));
    }
};

enum class BehaviorKind { Honest, Outsourcer, Sybil, Absent };

inline const char* behavior_name(BehaviorKind k) {
    switch (k) {
        case BehaviorKind::Honest: return "honest";
        case BehaviorKind::Outsourcer: return "outsourcer";
        case BehaviorKind::Sybil: return "sybil";
        case BehaviorKind::Absent: return "absent";
    }
    return "?";
}

struct ServerBehavior {
    BehaviorKind kind = BehaviorKind::Honest;
    SimTicks prove_cost = 2;
    SimTicks regen_cost = 256; // setup-on-demand cost for outsourcers
    // Sybil shape: n claimed positions backed by m < n physical chains.
    std::uint32_t sybil_claimed = 0;
    std::uint32_t sybil_physical = 0;
};

enum class Verdict { Pass, FailProof, FailTimeout };

inline const char* verdict_name(Verdict v) {
    switch (v) {
        case Verdict::Pass: return "pass";
        case Verdict::FailProof: return "fail_proof";
        case Verdict::FailTimeout: return "fail_timeout";
    }
    return "?";
}

struct ChallengeOutcome {
    std::string position_id;
    AccountId verifier;
    SimTime issued_at = 0;
    SimTicks elapsed = 0;
    bool timed_out = false; // no response within threshold
    Verdict verdict = Verdict::Pass;
};

struct ScheduledChallenge {
    SimTime time = 0;
    std::string position_id;
};

// Poisson arrivals within one epoch, uniform position selection.
inline std::vector<ScheduledChallenge> schedule_challenges(
    const std::vector<std::string>& active_positions, double rate_per_epoch,
    SimTime epoch_start, SimTicks epoch_len, Rng& rng) {
    if (rate_per_epoch <= 0) throw Error(ErrorCode::BadRate);
    if (active_positions.empty()) throw Error(ErrorCode::NoActivePositions);
    std::vector<ScheduledChallenge> out;
    const std::uint64_t count = rng.poisson(rate_per_epoch);
    for (std::uint64_t i = 0; i < count; ++i) {
        ScheduledChallenge sc;
        sc.time = epoch_start + rng.below(epoch_len);
        sc.position_id = active_positions[rng.below(active_positions.size())];
        out.push_back(std::move(sc));
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        return a.time != b.time ? a.time < b.time : a.position_id < b.position_id;
    });
    return out;
}

// One challenge round in simulated-tick time. The prover either holds the
// chain (honest paths) or must regenerate it first (outsourcer); absentees
// simply never answer.
inline ChallengeOutcome run_challenge(const amm::StakePosition& position,
                                      const ServerBehavior& behavior,
                                      const pocps::ProverSetup* prover,
                                      const pocps::VerifierSetup& verifier_setup,
                                      const RttModel& rtt, SimTicks threshold,
                                      SimTime now, const AccountId& verifier,
                                      Rng& rng) {
    if (position.status != amm::PositionStatus::Active)
        throw Error(ErrorCode::PositionNotActive, position.position_id);
    ChallengeOutcome oc;
    oc.position_id = position.position_id;
    oc.verifier = verifier;
    oc.issued_at = now;

    if (behavior.kind == BehaviorKind::Absent || prover == nullptr) {
        oc.timed_out = true;
        oc.elapsed = threshold + 1;
        oc.verdict = Verdict::FailTimeout;
        return oc;
    }

    const SimTicks rtt_sample = rtt.sample(rng);
    SimTicks work = behavior.prove_cost;
    if (behavior.kind == BehaviorKind::Outsourcer) work += behavior.regen_cost;
    oc.elapsed = rtt_sample + work;

    Hash256 nonce{};
    {
        Sha256 h;
        h.update("loopin.netsim.nonce");
        h.update_u64(rng.next());
        nonce = h.finish();
    }
    const auto challenge = pocps::make_challenge(nonce, prover->params);
    const auto proof = pocps::prove(*prover, challenge);
    const bool ok = pocps::verify(verifier_setup, challenge, proof);

    // A bad proof dominates timing; timeouts only apply to valid proofs.
    if (!ok)
        oc.verdict = Verdict::FailProof;
    else if (oc.elapsed > threshold)
        oc.verdict = Verdict::FailTimeout;
    else
        oc.verdict = Verdict::Pass;
    return oc;
}

// Midpoint decision rule between honest and regenerating response times.
inline SimTicks default_threshold(const RttModel& rtt, const ServerBehavior& ref) {
    return rtt.base + rtt.jitter_bound + ref.prove_cost +
           (ref.regen_cost > ref.prove_cost ? (ref.regen_cost - ref.prove_cost) / 2 : 0);
}

struct VerdictApplication {
    bool slashed = false;         // liquidity-removal failure: deposit burned
    bool expired = false;         // liquidity-provider failure: stake unwound
    TokenAmount deposit_burned;
    TokenAmount power_removed;
    TokenAmount pool_withdrawn;   // remaining pairing pulled from the pool
    TokenAmount escrow_returned;  // previously decay-withdrawn protocol tokens
};

// Failure consequences: removal-mode positions are slashed and lose the
// deposit; provider-mode positions are expired and their pool side unwound.
inline VerdictApplication apply_verdict(const ChallengeOutcome& outcome,
                                        amm::PoolState& pool,
                                        amm::StakePosition& position) {
    if (position.status != amm::PositionStatus::Active)
        throw Error(ErrorCode::PositionNotActive, position.position_id);
    VerdictApplication app;
    if (outcome.verdict == Verdict::Pass) return app;
    position.challenge_failed = true;
    // Either way the dead device's remaining power leaves the pool; its
    // protocol pairing (the miner's own contribution) comes back.
    app.power_removed = position.remaining();
    if (!app.power_removed.is_zero()) {
        app.pool_withdrawn = app.power_removed.mul_div(
            pool.protocol_reserve.atomic(), pool.power_reserve.atomic());
        pool.power_reserve -= app.power_removed;
        pool.protocol_reserve -= app.pool_withdrawn;
    }
    app.escrow_returned = position.escrow;
    position.escrow = TokenAmount{};
    if (position.mode == amm::StakeMode::LiquidityRemoval) {
        app.slashed = true;
        app.deposit_burned = position.maintenance_deposit;
        position.maintenance_deposit = TokenAmount{};
        position.status = amm::PositionStatus::Slashed;
    } else {
        app.expired = true;
        position.status = amm::PositionStatus::Expired;
    }
    return app;
}

} // namespace loopin::netsim
