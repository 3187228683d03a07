// Dissipative liquidity pool: constant-product swaps with exchange-fee burn,
// stepped epoch decay, renewal/expiry, and the continuous-time reference
// model of staked value and dissipation rate.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "loopin/errors.hpp"
#include "loopin/ledger.hpp"
#include "loopin/token.hpp"

namespace loopin::amm {

enum class StakeMode { LiquidityProvider, LiquidityRemoval };
enum class PositionStatus { Active, Expired, Slashed };

inline const char* mode_name(StakeMode m) {
    return m == StakeMode::LiquidityProvider ? "liquidity_provider" : "liquidity_removal";
}
inline const char* status_name(PositionStatus s) {
    switch (s) {
        case PositionStatus::Active: return "active";
        case PositionStatus::Expired: return "expired";
        case PositionStatus::Slashed: return "slashed";
    }
    return "?";
}

struct PoolState {
    std::string pool_id;
    std::string resource_class;
    TokenAmount power_reserve;    // power-hour token, device-hours * 10^6
    TokenAmount protocol_reserve; // protocol token side
    std::uint32_t fee_bps = 0;

    bool active() const {
        return !power_reserve.is_zero() && !protocol_reserve.is_zero();
    }

    // k = x * y; callers compare before/after (fits u128 for sane reserves).
    u128 invariant_k() const {
        auto k = checked_mul(power_reserve.atomic(), protocol_reserve.atomic());
        if (!k) throw Error(ErrorCode::Overflow, "pool invariant");
        return *k;
    }
};

struct SwapResult {
    TokenAmount out;
    TokenAmount fee_burned;
};

// Protocol tokens in, power-hours out. Output floors toward the pool;
// the fee share of the input is burned, the rest joins the reserve.
inline SwapResult swap_protocol_for_power(PoolState& pool, TokenAmount dy) {
    if (dy.is_zero()) throw Error(ErrorCode::ZeroAmount, "swap of zero");
    if (!pool.active()) throw Error(ErrorCode::PoolDrained, pool.pool_id);
    const u128 f = 10000 - pool.fee_bps;
    const u128 x = pool.power_reserve.atomic();
    const u128 y = pool.protocol_reserve.atomic();
    auto num = checked_mul(x, dy.atomic());
    if (num) num = checked_mul(*num, f);
    auto den_a = checked_mul(y, 10000);
    auto den_b = checked_mul(dy.atomic(), f);
    if (!num || !den_a || !den_b)
        throw Error(ErrorCode::Overflow, "swap arithmetic");
    const u128 out = *num / (*den_a + *den_b);
    if (out == 0) throw Error(ErrorCode::OutputRoundsToZero);
    if (out >= x) throw Error(ErrorCode::PoolDrained, pool.pool_id);
    const TokenAmount fee_burned = dy.mul_div(pool.fee_bps, 10000);
    pool.power_reserve -= TokenAmount(out);
    pool.protocol_reserve += dy - fee_burned;
    return SwapResult{TokenAmount(out), fee_burned};
}

// Power-hours in, protocol tokens out; the exchange fee is taken from the
// protocol-token output and burned.
inline SwapResult swap_power_for_protocol(PoolState& pool, TokenAmount dx) {
    if (dx.is_zero()) throw Error(ErrorCode::ZeroAmount, "swap of zero");
    if (!pool.active()) throw Error(ErrorCode::PoolDrained, pool.pool_id);
    const u128 x = pool.power_reserve.atomic();
    const u128 y = pool.protocol_reserve.atomic();
    auto num = checked_mul(y, dx.atomic());
    if (!num) throw Error(ErrorCode::Overflow, "swap arithmetic");
    const u128 gross = *num / (x + dx.atomic());
    if (gross == 0) throw Error(ErrorCode::OutputRoundsToZero);
    if (gross >= y) throw Error(ErrorCode::PoolDrained, pool.pool_id);
    const TokenAmount fee_burned = TokenAmount(gross).mul_div(pool.fee_bps, 10000);
    pool.power_reserve += dx;
    pool.protocol_reserve -= TokenAmount(gross);
    return SwapResult{TokenAmount(gross) - fee_burned, fee_burned};
}

// The st-token of a stake: amount S over duration T in epochs of width delta.
struct StakePosition {
    std::string position_id;
    AccountId miner;
    std::string device_id;
    std::string pool_id;
    TokenAmount power_amount;     // S
    SimTime start_time = 0;       // t1
    SimTicks duration = 0;        // T, multiple of epoch
    SimTicks epoch = 0;           // delta
    StakeMode mode = StakeMode::LiquidityProvider;
    TokenAmount maintenance_deposit;
    TokenAmount protocol_side;    // paired at injection
    PositionStatus status = PositionStatus::Active;

    TokenAmount escrow;           // decay-withdrawn protocol tokens, held to expiry
    TokenAmount deposit_stream;   // maintenance-burn funding, beta per epoch
    std::uint64_t steps_done = 0; // completed decay steps
    std::uint64_t renewals = 0;
    bool power_sold = false;      // liquidity-removal sell executed
    bool challenge_failed = false;

    std::uint64_t total_steps() const { return duration / epoch; }

    // Renewals extend the expiry one epoch at a time; the step schedule
    // keeps the original duration, so the renewed tail is the final step
    // held constant until a declined renewal.
    SimTime expiry_time() const { return start_time + duration + renewals * epoch; }

    // Step k in [1, n]; remainder of S/n goes to the last step so the
    // total removed over the full life is exactly S.
    TokenAmount step_amount(std::uint64_t k) const {
        const std::uint64_t n = total_steps();
        if (k < 1 || k > n) throw Error(ErrorCode::IndexOutOfRange, "decay step");
        const u128 base = power_amount.atomic() / n;
        if (k < n) return TokenAmount(base);
        return TokenAmount(power_amount.atomic() - base * (n - 1));
    }

    TokenAmount remaining_after(std::uint64_t completed) const {
        const std::uint64_t n = total_steps();
        if (completed >= n) return TokenAmount{};
        const u128 base = power_amount.atomic() / n;
        return TokenAmount(power_amount.atomic() - base * completed);
    }

    TokenAmount remaining() const {
        if (power_sold || status != PositionStatus::Active) return TokenAmount{};
        return remaining_after(steps_done);
    }
};

// Pair the staked power with protocol tokens at the pre-injection spot
// ratio and open the position. Cert bookkeeping and ledger movements are
// the caller's (engine's) job; this validates and applies the pool math.
inline StakePosition inject_liquidity(PoolState& pool, Ledger& ledger,
                                      const AccountId& miner,
                                      const BurnCertificate& cert,
                                      TokenAmount power, SimTicks duration,
                                      SimTicks epoch, StakeMode mode,
                                      TokenAmount deposit, SimTime now,
                                      std::string position_id,
                                      std::string device_id) {
    if (epoch == 0 || duration == 0 || duration % epoch != 0)
        throw Error(ErrorCode::DurationNotEpochMultiple);
    if (!pool.active()) throw Error(ErrorCode::PoolDrained, pool.pool_id);
    if (power.is_zero()) throw Error(ErrorCode::ZeroAmount, "stake of zero");
    if (mode == StakeMode::LiquidityRemoval && deposit.is_zero())
        throw Error(ErrorCode::InsufficientDeposit, position_id);
    ledger.consume_cert(cert); // throws CertificateAlreadyUsed
    StakePosition pos;
    pos.position_id = std::move(position_id);
    pos.device_id = std::move(device_id);
    pos.miner = miner;
    pos.pool_id = pool.pool_id;
    pos.power_amount = power;
    pos.start_time = now;
    pos.duration = duration;
    pos.epoch = epoch;
    pos.mode = mode;
    pos.maintenance_deposit = mode == StakeMode::LiquidityProvider ? TokenAmount{} : deposit;
    pos.protocol_side = power.mul_div(pool.protocol_reserve.atomic(),
                                      pool.power_reserve.atomic());
    pool.power_reserve += power;
    pool.protocol_reserve += pos.protocol_side;
    return pos;
}

struct DecayRecord {
    std::uint64_t step_index = 0;
    TokenAmount power_removed;
    TokenAmount protocol_withdrawn;
};

// Remove one staircase step from the pool. Protocol tokens come out pro
// rata at the pre-decay spot ratio and are escrowed to the position.
inline DecayRecord apply_epoch_decay(PoolState& pool, StakePosition& pos, SimTime now) {
    if (pos.status != PositionStatus::Active)
        throw Error(ErrorCode::PositionNotActive, pos.position_id);
    if (now <= pos.start_time || (now - pos.start_time) % pos.epoch != 0)
        throw Error(ErrorCode::NotEpochBoundary, pos.position_id);
    const std::uint64_t k = (now - pos.start_time) / pos.epoch;
    if (k > pos.total_steps() || k != pos.steps_done + 1)
        throw Error(ErrorCode::NotEpochBoundary, "step out of sequence");
    DecayRecord rec;
    rec.step_index = k;
    rec.power_removed = pos.power_sold ? TokenAmount{} : pos.step_amount(k);
    if (!rec.power_removed.is_zero()) {
        rec.protocol_withdrawn = rec.power_removed.mul_div(
            pool.protocol_reserve.atomic(), pool.power_reserve.atomic());
        pool.power_reserve -= rec.power_removed;
        pool.protocol_reserve -= rec.protocol_withdrawn;
        pos.escrow += rec.protocol_withdrawn;
    }
    pos.steps_done = k;
    return rec;
}

// Sell a liquidity-removal position's remaining power into the pool.
// The position stays challengeable until its expiry; only the power leaves.
inline SwapResult remove_liquidity(PoolState& pool, StakePosition& pos) {
    if (pos.status != PositionStatus::Active)
        throw Error(ErrorCode::PositionNotActive, pos.position_id);
    if (pos.mode != StakeMode::LiquidityRemoval)
        throw Error(ErrorCode::WrongMode, pos.position_id);
    const TokenAmount rem = pos.remaining();
    pos.power_sold = true;
    if (rem.is_zero()) return SwapResult{};
    return swap_power_for_protocol(pool, rem);
}

// Consent-based one-epoch extension at the scheduled expiry. A spent
// deposit is treated as declined consent. Returns whether the position
// was renewed; when false the caller proceeds to expire_position.
inline bool renew_position(StakePosition& pos, bool consent, bool deposit_intact,
                           SimTime now) {
    if (pos.status != PositionStatus::Active)
        throw Error(ErrorCode::PositionNotActive, pos.position_id);
    if (now != pos.expiry_time())
        throw Error(ErrorCode::NotEpochBoundary, "renewal off expiry");
    if (!consent || !deposit_intact) return false;
    pos.renewals += 1;
    return true;
}

struct ExpirySettlement {
    TokenAmount final_power_removed;
    TokenAmount final_protocol_returned;
    TokenAmount escrow_returned;
    bool deposit_refundable = false;
};

// Close the position: pull the final step's power out of the pool, return
// its protocol pairing plus the accumulated escrow, and report whether the
// maintenance deposit may be refunded (all challenges passed).
inline ExpirySettlement expire_position(PoolState& pool, StakePosition& pos,
                                        SimTime now) {
    if (pos.status != PositionStatus::Active)
        throw Error(ErrorCode::PositionNotActive, pos.position_id);
    if (now < pos.expiry_time())
        throw Error(ErrorCode::NotEpochBoundary, "expiry before term");
    ExpirySettlement s;
    s.final_power_removed = pos.remaining();
    if (!s.final_power_removed.is_zero()) {
        s.final_protocol_returned = s.final_power_removed.mul_div(
            pool.protocol_reserve.atomic(), pool.power_reserve.atomic());
        pool.power_reserve -= s.final_power_removed;
        pool.protocol_reserve -= s.final_protocol_returned;
    }
    s.escrow_returned = pos.escrow;
    pos.escrow = TokenAmount{};
    s.deposit_refundable = !pos.challenge_failed;
    pos.status = PositionStatus::Expired;
    return s;
}

// ---------------------------------------------------------------------------
// Continuous-time reference model (pure math, no ledger linkage).

struct StakeEvent {
    double amount = 0;   // S_i
    double start = 0;    // t_i
    double duration = 0; // T_i > 0
};

struct StakedValueModel {
    std::vector<StakeEvent> events;
};

// Linear decay with unit step u(0) = 1: each event contributes
// (S/T) * [u(t-t_i) - u(t-t_i-T_i)] * (t_i + T_i - t).
inline double staked_value_continuous(const StakedValueModel& model, double t) {
    double total = 0;
    for (const auto& e : model.events) {
        if (t >= e.start && t < e.start + e.duration)
            total += e.amount / e.duration * (e.start + e.duration - t);
    }
    return total;
}

enum class ImpulseKind { Injection, Expiry };

struct Impulse {
    double time = 0;
    double magnitude = 0; // signed: +S at injection, -S at expiry
    ImpulseKind kind = ImpulseKind::Injection;
};

struct DissipationSample {
    double rate = 0;           // regular part, power-hours per tick
    bool at_impulse = false;   // sampled exactly on a boundary
    ImpulseKind impulse_kind = ImpulseKind::Injection;
};

// Regular (finite) part of the single-event dissipation rate: 0 before the
// injection, -S/T on (t1, t1+T], 0 after. Boundary impulses are reported
// as tagged events, never as finite samples.
inline DissipationSample dissipation_rate(const StakeEvent& e, double t) {
    DissipationSample s;
    const double t1 = e.start;
    const double t2 = e.start + e.duration;
    if (t == t1) {
        s.at_impulse = true;
        s.impulse_kind = ImpulseKind::Injection;
        s.rate = 0;
    } else if (t == t2) {
        s.at_impulse = true;
        s.impulse_kind = ImpulseKind::Expiry;
        s.rate = -e.amount / e.duration;
    } else if (t > t1 && t < t2) {
        s.rate = -e.amount / e.duration;
    }
    return s;
}

inline std::vector<Impulse> dissipation_impulses(const StakedValueModel& model) {
    std::vector<Impulse> out;
    for (const auto& e : model.events) {
        out.push_back({e.start, e.amount, ImpulseKind::Injection});
        out.push_back({e.start + e.duration, -e.amount, ImpulseKind::Expiry});
    }
    return out;
}

} // namespace loopin::amm
