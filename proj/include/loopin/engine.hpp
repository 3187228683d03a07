// Deterministic discrete-event orchestration. One engine instance runs one
// scenario: it advances the clock, dispatches injections, swaps, decay
// steps, challenges, renewals, expiries and settlements in a fixed
// intra-tick phase order, and owns the append-only event log. Replaying a
// log against the same config reproduces the final state exactly.
#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <queue>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "loopin/amm.hpp"
#include "loopin/economics.hpp"
#include "loopin/errors.hpp"
#include "loopin/hash.hpp"
#include "loopin/ledger.hpp"
#include "loopin/netsim.hpp"
#include "loopin/pocps.hpp"
#include "loopin/rng.hpp"
#include "loopin/scenario.hpp"
#include "loopin/token.hpp"

namespace loopin::engine {

using ordered_json = nlohmann::ordered_json;

// Intra-tick phase order; boundary-coincident events resolve by phase,
// then by insertion sequence.
enum class Phase : int {
    Decay = 0,
    Challenge = 1,
    Scripted = 2,
    RenewExpiry = 3,
    Settlement = 4,
};

inline int event_phase(const std::string& kind) {
    if (kind == "decay") return 0;
    if (kind == "challenge") return 1;
    if (kind == "burn" || kind == "registration_rejected" || kind == "injection" ||
        kind == "swap" || kind == "remove_liquidity")
        return 2;
    if (kind == "renewal" || kind == "expiry") return 3;
    if (kind == "settlement") return 4;
    return -1;
}

struct MetricsRow {
    SimTime time = 0;
    std::uint64_t epoch = 0;
    TokenAmount total_minted;
    TokenAmount total_burned;
    TokenAmount sum_balances;
    TokenAmount power_reserve;
    TokenAmount protocol_reserve;
    double spot_price = 0; // protocol per power-hour
    double staked_continuous = 0;
    TokenAmount staked_stepped;
    std::uint64_t challenges_pass = 0;
    std::uint64_t challenges_fail = 0;
};

struct DetectionStats {
    std::uint64_t honest_pass = 0;
    std::uint64_t honest_fail = 0;
    std::uint64_t attacker_pass = 0;
    std::uint64_t attacker_fail = 0;
    std::uint64_t sybil_rejected = 0;
};

class Engine {
public:
    explicit Engine(ScenarioConfig cfg) : cfg_(std::move(cfg)) {
        cfg_.validate();
    }

    static constexpr const char* kStreamEscrow = "escrow:stream";
    static constexpr const char* kDepositEscrow = "escrow:deposit";
    static constexpr const char* kPositionEscrow = "escrow:positions";

    static AccountId pool_account(const std::string& pool_id) {
        return "pool:" + pool_id;
    }

    void run() {
        init_state();
        seq_ = 0;
        for (std::uint64_t k = 1; k * cfg_.epoch <= cfg_.horizon; ++k)
            push(k * cfg_.epoch, Phase::Settlement, QItem{QItem::Settlement, 0, 0, k - 1});
        for (std::size_t i = 0; i < cfg_.scripted_events.size(); ++i) {
            const auto& e = cfg_.scripted_events[i];
            const Phase ph = e.type == ActionType::Challenge ? Phase::Challenge
                                                             : Phase::Scripted;
            push(e.time, ph, QItem{QItem::Scripted, 0, 0, 0, i});
        }
        sample_metrics(0, 0);
        while (!queue_.empty()) {
            const QEntry entry = queue_.top();
            queue_.pop();
            if (entry.time > cfg_.horizon) continue;
            now_ = entry.time;
            dispatch(entry);
            if (cfg_.metrics_per_tick &&
                (queue_.empty() || queue_.top().time != entry.time))
                sample_metrics(now_, now_ / cfg_.epoch);
            check_invariants();
        }
    }

    const std::vector<ordered_json>& events() const { return events_; }
    const std::vector<MetricsRow>& metrics() const { return metrics_; }
    const DetectionStats& detection() const { return detection_; }
    const Ledger& ledger() const { return ledger_; }
    const std::map<std::string, amm::PoolState>& pools() const { return pools_; }

    const amm::StakePosition* position(const std::string& id) const {
        auto it = position_index_.find(id);
        return it == position_index_.end() ? nullptr : &positions_[it->second].pos;
    }

    std::string events_jsonl() const {
        std::string out;
        for (const auto& e : events_) {
            out += e.dump();
            out += '\n';
        }
        return out;
    }

    std::string metrics_csv() const {
        std::ostringstream os;
        os << "time,epoch,total_minted,total_burned,sum_balances,power_reserve,"
              "protocol_reserve,spot_price,staked_continuous,staked_stepped,"
              "challenges_pass,challenges_fail\n";
        for (const auto& r : metrics_) {
            os << r.time << ',' << r.epoch << ',' << r.total_minted.str() << ','
               << r.total_burned.str() << ',' << r.sum_balances.str() << ','
               << r.power_reserve.str() << ',' << r.protocol_reserve.str() << ','
               << r.spot_price << ',' << r.staked_continuous << ','
               << r.staked_stepped.str() << ',' << r.challenges_pass << ','
               << r.challenges_fail << '\n';
        }
        return os.str();
    }

    std::string state_hash() const { return state_hash_of(ledger_, pools_, all_positions()); }

    ordered_json summary() const {
        ordered_json j;
        j["state_hash"] = state_hash();
        j["events"] = events_.size();
        j["supply"] = {{"total_minted", ledger_.total_minted().str()},
                       {"total_burned", ledger_.total_burned().str()}};
        j["detection"] = {{"honest_pass", detection_.honest_pass},
                          {"honest_fail", detection_.honest_fail},
                          {"attacker_pass", detection_.attacker_pass},
                          {"attacker_fail", detection_.attacker_fail},
                          {"sybil_rejected", detection_.sybil_rejected}};
        ordered_json flows;
        for (const auto& [who, initial] : initial_balances_) {
            const i128 delta = static_cast<i128>(ledger_.balance(who).atomic()) -
                               static_cast<i128>(initial.atomic());
            flows[who] = to_decimal(delta);
        }
        j["net_flow"] = flows;
        ordered_json credits;
        for (const auto& [who, amt] : power_credits_) credits[who] = amt.str();
        j["power_credits"] = credits;
        return j;
    }

    // ---------------------------------------------------------------------
    // Replay: fold a recorded log back into state. Validates timestamp
    // monotonicity and phase ordering; any structural mismatch raises
    // LogCorrupt. Returns the final state hash.
    static std::string replay(const ScenarioConfig& cfg,
                              const std::vector<std::string>& jsonl);

private:
    struct QItem {
        enum Type { Decay, ChallengeDue, Scripted, RenewExpiry, Settlement } type =
            Scripted;
        std::size_t position_index = 0;
        std::uint64_t step = 0;
        std::uint64_t epoch_index = 0;
        std::size_t scripted_index = 0;
        std::string challenge_position;
        AccountId challenge_verifier;
    };

    struct QEntry {
        SimTime time = 0;
        int phase = 0;
        std::uint64_t seq = 0;
        QItem item;
        bool operator>(const QEntry& o) const {
            if (time != o.time) return time > o.time;
            if (phase != o.phase) return phase > o.phase;
            return seq > o.seq;
        }
    };

    struct PositionRuntime {
        amm::StakePosition pos;
        std::size_t miner_index = 0;
        std::uint64_t device_key = 0;
        SimTime ended_at = std::numeric_limits<SimTime>::max();
    };

    struct DeviceChain {
        pocps::SetupResult setup;
    };

    void push(SimTime t, Phase ph, QItem item) {
        queue_.push(QEntry{t, static_cast<int>(ph), seq_++, std::move(item)});
    }

    void init_state() {
        for (const auto& m : cfg_.miners) {
            if (!m.balance.is_zero()) ledger_.credit_genesis(m.id, m.balance);
            miner_index_[m.id] = miner_state_.size();
            miner_state_.push_back(MinerState{m, m.renew_consent});
            initial_balances_[m.id] = m.balance;
        }
        for (const auto& c : cfg_.clients) {
            if (!c.balance.is_zero()) ledger_.credit_genesis(c.id, c.balance);
            initial_balances_[c.id] = c.balance;
        }
        for (const auto& v : cfg_.verifiers) initial_balances_[v] = TokenAmount{};
        for (const auto& p : cfg_.pools) {
            amm::PoolState ps;
            ps.pool_id = p.pool_id;
            ps.resource_class = p.resource_class;
            ps.fee_bps = p.fee_bps;
            ps.power_reserve = p.power_reserve;
            ps.protocol_reserve = p.protocol_reserve;
            pools_[p.pool_id] = ps;
            ledger_.credit_genesis(pool_account(p.pool_id), p.protocol_reserve);
        }
        sched_rng_ = Rng::derive(cfg_.seed, "schedule");
        challenge_rng_ = Rng::derive(cfg_.seed, "challenge");
        threshold_ = cfg_.effective_threshold();
    }

    amm::PoolState& pool_ref(const std::string& id) {
        auto it = pools_.find(id);
        if (it == pools_.end())
            throw Error(ErrorCode::ConfigInvalid, "unknown pool " + id);
        return it->second;
    }

    void dispatch(const QEntry& e) {
        switch (e.item.type) {
            case QItem::Decay: do_decay(e.item); break;
            case QItem::ChallengeDue:
                do_challenge(e.item.challenge_position, e.item.challenge_verifier);
                break;
            case QItem::Scripted: do_scripted(cfg_.scripted_events[e.item.scripted_index]); break;
            case QItem::RenewExpiry: do_renew_or_expire(e.item.position_index); break;
            case QItem::Settlement: do_settlement(e.item.epoch_index); break;
        }
    }

    // ------------------------------- actions ------------------------------

    void do_scripted(const ScriptedEvent& e) {
        switch (e.type) {
            case ActionType::Stake: do_stake(e); break;
            case ActionType::Swap: do_swap(e); break;
            case ActionType::RemoveLiquidity: do_remove(e); break;
            case ActionType::SetRenewal:
                miner_state_.at(miner_index_.at(e.miner)).renew_consent = e.consent;
                break;
            case ActionType::Challenge:
                do_challenge(e.position, e.verifier.empty() ? default_verifier()
                                                            : e.verifier);
                break;
        }
    }

    AccountId default_verifier() const {
        return cfg_.verifiers.empty() ? AccountId{"verifier:auto"} : cfg_.verifiers[0];
    }

    void do_stake(const ScriptedEvent& e) {
        auto& pool = pool_ref(e.pool);
        const auto mi = miner_index_.at(e.miner);

        // Staking fee burn and certificate issuance.
        const auto cert = ledger_.burn(e.miner, cfg_.fee_params.alpha, now_);
        log_event("burn", [&](ordered_json& j) {
            j["account"] = e.miner;
            j["amount"] = cfg_.fee_params.alpha.str();
            j["cert_id"] = cert.cert_id;
        });

        // Per-device chain; a reused key yields the same commitment.
        auto [it, fresh] = device_chains_.try_emplace(e.device_key);
        if (fresh)
            it->second = std::make_unique<DeviceChain>(DeviceChain{pocps::setup(
                cfg_.pocps_params, pocps::DeviceKey{e.device_key},
                static_cast<std::uint64_t>(e.power.atomic() / kAtomicPerToken))});
        const auto& commitment = it->second->setup.resource.commitment;

        const TokenAmount deposit = e.mode == amm::StakeMode::LiquidityRemoval
                                        ? cfg_.fee_params.maintenance_deposit
                                        : TokenAmount{};

        if (!registered_commitments_.insert(commitment).second) {
            // Duplicate commitment: Sybil position rejected at registration,
            // its deposit slashed.
            detection_.sybil_rejected++;
            if (!deposit.is_zero()) ledger_.burn_supply(e.miner, deposit);
            log_event("registration_rejected", [&](ordered_json& j) {
                j["miner"] = e.miner;
                j["device_key"] = std::to_string(e.device_key);
                j["commitment"] = hex(commitment);
                j["deposit_burned"] = deposit.str();
            });
            return;
        }

        const std::string pos_id = "pos-" + std::to_string(++position_counter_);
        auto pos = amm::inject_liquidity(pool, ledger_, e.miner, cert, e.power,
                                         e.duration, cfg_.epoch, e.mode, deposit,
                                         now_, pos_id,
                                         "dev-" + std::to_string(e.device_key));
        // Ledger side of the injection: protocol pairing into the pool,
        // deposit and maintenance-burn stream into escrow.
        ledger_.transfer(e.miner, pool_account(e.pool), pos.protocol_side);
        if (!deposit.is_zero()) ledger_.transfer(e.miner, kDepositEscrow, deposit);
        const TokenAmount stream =
            TokenAmount(cfg_.fee_params.beta.atomic() * pos.total_steps());
        if (!stream.is_zero()) ledger_.transfer(e.miner, kStreamEscrow, stream);
        pos.deposit_stream = stream;

        log_event("injection", [&](ordered_json& j) {
            j["position_id"] = pos.position_id;
            j["miner"] = e.miner;
            j["pool_id"] = e.pool;
            j["device_key"] = std::to_string(e.device_key);
            j["power"] = pos.power_amount.str();
            j["protocol_side"] = pos.protocol_side.str();
            j["duration"] = pos.duration;
            j["epoch"] = pos.epoch;
            j["mode"] = amm::mode_name(pos.mode);
            j["deposit"] = deposit.str();
            j["stream"] = stream.str();
            write_reserves(j, pool);
        });

        const std::size_t idx = positions_.size();
        PositionRuntime rt;
        rt.pos = std::move(pos);
        rt.miner_index = mi;
        rt.device_key = e.device_key;
        positions_.push_back(std::move(rt));
        position_index_[pos_id] = idx;

        const auto n = positions_[idx].pos.total_steps();
        for (std::uint64_t k = 1; k < n; ++k)
            push(now_ + k * cfg_.epoch, Phase::Decay, QItem{QItem::Decay, idx, k});
        push(positions_[idx].pos.expiry_time(), Phase::RenewExpiry,
             QItem{QItem::RenewExpiry, idx});
    }

    void do_swap(const ScriptedEvent& e) {
        auto& pool = pool_ref(e.pool);
        ledger_.transfer(e.client, pool_account(e.pool), e.amount_in);
        const auto res = amm::swap_protocol_for_power(pool, e.amount_in);
        if (!res.fee_burned.is_zero())
            ledger_.burn_supply(pool_account(e.pool), res.fee_burned);
        power_credits_[e.client] += res.out;
        swap_in_epoch_[e.client] += e.amount_in;
        log_event("swap", [&](ordered_json& j) {
            j["pool_id"] = e.pool;
            j["client"] = e.client;
            j["amount_in"] = e.amount_in.str();
            j["fee_burned"] = res.fee_burned.str();
            j["amount_out"] = res.out.str();
            write_reserves(j, pool);
        });
    }

    void do_remove(const ScriptedEvent& e) {
        auto& rt = positions_.at(position_index_.at(e.position));
        auto& pool = pool_ref(rt.pos.pool_id);
        const auto res = amm::remove_liquidity(pool, rt.pos);
        if (!res.out.is_zero())
            ledger_.transfer(pool_account(pool.pool_id), rt.pos.miner, res.out);
        if (!res.fee_burned.is_zero())
            ledger_.burn_supply(pool_account(pool.pool_id), res.fee_burned);
        log_event("remove_liquidity", [&](ordered_json& j) {
            j["position_id"] = rt.pos.position_id;
            j["pool_id"] = pool.pool_id;
            j["fee_burned"] = res.fee_burned.str();
            j["protocol_out"] = res.out.str();
            write_reserves(j, pool);
        });
    }

    void do_decay(const QItem& item) {
        auto& rt = positions_.at(item.position_index);
        if (rt.pos.status != amm::PositionStatus::Active) return;
        auto& pool = pool_ref(rt.pos.pool_id);
        const auto rec = amm::apply_epoch_decay(pool, rt.pos, now_);
        if (!rec.protocol_withdrawn.is_zero())
            ledger_.transfer(pool_account(pool.pool_id), kPositionEscrow,
                             rec.protocol_withdrawn);
        log_event("decay", [&](ordered_json& j) {
            j["pool_id"] = pool.pool_id;
            j["position_id"] = rt.pos.position_id;
            j["step_index"] = rec.step_index;
            j["power_step"] = rec.power_removed.str();
            j["protocol_withdrawn"] = rec.protocol_withdrawn.str();
            write_reserves(j, pool);
        });
    }

    void do_challenge(const std::string& position_id, const AccountId& verifier) {
        auto it = position_index_.find(position_id);
        if (it == position_index_.end())
            throw Error(ErrorCode::ConfigInvalid, "unknown position " + position_id);
        auto& rt = positions_[it->second];
        if (rt.pos.status != amm::PositionStatus::Active) return; // stale schedule
        auto& pool = pool_ref(rt.pos.pool_id);
        const auto& miner = miner_state_[rt.miner_index];

        netsim::ServerBehavior behavior = miner.cfg.behavior;
        if (miner.cfg.malfunction_at && now_ >= *miner.cfg.malfunction_at)
            behavior.kind = netsim::BehaviorKind::Absent;

        const auto& chain = device_chains_.at(rt.device_key)->setup;
        const pocps::ProverSetup* prover =
            behavior.kind == netsim::BehaviorKind::Absent ? nullptr : &chain.prover;
        const auto outcome = netsim::run_challenge(rt.pos, behavior, prover,
                                                   chain.verifier, cfg_.rtt,
                                                   threshold_, now_, verifier,
                                                   challenge_rng_);
        record_detection(miner.cfg.behavior, outcome);
        challenge_credits_.push_back({verifier});
        if (outcome.verdict == netsim::Verdict::Pass) {
            challenges_pass_++;
            log_event("challenge", [&](ordered_json& j) {
                j["position_id"] = position_id;
                j["verifier"] = verifier;
                j["elapsed"] = outcome.elapsed;
                j["verdict"] = netsim::verdict_name(outcome.verdict);
            });
            return;
        }
        challenges_fail_++;
        const auto app = netsim::apply_verdict(outcome, pool, rt.pos);
        rt.ended_at = now_;
        if (!app.deposit_burned.is_zero())
            ledger_.burn_supply(kDepositEscrow, app.deposit_burned);
        if (!app.pool_withdrawn.is_zero())
            ledger_.transfer(pool_account(pool.pool_id), rt.pos.miner,
                             app.pool_withdrawn);
        if (!app.escrow_returned.is_zero())
            ledger_.transfer(kPositionEscrow, rt.pos.miner, app.escrow_returned);
        TokenAmount stream_refund;
        if (cfg_.burn_stops_on_slash && !rt.pos.deposit_stream.is_zero()) {
            stream_refund = rt.pos.deposit_stream;
            ledger_.transfer(kStreamEscrow, rt.pos.miner, stream_refund);
            rt.pos.deposit_stream = TokenAmount{};
        }
        log_event("challenge", [&](ordered_json& j) {
            j["position_id"] = position_id;
            j["verifier"] = verifier;
            j["elapsed"] = outcome.elapsed;
            j["verdict"] = netsim::verdict_name(outcome.verdict);
            j["action"] = app.slashed ? "slashed" : "expired";
            j["deposit_burned"] = app.deposit_burned.str();
            j["power_removed"] = app.power_removed.str();
            j["pool_withdrawn"] = app.pool_withdrawn.str();
            j["escrow_returned"] = app.escrow_returned.str();
            j["stream_refund"] = stream_refund.str();
            write_reserves(j, pool);
        });
    }

    void record_detection(const netsim::ServerBehavior& configured,
                          const netsim::ChallengeOutcome& outcome) {
        const bool pass = outcome.verdict == netsim::Verdict::Pass;
        if (configured.kind == netsim::BehaviorKind::Honest ||
            configured.kind == netsim::BehaviorKind::Sybil) {
            pass ? detection_.honest_pass++ : detection_.honest_fail++;
        } else {
            pass ? detection_.attacker_pass++ : detection_.attacker_fail++;
        }
    }

    void do_renew_or_expire(std::size_t idx) {
        auto& rt = positions_.at(idx);
        if (rt.pos.status != amm::PositionStatus::Active) return;
        if (now_ != rt.pos.expiry_time()) return; // superseded by a renewal
        auto& pool = pool_ref(rt.pos.pool_id);
        const auto& miner = miner_state_[rt.miner_index];

        const bool deposit_intact =
            rt.pos.mode == amm::StakeMode::LiquidityProvider ||
            ledger_.balance(rt.pos.miner) >= cfg_.fee_params.maintenance_deposit;
        const bool can_fund_stream =
            ledger_.balance(rt.pos.miner) >= cfg_.fee_params.beta;
        const bool renewed = amm::renew_position(
            rt.pos, miner.renew_consent, deposit_intact && can_fund_stream, now_);
        if (renewed) {
            if (!cfg_.fee_params.beta.is_zero()) {
                ledger_.transfer(rt.pos.miner, kStreamEscrow, cfg_.fee_params.beta);
                rt.pos.deposit_stream += cfg_.fee_params.beta;
            }
            log_event("renewal", [&](ordered_json& j) {
                j["position_id"] = rt.pos.position_id;
                j["consent"] = true;
                j["renewed"] = true;
                j["stream_topup"] = cfg_.fee_params.beta.str();
                j["new_expiry"] = rt.pos.expiry_time();
            });
            push(rt.pos.expiry_time(), Phase::RenewExpiry, QItem{QItem::RenewExpiry, idx});
            return;
        }

        const auto s = amm::expire_position(pool, rt.pos, now_);
        rt.ended_at = now_;
        if (!s.final_protocol_returned.is_zero())
            ledger_.transfer(pool_account(pool.pool_id), rt.pos.miner,
                             s.final_protocol_returned);
        if (!s.escrow_returned.is_zero())
            ledger_.transfer(kPositionEscrow, rt.pos.miner, s.escrow_returned);
        TokenAmount refund;
        if (s.deposit_refundable && !rt.pos.maintenance_deposit.is_zero()) {
            refund = rt.pos.maintenance_deposit;
            ledger_.transfer(kDepositEscrow, rt.pos.miner, refund);
            rt.pos.maintenance_deposit = TokenAmount{};
        }
        log_event("expiry", [&](ordered_json& j) {
            j["position_id"] = rt.pos.position_id;
            j["final_power_removed"] = s.final_power_removed.str();
            j["final_protocol_returned"] = s.final_protocol_returned.str();
            j["escrow_returned"] = s.escrow_returned.str();
            j["deposit_refunded"] = refund.str();
            write_reserves(j, pool);
        });
    }

    void do_settlement(std::uint64_t epoch_index) {
        const SimTime epoch_start = epoch_index * cfg_.epoch;
        const SimTime epoch_end = epoch_start + cfg_.epoch;
        std::vector<econ::PositionSettlementInput> inputs;
        for (auto& rt : positions_) {
            econ::PositionSettlementInput in;
            in.position = &rt.pos;
            in.reward_eligible =
                rt.pos.start_time <= epoch_start && rt.ended_at >= epoch_end;
            in.burn_due = !rt.pos.deposit_stream.is_zero();
            inputs.push_back(in);
        }
        const auto rec = econ::Settlement::run(epoch_index, inputs, challenge_credits_,
                                               swap_in_epoch_, cfg_.fee_params,
                                               ledger_, kStreamEscrow);
        log_event("settlement", [&](ordered_json& j) {
            j["epoch_index"] = rec.epoch_index;
            j["minted_total"] = rec.minted_total.str();
            ordered_json rewards = ordered_json::array();
            for (const auto& [who, amt] : rec.rewards)
                rewards.push_back({{"account", who}, {"amount", amt.str()}});
            j["rewards"] = rewards;
            ordered_json burns = ordered_json::array();
            for (const auto& [pos_id, amt] : rec.stream_burns)
                burns.push_back({{"position_id", pos_id}, {"amount", amt.str()}});
            j["burns"] = burns;
        });
        challenge_credits_.clear();
        swap_in_epoch_.clear();
        if (!cfg_.metrics_per_tick) sample_metrics(epoch_end, epoch_index + 1);
        schedule_epoch_challenges(epoch_end);
    }

    void schedule_epoch_challenges(SimTime epoch_start) {
        if (cfg_.challenge_rate <= 0 || cfg_.verifiers.empty()) return;
        if (epoch_start >= cfg_.horizon) return;
        std::vector<std::string> active;
        for (const auto& rt : positions_)
            if (rt.pos.status == amm::PositionStatus::Active)
                active.push_back(rt.pos.position_id);
        if (active.empty()) return;
        const auto sched = netsim::schedule_challenges(active, cfg_.challenge_rate,
                                                       epoch_start, cfg_.epoch,
                                                       sched_rng_);
        for (const auto& sc : sched) {
            QItem item;
            item.type = QItem::ChallengeDue;
            item.challenge_position = sc.position_id;
            item.challenge_verifier =
                cfg_.verifiers[sched_rng_.below(cfg_.verifiers.size())];
            push(sc.time, Phase::Challenge, std::move(item));
        }
    }

    // ------------------------------ reporting -----------------------------

    void write_reserves(ordered_json& j, const amm::PoolState& pool) const {
        j["reserves_after"] = {{"power", pool.power_reserve.str()},
                               {"protocol", pool.protocol_reserve.str()}};
    }

    template <typename F>
    void log_event(const std::string& kind, F&& fill) {
        ordered_json j;
        j["time"] = now_;
        j["kind"] = kind;
        fill(j);
        events_.push_back(std::move(j));
    }

    void sample_metrics(SimTime t, std::uint64_t epoch) {
        MetricsRow r;
        r.time = t;
        r.epoch = epoch;
        r.total_minted = ledger_.total_minted();
        r.total_burned = ledger_.total_burned();
        for (const auto& [_, b] : ledger_.balances()) r.sum_balances += b;
        if (!pools_.empty()) {
            const auto& p = pools_.begin()->second;
            r.power_reserve = p.power_reserve;
            r.protocol_reserve = p.protocol_reserve;
            if (!p.power_reserve.is_zero())
                r.spot_price = static_cast<double>(p.protocol_reserve.atomic()) /
                               static_cast<double>(p.power_reserve.atomic());
        }
        r.staked_continuous = staked_value_continuous_at(static_cast<double>(t));
        for (const auto& rt : positions_) r.staked_stepped += rt.pos.remaining();
        r.challenges_pass = challenges_pass_;
        r.challenges_fail = challenges_fail_;
        metrics_.push_back(r);
    }

    double staked_value_continuous_at(double t) const {
        amm::StakedValueModel model;
        for (const auto& rt : positions_) {
            model.events.push_back(
                {static_cast<double>(rt.pos.power_amount.atomic()),
                 static_cast<double>(rt.pos.start_time),
                 static_cast<double>(rt.pos.duration)});
        }
        return amm::staked_value_continuous(model, t);
    }

    void check_invariants() const {
        if (!ledger_.conserved())
            throw Error(ErrorCode::ConfigInvalid, "conservation violated");
        // The pool must always hold the power attributable to its stakes.
        std::map<std::string, TokenAmount> staked;
        for (const auto& rt : positions_) staked[rt.pos.pool_id] += rt.pos.remaining();
        for (const auto& [id, amt] : staked) {
            if (pools_.at(id).power_reserve < amt)
                throw Error(ErrorCode::ConfigInvalid, "phantom power in pool " + id);
        }
    }

    std::vector<const amm::StakePosition*> all_positions() const {
        std::vector<const amm::StakePosition*> out;
        for (const auto& rt : positions_) out.push_back(&rt.pos);
        return out;
    }

public:
    static std::string state_hash_of(
        const Ledger& ledger, const std::map<std::string, amm::PoolState>& pools,
        const std::vector<const amm::StakePosition*>& positions) {
        ordered_json j;
        ordered_json balances;
        for (const auto& [who, amt] : ledger.balances()) balances[who] = amt.str();
        j["balances"] = balances;
        j["total_minted"] = ledger.total_minted().str();
        j["total_burned"] = ledger.total_burned().str();
        ordered_json pj;
        for (const auto& [id, p] : pools)
            pj[id] = {{"power", p.power_reserve.str()},
                      {"protocol", p.protocol_reserve.str()}};
        j["pools"] = pj;
        ordered_json positions_j = ordered_json::array();
        for (const auto* p : positions) {
            positions_j.push_back({{"id", p->position_id},
                                   {"status", amm::status_name(p->status)},
                                   {"steps_done", p->steps_done},
                                   {"escrow", p->escrow.str()},
                                   {"stream", p->deposit_stream.str()},
                                   {"renewals", p->renewals},
                                   {"power_sold", p->power_sold},
                                   {"challenge_failed", p->challenge_failed},
                                   {"deposit", p->maintenance_deposit.str()}});
        }
        j["positions"] = positions_j;
        return hex(sha256(j.dump()));
    }

private:
    struct MinerState {
        MinerConfig cfg;
        bool renew_consent = false;
    };

    ScenarioConfig cfg_;
    SimTime now_ = 0;
    std::uint64_t seq_ = 0;
    std::priority_queue<QEntry, std::vector<QEntry>, std::greater<>> queue_;

    Ledger ledger_;
    std::map<std::string, amm::PoolState> pools_;
    std::vector<PositionRuntime> positions_;
    std::map<std::string, std::size_t> position_index_;
    std::map<AccountId, std::size_t> miner_index_;
    std::vector<MinerState> miner_state_;
    std::map<std::uint64_t, std::unique_ptr<DeviceChain>> device_chains_;
    std::set<Hash256> registered_commitments_;
    std::uint64_t position_counter_ = 0;

    std::vector<econ::ChallengeCredit> challenge_credits_;
    std::map<AccountId, TokenAmount> swap_in_epoch_;
    std::map<AccountId, TokenAmount> power_credits_;
    std::map<AccountId, TokenAmount> initial_balances_;

    std::vector<ordered_json> events_;
    std::vector<MetricsRow> metrics_;
    DetectionStats detection_;
    std::uint64_t challenges_pass_ = 0;
    std::uint64_t challenges_fail_ = 0;

    Rng sched_rng_{0};
    Rng challenge_rng_{0};
    SimTicks threshold_ = 0;
};

} // namespace loopin::engine

#include "loopin/replay.hpp"
