// Event-log replay: folds a recorded JSONL log back into state, validating
// timestamp monotonicity and intra-tick phase ordering. A structurally
// inconsistent log raises LogCorrupt; a truncated log yields the prefix
// state (documented contract).
#pragma once

#include "loopin/engine.hpp"

namespace loopin::engine {

inline std::string Engine::replay(const ScenarioConfig& cfg,
                                  const std::vector<std::string>& jsonl) {
    Ledger ledger;
    std::map<std::string, amm::PoolState> pools;
    std::vector<amm::StakePosition> positions;
    std::map<std::string, std::size_t> index;

    for (const auto& m : cfg.miners)
        if (!m.balance.is_zero()) ledger.credit_genesis(m.id, m.balance);
    for (const auto& c : cfg.clients)
        if (!c.balance.is_zero()) ledger.credit_genesis(c.id, c.balance);
    for (const auto& p : cfg.pools) {
        amm::PoolState ps;
        ps.pool_id = p.pool_id;
        ps.resource_class = p.resource_class;
        ps.fee_bps = p.fee_bps;
        ps.power_reserve = p.power_reserve;
        ps.protocol_reserve = p.protocol_reserve;
        pools[p.pool_id] = ps;
        ledger.credit_genesis(pool_account(p.pool_id), p.protocol_reserve);
    }

    auto corrupt = [](const std::string& why) -> Error {
        return Error(ErrorCode::LogCorrupt, why);
    };
    auto amount = [&](const ordered_json& j, const char* key) {
        if (!j.contains(key) || !j.at(key).is_string()) throw corrupt(key);
        return TokenAmount::from_decimal(j.at(key).get<std::string>());
    };
    auto pos_of = [&](const ordered_json& j) -> amm::StakePosition& {
        const auto it = index.find(j.at("position_id").get<std::string>());
        if (it == index.end()) throw corrupt("unknown position in log");
        return positions[it->second];
    };
    auto pool_of = [&](const ordered_json& j) -> amm::PoolState& {
        const auto it = pools.find(j.at("pool_id").get<std::string>());
        if (it == pools.end()) throw corrupt("unknown pool in log");
        return it->second;
    };
    auto check_reserves = [&](const ordered_json& j, const amm::PoolState& pool) {
        if (!j.contains("reserves_after")) throw corrupt("missing reserves_after");
        const auto& r = j.at("reserves_after");
        if (r.at("power").get<std::string>() != pool.power_reserve.str() ||
            r.at("protocol").get<std::string>() != pool.protocol_reserve.str())
            throw corrupt("reserve mismatch after event");
    };

    SimTime last_time = 0;
    int last_phase = -1;
    bool first = true;

    for (const auto& line : jsonl) {
        if (line.empty()) continue;
        ordered_json ev;
        try {
            ev = ordered_json::parse(line);
        } catch (const nlohmann::json::exception&) {
            throw corrupt("unparseable event line");
        }
        if (!ev.contains("time") || !ev.contains("kind")) throw corrupt("bad event shape");
        const SimTime t = ev.at("time").get<SimTime>();
        const std::string kind = ev.at("kind").get<std::string>();
        const int phase = event_phase(kind);
        if (phase < 0) throw corrupt("unknown event kind " + kind);
        if (!first) {
            if (t < last_time) throw corrupt("timestamps not monotone");
            if (t == last_time && phase < last_phase)
                throw corrupt("intra-tick phase order violated");
        }
        first = false;
        last_time = t;
        last_phase = phase;

        if (kind == "burn") {
            ledger.burn(ev.at("account").get<std::string>(), amount(ev, "amount"), t);
        } else if (kind == "registration_rejected") {
            const auto dep = amount(ev, "deposit_burned");
            if (!dep.is_zero())
                ledger.burn_supply(ev.at("miner").get<std::string>(), dep);
        } else if (kind == "injection") {
            amm::StakePosition pos;
            pos.position_id = ev.at("position_id").get<std::string>();
            pos.miner = ev.at("miner").get<std::string>();
            pos.pool_id = ev.at("pool_id").get<std::string>();
            pos.power_amount = amount(ev, "power");
            pos.protocol_side = amount(ev, "protocol_side");
            pos.start_time = t;
            pos.duration = ev.at("duration").get<SimTicks>();
            pos.epoch = ev.at("epoch").get<SimTicks>();
            pos.mode = ev.at("mode").get<std::string>() == "liquidity_removal"
                           ? amm::StakeMode::LiquidityRemoval
                           : amm::StakeMode::LiquidityProvider;
            pos.maintenance_deposit = amount(ev, "deposit");
            pos.deposit_stream = amount(ev, "stream");
            auto& pool = pool_of(ev);
            pool.power_reserve += pos.power_amount;
            pool.protocol_reserve += pos.protocol_side;
            check_reserves(ev, pool);
            ledger.transfer(pos.miner, pool_account(pos.pool_id), pos.protocol_side);
            if (!pos.maintenance_deposit.is_zero())
                ledger.transfer(pos.miner, kDepositEscrow, pos.maintenance_deposit);
            if (!pos.deposit_stream.is_zero())
                ledger.transfer(pos.miner, kStreamEscrow, pos.deposit_stream);
            index[pos.position_id] = positions.size();
            positions.push_back(std::move(pos));
        } else if (kind == "decay") {
            auto& pos = pos_of(ev);
            auto& pool = pool_of(ev);
            const auto step = amount(ev, "power_step");
            const auto withdrawn = amount(ev, "protocol_withdrawn");
            pos.steps_done = ev.at("step_index").get<std::uint64_t>();
            pos.escrow += withdrawn;
            pool.power_reserve -= step;
            pool.protocol_reserve -= withdrawn;
            check_reserves(ev, pool);
            if (!withdrawn.is_zero())
                ledger.transfer(pool_account(pool.pool_id), kPositionEscrow, withdrawn);
        } else if (kind == "swap") {
            auto& pool = pool_of(ev);
            const auto in = amount(ev, "amount_in");
            const auto fee = amount(ev, "fee_burned");
            const auto out = amount(ev, "amount_out");
            const AccountId client = ev.at("client").get<std::string>();
            ledger.transfer(client, pool_account(pool.pool_id), in);
            if (!fee.is_zero()) ledger.burn_supply(pool_account(pool.pool_id), fee);
            pool.power_reserve -= out;
            pool.protocol_reserve += in - fee;
            check_reserves(ev, pool);
        } else if (kind == "remove_liquidity") {
            auto& pos = pos_of(ev);
            auto& pool = pool_of(ev);
            const auto fee = amount(ev, "fee_burned");
            const auto out = amount(ev, "protocol_out");
            const auto rem = pos.remaining();
            pos.power_sold = true;
            if (!rem.is_zero()) {
                pool.power_reserve += rem;
                pool.protocol_reserve -= out + fee;
            }
            check_reserves(ev, pool);
            if (!out.is_zero())
                ledger.transfer(pool_account(pool.pool_id), pos.miner, out);
            if (!fee.is_zero()) ledger.burn_supply(pool_account(pool.pool_id), fee);
        } else if (kind == "challenge") {
            if (ev.value("verdict", "") == "pass") continue;
            if (!ev.contains("action")) throw corrupt("failed challenge missing action");
            auto& pos = pos_of(ev);
            auto& pool = pools.at(pos.pool_id);
            pos.challenge_failed = true;
            const auto power_removed = amount(ev, "power_removed");
            const auto pool_withdrawn = amount(ev, "pool_withdrawn");
            const auto escrow_returned = amount(ev, "escrow_returned");
            const auto deposit_burned = amount(ev, "deposit_burned");
            const auto stream_refund = amount(ev, "stream_refund");
            pool.power_reserve -= power_removed;
            pool.protocol_reserve -= pool_withdrawn;
            check_reserves(ev, pool);
            pos.escrow = TokenAmount{};
            pos.status = ev.at("action").get<std::string>() == "slashed"
                             ? amm::PositionStatus::Slashed
                             : amm::PositionStatus::Expired;
            if (!deposit_burned.is_zero()) {
                ledger.burn_supply(kDepositEscrow, deposit_burned);
                pos.maintenance_deposit = TokenAmount{};
            }
            if (!pool_withdrawn.is_zero())
                ledger.transfer(pool_account(pool.pool_id), pos.miner, pool_withdrawn);
            if (!escrow_returned.is_zero())
                ledger.transfer(kPositionEscrow, pos.miner, escrow_returned);
            if (!stream_refund.is_zero()) {
                ledger.transfer(kStreamEscrow, pos.miner, stream_refund);
                pos.deposit_stream = TokenAmount{};
            }
        } else if (kind == "renewal") {
            auto& pos = pos_of(ev);
            pos.renewals += 1;
            const auto topup = amount(ev, "stream_topup");
            if (!topup.is_zero()) {
                ledger.transfer(pos.miner, kStreamEscrow, topup);
                pos.deposit_stream += topup;
            }
        } else if (kind == "expiry") {
            auto& pos = pos_of(ev);
            auto& pool = pools.at(pos.pool_id);
            const auto final_power = amount(ev, "final_power_removed");
            const auto final_protocol = amount(ev, "final_protocol_returned");
            const auto escrow_returned = amount(ev, "escrow_returned");
            const auto refund = amount(ev, "deposit_refunded");
            pool.power_reserve -= final_power;
            pool.protocol_reserve -= final_protocol;
            check_reserves(ev, pool);
            pos.status = amm::PositionStatus::Expired;
            pos.escrow = TokenAmount{};
            if (!final_protocol.is_zero())
                ledger.transfer(pool_account(pool.pool_id), pos.miner, final_protocol);
            if (!escrow_returned.is_zero())
                ledger.transfer(kPositionEscrow, pos.miner, escrow_returned);
            if (!refund.is_zero()) {
                ledger.transfer(kDepositEscrow, pos.miner, refund);
                pos.maintenance_deposit = TokenAmount{};
            }
        } else if (kind == "settlement") {
            MintAuthority authority;
            for (const auto& r : ev.at("rewards")) {
                ledger.mint(r.at("account").get<std::string>(),
                            TokenAmount::from_decimal(r.at("amount").get<std::string>()),
                            authority);
            }
            for (const auto& b : ev.at("burns")) {
                const auto it = index.find(b.at("position_id").get<std::string>());
                if (it == index.end()) throw corrupt("burn for unknown position");
                const auto amt =
                    TokenAmount::from_decimal(b.at("amount").get<std::string>());
                ledger.burn_supply(kStreamEscrow, amt);
                positions[it->second].deposit_stream -= amt;
            }
        } else {
            throw corrupt("unhandled event kind " + kind);
        }
        if (!ledger.conserved()) throw corrupt("conservation violated during replay");
    }

    std::vector<const amm::StakePosition*> ptrs;
    for (const auto& p : positions) ptrs.push_back(&p);
    return state_hash_of(ledger, pools, ptrs);
}

} // namespace loopin::engine
