// Declarative scenario input: JSON schema, validation, defaulting.
// Unknown fields are rejected so typos fail loudly.
#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "loopin/economics.hpp"
#include "loopin/errors.hpp"
#include "loopin/netsim.hpp"
#include "loopin/pocps.hpp"
#include "loopin/token.hpp"

namespace loopin::engine {

using nlohmann::json;

inline void expect_fields(const json& obj, const std::string& where,
                          const std::set<std::string>& allowed,
                          const std::set<std::string>& required) {
    if (!obj.is_object())
        throw Error(ErrorCode::ConfigInvalid, where + ": expected object");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!allowed.contains(it.key()))
            throw Error(ErrorCode::ConfigInvalid,
                        where + ": unknown field '" + it.key() + "'");
    }
    for (const auto& r : required) {
        if (!obj.contains(r))
            throw Error(ErrorCode::ConfigInvalid,
                        where + ": missing field '" + r + "'");
    }
}

inline TokenAmount amount_field(const json& obj, const std::string& key,
                                const std::string& where) {
    const auto& v = obj.at(key);
    if (v.is_string()) return TokenAmount::from_decimal(v.get<std::string>());
    if (v.is_number_unsigned()) return TokenAmount(v.get<std::uint64_t>());
    throw Error(ErrorCode::ConfigInvalid,
                where + "." + key + ": expected atomic amount (string or unsigned)");
}

struct PoolConfig {
    std::string pool_id;
    std::string resource_class;
    std::uint32_t fee_bps = 0;
    TokenAmount power_reserve;
    TokenAmount protocol_reserve;
};

struct MinerConfig {
    AccountId id;
    TokenAmount balance;
    netsim::ServerBehavior behavior;
    std::optional<SimTime> malfunction_at; // behaves as Absent from here on
    bool renew_consent = false;
};

struct ClientConfig {
    AccountId id;
    TokenAmount balance;
};

enum class ActionType { Stake, Swap, RemoveLiquidity, SetRenewal, Challenge };

struct ScriptedEvent {
    SimTime time = 0;
    ActionType type = ActionType::Stake;
    // stake
    AccountId miner;
    std::string pool;
    std::uint64_t device_key = 0;
    TokenAmount power;
    SimTicks duration = 0;
    amm::StakeMode mode = amm::StakeMode::LiquidityProvider;
    // swap
    AccountId client;
    TokenAmount amount_in;
    // remove_liquidity / challenge
    std::string position;
    AccountId verifier;
    // set_renewal
    bool consent = false;
};

struct ScenarioConfig {
    std::uint64_t seed = 0;
    SimTicks horizon = 0;
    SimTicks epoch = 0;
    std::vector<PoolConfig> pools;
    std::vector<MinerConfig> miners;
    std::vector<ClientConfig> clients;
    std::vector<AccountId> verifiers;
    econ::FeeParams fee_params;
    pocps::SecurityParams pocps_params;
    netsim::RttModel rtt;
    double challenge_rate = 0;      // per epoch; 0 disables random scheduling
    SimTicks challenge_threshold = 0; // 0 -> midpoint rule
    bool burn_stops_on_slash = false;
    bool metrics_per_tick = false;
    std::vector<ScriptedEvent> scripted_events;

    SimTicks effective_threshold() const {
        if (challenge_threshold != 0) return challenge_threshold;
        netsim::ServerBehavior ref;
        for (const auto& m : miners) {
            ref.prove_cost = std::max(ref.prove_cost, m.behavior.prove_cost);
            ref.regen_cost = std::max(ref.regen_cost, m.behavior.regen_cost);
        }
        return netsim::default_threshold(rtt, ref);
    }

    void validate() const {
        if (epoch == 0) throw Error(ErrorCode::ConfigInvalid, "epoch must be > 0");
        if (horizon == 0) throw Error(ErrorCode::ConfigInvalid, "horizon must be > 0");
        if (horizon % epoch != 0)
            throw Error(ErrorCode::ConfigInvalid, "horizon must be an epoch multiple");
        if (pools.empty()) throw Error(ErrorCode::ConfigInvalid, "no pools");
        fee_params.validate();
        pocps_params.validate();
        std::set<std::string> ids;
        for (const auto& p : pools)
            if (!ids.insert(p.pool_id).second)
                throw Error(ErrorCode::ConfigInvalid, "duplicate pool " + p.pool_id);
        for (const auto& e : scripted_events) {
            if (e.time >= horizon)
                throw Error(ErrorCode::ConfigInvalid, "scripted event beyond horizon");
            if (e.type == ActionType::Stake && (e.duration == 0 || e.duration % epoch != 0))
                throw Error(ErrorCode::ConfigInvalid,
                            "stake duration must be a positive epoch multiple");
        }
    }

    static ScenarioConfig from_json(const json& j);
    static ScenarioConfig load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw Error(ErrorCode::ConfigInvalid, "cannot open " + path);
        json j;
        try {
            in >> j;
        } catch (const json::exception& e) {
            throw Error(ErrorCode::ConfigInvalid, std::string("bad JSON: ") + e.what());
        }
        return from_json(j);
    }

    json to_json() const;
};

inline ScenarioConfig ScenarioConfig::from_json(const json& j) {
    ScenarioConfig c;
    expect_fields(j, "scenario",
                  {"seed", "horizon", "epoch", "pools", "actors", "fee_params",
                   "pocps", "rtt", "challenge_rate", "challenge_threshold",
                   "burn_stops_on_slash", "metrics_per_tick", "scripted_events"},
                  {"seed", "horizon", "epoch", "pools", "actors", "fee_params"});
    c.seed = j.at("seed").get<std::uint64_t>();
    c.horizon = j.at("horizon").get<SimTicks>();
    c.epoch = j.at("epoch").get<SimTicks>();

    for (const auto& p : j.at("pools")) {
        expect_fields(p, "pool",
                      {"pool_id", "resource_class", "fee_bps", "power_reserve",
                       "protocol_reserve"},
                      {"pool_id", "power_reserve", "protocol_reserve"});
        PoolConfig pc;
        pc.pool_id = p.at("pool_id").get<std::string>();
        pc.resource_class = p.value("resource_class", pc.pool_id);
        pc.fee_bps = p.value("fee_bps", 0u);
        pc.power_reserve = amount_field(p, "power_reserve", "pool");
        pc.protocol_reserve = amount_field(p, "protocol_reserve", "pool");
        c.pools.push_back(std::move(pc));
    }

    const auto& actors = j.at("actors");
    expect_fields(actors, "actors", {"miners", "clients", "verifiers"}, {});
    for (const auto& m : actors.value("miners", json::array())) {
        expect_fields(m, "miner",
                      {"id", "balance", "behavior", "prove_cost", "regen_cost",
                       "malfunction_at", "renew_consent"},
                      {"id"});
        MinerConfig mc;
        mc.id = m.at("id").get<std::string>();
        if (m.contains("balance")) mc.balance = amount_field(m, "balance", "miner");
        const std::string kind = m.value("behavior", "honest");
        if (kind == "honest") mc.behavior.kind = netsim::BehaviorKind::Honest;
        else if (kind == "outsourcer") mc.behavior.kind = netsim::BehaviorKind::Outsourcer;
        else if (kind == "sybil") mc.behavior.kind = netsim::BehaviorKind::Sybil;
        else if (kind == "absent") mc.behavior.kind = netsim::BehaviorKind::Absent;
        else throw Error(ErrorCode::ConfigInvalid, "unknown behavior " + kind);
        mc.behavior.prove_cost = m.value("prove_cost", std::uint64_t{2});
        mc.behavior.regen_cost = m.value("regen_cost", std::uint64_t{256});
        if (m.contains("malfunction_at") && !m.at("malfunction_at").is_null())
            mc.malfunction_at = m.at("malfunction_at").get<SimTime>();
        mc.renew_consent = m.value("renew_consent", false);
        c.miners.push_back(std::move(mc));
    }
    for (const auto& cl : actors.value("clients", json::array())) {
        expect_fields(cl, "client", {"id", "balance"}, {"id"});
        ClientConfig cc;
        cc.id = cl.at("id").get<std::string>();
        if (cl.contains("balance")) cc.balance = amount_field(cl, "balance", "client");
        c.clients.push_back(std::move(cc));
    }
    for (const auto& v : actors.value("verifiers", json::array())) {
        if (v.is_string()) {
            c.verifiers.push_back(v.get<std::string>());
        } else {
            expect_fields(v, "verifier", {"id"}, {"id"});
            c.verifiers.push_back(v.at("id").get<std::string>());
        }
    }

    const auto& fp = j.at("fee_params");
    expect_fields(fp, "fee_params",
                  {"alpha", "beta", "gamma", "verifier_reward",
                   "client_reward_share_bps", "maintenance_deposit"},
                  {"alpha", "beta", "gamma"});
    c.fee_params.alpha = amount_field(fp, "alpha", "fee_params");
    c.fee_params.beta = amount_field(fp, "beta", "fee_params");
    c.fee_params.gamma = amount_field(fp, "gamma", "fee_params");
    if (fp.contains("verifier_reward"))
        c.fee_params.verifier_reward = amount_field(fp, "verifier_reward", "fee_params");
    c.fee_params.client_reward_share_bps = fp.value("client_reward_share_bps", 0u);
    if (fp.contains("maintenance_deposit"))
        c.fee_params.maintenance_deposit =
            amount_field(fp, "maintenance_deposit", "fee_params");

    if (j.contains("pocps")) {
        const auto& pp = j.at("pocps");
        expect_fields(pp, "pocps", {"modulus", "chain_length", "challenge_count"}, {});
        if (pp.contains("modulus")) {
            const auto& m = pp.at("modulus");
            c.pocps_params.modulus = m.is_string()
                ? std::stoull(m.get<std::string>())
                : m.get<std::uint64_t>();
        }
        c.pocps_params.chain_length = pp.value("chain_length", 128u);
        c.pocps_params.challenge_count = pp.value("challenge_count", 16u);
    }

    if (j.contains("rtt")) {
        const auto& r = j.at("rtt");
        expect_fields(r, "rtt", {"base", "jitter", "distribution"}, {});
        c.rtt.base = r.value("base", std::uint64_t{20});
        c.rtt.jitter_bound = r.value("jitter", std::uint64_t{10});
        const std::string d = r.value("distribution", "uniform");
        if (d == "uniform") c.rtt.distribution = netsim::RttDistribution::Uniform;
        else if (d == "truncated_normal")
            c.rtt.distribution = netsim::RttDistribution::TruncatedNormal;
        else throw Error(ErrorCode::ConfigInvalid, "unknown rtt distribution " + d);
    }

    c.challenge_rate = j.value("challenge_rate", 0.0);
    c.challenge_threshold = j.value("challenge_threshold", std::uint64_t{0});
    c.burn_stops_on_slash = j.value("burn_stops_on_slash", false);
    c.metrics_per_tick = j.value("metrics_per_tick", false);

    for (const auto& e : j.value("scripted_events", json::array())) {
        expect_fields(e, "scripted_event",
                      {"time", "action", "miner", "pool", "device_key", "power",
                       "duration", "mode", "client", "amount_in", "position",
                       "verifier", "consent"},
                      {"time", "action"});
        ScriptedEvent se;
        se.time = e.at("time").get<SimTime>();
        const std::string a = e.at("action").get<std::string>();
        if (a == "stake") {
            se.type = ActionType::Stake;
            se.miner = e.at("miner").get<std::string>();
            se.pool = e.at("pool").get<std::string>();
            const auto& dk = e.at("device_key");
            se.device_key = dk.is_string() ? std::stoull(dk.get<std::string>())
                                           : dk.get<std::uint64_t>();
            se.power = amount_field(e, "power", "stake");
            se.duration = e.at("duration").get<SimTicks>();
            const std::string mode = e.value("mode", "liquidity_provider");
            if (mode == "liquidity_provider") se.mode = amm::StakeMode::LiquidityProvider;
            else if (mode == "liquidity_removal") se.mode = amm::StakeMode::LiquidityRemoval;
            else throw Error(ErrorCode::ConfigInvalid, "unknown stake mode " + mode);
        } else if (a == "swap") {
            se.type = ActionType::Swap;
            se.client = e.at("client").get<std::string>();
            se.pool = e.at("pool").get<std::string>();
            se.amount_in = amount_field(e, "amount_in", "swap");
        } else if (a == "remove_liquidity") {
            se.type = ActionType::RemoveLiquidity;
            se.position = e.at("position").get<std::string>();
        } else if (a == "set_renewal") {
            se.type = ActionType::SetRenewal;
            se.miner = e.at("miner").get<std::string>();
            se.consent = e.at("consent").get<bool>();
        } else if (a == "challenge") {
            se.type = ActionType::Challenge;
            se.position = e.at("position").get<std::string>();
            se.verifier = e.value("verifier", std::string{});
        } else {
            throw Error(ErrorCode::ConfigInvalid, "unknown action " + a);
        }
        c.scripted_events.push_back(std::move(se));
    }

    c.validate();
    return c;
}

inline json ScenarioConfig::to_json() const {
    json j;
    j["seed"] = seed;
    j["horizon"] = horizon;
    j["epoch"] = epoch;
    j["pools"] = json::array();
    for (const auto& p : pools) {
        j["pools"].push_back({{"pool_id", p.pool_id},
                              {"resource_class", p.resource_class},
                              {"fee_bps", p.fee_bps},
                              {"power_reserve", p.power_reserve.str()},
                              {"protocol_reserve", p.protocol_reserve.str()}});
    }
    json miners_j = json::array();
    for (const auto& m : miners) {
        json mj = {{"id", m.id},
                   {"balance", m.balance.str()},
                   {"behavior", netsim::behavior_name(m.behavior.kind)},
                   {"prove_cost", m.behavior.prove_cost},
                   {"regen_cost", m.behavior.regen_cost},
                   {"renew_consent", m.renew_consent}};
        if (m.malfunction_at) mj["malfunction_at"] = *m.malfunction_at;
        miners_j.push_back(std::move(mj));
    }
    json clients_j = json::array();
    for (const auto& cl : clients)
        clients_j.push_back({{"id", cl.id}, {"balance", cl.balance.str()}});
    j["actors"] = {{"miners", miners_j},
                   {"clients", clients_j},
                   {"verifiers", verifiers}};
    j["fee_params"] = {{"alpha", fee_params.alpha.str()},
                       {"beta", fee_params.beta.str()},
                       {"gamma", fee_params.gamma.str()},
                       {"verifier_reward", fee_params.verifier_reward.str()},
                       {"client_reward_share_bps", fee_params.client_reward_share_bps},
                       {"maintenance_deposit", fee_params.maintenance_deposit.str()}};
    j["pocps"] = {{"modulus", std::to_string(pocps_params.modulus)},
                  {"chain_length", pocps_params.chain_length},
                  {"challenge_count", pocps_params.challenge_count}};
    j["rtt"] = {{"base", rtt.base},
                {"jitter", rtt.jitter_bound},
                {"distribution", rtt.distribution == netsim::RttDistribution::Uniform
                                     ? "uniform"
                                     : "truncated_normal"}};
    j["challenge_rate"] = challenge_rate;
    j["challenge_threshold"] = challenge_threshold;
    j["burn_stops_on_slash"] = burn_stops_on_slash;
    j["metrics_per_tick"] = metrics_per_tick;
    json evs = json::array();
    for (const auto& e : scripted_events) {
        json ej;
        ej["time"] = e.time;
        switch (e.type) {
            case ActionType::Stake:
                ej["action"] = "stake";
                ej["miner"] = e.miner;
                ej["pool"] = e.pool;
                ej["device_key"] = std::to_string(e.device_key);
                ej["power"] = e.power.str();
                ej["duration"] = e.duration;
                ej["mode"] = amm::mode_name(e.mode);
                break;
            case ActionType::Swap:
                ej["action"] = "swap";
                ej["client"] = e.client;
                ej["pool"] = e.pool;
                ej["amount_in"] = e.amount_in.str();
                break;
            case ActionType::RemoveLiquidity:
                ej["action"] = "remove_liquidity";
                ej["position"] = e.position;
                break;
            case ActionType::SetRenewal:
                ej["action"] = "set_renewal";
                ej["miner"] = e.miner;
                ej["consent"] = e.consent;
                break;
            case ActionType::Challenge:
                ej["action"] = "challenge";
                ej["position"] = e.position;
                ej["verifier"] = e.verifier;
                break;
        }
        evs.push_back(std::move(ej));
    }
    j["scripted_events"] = evs;
    return j;
}

} // namespace loopin::engine
