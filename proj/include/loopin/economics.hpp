// Fee and reward flows: staking-fee burn (alpha), maintenance burn rate
// (beta), reward rate (gamma), epoch settlement, and the balance analysis
// -alpha - beta*T + gamma*T1 with its minimum viable staking period.
#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <vector>

#include "loopin/amm.hpp"
#include "loopin/errors.hpp"
#include "loopin/ledger.hpp"
#include "loopin/token.hpp"

namespace loopin::econ {

struct FeeParams {
    TokenAmount alpha;            // staking fee, burned at position creation
    TokenAmount beta;             // maintenance burn per position-epoch
    TokenAmount gamma;            // reward per surviving position-epoch
    TokenAmount verifier_reward;  // flat mint per executed challenge
    std::uint32_t client_reward_share_bps = 0; // of epoch swap-in volume
    TokenAmount maintenance_deposit;           // required in removal mode

    void validate() const {
        if (gamma < beta)
            throw Error(ErrorCode::ConfigInvalid,
                        "maintenance burn rate exceeds reward rate");
    }
};

// Minimum staking duration at which participation can break even,
// ceil(alpha / (gamma - beta)) epochs.
inline std::uint64_t t_min(const FeeParams& p) {
    if (p.alpha.is_zero()) return 0;
    if (p.beta == p.gamma) throw Error(ErrorCode::DegenerateRates);
    if (p.gamma < p.beta) throw Error(ErrorCode::ConfigInvalid, "beta > gamma");
    const u128 denom = p.gamma.atomic() - p.beta.atomic();
    return static_cast<std::uint64_t>(ceil_div(p.alpha.atomic(), denom));
}

// Exact signed balance -alpha - beta*T + gamma*T1, in atomic units.
// T is the committed duration and T1 the last healthy epoch, both in epochs.
inline i128 miner_net_flow(const FeeParams& p, std::uint64_t T, std::uint64_t T1) {
    if (T1 > T) throw Error(ErrorCode::MalfunctionAfterExpiry);
    const i128 a = static_cast<i128>(p.alpha.atomic());
    const i128 b = static_cast<i128>(p.beta.atomic()) * static_cast<i128>(T);
    const i128 g = static_cast<i128>(p.gamma.atomic()) * static_cast<i128>(T1);
    return -a - b + g;
}

struct SettlementRecord {
    std::uint64_t epoch_index = 0;
    TokenAmount minted_total;
    std::map<AccountId, TokenAmount> rewards;
    std::map<AccountId, TokenAmount> burns;
    // Per-position maintenance burns, in settlement order.
    std::vector<std::pair<std::string, TokenAmount>> stream_burns;
};

struct PositionSettlementInput {
    amm::StakePosition* position = nullptr;
    bool reward_eligible = false; // active for the whole epoch
    bool burn_due = false;        // still within its burn term
};

struct ChallengeCredit {
    AccountId verifier;
};

struct Settlement {
    // Mints gamma per surviving position-epoch, burns beta from each
    // position's escrowed deposit stream, credits verifiers per executed
    // challenge and clients pro rata to their swap-in volume.
    static SettlementRecord run(std::uint64_t epoch_index,
                                std::vector<PositionSettlementInput>& positions,
                                const std::vector<ChallengeCredit>& challenges,
                                const std::map<AccountId, TokenAmount>& swap_in_by_client,
                                const FeeParams& params, Ledger& ledger,
                                const AccountId& stream_escrow_account) {
        SettlementRecord rec;
        rec.epoch_index = epoch_index;
        MintAuthority authority;
        auto mint_to = [&](const AccountId& who, TokenAmount amount) {
            if (amount.is_zero()) return;
            ledger.mint(who, amount, authority);
            rec.rewards[who] += amount;
            rec.minted_total += amount;
        };
        for (auto& in : positions) {
            auto& pos = *in.position;
            if (in.reward_eligible) mint_to(pos.miner, params.gamma);
            if (in.burn_due && !params.beta.is_zero()) {
                const TokenAmount due = std::min(params.beta, pos.deposit_stream);
                if (!due.is_zero()) {
                    ledger.burn_supply(stream_escrow_account, due);
                    pos.deposit_stream -= due;
                    rec.burns[pos.miner] += due;
                    rec.stream_burns.emplace_back(pos.position_id, due);
                }
            }
        }
        for (const auto& c : challenges) mint_to(c.verifier, params.verifier_reward);
        if (params.client_reward_share_bps > 0) {
            for (const auto& [client, volume] : swap_in_by_client)
                mint_to(client, volume.mul_div(params.client_reward_share_bps, 10000));
        }
        return rec;
    }
};

} // namespace loopin::econ
