#include <catch2/catch_amalgamated.hpp>

#include "loopin/economics.hpp"
#include "loopin/rng.hpp"

using namespace loopin;
using namespace loopin::econ;

namespace {

FeeParams params(std::uint64_t alpha, std::uint64_t beta, std::uint64_t gamma) {
    FeeParams p;
    p.alpha = TokenAmount::tokens(alpha);
    p.beta = TokenAmount::tokens(beta);
    p.gamma = TokenAmount::tokens(gamma);
    return p;
}

i128 atomic_tokens(std::int64_t whole) {
    return static_cast<i128>(whole) * 1'000'000;
}

} // namespace

TEST_CASE("break-even duration") {
    REQUIRE(t_min(params(10, 1, 2)) == 10);   // 10 / (2 - 1)
    REQUIRE(t_min(params(10, 0, 3)) == 4);    // ceil(10 / 3)
    REQUIRE(t_min(params(1, 0, 1000)) == 1);
    REQUIRE(t_min(params(0, 1, 2)) == 0);     // nothing to recoup
    try {
        t_min(params(10, 2, 2));
        FAIL("expected DegenerateRates");
    } catch (const Error& e) {
        REQUIRE(e.code() == ErrorCode::DegenerateRates);
    }
}

TEST_CASE("fee parameter validation") {
    REQUIRE_NOTHROW(params(10, 1, 2).validate());
    REQUIRE_NOTHROW(params(10, 2, 2).validate());
    REQUIRE_THROWS_AS(params(10, 3, 2).validate(), Error);
}

TEST_CASE("miner net flow: -alpha - beta*T + gamma*T1") {
    const auto p = params(10, 1, 2);
    REQUIRE(miner_net_flow(p, 20, 15) == 0);                      // breaks even
    REQUIRE(miner_net_flow(p, 20, 20) == atomic_tokens(10));      // full term
    REQUIRE(miner_net_flow(p, 20, 10) == atomic_tokens(-10));     // early death
    REQUIRE(miner_net_flow(p, 20, 0) == atomic_tokens(-30));      // instant death
    try {
        miner_net_flow(p, 20, 21);
        FAIL("expected MalfunctionAfterExpiry");
    } catch (const Error& e) {
        REQUIRE(e.code() == ErrorCode::MalfunctionAfterExpiry);
    }
}

TEST_CASE("net flow is monotone in uptime and antitone in committed burn") {
    const auto p = params(10, 1, 2);
    for (std::uint64_t t1 = 1; t1 <= 20; ++t1)
        REQUIRE(miner_net_flow(p, 20, t1) > miner_net_flow(p, 20, t1 - 1));
    for (std::uint64_t T = 11; T <= 30; ++T)
        REQUIRE(miner_net_flow(p, T, 10) < miner_net_flow(p, T - 1, 10));
}

TEST_CASE("below the break-even duration no uptime profile is profitable") {
    Rng rng(1234);
    for (int i = 0; i < 20; ++i) {
        const std::uint64_t beta = rng.below(5);
        const std::uint64_t gamma = beta + 1 + rng.below(5);
        const std::uint64_t alpha = 1 + rng.below(50);
        const auto p = params(alpha, beta, gamma);
        const auto tm = t_min(p);
        REQUIRE(tm >= 1);
        // Strictly below break-even: always a loss.
        for (std::uint64_t T = 1; T < tm; ++T)
            for (std::uint64_t t1 = 0; t1 <= T; ++t1)
                REQUIRE(miner_net_flow(p, T, t1) < 0);
        // At break-even with full uptime: non-negative.
        REQUIRE(miner_net_flow(p, tm, tm) >= 0);
    }
}

TEST_CASE("settlement mints rewards and burns the maintenance stream") {
    Ledger ledger;
    ledger.credit_genesis("m1", TokenAmount::tokens(100));
    const AccountId stream = "escrow:stream";
    ledger.credit_genesis(stream, TokenAmount::tokens(10));

    amm::StakePosition pos;
    pos.position_id = "pos-1";
    pos.miner = "m1";
    pos.deposit_stream = TokenAmount::tokens(10);

    auto p = params(10, 1, 2);
    p.verifier_reward = TokenAmount::tokens(1);
    p.client_reward_share_bps = 100; // 1%

    std::vector<PositionSettlementInput> inputs{{&pos, true, true}};
    const std::vector<ChallengeCredit> challenges{{"ver1"}, {"ver1"}};
    const std::map<AccountId, TokenAmount> swaps{
        {"client1", TokenAmount::tokens(500)}};

    const auto rec = Settlement::run(3, inputs, challenges, swaps, p, ledger, stream);
    REQUIRE(rec.epoch_index == 3);
    REQUIRE(rec.rewards.at("m1") == TokenAmount::tokens(2));
    REQUIRE(rec.rewards.at("ver1") == TokenAmount::tokens(2));
    REQUIRE(rec.rewards.at("client1") == TokenAmount::tokens(5));
    REQUIRE(rec.minted_total == TokenAmount::tokens(9));
    REQUIRE(rec.burns.at("m1") == TokenAmount::tokens(1));
    REQUIRE(rec.stream_burns.size() == 1);
    REQUIRE(rec.stream_burns[0].first == "pos-1");
    REQUIRE(pos.deposit_stream == TokenAmount::tokens(9));
    REQUIRE(ledger.balance("m1") == TokenAmount::tokens(102));
    REQUIRE(ledger.balance(stream) == TokenAmount::tokens(9));
    REQUIRE(ledger.conserved());
}

TEST_CASE("stream burn is capped by the remaining escrow") {
    Ledger ledger;
    const AccountId stream = "escrow:stream";
    ledger.credit_genesis(stream, TokenAmount(400'000));

    amm::StakePosition pos;
    pos.position_id = "pos-1";
    pos.miner = "m1";
    pos.deposit_stream = TokenAmount(400'000); // less than one beta

    auto p = params(10, 1, 2);
    std::vector<PositionSettlementInput> inputs{{&pos, false, true}};
    const auto rec = Settlement::run(0, inputs, {}, {}, p, ledger, stream);
    REQUIRE(rec.burns.at("m1") == TokenAmount(400'000));
    REQUIRE(pos.deposit_stream.is_zero());
    REQUIRE(ledger.balance(stream).is_zero());

    // Exhausted stream: nothing further to burn.
    const auto rec2 = Settlement::run(1, inputs, {}, {}, p, ledger, stream);
    REQUIRE(rec2.burns.empty());
    REQUIRE(ledger.conserved());
}

TEST_CASE("an empty epoch settles to an empty record") {
    Ledger ledger;
    std::vector<PositionSettlementInput> inputs;
    const auto rec = Settlement::run(0, inputs, {}, {}, params(10, 1, 2), ledger,
                                     "escrow:stream");
    REQUIRE(rec.minted_total.is_zero());
    REQUIRE(rec.rewards.empty());
    REQUIRE(rec.burns.empty());
    REQUIRE(ledger.total_minted().is_zero());
}

TEST_CASE("ineligible positions receive no reward but still burn") {
    Ledger ledger;
    const AccountId stream = "escrow:stream";
    ledger.credit_genesis(stream, TokenAmount::tokens(5));

    amm::StakePosition pos;
    pos.position_id = "pos-1";
    pos.miner = "m1";
    pos.deposit_stream = TokenAmount::tokens(5);

    std::vector<PositionSettlementInput> inputs{{&pos, false, true}};
    const auto rec = Settlement::run(0, inputs, {}, {}, params(10, 1, 2), ledger,
                                     stream);
    REQUIRE_FALSE(rec.rewards.contains("m1"));
    REQUIRE(rec.burns.at("m1") == TokenAmount::tokens(1));
    REQUIRE(ledger.conserved());
}
