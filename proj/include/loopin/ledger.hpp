// Token accounting: balances, transfers, burn certificates, supply conservation.
#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "loopin/errors.hpp"
#include "loopin/token.hpp"

namespace loopin {

namespace engine { class Engine; }
namespace econ { struct Settlement; }

// Capability handle for minting. Only epoch settlement and the engine's
// replay path can construct one; everything else gets UnauthorizedMint.
class MintAuthority {
    MintAuthority() = default;
    friend class engine::Engine;
    friend struct econ::Settlement;
    friend MintAuthority test_mint_authority();
};

// Test-only escape hatch, defined in test binaries.
MintAuthority test_mint_authority();

struct BurnCertificate {
    std::uint64_t cert_id = 0;
    AccountId owner;
    TokenAmount amount;
    SimTime issued_at = 0;
};

// Value-semantic ledger; single writer (the engine event loop).
// Invariant: sum of balances == total_minted - total_burned, exactly.
class Ledger {
public:
    TokenAmount balance(const AccountId& a) const {
        auto it = balances_.find(a);
        return it == balances_.end() ? TokenAmount{} : it->second;
    }

    TokenAmount total_minted() const { return total_minted_; }
    TokenAmount total_burned() const { return total_burned_; }

    const std::map<AccountId, TokenAmount>& balances() const { return balances_; }

    // Genesis credit, counted as mint so conservation holds from t=0.
    void credit_genesis(const AccountId& to, TokenAmount amount) {
        balances_[to] += amount;
        total_minted_ += amount;
    }

    void transfer(const AccountId& from, const AccountId& to, TokenAmount amount) {
        if (amount.is_zero()) return; // no-op success
        debit(from, amount);
        balances_[to] += amount;
    }

    BurnCertificate burn(const AccountId& owner, TokenAmount amount, SimTime now) {
        if (amount.is_zero()) throw Error(ErrorCode::ZeroAmount, "burn of zero");
        debit(owner, amount);
        total_burned_ += amount;
        return BurnCertificate{next_cert_id_++, owner, amount, now};
    }

    // Burn without a certificate (fees, slashed deposits).
    void burn_supply(const AccountId& owner, TokenAmount amount) {
        if (amount.is_zero()) throw Error(ErrorCode::ZeroAmount, "burn of zero");
        debit(owner, amount);
        total_burned_ += amount;
    }

    void mint(const AccountId& to, TokenAmount amount, const MintAuthority&) {
        if (amount.is_zero()) throw Error(ErrorCode::ZeroAmount, "mint of zero");
        balances_[to] += amount;
        total_minted_ += amount;
    }

    bool cert_consumed(std::uint64_t cert_id) const {
        return consumed_certs_.contains(cert_id);
    }

    void consume_cert(const BurnCertificate& cert) {
        if (!consumed_certs_.insert(cert.cert_id).second)
            throw Error(ErrorCode::CertificateAlreadyUsed,
                        "cert " + std::to_string(cert.cert_id));
    }

    bool conserved() const {
        TokenAmount sum;
        for (auto& [_, b] : balances_) sum += b;
        return sum + total_burned_ == total_minted_;
    }

private:
    void debit(const AccountId& from, TokenAmount amount) {
        auto it = balances_.find(from);
        TokenAmount have = it == balances_.end() ? TokenAmount{} : it->second;
        if (have < amount)
            throw Error(ErrorCode::InsufficientBalance,
                        from + " has " + have.str() + ", needs " + amount.str());
        it->second = have - amount;
    }

    std::map<AccountId, TokenAmount> balances_;
    TokenAmount total_minted_;
    TokenAmount total_burned_;
    std::uint64_t next_cert_id_ = 1;
    std::set<std::uint64_t> consumed_certs_;
};

} // namespace loopin
