// Token and time base types. 1 token = 10^6 atomic units; 1 tick = 1 ms.
#pragma once

#include <compare>
#include <cstdint>
#include <string>

#include "loopin/errors.hpp"
#include "loopin/int128.hpp"

namespace loopin {

using SimTime = std::uint64_t;  // ticks since scenario start
using SimTicks = std::uint64_t; // tick span

constexpr u128 kAtomicPerToken = 1'000'000;

// Exact count of atomic token units. All arithmetic is checked: overflow
// and underflow raise, never wrap.
class TokenAmount {
public:
    constexpr TokenAmount() = default;
    constexpr explicit TokenAmount(u128 atomic) : atomic_(atomic) {}

    static TokenAmount tokens(std::uint64_t whole) {
        return TokenAmount(u128{whole} * kAtomicPerToken);
    }

    static TokenAmount from_decimal(std::string_view s) {
        auto v = parse_u128(s);
        if (!v) throw Error(ErrorCode::BadParams, "bad token amount: " + std::string(s));
        return TokenAmount(*v);
    }

    constexpr u128 atomic() const { return atomic_; }
    constexpr bool is_zero() const { return atomic_ == 0; }
    std::string str() const { return to_decimal(atomic_); }

    TokenAmount operator+(TokenAmount o) const {
        auto r = checked_add(atomic_, o.atomic_);
        if (!r) throw Error(ErrorCode::Overflow, "token add");
        return TokenAmount(*r);
    }
    TokenAmount operator-(TokenAmount o) const {
        auto r = checked_sub(atomic_, o.atomic_);
        if (!r) throw Error(ErrorCode::Overflow, "token sub underflow");
        return TokenAmount(*r);
    }
    TokenAmount& operator+=(TokenAmount o) { *this = *this + o; return *this; }
    TokenAmount& operator-=(TokenAmount o) { *this = *this - o; return *this; }

    // floor(this * num / den), checked.
    TokenAmount mul_div(u128 num, u128 den) const {
        if (den == 0) throw Error(ErrorCode::BadParams, "mul_div zero divisor");
        auto p = checked_mul(atomic_, num);
        if (!p) throw Error(ErrorCode::Overflow, "token mul");
        return TokenAmount(*p / den);
    }

    auto operator<=>(const TokenAmount&) const = default;

private:
    u128 atomic_ = 0;
};

using AccountId = std::string;

} // namespace loopin
