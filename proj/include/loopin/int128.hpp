// 128-bit integer helpers: checked arithmetic and decimal string conversion.
#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace loopin {

using u128 = unsigned __int128;
using i128 = __int128;

inline std::string to_decimal(u128 v) {
    if (v == 0) return "0";
    std::string out;
    while (v > 0) {
        out.push_back(static_cast<char>('0' + static_cast<unsigned>(v % 10)));
        v /= 10;
    }
    std::reverse(out.begin(), out.end());
    return out;
}

inline std::string to_decimal(i128 v) {
    if (v < 0) return "-" + to_decimal(static_cast<u128>(-v));
    return to_decimal(static_cast<u128>(v));
}

inline std::optional<u128> parse_u128(std::string_view s) {
    if (s.empty()) return std::nullopt;
    u128 v = 0;
    constexpr u128 max = ~u128{0};
    for (char c : s) {
        if (c < '0' || c > '9') return std::nullopt;
        unsigned d = static_cast<unsigned>(c - '0');
        if (v > (max - d) / 10) return std::nullopt;
        v = v * 10 + d;
    }
    return v;
}

inline std::optional<u128> checked_add(u128 a, u128 b) {
    u128 r = a + b;
    if (r < a) return std::nullopt;
    return r;
}

inline std::optional<u128> checked_sub(u128 a, u128 b) {
    if (b > a) return std::nullopt;
    return a - b;
}

inline std::optional<u128> checked_mul(u128 a, u128 b) {
    if (a == 0 || b == 0) return u128{0};
    u128 r = a * b;
    if (r / a != b) return std::nullopt;
    return r;
}

inline u128 ceil_div(u128 num, u128 den) {
    if (den == 0) throw std::domain_error("ceil_div: zero divisor");
    return num / den + (num % den != 0 ? 1 : 0);
}

} // namespace loopin
