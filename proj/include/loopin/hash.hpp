// SHA-256 via OpenSSL EVP.
#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>
#include <vector>

#include <openssl/evp.h>

namespace loopin {

using Hash256 = std::array<std::uint8_t, 32>;

class Sha256 {
public:
    Sha256() : ctx_(EVP_MD_CTX_new()) {
        if (!ctx_ || EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr) != 1)
            throw std::runtime_error("sha256 init failed");
    }
    ~Sha256() { EVP_MD_CTX_free(ctx_); }
    Sha256(const Sha256&) = delete;
    Sha256& operator=(const Sha256&) = delete;

    Sha256& update(const void* data, std::size_t len) {
        EVP_DigestUpdate(ctx_, data, len);
        return *this;
    }
    Sha256& update(std::string_view s) { return update(s.data(), s.size()); }
    Sha256& update(const Hash256& h) { return update(h.data(), h.size()); }
    Sha256& update_u64(std::uint64_t v) { // big-endian
        std::uint8_t b[8];
        for (int i = 7; i >= 0; --i) { b[i] = v & 0xff; v >>= 8; }
        return update(b, 8);
    }

    Hash256 finish() {
        Hash256 out{};
        unsigned n = 0;
        EVP_DigestFinal_ex(ctx_, out.data(), &n);
        return out;
    }

private:
    EVP_MD_CTX* ctx_;
};

inline Hash256 sha256(std::string_view s) {
    Sha256 h;
    h.update(s);
    return h.finish();
}

inline std::string hex(const Hash256& h) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(64);
    for (auto b : h) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0xf]);
    }
    return out;
}

inline std::uint64_t hash_to_u64(const Hash256& h) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = (v << 8) | h[static_cast<std::size_t>(i)];
    return v;
}

} // namespace loopin
