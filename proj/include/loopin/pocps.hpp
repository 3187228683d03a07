// Proof-of-Computing-Power-Staking: a per-device keyed, invertible
// sequential-work encoding (sloth-style modular square-root chain) with a
// Merkle commitment and random spot-check challenges.
//
// Setup walks the chain in the slow direction (one modular exponentiation
// per link); verification undoes a link with a single squaring. The scheme
// is a simulation stand-in for a GPU-bound proof of work and is not meant
// to be production-secure.
#pragma once

#include <bit>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "loopin/errors.hpp"
#include "loopin/hash.hpp"
#include "loopin/int128.hpp"

namespace loopin::pocps {

// ------------------------------- field math -------------------------------

inline std::uint64_t mulmod(std::uint64_t a, std::uint64_t b, std::uint64_t p) {
    return static_cast<std::uint64_t>((u128{a} * b) % p);
}

inline std::uint64_t powmod(std::uint64_t base, std::uint64_t exp, std::uint64_t p) {
    std::uint64_t r = 1 % p;
    base %= p;
    while (exp) {
        if (exp & 1) r = mulmod(r, base, p);
        base = mulmod(base, base, p);
        exp >>= 1;
    }
    return r;
}

// Deterministic Miller-Rabin, valid for all 64-bit inputs.
inline bool is_prime_u64(std::uint64_t n) {
    if (n < 2) return false;
    for (std::uint64_t sp : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull,
                             19ull, 23ull, 29ull, 31ull, 37ull}) {
        if (n % sp == 0) return n == sp;
    }
    std::uint64_t d = n - 1;
    int s = 0;
    while ((d & 1) == 0) { d >>= 1; ++s; }
    for (std::uint64_t a : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull,
                            19ull, 23ull, 29ull, 31ull, 37ull}) {
        std::uint64_t x = powmod(a, d, n);
        if (x == 1 || x == n - 1) continue;
        bool witness = true;
        for (int i = 0; i < s - 1; ++i) {
            x = mulmod(x, x, n);
            if (x == n - 1) { witness = false; break; }
        }
        if (witness) return false;
    }
    return true;
}

constexpr std::uint64_t kDefaultModulus = (std::uint64_t{1} << 61) - 1; // 2^61-1

struct SecurityParams {
    std::uint64_t modulus = kDefaultModulus; // prime p = 3 (mod 4)
    std::uint32_t chain_length = 128;        // L
    std::uint32_t challenge_count = 16;      // q, error ~ f^q for fraction f stored

    void validate() const {
        if (!is_prime_u64(modulus) || modulus % 4 != 3)
            throw Error(ErrorCode::BadParams, "modulus must be prime = 3 (mod 4)");
        if (chain_length < 2)
            throw Error(ErrorCode::BadParams, "chain_length < 2");
        if (challenge_count < 1 || challenge_count > chain_length - 1)
            throw Error(ErrorCode::BadParams, "challenge_count out of [1, L-1]");
    }
};

struct DeviceKey {
    std::uint64_t ek = 0;

    void validate(const SecurityParams& p) const {
        // 0, 1 and p-1 are fixed points of squaring; exclude them.
        if (ek < 2 || ek > p.modulus - 2)
            throw Error(ErrorCode::DegenerateKey, std::to_string(ek));
    }
};

// Per-step XOR tweak, derived from a fixed seed; masked to the modulus
// bit width so the tweak stays XOR-invertible over [0, 2^B).
inline std::uint64_t round_constant(std::uint32_t step, std::uint64_t modulus) {
    Sha256 h;
    h.update("loopin.pocps.round-constant.v1");
    h.update_u64(step);
    const int bits = std::bit_width(modulus);
    const std::uint64_t mask =
        bits >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << bits) - 1;
    return hash_to_u64(h.finish()) & mask;
}

inline std::uint64_t apply_tweak(std::uint64_t v, std::uint64_t rc, std::uint64_t p) {
    const std::uint64_t t = v ^ rc;
    return t < p ? t : v;
}

inline std::uint64_t undo_tweak(std::uint64_t t, std::uint64_t rc, std::uint64_t p) {
    const std::uint64_t v = t ^ rc;
    return v < p ? v : t;
}

// Square-root permutation for p = 3 (mod 4). Parity of the output encodes
// which of {v, p-v} was the quadratic residue, making one squaring enough
// to invert: even outputs came from v itself, odd ones from p-v.
inline std::uint64_t sqrt_permute(std::uint64_t v, std::uint64_t p) {
    const bool qr = v == 0 || powmod(v, (p - 1) / 2, p) == 1;
    const std::uint64_t w = qr ? v : p - v;
    std::uint64_t r = powmod(w, (p + 1) / 4, p);
    const bool r_even = (r & 1) == 0;
    if (qr != r_even) r = (r == 0) ? 0 : p - r;
    return r;
}

inline std::uint64_t sqrt_permute_inverse(std::uint64_t y, std::uint64_t p) {
    const std::uint64_t w = mulmod(y, y, p);
    return (y & 1) == 0 ? w : (w == 0 ? 0 : p - w);
}

// One slow chain link: x_{k+1} = sqrt_permute(x_k XOR rc_k).
inline std::uint64_t chain_forward(std::uint64_t x, std::uint32_t step,
                                   const SecurityParams& params) {
    return sqrt_permute(apply_tweak(x, round_constant(step, params.modulus),
                                    params.modulus),
                        params.modulus);
}

// The fast inverse link: one squaring plus the tweak.
inline std::uint64_t chain_backward(std::uint64_t x_next, std::uint32_t step,
                                    const SecurityParams& params) {
    return undo_tweak(sqrt_permute_inverse(x_next, params.modulus),
                      round_constant(step, params.modulus), params.modulus);
}

// ------------------------------ Merkle layer ------------------------------

inline Hash256 leaf_hash(std::uint64_t index, std::uint64_t value) {
    Sha256 h;
    h.update("loopin.pocps.leaf");
    h.update_u64(index);
    h.update_u64(value);
    return h.finish();
}

inline Hash256 node_hash(const Hash256& left, const Hash256& right) {
    Sha256 h;
    h.update("loopin.pocps.node");
    h.update(left);
    h.update(right);
    return h.finish();
}

struct MerkleTree {
    // levels[0] = leaves; odd tail nodes are promoted unchanged.
    std::vector<std::vector<Hash256>> levels;

    static MerkleTree build(const std::vector<std::uint64_t>& values) {
        MerkleTree t;
        std::vector<Hash256> cur;
        cur.reserve(values.size());
        for (std::size_t i = 0; i < values.size(); ++i)
            cur.push_back(leaf_hash(i, values[i]));
        t.levels.push_back(cur);
        while (t.levels.back().size() > 1) {
            const auto& below = t.levels.back();
            std::vector<Hash256> next;
            next.reserve((below.size() + 1) / 2);
            for (std::size_t i = 0; i + 1 < below.size(); i += 2)
                next.push_back(node_hash(below[i], below[i + 1]));
            if (below.size() % 2 == 1) next.push_back(below.back());
            t.levels.push_back(std::move(next));
        }
        return t;
    }

    Hash256 root() const { return levels.back().at(0); }

    // Sibling hashes bottom-up; a promoted node contributes no entry.
    struct PathStep {
        Hash256 sibling;
        bool sibling_is_left = false;
        std::uint32_t level = 0;
    };

    std::vector<PathStep> path(std::size_t index) const {
        std::vector<PathStep> out;
        std::size_t i = index;
        for (std::size_t lv = 0; lv + 1 < levels.size(); ++lv) {
            const auto& row = levels[lv];
            const std::size_t sib = (i % 2 == 0) ? i + 1 : i - 1;
            if (sib < row.size())
                out.push_back({row[sib], sib < i, static_cast<std::uint32_t>(lv)});
            i /= 2;
        }
        return out;
    }
};

inline Hash256 fold_path(Hash256 leaf, std::size_t index,
                         const std::vector<MerkleTree::PathStep>& path,
                         std::size_t leaf_count) {
    Hash256 acc = leaf;
    std::size_t i = index;
    std::size_t width = leaf_count;
    std::size_t pi = 0;
    while (width > 1) {
        const std::size_t sib = (i % 2 == 0) ? i + 1 : i - 1;
        if (sib < width) {
            if (pi >= path.size()) return Hash256{}; // malformed
            const auto& step = path[pi++];
            acc = step.sibling_is_left ? node_hash(step.sibling, acc)
                                       : node_hash(acc, step.sibling);
        }
        i /= 2;
        width = (width + 1) / 2;
    }
    return pi == path.size() ? acc : Hash256{};
}

// ------------------------------ scheme types ------------------------------

struct EncodedResource {
    std::vector<std::uint64_t> chain; // x_0 .. x_L, x_0 = ek
    Hash256 commitment{};
    std::uint64_t claimed_power = 0;
};

struct ProverSetup {
    SecurityParams params;
    std::vector<std::uint64_t> chain;
    MerkleTree tree;
};

struct VerifierSetup {
    SecurityParams params;
    Hash256 commitment{};
    std::uint64_t claimed_power = 0;
};

struct Challenge {
    Hash256 nonce{};
    std::vector<std::uint32_t> indices; // q distinct positions in [1, L]
};

struct Opening {
    std::uint32_t index = 0;        // challenged k, in [1, L]
    std::uint64_t prev = 0;         // x_{k-1}
    std::uint64_t value = 0;        // x_k
    std::vector<MerkleTree::PathStep> prev_path;
    std::vector<MerkleTree::PathStep> value_path;
};

struct Proof {
    Hash256 nonce{}; // challenge binding
    std::vector<Opening> openings;
};

struct SetupResult {
    EncodedResource resource;
    ProverSetup prover;
    VerifierSetup verifier;
};

// ------------------------------- operations -------------------------------

inline SetupResult setup(const SecurityParams& params, DeviceKey key,
                         std::uint64_t claimed_power) {
    params.validate();
    key.validate(params);
    SetupResult r;
    r.resource.claimed_power = claimed_power;
    r.resource.chain.reserve(params.chain_length + 1);
    r.resource.chain.push_back(key.ek);
    for (std::uint32_t k = 0; k < params.chain_length; ++k)
        r.resource.chain.push_back(chain_forward(r.resource.chain.back(), k, params));
    r.prover.params = params;
    r.prover.chain = r.resource.chain;
    r.prover.tree = MerkleTree::build(r.resource.chain);
    r.resource.commitment = r.prover.tree.root();
    r.verifier.params = params;
    r.verifier.commitment = r.resource.commitment;
    r.verifier.claimed_power = claimed_power;
    return r;
}

// Verifier-chosen randomness: indices are a deterministic function of the
// nonce, so the prover cannot grind them.
inline Challenge make_challenge(const Hash256& nonce, const SecurityParams& params) {
    Challenge c;
    c.nonce = nonce;
    std::set<std::uint32_t> seen;
    std::uint64_t ctr = 0;
    while (c.indices.size() < params.challenge_count) {
        Sha256 h;
        h.update("loopin.pocps.challenge");
        h.update(nonce);
        h.update_u64(ctr++);
        const auto idx =
            static_cast<std::uint32_t>(1 + hash_to_u64(h.finish()) % params.chain_length);
        if (seen.insert(idx).second) c.indices.push_back(idx);
    }
    return c;
}

inline Proof prove(const ProverSetup& ps, const Challenge& c) {
    Proof proof;
    proof.nonce = c.nonce;
    for (auto k : c.indices) {
        if (k < 1 || k >= ps.chain.size())
            throw Error(ErrorCode::IndexOutOfRange, std::to_string(k));
        Opening o;
        o.index = k;
        o.prev = ps.chain[k - 1];
        o.value = ps.chain[k];
        o.prev_path = ps.tree.path(k - 1);
        o.value_path = ps.tree.path(k);
        proof.openings.push_back(std::move(o));
    }
    return proof;
}

// Total function: malformed or dishonest proofs return false, never throw.
inline bool verify(const VerifierSetup& vs, const Challenge& c, const Proof& proof) {
    if (proof.nonce != c.nonce) return false;
    if (proof.openings.size() != c.indices.size()) return false;
    const std::size_t leaf_count = std::size_t{vs.params.chain_length} + 1;
    for (std::size_t i = 0; i < c.indices.size(); ++i) {
        const Opening& o = proof.openings[i];
        const std::uint32_t k = c.indices[i];
        if (o.index != k || k < 1 || k > vs.params.chain_length) return false;
        if (o.prev >= vs.params.modulus || o.value >= vs.params.modulus) return false;
        // One squaring undoes the slow link.
        if (chain_backward(o.value, k - 1, vs.params) != o.prev) return false;
        if (fold_path(leaf_hash(k - 1, o.prev), k - 1, o.prev_path, leaf_count) !=
            vs.commitment)
            return false;
        if (fold_path(leaf_hash(k, o.value), k, o.value_path, leaf_count) !=
            vs.commitment)
            return false;
    }
    return true;
}

// Recovers ek = x_0 by fast squarings, validating every link on the way.
inline std::uint64_t pow_inverse(const EncodedResource& resource,
                                 const SecurityParams& params) {
    if (resource.chain.size() != std::size_t{params.chain_length} + 1)
        throw Error(ErrorCode::MalformedChain, "chain length mismatch");
    for (std::uint32_t k = params.chain_length; k >= 1; --k) {
        if (chain_backward(resource.chain[k], k - 1, params) != resource.chain[k - 1])
            throw Error(ErrorCode::MalformedChain, "link " + std::to_string(k));
    }
    return resource.chain[0];
}

// --------------------------- binary serialization -------------------------
// Canonical layout: length-prefixed big-endian integers, then paths.

inline void put_u32(std::vector<std::uint8_t>& b, std::uint32_t v) {
    for (int i = 24; i >= 0; i -= 8) b.push_back((v >> i) & 0xff);
}
inline void put_u64(std::vector<std::uint8_t>& b, std::uint64_t v) {
    for (int i = 56; i >= 0; i -= 8) b.push_back((v >> i) & 0xff);
}

struct ByteReader {
    const std::vector<std::uint8_t>& buf;
    std::size_t pos = 0;

    bool take(void* out, std::size_t n) {
        if (pos + n > buf.size()) return false;
        std::memcpy(out, buf.data() + pos, n);
        pos += n;
        return true;
    }
    std::optional<std::uint32_t> u32() {
        std::uint8_t b[4];
        if (!take(b, 4)) return std::nullopt;
        return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) |
               (std::uint32_t{b[2]} << 8) | b[3];
    }
    std::optional<std::uint64_t> u64() {
        std::uint8_t b[8];
        if (!take(b, 8)) return std::nullopt;
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v = (v << 8) | b[static_cast<std::size_t>(i)];
        return v;
    }
    std::optional<Hash256> hash() {
        Hash256 h;
        if (!take(h.data(), h.size())) return std::nullopt;
        return h;
    }
};

inline void serialize_path(std::vector<std::uint8_t>& b,
                           const std::vector<MerkleTree::PathStep>& path) {
    put_u32(b, static_cast<std::uint32_t>(path.size()));
    for (const auto& s : path) {
        b.insert(b.end(), s.sibling.begin(), s.sibling.end());
        b.push_back(s.sibling_is_left ? 1 : 0);
        put_u32(b, s.level);
    }
}

inline bool deserialize_path(ByteReader& r, std::vector<MerkleTree::PathStep>& out) {
    auto n = r.u32();
    if (!n || *n > 64) return false;
    out.clear();
    for (std::uint32_t i = 0; i < *n; ++i) {
        MerkleTree::PathStep s;
        auto h = r.hash();
        std::uint8_t flag;
        if (!h || !r.take(&flag, 1)) return false;
        auto lv = r.u32();
        if (!lv) return false;
        s.sibling = *h;
        s.sibling_is_left = flag != 0;
        s.level = *lv;
        out.push_back(s);
    }
    return true;
}

inline std::vector<std::uint8_t> serialize_proof(const Proof& p) {
    std::vector<std::uint8_t> b;
    b.insert(b.end(), p.nonce.begin(), p.nonce.end());
    put_u32(b, static_cast<std::uint32_t>(p.openings.size()));
    for (const auto& o : p.openings) {
        put_u32(b, o.index);
        put_u64(b, o.prev);
        put_u64(b, o.value);
        serialize_path(b, o.prev_path);
        serialize_path(b, o.value_path);
    }
    return b;
}

inline std::optional<Proof> deserialize_proof(const std::vector<std::uint8_t>& buf) {
    ByteReader r{buf};
    Proof p;
    auto nonce = r.hash();
    if (!nonce) return std::nullopt;
    p.nonce = *nonce;
    auto n = r.u32();
    if (!n || *n > 4096) return std::nullopt;
    for (std::uint32_t i = 0; i < *n; ++i) {
        Opening o;
        auto idx = r.u32();
        auto prev = r.u64();
        auto val = r.u64();
        if (!idx || !prev || !val) return std::nullopt;
        o.index = *idx;
        o.prev = *prev;
        o.value = *val;
        if (!deserialize_path(r, o.prev_path)) return std::nullopt;
        if (!deserialize_path(r, o.value_path)) return std::nullopt;
        p.openings.push_back(std::move(o));
    }
    if (r.pos != buf.size()) return std::nullopt;
    return p;
}

} // namespace loopin::pocps
