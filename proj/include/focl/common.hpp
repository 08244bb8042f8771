#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace focl {

using i64 = std::int64_t;
using u64 = std::uint64_t;
using i128 = __int128;
using u128 = unsigned __int128;

using Elem = std::uint32_t;
inline constexpr Elem kNoElem = UINT32_MAX;

using Dist = std::uint32_t;
inline constexpr Dist kInfDist = UINT32_MAX;

// ---------------------------------------------------------------- errors

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed surface syntax (expressions). Carries a character offset.
class ParseError : public Error {
public:
    ParseError(const std::string& msg, std::size_t pos)
        : Error(msg + " (at offset " + std::to_string(pos) + ")"), pos_(pos) {}
    std::size_t position() const { return pos_; }

private:
    std::size_t pos_;
};

// Malformed input files (databases, training sets, index archives).
class FormatError : public Error {
public:
    FormatError(const std::string& msg, std::size_t line = 0)
        : Error(line ? msg + " (line " + std::to_string(line) + ")" : msg), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

// Semantic evaluation failures: unassigned variables, arithmetic overflow.
class EvalError : public Error {
public:
    using Error::Error;
};

// Localisation failures: unsupported fragment, failed certification.
class LocalityError : public Error {
public:
    using Error::Error;
};

// Invariant violations that indicate a bug, not bad input.
class InternalError : public Error {
public:
    using Error::Error;
};

#define FOCL_CHECK(cond, msg)                                                \
    do {                                                                     \
        if (!(cond)) throw ::focl::InternalError(std::string("invariant: ") + (msg)); \
    } while (0)

// ---------------------------------------------------------------- checked arithmetic

inline i128 checked_add(i128 a, i128 b) {
    i128 r;
    if (__builtin_add_overflow(a, b, &r)) throw EvalError("integer overflow in addition");
    return r;
}

inline i128 checked_mul(i128 a, i128 b) {
    i128 r;
    if (__builtin_mul_overflow(a, b, &r)) throw EvalError("integer overflow in multiplication");
    return r;
}

inline i64 to_i64(i128 v, const char* what) {
    if (v > i128(INT64_MAX) || v < i128(INT64_MIN))
        throw EvalError(std::string(what) + ": value exceeds 64-bit range");
    return static_cast<i64>(v);
}

std::string i128_to_string(i128 v);

// ---------------------------------------------------------------- stable hashing

// FNV-1a; used for config hashes persisted in index files, so it must be
// stable across platforms and runs (std::hash is not).
inline u64 fnv1a(std::string_view s, u64 h = 14695981039346656037ull) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline u64 fnv1a_u64(u64 v, u64 h = 14695981039346656037ull) {
    for (int i = 0; i < 8; ++i) {
        h ^= (v >> (8 * i)) & 0xff;
        h *= 1099511628211ull;
    }
    return h;
}

// ---------------------------------------------------------------- parallel_for

// Chunked parallel loop. fn(worker, begin, end). workers <= 1 runs inline.
void parallel_for(std::size_t n, unsigned workers,
                  const std::function<void(unsigned, std::size_t, std::size_t)>& fn);

inline unsigned default_workers() {
    unsigned hw = std::thread::hardware_concurrency();
    return hw ? hw : 1;
}

}  // namespace focl
