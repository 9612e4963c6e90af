#pragma once

#include <cctype>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include "k2v/error.hpp"

namespace k2v {

// ---------------------------------------------------------------------------
// Stable hashing
// ---------------------------------------------------------------------------

inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

constexpr std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = kFnvOffset) noexcept {
    std::uint64_t h = seed;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= kFnvPrime;
    }
    return h;
}

constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    // splitmix64 finalizer
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return x;
}

struct Hash128 {
    std::uint64_t hi = 0;
    std::uint64_t lo = 0;
    friend bool operator==(const Hash128&, const Hash128&) = default;
};

struct Hash128Hasher {
    std::size_t operator()(const Hash128& h) const noexcept {
        return static_cast<std::size_t>(h.hi ^ mix64(h.lo));
    }
};

inline std::string to_hex(std::uint64_t v) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[v & 0xF];
        v >>= 4;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Portable RNG
// ---------------------------------------------------------------------------

/// mt19937_64 has a fully specified output sequence; the bounded draw below
/// avoids std::uniform_int_distribution, whose algorithm varies by vendor.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform integer in [0, bound). bound must be positive.
    std::uint64_t below(std::uint64_t bound) {
        if (bound == 0) throw Error(ErrorCode::InvalidArgument, "Rng::below with zero bound");
        const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound);
        std::uint64_t x = engine_();
        while (x >= limit) x = engine_();
        return x % bound;
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

private:
    std::mt19937_64 engine_;
};

// ---------------------------------------------------------------------------
// Unicode helpers
// ---------------------------------------------------------------------------

inline bool is_valid_utf8(std::string_view s) {
    std::int32_t i = 0;
    const auto n = static_cast<std::int32_t>(s.size());
    const auto* p = reinterpret_cast<const std::uint8_t*>(s.data());
    while (i < n) {
        UChar32 c = 0;
        U8_NEXT(p, i, n, c);
        if (c < 0) return false;
    }
    return true;
}

namespace detail {

inline std::string to_utf8(const icu::UnicodeString& u) {
    std::string out;
    u.toUTF8String(out);
    return out;
}

inline bool is_space_cp(UChar32 c) { return u_isUWhiteSpace(c) != 0; }

inline bool is_punct_cp(UChar32 c) {
    if (c < 0x80) return std::ispunct(static_cast<unsigned char>(c)) != 0;
    return u_ispunct(c) != 0;
}

template <typename Fn>
void for_each_code_point(std::string_view s, Fn&& fn) {
    std::int32_t i = 0;
    const auto n = static_cast<std::int32_t>(s.size());
    const auto* p = reinterpret_cast<const std::uint8_t*>(s.data());
    while (i < n) {
        const std::int32_t start = i;
        UChar32 c = 0;
        U8_NEXT(p, i, n, c);
        fn(c, static_cast<std::size_t>(start), static_cast<std::size_t>(i - start));
    }
}

} // namespace detail

/// NFC-normalize then apply default Unicode case folding.
inline std::string nfc_casefold(std::string_view s) {
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(status);
    if (U_FAILURE(status)) throw Error(ErrorCode::InvalidArgument, "ICU NFC normalizer unavailable");
    icu::UnicodeString u = icu::UnicodeString::fromUTF8(icu::StringPiece(s.data(), static_cast<std::int32_t>(s.size())));
    icu::UnicodeString normalized = nfc->normalize(u, status);
    if (U_FAILURE(status)) throw Error(ErrorCode::InvalidArgument, "NFC normalization failed");
    normalized.foldCase(U_FOLD_CASE_DEFAULT);
    return detail::to_utf8(normalized);
}

/// Trim leading/trailing Unicode whitespace and collapse interior runs to one ASCII space.
inline std::string collapse_whitespace(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool pending_space = false;
    detail::for_each_code_point(s, [&](UChar32 c, std::size_t off, std::size_t len) {
        if (c >= 0 && detail::is_space_cp(c)) {
            pending_space = !out.empty();
            return;
        }
        if (pending_space) out.push_back(' ');
        pending_space = false;
        out.append(s.substr(off, len));
    });
    return out;
}

/// Strip leading and trailing punctuation code points.
inline std::string strip_punctuation(std::string_view s) {
    std::size_t begin = s.size();
    std::size_t end = 0;
    detail::for_each_code_point(s, [&](UChar32 c, std::size_t off, std::size_t len) {
        if (c >= 0 && detail::is_punct_cp(c)) return;
        if (begin == s.size()) begin = off;
        end = off + len;
    });
    if (begin >= end) return {};
    return std::string(s.substr(begin, end - begin));
}

/// Merge key for entity names: NFC, case-fold, trim, collapse whitespace.
inline std::string normalize_name(std::string_view s) { return collapse_whitespace(nfc_casefold(s)); }

/// Comparison key for answers: the name key with leading/trailing punctuation removed.
inline std::string normalize_answer(std::string_view s) {
    return collapse_whitespace(strip_punctuation(normalize_name(s)));
}

inline std::string trim(std::string_view s) {
    const auto is_ws = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; };
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && is_ws(s[b])) ++b;
    while (e > b && is_ws(s[e - 1])) --e;
    return std::string(s.substr(b, e - b));
}

inline std::string replace_all(std::string s, std::string_view from, std::string_view to) {
    if (from.empty()) return s;
    std::size_t pos = 0;
    while ((pos = s.find(from, pos)) != std::string::npos) {
        s.replace(pos, from.size(), to);
        pos += to.size();
    }
    return s;
}

// ---------------------------------------------------------------------------
// Tokenization
// ---------------------------------------------------------------------------

struct TokenSpan {
    std::size_t offset = 0;
    std::size_t length = 0;
    friend bool operator==(const TokenSpan&, const TokenSpan&) = default;
};

/// A tokenizer maps text to byte spans of its tokens, in order.
template <typename T>
concept Tokenizer = requires(const T& tok, std::string_view text) {
    { tok(text) } -> std::convertible_to<std::vector<TokenSpan>>;
};

/// Whitespace + punctuation tokenizer: maximal runs of non-space, non-punctuation
/// code points form one token; every punctuation code point is its own token.
struct SimpleTokenizer {
    std::vector<TokenSpan> operator()(std::string_view text) const {
        std::vector<TokenSpan> tokens;
        bool in_word = false;
        detail::for_each_code_point(text, [&](UChar32 c, std::size_t off, std::size_t len) {
            if (c >= 0 && detail::is_space_cp(c)) {
                in_word = false;
            } else if (c >= 0 && detail::is_punct_cp(c)) {
                tokens.push_back({off, len});
                in_word = false;
            } else if (in_word) {
                tokens.back().length += len;
            } else {
                tokens.push_back({off, len});
                in_word = true;
            }
        });
        return tokens;
    }
};

static_assert(Tokenizer<SimpleTokenizer>);

template <Tokenizer Tok>
std::vector<std::string> token_strings(const Tok& tokenizer, std::string_view text) {
    std::vector<std::string> out;
    for (const auto& span : tokenizer(text)) out.emplace_back(text.substr(span.offset, span.length));
    return out;
}

} // namespace k2v
