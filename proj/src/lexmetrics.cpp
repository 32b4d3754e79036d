#include "ebias/lexmetrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "ebias/errors.hpp"

namespace ebias {

const char* granularity_name(Granularity g) {
    return g == Granularity::Word ? "word" : "character";
}

Granularity granularity_from_name(std::string_view name) {
    if (name == "word") return Granularity::Word;
    if (name == "character" || name == "char") return Granularity::Character;
    throw Error(ErrorCode::InvalidValue, "unknown granularity '" + std::string(name) + "'");
}

namespace {

// Decodes the next UTF-8 scalar starting at i; advances i. Invalid bytes are
// consumed one at a time and returned as their byte value.
std::uint32_t next_scalar(std::string_view s, std::size_t& i) {
    const unsigned char b0 = static_cast<unsigned char>(s[i]);
    if (b0 < 0x80) {
        ++i;
        return b0;
    }
    int len = 0;
    std::uint32_t cp = 0;
    if ((b0 & 0xe0) == 0xc0) {
        len = 2;
        cp = b0 & 0x1f;
    } else if ((b0 & 0xf0) == 0xe0) {
        len = 3;
        cp = b0 & 0x0f;
    } else if ((b0 & 0xf8) == 0xf0) {
        len = 4;
        cp = b0 & 0x07;
    } else {
        ++i;
        return b0;
    }
    if (i + len > s.size()) {
        ++i;
        return b0;
    }
    for (int k = 1; k < len; ++k) {
        const unsigned char bk = static_cast<unsigned char>(s[i + k]);
        if ((bk & 0xc0) != 0x80) {
            ++i;
            return b0;
        }
        cp = (cp << 6) | (bk & 0x3f);
    }
    i += len;
    return cp;
}

std::uint32_t lower_scalar(std::uint32_t cp) {
    if (cp >= 'A' && cp <= 'Z') return cp + 0x20;
    // Latin-1 uppercase letters, skipping the multiplication sign
    if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 0x20;
    return cp;
}

bool is_space_scalar(std::uint32_t cp) {
    switch (cp) {
        case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D: case 0x20:
        case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
        case 0x202F: case 0x205F: case 0x3000:
            return true;
        default:
            return cp >= 0x2000 && cp <= 0x200A;
    }
}

bool is_punct_scalar(std::uint32_t cp) {
    if (cp < 0x80) {
        return (cp >= 0x21 && cp <= 0x2F) || (cp >= 0x3A && cp <= 0x40) ||
               (cp >= 0x5B && cp <= 0x60) || (cp >= 0x7B && cp <= 0x7E);
    }
    switch (cp) {
        case 0x2018: case 0x2019: case 0x201C: case 0x201D: // curly quotes
        case 0x2013: case 0x2014: case 0x2026:              // dashes, ellipsis
        case 0xAB: case 0xBB: case 0xA1: case 0xBF: case 0xB7:
            return true;
        default:
            return false;
    }
}

void append_scalar_utf8(std::string& out, std::uint32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xc0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xe0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    } else {
        out.push_back(static_cast<char>(0xf0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3f)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    }
}

void add_token(TokenStats& stats, std::string&& token) {
    auto [it, inserted] = stats.counts.try_emplace(std::move(token), 0);
    it->second += 1;
    stats.w += 1;
    if (inserted) stats.t += 1;
}

} // namespace

TokenStats tokenize(std::string_view text, Granularity granularity) {
    TokenStats stats;

    if (granularity == Granularity::Character) {
        std::size_t i = 0;
        while (i < text.size()) {
            std::string token;
            append_scalar_utf8(token, lower_scalar(next_scalar(text, i)));
            add_token(stats, std::move(token));
        }
        return stats;
    }

    // word granularity: collect lowercased scalars between whitespace, then
    // trim punctuation off both ends of each raw token
    std::size_t i = 0;
    std::vector<std::uint32_t> scalars;
    auto flush = [&]() {
        if (scalars.empty()) return;
        std::size_t lo = 0;
        std::size_t hi = scalars.size();
        while (lo < hi && is_punct_scalar(scalars[lo])) ++lo;
        while (hi > lo && is_punct_scalar(scalars[hi - 1])) --hi;
        if (lo < hi) {
            std::string token;
            for (std::size_t k = lo; k < hi; ++k) append_scalar_utf8(token, scalars[k]);
            add_token(stats, std::move(token));
        }
        scalars.clear();
    };

    while (i < text.size()) {
        const std::uint32_t cp = lower_scalar(next_scalar(text, i));
        if (is_space_scalar(cp)) {
            flush();
        } else {
            scalars.push_back(cp);
        }
    }
    flush();
    return stats;
}

double shannon_entropy(const TokenStats& stats) {
    if (stats.w == 0) throw Error(ErrorCode::EmptyText, "entropy of empty text is undefined");
    // log2(N) - sum(N_x log2 N_x)/N; exact for uniform counts since log2(1)=0.
    // Accumulation runs over sorted counts so the result depends only on the
    // count multiset, making permutation invariance bit-exact.
    std::vector<std::uint64_t> counts;
    counts.reserve(stats.counts.size());
    for (const auto& [token, count] : stats.counts) counts.push_back(count);
    std::sort(counts.begin(), counts.end());

    const double n = static_cast<double>(stats.w);
    double acc = 0.0;
    for (std::uint64_t count : counts) {
        acc += static_cast<double>(count) * std::log2(static_cast<double>(count));
    }
    return std::log2(n) - acc / n;
}

double cttr(const TokenStats& stats) {
    if (stats.w == 0) throw Error(ErrorCode::EmptyText, "cttr of empty text is undefined");
    return static_cast<double>(stats.t) / std::sqrt(2.0 * static_cast<double>(stats.w));
}

double maas(const TokenStats& stats) {
    if (stats.w == 0) throw Error(ErrorCode::EmptyText, "maas of empty text is undefined");
    if (stats.w == 1) throw Error(ErrorCode::DegenerateLength, "maas needs at least 2 tokens");
    const double lw = std::log10(static_cast<double>(stats.w));
    const double lt = std::log10(static_cast<double>(stats.t));
    return (lw - lt) / (lw * lw);
}

LexicalMetrics metrics_for(std::string_view text, Granularity granularity) {
    const TokenStats stats = tokenize(text, granularity);
    return LexicalMetrics{shannon_entropy(stats), cttr(stats), maas(stats)};
}

TextMetricsRow score_text(std::string_view text, Granularity granularity) {
    TextMetricsRow row;
    const TokenStats stats = tokenize(text, granularity);
    row.w = stats.w;
    row.t = stats.t;
    if (stats.w == 0) {
        row.skip_reason = "empty";
        return row;
    }
    if (stats.w == 1) {
        row.skip_reason = "degenerate";
        return row;
    }
    row.metrics = LexicalMetrics{shannon_entropy(stats), cttr(stats), maas(stats)};
    row.ok = true;
    return row;
}

std::vector<TextMetricsRow> score_texts(const std::vector<std::string>& texts,
                                        Granularity granularity) {
    std::vector<TextMetricsRow> rows(texts.size());
    const std::int64_t n = static_cast<std::int64_t>(texts.size());
#pragma omp parallel for schedule(dynamic, 16)
    for (std::int64_t i = 0; i < n; ++i) {
        rows[static_cast<std::size_t>(i)] = score_text(texts[static_cast<std::size_t>(i)], granularity);
    }
    return rows;
}

std::vector<TextMetricsRow> score_texts_serial(const std::vector<std::string>& texts,
                                               Granularity granularity) {
    std::vector<TextMetricsRow> rows;
    rows.reserve(texts.size());
    for (const auto& text : texts) {
        rows.push_back(score_text(text, granularity));
    }
    return rows;
}

} // namespace ebias
