// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "jobmatch/error.hpp"

namespace jobmatch::textprep {

inline constexpr std::size_t kMaxSequenceLength = 512;

struct CleaningConfig {
    bool strip_nontext = true;
    bool lowercase = false;
    bool collapse_whitespace = true;
    /// Symbol runs strictly longer than this are dropped.
    std::size_t symbol_run_threshold = 5;
};

namespace detail {

struct CodePoint {
    std::uint32_t value;
    std::size_t length; // bytes consumed; 1 for invalid sequences
    bool valid;
};

inline CodePoint decode_utf8(std::string_view s, std::size_t i) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    if (b0 < 0x80) return {b0, 1, true};
    std::size_t len = 0;
    std::uint32_t cp = 0;
    if ((b0 & 0xE0) == 0xC0) {
        len = 2;
        cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
        len = 3;
        cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
        len = 4;
        cp = b0 & 0x07;
    } else {
        return {b0, 1, false};
    }
    if (i + len > s.size()) return {b0, 1, false};
    for (std::size_t k = 1; k < len; ++k) {
        const auto b = static_cast<unsigned char>(s[i + k]);
        if ((b & 0xC0) != 0x80) return {b0, 1, false};
        cp = (cp << 6) | (b & 0x3F);
    }
    return {cp, len, true};
}

inline bool is_control(std::uint32_t cp) {
    return cp < 0x20 || cp == 0x7F || (cp >= 0x80 && cp <= 0x9F);
}

inline bool is_space(std::uint32_t cp) {
    return cp == ' ' || cp == 0xA0 || cp == 0x2028 || cp == 0x2029 || (cp >= 0x2000 && cp <= 0x200B) ||
           cp == 0x3000;
}

// Rough text/symbol split without a Unicode database: letters of the common
// scripts count as text; punctuation, arrows, box drawing, geometric shapes,
// dingbats, private use and emoji blocks count as symbols.
inline bool is_symbol(std::uint32_t cp, bool valid) {
    if (!valid) return true;
    if (cp < 0x80) {
        const auto c = static_cast<unsigned char>(cp);
        return !(std::isalnum(c) || c == ' ');
    }
    if (cp <= 0xBF) return true; // Latin-1 punctuation and signs
    if (cp == 0xD7 || cp == 0xF7) return true;
    if (cp >= 0x2000 && cp <= 0x2BFF) return true;
    if (cp >= 0x3000 && cp <= 0x303F) return true;
    if (cp >= 0xE000 && cp <= 0xF8FF) return true;
    if (cp >= 0xFFF0 && cp <= 0xFFFF) return true;
    if (cp >= 0x1F000 && cp <= 0x1FAFF) return true;
    return false;
}

inline void append_utf8(std::string& out, std::uint32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

inline char ascii_lower(char c) {
    return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

inline bool is_word_byte(char c) {
    const auto u = static_cast<unsigned char>(c);
    return u >= 0x80 || std::isalnum(u);
}

} // namespace detail

/// Removes control characters and, optionally, parser debris such as long runs
/// of bullets or box-drawing glyphs. Invalid UTF-8 becomes U+FFFD. Idempotent
/// for every config.
inline std::string clean_text(std::string_view text, const CleaningConfig& config = {}) {
    struct Unit {
        std::uint32_t cp;
        bool valid;
        bool symbol;
        bool space;
    };
    std::vector<Unit> units;
    units.reserve(text.size());
    for (std::size_t i = 0; i < text.size();) {
        const auto cp = detail::decode_utf8(text, i);
        i += cp.length;
        if (cp.valid && (detail::is_control(cp.value) || detail::is_space(cp.value))) {
            units.push_back({' ', true, false, true});
            continue;
        }
        std::uint32_t value = cp.value;
        if (config.lowercase && cp.valid && value < 0x80) {
            value = static_cast<unsigned char>(detail::ascii_lower(static_cast<char>(value)));
        }
        units.push_back({value, cp.valid, detail::is_symbol(cp.value, cp.valid), false});
    }

    std::vector<bool> keep(units.size(), true);
    if (config.strip_nontext) {
        for (std::size_t i = 0; i < units.size();) {
            if (!units[i].symbol) {
                ++i;
                continue;
            }
            std::size_t j = i;
            while (j < units.size() && units[j].symbol) ++j;
            if (j - i > config.symbol_run_threshold) {
                std::fill(keep.begin() + static_cast<std::ptrdiff_t>(i),
                          keep.begin() + static_cast<std::ptrdiff_t>(j), false);
            }
            i = j;
        }
    }

    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (std::size_t i = 0; i < units.size(); ++i) {
        if (!keep[i]) continue;
        const Unit& u = units[i];
        if (config.collapse_whitespace && u.space) {
            pending_space = true;
            continue;
        }
        if (pending_space && !out.empty()) out.push_back(' ');
        pending_space = false;
        detail::append_utf8(out, u.valid ? u.cp : 0xFFFD);
    }
    return out;
}

/// Splits on whitespace and ASCII punctuation. Non-ASCII bytes are word bytes.
inline std::vector<std::string> word_tokens(std::string_view text, bool lowercase = true) {
    std::vector<std::string> words;
    std::string current;
    for (char c : text) {
        if (detail::is_word_byte(c)) {
            current.push_back(lowercase ? detail::ascii_lower(c) : c);
        } else if (!current.empty()) {
            words.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) words.push_back(std::move(current));
    return words;
}

inline std::size_t count_words(std::string_view text) {
    std::size_t n = 0;
    bool in_word = false;
    for (char c : text) {
        const bool w = detail::is_word_byte(c);
        if (w && !in_word) ++n;
        in_word = w;
    }
    return n;
}

/// Token-to-id table with three reserved ids. Ids are dense: tokens()[i] is id i.
class Vocabulary {
public:
    static constexpr std::int32_t kPad = 0;
    static constexpr std::int32_t kOov = 1;
    static constexpr std::int32_t kCls = 2;

    Vocabulary() : tokens_{"[PAD]", "[OOV]", "[CLS]"} { reindex(); }

    /// Builds from word frequencies, most frequent first (ties lexicographic).
    template <class TextRange>
    static Vocabulary fit(const TextRange& texts, std::size_t min_count = 1, std::size_t max_size = 0) {
        std::map<std::string, std::size_t> counts;
        for (const auto& text : texts) {
            for (auto& w : word_tokens(clean_text(text))) ++counts[w];
        }
        std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
        std::stable_sort(ranked.begin(), ranked.end(),
                         [](const auto& a, const auto& b) { return a.second > b.second; });
        Vocabulary vocab;
        for (auto& [word, count] : ranked) {
            if (count < min_count) break;
            if (max_size != 0 && vocab.size() >= max_size) break;
            vocab.tokens_.push_back(word);
        }
        vocab.reindex();
        return vocab;
    }

    static Vocabulary from_tokens(std::vector<std::string> tokens) {
        if (tokens.size() < 3) fail(ErrorKind::config, "vocabulary needs the three reserved tokens");
        Vocabulary vocab;
        vocab.tokens_ = std::move(tokens);
        vocab.reindex();
        if (vocab.index_.size() != vocab.tokens_.size()) fail(ErrorKind::config, "vocabulary tokens are not unique");
        return vocab;
    }

    std::size_t size() const { return tokens_.size(); }
    const std::vector<std::string>& tokens() const { return tokens_; }

    std::int32_t id(std::string_view token) const {
        auto it = index_.find(std::string(token));
        return it == index_.end() ? kOov : it->second;
    }

    bool contains(std::string_view token) const { return index_.count(std::string(token)) != 0; }

    nlohmann::json to_json() const {
        return {{"tokens", tokens_}, {"pad", kPad}, {"oov", kOov}, {"cls", kCls}};
    }

    static Vocabulary from_json(const nlohmann::json& j) {
        if (j.at("pad").get<int>() != kPad || j.at("oov").get<int>() != kOov || j.at("cls").get<int>() != kCls) {
            fail(ErrorKind::config, "vocabulary special ids must be pad=0, oov=1, cls=2");
        }
        return from_tokens(j.at("tokens").get<std::vector<std::string>>());
    }

private:
    void reindex() {
        index_.clear();
        for (std::size_t i = 0; i < tokens_.size(); ++i) {
            index_.emplace(tokens_[i], static_cast<std::int32_t>(i));
        }
    }

    std::vector<std::string> tokens_;
    std::unordered_map<std::string, std::int32_t> index_;
};

struct TokenSequence {
    std::vector<std::int32_t> ids;

    std::size_t length() const { return ids.size(); }
    bool empty() const { return ids.empty(); }
    friend bool operator==(const TokenSequence&, const TokenSequence&) = default;
};

struct TokenizeOptions {
    bool lowercase = true;
    bool prepend_cls = true;
};

inline TokenSequence tokenize(std::string_view text, const Vocabulary& vocab, const TokenizeOptions& options = {}) {
    TokenSequence seq;
    if (options.prepend_cls) seq.ids.push_back(Vocabulary::kCls);
    for (const auto& w : word_tokens(text, options.lowercase)) seq.ids.push_back(vocab.id(w));
    return seq;
}

inline TokenSequence truncate(const TokenSequence& seq, std::size_t max_len = kMaxSequenceLength) {
    if (max_len < 1) fail(ErrorKind::config, "truncate: max_len must be at least 1");
    TokenSequence out;
    const std::size_t n = std::min(seq.ids.size(), max_len);
    out.ids.assign(seq.ids.begin(), seq.ids.begin() + static_cast<std::ptrdiff_t>(n));
    return out;
}

/// Words that end in a period without ending a sentence.
inline const std::vector<std::string_view>& abbreviations() {
    static const std::vector<std::string_view> list = {
        "mr", "mrs", "ms", "dr", "prof", "sr", "jr", "st", "vs", "etc", "e.g", "i.e", "inc", "ltd", "co", "nr",
        "dhr", "mevr", "bijv", "ca"};
    return list;
}

/// Sentence boundaries are runs of . ! ? followed by whitespace or end of text,
/// except after a listed abbreviation.
inline std::vector<std::string> split_sentences(std::string_view text) {
    auto is_ws = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; };
    auto is_term = [](char c) { return c == '.' || c == '!' || c == '?'; };

    std::vector<std::string> sentences;
    auto emit = [&](std::size_t b, std::size_t e) {
        while (b < e && is_ws(text[b])) ++b;
        while (e > b && is_ws(text[e - 1])) --e;
        if (e > b) sentences.emplace_back(text.substr(b, e - b));
    };

    std::size_t start = 0;
    std::size_t i = 0;
    while (i < text.size()) {
        if (!is_term(text[i])) {
            ++i;
            continue;
        }
        std::size_t run_end = i;
        while (run_end < text.size() && is_term(text[run_end])) ++run_end;
        const bool at_boundary = run_end == text.size() || is_ws(text[run_end]);
        bool abbreviation = false;
        if (at_boundary && text[i] == '.' && run_end == i + 1) {
            std::size_t w = i;
            while (w > start && !is_ws(text[w - 1])) --w;
            std::string word;
            for (std::size_t k = w; k < i; ++k) word.push_back(detail::ascii_lower(text[k]));
            while (!word.empty() && !detail::is_word_byte(word.front()) && word.front() != '.') word.erase(0, 1);
            abbreviation = std::find(abbreviations().begin(), abbreviations().end(), word) != abbreviations().end();
        }
        if (at_boundary && !abbreviation) {
            emit(start, run_end);
            start = run_end;
        }
        i = run_end;
    }
    emit(start, text.size());
    return sentences;
}

} // namespace jobmatch::textprep
