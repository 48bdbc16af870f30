// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "jobmatch/error.hpp"
#include "jobmatch/rng.hpp"
#include "jobmatch/textprep.hpp"

namespace jobmatch::corpus {

enum class Role { resume, vacancy };

inline std::string_view to_string(Role role) { return role == Role::resume ? "resume" : "vacancy"; }

inline std::optional<Role> parse_role(std::string_view s) {
    if (s == "resume") return Role::resume;
    if (s == "vacancy") return Role::vacancy;
    return std::nullopt;
}

enum class LabelSource { consultant_positive, consultant_negative, random_negative };

inline std::string_view to_string(LabelSource source) {
    switch (source) {
    case LabelSource::consultant_positive: return "consultant_positive";
    case LabelSource::consultant_negative: return "consultant_negative";
    case LabelSource::random_negative: return "random_negative";
    }
    return "?";
}

inline std::optional<LabelSource> parse_label_source(std::string_view s) {
    if (s == "consultant_positive") return LabelSource::consultant_positive;
    if (s == "consultant_negative") return LabelSource::consultant_negative;
    if (s == "random_negative") return LabelSource::random_negative;
    return std::nullopt;
}

inline int label_of(LabelSource source) { return source == LabelSource::consultant_positive ? 1 : 0; }

struct Document {
    std::string doc_id;
    Role role = Role::resume;
    std::string language;
    std::string text;
    std::size_t token_count = 0;

    friend bool operator==(const Document&, const Document&) = default;
};

struct LabeledPair {
    std::string resume_id;
    std::string vacancy_id;
    int label = 0;
    LabelSource source = LabelSource::consultant_negative;

    friend bool operator==(const LabeledPair&, const LabeledPair&) = default;
};

inline LabeledPair make_pair(std::string resume_id, std::string vacancy_id, LabelSource source) {
    return {std::move(resume_id), std::move(vacancy_id), label_of(source), source};
}

inline std::string pair_key(const LabeledPair& p) { return p.resume_id + '\x1f' + p.vacancy_id; }

/// Ordered document collection with id lookup. Ids are unique.
class DocumentStore {
public:
    DocumentStore() = default;

    explicit DocumentStore(std::vector<Document> docs) {
        for (auto& d : docs) add(std::move(d));
    }

    /// Inserts; an identical duplicate is collapsed, a conflicting one throws.
    /// Returns false when the document was already present.
    bool add(Document doc) {
        if (auto it = index_.find(doc.doc_id); it != index_.end()) {
            const Document& existing = docs_[it->second];
            if (existing.text != doc.text || existing.role != doc.role || existing.language != doc.language) {
                fail(ErrorKind::conflict, "duplicate doc_id '" + doc.doc_id + "' with conflicting content");
            }
            return false;
        }
        index_.emplace(doc.doc_id, docs_.size());
        docs_.push_back(std::move(doc));
        return true;
    }

    const Document* find(std::string_view id) const {
        auto it = index_.find(std::string(id));
        return it == index_.end() ? nullptr : &docs_[it->second];
    }

    const Document& at(std::string_view id) const {
        const Document* d = find(id);
        if (!d) fail(ErrorKind::integrity, "unknown doc_id '" + std::string(id) + "'");
        return *d;
    }

    std::size_t size() const { return docs_.size(); }
    bool empty() const { return docs_.empty(); }
    const std::vector<Document>& documents() const { return docs_; }
    auto begin() const { return docs_.begin(); }
    auto end() const { return docs_.end(); }

private:
    std::vector<Document> docs_;
    std::unordered_map<std::string, std::size_t> index_;
};

// ---------------------------------------------------------------------------
// Serialization

inline nlohmann::json to_json(const Document& d) {
    return {{"doc_id", d.doc_id}, {"role", to_string(d.role)}, {"language", d.language}, {"text", d.text}};
}

inline nlohmann::json to_json(const LabeledPair& p) {
    return {{"resume_id", p.resume_id}, {"vacancy_id", p.vacancy_id}, {"label", p.label},
            {"source", to_string(p.source)}};
}

enum class DocumentFormat { jsonl, tsv };

namespace detail {

inline std::string tsv_unescape(std::string_view s, std::size_t line_no) {
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] != '\\') {
            out.push_back(s[i]);
            continue;
        }
        if (i + 1 == s.size()) fail(ErrorKind::ingestion, "line " + std::to_string(line_no) + ": dangling escape");
        switch (s[++i]) {
        case 't': out.push_back('\t'); break;
        case 'n': out.push_back('\n'); break;
        case 'r': out.push_back('\r'); break;
        case '\\': out.push_back('\\'); break;
        default: fail(ErrorKind::ingestion, "line " + std::to_string(line_no) + ": unknown escape");
        }
    }
    return out;
}

inline std::string tsv_escape(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
        case '\t': out += "\\t"; break;
        case '\n': out += "\\n"; break;
        case '\r': out += "\\r"; break;
        case '\\': out += "\\\\"; break;
        default: out.push_back(c);
        }
    }
    return out;
}

inline Document make_document(std::string id, std::string_view role, std::string language, std::string text,
                              std::size_t line_no) {
    auto r = parse_role(role);
    if (!r) {
        fail(ErrorKind::ingestion, "line " + std::to_string(line_no) + ": role must be 'resume' or 'vacancy'");
    }
    if (id.empty()) fail(ErrorKind::ingestion, "line " + std::to_string(line_no) + ": empty doc_id");
    Document d{std::move(id), *r, std::move(language), std::move(text), 0};
    d.token_count = textprep::count_words(d.text);
    return d;
}

inline std::ifstream open_input(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::io, "cannot open '" + path + "'");
    return in;
}

inline std::ofstream open_output(const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::io, "cannot write '" + path + "'");
    return out;
}

} // namespace detail

inline DocumentStore parse_documents(std::istream& in, DocumentFormat format) {
    DocumentStore store;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (format == DocumentFormat::jsonl) {
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(line);
            } catch (const nlohmann::json::exception& e) {
                fail(ErrorKind::ingestion, "line " + std::to_string(line_no) + ": invalid JSON: " + e.what());
            }
            if (!j.is_object()) fail(ErrorKind::ingestion, "line " + std::to_string(line_no) + ": not an object");
            for (const char* key : {"doc_id", "role", "language", "text"}) {
                if (!j.contains(key) || !j[key].is_string()) {
                    fail(ErrorKind::ingestion,
                         "line " + std::to_string(line_no) + ": missing or non-string field '" + key + "'");
                }
            }
            store.add(detail::make_document(j["doc_id"].get<std::string>(), j["role"].get<std::string>(),
                                            j["language"].get<std::string>(), j["text"].get<std::string>(), line_no));
        } else {
            std::vector<std::string_view> cols;
            std::string_view rest(line);
            for (std::size_t pos; (pos = rest.find('\t')) != std::string_view::npos;) {
                cols.push_back(rest.substr(0, pos));
                rest.remove_prefix(pos + 1);
            }
            cols.push_back(rest);
            if (cols.size() != 4) {
                fail(ErrorKind::ingestion, "line " + std::to_string(line_no) + ": expected 4 tab-separated columns, got " +
                                               std::to_string(cols.size()));
            }
            store.add(detail::make_document(std::string(cols[0]), cols[1], std::string(cols[2]),
                                            detail::tsv_unescape(cols[3], line_no), line_no));
        }
    }
    return store;
}

/// Reads a documents file. Identical duplicates collapse; conflicting ones throw.
inline DocumentStore ingest_documents(const std::string& path, DocumentFormat format) {
    auto in = detail::open_input(path);
    return parse_documents(in, format);
}

inline void write_documents(std::ostream& out, const DocumentStore& docs, DocumentFormat format = DocumentFormat::jsonl) {
    for (const auto& d : docs) {
        if (format == DocumentFormat::jsonl) {
            out << to_json(d).dump() << '\n';
        } else {
            out << d.doc_id << '\t' << to_string(d.role) << '\t' << d.language << '\t' << detail::tsv_escape(d.text)
                << '\n';
        }
    }
}

inline void write_documents(const std::string& path, const DocumentStore& docs,
                            DocumentFormat format = DocumentFormat::jsonl) {
    auto out = detail::open_output(path);
    write_documents(out, docs, format);
}

inline std::vector<LabeledPair> parse_pairs(std::istream& in) {
    std::vector<LabeledPair> pairs;
    std::unordered_set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto where = "line " + std::to_string(line_no) + ": ";
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
            LabeledPair p;
            p.resume_id = j.at("resume_id").get<std::string>();
            p.vacancy_id = j.at("vacancy_id").get<std::string>();
            p.label = j.at("label").get<int>();
            auto source = parse_label_source(j.at("source").get<std::string>());
            if (!source) fail(ErrorKind::ingestion, where + "unknown label source");
            p.source = *source;
            if (p.label != label_of(p.source)) fail(ErrorKind::integrity, where + "label disagrees with source");
            if (!seen.insert(pair_key(p)).second) fail(ErrorKind::integrity, where + "duplicate (resume, vacancy) pair");
            pairs.push_back(std::move(p));
        } catch (const nlohmann::json::exception& e) {
            fail(ErrorKind::ingestion, where + e.what());
        }
    }
    return pairs;
}

inline std::vector<LabeledPair> read_pairs(const std::string& path) {
    auto in = detail::open_input(path);
    return parse_pairs(in);
}

inline void write_pairs(std::ostream& out, const std::vector<LabeledPair>& pairs) {
    for (const auto& p : pairs) out << to_json(p).dump() << '\n';
}

inline void write_pairs(const std::string& path, const std::vector<LabeledPair>& pairs) {
    auto out = detail::open_output(path);
    write_pairs(out, pairs);
}

// ---------------------------------------------------------------------------
// Synthetic corpus

/// Parameters of the topic-mixture generator.
///
/// Latent concepts are shared across languages; each language renders a
/// concept with its own surface word, and the consonant inventories of the
/// languages are disjoint, so no word is ever shared between two languages.
/// Concepts split into background terms and per-topic blocks; a topic block
/// has resume-side terms, vacancy-side terms, and a small set used by both.
struct SyntheticCorpusSpec {
    std::size_t n_vacancies = 420;
    std::size_t resume_pool_size = 3000;
    std::size_t vocab_size_per_language = 600;
    std::vector<std::string> languages{"en", "nl"};
    std::size_t n_latent_topics = 8;
    double tokens_per_resume_mean = 36.0;
    double tokens_per_vacancy_mean = 30.0;
    double positive_fraction = 126679.0 / 274407.0;
    double random_negative_fraction = 38004.0 / 274407.0;
    std::uint64_t seed = 0;

    /// Pairs-per-vacancy histogram shape.
    double mean_pairs_per_vacancy = 274407.0 / 23080.0;
    double single_pair_vacancy_fraction = 0.105;
    /// When set, per-vacancy counts are adjusted to hit this total exactly.
    std::optional<std::size_t> target_pairs;

    /// Share of a document's tokens drawn from its topic block.
    double topic_token_rate = 0.7;
    /// Share of topic tokens drawn from the block's side-shared terms.
    double shared_term_rate = 0.05;
    /// Share of latent concepts reserved for background terms.
    double background_fraction = 0.2;

    void validate() const {
        auto bad = [](const std::string& what) { fail(ErrorKind::spec, "synthetic corpus spec: " + what); };
        if (n_vacancies == 0 || resume_pool_size == 0 || vocab_size_per_language == 0 || n_latent_topics == 0) {
            bad("all counts must be positive");
        }
        if (languages.empty() || languages.size() > 4) bad("between 1 and 4 languages are supported");
        if (std::unordered_set<std::string>(languages.begin(), languages.end()).size() != languages.size()) {
            bad("languages must be unique");
        }
        auto in_unit = [](double x) { return x >= 0.0 && x <= 1.0; };
        if (!in_unit(positive_fraction) || !in_unit(random_negative_fraction)) bad("fractions must lie in [0, 1]");
        if (positive_fraction + random_negative_fraction > 1.0 + 1e-12) {
            bad("positive_fraction + random_negative_fraction exceeds 1");
        }
        if (!in_unit(single_pair_vacancy_fraction) || !in_unit(topic_token_rate) || !in_unit(shared_term_rate) ||
            !(background_fraction >= 0.0 && background_fraction < 1.0)) {
            bad("rates must lie in [0, 1]");
        }
        if (!(tokens_per_resume_mean >= 1.0) || !(tokens_per_vacancy_mean >= 1.0)) bad("token means must be >= 1");
        if (!(mean_pairs_per_vacancy >= 1.0)) bad("mean_pairs_per_vacancy must be >= 1");
        if (topic_block_size() < 3) bad("vocabulary too small for the number of topics");
    }

    std::size_t background_size() const {
        return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(vocab_size_per_language * background_fraction)));
    }

    std::size_t topic_block_size() const {
        const std::size_t bg = background_size();
        return vocab_size_per_language > bg ? (vocab_size_per_language - bg) / n_latent_topics : 0;
    }
};

inline void to_json(nlohmann::json& j, const SyntheticCorpusSpec& s) {
    j = {{"n_vacancies", s.n_vacancies},
         {"resume_pool_size", s.resume_pool_size},
         {"vocab_size_per_language", s.vocab_size_per_language},
         {"languages", s.languages},
         {"n_latent_topics", s.n_latent_topics},
         {"tokens_per_resume_mean", s.tokens_per_resume_mean},
         {"tokens_per_vacancy_mean", s.tokens_per_vacancy_mean},
         {"positive_fraction", s.positive_fraction},
         {"random_negative_fraction", s.random_negative_fraction},
         {"seed", s.seed},
         {"mean_pairs_per_vacancy", s.mean_pairs_per_vacancy},
         {"single_pair_vacancy_fraction", s.single_pair_vacancy_fraction},
         {"topic_token_rate", s.topic_token_rate},
         {"shared_term_rate", s.shared_term_rate},
         {"background_fraction", s.background_fraction}};
    if (s.target_pairs) j["target_pairs"] = *s.target_pairs;
}

inline void from_json(const nlohmann::json& j, SyntheticCorpusSpec& s) {
    SyntheticCorpusSpec d;
    s.n_vacancies = j.value("n_vacancies", d.n_vacancies);
    s.resume_pool_size = j.value("resume_pool_size", d.resume_pool_size);
    s.vocab_size_per_language = j.value("vocab_size_per_language", d.vocab_size_per_language);
    s.languages = j.value("languages", d.languages);
    s.n_latent_topics = j.value("n_latent_topics", d.n_latent_topics);
    s.tokens_per_resume_mean = j.value("tokens_per_resume_mean", d.tokens_per_resume_mean);
    s.tokens_per_vacancy_mean = j.value("tokens_per_vacancy_mean", d.tokens_per_vacancy_mean);
    s.positive_fraction = j.value("positive_fraction", d.positive_fraction);
    s.random_negative_fraction = j.value("random_negative_fraction", d.random_negative_fraction);
    s.seed = j.value("seed", d.seed);
    s.mean_pairs_per_vacancy = j.value("mean_pairs_per_vacancy", d.mean_pairs_per_vacancy);
    s.single_pair_vacancy_fraction = j.value("single_pair_vacancy_fraction", d.single_pair_vacancy_fraction);
    s.topic_token_rate = j.value("topic_token_rate", d.topic_token_rate);
    s.shared_term_rate = j.value("shared_term_rate", d.shared_term_rate);
    s.background_fraction = j.value("background_fraction", d.background_fraction);
    s.target_pairs.reset();
    if (j.contains("target_pairs") && !j["target_pairs"].is_null()) s.target_pairs = j["target_pairs"].get<std::size_t>();
}

/// Concept layout and surface forms of a synthetic corpus.
class SyntheticLexicon {
public:
    explicit SyntheticLexicon(const SyntheticCorpusSpec& spec)
        : n_topics_(spec.n_latent_topics), n_languages_(spec.languages.size()) {
        const std::size_t bg = spec.background_size();
        const std::size_t block = spec.topic_block_size();
        std::size_t n_shared = 0;
        if (spec.shared_term_rate > 0.0) {
            n_shared = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(block * 0.1)));
        }
        const std::size_t n_resume = (block - n_shared) / 2;
        const std::size_t n_vacancy = block - n_shared - n_resume;
        for (std::size_t c = 0; c < bg; ++c) background_.push_back(c);
        topics_.resize(n_topics_);
        for (std::size_t t = 0; t < n_topics_; ++t) {
            std::size_t c = bg + t * block;
            for (std::size_t k = 0; k < n_shared; ++k) topics_[t].shared.push_back(c++);
            for (std::size_t k = 0; k < n_resume; ++k) topics_[t].resume.push_back(c++);
            for (std::size_t k = 0; k < n_vacancy; ++k) topics_[t].vacancy.push_back(c++);
        }
        syllables_ = 2;
        std::size_t capacity = 25 * 25;
        while (capacity < spec.vocab_size_per_language) {
            capacity *= 25;
            ++syllables_;
        }
    }

    struct TopicBlock {
        std::vector<std::size_t> shared;
        std::vector<std::size_t> resume;
        std::vector<std::size_t> vacancy;
    };

    std::size_t n_topics() const { return n_topics_; }
    const std::vector<std::size_t>& background() const { return background_; }
    const TopicBlock& topic(std::size_t t) const { return topics_.at(t); }

    /// Surface word of a latent concept in a language (index into the configured languages).
    std::string surface(std::size_t language, std::size_t concept_id) const {
        static constexpr std::string_view consonants[4] = {"bkmpt", "dfgvz", "hjlrw", "cnqsx"};
        static constexpr std::string_view vowels = "aeiou";
        const auto cons = consonants[language % 4];
        std::string word;
        std::size_t x = concept_id;
        for (std::size_t s = 0; s < syllables_; ++s) {
            const std::size_t syl = x % 25;
            x /= 25;
            word.push_back(cons[syl / 5]);
            word.push_back(vowels[syl % 5]);
        }
        return word;
    }

private:
    std::size_t n_topics_;
    std::size_t n_languages_;
    std::size_t syllables_ = 2;
    std::vector<std::size_t> background_;
    std::vector<TopicBlock> topics_;
};

/// Latent assignments kept alongside the generated text.
struct SyntheticDocInfo {
    std::size_t topic = 0;
    std::size_t language = 0;
};

struct SyntheticCorpus {
    DocumentStore documents;
    std::vector<LabeledPair> pairs;
    std::unordered_map<std::string, SyntheticDocInfo> latent;
};

namespace detail {

inline std::size_t draw_length(Rng& rng, double mean) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(mean * rng.uniform(0.5, 1.5))));
}

inline std::size_t pick(Rng& rng, const std::vector<std::size_t>& items) { return items[rng.below(items.size())]; }

} // namespace detail

/// Draws concept ids for one document of the given role and topic.
inline std::vector<std::size_t> sample_concepts(Rng& rng, const SyntheticLexicon& lex, const SyntheticCorpusSpec& spec,
                                                Role role, std::size_t topic, std::size_t n_tokens) {
    const auto& block = lex.topic(topic);
    const auto& side = role == Role::resume ? block.resume : block.vacancy;
    std::vector<std::size_t> concepts;
    concepts.reserve(n_tokens);
    for (std::size_t i = 0; i < n_tokens; ++i) {
        if (rng.uniform() < spec.topic_token_rate) {
            const bool shared = !block.shared.empty() && rng.uniform() < spec.shared_term_rate;
            concepts.push_back(detail::pick(rng, shared ? block.shared : side));
        } else {
            concepts.push_back(detail::pick(rng, lex.background()));
        }
    }
    return concepts;
}

/// Renders concepts as sentences of 6 to 12 words ending in a period.
inline std::string render_text(Rng& rng, const SyntheticLexicon& lex, std::size_t language,
                               const std::vector<std::size_t>& concepts) {
    std::string text;
    std::size_t in_sentence = 0;
    std::size_t sentence_len = 6 + rng.below(7);
    for (std::size_t i = 0; i < concepts.size(); ++i) {
        std::string word = lex.surface(language, concepts[i]);
        if (in_sentence == 0) {
            if (!text.empty()) text.push_back(' ');
            word[0] = static_cast<char>(word[0] - 'a' + 'A');
        } else {
            text.push_back(' ');
        }
        text += word;
        if (++in_sentence == sentence_len || i + 1 == concepts.size()) {
            text.push_back('.');
            in_sentence = 0;
            sentence_len = 6 + rng.below(7);
        }
    }
    return text;
}

inline std::string resume_id(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "res-%06zu", i);
    return buf;
}

inline std::string vacancy_id(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "vac-%06zu", i);
    return buf;
}

/// Generates documents and labeled pairs. Deterministic for a fixed seed.
inline SyntheticCorpus generate_synthetic_corpus(const SyntheticCorpusSpec& spec) {
    spec.validate();
    const SyntheticLexicon lex(spec);
    Rng rng(derive_seed(spec.seed, 0));
    Rng text_rng(derive_seed(spec.seed, 1));
    const std::size_t n_vac = spec.n_vacancies;
    const std::size_t n_res = spec.resume_pool_size;
    const std::size_t n_lang = spec.languages.size();
    const std::size_t n_topics = spec.n_latent_topics;

    std::vector<SyntheticDocInfo> vac_info(n_vac), res_info(n_res);
    for (auto& v : vac_info) v = {static_cast<std::size_t>(rng.below(n_topics)), static_cast<std::size_t>(rng.below(n_lang))};
    for (std::size_t i = 0; i < n_res; ++i) {
        // The first resumes mirror the vacancy topics so every vacancy has at
        // least one same-topic candidate, even in tiny pools.
        const std::size_t topic = i < n_vac ? vac_info[i].topic : static_cast<std::size_t>(rng.below(n_topics));
        res_info[i] = {topic, static_cast<std::size_t>(rng.below(n_lang))};
    }

    // Pairs per vacancy: a fixed share of single-pair vacancies, the rest 2 + geometric.
    std::vector<std::size_t> counts(n_vac, 0);
    std::vector<std::size_t> order(n_vac);
    for (std::size_t i = 0; i < n_vac; ++i) order[i] = i;
    rng.shuffle(order);
    const auto n_single = static_cast<std::size_t>(std::lround(spec.single_pair_vacancy_fraction * n_vac));
    const std::size_t n_multi = n_vac - n_single;
    double p_geo = 1.0;
    if (n_multi > 0) {
        const double mean_multi = (spec.mean_pairs_per_vacancy * n_vac - n_single) / static_cast<double>(n_multi);
        if (mean_multi > 2.0) p_geo = 1.0 / (mean_multi - 1.0);
    }
    for (std::size_t k = 0; k < n_vac; ++k) {
        const std::size_t v = order[k];
        counts[v] = k < n_single ? 1 : 2 + rng.geometric(p_geo);
        counts[v] = std::min(counts[v], n_res);
    }
    if (spec.target_pairs) {
        const std::size_t target = *spec.target_pairs;
        std::size_t total = 0;
        for (auto c : counts) total += c;
        std::vector<std::size_t> multi(order.begin() + static_cast<std::ptrdiff_t>(n_single), order.end());
        if (multi.empty() && total != target) fail(ErrorKind::spec, "target_pairs unreachable with only single-pair vacancies");
        std::size_t guard = 0;
        const std::size_t guard_limit = 64 * (n_vac + (total > target ? total - target : target - total)) + 1024;
        while (total != target) {
            if (++guard > guard_limit) fail(ErrorKind::spec, "target_pairs unreachable for this pool size");
            const std::size_t v = multi[rng.below(multi.size())];
            if (total < target && counts[v] < n_res) {
                ++counts[v];
                ++total;
            } else if (total > target && counts[v] > 2) {
                --counts[v];
                --total;
            }
        }
    }

    std::size_t n_pairs = 0;
    for (auto c : counts) n_pairs += c;
    const auto n_pos = static_cast<std::size_t>(std::llround(spec.positive_fraction * static_cast<double>(n_pairs)));
    const auto n_rand = std::min(n_pairs - n_pos, static_cast<std::size_t>(std::llround(
                                                      spec.random_negative_fraction * static_cast<double>(n_pairs))));
    std::vector<LabelSource> slots;
    slots.reserve(n_pairs);
    slots.insert(slots.end(), n_pos, LabelSource::consultant_positive);
    slots.insert(slots.end(), n_rand, LabelSource::random_negative);
    slots.insert(slots.end(), n_pairs - n_pos - n_rand, LabelSource::consultant_negative);
    rng.shuffle(slots);

    std::vector<std::vector<std::size_t>> by_topic(n_topics);
    for (std::size_t i = 0; i < n_res; ++i) by_topic[res_info[i].topic].push_back(i);

    SyntheticCorpus out;
    out.pairs.reserve(n_pairs);
    std::size_t slot = 0;
    std::unordered_set<std::size_t> used;
    for (std::size_t v = 0; v < n_vac; ++v) {
        used.clear();
        const std::size_t topic = vac_info[v].topic;
        for (std::size_t c = 0; c < counts[v]; ++c, ++slot) {
            const LabelSource source = slots[slot];
            auto eligible = [&](std::size_t r) {
                if (used.count(r)) return false;
                if (source == LabelSource::consultant_positive) return res_info[r].topic == topic;
                if (source == LabelSource::consultant_negative) return res_info[r].topic != topic;
                return true;
            };
            const std::vector<std::size_t>* pool = nullptr;
            if (source == LabelSource::consultant_positive) pool = &by_topic[topic];
            std::optional<std::size_t> chosen;
            const std::size_t pool_n = pool ? pool->size() : n_res;
            for (int attempt = 0; attempt < 64 && pool_n > 0; ++attempt) {
                const std::size_t r = pool ? (*pool)[rng.below(pool_n)] : rng.below(pool_n);
                if (eligible(r)) {
                    chosen = r;
                    break;
                }
            }
            if (!chosen) {
                std::vector<std::size_t> candidates;
                for (std::size_t k = 0; k < pool_n; ++k) {
                    const std::size_t r = pool ? (*pool)[k] : k;
                    if (eligible(r)) candidates.push_back(r);
                }
                if (candidates.empty()) {
                    fail(ErrorKind::spec, "infeasible spec: no eligible resume for a " + std::string(to_string(source)) +
                                              " pair of vacancy " + vacancy_id(v));
                }
                chosen = candidates[rng.below(candidates.size())];
            }
            used.insert(*chosen);
            out.pairs.push_back(make_pair(resume_id(*chosen), vacancy_id(v), source));
        }
    }

    auto emit = [&](std::string id, Role role, const SyntheticDocInfo& info, double mean_tokens) {
        const auto concepts = sample_concepts(text_rng, lex, spec, role, info.topic, detail::draw_length(text_rng, mean_tokens));
        Document d{id, role, spec.languages[info.language], render_text(text_rng, lex, info.language, concepts),
                   concepts.size()};
        out.latent.emplace(id, info);
        out.documents.add(std::move(d));
    };
    for (std::size_t v = 0; v < n_vac; ++v) emit(vacancy_id(v), Role::vacancy, vac_info[v], spec.tokens_per_vacancy_mean);
    for (std::size_t r = 0; r < n_res; ++r) emit(resume_id(r), Role::resume, res_info[r], spec.tokens_per_resume_mean);
    return out;
}

// ---------------------------------------------------------------------------
// Random negatives

/// Appends target_count pairs drawn uniformly without replacement from the
/// (resume, vacancy) combinations absent from `pairs`.
inline std::vector<LabeledPair> add_random_negatives(const std::vector<LabeledPair>& pairs, const DocumentStore& documents,
                                                     std::size_t target_count, std::uint64_t seed) {
    if (target_count == 0) return pairs;
    std::vector<const Document*> resumes, vacancies;
    std::unordered_map<std::string, std::uint64_t> res_idx, vac_idx;
    for (const auto& d : documents) {
        if (d.role == Role::resume) {
            res_idx.emplace(d.doc_id, resumes.size());
            resumes.push_back(&d);
        } else {
            vac_idx.emplace(d.doc_id, vacancies.size());
            vacancies.push_back(&d);
        }
    }
    const std::uint64_t n_v = vacancies.size();
    const std::uint64_t total = static_cast<std::uint64_t>(resumes.size()) * n_v;
    std::unordered_set<std::uint64_t> taken;
    taken.reserve(pairs.size() + target_count);
    for (const auto& p : pairs) {
        auto r = res_idx.find(p.resume_id);
        auto v = vac_idx.find(p.vacancy_id);
        if (r == res_idx.end() || v == vac_idx.end()) {
            fail(ErrorKind::integrity, "pair (" + p.resume_id + ", " + p.vacancy_id + ") references an unknown document");
        }
        taken.insert(r->second * n_v + v->second);
    }
    const std::uint64_t free = total - taken.size();
    if (target_count > free) {
        fail(ErrorKind::capacity, "requested " + std::to_string(target_count) + " random negatives but only " +
                                      std::to_string(free) + " free combinations exist");
    }

    Rng rng(seed);
    std::vector<std::uint64_t> drawn;
    drawn.reserve(target_count);
    if (total <= (std::uint64_t{1} << 22) || 2 * (taken.size() + target_count) > total) {
        std::vector<std::uint64_t> complement;
        complement.reserve(free);
        for (std::uint64_t k = 0; k < total; ++k) {
            if (!taken.count(k)) complement.push_back(k);
        }
        for (std::size_t i = 0; i < target_count; ++i) {
            const std::size_t j = i + rng.below(complement.size() - i);
            std::swap(complement[i], complement[j]);
            drawn.push_back(complement[i]);
        }
    } else {
        while (drawn.size() < target_count) {
            const std::uint64_t k = rng.below(total);
            if (taken.insert(k).second) drawn.push_back(k);
        }
    }

    std::vector<LabeledPair> out = pairs;
    out.reserve(pairs.size() + target_count);
    for (std::uint64_t k : drawn) {
        out.push_back(make_pair(resumes[k / n_v]->doc_id, vacancies[k % n_v]->doc_id, LabelSource::random_negative));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Splitting

struct SplitFractions {
    double train = 0.8;
    double validation = 0.1;
    double test = 0.1;
};

struct DatasetSplit {
    std::vector<LabeledPair> train;
    std::vector<LabeledPair> validation;
    std::vector<LabeledPair> test;
    std::uint64_t seed = 0;
};

/// Shuffles pairs and cuts them. Validation and test each get
/// round(fraction * N); train takes the remainder.
inline DatasetSplit split_dataset(const std::vector<LabeledPair>& pairs, SplitFractions fractions, std::uint64_t seed) {
    if (fractions.train < 0 || fractions.validation < 0 || fractions.test < 0 ||
        std::abs(fractions.train + fractions.validation + fractions.test - 1.0) > 1e-9) {
        fail(ErrorKind::spec, "split fractions must be non-negative and sum to 1");
    }
    const std::size_t n = pairs.size();
    if (n < 3) fail(ErrorKind::spec, "split needs at least 3 pairs");
    const auto n_val = static_cast<std::size_t>(std::llround(fractions.validation * static_cast<double>(n)));
    const auto n_test = static_cast<std::size_t>(std::llround(fractions.test * static_cast<double>(n)));
    if (n_val + n_test > n) fail(ErrorKind::spec, "split fractions leave no room for training pairs");

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(seed);
    rng.shuffle(order);

    DatasetSplit split;
    split.seed = seed;
    const std::size_t n_train = n - n_val - n_test;
    for (std::size_t k = 0; k < n; ++k) {
        auto& part = k < n_train ? split.train : (k < n_train + n_val ? split.validation : split.test);
        part.push_back(pairs[order[k]]);
    }
    return split;
}

// ---------------------------------------------------------------------------
// Statistics

struct CorpusStats {
    std::size_t n_pairs = 0;
    std::size_t n_positive = 0;
    std::size_t n_consultant_negative = 0;
    std::size_t n_random_negative = 0;
    std::size_t n_unique_resumes = 0;
    std::size_t n_unique_vacancies = 0;
    std::map<std::size_t, std::size_t> pairs_per_vacancy_histogram;
    double mean_tokens_resume = 0.0;
    double mean_tokens_vacancy = 0.0;

    /// Share of vacancies paired with exactly one resume.
    double single_pair_vacancy_fraction() const {
        if (n_unique_vacancies == 0) return 0.0;
        auto it = pairs_per_vacancy_histogram.find(1);
        return it == pairs_per_vacancy_histogram.end() ? 0.0
                                                        : static_cast<double>(it->second) / n_unique_vacancies;
    }
};

inline CorpusStats compute_stats(const DocumentStore& documents, const std::vector<LabeledPair>& pairs) {
    CorpusStats s;
    std::map<std::string, std::size_t> per_vacancy;
    std::unordered_set<std::string> resumes;
    for (const auto& p : pairs) {
        const Document* r = documents.find(p.resume_id);
        const Document* v = documents.find(p.vacancy_id);
        if (!r || !v || r->role != Role::resume || v->role != Role::vacancy) {
            fail(ErrorKind::integrity, "pair (" + p.resume_id + ", " + p.vacancy_id + ") has a dangling reference");
        }
        ++s.n_pairs;
        switch (p.source) {
        case LabelSource::consultant_positive: ++s.n_positive; break;
        case LabelSource::consultant_negative: ++s.n_consultant_negative; break;
        case LabelSource::random_negative: ++s.n_random_negative; break;
        }
        ++per_vacancy[p.vacancy_id];
        resumes.insert(p.resume_id);
    }
    s.n_unique_resumes = resumes.size();
    s.n_unique_vacancies = per_vacancy.size();
    double vac_tokens = 0.0;
    for (const auto& [id, count] : per_vacancy) {
        ++s.pairs_per_vacancy_histogram[count];
        vac_tokens += static_cast<double>(documents.at(id).token_count);
    }
    // Sorted so the floating sum is order-stable.
    std::vector<std::string> resume_ids(resumes.begin(), resumes.end());
    std::sort(resume_ids.begin(), resume_ids.end());
    double res_tokens = 0.0;
    for (const auto& id : resume_ids) res_tokens += static_cast<double>(documents.at(id).token_count);
    if (s.n_unique_resumes) s.mean_tokens_resume = res_tokens / s.n_unique_resumes;
    if (s.n_unique_vacancies) s.mean_tokens_vacancy = vac_tokens / s.n_unique_vacancies;
    return s;
}

inline nlohmann::json to_json(const CorpusStats& s) {
    nlohmann::json hist = nlohmann::json::object();
    for (const auto& [bucket, count] : s.pairs_per_vacancy_histogram) hist[std::to_string(bucket)] = count;
    return {{"n_pairs", s.n_pairs},
            {"n_positive", s.n_positive},
            {"n_consultant_negative", s.n_consultant_negative},
            {"n_random_negative", s.n_random_negative},
            {"n_unique_resumes", s.n_unique_resumes},
            {"n_unique_vacancies", s.n_unique_vacancies},
            {"pairs_per_vacancy_histogram", hist},
            {"mean_tokens_resume", s.mean_tokens_resume},
            {"mean_tokens_vacancy", s.mean_tokens_vacancy}};
}

inline CorpusStats stats_from_json(const nlohmann::json& j) {
    CorpusStats s;
    s.n_pairs = j.at("n_pairs").get<std::size_t>();
    s.n_positive = j.at("n_positive").get<std::size_t>();
    s.n_consultant_negative = j.at("n_consultant_negative").get<std::size_t>();
    s.n_random_negative = j.at("n_random_negative").get<std::size_t>();
    s.n_unique_resumes = j.at("n_unique_resumes").get<std::size_t>();
    s.n_unique_vacancies = j.at("n_unique_vacancies").get<std::size_t>();
    for (const auto& [bucket, count] : j.value("pairs_per_vacancy_histogram", nlohmann::json::object()).items()) {
        s.pairs_per_vacancy_histogram[std::stoull(bucket)] = count.get<std::size_t>();
    }
    s.mean_tokens_resume = j.value("mean_tokens_resume", 0.0);
    s.mean_tokens_vacancy = j.value("mean_tokens_vacancy", 0.0);
    return s;
}

} // namespace jobmatch::corpus
