// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "jobmatch/corpus.hpp"

using namespace jobmatch;
using namespace jobmatch::corpus;

namespace {

std::string doc_line(const std::string& id, const std::string& role, const std::string& text) {
    return nlohmann::json{{"doc_id", id}, {"role", role}, {"language", "en"}, {"text", text}}.dump() + "\n";
}

ErrorKind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "no error raised";
    return ErrorKind::usage;
}

DocumentStore grid_store(std::size_t n_res, std::size_t n_vac) {
    DocumentStore s;
    for (std::size_t i = 0; i < n_res; ++i) s.add({resume_id(i), Role::resume, "en", "r", 1});
    for (std::size_t i = 0; i < n_vac; ++i) s.add({vacancy_id(i), Role::vacancy, "en", "v", 1});
    return s;
}

nlohmann::json reference_counts() {
    std::ifstream in(std::string(JOBMATCH_CONFIG_DIR) + "/reference_counts.json");
    return nlohmann::json::parse(in);
}

} // namespace

TEST(Ingest, ThreeRecords) {
    std::istringstream in(doc_line("r1", "resume", "a") + doc_line("v1", "vacancy", "b") + doc_line("r2", "resume", "c"));
    EXPECT_EQ(parse_documents(in, DocumentFormat::jsonl).size(), 3u);
}

TEST(Ingest, MissingRoleNamesLine) {
    std::istringstream in(doc_line("r1", "resume", "a") + R"({"doc_id":"x","language":"en","text":"t"})" "\n");
    try {
        parse_documents(in, DocumentFormat::jsonl);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::ingestion);
        EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
    }
}

TEST(Ingest, DuplicateSameTextCollapses) {
    std::istringstream in(doc_line("r1", "resume", "same") + doc_line("r1", "resume", "same"));
    EXPECT_EQ(parse_documents(in, DocumentFormat::jsonl).size(), 1u);
}

TEST(Ingest, DuplicateConflictingTextIsConflict) {
    std::istringstream in(doc_line("r1", "resume", "one") + doc_line("r1", "resume", "two"));
    EXPECT_EQ(kind_of([&] { parse_documents(in, DocumentFormat::jsonl); }), ErrorKind::conflict);
}

TEST(Ingest, TsvRoundTrip) {
    DocumentStore s;
    s.add({"r1", Role::resume, "nl", "tab\there\nnewline \\ slash", 4});
    s.add({"v1", Role::vacancy, "en", "plain", 1});
    std::stringstream buf;
    write_documents(buf, s, DocumentFormat::tsv);
    const auto back = parse_documents(buf, DocumentFormat::tsv);
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back.at("r1").text, s.at("r1").text);
    EXPECT_EQ(back.at("v1").role, Role::vacancy);
}

TEST(Pairs, JsonlRoundTrip) {
    std::vector<LabeledPair> pairs = {make_pair("r1", "v1", LabelSource::consultant_positive),
                                      make_pair("r2", "v1", LabelSource::random_negative)};
    std::stringstream buf;
    write_pairs(buf, pairs);
    EXPECT_EQ(parse_pairs(buf), pairs);
}

TEST(Generate, LabelMixMatchesFractions) {
    SyntheticCorpusSpec spec;
    spec.seed = 9;
    const auto c = generate_synthetic_corpus(spec);
    const auto st = compute_stats(c.documents, c.pairs);
    const double n = static_cast<double>(st.n_pairs);
    EXPECT_LE(std::abs(static_cast<double>(st.n_positive) - spec.positive_fraction * n), 1.0);
    EXPECT_LE(std::abs(static_cast<double>(st.n_random_negative) - spec.random_negative_fraction * n), 1.0);
    EXPECT_EQ(st.n_pairs, st.n_positive + st.n_consultant_negative + st.n_random_negative);
}

TEST(Generate, DegenerateSinglePair) {
    SyntheticCorpusSpec spec;
    spec.n_vacancies = 1;
    spec.resume_pool_size = 1;
    spec.positive_fraction = 1.0;
    spec.random_negative_fraction = 0.0;
    const auto c = generate_synthetic_corpus(spec);
    ASSERT_EQ(c.pairs.size(), 1u);
    EXPECT_EQ(c.pairs[0].label, 1);
    EXPECT_EQ(c.pairs[0].source, LabelSource::consultant_positive);
}

TEST(Generate, Deterministic) {
    SyntheticCorpusSpec spec;
    spec.seed = 4;
    spec.n_vacancies = 60;
    spec.resume_pool_size = 300;
    std::stringstream a, b, pa, pb;
    const auto c1 = generate_synthetic_corpus(spec);
    const auto c2 = generate_synthetic_corpus(spec);
    write_documents(a, c1.documents);
    write_documents(b, c2.documents);
    write_pairs(pa, c1.pairs);
    write_pairs(pb, c2.pairs);
    EXPECT_EQ(a.str(), b.str());
    EXPECT_EQ(pa.str(), pb.str());
}

TEST(Generate, InfeasibleFractionsAreSpecError) {
    SyntheticCorpusSpec spec;
    spec.positive_fraction = 0.7;
    spec.random_negative_fraction = 0.5;
    EXPECT_EQ(kind_of([&] { generate_synthetic_corpus(spec); }), ErrorKind::spec);
}

TEST(Generate, TargetPairsIsExact) {
    SyntheticCorpusSpec spec;
    spec.seed = 2;
    spec.target_pairs = 5000;
    EXPECT_EQ(generate_synthetic_corpus(spec).pairs.size(), 5000u);
}

TEST(Generate, LanguagesShareNoSurfaceWord) {
    SyntheticCorpusSpec spec;
    const SyntheticLexicon lex(spec);
    std::set<std::string> en, nl;
    for (std::size_t c = 0; c < spec.vocab_size_per_language; ++c) {
        en.insert(lex.surface(0, c));
        nl.insert(lex.surface(1, c));
    }
    EXPECT_EQ(en.size(), spec.vocab_size_per_language);
    for (const auto& w : en) EXPECT_EQ(nl.count(w), 0u) << w;
}

TEST(Generate, PositivesShareTopic) {
    SyntheticCorpusSpec spec;
    spec.seed = 8;
    const auto c = generate_synthetic_corpus(spec);
    for (const auto& p : c.pairs) {
        const bool same = c.latent.at(p.resume_id).topic == c.latent.at(p.vacancy_id).topic;
        if (p.source == LabelSource::consultant_positive) EXPECT_TRUE(same);
        if (p.source == LabelSource::consultant_negative) EXPECT_FALSE(same);
    }
}

TEST(Stats, FullScaleIdentities) {
    const auto fx = reference_counts();
    SyntheticCorpusSpec spec;
    spec.seed = 1;
    spec.n_vacancies = fx["n_unique_vacancies"];
    spec.resume_pool_size = fx["n_unique_resumes"];
    spec.target_pairs = fx["n_pairs"].get<std::size_t>();
    spec.tokens_per_resume_mean = 2.0;
    spec.tokens_per_vacancy_mean = 2.0;
    const auto c = generate_synthetic_corpus(spec);
    const auto st = compute_stats(c.documents, c.pairs);
    EXPECT_EQ(st.n_pairs, fx["n_pairs"].get<std::size_t>());
    EXPECT_EQ(st.n_unique_vacancies, fx["n_unique_vacancies"].get<std::size_t>());
    EXPECT_LE(st.n_unique_resumes, fx["n_unique_resumes"].get<std::size_t>());
    EXPECT_EQ(st.n_pairs, st.n_positive + st.n_consultant_negative + st.n_random_negative);
    EXPECT_NEAR(static_cast<double>(st.n_positive), fx["n_positive"].get<double>(), 1.0);
    EXPECT_NEAR(static_cast<double>(st.n_random_negative), fx["n_random_negative"].get<double>(), 1.0);
    std::size_t hist_pairs = 0, hist_vacancies = 0;
    for (const auto& [bucket, count] : st.pairs_per_vacancy_histogram) {
        hist_pairs += bucket * count;
        hist_vacancies += count;
    }
    EXPECT_EQ(hist_pairs, st.n_pairs);
    EXPECT_EQ(hist_vacancies, st.n_unique_vacancies);
    EXPECT_NEAR(st.single_pair_vacancy_fraction(), fx["single_pair_vacancy_fraction"].get<double>(), 0.01);
}

TEST(Stats, SinglePair) {
    const auto s = grid_store(1, 1);
    const auto st = compute_stats(s, {make_pair(resume_id(0), vacancy_id(0), LabelSource::consultant_positive)});
    EXPECT_EQ(st.pairs_per_vacancy_histogram, (std::map<std::size_t, std::size_t>{{1, 1}}));
}

TEST(Stats, HandCountedHistogram) {
    const auto s = grid_store(3, 2);
    std::vector<LabeledPair> pairs;
    for (std::size_t r = 0; r < 3; ++r) pairs.push_back(make_pair(resume_id(r), vacancy_id(0), LabelSource::consultant_negative));
    pairs.push_back(make_pair(resume_id(0), vacancy_id(1), LabelSource::consultant_positive));
    const auto st = compute_stats(s, pairs);
    EXPECT_EQ(st.pairs_per_vacancy_histogram, (std::map<std::size_t, std::size_t>{{1, 1}, {3, 1}}));
    EXPECT_DOUBLE_EQ(st.single_pair_vacancy_fraction(), 0.5);
}

TEST(Stats, DanglingReferenceIsIntegrityError) {
    const auto s = grid_store(1, 1);
    EXPECT_EQ(kind_of([&] { compute_stats(s, {make_pair("ghost", vacancy_id(0), LabelSource::consultant_negative)}); }),
              ErrorKind::integrity);
}

TEST(RandomNegatives, FullScale) {
    const auto fx = reference_counts();
    const std::size_t n_res = fx["n_unique_resumes"], n_vac = fx["n_unique_vacancies"];
    const auto store = grid_store(n_res, n_vac);
    const std::size_t existing = fx["n_pairs"].get<std::size_t>() - fx["n_random_negative"].get<std::size_t>();
    ASSERT_EQ(existing, 236403u);
    std::vector<LabeledPair> pairs;
    for (std::size_t i = 0; i < existing; ++i) {
        pairs.push_back(make_pair(resume_id(i % n_res), vacancy_id(i % n_vac),
                                  i % 2 ? LabelSource::consultant_negative : LabelSource::consultant_positive));
    }
    const auto out = add_random_negatives(pairs, store, fx["n_random_negative"], 7);
    EXPECT_EQ(out.size(), fx["n_pairs"].get<std::size_t>());
    std::set<std::string> keys;
    std::size_t random = 0;
    for (const auto& p : out) {
        EXPECT_TRUE(keys.insert(pair_key(p)).second);
        if (p.source == LabelSource::random_negative) {
            ++random;
            EXPECT_EQ(p.label, 0);
        }
    }
    EXPECT_EQ(random, 38004u);
}

TEST(RandomNegatives, ZeroTargetIsNoop) {
    const auto store = grid_store(2, 2);
    std::vector<LabeledPair> pairs = {make_pair(resume_id(0), vacancy_id(0), LabelSource::consultant_positive)};
    EXPECT_EQ(add_random_negatives(pairs, store, 0, 1), pairs);
}

TEST(RandomNegatives, FillsExactComplement) {
    const auto store = grid_store(5, 2);
    std::vector<LabeledPair> pairs;
    std::set<std::string> all;
    for (std::size_t r = 0; r < 5; ++r) {
        for (std::size_t v = 0; v < 2; ++v) all.insert(pair_key(make_pair(resume_id(r), vacancy_id(v), LabelSource::random_negative)));
    }
    for (std::size_t k = 0; k < 8; ++k) pairs.push_back(make_pair(resume_id(k / 2), vacancy_id(k % 2), LabelSource::consultant_negative));
    std::set<std::string> complement = all;
    for (const auto& p : pairs) complement.erase(pair_key(p));
    const auto out = add_random_negatives(pairs, store, 2, 3);
    ASSERT_EQ(out.size(), 10u);
    std::set<std::string> added;
    for (std::size_t i = 8; i < 10; ++i) {
        added.insert(pair_key(out[i]));
        EXPECT_EQ(out[i].label, 0);
    }
    EXPECT_EQ(added, complement);
}

TEST(RandomNegatives, CapacityError) {
    const auto store = grid_store(2, 1);
    EXPECT_EQ(kind_of([&] { add_random_negatives({}, store, 3, 1); }), ErrorKind::capacity);
}

TEST(RandomNegatives, DeterministicAndDisjoint) {
    SyntheticCorpusSpec spec;
    spec.seed = 3;
    spec.n_vacancies = 40;
    spec.resume_pool_size = 200;
    spec.mean_pairs_per_vacancy = 4.0;
    spec.random_negative_fraction = 0.0;
    const auto c = generate_synthetic_corpus(spec);
    const auto a = add_random_negatives(c.pairs, c.documents, 500, 17);
    EXPECT_EQ(a, add_random_negatives(c.pairs, c.documents, 500, 17));
    std::set<std::string> before;
    for (const auto& p : c.pairs) before.insert(pair_key(p));
    for (std::size_t i = c.pairs.size(); i < a.size(); ++i) EXPECT_EQ(before.count(pair_key(a[i])), 0u);
}

TEST(Split, FullScaleSizes) {
    const auto fx = reference_counts();
    std::vector<LabeledPair> pairs(fx["n_pairs"].get<std::size_t>());
    const auto s = split_dataset(pairs, {}, 1);
    EXPECT_EQ(s.train.size(), fx["split"]["train"].get<std::size_t>());
    EXPECT_EQ(s.validation.size(), fx["split"]["validation"].get<std::size_t>());
    EXPECT_EQ(s.test.size(), fx["split"]["test"].get<std::size_t>());
}

TEST(Split, TenPairs) {
    std::vector<LabeledPair> pairs(10);
    const auto s = split_dataset(pairs, {}, 1);
    EXPECT_EQ(s.train.size(), 8u);
    EXPECT_EQ(s.validation.size(), 1u);
    EXPECT_EQ(s.test.size(), 1u);
}

TEST(Split, DeterministicDisjointCover) {
    std::vector<LabeledPair> pairs;
    for (std::size_t i = 0; i < 997; ++i) pairs.push_back(make_pair(resume_id(i), vacancy_id(i % 13), LabelSource::consultant_negative));
    const auto a = split_dataset(pairs, {}, 42);
    const auto b = split_dataset(pairs, {}, 42);
    EXPECT_EQ(a.train, b.train);
    EXPECT_EQ(a.validation, b.validation);
    EXPECT_EQ(a.test, b.test);
    std::multiset<std::string> all;
    for (const auto* part : {&a.train, &a.validation, &a.test}) {
        for (const auto& p : *part) all.insert(pair_key(p));
    }
    std::multiset<std::string> expected;
    for (const auto& p : pairs) expected.insert(pair_key(p));
    EXPECT_EQ(all, expected);
    EXPECT_NE(split_dataset(pairs, {}, 43).train, a.train);
}

TEST(Split, BadFractionsAreSpecError) {
    std::vector<LabeledPair> pairs(10);
    EXPECT_EQ(kind_of([&] { split_dataset(pairs, {0.8, 0.1, 0.2}, 1); }), ErrorKind::spec);
    EXPECT_EQ(kind_of([&] { split_dataset(std::vector<LabeledPair>(2), {}, 1); }), ErrorKind::spec);
}
