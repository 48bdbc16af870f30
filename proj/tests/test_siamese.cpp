// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "jobmatch/siamese.hpp"

using namespace jobmatch;
using namespace jobmatch::siamese;

namespace {

encoder::EncoderConfig tiny_config(std::uint64_t seed = 3) {
    encoder::EncoderConfig c;
    c.embed_dim = 8;
    c.n_layers = 2;
    c.n_heads = 2;
    c.ff_dim = 16;
    c.seed = seed;
    c.embedding_init_std = 0.5;
    return c;
}

textprep::Vocabulary tiny_vocab() {
    return textprep::Vocabulary::fit(std::vector<std::string>{"weld steel pipe", "drive truck route", "cook kitchen menu"});
}

struct Fixture {
    corpus::DocumentStore store;
    corpus::DatasetSplit split;
};

Fixture toy_corpus() {
    Fixture f;
    const std::vector<std::string> texts = {"weld steel pipe", "weld pipe steel steel", "drive truck route", "truck route drive",
                                            "cook kitchen menu", "menu cook"};
    for (std::size_t i = 0; i < texts.size(); ++i) {
        f.store.add({corpus::resume_id(i), corpus::Role::resume, "en", texts[i], 3});
        f.store.add({corpus::vacancy_id(i), corpus::Role::vacancy, "en", texts[i], 3});
    }
    for (std::size_t r = 0; r < texts.size(); ++r) {
        for (std::size_t v = 0; v < texts.size(); ++v) {
            f.split.train.push_back(corpus::make_pair(corpus::resume_id(r), corpus::vacancy_id(v),
                                                      r / 2 == v / 2 ? corpus::LabelSource::consultant_positive
                                                                     : corpus::LabelSource::consultant_negative));
        }
    }
    return f;
}

Vector vec(std::initializer_list<double> xs) {
    Vector v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) v(i++) = x;
    return v;
}

} // namespace

TEST(RegressionLoss, Examples) {
    const std::vector<double> u{1, 2}, v{2, 4}, w{-2, 1};
    EXPECT_NEAR(regression_loss(u, v, 1), 0.0, 1e-15);
    EXPECT_DOUBLE_EQ(regression_loss(u, w, 1), 1.0);
}

TEST(RegressionLoss, BatchMean) {
    const std::vector<double> a{1, 0}, b{0.5, std::sqrt(0.75)}, c{0, 1};
    const double l = mean_loss(2, [&](std::size_t i) { return i == 0 ? regression_loss(a, b, 1) : regression_loss(a, c, 0); });
    EXPECT_NEAR(l, 0.125, 1e-12);
}

TEST(RegressionLoss, ShapeMismatch) {
    const std::vector<double> a{1, 0}, b{1, 0, 0};
    EXPECT_THROW(regression_loss(a, b, 1), Error);
}

TEST(ClassificationLoss, ZeroHeadIsLn2) {
    const std::vector<double> u{0.3, -1, 2}, v{1, 1, 0};
    EXPECT_NEAR(classification_loss(u, v, 1, Matrix::Zero(2, 9)), std::log(2.0), 1e-12);
}

TEST(ClassificationLoss, ClosedFormLogits) {
    // With u = (1), v = (0): features are (1, 0, 1); the head picks logits directly.
    Matrix head = Matrix::Zero(2, 3);
    head(0, 0) = 10;
    head(1, 0) = -10;
    EXPECT_NEAR(classification_loss_grad(vec({1}), vec({0}), 0, head).loss, 2.06e-9, 1e-10);
    head(0, 0) = 1;
    head(1, 0) = 2;
    EXPECT_NEAR(classification_loss_grad(vec({1}), vec({0}), 1, head).loss, std::log1p(std::exp(-1.0)), 1e-12);
    EXPECT_NEAR(classification_loss_grad(vec({1}), vec({0}), 1, head).loss, 0.313262, 1e-6);
}

TEST(ClassificationLoss, HeadShapeChecked) { EXPECT_THROW(classification_loss_grad(vec({1, 2}), vec({0, 1}), 0, Matrix::Zero(2, 5)), Error); }

TEST(GradientCheck, BothObjectives) {
    auto m = make_model(tiny_vocab(), tiny_config());
    m.head = init_head(8, 4);
    const auto r1 = encoder::prepare_document("weld steel pipe", PoolingStrategy::mean_tokens, m.vocab);
    const auto v1 = encoder::prepare_document("steel weld truck route", PoolingStrategy::mean_tokens, m.vocab);
    const auto r2 = encoder::prepare_document("cook menu", PoolingStrategy::mean_tokens, m.vocab);
    const std::vector<PairExample> probes = {{&r1, &v1, 1}, {&r2, &v1, 0}};
    EXPECT_LT(gradient_check(m, Objective::regression, probes), 1e-4);
    EXPECT_LT(gradient_check(m, Objective::classification, probes), 1e-4);
}

TEST(GradientCheck, ZeroLossIsStationary) {
    const auto m = make_model(tiny_vocab(), tiny_config());
    const auto d = encoder::prepare_document("weld steel pipe", PoolingStrategy::mean_tokens, m.vocab);
    const std::vector<PairExample> probes = {{&d, &d, 1}};
    auto grads = encoder::zeros_like(m.encoder);
    EXPECT_NEAR(batch_loss(m, Objective::regression, probes, &grads, nullptr), 0.0, 1e-15);
    double max_grad = 0.0;
    encoder::for_each_parameter([&](const std::string&, const Matrix& g) { max_grad = std::max(max_grad, g.cwiseAbs().maxCoeff()); },
                                grads);
    EXPECT_LT(max_grad, 1e-7);
}

TEST(Train, StepCount) {
    const auto f = toy_corpus();
    TrainingConfig cfg;
    cfg.epochs = 5;
    cfg.batch_size = 4;
    auto split = f.split;
    split.train.resize(33);
    const auto r = train(make_model(tiny_vocab(), tiny_config()), split, f.store, cfg);
    EXPECT_EQ(r.report.optimizer_steps, 5u * 9u);
    EXPECT_EQ(r.report.epoch_losses.size(), 5u);
    EXPECT_FALSE(r.model.head.has_value());
}

TEST(Train, ZeroLearningRateKeepsParameters) {
    const auto f = toy_corpus();
    TrainingConfig cfg;
    cfg.learning_rate = 1e-300;
    cfg.epochs = 3;
    for (auto obj : {Objective::regression, Objective::classification}) {
        cfg.objective = obj;
        const auto init = make_model(tiny_vocab(), tiny_config());
        const auto r = train(init, f.split, f.store, cfg);
        encoder::for_each_parameter([](const std::string& n, const Matrix& a, const Matrix& b) { EXPECT_LE((a - b).cwiseAbs().maxCoeff(), 1e-250) << n; },
                                    init.encoder, r.model.encoder);
        for (double l : r.report.epoch_losses) EXPECT_NEAR(l, r.report.epoch_losses[0], 1e-12);
    }
}

TEST(Train, OverfitsOnePair) {
    const auto f = toy_corpus();
    corpus::DatasetSplit split;
    split.train = {corpus::make_pair(corpus::resume_id(0), corpus::vacancy_id(2), corpus::LabelSource::consultant_positive)};
    TrainingConfig cfg;
    cfg.epochs = 30;
    cfg.learning_rate = 1e-2;
    const auto r = train(make_model(tiny_vocab(), tiny_config()), split, f.store, cfg);
    const auto& l = r.report.epoch_losses;
    for (std::size_t e = 2; e < l.size(); ++e) EXPECT_LE(l[e], l[e - 1] + 1e-12) << "epoch " << e;
    EXPECT_LT(l.back(), 0.1 * l.front());
}

TEST(Train, EmptyTrainingSet) {
    const auto f = toy_corpus();
    try {
        train(make_model(tiny_vocab(), tiny_config()), {}, f.store, {});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::training);
    }
}

TEST(Train, DivergenceNamesEpochAndBatch) {
    const auto f = toy_corpus();
    auto m = make_model(tiny_vocab(), tiny_config());
    m.encoder.token_embedding(m.vocab.id("weld"), 0) = std::nan("");
    try {
        train(m, f.split, f.store, {});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::divergence);
        EXPECT_NE(std::string(e.what()).find("epoch"), std::string::npos);
        EXPECT_NE(std::string(e.what()).find("batch"), std::string::npos);
    }
}

TEST(Train, Deterministic) {
    const auto f = toy_corpus();
    TrainingConfig cfg;
    cfg.epochs = 2;
    cfg.seed = 77;
    cfg.objective = Objective::classification;
    const auto a = train(make_model(tiny_vocab(), tiny_config()), f.split, f.store, cfg);
    const auto b = train(make_model(tiny_vocab(), tiny_config()), f.split, f.store, cfg);
    EXPECT_EQ(a.report.epoch_losses, b.report.epoch_losses);
    encoder::for_each_parameter([](const std::string& n, const Matrix& x, const Matrix& y) { EXPECT_TRUE(x == y) << n; },
                                a.model.encoder, b.model.encoder);
}

TEST(ScorePair, IdenticalAndSymmetric) {
    const auto m = make_model(tiny_vocab(), tiny_config());
    const corpus::Document r{"r", corpus::Role::resume, "en", "weld steel truck", 3};
    const corpus::Document v{"v", corpus::Role::vacancy, "en", "cook steel route menu", 4};
    const corpus::Document same{"v2", corpus::Role::vacancy, "en", "weld steel truck", 3};
    EXPECT_NEAR(score_pair(m, r, same, PoolingStrategy::mean_tokens), 1.0, 1e-9);
    EXPECT_EQ(score_pair(m, r, v, PoolingStrategy::mean_tokens), score_pair(m, v, r, PoolingStrategy::mean_tokens));
    const auto a = embed_text(m, r.text, PoolingStrategy::mean_tokens);
    const auto b = embed_text(m, r.text, PoolingStrategy::mean_tokens);
    EXPECT_TRUE(a == b);
}

TEST(ScorePair, EmptyDocument) {
    const auto m = make_model(tiny_vocab(), tiny_config());
    const corpus::Document r{"r", corpus::Role::resume, "en", "", 0};
    EXPECT_THROW(score_pair(m, r, r, PoolingStrategy::mean_tokens), Error);
}

TEST(Checkpoint, RoundTrip) {
    auto m = make_model(tiny_vocab(), tiny_config());
    TrainingConfig cfg;
    cfg.objective = Objective::classification;
    std::stringstream buf;
    save_checkpoint(buf, m, cfg);
    const auto c = load_checkpoint(buf);
    ASSERT_TRUE(c.config.has_value());
    EXPECT_EQ(c.config->objective, Objective::classification);
    EXPECT_EQ(c.model.vocab.tokens(), m.vocab.tokens());
    EXPECT_EQ(embed_text(c.model, "weld pipe", PoolingStrategy::mean_tokens), embed_text(m, "weld pipe", PoolingStrategy::mean_tokens));
}
