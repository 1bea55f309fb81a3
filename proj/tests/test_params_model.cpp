#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "fedshot/embed.hpp"
#include "fedshot/errors.hpp"
#include "fedshot/model.hpp"
#include "fedshot/params.hpp"
#include "fedshot/rng.hpp"
#include "support/oracles.hpp"

using namespace fedshot;

namespace {

std::vector<Embedding> random_batch(std::size_t n, std::size_t dim,
                                    std::size_t n_classes, std::uint64_t seed) {
    std::vector<Embedding> embs(n);
    auto rng = make_rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        embs[i].segment_id = i;
        embs[i].label = static_cast<int>(bounded(rng, n_classes));
        embs[i].values.resize(dim);
        for (double& v : embs[i].values) {
            v = gaussian(rng);
        }
    }
    return embs;
}

} // namespace

TEST_CASE("layout offsets follow declaration order") {
    ParamLayout layout;
    layout.tensors = {{"a", {2, 3}}, {"b", {4}}, {"c", {1, 1, 5}}};
    CHECK(layout.total() == 6 + 4 + 5);
    CHECK(layout.offset_of("a") == 0);
    CHECK(layout.offset_of("b") == 6);
    CHECK(layout.offset_of("c") == 10);
    CHECK_THROWS_AS(layout.offset_of("missing"), LayoutMismatch);
}

TEST_CASE("check_consistent catches a size drift") {
    ParamVector pv;
    pv.layout.tensors = {{"w", {3}}};
    pv.values = {1.0, 2.0};
    CHECK_THROWS_AS(pv.check_consistent(), LayoutMismatch);
    pv.values.push_back(3.0);
    pv.check_consistent();
}

TEST_CASE("sgd_step is p minus lr times g, elementwise") {
    ParamVector p;
    p.layout.tensors = {{"w", {3}}};
    p.values = {1.0, -2.0, 0.5};
    ParamVector g = p;
    g.values = {10.0, 20.0, -30.0};
    const ParamVector out = sgd_step(p, g, 0.1);
    CHECK(out.values[0] == doctest::Approx(0.0));
    CHECK(out.values[1] == doctest::Approx(-4.0));
    CHECK(out.values[2] == doctest::Approx(3.5));

    // zero learning rate must be the bitwise identity
    const ParamVector same = sgd_step(p, g, 0.0);
    CHECK(same.values == p.values);

    ParamVector other = g;
    other.layout.tensors[0].name = "v";
    CHECK_THROWS_AS(sgd_step(p, other, 0.1), LayoutMismatch);
}

TEST_CASE("concat and slice are inverse over prefixed tensor groups") {
    ParamVector enc;
    enc.layout.tensors = {{"encoder.w", {2}}, {"encoder.b", {1}}};
    enc.values = {1.0, 2.0, 3.0};
    ParamVector head;
    head.layout.tensors = {{"head.w", {2}}};
    head.values = {4.0, 5.0};

    const ParamVector joint = concat_params({enc, head});
    CHECK(joint.values == std::vector<double>{1.0, 2.0, 3.0, 4.0, 5.0});

    const ParamVector enc2 = slice_params(joint, "encoder.");
    CHECK(enc2.values == enc.values);
    CHECK(enc2.layout == enc.layout);
    const ParamVector head2 = slice_params(joint, "head.");
    CHECK(head2.values == head.values);
    CHECK_THROWS_AS(slice_params(joint, "nothing."), LayoutMismatch);
}

TEST_CASE("head flatten and unflatten preserve values and naming") {
    const ClassifierHead head = init_head(8, 6, 42);
    const ParamVector pv = flatten(head);
    std::vector<std::string> names;
    for (const auto& t : pv.layout.tensors) {
        names.push_back(t.name);
    }
    CHECK(std::is_sorted(names.begin(), names.end()));
    CHECK(std::count(names.begin(), names.end(), "head.weight") == 1);
    CHECK(std::count(names.begin(), names.end(), "head.bias") == 1);

    const ClassifierHead back = unflatten_head(pv);
    CHECK(back.dim == head.dim);
    CHECK(back.n_classes == head.n_classes);
    CHECK(back.weight == head.weight);
    CHECK(back.bias == head.bias);
}

TEST_CASE("joint flatten orders tensors lexicographically and round-trips") {
    JointModel model{init_encoder(10, 4, 6, 9), init_head(6, 6, 10)};
    const ParamVector pv = flatten(model);
    std::vector<std::string> names;
    for (const auto& t : pv.layout.tensors) {
        names.push_back(t.name);
    }
    const std::vector<std::string> expect = {"encoder.bias1",   "encoder.bias2",
                                             "encoder.weight1", "encoder.weight2",
                                             "head.bias",       "head.weight"};
    CHECK(names == expect);

    const JointModel back = unflatten_joint(pv);
    CHECK(back.encoder.w1 == model.encoder.w1);
    CHECK(back.encoder.b2 == model.encoder.b2);
    CHECK(back.head.weight == model.head.weight);
}

TEST_CASE("forward produces finite logits and predict the argmax") {
    const ClassifierHead head = init_head(12, 6, 3);
    const auto embs = random_batch(5, 12, 6, 99);
    for (const auto& e : embs) {
        const auto logits = forward(head, e);
        REQUIRE(logits.size() == 6);
        const auto best = static_cast<int>(
            std::max_element(logits.begin(), logits.end()) - logits.begin());
        CHECK(predict(head, e) == best);
    }
}

TEST_CASE("head gradient matches central finite differences") {
    const std::size_t dim = 7;
    const ClassifierHead head = init_head(dim, 6, 21);
    const auto embs = random_batch(9, dim, 6, 22);
    const EmbeddingBatch batch = EmbeddingBatch::of(embs);

    const auto [loss, grad] = loss_and_grad(head, batch);
    CHECK(std::isfinite(loss));
    CHECK(loss > 0.0);

    const ParamVector flat = flatten(head);
    const auto f = [&](const std::vector<double>& values) {
        ParamVector pv = flat;
        pv.values = values;
        return loss_and_grad(unflatten_head(pv), batch).first;
    };
    const auto fd = oracle::fd_gradient(f, flat.values, 1e-4);
    REQUIRE(grad.values.size() == fd.size());
    for (std::size_t i = 0; i < fd.size(); ++i) {
        const double scale = std::max({std::fabs(fd[i]), std::fabs(grad.values[i]), 1e-8});
        CHECK(std::fabs(grad.values[i] - fd[i]) / scale < 1e-4);
    }
}

TEST_CASE("joint gradient matches central finite differences") {
    JointModel model{init_encoder(2 * kBandCount, 5, 4, 31), init_head(4, 6, 32)};
    auto rng = make_rng(33);
    std::vector<SegmentFeatures> segs(4);
    std::vector<const SegmentFeatures*> batch;
    for (std::size_t s = 0; s < segs.size(); ++s) {
        segs[s].segment_id = s;
        segs[s].label = static_cast<int>(bounded(rng, 6));
        segs[s].token_features.assign(3, std::vector<double>(2 * kBandCount));
        for (auto& tf : segs[s].token_features) {
            for (double& v : tf) {
                v = gaussian(rng);
            }
        }
        batch.push_back(&segs[s]);
    }

    const auto [loss, grad] = joint_loss_and_grad(model, batch);
    CHECK(std::isfinite(loss));

    const ParamVector flat = flatten(model);
    const auto f = [&](const std::vector<double>& values) {
        ParamVector pv = flat;
        pv.values = values;
        return joint_loss_and_grad(unflatten_joint(pv), batch).first;
    };
    const auto fd = oracle::fd_gradient(f, flat.values, 1e-4);
    REQUIRE(grad.values.size() == fd.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < fd.size(); ++i) {
        const double scale = std::max({std::fabs(fd[i]), std::fabs(grad.values[i]), 1e-8});
        worst = std::max(worst, std::fabs(grad.values[i] - fd[i]) / scale);
    }
    CHECK(worst < 1e-4);
}

TEST_CASE("loss_and_grad rejects empty batches and bad labels") {
    const ClassifierHead head = init_head(4, 6, 1);
    CHECK_THROWS_AS(loss_and_grad(head, EmbeddingBatch{}), EmptyBatch);

    auto embs = random_batch(2, 4, 6, 2);
    embs[1].label = 6;
    CHECK_THROWS_AS(loss_and_grad(head, EmbeddingBatch::of(embs)), LabelOutOfRange);
    embs[1].label = -1;
    CHECK_THROWS_AS(loss_and_grad(head, EmbeddingBatch::of(embs)), LabelOutOfRange);
}

TEST_CASE("batch loss is permutation invariant") {
    const ClassifierHead head = init_head(6, 6, 55);
    auto embs = random_batch(8, 6, 6, 56);
    const double a = loss_and_grad(head, EmbeddingBatch::of(embs)).first;
    std::reverse(embs.begin(), embs.end());
    const double b = loss_and_grad(head, EmbeddingBatch::of(embs)).first;
    CHECK(a == doctest::Approx(b).epsilon(1e-14));
}
