#include "fedshot/model.hpp"

#include <algorithm>
#include <cmath>

#include "fedshot/errors.hpp"
#include "fedshot/rng.hpp"

namespace fedshot {

ClassifierHead init_head(std::size_t dim, std::size_t n_classes,
                         std::uint64_t seed) {
    ClassifierHead head;
    head.dim = dim;
    head.n_classes = n_classes;
    head.weight.resize(dim * n_classes);
    head.bias.assign(n_classes, 0.0);
    auto rng = make_rng(mix_seed(seed, 0x686561ULL));  // "hea"
    const double a = 1.0 / std::sqrt(static_cast<double>(dim));
    for (auto& w : head.weight)
        w = uniform_in(rng, -a, a);
    return head;
}

namespace {

std::vector<double> head_logits(const ClassifierHead& head,
                                const std::vector<double>& activated) {
    std::vector<double> logits(head.n_classes);
    for (std::size_t c = 0; c < head.n_classes; ++c) {
        double acc = head.bias[c];
        for (std::size_t d = 0; d < head.dim; ++d)
            acc += head.weight[d * head.n_classes + c] * activated[d];
        logits[c] = acc;
    }
    return logits;
}

// Numerically stable softmax + cross-entropy. Returns the per-example
// loss; fills probs with the softmax of the logits.
double softmax_xent(const std::vector<double>& logits, int label,
                    std::vector<double>& probs) {
    const double m = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    probs.resize(logits.size());
    for (std::size_t c = 0; c < logits.size(); ++c) {
        probs[c] = std::exp(logits[c] - m);
        z += probs[c];
    }
    for (auto& p : probs)
        p /= z;
    return -(logits[static_cast<std::size_t>(label)] - m - std::log(z));
}

std::vector<double> elu_vec(const std::vector<double>& v) {
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
        out[i] = elu(v[i]);
    return out;
}

} // namespace

std::vector<double> forward(const ClassifierHead& head, const Embedding& emb) {
    if (emb.dim() != head.dim)
        throw DimensionMismatch("forward: embedding dim " +
                                std::to_string(emb.dim()) + " vs head dim " +
                                std::to_string(head.dim));
    return head_logits(head, elu_vec(emb.values));
}

int predict(const ClassifierHead& head, const Embedding& emb) {
    const auto logits = forward(head, emb);
    // first index wins ties
    return static_cast<int>(std::max_element(logits.begin(), logits.end()) -
                            logits.begin());
}

EmbeddingBatch EmbeddingBatch::of(const std::vector<Embedding>& embs) {
    EmbeddingBatch batch;
    batch.items.reserve(embs.size());
    for (const auto& e : embs)
        batch.items.push_back(&e);
    return batch;
}

std::pair<double, ParamVector> loss_and_grad(const ClassifierHead& head,
                                             const EmbeddingBatch& batch) {
    if (batch.items.empty())
        throw EmptyBatch("loss_and_grad: empty batch");

    ParamVector grad = flatten(head);
    std::fill(grad.values.begin(), grad.values.end(), 0.0);
    const std::size_t bias_off = grad.layout.offset_of("head.bias");
    const std::size_t weight_off = grad.layout.offset_of("head.weight");

    const double inv_b = 1.0 / static_cast<double>(batch.items.size());
    double loss = 0.0;
    std::vector<double> probs;
    for (const Embedding* emb : batch.items) {
        if (emb->label < 0 ||
            static_cast<std::size_t>(emb->label) >= head.n_classes)
            throw LabelOutOfRange("label " + std::to_string(emb->label) +
                                  " with " + std::to_string(head.n_classes) +
                                  " classes");
        if (emb->dim() != head.dim)
            throw DimensionMismatch("loss_and_grad: embedding dim mismatch");

        const auto activated = elu_vec(emb->values);
        const auto logits = head_logits(head, activated);
        loss += softmax_xent(logits, emb->label, probs) * inv_b;

        for (std::size_t c = 0; c < head.n_classes; ++c) {
            const double dl =
                (probs[c] - (static_cast<std::size_t>(emb->label) == c ? 1.0 : 0.0)) *
                inv_b;
            grad.values[bias_off + c] += dl;
            for (std::size_t d = 0; d < head.dim; ++d)
                grad.values[weight_off + d * head.n_classes + c] +=
                    activated[d] * dl;
        }
    }
    return {loss, std::move(grad)};
}

// Tensor order within each flatten is lexicographic by name, so that
// flatten / unflatten round-trips are layout-stable.

ParamVector flatten(const ClassifierHead& head) {
    ParamVector pv;
    pv.layout.tensors = {
        {"head.bias", {static_cast<std::uint32_t>(head.n_classes)}},
        {"head.weight",
         {static_cast<std::uint32_t>(head.dim),
          static_cast<std::uint32_t>(head.n_classes)}},
    };
    pv.values.reserve(pv.layout.total());
    pv.values.insert(pv.values.end(), head.bias.begin(), head.bias.end());
    pv.values.insert(pv.values.end(), head.weight.begin(), head.weight.end());
    return pv;
}

ParamVector flatten(const EncoderParams& p) {
    ParamVector pv;
    pv.layout.tensors = {
        {"encoder.bias1", {static_cast<std::uint32_t>(p.hidden_dim)}},
        {"encoder.bias2", {static_cast<std::uint32_t>(p.out_dim)}},
        {"encoder.weight1",
         {static_cast<std::uint32_t>(p.feature_dim),
          static_cast<std::uint32_t>(p.hidden_dim)}},
        {"encoder.weight2",
         {static_cast<std::uint32_t>(p.hidden_dim),
          static_cast<std::uint32_t>(p.out_dim)}},
    };
    pv.values.reserve(pv.layout.total());
    pv.values.insert(pv.values.end(), p.b1.begin(), p.b1.end());
    pv.values.insert(pv.values.end(), p.b2.begin(), p.b2.end());
    pv.values.insert(pv.values.end(), p.w1.begin(), p.w1.end());
    pv.values.insert(pv.values.end(), p.w2.begin(), p.w2.end());
    return pv;
}

namespace {

void expect_tensor(const ParamVector& pv, std::size_t index,
                   const char* name, std::size_t rank) {
    if (index >= pv.layout.tensors.size() ||
        pv.layout.tensors[index].name != name ||
        pv.layout.tensors[index].dims.size() != rank)
        throw LayoutMismatch(std::string("expected tensor '") + name +
                             "' of rank " + std::to_string(rank));
}

std::vector<double> take(const ParamVector& pv, const std::string& name) {
    const std::size_t off = pv.layout.offset_of(name);
    const std::size_t n = pv.layout.spec_of(name).size();
    return {pv.values.begin() + static_cast<std::ptrdiff_t>(off),
            pv.values.begin() + static_cast<std::ptrdiff_t>(off + n)};
}

} // namespace

ClassifierHead unflatten_head(const ParamVector& pv) {
    pv.check_consistent();
    if (pv.layout.tensors.size() != 2)
        throw LayoutMismatch("head layout has two tensors");
    expect_tensor(pv, 0, "head.bias", 1);
    expect_tensor(pv, 1, "head.weight", 2);
    const auto& wdims = pv.layout.tensors[1].dims;
    if (pv.layout.tensors[0].dims[0] != wdims[1])
        throw LayoutMismatch("head bias/weight class counts differ");
    ClassifierHead head;
    head.dim = wdims[0];
    head.n_classes = wdims[1];
    head.bias = take(pv, "head.bias");
    head.weight = take(pv, "head.weight");
    return head;
}

EncoderParams unflatten_encoder(const ParamVector& pv) {
    pv.check_consistent();
    if (pv.layout.tensors.size() != 4)
        throw LayoutMismatch("encoder layout has four tensors");
    expect_tensor(pv, 0, "encoder.bias1", 1);
    expect_tensor(pv, 1, "encoder.bias2", 1);
    expect_tensor(pv, 2, "encoder.weight1", 2);
    expect_tensor(pv, 3, "encoder.weight2", 2);
    const auto& w1d = pv.layout.tensors[2].dims;
    const auto& w2d = pv.layout.tensors[3].dims;
    if (pv.layout.tensors[0].dims[0] != w1d[1] || w1d[1] != w2d[0] ||
        pv.layout.tensors[1].dims[0] != w2d[1])
        throw LayoutMismatch("encoder tensor shapes are inconsistent");
    EncoderParams p;
    p.feature_dim = w1d[0];
    p.hidden_dim = w1d[1];
    p.out_dim = w2d[1];
    p.b1 = take(pv, "encoder.bias1");
    p.b2 = take(pv, "encoder.bias2");
    p.w1 = take(pv, "encoder.weight1");
    p.w2 = take(pv, "encoder.weight2");
    return p;
}

ParamVector flatten(const JointModel& model) {
    return concat_params({flatten(model.encoder), flatten(model.head)});
}

JointModel unflatten_joint(const ParamVector& pv) {
    JointModel model;
    model.encoder = unflatten_encoder(slice_params(pv, "encoder."));
    model.head = unflatten_head(slice_params(pv, "head."));
    if (model.head.dim != model.encoder.out_dim)
        throw LayoutMismatch("head dim does not match encoder output dim");
    return model;
}

namespace {

struct JointForwardState {
    std::vector<std::vector<double>> hidden;  // per token, post-ELU
    std::vector<double> emb;                  // mean-pooled MLP output
    std::vector<double> activated;            // elu(emb)
    std::vector<double> logits;
};

JointForwardState joint_forward_state(const JointModel& model,
                                      const SegmentFeatures& seg) {
    const auto& enc = model.encoder;
    if (seg.token_features.empty())
        throw EmptyTokenSequence("joint_forward: segment has no tokens");

    JointForwardState st;
    st.hidden.reserve(seg.token_features.size());
    st.emb.assign(enc.out_dim, 0.0);
    for (const auto& feats : seg.token_features) {
        if (feats.size() != enc.feature_dim)
            throw DimensionMismatch("joint_forward: feature dim mismatch");
        std::vector<double> h(enc.hidden_dim);
        for (std::size_t j = 0; j < enc.hidden_dim; ++j) {
            double acc = enc.b1[j];
            for (std::size_t i = 0; i < enc.feature_dim; ++i)
                acc += enc.w1[i * enc.hidden_dim + j] * feats[i];
            h[j] = elu(acc);
        }
        for (std::size_t k = 0; k < enc.out_dim; ++k) {
            double acc = enc.b2[k];
            for (std::size_t j = 0; j < enc.hidden_dim; ++j)
                acc += enc.w2[j * enc.out_dim + k] * h[j];
            st.emb[k] += acc;
        }
        st.hidden.push_back(std::move(h));
    }
    const double inv_t = 1.0 / static_cast<double>(seg.token_features.size());
    for (auto& v : st.emb)
        v *= inv_t;
    st.activated = elu_vec(st.emb);
    st.logits = head_logits(model.head, st.activated);
    return st;
}

// d elu(z) / dz, recovered from the activation value: elu is monotone, so
// z < 0 iff elu(z) < 0, and there e^z = elu(z) + 1.
double elu_deriv_from_value(double activated) {
    return activated >= 0.0 ? 1.0 : activated + 1.0;
}

} // namespace

std::vector<double> joint_forward(const JointModel& model,
                                  const SegmentFeatures& seg) {
    return joint_forward_state(model, seg).logits;
}

int joint_predict(const JointModel& model, const SegmentFeatures& seg) {
    const auto logits = joint_forward(model, seg);
    return static_cast<int>(std::max_element(logits.begin(), logits.end()) -
                            logits.begin());
}

std::pair<double, ParamVector> joint_loss_and_grad(
    const JointModel& model, const std::vector<const SegmentFeatures*>& batch) {
    if (batch.empty())
        throw EmptyBatch("joint_loss_and_grad: empty batch");

    const auto& enc = model.encoder;
    const auto& head = model.head;

    ParamVector grad = flatten(model);
    std::fill(grad.values.begin(), grad.values.end(), 0.0);
    const std::size_t gb1 = grad.layout.offset_of("encoder.bias1");
    const std::size_t gb2 = grad.layout.offset_of("encoder.bias2");
    const std::size_t gw1 = grad.layout.offset_of("encoder.weight1");
    const std::size_t gw2 = grad.layout.offset_of("encoder.weight2");
    const std::size_t ghb = grad.layout.offset_of("head.bias");
    const std::size_t ghw = grad.layout.offset_of("head.weight");

    const double inv_b = 1.0 / static_cast<double>(batch.size());
    double loss = 0.0;
    std::vector<double> probs;
    for (const SegmentFeatures* seg : batch) {
        if (seg->label < 0 ||
            static_cast<std::size_t>(seg->label) >= head.n_classes)
            throw LabelOutOfRange("label " + std::to_string(seg->label) +
                                  " with " + std::to_string(head.n_classes) +
                                  " classes");
        const auto st = joint_forward_state(model, *seg);
        loss += softmax_xent(st.logits, seg->label, probs) * inv_b;

        // head
        std::vector<double> dlogits(head.n_classes);
        for (std::size_t c = 0; c < head.n_classes; ++c) {
            dlogits[c] =
                (probs[c] - (static_cast<std::size_t>(seg->label) == c ? 1.0 : 0.0)) *
                inv_b;
            grad.values[ghb + c] += dlogits[c];
            for (std::size_t d = 0; d < head.dim; ++d)
                grad.values[ghw + d * head.n_classes + c] +=
                    st.activated[d] * dlogits[c];
        }

        // through elu(emb) into the pooled MLP output
        std::vector<double> demb(enc.out_dim);
        for (std::size_t d = 0; d < enc.out_dim; ++d) {
            double acc = 0.0;
            for (std::size_t c = 0; c < head.n_classes; ++c)
                acc += head.weight[d * head.n_classes + c] * dlogits[c];
            demb[d] = acc * elu_deriv_from_value(st.activated[d]);
        }

        const std::size_t n_tokens = seg->token_features.size();
        const double inv_t = 1.0 / static_cast<double>(n_tokens);

        // mean pooling spreads demb evenly over tokens: du_t = demb / T
        for (std::size_t k = 0; k < enc.out_dim; ++k)
            grad.values[gb2 + k] += demb[k];

        // dh is identical across tokens before the ELU gate
        std::vector<double> dh_common(enc.hidden_dim);
        for (std::size_t j = 0; j < enc.hidden_dim; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < enc.out_dim; ++k)
                acc += enc.w2[j * enc.out_dim + k] * demb[k];
            dh_common[j] = acc * inv_t;
        }

        // du_t is token-independent, so dW2 collapses to a rank-1 update
        // with the token-mean hidden activation
        std::vector<double> h_mean(enc.hidden_dim, 0.0);
        for (std::size_t t = 0; t < n_tokens; ++t) {
            const auto& h = st.hidden[t];
            const auto& feats = seg->token_features[t];
            for (std::size_t j = 0; j < enc.hidden_dim; ++j) {
                h_mean[j] += h[j] * inv_t;
                const double dz = dh_common[j] * elu_deriv_from_value(h[j]);
                if (dz == 0.0)
                    continue;
                grad.values[gb1 + j] += dz;
                for (std::size_t i = 0; i < enc.feature_dim; ++i)
                    grad.values[gw1 + i * enc.hidden_dim + j] += feats[i] * dz;
            }
        }
        for (std::size_t j = 0; j < enc.hidden_dim; ++j)
            for (std::size_t k = 0; k < enc.out_dim; ++k)
                grad.values[gw2 + j * enc.out_dim + k] += h_mean[j] * demb[k];
    }
    return {loss, std::move(grad)};
}

} // namespace fedshot
