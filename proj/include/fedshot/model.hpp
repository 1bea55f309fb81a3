#pragma once

#include <cstdint>
#include <vector>

#include "fedshot/embed.hpp"
#include "fedshot/params.hpp"

namespace fedshot {

/// ELU activation on the incoming embedding followed by a linear layer:
/// logits = W^T elu(emb) + b, with W of shape [dim x classes].
struct ClassifierHead {
    std::size_t dim = 0;
    std::size_t n_classes = 0;
    std::vector<double> weight;  // [dim x n_classes], row-major
    std::vector<double> bias;    // [n_classes]
};

/// Seeded uniform init in [-1/sqrt(dim), +1/sqrt(dim)], zero bias.
ClassifierHead init_head(std::size_t dim, std::size_t n_classes,
                         std::uint64_t seed);

std::vector<double> forward(const ClassifierHead& head,
                            const Embedding& emb);

int predict(const ClassifierHead& head, const Embedding& emb);

/// One labeled embedding batch.
struct EmbeddingBatch {
    std::vector<const Embedding*> items;

    static EmbeddingBatch of(const std::vector<Embedding>& embs);
};

/// Mean softmax cross-entropy over the batch plus the analytic gradient
/// w.r.t. the head parameters. The embedding is an input here, so nothing
/// flows upstream of the head.
std::pair<double, ParamVector> loss_and_grad(const ClassifierHead& head,
                                             const EmbeddingBatch& batch);

ParamVector flatten(const ClassifierHead& head);
ParamVector flatten(const EncoderParams& params);
ClassifierHead unflatten_head(const ParamVector& pv);
EncoderParams unflatten_encoder(const ParamVector& pv);

/// Stage-1 trainable unit: encoder MLP and classifier head, updated
/// jointly from tokenized segments.
struct JointModel {
    EncoderParams encoder;
    ClassifierHead head;
};

ParamVector flatten(const JointModel& model);
JointModel unflatten_joint(const ParamVector& pv);

/// One preprocessed segment as the joint model consumes it: the fixed
/// band-power features of each token, plus the label.
struct SegmentFeatures {
    std::vector<std::vector<double>> token_features;
    std::uint64_t segment_id = 0;
    std::uint32_t patient_id = 0;
    int label = 0;
};

/// Forward pass of the joint model on one segment: per-token MLP, mean
/// pool, ELU + linear head.
std::vector<double> joint_forward(const JointModel& model,
                                  const SegmentFeatures& seg);

int joint_predict(const JointModel& model, const SegmentFeatures& seg);

/// Mean softmax cross-entropy and analytic gradient over every parameter
/// of the joint model (encoder and head).
std::pair<double, ParamVector> joint_loss_and_grad(
    const JointModel& model, const std::vector<const SegmentFeatures*>& batch);

} // namespace fedshot
