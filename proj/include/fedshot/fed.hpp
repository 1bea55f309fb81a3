#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "fedshot/episode.hpp"
#include "fedshot/metrics.hpp"
#include "fedshot/model.hpp"
#include "fedshot/params.hpp"

namespace fedshot {

/// One client's contribution to a communication round.
struct ClientUpdate {
    int client_id = 0;
    std::size_t sample_count = 0;
    ParamVector params;
};

/// Elementwise parameter average, weighted by sample counts unless
/// uniform_avg is set. Summation runs in ascending client_id order so the
/// result is bitwise-stable under permutation of the update list.
ParamVector fedavg(const std::vector<ClientUpdate>& updates,
                   bool uniform_avg = false);

/// Convex local/global interpolation: alpha*local + (1-alpha)*global.
/// alpha=0 keeps the global model, alpha=1 keeps the local one.
ParamVector blend(const ParamVector& local, const ParamVector& global_params,
                  double alpha);

/// Knobs shared by both federation stages. threads <= 0 picks a worker
/// count automatically; 1 forces serial execution.
struct FedRunConfig {
    int max_rounds = 100;
    int patience = 5;
    int local_epochs = 1;
    double lr = 0.01;
    std::size_t batch_size = 0;  // 0 = full batch
    bool uniform_avg = false;
    double alpha = 0.8;          // stage-2 blend weight
    std::uint64_t seed = 0;
    int threads = 1;
};

/// One communication round as recorded in run history.
struct RoundReport {
    int round_index = 0;              // 1-based
    std::vector<int> participants;    // ascending client ids
    std::vector<double> client_losses;
    double global_metric = 0.0;
    double best_metric = 0.0;
    int stagnation = 0;
};

/// A stage-1 client: local tokenized segments for joint training.
struct E1ClientData {
    int client_id = 0;
    std::vector<SegmentFeatures> train;
};

struct E1Result {
    ParamVector global;  // params of the best-validation round
    int best_round = 0;  // 1-based; 0 when no round completed
    std::vector<RoundReport> history;
};

/// Stage-1 federated fine-tuning: broadcast, local SGD, count-weighted
/// averaging, validation, and early stop once the validation metric has
/// not improved for `patience` consecutive rounds. `validate` scores a
/// candidate global model; the best-scoring round's params are returned.
E1Result run_e1(const FedRunConfig& cfg,
                const std::vector<E1ClientData>& clients,
                const JointModel& init,
                const std::function<double(const JointModel&)>& validate);

/// A stage-2 client: its few-shot tasks plus the seizure types it hosts
/// (carried through to reports).
struct E2ClientData {
    int client_id = 0;
    std::vector<int> seizure_types;
    std::vector<FewShotTask> tasks;
};

/// Per-client outcome of stage 2: the head selected on the client's own
/// validation segments and its query-set metrics.
struct E2ClientResult {
    int client_id = 0;
    std::vector<int> seizure_types;
    std::size_t n_patients = 0;
    int best_round = 0;
    double validation_metric = 0.0;
    double balanced_accuracy = 0.0;
    double kappa = 0.0;
    bool kappa_degenerate = false;
    double weighted_f1 = 0.0;
    ConfusionMatrix confusion{0};
    ParamVector best_params;
    ParamVector final_params;  // live params after the last round
};

struct E2Result {
    std::vector<E2ClientResult> clients;  // ascending client id
    std::vector<RoundReport> history;
};

/// Stage-2 personalization on a frozen encoder: each round every client
/// fine-tunes the head on its support segments, the server averages the
/// heads, and each client re-seeds itself with
/// blend(local, global, alpha). Model selection happens per client on its
/// own validation balanced accuracy; query metrics come from that
/// selected head. The round history tracks the mean validation metric.
E2Result run_e2(const FedRunConfig& cfg,
                const std::vector<E2ClientData>& clients,
                const ClassifierHead& head_init);

} // namespace fedshot
