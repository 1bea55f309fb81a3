// Acceptance gate: one line per criterion, [PASS] or [FAIL], with the
// measured value against its pinned tolerance. Exit code is the number
// of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "fedshot/config.hpp"
#include "fedshot/episode.hpp"
#include "fedshot/errors.hpp"
#include "fedshot/fed.hpp"
#include "fedshot/metrics.hpp"
#include "fedshot/model.hpp"
#include "fedshot/pipeline.hpp"
#include "fedshot/rng.hpp"
#include "fedshot/signal.hpp"
#include "fixture.hpp"
#include "support/oracles.hpp"

using namespace fedshot;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Outcome {
    bool pass = false;
    std::string detail;
};

double now_s() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

std::string fmt(double v) {
    std::ostringstream ss;
    ss.precision(3);
    ss << v;
    return ss.str();
}

// ---- shared helpers ------------------------------------------------------

std::vector<SegmentFeatures> random_segments(std::size_t n, std::size_t fdim,
                                             std::uint64_t seed) {
    auto rng = make_rng(seed);
    std::vector<SegmentFeatures> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        out[i].segment_id = i;
        out[i].label = static_cast<int>(bounded(rng, 6));
        out[i].token_features.assign(2, std::vector<double>(fdim));
        for (auto& tf : out[i].token_features) {
            for (double& v : tf) {
                v = gaussian(rng);
            }
        }
    }
    return out;
}

struct ChainPaths {
    fs::path stage1;
    fs::path stage2;
};

// The reference experiment: synthesize a stage-1 corpus and fine-tune the
// encoder federatedly, then synthesize a type-cycled stage-2 pool and
// personalize per client on top of the stage-1 checkpoint.
ChainPaths run_full_chain(const fs::path& root, double alpha) {
    std::ostringstream sink;
    ChainPaths paths{root / "stage1", root / "stage2"};

    ExperimentConfig s1;
    s1.mode = "synth";
    s1.seed = fixture::kStage1Seed;
    s1.out_dir = paths.stage1.string();
    s1.synth_patients = fixture::kStage1Patients;
    s1.synth_segments_per_class = fixture::kStage1SegmentsPerClass;
    cmd_synth(s1, sink);

    ExperimentConfig e1 = s1;
    e1.mode = "e1";
    e1.e1_max_rounds = fixture::kStage1MaxRounds;
    cmd_e1(e1, sink);

    ExperimentConfig s2;
    s2.mode = "synth";
    s2.seed = fixture::kStage2Seed;
    s2.out_dir = paths.stage2.string();
    s2.synth_patient_classes = "cycle";
    s2.synth_patients = fixture::kStage2Patients;
    s2.synth_segments_per_class = fixture::kStage2SegmentsPerClass;
    cmd_synth(s2, sink);

    ExperimentConfig e2 = s2;
    e2.mode = "e2";
    e2.alpha = alpha;
    e2.e2_max_rounds = fixture::kStage2MaxRounds;
    e2.e2_target_counts = {7, 7, 6, 8};
    e2.data_checkpoint = (paths.stage1 / "e1_model.fprm").string();
    cmd_e2(e2, sink);

    return paths;
}

std::map<int, double> client_bal_acc(const fs::path& report) {
    std::ifstream in(report);
    std::map<int, double> out;
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        std::stringstream ss(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ss, field, '\t')) {
            fields.push_back(field);
        }
        if (fields.size() >= 4) {
            out[std::stoi(fields[0])] = std::stod(fields[3]);
        }
    }
    return out;
}

std::string file_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

// ---- criteria ------------------------------------------------------------

Outcome check_fedavg_equivalence() {
    const std::size_t fdim = 6;
    const JointModel init{init_encoder(fdim, 5, 4, 81), init_head(4, 6, 82)};

    std::vector<E1ClientData> clients(4);
    std::vector<const SegmentFeatures*> pooled;
    const std::size_t counts[4] = {8, 14, 5, 11};
    for (std::size_t k = 0; k < 4; ++k) {
        clients[k].client_id = static_cast<int>(k + 1);
        clients[k].train = random_segments(counts[k], fdim, 9000 + k);
    }
    for (const auto& c : clients) {
        for (const auto& s : c.train) {
            pooled.push_back(&s);
        }
    }

    FedRunConfig cfg;
    cfg.max_rounds = 1;
    cfg.local_epochs = 1;
    cfg.batch_size = 0;
    cfg.lr = 0.05;
    const E1Result res =
        run_e1(cfg, clients, init, [](const JointModel&) { return 0.0; });

    const auto [loss, grad] = joint_loss_and_grad(init, pooled);
    const ParamVector direct = sgd_step(flatten(init), grad, cfg.lr);

    double worst = 0.0;
    for (std::size_t i = 0; i < direct.values.size(); ++i) {
        worst = std::max(worst, std::fabs(res.global.values[i] - direct.values[i]));
    }
    return {worst < fixture::kFedavgEquivalenceTol,
            "round-1 global vs pooled step: max|diff| " + fmt(worst) + " (tol " +
                fmt(fixture::kFedavgEquivalenceTol) + ")"};
}

Outcome check_gradient_oracle() {
    auto rng = make_rng(777);
    double worst = 0.0;
    for (int inst = 0; inst < fixture::kGradientInstances; ++inst) {
        const std::size_t dim = 4 + bounded(rng, 13);
        const ClassifierHead head = init_head(dim, 6, rng());
        std::vector<Embedding> embs(3 + bounded(rng, 18));
        for (std::size_t i = 0; i < embs.size(); ++i) {
            embs[i].label = static_cast<int>(bounded(rng, 6));
            embs[i].values.resize(dim);
            for (double& v : embs[i].values) {
                v = gaussian(rng);
            }
        }
        const EmbeddingBatch batch = EmbeddingBatch::of(embs);
        const auto [loss, grad] = loss_and_grad(head, batch);

        const ParamVector flat = flatten(head);
        const auto f = [&](const std::vector<double>& values) {
            ParamVector pv = flat;
            pv.values = values;
            return loss_and_grad(unflatten_head(pv), batch).first;
        };
        const auto fd = oracle::fd_gradient(f, flat.values, fixture::kGradientFdStep);
        for (std::size_t i = 0; i < fd.size(); ++i) {
            const double scale =
                std::max({std::fabs(fd[i]), std::fabs(grad.values[i]), 1e-8});
            worst = std::max(worst, std::fabs(grad.values[i] - fd[i]) / scale);
        }
    }
    return {worst < fixture::kGradientRelTol,
            std::to_string(fixture::kGradientInstances) +
                " instances vs central differences: max rel err " + fmt(worst) +
                " (tol " + fmt(fixture::kGradientRelTol) + ")"};
}

Outcome check_metric_oracles() {
    auto rng = make_rng(31337);
    double worst = 0.0;
    int checked = 0;
    for (int trial = 0; trial < fixture::kMetricMatrices; ++trial) {
        std::vector<std::vector<std::uint64_t>> m(6, std::vector<std::uint64_t>(6));
        ConfusionMatrix cm(6);
        std::uint64_t total = 0;
        for (int t = 0; t < 6; ++t) {
            for (int p = 0; p < 6; ++p) {
                const std::uint64_t v = bounded(rng, 3) == 0 ? 0 : bounded(rng, 500);
                m[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)] = v;
                if (v > 0) {
                    cm.add(t, p, v);
                }
                total += v;
            }
        }
        if (total == 0) {
            continue;
        }
        ++checked;
        bool lib_deg = false;
        bool ora_deg = false;
        worst = std::max(worst, std::fabs(balanced_accuracy(cm) -
                                          oracle::balanced_accuracy(m)));
        worst = std::max(worst, std::fabs(cohens_kappa(cm, &lib_deg) -
                                          oracle::cohens_kappa(m, &ora_deg)));
        worst = std::max(worst, std::fabs(weighted_f1(cm) - oracle::weighted_f1(m)));
        if (lib_deg != ora_deg) {
            return {false, "degenerate-marginals flag disagrees with the oracle"};
        }
    }

    // closed forms, held to the same tolerance
    ConfusionMatrix diag(6);
    for (int c = 0; c < 6; ++c) {
        diag.add(c, c, 5);
    }
    const double tol = fixture::kMetricOracleTol;
    const bool closed_ok = std::fabs(balanced_accuracy(diag) - 1.0) <= tol &&
                           std::fabs(cohens_kappa(diag) - 1.0) <= tol &&
                           std::fabs(weighted_f1(diag) - 1.0) <= tol;
    ConfusionMatrix constant(6);
    for (int t = 0; t < 6; ++t) {
        constant.add(t, 1, 4);
    }
    const bool kappa_zero = std::fabs(cohens_kappa(constant)) <= tol;

    return {worst <= fixture::kMetricOracleTol && closed_ok && kappa_zero &&
                checked >= 90,
            std::to_string(checked) + " random matrices: max |diff| " + fmt(worst) +
                " (tol " + fmt(fixture::kMetricOracleTol) +
                "); closed forms diag=1, const-pred kappa=0 " +
                (closed_ok && kappa_zero ? "hold" : "VIOLATED")};
}

Outcome check_blend_suite() {
    ParamVector local;
    local.layout.tensors = {{"p", {4}}};
    local.values = {1.0, -2.0, 3.5, 0.0};
    ParamVector global = local;
    global.values = {-4.0, 5.5, 2.0, 1.0};

    double worst = 0.0;
    const ParamVector at1 = blend(local, global, 1.0);
    const ParamVector at0 = blend(local, global, 0.0);
    for (std::size_t i = 0; i < 4; ++i) {
        worst = std::max(worst, std::fabs(at1.values[i] - local.values[i]));
        worst = std::max(worst, std::fabs(at0.values[i] - global.values[i]));
    }
    for (double t : {0.2, 0.5, 0.8}) {
        const ParamVector ab = blend(local, global, t);
        const ParamVector ba = blend(global, local, t);
        const ParamVector same = blend(local, local, t);
        for (std::size_t i = 0; i < 4; ++i) {
            worst = std::max(worst, std::fabs(ab.values[i] + ba.values[i] -
                                              local.values[i] - global.values[i]));
            worst = std::max(worst, std::fabs(same.values[i] - local.values[i]));
            worst = std::max(
                worst, std::fabs(ab.values[i] - (t * local.values[i] +
                                                 (1.0 - t) * global.values[i])));
        }
    }

    const bool default_alpha = ExperimentConfig{}.alpha == 0.8 &&
                               FedRunConfig{}.alpha == 0.8;
    return {worst <= fixture::kBlendTol && default_alpha,
            "endpoints/affinity/idempotence: max |diff| " + fmt(worst) + " (tol " +
                fmt(fixture::kBlendTol) + "); default alpha " +
                (default_alpha ? "0.8" : "WRONG")};
}

Outcome check_early_stopping() {
    std::vector<E1ClientData> clients(1);
    clients[0].client_id = 1;
    clients[0].train = random_segments(4, 4, 5);
    const JointModel init{init_encoder(4, 3, 4, 1), init_head(4, 6, 2)};

    FedRunConfig cfg;
    cfg.max_rounds = 50;
    cfg.lr = 0.0;  // params never move; the script is the whole story
    if (cfg.patience != 5) {
        return {false, "default patience is not 5"};
    }

    // improve at 1 and 2, plateau after: stop after round 2 + patience
    const std::vector<double> script = {0.50, 0.60, 0.60, 0.55, 0.58,
                                        0.59, 0.55, 0.10, 0.10};
    std::size_t call = 0;
    const E1Result res = run_e1(cfg, clients, init, [&](const JointModel&) {
        return script.at(call++);
    });
    const bool stop_ok = res.history.size() == 7 && res.best_round == 2;

    // improvement in the middle resets the counter exactly
    const std::vector<double> script2 = {0.50, 0.40, 0.40, 0.40, 0.55,
                                         0.40, 0.40, 0.40, 0.40, 0.40, 0.10};
    call = 0;
    const E1Result res2 = run_e1(cfg, clients, init, [&](const JointModel&) {
        return script2.at(call++);
    });
    const bool reset_ok = res2.history.size() == 10 && res2.best_round == 5 &&
                          res2.history[4].stagnation == 0;

    return {stop_ok && reset_ok,
            std::string("scripted sequences: stop-at-patience ") +
                (stop_ok ? "exact" : "WRONG") + ", counter reset " +
                (reset_ok ? "exact" : "WRONG")};
}

Outcome check_episode_invariants() {
    // 1000 seeded draws on one patient
    std::vector<Embedding> segs;
    auto rng = make_rng(606);
    for (std::uint64_t i = 0; i < 45; ++i) {
        Embedding e;
        e.segment_id = (17ULL << 32) | i;
        e.patient_id = 17;
        e.label = i < 14 ? 1 + static_cast<int>(i % 3) : kBackgroundClass;
        e.values = {uniform01(rng)};
        segs.push_back(std::move(e));
    }
    for (int seed = 0; seed < fixture::kEpisodeDraws; ++seed) {
        const FewShotTask task = build_task(segs, static_cast<std::uint64_t>(seed));
        std::size_t seizure = 0;
        std::set<std::uint64_t> ids;
        if (task.support.size() != 5 || task.validation.size() != 10 ||
            task.query.size() != 20) {
            return {false, "set sizes differ from 5/10/20 at seed " +
                               std::to_string(seed)};
        }
        for (const auto* part : {&task.support, &task.validation, &task.query}) {
            for (const auto& e : *part) {
                if (e.patient_id != 17) {
                    return {false, "patient purity violated"};
                }
                if (!ids.insert(e.segment_id).second) {
                    return {false, "segment reused across sets at seed " +
                                       std::to_string(seed)};
                }
            }
        }
        for (const auto& e : task.support) {
            seizure += is_seizure_class(e.label) ? 1 : 0;
        }
        if (seizure != 4) {
            return {false, "support is not 4 seizure + 1 background at seed " +
                               std::to_string(seed)};
        }
    }

    // E1 partition: 200 patients over 4 clients, 50 each, disjoint
    std::vector<std::uint32_t> patients(200);
    for (std::uint32_t i = 0; i < 200; ++i) {
        patients[i] = i + 1;
    }
    const ClientAssignment e1 = partition_e1(patients, 4, 99);
    std::set<std::uint32_t> seen;
    for (const auto& [client, list] : e1.patients) {
        if (list.size() != 50) {
            return {false, "E1 partition sizes are not 50/50/50/50"};
        }
        for (std::uint32_t p : list) {
            if (!seen.insert(p).second) {
                return {false, "E1 partition assigns a patient twice"};
            }
        }
    }

    // E2 partition: Table-3 type map over a cycling pool
    std::vector<PatientTypes> pool;
    for (std::uint32_t p = 1; p <= 32; ++p) {
        pool.push_back({p, {1 + static_cast<int>((p - 1) % 4)}});
    }
    const ClientAssignment e2 =
        partition_e2(pool, 4, 2024, {5, 8}, default_client_types(), {7, 7, 6, 8});
    const ClientTypeMap types = default_client_types();
    std::set<std::uint32_t> seen2;
    for (const auto& [client, list] : e2.patients) {
        if (list.size() < 5 || list.size() > 8) {
            return {false, "E2 client size outside 5..8"};
        }
        for (std::uint32_t p : list) {
            if (!seen2.insert(p).second) {
                return {false, "E2 partition assigns a patient twice"};
            }
            const int t = 1 + static_cast<int>((p - 1) % 4);
            if (types.at(client).count(t) == 0) {
                return {false, "E2 patient type outside the client profile"};
            }
        }
    }

    return {true, std::to_string(fixture::kEpisodeDraws) +
                      " task draws + E1 200/4 + E2 Table-3 profiles: all "
                      "invariants hold"};
}

Outcome check_signal_kernels() {
    // 7 Hz sine, 256 -> 200 Hz
    std::vector<double> x(512);
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = std::sin(2.0 * kPi * 7.0 * static_cast<double>(i) / 256.0);
    }
    const auto sine = resample_linear(x, 256.0, 200.0);
    double sine_worst = 0.0;
    for (std::size_t i = 0; i + 2 < sine.size(); ++i) {
        const double t = static_cast<double>(i) / 200.0;
        sine_worst =
            std::max(sine_worst, std::fabs(sine[i] - std::sin(2.0 * kPi * 7.0 * t)));
    }

    // p95 vs sort oracle
    auto rng = make_rng(515151);
    double p95_worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> y(1000);
        for (double& v : y) {
            v = gaussian(rng);
        }
        const double p95 = oracle::percentile95_abs(y);
        const auto out = normalize_percentile(y);
        for (std::size_t i = 0; i < y.size(); ++i) {
            p95_worst = std::max(p95_worst, std::fabs(out[i] - y[i] / p95));
        }
    }

    // tokenize count vs sliding oracle
    int count_misses = 0;
    for (int trial = 0; trial < fixture::kTokenizeTrials; ++trial) {
        const std::size_t n = 1000 + bounded(rng, 7000);
        EegRecording rec;
        rec.patient_id = 1;
        rec.channels = {"X"};
        rec.sample_rate = kTargetRateHz;
        rec.data = {std::vector<double>(n, 0.0)};
        if (tokenize(rec, 5.0, 2.5).size() != oracle::window_count(n, 1000, 500)) {
            ++count_misses;
        }
    }

    const bool pass = sine_worst < fixture::kResampleSineTol &&
                      p95_worst <= fixture::kPercentileTol && count_misses == 0;
    return {pass, "sine dev " + fmt(sine_worst) + " (tol " +
                      fmt(fixture::kResampleSineTol) + "); p95 dev " +
                      fmt(p95_worst) + " (tol " + fmt(fixture::kPercentileTol) +
                      "); window-count misses " + std::to_string(count_misses) +
                      "/" + std::to_string(fixture::kTokenizeTrials)};
}

Outcome check_pca_oracle() {
    double worst = 0.0;
    for (std::uint64_t seed : {11ULL, 12ULL, 13ULL}) {
        auto rng = make_rng(seed);
        std::vector<std::vector<double>> rows(400, std::vector<double>(10));
        for (auto& r : rows) {
            for (std::size_t j = 0; j < 10; ++j) {
                const double scale = j == 0 ? 5.0 : (j == 1 ? 2.0 : 0.2);
                r[j] = scale * gaussian(rng);
            }
        }
        const Pca2Result res = pca2(rows, seed);
        const auto jac = oracle::jacobi_eigen(oracle::covariance(rows));
        worst = std::max(worst, std::fabs(res.eigenvalues[0] - jac.eigenvalues[0]));
        worst = std::max(worst, std::fabs(res.eigenvalues[1] - jac.eigenvalues[1]));

        // translation invariance of the projections
        auto shifted = rows;
        for (auto& r : shifted) {
            for (std::size_t j = 0; j < 10; ++j) {
                r[j] += 10.0 * static_cast<double>(j + 1);
            }
        }
        const Pca2Result moved = pca2(shifted, seed);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            worst = std::max(worst, std::fabs(res.points[i][0] - moved.points[i][0]));
            worst = std::max(worst, std::fabs(res.points[i][1] - moved.points[i][1]));
        }
    }
    return {worst <= fixture::kPcaEigenTol,
            "top-2 eigenvalues vs Jacobi + translation invariance: max |diff| " +
                fmt(worst) + " (tol " + fmt(fixture::kPcaEigenTol) + ")"};
}

fs::path g_root;
double g_chain_s = -1.0;  // filled by the end-to-end criterion

Outcome check_end_to_end() {
    const double t0 = now_s();
    const ChainPaths main_run = run_full_chain(g_root / "main", 0.8);
    g_chain_s = now_s() - t0;

    const auto blended = client_bal_acc(main_run.stage2 / "e2_report.tsv");
    if (blended.size() != 4) {
        return {false, "expected 4 clients in the stage-2 report, found " +
                           std::to_string(blended.size())};
    }
    double min_acc = 1.0;
    for (const auto& [client, acc] : blended) {
        min_acc = std::min(min_acc, acc);
    }

    // alpha = 0 rerun on the same pool and seed
    std::ostringstream sink;
    ExperimentConfig e2zero;
    e2zero.mode = "e2";
    e2zero.seed = fixture::kStage2Seed;
    e2zero.out_dir = (g_root / "alpha0").string();
    e2zero.alpha = 0.0;
    e2zero.e2_max_rounds = fixture::kStage2MaxRounds;
    e2zero.e2_target_counts = {7, 7, 6, 8};
    e2zero.data_segments = (main_run.stage2 / "segments.fseg").string();
    e2zero.data_checkpoint = (main_run.stage1 / "e1_model.fprm").string();
    cmd_e2(e2zero, sink);
    const auto overwrite = client_bal_acc(g_root / "alpha0" / "e2_report.tsv");

    int personalization_losses = 0;
    for (const auto& [client, acc] : blended) {
        if (acc < overwrite.at(client) - 1e-12) {
            ++personalization_losses;
        }
    }

    const bool pass = g_chain_s < fixture::kEndToEndBudgetS &&
                      min_acc >= fixture::kE2MinBalancedAccuracy &&
                      personalization_losses == 0;
    return {pass, "both stages " + fmt(g_chain_s) + " s (budget " +
                      fmt(fixture::kEndToEndBudgetS) + "); min client bal acc " +
                      fmt(min_acc) + " (floor " +
                      fmt(fixture::kE2MinBalancedAccuracy) +
                      "); alpha=0.8 < alpha=0 on " +
                      std::to_string(personalization_losses) + " clients"};
}

Outcome check_determinism() {
    const ChainPaths a = run_full_chain(g_root / "det_a", 0.8);
    const ChainPaths b = run_full_chain(g_root / "det_b", 0.8);

    std::vector<std::string> names = {"e1_model.fprm", "e1_rounds.tsv"};
    std::vector<std::string> stage2_names = {"e2_report.tsv", "e2_rounds.tsv",
                                             "tasks.tsv", "e2_embeddings.femb"};
    for (int c = 1; c <= 4; ++c) {
        stage2_names.push_back("e2_head_client" + std::to_string(c) + ".fprm");
    }

    std::vector<std::string> mismatches;
    for (const auto& name : names) {
        if (file_bytes(a.stage1 / name) != file_bytes(b.stage1 / name)) {
            mismatches.push_back(name);
        }
    }
    for (const auto& name : stage2_names) {
        if (file_bytes(a.stage2 / name) != file_bytes(b.stage2 / name)) {
            mismatches.push_back(name);
        }
    }
    if (!mismatches.empty()) {
        std::string list;
        for (const auto& m : mismatches) {
            list += (list.empty() ? "" : ", ") + m;
        }
        return {false, "byte differences in: " + list};
    }
    return {true, std::to_string(names.size() + stage2_names.size()) +
                      " reports and checkpoints bitwise identical across two "
                      "full runs"};
}

} // namespace

int main() {
    g_root = fs::temp_directory_path() /
             ("fedshot_acceptance_" + std::to_string(::getpid()));
    fs::create_directories(g_root);

    struct Criterion {
        const char* name;
        std::function<Outcome()> fn;
        double budget_s;  // <= 0: no runtime ceiling of its own
    };
    const std::vector<Criterion> criteria = {
        {"fedavg-centralized-equivalence", check_fedavg_equivalence,
         fixture::kFedavgBudgetS},
        {"gradient-vs-finite-differences", check_gradient_oracle,
         fixture::kGradientBudgetS},
        {"metric-oracles", check_metric_oracles, fixture::kMetricBudgetS},
        {"eq1-blend-suite", check_blend_suite, 0.0},
        {"early-stopping-exactness", check_early_stopping, 0.0},
        {"episode-invariants", check_episode_invariants, 0.0},
        {"signal-kernels", check_signal_kernels, 0.0},
        {"pca-vs-jacobi", check_pca_oracle, 0.0},
        {"end-to-end-e1-e2", check_end_to_end, 0.0},
        {"bitwise-determinism", check_determinism, 0.0},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        const double t0 = now_s();
        Outcome out;
        try {
            out = c.fn();
        } catch (const std::exception& e) {
            out = {false, std::string("exception: ") + e.what()};
        }
        const double elapsed = now_s() - t0;
        if (c.budget_s > 0.0 && elapsed >= c.budget_s) {
            out.pass = false;
            out.detail += "; RUNTIME " + fmt(elapsed) + " s over budget " +
                          fmt(c.budget_s) + " s";
        }
        failures += out.pass ? 0 : 1;
        std::printf("[%s] %s: %s [%.2f s]\n", out.pass ? "PASS" : "FAIL", c.name,
                    out.detail.c_str(), elapsed);
        std::fflush(stdout);
    }

    std::error_code ec;
    fs::remove_all(g_root, ec);

    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
                criteria.size());
    return failures;
}
