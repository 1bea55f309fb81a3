#include "fedshot/fed.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "fedshot/errors.hpp"
#include "fedshot/rng.hpp"

namespace fedshot {

ParamVector fedavg(const std::vector<ClientUpdate>& updates, bool uniform_avg) {
    if (updates.empty()) {
        throw EmptyUpdateSet("fedavg over zero client updates");
    }
    std::vector<const ClientUpdate*> ordered;
    ordered.reserve(updates.size());
    for (const auto& u : updates) {
        if (!uniform_avg && u.sample_count == 0) {
            std::ostringstream msg;
            msg << "client " << u.client_id << " reports zero samples";
            throw InvalidArgument(msg.str());
        }
        ordered.push_back(&u);
    }
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const ClientUpdate* a, const ClientUpdate* b) {
                         return a->client_id < b->client_id;
                     });
    for (std::size_t i = 1; i < ordered.size(); ++i) {
        if (ordered[i]->client_id == ordered[i - 1]->client_id) {
            std::ostringstream msg;
            msg << "client " << ordered[i]->client_id
                << " appears twice in one round";
            throw InvalidArgument(msg.str());
        }
    }
    for (const auto* u : ordered) {
        require_same_layout(ordered.front()->params, u->params, "fedavg");
    }

    double total_weight = 0.0;
    for (const auto* u : ordered) {
        total_weight += uniform_avg ? 1.0 : static_cast<double>(u->sample_count);
    }

    ParamVector out = ordered.front()->params;
    std::fill(out.values.begin(), out.values.end(), 0.0);
    for (const auto* u : ordered) {
        const double w =
            (uniform_avg ? 1.0 : static_cast<double>(u->sample_count)) / total_weight;
        for (std::size_t i = 0; i < out.values.size(); ++i) {
            out.values[i] += w * u->params.values[i];
        }
    }
    return out;
}

ParamVector blend(const ParamVector& local, const ParamVector& global_params,
                  double alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
        std::ostringstream msg;
        msg << "alpha " << alpha << " outside [0, 1]";
        throw AlphaOutOfRange(msg.str());
    }
    require_same_layout(local, global_params, "blend");
    ParamVector out = local;
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        out.values[i] = alpha * local.values[i] + (1.0 - alpha) * global_params.values[i];
    }
    return out;
}

namespace {

int resolve_threads(int requested, std::size_t n_clients) {
    if (n_clients <= 1) {
        return 1;
    }
    int t = requested;
    if (t <= 0) {
        const unsigned hw = std::thread::hardware_concurrency();
        t = hw == 0 ? 1 : static_cast<int>(hw);
    }
    return static_cast<int>(
        std::min<std::size_t>(static_cast<std::size_t>(t), n_clients));
}

// Run fn(0..n-1), fanning out over `threads` workers. Each index owns its
// output slot, so scheduling order cannot affect results. The first
// exception wins and is rethrown after all workers drain.
void for_each_slot(std::size_t n, int threads,
                   const std::function<void(std::size_t)>& fn) {
    if (threads <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            fn(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mu;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            while (!failed.load(std::memory_order_relaxed)) {
                const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
                if (i >= n) {
                    return;
                }
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mu);
                    if (!error) {
                        error = std::current_exception();
                    }
                    failed.store(true, std::memory_order_relaxed);
                    return;
                }
            }
        });
    }
    for (auto& th : pool) {
        th.join();
    }
    if (error) {
        std::rethrow_exception(error);
    }
}

// Seeded minibatch SGD on the joint model over one client's segments.
// batch_size 0 means full batch. Returns updated params and the
// sample-weighted mean training loss across all processed batches.
std::pair<ParamVector, double> train_joint(const ParamVector& start,
                                           const std::vector<SegmentFeatures>& data,
                                           int epochs, double lr,
                                           std::size_t batch_size,
                                           std::uint64_t seed) {
    if (data.empty()) {
        throw EmptyBatch("local training with no segments");
    }
    const std::size_t bs = batch_size == 0 ? data.size() : batch_size;
    ParamVector params = start;
    JointModel model = unflatten_joint(params);
    auto rng = make_rng(seed);
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);

    double loss_sum = 0.0;
    std::size_t loss_count = 0;
    for (int epoch = 0; epoch < epochs; ++epoch) {
        seeded_shuffle(order, rng);
        for (std::size_t pos = 0; pos < order.size(); pos += bs) {
            std::vector<const SegmentFeatures*> batch;
            const std::size_t stop = std::min(order.size(), pos + bs);
            batch.reserve(stop - pos);
            for (std::size_t i = pos; i < stop; ++i) {
                batch.push_back(&data[order[i]]);
            }
            const auto [loss, grad] = joint_loss_and_grad(model, batch);
            loss_sum += loss * static_cast<double>(batch.size());
            loss_count += batch.size();
            params = sgd_step(params, grad, lr);
            model = unflatten_joint(params);
        }
    }
    return {std::move(params), loss_sum / static_cast<double>(loss_count)};
}

// Same loop shape for the head alone, over embedding pointers.
std::pair<ParamVector, double> train_head(const ParamVector& start,
                                          const std::vector<const Embedding*>& data,
                                          int epochs, double lr,
                                          std::size_t batch_size,
                                          std::uint64_t seed) {
    if (data.empty()) {
        throw EmptyBatch("local training with no support segments");
    }
    const std::size_t bs = batch_size == 0 ? data.size() : batch_size;
    ParamVector params = start;
    ClassifierHead head = unflatten_head(params);
    auto rng = make_rng(seed);
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);

    double loss_sum = 0.0;
    std::size_t loss_count = 0;
    for (int epoch = 0; epoch < epochs; ++epoch) {
        seeded_shuffle(order, rng);
        for (std::size_t pos = 0; pos < order.size(); pos += bs) {
            EmbeddingBatch batch;
            const std::size_t stop = std::min(order.size(), pos + bs);
            batch.items.reserve(stop - pos);
            for (std::size_t i = pos; i < stop; ++i) {
                batch.items.push_back(data[order[i]]);
            }
            const auto [loss, grad] = loss_and_grad(head, batch);
            loss_sum += loss * static_cast<double>(batch.items.size());
            loss_count += batch.items.size();
            params = sgd_step(params, grad, lr);
            head = unflatten_head(params);
        }
    }
    return {std::move(params), loss_sum / static_cast<double>(loss_count)};
}

double balanced_accuracy_of(const ClassifierHead& head,
                            const std::vector<const Embedding*>& data) {
    ConfusionMatrix cm(head.n_classes);
    for (const auto* e : data) {
        cm.add(e->label, predict(head, *e));
    }
    return balanced_accuracy(cm);
}

template <typename ClientT>
std::vector<std::size_t> order_by_client_id(const std::vector<ClientT>& clients) {
    std::vector<std::size_t> order(clients.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return clients[a].client_id < clients[b].client_id;
    });
    for (std::size_t i = 1; i < order.size(); ++i) {
        if (clients[order[i - 1]].client_id == clients[order[i]].client_id) {
            std::ostringstream msg;
            msg << "duplicate client id " << clients[order[i]].client_id;
            throw InvalidArgument(msg.str());
        }
    }
    return order;
}

} // namespace

E1Result run_e1(const FedRunConfig& cfg, const std::vector<E1ClientData>& clients,
                const JointModel& init,
                const std::function<double(const JointModel&)>& validate) {
    if (clients.empty()) {
        throw NoClients("stage 1 requires at least one client");
    }
    const auto report_order = order_by_client_id(clients);
    const int threads = resolve_threads(cfg.threads, clients.size());

    ParamVector global = flatten(init);
    E1Result out;
    double best = -std::numeric_limits<double>::infinity();
    int stagnation = 0;

    std::vector<ClientUpdate> updates(clients.size());
    std::vector<double> losses(clients.size(), 0.0);
    for (int round = 1; round <= cfg.max_rounds; ++round) {
        for_each_slot(clients.size(), threads, [&](std::size_t i) {
            const auto& c = clients[i];
            const std::uint64_t s =
                mix_seed(cfg.seed, 0x653172ULL, static_cast<std::uint64_t>(round),
                         static_cast<std::uint64_t>(c.client_id));
            auto [params, loss] = train_joint(global, c.train, cfg.local_epochs,
                                              cfg.lr, cfg.batch_size, s);
            updates[i] = ClientUpdate{c.client_id, c.train.size(), std::move(params)};
            losses[i] = loss;
        });
        global = fedavg(updates, cfg.uniform_avg);
        const double metric = validate(unflatten_joint(global));

        RoundReport rep;
        rep.round_index = round;
        for (std::size_t i : report_order) {
            rep.participants.push_back(clients[i].client_id);
            rep.client_losses.push_back(losses[i]);
        }
        if (metric > best) {
            best = metric;
            stagnation = 0;
            out.global = global;
            out.best_round = round;
        } else {
            ++stagnation;
        }
        rep.global_metric = metric;
        rep.best_metric = best;
        rep.stagnation = stagnation;
        out.history.push_back(std::move(rep));
        if (stagnation >= cfg.patience) {
            break;
        }
    }
    return out;
}

E2Result run_e2(const FedRunConfig& cfg, const std::vector<E2ClientData>& clients,
                const ClassifierHead& head_init) {
    if (clients.empty()) {
        throw NoClients("stage 2 requires at least one client");
    }
    if (!(cfg.alpha >= 0.0 && cfg.alpha <= 1.0)) {
        std::ostringstream msg;
        msg << "alpha " << cfg.alpha << " outside [0, 1]";
        throw AlphaOutOfRange(msg.str());
    }
    for (const auto& c : clients) {
        if (c.tasks.empty()) {
            std::ostringstream msg;
            msg << "client " << c.client_id << " has no few-shot tasks";
            throw NoTasks(msg.str());
        }
    }
    const auto report_order = order_by_client_id(clients);
    const int threads = resolve_threads(cfg.threads, clients.size());
    const std::size_t n = clients.size();

    // Per-client unions over tasks: support drives training, validation
    // drives model selection, query is only touched after the last round.
    std::vector<std::vector<const Embedding*>> support(n), validation(n), query(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (const auto& task : clients[i].tasks) {
            for (const auto& e : task.support) support[i].push_back(&e);
            for (const auto& e : task.validation) validation[i].push_back(&e);
            for (const auto& e : task.query) query[i].push_back(&e);
        }
    }

    const ParamVector head0 = flatten(head_init);
    std::vector<ParamVector> current(n, head0);
    std::vector<ParamVector> best_params(n, head0);
    std::vector<double> best_val(n, -std::numeric_limits<double>::infinity());
    std::vector<int> best_round(n, 0);

    E2Result out;
    double best_mean = -std::numeric_limits<double>::infinity();
    int stagnation = 0;

    std::vector<ClientUpdate> updates(n);
    std::vector<double> losses(n, 0.0);
    std::vector<double> val(n, 0.0);
    for (int round = 1; round <= cfg.max_rounds; ++round) {
        for_each_slot(n, threads, [&](std::size_t i) {
            const auto& c = clients[i];
            const std::uint64_t s =
                mix_seed(cfg.seed, 0x653272ULL, static_cast<std::uint64_t>(round),
                         static_cast<std::uint64_t>(c.client_id));
            auto [params, loss] = train_head(current[i], support[i], cfg.local_epochs,
                                             cfg.lr, cfg.batch_size, s);
            updates[i] = ClientUpdate{c.client_id, support[i].size(), std::move(params)};
            losses[i] = loss;
        });
        const ParamVector global = fedavg(updates, cfg.uniform_avg);
        for_each_slot(n, threads, [&](std::size_t i) {
            current[i] = blend(updates[i].params, global, cfg.alpha);
            val[i] = balanced_accuracy_of(unflatten_head(current[i]), validation[i]);
        });
        for (std::size_t i = 0; i < n; ++i) {
            if (val[i] > best_val[i]) {
                best_val[i] = val[i];
                best_params[i] = current[i];
                best_round[i] = round;
            }
        }
        double mean_val = 0.0;
        for (std::size_t i : report_order) {
            mean_val += val[i];
        }
        mean_val /= static_cast<double>(n);

        RoundReport rep;
        rep.round_index = round;
        for (std::size_t i : report_order) {
            rep.participants.push_back(clients[i].client_id);
            rep.client_losses.push_back(losses[i]);
        }
        if (mean_val > best_mean) {
            best_mean = mean_val;
            stagnation = 0;
        } else {
            ++stagnation;
        }
        rep.global_metric = mean_val;
        rep.best_metric = best_mean;
        rep.stagnation = stagnation;
        out.history.push_back(std::move(rep));
        if (stagnation >= cfg.patience) {
            break;
        }
    }

    out.clients.reserve(n);
    for (std::size_t i : report_order) {
        const ClassifierHead head = unflatten_head(best_params[i]);
        ConfusionMatrix cm(head.n_classes);
        for (const auto* e : query[i]) {
            cm.add(e->label, predict(head, *e));
        }
        E2ClientResult res;
        res.client_id = clients[i].client_id;
        res.seizure_types = clients[i].seizure_types;
        res.n_patients = clients[i].tasks.size();
        res.best_round = best_round[i];
        res.validation_metric = best_val[i];
        res.balanced_accuracy = balanced_accuracy(cm);
        res.kappa = cohens_kappa(cm, &res.kappa_degenerate);
        res.weighted_f1 = weighted_f1(cm);
        res.confusion = cm;
        res.best_params = best_params[i];
        res.final_params = current[i];
        out.clients.push_back(std::move(res));
    }
    return out;
}

} // namespace fedshot
