#include "fedshot/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include "fedshot/embed.hpp"
#include "fedshot/errors.hpp"
#include "fedshot/io.hpp"
#include "fedshot/metrics.hpp"
#include "fedshot/rng.hpp"
#include "fedshot/synth.hpp"

namespace fedshot {

namespace fs = std::filesystem;

namespace {

// seed-mixing tags for the independent random streams of a run
constexpr std::uint64_t kTagEncoderInit = 0x656e63ULL;   // "enc"
constexpr std::uint64_t kTagHeadInit = 0x68656164ULL;    // "head"
constexpr std::uint64_t kTagHeadInitE2 = 0x686432ULL;    // "hd2"
constexpr std::uint64_t kTagE1Val = 0x6531766cULL;       // "e1vl"
constexpr std::uint64_t kTagTask = 0x653274ULL;          // "e2t"
constexpr std::uint64_t kTagPca = 0x706361ULL;           // "pca"

std::string fmt17(double v) {
    std::ostringstream ss;
    ss << std::setprecision(17) << v;
    return ss.str();
}

fs::path out_path(const ExperimentConfig& cfg, const std::string& name) {
    return fs::path(cfg.out_dir) / name;
}

void ensure_out_dir(const ExperimentConfig& cfg) {
    std::error_code ec;
    fs::create_directories(cfg.out_dir, ec);
    if (ec) {
        throw IoError("cannot create output directory '" + cfg.out_dir +
                      "': " + ec.message());
    }
}

// Every subcommand drops the fully resolved config next to its outputs,
// so any run can be replayed from its own directory.
void write_manifest(const ExperimentConfig& cfg, const char* subcommand) {
    const fs::path path = out_path(cfg, std::string(subcommand) + "_manifest.txt");
    std::ofstream os(path);
    if (!os) {
        throw IoError("cannot write manifest '" + path.string() + "'");
    }
    os << "# replay: fedshot " << subcommand << " --config <this file>\n";
    write_config(os, cfg);
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream os(path);
    if (!os) {
        throw IoError("cannot write '" + path.string() + "'");
    }
    return os;
}

// Resolve an input file: the explicit config path when given, otherwise a
// conventional file in out_dir. Missing input is a data error naming what
// was looked for.
std::string resolve_input(const ExperimentConfig& cfg, const std::string& explicit_path,
                          const std::string& fallback_name, const char* what) {
    if (!explicit_path.empty()) {
        if (!fs::exists(explicit_path)) {
            throw IoError(std::string(what) + " file '" + explicit_path + "' not found");
        }
        return explicit_path;
    }
    const fs::path fallback = out_path(cfg, fallback_name);
    if (!fs::exists(fallback)) {
        throw IoError(std::string(what) + " not configured and '" + fallback.string() +
                      "' not found");
    }
    return fallback.string();
}

// Load segments and stamp each with a stable id: patient id in the high
// word, the per-patient running index in the low word.
std::vector<EegRecording> load_input_segments(const ExperimentConfig& cfg,
                                              const std::string& path,
                                              std::vector<std::uint64_t>& ids_out) {
    auto recs = load_segments(path, resolved_channels(cfg));
    ids_out.clear();
    ids_out.reserve(recs.size());
    std::map<std::uint32_t, std::uint64_t> next_index;
    for (const auto& rec : recs) {
        const std::uint64_t idx = next_index[rec.patient_id]++;
        ids_out.push_back((static_cast<std::uint64_t>(rec.patient_id) << 32) | idx);
    }
    return recs;
}

std::size_t montage_feature_dim() {
    return kBandCount * default_montage().size();
}

EncoderParams encoder_from_params(const ParamVector& pv, const ExperimentConfig& cfg) {
    const bool joint = std::any_of(
        pv.layout.tensors.begin(), pv.layout.tensors.end(),
        [](const TensorSpec& t) { return t.name.rfind("head.", 0) == 0; });
    EncoderParams enc =
        unflatten_encoder(joint ? slice_params(pv, "encoder.") : pv);
    if (enc.feature_dim != montage_feature_dim()) {
        std::ostringstream msg;
        msg << "checkpoint encoder expects " << enc.feature_dim
            << " input features but the montage produces " << montage_feature_dim();
        throw DimensionMismatch(msg.str());
    }
    (void)cfg;
    return enc;
}

EncoderParams resolve_encoder(const ExperimentConfig& cfg) {
    if (cfg.data_checkpoint.empty()) {
        return init_encoder(montage_feature_dim(), cfg.hidden_dim, cfg.embedding_dim,
                            mix_seed(cfg.seed, kTagEncoderInit));
    }
    if (!fs::exists(cfg.data_checkpoint)) {
        throw MissingEncoder("checkpoint '" + cfg.data_checkpoint + "' not found");
    }
    return encoder_from_params(load_params(cfg.data_checkpoint), cfg);
}

// Rethrow a module error with the segment that tripped it named.
[[noreturn]] void rethrow_with_segment(const Error& e, const EegRecording& rec,
                                       std::uint64_t segment_id) {
    std::ostringstream msg;
    msg << "segment " << segment_id << " (patient " << rec.patient_id
        << "): " << e.what();
    throw Error(e.kind(), msg.str());
}

SynthSpec synth_spec_of(const ExperimentConfig& cfg) {
    SynthSpec spec;
    spec.n_patients = cfg.synth_patients;
    spec.first_patient_id = cfg.synth_first_patient;
    spec.channels = resolved_channels(cfg);
    spec.sample_rate_hz = cfg.synth_sample_rate_hz;
    spec.segment_s = cfg.synth_segment_s;
    spec.segments_per_class = cfg.synth_segments_per_class;
    spec.classes = cfg.synth_classes;
    spec.noise_level = cfg.synth_noise_level;
    spec.patient_perturbation = cfg.synth_perturbation;
    spec.seed = cfg.seed;
    return spec;
}

std::string join_u64(const std::vector<std::uint64_t>& v) {
    std::ostringstream ss;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) {
            ss << ",";
        }
        ss << v[i];
    }
    return ss.str();
}

std::string join_int(const std::vector<int>& v) {
    std::ostringstream ss;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) {
            ss << ",";
        }
        ss << v[i];
    }
    return ss.str();
}

void write_round_history(const fs::path& path, const std::vector<RoundReport>& history) {
    auto os = open_out(path);
    os << "round";
    if (!history.empty()) {
        for (int id : history.front().participants) {
            os << "\tloss_client" << id;
        }
    }
    os << "\tval_metric\tbest_metric\tstagnation\n";
    for (const auto& r : history) {
        os << r.round_index;
        for (double loss : r.client_losses) {
            os << "\t" << fmt17(loss);
        }
        os << "\t" << fmt17(r.global_metric) << "\t" << fmt17(r.best_metric) << "\t"
           << r.stagnation << "\n";
    }
}

FedRunConfig fed_config_e1(const ExperimentConfig& cfg) {
    FedRunConfig fc;
    fc.max_rounds = cfg.e1_max_rounds;
    fc.patience = cfg.e1_patience;
    fc.local_epochs = cfg.e1_local_epochs;
    fc.lr = cfg.e1_lr;
    fc.batch_size = cfg.e1_batch_size;
    fc.uniform_avg = cfg.avg == "uniform";
    fc.seed = cfg.seed;
    fc.threads = effective_threads(cfg);
    return fc;
}

FedRunConfig fed_config_e2(const ExperimentConfig& cfg) {
    FedRunConfig fc;
    fc.max_rounds = cfg.e2_max_rounds;
    fc.patience = cfg.e2_patience;
    fc.local_epochs = cfg.e2_local_epochs;
    fc.lr = cfg.e2_lr;
    fc.batch_size = cfg.e2_batch_size;
    fc.uniform_avg = cfg.avg == "uniform";
    fc.alpha = cfg.alpha;
    fc.seed = cfg.seed;
    fc.threads = effective_threads(cfg);
    return fc;
}

} // namespace

std::vector<Token> preprocess(const EegRecording& rec, const ExperimentConfig& cfg) {
    EegRecording work = apply_montage(rec, default_montage());
    work = resample_recording(work, cfg.target_rate_hz);
    work = normalize_recording(work);
    return tokenize(work, cfg.window_s, cfg.hop_s);
}

SynthOutcome cmd_synth(const ExperimentConfig& cfg, std::ostream& log) {
    cfg.validate();
    ensure_out_dir(cfg);
    SynthOutcome out;
    if (cfg.synth_kind == "embeddings") {
        EmbedSynthSpec spec;
        spec.n_patients = cfg.synth_patients;
        spec.first_patient_id = cfg.synth_first_patient;
        spec.classes = cfg.synth_classes;
        spec.n_per_class_per_patient = cfg.synth_segments_per_class;
        spec.dim = cfg.embedding_dim;
        spec.seed = cfg.seed;
        const auto embs = gen_embeddings(spec);
        out.path = out_path(cfg, "embeddings.femb").string();
        save_embeddings(out.path, embs);
        out.count = embs.size();
        log << "synth: wrote " << out.count << " embeddings (dim " << spec.dim
            << ") to " << out.path << "\n";
    } else if (cfg.synth_patient_classes == "cycle") {
        // one seizure type per patient, cycling 1..4, plus background;
        // lines the pool up with the default client type profiles
        std::vector<EegRecording> recs;
        for (std::size_t p = 0; p < cfg.synth_patients; ++p) {
            SynthSpec spec = synth_spec_of(cfg);
            spec.n_patients = 1;
            spec.first_patient_id =
                cfg.synth_first_patient + static_cast<std::uint32_t>(p);
            spec.classes = {1 + static_cast<int>(p % 4), kBackgroundClass};
            auto part = gen_recordings(spec);
            recs.insert(recs.end(), std::make_move_iterator(part.begin()),
                        std::make_move_iterator(part.end()));
        }
        out.path = out_path(cfg, "segments.fseg").string();
        save_segments(out.path, recs);
        out.count = recs.size();
        log << "synth: wrote " << out.count << " recordings (" << cfg.synth_patients
            << " patients, one seizure type each) to " << out.path << "\n";
    } else {
        const auto recs = gen_recordings(synth_spec_of(cfg));
        out.path = out_path(cfg, "segments.fseg").string();
        save_segments(out.path, recs);
        out.count = recs.size();
        log << "synth: wrote " << out.count << " recordings (" << cfg.synth_patients
            << " patients) to " << out.path << "\n";
    }
    write_manifest(cfg, "synth");
    return out;
}

PrepOutcome cmd_prep(const ExperimentConfig& cfg, std::ostream& log) {
    cfg.validate();
    ensure_out_dir(cfg);
    const std::string in =
        resolve_input(cfg, cfg.data_segments, "segments.fseg", "segment input");
    std::vector<std::uint64_t> ids;
    const auto recs = load_input_segments(cfg, in, ids);
    const EncoderParams encoder = resolve_encoder(cfg);

    PrepOutcome out;
    std::vector<Embedding> embs;
    embs.reserve(recs.size());
    for (std::size_t i = 0; i < recs.size(); ++i) {
        std::vector<Token> tokens;
        try {
            tokens = preprocess(recs[i], cfg);
        } catch (const TooShort& e) {
            ++out.skipped;
            log << "prep: warning: segment " << ids[i] << " skipped: " << e.what()
                << "\n";
            continue;
        } catch (const Error& e) {
            rethrow_with_segment(e, recs[i], ids[i]);
        }
        try {
            Embedding emb = encode(tokens, encoder);
            emb.segment_id = ids[i];
            emb.patient_id = recs[i].patient_id;
            emb.label = recs[i].label;
            embs.push_back(std::move(emb));
        } catch (const Error& e) {
            rethrow_with_segment(e, recs[i], ids[i]);
        }
    }
    out.path = out_path(cfg, "embeddings.femb").string();
    save_embeddings(out.path, embs);
    out.embedded = embs.size();
    write_manifest(cfg, "prep");
    log << "prep: embedded " << out.embedded << " of " << recs.size() << " segments ("
        << out.skipped << " too short) to " << out.path << "\n";
    return out;
}

namespace {

// Tokenize and featurize every usable segment; segments shorter than one
// window are dropped (with a note) exactly as in cmd_prep.
std::vector<SegmentFeatures> features_of_segments(const ExperimentConfig& cfg,
                                                  const std::vector<EegRecording>& recs,
                                                  const std::vector<std::uint64_t>& ids,
                                                  std::size_t& skipped, std::ostream& log,
                                                  const char* stage) {
    std::vector<SegmentFeatures> out;
    out.reserve(recs.size());
    for (std::size_t i = 0; i < recs.size(); ++i) {
        std::vector<Token> tokens;
        try {
            tokens = preprocess(recs[i], cfg);
        } catch (const TooShort& e) {
            ++skipped;
            log << stage << ": warning: segment " << ids[i] << " skipped: " << e.what()
                << "\n";
            continue;
        } catch (const Error& e) {
            rethrow_with_segment(e, recs[i], ids[i]);
        }
        SegmentFeatures sf;
        sf.segment_id = ids[i];
        sf.patient_id = recs[i].patient_id;
        sf.label = recs[i].label;
        sf.token_features.reserve(tokens.size());
        for (const auto& tok : tokens) {
            sf.token_features.push_back(featurize(tok));
        }
        out.push_back(std::move(sf));
    }
    return out;
}

} // namespace

E1Outcome cmd_e1(const ExperimentConfig& cfg, std::ostream& log) {
    cfg.validate();
    ensure_out_dir(cfg);
    const std::string in =
        resolve_input(cfg, cfg.data_segments, "segments.fseg", "segment input");
    std::vector<std::uint64_t> ids;
    const auto recs = load_input_segments(cfg, in, ids);
    std::size_t skipped = 0;
    auto features = features_of_segments(cfg, recs, ids, skipped, log, "e1");
    if (features.empty()) {
        throw EmptyInput("no usable segments for stage 1");
    }

    std::map<std::uint32_t, std::vector<SegmentFeatures>> by_patient;
    for (auto& sf : features) {
        by_patient[sf.patient_id].push_back(std::move(sf));
    }
    std::vector<std::uint32_t> patients;
    patients.reserve(by_patient.size());
    for (const auto& [pid, segs] : by_patient) {
        patients.push_back(pid);
        (void)segs;
    }

    // held-out patients provide the early-stopping metric
    std::vector<std::uint32_t> shuffled = patients;
    auto val_rng = make_rng(mix_seed(cfg.seed, kTagE1Val));
    seeded_shuffle(shuffled, val_rng);
    std::size_t n_val = static_cast<std::size_t>(
        cfg.e1_val_fraction * static_cast<double>(patients.size()));
    if (cfg.e1_val_fraction > 0.0 && n_val == 0) {
        n_val = 1;
    }
    if (n_val >= patients.size()) {
        n_val = patients.size() - 1;
    }
    std::vector<std::uint32_t> val_patients(shuffled.begin(),
                                            shuffled.begin() + static_cast<long>(n_val));
    std::vector<std::uint32_t> train_patients(shuffled.begin() + static_cast<long>(n_val),
                                              shuffled.end());
    std::sort(train_patients.begin(), train_patients.end());
    std::sort(val_patients.begin(), val_patients.end());

    const ClientAssignment assignment =
        partition_e1(train_patients, cfg.n_clients, cfg.seed);
    std::vector<E1ClientData> clients;
    clients.reserve(assignment.patients.size());
    for (const auto& [client_id, pids] : assignment.patients) {
        E1ClientData data;
        data.client_id = client_id;
        std::vector<std::uint32_t> ordered = pids;
        std::sort(ordered.begin(), ordered.end());
        for (std::uint32_t pid : ordered) {
            for (const auto& sf : by_patient.at(pid)) {
                data.train.push_back(sf);
            }
        }
        clients.push_back(std::move(data));
    }

    std::vector<const SegmentFeatures*> val_segments;
    const auto& metric_patients = val_patients.empty() ? train_patients : val_patients;
    for (std::uint32_t pid : metric_patients) {
        for (const auto& sf : by_patient.at(pid)) {
            val_segments.push_back(&sf);
        }
    }
    const auto validate = [&](const JointModel& model) {
        ConfusionMatrix cm(model.head.n_classes);
        for (const auto* sf : val_segments) {
            cm.add(sf->label, joint_predict(model, *sf));
        }
        return balanced_accuracy(cm);
    };

    const JointModel init{
        init_encoder(montage_feature_dim(), cfg.hidden_dim, cfg.embedding_dim,
                     mix_seed(cfg.seed, kTagEncoderInit)),
        init_head(cfg.embedding_dim, 6, mix_seed(cfg.seed, kTagHeadInit))};

    const E1Result res = run_e1(fed_config_e1(cfg), clients, init, validate);

    E1Outcome out;
    out.checkpoint_path = out_path(cfg, "e1_model.fprm").string();
    save_params(out.checkpoint_path, res.global);
    out.rounds_path = out_path(cfg, "e1_rounds.tsv").string();
    write_round_history(out.rounds_path, res.history);
    out.rounds_run = static_cast<int>(res.history.size());
    out.best_round = res.best_round;
    out.best_metric =
        res.best_round > 0
            ? res.history[static_cast<std::size_t>(res.best_round) - 1].global_metric
            : 0.0;
    write_manifest(cfg, "e1");
    log << "e1: " << out.rounds_run << " rounds over " << clients.size()
        << " clients (" << train_patients.size() << " train / " << val_patients.size()
        << " validation patients); best val balanced accuracy "
        << fmt17(out.best_metric) << " at round " << out.best_round << "\n";
    log << "e1: checkpoint " << out.checkpoint_path << "\n";
    return out;
}

namespace {

std::vector<int> report_types(const ExperimentConfig& cfg, int client_id,
                              const std::vector<FewShotTask>& tasks,
                              const std::vector<Embedding>& pool) {
    auto it = cfg.client_types.find(client_id);
    if (it != cfg.client_types.end()) {
        return std::vector<int>(it->second.begin(), it->second.end());
    }
    // no configured profile: report what the assigned patients carry
    std::set<int> types;
    std::set<std::uint32_t> pids;
    for (const auto& t : tasks) {
        pids.insert(t.patient_id);
    }
    for (const auto& e : pool) {
        if (pids.count(e.patient_id) > 0 && is_seizure_class(e.label)) {
            types.insert(e.label);
        }
    }
    types.insert(kBackgroundClass);
    return std::vector<int>(types.begin(), types.end());
}

} // namespace

E2Outcome cmd_e2(const ExperimentConfig& cfg, std::ostream& log) {
    cfg.validate();
    ensure_out_dir(cfg);

    // pool embeddings: precomputed when given, otherwise raw segments
    // pushed through the frozen checkpoint encoder
    std::vector<Embedding> pool;
    ParamVector checkpoint;
    bool have_checkpoint = false;
    const auto load_checkpoint = [&]() -> const ParamVector& {
        if (!have_checkpoint) {
            const std::string path = !cfg.data_checkpoint.empty()
                                         ? cfg.data_checkpoint
                                         : out_path(cfg, "e1_model.fprm").string();
            if (!fs::exists(path)) {
                throw MissingEncoder("checkpoint '" + path + "' not found");
            }
            checkpoint = load_params(path);
            have_checkpoint = true;
        }
        return checkpoint;
    };

    if (!cfg.data_embeddings.empty()) {
        if (!fs::exists(cfg.data_embeddings)) {
            throw IoError("embeddings file '" + cfg.data_embeddings + "' not found");
        }
        pool = load_embeddings(cfg.data_embeddings);
    } else {
        const std::string segpath =
            resolve_input(cfg, cfg.data_segments, "segments.fseg", "segment input");
        const EncoderParams encoder = encoder_from_params(load_checkpoint(), cfg);
        std::vector<std::uint64_t> ids;
        const auto recs = load_input_segments(cfg, segpath, ids);
        std::size_t skipped = 0;
        for (std::size_t i = 0; i < recs.size(); ++i) {
            std::vector<Token> tokens;
            try {
                tokens = preprocess(recs[i], cfg);
            } catch (const TooShort& e) {
                ++skipped;
                log << "e2: warning: segment " << ids[i] << " skipped: " << e.what()
                    << "\n";
                continue;
            } catch (const Error& e) {
                rethrow_with_segment(e, recs[i], ids[i]);
            }
            Embedding emb = encode(tokens, encoder);
            emb.segment_id = ids[i];
            emb.patient_id = recs[i].patient_id;
            emb.label = recs[i].label;
            pool.push_back(std::move(emb));
        }
        if (skipped > 0) {
            log << "e2: " << skipped << " segments were too short for one window\n";
        }
    }
    if (pool.empty()) {
        throw EmptyInput("no embeddings available for stage 2");
    }

    ClassifierHead head0;
    if (cfg.e2_head_init == "checkpoint") {
        head0 = unflatten_head(slice_params(load_checkpoint(), "head."));
    } else {
        head0 = init_head(pool.front().dim(), 6, mix_seed(cfg.seed, kTagHeadInitE2));
    }
    if (head0.dim != pool.front().dim()) {
        std::ostringstream msg;
        msg << "head expects dimension " << head0.dim << " but embeddings have "
            << pool.front().dim();
        throw DimensionMismatch(msg.str());
    }

    E2Outcome out;
    out.embeddings_path = out_path(cfg, "e2_embeddings.femb").string();
    save_embeddings(out.embeddings_path, pool);

    const ClientAssignment assignment = partition_e2(
        patient_types_of(pool), cfg.n_clients, cfg.seed,
        {cfg.e2_patients_lo, cfg.e2_patients_hi}, cfg.client_types,
        cfg.e2_target_counts);
    const auto by_patient = group_by_patient(pool);

    std::vector<E2ClientData> clients;
    clients.reserve(assignment.patients.size());
    for (const auto& [client_id, pids] : assignment.patients) {
        E2ClientData data;
        data.client_id = client_id;
        std::vector<std::uint32_t> ordered = pids;
        std::sort(ordered.begin(), ordered.end());
        for (std::uint32_t pid : ordered) {
            data.tasks.push_back(
                build_task(by_patient.at(pid), mix_seed(cfg.seed, kTagTask, pid)));
        }
        data.seizure_types = report_types(cfg, client_id, data.tasks, pool);
        clients.push_back(std::move(data));
    }

    E2Result res = run_e2(fed_config_e2(cfg), clients, head0);

    // task manifest: every split of every patient, replayable by id
    out.tasks_path = out_path(cfg, "tasks.tsv").string();
    {
        auto os = open_out(out.tasks_path);
        os << "client_id\tpatient_id\tsupport_ids\tvalidation_ids\tquery_ids\n";
        for (const auto& c : clients) {
            for (const auto& task : c.tasks) {
                const auto ids_of = [](const std::vector<Embedding>& part) {
                    std::vector<std::uint64_t> ids;
                    ids.reserve(part.size());
                    for (const auto& e : part) {
                        ids.push_back(e.segment_id);
                    }
                    return ids;
                };
                os << c.client_id << "\t" << task.patient_id << "\t"
                   << join_u64(ids_of(task.support)) << "\t"
                   << join_u64(ids_of(task.validation)) << "\t"
                   << join_u64(ids_of(task.query)) << "\n";
            }
        }
    }

    out.rounds_path = out_path(cfg, "e2_rounds.tsv").string();
    write_round_history(out.rounds_path, res.history);

    out.report_path = out_path(cfg, "e2_report.tsv").string();
    {
        auto os = open_out(out.report_path);
        os << "client\tseizure_types\tpatients\tbal_acc\tkappa\tweighted_f1\n";
        for (const auto& c : res.clients) {
            os << c.client_id << "\t" << join_int(c.seizure_types) << "\t"
               << c.n_patients << "\t" << fmt17(c.balanced_accuracy) << "\t"
               << fmt17(c.kappa) << "\t" << fmt17(c.weighted_f1) << "\n";
        }
    }

    for (const auto& c : res.clients) {
        std::ostringstream name;
        name << "e2_head_client" << c.client_id << ".fprm";
        save_params(out_path(cfg, name.str()).string(), c.best_params);
    }

    out.rounds_run = static_cast<int>(res.history.size());
    write_manifest(cfg, "e2");
    for (const auto& c : res.clients) {
        log << "e2: client " << c.client_id << " types {" << join_int(c.seizure_types)
            << "} patients " << c.n_patients << " balanced accuracy "
            << fmt17(c.balanced_accuracy) << " kappa " << fmt17(c.kappa)
            << (c.kappa_degenerate ? " (degenerate marginals)" : "") << " weighted F1 "
            << fmt17(c.weighted_f1) << "\n";
    }
    log << "e2: " << out.rounds_run << " rounds; report " << out.report_path << "\n";
    out.clients = std::move(res.clients);
    return out;
}

namespace {

struct TaskRow {
    int client_id = 0;
    std::uint32_t patient_id = 0;
    std::vector<std::uint64_t> support;
    std::vector<std::uint64_t> query;
};

std::vector<std::uint64_t> parse_id_list(const std::string& field) {
    std::vector<std::uint64_t> out;
    std::stringstream ss(field);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) {
            out.push_back(std::stoull(item));
        }
    }
    return out;
}

std::vector<TaskRow> parse_tasks_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open task manifest '" + path + "'");
    }
    std::vector<TaskRow> rows;
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        if (header) {
            header = false;
            continue;
        }
        if (line.empty()) {
            continue;
        }
        std::stringstream ss(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ss, field, '\t')) {
            fields.push_back(field);
        }
        if (fields.size() != 5) {
            throw IoError("malformed task manifest line in '" + path + "'");
        }
        TaskRow row;
        row.client_id = std::stoi(fields[0]);
        row.patient_id = static_cast<std::uint32_t>(std::stoul(fields[1]));
        row.support = parse_id_list(fields[2]);
        row.query = parse_id_list(fields[4]);
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace

PcaOutcome cmd_pca(const ExperimentConfig& cfg, std::ostream& log) {
    cfg.validate();
    ensure_out_dir(cfg);

    std::string emb_path;
    if (!cfg.data_embeddings.empty()) {
        if (!fs::exists(cfg.data_embeddings)) {
            throw IoError("embeddings file '" + cfg.data_embeddings + "' not found");
        }
        emb_path = cfg.data_embeddings;
    } else if (fs::exists(out_path(cfg, "e2_embeddings.femb"))) {
        emb_path = out_path(cfg, "e2_embeddings.femb").string();
    } else if (fs::exists(out_path(cfg, "embeddings.femb"))) {
        emb_path = out_path(cfg, "embeddings.femb").string();
    } else {
        throw IoError("no embeddings found under '" + cfg.out_dir + "'");
    }
    const auto pool = load_embeddings(emb_path);
    std::map<std::uint64_t, const Embedding*> by_id;
    for (const auto& e : pool) {
        by_id[e.segment_id] = &e;
    }

    const auto rows = parse_tasks_file(out_path(cfg, "tasks.tsv").string());
    std::map<int, std::vector<std::pair<const Embedding*, const char*>>> per_client;
    for (const auto& row : rows) {
        auto& items = per_client[row.client_id];
        for (std::uint64_t id : row.support) {
            auto it = by_id.find(id);
            if (it == by_id.end()) {
                throw IoError("segment " + std::to_string(id) +
                              " from the task manifest is missing from '" + emb_path +
                              "'");
            }
            items.emplace_back(it->second, "support");
        }
        for (std::uint64_t id : row.query) {
            auto it = by_id.find(id);
            if (it == by_id.end()) {
                throw IoError("segment " + std::to_string(id) +
                              " from the task manifest is missing from '" + emb_path +
                              "'");
            }
            items.emplace_back(it->second, "query");
        }
    }

    PcaOutcome out;
    for (const auto& [client_id, items] : per_client) {
        std::vector<std::vector<double>> data;
        data.reserve(items.size());
        for (const auto& [emb, split] : items) {
            data.push_back(emb->values);
            (void)split;
        }
        Pca2Result pca;
        try {
            pca = pca2(data, mix_seed(cfg.seed, kTagPca,
                                      static_cast<std::uint64_t>(client_id)));
        } catch (const RankDeficient& e) {
            log << "pca: client " << client_id << " skipped: " << e.what() << "\n";
            out.degenerate_clients.push_back(client_id);
            continue;
        }
        std::ostringstream name;
        name << "pca_client" << client_id << ".tsv";
        const fs::path path = out_path(cfg, name.str());
        auto os = open_out(path);
        os << "segment_id\tpatient_id\tlabel\tsplit\tpc1\tpc2\n";
        for (std::size_t i = 0; i < items.size(); ++i) {
            const auto& [emb, split] = items[i];
            os << emb->segment_id << "\t" << emb->patient_id << "\t" << emb->label
               << "\t" << split << "\t" << fmt17(pca.points[i][0]) << "\t"
               << fmt17(pca.points[i][1]) << "\n";
        }
        out.files.push_back(path.string());
        log << "pca: client " << client_id << " projected " << items.size()
            << " embeddings (explained variance " << fmt17(pca.explained_variance[0])
            << " + " << fmt17(pca.explained_variance[1]) << ") to " << path.string()
            << "\n";
    }
    write_manifest(cfg, "pca");
    return out;
}

void cmd_report(const ExperimentConfig& cfg, std::ostream& os) {
    cfg.validate();
    bool found = false;
    const fs::path e1_rounds = out_path(cfg, "e1_rounds.tsv");
    if (fs::exists(e1_rounds)) {
        found = true;
        os << "== stage 1 rounds (" << e1_rounds.string() << ") ==\n";
        std::ifstream in(e1_rounds);
        os << in.rdbuf();
    }
    const fs::path e2_report = out_path(cfg, "e2_report.tsv");
    if (fs::exists(e2_report)) {
        found = true;
        os << "== stage 2 per-client report (" << e2_report.string() << ") ==\n";
        std::ifstream in(e2_report);
        os << in.rdbuf();
    }
    const fs::path e2_rounds = out_path(cfg, "e2_rounds.tsv");
    if (fs::exists(e2_rounds)) {
        found = true;
        os << "== stage 2 rounds (" << e2_rounds.string() << ") ==\n";
        std::ifstream in(e2_rounds);
        os << in.rdbuf();
    }
    if (!found) {
        throw IoError("no reports under '" + cfg.out_dir + "'");
    }
}

} // namespace fedshot
