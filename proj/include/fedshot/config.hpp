#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "fedshot/episode.hpp"

namespace fedshot {

/// Every knob of a run, flat key = value text on disk. Defaults reproduce
/// the reference two-stage setup; parse() overrides from a file and
/// rejects unknown keys so typos fail loudly.
struct ExperimentConfig {
    // run identity
    std::string mode = "e1";  // e1 | e2 (documentary; the subcommand decides)
    std::uint64_t seed = 1;
    std::string out_dir = "out";
    int threads = 0;  // parallel client training; 0 = auto, env FEDSHOT_THREADS caps

    // federation topology
    int n_clients = 4;
    double alpha = 0.8;         // stage-2 local weight in the local/global blend
    std::string avg = "weighted";  // weighted | uniform

    // preprocessing
    std::vector<std::string> channels;  // empty = the standard 19 10-20 names
    double window_s = 5.0;
    double hop_s = 2.5;
    double target_rate_hz = 200.0;

    // model dimensions
    std::size_t embedding_dim = 256;
    std::size_t hidden_dim = 128;

    // stage 1 (federated fine-tuning)
    double e1_lr = 0.01;
    int e1_local_epochs = 1;
    std::size_t e1_batch_size = 32;
    int e1_max_rounds = 100;
    int e1_patience = 5;
    double e1_val_fraction = 0.2;  // held-out patient share for the stop metric

    // stage 2 (few-shot personalization)
    double e2_lr = 0.05;
    int e2_local_epochs = 5;
    std::size_t e2_batch_size = 0;  // 0 = full batch
    int e2_max_rounds = 100;
    int e2_patience = 5;
    int e2_patients_lo = 5;
    int e2_patients_hi = 8;
    std::vector<int> e2_target_counts;  // empty = draw per-client counts in range
    std::string e2_head_init = "checkpoint";           // checkpoint | fresh
    ClientTypeMap client_types = default_client_types();

    // synthetic data
    std::string synth_kind = "recordings";  // recordings | embeddings
    // all: every patient carries every class in synth.classes.
    // cycle: patient p carries seizure type 1 + (p mod 4) plus background,
    // which matches the default client type profiles for stage 2.
    std::string synth_patient_classes = "all";
    std::size_t synth_patients = 40;
    std::uint32_t synth_first_patient = 1;
    double synth_sample_rate_hz = 256.0;
    double synth_segment_s = 5.0;
    std::size_t synth_segments_per_class = 8;
    std::vector<int> synth_classes = {0, 1, 2, 3, 4, 5};
    double synth_noise_level = 10.0;
    double synth_perturbation = 0.15;

    // inputs; empty = not provided
    std::string data_segments;
    std::string data_embeddings;
    std::string data_checkpoint;

    /// Throws ConfigError when any invariant fails (alpha range, positive
    /// sizes, known enum values, lo <= hi).
    void validate() const;
};

/// Parse a flat key = value file ('#' comments, blank lines ignored) over
/// the given defaults. Unknown keys and unparseable values raise
/// ConfigError naming the offender.
ExperimentConfig load_config(const std::string& path,
                             ExperimentConfig defaults = {});

/// Apply one "key=value" override (the CLI's --set and flag plumbing).
void apply_override(ExperimentConfig& cfg, const std::string& key,
                    const std::string& value);

/// Write every resolved key, defaults included, as parseable key = value
/// text. Doubles are printed round-trip exact, so a manifest replays the
/// run bit for bit.
void write_config(std::ostream& os, const ExperimentConfig& cfg);

/// Worker cap for client fan-out: the configured value bounded by the
/// FEDSHOT_THREADS environment variable when that is set to a positive
/// integer.
int effective_threads(const ExperimentConfig& cfg);

/// The configured channel names, falling back to the standard 19
/// electrode names when the config leaves the list empty.
const std::vector<std::string>& resolved_channels(const ExperimentConfig& cfg);

} // namespace fedshot
