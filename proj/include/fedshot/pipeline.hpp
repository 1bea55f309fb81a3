#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "fedshot/config.hpp"
#include "fedshot/fed.hpp"

namespace fedshot {

/// Subcommand entry points. Each resolves its inputs from the config,
/// writes its outputs plus a replayable manifest under cfg.out_dir, logs
/// a short human-readable summary to `log`, and returns what tests and
/// callers need programmatically. All of them are deterministic given the
/// config.

struct SynthOutcome {
    std::string path;
    std::size_t count = 0;  // recordings or embeddings written
};

SynthOutcome cmd_synth(const ExperimentConfig& cfg, std::ostream& log);

struct PrepOutcome {
    std::string path;
    std::size_t embedded = 0;
    std::size_t skipped = 0;  // segments shorter than one window
};

PrepOutcome cmd_prep(const ExperimentConfig& cfg, std::ostream& log);

struct E1Outcome {
    std::string checkpoint_path;
    std::string rounds_path;
    int rounds_run = 0;
    int best_round = 0;
    double best_metric = 0.0;
};

E1Outcome cmd_e1(const ExperimentConfig& cfg, std::ostream& log);

struct E2Outcome {
    std::string report_path;
    std::string rounds_path;
    std::string tasks_path;
    std::string embeddings_path;
    std::vector<E2ClientResult> clients;
    int rounds_run = 0;
};

E2Outcome cmd_e2(const ExperimentConfig& cfg, std::ostream& log);

struct PcaOutcome {
    std::vector<std::string> files;        // one per projectable client
    std::vector<int> degenerate_clients;   // skipped for zero variance
};

PcaOutcome cmd_pca(const ExperimentConfig& cfg, std::ostream& log);

/// Print a consolidated summary of the reports found under cfg.out_dir.
void cmd_report(const ExperimentConfig& cfg, std::ostream& out);

/// The preprocessing chain of one recording: montage, resample to the
/// target rate, percentile normalization, tokenization. Shared by prep,
/// e1 and e2 so they cannot drift apart.
std::vector<Token> preprocess(const EegRecording& rec,
                              const ExperimentConfig& cfg);

} // namespace fedshot
