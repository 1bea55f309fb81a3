#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fedshot/embed.hpp"
#include "fedshot/signal.hpp"

namespace fedshot {

/// Additive waveform recipe for one event class, layered on the shared
/// 1/f background noise. Zeroed fields disable their component, so an
/// all-zero recipe reproduces the background generator exactly.
struct ClassWaveform {
    double noise_gain = 1.0;      // multiplier on the background noise level
    double transient_rate = 0.0;  // sharp biphasic pulses per second
    double transient_gain = 0.0;  // pulse amplitude, units of noise level
    double osc_lo_hz = 0.0;       // sustained oscillation band; lo=hi=0 disables
    double osc_hi_hz = 0.0;
    double osc_gain = 0.0;
    bool frontal_weighted = false;  // oscillation mostly on Fp*/F* channels
    double burst_rate = 0.0;        // broadband 20-60 Hz bursts per second
    double burst_gain = 0.0;
};

/// Class recipes keyed by label. Classes 0-2 carry transient trains at
/// distinct rates plus band-distinct oscillations, class 3 a slow frontal
/// drift, class 4 broadband bursts, class 5 plain background.
std::map<int, ClassWaveform> default_class_waveforms();

struct SynthSpec {
    std::size_t n_patients = 4;
    std::uint32_t first_patient_id = 1;
    std::vector<std::string> channels = default_channel_names();
    double sample_rate_hz = 256.0;
    double segment_s = 5.0;
    std::size_t segments_per_class = 2;
    std::vector<int> classes = {0, 1, 2, 3, 4, 5};
    std::map<int, ClassWaveform> waveforms = default_class_waveforms();
    double noise_level = 10.0;          // background 1/f amplitude scale
    double patient_perturbation = 0.15; // per-patient amplitude/frequency jitter
    std::uint64_t seed = 0;

    /// Throws InvalidSpec on nonpositive rates/sizes or bad band edges.
    void validate() const;
};

/// Seeded synthetic EEG: per patient and class, layered recordings with
/// non-IID per-patient perturbations. The noise stream is seeded by
/// (seed, patient, segment index, channel) and never by the label, so a
/// class whose recipe is all zeros is bitwise the background generator.
std::vector<EegRecording> gen_recordings(const SynthSpec& spec);

struct EmbedSynthSpec {
    std::size_t n_patients = 4;
    std::uint32_t first_patient_id = 1;
    std::vector<int> classes = {0, 1, 2, 3, 4, 5};
    std::size_t n_per_class_per_patient = 10;
    std::size_t dim = 256;
    double separation = 4.0;           // norm of each class mean
    double noise_scale = 1.0;          // expected cluster radius
    double patient_offset_scale = 0.5; // norm of the per-patient mean shift
    std::uint64_t seed = 0;

    void validate() const;
};

/// Seeded Gaussian class clusters with per-patient mean offsets, for
/// exercising stage 2 without the signal pipeline. noise_scale may be
/// exactly 0, collapsing each (patient, class) cluster to a point.
std::vector<Embedding> gen_embeddings(const EmbedSynthSpec& spec);

} // namespace fedshot
