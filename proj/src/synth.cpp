#include "fedshot/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "fedshot/errors.hpp"
#include "fedshot/rng.hpp"

namespace fedshot {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Rotating phasor: one sinusoid advanced by multiply-add per sample, no
// trig calls inside the sample loop.
struct Oscillator {
    double c, s;    // current phase as (cos, sin)
    double cw, sw;  // per-sample rotation
    double amp;

    Oscillator(double freq_hz, double phase, double amplitude, double rate_hz)
        : c(std::cos(phase)),
          s(std::sin(phase)),
          cw(std::cos(kTwoPi * freq_hz / rate_hz)),
          sw(std::sin(kTwoPi * freq_hz / rate_hz)),
          amp(amplitude) {}

    double step() {
        const double out = amp * s;
        const double nc = c * cw - s * sw;
        s = s * cw + c * sw;
        c = nc;
        return out;
    }
};

constexpr std::size_t kNoiseOscillators = 16;
constexpr double kNoiseLoHz = 0.5;
constexpr double kNoiseHiHz = 80.0;

// 1/f-shaped background: log-spaced sinusoids with 1/sqrt(f) amplitudes
// and seeded phases, normalized to unit RMS before scaling.
void add_background(std::vector<double>& out, double rate_hz, double level,
                    std::mt19937_64& rng) {
    std::vector<Oscillator> bank;
    bank.reserve(kNoiseOscillators);
    double power = 0.0;
    for (std::size_t j = 0; j < kNoiseOscillators; ++j) {
        const double frac =
            static_cast<double>(j) / static_cast<double>(kNoiseOscillators - 1);
        const double freq = kNoiseLoHz * std::pow(kNoiseHiHz / kNoiseLoHz, frac);
        const double amp = 1.0 / std::sqrt(freq);
        power += 0.5 * amp * amp;
        bank.emplace_back(freq, uniform_in(rng, 0.0, kTwoPi), amp, rate_hz);
    }
    const double scale = level / std::sqrt(power);
    for (double& x : out) {
        double acc = 0.0;
        for (auto& osc : bank) {
            acc += osc.step();
        }
        x += scale * acc;
    }
}

// Sharp biphasic pulse train: a positive lobe followed by a negative one,
// jittered around an even spacing.
void add_transients(std::vector<double>& out, double rate_hz, double pulses_per_s,
                    double amp, std::mt19937_64& rng) {
    constexpr double kLobeWidthS = 0.02;
    constexpr double kLobeGapS = 0.03;
    const double dur_s = static_cast<double>(out.size()) / rate_hz;
    const auto count = static_cast<std::size_t>(std::llround(pulses_per_s * dur_s));
    for (std::size_t k = 0; k < count; ++k) {
        const double t0 = (static_cast<double>(k) + 0.2 + 0.6 * uniform01(rng)) /
                          pulses_per_s;
        const double span = kLobeGapS + 4.0 * kLobeWidthS;
        const auto lo = static_cast<std::size_t>(
            std::max(0.0, std::floor((t0 - span) * rate_hz)));
        const auto hi = std::min(out.size(), static_cast<std::size_t>(std::max(
                                                 0.0, std::ceil((t0 + span) * rate_hz))));
        for (std::size_t i = lo; i < hi; ++i) {
            const double t = static_cast<double>(i) / rate_hz;
            const double a = (t - t0) / kLobeWidthS;
            const double b = (t - t0 - kLobeGapS) / kLobeWidthS;
            out[i] += amp * (std::exp(-a * a) - std::exp(-b * b));
        }
    }
}

// Broadband bursts: Hann-windowed packets of summed 20-60 Hz sinusoids.
void add_bursts(std::vector<double>& out, double rate_hz, double bursts_per_s,
                double amp, std::mt19937_64& rng) {
    constexpr double kBurstWidthS = 0.3;
    constexpr std::size_t kBurstTones = 6;
    const double dur_s = static_cast<double>(out.size()) / rate_hz;
    const auto count = static_cast<std::size_t>(std::llround(bursts_per_s * dur_s));
    for (std::size_t k = 0; k < count; ++k) {
        const double t0 = (static_cast<double>(k) + 0.2 + 0.6 * uniform01(rng)) /
                          bursts_per_s;
        std::vector<Oscillator> tones;
        tones.reserve(kBurstTones);
        for (std::size_t j = 0; j < kBurstTones; ++j) {
            tones.emplace_back(uniform_in(rng, 20.0, 60.0),
                               uniform_in(rng, 0.0, kTwoPi),
                               1.0 / static_cast<double>(kBurstTones), rate_hz);
        }
        const auto lo = static_cast<std::size_t>(
            std::max(0.0, std::floor((t0 - kBurstWidthS / 2) * rate_hz)));
        const auto hi = std::min(
            out.size(), static_cast<std::size_t>(
                            std::max(0.0, std::ceil((t0 + kBurstWidthS / 2) * rate_hz))));
        // advance the phasors to the window start so the tone phase does
        // not depend on where the window got clipped
        for (std::size_t i = 0; i < lo; ++i) {
            for (auto& tone : tones) {
                tone.step();
            }
        }
        for (std::size_t i = lo; i < hi; ++i) {
            const double t = static_cast<double>(i) / rate_hz;
            const double u = (t - t0) / kBurstWidthS + 0.5;
            const double env = 0.5 - 0.5 * std::cos(kTwoPi * std::clamp(u, 0.0, 1.0));
            double acc = 0.0;
            for (auto& tone : tones) {
                acc += tone.step();
            }
            out[i] += amp * env * acc;
        }
    }
}

bool frontal_channel(const std::string& name) {
    return !name.empty() && name.front() == 'F';
}

} // namespace

std::map<int, ClassWaveform> default_class_waveforms() {
    std::map<int, ClassWaveform> w;
    w[0] = {1.0, 3.0, 6.0, 2.0, 3.5, 1.5, false, 0.0, 0.0};
    w[1] = {1.0, 1.5, 5.0, 5.0, 7.0, 2.0, false, 0.0, 0.0};
    w[2] = {1.0, 1.0, 5.0, 9.0, 12.0, 2.0, false, 0.0, 0.0};
    w[3] = {1.0, 0.0, 0.0, 0.6, 1.2, 4.0, true, 0.0, 0.0};
    w[4] = {1.0, 0.0, 0.0, 0.0, 0.0, 0.0, false, 1.2, 3.5};
    w[5] = {};
    return w;
}

void SynthSpec::validate() const {
    if (n_patients == 0) {
        throw InvalidSpec("n_patients must be positive");
    }
    if (channels.empty()) {
        throw InvalidSpec("channel list is empty");
    }
    if (!(sample_rate_hz > 0.0)) {
        throw InvalidSpec("sample rate must be positive");
    }
    if (!(segment_s > 0.0)) {
        throw InvalidSpec("segment duration must be positive");
    }
    if (segments_per_class == 0) {
        throw InvalidSpec("segments_per_class must be positive");
    }
    if (classes.empty()) {
        throw InvalidSpec("class list is empty");
    }
    if (!(noise_level > 0.0)) {
        throw InvalidSpec("noise level must be positive");
    }
    if (patient_perturbation < 0.0) {
        throw InvalidSpec("patient perturbation must be nonnegative");
    }
    for (int c : classes) {
        if (c < 0 || c > 5) {
            std::ostringstream msg;
            msg << "class id " << c << " outside 0..5";
            throw InvalidSpec(msg.str());
        }
        auto it = waveforms.find(c);
        if (it == waveforms.end()) {
            std::ostringstream msg;
            msg << "no waveform recipe for class " << c;
            throw InvalidSpec(msg.str());
        }
        const auto& wf = it->second;
        if (wf.noise_gain < 0.0 || wf.transient_rate < 0.0 || wf.transient_gain < 0.0 ||
            wf.osc_gain < 0.0 || wf.burst_rate < 0.0 || wf.burst_gain < 0.0) {
            std::ostringstream msg;
            msg << "negative gain or rate in waveform for class " << c;
            throw InvalidSpec(msg.str());
        }
        if (wf.osc_lo_hz < 0.0 || wf.osc_hi_hz < wf.osc_lo_hz) {
            std::ostringstream msg;
            msg << "bad oscillation band for class " << c;
            throw InvalidSpec(msg.str());
        }
        if (wf.osc_gain > 0.0 && wf.osc_hi_hz >= sample_rate_hz / 2.0) {
            std::ostringstream msg;
            msg << "oscillation band for class " << c << " exceeds the Nyquist rate";
            throw InvalidSpec(msg.str());
        }
    }
}

std::vector<EegRecording> gen_recordings(const SynthSpec& spec) {
    spec.validate();
    const auto samples =
        static_cast<std::size_t>(std::llround(spec.segment_s * spec.sample_rate_hz));
    const std::size_t per_patient = spec.classes.size() * spec.segments_per_class;

    std::vector<EegRecording> out;
    out.reserve(spec.n_patients * per_patient);
    for (std::size_t p = 0; p < spec.n_patients; ++p) {
        const std::uint32_t patient_id =
            spec.first_patient_id + static_cast<std::uint32_t>(p);

        // per-patient non-IID character: a global amplitude gain and a
        // frequency stretch applied to the class components
        auto pert_rng = make_rng(mix_seed(spec.seed, 0x70657274ULL, patient_id));
        const double amp_p = std::max(
            0.2, 1.0 + spec.patient_perturbation * gaussian(pert_rng));
        const double freq_p = std::clamp(
            1.0 + 0.5 * spec.patient_perturbation * gaussian(pert_rng), 0.5, 2.0);

        for (std::size_t seg = 0; seg < per_patient; ++seg) {
            const int label = spec.classes[seg / spec.segments_per_class];
            const ClassWaveform& wf = spec.waveforms.at(label);

            EegRecording rec;
            rec.patient_id = patient_id;
            rec.channels = spec.channels;
            rec.sample_rate = spec.sample_rate_hz;
            rec.label = label;
            rec.data.assign(spec.channels.size(), std::vector<double>(samples, 0.0));

            // class-component draws shared by all channels of the segment
            auto cls_rng =
                make_rng(mix_seed(spec.seed, 0x636c7373ULL, patient_id,
                                  static_cast<std::uint64_t>(seg)));
            const bool has_osc = wf.osc_gain > 0.0 && wf.osc_hi_hz > 0.0;
            const double osc_freq =
                has_osc ? std::min(uniform_in(cls_rng, wf.osc_lo_hz, wf.osc_hi_hz) * freq_p,
                                   0.95 * spec.sample_rate_hz / 2.0)
                        : 0.0;

            for (std::size_t ch = 0; ch < spec.channels.size(); ++ch) {
                auto& sig = rec.data[ch];

                // keyed by the within-class repeat, not the class slot, so
                // an all-zero recipe is bitwise the background generator
                const std::uint64_t repeat = seg % spec.segments_per_class;
                auto noise_rng =
                    make_rng(mix_seed(spec.seed, 0x6e6f6973ULL, patient_id,
                                      repeat, static_cast<std::uint64_t>(ch)));
                add_background(sig, spec.sample_rate_hz,
                               amp_p * spec.noise_level * wf.noise_gain, noise_rng);

                if (has_osc) {
                    double gain = uniform_in(cls_rng, 0.7, 1.3);
                    if (wf.frontal_weighted) {
                        gain = frontal_channel(spec.channels[ch]) ? gain : 0.15 * gain;
                    }
                    Oscillator osc(osc_freq, uniform_in(cls_rng, 0.0, kTwoPi),
                                   amp_p * spec.noise_level * wf.osc_gain * gain,
                                   spec.sample_rate_hz);
                    for (double& x : sig) {
                        x += osc.step();
                    }
                }
                if (wf.transient_rate > 0.0 && wf.transient_gain > 0.0) {
                    const double chan_gain = uniform_in(cls_rng, 0.5, 1.5);
                    add_transients(sig, spec.sample_rate_hz, wf.transient_rate * freq_p,
                                   amp_p * spec.noise_level * wf.transient_gain * chan_gain,
                                   cls_rng);
                }
                if (wf.burst_rate > 0.0 && wf.burst_gain > 0.0) {
                    add_bursts(sig, spec.sample_rate_hz, wf.burst_rate * freq_p,
                               amp_p * spec.noise_level * wf.burst_gain, cls_rng);
                }
            }
            out.push_back(std::move(rec));
        }
    }
    return out;
}

void EmbedSynthSpec::validate() const {
    if (n_patients == 0 || n_per_class_per_patient == 0) {
        throw InvalidSpec("patient and per-class counts must be positive");
    }
    if (dim == 0) {
        throw InvalidSpec("embedding dimension must be positive");
    }
    if (classes.empty()) {
        throw InvalidSpec("class list is empty");
    }
    for (int c : classes) {
        if (c < 0 || c > 5) {
            std::ostringstream msg;
            msg << "class id " << c << " outside 0..5";
            throw InvalidSpec(msg.str());
        }
    }
    if (!(separation > 0.0)) {
        throw InvalidSpec("class separation must be positive");
    }
    if (noise_scale < 0.0 || patient_offset_scale < 0.0) {
        throw InvalidSpec("noise and offset scales must be nonnegative");
    }
}

namespace {

std::vector<double> seeded_unit_vector(std::uint64_t seed, std::size_t dim) {
    auto rng = make_rng(seed);
    std::vector<double> v(dim);
    double norm = 0.0;
    do {
        norm = 0.0;
        for (double& x : v) {
            x = gaussian(rng);
            norm += x * x;
        }
        norm = std::sqrt(norm);
    } while (norm < 1e-12);
    for (double& x : v) {
        x /= norm;
    }
    return v;
}

} // namespace

std::vector<Embedding> gen_embeddings(const EmbedSynthSpec& spec) {
    spec.validate();
    std::map<int, std::vector<double>> class_means;
    for (int c : spec.classes) {
        auto mean = seeded_unit_vector(
            mix_seed(spec.seed, 0x636d65ULL, static_cast<std::uint64_t>(c)), spec.dim);
        for (double& x : mean) {
            x *= spec.separation;
        }
        class_means[c] = std::move(mean);
    }
    const double coord_noise =
        spec.noise_scale / std::sqrt(static_cast<double>(spec.dim));

    std::vector<Embedding> out;
    out.reserve(spec.n_patients * spec.classes.size() * spec.n_per_class_per_patient);
    for (std::size_t p = 0; p < spec.n_patients; ++p) {
        const std::uint32_t patient_id =
            spec.first_patient_id + static_cast<std::uint32_t>(p);
        auto offset = seeded_unit_vector(mix_seed(spec.seed, 0x706f6666ULL, patient_id),
                                         spec.dim);
        for (double& x : offset) {
            x *= spec.patient_offset_scale;
        }
        std::uint64_t index = 0;
        for (int c : spec.classes) {
            const auto& mean = class_means.at(c);
            auto rng = make_rng(mix_seed(spec.seed, 0x656d6273ULL, patient_id,
                                         static_cast<std::uint64_t>(c)));
            for (std::size_t k = 0; k < spec.n_per_class_per_patient; ++k) {
                Embedding e;
                e.patient_id = patient_id;
                e.label = c;
                e.segment_id = (static_cast<std::uint64_t>(patient_id) << 32) | index++;
                e.values.resize(spec.dim);
                for (std::size_t d = 0; d < spec.dim; ++d) {
                    e.values[d] = mean[d] + offset[d] + coord_noise * gaussian(rng);
                }
                out.push_back(std::move(e));
            }
        }
    }
    return out;
}

} // namespace fedshot
