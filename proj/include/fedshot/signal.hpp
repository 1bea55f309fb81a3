#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace fedshot {

/// Target rate of the preprocessing chain; tokenization assumes input
/// already resampled to this rate.
inline constexpr double kTargetRateHz = 200.0;

/// Multi-channel raw EEG with one label per recording (one recording ==
/// one labeled segment).
struct EegRecording {
    std::uint32_t patient_id = 0;
    std::vector<std::string> channels;         // ordered channel names
    double sample_rate = 0.0;                  // Hz
    std::vector<std::vector<double>> data;     // [channel][sample]
    int label = 0;                             // event class id, 0..5

    std::size_t channel_count() const { return data.size(); }
    std::size_t samples_per_channel() const {
        return data.empty() ? 0 : data.front().size();
    }
    /// Throws InvalidSpec if any type invariant is violated.
    void validate(int n_classes = 6) const;
};

/// One fixed-length window, all channels time-aligned.
struct Token {
    std::vector<std::vector<double>> data;  // [channel][sample]
    std::size_t window_index = 0;

    std::size_t channel_count() const { return data.size(); }
    std::size_t samples_per_channel() const {
        return data.empty() ? 0 : data.front().size();
    }
};

/// Ordered (anode, cathode) channel-name pairs. Construction rejects pairs
/// that reference the same channel twice.
class MontageSpec {
public:
    using Pair = std::pair<std::string, std::string>;

    MontageSpec() = default;
    explicit MontageSpec(std::vector<Pair> pairs);

    const std::vector<Pair>& pairs() const { return pairs_; }
    bool empty() const { return pairs_.empty(); }
    std::size_t size() const { return pairs_.size(); }

private:
    std::vector<Pair> pairs_;
};

/// The standard 18-pair longitudinal ("double banana") montage over the
/// 19 10-20 electrodes. Channel naming is dataset-dependent, so this is a
/// default, not a requirement.
MontageSpec default_montage();

/// The 19 electrode names used by default_montage() and the synthetic
/// generator, in canonical order.
const std::vector<std::string>& default_channel_names();

/// Bipolar re-reference: one output channel per pair, anode minus cathode.
/// Sample rate, label and patient id are preserved.
EegRecording apply_montage(const EegRecording& rec, const MontageSpec& spec);

/// Linear-interpolation resampling. Output sample i sits at time
/// i / dst_rate; positions past the final source sample clamp to the last
/// value. Output length is round(n * dst_rate / src_rate).
std::vector<double> resample_linear(const std::vector<double>& samples,
                                    double src_rate, double dst_rate);

/// Resample every channel of a recording to dst_rate.
EegRecording resample_recording(const EegRecording& rec, double dst_rate);

/// Divide by the 95th percentile of absolute values (linear interpolation
/// between order statistics), floored at 1e-8 so flat channels come out
/// all-zero instead of faulting.
std::vector<double> normalize_percentile(const std::vector<double>& samples);

EegRecording normalize_recording(const EegRecording& rec);

/// Left-aligned overlapping windows; the trailing partial window is
/// discarded. Requires the recording to be at kTargetRateHz already.
std::vector<Token> tokenize(const EegRecording& rec, double window_s = 5.0,
                            double hop_s = 2.5);

} // namespace fedshot
