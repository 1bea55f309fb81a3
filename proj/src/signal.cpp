#include "fedshot/signal.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "fedshot/errors.hpp"

namespace fedshot {

void EegRecording::validate(int n_classes) const {
    if (sample_rate <= 0.0)
        throw InvalidSpec("sample_rate must be positive");
    if (channels.size() != data.size())
        throw InvalidSpec("channel name count does not match data channel count");
    for (const auto& ch : data) {
        if (ch.size() != samples_per_channel())
            throw InvalidSpec("channels differ in sample count");
    }
    if (label < 0 || label >= n_classes)
        throw InvalidSpec("label " + std::to_string(label) + " outside 0.." +
                          std::to_string(n_classes - 1));
}

MontageSpec::MontageSpec(std::vector<Pair> pairs) : pairs_(std::move(pairs)) {
    for (const auto& [anode, cathode] : pairs_) {
        if (anode == cathode)
            throw InvalidMontage("pair references channel '" + anode +
                                 "' twice");
    }
}

const std::vector<std::string>& default_channel_names() {
    static const std::vector<std::string> names = {
        "Fp1", "Fp2", "F3", "F4", "F7", "F8", "Fz", "C3", "C4", "Cz",
        "P3",  "P4",  "Pz", "T3", "T4", "T5", "T6", "O1", "O2"};
    return names;
}

MontageSpec default_montage() {
    return MontageSpec({
        {"Fp1", "F7"}, {"F7", "T3"}, {"T3", "T5"}, {"T5", "O1"},
        {"Fp2", "F8"}, {"F8", "T4"}, {"T4", "T6"}, {"T6", "O2"},
        {"Fp1", "F3"}, {"F3", "C3"}, {"C3", "P3"}, {"P3", "O1"},
        {"Fp2", "F4"}, {"F4", "C4"}, {"C4", "P4"}, {"P4", "O2"},
        {"Fz", "Cz"}, {"Cz", "Pz"},
    });
}

EegRecording apply_montage(const EegRecording& rec, const MontageSpec& spec) {
    if (spec.empty())
        throw EmptySpec("montage has no pairs");

    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < rec.channels.size(); ++i)
        index.emplace(rec.channels[i], i);

    EegRecording out;
    out.patient_id = rec.patient_id;
    out.sample_rate = rec.sample_rate;
    out.label = rec.label;
    out.channels.reserve(spec.size());
    out.data.reserve(spec.size());

    for (const auto& [anode, cathode] : spec.pairs()) {
        auto a = index.find(anode);
        if (a == index.end())
            throw MissingChannel(anode);
        auto c = index.find(cathode);
        if (c == index.end())
            throw MissingChannel(cathode);

        const auto& va = rec.data[a->second];
        const auto& vc = rec.data[c->second];
        std::vector<double> diff(va.size());
        for (std::size_t i = 0; i < va.size(); ++i)
            diff[i] = va[i] - vc[i];
        out.channels.push_back(anode + "-" + cathode);
        out.data.push_back(std::move(diff));
    }
    return out;
}

std::vector<double> resample_linear(const std::vector<double>& samples,
                                    double src_rate, double dst_rate) {
    if (samples.empty())
        throw EmptyInput("resample_linear: empty sample sequence");
    if (src_rate <= 0.0 || dst_rate <= 0.0)
        throw InvalidArgument("resample_linear: rates must be positive");
    if (src_rate == dst_rate)
        return samples;

    const std::size_t n = samples.size();
    const auto out_len = static_cast<std::size_t>(
        std::llround(static_cast<double>(n) * dst_rate / src_rate));
    std::vector<double> out(out_len);
    const double step = src_rate / dst_rate;  // source samples per output step
    for (std::size_t i = 0; i < out_len; ++i) {
        const double pos = static_cast<double>(i) * step;
        if (pos >= static_cast<double>(n - 1)) {
            out[i] = samples[n - 1];
            continue;
        }
        const auto k = static_cast<std::size_t>(pos);
        const double frac = pos - static_cast<double>(k);
        out[i] = samples[k] + frac * (samples[k + 1] - samples[k]);
    }
    return out;
}

EegRecording resample_recording(const EegRecording& rec, double dst_rate) {
    EegRecording out = rec;
    for (auto& ch : out.data)
        ch = resample_linear(ch, rec.sample_rate, dst_rate);
    out.sample_rate = dst_rate;
    return out;
}

namespace {

// Linear interpolation between closest order statistics, the "linear"
// percentile convention.
double percentile_sorted(const std::vector<double>& sorted, double p) {
    const std::size_t n = sorted.size();
    if (n == 1)
        return sorted[0];
    const double h = p * static_cast<double>(n - 1);
    const auto lo = static_cast<std::size_t>(h);
    if (lo + 1 >= n)
        return sorted[n - 1];
    const double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

} // namespace

std::vector<double> normalize_percentile(const std::vector<double>& samples) {
    if (samples.empty())
        throw EmptyInput("normalize_percentile: empty sample sequence");

    std::vector<double> mags(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i)
        mags[i] = std::abs(samples[i]);
    std::sort(mags.begin(), mags.end());

    const double p95 = percentile_sorted(mags, 0.95);
    const double divisor = std::max(p95, 1e-8);

    std::vector<double> out(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i)
        out[i] = samples[i] / divisor;
    return out;
}

EegRecording normalize_recording(const EegRecording& rec) {
    EegRecording out = rec;
    for (auto& ch : out.data)
        ch = normalize_percentile(ch);
    return out;
}

std::vector<Token> tokenize(const EegRecording& rec, double window_s,
                            double hop_s) {
    if (window_s <= 0.0)
        throw InvalidArgument("tokenize: window_s must be positive");
    if (hop_s <= 0.0 || hop_s > window_s)
        throw InvalidArgument("tokenize: need 0 < hop_s <= window_s");
    if (rec.sample_rate != kTargetRateHz)
        throw InvalidArgument("tokenize: recording must be at 200 Hz");

    const auto window = static_cast<std::size_t>(
        std::llround(window_s * kTargetRateHz));
    const auto hop = static_cast<std::size_t>(
        std::llround(hop_s * kTargetRateHz));
    const std::size_t total = rec.samples_per_channel();
    if (total < window)
        throw TooShort("recording has " + std::to_string(total) +
                       " samples, window needs " + std::to_string(window));

    const std::size_t count = (total - window) / hop + 1;
    std::vector<Token> tokens;
    tokens.reserve(count);
    for (std::size_t w = 0; w < count; ++w) {
        Token tok;
        tok.window_index = w;
        tok.data.reserve(rec.channel_count());
        const std::size_t start = w * hop;
        for (const auto& ch : rec.data)
            tok.data.emplace_back(ch.begin() + static_cast<std::ptrdiff_t>(start),
                                  ch.begin() + static_cast<std::ptrdiff_t>(start + window));
        tokens.push_back(std::move(tok));
    }
    return tokens;
}

} // namespace fedshot
