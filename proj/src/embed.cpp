#include "fedshot/embed.hpp"

#include <cmath>
#include <complex>

#include "fedshot/errors.hpp"
#include "fedshot/io.hpp"
#include "fedshot/rng.hpp"

namespace fedshot {

namespace {

constexpr double kPi = 3.14159265358979323846;

// In-place iterative radix-2 FFT. Size must be a power of two.
void fft_pow2(std::vector<std::complex<double>>& a) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1)
            j ^= bit;
        j ^= bit;
        if (i < j)
            std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = -2.0 * kPi / static_cast<double>(len);
        const std::complex<double> wl(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const auto u = a[i + k];
                const auto v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
}

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n)
        p <<= 1;
    return p;
}

struct Band {
    double lo, hi;
};
constexpr Band kBands[kBandCount] = {
    {0.5, 4.0}, {4.0, 8.0}, {8.0, 13.0}, {13.0, 30.0}, {30.0, 70.0}};

} // namespace

std::vector<double> featurize(const Token& token) {
    std::vector<double> out;
    out.reserve(kBandCount * token.channel_count());

    const std::size_t n = token.samples_per_channel();
    const std::size_t padded = next_pow2(std::max<std::size_t>(n, 2));
    // Periodogram over the zero-padded window; bin k sits at
    // k * rate / padded Hz. Bands are half-open [lo, hi).
    const double bin_hz = kTargetRateHz / static_cast<double>(padded);

    std::vector<std::complex<double>> spectrum(padded);
    for (const auto& ch : token.data) {
        for (std::size_t i = 0; i < padded; ++i)
            spectrum[i] = i < n ? std::complex<double>(ch[i], 0.0)
                                : std::complex<double>(0.0, 0.0);
        fft_pow2(spectrum);

        double power[kBandCount] = {0, 0, 0, 0, 0};
        for (std::size_t k = 1; k <= padded / 2; ++k) {
            const double f = static_cast<double>(k) * bin_hz;
            const double p = std::norm(spectrum[k]);
            for (std::size_t b = 0; b < kBandCount; ++b) {
                if (f >= kBands[b].lo && f < kBands[b].hi) {
                    power[b] += p;
                    break;
                }
            }
        }
        for (double p : power)
            out.push_back(std::log(std::max(p, kPowerFloor)));
    }
    return out;
}

EncoderParams init_encoder(std::size_t feature_dim, std::size_t hidden_dim,
                           std::size_t out_dim, std::uint64_t seed) {
    EncoderParams p;
    p.feature_dim = feature_dim;
    p.hidden_dim = hidden_dim;
    p.out_dim = out_dim;
    p.w1.resize(feature_dim * hidden_dim);
    p.b1.assign(hidden_dim, 0.0);
    p.w2.resize(hidden_dim * out_dim);
    p.b2.assign(out_dim, 0.0);

    auto rng = make_rng(mix_seed(seed, 0x656e63ULL));  // "enc"
    const double a1 = 1.0 / std::sqrt(static_cast<double>(feature_dim));
    for (auto& w : p.w1)
        w = uniform_in(rng, -a1, a1);
    const double a2 = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
    for (auto& w : p.w2)
        w = uniform_in(rng, -a2, a2);
    return p;
}

std::vector<double> encoder_forward(const EncoderParams& params,
                                    const std::vector<double>& features) {
    if (features.size() != params.feature_dim)
        throw DimensionMismatch("encoder_forward: feature vector has " +
                                std::to_string(features.size()) +
                                " entries, encoder expects " +
                                std::to_string(params.feature_dim));
    std::vector<double> hidden(params.hidden_dim);
    for (std::size_t j = 0; j < params.hidden_dim; ++j) {
        double acc = params.b1[j];
        for (std::size_t i = 0; i < params.feature_dim; ++i)
            acc += params.w1[i * params.hidden_dim + j] * features[i];
        hidden[j] = elu(acc);
    }
    std::vector<double> out(params.out_dim);
    for (std::size_t k = 0; k < params.out_dim; ++k) {
        double acc = params.b2[k];
        for (std::size_t j = 0; j < params.hidden_dim; ++j)
            acc += params.w2[j * params.out_dim + k] * hidden[j];
        out[k] = acc;
    }
    return out;
}

Embedding encode(const std::vector<Token>& tokens, const EncoderParams& params) {
    if (tokens.empty())
        throw EmptyTokenSequence("encode: no tokens");

    Embedding emb;
    emb.values.assign(params.out_dim, 0.0);
    for (const auto& tok : tokens) {
        const auto rep = encoder_forward(params, featurize(tok));
        for (std::size_t k = 0; k < params.out_dim; ++k)
            emb.values[k] += rep[k];
    }
    const double inv = 1.0 / static_cast<double>(tokens.size());
    for (auto& v : emb.values)
        v *= inv;
    return emb;
}

void save_embeddings(const std::string& path,
                     const std::vector<Embedding>& embeddings) {
    const std::size_t dim = embeddings.empty() ? 0 : embeddings.front().dim();
    for (const auto& e : embeddings)
        if (e.dim() != dim)
            throw DimensionMismatch("save_embeddings: mixed dimensions");

    std::string buf;
    buf.append("FEMB");
    wire::put_le<std::uint16_t>(buf, 1);
    wire::put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(dim));
    wire::put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(embeddings.size()));
    for (const auto& e : embeddings) {
        wire::put_le<std::uint64_t>(buf, e.segment_id);
        wire::put_le<std::uint32_t>(buf, e.patient_id);
        wire::put_le<std::uint8_t>(buf, static_cast<std::uint8_t>(e.label));
        for (double v : e.values)
            wire::put_f32(buf, static_cast<float>(v));
    }
    wire::write_file(path, buf);
}

std::vector<Embedding> load_embeddings(const std::string& path) {
    wire::Reader r(wire::read_file(path), path);
    if (r.get_bytes(4) != "FEMB")
        throw BadMagic(path + ": expected FEMB");
    const auto version = r.get_le<std::uint16_t>();
    if (version != 1)
        throw BadVersion(path + ": unsupported version " + std::to_string(version));
    const auto dim = r.get_le<std::uint32_t>();
    const auto count = r.get_le<std::uint32_t>();
    std::vector<Embedding> out;
    out.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        Embedding e;
        e.segment_id = r.get_le<std::uint64_t>();
        e.patient_id = r.get_le<std::uint32_t>();
        e.label = r.get_le<std::uint8_t>();
        e.values.resize(dim);
        for (auto& v : e.values)
            v = r.get_f32();
        out.push_back(std::move(e));
    }
    if (!r.exhausted())
        throw DimensionMismatch(path + ": trailing bytes after declared records");
    return out;
}

} // namespace fedshot
