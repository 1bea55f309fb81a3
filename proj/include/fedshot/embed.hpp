#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "fedshot/signal.hpp"

namespace fedshot {

inline double elu(double x) { return x >= 0.0 ? x : std::expm1(x); }
inline double elu_deriv(double x) { return x >= 0.0 ? 1.0 : std::exp(x); }

/// Fixed-dimension feature vector for one EEG segment.
struct Embedding {
    std::vector<double> values;
    std::uint64_t segment_id = 0;
    std::uint32_t patient_id = 0;
    int label = 0;

    std::size_t dim() const { return values.size(); }
};

/// Reference encoder: per-token band-power features followed by a 2-layer
/// MLP (ELU hidden), token outputs mean-pooled into one vector. Stands in
/// for a transformer encoder at desk scale while remaining trainable.
struct EncoderParams {
    std::size_t feature_dim = 0;
    std::size_t hidden_dim = 0;
    std::size_t out_dim = 0;
    std::vector<double> w1;  // [feature_dim x hidden_dim], row-major
    std::vector<double> b1;  // [hidden_dim]
    std::vector<double> w2;  // [hidden_dim x out_dim], row-major
    std::vector<double> b2;  // [out_dim]

    bool shapes_consistent() const {
        return w1.size() == feature_dim * hidden_dim && b1.size() == hidden_dim &&
               w2.size() == hidden_dim * out_dim && b2.size() == out_dim;
    }
};

/// Seeded uniform init in [-1/sqrt(fan_in), +1/sqrt(fan_in)].
EncoderParams init_encoder(std::size_t feature_dim, std::size_t hidden_dim,
                           std::size_t out_dim, std::uint64_t seed);

/// Power floor applied before the log in featurize.
inline constexpr double kPowerFloor = 1e-12;

/// Number of spectral bands per channel (delta/theta/alpha/beta/gamma).
inline constexpr std::size_t kBandCount = 5;

/// Log band power per channel in five fixed bands (0.5-4, 4-8, 8-13,
/// 13-30, 30-70 Hz), computed by periodogram summation at 200 Hz. Output
/// length is kBandCount * channel_count.
std::vector<double> featurize(const Token& token);

/// MLP forward for one feature vector.
std::vector<double> encoder_forward(const EncoderParams& params,
                                    const std::vector<double>& features);

/// Featurize every token, run the MLP, mean-pool the per-token outputs.
Embedding encode(const std::vector<Token>& tokens, const EncoderParams& params);

/// FEMB file format (little-endian): magic "FEMB", version u16=1, dim u32,
/// count u32; per record: segment_id u64, patient_id u32, label u8,
/// dim x f32.
void save_embeddings(const std::string& path,
                     const std::vector<Embedding>& embeddings);
std::vector<Embedding> load_embeddings(const std::string& path);

} // namespace fedshot
