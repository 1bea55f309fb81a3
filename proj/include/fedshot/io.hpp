#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "fedshot/errors.hpp"
#include "fedshot/params.hpp"
#include "fedshot/signal.hpp"

namespace fedshot {

// All on-disk formats are little-endian regardless of host byte order.
namespace wire {

inline void put_bytes(std::string& buf, const void* p, std::size_t n) {
    buf.append(static_cast<const char*>(p), n);
}

template <typename T>
void put_le(std::string& buf, T value) {
    static_assert(std::is_integral_v<T>);
    for (std::size_t i = 0; i < sizeof(T); ++i)
        buf.push_back(static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xff));
}

inline void put_f32(std::string& buf, float value) {
    put_le(buf, std::bit_cast<std::uint32_t>(value));
}

class Reader {
public:
    Reader(std::string data, std::string context)
        : data_(std::move(data)), context_(std::move(context)) {}

    template <typename T>
    T get_le() {
        static_assert(std::is_integral_v<T>);
        need(sizeof(T));
        std::uint64_t v = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i)
            v |= static_cast<std::uint64_t>(
                     static_cast<unsigned char>(data_[pos_ + i]))
                 << (8 * i);
        pos_ += sizeof(T);
        return static_cast<T>(v);
    }

    float get_f32() { return std::bit_cast<float>(get_le<std::uint32_t>()); }

    std::string get_bytes(std::size_t n) {
        need(n);
        std::string out = data_.substr(pos_, n);
        pos_ += n;
        return out;
    }

    bool exhausted() const { return pos_ == data_.size(); }

private:
    void need(std::size_t n) {
        if (pos_ + n > data_.size())
            throw TruncatedFile(context_);
    }
    std::string data_;
    std::string context_;
    std::size_t pos_ = 0;
};

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& data);

} // namespace wire

/// FSEG segment file: magic "FSEG", version u16=1, record count u32; per
/// record: patient_id u32, label u8, channel_count u16, sample_rate_hz f32,
/// samples_per_channel u32, then channel-major f32 samples.
///
/// The format carries no channel names; callers attach them from
/// configuration (see ExperimentConfig::channels). An empty name list
/// yields placeholder names; a non-empty list whose size disagrees with a
/// record's channel count raises DimensionMismatch.
void save_segments(const std::string& path,
                   const std::vector<EegRecording>& recordings);
std::vector<EegRecording> load_segments(const std::string& path,
                                        const std::vector<std::string>& channel_names);

/// FPRM parameter checkpoint: magic "FPRM", version u16=1, tensor count
/// u16; per tensor: name length u8 + name bytes + dim count u8 + dims u32
/// each; then all f32 values in declared order.
void save_params(const std::string& path, const ParamVector& params);
ParamVector load_params(const std::string& path);

} // namespace fedshot
