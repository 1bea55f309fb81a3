#include "fedshot/io.hpp"

#include <sstream>

namespace fedshot {

namespace wire {

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw IoError("cannot open '" + path + "' for reading");
    std::string data((std::istreambuf_iterator<char>(f)),
                     std::istreambuf_iterator<char>());
    if (f.bad())
        throw IoError("read failed on '" + path + "'");
    return data;
}

void write_file(const std::string& path, const std::string& data) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f)
        throw IoError("cannot open '" + path + "' for writing");
    f.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!f)
        throw IoError("write failed on '" + path + "'");
}

} // namespace wire

namespace {

void check_magic(wire::Reader& r, const char* magic, const std::string& path) {
    if (r.get_bytes(4) != magic)
        throw BadMagic(path + ": expected " + magic);
    const auto version = r.get_le<std::uint16_t>();
    if (version != 1)
        throw BadVersion(path + ": unsupported version " +
                         std::to_string(version));
}

} // namespace

void save_segments(const std::string& path,
                   const std::vector<EegRecording>& recordings) {
    std::string buf;
    buf.append("FSEG");
    wire::put_le<std::uint16_t>(buf, 1);
    wire::put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(recordings.size()));
    for (const auto& rec : recordings) {
        wire::put_le<std::uint32_t>(buf, rec.patient_id);
        wire::put_le<std::uint8_t>(buf, static_cast<std::uint8_t>(rec.label));
        wire::put_le<std::uint16_t>(buf, static_cast<std::uint16_t>(rec.channel_count()));
        wire::put_f32(buf, static_cast<float>(rec.sample_rate));
        wire::put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(rec.samples_per_channel()));
        for (const auto& ch : rec.data)
            for (double v : ch)
                wire::put_f32(buf, static_cast<float>(v));
    }
    wire::write_file(path, buf);
}

std::vector<EegRecording> load_segments(
    const std::string& path, const std::vector<std::string>& channel_names) {
    wire::Reader r(wire::read_file(path), path);
    check_magic(r, "FSEG", path);
    const auto count = r.get_le<std::uint32_t>();
    std::vector<EegRecording> out;
    out.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        EegRecording rec;
        rec.patient_id = r.get_le<std::uint32_t>();
        rec.label = r.get_le<std::uint8_t>();
        const auto n_ch = r.get_le<std::uint16_t>();
        rec.sample_rate = r.get_f32();
        const auto n_samples = r.get_le<std::uint32_t>();
        rec.data.resize(n_ch);
        for (auto& ch : rec.data) {
            ch.resize(n_samples);
            for (auto& v : ch)
                v = r.get_f32();
        }
        if (channel_names.empty()) {
            rec.channels.reserve(n_ch);
            for (std::uint16_t c = 0; c < n_ch; ++c)
                rec.channels.push_back("ch" + std::to_string(c));
        } else if (channel_names.size() == n_ch) {
            rec.channels = channel_names;
        } else {
            std::ostringstream msg;
            msg << path << ": record " << i << " has " << n_ch
                << " channels but " << channel_names.size()
                << " channel names were configured";
            throw DimensionMismatch(msg.str());
        }
        out.push_back(std::move(rec));
    }
    return out;
}

void save_params(const std::string& path, const ParamVector& params) {
    params.check_consistent();
    if (params.layout.tensors.size() > 0xffff)
        throw IoError("too many tensors for FPRM");
    std::string buf;
    buf.append("FPRM");
    wire::put_le<std::uint16_t>(buf, 1);
    wire::put_le<std::uint16_t>(buf, static_cast<std::uint16_t>(params.layout.tensors.size()));
    for (const auto& t : params.layout.tensors) {
        if (t.name.size() > 0xff)
            throw IoError("tensor name too long for FPRM: " + t.name);
        wire::put_le<std::uint8_t>(buf, static_cast<std::uint8_t>(t.name.size()));
        wire::put_bytes(buf, t.name.data(), t.name.size());
        wire::put_le<std::uint8_t>(buf, static_cast<std::uint8_t>(t.dims.size()));
        for (auto d : t.dims)
            wire::put_le<std::uint32_t>(buf, d);
    }
    for (double v : params.values)
        wire::put_f32(buf, static_cast<float>(v));
    wire::write_file(path, buf);
}

ParamVector load_params(const std::string& path) {
    wire::Reader r(wire::read_file(path), path);
    check_magic(r, "FPRM", path);
    const auto n_tensors = r.get_le<std::uint16_t>();
    ParamVector pv;
    for (std::uint16_t i = 0; i < n_tensors; ++i) {
        TensorSpec spec;
        const auto name_len = r.get_le<std::uint8_t>();
        spec.name = r.get_bytes(name_len);
        const auto n_dims = r.get_le<std::uint8_t>();
        spec.dims.reserve(n_dims);
        for (std::uint8_t d = 0; d < n_dims; ++d)
            spec.dims.push_back(r.get_le<std::uint32_t>());
        pv.layout.tensors.push_back(std::move(spec));
    }
    pv.values.resize(pv.layout.total());
    for (auto& v : pv.values)
        v = r.get_f32();
    return pv;
}

} // namespace fedshot
