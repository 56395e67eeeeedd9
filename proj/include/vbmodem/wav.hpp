#pragma once

// Mono 16-bit PCM RIFF/WAVE persistence.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>

#include "vbmodem/types.hpp"

namespace vbmodem {

inline std::int16_t quantize_sample(double sample) {
    const double scaled = std::round(sample * 32767.0);
    return static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
}

namespace wav_detail {

inline void put_u16(Bytes& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xFF));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

inline void put_u32(Bytes& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}

inline void put_tag(Bytes& out, const char* tag) { out.insert(out.end(), tag, tag + 4); }

inline std::uint32_t get_u32(const Bytes& in, std::size_t at) {
    return static_cast<std::uint32_t>(in[at]) | (static_cast<std::uint32_t>(in[at + 1]) << 8) |
           (static_cast<std::uint32_t>(in[at + 2]) << 16) | (static_cast<std::uint32_t>(in[at + 3]) << 24);
}

inline std::uint16_t get_u16(const Bytes& in, std::size_t at) {
    return static_cast<std::uint16_t>(in[at] | (in[at + 1] << 8));
}

inline bool tag_is(const Bytes& in, std::size_t at, const char* tag) {
    return std::memcmp(in.data() + at, tag, 4) == 0;
}

} // namespace wav_detail

inline Bytes encode_wav(const SampleBuffer& buffer) {
    using namespace wav_detail;
    const auto rate = static_cast<std::uint32_t>(std::lround(buffer.sample_rate));
    const auto data_bytes = static_cast<std::uint32_t>(buffer.size() * 2);
    Bytes out;
    out.reserve(44 + data_bytes);
    put_tag(out, "RIFF");
    put_u32(out, 36 + data_bytes);
    put_tag(out, "WAVE");
    put_tag(out, "fmt ");
    put_u32(out, 16);
    put_u16(out, 1); // PCM
    put_u16(out, 1); // mono
    put_u32(out, rate);
    put_u32(out, rate * 2);
    put_u16(out, 2);
    put_u16(out, 16);
    put_tag(out, "data");
    put_u32(out, data_bytes);
    for (double s : buffer.samples) put_u16(out, static_cast<std::uint16_t>(quantize_sample(s)));
    return out;
}

/// Parses mono 16-bit PCM. A data chunk cut short by truncation yields the
/// samples that are present.
inline SampleBuffer decode_wav(const Bytes& in) {
    using namespace wav_detail;
    if (in.size() < 12 || !tag_is(in, 0, "RIFF") || !tag_is(in, 8, "WAVE")) {
        throw Error(ErrorKind::malformed_wav, "missing RIFF/WAVE header");
    }
    std::size_t pos = 12;
    bool have_fmt = false;
    std::uint32_t rate = 0;
    while (pos + 8 <= in.size()) {
        const std::uint32_t chunk = get_u32(in, pos + 4);
        const std::size_t body = pos + 8;
        if (tag_is(in, pos, "fmt ")) {
            if (chunk < 16 || body + 16 > in.size()) throw Error(ErrorKind::malformed_wav, "short fmt chunk");
            const std::uint16_t format = get_u16(in, body);
            const std::uint16_t channels = get_u16(in, body + 2);
            rate = get_u32(in, body + 4);
            const std::uint16_t bits = get_u16(in, body + 14);
            if (format != 1 || channels != 1 || bits != 16) {
                throw Error(ErrorKind::malformed_wav, "only mono 16-bit PCM is supported");
            }
            if (rate == 0) throw Error(ErrorKind::malformed_wav, "zero sample rate");
            have_fmt = true;
        } else if (tag_is(in, pos, "data")) {
            if (!have_fmt) throw Error(ErrorKind::malformed_wav, "data chunk before fmt chunk");
            const std::size_t available = std::min<std::size_t>(chunk, in.size() - body) / 2;
            SampleBuffer out;
            out.sample_rate = rate;
            out.samples.resize(available);
            for (std::size_t i = 0; i < available; ++i) {
                out.samples[i] = static_cast<std::int16_t>(get_u16(in, body + 2 * i)) / 32767.0;
            }
            return out;
        }
        pos = body + chunk + (chunk & 1u);
    }
    throw Error(ErrorKind::malformed_wav, "no data chunk");
}

inline Bytes read_file(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorKind::io_error, "cannot open " + path.string());
    return Bytes(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
}

inline void write_file(const std::filesystem::path& path, const Bytes& bytes) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorKind::io_error, "cannot write " + path.string());
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw Error(ErrorKind::io_error, "write failed for " + path.string());
}

inline SampleBuffer read_wav(const std::filesystem::path& path) { return decode_wav(read_file(path)); }

inline void write_wav(const std::filesystem::path& path, const SampleBuffer& buffer) {
    write_file(path, encode_wav(buffer));
}

} // namespace vbmodem
