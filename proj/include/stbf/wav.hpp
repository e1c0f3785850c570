#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "stbf/signal.hpp"

namespace stbf {
namespace wav {

namespace detail {

template <typename T>
void write_le(std::ostream& os, T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    os.write(buf, sizeof(T));
}

template <typename T>
T read_le(std::istream& is) {
    char buf[sizeof(T)];
    is.read(buf, sizeof(T));
    if (!is) throw std::runtime_error("wav: truncated file");
    T v;
    std::memcpy(&v, buf, sizeof(T));
    return v;
}

}  // namespace detail

enum class SampleFormat { pcm16, float32 };

/// Writes a multichannel WAV file, interleaved.
inline void write(const std::string& path, const TimeSignal& sig,
                  SampleFormat fmt = SampleFormat::float32) {
    sig.validate();
    const int M = sig.channels();
    const Eigen::Index N = sig.length();
    const uint16_t bits = fmt == SampleFormat::pcm16 ? 16 : 32;
    const uint16_t block = static_cast<uint16_t>(M * bits / 8);
    const uint32_t data_bytes = static_cast<uint32_t>(N * block);

    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("wav: cannot open for writing: " + path);

    os.write("RIFF", 4);
    detail::write_le<uint32_t>(os, 36 + data_bytes);
    os.write("WAVE", 4);
    os.write("fmt ", 4);
    detail::write_le<uint32_t>(os, 16);
    detail::write_le<uint16_t>(os, fmt == SampleFormat::pcm16 ? 1 : 3);
    detail::write_le<uint16_t>(os, static_cast<uint16_t>(M));
    detail::write_le<uint32_t>(os, static_cast<uint32_t>(sig.sample_rate));
    detail::write_le<uint32_t>(os, static_cast<uint32_t>(sig.sample_rate) * block);
    detail::write_le<uint16_t>(os, block);
    detail::write_le<uint16_t>(os, bits);
    os.write("data", 4);
    detail::write_le<uint32_t>(os, data_bytes);

    for (Eigen::Index i = 0; i < N; ++i) {
        for (int m = 0; m < M; ++m) {
            const double x = sig.samples[m][i];
            if (fmt == SampleFormat::pcm16) {
                double c = x < -1.0 ? -1.0 : (x > 1.0 ? 1.0 : x);
                detail::write_le<int16_t>(os, static_cast<int16_t>(std::lround(c * 32767.0)));
            } else {
                detail::write_le<float>(os, static_cast<float>(x));
            }
        }
    }
    if (!os) throw std::runtime_error("wav: write failed: " + path);
}

/// Reads a PCM16 or float32 WAV file.
inline TimeSignal read(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("wav: cannot open: " + path);

    char tag[4];
    is.read(tag, 4);
    if (!is || std::memcmp(tag, "RIFF", 4) != 0)
        throw std::runtime_error("wav: not a RIFF file: " + path);
    detail::read_le<uint32_t>(is);
    is.read(tag, 4);
    if (!is || std::memcmp(tag, "WAVE", 4) != 0)
        throw std::runtime_error("wav: not a WAVE file: " + path);

    uint16_t fmt_code = 0, channels = 0, bits = 0;
    uint32_t rate = 0;
    bool have_fmt = false;
    std::vector<char> data;

    while (is.read(tag, 4)) {
        uint32_t size = detail::read_le<uint32_t>(is);
        if (std::memcmp(tag, "fmt ", 4) == 0) {
            fmt_code = detail::read_le<uint16_t>(is);
            channels = detail::read_le<uint16_t>(is);
            rate = detail::read_le<uint32_t>(is);
            detail::read_le<uint32_t>(is);
            detail::read_le<uint16_t>(is);
            bits = detail::read_le<uint16_t>(is);
            if (size > 16) is.seekg(size - 16, std::ios::cur);
            have_fmt = true;
        } else if (std::memcmp(tag, "data", 4) == 0) {
            data.resize(size);
            is.read(data.data(), size);
            if (!is) throw std::runtime_error("wav: truncated data chunk: " + path);
        } else {
            is.seekg(size + (size & 1), std::ios::cur);
        }
    }
    if (!have_fmt || data.empty())
        throw std::runtime_error("wav: missing fmt or data chunk: " + path);
    if (channels < 1) throw std::runtime_error("wav: zero channels: " + path);

    const bool is_float = fmt_code == 3 && bits == 32;
    const bool is_pcm16 = fmt_code == 1 && bits == 16;
    if (!is_float && !is_pcm16)
        throw std::runtime_error("wav: unsupported format (need PCM16 or float32): " + path);

    const size_t bytes_per = bits / 8;
    const size_t frames = data.size() / (bytes_per * channels);
    TimeSignal sig;
    sig.sample_rate = rate;
    sig.samples.assign(channels, Eigen::VectorXd(frames));
    const char* p = data.data();
    for (size_t i = 0; i < frames; ++i) {
        for (int m = 0; m < channels; ++m) {
            if (is_pcm16) {
                int16_t v;
                std::memcpy(&v, p, 2);
                sig.samples[m][i] = v / 32768.0;
            } else {
                float v;
                std::memcpy(&v, p, 4);
                sig.samples[m][i] = v;
            }
            p += bytes_per;
        }
    }
    return sig;
}

}  // namespace wav
}  // namespace stbf
