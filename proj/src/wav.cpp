#include "wakecough/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace wakecough {

namespace {

uint32_t read_u32(const uint8_t* p) {
    return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
           (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

uint16_t read_u16(const uint8_t* p) {
    return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

struct WavChunks {
    uint16_t format = 0;
    uint16_t channels = 0;
    uint32_t sample_rate = 0;
    uint16_t bits = 0;
    const uint8_t* data = nullptr;
    uint32_t data_size = 0;
};

WavChunks parse(const std::vector<uint8_t>& buf, const std::string& path) {
    if (buf.size() < 44 || std::memcmp(buf.data(), "RIFF", 4) != 0 ||
        std::memcmp(buf.data() + 8, "WAVE", 4) != 0)
        throw std::invalid_argument("malformed WAV header: " + path);

    WavChunks c;
    bool have_fmt = false;
    size_t pos = 12;
    while (pos + 8 <= buf.size()) {
        const uint8_t* hdr = buf.data() + pos;
        uint32_t size = read_u32(hdr + 4);
        const uint8_t* body = hdr + 8;
        if (pos + 8 + size > buf.size()) size = static_cast<uint32_t>(buf.size() - pos - 8);
        if (std::memcmp(hdr, "fmt ", 4) == 0 && size >= 16) {
            c.format = read_u16(body);
            c.channels = read_u16(body + 2);
            c.sample_rate = read_u32(body + 4);
            c.bits = read_u16(body + 14);
            have_fmt = true;
        } else if (std::memcmp(hdr, "data", 4) == 0) {
            c.data = body;
            c.data_size = size;
        }
        pos += 8 + size + (size & 1);
    }
    if (!have_fmt) throw std::invalid_argument("malformed WAV header (no fmt chunk): " + path);
    if (c.data == nullptr || c.data_size == 0)
        throw std::invalid_argument("WAV has empty data chunk: " + path);
    if (c.channels < 1 || c.channels > 2)
        throw std::invalid_argument("unsupported channel count: " + path);
    bool pcm_int = c.format == 1 && (c.bits == 8 || c.bits == 16 || c.bits == 24);
    bool pcm_f32 = c.format == 3 && c.bits == 32;
    if (!pcm_int && !pcm_f32)
        throw std::invalid_argument("unsupported WAV codec: " + path);
    return c;
}

std::vector<uint8_t> slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot open file: " + path);
    return std::vector<uint8_t>(std::istreambuf_iterator<char>(in), {});
}

} // namespace

AudioClip read_wav(const std::string& path) {
    std::vector<uint8_t> buf = slurp(path);
    WavChunks c = parse(buf, path);

    const int bytes_per = c.bits / 8;
    const size_t n_frames = c.data_size / (bytes_per * c.channels);
    AudioClip clip;
    clip.sample_rate = static_cast<int>(c.sample_rate);
    clip.samples.resize(n_frames);

    const uint8_t* p = c.data;
    for (size_t i = 0; i < n_frames; ++i) {
        double acc = 0.0;
        for (int ch = 0; ch < c.channels; ++ch) {
            double v = 0.0;
            switch (c.bits) {
                case 8:
                    v = (static_cast<int>(*p) - 128) / 128.0;
                    break;
                case 16: {
                    int16_t s = static_cast<int16_t>(p[0] | (p[1] << 8));
                    v = s / 32768.0;
                    break;
                }
                case 24: {
                    int32_t s = p[0] | (p[1] << 8) | (p[2] << 16);
                    if (s & 0x800000) s |= ~0xffffff;
                    v = s / 8388608.0;
                    break;
                }
                case 32: {
                    float f;
                    std::memcpy(&f, p, 4);
                    v = f;
                    break;
                }
            }
            acc += v;
            p += bytes_per;
        }
        clip.samples[i] = std::clamp(acc / c.channels, -1.0, 1.0);
    }
    return clip;
}

WavInfo wav_info(const std::string& path) {
    std::vector<uint8_t> buf = slurp(path);
    WavChunks c = parse(buf, path);
    return WavInfo{static_cast<int>(c.sample_rate),
                   static_cast<long>(c.data_size / ((c.bits / 8) * c.channels))};
}

void write_wav(const std::string& path, const AudioClip& clip) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write file: " + path);

    const uint32_t n = static_cast<uint32_t>(clip.samples.size());
    const uint32_t data_size = n * 2;
    const uint32_t rate = static_cast<uint32_t>(clip.sample_rate);
    const uint32_t byte_rate = rate * 2;

    auto put_u32 = [&](uint32_t v) {
        uint8_t b[4] = {static_cast<uint8_t>(v), static_cast<uint8_t>(v >> 8),
                        static_cast<uint8_t>(v >> 16), static_cast<uint8_t>(v >> 24)};
        out.write(reinterpret_cast<char*>(b), 4);
    };
    auto put_u16 = [&](uint16_t v) {
        uint8_t b[2] = {static_cast<uint8_t>(v), static_cast<uint8_t>(v >> 8)};
        out.write(reinterpret_cast<char*>(b), 2);
    };

    out.write("RIFF", 4);
    put_u32(36 + data_size);
    out.write("WAVE", 4);
    out.write("fmt ", 4);
    put_u32(16);
    put_u16(1); // PCM
    put_u16(1); // mono
    put_u32(rate);
    put_u32(byte_rate);
    put_u16(2);  // block align
    put_u16(16); // bits
    out.write("data", 4);
    put_u32(data_size);
    for (double s : clip.samples) {
        // same 1/32768 scale as the reader so a round trip loses at most
        // half an LSB; 32767 caps the one unrepresentable positive value
        const double c = std::clamp(s, -1.0, 1.0);
        const int v = std::min(32767, static_cast<int>(std::lround(c * 32768.0)));
        put_u16(static_cast<uint16_t>(static_cast<int16_t>(v)));
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

} // namespace wakecough
