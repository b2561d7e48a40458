#ifndef WAKECOUGH_WAV_HPP
#define WAKECOUGH_WAV_HPP

#include <string>

#include "wakecough/audio.hpp"

namespace wakecough {

// RIFF/WAVE reader: 8/16/24-bit integer or 32-bit float PCM, mono or
// stereo (stereo is downmixed by channel average).
AudioClip read_wav(const std::string& path);

// Header-only probe; returns (sample_rate, num_frames) without decoding.
struct WavInfo {
    int sample_rate;
    long num_frames;
    double duration_sec() const { return static_cast<double>(num_frames) / sample_rate; }
};
WavInfo wav_info(const std::string& path);

// 16-bit PCM little-endian writer; samples clipped to [-1, 1].
void write_wav(const std::string& path, const AudioClip& clip);

} // namespace wakecough

#endif
