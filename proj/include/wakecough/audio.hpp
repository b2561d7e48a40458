#ifndef WAKECOUGH_AUDIO_HPP
#define WAKECOUGH_AUDIO_HPP

#include <cstdint>
#include <vector>

namespace wakecough {

struct AudioClip {
    std::vector<double> samples; // amplitudes in [-1, 1]
    int sample_rate = 16000;     // Hz

    double duration_sec() const {
        return static_cast<double>(samples.size()) / sample_rate;
    }
};

// Band-limited resampling (windowed sinc, 64-tap Kaiser, beta = 8).
// Identity when target_hz equals the clip rate.
AudioClip resample(const AudioClip& clip, int target_hz);

// Trim the tail or zero-pad the tail so the clip has exactly
// round(target_sec * sample_rate) samples.
AudioClip normalize_duration(const AudioClip& clip, double target_sec);

// Decile-frame SNR estimate: ratio of mean energy of the loudest 10% of
// 32 ms frames to the quietest 10%, both floored at 1e-12.
// Requires at least 10 non-overlapping frames.
double estimate_snr(const AudioClip& clip);

// Mix noise into signal at a target component-power SNR. The noise is
// cropped (looping if necessary) to the signal length from a seeded random
// offset, then scaled by g = sqrt(Ps / (Pn * 10^(target/10))). The sum is
// peak-normalized only if it would clip.
AudioClip mix_at_snr(const AudioClip& signal, const AudioClip& noise,
                     double target_snr_db, uint64_t seed);

AudioClip concatenate(const std::vector<AudioClip>& clips);

double mean_power(const std::vector<double>& samples);

} // namespace wakecough

#endif
