#include "wakecough/audio.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "wakecough/rng.hpp"

namespace wakecough {

namespace {

// Modified Bessel function of the first kind, order zero (series).
double bessel_i0(double x) {
    double sum = 1.0, term = 1.0;
    const double hx = x / 2.0;
    for (int k = 1; k < 64; ++k) {
        term *= (hx / k) * (hx / k);
        sum += term;
        if (term < 1e-16 * sum) break;
    }
    return sum;
}

double sinc(double x) {
    if (std::abs(x) < 1e-12) return 1.0;
    const double px = M_PI * x;
    return std::sin(px) / px;
}

} // namespace

double mean_power(const std::vector<double>& samples) {
    if (samples.empty()) return 0.0;
    double acc = 0.0;
    for (double s : samples) acc += s * s;
    return acc / static_cast<double>(samples.size());
}

AudioClip resample(const AudioClip& clip, int target_hz) {
    if (target_hz <= 0) throw std::invalid_argument("resample: target rate must be positive");
    if (target_hz == clip.sample_rate) return clip;

    const double ratio = static_cast<double>(target_hz) / clip.sample_rate;
    const long in_len = static_cast<long>(clip.samples.size());
    const long out_len = std::llround(in_len * ratio);

    constexpr int kTaps = 64;
    constexpr double kBeta = 8.0;
    const double cutoff = std::min(1.0, ratio); // fraction of input Nyquist
    const double i0b = bessel_i0(kBeta);
    const int half = kTaps / 2;

    AudioClip out;
    out.sample_rate = target_hz;
    out.samples.resize(static_cast<size_t>(std::max(0L, out_len)));

    for (long n = 0; n < out_len; ++n) {
        const double t = n / ratio; // position in input samples
        const long k0 = static_cast<long>(std::floor(t)) - half + 1;
        double acc = 0.0, wsum = 0.0;
        for (int j = 0; j < kTaps; ++j) {
            const long k = k0 + j;
            const double d = (t - k) / half;
            if (d <= -1.0 || d >= 1.0) continue;
            const double w = bessel_i0(kBeta * std::sqrt(1.0 - d * d)) / i0b;
            const double c = cutoff * sinc(cutoff * (t - k)) * w;
            wsum += c;
            if (k >= 0 && k < in_len) acc += clip.samples[static_cast<size_t>(k)] * c;
        }
        if (wsum > 1e-12) acc /= wsum;
        out.samples[static_cast<size_t>(n)] = std::clamp(acc, -1.0, 1.0);
    }
    return out;
}

AudioClip normalize_duration(const AudioClip& clip, double target_sec) {
    if (target_sec <= 0) throw std::invalid_argument("normalize_duration: target must be positive");
    const size_t target = static_cast<size_t>(std::llround(target_sec * clip.sample_rate));
    AudioClip out;
    out.sample_rate = clip.sample_rate;
    out.samples = clip.samples;
    out.samples.resize(target, 0.0); // trims the tail or pads with silence
    return out;
}

double estimate_snr(const AudioClip& clip) {
    const size_t frame_len = static_cast<size_t>(std::llround(0.032 * clip.sample_rate));
    const size_t n_frames = frame_len > 0 ? clip.samples.size() / frame_len : 0;
    if (n_frames < 10) throw std::invalid_argument("estimate_snr: need at least 10 frames of 32 ms");

    std::vector<double> energy(n_frames);
    for (size_t f = 0; f < n_frames; ++f) {
        double e = 0.0;
        for (size_t i = 0; i < frame_len; ++i) {
            double s = clip.samples[f * frame_len + i];
            e += s * s;
        }
        energy[f] = e / frame_len;
    }
    std::sort(energy.begin(), energy.end());
    const size_t decile = std::max<size_t>(1, n_frames / 10);

    double p_noise = 0.0, p_signal = 0.0;
    for (size_t i = 0; i < decile; ++i) {
        p_noise += energy[i];
        p_signal += energy[n_frames - 1 - i];
    }
    constexpr double kFloor = 1e-12;
    p_noise = std::max(p_noise / decile, kFloor);
    p_signal = std::max(p_signal / decile, kFloor);
    return 10.0 * std::log10(p_signal / p_noise);
}

AudioClip mix_at_snr(const AudioClip& signal, const AudioClip& noise,
                     double target_snr_db, uint64_t seed) {
    if (signal.sample_rate != noise.sample_rate)
        throw std::invalid_argument("mix_at_snr: sample rate mismatch");
    if (mean_power(noise.samples) <= 1e-12)
        throw std::invalid_argument("mix_at_snr: silent noise");

    Rng rng(seed);
    const size_t n = signal.samples.size();
    const size_t offset = rng.index(std::max<size_t>(1, noise.samples.size()));
    std::vector<double> excerpt(n);
    for (size_t i = 0; i < n; ++i)
        excerpt[i] = noise.samples[(offset + i) % noise.samples.size()];

    const double p_s = mean_power(signal.samples);
    const double p_n = std::max(mean_power(excerpt), 1e-12);
    const double gain = std::sqrt(p_s / (p_n * std::pow(10.0, target_snr_db / 10.0)));

    AudioClip out;
    out.sample_rate = signal.sample_rate;
    out.samples.resize(n);
    double peak = 0.0;
    for (size_t i = 0; i < n; ++i) {
        out.samples[i] = signal.samples[i] + gain * excerpt[i];
        peak = std::max(peak, std::abs(out.samples[i]));
    }
    if (peak > 1.0)
        for (double& s : out.samples) s /= peak;
    return out;
}

AudioClip concatenate(const std::vector<AudioClip>& clips) {
    if (clips.empty()) throw std::invalid_argument("concatenate: empty clip list");
    AudioClip out;
    out.sample_rate = clips.front().sample_rate;
    size_t total = 0;
    for (const auto& c : clips) {
        if (c.sample_rate != out.sample_rate)
            throw std::invalid_argument("concatenate: sample rate mismatch");
        total += c.samples.size();
    }
    out.samples.reserve(total);
    for (const auto& c : clips)
        out.samples.insert(out.samples.end(), c.samples.begin(), c.samples.end());
    return out;
}

} // namespace wakecough
