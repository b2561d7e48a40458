#include "wakecough/mfcc.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "wakecough/features.hpp"
#include "wakecough/fft.hpp"

namespace wakecough {

namespace {

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

// n_mels triangular filters over FFT bins 0..n_fft/2, spanning 0 Hz to
// Nyquist on the mel scale.
Eigen::MatrixXd mel_filterbank(int n_mels, int n_fft, int sample_rate) {
    const int n_bins = n_fft / 2 + 1;
    const double mel_max = hz_to_mel(sample_rate / 2.0);
    std::vector<double> edges(static_cast<size_t>(n_mels) + 2);
    for (int i = 0; i < n_mels + 2; ++i)
        edges[static_cast<size_t>(i)] =
            mel_to_hz(mel_max * i / (n_mels + 1)) * n_fft / sample_rate;

    Eigen::MatrixXd fb = Eigen::MatrixXd::Zero(n_mels, n_bins);
    for (int m = 0; m < n_mels; ++m) {
        const double lo = edges[static_cast<size_t>(m)];
        const double mid = edges[static_cast<size_t>(m) + 1];
        const double hi = edges[static_cast<size_t>(m) + 2];
        for (int b = 0; b < n_bins; ++b) {
            if (b > lo && b < mid)
                fb(m, b) = (b - lo) / (mid - lo);
            else if (b >= mid && b < hi)
                fb(m, b) = (hi - b) / (hi - mid);
        }
    }
    return fb;
}

Eigen::MatrixXd dct_ii_orthonormal(int n_out, int n_in) {
    Eigen::MatrixXd d(n_out, n_in);
    for (int k = 0; k < n_out; ++k) {
        const double scale = std::sqrt((k == 0 ? 1.0 : 2.0) / n_in);
        for (int i = 0; i < n_in; ++i)
            d(k, i) = scale * std::cos(M_PI * k * (2.0 * i + 1.0) / (2.0 * n_in));
    }
    return d;
}

} // namespace

Eigen::MatrixXd mfcc(const AudioClip& clip, const MfccConfig& config) {
    if (config.n_coeffs > config.n_mels)
        throw std::invalid_argument("mfcc: n_coeffs must be <= n_mels");
    const int win = static_cast<int>(std::llround(config.window_ms * 1e-3 * clip.sample_rate));
    const int hop = static_cast<int>(std::llround(config.hop_ms * 1e-3 * clip.sample_rate));
    const long n = static_cast<long>(clip.samples.size());
    if (n < win) throw std::invalid_argument("mfcc: clip shorter than one window");

    int n_fft = 1;
    while (n_fft < win) n_fft <<= 1;
    const int n_frames = static_cast<int>((n - win) / hop) + 1;

    std::vector<double> emph(clip.samples.size());
    emph[0] = clip.samples[0];
    for (size_t i = 1; i < clip.samples.size(); ++i)
        emph[i] = clip.samples[i] - config.pre_emphasis * clip.samples[i - 1];

    const std::vector<double> window = hamming_window(win);
    const Eigen::MatrixXd fb = mel_filterbank(config.n_mels, n_fft, clip.sample_rate);
    const Eigen::MatrixXd dct = dct_ii_orthonormal(config.n_coeffs, config.n_mels);

    Eigen::MatrixXd out(n_frames, config.n_coeffs);
    std::vector<double> frame(static_cast<size_t>(win));
    Eigen::VectorXd power(n_fft / 2 + 1);
    for (int t = 0; t < n_frames; ++t) {
        const long off = static_cast<long>(t) * hop;
        for (int i = 0; i < win; ++i)
            frame[static_cast<size_t>(i)] =
                emph[static_cast<size_t>(off + i)] * window[static_cast<size_t>(i)];
        auto spec = rfft(frame, static_cast<size_t>(n_fft));
        for (int b = 0; b <= n_fft / 2; ++b) power(b) = std::norm(spec[static_cast<size_t>(b)]);
        Eigen::VectorXd mel = fb * power;
        for (int m = 0; m < config.n_mels; ++m) mel(m) = std::log(std::max(mel(m), 1e-10));
        out.row(t) = (dct * mel).transpose();
    }

    // per-utterance cepstral mean subtraction
    out.rowwise() -= out.colwise().mean();
    return out;
}

} // namespace wakecough
