#include "wakecough/features.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "wakecough/fft.hpp"

namespace wakecough {

std::vector<double> hamming_window(int n) {
    std::vector<double> w(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i)
        w[static_cast<size_t>(i)] = 0.54 - 0.46 * std::cos(2.0 * M_PI * i / (n - 1));
    return w;
}

std::vector<long> plan_frames(long num_samples, int frame_len, int num_frames) {
    if (frame_len < 2 || num_frames < 2)
        throw std::invalid_argument("plan_frames: F >= 2 and S >= 2 required");
    const long L = std::max(num_samples, static_cast<long>(frame_len));
    const double hop = static_cast<double>(L - frame_len) / (num_frames - 1);
    std::vector<long> offsets(static_cast<size_t>(num_frames));
    for (int i = 0; i < num_frames; ++i)
        offsets[static_cast<size_t>(i)] = std::llround(i * hop);
    return offsets;
}

double zcr(const std::vector<double>& frame) {
    if (frame.size() < 2) throw std::invalid_argument("zcr: frame length must be >= 2");
    size_t changes = 0;
    for (size_t i = 1; i < frame.size(); ++i) {
        const bool a = frame[i - 1] >= 0.0; // zeros treated as positive
        const bool b = frame[i] >= 0.0;
        if (a != b) ++changes;
    }
    return static_cast<double>(changes) / static_cast<double>(frame.size() - 1);
}

double kurtosis(const std::vector<double>& frame, bool* degenerate) {
    if (frame.size() < 4) throw std::invalid_argument("kurtosis: frame length must be >= 4");
    if (degenerate) *degenerate = false;
    const double n = static_cast<double>(frame.size());
    double mean = 0.0;
    for (double s : frame) mean += s;
    mean /= n;
    double m2 = 0.0, m4 = 0.0;
    for (double s : frame) {
        const double d = s - mean;
        const double d2 = d * d;
        m2 += d2;
        m4 += d2 * d2;
    }
    m2 /= n;
    m4 /= n;
    if (m2 <= 1e-12) {
        if (degenerate) *degenerate = true;
        return 0.0;
    }
    return m4 / (m2 * m2);
}

std::vector<double> stft_magnitude(const std::vector<double>& frame, int frame_len) {
    if (static_cast<long>(frame.size()) != frame_len)
        throw std::invalid_argument("stft_magnitude: frame length mismatch");
    if (!is_power_of_two(static_cast<size_t>(frame_len)))
        throw std::invalid_argument("stft_magnitude: F must be a power of two");

    const std::vector<double> win = hamming_window(frame_len);
    std::vector<double> x(frame.size());
    for (size_t i = 0; i < frame.size(); ++i) x[i] = frame[i] * win[i];

    auto spec = rfft(x, static_cast<size_t>(frame_len));
    std::vector<double> mags(spec.size());
    for (size_t i = 0; i < spec.size(); ++i) mags[i] = std::abs(spec[i]);
    return mags;
}

FeatureMap extract_feature_map(const AudioClip& clip, const FrameSpec& spec) {
    if (clip.samples.empty()) throw std::invalid_argument("extract_feature_map: empty clip");
    const int F = spec.frame_len;
    const int S = spec.num_frames;
    const int n_bins = F / 2 + 1;
    const int D = n_bins + 2;

    std::vector<double> padded = clip.samples;
    if (static_cast<long>(padded.size()) < F) padded.resize(static_cast<size_t>(F), 0.0);

    const auto offsets = plan_frames(static_cast<long>(padded.size()), F, S);

    FeatureMap map;
    map.spec = spec;
    map.values.resize(S, D);
    std::vector<double> frame(static_cast<size_t>(F));
    for (int s = 0; s < S; ++s) {
        const long off = offsets[static_cast<size_t>(s)];
        std::copy(padded.begin() + off, padded.begin() + off + F, frame.begin());
        const auto mags = stft_magnitude(frame, F);
        for (int b = 0; b < n_bins; ++b)
            map.values(s, b) = static_cast<float>(std::log(mags[static_cast<size_t>(b)] + 1e-8));
        map.values(s, n_bins) = static_cast<float>(zcr(frame));
        map.values(s, n_bins + 1) = static_cast<float>(kurtosis(frame));
    }
    return map;
}

void save_feature_map(const std::string& path, const FeatureMap& map) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write feature map: " + path);
    const uint32_t s = static_cast<uint32_t>(map.values.rows());
    const uint32_t d = static_cast<uint32_t>(map.values.cols());
    out.write("FMAP", 4);
    out.write(reinterpret_cast<const char*>(&s), 4);
    out.write(reinterpret_cast<const char*>(&d), 4);
    for (uint32_t i = 0; i < s; ++i)
        for (uint32_t j = 0; j < d; ++j) {
            float v = map.values(i, j);
            out.write(reinterpret_cast<const char*>(&v), 4);
        }
}

FeatureMap load_feature_map(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot open feature map: " + path);
    char magic[4];
    uint32_t s = 0, d = 0;
    in.read(magic, 4);
    in.read(reinterpret_cast<char*>(&s), 4);
    in.read(reinterpret_cast<char*>(&d), 4);
    if (!in || std::memcmp(magic, "FMAP", 4) != 0)
        throw std::invalid_argument("bad feature map file: " + path);
    FeatureMap map;
    map.spec = FrameSpec{(static_cast<int>(d) - 3) * 2, static_cast<int>(s)};
    map.values.resize(s, d);
    for (uint32_t i = 0; i < s; ++i)
        for (uint32_t j = 0; j < d; ++j) {
            float v;
            in.read(reinterpret_cast<char*>(&v), 4);
            map.values(i, j) = v;
        }
    if (!in) throw std::invalid_argument("truncated feature map file: " + path);
    return map;
}

void export_feature_map_csv(const std::string& path, const FeatureMap& map) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write csv: " + path);
    out.precision(9);
    for (int i = 0; i < map.values.rows(); ++i) {
        for (int j = 0; j < map.values.cols(); ++j) {
            if (j) out << ',';
            out << map.values(i, j);
        }
        out << '\n';
    }
}

} // namespace wakecough
