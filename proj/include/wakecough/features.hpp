#ifndef WAKECOUGH_FEATURES_HPP
#define WAKECOUGH_FEATURES_HPP

#include <Eigen/Core>
#include <string>
#include <vector>

#include "wakecough/audio.hpp"

namespace wakecough {

struct FrameSpec {
    int frame_len;  // F, samples
    int num_frames; // S
};

// S x D feature matrix: F/2+1 log magnitudes, ZCR, kurtosis per frame.
struct FeatureMap {
    Eigen::MatrixXf values;
    FrameSpec spec;

    int rows() const { return static_cast<int>(values.rows()); }
    int cols() const { return static_cast<int>(values.cols()); }
};

// Frame start offsets so that an L-sample signal is covered by exactly S
// frames of length F: hop = (L - F) / (S - 1), offset_i = round(i * hop).
std::vector<long> plan_frames(long num_samples, int frame_len, int num_frames);

// Fraction of strict sign changes between consecutive samples (zeros count
// as positive).
double zcr(const std::vector<double>& frame);

// Pearson kurtosis m4/m2^2. A frame with variance <= 1e-12 yields 0.0 and
// sets *degenerate.
double kurtosis(const std::vector<double>& frame, bool* degenerate = nullptr);

// Hamming-windowed real-FFT magnitudes, bins 0 .. F/2. F must be a power
// of two and match the frame length.
std::vector<double> stft_magnitude(const std::vector<double>& frame, int frame_len);

FeatureMap extract_feature_map(const AudioClip& clip, const FrameSpec& spec);

// Binary format: magic "FMAP", u32 S, u32 D, then S*D little-endian f32
// row-major.
void save_feature_map(const std::string& path, const FeatureMap& map);
FeatureMap load_feature_map(const std::string& path);
void export_feature_map_csv(const std::string& path, const FeatureMap& map);

std::vector<double> hamming_window(int n);

} // namespace wakecough

#endif
