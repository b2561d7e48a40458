#ifndef WAKECOUGH_MFCC_HPP
#define WAKECOUGH_MFCC_HPP

#include <Eigen/Core>

#include "wakecough/audio.hpp"

namespace wakecough {

struct MfccConfig {
    double window_ms = 25.0;
    double hop_ms = 10.0;
    int n_mels = 24;
    int n_coeffs = 20; // including c0
    double pre_emphasis = 0.97;
};

// Standard MFCC chain: pre-emphasis, Hamming window, power spectrum,
// triangular mel filterbank (0 Hz .. Nyquist), log (floor 1e-10),
// orthonormal DCT-II, per-utterance cepstral mean subtraction.
// Returns a T x n_coeffs matrix.
Eigen::MatrixXd mfcc(const AudioClip& clip, const MfccConfig& config = {});

} // namespace wakecough

#endif
