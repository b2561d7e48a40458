#ifndef WAKECOUGH_IVECTOR_HPP
#define WAKECOUGH_IVECTOR_HPP

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "wakecough/audio.hpp"
#include "wakecough/dataset.hpp"
#include "wakecough/gmm.hpp"
#include "wakecough/mfcc.hpp"

namespace wakecough {

// Zeroth- and first-order sufficient statistics under the UBM; the first-
// order stats are centered on the UBM means.
struct BaumWelchStats {
    Eigen::VectorXd occupancy;       // C
    Eigen::MatrixXd first_centered;  // C x D
};

// Total-variability model: T maps the R-dim latent vector to a supervector
// offset. Covariances and means come from the attached UBM.
struct TvModel {
    Eigen::MatrixXd t_matrix; // (C*D) x R
    DiagGmm ubm;

    int rank() const { return static_cast<int>(t_matrix.cols()); }
};

struct IVector {
    Eigen::VectorXd w; // R
    std::string utterance_id;
    std::string cougher_id;
};

// Non-overlapping fixed-length segments from the head; the tail remainder
// shorter than seg_sec is discarded.
std::vector<AudioClip> segment_utterances(const AudioClip& clip, double seg_sec = 0.1);

BaumWelchStats accumulate_stats(const DiagGmm& gmm, const Eigen::MatrixXd& frames);

struct TvTrainResult {
    TvModel model;
    std::vector<double> objective; // per-iteration EM lower bound (up to constants)
};

TvTrainResult train_tv(const std::vector<BaumWelchStats>& stats, const DiagGmm& ubm,
                       int rank = 100, int iters = 10, uint64_t seed = 0);

// Posterior mean w = (I + T' S^-1 N T)^-1 T' S^-1 f.
Eigen::VectorXd extract_ivector(const TvModel& tv, const BaumWelchStats& stats);

// Coughs of one subject concatenated in manifest order, truncated to t sec,
// segmented into 0.1-sec utterances, one i-vector per row: (t*10) x R.
Eigen::MatrixXd build_cougher_matrix(const DatasetManifest& manifest, const std::string& cougher,
                                     double t_sec, const DiagGmm& gmm, const TvModel& tv,
                                     const MfccConfig& mfcc_config = {});

// Binary format: magic "TVMX", u32 C, u32 D, u32 R, then T row-major f64,
// followed by the UBM.
void save_tv(const std::string& path, const TvModel& tv);
TvModel load_tv(const std::string& path);

void export_ivectors_csv(const std::string& path, const std::vector<IVector>& ivectors);

} // namespace wakecough

#endif
