#ifndef WAKECOUGH_PIPELINE_HPP
#define WAKECOUGH_PIPELINE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "wakecough/cnn.hpp"
#include "wakecough/dataset.hpp"
#include "wakecough/embeddings.hpp"
#include "wakecough/eval.hpp"

namespace wakecough {

struct CougherEvalConfig {
    int num_subjects = 5;     // N
    double cough_sec = 20.0;  // t
    std::string feature = "ivector"; // ivector | xvector | dvector
    int ubm_components = 64;
    int tv_rank = 100;
    int tv_iters = 10;
    double segment_sec = 0.1;
    bool length_normalize = false; // unit-norm embeddings before classification
    bool standardize = true;       // per-fold feature standardization
    std::vector<std::string> classifiers = {"lr", "lda", "svm", "mlp"};
    // classifier grids (cross products where applicable)
    std::vector<double> lr_reg_c = {0.01, 1.0, 100.0};
    std::vector<double> lr_l1 = {0.0, 0.05};
    std::vector<double> lda_shrinkage = {1e-4, 1e-2};
    std::vector<double> svm_reg_c = {1.0, 100.0};
    std::vector<double> svm_gamma = {1e-3, 1e-2};
    std::vector<double> mlp_hidden = {70, 150};
    uint64_t seed = 0;
    NestedCvSpec cv; // outer 5 / inner 4 by default
};

struct CougherCellResult {
    std::string classifier;
    EvalReport report;
};

struct CougherEvalResult {
    std::vector<CougherCellResult> cells;
    std::vector<std::string> subjects; // class id -> subject id
    long num_segments = 0;
};

// Cougher identification on segment-level embeddings under nested CV.
// With feature = "ivector" the UBM and total-variability matrix are refit
// on each fold's training segments only; imported x/d-vector sets are
// required for the other feature kinds.
CougherEvalResult run_cougher_eval(const DatasetManifest& coughs, const CougherEvalConfig& cfg,
                                   const EmbeddingSet* imported = nullptr);

void write_cougher_summary_csv(const std::string& path, const std::string& dataset_name,
                               const CougherEvalConfig& cfg, const CougherEvalResult& result);

struct SpottingEvalConfig {
    std::vector<int> frame_lengths = {1024}; // F grid
    std::vector<int> frame_counts = {100};   // S grid
    std::vector<CnnConfig> cnn_grid;         // empty -> default 4-config grid
    uint64_t seed = 0;
    NestedCvSpec cv;
};

// Four on-grid configs: filters 24, kernel 2, epochs 10, batch 64,
// dense {16, 32} x dropout {0.1, 0.3}.
std::vector<CnnConfig> default_cnn_grid();

struct SpottingCellResult {
    int frame_len;
    int num_frames;
    EvalReport report;
};

struct SpottingEvalResult {
    std::vector<SpottingCellResult> cells;
    int best_cell = -1; // by mean accuracy
    std::vector<std::string> class_names;
};

// Spotting evaluation over the (F, S) grid: per cell, feature maps are
// extracted for every event and the CNN grid is searched under nested CV.
SpottingEvalResult run_spotting_eval(const DatasetManifest& manifest,
                                     const SpottingEvalConfig& cfg);

void write_spotting_summary_csv(const std::string& path, const SpottingEvalResult& result);

// PCA to 2 components; rows must be at least 3. Output columns are
// mean-centered and ordered by decreasing variance.
Eigen::MatrixXd pca_project(const Eigen::MatrixXd& rows);
void write_projection_csv(const std::string& path, const std::vector<std::string>& ids,
                          const Eigen::MatrixXd& projected);

} // namespace wakecough

#endif
