#ifndef WAKECOUGH_GMM_HPP
#define WAKECOUGH_GMM_HPP

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

namespace wakecough {

// Diagonal-covariance Gaussian mixture model.
struct DiagGmm {
    Eigen::VectorXd weights;   // C, sum to 1
    Eigen::MatrixXd means;     // C x D
    Eigen::MatrixXd variances; // C x D, floored

    int num_components() const { return static_cast<int>(weights.size()); }
    int dim() const { return static_cast<int>(means.cols()); }
};

// k-means++ seeding followed by 10 Lloyd iterations.
Eigen::MatrixXd kmeans_init(const Eigen::MatrixXd& frames, int num_components, uint64_t seed);

struct EmOptions {
    int max_iters = 50;
    double rel_tol = 1e-6;
    double variance_floor_factor = 1e-4; // times global per-dim variance
    double weight_floor = 1e-6;
};

struct EmResult {
    DiagGmm gmm;
    std::vector<double> log_likelihoods; // total per iteration
};

EmResult em_fit(const Eigen::MatrixXd& frames, int num_components, uint64_t seed,
                const EmOptions& opts = {});

// Component responsibilities via log-sum-exp; sums to 1.
Eigen::VectorXd posteriors(const DiagGmm& gmm, const Eigen::VectorXd& frame);

// Log responsibilities for a whole frame matrix (n x C), plus per-frame
// total log-likelihood.
Eigen::MatrixXd responsibilities(const DiagGmm& gmm, const Eigen::MatrixXd& frames,
                                 Eigen::VectorXd* frame_ll = nullptr);

// Versioned binary: magic "DGMM", u32 C, u32 D, then weights, means,
// variances as little-endian f64.
void save_gmm(const std::string& path, const DiagGmm& gmm);
DiagGmm load_gmm(const std::string& path);

} // namespace wakecough

#endif
