#ifndef WAKECOUGH_CNN_HPP
#define WAKECOUGH_CNN_HPP

#include <Eigen/Core>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "wakecough/features.hpp"

namespace wakecough {

struct CnnConfig {
    int num_filters = 24;  // 3 * 2^k, k = 3..5
    int kernel_size = 2;   // 2 or 3
    double dropout = 0.1;  // 0.1 / 0.3 / 0.5
    int dense_size = 16;   // 2^k, k = 4, 5
    int batch_size = 64;   // 2^k, k = 6..8
    int epochs = 10;       // 10 to 200 step 20
    double lr = 1e-3;
    uint64_t seed = 0;
};

struct CnnEpochStats {
    int epoch;
    double loss;
    double train_accuracy;
};

class CnnModel {
public:
    CnnModel() = default;

    // Trains conv -> relu -> pool -> dropout -> conv -> relu -> pool ->
    // dense -> relu -> dense(K) -> softmax with Adam. Deterministic given
    // the config seed.
    static CnnModel train(const std::vector<FeatureMap>& maps, const std::vector<int>& labels,
                          int num_classes, const CnnConfig& config,
                          std::vector<CnnEpochStats>* log = nullptr);

    Eigen::VectorXf predict(const FeatureMap& map) const; // K probabilities
    std::vector<int> predict_labels(const std::vector<FeatureMap>& maps) const;

    int num_classes() const { return num_classes_; }
    const CnnConfig& config() const { return config_; }

    void save(const std::string& path) const;
    static CnnModel load(const std::string& path);
    static void write_training_log_csv(const std::string& path,
                                       const std::vector<CnnEpochStats>& log);

private:
    friend double cnn_gradient_check(int rows, int cols, int num_filters, int kernel_size,
                                     int num_classes, uint64_t seed);
    struct Impl;
    std::shared_ptr<const Impl> impl_;
    CnnConfig config_;
    int num_classes_ = 0;
};

// Analytic parameter gradients vs central finite differences on a tiny
// double-precision instance; returns the max relative error.
double cnn_gradient_check(int rows = 8, int cols = 8, int num_filters = 4, int kernel_size = 2,
                          int num_classes = 3, uint64_t seed = 7);

} // namespace wakecough

#endif
