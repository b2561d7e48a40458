#ifndef WAKECOUGH_EVAL_HPP
#define WAKECOUGH_EVAL_HPP

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "wakecough/classifiers.hpp"

namespace wakecough {

struct FoldPlan {
    int k = 5;
    std::vector<int> assignment; // per-sample fold id 0..k-1
    uint64_t seed = 0;

    std::vector<int> test_indices(int fold) const;
    std::vector<int> train_indices(int fold) const;
};

// Stratified split: per-class counts differ by at most 1 across folds.
FoldPlan kfold_split(const std::vector<int>& labels, int k, uint64_t seed);

double accuracy(const std::vector<int>& pred, const std::vector<int>& truth);
double cohen_kappa(const std::vector<int>& pred, const std::vector<int>& truth);
Eigen::MatrixXi confusion_matrix(const std::vector<int>& pred, const std::vector<int>& truth,
                                 int num_classes);
double sigma_acc(const std::vector<double>& fold_accuracies); // population std

struct EvalReport {
    std::vector<double> fold_accuracies;
    std::vector<double> fold_kappas;
    double mean_accuracy = 0.0;
    double sigma_accuracy = 0.0;
    double mean_kappa = 0.0;
    double pooled_accuracy = 0.0; // over concatenated outer-test predictions
    Eigen::MatrixXi confusion;    // pooled, rows = true class
    std::vector<int> selected_grid_index;          // per outer fold
    std::vector<std::string> selected_grid_label;  // per outer fold
    std::vector<std::string> train_fingerprints;   // per outer fold
    std::string sigma_convention = "population";
    int outer_folds_evaluated = 0;
};

void save_report_json(const std::string& path, const EvalReport& report);
void save_confusion_csv(const std::string& path, const Eigen::MatrixXi& confusion);

struct NestedCvSpec {
    int outer_k = 5;
    int inner_k = 4;
    int max_outer_folds = 0; // 0 = evaluate all outer folds
    uint64_t seed = 0;
};

// Trains on train_idx with grid point grid_index and returns predicted
// labels for test_idx. Must use only train_idx samples to fit anything
// (standardization, background models, ...).
using FitPredictFn = std::function<std::vector<int>(
    const std::vector<int>& train_idx, const std::vector<int>& test_idx, int grid_index,
    uint64_t seed)>;

// Nested cross-validation: for each outer fold, inner_k-fold CV over the
// outer-training portion picks the grid point with the highest mean inner
// accuracy (ties break toward the lowest grid index); that point is
// retrained on the full outer-training portion and scored on the held-out
// outer fold.
EvalReport nested_cv(const std::vector<int>& labels, int num_classes, size_t grid_size,
                     const std::vector<std::string>& grid_labels,
                     const FitPredictFn& fit_predict, const NestedCvSpec& spec);

// Convenience wrapper for in-memory feature matrices: the trainer fits a
// classifier on a standardized training subset for one grid point.
using SetTrainerFn = std::function<std::unique_ptr<ClassifierModel>(const LabeledSet& train,
                                                                    int grid_index,
                                                                    uint64_t seed)>;
EvalReport grid_search_cv(const LabeledSet& set, const std::vector<std::string>& grid_labels,
                          const SetTrainerFn& trainer, const NestedCvSpec& spec);

// FNV-1a hash of an index set plus its labels, as a hex string; used to
// fingerprint the exact training portion a fold-local model saw.
std::string fingerprint_indices(const std::vector<int>& indices,
                                const std::vector<int>& labels);

} // namespace wakecough

#endif
