#ifndef WAKECOUGH_CLASSIFIERS_HPP
#define WAKECOUGH_CLASSIFIERS_HPP

#include <Eigen/Core>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace wakecough {

struct LabeledSet {
    Eigen::MatrixXd X;  // n x d
    std::vector<int> y; // labels 0..K-1
    int num_classes = 0;

    long size() const { return X.rows(); }
    int dim() const { return static_cast<int>(X.cols()); }

    LabeledSet subset(const std::vector<int>& indices) const;
    void validate() const; // finite features, every class present
};

// Per-dimension standardization fitted on training data.
struct Standardizer {
    Eigen::RowVectorXd mean;
    Eigen::RowVectorXd std_dev;

    static Standardizer fit(const Eigen::MatrixXd& X);
    Eigen::MatrixXd apply(const Eigen::MatrixXd& X) const;
};

struct LogRegParams {
    double reg_c = 1.0;
    double l1 = 0.0;
    double l2 = 0.0;
    int max_iters = 2000;
    double grad_tol = 1e-6;
};

struct SvmParams {
    double reg_c = 1.0;
    double gamma = 1.0;
    bool linear_kernel = false;
    double tol = 1e-3;
    long max_passes = 10000;
};

struct MlpParams {
    int hidden = 70;
    double l2 = 0.0;
    int epochs = 200;
    double lr = 1e-3;
    int batch_size = 64;
};

class ClassifierModel {
public:
    virtual ~ClassifierModel() = default;
    virtual std::string kind() const = 0;
    virtual std::vector<int> predict(const Eigen::MatrixXd& X) const;
    // Per-class probabilities where the kind defines them (LR, MLP, LDA);
    // SVM returns one-hot argmax of decision values.
    virtual Eigen::MatrixXd predict_proba(const Eigen::MatrixXd& X) const = 0;
    virtual void save(const std::string& path) const = 0;
    virtual void export_weights_csv(const std::string& path) const = 0;

    int num_classes() const { return num_classes_; }
    int input_dim() const { return static_cast<int>(standardizer_.mean.size()); }
    const Standardizer& standardizer() const { return standardizer_; }
    void set_standardizer(Standardizer s) { standardizer_ = std::move(s); }
    void set_num_classes(int k) { num_classes_ = k; }

protected:
    Standardizer standardizer_;
    int num_classes_ = 0;
};

std::unique_ptr<ClassifierModel> train_logreg(const LabeledSet& set, const LogRegParams& hp,
                                              bool standardize = true);
std::unique_ptr<ClassifierModel> train_lda(const LabeledSet& set, double shrinkage = 1e-4,
                                           bool standardize = true);
std::unique_ptr<ClassifierModel> train_svm(const LabeledSet& set, const SvmParams& hp,
                                           uint64_t seed = 0, bool standardize = true);
std::unique_ptr<ClassifierModel> train_mlp(const LabeledSet& set, const MlpParams& hp,
                                           uint64_t seed, bool standardize = true);

// Gradient of the smooth part of the LR objective at W (for testing
// against finite differences). W layout: K x (d+1), bias last column.
Eigen::MatrixXd logreg_gradient(const LabeledSet& set, const Eigen::MatrixXd& W, double reg_c,
                                double l2);
double logreg_loss(const LabeledSet& set, const Eigen::MatrixXd& W, double reg_c, double l2);

// MLP loss and analytic gradients for a fixed parameter vector (testing).
double mlp_loss_and_grad(const LabeledSet& set, const MlpParams& hp,
                         const Eigen::VectorXd& params, Eigen::VectorXd* grad);
long mlp_param_count(int dim, int hidden, int num_classes);

// SVM diagnostics: dual variables and KKT violations of the binary
// subproblems, for constraint checks.
struct SvmDiagnostics {
    std::vector<Eigen::VectorXd> alphas;      // per binary problem
    std::vector<double> equality_residuals;   // |sum alpha_i y_i|
    std::vector<double> max_kkt_violations;
    double reg_c = 0.0;
};
const SvmDiagnostics& svm_diagnostics(const ClassifierModel& model);

} // namespace wakecough

#endif
