#include "wakecough/classifiers.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "wakecough/rng.hpp"

namespace wakecough {

LabeledSet LabeledSet::subset(const std::vector<int>& indices) const {
    LabeledSet s;
    s.num_classes = num_classes;
    s.X.resize(static_cast<long>(indices.size()), X.cols());
    s.y.reserve(indices.size());
    for (size_t i = 0; i < indices.size(); ++i) {
        s.X.row(static_cast<long>(i)) = X.row(indices[i]);
        s.y.push_back(y[static_cast<size_t>(indices[i])]);
    }
    return s;
}

void LabeledSet::validate() const {
    if (static_cast<long>(y.size()) != X.rows())
        throw std::invalid_argument("labeled set: label count mismatch");
    if (!X.allFinite()) throw std::invalid_argument("labeled set: non-finite features");
    if (num_classes < 2) throw std::invalid_argument("labeled set: need at least 2 classes");
    std::vector<long> counts(static_cast<size_t>(num_classes), 0);
    for (int label : y) {
        if (label < 0 || label >= num_classes)
            throw std::invalid_argument("labeled set: label out of range");
        ++counts[static_cast<size_t>(label)];
    }
    for (long c : counts)
        if (c == 0) throw std::invalid_argument("labeled set: empty class");
}

Standardizer Standardizer::fit(const Eigen::MatrixXd& X) {
    Standardizer s;
    s.mean = X.colwise().mean();
    s.std_dev = ((X.rowwise() - s.mean).array().square().colwise().mean()).sqrt();
    for (long j = 0; j < s.std_dev.size(); ++j)
        if (s.std_dev(j) < 1e-12) s.std_dev(j) = 1.0;
    return s;
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& X) const {
    if (X.cols() != mean.size()) throw std::invalid_argument("standardizer: dimension mismatch");
    return (X.rowwise() - mean).array().rowwise() / std_dev.array();
}

std::vector<int> ClassifierModel::predict(const Eigen::MatrixXd& X) const {
    Eigen::MatrixXd proba = predict_proba(X);
    std::vector<int> labels(static_cast<size_t>(proba.rows()));
    for (long i = 0; i < proba.rows(); ++i) {
        long arg = 0;
        proba.row(i).maxCoeff(&arg);
        labels[static_cast<size_t>(i)] = static_cast<int>(arg);
    }
    return labels;
}

namespace {

Standardizer identity_standardizer(int dim) {
    Standardizer s;
    s.mean = Eigen::RowVectorXd::Zero(dim);
    s.std_dev = Eigen::RowVectorXd::Ones(dim);
    return s;
}

Eigen::MatrixXd one_hot(const std::vector<int>& y, int num_classes) {
    Eigen::MatrixXd Y = Eigen::MatrixXd::Zero(static_cast<long>(y.size()), num_classes);
    for (size_t i = 0; i < y.size(); ++i) Y(static_cast<long>(i), y[i]) = 1.0;
    return Y;
}

// row-wise softmax, numerically stable
Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& Z) {
    Eigen::MatrixXd P = (Z.colwise() - Z.rowwise().maxCoeff()).array().exp();
    P.array().colwise() /= P.rowwise().sum().array();
    return P;
}

void write_csv_matrix(std::ofstream& out, const Eigen::MatrixXd& m, const std::string& name) {
    out << "# " << name << " " << m.rows() << "x" << m.cols() << '\n';
    out.precision(17);
    for (long i = 0; i < m.rows(); ++i) {
        for (long j = 0; j < m.cols(); ++j) {
            if (j) out << ',';
            out << m(i, j);
        }
        out << '\n';
    }
}

struct BinWriter {
    std::ofstream out;
    explicit BinWriter(const std::string& path) : out(path, std::ios::binary) {
        if (!out) throw std::runtime_error("cannot write model: " + path);
    }
    void tag(const char* magic) { out.write(magic, 4); }
    void u32(uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); }
    void f64(double v) { out.write(reinterpret_cast<const char*>(&v), 8); }
    void matrix(const Eigen::MatrixXd& m) {
        u32(static_cast<uint32_t>(m.rows()));
        u32(static_cast<uint32_t>(m.cols()));
        for (long i = 0; i < m.rows(); ++i)
            for (long j = 0; j < m.cols(); ++j) f64(m(i, j));
    }
};

} // namespace

// ---------------------------------------------------------------- LogReg

double logreg_loss(const LabeledSet& set, const Eigen::MatrixXd& W, double reg_c, double l2) {
    const long n = set.size();
    const int d = set.dim();
    Eigen::MatrixXd Z = set.X * W.leftCols(d).transpose();
    Z.rowwise() += W.col(d).transpose();
    Eigen::VectorXd mx = Z.rowwise().maxCoeff();
    Eigen::VectorXd lse = mx.array() + (Z.colwise() - mx).array().exp().rowwise().sum().log();
    double ce = 0.0;
    for (long i = 0; i < n; ++i) ce += lse(i) - Z(i, set.y[static_cast<size_t>(i)]);
    return ce / n + (0.5 * l2 / reg_c) * W.leftCols(d).squaredNorm();
}

Eigen::MatrixXd logreg_gradient(const LabeledSet& set, const Eigen::MatrixXd& W, double reg_c,
                                double l2) {
    const long n = set.size();
    const int d = set.dim();
    Eigen::MatrixXd Z = set.X * W.leftCols(d).transpose();
    Z.rowwise() += W.col(d).transpose();
    Eigen::MatrixXd P = softmax_rows(Z);
    P -= one_hot(set.y, set.num_classes);
    P /= static_cast<double>(n);
    Eigen::MatrixXd grad(W.rows(), W.cols());
    grad.leftCols(d) = P.transpose() * set.X + (l2 / reg_c) * W.leftCols(d);
    grad.col(d) = P.colwise().sum().transpose();
    return grad;
}

namespace {

class LogRegModel final : public ClassifierModel {
public:
    Eigen::MatrixXd W; // K x (d+1), bias last column
    LogRegParams hp;

    std::string kind() const override { return "logreg"; }

    Eigen::MatrixXd predict_proba(const Eigen::MatrixXd& X) const override {
        Eigen::MatrixXd Xs = standardizer_.apply(X);
        Eigen::MatrixXd Z = Xs * W.leftCols(Xs.cols()).transpose();
        Z.rowwise() += W.col(Xs.cols()).transpose();
        return softmax_rows(Z);
    }

    void save(const std::string& path) const override {
        BinWriter w(path);
        w.tag("WLRM");
        w.u32(1);
        w.matrix(standardizer_.mean);
        w.matrix(standardizer_.std_dev);
        w.matrix(W);
    }

    void export_weights_csv(const std::string& path) const override {
        std::ofstream out(path);
        write_csv_matrix(out, W, "weights_with_bias");
    }
};

} // namespace

std::unique_ptr<ClassifierModel> train_logreg(const LabeledSet& set, const LogRegParams& hp,
                                              bool standardize) {
    set.validate();
    auto model = std::make_unique<LogRegModel>();
    model->hp = hp;

    LabeledSet work = set;
    if (standardize) {
        auto s = Standardizer::fit(set.X);
        work.X = s.apply(set.X);
        model->set_standardizer(s);
    } else {
        model->set_standardizer(identity_standardizer(set.dim()));
    }

    const int d = set.dim();
    const int K = set.num_classes;
    const double lambda1 = hp.l1 / hp.reg_c;
    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(K, d + 1);

    double step = 1.0;
    for (int iter = 0; iter < hp.max_iters; ++iter) {
        const double g0 = logreg_loss(work, W, hp.reg_c, hp.l2);
        const Eigen::MatrixXd grad = logreg_gradient(work, W, hp.reg_c, hp.l2);

        Eigen::MatrixXd Wn;
        for (;;) {
            Wn = W - step * grad;
            // soft-threshold the weights (not the bias) for the l1 term
            if (lambda1 > 0) {
                const double thr = step * lambda1;
                auto blk = Wn.leftCols(d).array();
                Wn.leftCols(d) =
                    (blk.abs() - thr).max(0.0) * blk.sign();
            }
            const Eigen::MatrixXd diff = Wn - W;
            const double quad = g0 + (grad.array() * diff.array()).sum() +
                                diff.squaredNorm() / (2.0 * step);
            if (logreg_loss(work, Wn, hp.reg_c, hp.l2) <= quad + 1e-12 || step < 1e-12) break;
            step *= 0.5;
        }
        const double move = (Wn - W).norm() / step;
        W = Wn;
        if (move < hp.grad_tol) break;
        step = std::min(step * 2.0, 1e4);
    }

    model->W = W;
    model->set_num_classes(K);
    return model;
}

// ------------------------------------------------------------------- LDA

namespace {

class LdaModel final : public ClassifierModel {
public:
    Eigen::MatrixXd means;      // K x d
    Eigen::MatrixXd precision;  // d x d
    Eigen::VectorXd log_priors; // K

    std::string kind() const override { return "lda"; }

    Eigen::MatrixXd discriminants(const Eigen::MatrixXd& X) const {
        Eigen::MatrixXd Xs = standardizer_.apply(X);
        Eigen::MatrixXd Z(Xs.rows(), means.rows());
        Eigen::MatrixXd pm = precision * means.transpose(); // d x K
        Eigen::VectorXd quad(means.rows());
        for (long k = 0; k < means.rows(); ++k)
            quad(k) = 0.5 * means.row(k).dot(pm.col(k));
        Z = Xs * pm;
        Z.rowwise() -= quad.transpose();
        Z.rowwise() += log_priors.transpose();
        return Z;
    }

    Eigen::MatrixXd predict_proba(const Eigen::MatrixXd& X) const override {
        return softmax_rows(discriminants(X));
    }

    void save(const std::string& path) const override {
        BinWriter w(path);
        w.tag("WLDA");
        w.u32(1);
        w.matrix(standardizer_.mean);
        w.matrix(standardizer_.std_dev);
        w.matrix(means);
        w.matrix(precision);
        w.matrix(log_priors);
    }

    void export_weights_csv(const std::string& path) const override {
        std::ofstream out(path);
        write_csv_matrix(out, means, "class_means");
        write_csv_matrix(out, precision, "pooled_precision");
        write_csv_matrix(out, log_priors, "log_priors");
    }
};

} // namespace

std::unique_ptr<ClassifierModel> train_lda(const LabeledSet& set, double shrinkage,
                                           bool standardize) {
    set.validate();
    const long n = set.size();
    const int d = set.dim();
    const int K = set.num_classes;
    if (n <= K) throw std::invalid_argument("train_lda: need more samples than classes");

    auto model = std::make_unique<LdaModel>();
    LabeledSet work = set;
    if (standardize) {
        auto s = Standardizer::fit(set.X);
        work.X = s.apply(set.X);
        model->set_standardizer(s);
    } else {
        model->set_standardizer(identity_standardizer(d));
    }

    Eigen::MatrixXd means = Eigen::MatrixXd::Zero(K, d);
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(K);
    for (long i = 0; i < n; ++i) {
        means.row(set.y[static_cast<size_t>(i)]) += work.X.row(i);
        counts(set.y[static_cast<size_t>(i)]) += 1.0;
    }
    for (int k = 0; k < K; ++k) means.row(k) /= counts(k);

    Eigen::MatrixXd scatter = Eigen::MatrixXd::Zero(d, d);
    for (long i = 0; i < n; ++i) {
        Eigen::RowVectorXd diff = work.X.row(i) - means.row(set.y[static_cast<size_t>(i)]);
        scatter.noalias() += diff.transpose() * diff;
    }
    Eigen::MatrixXd cov = scatter / static_cast<double>(n - K);
    cov.diagonal().array() += shrinkage * cov.trace() / d;

    model->means = means;
    model->precision = cov.llt().solve(Eigen::MatrixXd::Identity(d, d));
    model->log_priors = (counts / static_cast<double>(n)).array().log();
    model->set_num_classes(K);
    return model;
}

// ------------------------------------------------------------------- SVM

namespace {

class SvmModel final : public ClassifierModel {
public:
    Eigen::MatrixXd support;             // standardized training inputs, n x d
    std::vector<Eigen::VectorXd> coeffs; // per class: alpha_i * y_i
    std::vector<double> biases;
    SvmParams hp;
    SvmDiagnostics diagnostics;

    std::string kind() const override { return "svm"; }

    Eigen::MatrixXd kernel_against_support(const Eigen::MatrixXd& Xs) const {
        if (hp.linear_kernel) return Xs * support.transpose();
        Eigen::MatrixXd K(Xs.rows(), support.rows());
        for (long i = 0; i < Xs.rows(); ++i)
            K.row(i) =
                (-hp.gamma * (support.rowwise() - Xs.row(i)).rowwise().squaredNorm()).array().exp();
        return K;
    }

    Eigen::MatrixXd decision_values(const Eigen::MatrixXd& X) const {
        Eigen::MatrixXd Xs = standardizer_.apply(X);
        Eigen::MatrixXd K = kernel_against_support(Xs);
        Eigen::MatrixXd Z(Xs.rows(), static_cast<long>(coeffs.size()));
        for (size_t k = 0; k < coeffs.size(); ++k)
            Z.col(static_cast<long>(k)) = K * coeffs[k];
        for (size_t k = 0; k < coeffs.size(); ++k) Z.col(static_cast<long>(k)).array() += biases[k];
        return Z;
    }

    Eigen::MatrixXd predict_proba(const Eigen::MatrixXd& X) const override {
        // one-hot argmax; an RBF one-vs-rest SVM defines no probabilities
        Eigen::MatrixXd Z = decision_values(X);
        Eigen::MatrixXd P = Eigen::MatrixXd::Zero(Z.rows(), Z.cols());
        for (long i = 0; i < Z.rows(); ++i) {
            long arg = 0;
            Z.row(i).maxCoeff(&arg);
            P(i, arg) = 1.0;
        }
        return P;
    }

    void save(const std::string& path) const override {
        BinWriter w(path);
        w.tag("WSVM");
        w.u32(1);
        w.matrix(standardizer_.mean);
        w.matrix(standardizer_.std_dev);
        w.f64(hp.gamma);
        w.u32(hp.linear_kernel ? 1 : 0);
        w.matrix(support);
        w.u32(static_cast<uint32_t>(coeffs.size()));
        for (size_t k = 0; k < coeffs.size(); ++k) {
            w.matrix(coeffs[k]);
            w.f64(biases[k]);
        }
    }

    void export_weights_csv(const std::string& path) const override {
        std::ofstream out(path);
        for (size_t k = 0; k < coeffs.size(); ++k)
            write_csv_matrix(out, coeffs[k], "dual_coeffs_class_" + std::to_string(k));
    }
};

// Binary SMO over a precomputed kernel matrix; returns alphas and bias.
struct SmoResult {
    Eigen::VectorXd alpha;
    double bias;
    bool converged;
};

SmoResult smo_binary(const Eigen::MatrixXd& K, const Eigen::VectorXd& y, double C, double tol,
                     long max_passes, Rng& rng) {
    const long n = y.size();
    Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd f = Eigen::VectorXd::Zero(n); // K * (alpha .* y), bias excluded
    double b = 0.0;

    SmoResult result;
    result.converged = false;
    for (long pass = 0; pass < max_passes; ++pass) {
        long changed = 0;
        for (long i = 0; i < n; ++i) {
            const double Ei = f(i) + b - y(i);
            const bool violates = (y(i) * Ei < -tol && alpha(i) < C) ||
                                  (y(i) * Ei > tol && alpha(i) > 0);
            if (!violates) continue;

            // attempt the update against partner j; true if alpha moved
            auto try_step = [&](long j) {
                if (j == i) return false;
                const double Ej = f(j) + b - y(j);
                const double ai_old = alpha(i), aj_old = alpha(j);
                double lo, hi;
                if (y(i) != y(j)) {
                    lo = std::max(0.0, aj_old - ai_old);
                    hi = std::min(C, C + aj_old - ai_old);
                } else {
                    lo = std::max(0.0, ai_old + aj_old - C);
                    hi = std::min(C, ai_old + aj_old);
                }
                if (hi - lo < 1e-12) return false;
                const double eta = 2.0 * K(i, j) - K(i, i) - K(j, j);
                if (eta >= -1e-12) return false;

                double aj = aj_old - y(j) * (Ei - Ej) / eta;
                aj = std::clamp(aj, lo, hi);
                if (std::abs(aj - aj_old) < 1e-12) return false;
                const double ai = ai_old + y(i) * y(j) * (aj_old - aj);

                alpha(i) = ai;
                alpha(j) = aj;
                f += (ai - ai_old) * y(i) * K.col(i) + (aj - aj_old) * y(j) * K.col(j);

                const double b1 = b - Ei - y(i) * (ai - ai_old) * K(i, i) -
                                  y(j) * (aj - aj_old) * K(i, j);
                const double b2 = b - Ej - y(i) * (ai - ai_old) * K(i, j) -
                                  y(j) * (aj - aj_old) * K(j, j);
                if (ai > 0 && ai < C)
                    b = b1;
                else if (aj > 0 && aj < C)
                    b = b2;
                else
                    b = 0.5 * (b1 + b2);
                return true;
            };

            // second choice: maximize |Ei - Ej|, ties to the lowest index;
            // if that pair cannot move, fall back to scanning the rest from
            // a random start so progress is never blocked by one bad partner
            long j = -1;
            double best = -1.0;
            for (long cand = 0; cand < n; ++cand) {
                if (cand == i) continue;
                const double gap = std::abs(Ei - (f(cand) + b - y(cand)));
                if (gap > best) { best = gap; j = cand; }
            }
            bool stepped = j >= 0 && try_step(j);
            if (!stepped) {
                const long start = static_cast<long>(rng.index(static_cast<size_t>(n)));
                for (long off = 0; off < n && !stepped; ++off)
                    stepped = try_step((start + off) % n);
            }
            if (stepped) ++changed;
        }
        if (changed == 0) { result.converged = true; break; }
    }

    // recompute the bias from the free support vectors
    long n_free = 0;
    double b_acc = 0.0;
    for (long i = 0; i < n; ++i)
        if (alpha(i) > 1e-9 && alpha(i) < C - 1e-9) {
            b_acc += y(i) - f(i);
            ++n_free;
        }
    result.bias = n_free > 0 ? b_acc / n_free : b;
    result.alpha = alpha;
    return result;
}

} // namespace

std::unique_ptr<ClassifierModel> train_svm(const LabeledSet& set, const SvmParams& hp,
                                           uint64_t seed, bool standardize) {
    set.validate();
    auto model = std::make_unique<SvmModel>();
    model->hp = hp;

    LabeledSet work = set;
    if (standardize) {
        auto s = Standardizer::fit(set.X);
        work.X = s.apply(set.X);
        model->set_standardizer(s);
    } else {
        model->set_standardizer(identity_standardizer(set.dim()));
    }

    const long n = set.size();
    Eigen::MatrixXd K(n, n);
    if (hp.linear_kernel) {
        K = work.X * work.X.transpose();
    } else {
        Eigen::VectorXd sq = work.X.rowwise().squaredNorm();
        K = -2.0 * (work.X * work.X.transpose());
        K.colwise() += sq;
        K.rowwise() += sq.transpose();
        K = (-hp.gamma * K.array()).exp();
    }

    model->support = work.X;
    model->diagnostics.reg_c = hp.reg_c;
    Rng rng(seed);
    for (int k = 0; k < set.num_classes; ++k) {
        Eigen::VectorXd y(n);
        for (long i = 0; i < n; ++i) y(i) = set.y[static_cast<size_t>(i)] == k ? 1.0 : -1.0;
        SmoResult r = smo_binary(K, y, hp.reg_c, hp.tol, hp.max_passes, rng);
        if (!r.converged)
            throw std::runtime_error("train_svm: SMO did not converge for class " +
                                     std::to_string(k));
        model->coeffs.push_back(r.alpha.cwiseProduct(y));
        model->biases.push_back(r.bias);

        Eigen::VectorXd fx = K * model->coeffs.back();
        fx.array() += r.bias;
        double max_viol = 0.0;
        for (long i = 0; i < n; ++i) {
            const double margin = y(i) * fx(i);
            double viol = 0.0;
            if (r.alpha(i) <= 1e-9)
                viol = std::max(0.0, 1.0 - margin);
            else if (r.alpha(i) >= hp.reg_c - 1e-9)
                viol = std::max(0.0, margin - 1.0);
            else
                viol = std::abs(1.0 - margin);
            max_viol = std::max(max_viol, viol);
        }
        model->diagnostics.alphas.push_back(r.alpha);
        model->diagnostics.equality_residuals.push_back(std::abs(r.alpha.dot(y)));
        model->diagnostics.max_kkt_violations.push_back(max_viol);
    }
    model->set_num_classes(set.num_classes);
    return model;
}

const SvmDiagnostics& svm_diagnostics(const ClassifierModel& model) {
    const auto* svm = dynamic_cast<const SvmModel*>(&model);
    if (!svm) throw std::invalid_argument("svm_diagnostics: not an SVM model");
    return svm->diagnostics;
}

// ------------------------------------------------------------------- MLP

long mlp_param_count(int dim, int hidden, int num_classes) {
    return static_cast<long>(hidden) * dim + hidden +
           static_cast<long>(num_classes) * hidden + num_classes;
}

namespace {

struct MlpViews {
    Eigen::Map<const Eigen::MatrixXd> W1;
    Eigen::Map<const Eigen::VectorXd> b1;
    Eigen::Map<const Eigen::MatrixXd> W2;
    Eigen::Map<const Eigen::VectorXd> b2;
};

MlpViews mlp_views(const Eigen::VectorXd& params, int d, int h, int K) {
    const double* p = params.data();
    return MlpViews{
        Eigen::Map<const Eigen::MatrixXd>(p, h, d),
        Eigen::Map<const Eigen::VectorXd>(p + static_cast<long>(h) * d, h),
        Eigen::Map<const Eigen::MatrixXd>(p + static_cast<long>(h) * d + h, K, h),
        Eigen::Map<const Eigen::VectorXd>(p + static_cast<long>(h) * d + h +
                                              static_cast<long>(K) * h, K)};
}

// forward + backward over one batch; returns mean CE + l2 penalty
double mlp_batch(const Eigen::MatrixXd& X, const std::vector<int>& y, int K, double l2,
                 const Eigen::VectorXd& params, Eigen::VectorXd* grad) {
    const int d = static_cast<int>(X.cols());
    const int h = static_cast<int>((params.size() - K) / (d + 1 + K));
    const long n = X.rows();
    auto v = mlp_views(params, d, h, K);

    Eigen::MatrixXd Z1 = X * v.W1.transpose();
    Z1.rowwise() += v.b1.transpose();
    Eigen::MatrixXd A1 = Z1.cwiseMax(0.0);
    Eigen::MatrixXd Z2 = A1 * v.W2.transpose();
    Z2.rowwise() += v.b2.transpose();

    Eigen::VectorXd mx = Z2.rowwise().maxCoeff();
    Eigen::VectorXd lse = mx.array() + (Z2.colwise() - mx).array().exp().rowwise().sum().log();
    double ce = 0.0;
    for (long i = 0; i < n; ++i) ce += lse(i) - Z2(i, y[static_cast<size_t>(i)]);
    const double loss =
        ce / n + 0.5 * l2 * (v.W1.squaredNorm() + v.W2.squaredNorm());

    if (grad) {
        Eigen::MatrixXd P = (Z2.colwise() - lse).array().exp();
        P -= one_hot(y, K);
        P /= static_cast<double>(n);

        Eigen::MatrixXd dW2 = P.transpose() * A1 + l2 * v.W2;
        Eigen::VectorXd db2 = P.colwise().sum().transpose();
        Eigen::MatrixXd dA1 = P * v.W2;
        Eigen::MatrixXd dZ1 = (Z1.array() > 0.0).cast<double>() * dA1.array();
        Eigen::MatrixXd dW1 = dZ1.transpose() * X + l2 * v.W1;
        Eigen::VectorXd db1 = dZ1.colwise().sum().transpose();

        grad->resize(params.size());
        double* g = grad->data();
        Eigen::Map<Eigen::MatrixXd>(g, h, d) = dW1;
        Eigen::Map<Eigen::VectorXd>(g + static_cast<long>(h) * d, h) = db1;
        Eigen::Map<Eigen::MatrixXd>(g + static_cast<long>(h) * d + h, K, h) = dW2;
        Eigen::Map<Eigen::VectorXd>(g + static_cast<long>(h) * d + h + static_cast<long>(K) * h,
                                    K) = db2;
    }
    return loss;
}

class MlpModel final : public ClassifierModel {
public:
    Eigen::VectorXd params;
    MlpParams hp;
    double final_loss = 0.0;

    std::string kind() const override { return "mlp"; }

    Eigen::MatrixXd predict_proba(const Eigen::MatrixXd& X) const override {
        Eigen::MatrixXd Xs = standardizer_.apply(X);
        auto v = mlp_views(params, static_cast<int>(Xs.cols()), hp.hidden, num_classes_);
        Eigen::MatrixXd Z1 = Xs * v.W1.transpose();
        Z1.rowwise() += v.b1.transpose();
        Eigen::MatrixXd Z2 = Z1.cwiseMax(0.0) * v.W2.transpose();
        Z2.rowwise() += v.b2.transpose();
        return softmax_rows(Z2);
    }

    void save(const std::string& path) const override {
        BinWriter w(path);
        w.tag("WMLP");
        w.u32(1);
        w.matrix(standardizer_.mean);
        w.matrix(standardizer_.std_dev);
        w.u32(static_cast<uint32_t>(hp.hidden));
        w.u32(static_cast<uint32_t>(num_classes_));
        w.matrix(params);
    }

    void export_weights_csv(const std::string& path) const override {
        std::ofstream out(path);
        write_csv_matrix(out, params, "flattened_params");
    }
};

} // namespace

double mlp_loss_and_grad(const LabeledSet& set, const MlpParams& hp,
                         const Eigen::VectorXd& params, Eigen::VectorXd* grad) {
    return mlp_batch(set.X, set.y, set.num_classes, hp.l2, params, grad);
}

std::unique_ptr<ClassifierModel> train_mlp(const LabeledSet& set, const MlpParams& hp,
                                           uint64_t seed, bool standardize) {
    set.validate();
    auto model = std::make_unique<MlpModel>();
    model->hp = hp;

    LabeledSet work = set;
    if (standardize) {
        auto s = Standardizer::fit(set.X);
        work.X = s.apply(set.X);
        model->set_standardizer(s);
    } else {
        model->set_standardizer(identity_standardizer(set.dim()));
    }

    const int d = set.dim();
    const int h = hp.hidden;
    const int K = set.num_classes;
    const long np = mlp_param_count(d, h, K);

    Rng rng(seed);
    Eigen::VectorXd params = Eigen::VectorXd::Zero(np);
    { // seeded He initialization for the weight blocks
        double* p = params.data();
        const double s1 = std::sqrt(2.0 / d);
        for (long i = 0; i < static_cast<long>(h) * d; ++i) p[i] = s1 * rng.gaussian();
        const double s2 = std::sqrt(2.0 / h);
        double* w2 = p + static_cast<long>(h) * d + h;
        for (long i = 0; i < static_cast<long>(K) * h; ++i) w2[i] = s2 * rng.gaussian();
    }

    Eigen::VectorXd m = Eigen::VectorXd::Zero(np), vv = Eigen::VectorXd::Zero(np), grad;
    const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    long step = 0;
    std::vector<int> order(static_cast<size_t>(work.size()));
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

    double loss = 0.0;
    for (int epoch = 0; epoch < hp.epochs; ++epoch) {
        rng.shuffle(order);
        for (size_t start = 0; start < order.size(); start += static_cast<size_t>(hp.batch_size)) {
            const size_t end = std::min(order.size(), start + static_cast<size_t>(hp.batch_size));
            std::vector<int> batch(order.begin() + static_cast<long>(start),
                                   order.begin() + static_cast<long>(end));
            LabeledSet sub = work.subset(batch);
            loss = mlp_batch(sub.X, sub.y, K, hp.l2, params, &grad);

            ++step;
            m = beta1 * m + (1.0 - beta1) * grad;
            vv = beta2 * vv.array() + (1.0 - beta2) * grad.array().square();
            const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
            const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
            params.array() -=
                hp.lr * (m.array() / bc1) / ((vv.array() / bc2).sqrt() + eps);
        }
    }

    model->params = params;
    model->final_loss = loss;
    model->set_num_classes(K);
    return model;
}

} // namespace wakecough
