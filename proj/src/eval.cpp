#include "wakecough/eval.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "wakecough/rng.hpp"

namespace wakecough {

std::vector<int> FoldPlan::test_indices(int fold) const {
    std::vector<int> out;
    for (size_t i = 0; i < assignment.size(); ++i)
        if (assignment[i] == fold) out.push_back(static_cast<int>(i));
    return out;
}

std::vector<int> FoldPlan::train_indices(int fold) const {
    std::vector<int> out;
    for (size_t i = 0; i < assignment.size(); ++i)
        if (assignment[i] != fold) out.push_back(static_cast<int>(i));
    return out;
}

FoldPlan kfold_split(const std::vector<int>& labels, int k, uint64_t seed) {
    if (k < 2) throw std::invalid_argument("kfold_split: k must be >= 2");
    if (labels.empty()) throw std::invalid_argument("kfold_split: empty label list");

    std::map<int, std::vector<int>> by_class;
    for (size_t i = 0; i < labels.size(); ++i)
        by_class[labels[i]].push_back(static_cast<int>(i));
    for (const auto& [cls, idx] : by_class)
        if (static_cast<int>(idx.size()) < k)
            throw std::invalid_argument("kfold_split: class " + std::to_string(cls) + " has " +
                                        std::to_string(idx.size()) + " samples, need >= " +
                                        std::to_string(k));

    FoldPlan plan;
    plan.k = k;
    plan.seed = seed;
    plan.assignment.assign(labels.size(), -1);
    uint64_t stream = 1;
    for (auto& [cls, idx] : by_class) {
        Rng rng(Rng::derive(seed, stream++));
        rng.shuffle(idx);
        for (size_t i = 0; i < idx.size(); ++i)
            plan.assignment[static_cast<size_t>(idx[i])] = static_cast<int>(i % k);
    }
    return plan;
}

double accuracy(const std::vector<int>& pred, const std::vector<int>& truth) {
    if (pred.size() != truth.size())
        throw std::invalid_argument("accuracy: length mismatch");
    if (pred.empty()) throw std::invalid_argument("accuracy: empty input");
    long hits = 0;
    for (size_t i = 0; i < pred.size(); ++i)
        if (pred[i] == truth[i]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(pred.size());
}

double cohen_kappa(const std::vector<int>& pred, const std::vector<int>& truth) {
    if (pred.size() != truth.size())
        throw std::invalid_argument("cohen_kappa: length mismatch");
    if (pred.empty()) throw std::invalid_argument("cohen_kappa: empty input");
    std::map<int, double> p_marg, t_marg;
    for (size_t i = 0; i < pred.size(); ++i) {
        ++p_marg[pred[i]];
        ++t_marg[truth[i]];
    }
    const double n = static_cast<double>(pred.size());
    const double p_o = accuracy(pred, truth);
    double p_e = 0.0;
    for (const auto& [cls, cnt] : t_marg) {
        auto it = p_marg.find(cls);
        if (it != p_marg.end()) p_e += (cnt / n) * (it->second / n);
    }
    if (p_e >= 1.0) return p_o >= 1.0 ? 1.0 : 0.0;
    return (p_o - p_e) / (1.0 - p_e);
}

Eigen::MatrixXi confusion_matrix(const std::vector<int>& pred, const std::vector<int>& truth,
                                 int num_classes) {
    if (pred.size() != truth.size())
        throw std::invalid_argument("confusion_matrix: length mismatch");
    Eigen::MatrixXi m = Eigen::MatrixXi::Zero(num_classes, num_classes);
    for (size_t i = 0; i < pred.size(); ++i) {
        if (truth[i] < 0 || truth[i] >= num_classes || pred[i] < 0 || pred[i] >= num_classes)
            throw std::invalid_argument("confusion_matrix: label out of range");
        ++m(truth[i], pred[i]);
    }
    return m;
}

double sigma_acc(const std::vector<double>& fold_accuracies) {
    if (fold_accuracies.size() < 2)
        throw std::invalid_argument("sigma_acc: need at least 2 fold accuracies");
    const double n = static_cast<double>(fold_accuracies.size());
    double mean = 0.0;
    for (double a : fold_accuracies) mean += a;
    mean /= n;
    double var = 0.0;
    for (double a : fold_accuracies) var += (a - mean) * (a - mean);
    return std::sqrt(var / n);
}

std::string fingerprint_indices(const std::vector<int>& indices,
                                const std::vector<int>& labels) {
    std::vector<int> sorted = indices;
    std::sort(sorted.begin(), sorted.end());
    uint64_t h = 14695981039346656037ull;
    auto mix = [&](uint64_t v) {
        for (int b = 0; b < 8; ++b) {
            h ^= (v >> (8 * b)) & 0xffu;
            h *= 1099511628211ull;
        }
    };
    for (int i : sorted) {
        mix(static_cast<uint64_t>(i));
        mix(static_cast<uint64_t>(labels.at(static_cast<size_t>(i))));
    }
    std::ostringstream os;
    os << std::hex << h;
    return os.str();
}

EvalReport nested_cv(const std::vector<int>& labels, int num_classes, size_t grid_size,
                     const std::vector<std::string>& grid_labels,
                     const FitPredictFn& fit_predict, const NestedCvSpec& spec) {
    if (grid_size == 0) throw std::invalid_argument("nested_cv: empty grid");
    if (!grid_labels.empty() && grid_labels.size() != grid_size)
        throw std::invalid_argument("nested_cv: grid label count mismatch");

    const FoldPlan outer = kfold_split(labels, spec.outer_k, Rng::derive(spec.seed, 101));
    const int n_outer = spec.max_outer_folds > 0
                            ? std::min(spec.max_outer_folds, spec.outer_k)
                            : spec.outer_k;

    EvalReport report;
    report.confusion = Eigen::MatrixXi::Zero(num_classes, num_classes);
    std::vector<int> pooled_pred, pooled_truth;

    for (int fold = 0; fold < n_outer; ++fold) {
        const std::vector<int> outer_train = outer.train_indices(fold);
        const std::vector<int> outer_test = outer.test_indices(fold);

        int best_grid = 0;
        if (grid_size > 1) {
            std::vector<int> inner_labels(outer_train.size());
            for (size_t i = 0; i < outer_train.size(); ++i)
                inner_labels[i] = labels[static_cast<size_t>(outer_train[i])];
            const FoldPlan inner =
                kfold_split(inner_labels, spec.inner_k,
                            Rng::derive(spec.seed, 201 + static_cast<uint64_t>(fold)));

            std::vector<double> mean_inner_acc(grid_size, 0.0);
            for (int inner_fold = 0; inner_fold < spec.inner_k; ++inner_fold) {
                std::vector<int> tr, te;
                for (size_t i = 0; i < outer_train.size(); ++i)
                    (inner.assignment[i] == inner_fold ? te : tr).push_back(outer_train[i]);
                std::vector<int> te_truth(te.size());
                for (size_t i = 0; i < te.size(); ++i)
                    te_truth[i] = labels[static_cast<size_t>(te[i])];
                for (size_t g = 0; g < grid_size; ++g) {
                    const std::vector<int> pred = fit_predict(
                        tr, te, static_cast<int>(g),
                        Rng::derive(spec.seed, 1000 + static_cast<uint64_t>(fold) * 100 +
                                                   static_cast<uint64_t>(inner_fold)));
                    mean_inner_acc[g] += accuracy(pred, te_truth);
                }
            }
            for (size_t g = 1; g < grid_size; ++g)
                if (mean_inner_acc[g] >
                    mean_inner_acc[static_cast<size_t>(best_grid)] + 1e-12)
                    best_grid = static_cast<int>(g);
        }

        const std::vector<int> pred =
            fit_predict(outer_train, outer_test, best_grid,
                        Rng::derive(spec.seed, 500 + static_cast<uint64_t>(fold)));
        std::vector<int> truth(outer_test.size());
        for (size_t i = 0; i < outer_test.size(); ++i)
            truth[i] = labels[static_cast<size_t>(outer_test[i])];

        report.fold_accuracies.push_back(accuracy(pred, truth));
        report.fold_kappas.push_back(cohen_kappa(pred, truth));
        report.selected_grid_index.push_back(best_grid);
        report.selected_grid_label.push_back(
            grid_labels.empty() ? std::to_string(best_grid)
                                : grid_labels[static_cast<size_t>(best_grid)]);
        report.train_fingerprints.push_back(fingerprint_indices(outer_train, labels));
        report.confusion += confusion_matrix(pred, truth, num_classes);
        pooled_pred.insert(pooled_pred.end(), pred.begin(), pred.end());
        pooled_truth.insert(pooled_truth.end(), truth.begin(), truth.end());
    }

    report.outer_folds_evaluated = n_outer;
    double acc_sum = 0.0, kappa_sum = 0.0;
    for (double a : report.fold_accuracies) acc_sum += a;
    for (double k : report.fold_kappas) kappa_sum += k;
    report.mean_accuracy = acc_sum / report.fold_accuracies.size();
    report.mean_kappa = kappa_sum / report.fold_kappas.size();
    report.sigma_accuracy =
        report.fold_accuracies.size() >= 2 ? sigma_acc(report.fold_accuracies) : 0.0;
    report.pooled_accuracy = accuracy(pooled_pred, pooled_truth);
    return report;
}

EvalReport grid_search_cv(const LabeledSet& set, const std::vector<std::string>& grid_labels,
                          const SetTrainerFn& trainer, const NestedCvSpec& spec) {
    FitPredictFn fit_predict = [&](const std::vector<int>& train_idx,
                                   const std::vector<int>& test_idx, int grid_index,
                                   uint64_t seed) {
        const LabeledSet train = set.subset(train_idx);
        auto model = trainer(train, grid_index, seed);
        Eigen::MatrixXd Xt(static_cast<long>(test_idx.size()), set.X.cols());
        for (size_t i = 0; i < test_idx.size(); ++i)
            Xt.row(static_cast<long>(i)) = set.X.row(test_idx[i]);
        return model->predict(Xt);
    };
    return nested_cv(set.y, set.num_classes, grid_labels.size(), grid_labels, fit_predict,
                     spec);
}

void save_report_json(const std::string& path, const EvalReport& report) {
    nlohmann::ordered_json j;
    j["fold_accuracies"] = report.fold_accuracies;
    j["fold_kappas"] = report.fold_kappas;
    j["mean_accuracy"] = report.mean_accuracy;
    j["sigma_accuracy"] = report.sigma_accuracy;
    j["sigma_convention"] = report.sigma_convention;
    j["mean_kappa"] = report.mean_kappa;
    j["pooled_accuracy"] = report.pooled_accuracy;
    j["outer_folds_evaluated"] = report.outer_folds_evaluated;
    j["selected_grid_index"] = report.selected_grid_index;
    j["selected_grid_label"] = report.selected_grid_label;
    j["train_fingerprints"] = report.train_fingerprints;
    std::vector<std::vector<int>> conf;
    for (long r = 0; r < report.confusion.rows(); ++r) {
        std::vector<int> row;
        for (long c = 0; c < report.confusion.cols(); ++c)
            row.push_back(report.confusion(r, c));
        conf.push_back(row);
    }
    j["confusion"] = conf;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write report: " + path);
    out << j.dump(2) << '\n';
}

void save_confusion_csv(const std::string& path, const Eigen::MatrixXi& confusion) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write confusion csv: " + path);
    for (long r = 0; r < confusion.rows(); ++r) {
        for (long c = 0; c < confusion.cols(); ++c) {
            if (c) out << ',';
            out << confusion(r, c);
        }
        out << '\n';
    }
}

} // namespace wakecough
