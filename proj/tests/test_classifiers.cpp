#include <Eigen/Dense>
#include <cmath>
#include <filesystem>
#include <set>

#include "doctest.h"
#include "wakecough/classifiers.hpp"
#include "wakecough/cnn.hpp"
#include "wakecough/eval.hpp"
#include "wakecough/rng.hpp"

using namespace wakecough;
namespace fs = std::filesystem;

namespace {

std::string tmp_path(const std::string& name) {
    return (fs::temp_directory_path() / name).string();
}

// three well-separated Gaussian blobs in 2-D
LabeledSet blobs(int per_class, double sep, uint64_t seed, double noise = 0.3) {
    Rng rng(seed);
    LabeledSet set;
    set.num_classes = 3;
    set.X.resize(3 * per_class, 2);
    const double cx[3] = {-sep, sep, 0.0};
    const double cy[3] = {0.0, 0.0, sep};
    for (int c = 0; c < 3; ++c)
        for (int i = 0; i < per_class; ++i) {
            const int r = c * per_class + i;
            set.X(r, 0) = cx[c] + noise * rng.gaussian();
            set.X(r, 1) = cy[c] + noise * rng.gaussian();
            set.y.push_back(c);
        }
    return set;
}

LabeledSet xor_set() {
    LabeledSet set;
    set.num_classes = 2;
    set.X.resize(40, 2);
    Rng rng(13);
    for (int i = 0; i < 40; ++i) {
        const double a = rng.uniform() < 0.5 ? -1.0 : 1.0;
        const double b = rng.uniform() < 0.5 ? -1.0 : 1.0;
        set.X(i, 0) = a + 0.1 * rng.gaussian();
        set.X(i, 1) = b + 0.1 * rng.gaussian();
        set.y.push_back(a * b > 0 ? 1 : 0);
    }
    return set;
}

double train_accuracy(const ClassifierModel& m, const LabeledSet& set) {
    return accuracy(m.predict(set.X), set.y);
}

} // namespace

TEST_CASE("logreg: separable fit, gradient oracle, l1 shrinkage") {
    LabeledSet set = blobs(30, 4.0, 1);
    auto m = train_logreg(set, {.reg_c = 100.0});
    CHECK(train_accuracy(*m, set) == doctest::Approx(1.0));
    Eigen::MatrixXd proba = m->predict_proba(set.X);
    for (long i = 0; i < proba.rows(); ++i)
        CHECK(proba.row(i).sum() == doctest::Approx(1.0).epsilon(1e-9));

    // analytic gradient of the smooth objective vs central differences
    LabeledSet tiny = blobs(5, 2.0, 2);
    tiny.X.conservativeResize(15, 4);
    Rng rng(3);
    for (int i = 0; i < 15; ++i)
        for (int j = 2; j < 4; ++j) tiny.X(i, j) = rng.gaussian();
    Eigen::MatrixXd W(3, 5);
    for (long i = 0; i < W.size(); ++i) W.data()[i] = 0.3 * rng.gaussian();
    const Eigen::MatrixXd g = logreg_gradient(tiny, W, 2.0, 0.7);
    const double h = 1e-6;
    double worst = 0.0;
    for (long i = 0; i < W.size(); ++i) {
        Eigen::MatrixXd Wp = W, Wm = W;
        Wp.data()[i] += h;
        Wm.data()[i] -= h;
        const double fd =
            (logreg_loss(tiny, Wp, 2.0, 0.7) - logreg_loss(tiny, Wm, 2.0, 0.7)) / (2 * h);
        worst = std::max(worst, std::abs(fd - g.data()[i]) /
                                    std::max(1.0, std::abs(fd) + std::abs(g.data()[i])));
    }
    CHECK(worst < 1e-5);

    // overwhelming l1 at tiny reg_c drives weights to zero -> majority vote
    LabeledSet skew = blobs(10, 3.0, 4);
    skew.num_classes = 2;
    skew.y.assign(skew.y.size(), 0);
    for (size_t i = 20; i < 30; ++i) skew.y[i] = 1;
    auto l1m = train_logreg(skew, {.reg_c = 1e-7, .l1 = 1.0});
    auto pred = l1m->predict(skew.X);
    for (int p : pred) CHECK(p == 0);
}

TEST_CASE("lda: closed-form discriminant oracle on 60-point fixture") {
    LabeledSet set = blobs(20, 3.0, 7, 0.6);
    auto m = train_lda(set, 1e-4, false);
    CHECK(train_accuracy(*m, set) >= 0.95);

    // independent oracle: pooled covariance with n-K divisor + shrinkage,
    // linear discriminant delta_k(x) = x' S^-1 mu_k - mu_k' S^-1 mu_k / 2 + log pi_k
    Eigen::MatrixXd mu(3, 2);
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(2, 2);
    for (int c = 0; c < 3; ++c) {
        Eigen::RowVector2d acc = Eigen::RowVector2d::Zero();
        int n = 0;
        for (long i = 0; i < set.size(); ++i)
            if (set.y[static_cast<size_t>(i)] == c) {
                acc += set.X.row(i);
                ++n;
            }
        mu.row(c) = acc / n;
    }
    for (long i = 0; i < set.size(); ++i) {
        const Eigen::RowVector2d d = set.X.row(i) - mu.row(set.y[static_cast<size_t>(i)]);
        S += d.transpose() * d;
    }
    S /= (60.0 - 3.0);
    S += 1e-4 * (S.trace() / 2.0) * Eigen::MatrixXd::Identity(2, 2);
    const Eigen::MatrixXd Sinv = S.inverse();
    std::vector<int> oracle;
    for (long i = 0; i < set.size(); ++i) {
        double best = -1e300;
        int arg = 0;
        for (int c = 0; c < 3; ++c) {
            const double score =
                (set.X.row(i) * Sinv * mu.row(c).transpose()).value() -
                0.5 * (mu.row(c) * Sinv * mu.row(c).transpose()).value() + std::log(1.0 / 3.0);
            if (score > best) {
                best = score;
                arg = c;
            }
        }
        oracle.push_back(arg);
    }
    CHECK(m->predict(set.X) == oracle);

    // duplicating every row leaves the decision rule unchanged
    LabeledSet dup;
    dup.num_classes = 3;
    dup.X.resize(120, 2);
    dup.X << set.X, set.X;
    dup.y = set.y;
    dup.y.insert(dup.y.end(), set.y.begin(), set.y.end());
    auto md = train_lda(dup, 1e-4, false);
    CHECK(md->predict(set.X) == m->predict(set.X));
}

TEST_CASE("svm: separable, xor, dual constraints and KKT") {
    LabeledSet set = blobs(20, 4.0, 9);
    auto m = train_svm(set, {.reg_c = 10.0, .gamma = 0.5}, 1);
    CHECK(train_accuracy(*m, set) == doctest::Approx(1.0));

    LabeledSet x = xor_set();
    auto mx = train_svm(x, {.reg_c = 10.0, .gamma = 1.0}, 2);
    CHECK(train_accuracy(*mx, x) == doctest::Approx(1.0));

    const SvmDiagnostics& d = svm_diagnostics(*mx);
    REQUIRE(!d.alphas.empty());
    for (const auto& a : d.alphas) {
        CHECK(a.minCoeff() >= -1e-12);
        CHECK(a.maxCoeff() <= d.reg_c + 1e-12);
    }
    for (double r : d.equality_residuals) CHECK(std::abs(r) <= 1e-6);
    for (double v : d.max_kkt_violations) CHECK(v <= 1e-3 + 1e-12);
}

TEST_CASE("mlp: gradient oracle, separable fit, determinism") {
    LabeledSet tiny = blobs(2, 2.0, 21); // 6 points, but use 4
    LabeledSet four = tiny.subset({0, 2, 4, 1});
    MlpParams hp{.hidden = 5};
    const long P = mlp_param_count(four.dim(), hp.hidden, four.num_classes);
    Rng rng(5);
    Eigen::VectorXd params(P);
    for (long i = 0; i < P; ++i) params(i) = 0.4 * rng.gaussian();
    Eigen::VectorXd grad(P);
    mlp_loss_and_grad(four, hp, params, &grad);
    const double h = 1e-5;
    double worst = 0.0;
    for (long i = 0; i < P; ++i) {
        Eigen::VectorXd p = params, q = params;
        p(i) += h;
        q(i) -= h;
        const double fd =
            (mlp_loss_and_grad(four, hp, p, nullptr) - mlp_loss_and_grad(four, hp, q, nullptr)) /
            (2 * h);
        worst = std::max(worst,
                         std::abs(fd - grad(i)) / std::max(1.0, std::abs(fd) + std::abs(grad(i))));
    }
    CHECK(worst < 1e-4);

    LabeledSet set = blobs(30, 4.0, 23);
    auto m = train_mlp(set, {.hidden = 16, .epochs = 100}, 3);
    CHECK(train_accuracy(*m, set) >= 0.99);

    auto m2 = train_mlp(set, {.hidden = 16, .epochs = 100}, 3);
    CHECK((m->predict_proba(set.X) - m2->predict_proba(set.X)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("classifier shared behavior: standardization, degenerate input") {
    LabeledSet set = blobs(15, 3.0, 31);
    LabeledSet scaled = set;
    scaled.X.col(0) *= 1000.0;
    scaled.X.col(1).array() += 50.0;
    LabeledSet probe = blobs(5, 3.0, 32);
    LabeledSet probe_scaled = probe;
    probe_scaled.X.col(0) *= 1000.0;
    probe_scaled.X.col(1).array() += 50.0;

    // with standardization, an affine per-dim rescale of train+test leaves
    // LDA and LR predictions unchanged
    auto lda_a = train_lda(set, 1e-4, true);
    auto lda_b = train_lda(scaled, 1e-4, true);
    CHECK(lda_a->predict(probe.X) == lda_b->predict(probe_scaled.X));
    auto lr_a = train_logreg(set, {.reg_c = 1.0});
    auto lr_b = train_logreg(scaled, {.reg_c = 1.0});
    CHECK(lr_a->predict(probe.X) == lr_b->predict(probe_scaled.X));

    // empty prediction input
    Eigen::MatrixXd empty(0, 2);
    CHECK(lda_a->predict(empty).empty());

    LabeledSet missing = set;
    for (auto& v : missing.y)
        if (v == 2) v = 1; // class 2 absent
    CHECK_THROWS(missing.validate());
}

TEST_CASE("eval metrics: spec examples and exactness") {
    CHECK(accuracy({0, 1, 1, 0}, {0, 1, 0, 0}) == doctest::Approx(0.75));
    // kappa worked example: p_o = 0.7, p_e = 0.4 -> 0.5
    std::vector<int> truth{0, 0, 0, 0, 0, 1, 1, 1, 1, 1};
    std::vector<int> pred{0, 0, 0, 0, 1, 1, 1, 0, 0, 1};
    CHECK(cohen_kappa(pred, truth) == doctest::Approx(0.4).epsilon(1e-12));
    // degenerate: all one class, perfect agreement -> 1
    CHECK(cohen_kappa({1, 1, 1}, {1, 1, 1}) == doctest::Approx(1.0));
    // degenerate: p_e = 1 with disagreement is 0 by convention guard
    CHECK(std::isfinite(cohen_kappa({0, 0, 1}, {1, 1, 1})));

    CHECK(sigma_acc({0.9, 1.0}) == doctest::Approx(0.05).epsilon(1e-12));
    CHECK_THROWS(sigma_acc({0.8}));

    Eigen::MatrixXi cm = confusion_matrix({0, 1, 1}, {0, 0, 1}, 2);
    CHECK(cm(0, 0) == 1);
    CHECK(cm(0, 1) == 1);
    CHECK(cm(1, 0) == 0);
    CHECK(cm(1, 1) == 1);

    // trace / sum equals accuracy on random label vectors
    Rng rng(77);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<int> a, b;
        const int n = 20 + static_cast<int>(rng.uniform() * 50);
        for (int i = 0; i < n; ++i) {
            a.push_back(static_cast<int>(rng.uniform() * 4));
            b.push_back(static_cast<int>(rng.uniform() * 4));
        }
        Eigen::MatrixXi m = confusion_matrix(a, b, 4);
        CHECK(static_cast<double>(m.trace()) / m.sum() ==
              doctest::Approx(accuracy(a, b)).epsilon(1e-12));
    }

    CHECK_THROWS(accuracy({0}, {0, 1}));
    CHECK_THROWS(accuracy({}, {}));
}

TEST_CASE("kfold_split: partition, stratification, determinism") {
    std::vector<int> labels;
    for (int i = 0; i < 23; ++i) labels.push_back(0);
    for (int i = 0; i < 17; ++i) labels.push_back(1);
    FoldPlan plan = kfold_split(labels, 5, 42);
    REQUIRE(plan.assignment.size() == labels.size());

    std::vector<int> seen(labels.size(), 0);
    for (int f = 0; f < 5; ++f) {
        auto test = plan.test_indices(f);
        auto train = plan.train_indices(f);
        CHECK(test.size() + train.size() == labels.size());
        for (int i : test) ++seen[static_cast<size_t>(i)];
        std::set<int> tr(train.begin(), train.end());
        for (int i : test) CHECK(!tr.count(i));
        // stratification: per-class counts differ by at most 1
        int c0 = 0, c1 = 0;
        for (int i : test) (labels[static_cast<size_t>(i)] == 0 ? c0 : c1)++;
        CHECK(c0 >= 23 / 5);
        CHECK(c0 <= 23 / 5 + 1);
        CHECK(c1 >= 17 / 5);
        CHECK(c1 <= 17 / 5 + 1);
    }
    for (int s : seen) CHECK(s == 1); // every sample in exactly one test fold

    FoldPlan again = kfold_split(labels, 5, 42);
    CHECK(again.assignment == plan.assignment);
    FoldPlan other = kfold_split(labels, 5, 43);
    CHECK(other.assignment != plan.assignment);

    std::vector<int> rare{0, 0, 0, 0, 0, 1, 1}; // class 1 has 2 < k samples
    CHECK_THROWS(kfold_split(rare, 5, 0));
}

TEST_CASE("nested_cv: selection, tie-breaking, leakage, fingerprints") {
    LabeledSet set = blobs(25, 3.5, 51);

    // grid {1e-7, 1e2} for LR reg_c: only 1e2 can fit, so every outer fold
    // must select index 1
    std::vector<double> grid{1e-7, 1e2};
    auto fit_predict = [&](const std::vector<int>& train_idx, const std::vector<int>& test_idx,
                           int gi, uint64_t) {
        auto m = train_logreg(set.subset(train_idx),
                              {.reg_c = grid[static_cast<size_t>(gi)], .l1 = 1.0});
        std::vector<int> out;
        Eigen::MatrixXd Xt(test_idx.size(), set.dim());
        for (size_t i = 0; i < test_idx.size(); ++i) Xt.row(static_cast<long>(i)) = set.X.row(test_idx[i]);
        return m->predict(Xt);
    };
    NestedCvSpec spec;
    spec.seed = 5;
    EvalReport rep = nested_cv(set.y, 3, 2, {"c=1e-7", "c=1e2"}, fit_predict, spec);
    CHECK(rep.outer_folds_evaluated == 5);
    CHECK(rep.fold_accuracies.size() == 5);
    for (int gi : rep.selected_grid_index) CHECK(gi == 1);
    CHECK(rep.mean_accuracy > 0.9);
    CHECK(rep.pooled_accuracy ==
          doctest::Approx(static_cast<double>(rep.confusion.trace()) / rep.confusion.sum()));
    CHECK(rep.train_fingerprints.size() == 5);
    CHECK(rep.sigma_convention == "population");

    // permuting the grid flips the selected index but not the accuracy
    std::vector<double> rgrid{1e2, 1e-7};
    auto fit_r = [&](const std::vector<int>& a, const std::vector<int>& b, int gi, uint64_t s) {
        return fit_predict(a, b, gi == 0 ? 1 : 0, s);
    };
    EvalReport rep_r = nested_cv(set.y, 3, 2, {"c=1e2", "c=1e-7"}, fit_r, spec);
    for (int gi : rep_r.selected_grid_index) CHECK(gi == 0);
    CHECK(rep_r.mean_accuracy == doctest::Approx(rep.mean_accuracy));

    // identical grid points tie; the lowest index must win
    auto fit_same = [&](const std::vector<int>& a, const std::vector<int>& b, int, uint64_t s) {
        return fit_predict(a, b, 1, s);
    };
    EvalReport rep_t = nested_cv(set.y, 3, 3, {"a", "b", "c"}, fit_same, spec);
    for (int gi : rep_t.selected_grid_index) CHECK(gi == 0);

    // leakage check: no fit call may see an index it is asked to predict
    bool leaked = false;
    auto fit_guard = [&](const std::vector<int>& train_idx, const std::vector<int>& test_idx,
                         int gi, uint64_t s) {
        std::set<int> tr(train_idx.begin(), train_idx.end());
        for (int i : test_idx)
            if (tr.count(i)) leaked = true;
        return fit_predict(train_idx, test_idx, gi, s);
    };
    nested_cv(set.y, 3, 2, {"x", "y"}, fit_guard, spec);
    CHECK(!leaked);

    // fingerprints are deterministic and order-insensitive on indices+labels
    CHECK(fingerprint_indices({3, 1, 2}, set.y) == fingerprint_indices({1, 2, 3}, set.y));
    CHECK(fingerprint_indices({1, 2}, set.y) != fingerprint_indices({1, 3}, set.y));

    // max_outer_folds budget cap
    NestedCvSpec capped = spec;
    capped.max_outer_folds = 2;
    EvalReport rep_c = nested_cv(set.y, 3, 2, {"x", "y"}, fit_predict, capped);
    CHECK(rep_c.outer_folds_evaluated == 2);
    CHECK(rep_c.fold_accuracies.size() == 2);
}

TEST_CASE("grid_search_cv wrapper") {
    LabeledSet set = blobs(25, 3.5, 61);
    auto trainer = [](const LabeledSet& train, int gi, uint64_t) {
        return train_logreg(train, {.reg_c = gi == 0 ? 1e-7 : 1e2, .l1 = 1.0});
    };
    NestedCvSpec spec;
    spec.seed = 9;
    EvalReport rep = grid_search_cv(set, {"weak", "strong"}, trainer, spec);
    for (int gi : rep.selected_grid_index) CHECK(gi == 1);
    CHECK(rep.mean_accuracy > 0.9);

    const std::string jp = tmp_path("wc_report.json");
    const std::string cp = tmp_path("wc_conf.csv");
    save_report_json(jp, rep);
    save_confusion_csv(cp, rep.confusion);
    CHECK(fs::file_size(jp) > 0);
    CHECK(fs::file_size(cp) > 0);
}

namespace {

// 16x16 maps, class 0 bright in the top half, class 1 in the bottom half
std::vector<FeatureMap> toy_maps(std::vector<int>* labels, int per_class, uint64_t seed) {
    Rng rng(seed);
    std::vector<FeatureMap> maps;
    for (int c = 0; c < 2; ++c)
        for (int i = 0; i < per_class; ++i) {
            FeatureMap m;
            m.spec = {16, 16};
            m.values.resize(16, 16);
            for (int r = 0; r < 16; ++r)
                for (int col = 0; col < 16; ++col) {
                    const bool hot = c == 0 ? r < 8 : r >= 8;
                    m.values(r, col) =
                        static_cast<float>((hot ? 1.0 : 0.0) + 0.1 * rng.gaussian());
                }
            maps.push_back(std::move(m));
            labels->push_back(c);
        }
    return maps;
}

} // namespace

TEST_CASE("cnn: gradient check, toy separation, determinism, io") {
    CHECK(cnn_gradient_check() < 1e-3);
    CHECK(cnn_gradient_check(12, 12, 3, 3, 4, 11) < 1e-3);

    std::vector<int> labels;
    auto maps = toy_maps(&labels, 20, 3);
    CnnConfig cfg;
    cfg.num_filters = 4;
    cfg.dense_size = 16;
    cfg.epochs = 30;
    cfg.batch_size = 8;
    cfg.seed = 1;
    std::vector<CnnEpochStats> log;
    CnnModel m = CnnModel::train(maps, labels, 2, cfg, &log);
    CHECK(accuracy(m.predict_labels(maps), labels) == doctest::Approx(1.0));
    REQUIRE(log.size() == 30);
    CHECK(log.front().loss < std::log(2.0)); // below chance cross-entropy ln K

    std::vector<CnnEpochStats> log2;
    CnnModel m2 = CnnModel::train(maps, labels, 2, cfg, &log2);
    for (size_t i = 0; i < log.size(); ++i) {
        CHECK(log[i].loss == log2[i].loss);
        CHECK(log[i].train_accuracy == log2[i].train_accuracy);
    }

    // probabilities sum to one
    Eigen::VectorXf p = m.predict(maps[0]);
    CHECK(std::abs(p.sum() - 1.0f) < 1e-5f);

    const std::string path = tmp_path("wc_cnn.bin");
    m.save(path);
    CnnModel back = CnnModel::load(path);
    CHECK(back.predict_labels(maps) == m.predict_labels(maps));
    CHECK((back.predict(maps[5]) - m.predict(maps[5])).cwiseAbs().maxCoeff() == 0.0f);

    // shape mismatch at predict time throws
    FeatureMap wrong;
    wrong.spec = {8, 8};
    wrong.values = Eigen::MatrixXf::Zero(8, 8);
    CHECK_THROWS(m.predict(wrong));

    const std::string lp = tmp_path("wc_cnn_log.csv");
    CnnModel::write_training_log_csv(lp, log);
    CHECK(fs::file_size(lp) > 0);
}

TEST_CASE("cnn: training result independent of trailing partial batch grouping") {
    std::vector<int> labels;
    auto maps = toy_maps(&labels, 10, 9); // 20 samples
    CnnConfig a;
    a.num_filters = 4;
    a.epochs = 5;
    a.batch_size = 20; // single full batch
    a.seed = 7;
    CnnConfig b = a;
    b.batch_size = 64; // larger than n: same single batch
    CnnModel ma = CnnModel::train(maps, labels, 2, a);
    CnnModel mb = CnnModel::train(maps, labels, 2, b);
    CHECK((ma.predict(maps[0]) - mb.predict(maps[0])).cwiseAbs().maxCoeff() == 0.0f);
}
