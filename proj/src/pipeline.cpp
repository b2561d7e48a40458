#include "wakecough/pipeline.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <fstream>
#include <map>
#include <stdexcept>

#include "wakecough/features.hpp"
#include "wakecough/ivector.hpp"
#include "wakecough/mfcc.hpp"
#include "wakecough/rng.hpp"
#include "wakecough/wav.hpp"

namespace wakecough {

namespace {

struct ClassifierGrid {
    std::vector<std::string> labels;
    std::vector<std::function<std::unique_ptr<ClassifierModel>(const LabeledSet&, uint64_t)>>
        trainers;
};

ClassifierGrid make_grid(const std::string& kind, const CougherEvalConfig& cfg) {
    ClassifierGrid grid;
    if (kind == "lr") {
        for (double c : cfg.lr_reg_c)
            for (double l1 : cfg.lr_l1) {
                grid.labels.push_back("lr C=" + std::to_string(c) + " l1=" + std::to_string(l1));
                const bool std = cfg.standardize;
                grid.trainers.push_back([c, l1, std](const LabeledSet& s, uint64_t) {
                    LogRegParams p;
                    p.reg_c = c;
                    p.l1 = l1;
                    return train_logreg(s, p, std);
                });
            }
    } else if (kind == "lda") {
        for (double e : cfg.lda_shrinkage) {
            grid.labels.push_back("lda eps=" + std::to_string(e));
            const bool std = cfg.standardize;
            grid.trainers.push_back(
                [e, std](const LabeledSet& s, uint64_t) { return train_lda(s, e, std); });
        }
    } else if (kind == "svm") {
        for (double c : cfg.svm_reg_c)
            for (double g : cfg.svm_gamma) {
                grid.labels.push_back("svm C=" + std::to_string(c) +
                                      " gamma=" + std::to_string(g));
                const bool std = cfg.standardize;
                grid.trainers.push_back([c, g, std](const LabeledSet& s, uint64_t seed) {
                    SvmParams p;
                    p.reg_c = c;
                    p.gamma = g;
                    return train_svm(s, p, seed, std);
                });
            }
    } else if (kind == "mlp") {
        for (double h : cfg.mlp_hidden) {
            grid.labels.push_back("mlp hidden=" + std::to_string(static_cast<int>(h)));
            const bool std = cfg.standardize;
            grid.trainers.push_back([h, std](const LabeledSet& s, uint64_t seed) {
                MlpParams p;
                p.hidden = static_cast<int>(h);
                p.l2 = 1e-3; // fixed weight decay; hidden size is the CV'd knob
                p.epochs = 100;
                return train_mlp(s, p, seed, std);
            });
        }
    } else {
        throw std::invalid_argument("unknown classifier kind: " + kind);
    }
    return grid;
}

uint64_t seed_from_fingerprint(const std::string& hex, uint64_t base) {
    return Rng::derive(base, std::stoull(hex, nullptr, 16));
}

} // namespace

CougherEvalResult run_cougher_eval(const DatasetManifest& coughs, const CougherEvalConfig& cfg,
                                   const EmbeddingSet* imported) {
    CougherEvalResult result;

    std::vector<int> labels;
    LabeledSet fixed; // used for imported embeddings
    std::vector<Eigen::MatrixXd> seg_frames; // per-segment MFCCs (ivector path)

    if (cfg.feature == "ivector") {
        CougherTask task;
        task.num_subjects = cfg.num_subjects;
        task.cough_sec = cfg.cough_sec;
        task.seed = cfg.seed;
        const auto clips = build_cougher_task(coughs, task);
        for (const auto& c : clips) result.subjects.push_back(c.subject);
        std::sort(result.subjects.begin(), result.subjects.end());
        for (const auto& c : clips) {
            const int label = static_cast<int>(
                std::lower_bound(result.subjects.begin(), result.subjects.end(), c.subject) -
                result.subjects.begin());
            for (const auto& seg : segment_utterances(c.clip, cfg.segment_sec)) {
                seg_frames.push_back(mfcc(seg));
                labels.push_back(label);
            }
        }
    } else {
        if (!imported)
            throw std::invalid_argument("feature '" + cfg.feature +
                                        "' requires an imported embedding set");
        std::vector<std::string> subjects(imported->subjects);
        std::sort(subjects.begin(), subjects.end());
        subjects.erase(std::unique(subjects.begin(), subjects.end()), subjects.end());
        if (static_cast<int>(subjects.size()) < cfg.num_subjects)
            throw std::invalid_argument("imported set has fewer subjects than N");
        subjects.resize(static_cast<size_t>(cfg.num_subjects));
        fixed = to_labeled_set(*imported, subjects);
        labels = fixed.y;
        result.subjects = subjects;
    }
    result.num_segments = static_cast<long>(labels.size());

    // Fold-local i-vector front ends, fitted once per outer fold on that
    // fold's full training set and reused for its inner splits. Inner
    // validation segments thus contribute frames to the (unsupervised)
    // UBM/TV fit, but outer-test segments never do. The outer plan below
    // mirrors the one nested_cv builds from the same spec.
    const FoldPlan outer_plan =
        kfold_split(labels, cfg.cv.outer_k, Rng::derive(cfg.cv.seed, 101));
    auto outer_fold_of = [&](const std::vector<int>& train_idx) {
        std::vector<char> in_train(labels.size(), 0);
        for (int i : train_idx) in_train[static_cast<size_t>(i)] = 1;
        for (int f = 0; f < cfg.cv.outer_k; ++f) {
            bool disjoint = true;
            for (size_t i = 0; i < labels.size() && disjoint; ++i)
                if (outer_plan.assignment[i] == f && in_train[i]) disjoint = false;
            if (disjoint) return f;
        }
        throw std::logic_error("training indices intersect every outer test fold");
    };
    std::map<int, Eigen::MatrixXd> ivector_cache;
    auto ivectors_for = [&](const std::vector<int>& train_idx) -> const Eigen::MatrixXd& {
        const int fold = outer_fold_of(train_idx);
        auto it = ivector_cache.find(fold);
        if (it != ivector_cache.end()) return it->second;

        const std::vector<int> fit_idx = outer_plan.train_indices(fold);
        const std::string fp = fingerprint_indices(fit_idx, labels);
        long train_frames = 0;
        for (int i : fit_idx) train_frames += seg_frames[static_cast<size_t>(i)].rows();
        Eigen::MatrixXd pool(train_frames, seg_frames.front().cols());
        long row = 0;
        for (int i : fit_idx) {
            const auto& f = seg_frames[static_cast<size_t>(i)];
            pool.middleRows(row, f.rows()) = f;
            row += f.rows();
        }
        const uint64_t fe_seed = seed_from_fingerprint(fp, Rng::derive(cfg.seed, 7001));
        const DiagGmm ubm = em_fit(pool, cfg.ubm_components, fe_seed).gmm;

        std::vector<BaumWelchStats> train_stats;
        train_stats.reserve(fit_idx.size());
        for (int i : fit_idx)
            train_stats.push_back(accumulate_stats(ubm, seg_frames[static_cast<size_t>(i)]));
        const TvModel tv =
            train_tv(train_stats, ubm, cfg.tv_rank, cfg.tv_iters, fe_seed).model;

        Eigen::MatrixXd all(static_cast<long>(seg_frames.size()), cfg.tv_rank);
        for (size_t i = 0; i < seg_frames.size(); ++i)
            all.row(static_cast<long>(i)) =
                extract_ivector(tv, accumulate_stats(ubm, seg_frames[i]));
        return ivector_cache.emplace(fold, std::move(all)).first->second;
    };

    const int num_classes = static_cast<int>(result.subjects.size());
    for (const auto& kind : cfg.classifiers) {
        const ClassifierGrid grid = make_grid(kind, cfg);
        FitPredictFn fit_predict = [&](const std::vector<int>& train_idx,
                                       const std::vector<int>& test_idx, int grid_index,
                                       uint64_t seed) {
            LabeledSet train;
            Eigen::MatrixXd Xt(static_cast<long>(test_idx.size()),
                               cfg.feature == "ivector" ? cfg.tv_rank : fixed.X.cols());
            train.num_classes = num_classes;
            if (cfg.feature == "ivector") {
                const Eigen::MatrixXd& ivecs = ivectors_for(train_idx);
                train.X.resize(static_cast<long>(train_idx.size()), ivecs.cols());
                for (size_t i = 0; i < train_idx.size(); ++i)
                    train.X.row(static_cast<long>(i)) = ivecs.row(train_idx[i]);
                for (size_t i = 0; i < test_idx.size(); ++i)
                    Xt.row(static_cast<long>(i)) = ivecs.row(test_idx[i]);
            } else {
                train.X.resize(static_cast<long>(train_idx.size()), fixed.X.cols());
                for (size_t i = 0; i < train_idx.size(); ++i)
                    train.X.row(static_cast<long>(i)) = fixed.X.row(train_idx[i]);
                for (size_t i = 0; i < test_idx.size(); ++i)
                    Xt.row(static_cast<long>(i)) = fixed.X.row(test_idx[i]);
            }
            if (cfg.length_normalize) {
                auto unit_rows = [](Eigen::MatrixXd& M) {
                    for (long r = 0; r < M.rows(); ++r) {
                        const double n = M.row(r).norm();
                        if (n > 0) M.row(r) /= n;
                    }
                };
                unit_rows(train.X);
                unit_rows(Xt);
            }
            train.y.resize(train_idx.size());
            for (size_t i = 0; i < train_idx.size(); ++i)
                train.y[i] = labels[static_cast<size_t>(train_idx[i])];
            auto model = grid.trainers[static_cast<size_t>(grid_index)](train, seed);
            return model->predict(Xt);
        };
        result.cells.push_back(
            {kind, nested_cv(labels, num_classes, grid.trainers.size(), grid.labels,
                             fit_predict, cfg.cv)});
    }
    return result;
}

void write_cougher_summary_csv(const std::string& path, const std::string& dataset_name,
                               const CougherEvalConfig& cfg, const CougherEvalResult& result) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write summary: " + path);
    out << "dataset,N,t,feature,classifier,mean_accuracy,sigma_acc,mean_kappa\n";
    for (const auto& cell : result.cells)
        out << dataset_name << ',' << cfg.num_subjects << ',' << cfg.cough_sec << ','
            << cfg.feature << ',' << cell.classifier << ',' << cell.report.mean_accuracy << ','
            << cell.report.sigma_accuracy << ',' << cell.report.mean_kappa << '\n';
}

std::vector<CnnConfig> default_cnn_grid() {
    std::vector<CnnConfig> grid;
    for (int dense : {16, 32})
        for (double dropout : {0.1, 0.3}) {
            CnnConfig c;
            c.num_filters = 24;
            c.kernel_size = 2;
            c.dense_size = dense;
            c.dropout = dropout;
            c.batch_size = 64;
            c.epochs = 10;
            grid.push_back(c);
        }
    return grid;
}

SpottingEvalResult run_spotting_eval(const DatasetManifest& manifest,
                                     const SpottingEvalConfig& cfg) {
    if (manifest.entries.empty()) throw std::invalid_argument("empty spotting manifest");
    SpottingEvalResult result;
    result.class_names = manifest.labels();

    std::vector<int> labels;
    std::vector<AudioClip> clips;
    clips.reserve(manifest.entries.size());
    for (const auto& e : manifest.entries) {
        clips.push_back(read_wav(e.path));
        labels.push_back(static_cast<int>(
            std::lower_bound(result.class_names.begin(), result.class_names.end(), e.label) -
            result.class_names.begin()));
    }

    const std::vector<CnnConfig> grid =
        cfg.cnn_grid.empty() ? default_cnn_grid() : cfg.cnn_grid;
    std::vector<std::string> grid_labels;
    for (const auto& c : grid)
        grid_labels.push_back("filters=" + std::to_string(c.num_filters) +
                              " kernel=" + std::to_string(c.kernel_size) +
                              " dense=" + std::to_string(c.dense_size) +
                              " dropout=" + std::to_string(c.dropout) +
                              " epochs=" + std::to_string(c.epochs));

    for (int F : cfg.frame_lengths)
        for (int S : cfg.frame_counts) {
            std::vector<FeatureMap> maps;
            maps.reserve(clips.size());
            for (const auto& clip : clips)
                maps.push_back(extract_feature_map(clip, FrameSpec{F, S}));

            FitPredictFn fit_predict = [&](const std::vector<int>& train_idx,
                                           const std::vector<int>& test_idx, int grid_index,
                                           uint64_t seed) {
                std::vector<FeatureMap> train_maps;
                std::vector<int> train_labels;
                train_maps.reserve(train_idx.size());
                for (int i : train_idx) {
                    train_maps.push_back(maps[static_cast<size_t>(i)]);
                    train_labels.push_back(labels[static_cast<size_t>(i)]);
                }
                CnnConfig c = grid[static_cast<size_t>(grid_index)];
                c.seed = seed;
                const CnnModel model =
                    CnnModel::train(train_maps, train_labels,
                                    static_cast<int>(result.class_names.size()), c);
                std::vector<FeatureMap> test_maps;
                test_maps.reserve(test_idx.size());
                for (int i : test_idx) test_maps.push_back(maps[static_cast<size_t>(i)]);
                return model.predict_labels(test_maps);
            };

            result.cells.push_back(
                {F, S,
                 nested_cv(labels, static_cast<int>(result.class_names.size()), grid.size(),
                           grid_labels, fit_predict, cfg.cv)});
        }

    for (size_t i = 0; i < result.cells.size(); ++i)
        if (result.best_cell < 0 ||
            result.cells[i].report.mean_accuracy >
                result.cells[static_cast<size_t>(result.best_cell)].report.mean_accuracy)
            result.best_cell = static_cast<int>(i);
    return result;
}

void write_spotting_summary_csv(const std::string& path, const SpottingEvalResult& result) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write summary: " + path);
    out << "frame_len,num_frames,mean_accuracy,sigma_acc,mean_kappa\n";
    for (const auto& cell : result.cells)
        out << cell.frame_len << ',' << cell.num_frames << ',' << cell.report.mean_accuracy
            << ',' << cell.report.sigma_accuracy << ',' << cell.report.mean_kappa << '\n';
}

Eigen::MatrixXd pca_project(const Eigen::MatrixXd& rows) {
    if (rows.rows() < 3) throw std::invalid_argument("pca_project: need at least 3 vectors");
    Eigen::MatrixXd centered = rows.rowwise() - rows.colwise().mean();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
    return centered * svd.matrixV().leftCols(2);
}

void write_projection_csv(const std::string& path, const std::vector<std::string>& ids,
                          const Eigen::MatrixXd& projected) {
    if (static_cast<long>(ids.size()) != projected.rows())
        throw std::invalid_argument("projection id/row count mismatch");
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write projection: " + path);
    out << "id,pc1,pc2\n";
    out.precision(17);
    for (long i = 0; i < projected.rows(); ++i)
        out << ids[static_cast<size_t>(i)] << ',' << projected(i, 0) << ',' << projected(i, 1)
            << '\n';
}

} // namespace wakecough
