#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "wakecough/dataset.hpp"
#include "wakecough/embeddings.hpp"
#include "wakecough/eval.hpp"
#include "wakecough/features.hpp"
#include "wakecough/grids.hpp"
#include "wakecough/ivector.hpp"
#include "wakecough/mfcc.hpp"
#include "wakecough/pipeline.hpp"
#include "wakecough/wav.hpp"

namespace fs = std::filesystem;
using namespace wakecough;

namespace {

// Invalid user input; maps to exit code 2.
struct UserError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void check_grid(const std::vector<double>& values, const std::vector<double>& grid,
                const std::string& name, bool allow_offgrid) {
    if (allow_offgrid) return;
    for (double v : values)
        if (!on_grid(v, grid)) {
            std::ostringstream os;
            os << name << " value " << v
               << " is outside the reference grid; pass --allow-offgrid to override";
            throw UserError(os.str());
        }
}

std::vector<double> parse_grid_flag(const std::string& expr, const std::string& name) {
    try {
        return parse_grid_expr(expr);
    } catch (const std::exception& e) {
        throw UserError("bad " + name + " grid '" + expr + "': " + e.what());
    }
}

void require_path(const std::string& path, const std::string& what) {
    if (!fs::exists(path)) throw UserError(what + " path does not exist: " + path);
}

int default_workers() {
    if (const char* env = std::getenv("WAKECOUGH_WORKERS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    return 1;
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

void print_manifest_summary(const DatasetManifest& m, const std::string& name) {
    std::map<std::string, long> per_class;
    std::map<int, long> duration_hist; // floor(seconds) buckets
    double total_sec = 0.0;
    for (const auto& e : m.entries) {
        ++per_class[e.label];
        ++duration_hist[static_cast<int>(e.duration_sec)];
        total_sec += e.duration_sec;
    }
    std::cout << name << ": " << m.entries.size() << " events, " << per_class.size()
              << " classes, " << total_sec << " s total\n";
    for (const auto& [label, n] : per_class) std::cout << "  " << label << ": " << n << '\n';
    std::cout << "  duration histogram (floor seconds):";
    for (const auto& [sec, n] : duration_hist) std::cout << ' ' << sec << "s:" << n;
    std::cout << '\n';
}

Eigen::MatrixXd pool_mfcc(const DatasetManifest& m) {
    std::vector<Eigen::MatrixXd> frames;
    long total = 0;
    for (const auto& e : m.entries) {
        frames.push_back(mfcc(read_wav(e.path)));
        total += frames.back().rows();
    }
    if (frames.empty()) throw UserError("manifest has no entries");
    Eigen::MatrixXd pool(total, frames.front().cols());
    long row = 0;
    for (const auto& f : frames) {
        pool.middleRows(row, f.rows()) = f;
        row += f.rows();
    }
    return pool;
}

int run(int argc, char** argv) {
    CLI::App app{"wake-cough toolkit: cough spotting and cougher identification"};
    app.require_subcommand(1);
    bool allow_offgrid = false;
    app.add_flag("--allow-offgrid", allow_offgrid,
                 "accept hyperparameters outside the reference grids");
    int workers = default_workers();
    app.add_option("--workers", workers, "worker count (default from WAKECOUGH_WORKERS)");

    // build
    auto* build = app.add_subcommand("build", "assemble a corpus manifest");
    bool synthetic = false;
    std::string variant, commands_dir, coughs_dir, noises_dir, build_out = "corpus";
    uint64_t build_seed = 0;
    int fx_coughers = 5, fx_bursts = 30, fx_events = 200;
    build->add_flag("--synthetic", synthetic, "generate the synthetic fixture corpus");
    build->add_option("--variant", variant, "sc-11 or sc-36");
    build->add_option("--commands", commands_dir, "speech-commands corpus root");
    build->add_option("--coughs", coughs_dir, "cough WAV corpus root");
    build->add_option("--noises", noises_dir, "noise WAV corpus root");
    build->add_option("--out", build_out, "output directory");
    build->add_option("--seed", build_seed, "RNG seed");
    build->add_option("--coughers", fx_coughers, "synthetic: number of coughers");
    build->add_option("--bursts", fx_bursts, "synthetic: bursts per cougher");
    build->add_option("--events-per-word", fx_events, "synthetic: events per tone word");

    // features
    auto* features = app.add_subcommand("features", "extract one spectral feature map");
    std::string feat_wav, feat_out, feat_csv;
    int feat_f = 1024, feat_s = 100;
    features->add_option("--wav", feat_wav)->required();
    features->add_option("--frame-len", feat_f, "F (samples)");
    features->add_option("--num-frames", feat_s, "S (frames)");
    features->add_option("--out", feat_out)->required();
    features->add_option("--csv", feat_csv, "also export as CSV");

    // ubm-train
    auto* ubm_cmd = app.add_subcommand("ubm-train", "train the diagonal GMM background model");
    std::string ubm_manifest, ubm_out;
    int ubm_components = 64;
    uint64_t ubm_seed = 0;
    ubm_cmd->add_option("--manifest", ubm_manifest)->required();
    ubm_cmd->add_option("--components", ubm_components);
    ubm_cmd->add_option("--seed", ubm_seed);
    ubm_cmd->add_option("--out", ubm_out)->required();

    // tv-train
    auto* tv_cmd = app.add_subcommand("tv-train", "train the total-variability matrix");
    std::string tv_manifest, tv_ubm, tv_out;
    int tv_rank = 100, tv_iters = 10;
    uint64_t tv_seed = 0;
    tv_cmd->add_option("--manifest", tv_manifest)->required();
    tv_cmd->add_option("--ubm", tv_ubm)->required();
    tv_cmd->add_option("--rank", tv_rank);
    tv_cmd->add_option("--iters", tv_iters);
    tv_cmd->add_option("--seed", tv_seed);
    tv_cmd->add_option("--out", tv_out)->required();

    // ivector
    auto* iv_cmd = app.add_subcommand("ivector", "extract i-vectors for a manifest");
    std::string iv_manifest, iv_tv, iv_out;
    iv_cmd->add_option("--manifest", iv_manifest)->required();
    iv_cmd->add_option("--tv", iv_tv)->required();
    iv_cmd->add_option("--out", iv_out)->required();

    // import-embeddings
    auto* imp_cmd = app.add_subcommand("import-embeddings", "validate an embedding CSV");
    std::string imp_in, imp_kind = "xvector", imp_out;
    imp_cmd->add_option("--input", imp_in)->required();
    imp_cmd->add_option("--kind", imp_kind, "ivector | xvector | dvector");
    imp_cmd->add_option("--out", imp_out, "re-export after validation");

    // run-cougher
    auto* cougher = app.add_subcommand("run-cougher", "cougher identification experiment");
    std::string cg_manifest, cg_feature = "ivector", cg_embeddings,
                cg_classifiers = "lr,lda,svm,mlp", cg_out = "cougher-out";
    std::string cg_n_grid = "5", cg_t_grid = "20";
    int cg_ubm = 64, cg_rank = 100, cg_tv_iters = 10, cg_max_outer = 0;
    uint64_t cg_seed = 0;
    cougher->add_option("--manifest", cg_manifest)->required();
    cougher->add_option("--n-grid", cg_n_grid, "subject-count grid expression");
    cougher->add_option("--t-grid", cg_t_grid, "cough-seconds grid expression");
    cougher->add_option("--feature", cg_feature, "ivector | xvector | dvector");
    cougher->add_option("--embeddings", cg_embeddings, "imported embedding CSV");
    cougher->add_option("--classifiers", cg_classifiers, "comma list: lr,lda,svm,mlp");
    cougher->add_option("--ubm-components", cg_ubm);
    cougher->add_option("--tv-rank", cg_rank);
    cougher->add_option("--tv-iters", cg_tv_iters);
    std::string cg_penalty_grid, cg_hidden_grid;
    cougher->add_option("--penalty-grid", cg_penalty_grid,
                        "LR/SVM regularization grid expression (reg_C values)");
    cougher->add_option("--hidden-grid", cg_hidden_grid, "MLP hidden-size grid expression");
    bool cg_length_norm = false, cg_no_standardize = false;
    cougher->add_flag("--length-norm", cg_length_norm, "unit-normalize embeddings");
    cougher->add_flag("--no-standardize", cg_no_standardize,
                      "disable per-fold feature standardization");
    cougher->add_option("--max-outer-folds", cg_max_outer, "0 = all 5");
    cougher->add_option("--seed", cg_seed);
    cougher->add_option("--out", cg_out, "output directory");
    bool cg_dry_run = false;
    cougher->add_flag("--dry-run", cg_dry_run, "validate config and write sidecar only");

    // run-spotting
    auto* spotting = app.add_subcommand("run-spotting", "cough spotting experiment");
    std::string sp_manifest, sp_out = "spotting-out";
    std::string sp_f_grid = "1024", sp_s_grid = "100";
    std::string sp_filters = "24", sp_kernel = "2", sp_dropout = "0.1, 0.3",
                sp_dense = "2^k, k=4, 5", sp_batch = "64", sp_epochs = "10";
    int sp_max_outer = 0;
    uint64_t sp_seed = 0;
    spotting->add_option("--manifest", sp_manifest)->required();
    spotting->add_option("--f-grid", sp_f_grid, "frame-length grid expression");
    spotting->add_option("--s-grid", sp_s_grid, "frame-count grid expression");
    spotting->add_option("--filters-grid", sp_filters);
    spotting->add_option("--kernel-grid", sp_kernel);
    spotting->add_option("--dropout-grid", sp_dropout);
    spotting->add_option("--dense-grid", sp_dense);
    spotting->add_option("--batch-grid", sp_batch);
    spotting->add_option("--epochs-grid", sp_epochs);
    spotting->add_option("--max-outer-folds", sp_max_outer, "0 = all 5");
    spotting->add_option("--seed", sp_seed);
    spotting->add_option("--out", sp_out, "output directory");
    bool sp_dry_run = false;
    spotting->add_flag("--dry-run", sp_dry_run, "validate config and write sidecar only");

    // project
    auto* project = app.add_subcommand("project", "2-D PCA projection of an i-vector CSV");
    std::string pj_in, pj_out;
    project->add_option("--input", pj_in)->required();
    project->add_option("--out", pj_out)->required();

    // report
    auto* report = app.add_subcommand("report", "print a report JSON summary");
    std::string rp_in;
    report->add_option("--input", rp_in)->required();

    CLI11_PARSE(app, argc, argv);
    (void)workers; // cells run sequentially; flag recorded in sidecars

    if (build->parsed()) {
        if (synthetic) {
            FixtureSpec spec = default_fixture_spec(fx_coughers, fx_bursts);
            spec.events_per_word = fx_events;
            const FixtureResult fx = generate_synthetic_fixtures(spec, build_seed, build_out);
            print_manifest_summary(fx.coughs, "coughs");
            print_manifest_summary(fx.words, "words");
            print_manifest_summary(fx.noises, "noises");
            return 0;
        }
        if (variant != "sc-11" && variant != "sc-36")
            throw UserError("--variant must be sc-11 or sc-36 (or pass --synthetic)");
        require_path(commands_dir, "commands");
        require_path(coughs_dir, "coughs");
        require_path(noises_dir, "noises");
        const ScBuildResult built = build_sc_dataset(
            scan_corpus(commands_dir), scan_corpus(coughs_dir), scan_corpus(noises_dir),
            variant == "sc-11" ? ScVariant::SC11 : ScVariant::SC36, build_seed, build_out);
        save_manifest((fs::path(build_out) / "manifest.jsonl").string(), built.manifest);
        print_manifest_summary(built.manifest, variant);
        return 0;
    }

    if (features->parsed()) {
        require_path(feat_wav, "wav");
        check_grid({static_cast<double>(feat_f)}, paper_grids().frame_lengths, "frame-len",
                   allow_offgrid);
        check_grid({static_cast<double>(feat_s)}, paper_grids().frame_counts, "num-frames",
                   allow_offgrid);
        const FeatureMap map = extract_feature_map(read_wav(feat_wav), {feat_f, feat_s});
        save_feature_map(feat_out, map);
        if (!feat_csv.empty()) export_feature_map_csv(feat_csv, map);
        std::cout << "feature map " << map.rows() << " x " << map.cols() << " -> " << feat_out
                  << '\n';
        return 0;
    }

    if (ubm_cmd->parsed()) {
        require_path(ubm_manifest, "manifest");
        const EmResult r = em_fit(pool_mfcc(load_manifest(ubm_manifest)), ubm_components,
                                  ubm_seed);
        save_gmm(ubm_out, r.gmm);
        std::cout << "ubm: " << ubm_components << " components, "
                  << r.log_likelihoods.size() << " EM iterations, final LL "
                  << r.log_likelihoods.back() << " -> " << ubm_out << '\n';
        return 0;
    }

    if (tv_cmd->parsed()) {
        require_path(tv_manifest, "manifest");
        require_path(tv_ubm, "ubm");
        const DiagGmm ubm = load_gmm(tv_ubm);
        const DatasetManifest m = load_manifest(tv_manifest);
        std::vector<BaumWelchStats> stats;
        for (const auto& e : m.entries)
            stats.push_back(accumulate_stats(ubm, mfcc(read_wav(e.path))));
        const TvTrainResult r = train_tv(stats, ubm, tv_rank, tv_iters, tv_seed);
        save_tv(tv_out, r.model);
        std::cout << "tv: rank " << tv_rank << ", objective " << r.objective.front() << " -> "
                  << r.objective.back() << ", saved " << tv_out << '\n';
        return 0;
    }

    if (iv_cmd->parsed()) {
        require_path(iv_manifest, "manifest");
        require_path(iv_tv, "tv model");
        const TvModel tv = load_tv(iv_tv);
        const DatasetManifest m = load_manifest(iv_manifest);
        std::vector<IVector> ivs;
        for (const auto& e : m.entries) {
            IVector iv;
            iv.w = extract_ivector(tv, accumulate_stats(tv.ubm, mfcc(read_wav(e.path))));
            iv.utterance_id = e.id;
            iv.cougher_id = e.subject.empty() ? e.label : e.subject;
            ivs.push_back(std::move(iv));
        }
        export_ivectors_csv(iv_out, ivs);
        std::cout << ivs.size() << " i-vectors -> " << iv_out << '\n';
        return 0;
    }

    if (imp_cmd->parsed()) {
        require_path(imp_in, "input");
        EmbeddingKind kind;
        try {
            kind = parse_embedding_kind(imp_kind);
        } catch (const std::exception& e) {
            throw UserError(e.what());
        }
        const EmbeddingSet set = import_embeddings(imp_in, kind);
        for (const auto& w : set.warnings) std::cerr << "warning: " << w << '\n';
        std::cout << set.rows.rows() << " embeddings (" << imp_kind << ", dim "
                  << embedding_dim(kind) << ")\n";
        if (!imp_out.empty()) export_embeddings(imp_out, set);
        return 0;
    }

    if (cougher->parsed()) {
        require_path(cg_manifest, "manifest");
        const std::vector<double> n_values = parse_grid_flag(cg_n_grid, "N");
        const std::vector<double> t_values = parse_grid_flag(cg_t_grid, "t");
        check_grid(n_values, paper_grids().num_subjects, "N", allow_offgrid);
        check_grid(t_values, paper_grids().cough_seconds, "t", allow_offgrid);
        if (cg_feature != "ivector" && cg_feature != "xvector" && cg_feature != "dvector")
            throw UserError("--feature must be ivector, xvector or dvector");
        EmbeddingSet imported;
        if (cg_feature != "ivector") {
            if (cg_embeddings.empty())
                throw UserError("feature '" + cg_feature + "' requires --embeddings");
            require_path(cg_embeddings, "embeddings");
            imported = import_embeddings(cg_embeddings, parse_embedding_kind(cg_feature));
        }
        fs::create_directories(cg_out);

        CougherEvalConfig base;
        base.feature = cg_feature;
        base.ubm_components = cg_ubm;
        base.tv_rank = cg_rank;
        base.tv_iters = cg_tv_iters;
        base.classifiers = split_list(cg_classifiers);
        base.length_normalize = cg_length_norm;
        base.standardize = !cg_no_standardize;
        base.seed = cg_seed;
        base.cv.seed = cg_seed;
        base.cv.max_outer_folds = cg_max_outer;
        if (!cg_penalty_grid.empty()) {
            const std::vector<double> penalties = parse_grid_flag(cg_penalty_grid, "penalty");
            base.lr_reg_c = penalties;
            base.svm_reg_c = penalties;
        }
        if (!cg_hidden_grid.empty())
            base.mlp_hidden = parse_grid_flag(cg_hidden_grid, "hidden");
        check_grid(base.lr_reg_c, paper_grids().pow10, "lr reg_C", allow_offgrid);
        check_grid(base.lr_l1, paper_grids().penalty_steps, "lr l1", allow_offgrid);
        check_grid(base.svm_reg_c, paper_grids().pow10, "svm reg_C", allow_offgrid);
        check_grid(base.svm_gamma, paper_grids().pow10, "svm gamma", allow_offgrid);
        check_grid(base.mlp_hidden, paper_grids().mlp_hidden, "mlp hidden", allow_offgrid);

        nlohmann::ordered_json sidecar;
        sidecar["command"] = "run-cougher";
        sidecar["manifest"] = cg_manifest;
        sidecar["n_grid"] = n_values;
        sidecar["t_grid"] = t_values;
        sidecar["feature"] = cg_feature;
        sidecar["classifiers"] = base.classifiers;
        sidecar["ubm_components"] = cg_ubm;
        sidecar["tv_rank"] = cg_rank;
        sidecar["tv_iters"] = cg_tv_iters;
        sidecar["lr_reg_c"] = base.lr_reg_c;
        sidecar["mlp_hidden"] = base.mlp_hidden;
        sidecar["max_outer_folds"] = cg_max_outer;
        sidecar["seed"] = cg_seed;
        sidecar["workers"] = workers;
        std::ofstream(fs::path(cg_out) / "config.json") << sidecar.dump(2) << '\n';
        if (cg_dry_run) {
            std::cout << "config ok: " << n_values.size() * t_values.size() << " (N, t) cells\n";
            return 0;
        }

        const DatasetManifest coughs = load_manifest(cg_manifest);
        std::ofstream summary(fs::path(cg_out) / "summary.csv");
        summary << "dataset,N,t,feature,classifier,mean_accuracy,sigma_acc,mean_kappa\n";
        for (double n : n_values)
            for (double t : t_values) {
                CougherEvalConfig cfg = base;
                cfg.num_subjects = static_cast<int>(n);
                cfg.cough_sec = t;
                const CougherEvalResult res = run_cougher_eval(
                    coughs, cfg, cg_feature == "ivector" ? nullptr : &imported);
                for (const auto& cell : res.cells) {
                    std::ostringstream stem;
                    stem << "report_N" << cfg.num_subjects << "_t" << t << '_'
                         << cell.classifier;
                    save_report_json((fs::path(cg_out) / (stem.str() + ".json")).string(),
                                     cell.report);
                    save_confusion_csv(
                        (fs::path(cg_out) / (stem.str() + "_confusion.csv")).string(),
                        cell.report.confusion);
                    summary << cg_manifest << ',' << cfg.num_subjects << ',' << t << ','
                            << cfg.feature << ',' << cell.classifier << ','
                            << cell.report.mean_accuracy << ',' << cell.report.sigma_accuracy
                            << ',' << cell.report.mean_kappa << '\n';
                    std::cout << "N=" << cfg.num_subjects << " t=" << t << " "
                              << cell.classifier << ": acc " << cell.report.mean_accuracy
                              << " sigma " << cell.report.sigma_accuracy << " kappa "
                              << cell.report.mean_kappa << '\n';
                }
            }
        return 0;
    }

    if (spotting->parsed()) {
        require_path(sp_manifest, "manifest");
        const std::vector<double> f_values = parse_grid_flag(sp_f_grid, "F");
        const std::vector<double> s_values = parse_grid_flag(sp_s_grid, "S");
        const std::vector<double> filters = parse_grid_flag(sp_filters, "filters");
        const std::vector<double> kernels = parse_grid_flag(sp_kernel, "kernel");
        const std::vector<double> dropouts = parse_grid_flag(sp_dropout, "dropout");
        const std::vector<double> denses = parse_grid_flag(sp_dense, "dense");
        const std::vector<double> batches = parse_grid_flag(sp_batch, "batch");
        const std::vector<double> epochs = parse_grid_flag(sp_epochs, "epochs");
        const PaperGrids& pg = paper_grids();
        check_grid(f_values, pg.frame_lengths, "F", allow_offgrid);
        check_grid(s_values, pg.frame_counts, "S", allow_offgrid);
        check_grid(filters, pg.cnn_filters, "filters", allow_offgrid);
        check_grid(kernels, pg.cnn_kernel, "kernel", allow_offgrid);
        check_grid(dropouts, pg.cnn_dropout, "dropout", allow_offgrid);
        check_grid(denses, pg.cnn_dense, "dense", allow_offgrid);
        check_grid(batches, pg.cnn_batch, "batch", allow_offgrid);
        check_grid(epochs, pg.cnn_epochs, "epochs", allow_offgrid);
        fs::create_directories(sp_out);

        SpottingEvalConfig cfg;
        cfg.frame_lengths.clear();
        for (double f : f_values) cfg.frame_lengths.push_back(static_cast<int>(f));
        cfg.frame_counts.clear();
        for (double s : s_values) cfg.frame_counts.push_back(static_cast<int>(s));
        for (double nf : filters)
            for (double k : kernels)
                for (double dr : dropouts)
                    for (double dn : denses)
                        for (double b : batches)
                            for (double ep : epochs) {
                                CnnConfig c;
                                c.num_filters = static_cast<int>(nf);
                                c.kernel_size = static_cast<int>(k);
                                c.dropout = dr;
                                c.dense_size = static_cast<int>(dn);
                                c.batch_size = static_cast<int>(b);
                                c.epochs = static_cast<int>(ep);
                                cfg.cnn_grid.push_back(c);
                            }
        cfg.seed = sp_seed;
        cfg.cv.seed = sp_seed;
        cfg.cv.max_outer_folds = sp_max_outer;

        nlohmann::ordered_json sidecar;
        sidecar["command"] = "run-spotting";
        sidecar["manifest"] = sp_manifest;
        sidecar["f_grid"] = f_values;
        sidecar["s_grid"] = s_values;
        sidecar["filters"] = filters;
        sidecar["kernel"] = kernels;
        sidecar["dropout"] = dropouts;
        sidecar["dense"] = denses;
        sidecar["batch"] = batches;
        sidecar["epochs"] = epochs;
        sidecar["max_outer_folds"] = sp_max_outer;
        sidecar["seed"] = sp_seed;
        sidecar["workers"] = workers;
        std::ofstream(fs::path(sp_out) / "config.json") << sidecar.dump(2) << '\n';
        if (sp_dry_run) {
            std::cout << "config ok: " << f_values.size() * s_values.size() << " (F, S) cells, "
                      << cfg.cnn_grid.size() << " CNN configs\n";
            return 0;
        }

        const SpottingEvalResult res = run_spotting_eval(load_manifest(sp_manifest), cfg);
        write_spotting_summary_csv((fs::path(sp_out) / "summary.csv").string(), res);
        for (const auto& cell : res.cells) {
            std::ostringstream stem;
            stem << "report_F" << cell.frame_len << "_S" << cell.num_frames;
            save_report_json((fs::path(sp_out) / (stem.str() + ".json")).string(),
                             cell.report);
            std::cout << "F=" << cell.frame_len << " S=" << cell.num_frames << ": acc "
                      << cell.report.mean_accuracy << " kappa " << cell.report.mean_kappa
                      << '\n';
        }
        if (res.best_cell >= 0)
            save_confusion_csv((fs::path(sp_out) / "best_confusion.csv").string(),
                               res.cells[static_cast<size_t>(res.best_cell)].report.confusion);
        return 0;
    }

    if (project->parsed()) {
        require_path(pj_in, "input");
        std::ifstream in(pj_in);
        std::string line;
        if (!std::getline(in, line)) throw UserError("empty csv: " + pj_in);
        std::vector<std::string> ids;
        std::vector<std::vector<double>> rows;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::stringstream ss(line);
            std::string field;
            std::getline(ss, field, ','); // utterance id
            std::getline(ss, field, ','); // cougher id
            ids.push_back(field);
            std::vector<double> row;
            while (std::getline(ss, field, ',')) row.push_back(std::stod(field));
            rows.push_back(std::move(row));
        }
        if (rows.size() < 3) throw UserError("need at least 3 vectors to project");
        Eigen::MatrixXd X(static_cast<long>(rows.size()),
                          static_cast<long>(rows.front().size()));
        for (size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].size() != rows.front().size())
                throw UserError("ragged csv row in " + pj_in);
            for (size_t j = 0; j < rows[i].size(); ++j)
                X(static_cast<long>(i), static_cast<long>(j)) = rows[i][j];
        }
        write_projection_csv(pj_out, ids, pca_project(X));
        std::cout << rows.size() << " vectors -> " << pj_out << '\n';
        return 0;
    }

    if (report->parsed()) {
        require_path(rp_in, "input");
        std::ifstream in(rp_in);
        nlohmann::json j;
        in >> j;
        std::cout << "mean accuracy: " << j.value("mean_accuracy", 0.0) << '\n'
                  << "sigma_acc:     " << j.value("sigma_accuracy", 0.0) << '\n'
                  << "mean kappa:    " << j.value("mean_kappa", 0.0) << '\n'
                  << "outer folds:   " << j.value("outer_folds_evaluated", 0) << '\n';
        if (j.contains("confusion")) {
            std::cout << "confusion (rows = true):\n";
            for (const auto& row : j["confusion"]) {
                for (const auto& v : row) std::cout << ' ' << v.get<long>();
                std::cout << '\n';
            }
        }
        return 0;
    }

    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const UserError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return 1;
    }
}
