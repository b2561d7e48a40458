#include <Eigen/Dense>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "wakecough/dataset.hpp"
#include "wakecough/embeddings.hpp"
#include "wakecough/gmm.hpp"
#include "wakecough/ivector.hpp"
#include "wakecough/rng.hpp"

using namespace wakecough;
namespace fs = std::filesystem;

namespace {

std::string tmp_path(const std::string& name) {
    return (fs::temp_directory_path() / name).string();
}

Eigen::MatrixXd two_clusters(int n_per, double sep, uint64_t seed) {
    Rng rng(seed);
    Eigen::MatrixXd X(2 * n_per, 2);
    for (int i = 0; i < n_per; ++i) {
        X(i, 0) = -sep + 0.3 * rng.gaussian();
        X(i, 1) = 0.3 * rng.gaussian();
        X(n_per + i, 0) = sep + 0.3 * rng.gaussian();
        X(n_per + i, 1) = 0.3 * rng.gaussian();
    }
    return X;
}

} // namespace

TEST_CASE("kmeans_init: permutation, centroid recovery, determinism") {
    Eigen::MatrixXd X(3, 2);
    X << 1, 2, 5, 6, -3, 0;
    Eigen::MatrixXd M = kmeans_init(X, 3, 1);
    // means are a permutation of input rows
    for (int c = 0; c < 3; ++c) {
        bool found = false;
        for (int r = 0; r < 3; ++r)
            if ((M.row(c) - X.row(r)).norm() < 1e-12) found = true;
        CHECK(found);
    }

    Eigen::MatrixXd C2 = two_clusters(200, 4.0, 2);
    Eigen::MatrixXd M2 = kmeans_init(C2, 2, 3);
    // brute-force centroids: nearest-mean assignment then exact means
    Eigen::MatrixXd cent = Eigen::MatrixXd::Zero(2, 2);
    Eigen::Vector2d cnt = Eigen::Vector2d::Zero();
    for (int i = 0; i < C2.rows(); ++i) {
        const int c = (C2.row(i) - M2.row(0)).norm() < (C2.row(i) - M2.row(1)).norm() ? 0 : 1;
        cent.row(c) += C2.row(i);
        ++cnt(c);
    }
    cent.row(0) /= cnt(0);
    cent.row(1) /= cnt(1);
    CHECK((M2 - cent).cwiseAbs().maxCoeff() < 0.05);

    CHECK(kmeans_init(C2, 2, 3) == M2);
    CHECK_THROWS(kmeans_init(X, 4, 1));
}

TEST_CASE("em_fit: closed form C=1, recovery, monotone LL, determinism") {
    Rng rng(4);
    Eigen::MatrixXd X(500, 3);
    for (int i = 0; i < 500; ++i)
        for (int j = 0; j < 3; ++j) X(i, j) = 2.0 * rng.gaussian() + j;

    EmResult one = em_fit(X, 1, 7);
    CHECK(one.gmm.weights(0) == doctest::Approx(1.0).epsilon(1e-12));
    const Eigen::RowVectorXd mean = X.colwise().mean();
    CHECK((one.gmm.means.row(0) - mean).cwiseAbs().maxCoeff() < 1e-9);
    const Eigen::RowVectorXd var =
        (X.rowwise() - mean).array().square().colwise().mean();
    CHECK((one.gmm.variances.row(0) - var).cwiseAbs().maxCoeff() < 1e-9);

    // two Gaussians at +-5
    Eigen::MatrixXd G(1000, 1);
    Rng g(9);
    for (int i = 0; i < 1000; ++i)
        G(i, 0) = (i < 500 ? -5.0 : 5.0) + g.gaussian();
    EmResult two = em_fit(G, 2, 11);
    std::vector<double> ms{two.gmm.means(0, 0), two.gmm.means(1, 0)};
    std::sort(ms.begin(), ms.end());
    CHECK(ms[0] == doctest::Approx(-5.0).epsilon(0.04));
    CHECK(ms[1] == doctest::Approx(5.0).epsilon(0.04));

    for (size_t i = 1; i < two.log_likelihoods.size(); ++i)
        CHECK(two.log_likelihoods[i] >= two.log_likelihoods[i - 1] - 1e-8);

    EmResult again = em_fit(G, 2, 11);
    CHECK(again.gmm.means == two.gmm.means);

    CHECK_THROWS(em_fit(Eigen::MatrixXd::Random(15, 2), 2, 0)); // n < 10C
    Eigen::MatrixXd bad = Eigen::MatrixXd::Random(40, 2);
    bad(0, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS(em_fit(bad, 2, 0));
}

TEST_CASE("posteriors") {
    DiagGmm g;
    g.weights = Eigen::VectorXd::Constant(1, 1.0);
    g.means = Eigen::MatrixXd::Zero(1, 2);
    g.variances = Eigen::MatrixXd::Ones(1, 2);
    CHECK(posteriors(g, Eigen::Vector2d(0.3, -0.1))(0) == doctest::Approx(1.0));

    DiagGmm two;
    two.weights = Eigen::Vector2d(0.5, 0.5);
    two.means.resize(2, 1);
    two.means << -10.0, 10.0;
    two.variances = Eigen::MatrixXd::Ones(2, 1);
    Eigen::VectorXd at_mean(1);
    at_mean << -10.0;
    CHECK(posteriors(two, at_mean)(0) > 0.99);
    Eigen::VectorXd mid(1);
    mid << 0.0;
    Eigen::VectorXd p = posteriors(two, mid);
    CHECK(p(0) == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(p.sum() == doctest::Approx(1.0).epsilon(1e-12));

    // far-away frame stays finite
    Eigen::VectorXd far(1);
    far << 500.0;
    Eigen::VectorXd pf = posteriors(two, far);
    CHECK(std::isfinite(pf(0)));
    CHECK(pf.sum() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("gmm save/load round trip") {
    Eigen::MatrixXd X = two_clusters(100, 3.0, 6);
    DiagGmm g = em_fit(X, 2, 1).gmm;
    const std::string path = tmp_path("wc_gmm.bin");
    save_gmm(path, g);
    DiagGmm back = load_gmm(path);
    CHECK(back.weights == g.weights);
    CHECK(back.means == g.means);
    CHECK(back.variances == g.variances);
}

TEST_CASE("segment_utterances") {
    AudioClip c;
    c.sample_rate = 16000;
    c.samples.assign(32000, 0.1);
    CHECK(segment_utterances(c).size() == 20);

    AudioClip q;
    q.sample_rate = 16000;
    q.samples.assign(4000, 0.1);
    auto segs = segment_utterances(q);
    CHECK(segs.size() == 2);
    CHECK(segs[0].samples.size() == 1600);

    AudioClip tiny;
    tiny.sample_rate = 16000;
    tiny.samples.assign(100, 0.1);
    CHECK_THROWS(segment_utterances(tiny));
}

TEST_CASE("accumulate_stats") {
    DiagGmm two;
    two.weights = Eigen::Vector2d(0.5, 0.5);
    two.means.resize(2, 1);
    two.means << -10.0, 10.0;
    two.variances = Eigen::MatrixXd::Ones(2, 1);

    BaumWelchStats empty = accumulate_stats(two, Eigen::MatrixXd(0, 1));
    CHECK(empty.occupancy.cwiseAbs().maxCoeff() == 0.0);
    CHECK(empty.first_centered.cwiseAbs().maxCoeff() == 0.0);

    Eigen::MatrixXd one_frame(1, 1);
    one_frame << -10.0;
    BaumWelchStats s = accumulate_stats(two, one_frame);
    CHECK(s.occupancy(0) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(s.occupancy(1) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(std::abs(s.first_centered(0, 0)) < 1e-6);

    Rng rng(8);
    Eigen::MatrixXd many(37, 1);
    for (int i = 0; i < 37; ++i) many(i, 0) = 20.0 * rng.uniform() - 10.0;
    BaumWelchStats m = accumulate_stats(two, many);
    CHECK(m.occupancy.sum() == doctest::Approx(37.0).epsilon(1e-9));
}

namespace {

struct TvOracle {
    std::vector<BaumWelchStats> stats;
    Eigen::MatrixXd w_true; // n x R
    DiagGmm ubm;
};

TvOracle make_tv_oracle(int C, int D, int R, int n_utts, uint64_t seed) {
    TvOracle o;
    Rng rng(seed);
    o.ubm.weights = Eigen::VectorXd::Constant(C, 1.0 / C);
    o.ubm.means.resize(C, D);
    o.ubm.variances.resize(C, D);
    for (int c = 0; c < C; ++c)
        for (int d = 0; d < D; ++d) {
            o.ubm.means(c, d) = 3.0 * rng.gaussian();
            o.ubm.variances(c, d) = 0.5 + rng.uniform();
        }
    Eigen::MatrixXd T_true(C * D, R);
    for (long i = 0; i < T_true.size(); ++i)
        T_true.data()[i] = rng.gaussian();
    o.w_true.resize(n_utts, R);
    for (int u = 0; u < n_utts; ++u) {
        Eigen::VectorXd w(R);
        for (int r = 0; r < R; ++r) w(r) = rng.gaussian();
        o.w_true.row(u) = w;
        BaumWelchStats s;
        s.occupancy.resize(C);
        for (int c = 0; c < C; ++c) s.occupancy(c) = 500.0 + 500.0 * rng.uniform();
        s.first_centered.resize(C, D);
        const Eigen::VectorXd offset = T_true * w; // supervector offset
        for (int c = 0; c < C; ++c)
            s.first_centered.row(c) = s.occupancy(c) * offset.segment(c * D, D).transpose();
        o.stats.push_back(std::move(s));
    }
    return o;
}

double procrustes_mean_cosine(const Eigen::MatrixXd& estimated, const Eigen::MatrixXd& truth) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(estimated.transpose() * truth,
                                          Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::MatrixXd aligned = estimated * (svd.matrixU() * svd.matrixV().transpose());
    double total = 0.0;
    for (long i = 0; i < truth.rows(); ++i) {
        const double n = aligned.row(i).norm() * truth.row(i).norm();
        total += n > 0 ? aligned.row(i).dot(truth.row(i)) / n : 0.0;
    }
    return total / static_cast<double>(truth.rows());
}

} // namespace

TEST_CASE("train_tv: recovery oracle, monotone objective, determinism") {
    TvOracle o = make_tv_oracle(8, 4, 4, 60, 31);
    TvTrainResult r = train_tv(o.stats, o.ubm, 4, 10, 5);

    for (size_t i = 1; i < r.objective.size(); ++i) {
        const double scale = std::max({std::abs(r.objective[i - 1]), 1.0});
        CHECK(r.objective[i] >= r.objective[i - 1] - 1e-6 * scale);
    }

    Eigen::MatrixXd est(60, 4);
    for (int u = 0; u < 60; ++u)
        est.row(u) = extract_ivector(r.model, o.stats[static_cast<size_t>(u)]);
    CHECK(procrustes_mean_cosine(est, o.w_true) >= 0.9);

    TvTrainResult r2 = train_tv(o.stats, o.ubm, 4, 10, 5);
    CHECK(r2.model.t_matrix == r.model.t_matrix);

    CHECK_THROWS(train_tv({o.stats[0]}, o.ubm, 4, 5, 1));
}

TEST_CASE("train_tv: all-zero stats leave T at initialization") {
    TvOracle o = make_tv_oracle(4, 3, 2, 5, 1);
    std::vector<BaumWelchStats> zero = o.stats;
    for (auto& s : zero) {
        s.occupancy.setZero();
        s.first_centered.setZero();
    }
    TvTrainResult r = train_tv(zero, o.ubm, 2, 3, 17);
    // with zero stats the M-step has nothing to update; T keeps its seeded
    // init, which has scale 0.001
    CHECK(r.model.t_matrix.cwiseAbs().maxCoeff() < 0.01);
    CHECK(r.model.t_matrix.cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("extract_ivector: zero stats and linearity in f") {
    TvOracle o = make_tv_oracle(6, 3, 3, 10, 3);
    TvModel tv = train_tv(o.stats, o.ubm, 3, 5, 2).model;

    BaumWelchStats zero = o.stats[0];
    zero.first_centered.setZero();
    CHECK(extract_ivector(tv, zero).cwiseAbs().maxCoeff() < 1e-12);

    BaumWelchStats a = o.stats[0], b = o.stats[0];
    Rng rng(40);
    for (long i = 0; i < a.first_centered.size(); ++i) {
        a.first_centered.data()[i] = rng.gaussian();
        b.first_centered.data()[i] = rng.gaussian();
    }
    BaumWelchStats sum = a;
    sum.first_centered += b.first_centered;
    const Eigen::VectorXd lhs = extract_ivector(tv, sum);
    const Eigen::VectorXd rhs = extract_ivector(tv, a) + extract_ivector(tv, b);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("tv save/load round trip") {
    TvOracle o = make_tv_oracle(4, 2, 2, 8, 19);
    TvModel tv = train_tv(o.stats, o.ubm, 2, 3, 23).model;
    const std::string path = tmp_path("wc_tv.bin");
    save_tv(path, tv);
    TvModel back = load_tv(path);
    CHECK(back.t_matrix == tv.t_matrix);
    CHECK(back.ubm.means == tv.ubm.means);
}

TEST_CASE("build_cougher_matrix row contract") {
    const std::string dir = tmp_path("wc_cougher_fx");
    fs::remove_all(dir);
    FixtureSpec spec = default_fixture_spec(2, 5);
    spec.events_per_word = 1;
    FixtureResult fx = generate_synthetic_fixtures(spec, 77, dir);

    // small front end trained on everything (scale test, not leakage test)
    std::vector<Eigen::MatrixXd> frames;
    CougherTask task{2, 2.0, {}, 0};
    auto clips = build_cougher_task(fx.coughs, task);
    std::vector<BaumWelchStats> stats;
    Eigen::MatrixXd pool;
    {
        std::vector<Eigen::MatrixXd> mats;
        long total = 0;
        for (const auto& c : clips)
            for (const auto& seg : segment_utterances(c.clip)) {
                mats.push_back(mfcc(seg));
                total += mats.back().rows();
            }
        pool.resize(total, mats.front().cols());
        long row = 0;
        for (const auto& m : mats) {
            pool.middleRows(row, m.rows()) = m;
            row += m.rows();
        }
    }
    DiagGmm ubm = em_fit(pool, 4, 3).gmm;
    for (const auto& c : clips)
        for (const auto& seg : segment_utterances(c.clip))
            stats.push_back(accumulate_stats(ubm, mfcc(seg)));
    TvModel tv = train_tv(stats, ubm, 5, 3, 3).model;

    Eigen::MatrixXd M = build_cougher_matrix(fx.coughs, clips[0].subject, 2.0, ubm, tv);
    CHECK(M.rows() == 20);
    CHECK(M.cols() == 5);
    CHECK(M.allFinite());

    CHECK_THROWS(build_cougher_matrix(fx.coughs, clips[0].subject, 100.0, ubm, tv));
    fs::remove_all(dir);
}

TEST_CASE("embeddings import: validation, warnings, round trip, labeling") {
    const std::string path = tmp_path("wc_emb.csv");
    {
        std::ofstream f(path);
        f << "subject_id,segment_index";
        for (int j = 0; j < 256; ++j) f << ",e" << j;
        f << "\n";
        Rng rng(55);
        // subject a: 40 rows (t = 20 s at 0.5 s per row), subject b: 7 rows
        // (no integer duration -> warning)
        auto emit = [&](const std::string& s, int n, int base) {
            for (int i = 0; i < n; ++i) {
                f << s << ',' << base + i;
                for (int j = 0; j < 256; ++j) f << ',' << rng.gaussian();
                f << '\n';
            }
        };
        emit("a", 40, 0);
        emit("b", 7, 0);
    }
    EmbeddingSet set = import_embeddings(path, EmbeddingKind::DVector);
    CHECK(set.rows.rows() == 47);
    CHECK(set.rows.cols() == 256);
    REQUIRE(set.warnings.size() == 1);
    CHECK(set.warnings[0].find("subject b") != std::string::npos);

    CHECK_THROWS(import_embeddings(path, EmbeddingKind::XVector)); // 256 != 512

    const std::string rt = tmp_path("wc_emb_rt.csv");
    export_embeddings(rt, set);
    EmbeddingSet back = import_embeddings(rt, EmbeddingKind::DVector);
    CHECK(back.rows == set.rows); // lossless at 17 significant digits
    CHECK(back.subjects == set.subjects);

    LabeledSet ls = to_labeled_set(set, {"b", "a"});
    CHECK(ls.X.rows() == 47);
    CHECK(ls.num_classes == 2);
    // sorted subject order: a -> 0, b -> 1
    CHECK(ls.y.front() == 0);
    CHECK(ls.y.back() == 1);
    LabeledSet only_a = to_labeled_set(set, {"a"});
    CHECK(only_a.X.rows() == 40);
    CHECK_THROWS(to_labeled_set(set, {"missing"}));

    // duplicate (subject, segment)
    const std::string dup = tmp_path("wc_emb_dup.csv");
    {
        std::ofstream f(dup);
        f << "subject_id,segment_index";
        for (int j = 0; j < 256; ++j) f << ",e" << j;
        f << "\n";
        for (int r = 0; r < 2; ++r) {
            f << "a,0";
            for (int j = 0; j < 256; ++j) f << ",0.0";
            f << '\n';
        }
    }
    CHECK_THROWS(import_embeddings(dup, EmbeddingKind::DVector));

    // non-numeric field
    const std::string badnum = tmp_path("wc_emb_bad.csv");
    {
        std::ofstream f(badnum);
        f << "subject_id,segment_index";
        for (int j = 0; j < 256; ++j) f << ",e" << j;
        f << "\na,0";
        for (int j = 0; j < 255; ++j) f << ",0.0";
        f << ",oops\n";
    }
    CHECK_THROWS(import_embeddings(badnum, EmbeddingKind::DVector));

    CHECK(parse_embedding_kind("xvector") == EmbeddingKind::XVector);
    CHECK_THROWS(parse_embedding_kind("zvector"));
    CHECK(embedding_dim(EmbeddingKind::IVector) == 100);
    CHECK(embedding_dim(EmbeddingKind::XVector) == 512);
}
