#include "wakecough/ivector.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "wakecough/rng.hpp"
#include "wakecough/wav.hpp"

namespace wakecough {

std::vector<AudioClip> segment_utterances(const AudioClip& clip, double seg_sec) {
    const size_t seg_len = static_cast<size_t>(std::llround(seg_sec * clip.sample_rate));
    if (seg_len == 0 || clip.samples.size() < seg_len)
        throw std::invalid_argument("segment_utterances: clip shorter than one segment");
    const size_t count = clip.samples.size() / seg_len;
    std::vector<AudioClip> segs;
    segs.reserve(count);
    for (size_t i = 0; i < count; ++i) {
        AudioClip s;
        s.sample_rate = clip.sample_rate;
        s.samples.assign(clip.samples.begin() + static_cast<long>(i * seg_len),
                         clip.samples.begin() + static_cast<long>((i + 1) * seg_len));
        segs.push_back(std::move(s));
    }
    return segs;
}

BaumWelchStats accumulate_stats(const DiagGmm& gmm, const Eigen::MatrixXd& frames) {
    const int C = gmm.num_components();
    const int D = gmm.dim();
    BaumWelchStats st;
    st.occupancy = Eigen::VectorXd::Zero(C);
    st.first_centered = Eigen::MatrixXd::Zero(C, D);
    if (frames.rows() == 0) return st;
    if (frames.cols() != D) throw std::invalid_argument("accumulate_stats: dimension mismatch");

    Eigen::MatrixXd gamma = responsibilities(gmm, frames); // n x C
    st.occupancy = gamma.colwise().sum();
    st.first_centered = gamma.transpose() * frames;
    st.first_centered -= st.occupancy.asDiagonal() * gmm.means;
    return st;
}

namespace {

// Per-utterance posterior given precomputed per-component G_c = T_c' S_c^-1 T_c.
struct Posterior {
    Eigen::VectorXd mean;    // R
    Eigen::MatrixXd cov;     // R x R, L^-1
    double mean_dot_b;       // w' T' S^-1 f
    double logdet_l;
};

Posterior utterance_posterior(const TvModel& tv, const std::vector<Eigen::MatrixXd>& gram,
                              const BaumWelchStats& st) {
    const int C = tv.ubm.num_components();
    const int D = tv.ubm.dim();
    const int R = tv.rank();

    Eigen::MatrixXd l = Eigen::MatrixXd::Identity(R, R);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(R);
    for (int c = 0; c < C; ++c) {
        l.noalias() += st.occupancy(c) * gram[static_cast<size_t>(c)];
        const Eigen::VectorXd fc =
            st.first_centered.row(c).transpose().cwiseQuotient(tv.ubm.variances.row(c).transpose());
        b.noalias() += tv.t_matrix.middleRows(static_cast<long>(c) * D, D).transpose() * fc;
    }

    Eigen::LLT<Eigen::MatrixXd> llt(l);
    if (llt.info() != Eigen::Success) {
        l.diagonal().array() += 1e-10;
        llt.compute(l);
        if (llt.info() != Eigen::Success)
            throw std::runtime_error("ivector: posterior precision not positive definite");
    }

    Posterior p;
    p.mean = llt.solve(b);
    p.cov = llt.solve(Eigen::MatrixXd::Identity(R, R));
    p.mean_dot_b = p.mean.dot(b);
    p.logdet_l = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    return p;
}

std::vector<Eigen::MatrixXd> component_grams(const TvModel& tv) {
    const int C = tv.ubm.num_components();
    const int D = tv.ubm.dim();
    std::vector<Eigen::MatrixXd> gram(static_cast<size_t>(C));
    for (int c = 0; c < C; ++c) {
        const Eigen::MatrixXd tc = tv.t_matrix.middleRows(static_cast<long>(c) * D, D);
        const Eigen::VectorXd vinv = tv.ubm.variances.row(c).transpose().cwiseInverse();
        gram[static_cast<size_t>(c)] = tc.transpose() * vinv.asDiagonal() * tc;
    }
    return gram;
}

} // namespace

TvTrainResult train_tv(const std::vector<BaumWelchStats>& stats, const DiagGmm& ubm,
                       int rank, int iters, uint64_t seed) {
    if (stats.size() < 2) throw std::invalid_argument("train_tv: need at least 2 utterances");
    const int C = ubm.num_components();
    const int D = ubm.dim();
    const int R = rank;

    TvTrainResult result;
    result.model.ubm = ubm;
    Rng rng(seed);
    Eigen::MatrixXd& T = result.model.t_matrix;
    T.resize(static_cast<long>(C) * D, R);
    for (long i = 0; i < T.rows(); ++i)
        for (int j = 0; j < R; ++j) T(i, j) = 0.001 * rng.gaussian();

    for (int iter = 0; iter < iters; ++iter) {
        const auto gram = component_grams(result.model);

        std::vector<Eigen::MatrixXd> a(static_cast<size_t>(C),
                                       Eigen::MatrixXd::Zero(R, R)); // sum N_c E[ww']
        std::vector<Eigen::MatrixXd> bmat(static_cast<size_t>(C),
                                          Eigen::MatrixXd::Zero(R, D)); // sum E[w] f_c'
        double objective = 0.0;
        for (const auto& st : stats) {
            Posterior p = utterance_posterior(result.model, gram, st);
            const Eigen::MatrixXd second = p.cov + p.mean * p.mean.transpose();
            for (int c = 0; c < C; ++c) {
                a[static_cast<size_t>(c)].noalias() += st.occupancy(c) * second;
                bmat[static_cast<size_t>(c)].noalias() += p.mean * st.first_centered.row(c);
            }
            objective += p.mean_dot_b - p.logdet_l;
        }
        result.objective.push_back(0.5 * objective);

        for (int c = 0; c < C; ++c) {
            Eigen::MatrixXd& ac = a[static_cast<size_t>(c)];
            // all-zero stats for this component: leave its rows as-is
            if (ac.norm() == 0.0 && bmat[static_cast<size_t>(c)].norm() == 0.0) continue;
            Eigen::LLT<Eigen::MatrixXd> llt(ac);
            if (llt.info() != Eigen::Success) {
                ac.diagonal().array() += 1e-10;
                llt.compute(ac);
            }
            if (llt.info() != Eigen::Success)
                throw std::runtime_error("train_tv: singular M-step system after jitter");
            // solve (sum N E[ww']) T_c' = sum E[w] f_c'
            const Eigen::MatrixXd tct = llt.solve(bmat[static_cast<size_t>(c)]); // R x D
            T.middleRows(static_cast<long>(c) * D, D) = tct.transpose();
        }
    }
    return result;
}

Eigen::VectorXd extract_ivector(const TvModel& tv, const BaumWelchStats& stats) {
    if (stats.occupancy.size() != tv.ubm.num_components() ||
        stats.first_centered.cols() != tv.ubm.dim())
        throw std::invalid_argument("extract_ivector: dimension mismatch");
    const auto gram = component_grams(tv);
    return utterance_posterior(tv, gram, stats).mean;
}

Eigen::MatrixXd build_cougher_matrix(const DatasetManifest& manifest, const std::string& cougher,
                                     double t_sec, const DiagGmm& gmm, const TvModel& tv,
                                     const MfccConfig& mfcc_config) {
    std::vector<AudioClip> parts;
    for (const auto& e : manifest.entries)
        if (e.subject == cougher) parts.push_back([&] {
            AudioClip c = read_wav(e.path);
            return c.sample_rate == 16000 ? c : resample(c, 16000);
        }());
    if (parts.empty())
        throw std::invalid_argument("build_cougher_matrix: unknown cougher " + cougher);
    AudioClip all = concatenate(parts);
    if (all.duration_sec() < t_sec)
        throw std::invalid_argument("build_cougher_matrix: insufficient audio for cougher " +
                                    cougher);
    const auto segs = segment_utterances(normalize_duration(all, t_sec), 0.1);
    Eigen::MatrixXd out(static_cast<long>(segs.size()), tv.rank());
    for (size_t i = 0; i < segs.size(); ++i) {
        const Eigen::MatrixXd frames = mfcc(segs[i], mfcc_config);
        out.row(static_cast<long>(i)) =
            extract_ivector(tv, accumulate_stats(gmm, frames)).transpose();
    }
    return out;
}

void save_tv(const std::string& path, const TvModel& tv) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write tv model: " + path);
    const uint32_t c = static_cast<uint32_t>(tv.ubm.num_components());
    const uint32_t d = static_cast<uint32_t>(tv.ubm.dim());
    const uint32_t r = static_cast<uint32_t>(tv.rank());
    out.write("TVMX", 4);
    out.write(reinterpret_cast<const char*>(&c), 4);
    out.write(reinterpret_cast<const char*>(&d), 4);
    out.write(reinterpret_cast<const char*>(&r), 4);
    for (long i = 0; i < tv.t_matrix.rows(); ++i)
        for (uint32_t j = 0; j < r; ++j) {
            double v = tv.t_matrix(i, j);
            out.write(reinterpret_cast<const char*>(&v), 8);
        }
    out.close();
    save_gmm(path + ".ubm", tv.ubm);
}

TvModel load_tv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot open tv model: " + path);
    char magic[4];
    uint32_t c = 0, d = 0, r = 0;
    in.read(magic, 4);
    in.read(reinterpret_cast<char*>(&c), 4);
    in.read(reinterpret_cast<char*>(&d), 4);
    in.read(reinterpret_cast<char*>(&r), 4);
    if (!in || std::memcmp(magic, "TVMX", 4) != 0)
        throw std::invalid_argument("bad tv model file: " + path);
    TvModel tv;
    tv.t_matrix.resize(static_cast<long>(c) * d, r);
    for (long i = 0; i < tv.t_matrix.rows(); ++i)
        for (uint32_t j = 0; j < r; ++j) {
            double v;
            in.read(reinterpret_cast<char*>(&v), 8);
            tv.t_matrix(i, j) = v;
        }
    if (!in) throw std::invalid_argument("truncated tv model file: " + path);
    tv.ubm = load_gmm(path + ".ubm");
    return tv;
}

void export_ivectors_csv(const std::string& path, const std::vector<IVector>& ivectors) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write csv: " + path);
    out.precision(17);
    out << "utterance_id,cougher_id";
    if (!ivectors.empty())
        for (long j = 0; j < ivectors.front().w.size(); ++j) out << ",w" << j;
    out << '\n';
    for (const auto& iv : ivectors) {
        out << iv.utterance_id << ',' << iv.cougher_id;
        for (long j = 0; j < iv.w.size(); ++j) out << ',' << iv.w(j);
        out << '\n';
    }
}

} // namespace wakecough
