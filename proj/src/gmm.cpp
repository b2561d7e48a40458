#include "wakecough/gmm.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "wakecough/rng.hpp"

namespace wakecough {

namespace {

// log N(x; m, diag v) for all frames and components, n x C
Eigen::MatrixXd log_densities(const DiagGmm& gmm, const Eigen::MatrixXd& frames) {
    const int C = gmm.num_components();
    const long n = frames.rows();
    const int D = static_cast<int>(frames.cols());
    Eigen::MatrixXd logp(n, C);
    for (int c = 0; c < C; ++c) {
        const Eigen::ArrayXd v = gmm.variances.row(c).transpose().array();
        const double log_const =
            -0.5 * (D * std::log(2.0 * M_PI) + v.log().sum());
        const Eigen::VectorXd vinv = (1.0 / v).matrix();
        Eigen::MatrixXd diff = frames.rowwise() - gmm.means.row(c);
        logp.col(c) = -0.5 * (diff.array().square().matrix() * vinv);
        logp.col(c).array() += log_const + std::log(gmm.weights(c));
    }
    return logp;
}

} // namespace

Eigen::MatrixXd kmeans_init(const Eigen::MatrixXd& frames, int num_components, uint64_t seed) {
    const long n = frames.rows();
    const int C = num_components;
    if (n < C) throw std::invalid_argument("kmeans_init: fewer frames than components");

    Rng rng(seed);
    Eigen::MatrixXd centers(C, frames.cols());
    centers.row(0) = frames.row(static_cast<long>(rng.index(static_cast<size_t>(n))));

    Eigen::VectorXd d2 = (frames.rowwise() - centers.row(0)).rowwise().squaredNorm();
    for (int c = 1; c < C; ++c) {
        const double total = d2.sum();
        long pick = 0;
        if (total > 0) {
            double r = rng.uniform() * total, acc = 0.0;
            for (long i = 0; i < n; ++i) {
                acc += d2(i);
                if (acc >= r) { pick = i; break; }
            }
        } else {
            pick = static_cast<long>(rng.index(static_cast<size_t>(n)));
        }
        centers.row(c) = frames.row(pick);
        d2 = d2.cwiseMin((frames.rowwise() - centers.row(c)).rowwise().squaredNorm());
    }

    std::vector<int> assign(static_cast<size_t>(n));
    for (int iter = 0; iter < 10; ++iter) {
        for (long i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::max();
            int arg = 0;
            for (int c = 0; c < C; ++c) {
                const double d = (frames.row(i) - centers.row(c)).squaredNorm();
                if (d < best) { best = d; arg = c; }
            }
            assign[static_cast<size_t>(i)] = arg;
        }
        Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(C, frames.cols());
        Eigen::VectorXd counts = Eigen::VectorXd::Zero(C);
        for (long i = 0; i < n; ++i) {
            sums.row(assign[static_cast<size_t>(i)]) += frames.row(i);
            counts(assign[static_cast<size_t>(i)]) += 1.0;
        }
        for (int c = 0; c < C; ++c)
            if (counts(c) > 0) centers.row(c) = sums.row(c) / counts(c);
    }
    return centers;
}

Eigen::MatrixXd responsibilities(const DiagGmm& gmm, const Eigen::MatrixXd& frames,
                                 Eigen::VectorXd* frame_ll) {
    Eigen::MatrixXd logp = log_densities(gmm, frames);
    Eigen::VectorXd mx = logp.rowwise().maxCoeff();
    Eigen::VectorXd lse =
        mx.array() + (logp.colwise() - mx).array().exp().rowwise().sum().log();
    if (frame_ll) *frame_ll = lse;
    return (logp.colwise() - lse).array().exp();
}

Eigen::VectorXd posteriors(const DiagGmm& gmm, const Eigen::VectorXd& frame) {
    if (frame.size() != gmm.dim()) throw std::invalid_argument("posteriors: dimension mismatch");
    Eigen::MatrixXd r = responsibilities(gmm, frame.transpose());
    return r.row(0).transpose();
}

EmResult em_fit(const Eigen::MatrixXd& frames, int num_components, uint64_t seed,
                const EmOptions& opts) {
    const long n = frames.rows();
    const int C = num_components;
    const int D = static_cast<int>(frames.cols());
    if (n < 10L * C) throw std::invalid_argument("em_fit: need at least 10 frames per component");
    if (!frames.allFinite()) throw std::invalid_argument("em_fit: non-finite input");

    const Eigen::RowVectorXd global_mean = frames.colwise().mean();
    Eigen::RowVectorXd global_var =
        (frames.rowwise() - global_mean).array().square().colwise().mean();
    const Eigen::RowVectorXd floor =
        (global_var * opts.variance_floor_factor).cwiseMax(1e-12);

    DiagGmm g;
    g.weights = Eigen::VectorXd::Constant(C, 1.0 / C);
    g.means = kmeans_init(frames, C, seed);
    g.variances = global_var.cwiseMax(floor).replicate(C, 1);

    EmResult result;
    double prev_ll = -std::numeric_limits<double>::max();
    for (int iter = 0; iter < opts.max_iters; ++iter) {
        Eigen::VectorXd frame_ll;
        Eigen::MatrixXd resp = responsibilities(g, frames, &frame_ll);
        const double ll = frame_ll.sum();
        result.log_likelihoods.push_back(ll);

        Eigen::VectorXd occ = resp.colwise().sum();
        Eigen::MatrixXd sum_x = resp.transpose() * frames;
        Eigen::MatrixXd sum_x2 = resp.transpose() * frames.array().square().matrix();
        for (int c = 0; c < C; ++c) {
            const double nc = std::max(occ(c), 1e-10);
            g.means.row(c) = sum_x.row(c) / nc;
            g.variances.row(c) =
                (sum_x2.row(c) / nc - g.means.row(c).array().square().matrix())
                    .cwiseMax(floor);
        }
        g.weights = (occ / static_cast<double>(n)).cwiseMax(opts.weight_floor);
        g.weights /= g.weights.sum();

        if (iter > 0 && ll - prev_ll < opts.rel_tol * std::abs(prev_ll)) break;
        prev_ll = ll;
    }
    result.gmm = std::move(g);
    return result;
}

void save_gmm(const std::string& path, const DiagGmm& gmm) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write gmm: " + path);
    const uint32_t c = static_cast<uint32_t>(gmm.num_components());
    const uint32_t d = static_cast<uint32_t>(gmm.dim());
    out.write("DGMM", 4);
    out.write(reinterpret_cast<const char*>(&c), 4);
    out.write(reinterpret_cast<const char*>(&d), 4);
    auto put = [&](const double* p, size_t count) {
        out.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(count * 8));
    };
    put(gmm.weights.data(), c);
    for (uint32_t i = 0; i < c; ++i) {
        Eigen::VectorXd row = gmm.means.row(i).transpose();
        put(row.data(), d);
    }
    for (uint32_t i = 0; i < c; ++i) {
        Eigen::VectorXd row = gmm.variances.row(i).transpose();
        put(row.data(), d);
    }
}

DiagGmm load_gmm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot open gmm: " + path);
    char magic[4];
    uint32_t c = 0, d = 0;
    in.read(magic, 4);
    in.read(reinterpret_cast<char*>(&c), 4);
    in.read(reinterpret_cast<char*>(&d), 4);
    if (!in || std::memcmp(magic, "DGMM", 4) != 0)
        throw std::invalid_argument("bad gmm file: " + path);
    DiagGmm g;
    g.weights.resize(c);
    g.means.resize(c, d);
    g.variances.resize(c, d);
    in.read(reinterpret_cast<char*>(g.weights.data()), c * 8);
    for (uint32_t i = 0; i < c; ++i) {
        Eigen::VectorXd row(d);
        in.read(reinterpret_cast<char*>(row.data()), d * 8);
        g.means.row(i) = row.transpose();
    }
    for (uint32_t i = 0; i < c; ++i) {
        Eigen::VectorXd row(d);
        in.read(reinterpret_cast<char*>(row.data()), d * 8);
        g.variances.row(i) = row.transpose();
    }
    if (!in) throw std::invalid_argument("truncated gmm file: " + path);
    return g;
}

} // namespace wakecough
