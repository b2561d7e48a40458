#include "wakecough/cnn.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "wakecough/rng.hpp"

namespace wakecough {

namespace {

// Fixed topology: conv(k,F) -> relu -> 2x2 maxpool -> dropout ->
// conv(k,F) -> relu -> 2x2 maxpool -> flatten -> dense -> relu ->
// dense(K) -> softmax. Activations are stored as (spatial x channels)
// matrices; convolutions run as im2col GEMMs.
template <typename S>
struct Net {
    using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
    using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

    int H0 = 0, W0 = 0, k = 0, F = 0, dense = 0, K = 0;
    int H1 = 0, W1 = 0, H1p = 0, W1p = 0, H2 = 0, W2 = 0, H2p = 0, W2p = 0, flat = 0;
    long off_k1 = 0, off_b1 = 0, off_k2 = 0, off_b2 = 0, off_wd = 0, off_bd = 0, off_wo = 0,
         off_bo = 0, n_params = 0;

    Vec params;

    void set_dims(int rows, int cols, int kernel, int filters, int dense_size, int classes) {
        H0 = rows; W0 = cols; k = kernel; F = filters; dense = dense_size; K = classes;
        H1 = H0 - k + 1; W1 = W0 - k + 1;
        H1p = H1 / 2; W1p = W1 / 2;
        H2 = H1p - k + 1; W2 = W1p - k + 1;
        H2p = H2 / 2; W2p = W2 / 2;
        flat = H2p * W2p * F;
        if (H1 < 1 || W1 < 1 || H1p < 1 || W1p < 1 || H2 < 1 || W2 < 1 || H2p < 1 || W2p < 1)
            throw std::invalid_argument("cnn: input too small for the topology");

        off_k1 = 0;
        off_b1 = off_k1 + static_cast<long>(F) * k * k;
        off_k2 = off_b1 + F;
        off_b2 = off_k2 + static_cast<long>(F) * k * k * F;
        off_wd = off_b2 + F;
        off_bd = off_wd + static_cast<long>(dense) * flat;
        off_wo = off_bd + dense;
        off_bo = off_wo + static_cast<long>(K) * dense;
        n_params = off_bo + K;
    }

    auto k1(Vec& p) const { return Eigen::Map<Mat>(p.data() + off_k1, F, k * k); }
    auto b1(Vec& p) const { return Eigen::Map<Vec>(p.data() + off_b1, F); }
    auto k2(Vec& p) const { return Eigen::Map<Mat>(p.data() + off_k2, F, k * k * F); }
    auto b2(Vec& p) const { return Eigen::Map<Vec>(p.data() + off_b2, F); }
    auto wd(Vec& p) const { return Eigen::Map<Mat>(p.data() + off_wd, dense, flat); }
    auto bd(Vec& p) const { return Eigen::Map<Vec>(p.data() + off_bd, dense); }
    auto wo(Vec& p) const { return Eigen::Map<Mat>(p.data() + off_wo, K, dense); }
    auto bo(Vec& p) const { return Eigen::Map<Vec>(p.data() + off_bo, K); }
    auto ck1(const Vec& p) const { return Eigen::Map<const Mat>(p.data() + off_k1, F, k * k); }
    auto cb1(const Vec& p) const { return Eigen::Map<const Vec>(p.data() + off_b1, F); }
    auto ck2(const Vec& p) const { return Eigen::Map<const Mat>(p.data() + off_k2, F, k * k * F); }
    auto cb2(const Vec& p) const { return Eigen::Map<const Vec>(p.data() + off_b2, F); }
    auto cwd(const Vec& p) const { return Eigen::Map<const Mat>(p.data() + off_wd, dense, flat); }
    auto cbd(const Vec& p) const { return Eigen::Map<const Vec>(p.data() + off_bd, dense); }
    auto cwo(const Vec& p) const { return Eigen::Map<const Mat>(p.data() + off_wo, K, dense); }
    auto cbo(const Vec& p) const { return Eigen::Map<const Vec>(p.data() + off_bo, K); }

    void init(uint64_t seed) {
        params.setZero(n_params);
        Rng rng(seed);
        auto he = [&](long off, long count, double fan_in) {
            const double s = std::sqrt(2.0 / fan_in);
            for (long i = 0; i < count; ++i)
                params(off + i) = static_cast<S>(s * rng.gaussian());
        };
        he(off_k1, static_cast<long>(F) * k * k, k * k);
        he(off_k2, static_cast<long>(F) * k * k * F, static_cast<double>(k) * k * F);
        he(off_wd, static_cast<long>(dense) * flat, flat);
        he(off_wo, static_cast<long>(K) * dense, dense);
    }

    struct Workspace {
        Mat cols1, y1, a1p, drop_mask, cols2, y2, a2p;
        Vec flat_v, zd, ad, zo, prob;
        std::vector<int> arg1, arg2;
        Mat d_y2, d_cols2, d_a1p, d_y1;
        Vec d_flat, d_zd, d_zo;
    };

    void build_cols1(const Mat& x, Mat& cols) const {
        cols.resize(static_cast<long>(H1) * W1, k * k);
        for (int di = 0; di < k; ++di)
            for (int dj = 0; dj < k; ++dj) {
                const int t = di * k + dj;
                for (int i = 0; i < H1; ++i)
                    cols.col(t).segment(static_cast<long>(i) * W1, W1) =
                        x.row(i + di).segment(dj, W1).transpose();
            }
    }

    void build_cols2(const Mat& a, Mat& cols) const {
        cols.resize(static_cast<long>(H2) * W2, static_cast<long>(k) * k * F);
        for (int di = 0; di < k; ++di)
            for (int dj = 0; dj < k; ++dj) {
                const int t = di * k + dj;
                for (int i = 0; i < H2; ++i)
                    cols.block(static_cast<long>(i) * W2, static_cast<long>(t) * F, W2, F) =
                        a.middleRows(static_cast<long>(i + di) * W1p + dj, W2);
            }
    }

    void scatter_cols2(const Mat& d_cols, Mat& d_a) const {
        d_a.setZero(static_cast<long>(H1p) * W1p, F);
        for (int di = 0; di < k; ++di)
            for (int dj = 0; dj < k; ++dj) {
                const int t = di * k + dj;
                for (int i = 0; i < H2; ++i)
                    d_a.middleRows(static_cast<long>(i + di) * W1p + dj, W2) +=
                        d_cols.block(static_cast<long>(i) * W2, static_cast<long>(t) * F, W2, F);
            }
    }

    static void maxpool(const Mat& in, int h, int w, Mat& out, std::vector<int>& argmax) {
        const int hp = h / 2, wp = w / 2;
        const long channels = in.cols();
        out.resize(static_cast<long>(hp) * wp, channels);
        argmax.assign(static_cast<size_t>(out.size()), 0);
        for (long c = 0; c < channels; ++c)
            for (int i = 0; i < hp; ++i)
                for (int j = 0; j < wp; ++j) {
                    S best = in(static_cast<long>(2 * i) * w + 2 * j, c);
                    long arg = static_cast<long>(2 * i) * w + 2 * j;
                    for (int a = 0; a < 2; ++a)
                        for (int b = 0; b < 2; ++b) {
                            const long r = static_cast<long>(2 * i + a) * w + 2 * j + b;
                            if (in(r, c) > best) { best = in(r, c); arg = r; }
                        }
                    const long o = static_cast<long>(i) * wp + j;
                    out(o, c) = best;
                    argmax[static_cast<size_t>(c * out.rows() + o)] = static_cast<int>(arg);
                }
    }

    // Forward pass; training mode applies the dropout mask in ws.drop_mask.
    void forward(const Vec& p, const Mat& x, Workspace& ws, bool train_mode) const {
        build_cols1(x, ws.cols1);
        ws.y1.noalias() = ws.cols1 * ck1(p).transpose();
        ws.y1.rowwise() += cb1(p).transpose();
        ws.y1 = ws.y1.cwiseMax(S(0));
        maxpool(ws.y1, H1, W1, ws.a1p, ws.arg1);
        if (train_mode) ws.a1p.array() *= ws.drop_mask.array();
        build_cols2(ws.a1p, ws.cols2);
        ws.y2.noalias() = ws.cols2 * ck2(p).transpose();
        ws.y2.rowwise() += cb2(p).transpose();
        ws.y2 = ws.y2.cwiseMax(S(0));
        maxpool(ws.y2, H2, W2, ws.a2p, ws.arg2);
        ws.flat_v = Eigen::Map<const Vec>(ws.a2p.data(), flat);
        ws.zd.noalias() = cwd(p) * ws.flat_v + cbd(p);
        ws.ad = ws.zd.cwiseMax(S(0));
        ws.zo.noalias() = cwo(p) * ws.ad + cbo(p);
        const S mx = ws.zo.maxCoeff();
        ws.prob = (ws.zo.array() - mx).exp();
        ws.prob /= ws.prob.sum();
    }

    // Backward pass for one sample; accumulates into the gradient vector.
    // Returns the sample cross-entropy.
    S backward(const Vec& p, const Mat& /*x*/, int label, Workspace& ws, Vec& grad,
               bool train_mode) const {
        const S loss = -std::log(std::max(ws.prob(label), S(1e-30)));

        ws.d_zo = ws.prob;
        ws.d_zo(label) -= S(1);
        wo(grad).noalias() += ws.d_zo * ws.ad.transpose();
        bo(grad) += ws.d_zo;
        ws.d_zd.noalias() = cwo(p).transpose() * ws.d_zo;
        ws.d_zd.array() *= (ws.zd.array() > S(0)).template cast<S>();
        wd(grad).noalias() += ws.d_zd * ws.flat_v.transpose();
        bd(grad) += ws.d_zd;
        ws.d_flat.noalias() = cwd(p).transpose() * ws.d_zd;

        // unpool2 + relu'
        ws.d_y2.setZero(static_cast<long>(H2) * W2, F);
        Eigen::Map<const Mat> d_a2p(ws.d_flat.data(), static_cast<long>(H2p) * W2p, F);
        for (long c = 0; c < F; ++c)
            for (long o = 0; o < d_a2p.rows(); ++o)
                ws.d_y2(ws.arg2[static_cast<size_t>(c * d_a2p.rows() + o)], c) += d_a2p(o, c);
        ws.d_y2.array() *= (ws.y2.array() > S(0)).template cast<S>();

        k2(grad).noalias() += ws.d_y2.transpose() * ws.cols2;
        b2(grad) += ws.d_y2.colwise().sum().transpose();
        ws.d_cols2.noalias() = ws.d_y2 * ck2(p);
        scatter_cols2(ws.d_cols2, ws.d_a1p);
        if (train_mode) ws.d_a1p.array() *= ws.drop_mask.array();

        // unpool1 + relu'
        ws.d_y1.setZero(static_cast<long>(H1) * W1, F);
        for (long c = 0; c < F; ++c)
            for (long o = 0; o < ws.d_a1p.rows(); ++o)
                ws.d_y1(ws.arg1[static_cast<size_t>(c * ws.d_a1p.rows() + o)], c) +=
                    ws.d_a1p(o, c);
        ws.d_y1.array() *= (ws.y1.array() > S(0)).template cast<S>();

        k1(grad).noalias() += ws.d_y1.transpose() * ws.cols1;
        b1(grad) += ws.d_y1.colwise().sum().transpose();
        return loss;
    }
};

} // namespace

struct CnnModel::Impl {
    Net<float> net;
    Eigen::MatrixXf norm_mean;
    Eigen::MatrixXf norm_std;
};

CnnModel CnnModel::train(const std::vector<FeatureMap>& maps, const std::vector<int>& labels,
                         int num_classes, const CnnConfig& config,
                         std::vector<CnnEpochStats>* log) {
    if (maps.empty()) throw std::invalid_argument("cnn: empty training set");
    if (maps.size() != labels.size()) throw std::invalid_argument("cnn: label count mismatch");
    if (num_classes < 2) throw std::invalid_argument("cnn: need at least 2 classes");
    const long H = maps.front().values.rows();
    const long W = maps.front().values.cols();
    for (const auto& m : maps)
        if (m.values.rows() != H || m.values.cols() != W)
            throw std::invalid_argument("cnn: inconsistent feature map shapes");
    std::vector<long> class_counts(static_cast<size_t>(num_classes), 0);
    for (int y : labels) {
        if (y < 0 || y >= num_classes) throw std::invalid_argument("cnn: label out of range");
        ++class_counts[static_cast<size_t>(y)];
    }
    for (long c : class_counts)
        if (c == 0) throw std::invalid_argument("cnn: empty class");

    auto impl = std::make_shared<Impl>();
    impl->norm_mean = Eigen::MatrixXf::Zero(H, W);
    for (const auto& m : maps) impl->norm_mean += m.values;
    impl->norm_mean /= static_cast<float>(maps.size());
    impl->norm_std = Eigen::MatrixXf::Zero(H, W);
    for (const auto& m : maps)
        impl->norm_std.array() += (m.values - impl->norm_mean).array().square();
    impl->norm_std = (impl->norm_std / static_cast<float>(maps.size())).cwiseSqrt();
    impl->norm_std = impl->norm_std.unaryExpr([](float v) { return v < 1e-6f ? 1.0f : v; });

    std::vector<Eigen::MatrixXf> normed(maps.size());
    for (size_t i = 0; i < maps.size(); ++i)
        normed[i] = (maps[i].values - impl->norm_mean).array() / impl->norm_std.array();

    Net<float>& net = impl->net;
    net.set_dims(static_cast<int>(H), static_cast<int>(W), config.kernel_size,
                 config.num_filters, config.dense_size, num_classes);
    net.init(Rng::derive(config.seed, 1));

    Eigen::VectorXf grad = Eigen::VectorXf::Zero(net.n_params);
    Eigen::VectorXf m_adam = Eigen::VectorXf::Zero(net.n_params);
    Eigen::VectorXf v_adam = Eigen::VectorXf::Zero(net.n_params);
    const float beta1 = 0.9f, beta2 = 0.999f, eps = 1e-8f;
    long step = 0;

    Net<float>::Workspace ws;
    Rng shuffle_rng(Rng::derive(config.seed, 2));
    Rng drop_rng(Rng::derive(config.seed, 3));
    const float keep = 1.0f - static_cast<float>(config.dropout);

    std::vector<int> order(maps.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double epoch_loss = 0.0;
        long correct = 0;
        for (size_t start = 0; start < order.size();
             start += static_cast<size_t>(config.batch_size)) {
            const size_t end =
                std::min(order.size(), start + static_cast<size_t>(config.batch_size));
            grad.setZero();
            for (size_t s = start; s < end; ++s) {
                const int idx = order[s];
                ws.drop_mask.resize(static_cast<long>(net.H1p) * net.W1p, net.F);
                for (long c = 0; c < ws.drop_mask.cols(); ++c)
                    for (long r = 0; r < ws.drop_mask.rows(); ++r)
                        ws.drop_mask(r, c) =
                            drop_rng.uniform() < keep ? 1.0f / keep : 0.0f;
                net.forward(net.params, normed[static_cast<size_t>(idx)], ws, true);
                long arg = 0;
                ws.prob.maxCoeff(&arg);
                if (static_cast<int>(arg) == labels[static_cast<size_t>(idx)]) ++correct;
                epoch_loss += net.backward(net.params, normed[static_cast<size_t>(idx)],
                                           labels[static_cast<size_t>(idx)], ws, grad, true);
            }
            grad /= static_cast<float>(end - start);

            ++step;
            m_adam = beta1 * m_adam + (1.0f - beta1) * grad;
            v_adam = beta2 * v_adam.array() + (1.0f - beta2) * grad.array().square();
            const float bc1 = 1.0f - std::pow(beta1, static_cast<float>(step));
            const float bc2 = 1.0f - std::pow(beta2, static_cast<float>(step));
            net.params.array() -= static_cast<float>(config.lr) * (m_adam.array() / bc1) /
                                  ((v_adam.array() / bc2).sqrt() + eps);
        }
        if (log)
            log->push_back({epoch, epoch_loss / static_cast<double>(maps.size()),
                            static_cast<double>(correct) / static_cast<double>(maps.size())});
    }

    CnnModel model;
    model.impl_ = impl;
    model.config_ = config;
    model.num_classes_ = num_classes;
    return model;
}

Eigen::VectorXf CnnModel::predict(const FeatureMap& map) const {
    if (!impl_) throw std::logic_error("cnn: model not trained");
    const Impl& im = *impl_;
    if (map.values.rows() != im.norm_mean.rows() || map.values.cols() != im.norm_mean.cols())
        throw std::invalid_argument("cnn: feature map shape mismatch");
    Eigen::MatrixXf x = (map.values - im.norm_mean).array() / im.norm_std.array();
    Net<float>::Workspace ws;
    im.net.forward(im.net.params, x, ws, false);
    return ws.prob;
}

std::vector<int> CnnModel::predict_labels(const std::vector<FeatureMap>& maps) const {
    std::vector<int> out(maps.size());
    for (size_t i = 0; i < maps.size(); ++i) {
        long arg = 0;
        predict(maps[i]).maxCoeff(&arg);
        out[i] = static_cast<int>(arg);
    }
    return out;
}

void CnnModel::save(const std::string& path) const {
    if (!impl_) throw std::logic_error("cnn: model not trained");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write cnn model: " + path);
    auto u32 = [&](uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); };
    auto f64 = [&](double v) { out.write(reinterpret_cast<const char*>(&v), 8); };
    out.write("WCNN", 4);
    u32(1);
    u32(static_cast<uint32_t>(impl_->net.H0));
    u32(static_cast<uint32_t>(impl_->net.W0));
    u32(static_cast<uint32_t>(config_.num_filters));
    u32(static_cast<uint32_t>(config_.kernel_size));
    u32(static_cast<uint32_t>(config_.dense_size));
    u32(static_cast<uint32_t>(num_classes_));
    f64(config_.dropout);
    const auto put_floats = [&](const float* p, long n) {
        out.write(reinterpret_cast<const char*>(p), n * 4);
    };
    put_floats(impl_->norm_mean.data(), impl_->norm_mean.size());
    put_floats(impl_->norm_std.data(), impl_->norm_std.size());
    put_floats(impl_->net.params.data(), impl_->net.params.size());
}

CnnModel CnnModel::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot open cnn model: " + path);
    char magic[4];
    in.read(magic, 4);
    uint32_t version, h, w, filters, kernel, dense, classes;
    double dropout;
    auto u32 = [&](uint32_t& v) { in.read(reinterpret_cast<char*>(&v), 4); };
    u32(version);
    u32(h); u32(w); u32(filters); u32(kernel); u32(dense); u32(classes);
    in.read(reinterpret_cast<char*>(&dropout), 8);
    if (!in || std::memcmp(magic, "WCNN", 4) != 0 || version != 1)
        throw std::invalid_argument("bad cnn model file: " + path);

    auto impl = std::make_shared<Impl>();
    impl->norm_mean.resize(h, w);
    impl->norm_std.resize(h, w);
    impl->net.set_dims(static_cast<int>(h), static_cast<int>(w), static_cast<int>(kernel),
                       static_cast<int>(filters), static_cast<int>(dense),
                       static_cast<int>(classes));
    impl->net.params.resize(impl->net.n_params);
    in.read(reinterpret_cast<char*>(impl->norm_mean.data()), impl->norm_mean.size() * 4);
    in.read(reinterpret_cast<char*>(impl->norm_std.data()), impl->norm_std.size() * 4);
    in.read(reinterpret_cast<char*>(impl->net.params.data()), impl->net.params.size() * 4);
    if (!in) throw std::invalid_argument("truncated cnn model file: " + path);

    CnnModel model;
    model.impl_ = impl;
    model.config_.num_filters = static_cast<int>(filters);
    model.config_.kernel_size = static_cast<int>(kernel);
    model.config_.dense_size = static_cast<int>(dense);
    model.config_.dropout = dropout;
    model.num_classes_ = static_cast<int>(classes);
    return model;
}

void CnnModel::write_training_log_csv(const std::string& path,
                                      const std::vector<CnnEpochStats>& log) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write training log: " + path);
    out << "epoch,loss,train_accuracy\n";
    for (const auto& e : log)
        out << e.epoch << ',' << e.loss << ',' << e.train_accuracy << '\n';
}

double cnn_gradient_check(int rows, int cols, int num_filters, int kernel_size, int num_classes,
                          uint64_t seed) {
    Net<double> net;
    net.set_dims(rows, cols, kernel_size, num_filters, 5, num_classes);
    net.init(seed);

    Rng rng(Rng::derive(seed, 42));
    const int n_samples = 4;
    std::vector<Eigen::MatrixXd> xs;
    std::vector<int> ys;
    for (int s = 0; s < n_samples; ++s) {
        Eigen::MatrixXd x(rows, cols);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j) x(i, j) = rng.gaussian();
        xs.push_back(x);
        ys.push_back(static_cast<int>(rng.index(static_cast<size_t>(num_classes))));
    }

    Net<double>::Workspace ws;
    auto total_loss = [&](const Eigen::VectorXd& p) {
        double loss = 0.0;
        for (int s = 0; s < n_samples; ++s) {
            net.forward(p, xs[static_cast<size_t>(s)], ws, false);
            loss += -std::log(std::max(ws.prob(ys[static_cast<size_t>(s)]), 1e-30));
        }
        return loss / n_samples;
    };

    Eigen::VectorXd analytic = Eigen::VectorXd::Zero(net.n_params);
    for (int s = 0; s < n_samples; ++s) {
        net.forward(net.params, xs[static_cast<size_t>(s)], ws, false);
        net.backward(net.params, xs[static_cast<size_t>(s)], ys[static_cast<size_t>(s)], ws,
                     analytic, false);
    }
    analytic /= n_samples;

    const double h = 1e-4;
    double max_rel = 0.0;
    Eigen::VectorXd p = net.params;
    for (long i = 0; i < net.n_params; ++i) {
        const double orig = p(i);
        p(i) = orig + h;
        const double lp = total_loss(p);
        p(i) = orig - h;
        const double lm = total_loss(p);
        p(i) = orig;
        const double numeric = (lp - lm) / (2.0 * h);
        const double rel = std::abs(analytic(i) - numeric) /
                           std::max(1e-6, std::abs(analytic(i)) + std::abs(numeric));
        max_rel = std::max(max_rel, rel);
    }
    return max_rel;
}

} // namespace wakecough
