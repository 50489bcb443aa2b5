#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "popstat/csv.hpp"
#include "popstat/errors.hpp"
#include "popstat/rng.hpp"

// A small fully connected regressor: rectifier hidden layers, linear scalar
// output, minibatch training with adaptive per-parameter step scaling
// (first/second-moment accumulation, bias-corrected). Templated on the
// scalar so the whole stack stays expression-friendly Eigen code.

namespace popstat {

template <typename Scalar>
struct MlpT {
    using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    std::vector<Mat> w; // w[l]: (out_l x in_l)
    std::vector<Vec> b; // b[l]: (out_l)

    int input_dim() const { return w.empty() ? 0 : (int)w.front().cols(); }
    int depth() const { return (int)w.size(); }

    std::vector<int> layer_sizes() const {
        std::vector<int> s{input_dim()};
        for (const auto& m : w) s.push_back((int)m.rows());
        return s;
    }

    std::int64_t param_count() const {
        std::int64_t n = 0;
        for (std::size_t l = 0; l < w.size(); ++l) n += w[l].size() + b[l].size();
        return n;
    }
};

using Mlp = MlpT<double>;

/// Fan-in-scaled symmetric uniform init (+-sqrt(6/fan_in)), zero biases.
template <typename Scalar = double>
MlpT<Scalar> mlp_init(std::uint64_t seed, int input_dim,
                      const std::vector<int>& hidden = {80, 80, 80}) {
    if (input_dim < 1) throw ConfigError("mlp_init: input_dim must be >= 1");
    for (int h : hidden)
        if (h < 1) throw ConfigError("mlp_init: hidden sizes must be >= 1");
    MlpT<Scalar> m;
    Rng rng(derive_seed(seed, "mlp.init"));
    std::vector<int> sizes{input_dim};
    sizes.insert(sizes.end(), hidden.begin(), hidden.end());
    sizes.push_back(1);
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        const int in = sizes[l], out = sizes[l + 1];
        const double limit = std::sqrt(6.0 / (double)in);
        typename MlpT<Scalar>::Mat W(out, in);
        for (int r = 0; r < out; ++r)
            for (int c = 0; c < in; ++c) W(r, c) = (Scalar)rng.uniform(-limit, limit);
        m.w.push_back(std::move(W));
        m.b.push_back(MlpT<Scalar>::Vec::Zero(out));
    }
    return m;
}

/// Forward pass for a batch: X is (n x input_dim), result is (n).
template <typename Scalar>
typename MlpT<Scalar>::Vec mlp_forward(const MlpT<Scalar>& m,
                                       const typename MlpT<Scalar>::Mat& X) {
    if ((int)X.cols() != m.input_dim())
        throw DataError("mlp_forward: input has " + fmt_int((std::int64_t)X.cols()) +
                        " columns, model expects " + fmt_int(m.input_dim()));
    typename MlpT<Scalar>::Mat a = X;
    for (std::size_t l = 0; l + 1 < m.w.size(); ++l)
        a = ((a * m.w[l].transpose()).rowwise() + m.b[l].transpose()).cwiseMax(Scalar(0));
    const std::size_t L = m.w.size() - 1;
    return (a * m.w[L].transpose()).rowwise() + m.b[L].transpose();
}

/// Single-input convenience overload.
template <typename Scalar>
Scalar mlp_forward(const MlpT<Scalar>& m, const typename MlpT<Scalar>::Vec& x) {
    typename MlpT<Scalar>::Mat X = x.transpose();
    return mlp_forward(m, X)(0);
}

enum class LossMode { Unweighted, Weighted };

/// Mean over the batch of w_i * (f(x_i) - y_i)^2; unweighted mode sets w = 1.
template <typename Scalar>
Scalar mlp_loss(const MlpT<Scalar>& m, const typename MlpT<Scalar>::Mat& X,
                const typename MlpT<Scalar>::Vec& y, const typename MlpT<Scalar>::Vec& w,
                LossMode mode) {
    if (X.rows() == 0) throw TrainingError("mlp_loss: empty batch");
    if (y.size() != X.rows() || (mode == LossMode::Weighted && w.size() != X.rows()))
        throw DataError("mlp_loss: batch shape mismatch");
    const typename MlpT<Scalar>::Vec r = mlp_forward(m, X) - y;
    if (mode == LossMode::Weighted) return (w.array() * r.array().square()).mean();
    return r.array().square().mean();
}

/// Gradients of mlp_loss w.r.t. every parameter, same shapes as the model.
template <typename Scalar>
MlpT<Scalar> mlp_gradient(const MlpT<Scalar>& m, const typename MlpT<Scalar>::Mat& X,
                          const typename MlpT<Scalar>::Vec& y,
                          const typename MlpT<Scalar>::Vec& w, LossMode mode) {
    using Mat = typename MlpT<Scalar>::Mat;
    using Vec = typename MlpT<Scalar>::Vec;
    if (X.rows() == 0) throw TrainingError("mlp_gradient: empty batch");
    if (y.size() != X.rows() || (mode == LossMode::Weighted && w.size() != X.rows()))
        throw DataError("mlp_gradient: batch shape mismatch");

    const std::size_t L = m.w.size();
    std::vector<Mat> acts(L + 1); // acts[0] = X, acts[l] = post-activation of layer l
    acts[0] = X;
    for (std::size_t l = 0; l < L; ++l) {
        Mat z = (acts[l] * m.w[l].transpose()).rowwise() + m.b[l].transpose();
        acts[l + 1] = l + 1 < L ? z.cwiseMax(Scalar(0)).eval() : z;
    }

    const Scalar n = (Scalar)X.rows();
    Vec resid = acts[L].col(0) - y;
    Vec delta0 = Scalar(2) / n * resid;
    if (mode == LossMode::Weighted) delta0 = delta0.cwiseProduct(w);

    MlpT<Scalar> g;
    g.w.resize(L);
    g.b.resize(L);
    Mat delta = delta0; // (n x out_l), walking backwards
    for (std::size_t l = L; l-- > 0;) {
        g.w[l] = delta.transpose() * acts[l];
        g.b[l] = delta.colwise().sum().transpose();
        if (l > 0) {
            // rectifier gate: derivative 1 where the post-activation is > 0
            Mat gate = (acts[l].array() > Scalar(0)).template cast<Scalar>();
            delta = (delta * m.w[l]).cwiseProduct(gate);
        }
    }
    return g;
}

/// Max relative deviation between analytic gradient and central finite
/// differences (step 1e-5) over a deterministic parameter sample.
template <typename Scalar>
Scalar mlp_gradient_check(MlpT<Scalar> m, const typename MlpT<Scalar>::Mat& X,
                          const typename MlpT<Scalar>::Vec& y,
                          const typename MlpT<Scalar>::Vec& w, LossMode mode,
                          std::int64_t max_params = 4000) {
    const Scalar step = Scalar(1e-5);
    const MlpT<Scalar> g = mlp_gradient(m, X, y, w, mode);
    const std::int64_t total = m.param_count();
    const std::int64_t stride = total <= max_params ? 1 : (total + max_params - 1) / max_params;
    Scalar worst = 0;
    std::int64_t flat = 0;
    for (std::size_t l = 0; l < m.w.size(); ++l) {
        auto probe = [&](Scalar& p, Scalar ga) {
            if (flat++ % stride != 0) return;
            const Scalar keep = p;
            p = keep + step;
            const Scalar up = mlp_loss(m, X, y, w, mode);
            p = keep - step;
            const Scalar dn = mlp_loss(m, X, y, w, mode);
            p = keep;
            const Scalar gn = (up - dn) / (Scalar(2) * step);
            const Scalar dev = std::abs(ga - gn) /
                               std::max(Scalar(1), std::max(std::abs(ga), std::abs(gn)));
            worst = std::max(worst, dev);
        };
        for (int r = 0; r < m.w[l].rows(); ++r)
            for (int c = 0; c < m.w[l].cols(); ++c) probe(m.w[l](r, c), g.w[l](r, c));
        for (int r = 0; r < m.b[l].rows(); ++r) probe(m.b[l](r), g.b[l](r));
    }
    return worst;
}

struct TrainConfig {
    bool weighted = false;
    int epochs = 500;
    double lr = 1e-3;
    int batch = 32; // clamped to the training-set size
    std::uint64_t seed = 1;
    double validation_fraction = 0.0; // 0 disables early stopping
    int patience = 20;
    bool standardize_targets = true;
};

struct TrainResult {
    Mlp net;
    double target_mean = 0.0;
    double target_spread = 1.0;
    std::vector<double> train_loss;  // per epoch, full training split, standardized space
    std::vector<double> eval_metric; // per epoch, raw-scale MSE on the eval set (if given)
    int stopped_epoch = 0;
};

namespace detail {

inline void adam_step(Mlp& net, const Mlp& g, Mlp& m1, Mlp& m2, std::int64_t t, double lr) {
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    const double c1 = 1.0 - std::pow(b1, (double)t);
    const double c2 = 1.0 - std::pow(b2, (double)t);
    for (std::size_t l = 0; l < net.w.size(); ++l) {
        m1.w[l] = b1 * m1.w[l] + (1.0 - b1) * g.w[l];
        m2.w[l] = b2 * m2.w[l] + (1.0 - b2) * g.w[l].cwiseProduct(g.w[l]);
        net.w[l].array() -=
            lr * (m1.w[l].array() / c1) / ((m2.w[l].array() / c2).sqrt() + eps);
        m1.b[l] = b1 * m1.b[l] + (1.0 - b1) * g.b[l];
        m2.b[l] = b2 * m2.b[l] + (1.0 - b2) * g.b[l].cwiseProduct(g.b[l]);
        net.b[l].array() -=
            lr * (m1.b[l].array() / c1) / ((m2.b[l].array() / c2).sqrt() + eps);
    }
}

inline Mlp zeros_like(const Mlp& m) {
    Mlp z;
    for (std::size_t l = 0; l < m.w.size(); ++l) {
        z.w.push_back(Mlp::Mat::Zero(m.w[l].rows(), m.w[l].cols()));
        z.b.push_back(Mlp::Vec::Zero(m.b[l].size()));
    }
    return z;
}

} // namespace detail

struct TrainData {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    Eigen::VectorXd w; // ignored for eval sets and unweighted mode
};

/// Minibatch training, deterministic given cfg.seed. Optional eval set
/// records a raw-scale MSE trace per epoch. With a validation fraction set,
/// stops once validation loss has not improved for cfg.patience epochs.
inline TrainResult train(Mlp net, const TrainData& data, const TrainConfig& cfg,
                         const TrainData* eval_set = nullptr) {
    const auto n = (std::int64_t)data.X.rows();
    if (n < 1) throw TrainingError("train: empty training set");
    if (data.y.size() != n || (cfg.weighted && data.w.size() != n))
        throw TrainingError("train: data shape mismatch");
    if (cfg.epochs < 1 || cfg.lr < 0.0 || cfg.batch < 1)
        throw ConfigError("train: bad epochs/lr/batch");
    if (cfg.validation_fraction < 0.0 || cfg.validation_fraction >= 1.0)
        throw ConfigError("train: validation fraction must be in [0, 1)");

    TrainResult res;
    res.target_mean = data.y.mean();
    if (cfg.standardize_targets) {
        const double var = (data.y.array() - res.target_mean).square().mean();
        res.target_spread = var > 0.0 ? std::sqrt(var) : 1.0;
    } else {
        res.target_mean = 0.0;
        res.target_spread = 1.0;
    }
    Eigen::VectorXd ys = (data.y.array() - res.target_mean) / res.target_spread;
    Eigen::VectorXd ws = cfg.weighted ? data.w : Eigen::VectorXd::Ones(n);
    const LossMode mode = cfg.weighted ? LossMode::Weighted : LossMode::Unweighted;

    Rng rng(derive_seed(cfg.seed, "train"));
    std::vector<std::int64_t> order(n);
    for (std::int64_t i = 0; i < n; ++i) order[i] = i;

    // optional validation split (shuffled once)
    std::int64_t n_val = 0;
    if (cfg.validation_fraction > 0.0) {
        rng.shuffle(order);
        n_val = std::max<std::int64_t>(1, (std::int64_t)std::floor(cfg.validation_fraction * (double)n));
        if (n_val >= n) throw TrainingError("train: validation split leaves no training rows");
    }
    std::vector<std::int64_t> val_idx(order.begin(), order.begin() + n_val);
    std::vector<std::int64_t> tr_idx(order.begin() + n_val, order.end());
    const auto n_tr = (std::int64_t)tr_idx.size();

    auto gather = [&](const std::vector<std::int64_t>& idx) {
        TrainData d;
        d.X.resize(idx.size(), data.X.cols());
        d.y.resize(idx.size());
        d.w.resize(idx.size());
        for (std::size_t i = 0; i < idx.size(); ++i) {
            d.X.row(i) = data.X.row(idx[i]);
            d.y(i) = ys(idx[i]);
            d.w(i) = ws(idx[i]);
        }
        return d;
    };
    const TrainData tr = gather(tr_idx);
    const TrainData val = gather(val_idx);

    const std::int64_t batch = std::min<std::int64_t>(cfg.batch, n_tr);
    Mlp m1 = detail::zeros_like(net), m2 = detail::zeros_like(net);
    std::int64_t t = 0;
    double best_val = std::numeric_limits<double>::infinity();
    int since_best = 0;

    std::vector<std::int64_t> perm(n_tr);
    for (std::int64_t i = 0; i < n_tr; ++i) perm[i] = i;
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        rng.shuffle(perm);
        for (std::int64_t start = 0; start < n_tr; start += batch) {
            const std::int64_t len = std::min(batch, n_tr - start);
            Eigen::MatrixXd Xb(len, tr.X.cols());
            Eigen::VectorXd yb(len), wb(len);
            for (std::int64_t i = 0; i < len; ++i) {
                Xb.row(i) = tr.X.row(perm[start + i]);
                yb(i) = tr.y(perm[start + i]);
                wb(i) = tr.w(perm[start + i]);
            }
            const Mlp g = mlp_gradient(net, Xb, yb, wb, mode);
            detail::adam_step(net, g, m1, m2, ++t, cfg.lr);
        }
        const double ep_loss = mlp_loss(net, tr.X, tr.y, tr.w, mode);
        if (!std::isfinite(ep_loss))
            throw TrainingError("train: loss diverged at epoch " + fmt_int(epoch));
        res.train_loss.push_back(ep_loss);
        if (eval_set != nullptr) {
            const Eigen::VectorXd pred =
                (mlp_forward(net, eval_set->X).array() * res.target_spread + res.target_mean);
            res.eval_metric.push_back((pred - eval_set->y).array().square().mean());
        }
        res.stopped_epoch = epoch;
        if (n_val > 0) {
            const double vloss = mlp_loss(net, val.X, val.y, val.w, mode);
            if (vloss < best_val) {
                best_val = vloss;
                since_best = 0;
            } else if (++since_best >= cfg.patience) {
                break;
            }
        }
    }
    res.net = std::move(net);
    return res;
}

} // namespace popstat
