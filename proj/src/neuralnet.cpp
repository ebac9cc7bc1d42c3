#include "steti/neuralnet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace steti::nn {

double apply_activation(Activation a, double x) {
    switch (a) {
        case Activation::linear: return x;
        case Activation::sigmoid: return sigmoid(x);
        case Activation::tanh: return std::tanh(x);
        case Activation::relu: return x > 0.0 ? x : 0.0;
    }
    return x;
}

double activation_derivative(Activation a, double x) {
    switch (a) {
        case Activation::linear: return 1.0;
        case Activation::sigmoid: {
            double s = sigmoid(x);
            return s * (1.0 - s);
        }
        case Activation::tanh: {
            double t = std::tanh(x);
            return 1.0 - t * t;
        }
        case Activation::relu: return x > 0.0 ? 1.0 : 0.0;
    }
    return 1.0;
}

int ModelConfig::concat_width() const {
    int w = hidden_size;                // main branch dense output
    if (use_funding) w += hidden_size;  // funding branch dense output
    if (use_static) {
        for (std::size_t i = 0; i < vocab_sizes.size(); ++i) w += embedding_dim(i);
        w += 1;  // launch mass
    }
    return w;
}

namespace {

void collect(std::vector<std::pair<double*, long>>& out, Eigen::MatrixXd& m) {
    out.emplace_back(m.data(), static_cast<long>(m.size()));
}
void collect(std::vector<std::pair<double*, long>>& out, Eigen::VectorXd& v) {
    out.emplace_back(v.data(), static_cast<long>(v.size()));
}

void collect_lstm(std::vector<std::pair<double*, long>>& out, LstmParams& p) {
    collect(out, p.Wf);
    collect(out, p.Wi);
    collect(out, p.Wc);
    collect(out, p.Wo);
    collect(out, p.bf);
    collect(out, p.bi);
    collect(out, p.bc);
    collect(out, p.bo);
}

void collect_branch(std::vector<std::pair<double*, long>>& out, LstmBranch& b) {
    collect_lstm(out, b.fwd);
    if (b.bwd) collect_lstm(out, *b.bwd);
    collect(out, b.dense.W);
    collect(out, b.dense.b);
}

}  // namespace

std::vector<std::pair<double*, long>> ModelParams::tensor_views() {
    std::vector<std::pair<double*, long>> out;
    collect_branch(out, main_branch);
    if (funding_branch) collect_branch(out, *funding_branch);
    for (auto& e : embeddings) collect(out, e.table);
    collect(out, bn.gamma);
    collect(out, bn.beta);
    collect(out, output.W);
    collect(out, output.b);
    return out;
}

std::vector<std::pair<const double*, long>> ModelParams::tensor_views() const {
    auto views = const_cast<ModelParams*>(this)->tensor_views();
    std::vector<std::pair<const double*, long>> out;
    out.reserve(views.size());
    for (auto [p, n] : views) out.emplace_back(p, n);
    return out;
}

long ModelParams::parameter_count() const {
    long n = 0;
    for (auto [p, len] : tensor_views()) n += len;
    return n;
}

namespace {

Eigen::MatrixXd glorot(int rows, int cols, Rng& rng) {
    double limit = std::sqrt(6.0 / (rows + cols));
    Eigen::MatrixXd m(rows, cols);
    for (int c = 0; c < cols; ++c)
        for (int r = 0; r < rows; ++r) m(r, c) = rng.uniform(-limit, limit);
    return m;
}

LstmParams init_lstm(int input_dim, int hidden, Rng& rng) {
    LstmParams p;
    int cols = input_dim + hidden;
    p.Wf = glorot(hidden, cols, rng);
    p.Wi = glorot(hidden, cols, rng);
    p.Wc = glorot(hidden, cols, rng);
    p.Wo = glorot(hidden, cols, rng);
    p.bf = Eigen::VectorXd::Constant(hidden, 1.0);  // forget-gate bias offset
    p.bi = Eigen::VectorXd::Zero(hidden);
    p.bc = Eigen::VectorXd::Zero(hidden);
    p.bo = Eigen::VectorXd::Zero(hidden);
    return p;
}

LstmBranch init_branch(int input_dim, const ModelConfig& cfg, Rng& rng) {
    LstmBranch b;
    b.fwd = init_lstm(input_dim, cfg.hidden_size, rng);
    if (cfg.bidirectional) b.bwd = init_lstm(input_dim, cfg.hidden_size, rng);
    int in_width = cfg.bidirectional ? 2 * cfg.hidden_size : cfg.hidden_size;
    b.dense.W = glorot(cfg.hidden_size, in_width, rng);
    b.dense.b = Eigen::VectorXd::Zero(cfg.hidden_size);
    return b;
}

}  // namespace

ModelParams init_params(const ModelConfig& config, Rng& rng) {
    ModelParams p;
    p.main_branch = init_branch(config.main_input_dim, config, rng);
    if (config.use_funding) p.funding_branch = init_branch(config.funding_input_dim, config, rng);
    if (config.use_static) {
        for (std::size_t i = 0; i < config.vocab_sizes.size(); ++i) {
            EmbeddingParams e;
            e.table = glorot(config.vocab_sizes[i] + 1, config.embedding_dim(i), rng);
            p.embeddings.push_back(std::move(e));
        }
    }
    int width = config.concat_width();
    p.bn.gamma = Eigen::VectorXd::Ones(width);
    p.bn.beta = Eigen::VectorXd::Zero(width);
    p.bn.running_mean = Eigen::VectorXd::Zero(width);
    p.bn.running_var = Eigen::VectorXd::Ones(width);
    p.output.W = glorot(1, width, rng);
    p.output.b = Eigen::VectorXd::Zero(1);
    return p;
}

ModelParams zeros_like(const ModelParams& params) {
    ModelParams z = params;
    for (auto [ptr, n] : z.tensor_views()) std::fill(ptr, ptr + n, 0.0);
    z.bn.running_mean.setZero();
    z.bn.running_var.setZero();
    return z;
}

LstmState lstm_cell_forward(const Eigen::VectorXd& x_t, const LstmState& prev, const LstmParams& params,
                            Activation lstm_activation) {
    const int hidden = params.hidden_size();
    if (x_t.size() != params.input_size())
        throw ValidationError("lstm cell: input size " + std::to_string(x_t.size()) +
                              " does not match weights (" + std::to_string(params.input_size()) + ")");
    if (prev.h.size() != hidden || prev.C.size() != hidden)
        throw ValidationError("lstm cell: state size does not match hidden size " +
                              std::to_string(hidden));
    Eigen::VectorXd z(x_t.size() + hidden);
    z << x_t, prev.h;
    LstmState s;
    s.f = (params.Wf * z + params.bf).unaryExpr([](double v) { return sigmoid(v); });
    s.i = (params.Wi * z + params.bi).unaryExpr([](double v) { return sigmoid(v); });
    s.cbar = (params.Wc * z + params.bc).unaryExpr([](double v) { return std::tanh(v); });
    s.C = s.f.cwiseProduct(prev.C) + s.i.cwiseProduct(s.cbar);
    s.o = (params.Wo * z + params.bo).unaryExpr([](double v) { return sigmoid(v); });
    s.h = s.o.cwiseProduct(s.C.unaryExpr([&](double v) { return apply_activation(lstm_activation, v); }));
    return s;
}

namespace {

Eigen::VectorXd dropout_mask(int size, double rate, bool training, Rng* rng) {
    if (!training || rate <= 0.0 || rng == nullptr) return Eigen::VectorXd::Ones(size);
    rate = std::min(rate, 0.99);
    Eigen::VectorXd mask(size);
    double keep = 1.0 - rate;
    for (int i = 0; i < size; ++i) mask(i) = (rng->uniform() >= rate) ? 1.0 / keep : 0.0;
    return mask;
}

}  // namespace

Eigen::VectorXd lstm_layer_forward(const Eigen::MatrixXd& sequence, const LstmParams& params,
                                   Activation lstm_activation, double dropout_rate,
                                   double recurrent_dropout_rate, bool training, Rng* rng,
                                   LstmSeqCache* cache) {
    const int steps = static_cast<int>(sequence.rows());
    const int hidden = params.hidden_size();
    if (static_cast<int>(sequence.cols()) != params.input_size())
        throw ValidationError("lstm layer: sequence width " + std::to_string(sequence.cols()) +
                              " does not match weights (" + std::to_string(params.input_size()) + ")");
    // one mask per sequence (variational)
    Eigen::VectorXd in_mask = dropout_mask(static_cast<int>(sequence.cols()), dropout_rate, training, rng);
    Eigen::VectorXd rec_mask = dropout_mask(hidden, recurrent_dropout_rate, training, rng);

    Eigen::VectorXd C = Eigen::VectorXd::Zero(hidden);
    Eigen::VectorXd h = Eigen::VectorXd::Zero(hidden);
    if (cache) {
        cache->z.clear();
        cache->states.clear();
        cache->actC.clear();
        cache->input_mask = in_mask;
        cache->recurrent_mask = rec_mask;
    }
    for (int t = 0; t < steps; ++t) {
        Eigen::VectorXd x = sequence.row(t).transpose().cwiseProduct(in_mask);
        Eigen::VectorXd z(x.size() + hidden);
        z << x, h.cwiseProduct(rec_mask);
        LstmState s;
        s.f = (params.Wf * z + params.bf).unaryExpr([](double v) { return sigmoid(v); });
        s.i = (params.Wi * z + params.bi).unaryExpr([](double v) { return sigmoid(v); });
        s.cbar = (params.Wc * z + params.bc).unaryExpr([](double v) { return std::tanh(v); });
        s.C = s.f.cwiseProduct(C) + s.i.cwiseProduct(s.cbar);
        s.o = (params.Wo * z + params.bo).unaryExpr([](double v) { return sigmoid(v); });
        Eigen::VectorXd actC =
            s.C.unaryExpr([&](double v) { return apply_activation(lstm_activation, v); });
        s.h = s.o.cwiseProduct(actC);
        C = s.C;
        h = s.h;
        if (cache) {
            cache->z.push_back(std::move(z));
            cache->states.push_back(std::move(s));
            cache->actC.push_back(std::move(actC));
        }
    }
    return h;
}

Eigen::VectorXd bilstm_forward(const Eigen::MatrixXd& sequence, const LstmParams& fwd, const LstmParams& bwd,
                               Activation lstm_activation, double dropout_rate,
                               double recurrent_dropout_rate, bool training, Rng* rng,
                               LstmSeqCache* fwd_cache, LstmSeqCache* bwd_cache) {
    Eigen::VectorXd hf = lstm_layer_forward(sequence, fwd, lstm_activation, dropout_rate,
                                            recurrent_dropout_rate, training, rng, fwd_cache);
    Eigen::MatrixXd reversed = sequence.colwise().reverse();
    Eigen::VectorXd hb = lstm_layer_forward(reversed, bwd, lstm_activation, dropout_rate,
                                            recurrent_dropout_rate, training, rng, bwd_cache);
    Eigen::VectorXd out(hf.size() + hb.size());
    out << hf, hb;
    return out;
}

namespace {

BranchCache run_branch(const Eigen::MatrixXd& sequence, const LstmBranch& branch, const ModelConfig& cfg,
                       bool training, Rng* rng) {
    BranchCache c;
    if (branch.bwd) {
        c.bwd.emplace();
        c.h_cat = bilstm_forward(sequence, branch.fwd, *branch.bwd, cfg.lstm_activation, cfg.dropout_rate,
                                 cfg.recurrent_dropout_rate, training, rng, &c.fwd, &*c.bwd);
    } else {
        c.h_cat = lstm_layer_forward(sequence, branch.fwd, cfg.lstm_activation, cfg.dropout_rate,
                                     cfg.recurrent_dropout_rate, training, rng, &c.fwd);
    }
    c.dense_out = branch.dense.W * c.h_cat + branch.dense.b;
    return c;
}

void check_example(const WindowedExample& e, const ModelConfig& cfg, const ModelParams& params) {
    if (e.seq_main.rows() != cfg.window_size || e.seq_main.cols() != cfg.main_input_dim)
        throw ValidationError("example main sequence is " + std::to_string(e.seq_main.rows()) + "x" +
                              std::to_string(e.seq_main.cols()) + ", model expects " +
                              std::to_string(cfg.window_size) + "x" + std::to_string(cfg.main_input_dim));
    if (cfg.use_funding &&
        (e.seq_funding.rows() != cfg.window_size_funding || e.seq_funding.cols() != cfg.funding_input_dim))
        throw ValidationError("example funding sequence is " + std::to_string(e.seq_funding.rows()) + "x" +
                              std::to_string(e.seq_funding.cols()) + ", model expects " +
                              std::to_string(cfg.window_size_funding) + "x" +
                              std::to_string(cfg.funding_input_dim));
    if (cfg.use_static) {
        for (std::size_t i = 0; i < params.embeddings.size(); ++i) {
            int idx = e.categoricals[i];
            if (idx < 0 || idx >= params.embeddings[i].table.rows())
                throw ValidationError("categorical index " + std::to_string(idx) +
                                      " outside embedding table of " +
                                      std::to_string(params.embeddings[i].table.rows()) + " rows");
        }
    }
}

}  // namespace

Eigen::VectorXd model_forward(std::span<const WindowedExample> batch, const ModelParams& params,
                              const ModelConfig& config, bool training, Rng* dropout_rng,
                              ForwardCache* cache) {
    const int B = static_cast<int>(batch.size());
    if (B == 0) throw ValidationError("empty batch");
    const int F = config.concat_width();
    Eigen::MatrixXd concat(B, F);

    ForwardCache local;
    ForwardCache& fc = cache ? *cache : local;
    fc.examples.clear();
    fc.training = training;

    for (int b = 0; b < B; ++b) {
        const auto& e = batch[static_cast<std::size_t>(b)];
        check_example(e, config, params);
        ExampleCache ec;
        ec.main = run_branch(e.seq_main, params.main_branch, config, training, dropout_rng);
        int off = 0;
        concat.block(b, off, 1, config.hidden_size) = ec.main.dense_out.transpose();
        off += config.hidden_size;
        if (config.use_funding) {
            ec.funding = run_branch(e.seq_funding, *params.funding_branch, config, training, dropout_rng);
            concat.block(b, off, 1, config.hidden_size) = ec.funding->dense_out.transpose();
            off += config.hidden_size;
        }
        if (config.use_static) {
            for (std::size_t i = 0; i < params.embeddings.size(); ++i) {
                int dim = config.embedding_dim(i);
                concat.block(b, off, 1, dim) = params.embeddings[i].table.row(e.categoricals[i]);
                off += dim;
            }
            concat(b, off++) = e.mass_scaled;
        }
        fc.examples.push_back(std::move(ec));
    }

    Eigen::VectorXd mean(F), var(F);
    if (training) {
        for (int j = 0; j < F; ++j) {
            mean(j) = concat.col(j).mean();
            var(j) = (concat.col(j).array() - mean(j)).square().mean();
        }
    } else {
        mean = params.bn.running_mean;
        var = params.bn.running_var;
    }
    Eigen::MatrixXd normalized(B, F);
    Eigen::MatrixXd bn_out(B, F);
    for (int j = 0; j < F; ++j) {
        double inv_std = 1.0 / std::sqrt(var(j) + kBatchNormEpsilon);
        for (int b = 0; b < B; ++b) {
            normalized(b, j) = (concat(b, j) - mean(j)) * inv_std;
            bn_out(b, j) = params.bn.gamma(j) * normalized(b, j) + params.bn.beta(j);
        }
    }

    Eigen::VectorXd out_pre = bn_out * params.output.W.row(0).transpose() +
                              Eigen::VectorXd::Constant(B, params.output.b(0));
    Eigen::VectorXd pred =
        out_pre.unaryExpr([&](double v) { return apply_activation(config.output_activation, v); });

    fc.concat = std::move(concat);
    fc.batch_mean = std::move(mean);
    fc.batch_var = std::move(var);
    fc.normalized = std::move(normalized);
    fc.bn_out = std::move(bn_out);
    fc.out_pre = std::move(out_pre);
    fc.predictions = pred;
    return pred;
}

void update_running_stats(ModelParams& params, const ForwardCache& cache) {
    if (!cache.training) return;
    params.bn.running_mean =
        kBatchNormMomentum * params.bn.running_mean + (1.0 - kBatchNormMomentum) * cache.batch_mean;
    params.bn.running_var =
        kBatchNormMomentum * params.bn.running_var + (1.0 - kBatchNormMomentum) * cache.batch_var;
}

double mse(const Eigen::VectorXd& y, const Eigen::VectorXd& y_hat) {
    if (y.size() != y_hat.size() || y.size() == 0)
        throw ValidationError("mse: size mismatch or empty input");
    return (y - y_hat).squaredNorm() / static_cast<double>(y.size());
}

namespace {

// BPTT for one direction. dh_final is the loss gradient at the final hidden
// state; parameter gradients accumulate into `g`.
void lstm_backward(const LstmParams& p, const LstmSeqCache& c, Activation act,
                   const Eigen::VectorXd& dh_final, LstmParams& g) {
    const int steps = static_cast<int>(c.states.size());
    const int hidden = p.hidden_size();
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(hidden);
    Eigen::VectorXd dh_next = Eigen::VectorXd::Zero(hidden);
    Eigen::VectorXd dC_next = Eigen::VectorXd::Zero(hidden);
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(hidden);
    for (int t = steps - 1; t >= 0; --t) {
        const LstmState& s = c.states[static_cast<std::size_t>(t)];
        Eigen::VectorXd dh = dh_next;
        if (t == steps - 1) dh += dh_final;
        Eigen::VectorXd dact = s.C.unaryExpr([&](double v) { return activation_derivative(act, v); });
        Eigen::VectorXd do_pre = dh.cwiseProduct(c.actC[static_cast<std::size_t>(t)])
                                     .cwiseProduct(s.o)
                                     .cwiseProduct(ones - s.o);
        Eigen::VectorXd dC = dC_next + dh.cwiseProduct(s.o).cwiseProduct(dact);
        const Eigen::VectorXd& C_prev = t > 0 ? c.states[static_cast<std::size_t>(t - 1)].C : zero;
        Eigen::VectorXd df_pre = dC.cwiseProduct(C_prev).cwiseProduct(s.f).cwiseProduct(ones - s.f);
        Eigen::VectorXd di_pre = dC.cwiseProduct(s.cbar).cwiseProduct(s.i).cwiseProduct(ones - s.i);
        Eigen::VectorXd dcbar_pre =
            dC.cwiseProduct(s.i).cwiseProduct(ones - s.cbar.cwiseProduct(s.cbar));

        const Eigen::VectorXd& z = c.z[static_cast<std::size_t>(t)];
        g.Wf.noalias() += df_pre * z.transpose();
        g.Wi.noalias() += di_pre * z.transpose();
        g.Wc.noalias() += dcbar_pre * z.transpose();
        g.Wo.noalias() += do_pre * z.transpose();
        g.bf += df_pre;
        g.bi += di_pre;
        g.bc += dcbar_pre;
        g.bo += do_pre;

        Eigen::VectorXd dz = p.Wf.transpose() * df_pre + p.Wi.transpose() * di_pre +
                             p.Wc.transpose() * dcbar_pre + p.Wo.transpose() * do_pre;
        dh_next = dz.tail(hidden).cwiseProduct(c.recurrent_mask);
        dC_next = dC.cwiseProduct(s.f);
    }
}

void branch_backward(const LstmBranch& p, const BranchCache& c, Activation act,
                     const Eigen::VectorXd& d_dense_out, LstmBranch& g) {
    g.dense.W.noalias() += d_dense_out * c.h_cat.transpose();
    g.dense.b += d_dense_out;
    Eigen::VectorXd dh_cat = p.dense.W.transpose() * d_dense_out;
    int hidden = p.fwd.hidden_size();
    lstm_backward(p.fwd, c.fwd, act, dh_cat.head(hidden), g.fwd);
    if (p.bwd) lstm_backward(*p.bwd, *c.bwd, act, dh_cat.tail(hidden), *g.bwd);
}

}  // namespace

ModelParams backward(std::span<const WindowedExample> batch, const ModelParams& params,
                     const ModelConfig& config, const ForwardCache& cache,
                     const Eigen::VectorXd& dloss_dpred) {
    const int B = static_cast<int>(batch.size());
    const int F = config.concat_width();
    ModelParams grads = zeros_like(params);

    Eigen::VectorXd dpre(B);
    for (int b = 0; b < B; ++b)
        dpre(b) = dloss_dpred(b) * activation_derivative(config.output_activation, cache.out_pre(b));

    grads.output.W.row(0) = (cache.bn_out.transpose() * dpre).transpose();
    grads.output.b(0) = dpre.sum();
    Eigen::MatrixXd dbn_out = dpre * params.output.W.row(0);  // B x F

    Eigen::MatrixXd dconcat(B, F);
    for (int j = 0; j < F; ++j) {
        double inv_std = 1.0 / std::sqrt(cache.batch_var(j) + kBatchNormEpsilon);
        double dgamma = 0.0, dbeta = 0.0;
        for (int b = 0; b < B; ++b) {
            dgamma += dbn_out(b, j) * cache.normalized(b, j);
            dbeta += dbn_out(b, j);
        }
        grads.bn.gamma(j) = dgamma;
        grads.bn.beta(j) = dbeta;
        if (cache.training) {
            // gradients flow through the batch mean and variance as well
            double sum_dnorm = 0.0, sum_dnorm_norm = 0.0;
            for (int b = 0; b < B; ++b) {
                double dnorm = dbn_out(b, j) * params.bn.gamma(j);
                sum_dnorm += dnorm;
                sum_dnorm_norm += dnorm * cache.normalized(b, j);
            }
            for (int b = 0; b < B; ++b) {
                double dnorm = dbn_out(b, j) * params.bn.gamma(j);
                dconcat(b, j) = inv_std / B *
                                (B * dnorm - sum_dnorm - cache.normalized(b, j) * sum_dnorm_norm);
            }
        } else {
            for (int b = 0; b < B; ++b)
                dconcat(b, j) = dbn_out(b, j) * params.bn.gamma(j) * inv_std;
        }
    }

    for (int b = 0; b < B; ++b) {
        const auto& e = batch[static_cast<std::size_t>(b)];
        const ExampleCache& ec = cache.examples[static_cast<std::size_t>(b)];
        int off = 0;
        Eigen::VectorXd d_main = dconcat.block(b, off, 1, config.hidden_size).transpose();
        off += config.hidden_size;
        branch_backward(params.main_branch, ec.main, config.lstm_activation, d_main, grads.main_branch);
        if (config.use_funding) {
            Eigen::VectorXd d_fund = dconcat.block(b, off, 1, config.hidden_size).transpose();
            off += config.hidden_size;
            branch_backward(*params.funding_branch, *ec.funding, config.lstm_activation, d_fund,
                            *grads.funding_branch);
        }
        if (config.use_static) {
            for (std::size_t i = 0; i < params.embeddings.size(); ++i) {
                int dim = config.embedding_dim(i);
                grads.embeddings[i].table.row(e.categoricals[i]) += dconcat.block(b, off, 1, dim);
                off += dim;
            }
        }
    }
    return grads;
}

OptimizerState::OptimizerState(Optimizer kind, double learning_rate) : kind_(kind), lr_(learning_rate) {}

void OptimizerState::step(ModelParams& params, const ModelParams& grads) {
    auto pv = params.tensor_views();
    auto gv = grads.tensor_views();
    if (acc1_.empty()) {
        for (auto [ptr, n] : pv) {
            acc1_.emplace_back(Eigen::ArrayXd::Zero(n));
            acc2_.emplace_back(Eigen::ArrayXd::Zero(n));
        }
    }
    if (pv.size() != gv.size()) throw ValidationError("optimizer: parameter/gradient shape mismatch");
    ++t_;
    for (std::size_t k = 0; k < pv.size(); ++k) {
        if (pv[k].second != gv[k].second)
            throw ValidationError("optimizer: parameter/gradient shape mismatch");
        Eigen::Map<Eigen::ArrayXd> p(pv[k].first, pv[k].second);
        Eigen::Map<const Eigen::ArrayXd> g(gv[k].first, gv[k].second);
        switch (kind_) {
            case Optimizer::adam: {
                constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
                acc1_[k] = b1 * acc1_[k] + (1.0 - b1) * g;
                acc2_[k] = b2 * acc2_[k] + (1.0 - b2) * g.square();
                double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
                double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
                p -= lr_ * (acc1_[k] / c1) / ((acc2_[k] / c2).sqrt() + eps);
                break;
            }
            case Optimizer::rmsprop: {
                constexpr double rho = 0.9, eps = 1e-8;
                acc2_[k] = rho * acc2_[k] + (1.0 - rho) * g.square();
                p -= lr_ * g / (acc2_[k].sqrt() + eps);
                break;
            }
            case Optimizer::adadelta: {
                constexpr double rho = 0.95, eps = 1e-6;
                acc2_[k] = rho * acc2_[k] + (1.0 - rho) * g.square();
                Eigen::ArrayXd dx = (acc1_[k] + eps).sqrt() / (acc2_[k] + eps).sqrt() * g;
                acc1_[k] = rho * acc1_[k] + (1.0 - rho) * dx.square();
                p -= lr_ * dx;
                break;
            }
        }
    }
}

TrainResult train(const ModelConfig& config, const std::vector<WindowedExample>& train_set,
                  const std::vector<WindowedExample>& val_set, ModelParams initial,
                  const TrainConfig& cfg) {
    if (train_set.empty()) throw ValidationError("training set is empty");
    if (val_set.empty()) throw ValidationError("validation set is empty");
    if (cfg.patience > cfg.max_epochs)
        throw ValidationError("patience " + std::to_string(cfg.patience) + " exceeds max epochs " +
                              std::to_string(cfg.max_epochs));
    const int N = static_cast<int>(train_set.size());
    int batch = cfg.batch_size <= 0 ? N : std::min(cfg.batch_size, N);

    Rng root(cfg.seed);
    Rng shuffle_rng = root.split("shuffle");
    Rng dropout_rng = root.split("dropout");

    ModelParams params = std::move(initial);
    OptimizerState opt(cfg.optimizer, cfg.learning_rate);

    Eigen::VectorXd val_targets(static_cast<long>(val_set.size()));
    for (std::size_t i = 0; i < val_set.size(); ++i)
        val_targets(static_cast<long>(i)) = val_set[i].target;

    TrainResult result;
    result.best_val_mse = std::numeric_limits<double>::infinity();
    std::vector<int> order(static_cast<std::size_t>(N));
    for (int i = 0; i < N; ++i) order[static_cast<std::size_t>(i)] = i;

    int epochs_since_improvement = 0;
    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double train_loss_sum = 0.0;
        for (int start = 0; start < N; start += batch) {
            int len = std::min(batch, N - start);
            std::vector<WindowedExample> minibatch;
            minibatch.reserve(static_cast<std::size_t>(len));
            Eigen::VectorXd targets(len);
            for (int j = 0; j < len; ++j) {
                minibatch.push_back(
                    train_set[static_cast<std::size_t>(order[static_cast<std::size_t>(start + j)])]);
                targets(j) = minibatch.back().target;
            }
            ForwardCache fcache;
            Eigen::VectorXd pred = model_forward(minibatch, params, config, true, &dropout_rng, &fcache);
            update_running_stats(params, fcache);
            double loss = mse(targets, pred);
            if (!std::isfinite(loss))
                throw RuntimeError("training diverged: non-finite loss at epoch " + std::to_string(epoch));
            train_loss_sum += loss * len;
            Eigen::VectorXd dpred = 2.0 * (pred - targets) / static_cast<double>(len);
            ModelParams grads = backward(minibatch, params, config, fcache, dpred);
            opt.step(params, grads);
        }
        double train_mse = train_loss_sum / N;
        Eigen::VectorXd val_pred = predict(val_set, params, config);
        double val_mse = mse(val_targets, val_pred);
        if (!std::isfinite(val_mse))
            throw RuntimeError("training diverged: non-finite validation loss at epoch " +
                               std::to_string(epoch));
        result.history.push_back({train_mse, val_mse});
        result.epochs_run = epoch + 1;
        if (val_mse < result.best_val_mse) {
            result.best_val_mse = val_mse;
            result.best_epoch = epoch;
            result.best_params = params;
            epochs_since_improvement = 0;
        } else {
            ++epochs_since_improvement;
            if (epochs_since_improvement >= cfg.patience) break;
        }
    }
    return result;
}

Eigen::VectorXd predict(std::span<const WindowedExample> examples, const ModelParams& params,
                        const ModelConfig& config) {
    return model_forward(examples, params, config, false, nullptr, nullptr);
}

}  // namespace steti::nn
