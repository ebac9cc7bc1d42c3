#pragma once

#include <Eigen/Core>
#include <optional>
#include <span>
#include <vector>

#include "steti/common.hpp"
#include "steti/features.hpp"
#include "steti/hyperparams.hpp"

namespace steti::nn {

using features::WindowedExample;

double apply_activation(Activation a, double x);
double activation_derivative(Activation a, double x);  // w.r.t. pre-activation x

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Gate weights over the concatenated [x_t, h_{t-1}] input.
struct LstmParams {
    Eigen::MatrixXd Wf, Wi, Wc, Wo;  // hidden x (input + hidden)
    Eigen::VectorXd bf, bi, bc, bo;

    int hidden_size() const { return static_cast<int>(Wf.rows()); }
    int input_size() const { return static_cast<int>(Wf.cols() - Wf.rows()); }
};

struct LstmState {
    Eigen::VectorXd C, h;
    Eigen::VectorXd f, i, o, cbar;  // cached gate activations
};

struct DenseParams {
    Eigen::MatrixXd W;
    Eigen::VectorXd b;
};

struct EmbeddingParams {
    Eigen::MatrixXd table;  // rows = vocabulary incl. reserved index 0
};

struct BatchNormParams {
    Eigen::VectorXd gamma, beta;
    Eigen::VectorXd running_mean, running_var;
};

inline constexpr double kBatchNormMomentum = 0.99;
inline constexpr double kBatchNormEpsilon = 1e-5;

struct LstmBranch {
    LstmParams fwd;
    std::optional<LstmParams> bwd;  // present when bidirectional
    DenseParams dense;              // reshapes the (2x)hidden output to hidden
};

// Architecture descriptor; everything needed to rebuild parameter shapes.
struct ModelConfig {
    int main_input_dim = 2;
    int window_size = 5;
    bool use_funding = false;
    int funding_input_dim = 4;
    int window_size_funding = 5;
    bool use_static = false;         // categoricals + launch mass
    std::vector<int> vocab_sizes;    // per categorical, excluding reserved 0
    int hidden_size = 16;
    bool bidirectional = false;
    Activation lstm_activation = Activation::tanh;
    Activation output_activation = Activation::linear;
    double dropout_rate = 0.0;
    double recurrent_dropout_rate = 0.0;

    // half the category count, rounded up
    int embedding_dim(std::size_t i) const { return (vocab_sizes[i] + 1) / 2; }
    int concat_width() const;
};

struct ModelParams {
    LstmBranch main_branch;
    std::optional<LstmBranch> funding_branch;
    std::vector<EmbeddingParams> embeddings;
    BatchNormParams bn;
    DenseParams output;  // single unit

    std::vector<std::pair<double*, long>> tensor_views();  // trainable only
    std::vector<std::pair<const double*, long>> tensor_views() const;
    long parameter_count() const;
};

ModelParams init_params(const ModelConfig& config, Rng& rng);
ModelParams zeros_like(const ModelParams& params);

// --- forward/backward caches -------------------------------------------------

struct LstmSeqCache {
    std::vector<Eigen::VectorXd> z;     // concatenated (masked) input per step
    std::vector<LstmState> states;
    std::vector<Eigen::VectorXd> actC;  // lstm_activation(C_t)
    Eigen::VectorXd input_mask, recurrent_mask;  // inverted-dropout scaling
};

struct BranchCache {
    LstmSeqCache fwd;
    std::optional<LstmSeqCache> bwd;
    Eigen::VectorXd h_cat;      // final hidden state(s)
    Eigen::VectorXd dense_out;
};

struct ExampleCache {
    BranchCache main;
    std::optional<BranchCache> funding;
};

struct ForwardCache {
    std::vector<ExampleCache> examples;
    Eigen::MatrixXd concat;       // batch x concat_width
    Eigen::VectorXd batch_mean, batch_var;
    Eigen::MatrixXd normalized;   // (u - mean) / sqrt(var + eps)
    Eigen::MatrixXd bn_out;
    Eigen::VectorXd out_pre;      // output-layer pre-activation
    Eigen::VectorXd predictions;
    bool training = false;
};

// --- core operations ----------------------------------------------------------

LstmState lstm_cell_forward(const Eigen::VectorXd& x_t, const LstmState& prev, const LstmParams& params,
                            Activation lstm_activation = Activation::tanh);

// Returns the final hidden state; per-step cache retained for backprop.
Eigen::VectorXd lstm_layer_forward(const Eigen::MatrixXd& sequence, const LstmParams& params,
                                   Activation lstm_activation, double dropout_rate,
                                   double recurrent_dropout_rate, bool training, Rng* rng,
                                   LstmSeqCache* cache);

Eigen::VectorXd bilstm_forward(const Eigen::MatrixXd& sequence, const LstmParams& fwd, const LstmParams& bwd,
                               Activation lstm_activation, double dropout_rate,
                               double recurrent_dropout_rate, bool training, Rng* rng,
                               LstmSeqCache* fwd_cache, LstmSeqCache* bwd_cache);

// Predicted log2 lifetime per example. Training mode uses batch statistics in
// the normalization layer and applies dropout (when rng given); inference mode
// uses running statistics and no dropout.
Eigen::VectorXd model_forward(std::span<const WindowedExample> batch, const ModelParams& params,
                              const ModelConfig& config, bool training, Rng* dropout_rng,
                              ForwardCache* cache);

void update_running_stats(ModelParams& params, const ForwardCache& cache);

double mse(const Eigen::VectorXd& y, const Eigen::VectorXd& y_hat);

// Gradients of mean squared error w.r.t. every trainable tensor.
ModelParams backward(std::span<const WindowedExample> batch, const ModelParams& params,
                     const ModelConfig& config, const ForwardCache& cache,
                     const Eigen::VectorXd& dloss_dpred);

class OptimizerState {
public:
    OptimizerState(Optimizer kind, double learning_rate);
    void step(ModelParams& params, const ModelParams& grads);

private:
    Optimizer kind_;
    double lr_;
    long t_ = 0;
    std::vector<Eigen::ArrayXd> acc1_, acc2_;
};

struct TrainConfig {
    int batch_size = 32;  // <= 0 trains on the full set each step
    int max_epochs = 5000;
    int patience = 1000;
    Optimizer optimizer = Optimizer::adam;
    double learning_rate = 1e-3;
    std::uint64_t seed = 0;
};

struct EpochStats {
    double train_mse = 0.0;
    double val_mse = 0.0;
};

struct TrainResult {
    ModelParams best_params;
    double best_val_mse = 0.0;
    int best_epoch = -1;   // 0-based
    int epochs_run = 0;
    std::vector<EpochStats> history;
};

// Minimizes MSE with early stopping on validation loss; returns the
// checkpointed parameters with the lowest validation MSE ever observed.
TrainResult train(const ModelConfig& config, const std::vector<WindowedExample>& train_set,
                  const std::vector<WindowedExample>& val_set, ModelParams initial,
                  const TrainConfig& cfg);

Eigen::VectorXd predict(std::span<const WindowedExample> examples, const ModelParams& params,
                        const ModelConfig& config);

}  // namespace steti::nn
