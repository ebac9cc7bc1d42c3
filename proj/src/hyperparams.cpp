#include "steti/hyperparams.hpp"

#include "steti/common.hpp"

namespace steti {

std::string to_string(Optimizer o) {
    switch (o) {
        case Optimizer::adam: return "adam";
        case Optimizer::adadelta: return "adadelta";
        case Optimizer::rmsprop: return "rmsprop";
    }
    return "adam";
}

std::string to_string(Activation a) {
    switch (a) {
        case Activation::linear: return "linear";
        case Activation::sigmoid: return "sigmoid";
        case Activation::tanh: return "tanh";
        case Activation::relu: return "relu";
    }
    return "linear";
}

Optimizer optimizer_from_string(const std::string& s) {
    if (s == "adam") return Optimizer::adam;
    if (s == "adadelta") return Optimizer::adadelta;
    if (s == "rmsprop") return Optimizer::rmsprop;
    throw ValidationError("unknown optimizer '" + s + "' (expected adam, adadelta or rmsprop)");
}

Activation activation_from_string(const std::string& s) {
    if (s == "linear") return Activation::linear;
    if (s == "sigmoid") return Activation::sigmoid;
    if (s == "tanh") return Activation::tanh;
    if (s == "relu") return Activation::relu;
    throw ValidationError("unknown activation '" + s + "'");
}

HyperParams default_hyperparams(bool time_plus) {
    HyperParams hp;
    hp.learning_rate = 1e-3;
    hp.optimizer = Optimizer::adam;
    hp.dropout_rate = 0.0;
    hp.recurrent_dropout_rate = 0.0;
    hp.lstm_activation = Activation::tanh;
    hp.output_activation = Activation::linear;
    hp.bidirectional = false;
    hp.window_size = 5;
    if (time_plus) hp.window_size_funding = 5;
    return hp;
}

}  // namespace steti
