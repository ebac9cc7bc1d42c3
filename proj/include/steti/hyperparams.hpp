#pragma once

#include <optional>
#include <string>

namespace steti {

enum class Optimizer { adam, adadelta, rmsprop };
enum class Activation { linear, sigmoid, tanh, relu };

std::string to_string(Optimizer o);
std::string to_string(Activation a);
Optimizer optimizer_from_string(const std::string& s);
Activation activation_from_string(const std::string& s);

// The nine tunable knobs. window_size_funding is only meaningful for
// time-plus models and is absent otherwise.
struct HyperParams {
    double learning_rate = 1e-3;
    Optimizer optimizer = Optimizer::adam;
    double dropout_rate = 0.0;
    double recurrent_dropout_rate = 0.0;
    Activation lstm_activation = Activation::tanh;
    Activation output_activation = Activation::linear;
    bool bidirectional = false;
    int window_size = 5;
    std::optional<int> window_size_funding;
};

// Documented defaults used for the non-tuned grid rows.
HyperParams default_hyperparams(bool time_plus);

}  // namespace steti
