#pragma once

#include "bandsel/layers.hpp"

#include <span>
#include <vector>

namespace bandsel::nn {

struct AdamState {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::size_t step_count = 0;
    std::vector<Tensor> first_moment;
    std::vector<Tensor> second_moment;
};

/// Moment buffers zero-initialized to match `params`.
AdamState make_adam_state(std::span<Parameter* const> params);

/// One bias-corrected Adam update of every parameter from its current grad.
/// Throws NumericError naming the first parameter with a non-finite gradient;
/// in that case nothing is modified.
void adam_step(std::span<Parameter* const> params, AdamState& state, double learning_rate);

}  // namespace bandsel::nn
