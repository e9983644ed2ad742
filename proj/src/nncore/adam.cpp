#include "bandsel/adam.hpp"

#include "bandsel/errors.hpp"

#include <cmath>

namespace bandsel::nn {

AdamState make_adam_state(std::span<Parameter* const> params)
{
    AdamState s;
    for (const Parameter* p : params) {
        s.first_moment.emplace_back(p->value.shape());
        s.second_moment.emplace_back(p->value.shape());
    }
    return s;
}

void adam_step(std::span<Parameter* const> params, AdamState& state, double learning_rate)
{
    if (!(learning_rate > 0.0))
        throw ConfigError("Adam learning rate must be > 0");
    if (params.size() != state.first_moment.size() || params.size() != state.second_moment.size())
        throw DimensionError("Adam state holds " + std::to_string(state.first_moment.size()) + " moments for " +
                             std::to_string(params.size()) + " parameters");
    for (std::size_t i = 0; i < params.size(); ++i) {
        const Parameter& p = *params[i];
        if (p.grad.shape() != p.value.shape() || state.first_moment[i].shape() != p.value.shape())
            throw DimensionError("Adam: shape mismatch for parameter '" + p.name + "'");
        if (!p.grad.all_finite())
            throw NumericError("Adam: non-finite gradient in parameter '" + p.name + "'");
    }

    state.step_count += 1;
    const double t = double(state.step_count);
    const double c1 = 1.0 - std::pow(state.beta1, t);
    const double c2 = 1.0 - std::pow(state.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        Parameter& p = *params[i];
        Tensor& m = state.first_moment[i];
        Tensor& v = state.second_moment[i];
        for (std::size_t j = 0; j < p.value.size(); ++j) {
            const double g = p.grad[j];
            m[j] = state.beta1 * m[j] + (1.0 - state.beta1) * g;
            v[j] = state.beta2 * v[j] + (1.0 - state.beta2) * g * g;
            const double mhat = m[j] / c1;
            const double vhat = v[j] / c2;
            p.value[j] -= learning_rate * mhat / (std::sqrt(vhat) + state.epsilon);
        }
    }
}

}  // namespace bandsel::nn
