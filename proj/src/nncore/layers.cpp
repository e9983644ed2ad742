#include "bandsel/layers.hpp"

#include "bandsel/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace bandsel::nn {

namespace {

// Keeps sigmoid outputs strictly inside (0, 1) even when saturated.
constexpr double kSigmoidLo = std::numeric_limits<double>::min();
constexpr double kSigmoidHi = 1.0 - 0x1.0p-53;

double sigmoid(double v)
{
    double s;
    if (v >= 0.0) {
        s = 1.0 / (1.0 + std::exp(-v));
    } else {
        const double e = std::exp(v);
        s = e / (1.0 + e);
    }
    return std::clamp(s, kSigmoidLo, kSigmoidHi);
}

void require_forward(bool has_forward, const std::string& name)
{
    if (!has_forward)
        throw StateError("backward called on '" + name + "' before forward");
}

void glorot_fill(Tensor& t, std::size_t fan_in, std::size_t fan_out, Rng& rng)
{
    const double limit = std::sqrt(6.0 / double(fan_in + fan_out));
    for (double& v : t.values())
        v = rng.uniform(-limit, limit);
}

}  // namespace

std::string_view to_string(Activation a)
{
    switch (a) {
    case Activation::identity:
        return "identity";
    case Activation::relu:
        return "relu";
    case Activation::sigmoid:
        return "sigmoid";
    }
    return "?";
}

void apply_activation(Activation a, std::span<double> values)
{
    switch (a) {
    case Activation::identity:
        break;
    case Activation::relu:
        for (double& v : values)
            v = v > 0.0 ? v : 0.0;
        break;
    case Activation::sigmoid:
        for (double& v : values)
            v = sigmoid(v);
        break;
    }
}

void activation_backward(Activation a, std::span<const double> output, std::span<double> grad)
{
    switch (a) {
    case Activation::identity:
        break;
    case Activation::relu:
        for (std::size_t i = 0; i < grad.size(); ++i)
            if (!(output[i] > 0.0))
                grad[i] = 0.0;
        break;
    case Activation::sigmoid:
        for (std::size_t i = 0; i < grad.size(); ++i)
            grad[i] *= output[i] * (1.0 - output[i]);
        break;
    }
}

// ---------------------------------------------------------------- dense

DenseLayer::DenseLayer(std::size_t in_dim, std::size_t out_dim, Activation act, std::string name)
    : in_dim_(in_dim), out_dim_(out_dim), act_(act),
      weights_{name + ".weights", Tensor({in_dim, out_dim}), Tensor({in_dim, out_dim})},
      bias_{name + ".bias", Tensor({out_dim}), Tensor({out_dim})}
{
    if (in_dim == 0 || out_dim == 0)
        throw DimensionError("dense layer '" + name + "' needs non-zero dimensions");
}

void DenseLayer::init_glorot(Rng& rng)
{
    glorot_fill(weights_.value, in_dim_, out_dim_, rng);
    bias_.value.fill(0.0);
}

std::size_t DenseLayer::check_input(const Tensor& input) const
{
    if (input.rank() < 2 || row_stride(input) != in_dim_)
        throw DimensionError("dense layer '" + weights_.name + "' expects [batch x " + std::to_string(in_dim_) +
                             "], got " + shape_string(input.shape()));
    return input.dim(0);
}

Tensor DenseLayer::infer(const Tensor& input) const
{
    const std::size_t batch = check_input(input);
    Tensor out({batch, out_dim_});
    kernels::dense_forward(input.values(), weights_.value.values(), bias_.value.values(), out.values(), batch,
                           in_dim_, out_dim_);
    apply_activation(act_, out.values());
    return out;
}

Tensor DenseLayer::forward(const Tensor& input)
{
    output_ = infer(input);
    input_ = input;
    has_forward_ = true;
    return output_;
}

Tensor DenseLayer::backward(const Tensor& grad_output)
{
    require_forward(has_forward_, weights_.name);
    if (grad_output.shape() != output_.shape())
        throw DimensionError("dense backward: gradient " + shape_string(grad_output.shape()) + " vs output " +
                             shape_string(output_.shape()));
    const std::size_t batch = input_.dim(0);
    Tensor g = grad_output;
    activation_backward(act_, output_.values(), g.values());
    kernels::dense_backward_params(input_.values(), g.values(), weights_.grad.values(), bias_.grad.values(), batch,
                                   in_dim_, out_dim_);
    Tensor gx(input_.shape());
    kernels::dense_backward_input(g.values(), weights_.value.values(), gx.values(), batch, in_dim_, out_dim_);
    return gx;
}

std::string DenseLayer::describe() const
{
    return "dense " + std::to_string(in_dim_) + "->" + std::to_string(out_dim_) + " " +
           std::string(to_string(act_));
}

// ---------------------------------------------------------------- conv

Conv2DLayer::Conv2DLayer(std::size_t kh, std::size_t kw, std::size_t in_ch, std::size_t out_ch, Activation act,
                         std::size_t stride, bool transposed, std::string name)
    : kh_(kh), kw_(kw), in_ch_(in_ch), out_ch_(out_ch), stride_(stride), act_(act), transposed_(transposed)
{
    if (kh % 2 == 0 || kw % 2 == 0)
        throw DimensionError("conv layer '" + name + "': kernel sizes must be odd");
    if (stride == 0)
        throw DimensionError("conv layer '" + name + "': stride must be >= 1");
    if (in_ch == 0 || out_ch == 0)
        throw DimensionError("conv layer '" + name + "': channel counts must be non-zero");
    Shape kshape = transposed ? Shape{kh, kw, out_ch, in_ch} : Shape{kh, kw, in_ch, out_ch};
    kernels_ = {name + ".kernels", Tensor(kshape), Tensor(kshape)};
    bias_ = {name + ".bias", Tensor({out_ch}), Tensor({out_ch})};
}

void Conv2DLayer::init_glorot(Rng& rng)
{
    glorot_fill(kernels_.value, kh_ * kw_ * in_ch_, kh_ * kw_ * out_ch_, rng);
    bias_.value.fill(0.0);
}

void Conv2DLayer::check_input(const Tensor& input) const
{
    if (input.rank() != 4 || input.dim(3) != in_ch_)
        throw DimensionError("conv layer '" + kernels_.name + "' expects [batch x h x w x " + std::to_string(in_ch_) +
                             "], got " + shape_string(input.shape()));
    if (input.dim(1) == 0 || input.dim(2) == 0)
        throw DimensionError("conv layer '" + kernels_.name + "': empty spatial extent");
}

kernels::ConvGeometry Conv2DLayer::geometry(const Shape& in) const
{
    if (!transposed_)
        return kernels::same_geometry(in[0], in[1], in[2], in_ch_, out_ch_, kh_, kw_, stride_);
    // The forward convolution whose adjoint this layer computes: large grid -> small grid.
    return kernels::same_geometry(in[0], in[1] * stride_, in[2] * stride_, out_ch_, in_ch_, kh_, kw_, stride_);
}

Shape Conv2DLayer::output_shape(const Shape& in) const
{
    if (transposed_)
        return {in[0], in[1] * stride_, in[2] * stride_, out_ch_};
    const auto g = geometry(in);
    return {in[0], g.out_h, g.out_w, out_ch_};
}

Tensor Conv2DLayer::infer(const Tensor& input) const
{
    check_input(input);
    const auto g = geometry(input.shape());
    Tensor out(output_shape(input.shape()));
    if (!transposed_) {
        kernels::conv_forward(input.values(), kernels_.value.values(), bias_.value.values(), out.values(), g);
    } else {
        kernels::conv_backward_input(input.values(), kernels_.value.values(), out.values(), g);
        const std::size_t positions = out.size() / out_ch_;
        for (std::size_t p = 0; p < positions; ++p)
            for (std::size_t c = 0; c < out_ch_; ++c)
                out[p * out_ch_ + c] += bias_.value[c];
    }
    apply_activation(act_, out.values());
    return out;
}

Tensor Conv2DLayer::forward(const Tensor& input)
{
    output_ = infer(input);
    input_ = input;
    has_forward_ = true;
    return output_;
}

Tensor Conv2DLayer::backward(const Tensor& grad_output)
{
    require_forward(has_forward_, kernels_.name);
    if (grad_output.shape() != output_.shape())
        throw DimensionError("conv backward: gradient " + shape_string(grad_output.shape()) + " vs output " +
                             shape_string(output_.shape()));
    Tensor g = grad_output;
    activation_backward(act_, output_.values(), g.values());
    const auto geo = geometry(input_.shape());
    Tensor gx(input_.shape());
    if (!transposed_) {
        kernels::conv_backward_kernel(input_.values(), g.values(), kernels_.grad.values(), bias_.grad.values(), geo);
        kernels::conv_backward_input(g.values(), kernels_.value.values(), gx.values(), geo);
    } else {
        // Output gradient lives on the large grid (the adjoint conv's input).
        kernels::conv_backward_kernel(g.values(), input_.values(), kernels_.grad.values(), {}, geo);
        kernels::conv_forward(g.values(), kernels_.value.values(), {}, gx.values(), geo);
        const std::size_t positions = g.size() / out_ch_;
        for (std::size_t p = 0; p < positions; ++p)
            for (std::size_t c = 0; c < out_ch_; ++c)
                bias_.grad[c] += g[p * out_ch_ + c];
    }
    return gx;
}

std::string Conv2DLayer::describe() const
{
    return std::string(transposed_ ? "deconv " : "conv ") + std::to_string(kh_) + "x" + std::to_string(kw_) + "x" +
           std::to_string(out_ch_) + " " + std::string(to_string(act_));
}

// ---------------------------------------------------------------- pool

Tensor GlobalPoolLayer::infer(const Tensor& input) const
{
    if (input.rank() != 4 || input.dim(1) == 0 || input.dim(2) == 0)
        throw DimensionError("global pool expects [batch x h x w x ch] with h, w >= 1, got " +
                             shape_string(input.shape()));
    const auto& s = input.shape();
    Tensor out({s[0], 1, 1, s[3]});
    kernels::global_mean_pool(input.values(), out.values(), s[0], s[1], s[2], s[3]);
    return out;
}

Tensor GlobalPoolLayer::forward(const Tensor& input)
{
    Tensor out = infer(input);
    input_shape_ = input.shape();
    has_forward_ = true;
    return out;
}

Tensor GlobalPoolLayer::backward(const Tensor& grad_output)
{
    require_forward(has_forward_, "global_pool");
    const auto& s = input_shape_;
    if (grad_output.size() != s[0] * s[3])
        throw DimensionError("global pool backward: gradient " + shape_string(grad_output.shape()));
    const std::size_t area = s[1] * s[2];
    const double scale = 1.0 / double(area);
    Tensor gx(s);
    for (std::size_t n = 0; n < s[0]; ++n)
        for (std::size_t p = 0; p < area; ++p)
            for (std::size_t c = 0; c < s[3]; ++c)
                gx[(n * area + p) * s[3] + c] = grad_output[n * s[3] + c] * scale;
    return gx;
}

Tensor dense_forward(const DenseLayer& layer, const Tensor& input) { return layer.infer(input); }
Tensor conv2d_forward(const Conv2DLayer& layer, const Tensor& input) { return layer.infer(input); }
Tensor global_pool(const Tensor& input) { return GlobalPoolLayer{}.infer(input); }

// ---------------------------------------------------------------- sequential

Tensor Sequential::infer(const Tensor& input) const
{
    Tensor x = input;
    for (const auto& l : layers_)
        x = l->infer(x);
    return x;
}

Tensor Sequential::forward(const Tensor& input)
{
    Tensor x = input;
    for (auto& l : layers_)
        x = l->forward(x);
    return x;
}

Tensor Sequential::backward(const Tensor& grad_output)
{
    Tensor g = grad_output;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it)
        g = (*it)->backward(g);
    return g;
}

std::vector<Parameter*> Sequential::parameters()
{
    std::vector<Parameter*> out;
    for (auto& l : layers_)
        for (Parameter* p : l->parameters())
            out.push_back(p);
    return out;
}

void Sequential::zero_grad()
{
    for (Parameter* p : parameters())
        p->grad.fill(0.0);
}

std::size_t Sequential::parameter_count()
{
    std::size_t n = 0;
    for (Parameter* p : parameters())
        n += p->value.size();
    return n;
}

}  // namespace bandsel::nn
