#pragma once

#include "bandsel/kernels.hpp"
#include "bandsel/rng.hpp"
#include "bandsel/tensor.hpp"

#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace bandsel::nn {

enum class Activation { identity, relu, sigmoid };

std::string_view to_string(Activation a);
void apply_activation(Activation a, std::span<double> values);
/// grad *= activation'(pre) expressed through the activated output.
void activation_backward(Activation a, std::span<const double> output, std::span<double> grad);

/// A trainable tensor and its accumulated gradient.
struct Parameter {
    std::string name;
    Tensor value;
    Tensor grad;
};

/// Layer with retained forward state for a single reverse pass.
///
/// `infer` is const and thread-safe; `forward` additionally caches what
/// `backward` needs. `backward` accumulates into each Parameter::grad and
/// returns the gradient w.r.t. the layer input.
class Layer {
public:
    virtual ~Layer() = default;

    virtual Tensor infer(const Tensor& input) const = 0;
    virtual Tensor forward(const Tensor& input) = 0;
    virtual Tensor backward(const Tensor& grad_output) = 0;
    virtual std::vector<Parameter*> parameters() { return {}; }
    virtual std::string describe() const = 0;
};

/// output = activation(input * weights + bias); weights are [in_dim x out_dim].
/// Inputs of any rank >= 2 are flattened past the batch axis.
class DenseLayer : public Layer {
public:
    DenseLayer(std::size_t in_dim, std::size_t out_dim, Activation act, std::string name = "dense");

    std::size_t in_dim() const { return in_dim_; }
    std::size_t out_dim() const { return out_dim_; }
    Activation activation() const { return act_; }
    Tensor& weights() { return weights_.value; }
    Tensor& bias() { return bias_.value; }
    const Tensor& weights() const { return weights_.value; }
    const Tensor& bias() const { return bias_.value; }

    void init_glorot(Rng& rng);

    Tensor infer(const Tensor& input) const override;
    Tensor forward(const Tensor& input) override;
    Tensor backward(const Tensor& grad_output) override;
    std::vector<Parameter*> parameters() override { return {&weights_, &bias_}; }
    std::string describe() const override;

private:
    std::size_t check_input(const Tensor& input) const;

    std::size_t in_dim_, out_dim_;
    Activation act_;
    Parameter weights_, bias_;
    Tensor input_, output_;
    bool has_forward_ = false;
};

/// Zero-padded "same" 2-D convolution on NHWC tensors.
///
/// Ordinary layers map in_ch -> out_ch with kernels [kh x kw x in_ch x out_ch]
/// and output ceil(h/stride). Transposed layers map in_ch -> out_ch with
/// output h*stride and store their kernels as [kh x kw x out_ch x in_ch],
/// the layout of the forward convolution they are the adjoint of.
class Conv2DLayer : public Layer {
public:
    Conv2DLayer(std::size_t kh, std::size_t kw, std::size_t in_ch, std::size_t out_ch, Activation act,
                std::size_t stride = 1, bool transposed = false, std::string name = "conv");

    std::size_t in_channels() const { return in_ch_; }
    std::size_t out_channels() const { return out_ch_; }
    bool transposed() const { return transposed_; }
    std::size_t stride() const { return stride_; }
    Activation activation() const { return act_; }
    Tensor& kernels() { return kernels_.value; }
    Tensor& bias() { return bias_.value; }
    const Tensor& kernels() const { return kernels_.value; }
    const Tensor& bias() const { return bias_.value; }

    void init_glorot(Rng& rng);
    Shape output_shape(const Shape& input) const;

    Tensor infer(const Tensor& input) const override;
    Tensor forward(const Tensor& input) override;
    Tensor backward(const Tensor& grad_output) override;
    std::vector<Parameter*> parameters() override { return {&kernels_, &bias_}; }
    std::string describe() const override;

private:
    kernels::ConvGeometry geometry(const Shape& input) const;
    void check_input(const Tensor& input) const;

    std::size_t kh_, kw_, in_ch_, out_ch_, stride_;
    Activation act_;
    bool transposed_;
    Parameter kernels_, bias_;
    Tensor input_, output_;
    bool has_forward_ = false;
};

/// Spatial average per channel: [batch x h x w x ch] -> [batch x 1 x 1 x ch].
class GlobalPoolLayer : public Layer {
public:
    Tensor infer(const Tensor& input) const override;
    Tensor forward(const Tensor& input) override;
    Tensor backward(const Tensor& grad_output) override;
    std::string describe() const override { return "global_avg_pool"; }

private:
    Shape input_shape_;
    bool has_forward_ = false;
};

Tensor dense_forward(const DenseLayer& layer, const Tensor& input);
Tensor conv2d_forward(const Conv2DLayer& layer, const Tensor& input);
Tensor global_pool(const Tensor& input);

/// Ordered stack of layers; backward runs them in reverse.
class Sequential {
public:
    Sequential() = default;
    Sequential(Sequential&&) noexcept = default;
    Sequential& operator=(Sequential&&) noexcept = default;

    template <typename L, typename... Args>
    L& add(Args&&... args)
    {
        auto layer = std::make_unique<L>(std::forward<Args>(args)...);
        L& ref = *layer;
        layers_.push_back(std::move(layer));
        return ref;
    }

    std::size_t size() const { return layers_.size(); }
    Layer& operator[](std::size_t i) { return *layers_[i]; }
    const Layer& operator[](std::size_t i) const { return *layers_[i]; }

    Tensor infer(const Tensor& input) const;
    Tensor forward(const Tensor& input);
    Tensor backward(const Tensor& grad_output);

    std::vector<Parameter*> parameters();
    void zero_grad();
    std::size_t parameter_count();

private:
    std::vector<std::unique_ptr<Layer>> layers_;
};

}  // namespace bandsel::nn
