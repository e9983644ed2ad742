#pragma once

// Attention-based band selection networks.
//
// A band attention module (BAM) maps each sample to a per-band gate in (0,1);
// the sample is re-weighted band-wise by that gate (BRW) and a reconstruction
// network (RecNet) restores the full spectrum from the re-weighted input.
// Training minimizes reconstruction MSE plus an L1 penalty on the gates, and
// bands are ranked by their gate averaged over all training samples.

#include "bandsel/adam.hpp"
#include "bandsel/datahub.hpp"
#include "bandsel/layers.hpp"
#include "bandsel/selection.hpp"

#include <cstdint>
#include <functional>
#include <string_view>
#include <vector>

namespace bandsel::bsnet {

enum class Variant { fc, conv };

std::string_view to_string(Variant v);
Variant parse_variant(std::string_view s);

/// Layer widths of the fully connected variant (defaults: the Indian Pines configuration).
struct FcArchitecture {
    std::vector<std::size_t> bam_hidden{64, 128};
    std::vector<std::size_t> rec_hidden{64, 128, 256};
};

/// Channel counts of the convolutional variant (defaults: the Indian Pines configuration).
struct ConvArchitecture {
    std::size_t kernel = 3;
    std::size_t bam_conv = 64;
    std::size_t bam_fc = 128;
    std::size_t rec_conv1 = 128;
    std::size_t rec_conv2 = 64;
    std::size_t rec_deconv2 = 64;
    std::size_t rec_deconv1 = 128;
};

struct TrainConfig {
    double lambda = 1e-2;
    double learning_rate = 2e-3;
    std::size_t max_epochs = 100;
    /// 0 selects the variant default (64 for fc, 32 for conv).
    std::size_t batch_size = 0;
    std::uint64_t seed = 0;
    /// Length of SelectionResult::top_k (clamped to the band count).
    std::size_t top_k = 15;
    bool record_history = true;

    void validate() const;
};

std::size_t default_batch_size(Variant v);

/// Per-sample gates [S x b] and their per-band mean.
struct BandWeights {
    Tensor per_sample;
    std::vector<double> averaged;
};

class BsNetModel {
public:
    static BsNetModel make_fc(std::size_t bands, std::uint64_t seed, const FcArchitecture& arch = {});
    static BsNetModel make_conv(std::size_t bands, std::uint64_t seed, const ConvArchitecture& arch = {});

    Variant variant() const { return variant_; }
    std::size_t bands() const { return bands_; }

    nn::Sequential& bam() { return bam_; }
    nn::Sequential& rec() { return rec_; }
    const nn::Sequential& bam() const { return bam_; }
    const nn::Sequential& rec() const { return rec_; }
    nn::AdamState& adam() { return adam_; }

    /// BAM parameters first, then RecNet parameters.
    std::vector<nn::Parameter*> parameters();
    std::size_t parameter_count();
    void zero_grad();
    /// Sets every weight and bias to zero.
    void zero_parameters();

    /// Throws DimensionError unless `batch` is [S x b] (fc) or [S x a x a x b] (conv).
    void check_batch(const Tensor& batch) const;

private:
    BsNetModel(Variant v, std::size_t bands) : variant_(v), bands_(bands) {}

    Variant variant_;
    std::size_t bands_;
    nn::Sequential bam_, rec_;
    nn::AdamState adam_;
};

/// Gates for every sample, [S x b] in (0,1). Read-only on the model.
Tensor bam_forward(const BsNetModel& model, const Tensor& batch);
/// z = x (x) w: element-wise for pixels, each gate broadcast over its patch for patches.
Tensor brw(const Tensor& batch, const Tensor& weights);
/// Reconstruction of a re-weighted batch; same shape as the original input.
Tensor recnet_forward(const BsNetModel& model, const Tensor& z);

/// (1/(2S')) sum ||x_i - xhat_i||^2 + lambda (1/S') sum ||w_i||_1 over a batch of S' samples.
double loss(const Tensor& x, const Tensor& reconstruction, const Tensor& weights, double lambda);

struct Gradients {
    double loss = 0.0;
    /// dL/d(input batch): BAM path, BRW path and the reconstruction target.
    Tensor input;
};

/// Full forward + reverse pass on one batch. Parameter gradients are
/// overwritten (not accumulated) in model.parameters().
Gradients loss_and_gradients(BsNetModel& model, const Tensor& batch, double lambda);

/// Column means of a [S x b] gate matrix.
std::vector<double> average_band_weights(const Tensor& per_sample);
BandWeights band_weights(const BsNetModel& model, const Tensor& samples);

struct TrainOutcome {
    BsNetModel model;
    SelectionResult result;
};

/// Called after every epoch with (epoch starting at 1, mean training loss).
using EpochCallback = std::function<void(std::size_t, double)>;

/// Mini-batch Adam on shuffled epochs. The variant must match the sample kind
/// (fc <-> pixels, conv <-> patches). Throws NumericError on a non-finite loss.
TrainOutcome train(const data::SampleSet& data, Variant variant, const TrainConfig& cfg,
                   const FcArchitecture& fc_arch = {}, const ConvArchitecture& conv_arch = {},
                   const EpochCallback& on_epoch = {});

nlohmann::json config_json(Variant variant, const TrainConfig& cfg);

}  // namespace bandsel::bsnet
