#include "bandsel/bsnet.hpp"

#include "bandsel/errors.hpp"
#include "bandsel/rng.hpp"

#include <cmath>
#include <numeric>

namespace bandsel::bsnet {

using nn::Activation;

std::string_view to_string(Variant v) { return v == Variant::fc ? "fc" : "conv"; }

Variant parse_variant(std::string_view s)
{
    if (s == "fc")
        return Variant::fc;
    if (s == "conv")
        return Variant::conv;
    throw ConfigError("unknown variant '" + std::string(s) + "' (expected fc or conv)");
}

std::size_t default_batch_size(Variant v) { return v == Variant::fc ? 64 : 32; }

void TrainConfig::validate() const
{
    if (!(lambda >= 0.0) || !std::isfinite(lambda))
        throw ConfigError("lambda must be a finite value >= 0");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
        throw ConfigError("learning rate must be > 0");
    if (max_epochs < 1)
        throw ConfigError("maxiter must be >= 1");
    if (top_k < 1)
        throw ConfigError("k must be >= 1");
}

// ---------------------------------------------------------------- model

BsNetModel BsNetModel::make_fc(std::size_t bands, std::uint64_t seed, const FcArchitecture& arch)
{
    if (bands == 0)
        throw ConfigError("BS-Net needs at least one band");
    BsNetModel m(Variant::fc, bands);
    Rng rng(seed);
    std::size_t width = bands;
    for (std::size_t i = 0; i < arch.bam_hidden.size(); ++i) {
        m.bam_.add<nn::DenseLayer>(width, arch.bam_hidden[i], Activation::relu, "bam.fc" + std::to_string(i + 1))
            .init_glorot(rng);
        width = arch.bam_hidden[i];
    }
    m.bam_.add<nn::DenseLayer>(width, bands, Activation::sigmoid, "bam.fc" + std::to_string(arch.bam_hidden.size() + 1))
        .init_glorot(rng);

    width = bands;
    for (std::size_t i = 0; i < arch.rec_hidden.size(); ++i) {
        m.rec_.add<nn::DenseLayer>(width, arch.rec_hidden[i], Activation::relu, "rec.fc" + std::to_string(i + 1))
            .init_glorot(rng);
        width = arch.rec_hidden[i];
    }
    m.rec_.add<nn::DenseLayer>(width, bands, Activation::sigmoid, "rec.fc" + std::to_string(arch.rec_hidden.size() + 1))
        .init_glorot(rng);
    m.adam_ = nn::make_adam_state(m.parameters());
    return m;
}

BsNetModel BsNetModel::make_conv(std::size_t bands, std::uint64_t seed, const ConvArchitecture& a)
{
    if (bands == 0)
        throw ConfigError("BS-Net needs at least one band");
    BsNetModel m(Variant::conv, bands);
    Rng rng(seed);
    const std::size_t k = a.kernel;
    m.bam_.add<nn::Conv2DLayer>(k, k, bands, a.bam_conv, Activation::relu, 1, false, "bam.conv1").init_glorot(rng);
    m.bam_.add<nn::GlobalPoolLayer>();
    m.bam_.add<nn::DenseLayer>(a.bam_conv, a.bam_fc, Activation::relu, "bam.fc1").init_glorot(rng);
    m.bam_.add<nn::DenseLayer>(a.bam_fc, bands, Activation::sigmoid, "bam.fc2").init_glorot(rng);

    m.rec_.add<nn::Conv2DLayer>(k, k, bands, a.rec_conv1, Activation::relu, 1, false, "rec.conv1_1").init_glorot(rng);
    m.rec_.add<nn::Conv2DLayer>(k, k, a.rec_conv1, a.rec_conv2, Activation::relu, 1, false, "rec.conv1_2")
        .init_glorot(rng);
    m.rec_.add<nn::Conv2DLayer>(k, k, a.rec_conv2, a.rec_deconv2, Activation::relu, 1, true, "rec.deconv1_2")
        .init_glorot(rng);
    m.rec_.add<nn::Conv2DLayer>(k, k, a.rec_deconv2, a.rec_deconv1, Activation::relu, 1, true, "rec.deconv1_1")
        .init_glorot(rng);
    m.rec_.add<nn::Conv2DLayer>(1, 1, a.rec_deconv1, bands, Activation::sigmoid, 1, false, "rec.conv2_1")
        .init_glorot(rng);
    m.adam_ = nn::make_adam_state(m.parameters());
    return m;
}

std::vector<nn::Parameter*> BsNetModel::parameters()
{
    auto out = bam_.parameters();
    for (nn::Parameter* p : rec_.parameters())
        out.push_back(p);
    return out;
}

std::size_t BsNetModel::parameter_count() { return bam_.parameter_count() + rec_.parameter_count(); }

void BsNetModel::zero_grad()
{
    bam_.zero_grad();
    rec_.zero_grad();
}

void BsNetModel::zero_parameters()
{
    for (nn::Parameter* p : parameters())
        p->value.fill(0.0);
}

void BsNetModel::check_batch(const Tensor& batch) const
{
    const bool ok = variant_ == Variant::fc ? batch.rank() == 2 && batch.dim(1) == bands_
                                            : batch.rank() == 4 && batch.dim(3) == bands_;
    if (!ok)
        throw DimensionError(std::string("BS-Net-") + std::string(to_string(variant_)) + " with " +
                             std::to_string(bands_) + " bands cannot take a batch shaped " +
                             shape_string(batch.shape()));
    if (batch.dim(0) == 0)
        throw DimensionError("empty batch");
}

// ---------------------------------------------------------------- ops

Tensor bam_forward(const BsNetModel& model, const Tensor& batch)
{
    model.check_batch(batch);
    return model.bam().infer(batch);
}

Tensor brw(const Tensor& batch, const Tensor& weights)
{
    if (batch.rank() < 2 || weights.rank() != 2 || weights.dim(0) != batch.dim(0) ||
        weights.dim(1) != batch.dim(batch.rank() - 1))
        throw DimensionError("band re-weighting: weights " + shape_string(weights.shape()) +
                             " do not match batch " + shape_string(batch.shape()));
    const std::size_t n = batch.dim(0);
    const std::size_t bands = weights.dim(1);
    const std::size_t per_sample = row_stride(batch);
    Tensor z(batch.shape());
    for (std::size_t i = 0; i < n; ++i) {
        const double* w = weights.data() + i * bands;
        for (std::size_t s = 0; s < per_sample; s += bands)
            for (std::size_t b = 0; b < bands; ++b)
                z[i * per_sample + s + b] = batch[i * per_sample + s + b] * w[b];
    }
    return z;
}

Tensor recnet_forward(const BsNetModel& model, const Tensor& z)
{
    model.check_batch(z);
    return model.rec().infer(z);
}

double loss(const Tensor& x, const Tensor& reconstruction, const Tensor& weights, double lambda)
{
    if (!(lambda >= 0.0))
        throw ConfigError("lambda must be >= 0");
    if (x.shape() != reconstruction.shape())
        throw DimensionError("loss: input " + shape_string(x.shape()) + " vs reconstruction " +
                             shape_string(reconstruction.shape()));
    if (weights.rank() != 2 || weights.dim(0) != x.dim(0))
        throw DimensionError("loss: weights " + shape_string(weights.shape()) + " for batch " +
                             shape_string(x.shape()));
    const double n = double(x.dim(0));
    double sq = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - reconstruction[i];
        sq += d * d;
    }
    double l1 = 0.0;
    for (double w : weights.values())
        l1 += std::abs(w);
    return sq / (2.0 * n) + lambda * l1 / n;
}

Gradients loss_and_gradients(BsNetModel& model, const Tensor& batch, double lambda)
{
    model.check_batch(batch);
    model.zero_grad();
    const Tensor w = model.bam().forward(batch);
    const Tensor z = brw(batch, w);
    const Tensor xhat = model.rec().forward(z);

    Gradients out;
    out.loss = loss(batch, xhat, w, lambda);
    if (!std::isfinite(out.loss))
        throw NumericError("non-finite loss");

    const std::size_t n = batch.dim(0);
    const double inv_n = 1.0 / double(n);
    Tensor g_xhat(xhat.shape());
    for (std::size_t i = 0; i < g_xhat.size(); ++i)
        g_xhat[i] = (xhat[i] - batch[i]) * inv_n;
    const Tensor g_z = model.rec().backward(g_xhat);

    // dL/dw through BRW, plus the L1 subgradient.
    const std::size_t bands = model.bands();
    const std::size_t per_sample = row_stride(batch);
    Tensor g_w(w.shape());
    Tensor g_x_brw(batch.shape());
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t b = 0; b < bands; ++b) {
            const double wv = w[i * bands + b];
            double acc = 0.0;
            for (std::size_t s = b; s < per_sample; s += bands) {
                const std::size_t at = i * per_sample + s;
                acc += g_z[at] * batch[at];
                g_x_brw[at] = g_z[at] * wv;
            }
            const double sign = wv > 0.0 ? 1.0 : (wv < 0.0 ? -1.0 : 0.0);
            g_w[i * bands + b] = acc + lambda * inv_n * sign;
        }
    Tensor g_x = model.bam().backward(g_w);
    // x also enters the loss as the reconstruction target.
    for (std::size_t i = 0; i < g_x.size(); ++i)
        g_x[i] += g_x_brw[i] - g_xhat[i];
    out.input = std::move(g_x);
    return out;
}

std::vector<double> average_band_weights(const Tensor& per_sample)
{
    if (per_sample.rank() != 2 || per_sample.dim(0) == 0)
        throw DimensionError("average_band_weights expects a non-empty [S x b] matrix, got " +
                             shape_string(per_sample.shape()));
    const std::size_t s = per_sample.dim(0), b = per_sample.dim(1);
    std::vector<double> mean(b, 0.0);
    for (std::size_t i = 0; i < s; ++i)
        for (std::size_t j = 0; j < b; ++j)
            mean[j] += per_sample[i * b + j];
    for (double& m : mean)
        m /= double(s);
    return mean;
}

BandWeights band_weights(const BsNetModel& model, const Tensor& samples)
{
    model.check_batch(samples);
    // Chunked so conv activations for large patch sets stay bounded.
    constexpr std::size_t chunk = 256;
    const std::size_t n = samples.dim(0);
    BandWeights out;
    out.per_sample = Tensor({n, model.bands()});
    for (std::size_t begin = 0; begin < n; begin += chunk) {
        const std::size_t end = std::min(n, begin + chunk);
        const Tensor w = bam_forward(model, samples.slice_rows(begin, end));
        std::copy(w.values().begin(), w.values().end(), out.per_sample.data() + begin * model.bands());
    }
    out.averaged = average_band_weights(out.per_sample);
    return out;
}

nlohmann::json config_json(Variant variant, const TrainConfig& cfg)
{
    return {{"variant", std::string(to_string(variant))},
            {"lambda", cfg.lambda},
            {"learning_rate", cfg.learning_rate},
            {"maxiter", cfg.max_epochs},
            {"batch_size", cfg.batch_size == 0 ? default_batch_size(variant) : cfg.batch_size},
            {"seed", cfg.seed},
            {"k", cfg.top_k}};
}

// ---------------------------------------------------------------- training

TrainOutcome train(const data::SampleSet& data, Variant variant, const TrainConfig& cfg,
                   const FcArchitecture& fc_arch, const ConvArchitecture& conv_arch, const EpochCallback& on_epoch)
{
    cfg.validate();
    const std::size_t n = data.count();
    if (n == 0)
        throw ConfigError("training set is empty");
    if ((variant == Variant::fc) != (data.kind == data::SampleKind::pixels))
        throw ConfigError(std::string("variant ") + std::string(to_string(variant)) +
                          (variant == Variant::fc ? " needs pixel samples" : " needs patch samples"));
    const std::size_t bands = data.bands();
    const std::size_t batch_size = cfg.batch_size == 0 ? default_batch_size(variant) : cfg.batch_size;

    BsNetModel model = variant == Variant::fc ? BsNetModel::make_fc(bands, cfg.seed, fc_arch)
                                              : BsNetModel::make_conv(bands, cfg.seed, conv_arch);
    const auto params = model.parameters();
    Rng shuffler(cfg.seed * 0x2545F4914F6CDD1DULL + 1);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    SelectionResult result;
    result.method = "bsnet-" + std::string(to_string(variant));
    result.config = config_json(variant, cfg);
    result.config["samples"] = n;
    result.config["bands"] = bands;

    for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        shuffler.shuffle(order);
        double epoch_loss = 0.0;
        for (std::size_t begin = 0; begin < n; begin += batch_size) {
            const std::size_t end = std::min(n, begin + batch_size);
            const Tensor batch =
                data.samples.gather_rows(std::span<const std::size_t>(order).subspan(begin, end - begin));
            double batch_loss;
            try {
                batch_loss = loss_and_gradients(model, batch, cfg.lambda).loss;
                nn::adam_step(params, model.adam(), cfg.learning_rate);
            } catch (const NumericError& e) {
                throw NumericError("training diverged at epoch " + std::to_string(epoch) + ": " + e.what());
            }
            epoch_loss += batch_loss * double(end - begin);
        }
        epoch_loss /= double(n);
        if (!std::isfinite(epoch_loss))
            throw NumericError("non-finite training loss at epoch " + std::to_string(epoch));
        result.loss_trace.push_back(epoch_loss);
        if (cfg.record_history || epoch == cfg.max_epochs)
            result.weights_history.push_back(band_weights(model, data.samples).averaged);
        if (on_epoch)
            on_epoch(epoch, epoch_loss);
    }
    if (!cfg.record_history && result.weights_history.size() == 1) {
        result.averaged_weights = result.weights_history.back();
        result.weights_history.clear();
    } else {
        result.averaged_weights = result.weights_history.back();
    }

    SelectionResult ranked = select_top_k(result.averaged_weights, std::min(cfg.top_k, bands));
    result.ranking = std::move(ranked.ranking);
    result.top_k = std::move(ranked.top_k);
    return {std::move(model), std::move(result)};
}

}  // namespace bandsel::bsnet
