#include "doctest.h"
#include "oracles.hpp"

#include "bandsel/bsnet.hpp"
#include "bandsel/errors.hpp"

#include <cmath>
#include <sstream>

using namespace bandsel;
using namespace bandsel::bsnet;

namespace {

Tensor random_tensor(Shape shape, std::mt19937_64& g, double lo = 0.0, double hi = 1.0)
{
    const std::size_t n = shape_size(shape);
    return Tensor(std::move(shape), oracle::random_vector(n, g, lo, hi));
}

const FcArchitecture kTinyFc{{6, 5}, {4, 6, 5}};
const ConvArchitecture kTinyConv{3, 4, 5, 4, 3, 3, 4};

double full_loss(const BsNetModel& m, const Tensor& x, double lambda)
{
    const Tensor w = bam_forward(m, x);
    return loss(x, recnet_forward(m, brw(x, w)), w, lambda);
}

// Zero biases can park ReLU units exactly on their kink (e.g. behind a dead
// layer), where central differences are meaningless; randomize them.
void randomize_biases(BsNetModel& m, std::mt19937_64& g)
{
    for (nn::Parameter* p : m.parameters())
        if (p->value.rank() == 1)
            p->value = Tensor(p->value.shape(), oracle::random_vector(p->value.size(), g, -0.2, 0.2));
}

double gradient_error(BsNetModel& m, Tensor& x, double lambda, std::mt19937_64& rng)
{
    randomize_biases(m, rng);
    const Gradients g = loss_and_gradients(m, x, lambda);
    std::vector<std::pair<double*, double>> entries;
    for (nn::Parameter* p : m.parameters())
        for (std::size_t i = 0; i < p->value.size(); ++i)
            entries.emplace_back(&p->value[i], p->grad[i]);
    for (std::size_t i = 0; i < x.size(); ++i)
        entries.emplace_back(&x[i], g.input[i]);
    return oracle::max_gradient_error(entries, [&] { return full_loss(m, x, lambda); });
}

data::HsiCube small_synth(std::uint64_t seed, std::size_t bands = 12)
{
    data::SynthSpec spec;
    spec.rows = 12;
    spec.cols = 12;
    spec.bands = bands;
    spec.seed = seed;
    spec.informative = data::choose_informative(bands, 3, seed);
    return data::synth_generate(spec);
}

}  // namespace

TEST_CASE("model shapes follow the layer tables")
{
    BsNetModel fc = BsNetModel::make_fc(200, 1);
    REQUIRE(fc.bam().size() == 3);
    REQUIRE(fc.rec().size() == 4);
    const auto& last_bam = dynamic_cast<const nn::DenseLayer&>(fc.bam()[2]);
    CHECK(last_bam.out_dim() == 200);
    CHECK(last_bam.activation() == nn::Activation::sigmoid);
    const auto& first_rec = dynamic_cast<const nn::DenseLayer&>(fc.rec()[0]);
    CHECK(first_rec.in_dim() == 200);
    CHECK(first_rec.out_dim() == 64);
    CHECK(dynamic_cast<const nn::DenseLayer&>(fc.rec()[3]).out_dim() == 200);

    BsNetModel conv = BsNetModel::make_conv(200, 1);
    CHECK(conv.bam().size() == 4);
    CHECK(conv.rec().size() == 5);
    CHECK(dynamic_cast<const nn::Conv2DLayer&>(conv.rec()[2]).transposed());
    CHECK(dynamic_cast<const nn::Conv2DLayer&>(conv.rec()[4]).out_channels() == 200);
}

TEST_CASE("BAM gates")
{
    std::mt19937_64 g(1);
    BsNetModel m = BsNetModel::make_fc(20, 3, kTinyFc);
    const Tensor x = random_tensor({5, 20}, g);
    const Tensor gates = bam_forward(m, x);
    for (double w : gates.values()) {
        CHECK(w > 0.0);
        CHECK(w < 1.0);
    }
    m.zero_parameters();
    CHECK(bam_forward(m, x) == Tensor(gates.shape(), 0.5));
    CHECK_THROWS_AS(bam_forward(m, Tensor({5, 19})), DimensionError);

    BsNetModel c = BsNetModel::make_conv(6, 3, kTinyConv);
    const Tensor w = bam_forward(c, random_tensor({2, 5, 5, 6}, g));
    CHECK(w.shape() == Shape{2, 6});
    CHECK_THROWS_AS(bam_forward(c, Tensor({2, 5, 5, 7})), DimensionError);
}

TEST_CASE("BAM is bit-reproducible under a fixed seed")
{
    std::mt19937_64 g(5);
    const Tensor x = random_tensor({4, 200}, g);
    CHECK(bam_forward(BsNetModel::make_fc(200, 9), x) == bam_forward(BsNetModel::make_fc(200, 9), x));
    CHECK_FALSE(bam_forward(BsNetModel::make_fc(200, 9), x) == bam_forward(BsNetModel::make_fc(200, 10), x));
}

TEST_CASE("band re-weighting")
{
    std::mt19937_64 g(2);
    const Tensor x = random_tensor({2, 3}, g);
    CHECK(brw(x, Tensor({2, 3}, 1.0)) == x);
    CHECK(brw(x, Tensor({2, 3}, 0.0)) == Tensor({2, 3}, 0.0));
    const Tensor w = random_tensor({2, 3}, g);
    const Tensor z = brw(x, w);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 3; ++j)
            CHECK(z.at(i, j) == x.at(i, j) * w.at(i, j));

    // Patches: one gate per band, shared by every pixel of the sample.
    const Tensor p = random_tensor({2, 3, 3, 4}, g);
    const Tensor pw = random_tensor({2, 4}, g);
    const Tensor pz = brw(p, pw);
    for (std::size_t n = 0; n < 2; ++n)
        for (std::size_t y = 0; y < 3; ++y)
            for (std::size_t xx = 0; xx < 3; ++xx)
                for (std::size_t b = 0; b < 4; ++b)
                    CHECK(pz.at(n, y, xx, b) == p.at(n, y, xx, b) * pw.at(n, b));

    CHECK_THROWS_AS(brw(x, Tensor({2, 4})), DimensionError);
    CHECK_THROWS_AS(brw(x, Tensor({3, 3})), DimensionError);
}

TEST_CASE("RecNet output")
{
    std::mt19937_64 g(3);
    BsNetModel m = BsNetModel::make_fc(10, 4, kTinyFc);
    const Tensor z = random_tensor({6, 10}, g, -3, 3);
    const Tensor xhat = recnet_forward(m, z);
    CHECK(xhat.shape() == z.shape());
    for (double v : xhat.values()) {
        CHECK(v > 0.0);
        CHECK(v < 1.0);
    }
    m.zero_parameters();
    CHECK(recnet_forward(m, z) == Tensor(z.shape(), 0.5));
    CHECK_THROWS_AS(recnet_forward(m, Tensor({6, 11})), DimensionError);

    BsNetModel c = BsNetModel::make_conv(8, 4, kTinyConv);
    CHECK(recnet_forward(c, random_tensor({2, 7, 7, 8}, g)).shape() == Shape{2, 7, 7, 8});
}

TEST_CASE("loss")
{
    const Tensor x({1, 3}, 0.0);
    CHECK(loss(x, x, Tensor({1, 3}, 0.3), 0.0) == 0.0);
    Tensor xhat({1, 3}, 0.0);
    xhat[1] = 2.0;
    CHECK(loss(x, xhat, Tensor({1, 3}, 0.3), 0.0) == 2.0);
    CHECK_THROWS_AS(loss(x, xhat, Tensor({1, 3}), -1e-3), ConfigError);
    CHECK_THROWS_AS(loss(x, Tensor({1, 4}), Tensor({1, 3}), 0.0), DimensionError);

    std::mt19937_64 g(7);
    const std::size_t s = 5, b = 4;
    const Tensor rx = random_tensor({s, b}, g), rh = random_tensor({s, b}, g), rw = random_tensor({s, b}, g);
    const double lambda = 0.37;
    double mse = 0.0, l1 = 0.0;
    for (std::size_t i = 0; i < s; ++i) {
        double row = 0.0, wrow = 0.0;
        for (std::size_t j = 0; j < b; ++j) {
            row += (rx.at(i, j) - rh.at(i, j)) * (rx.at(i, j) - rh.at(i, j));
            wrow += std::abs(rw.at(i, j));
        }
        mse += row;
        l1 += wrow;
    }
    const double expect = mse / (2.0 * s) + lambda * l1 / s;
    CHECK(std::abs(loss(rx, rh, rw, lambda) - expect) < 1e-12);
    // Decomposition into reconstruction and sparsity terms.
    CHECK(std::abs(loss(rx, rh, rw, lambda) - (loss(rx, rh, rw, 0.0) + lambda * l1 / s)) < 1e-12);
}

TEST_CASE("loss gradients match central differences")
{
    std::mt19937_64 g(13);
    SUBCASE("fc")
    {
        for (std::uint64_t seed = 1; seed <= 3; ++seed) {
            BsNetModel m = BsNetModel::make_fc(7, seed, kTinyFc);
            Tensor x = random_tensor({4, 7}, g);
            CHECK(gradient_error(m, x, 0.05, g) < 1e-4);
        }
    }
    SUBCASE("conv")
    {
        BsNetModel m = BsNetModel::make_conv(3, 2, kTinyConv);
        Tensor x = random_tensor({2, 3, 3, 3}, g);
        CHECK(gradient_error(m, x, 0.05, g) < 1e-4);
    }
}

TEST_CASE("gradients are overwritten, not accumulated")
{
    std::mt19937_64 g(4);
    BsNetModel m = BsNetModel::make_fc(5, 1, kTinyFc);
    const Tensor x = random_tensor({3, 5}, g);
    loss_and_gradients(m, x, 0.01);
    std::vector<Tensor> first;
    for (nn::Parameter* p : m.parameters())
        first.push_back(p->grad);
    loss_and_gradients(m, x, 0.01);
    std::size_t i = 0;
    for (nn::Parameter* p : m.parameters())
        CHECK(p->grad == first[i++]);
}

TEST_CASE("average_band_weights")
{
    CHECK(average_band_weights(Tensor::from_rows({{0.2, 0.7, 0.1}})) == std::vector<double>{0.2, 0.7, 0.1});
    CHECK(average_band_weights(Tensor::from_rows({{0, 1}, {1, 0}})) == std::vector<double>{0.5, 0.5});
    std::mt19937_64 g(10);
    const Tensor w = random_tensor({100, 20}, g);
    const auto avg = average_band_weights(w);
    for (std::size_t j = 0; j < 20; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < 100; ++i)
            s += w.at(i, j);
        CHECK(std::abs(avg[j] - s / 100.0) < 1e-14);
    }
    CHECK_THROWS_AS(average_band_weights(Tensor({0, 3})), DimensionError);
}

TEST_CASE("band_weights covers every sample in chunks")
{
    std::mt19937_64 g(12);
    BsNetModel m = BsNetModel::make_fc(6, 2, kTinyFc);
    const Tensor x = random_tensor({600, 6}, g);
    const BandWeights bw = band_weights(m, x);
    CHECK(bw.per_sample == bam_forward(m, x));
    CHECK(bw.averaged == average_band_weights(bw.per_sample));
}

TEST_CASE("select_top_k")
{
    CHECK(select_top_k(std::vector<double>{0.1, 0.9, 0.5}, 2).top_k == std::vector<std::size_t>{1, 2});
    CHECK(select_top_k(std::vector<double>(5, 0.4), 3).top_k == std::vector<std::size_t>{0, 1, 2});
    CHECK_THROWS_AS(select_top_k(std::vector<double>{0.1, 0.2}, 0), ConfigError);
    CHECK_THROWS_AS(select_top_k(std::vector<double>{0.1, 0.2}, 3), ConfigError);

    std::mt19937_64 g(3);
    for (int trial = 0; trial < 20; ++trial) {
        auto scores = oracle::random_vector(17, g, 0.0, 1.0);
        scores[3] = scores[9];  // force a tie
        std::vector<std::pair<double, std::size_t>> keyed;
        for (std::size_t i = 0; i < scores.size(); ++i)
            keyed.emplace_back(-scores[i], i);
        std::sort(keyed.begin(), keyed.end());
        const std::size_t k = 1 + std::size_t(trial) % 17;
        const SelectionResult r = select_top_k(scores, k);
        REQUIRE(r.top_k.size() == k);
        for (std::size_t i = 0; i < scores.size(); ++i)
            CHECK(r.ranking[i] == keyed[i].second);

        std::vector<double> scaled = scores;
        for (double& v : scaled)
            v *= 3.7;
        CHECK(select_top_k(scaled, k).ranking == r.ranking);
    }
}

TEST_CASE("selection JSON and CSV")
{
    SelectionResult r = select_top_k(std::vector<double>{0.3, 0.1, 0.8}, 2);
    r.method = "bsnet-fc";
    r.loss_trace = {0.5, 0.25};
    r.weights_history = {{0.2, 0.2, 0.6}, {0.3, 0.1, 0.8}};
    r.config = {{"lambda", 0.01}};
    const auto j = to_json(r);
    for (const char* key : {"ranking", "top_k", "averaged_weights", "loss_trace", "config"})
        CHECK(j.contains(key));
    const SelectionResult back = selection_from_json(j);
    CHECK(back.ranking == r.ranking);
    CHECK(back.top_k == r.top_k);
    CHECK(back.loss_trace == r.loss_trace);

    auto broken = j;
    broken["ranking"] = {0, 0, 2};
    CHECK_THROWS_AS(selection_from_json(broken), DataError);

    std::ostringstream h, l;
    write_weights_history_csv(h, r);
    write_loss_csv(l, r);
    CHECK(h.str().rfind("epoch,b0,b1,b2\n1,", 0) == 0);
    CHECK(l.str().rfind("epoch,loss\n1,", 0) == 0);
}

TEST_CASE("train config validation")
{
    TrainConfig cfg;
    CHECK(cfg.lambda == 1e-2);
    CHECK(cfg.learning_rate == 2e-3);
    CHECK(cfg.max_epochs == 100);
    CHECK_NOTHROW(cfg.validate());
    cfg.lambda = -1;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.learning_rate = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.max_epochs = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    CHECK(default_batch_size(Variant::fc) == 64);
    CHECK(default_batch_size(Variant::conv) == 32);
    CHECK(parse_variant("conv") == Variant::conv);
    CHECK_THROWS_AS(parse_variant("svm"), ConfigError);
}

TEST_CASE("single full-batch epoch")
{
    const auto cube = small_synth(1);
    const auto pixels = data::extract_pixels(cube);
    CHECK(pixels.count() == cube.rows * cube.cols);
    TrainConfig cfg;
    cfg.max_epochs = 1;
    cfg.lambda = 0.0;
    cfg.batch_size = pixels.count();
    cfg.top_k = 4;
    const auto out = train(pixels, Variant::fc, cfg, kTinyFc);
    CHECK(out.result.loss_trace.size() == 1);
    CHECK(out.result.top_k.size() == 4);
    CHECK(out.result.ranking.size() == cube.bands);
}

TEST_CASE("training on synthetic pixels")
{
    const auto cube = small_synth(2);
    const auto pixels = data::extract_pixels(cube);
    TrainConfig cfg;
    cfg.max_epochs = 25;
    cfg.seed = 5;
    std::vector<double> seen;
    const auto out = train(pixels, Variant::fc, cfg, {}, {}, [&](std::size_t epoch, double l) {
        CHECK(epoch == seen.size() + 1);
        seen.push_back(l);
    });
    const auto& r = out.result;
    CHECK(seen == r.loss_trace);
    CHECK(r.weights_history.size() == 25);
    for (const auto& epoch : r.weights_history)
        for (double w : epoch) {
            CHECK(w > 0.0);
            CHECK(w < 1.0);
        }
    CHECK(r.loss_trace.back() < 0.5 * r.loss_trace.front());
    CHECK(r.averaged_weights == band_weights(out.model, pixels.samples).averaged);
    std::vector<std::size_t> sorted = r.ranking;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size(); ++i)
        CHECK(sorted[i] == i);

    SUBCASE("deterministic under seed")
    {
        const auto again = train(pixels, Variant::fc, cfg);
        CHECK(again.result.loss_trace == r.loss_trace);
        CHECK(again.result.averaged_weights == r.averaged_weights);
    }
    SUBCASE("L1 penalty lowers the mean gate")
    {
        TrainConfig plain = cfg;
        plain.lambda = 0.0;
        const auto free = train(pixels, Variant::fc, plain);
        auto mean = [](const std::vector<double>& v) {
            return std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
        };
        CHECK(mean(r.averaged_weights) < mean(free.result.averaged_weights));
    }
}

TEST_CASE("conv training on patches")
{
    const auto cube = small_synth(3, 6);
    const auto patches = data::extract_patches(cube, 5, 3);
    TrainConfig cfg;
    cfg.max_epochs = 3;
    cfg.top_k = 3;
    const auto out = train(patches, Variant::conv, cfg, {}, kTinyConv);
    CHECK(out.result.loss_trace.size() == 3);
    CHECK(out.result.method == "bsnet-conv");
    CHECK(out.result.config["batch_size"] == 32);
    CHECK(recnet_forward(out.model, patches.samples.slice_rows(0, 2)).shape() == Shape{2, 5, 5, 6});

    CHECK_THROWS_AS(train(patches, Variant::fc, cfg), ConfigError);
    CHECK_THROWS_AS(train(data::extract_pixels(cube), Variant::conv, cfg), ConfigError);
}

TEST_CASE("divergence is reported with its epoch")
{
    auto cube = small_synth(4, 5);
    auto pixels = data::extract_pixels(cube);
    pixels.samples[7] = std::numeric_limits<double>::infinity();
    TrainConfig cfg;
    cfg.max_epochs = 2;
    CHECK_THROWS_WITH_AS(train(pixels, Variant::fc, cfg, kTinyFc), doctest::Contains("epoch 1"), NumericError);
}
