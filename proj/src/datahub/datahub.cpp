#include "bandsel/datahub.hpp"

#include "bandsel/errors.hpp"
#include "bandsel/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace bandsel::data {

HsiCube::HsiCube(std::size_t r, std::size_t c, std::size_t b, float fill)
    : rows(r), cols(c), bands(b), values(r * c * b, fill)
{
}

std::vector<double> HsiCube::band(std::size_t b) const
{
    if (b >= bands)
        throw ConfigError("band index " + std::to_string(b) + " out of range for " + std::to_string(bands) +
                          " bands");
    std::vector<double> out(pixels());
    for (std::size_t p = 0; p < out.size(); ++p)
        out[p] = values[p * bands + b];
    return out;
}

void HsiCube::validate() const
{
    if (rows == 0 || cols == 0 || bands == 0)
        throw DataError("cube dimensions must be positive");
    if (values.size() != rows * cols * bands)
        throw DataError("cube holds " + std::to_string(values.size()) + " values, expected " +
                        std::to_string(rows * cols * bands));
    if (!band_labels.empty()) {
        if (band_labels.size() != bands)
            throw DataError("band_labels has " + std::to_string(band_labels.size()) + " entries for " +
                            std::to_string(bands) + " bands");
        for (std::size_t i = 1; i < band_labels.size(); ++i)
            if (band_labels[i] <= band_labels[i - 1])
                throw DataError("band_labels must be strictly increasing");
    }
    if (!ground_truth.empty() && ground_truth.size() != pixels())
        throw DataError("ground truth has " + std::to_string(ground_truth.size()) + " labels for " +
                        std::to_string(pixels()) + " pixels");
    for (float v : values)
        if (!std::isfinite(v))
            throw DataError("cube contains non-finite values");
}

HsiCube scale_unit(std::size_t rows, std::size_t cols, std::size_t bands, std::span<const double> raw)
{
    if (raw.size() != rows * cols * bands)
        throw DimensionError("scale_unit: " + std::to_string(raw.size()) + " values for " + std::to_string(rows) +
                             "x" + std::to_string(cols) + "x" + std::to_string(bands));
    HsiCube out(rows, cols, bands);
    if (raw.empty())
        return out;
    const auto [lo_it, hi_it] = std::minmax_element(raw.begin(), raw.end());
    const double lo = *lo_it, hi = *hi_it;
    if (hi > lo) {
        const double range = hi - lo;
        for (std::size_t i = 0; i < raw.size(); ++i)
            out.values[i] = raw[i] == hi ? 1.0f : float((raw[i] - lo) / range);
    }
    return out;
}

HsiCube scale_unit(const HsiCube& raw)
{
    std::vector<double> v(raw.values.begin(), raw.values.end());
    HsiCube out = scale_unit(raw.rows, raw.cols, raw.bands, v);
    out.band_labels = raw.band_labels;
    out.ground_truth = raw.ground_truth;
    return out;
}

HsiCube exclude_bands(const HsiCube& cube, std::span<const std::size_t> drop)
{
    std::vector<bool> dropped(cube.bands, false);
    for (std::size_t d : drop) {
        if (d >= cube.bands)
            throw ConfigError("exclude_bands: index " + std::to_string(d) + " out of range for " +
                              std::to_string(cube.bands) + " bands");
        dropped[d] = true;
    }
    std::vector<std::size_t> keep;
    for (std::size_t b = 0; b < cube.bands; ++b)
        if (!dropped[b])
            keep.push_back(b);
    if (keep.empty())
        throw ConfigError("exclude_bands would remove every band");

    HsiCube out(cube.rows, cube.cols, keep.size());
    out.ground_truth = cube.ground_truth;
    out.band_labels.reserve(keep.size());
    for (std::size_t b : keep)
        out.band_labels.push_back(cube.band_label(b));
    for (std::size_t p = 0; p < cube.pixels(); ++p)
        for (std::size_t j = 0; j < keep.size(); ++j)
            out.values[p * keep.size() + j] = cube.values[p * cube.bands + keep[j]];
    return out;
}

std::vector<std::size_t> indian_pines_water_bands()
{
    std::vector<std::size_t> out;
    for (std::size_t b = 104; b <= 108; ++b)
        out.push_back(b - 1);
    for (std::size_t b = 150; b <= 163; ++b)
        out.push_back(b - 1);
    out.push_back(220 - 1);
    return out;
}

SampleSet extract_pixels(const HsiCube& cube)
{
    if (cube.pixels() == 0 || cube.bands == 0)
        throw ConfigError("extract_pixels: empty cube");
    SampleSet s;
    s.kind = SampleKind::pixels;
    s.samples = Tensor({cube.pixels(), cube.bands}, std::vector<double>(cube.values.begin(), cube.values.end()));
    return s;
}

std::size_t patch_count(std::size_t rows, std::size_t cols, std::size_t a, std::size_t t)
{
    if (a == 0 || t == 0 || a > rows || a > cols)
        return 0;
    return ((rows - a) / t + 1) * ((cols - a) / t + 1);
}

SampleSet extract_patches(const HsiCube& cube, std::size_t a, std::size_t t)
{
    if (t == 0)
        throw ConfigError("extract_patches: stride must be >= 1");
    if (a == 0 || a > std::min(cube.rows, cube.cols))
        throw ConfigError("extract_patches: window " + std::to_string(a) + " does not fit a " +
                          std::to_string(cube.rows) + "x" + std::to_string(cube.cols) + " cube");
    const std::size_t ny = (cube.rows - a) / t + 1;
    const std::size_t nx = (cube.cols - a) / t + 1;
    SampleSet s;
    s.kind = SampleKind::patches;
    s.window = a;
    s.stride = t;
    s.samples = Tensor({ny * nx, a, a, cube.bands});
    double* out = s.samples.data();
    for (std::size_t i = 0; i < ny; ++i)
        for (std::size_t j = 0; j < nx; ++j)
            for (std::size_t dy = 0; dy < a; ++dy)
                for (std::size_t dx = 0; dx < a; ++dx) {
                    const float* src = &cube.values[((i * t + dy) * cube.cols + (j * t + dx)) * cube.bands];
                    out = std::copy(src, src + cube.bands, out);
                }
    return s;
}

HsiCube regroup_pixels(const SampleSet& pixels, std::size_t rows, std::size_t cols)
{
    if (pixels.kind != SampleKind::pixels || pixels.count() != rows * cols)
        throw DimensionError("regroup_pixels: sample set is not a " + std::to_string(rows) + "x" +
                             std::to_string(cols) + " pixel set");
    HsiCube out(rows, cols, pixels.bands());
    for (std::size_t i = 0; i < out.values.size(); ++i)
        out.values[i] = float(pixels.samples[i]);
    return out;
}

std::vector<std::size_t> choose_informative(std::size_t bands, std::size_t count, std::uint64_t seed)
{
    if (count == 0 || count > bands)
        throw ConfigError("cannot plant " + std::to_string(count) + " informative bands in " +
                          std::to_string(bands) + " bands");
    std::vector<std::size_t> all(bands);
    std::iota(all.begin(), all.end(), 0);
    Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
    rng.shuffle(all);
    all.resize(count);
    std::sort(all.begin(), all.end());
    return all;
}

namespace {

// Sum of a few low-frequency plane waves, rank-equalized so its values are
// spread uniformly over [0, 1] while keeping the smooth spatial ordering.
std::vector<double> smooth_field(std::size_t rows, std::size_t cols, Rng& rng)
{
    constexpr int waves = 4;
    double u[waves], v[waves], phase[waves], amp[waves];
    for (int k = 0; k < waves; ++k) {
        u[k] = rng.uniform(-1.5, 1.5);
        v[k] = rng.uniform(-1.5, 1.5);
        phase[k] = rng.uniform(0.0, 2.0 * std::numbers::pi);
        amp[k] = rng.uniform(0.5, 1.0);
    }
    const std::size_t n = rows * cols;
    std::vector<double> f(n, 0.0);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) {
            double s = 0.0;
            for (int k = 0; k < waves; ++k)
                s += amp[k] * std::cos(2.0 * std::numbers::pi * (u[k] * double(r) / double(rows) +
                                                                 v[k] * double(c) / double(cols)) +
                                       phase[k]);
            f[r * cols + c] = s;
        }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return f[a] < f[b]; });
    std::vector<double> out(n, 0.0);
    for (std::size_t i = 0; i < n && n > 1; ++i)
        out[order[i]] = double(i) / double(n - 1);
    return out;
}

double stddev(const std::vector<double>& x)
{
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / double(x.size());
    double ss = 0.0;
    for (double v : x)
        ss += (v - mean) * (v - mean);
    return std::sqrt(ss / double(x.size()));
}

}  // namespace

HsiCube synth_generate(const SynthSpec& spec, SynthTruth* truth)
{
    if (spec.rows == 0 || spec.cols == 0 || spec.bands == 0)
        throw ConfigError("synth: rows, cols and bands must be positive");
    if (spec.informative.empty())
        throw ConfigError("synth: at least one informative band is required");
    if (spec.noise_sigma < 0.0)
        throw ConfigError("synth: noise_sigma must be >= 0");
    if (!(spec.mixed_std > 0.0 && spec.mixed_std < 0.5))
        throw ConfigError("synth: mixed_std must lie in (0, 0.5)");
    std::vector<bool> planted(spec.bands, false);
    for (std::size_t b : spec.informative) {
        if (b >= spec.bands)
            throw ConfigError("synth: informative band " + std::to_string(b) + " out of range");
        if (planted[b])
            throw ConfigError("synth: informative band " + std::to_string(b) + " listed twice");
        planted[b] = true;
    }

    const std::size_t k = spec.informative.size();
    const std::size_t n = spec.rows * spec.cols;
    const std::size_t fanin = spec.mix_fanin == 0 ? k : std::min(spec.mix_fanin, k);
    Rng rng(spec.seed);

    SynthTruth local;
    SynthTruth& t = truth ? *truth : local;
    t.planted.clear();
    for (std::size_t i = 0; i < k; ++i)
        t.planted.push_back(smooth_field(spec.rows, spec.cols, rng));
    t.mix_weights.assign(spec.bands, std::vector<double>(k, 0.0));
    t.mix_offsets.assign(spec.bands, 0.0);

    std::vector<double> raw(n * spec.bands);
    std::vector<std::size_t> order(k);
    std::vector<double> clean(n);
    for (std::size_t b = 0; b < spec.bands; ++b) {
        if (planted[b])
            continue;
        std::iota(order.begin(), order.end(), 0);
        rng.shuffle(order);
        for (std::size_t j = 0; j < fanin; ++j)
            t.mix_weights[b][order[j]] = rng.normal(0.0, 1.0);
        t.mix_offsets[b] = rng.uniform(-0.5, 0.5);
        // Rescale the coefficient vector so every mixed band carries the same
        // signal level, below the planted bands' uniform spread.
        const std::vector<double> direction = t.mix_weights[b];
        auto mixed_std = [&](double scale) {
            for (std::size_t p = 0; p < n; ++p) {
                double s = t.mix_offsets[b];
                for (std::size_t i = 0; i < k; ++i)
                    s += scale * direction[i] * (t.planted[i][p] - 0.5);
                clean[p] = 1.0 / (1.0 + std::exp(-s));
            }
            return stddev(clean);
        };
        double lo = 0.0, hi = 1.0;
        while (mixed_std(hi) < spec.mixed_std && hi < 1e6)
            hi *= 2.0;
        for (int it = 0; it < 60; ++it) {
            const double mid = 0.5 * (lo + hi);
            (mixed_std(mid) < spec.mixed_std ? lo : hi) = mid;
        }
        for (std::size_t i = 0; i < k; ++i)
            t.mix_weights[b][i] = hi * direction[i];
        mixed_std(hi);
        for (std::size_t p = 0; p < n; ++p)
            raw[p * spec.bands + b] = clean[p];
    }
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t p = 0; p < n; ++p)
            raw[p * spec.bands + spec.informative[i]] = t.planted[i][p];
    if (spec.noise_sigma > 0.0)
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t b = 0; b < spec.bands; ++b)
                if (!planted[b])
                    raw[p * spec.bands + b] += rng.normal(0.0, spec.noise_sigma);

    HsiCube cube = scale_unit(spec.rows, spec.cols, spec.bands, raw);
    cube.ground_truth.resize(n);
    for (std::size_t p = 0; p < n; ++p) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < k; ++i)
            if (t.planted[i][p] > t.planted[best][p])
                best = i;
        cube.ground_truth[p] = std::uint32_t(best + 1);
    }
    return cube;
}

}  // namespace bandsel::data
