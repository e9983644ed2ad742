#pragma once

#include "bandsel/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace bandsel::data {

/// Hyperspectral cube, rows x cols x bands, stored band-interleaved-by-pixel
/// as 32-bit floats (the on-disk precision, so save/load is exact).
struct HsiCube {
    std::size_t rows = 0, cols = 0, bands = 0;
    std::vector<float> values;
    /// Original band index of each surviving band; empty means 0..bands-1.
    std::vector<std::size_t> band_labels;
    /// Per-pixel class ids, 0 = unlabeled; empty when absent.
    std::vector<std::uint32_t> ground_truth;

    HsiCube() = default;
    HsiCube(std::size_t rows, std::size_t cols, std::size_t bands, float fill = 0.0f);

    std::size_t pixels() const { return rows * cols; }
    float& at(std::size_t r, std::size_t c, std::size_t b) { return values[(r * cols + c) * bands + b]; }
    float at(std::size_t r, std::size_t c, std::size_t b) const { return values[(r * cols + c) * bands + b]; }
    std::span<const float> spectrum(std::size_t pixel) const { return {values.data() + pixel * bands, bands}; }
    bool has_ground_truth() const { return !ground_truth.empty(); }
    /// Original label of band b (b itself when no labels are recorded).
    std::size_t band_label(std::size_t b) const { return band_labels.empty() ? b : band_labels.at(b); }
    /// Copy of one band as doubles, row-major over pixels.
    std::vector<double> band(std::size_t b) const;

    /// Throws DataError when sizes or band labels are inconsistent.
    void validate() const;

    friend bool operator==(const HsiCube&, const HsiCube&) = default;
};

enum class SampleKind { pixels, patches };

struct SampleSet {
    SampleKind kind = SampleKind::pixels;
    /// [S x b] for pixels, [S x a x a x b] for patches.
    Tensor samples;
    std::size_t window = 1;
    std::size_t stride = 1;
    std::size_t count() const { return samples.rank() ? samples.dim(0) : 0; }
    std::size_t bands() const { return samples.rank() ? samples.dim(samples.rank() - 1) : 0; }
};

// ---- file I/O

void save_cube(const HsiCube& cube, const std::filesystem::path& path);
HsiCube load_cube(const std::filesystem::path& path);
/// Serialized form, exactly the bytes save_cube writes.
std::vector<std::uint8_t> encode_cube(const HsiCube& cube);
HsiCube decode_cube(std::span<const std::uint8_t> bytes);

/// Reads "row,col,label" lines (optional header) into a rows*cols label map.
std::vector<std::uint32_t> load_ground_truth_csv(const std::filesystem::path& path, std::size_t rows,
                                                 std::size_t cols);

// ---- preprocessing

/// Global min-max map of all values to [0, 1]; a constant cube maps to zeros.
HsiCube scale_unit(const HsiCube& raw);
/// Same, from raw double values laid out as (row, col, band).
HsiCube scale_unit(std::size_t rows, std::size_t cols, std::size_t bands, std::span<const double> raw);

/// Removes the given band positions (0-based, relative to the current cube).
HsiCube exclude_bands(const HsiCube& cube, std::span<const std::size_t> drop);

/// Water-absorption bands dropped from the 220-band Indian Pines cube
/// ([104-108], [150-163], 220 in 1-based numbering), as 0-based positions.
std::vector<std::size_t> indian_pines_water_bands();

// ---- samples

SampleSet extract_pixels(const HsiCube& cube);
/// a x a windows at offsets (i*t, j*t) while the window fits.
SampleSet extract_patches(const HsiCube& cube, std::size_t a, std::size_t t);
std::size_t patch_count(std::size_t rows, std::size_t cols, std::size_t a, std::size_t t);
/// Inverse of extract_pixels for the value payload.
HsiCube regroup_pixels(const SampleSet& pixels, std::size_t rows, std::size_t cols);

// ---- synthetic data

struct SynthSpec {
    std::size_t rows = 32, cols = 32, bands = 60;
    std::vector<std::size_t> informative;
    double noise_sigma = 0.01;
    std::uint64_t seed = 1;
    /// Planted bands feeding each mixed band; 0 means all of them.
    std::size_t mix_fanin = 0;
    /// Noise-free standard deviation of every mixed band (planted bands are
    /// uniform on [0, 1], std ~0.29).
    double mixed_std = 0.11;
};

/// Ground truth behind a synthetic cube.
struct SynthTruth {
    /// Planted fields before global scaling, [k][pixel], uniformly spread over [0, 1].
    std::vector<std::vector<double>> planted;
    /// Per band: coefficients on planted fields (zero for unused) and offset.
    std::vector<std::vector<double>> mix_weights;
    std::vector<double> mix_offsets;
};

/// `count` distinct sorted band indices drawn from [0, bands).
std::vector<std::size_t> choose_informative(std::size_t bands, std::size_t count, std::uint64_t seed);

/// Planted bands are smooth random fields; every other band is
/// sigmoid(w . (p - 0.5) + c) of the planted fields p plus N(0, noise_sigma).
/// Labels: 1 + index of the largest planted field at each pixel.
HsiCube synth_generate(const SynthSpec& spec, SynthTruth* truth = nullptr);

}  // namespace bandsel::data
