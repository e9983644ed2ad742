#include "doctest.h"
#include "oracles.hpp"

#include "bandsel/datahub.hpp"
#include "bandsel/errors.hpp"

#include "json.hpp"

#include <array>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>

using namespace bandsel;
using namespace bandsel::data;

namespace {

HsiCube random_cube(std::size_t rows, std::size_t cols, std::size_t bands, std::uint64_t seed)
{
    std::mt19937_64 g(seed);
    std::uniform_real_distribution<float> d(0.0f, 1.0f);
    HsiCube c(rows, cols, bands);
    for (float& v : c.values)
        v = d(g);
    return c;
}

std::filesystem::path temp_file(const std::string& name)
{
    return std::filesystem::temp_directory_path() / ("bandsel_test_" + name);
}

}  // namespace

TEST_CASE("cube save/load round trip is bit-identical")
{
    HsiCube c = random_cube(4, 5, 6, 1);
    c.ground_truth.assign(20, 0);
    for (std::size_t i = 0; i < 20; ++i)
        c.ground_truth[i] = std::uint32_t(i % 3);
    c.band_labels = {0, 2, 3, 7, 8, 11};
    const auto path = temp_file("roundtrip.cube");
    save_cube(c, path);
    const HsiCube back = load_cube(path);
    CHECK(back == c);
    CHECK(std::memcmp(back.values.data(), c.values.data(), c.values.size() * sizeof(float)) == 0);
    std::filesystem::remove(path);

    const HsiCube plain = random_cube(3, 2, 1, 2);
    CHECK(decode_cube(encode_cube(plain)) == plain);
}

TEST_CASE("cube file layout")
{
    const HsiCube c = random_cube(2, 2, 3, 4);
    const auto bytes = encode_cube(c);
    CHECK(std::string(bytes.begin(), bytes.begin() + 8) == "HSICUBE1");
    std::uint32_t len;
    std::memcpy(&len, bytes.data() + 8, 4);
    const auto header = nlohmann::json::parse(bytes.begin() + 12, bytes.begin() + 12 + len);
    CHECK(header["rows"] == 2);
    CHECK(header["cols"] == 2);
    CHECK(header["bands"] == 3);
    CHECK(header["dtype"] == "f32");
    CHECK(header["has_gt"] == false);
    CHECK(bytes.size() == 12 + len + 12 * 4);
    float first;
    std::memcpy(&first, bytes.data() + 12 + len, 4);
    CHECK(first == c.values[0]);
}

TEST_CASE("truncated or malformed cube files are rejected")
{
    const auto bytes = encode_cube(random_cube(3, 3, 2, 5));
    for (std::size_t cut : {std::size_t(0), std::size_t(5), std::size_t(10), std::size_t(20), bytes.size() - 1}) {
        std::vector<std::uint8_t> part(bytes.begin(), bytes.begin() + long(cut));
        CHECK_THROWS_AS(decode_cube(part), DataError);
    }
    auto bad_magic = bytes;
    bad_magic[0] = 'X';
    CHECK_THROWS_WITH_AS(decode_cube(bad_magic), doctest::Contains("offset 0"), DataError);

    // Truncation errors report where reading stopped.
    std::vector<std::uint8_t> part(bytes.begin(), bytes.end() - 4);
    CHECK_THROWS_WITH_AS(decode_cube(part), doctest::Contains("offset"), DataError);

    auto with_header = [](const std::string& header) {
        std::vector<std::uint8_t> out{'H', 'S', 'I', 'C', 'U', 'B', 'E', '1'};
        out.reserve(12 + header.size());
        std::array<std::uint8_t, 4> len;
        const auto n = std::uint32_t(header.size());
        std::memcpy(len.data(), &n, 4);
        out.insert(out.end(), len.begin(), len.end());
        out.insert(out.end(), header.begin(), header.end());
        return out;
    };
    CHECK_THROWS_AS(decode_cube(with_header(R"({"rows":1,"cols":1,"bands":0,"dtype":"f32","has_gt":false})")),
                    DataError);
    CHECK_THROWS_AS(decode_cube(with_header(R"({"rows":1,"cols":1,"bands":1,"dtype":"f64","has_gt":false})")),
                    DataError);
    CHECK_THROWS_AS(decode_cube(with_header("not json")), DataError);
    CHECK_THROWS_AS(load_cube(temp_file("does_not_exist.cube")), DataError);
}

TEST_CASE("ground truth CSV import")
{
    const auto path = temp_file("gt.csv");
    {
        std::ofstream f(path);
        f << "row,col,label\n0,1,3\n2,0,1\n";
    }
    const auto labels = load_ground_truth_csv(path, 3, 2);
    CHECK(labels == std::vector<std::uint32_t>{0, 3, 0, 0, 1, 0});
    {
        std::ofstream f(path);
        f << "5,0,1\n";
    }
    CHECK_THROWS_AS(load_ground_truth_csv(path, 3, 2), DataError);
    std::filesystem::remove(path);
}

TEST_CASE("scale_unit maps the global range onto [0, 1]")
{
    std::vector<double> raw(2 * 2 * 64);
    for (std::size_t i = 0; i < raw.size(); ++i)
        raw[i] = double(i % 256);
    const HsiCube s = scale_unit(2, 2, 64, raw);
    CHECK(s.values[0] == 0.0f);
    CHECK(s.values[255] == 1.0f);

    const HsiCube flat = scale_unit(2, 3, 2, std::vector<double>(12, 7.5));
    for (float v : flat.values)
        CHECK(v == 0.0f);

    std::mt19937_64 g(9);
    const auto r = oracle::random_vector(5 * 4 * 3, g, -40.0, 900.0);
    const HsiCube u = scale_unit(5, 4, 3, r);
    CHECK(*std::min_element(u.values.begin(), u.values.end()) == 0.0f);
    CHECK(*std::max_element(u.values.begin(), u.values.end()) == 1.0f);
    const auto [lo, hi] = std::minmax_element(r.begin(), r.end());
    for (std::size_t i = 0; i < r.size(); ++i)
        CHECK(std::abs(u.values[i] - (r[i] - *lo) / (*hi - *lo)) < 1e-6);
}

TEST_CASE("exclude_bands")
{
    const HsiCube c = random_cube(3, 3, 5, 11);
    CHECK(exclude_bands(c, {}).values == c.values);

    const std::vector<std::size_t> first{0};
    const HsiCube d = exclude_bands(c, first);
    CHECK(d.bands == 4);
    CHECK(d.band_labels == std::vector<std::size_t>{1, 2, 3, 4});
    for (std::size_t p = 0; p < 9; ++p)
        for (std::size_t b = 0; b < 4; ++b)
            CHECK(d.values[p * 4 + b] == c.values[p * 5 + b + 1]);

    // Labels keep referring to the original numbering after repeated exclusion.
    const std::vector<std::size_t> again{1};
    CHECK(exclude_bands(d, again).band_labels == std::vector<std::size_t>{1, 3, 4});

    const std::vector<std::size_t> bad{5};
    CHECK_THROWS_AS(exclude_bands(c, bad), ConfigError);
}

TEST_CASE("Indian Pines water-absorption list leaves 200 bands")
{
    const auto drop = indian_pines_water_bands();
    CHECK(drop.size() == 20);
    CHECK(drop.front() == 103);
    CHECK(drop.back() == 219);
    const HsiCube c(2, 2, 220);
    const HsiCube d = exclude_bands(c, drop);
    CHECK(d.bands == 200);
    CHECK(d.band_labels[103] == 108);  // first band after [104-108] in 1-based numbering
}

TEST_CASE("extract_pixels")
{
    const HsiCube c = random_cube(2, 3, 4, 3);
    const SampleSet s = extract_pixels(c);
    CHECK(s.kind == SampleKind::pixels);
    CHECK(s.samples.shape() == Shape{6, 4});
    for (std::size_t r = 0; r < 2; ++r)
        for (std::size_t col = 0; col < 3; ++col)
            for (std::size_t b = 0; b < 4; ++b)
                CHECK(s.samples.at(r * 3 + col, b) == double(c.at(r, col, b)));
    CHECK(regroup_pixels(s, 2, 3) == c);
}

TEST_CASE("extract_patches")
{
    SUBCASE("whole cube as a single patch")
    {
        const HsiCube c = random_cube(4, 4, 3, 4);
        const SampleSet s = extract_patches(c, 4, 1);
        CHECK(s.count() == 1);
        for (std::size_t i = 0; i < c.values.size(); ++i)
            CHECK(s.samples[i] == double(c.values[i]));
    }
    SUBCASE("5x5 cube, a=3, t=2")
    {
        const HsiCube c = random_cube(5, 5, 2, 5);
        const SampleSet s = extract_patches(c, 3, 2);
        REQUIRE(s.count() == 4);
        const std::pair<std::size_t, std::size_t> offsets[] = {{0, 0}, {0, 2}, {2, 0}, {2, 2}};
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t dy = 0; dy < 3; ++dy)
                for (std::size_t dx = 0; dx < 3; ++dx)
                    for (std::size_t b = 0; b < 2; ++b)
                        CHECK(s.samples.at(i, dy, dx, b) ==
                              double(c.at(offsets[i].first + dy, offsets[i].second + dx, b)));
    }
    SUBCASE("145x145, a=7, t=2")
    {
        CHECK(patch_count(145, 145, 7, 2) == 4900);
        CHECK(oracle::window_offsets(145, 145, 7, 2).size() == 4900);
    }
    SUBCASE("errors")
    {
        const HsiCube c = random_cube(4, 6, 1, 6);
        CHECK_THROWS_AS(extract_patches(c, 5, 1), ConfigError);
        CHECK_THROWS_AS(extract_patches(c, 3, 0), ConfigError);
    }
}

TEST_CASE("patch counts and contents match window enumeration")
{
    const HsiCube c = random_cube(9, 7, 2, 8);
    for (std::size_t a = 1; a <= 7; ++a)
        for (std::size_t t = 1; t <= 4; ++t) {
            const auto offsets = oracle::window_offsets(9, 7, a, t);
            const SampleSet s = extract_patches(c, a, t);
            REQUIRE(s.count() == offsets.size());
            for (std::size_t i = 0; i < offsets.size(); ++i)
                for (std::size_t dy = 0; dy < a; ++dy)
                    for (std::size_t dx = 0; dx < a; ++dx)
                        for (std::size_t b = 0; b < 2; ++b)
                            REQUIRE(s.samples.at(i, dy, dx, b) ==
                                    double(c.at(offsets[i].first + dy, offsets[i].second + dx, b)));
        }
    for (std::size_t rows = 1; rows <= 20; ++rows)
        for (std::size_t cols = 1; cols <= 20; cols += 3)
            for (std::size_t a = 1; a <= std::min<std::size_t>({rows, cols, 8}); ++a)
                for (std::size_t t = 1; t <= 8; ++t)
                    REQUIRE(patch_count(rows, cols, a, t) == oracle::window_offsets(rows, cols, a, t).size());
}

TEST_CASE("choose_informative draws distinct sorted indices")
{
    const auto idx = choose_informative(60, 5, 3);
    CHECK(idx.size() == 5);
    CHECK(std::is_sorted(idx.begin(), idx.end()));
    CHECK(std::set<std::size_t>(idx.begin(), idx.end()).size() == 5);
    CHECK(idx.back() < 60);
    CHECK(choose_informative(60, 5, 3) == idx);
    CHECK_THROWS_AS(choose_informative(4, 5, 1), ConfigError);
}

TEST_CASE("synthetic cube contract")
{
    SynthSpec spec;
    spec.informative = choose_informative(spec.bands, 5, 7);
    spec.seed = 7;
    SynthTruth truth;
    const HsiCube c = synth_generate(spec, &truth);
    CHECK(c.rows == 32);
    CHECK(c.bands == 60);
    CHECK_NOTHROW(c.validate());
    CHECK(*std::min_element(c.values.begin(), c.values.end()) >= 0.0f);
    CHECK(*std::max_element(c.values.begin(), c.values.end()) <= 1.0f);

    SUBCASE("deterministic under seed")
    {
        CHECK(synth_generate(spec) == c);
        SynthSpec other = spec;
        other.seed = 8;
        CHECK_FALSE(synth_generate(other) == c);
    }
    SUBCASE("planted bands span at least half the unit range and are spatially smooth")
    {
        for (std::size_t b : spec.informative) {
            const auto v = c.band(b);
            const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
            CHECK(*hi - *lo >= 0.5);
            double step = 0.0;
            for (std::size_t r = 0; r < c.rows; ++r)
                for (std::size_t col = 0; col + 1 < c.cols; ++col)
                    step += std::abs(v[r * c.cols + col + 1] - v[r * c.cols + col]);
            // White noise on [0, 1] would average about 1/3 per step.
            CHECK(step / double(c.rows * (c.cols - 1)) < 0.1);
        }
    }
    SUBCASE("labels are the strongest planted field")
    {
        for (std::size_t p = 0; p < c.pixels(); ++p) {
            std::size_t best = 0;
            for (std::size_t i = 1; i < 5; ++i)
                if (c.values[p * 60 + spec.informative[i]] > c.values[p * 60 + spec.informative[best]])
                    best = i;
            CHECK(c.ground_truth[p] == best + 1);
        }
    }
    SUBCASE("linear probe on the known nonlinearity explains the mixed bands")
    {
        for (std::size_t b = 0; b < spec.bands; ++b) {
            if (std::find(spec.informative.begin(), spec.informative.end(), b) != spec.informative.end())
                continue;
            // Least squares y ~ alpha + beta * f with f the noise-free mixture.
            const auto y = c.band(b);
            std::vector<double> f(c.pixels());
            for (std::size_t p = 0; p < c.pixels(); ++p) {
                double s = truth.mix_offsets[b];
                for (std::size_t i = 0; i < 5; ++i)
                    s += truth.mix_weights[b][i] * (truth.planted[i][p] - 0.5);
                f[p] = oracle::sigmoid(s);
            }
            const double n = double(f.size());
            double sf = 0, sy = 0, sff = 0, sfy = 0;
            for (std::size_t p = 0; p < f.size(); ++p) {
                sf += f[p];
                sy += y[p];
                sff += f[p] * f[p];
                sfy += f[p] * y[p];
            }
            const double beta = (n * sfy - sf * sy) / (n * sff - sf * sf);
            const double alpha = (sy - beta * sf) / n;
            double ss_res = 0, ss_tot = 0;
            for (std::size_t p = 0; p < f.size(); ++p) {
                ss_res += std::pow(y[p] - alpha - beta * f[p], 2);
                ss_tot += std::pow(y[p] - sy / n, 2);
            }
            CHECK(1.0 - ss_res / ss_tot >= 0.99);
        }
    }
}

TEST_CASE("noise-free mixed bands are exact functions of the planted bands")
{
    SynthSpec spec;
    spec.rows = 12;
    spec.cols = 10;
    spec.bands = 15;
    spec.noise_sigma = 0.0;
    spec.informative = {1, 4, 9};
    SynthTruth truth;
    const HsiCube c = synth_generate(spec, &truth);
    // Planted fields hit both 0 and 1, so scaling is the identity here.
    for (std::size_t b = 0; b < spec.bands; ++b) {
        const auto it = std::find(spec.informative.begin(), spec.informative.end(), b);
        for (std::size_t p = 0; p < c.pixels(); ++p) {
            double expect;
            if (it != spec.informative.end()) {
                expect = truth.planted[std::size_t(it - spec.informative.begin())][p];
            } else {
                double s = truth.mix_offsets[b];
                for (std::size_t i = 0; i < 3; ++i)
                    s += truth.mix_weights[b][i] * (truth.planted[i][p] - 0.5);
                expect = oracle::sigmoid(s);
            }
            CHECK(std::abs(c.values[p * spec.bands + b] - expect) < 1e-6);
        }
    }
}

TEST_CASE("synthetic generator settings are validated")
{
    SynthSpec spec;
    CHECK_THROWS_AS(synth_generate(spec), ConfigError);
    spec.informative = {3, 3};
    CHECK_THROWS_AS(synth_generate(spec), ConfigError);
    spec.informative = {60};
    CHECK_THROWS_AS(synth_generate(spec), ConfigError);
    spec.informative = {1};
    spec.bands = 0;
    CHECK_THROWS_AS(synth_generate(spec), ConfigError);
}
