#include "bandsel/bandmetrics.hpp"

#include "bandsel/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <ostream>

namespace bandsel::metrics {

namespace {

std::size_t bin_of(double v, std::size_t n_bins)
{
    const double clamped = std::clamp(v, 0.0, 1.0);
    return std::min(n_bins - 1, std::size_t(std::floor(clamped * double(n_bins - 1) + 0.5)));
}

void finish(BandHistogram& h)
{
    const double total = double(h.total());
    h.probs.resize(h.counts.size());
    for (std::size_t i = 0; i < h.counts.size(); ++i)
        h.probs[i] = total > 0 ? double(h.counts[i]) / total : 0.0;
}

}  // namespace

std::uint64_t BandHistogram::total() const { return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0}); }

BandHistogram histogram_of(std::span<const double> values, std::size_t n_bins)
{
    if (n_bins < 2)
        throw ConfigError("histograms need at least 2 bins");
    BandHistogram h;
    h.counts.assign(n_bins, 0);
    for (double v : values)
        ++h.counts[bin_of(v, n_bins)];
    finish(h);
    return h;
}

BandHistogram band_histogram(const data::HsiCube& cube, std::size_t band, std::size_t n_bins)
{
    if (band >= cube.bands)
        throw ConfigError("band index " + std::to_string(band) + " out of range for " + std::to_string(cube.bands) +
                          " bands");
    if (n_bins < 2)
        throw ConfigError("histograms need at least 2 bins");
    BandHistogram h;
    h.counts.assign(n_bins, 0);
    for (std::size_t p = 0; p < cube.pixels(); ++p)
        ++h.counts[bin_of(cube.values[p * cube.bands + band], n_bins)];
    finish(h);
    return h;
}

std::vector<BandHistogram> all_band_histograms(const data::HsiCube& cube, std::size_t n_bins)
{
    if (n_bins < 2)
        throw ConfigError("histograms need at least 2 bins");
    std::vector<BandHistogram> out(cube.bands);
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t b = 0; b < std::int64_t(cube.bands); ++b)
        out[std::size_t(b)] = band_histogram(cube, std::size_t(b), n_bins);
    return out;
}

double band_entropy(const BandHistogram& hist)
{
    double h = 0.0;
    for (double p : hist.probs)
        if (p > 0.0)
            h -= p * std::log(p);
    return h;
}

std::vector<double> smoothed_probs(const BandHistogram& hist, double eps)
{
    const double denom = double(hist.total()) + double(hist.n_bins()) * eps;
    std::vector<double> p(hist.n_bins());
    for (std::size_t i = 0; i < p.size(); ++i)
        p[i] = (double(hist.counts[i]) + eps) / denom;
    return p;
}

double kl_divergence(const BandHistogram& p, const BandHistogram& q)
{
    if (p.n_bins() != q.n_bins())
        throw ConfigError("KL divergence between histograms with " + std::to_string(p.n_bins()) + " and " +
                          std::to_string(q.n_bins()) + " bins");
    const auto ps = smoothed_probs(p), qs = smoothed_probs(q);
    double d = 0.0;
    for (std::size_t i = 0; i < ps.size(); ++i)
        d += ps[i] * std::log(ps[i] / qs[i]);
    return d;
}

double skl_divergence(const BandHistogram& p, const BandHistogram& q)
{
    if (p.n_bins() != q.n_bins())
        throw ConfigError("SKL divergence between histograms with " + std::to_string(p.n_bins()) + " and " +
                          std::to_string(q.n_bins()) + " bins");
    // Single pass: (p - q) * (log p - log q) sums both KL directions.
    const auto ps = smoothed_probs(p), qs = smoothed_probs(q);
    double d = 0.0;
    for (std::size_t i = 0; i < ps.size(); ++i)
        d += (ps[i] - qs[i]) * (std::log(ps[i]) - std::log(qs[i]));
    return std::max(d, 0.0);
}

double msd(std::span<const BandHistogram> hists, std::span<const std::size_t> subset)
{
    const std::size_t k = subset.size();
    if (k < 2)
        throw ConfigError("MSD needs a subset of at least 2 bands, got " + std::to_string(k));
    for (std::size_t b : subset)
        if (b >= hists.size())
            throw ConfigError("MSD: band " + std::to_string(b) + " out of range");
    double sum = 0.0;
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = i + 1; j < k; ++j)
            if (subset[i] != subset[j])
                sum += skl_divergence(hists[subset[i]], hists[subset[j]]);
    return 2.0 * sum / double(k * (k - 1));
}

double msd(const data::HsiCube& cube, std::span<const std::size_t> subset, std::size_t n_bins)
{
    if (subset.size() < 2)
        throw ConfigError("MSD needs a subset of at least 2 bands, got " + std::to_string(subset.size()));
    std::vector<BandHistogram> hists(cube.bands);
    for (std::size_t b : subset) {
        if (b >= cube.bands)
            throw ConfigError("MSD: band " + std::to_string(b) + " out of range");
        if (hists[b].counts.empty())
            hists[b] = band_histogram(cube, b, n_bins);
    }
    return msd(hists, subset);
}

std::vector<double> band_variances(const data::HsiCube& cube)
{
    std::vector<double> var(cube.bands, 0.0);
    const double n = double(cube.pixels());
#pragma omp parallel for schedule(static)
    for (std::int64_t bi = 0; bi < std::int64_t(cube.bands); ++bi) {
        const std::size_t b = std::size_t(bi);
        double mean = 0.0;
        for (std::size_t p = 0; p < cube.pixels(); ++p)
            mean += cube.values[p * cube.bands + b];
        mean /= n;
        double ss = 0.0;
        for (std::size_t p = 0; p < cube.pixels(); ++p) {
            const double d = cube.values[p * cube.bands + b] - mean;
            ss += d * d;
        }
        var[b] = ss / n;
    }
    return var;
}

SelectionResult variance_rank(const data::HsiCube& cube, std::size_t k)
{
    auto r = select_top_k(band_variances(cube), k);
    r.method = "variance";
    r.config = {{"k", k}};
    return r;
}

std::vector<MsdPoint> msd_sweep(const data::HsiCube& cube, std::span<const std::size_t> ranking,
                                std::span<const std::size_t> ks, std::size_t n_bins)
{
    const auto hists = all_band_histograms(cube, n_bins);
    std::vector<MsdPoint> out;
    for (std::size_t k : ks) {
        if (k > ranking.size())
            throw ConfigError("MSD sweep: k=" + std::to_string(k) + " exceeds the ranking length");
        out.push_back({k, msd(hists, ranking.first(k))});
    }
    return out;
}

void write_entropy_csv(std::ostream& os, const data::HsiCube& cube, std::size_t n_bins)
{
    const auto hists = all_band_histograms(cube, n_bins);
    const auto old = os.precision(17);
    os << "band_index,original_label,entropy\n";
    for (std::size_t b = 0; b < cube.bands; ++b)
        os << b << ',' << cube.band_label(b) << ',' << band_entropy(hists[b]) << '\n';
    os.precision(old);
}

void write_msd_csv(std::ostream& os, std::span<const MsdPoint> sweep)
{
    const auto old = os.precision(17);
    os << "k,msd\n";
    for (const auto& p : sweep)
        os << p.k << ',' << p.msd << '\n';
    os.precision(old);
}

}  // namespace bandsel::metrics
