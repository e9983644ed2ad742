#pragma once

#include "bandsel/datahub.hpp"
#include "bandsel/selection.hpp"

#include <iosfwd>
#include <span>
#include <vector>

namespace bandsel::metrics {

inline constexpr std::size_t kDefaultBins = 256;
/// Pseudo-count added to every bin before any KL divergence.
inline constexpr double kKlSmoothing = 1e-6;

struct BandHistogram {
    std::vector<std::uint64_t> counts;
    std::vector<double> probs;
    std::size_t n_bins() const { return counts.size(); }
    std::uint64_t total() const;
};

/// Gray-level histogram of one band; value v in [0,1] lands in bin floor(v*(n_bins-1)+0.5).
BandHistogram band_histogram(const data::HsiCube& cube, std::size_t band, std::size_t n_bins = kDefaultBins);
BandHistogram histogram_of(std::span<const double> values, std::size_t n_bins = kDefaultBins);
/// All bands at once, parallel across bands.
std::vector<BandHistogram> all_band_histograms(const data::HsiCube& cube, std::size_t n_bins = kDefaultBins);

/// Shannon entropy in nats; empty bins contribute nothing.
double band_entropy(const BandHistogram& hist);

/// Smoothed bin probabilities (counts + eps) / (total + n_bins * eps).
std::vector<double> smoothed_probs(const BandHistogram& hist, double eps = kKlSmoothing);
double kl_divergence(const BandHistogram& p, const BandHistogram& q);
/// KL(p||q) + KL(q||p) on smoothed histograms.
double skl_divergence(const BandHistogram& p, const BandHistogram& q);

/// Mean SKL over the k(k-1)/2 unordered pairs of the subset (k >= 2).
double msd(const data::HsiCube& cube, std::span<const std::size_t> subset, std::size_t n_bins = kDefaultBins);
double msd(std::span<const BandHistogram> hists, std::span<const std::size_t> subset);

/// Population variance of every band.
std::vector<double> band_variances(const data::HsiCube& cube);
/// Bands ranked by descending variance; ties by lower index.
SelectionResult variance_rank(const data::HsiCube& cube, std::size_t k);

struct MsdPoint {
    std::size_t k;
    double msd;
};
/// MSD of the first k bands of `ranking` for every k in `ks`.
std::vector<MsdPoint> msd_sweep(const data::HsiCube& cube, std::span<const std::size_t> ranking,
                                std::span<const std::size_t> ks, std::size_t n_bins = kDefaultBins);

void write_entropy_csv(std::ostream& os, const data::HsiCube& cube, std::size_t n_bins = kDefaultBins);
void write_msd_csv(std::ostream& os, std::span<const MsdPoint> sweep);

}  // namespace bandsel::metrics
