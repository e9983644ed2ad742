#pragma once

// Classification-based evaluation of band subsets: stratified split of the
// labeled pixels, k-NN on the selected bands, OA / AA / kappa.

#include "bandsel/datahub.hpp"
#include "bandsel/selection.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace bandsel::eval {

struct SplitSpec {
    double train_fraction = 0.05;
    bool per_class = true;
    std::uint64_t seed = 0;
};

struct Split {
    std::vector<std::size_t> train;  // pixel indices
    std::vector<std::size_t> test;
    std::vector<std::string> warnings;
};

/// Random split of the labeled pixels (label 0 is excluded). With per_class,
/// every class gets max(1, round(fraction * n_class)) training pixels.
Split split(const data::HsiCube& cube, const SplitSpec& spec);

/// Pixel spectra restricted to `bands`, [pixels.size() x bands.size()] row-major.
std::vector<double> gather_features(const data::HsiCube& cube, std::span<const std::size_t> pixels,
                                    std::span<const std::size_t> bands);

/// Euclidean k-NN majority vote; vote ties go to the smallest class id,
/// distance ties to the lower training index.
std::vector<std::uint32_t> classify_knn(std::span<const double> train_x, std::span<const std::uint32_t> train_y,
                                        std::span<const double> test_x, std::size_t dims, std::size_t k_neighbors);

struct ClassReport {
    double oa = 0.0, aa = 0.0, kappa = 0.0;
    /// Recall per class; NaN for classes without test samples (excluded from AA).
    std::vector<double> per_class_accuracy;
    /// confusion[truth][predicted]
    std::vector<std::vector<std::uint64_t>> confusion;
};

/// Labels must lie in [0, classes).
ClassReport report(std::span<const std::uint32_t> truth, std::span<const std::uint32_t> predicted,
                   std::size_t classes);

/// A band selector evaluated by the sweep: returns k bands for a given run seed.
struct Selector {
    std::string name;
    std::function<std::vector<std::size_t>(std::size_t k, std::uint64_t run_seed)> select;
};
Selector ranking_selector(std::string name, std::vector<std::size_t> ranking);
/// k bands drawn uniformly without replacement per run.
Selector random_selector(std::size_t bands);

struct SweepConfig {
    std::vector<std::size_t> ks;
    std::size_t runs = 20;
    std::uint64_t base_seed = 0;
    double train_fraction = 0.05;
    std::size_t k_neighbors = 5;
};

struct SweepRow {
    std::string selector;
    std::size_t k;
    std::uint64_t run_seed;
    double oa, aa, kappa;
};

struct SweepSummary {
    std::string selector;
    std::size_t k;
    std::size_t runs;
    double oa_mean, oa_std, aa_mean, aa_std, kappa_mean, kappa_std;
};

/// Seed of run r; shared by all selectors so their splits are paired.
std::uint64_t run_seed(std::uint64_t base_seed, std::size_t run);

/// One split + classify + report per (selector, k, run). Requires ground truth.
std::vector<SweepRow> sweep(const data::HsiCube& cube, std::span<const Selector> selectors, const SweepConfig& cfg);
/// Mean and population standard deviation per (selector, k), in first-seen order.
std::vector<SweepSummary> summarize(std::span<const SweepRow> rows);

void write_sweep_csv(std::ostream& os, std::span<const SweepRow> rows);
void write_summary_csv(std::ostream& os, std::span<const SweepSummary> rows);

/// Parses "start:end:step" (inclusive) or a single integer.
std::vector<std::size_t> parse_k_range(const std::string& spec);

}  // namespace bandsel::eval
