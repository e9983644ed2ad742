#include "bandsel/evalharness.hpp"

#include "bandsel/errors.hpp"
#include "bandsel/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

namespace bandsel::eval {

Split split(const data::HsiCube& cube, const SplitSpec& spec)
{
    if (!cube.has_ground_truth())
        throw ConfigError("cube has no ground truth labels");
    if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0))
        throw ConfigError("train fraction must lie in (0, 1)");

    std::map<std::uint32_t, std::vector<std::size_t>> by_class;
    for (std::size_t p = 0; p < cube.pixels(); ++p)
        if (cube.ground_truth[p] != 0)
            by_class[cube.ground_truth[p]].push_back(p);
    if (by_class.empty())
        throw ConfigError("cube has no labeled pixels");
    if (by_class.size() < 2)
        throw ConfigError("need at least 2 labeled classes to split");

    Split out;
    const std::uint32_t max_label = by_class.rbegin()->first;
    for (std::uint32_t c = 1; c <= max_label; ++c)
        if (!by_class.contains(c))
            out.warnings.push_back("class " + std::to_string(c) + " has no labeled pixels; skipped");

    Rng rng(spec.seed);
    if (spec.per_class) {
        for (auto& [label, pixels] : by_class) {
            rng.shuffle(pixels);
            const auto n_train = std::max<std::size_t>(
                1, std::size_t(std::llround(spec.train_fraction * double(pixels.size()))));
            out.train.insert(out.train.end(), pixels.begin(), pixels.begin() + std::ptrdiff_t(n_train));
            out.test.insert(out.test.end(), pixels.begin() + std::ptrdiff_t(n_train), pixels.end());
        }
    } else {
        std::vector<std::size_t> all;
        for (auto& [label, pixels] : by_class)
            all.insert(all.end(), pixels.begin(), pixels.end());
        rng.shuffle(all);
        const auto n_train =
            std::max<std::size_t>(1, std::size_t(std::llround(spec.train_fraction * double(all.size()))));
        out.train.assign(all.begin(), all.begin() + std::ptrdiff_t(n_train));
        out.test.assign(all.begin() + std::ptrdiff_t(n_train), all.end());
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

std::vector<double> gather_features(const data::HsiCube& cube, std::span<const std::size_t> pixels,
                                    std::span<const std::size_t> bands)
{
    for (std::size_t b : bands)
        if (b >= cube.bands)
            throw ConfigError("selected band " + std::to_string(b) + " out of range");
    std::vector<double> x(pixels.size() * bands.size());
    for (std::size_t i = 0; i < pixels.size(); ++i)
        for (std::size_t j = 0; j < bands.size(); ++j)
            x[i * bands.size() + j] = cube.values[pixels[i] * cube.bands + bands[j]];
    return x;
}

std::vector<std::uint32_t> classify_knn(std::span<const double> train_x, std::span<const std::uint32_t> train_y,
                                        std::span<const double> test_x, std::size_t dims, std::size_t k_neighbors)
{
    if (dims == 0)
        throw ConfigError("k-NN needs at least one feature");
    if (k_neighbors == 0)
        throw ConfigError("k-NN needs k >= 1");
    if (train_y.empty())
        throw ConfigError("k-NN training set is empty");
    if (train_x.size() != train_y.size() * dims || test_x.size() % dims != 0)
        throw DimensionError("k-NN feature arrays do not match " + std::to_string(dims) + " dimensions");

    const std::size_t n_train = train_y.size();
    const std::size_t n_test = test_x.size() / dims;
    const std::size_t k = std::min(k_neighbors, n_train);
    const std::uint32_t max_label = *std::max_element(train_y.begin(), train_y.end());
    std::vector<std::uint32_t> out(n_test);

#pragma omp parallel
    {
        std::vector<std::pair<double, std::size_t>> dist(n_train);
        std::vector<std::size_t> votes(std::size_t(max_label) + 1);
#pragma omp for schedule(static)
        for (std::int64_t ti = 0; ti < std::int64_t(n_test); ++ti) {
            const double* q = test_x.data() + std::size_t(ti) * dims;
            for (std::size_t i = 0; i < n_train; ++i) {
                const double* r = train_x.data() + i * dims;
                double d = 0.0;
                for (std::size_t j = 0; j < dims; ++j)
                    d += (q[j] - r[j]) * (q[j] - r[j]);
                dist[i] = {d, i};
            }
            std::partial_sort(dist.begin(), dist.begin() + std::ptrdiff_t(k), dist.end());
            std::fill(votes.begin(), votes.end(), 0);
            for (std::size_t i = 0; i < k; ++i)
                ++votes[train_y[dist[i].second]];
            out[std::size_t(ti)] = std::uint32_t(std::max_element(votes.begin(), votes.end()) - votes.begin());
        }
    }
    return out;
}

ClassReport report(std::span<const std::uint32_t> truth, std::span<const std::uint32_t> predicted,
                   std::size_t classes)
{
    if (truth.size() != predicted.size())
        throw DimensionError("report: " + std::to_string(truth.size()) + " labels vs " +
                             std::to_string(predicted.size()) + " predictions");
    if (truth.empty())
        throw DataError("report: no samples");
    ClassReport r;
    r.confusion.assign(classes, std::vector<std::uint64_t>(classes, 0));
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] >= classes || predicted[i] >= classes)
            throw DataError("report: label outside [0, " + std::to_string(classes) + ")");
        ++r.confusion[truth[i]][predicted[i]];
    }
    const double n = double(truth.size());
    double diag = 0.0, chance = 0.0, aa_sum = 0.0;
    std::size_t aa_count = 0;
    r.per_class_accuracy.assign(classes, std::numeric_limits<double>::quiet_NaN());
    for (std::size_t c = 0; c < classes; ++c) {
        double row = 0.0, col = 0.0;
        for (std::size_t j = 0; j < classes; ++j) {
            row += double(r.confusion[c][j]);
            col += double(r.confusion[j][c]);
        }
        diag += double(r.confusion[c][c]);
        chance += (row / n) * (col / n);
        if (row > 0) {
            r.per_class_accuracy[c] = double(r.confusion[c][c]) / row;
            aa_sum += r.per_class_accuracy[c];
            ++aa_count;
        }
    }
    r.oa = diag / n;
    r.aa = aa_sum / double(aa_count);
    r.kappa = chance < 1.0 ? (r.oa - chance) / (1.0 - chance) : (r.oa == 1.0 ? 1.0 : 0.0);
    return r;
}

Selector ranking_selector(std::string name, std::vector<std::size_t> ranking)
{
    return {std::move(name), [ranking = std::move(ranking)](std::size_t k, std::uint64_t) {
                if (k > ranking.size())
                    throw ConfigError("k=" + std::to_string(k) + " exceeds the ranking length " +
                                      std::to_string(ranking.size()));
                return std::vector<std::size_t>(ranking.begin(), ranking.begin() + std::ptrdiff_t(k));
            }};
}

Selector random_selector(std::size_t bands)
{
    return {"random", [bands](std::size_t k, std::uint64_t seed) {
                if (k > bands)
                    throw ConfigError("k=" + std::to_string(k) + " exceeds the band count");
                std::vector<std::size_t> all(bands);
                std::iota(all.begin(), all.end(), 0);
                Rng rng(seed ^ 0xa0761d6478bd642fULL);
                rng.shuffle(all);
                all.resize(k);
                return all;
            }};
}

std::uint64_t run_seed(std::uint64_t base_seed, std::size_t run) { return base_seed + run; }

std::vector<SweepRow> sweep(const data::HsiCube& cube, std::span<const Selector> selectors, const SweepConfig& cfg)
{
    if (!cube.has_ground_truth())
        throw DataError("evaluation needs a cube with ground truth labels");
    if (cfg.runs == 0)
        throw ConfigError("runs must be >= 1");
    if (cfg.ks.empty())
        throw ConfigError("no k values given");
    for (std::size_t k : cfg.ks)
        if (k == 0 || k > cube.bands)
            throw ConfigError("k=" + std::to_string(k) + " must lie in [1, " + std::to_string(cube.bands) + "]");

    const std::uint32_t max_label = *std::max_element(cube.ground_truth.begin(), cube.ground_truth.end());
    const std::size_t classes = max_label;  // ids 1..max map to 0..max-1

    // Splits depend only on the run seed, so compute them once.
    std::vector<Split> splits;
    for (std::size_t r = 0; r < cfg.runs; ++r)
        splits.push_back(split(cube, {cfg.train_fraction, true, run_seed(cfg.base_seed, r)}));

    std::vector<SweepRow> rows;
    for (const Selector& sel : selectors)
        for (std::size_t k : cfg.ks)
            for (std::size_t r = 0; r < cfg.runs; ++r) {
                const std::uint64_t seed = run_seed(cfg.base_seed, r);
                const Split& s = splits[r];
                const auto bands = sel.select(k, seed);
                const auto train_x = gather_features(cube, s.train, bands);
                const auto test_x = gather_features(cube, s.test, bands);
                std::vector<std::uint32_t> train_y, test_y;
                for (std::size_t p : s.train)
                    train_y.push_back(cube.ground_truth[p] - 1);
                for (std::size_t p : s.test)
                    test_y.push_back(cube.ground_truth[p] - 1);
                const auto pred = classify_knn(train_x, train_y, test_x, bands.size(), cfg.k_neighbors);
                const auto rep = report(test_y, pred, classes);
                rows.push_back({sel.name, k, seed, rep.oa, rep.aa, rep.kappa});
            }
    return rows;
}

std::vector<SweepSummary> summarize(std::span<const SweepRow> rows)
{
    std::vector<SweepSummary> out;
    std::vector<std::vector<const SweepRow*>> groups;
    for (const SweepRow& row : rows) {
        auto it = std::find_if(out.begin(), out.end(),
                               [&](const SweepSummary& s) { return s.selector == row.selector && s.k == row.k; });
        if (it == out.end()) {
            out.push_back({row.selector, row.k, 0, 0, 0, 0, 0, 0, 0});
            groups.emplace_back();
            it = out.end() - 1;
        }
        groups[std::size_t(it - out.begin())].push_back(&row);
    }
    auto stats = [](const std::vector<const SweepRow*>& g, double SweepRow::*field, double& mean, double& sd) {
        mean = 0.0;
        for (const auto* r : g)
            mean += r->*field;
        mean /= double(g.size());
        double ss = 0.0;
        for (const auto* r : g)
            ss += (r->*field - mean) * (r->*field - mean);
        sd = std::sqrt(ss / double(g.size()));
    };
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i].runs = groups[i].size();
        stats(groups[i], &SweepRow::oa, out[i].oa_mean, out[i].oa_std);
        stats(groups[i], &SweepRow::aa, out[i].aa_mean, out[i].aa_std);
        stats(groups[i], &SweepRow::kappa, out[i].kappa_mean, out[i].kappa_std);
    }
    return out;
}

void write_sweep_csv(std::ostream& os, std::span<const SweepRow> rows)
{
    const auto old = os.precision(17);
    os << "selector,k,run_seed,oa,aa,kappa\n";
    for (const auto& r : rows)
        os << r.selector << ',' << r.k << ',' << r.run_seed << ',' << r.oa << ',' << r.aa << ',' << r.kappa << '\n';
    os.precision(old);
}

void write_summary_csv(std::ostream& os, std::span<const SweepSummary> rows)
{
    const auto old = os.precision(17);
    os << "selector,k,runs,oa_mean,oa_std,aa_mean,aa_std,kappa_mean,kappa_std\n";
    for (const auto& r : rows)
        os << r.selector << ',' << r.k << ',' << r.runs << ',' << r.oa_mean << ',' << r.oa_std << ',' << r.aa_mean
           << ',' << r.aa_std << ',' << r.kappa_mean << ',' << r.kappa_std << '\n';
    os.precision(old);
}

std::vector<std::size_t> parse_k_range(const std::string& spec)
{
    std::vector<long long> parts;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ':')) {
        try {
            std::size_t used = 0;
            parts.push_back(std::stoll(item, &used));
            if (used != item.size())
                throw ConfigError("");
        } catch (const std::exception&) {
            throw ConfigError("invalid k range '" + spec + "' (expected start:end:step)");
        }
    }
    if (parts.size() == 1)
        parts = {parts[0], parts[0], 1};
    else if (parts.size() == 2)
        parts.push_back(1);
    if (parts.size() != 3 || parts[0] < 1 || parts[1] < parts[0] || parts[2] < 1)
        throw ConfigError("invalid k range '" + spec + "' (expected start:end:step with 1 <= start <= end, step >= 1)");
    std::vector<std::size_t> ks;
    for (long long k = parts[0]; k <= parts[1]; k += parts[2])
        ks.push_back(std::size_t(k));
    return ks;
}

}  // namespace bandsel::eval
