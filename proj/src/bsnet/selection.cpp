#include "bandsel/selection.hpp"

#include "bandsel/errors.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>

namespace bandsel {

SelectionResult select_top_k(std::span<const double> scores, std::size_t k)
{
    if (k < 1 || k > scores.size())
        throw ConfigError("top-k: k=" + std::to_string(k) + " must lie in [1, " + std::to_string(scores.size()) + "]");
    SelectionResult r;
    r.ranking.resize(scores.size());
    std::iota(r.ranking.begin(), r.ranking.end(), 0);
    std::stable_sort(r.ranking.begin(), r.ranking.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    r.top_k.assign(r.ranking.begin(), r.ranking.begin() + std::ptrdiff_t(k));
    r.averaged_weights.assign(scores.begin(), scores.end());
    return r;
}

nlohmann::json to_json(const SelectionResult& r)
{
    nlohmann::json j;
    j["method"] = r.method;
    j["ranking"] = r.ranking;
    j["top_k"] = r.top_k;
    j["averaged_weights"] = r.averaged_weights;
    j["loss_trace"] = r.loss_trace;
    j["config"] = r.config;
    return j;
}

SelectionResult selection_from_json(const nlohmann::json& j)
{
    SelectionResult r;
    try {
        r.method = j.value("method", std::string("unknown"));
        r.ranking = j.at("ranking").get<std::vector<std::size_t>>();
        r.top_k = j.value("top_k", std::vector<std::size_t>{});
        r.averaged_weights = j.value("averaged_weights", std::vector<double>{});
        r.loss_trace = j.value("loss_trace", std::vector<double>{});
        if (j.contains("config"))
            r.config = j["config"];
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed selection JSON: ") + e.what());
    }
    std::vector<bool> seen(r.ranking.size(), false);
    for (std::size_t b : r.ranking) {
        if (b >= seen.size() || seen[b])
            throw DataError("selection JSON: ranking is not a permutation of 0..b-1");
        seen[b] = true;
    }
    return r;
}

void write_weights_history_csv(std::ostream& os, const SelectionResult& r)
{
    const std::size_t bands = r.averaged_weights.size();
    os << "epoch";
    for (std::size_t b = 0; b < bands; ++b)
        os << ",b" << b;
    os << '\n';
    const auto old = os.precision(17);
    for (std::size_t e = 0; e < r.weights_history.size(); ++e) {
        os << e + 1;
        for (double w : r.weights_history[e])
            os << ',' << w;
        os << '\n';
    }
    os.precision(old);
}

void write_loss_csv(std::ostream& os, const SelectionResult& r)
{
    os << "epoch,loss\n";
    const auto old = os.precision(17);
    for (std::size_t e = 0; e < r.loss_trace.size(); ++e)
        os << e + 1 << ',' << r.loss_trace[e] << '\n';
    os.precision(old);
}

}  // namespace bandsel
