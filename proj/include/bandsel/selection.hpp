#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace bandsel {

/// Outcome of any band selector: a full ranking plus its top-k prefix.
struct SelectionResult {
    std::string method;
    /// Band indices, most important first; a permutation of 0..b-1.
    std::vector<std::size_t> ranking;
    std::vector<std::size_t> top_k;
    /// Score each ranking was derived from (averaged attention weight, variance, ...).
    std::vector<double> averaged_weights;
    std::vector<double> loss_trace;
    /// Averaged weights after every epoch, [epoch][band]; may be empty.
    std::vector<std::vector<double>> weights_history;
    /// Free-form configuration snapshot embedded in the JSON output.
    nlohmann::json config = nlohmann::json::object();
};

/// Ranks bands by descending score, lower index first on ties, and keeps k.
/// Throws ConfigError unless 1 <= k <= scores.size().
SelectionResult select_top_k(std::span<const double> scores, std::size_t k);

nlohmann::json to_json(const SelectionResult& r);
SelectionResult selection_from_json(const nlohmann::json& j);

/// "epoch,b0,b1,..." then one row per epoch.
void write_weights_history_csv(std::ostream& os, const SelectionResult& r);
/// "epoch,loss" rows.
void write_loss_csv(std::ostream& os, const SelectionResult& r);

}  // namespace bandsel
