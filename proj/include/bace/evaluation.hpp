#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "bace/bace.hpp"
#include "bace/dawid_skene.hpp"
#include "bace/error.hpp"
#include "bace/majority.hpp"
#include "bace/types.hpp"

namespace bace {

// Gold items split by coder agreement: unanimous (>= 2 annotations) items are
// clear, conflicting ones ambiguous, under-annotated ones excluded.
struct GoldPartition {
    std::set<std::string> clear_items;
    std::set<std::string> ambiguous_items;
    std::set<std::string> excluded_items;
};

inline GoldPartition partition_gold(const AnnotationMatrix& m, const GoldSet& gold) {
    GoldPartition out;
    for (const auto& [item_id, code] : gold.entries()) {
        (void)code;
        const auto idx = m.item_index(item_id);
        if (!idx) throw invalid_input("gold item absent from annotations: " + item_id);
        const int i = *idx;
        int n = 0;
        bool unanimous = true;
        int first = -1;
        for (int j = 0; j < m.n_coders(); ++j) {
            if (!m.has(i, j)) continue;
            ++n;
            if (first < 0)
                first = m.cell(i, j);
            else if (m.cell(i, j) != first)
                unanimous = false;
        }
        if (n < 2)
            out.excluded_items.insert(item_id);
        else if (unanimous)
            out.clear_items.insert(item_id);
        else
            out.ambiguous_items.insert(item_id);
    }
    return out;
}

inline double accuracy(const std::map<std::string, int>& predictions, const GoldSet& gold,
                       const std::set<std::string>& subset) {
    if (subset.empty()) throw invalid_input("accuracy: empty subset");
    int correct = 0;
    for (const auto& item_id : subset) {
        const auto pred = predictions.find(item_id);
        if (pred == predictions.end()) throw invalid_input("accuracy: no prediction for " + item_id);
        const auto g = gold.label(item_id);
        if (!g) throw invalid_input("accuracy: no gold label for " + item_id);
        if (pred->second == *g) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(subset.size());
}

struct AccuracyRow {
    std::string model;
    std::optional<double> ambiguous_accuracy;  // empty when the subset is empty
    std::optional<double> clear_accuracy;
    int n_ambiguous = 0;
    int n_clear = 0;
};

struct AccuracyTable {
    std::vector<AccuracyRow> rows;  // bace, ds, majority
    int n_excluded = 0;
};

// Fits all three models on the full matrix and scores their MAP labels on the
// clear and ambiguous gold subsets.
inline AccuracyTable model_comparison(const AnnotationMatrix& m, const GoldSet& gold,
                                      const GibbsConfig& gibbs_cfg = {},
                                      const DawidSkeneOptions& ds_opts = {},
                                      TieMode tie = TieMode::deterministic,
                                      std::uint64_t majority_seed = 0) {
    const GoldPartition parts = partition_gold(m, gold);

    const auto bace_pred = bace_fit(m, gibbs_cfg).predictions();
    const auto ds_result = ds_fit(m, ds_opts);
    const auto ds_pred = ds_result.predictions(m);
    const auto mv_pred = majority_vote(m, tie, majority_seed).predictions();

    AccuracyTable table;
    table.n_excluded = static_cast<int>(parts.excluded_items.size());
    const std::vector<std::pair<std::string, const std::map<std::string, int>*>> models = {
        {"bace", &bace_pred}, {"ds", &ds_pred}, {"majority", &mv_pred}};
    for (const auto& [name, pred] : models) {
        AccuracyRow row;
        row.model = name;
        row.n_ambiguous = static_cast<int>(parts.ambiguous_items.size());
        row.n_clear = static_cast<int>(parts.clear_items.size());
        if (!parts.ambiguous_items.empty()) row.ambiguous_accuracy = accuracy(*pred, gold, parts.ambiguous_items);
        if (!parts.clear_items.empty()) row.clear_accuracy = accuracy(*pred, gold, parts.clear_items);
        table.rows.push_back(std::move(row));
    }
    return table;
}

}  // namespace bace
