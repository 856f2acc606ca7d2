#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "bace/error.hpp"
#include "bace/rng.hpp"
#include "bace/types.hpp"

namespace bace {

enum class TieMode {
    deterministic,  // most frequent label in the whole dataset, then lowest code
    sampled         // draw from the dataset label distribution restricted to the tie
};

struct MajorityItem {
    std::string item_id;
    int label = 0;
    std::vector<int> votes;  // per label code
    bool tie_broken = false;
};

struct MajorityResult {
    std::vector<MajorityItem> items;

    std::map<std::string, int> predictions() const {
        std::map<std::string, int> out;
        for (const auto& it : items) out[it.item_id] = it.label;
        return out;
    }
};

// Plurality vote per item. Ties consume one draw from the seeded generator in
// sampled mode (items are visited in matrix order; untied items consume
// nothing), so results are reproducible for a given seed.
inline MajorityResult majority_vote(const AnnotationMatrix& m,
                                    TieMode tie_mode = TieMode::deterministic,
                                    std::uint64_t seed = 0) {
    const int K = m.labels().k();

    std::vector<double> dataset_freq(K, 0.0);
    for (int i = 0; i < m.n_items(); ++i)
        for (int j = 0; j < m.n_coders(); ++j)
            if (m.has(i, j)) dataset_freq[m.cell(i, j)] += 1.0;

    Rng rng(seed);
    MajorityResult out;
    out.items.reserve(static_cast<std::size_t>(m.n_items()));

    for (int i = 0; i < m.n_items(); ++i) {
        MajorityItem item;
        item.item_id = m.items()[i];
        item.votes.assign(static_cast<std::size_t>(K), 0);
        int total = 0;
        for (int j = 0; j < m.n_coders(); ++j) {
            if (!m.has(i, j)) continue;
            ++item.votes[m.cell(i, j)];
            ++total;
        }
        if (total == 0) throw invalid_input("item " + item.item_id + " has no annotations");

        int best = 0;
        for (int k = 1; k < K; ++k)
            if (item.votes[k] > item.votes[best]) best = k;

        std::vector<int> tied;
        for (int k = 0; k < K; ++k)
            if (item.votes[k] == item.votes[best]) tied.push_back(k);

        if (tied.size() == 1) {
            item.label = best;
        } else {
            item.tie_broken = true;
            if (tie_mode == TieMode::deterministic) {
                int pick = tied[0];
                for (int k : tied)
                    if (dataset_freq[k] > dataset_freq[pick]) pick = k;
                item.label = pick;
            } else {
                std::vector<double> weights;
                weights.reserve(tied.size());
                for (int k : tied) weights.push_back(dataset_freq[k]);
                item.label = tied[static_cast<std::size_t>(rng.categorical(weights))];
            }
        }
        out.items.push_back(std::move(item));
    }
    return out;
}

}  // namespace bace
