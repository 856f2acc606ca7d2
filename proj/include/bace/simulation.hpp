#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "bace/error.hpp"
#include "bace/rng.hpp"
#include "bace/types.hpp"

namespace bace {

struct SimCoder {
    std::string coder_id;
    double beta_true = 1.0;                 // chance of copying the true label
    std::vector<double> gamma_true;         // label pmf used otherwise
};

struct SimConfig {
    int n_items = 0;
    std::vector<SimCoder> coders;
    std::vector<double> pi_true;            // truth label pmf
    double missing_rate = 0.0;
    std::uint64_t seed = 0;
    std::vector<std::string> labels;        // label names in code order
};

struct SimData {
    AnnotationMatrix matrix;
    std::map<std::string, int> truth;  // item_id -> label code
};

namespace detail {

inline void validate_pmf(const std::vector<double>& p, int K, const char* what) {
    if (p.size() != static_cast<std::size_t>(K)) throw invalid_input(std::string(what) + ": needs one entry per label");
    double z = 0.0;
    for (double v : p) {
        if (v < 0.0) throw invalid_input(std::string(what) + ": negative probability");
        z += v;
    }
    if (std::abs(z - 1.0) > 1e-9) throw invalid_input(std::string(what) + ": probabilities must sum to 1");
}

}  // namespace detail

inline void validate_sim_config(const SimConfig& cfg) {
    LabelSet labels(cfg.labels);  // validates count, uniqueness, non-emptiness
    const int K = labels.k();
    if (cfg.n_items < 1) throw invalid_input("simulate: n_items must be >= 1");
    if (cfg.coders.empty()) throw invalid_input("simulate: at least one coder required");
    if (!(cfg.missing_rate >= 0.0 && cfg.missing_rate < 1.0))
        throw invalid_input("simulate: missing_rate must be in [0, 1)");
    detail::validate_pmf(cfg.pi_true, K, "simulate: pi_true");
    std::set<std::string> seen;
    for (const auto& c : cfg.coders) {
        if (c.coder_id.empty()) throw invalid_input("simulate: empty coder_id");
        if (!seen.insert(c.coder_id).second) throw invalid_input("simulate: duplicate coder_id " + c.coder_id);
        if (!(c.beta_true >= 0.0 && c.beta_true <= 1.0))
            throw invalid_input("simulate: beta_true must be in [0, 1] for " + c.coder_id);
        detail::validate_pmf(c.gamma_true, K, "simulate: gamma_true");
    }
}

// Forward run of the generative model. Draw order per item: the true label,
// then per coder a drop draw (only when missing_rate > 0), then for kept
// cells an honesty draw, then (if not honest) a bias draw. An item whose
// every annotation was dropped repeats its coder pass until one survives.
inline SimData simulate_dataset(const SimConfig& cfg) {
    validate_sim_config(cfg);
    LabelSet labels(cfg.labels);
    Rng rng(cfg.seed);
    const int J = static_cast<int>(cfg.coders.size());

    std::map<std::string, int> truth;
    std::vector<AnnotationRecord> records;
    std::vector<int> drawn(static_cast<std::size_t>(J));
    for (int i = 0; i < cfg.n_items; ++i) {
        const std::string item_id = "item_" + std::to_string(i + 1);
        const int t = rng.categorical(cfg.pi_true);
        truth[item_id] = t;

        bool any = false;
        while (!any) {
            for (int j = 0; j < J; ++j) {
                drawn[static_cast<std::size_t>(j)] = -1;
                if (cfg.missing_rate > 0.0 && rng.uniform() < cfg.missing_rate) continue;
                const auto& c = cfg.coders[static_cast<std::size_t>(j)];
                drawn[static_cast<std::size_t>(j)] = rng.bernoulli(c.beta_true) ? t : rng.categorical(c.gamma_true);
                any = true;
            }
        }
        for (int j = 0; j < J; ++j)
            if (drawn[static_cast<std::size_t>(j)] >= 0)
                records.push_back({item_id, cfg.coders[static_cast<std::size_t>(j)].coder_id,
                                   drawn[static_cast<std::size_t>(j)]});
    }

    return SimData{build_matrix(AnnotationTable(std::move(records), std::move(labels))), std::move(truth)};
}

// Accuracy of the argmax predictor under the true generating parameters;
// the ceiling no fitted model should beat systematically.
inline double bayes_oracle_accuracy(const SimConfig& cfg, const AnnotationMatrix& m,
                                    const std::map<std::string, int>& truth) {
    validate_sim_config(cfg);
    if (m.n_items() == 0) throw invalid_input("oracle accuracy: empty matrix");
    if (m.labels().names() != cfg.labels) throw invalid_input("oracle accuracy: label set mismatch");
    const int K = m.labels().k();

    std::vector<const SimCoder*> col(static_cast<std::size_t>(m.n_coders()), nullptr);
    for (int j = 0; j < m.n_coders(); ++j) {
        for (const auto& c : cfg.coders)
            if (c.coder_id == m.coders()[j]) col[static_cast<std::size_t>(j)] = &c;
        if (!col[static_cast<std::size_t>(j)])
            throw invalid_input("oracle accuracy: coder " + m.coders()[j] + " not in config");
    }

    int correct = 0;
    std::vector<double> w(static_cast<std::size_t>(K));
    for (int i = 0; i < m.n_items(); ++i) {
        const auto it = truth.find(m.items()[i]);
        if (it == truth.end()) throw invalid_input("oracle accuracy: no truth for item " + m.items()[i]);
        for (int k = 0; k < K; ++k) {
            double p = cfg.pi_true[static_cast<std::size_t>(k)];
            for (int j = 0; j < m.n_coders(); ++j) {
                if (!m.has(i, j)) continue;
                const int a = m.cell(i, j);
                const auto& c = *col[static_cast<std::size_t>(j)];
                double f = (1.0 - c.beta_true) * c.gamma_true[static_cast<std::size_t>(a)];
                if (a == k) f += c.beta_true;
                p *= f;
            }
            w[static_cast<std::size_t>(k)] = p;
        }
        int best = 0;
        for (int k = 1; k < K; ++k)
            if (w[static_cast<std::size_t>(k)] > w[static_cast<std::size_t>(best)]) best = k;
        if (best == it->second) ++correct;
    }
    return static_cast<double>(correct) / m.n_items();
}

// Three-coder sentiment-style population used by the acceptance suite and the
// CLI simulate defaults.
inline SimConfig default_sim_config(int n_items = 2000, std::uint64_t seed = 0) {
    SimConfig cfg;
    cfg.labels = {"negative", "neutral", "positive"};
    cfg.n_items = n_items;
    cfg.seed = seed;
    cfg.pi_true = {0.2, 0.6, 0.2};
    cfg.coders = {
        {"coder_1", 0.784, {0.085, 0.693, 0.222}},
        {"coder_2", 0.728, {0.192, 0.614, 0.194}},
        {"coder_3", 0.755, {0.177, 0.649, 0.174}},
    };
    return cfg;
}

}  // namespace bace
