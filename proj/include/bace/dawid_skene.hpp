#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "bace/error.hpp"
#include "bace/types.hpp"

namespace bace {

struct DawidSkeneOptions {
    int max_iters = 1000;
    double tol = 1e-7;       // relative log-likelihood change
    double smoothing = 0.01; // pseudo-count added to every M-step count
};

struct DawidSkeneResult {
    // confusions[j][k][l] = P(coder j emits l | truth is k)
    std::vector<std::vector<std::vector<double>>> confusions;
    std::vector<double> prior;
    std::vector<std::vector<double>> posteriors;  // per item, sums to 1
    std::vector<int> map_labels;                  // argmax posterior, lowest code on ties
    std::vector<double> log_likelihood_trace;     // observed-data, one entry per E-step
    int iterations = 0;
    bool converged = false;

    std::map<std::string, int> predictions(const AnnotationMatrix& m) const {
        std::map<std::string, int> out;
        for (int i = 0; i < m.n_items(); ++i) out[m.items()[i]] = map_labels[static_cast<std::size_t>(i)];
        return out;
    }
};

namespace detail {

// Per-item unnormalized posterior over truths; log-space fallback keeps long
// coder products from underflowing.
inline void ds_item_scores(const AnnotationMatrix& m, int item, const std::vector<double>& prior,
                           const std::vector<std::vector<std::vector<double>>>& confusions,
                           std::vector<double>& scores) {
    const int K = m.labels().k();
    double max_score = 0.0;
    for (int k = 0; k < K; ++k) {
        double p = prior[static_cast<std::size_t>(k)];
        for (int j = 0; j < m.n_coders(); ++j) {
            if (!m.has(item, j)) continue;
            p *= confusions[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)]
                           [static_cast<std::size_t>(m.cell(item, j))];
        }
        scores[static_cast<std::size_t>(k)] = p;
        if (p > max_score) max_score = p;
    }
    if (max_score > 0.0) return;

    // All products underflowed; redo in log space.
    std::vector<double> logs(static_cast<std::size_t>(K));
    double max_log = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < K; ++k) {
        double lp = std::log(prior[static_cast<std::size_t>(k)]);
        for (int j = 0; j < m.n_coders(); ++j) {
            if (!m.has(item, j)) continue;
            lp += std::log(confusions[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)]
                                     [static_cast<std::size_t>(m.cell(item, j))]);
        }
        logs[static_cast<std::size_t>(k)] = lp;
        if (lp > max_log) max_log = lp;
    }
    for (int k = 0; k < K; ++k)
        scores[static_cast<std::size_t>(k)] =
            std::isfinite(max_log) ? std::exp(logs[static_cast<std::size_t>(k)] - max_log) : 0.0;
}

}  // namespace detail

// Confusion-matrix truth model fitted by EM from a soft majority-vote
// initialization. Missing annotations drop out of the E-step products.
inline DawidSkeneResult ds_fit(const AnnotationMatrix& m, const DawidSkeneOptions& opts = {}) {
    if (m.n_items() == 0) throw invalid_input("ds_fit: empty matrix");
    if (m.n_coders() < 2) throw invalid_input("ds_fit: need at least 2 coders");
    if (opts.max_iters < 1) throw invalid_input("ds_fit: max_iters must be >= 1");
    if (!(opts.tol > 0.0)) throw invalid_input("ds_fit: tol must be > 0");
    if (opts.smoothing < 0.0) throw invalid_input("ds_fit: smoothing must be >= 0");

    const int K = m.labels().k();
    const int N = m.n_items();
    const int J = m.n_coders();
    const double s = opts.smoothing;

    // Soft init: each item contributes its normalized vote histogram.
    std::vector<std::vector<double>> q(static_cast<std::size_t>(N),
                                       std::vector<double>(static_cast<std::size_t>(K), 0.0));
    for (int i = 0; i < N; ++i) {
        int total = 0;
        for (int j = 0; j < J; ++j) {
            if (!m.has(i, j)) continue;
            q[static_cast<std::size_t>(i)][static_cast<std::size_t>(m.cell(i, j))] += 1.0;
            ++total;
        }
        if (total == 0) throw invalid_input("ds_fit: item " + m.items()[i] + " has no annotations");
        for (double& v : q[static_cast<std::size_t>(i)]) v /= total;
    }

    std::vector<double> prior(static_cast<std::size_t>(K), 0.0);
    std::vector<std::vector<std::vector<double>>> confusions(
        static_cast<std::size_t>(J),
        std::vector<std::vector<double>>(static_cast<std::size_t>(K),
                                         std::vector<double>(static_cast<std::size_t>(K), 0.0)));

    auto m_step = [&] {
        double prior_total = 0.0;
        for (int k = 0; k < K; ++k) {
            double c = s;
            for (int i = 0; i < N; ++i) c += q[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
            prior[static_cast<std::size_t>(k)] = c;
            prior_total += c;
        }
        for (double& v : prior) v /= prior_total;

        for (int j = 0; j < J; ++j) {
            for (int k = 0; k < K; ++k) {
                auto& row = confusions[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)];
                std::fill(row.begin(), row.end(), s);
                double row_total = static_cast<double>(K) * s;
                for (int i = 0; i < N; ++i) {
                    if (!m.has(i, j)) continue;
                    const double w = q[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
                    row[static_cast<std::size_t>(m.cell(i, j))] += w;
                    row_total += w;
                }
                if (row_total > 0.0)
                    for (double& v : row) v /= row_total;
                else
                    std::fill(row.begin(), row.end(), 1.0 / K);
            }
        }
    };

    DawidSkeneResult result;
    m_step();

    std::vector<double> scores(static_cast<std::size_t>(K));
    for (int iter = 1; iter <= opts.max_iters; ++iter) {
        double ll = 0.0;
        for (int i = 0; i < N; ++i) {
            detail::ds_item_scores(m, i, prior, confusions, scores);
            double z = 0.0;
            for (double v : scores) z += v;
            ll += std::log(z);
            for (int k = 0; k < K; ++k) q[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] = scores[static_cast<std::size_t>(k)] / z;
        }
        if (!std::isfinite(ll))
            throw invalid_input("ds_fit: non-finite likelihood (zero smoothing with degenerate counts?)");

        result.log_likelihood_trace.push_back(ll);
        result.iterations = iter;
        if (iter > 1) {
            const double prev = result.log_likelihood_trace[static_cast<std::size_t>(iter) - 2];
            if (std::abs(ll - prev) <= opts.tol * std::abs(prev)) {
                result.converged = true;
                break;
            }
        }
        if (iter < opts.max_iters) m_step();
    }

    result.prior = prior;
    result.confusions = confusions;
    result.posteriors = q;
    result.map_labels.resize(static_cast<std::size_t>(N));
    for (int i = 0; i < N; ++i) {
        int best = 0;
        for (int k = 1; k < K; ++k)
            if (q[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] > q[static_cast<std::size_t>(i)][static_cast<std::size_t>(best)]) best = k;
        result.map_labels[static_cast<std::size_t>(i)] = best;
    }
    return result;
}

}  // namespace bace
