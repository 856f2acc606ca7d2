#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "bace/error.hpp"
#include "bace/stats.hpp"
#include "bace/types.hpp"

namespace bace {

// One statistic for an unordered coder pair, indices into matrix.coders().
struct PairStat {
    int coder_a = 0;
    int coder_b = 0;
    double value = 0.0;
};

struct PairwiseResult {
    std::vector<PairStat> pairwise;  // in (a, b) index order, a < b
    double average = 0.0;
};

struct FleissResult {
    double kappa = 0.0;
    double observed = 0.0;
    double expected = 0.0;
    int excluded_items = 0;  // items not annotated by every coder
};

// Every field of the standard nominal-reliability panel.
struct ReliabilityReport {
    int n_coders = 0;
    int n_cases = 0;
    std::size_t n_decisions = 0;
    PairwiseResult percent_agreement;
    PairwiseResult cohens_kappa;
    FleissResult fleiss;
    double krippendorff_alpha = 0.0;
};

namespace detail {

inline std::vector<std::pair<int, int>> coder_pairs(const AnnotationMatrix& m) {
    if (m.n_coders() < 2) throw invalid_input("reliability statistics need at least 2 coders");
    std::vector<std::pair<int, int>> pairs;
    for (int a = 0; a < m.n_coders(); ++a)
        for (int b = a + 1; b < m.n_coders(); ++b) pairs.emplace_back(a, b);
    return pairs;
}

// Sorted before summing so the result is identical under any coder
// relabeling that permutes the pair values.
inline double pair_average(const std::vector<PairStat>& stats) {
    std::vector<double> vals;
    vals.reserve(stats.size());
    for (const auto& p : stats) vals.push_back(p.value);
    std::sort(vals.begin(), vals.end());
    double s = 0.0;
    for (double v : vals) s += v;
    return s / static_cast<double>(vals.size());
}

}  // namespace detail

// Fraction of jointly annotated items on which each coder pair agrees.
inline PairwiseResult percent_agreement(const AnnotationMatrix& m) {
    PairwiseResult out;
    for (const auto& [a, b] : detail::coder_pairs(m)) {
        int joint = 0, agree = 0;
        for (int i = 0; i < m.n_items(); ++i) {
            if (!m.has(i, a) || !m.has(i, b)) continue;
            ++joint;
            if (m.cell(i, a) == m.cell(i, b)) ++agree;
        }
        if (joint == 0)
            throw invalid_input("coders " + m.coders()[a] + " and " + m.coders()[b] +
                                " share no jointly annotated items");
        out.pairwise.push_back({a, b, static_cast<double>(agree) / joint});
    }
    out.average = detail::pair_average(out.pairwise);
    return out;
}

// Chance-corrected pairwise agreement, with expected agreement from the two
// coders' marginal label distributions over their jointly annotated items.
inline PairwiseResult cohens_kappa(const AnnotationMatrix& m) {
    const int K = m.labels().k();
    PairwiseResult out;
    for (const auto& [a, b] : detail::coder_pairs(m)) {
        std::vector<long long> marg_a(K, 0), marg_b(K, 0);
        int joint = 0, agree = 0;
        for (int i = 0; i < m.n_items(); ++i) {
            if (!m.has(i, a) || !m.has(i, b)) continue;
            ++joint;
            ++marg_a[m.cell(i, a)];
            ++marg_b[m.cell(i, b)];
            if (m.cell(i, a) == m.cell(i, b)) ++agree;
        }
        if (joint == 0)
            throw invalid_input("coders " + m.coders()[a] + " and " + m.coders()[b] +
                                " share no jointly annotated items");
        const double po = static_cast<double>(agree) / joint;
        // Integer numerator keeps the value independent of label ordering.
        long long pe_num = 0;
        for (int k = 0; k < K; ++k) pe_num += marg_a[k] * marg_b[k];
        const double pe = static_cast<double>(pe_num) / (static_cast<double>(joint) * joint);
        if (pe >= 1.0)
            throw invalid_input("Cohen's kappa undefined for coders " + m.coders()[a] + " and " +
                                m.coders()[b] + ": expected agreement is 1");
        out.pairwise.push_back({a, b, (po - pe) / (1.0 - pe)});
    }
    out.average = detail::pair_average(out.pairwise);
    return out;
}

// Fleiss' kappa over the items annotated by every coder; partially annotated
// items are excluded and counted rather than rejected.
inline FleissResult fleiss_kappa(const AnnotationMatrix& m) {
    const int K = m.labels().k();
    const int coders = m.n_coders();
    if (coders < 2) throw invalid_input("Fleiss' kappa needs at least 2 coders");

    FleissResult out;
    std::vector<long long> label_totals(K, 0);
    double sum_pi = 0.0;
    int n = 0;
    for (int i = 0; i < m.n_items(); ++i) {
        if (m.annotation_count(i) != coders) {
            ++out.excluded_items;
            continue;
        }
        ++n;
        std::vector<long long> counts(K, 0);
        for (int j = 0; j < coders; ++j) ++counts[m.cell(i, j)];
        long long pi_num = 0;
        for (int k = 0; k < K; ++k) {
            pi_num += counts[k] * (counts[k] - 1);
            label_totals[k] += counts[k];
        }
        sum_pi += static_cast<double>(pi_num) / (static_cast<double>(coders) * (coders - 1));
    }
    if (n < 2) throw invalid_input("Fleiss' kappa needs at least 2 fully annotated items");

    out.observed = sum_pi / n;
    // Integer numerator keeps the value independent of label ordering.
    long long expected_num = 0;
    for (int k = 0; k < K; ++k) expected_num += label_totals[k] * label_totals[k];
    const double total = static_cast<double>(n) * coders;
    out.expected = static_cast<double>(expected_num) / (total * total);
    if (out.expected >= 1.0) throw invalid_input("Fleiss' kappa undefined: expected agreement is 1");
    out.kappa = (out.observed - out.expected) / (1.0 - out.expected);
    return out;
}

// Nominal Krippendorff's alpha, coincidence-matrix formulation with the
// off-diagonal sums collapsed to integer arithmetic (the matrix row totals
// are the plain label counts), so the value cannot drift under label or
// coder reordering. Items with fewer than 2 annotations carry no pairable
// values and are ignored.
inline double krippendorff_alpha(const AnnotationMatrix& m) {
    const int K = m.labels().k();
    std::vector<long long> label_counts(K, 0);
    long long n_pairable = 0;
    double observed_sum = 0.0;  // disagreeing ordered pairs per item, / (mu - 1)

    for (int i = 0; i < m.n_items(); ++i) {
        std::vector<long long> counts(K, 0);
        long long mu = 0;
        for (int j = 0; j < m.n_coders(); ++j) {
            if (!m.has(i, j)) continue;
            ++counts[m.cell(i, j)];
            ++mu;
        }
        if (mu < 2) continue;
        long long same = 0;
        for (int k = 0; k < K; ++k) {
            same += counts[k] * counts[k];
            label_counts[k] += counts[k];
        }
        observed_sum += static_cast<double>(mu * mu - same) / static_cast<double>(mu - 1);
        n_pairable += mu;
    }
    if (n_pairable <= 0) throw invalid_input("Krippendorff's alpha: no pairable values");

    long long cross = n_pairable * n_pairable;
    for (int k = 0; k < K; ++k) cross -= label_counts[k] * label_counts[k];
    if (cross == 0) {
        // Single value among the pairable data: no disagreement is possible.
        return 1.0;
    }
    return 1.0 - observed_sum * (static_cast<double>(n_pairable) - 1.0) / static_cast<double>(cross);
}

inline ReliabilityReport reliability_report(const AnnotationMatrix& m) {
    ReliabilityReport r;
    r.n_coders = m.n_coders();
    r.n_cases = m.n_items();
    r.n_decisions = m.n_decisions();
    r.percent_agreement = percent_agreement(m);
    r.cohens_kappa = cohens_kappa(m);
    r.fleiss = fleiss_kappa(m);
    r.krippendorff_alpha = krippendorff_alpha(m);
    return r;
}

}  // namespace bace
