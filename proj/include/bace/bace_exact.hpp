#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "bace/bace.hpp"
#include "bace/error.hpp"
#include "bace/types.hpp"

namespace bace {
namespace detail {

// Gauss-Legendre nodes/weights on [-1, 1] by Newton iteration on P_n.
inline void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
    x.assign(static_cast<std::size_t>(n), 0.0);
    w.assign(static_cast<std::size_t>(n), 0.0);
    const double pi = 3.14159265358979323846;
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double z = std::cos(pi * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p1 = 1.0, p2 = 0.0;
            for (int k = 0; k < n; ++k) {
                const double p3 = p2;
                p2 = p1;
                p1 = ((2.0 * k + 1.0) * z * p2 - k * p3) / (k + 1.0);
            }
            pp = n * (z * p1 - p2) / (z * z - 1.0);
            const double dz = p1 / pp;
            z -= dz;
            if (std::abs(dz) < 1e-15) break;
        }
        x[static_cast<std::size_t>(i)] = -z;
        x[static_cast<std::size_t>(n - 1 - i)] = z;
        w[static_cast<std::size_t>(i)] = 2.0 / ((1.0 - z * z) * pp * pp);
        w[static_cast<std::size_t>(n - 1 - i)] = w[static_cast<std::size_t>(i)];
    }
}

}  // namespace detail

// Exact per-item posteriors for tiny instances: truth assignments are
// enumerated, the truth prior integral is closed-form, and each coder's
// (beta, gamma) block is integrated by tensor-product Gauss-Legendre
// quadrature. Independent of the sampler; used to validate it.
inline std::vector<std::vector<double>> bace_exact_posterior_small(const AnnotationMatrix& m,
                                                                   const BacePriors& priors,
                                                                   int grid_resolution) {
    const int N = m.n_items();
    const int J = m.n_coders();
    const int K = m.labels().k();
    if (N == 0) throw invalid_input("exact posterior: empty matrix");
    if (N > 3 || J > 3 || K > 3)
        throw invalid_input("exact posterior: instance exceeds size limits (3 items, 3 coders, 3 labels)");
    if (grid_resolution < 2) throw invalid_input("exact posterior: grid_resolution must be >= 2");

    const auto pr = detail::resolve_priors(priors, K);

    std::vector<double> gx, gw;
    detail::gauss_legendre(grid_resolution, gx, gw);
    std::vector<double> ux(gx.size()), uw(gw.size());  // mapped to (0, 1)
    for (std::size_t i = 0; i < gx.size(); ++i) {
        ux[i] = 0.5 * (gx[i] + 1.0);
        uw[i] = 0.5 * gw[i];
    }
    const int R = grid_resolution;

    // Per coder: integral of the likelihood factor over (beta, gamma) for each
    // match/mismatch pattern of its observed items. Prior normalizing
    // constants are shared across truth assignments and dropped.
    struct CoderBlock {
        std::vector<int> obs_items;
        std::vector<int> obs_labels;
        std::vector<double> integral;  // indexed by match bitmask
    };
    std::vector<CoderBlock> blocks(static_cast<std::size_t>(J));
    for (int j = 0; j < J; ++j) {
        auto& blk = blocks[static_cast<std::size_t>(j)];
        for (int i = 0; i < N; ++i) {
            if (!m.has(i, j)) continue;
            blk.obs_items.push_back(i);
            blk.obs_labels.push_back(m.cell(i, j));
        }
        const std::size_t n_obs = blk.obs_items.size();
        blk.integral.assign(std::size_t{1} << n_obs, 0.0);

        std::vector<double> g(static_cast<std::size_t>(K));
        const int gamma_dims = K - 1;
        std::vector<int> idx(static_cast<std::size_t>(gamma_dims), 0);
        for (int ib = 0; ib < R; ++ib) {
            const double b = ux[static_cast<std::size_t>(ib)];
            const double kern_b = std::pow(b, pr.beta_a - 1.0) * std::pow(1.0 - b, pr.beta_b - 1.0);
            std::fill(idx.begin(), idx.end(), 0);
            while (true) {
                // Stick-breaking map from the unit cube onto the simplex.
                double jac = 1.0, rem = 1.0, wu = 1.0;
                for (int d = 0; d < gamma_dims; ++d) {
                    const double u = ux[static_cast<std::size_t>(idx[static_cast<std::size_t>(d)])];
                    wu *= uw[static_cast<std::size_t>(idx[static_cast<std::size_t>(d)])];
                    g[static_cast<std::size_t>(d)] = rem * u;
                    jac *= rem;
                    rem -= g[static_cast<std::size_t>(d)];
                }
                g[static_cast<std::size_t>(K - 1)] = rem;

                double kern_g = 1.0;
                for (int k = 0; k < K; ++k) kern_g *= std::pow(g[static_cast<std::size_t>(k)], pr.gamma[static_cast<std::size_t>(k)] - 1.0);
                const double base = uw[static_cast<std::size_t>(ib)] * wu * jac * kern_b * kern_g;

                for (std::size_t pat = 0; pat < blk.integral.size(); ++pat) {
                    double p = base;
                    for (std::size_t o = 0; o < n_obs; ++o) {
                        const double gl = g[static_cast<std::size_t>(blk.obs_labels[o])];
                        double f = (1.0 - b) * gl;
                        if (pat & (std::size_t{1} << o)) f += b;
                        p *= f;
                    }
                    blk.integral[pat] += p;
                }

                int d = gamma_dims - 1;
                for (; d >= 0; --d) {
                    if (++idx[static_cast<std::size_t>(d)] < R) break;
                    idx[static_cast<std::size_t>(d)] = 0;
                }
                if (d < 0) break;
            }
        }
    }

    // Enumerate truth assignments; the pi integral reduces to rising
    // factorials of the pseudo-counts (shared denominator dropped).
    std::vector<std::vector<double>> marg(static_cast<std::size_t>(N),
                                          std::vector<double>(static_cast<std::size_t>(K), 0.0));
    std::vector<int> t(static_cast<std::size_t>(N), 0);
    std::vector<int> counts(static_cast<std::size_t>(K));
    while (true) {
        std::fill(counts.begin(), counts.end(), 0);
        for (int i = 0; i < N; ++i) ++counts[static_cast<std::size_t>(t[static_cast<std::size_t>(i)])];
        double score = 1.0;
        for (int k = 0; k < K; ++k)
            for (int r = 0; r < counts[static_cast<std::size_t>(k)]; ++r) score *= pr.pi[static_cast<std::size_t>(k)] + r;
        for (int j = 0; j < J; ++j) {
            const auto& blk = blocks[static_cast<std::size_t>(j)];
            std::size_t pat = 0;
            for (std::size_t o = 0; o < blk.obs_items.size(); ++o)
                if (blk.obs_labels[o] == t[static_cast<std::size_t>(blk.obs_items[o])]) pat |= std::size_t{1} << o;
            score *= blk.integral[pat];
        }
        for (int i = 0; i < N; ++i) marg[static_cast<std::size_t>(i)][static_cast<std::size_t>(t[static_cast<std::size_t>(i)])] += score;

        int i = N - 1;
        for (; i >= 0; --i) {
            if (++t[static_cast<std::size_t>(i)] < K) break;
            t[static_cast<std::size_t>(i)] = 0;
        }
        if (i < 0) break;
    }

    for (auto& row : marg) {
        double z = 0.0;
        for (double v : row) z += v;
        if (!(z > 0.0)) throw invalid_input("exact posterior: zero total mass (degenerate priors?)");
        for (double& v : row) v /= z;
    }
    return marg;
}

}  // namespace bace
