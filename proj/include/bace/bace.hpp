#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include "bace/error.hpp"
#include "bace/rng.hpp"
#include "bace/stats.hpp"
#include "bace/types.hpp"

namespace bace {

struct BetaPrior {
    double a = 2.0;
    double b = 2.0;
};

struct BacePriors {
    BetaPrior beta_prior;              // pseudo-counts for coder competence
    std::vector<double> gamma_prior;   // per-label pseudo-counts; empty means all 1
    std::vector<double> pi_prior;      // per-label pseudo-counts; empty means all 1
};

struct GibbsConfig {
    int burn_in = 500;
    int samples = 2000;  // kept iterations per chain
    int chains = 2;
    std::uint64_t seed = 0;
    BacePriors priors;
};

struct CoderProfile {
    std::string coder_id;
    double beta_mean = 0.0;
    Interval beta_interval_95;
    std::vector<double> gamma_mean;
    std::vector<Interval> gamma_interval_95;
};

struct PosteriorLabel {
    std::string item_id;
    std::vector<double> pmf;
    int map_label = 0;
    Interval map_probability_interval_95;
};

struct BaceResult {
    std::vector<CoderProfile> profiles;
    std::vector<double> truth_prior_mean;
    std::vector<PosteriorLabel> labels;
    GibbsConfig config;
    std::vector<int> chain_sample_counts;
    std::vector<std::string> warnings;

    std::map<std::string, int> predictions() const {
        std::map<std::string, int> out;
        for (const auto& l : labels) out[l.item_id] = l.map_label;
        return out;
    }
};

namespace detail {

struct ResolvedPriors {
    double beta_a, beta_b;
    std::vector<double> gamma;
    std::vector<double> pi;
};

inline ResolvedPriors resolve_priors(const BacePriors& p, int K) {
    ResolvedPriors r;
    r.beta_a = p.beta_prior.a;
    r.beta_b = p.beta_prior.b;
    r.gamma = p.gamma_prior.empty() ? std::vector<double>(static_cast<std::size_t>(K), 1.0) : p.gamma_prior;
    r.pi = p.pi_prior.empty() ? std::vector<double>(static_cast<std::size_t>(K), 1.0) : p.pi_prior;
    if (r.gamma.size() != static_cast<std::size_t>(K) || r.pi.size() != static_cast<std::size_t>(K))
        throw invalid_input("priors: pseudo-count vectors must have one entry per label");
    if (!(r.beta_a > 0.0) || !(r.beta_b > 0.0)) throw invalid_input("priors: competence pseudo-counts must be > 0");
    for (double v : r.gamma)
        if (!(v > 0.0)) throw invalid_input("priors: bias pseudo-counts must be > 0");
    for (double v : r.pi)
        if (!(v > 0.0)) throw invalid_input("priors: truth pseudo-counts must be > 0");
    return r;
}

// Truth-conditional weights with the honesty indicator collapsed out:
// w_k = pi_k * prod_j [beta_j if a_ij == k else 0  +  (1 - beta_j) * gamma_j(a_ij)].
// Falls back to log space when every direct product underflows.
inline void bace_truth_weights(const AnnotationMatrix& m, int item, const std::vector<double>& beta,
                               const std::vector<std::vector<double>>& gamma, const std::vector<double>& pi,
                               std::vector<double>& w) {
    const int K = m.labels().k();
    const int J = m.n_coders();
    double max_w = 0.0;
    for (int k = 0; k < K; ++k) {
        double p = pi[static_cast<std::size_t>(k)];
        for (int j = 0; j < J; ++j) {
            if (!m.has(item, j)) continue;
            const int a = m.cell(item, j);
            const double bj = beta[static_cast<std::size_t>(j)];
            double f = (1.0 - bj) * gamma[static_cast<std::size_t>(j)][static_cast<std::size_t>(a)];
            if (a == k) f += bj;
            p *= f;
        }
        w[static_cast<std::size_t>(k)] = p;
        if (p > max_w) max_w = p;
    }
    if (max_w > 0.0) return;

    std::vector<double> logs(static_cast<std::size_t>(K));
    double max_log = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < K; ++k) {
        double lp = std::log(pi[static_cast<std::size_t>(k)]);
        for (int j = 0; j < J; ++j) {
            if (!m.has(item, j)) continue;
            const int a = m.cell(item, j);
            const double bj = beta[static_cast<std::size_t>(j)];
            double f = (1.0 - bj) * gamma[static_cast<std::size_t>(j)][static_cast<std::size_t>(a)];
            if (a == k) f += bj;
            lp += std::log(f);
        }
        logs[static_cast<std::size_t>(k)] = lp;
        if (lp > max_log) max_log = lp;
    }
    for (int k = 0; k < K; ++k)
        w[static_cast<std::size_t>(k)] =
            std::isfinite(max_log) ? std::exp(logs[static_cast<std::size_t>(k)] - max_log) : 1.0;
}

struct ChainAccum {
    std::vector<std::uint32_t> truth_counts;  // n_items * K
    std::vector<double> beta_snaps;           // samples * J, params in effect per kept iteration
    std::vector<double> gamma_snaps;          // samples * J * K
    std::vector<double> pi_snaps;             // samples * K
};

inline void bace_run_chain(const AnnotationMatrix& m, const GibbsConfig& cfg, const ResolvedPriors& pr,
                           std::uint64_t chain_seed, ChainAccum& out) {
    const int N = m.n_items();
    const int J = m.n_coders();
    const int K = m.labels().k();
    Rng rng(chain_seed);

    // Deterministic start at prior means; T is drawn fresh in the first sweep.
    std::vector<double> beta(static_cast<std::size_t>(J), pr.beta_a / (pr.beta_a + pr.beta_b));
    std::vector<std::vector<double>> gamma(static_cast<std::size_t>(J), pr.gamma);
    std::vector<double> pi = pr.pi;
    for (auto& g : gamma) {
        double z = 0.0;
        for (double v : g) z += v;
        for (double& v : g) v /= z;
    }
    {
        double z = 0.0;
        for (double v : pi) z += v;
        for (double& v : pi) v /= z;
    }

    std::vector<int> truth(static_cast<std::size_t>(N), 0);
    std::vector<signed char> honest(static_cast<std::size_t>(N) * static_cast<std::size_t>(J), 0);

    out.truth_counts.assign(static_cast<std::size_t>(N) * static_cast<std::size_t>(K), 0);
    out.beta_snaps.reserve(static_cast<std::size_t>(cfg.samples) * static_cast<std::size_t>(J));
    out.gamma_snaps.reserve(static_cast<std::size_t>(cfg.samples) * static_cast<std::size_t>(J) *
                            static_cast<std::size_t>(K));
    out.pi_snaps.reserve(static_cast<std::size_t>(cfg.samples) * static_cast<std::size_t>(K));

    std::vector<double> w(static_cast<std::size_t>(K));
    const int total = cfg.burn_in + cfg.samples;
    for (int iter = 0; iter < total; ++iter) {
        const bool keep = iter >= cfg.burn_in;
        if (keep) {
            // Snapshot the parameters the truth draw below conditions on.
            out.beta_snaps.insert(out.beta_snaps.end(), beta.begin(), beta.end());
            for (const auto& g : gamma) out.gamma_snaps.insert(out.gamma_snaps.end(), g.begin(), g.end());
            out.pi_snaps.insert(out.pi_snaps.end(), pi.begin(), pi.end());
        }

        for (int i = 0; i < N; ++i) {
            bace_truth_weights(m, i, beta, gamma, pi, w);
            const int t = rng.categorical(w);
            truth[static_cast<std::size_t>(i)] = t;
            if (keep) ++out.truth_counts[static_cast<std::size_t>(i) * static_cast<std::size_t>(K) + static_cast<std::size_t>(t)];
        }

        // Honesty indicators; a draw is consumed only where annotation == truth.
        for (int i = 0; i < N; ++i) {
            for (int j = 0; j < J; ++j) {
                if (!m.has(i, j)) continue;
                const int a = m.cell(i, j);
                signed char& s = honest[static_cast<std::size_t>(i) * static_cast<std::size_t>(J) + static_cast<std::size_t>(j)];
                if (a != truth[static_cast<std::size_t>(i)]) {
                    s = 0;
                } else {
                    const double bj = beta[static_cast<std::size_t>(j)];
                    const double g = gamma[static_cast<std::size_t>(j)][static_cast<std::size_t>(a)];
                    s = rng.bernoulli(bj / (bj + (1.0 - bj) * g)) ? 1 : 0;
                }
            }
        }

        // Conjugate updates: all beta, then all gamma, then pi.
        for (int j = 0; j < J; ++j) {
            int n1 = 0, n0 = 0;
            for (int i = 0; i < N; ++i) {
                if (!m.has(i, j)) continue;
                if (honest[static_cast<std::size_t>(i) * static_cast<std::size_t>(J) + static_cast<std::size_t>(j)])
                    ++n1;
                else
                    ++n0;
            }
            beta[static_cast<std::size_t>(j)] = rng.beta(pr.beta_a + n1, pr.beta_b + n0);
        }
        std::vector<double> alpha(static_cast<std::size_t>(K));
        for (int j = 0; j < J; ++j) {
            alpha = pr.gamma;
            for (int i = 0; i < N; ++i) {
                if (!m.has(i, j)) continue;
                if (!honest[static_cast<std::size_t>(i) * static_cast<std::size_t>(J) + static_cast<std::size_t>(j)])
                    alpha[static_cast<std::size_t>(m.cell(i, j))] += 1.0;
            }
            gamma[static_cast<std::size_t>(j)] = rng.dirichlet(alpha);
        }
        alpha = pr.pi;
        for (int i = 0; i < N; ++i) alpha[static_cast<std::size_t>(truth[static_cast<std::size_t>(i)])] += 1.0;
        pi = rng.dirichlet(alpha);
    }
}

}  // namespace detail

// Fits the competence/bias truth model by Gibbs sampling. Chains run
// independently (seed + chain index) and are pooled in index order, so the
// result is reproducible byte for byte for a given matrix and config.
inline BaceResult bace_fit(const AnnotationMatrix& m, const GibbsConfig& cfg = {}) {
    if (m.n_items() == 0) throw invalid_input("bace_fit: empty matrix");
    if (cfg.burn_in < 0) throw invalid_input("bace_fit: burn_in must be >= 0");
    if (cfg.samples < 1) throw invalid_input("bace_fit: samples must be >= 1");
    if (cfg.chains < 1) throw invalid_input("bace_fit: chains must be >= 1");
    for (int i = 0; i < m.n_items(); ++i)
        if (m.annotation_count(i) == 0)
            throw invalid_input("bace_fit: item " + m.items()[i] + " has no annotations");

    const int N = m.n_items();
    const int J = m.n_coders();
    const int K = m.labels().k();
    const auto pr = detail::resolve_priors(cfg.priors, K);

    BaceResult result;
    result.config = cfg;
    if (J < 3)
        result.warnings.push_back("only " + std::to_string(J) +
                                  " coder(s); estimates are weakly identified below the recommended 3");

    std::vector<detail::ChainAccum> accums(static_cast<std::size_t>(cfg.chains));
    if (cfg.chains == 1) {
        detail::bace_run_chain(m, cfg, pr, cfg.seed, accums[0]);
    } else {
        std::vector<std::thread> threads;
        std::vector<std::exception_ptr> errs(static_cast<std::size_t>(cfg.chains));
        for (int c = 0; c < cfg.chains; ++c) {
            threads.emplace_back([&, c] {
                try {
                    detail::bace_run_chain(m, cfg, pr, cfg.seed + static_cast<std::uint64_t>(c),
                                           accums[static_cast<std::size_t>(c)]);
                } catch (...) {
                    errs[static_cast<std::size_t>(c)] = std::current_exception();
                }
            });
        }
        for (auto& t : threads) t.join();
        for (auto& e : errs)
            if (e) std::rethrow_exception(e);
    }

    const std::size_t total_samples = static_cast<std::size_t>(cfg.chains) * static_cast<std::size_t>(cfg.samples);

    // Pooled empirical truth frequencies.
    result.labels.resize(static_cast<std::size_t>(N));
    for (int i = 0; i < N; ++i) {
        auto& lab = result.labels[static_cast<std::size_t>(i)];
        lab.item_id = m.items()[i];
        lab.pmf.assign(static_cast<std::size_t>(K), 0.0);
        for (const auto& acc : accums)
            for (int k = 0; k < K; ++k)
                lab.pmf[static_cast<std::size_t>(k)] +=
                    acc.truth_counts[static_cast<std::size_t>(i) * static_cast<std::size_t>(K) + static_cast<std::size_t>(k)];
        for (double& v : lab.pmf) v /= static_cast<double>(total_samples);
        lab.map_label = 0;
        for (int k = 1; k < K; ++k)
            if (lab.pmf[static_cast<std::size_t>(k)] > lab.pmf[static_cast<std::size_t>(lab.map_label)]) lab.map_label = k;
    }

    // Interval on the MAP label: percentiles of the exact per-iteration
    // conditional probability, recomputed from the parameter snapshots.
    {
        std::vector<double> series(total_samples);
        std::vector<double> w(static_cast<std::size_t>(K));
        std::vector<double> beta(static_cast<std::size_t>(J));
        std::vector<std::vector<double>> gamma(static_cast<std::size_t>(J),
                                               std::vector<double>(static_cast<std::size_t>(K)));
        std::vector<double> pi(static_cast<std::size_t>(K));
        for (int i = 0; i < N; ++i) {
            std::size_t pos = 0;
            for (const auto& acc : accums) {
                for (int s = 0; s < cfg.samples; ++s) {
                    const std::size_t bo = static_cast<std::size_t>(s) * static_cast<std::size_t>(J);
                    const std::size_t go = bo * static_cast<std::size_t>(K);
                    const std::size_t po = static_cast<std::size_t>(s) * static_cast<std::size_t>(K);
                    for (int j = 0; j < J; ++j) {
                        beta[static_cast<std::size_t>(j)] = acc.beta_snaps[bo + static_cast<std::size_t>(j)];
                        for (int k = 0; k < K; ++k)
                            gamma[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)] =
                                acc.gamma_snaps[go + static_cast<std::size_t>(j) * static_cast<std::size_t>(K) + static_cast<std::size_t>(k)];
                    }
                    for (int k = 0; k < K; ++k) pi[static_cast<std::size_t>(k)] = acc.pi_snaps[po + static_cast<std::size_t>(k)];
                    detail::bace_truth_weights(m, i, beta, gamma, pi, w);
                    double z = 0.0;
                    for (double v : w) z += v;
                    series[pos++] = w[static_cast<std::size_t>(result.labels[static_cast<std::size_t>(i)].map_label)] / z;
                }
            }
            result.labels[static_cast<std::size_t>(i)].map_probability_interval_95 = interval_95(series);
        }
    }

    // Coder profiles and the truth prior from pooled parameter draws.
    {
        std::vector<double> series(total_samples);
        result.profiles.resize(static_cast<std::size_t>(J));
        for (int j = 0; j < J; ++j) {
            auto& prof = result.profiles[static_cast<std::size_t>(j)];
            prof.coder_id = m.coders()[j];
            std::size_t pos = 0;
            for (const auto& acc : accums)
                for (int s = 0; s < cfg.samples; ++s)
                    series[pos++] = acc.beta_snaps[static_cast<std::size_t>(s) * static_cast<std::size_t>(J) + static_cast<std::size_t>(j)];
            prof.beta_mean = mean(series);
            prof.beta_interval_95 = interval_95(series);
            prof.gamma_mean.resize(static_cast<std::size_t>(K));
            prof.gamma_interval_95.resize(static_cast<std::size_t>(K));
            for (int k = 0; k < K; ++k) {
                pos = 0;
                for (const auto& acc : accums)
                    for (int s = 0; s < cfg.samples; ++s)
                        series[pos++] = acc.gamma_snaps[(static_cast<std::size_t>(s) * static_cast<std::size_t>(J) + static_cast<std::size_t>(j)) * static_cast<std::size_t>(K) + static_cast<std::size_t>(k)];
                prof.gamma_mean[static_cast<std::size_t>(k)] = mean(series);
                prof.gamma_interval_95[static_cast<std::size_t>(k)] = interval_95(series);
            }
        }
        result.truth_prior_mean.resize(static_cast<std::size_t>(K));
        for (int k = 0; k < K; ++k) {
            std::size_t pos = 0;
            for (const auto& acc : accums)
                for (int s = 0; s < cfg.samples; ++s)
                    series[pos++] = acc.pi_snaps[static_cast<std::size_t>(s) * static_cast<std::size_t>(K) + static_cast<std::size_t>(k)];
            result.truth_prior_mean[static_cast<std::size_t>(k)] = mean(series);
        }
    }

    result.chain_sample_counts.assign(static_cast<std::size_t>(cfg.chains), cfg.samples);
    return result;
}

}  // namespace bace
