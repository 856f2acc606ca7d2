// Shared test support: matrix builders, independently coded metric oracles,
// and a subprocess harness for the CLI binary. Oracles here deliberately use
// different formulations than the library so agreement is meaningful.
#pragma once

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "bace/simulation.hpp"
#include "bace/types.hpp"

namespace testsup {

// Rows are items, columns coders; "" marks a missing cell. Item ids i1..iN,
// coder ids c1..cJ. Label codes follow first appearance unless given.
inline bace::AnnotationMatrix make_matrix(const std::vector<std::vector<std::string>>& rows,
                                          std::vector<std::string> label_order = {}) {
    std::vector<bace::AnnotationRecord> records;
    std::vector<std::string> seen;
    for (const auto& row : rows)
        for (const auto& v : row)
            if (!v.empty() && std::find(seen.begin(), seen.end(), v) == seen.end()) seen.push_back(v);
    if (label_order.empty()) label_order = seen;
    bace::LabelSet labels(label_order);
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j) {
            if (rows[i][j].empty()) continue;
            records.push_back({"i" + std::to_string(i + 1), "c" + std::to_string(j + 1),
                               labels.code(rows[i][j]).value()});
        }
    return bace::build_matrix(bace::AnnotationTable(std::move(records), std::move(labels)));
}

// Random complete or ragged matrix for property tests; test-local generator,
// unrelated to the library's.
inline bace::AnnotationMatrix random_matrix(std::mt19937& gen, int n_items, int n_coders, int K,
                                            double missing_chance = 0.0) {
    std::vector<std::string> names;
    for (int k = 0; k < K; ++k) names.push_back(std::string(1, static_cast<char>('A' + k)));
    std::uniform_int_distribution<int> lab(0, K - 1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<std::vector<std::string>> rows;
    for (int i = 0; i < n_items; ++i) {
        std::vector<std::string> row;
        int kept = 0;
        for (int j = 0; j < n_coders; ++j) {
            if (missing_chance > 0.0 && u(gen) < missing_chance) {
                row.push_back("");
            } else {
                row.push_back(names[static_cast<std::size_t>(lab(gen))]);
                ++kept;
            }
        }
        if (kept == 0) row[0] = names[static_cast<std::size_t>(lab(gen))];
        rows.push_back(std::move(row));
    }
    return make_matrix(rows, names);
}

// ---- reliability oracles ----

inline double oracle_pair_percent(const bace::AnnotationMatrix& m, int a, int b) {
    int joint = 0, agree = 0;
    for (int i = 0; i < m.n_items(); ++i) {
        if (!m.has(i, a) || !m.has(i, b)) continue;
        ++joint;
        if (m.cell(i, a) == m.cell(i, b)) ++agree;
    }
    return static_cast<double>(agree) / joint;
}

inline double oracle_pair_cohen(const bace::AnnotationMatrix& m, int a, int b) {
    const int K = m.labels().k();
    std::vector<double> ma(static_cast<std::size_t>(K), 0.0), mb(static_cast<std::size_t>(K), 0.0);
    int joint = 0, agree = 0;
    for (int i = 0; i < m.n_items(); ++i) {
        if (!m.has(i, a) || !m.has(i, b)) continue;
        ++joint;
        ma[static_cast<std::size_t>(m.cell(i, a))] += 1.0;
        mb[static_cast<std::size_t>(m.cell(i, b))] += 1.0;
        if (m.cell(i, a) == m.cell(i, b)) ++agree;
    }
    const double po = static_cast<double>(agree) / joint;
    double pe = 0.0;
    for (int k = 0; k < K; ++k) pe += (ma[static_cast<std::size_t>(k)] / joint) * (mb[static_cast<std::size_t>(k)] / joint);
    return (po - pe) / (1.0 - pe);
}

// Fleiss' kappa by literally counting agreeing ordered coder pairs on the
// fully annotated items.
inline double oracle_fleiss(const bace::AnnotationMatrix& m) {
    const int J = m.n_coders();
    const int K = m.labels().k();
    double sum_item_agreement = 0.0;
    int n_full = 0;
    std::vector<double> pooled(static_cast<std::size_t>(K), 0.0);
    for (int i = 0; i < m.n_items(); ++i) {
        if (m.annotation_count(i) != J) continue;
        ++n_full;
        int agree_pairs = 0;
        for (int a = 0; a < J; ++a)
            for (int b = 0; b < J; ++b) {
                if (a == b) continue;
                if (m.cell(i, a) == m.cell(i, b)) ++agree_pairs;
            }
        sum_item_agreement += static_cast<double>(agree_pairs) / (J * (J - 1));
        for (int j = 0; j < J; ++j) pooled[static_cast<std::size_t>(m.cell(i, j))] += 1.0;
    }
    const double observed = sum_item_agreement / n_full;
    double expected = 0.0;
    for (int k = 0; k < K; ++k) {
        const double pk = pooled[static_cast<std::size_t>(k)] / (static_cast<double>(n_full) * J);
        expected += pk * pk;
    }
    return (observed - expected) / (1.0 - expected);
}

// Nominal alpha from average within-item disagreement, not the coincidence
// matrix.
inline double oracle_alpha(const bace::AnnotationMatrix& m) {
    const int K = m.labels().k();
    std::vector<double> counts(static_cast<std::size_t>(K), 0.0);
    double n_total = 0.0, d_obs_sum = 0.0;
    for (int i = 0; i < m.n_items(); ++i) {
        const int mi = m.annotation_count(i);
        if (mi < 2) continue;
        n_total += mi;
        int mismatch = 0;
        for (int a = 0; a < m.n_coders(); ++a) {
            if (!m.has(i, a)) continue;
            counts[static_cast<std::size_t>(m.cell(i, a))] += 1.0;
            for (int b = 0; b < m.n_coders(); ++b) {
                if (b == a || !m.has(i, b)) continue;
                if (m.cell(i, a) != m.cell(i, b)) ++mismatch;
            }
        }
        d_obs_sum += static_cast<double>(mismatch) / (mi - 1);
    }
    const double d_o = d_obs_sum / n_total;
    double cross = 0.0;
    for (int c = 0; c < K; ++c)
        for (int k = 0; k < K; ++k)
            if (c != k) cross += counts[static_cast<std::size_t>(c)] * counts[static_cast<std::size_t>(k)];
    const double d_e = cross / (n_total * (n_total - 1.0));
    if (d_e == 0.0) return d_o == 0.0 ? 1.0 : -1.0;
    return 1.0 - d_o / d_e;
}

// ---- Dawid-Skene oracle (2 coders, 2 labels) ----

// Observed-data log-likelihood parameterized by the class prior and each
// coder's two diagonal confusion entries.
inline double ds_ll_k2(const std::vector<std::array<int, 2>>& items, double p,
                       const std::array<std::array<double, 2>, 2>& diag) {
    double ll = 0.0;
    for (const auto& it : items) {
        double lik = 0.0;
        for (int t = 0; t < 2; ++t) {
            double term = t == 0 ? p : 1.0 - p;
            for (int j = 0; j < 2; ++j) {
                const int a = it[static_cast<std::size_t>(j)];
                if (a < 0) continue;
                const double d = diag[static_cast<std::size_t>(j)][static_cast<std::size_t>(t)];
                term *= a == t ? d : 1.0 - d;
            }
            lik += term;
        }
        ll += std::log(lik);
    }
    return ll;
}

// Best observed-data log-likelihood by dense grid search plus cyclic
// per-coordinate ternary refinement. Independent of the EM code path.
inline double oracle_ds_best_ll_k2(const std::vector<std::array<int, 2>>& items) {
    const double lo = 0.0, hi = 1.0;  // optima can sit exactly on the boundary
    std::array<double, 5> best{0.5, 0.5, 0.5, 0.5, 0.5};
    double best_ll = -1e300;
    const int G = 21;
    auto eval = [&](const std::array<double, 5>& v) {
        return ds_ll_k2(items, v[0], {{{v[1], v[2]}, {v[3], v[4]}}});
    };
    std::array<double, 5> v{};
    std::array<int, 5> idx{};
    const auto node = [&](int t) { return lo + (hi - lo) * t / (G - 1); };
    while (true) {
        for (int d = 0; d < 5; ++d) v[static_cast<std::size_t>(d)] = node(idx[static_cast<std::size_t>(d)]);
        const double ll = eval(v);
        if (ll > best_ll) {
            best_ll = ll;
            best = v;
        }
        int d = 4;
        for (; d >= 0; --d) {
            if (++idx[static_cast<std::size_t>(d)] < G) break;
            idx[static_cast<std::size_t>(d)] = 0;
        }
        if (d < 0) break;
    }

    for (int cycle = 0; cycle < 300; ++cycle) {
        const double before = best_ll;
        for (int d = 0; d < 5; ++d) {
            double a = lo, b = hi;
            for (int it = 0; it < 200; ++it) {
                const double m1 = a + (b - a) / 3.0, m2 = b - (b - a) / 3.0;
                auto v1 = best, v2 = best;
                v1[static_cast<std::size_t>(d)] = m1;
                v2[static_cast<std::size_t>(d)] = m2;
                if (eval(v1) < eval(v2))
                    a = m1;
                else
                    b = m2;
            }
            auto cand = best;
            cand[static_cast<std::size_t>(d)] = 0.5 * (a + b);
            const double ll = eval(cand);
            if (ll > best_ll) {
                best_ll = ll;
                best = cand;
            }
        }
        if (best_ll - before < 1e-13) break;
    }
    return best_ll;
}

// ---- simulation oracle ----

// Exact optimal prediction accuracy for a complete-design population
// (missing_rate 0): enumerate every annotation pattern.
inline double exact_optimal_accuracy(const bace::SimConfig& cfg) {
    const int K = static_cast<int>(cfg.labels.size());
    const int J = static_cast<int>(cfg.coders.size());
    std::vector<int> a(static_cast<std::size_t>(J), 0);
    double correct = 0.0;
    while (true) {
        double best = 0.0;
        for (int k = 0; k < K; ++k) {
            double p = cfg.pi_true[static_cast<std::size_t>(k)];
            for (int j = 0; j < J; ++j) {
                const auto& c = cfg.coders[static_cast<std::size_t>(j)];
                const int aj = a[static_cast<std::size_t>(j)];
                double f = (1.0 - c.beta_true) * c.gamma_true[static_cast<std::size_t>(aj)];
                if (aj == k) f += c.beta_true;
                p *= f;
            }
            if (p > best) best = p;
        }
        correct += best;
        int j = J - 1;
        for (; j >= 0; --j) {
            if (++a[static_cast<std::size_t>(j)] < K) break;
            a[static_cast<std::size_t>(j)] = 0;
        }
        if (j < 0) break;
    }
    return correct;
}

// ---- CLI harness ----

struct CliResult {
    int exit_code = -1;
    std::string output;  // stdout and stderr interleaved
};

inline std::string shell_quote(const std::string& s) {
    std::string out = "'";
    for (char c : s) {
        if (c == '\'')
            out += "'\\''";
        else
            out += c;
    }
    return out + "'";
}

inline CliResult run_cli(const std::vector<std::string>& args) {
    std::string cmd = shell_quote(BACE_CLI_PATH);
    for (const auto& a : args) cmd += " " + shell_quote(a);
    cmd += " 2>&1";
    CliResult res;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return res;
    char buf[4096];
    std::size_t n;
    while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) res.output.append(buf, n);
    const int status = pclose(pipe);
    res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return res;
}

class TempDir {
public:
    TempDir() {
        auto base = std::filesystem::temp_directory_path();
        for (int i = 0; i < 10000; ++i) {
            auto p = base / ("bace_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter_++));
            std::error_code ec;
            if (std::filesystem::create_directory(p, ec)) {
                path_ = p;
                return;
            }
        }
        throw std::runtime_error("cannot create temp dir");
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    static inline int counter_ = 0;
    std::filesystem::path path_;
};

inline void write_text(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

inline std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace testsup
