#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "bace/bace.hpp"
#include "bace/bace_exact.hpp"
#include "oracles.hpp"

using testsup::make_matrix;

namespace {

bace::GibbsConfig quick_config(std::uint64_t seed = 0) {
    bace::GibbsConfig cfg;
    cfg.burn_in = 200;
    cfg.samples = 800;
    cfg.chains = 2;
    cfg.seed = seed;
    return cfg;
}

}  // namespace

TEST(GibbsFitTest, UnanimousDataConcentratesOnConsensus) {
    const auto m = make_matrix({{"A", "A", "A"}, {"B", "B", "B"}, {"A", "A", "A"}});
    const auto r = bace::bace_fit(m, bace::GibbsConfig{});  // defaults
    const auto exact = bace::bace_exact_posterior_small(m, bace::BacePriors{}, 32);
    ASSERT_EQ(r.labels.size(), 3u);
    const std::vector<int> expected{0, 1, 0};
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_EQ(r.labels[i].map_label, expected[i]);
        EXPECT_GT(r.labels[i].pmf[static_cast<std::size_t>(expected[i])], 0.95);
        for (int k = 0; k < 2; ++k)
            EXPECT_NEAR(r.labels[i].pmf[static_cast<std::size_t>(k)], exact[i][static_cast<std::size_t>(k)], 0.03);
    }
    // Three unanimous items barely move competence off its prior mean of 0.5;
    // a longer unanimous run should push it well up.
    for (const auto& p : r.profiles) EXPECT_GT(p.beta_mean, 0.55);

    std::vector<std::vector<std::string>> rows(45, std::vector<std::string>{"A", "A", "A"});
    for (std::size_t i = 0; i < rows.size(); i += 3) rows[i] = {"B", "B", "B"};
    const auto big = bace::bace_fit(make_matrix(rows), bace::GibbsConfig{});
    for (const auto& p : big.profiles) EXPECT_GT(p.beta_mean, 0.8);
}

TEST(GibbsFitTest, OutputsAreWellFormedDistributions) {
    std::mt19937 gen(5);
    const auto m = testsup::random_matrix(gen, 12, 3, 3, 0.15);
    const auto r = bace::bace_fit(m, quick_config(3));
    for (const auto& lab : r.labels) {
        double z = 0.0;
        for (double v : lab.pmf) z += v;
        EXPECT_NEAR(z, 1.0, 1e-6);
        EXPECT_LE(lab.map_probability_interval_95.lo, lab.map_probability_interval_95.hi);
        EXPECT_GE(lab.map_probability_interval_95.lo, 0.0);
        EXPECT_LE(lab.map_probability_interval_95.hi, 1.0);
        EXPECT_GE(lab.pmf[static_cast<std::size_t>(lab.map_label)],
                  lab.map_probability_interval_95.lo - 0.1);
        EXPECT_LE(lab.pmf[static_cast<std::size_t>(lab.map_label)],
                  lab.map_probability_interval_95.hi + 0.1);
        int argmax = 0;
        for (int k = 1; k < 3; ++k)
            if (lab.pmf[static_cast<std::size_t>(k)] > lab.pmf[static_cast<std::size_t>(argmax)]) argmax = k;
        EXPECT_EQ(lab.pmf[static_cast<std::size_t>(lab.map_label)], lab.pmf[static_cast<std::size_t>(argmax)]);
    }
    for (const auto& p : r.profiles) {
        double z = 0.0;
        for (double v : p.gamma_mean) z += v;
        EXPECT_NEAR(z, 1.0, 1e-6);
        EXPECT_GE(p.beta_mean, 0.0);
        EXPECT_LE(p.beta_mean, 1.0);
        EXPECT_LE(p.beta_interval_95.lo, p.beta_mean);
        EXPECT_GE(p.beta_interval_95.hi, p.beta_mean);
        for (int k = 0; k < 3; ++k) {
            EXPECT_LE(p.gamma_interval_95[static_cast<std::size_t>(k)].lo, p.gamma_mean[static_cast<std::size_t>(k)]);
            EXPECT_GE(p.gamma_interval_95[static_cast<std::size_t>(k)].hi, p.gamma_mean[static_cast<std::size_t>(k)]);
        }
    }
    double z = 0.0;
    for (double v : r.truth_prior_mean) z += v;
    EXPECT_NEAR(z, 1.0, 1e-6);
    EXPECT_EQ(r.chain_sample_counts, (std::vector<int>{800, 800}));
}

TEST(GibbsFitTest, IdenticalConfigGivesIdenticalResult) {
    std::mt19937 gen(11);
    const auto m = testsup::random_matrix(gen, 10, 3, 3, 0.1);
    const auto cfg = quick_config(42);
    const auto r1 = bace::bace_fit(m, cfg);
    const auto r2 = bace::bace_fit(m, cfg);
    ASSERT_EQ(r1.labels.size(), r2.labels.size());
    for (std::size_t i = 0; i < r1.labels.size(); ++i) {
        EXPECT_EQ(r1.labels[i].pmf, r2.labels[i].pmf);
        EXPECT_EQ(r1.labels[i].map_label, r2.labels[i].map_label);
        EXPECT_EQ(r1.labels[i].map_probability_interval_95.lo, r2.labels[i].map_probability_interval_95.lo);
        EXPECT_EQ(r1.labels[i].map_probability_interval_95.hi, r2.labels[i].map_probability_interval_95.hi);
    }
    for (std::size_t j = 0; j < r1.profiles.size(); ++j) {
        EXPECT_EQ(r1.profiles[j].beta_mean, r2.profiles[j].beta_mean);
        EXPECT_EQ(r1.profiles[j].gamma_mean, r2.profiles[j].gamma_mean);
    }
    const auto r3 = bace::bace_fit(m, quick_config(43));
    bool any_diff = false;
    for (std::size_t i = 0; i < r1.labels.size(); ++i)
        if (r1.labels[i].pmf != r3.labels[i].pmf) any_diff = true;
    EXPECT_TRUE(any_diff);  // different seed actually changes the draws
}

TEST(GibbsFitTest, FewCodersProduceWarning) {
    const auto m = make_matrix({{"A", "A"}, {"B", "A"}, {"B", "B"}});
    const auto r = bace::bace_fit(m, quick_config());
    ASSERT_FALSE(r.warnings.empty());
    EXPECT_NE(r.warnings[0].find("3"), std::string::npos);
    const auto m3 = make_matrix({{"A", "A", "A"}, {"B", "A", "B"}});
    EXPECT_TRUE(bace::bace_fit(m3, quick_config()).warnings.empty());
}

TEST(GibbsFitTest, LabelSwapIsDistributionallyEquivariant) {
    const std::vector<std::vector<std::string>> rows = {
        {"A", "A", "B"}, {"B", "B", "B"}, {"A", "B", "A"}, {"A", "A", "A"}, {"B", "A", "B"}};
    std::vector<std::vector<std::string>> swapped;
    for (const auto& row : rows) {
        std::vector<std::string> out;
        for (const auto& v : row) out.push_back(v == "A" ? "B" : "A");
        swapped.push_back(out);
    }
    const auto m1 = make_matrix(rows, {"A", "B"});
    const auto m2 = make_matrix(swapped, {"A", "B"});
    double p1 = 0.0, p2 = 0.0;
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        p1 += bace::bace_fit(m1, quick_config(seed)).labels[0].pmf[0];
        p2 += bace::bace_fit(m2, quick_config(seed)).labels[0].pmf[1];
    }
    EXPECT_NEAR(p1 / 3.0, p2 / 3.0, 0.02);
}

TEST(GibbsFitTest, InvalidInputsFail) {
    bace::LabelSet ls({"A", "B"});
    bace::AnnotationMatrix empty({}, {}, {}, ls);
    EXPECT_THROW(bace::bace_fit(empty, quick_config()), bace::invalid_input);

    bace::AnnotationMatrix with_empty_item(
        {"i1", "i2"}, {"c1", "c2"},
        {0, 1, bace::AnnotationMatrix::kMissing, bace::AnnotationMatrix::kMissing}, ls);
    EXPECT_THROW(bace::bace_fit(with_empty_item, quick_config()), bace::invalid_input);

    const auto m = make_matrix({{"A", "B"}, {"B", "A"}});
    auto cfg = quick_config();
    cfg.samples = 0;
    EXPECT_THROW(bace::bace_fit(m, cfg), bace::invalid_input);
    cfg = quick_config();
    cfg.chains = 0;
    EXPECT_THROW(bace::bace_fit(m, cfg), bace::invalid_input);
    cfg = quick_config();
    cfg.priors.beta_prior.a = 0.0;
    EXPECT_THROW(bace::bace_fit(m, cfg), bace::invalid_input);
    cfg = quick_config();
    cfg.priors.gamma_prior = {1.0, 1.0, 1.0};  // K is 2
    EXPECT_THROW(bace::bace_fit(m, cfg), bace::invalid_input);
}

TEST(ExactPosteriorTest, UnannotatedItemReturnsPriorMean) {
    bace::LabelSet ls({"A", "B", "C"});
    bace::AnnotationMatrix m({"i1"}, {"c1"}, {bace::AnnotationMatrix::kMissing}, ls);
    bace::BacePriors priors;
    priors.pi_prior = {2.0, 1.0, 1.0};
    const auto post = bace::bace_exact_posterior_small(m, priors, 16);
    EXPECT_NEAR(post[0][0], 0.5, 1e-12);
    EXPECT_NEAR(post[0][1], 0.25, 1e-12);
    EXPECT_NEAR(post[0][2], 0.25, 1e-12);
}

TEST(ExactPosteriorTest, SymmetricDisagreementIsUniform) {
    const auto m = make_matrix({{"A", "B"}});
    const auto post = bace::bace_exact_posterior_small(m, bace::BacePriors{}, 32);
    EXPECT_NEAR(post[0][0], 0.5, 1e-9);
    EXPECT_NEAR(post[0][1], 0.5, 1e-9);
}

TEST(ExactPosteriorTest, SingleAnnotationHasClosedForm) {
    // One coder reporting the first of two labels: the likelihood is linear in
    // (beta, gamma), so the posterior only sees the prior means:
    // P(match) = E[beta] + E[1-beta] E[gamma_A] = 0.75 with the defaults.
    bace::LabelSet ls({"A", "B"});
    bace::AnnotationMatrix m({"i1"}, {"c1"}, {0}, ls);
    const auto post = bace::bace_exact_posterior_small(m, bace::BacePriors{}, 24);
    EXPECT_NEAR(post[0][0], 0.75, 1e-11);
    EXPECT_NEAR(post[0][1], 0.25, 1e-11);
}

TEST(ExactPosteriorTest, GridResolutionConverges) {
    const auto m = make_matrix({{"A", "B", "A"}, {"B", "B", "C"}, {"C", "A", "C"}});

    // Integer pseudo-counts make the integrand polynomial, so the quadrature
    // is exact once the rule covers the degree and resolutions must agree.
    bace::BacePriors whole;
    whole.beta_prior = {3.0, 2.0};
    whole.gamma_prior = {1.0, 2.0, 3.0};
    whole.pi_prior = {2.0, 1.0, 1.0};
    const auto coarse = bace::bace_exact_posterior_small(m, whole, 24);
    const auto fine = bace::bace_exact_posterior_small(m, whole, 48);
    for (int i = 0; i < 3; ++i)
        for (int k = 0; k < 3; ++k)
            EXPECT_NEAR(coarse[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)],
                        fine[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)], 1e-10);

    // Fractional pseudo-counts put branch points at the edges; convergence is
    // only algebraic there, so the self-consistency bar is looser.
    bace::BacePriors frac;
    frac.beta_prior = {3.0, 1.5};
    frac.gamma_prior = {1.0, 2.0, 1.5};
    frac.pi_prior = {2.0, 1.0, 1.0};
    const auto c2 = bace::bace_exact_posterior_small(m, frac, 24);
    const auto f2 = bace::bace_exact_posterior_small(m, frac, 48);
    for (int i = 0; i < 3; ++i)
        for (int k = 0; k < 3; ++k)
            EXPECT_NEAR(c2[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)],
                        f2[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)], 1e-4);
}

TEST(ExactPosteriorTest, GibbsAgreesOnSingleCoderInstance) {
    bace::LabelSet ls({"A", "B"});
    bace::AnnotationMatrix m({"i1"}, {"c1"}, {0}, ls);
    const auto exact = bace::bace_exact_posterior_small(m, bace::BacePriors{}, 32);
    const auto fit = bace::bace_fit(m, bace::GibbsConfig{});  // defaults
    EXPECT_NEAR(fit.labels[0].pmf[0], exact[0][0], 0.03);
}

TEST(ExactPosteriorTest, SizeLimitsEnforced) {
    std::vector<std::vector<std::string>> four_items(4, std::vector<std::string>{"A", "B"});
    EXPECT_THROW(bace::bace_exact_posterior_small(make_matrix(four_items), bace::BacePriors{}, 16),
                 bace::invalid_input);
    const auto four_coders = make_matrix({{"A", "B", "A", "B"}});
    EXPECT_THROW(bace::bace_exact_posterior_small(four_coders, bace::BacePriors{}, 16),
                 bace::invalid_input);
    const auto k4 = make_matrix({{"A", "B"}, {"C", "D"}}, {"A", "B", "C", "D"});
    EXPECT_THROW(bace::bace_exact_posterior_small(k4, bace::BacePriors{}, 16), bace::invalid_input);
    EXPECT_THROW(bace::bace_exact_posterior_small(make_matrix({{"A", "B"}}), bace::BacePriors{}, 1),
                 bace::invalid_input);
}
