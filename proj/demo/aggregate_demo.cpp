// End-to-end library walkthrough: simulate a coder population, check
// intercoder reliability, then compare the three aggregation models against
// the simulated truth.

#include <cstdio>

#include "bace/bace.hpp"
#include "bace/dawid_skene.hpp"
#include "bace/evaluation.hpp"
#include "bace/majority.hpp"
#include "bace/reliability.hpp"
#include "bace/simulation.hpp"

int main() {
    auto cfg = bace::default_sim_config(500, 42);
    cfg.missing_rate = 0.1;
    const auto sim = bace::simulate_dataset(cfg);
    const auto& m = sim.matrix;
    std::printf("simulated %d items, %d coders, %zu decisions\n", m.n_items(), m.n_coders(), m.n_decisions());

    const auto rel = bace::reliability_report(m);
    std::printf("percent agreement %.3f  Fleiss kappa %.3f  Krippendorff alpha %.3f\n",
                rel.percent_agreement.average, rel.fleiss.kappa, rel.krippendorff_alpha);

    bace::GibbsConfig gibbs;
    gibbs.seed = 42;
    const auto fit = bace::bace_fit(m, gibbs);
    for (const auto& p : fit.profiles)
        std::printf("%s: competence %.3f [%.3f, %.3f]\n", p.coder_id.c_str(), p.beta_mean,
                    p.beta_interval_95.lo, p.beta_interval_95.hi);

    const auto score = [&](const std::map<std::string, int>& pred) {
        int hit = 0;
        for (const auto& [id, t] : sim.truth) hit += pred.at(id) == t;
        return static_cast<double>(hit) / static_cast<double>(sim.truth.size());
    };
    std::printf("accuracy: model %.3f  em %.3f  majority %.3f  ceiling %.3f\n", score(fit.predictions()),
                score(bace::ds_fit(m).predictions(m)), score(bace::majority_vote(m).predictions()),
                bace::bayes_oracle_accuracy(cfg, m, sim.truth));
    return 0;
}
