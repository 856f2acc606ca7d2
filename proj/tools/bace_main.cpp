// Command-line front end: reliability reports, label aggregation, gold-set
// evaluation, and synthetic dataset generation, all file-to-file and
// reproducible from the emitted manifest.

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bace/bace.hpp"
#include "bace/csv.hpp"
#include "bace/dawid_skene.hpp"
#include "bace/error.hpp"
#include "bace/evaluation.hpp"
#include "bace/majority.hpp"
#include "bace/reliability.hpp"
#include "bace/simulation.hpp"
#include "bace/types.hpp"
#include "bace/version.hpp"

using nlohmann::ordered_json;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw bace::invalid_input("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw bace::invalid_input("cannot write " + path);
    out << content;
    if (!out) throw bace::invalid_input("write failed for " + path);
}

std::string fnv1a64_hex(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// Shortest round-trip decimal form; display rounding happens separately.
std::string fmt_full(double v) {
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    (void)ec;
    return std::string(buf, p);
}

std::string fmt3(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

std::vector<std::string> split_commas(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

struct Warnings {
    std::vector<std::string> messages;
    void add(const std::string& msg) {
        messages.push_back(msg);
        std::cerr << "warning: " << msg << "\n";
    }
};

void write_manifest(const std::string& command, const ordered_json& options,
                    const std::vector<std::string>& input_paths, const std::vector<std::string>& output_paths,
                    const ordered_json& seed, const Warnings& warnings) {
    ordered_json m;
    m["manifest_version"] = 1;
    m["artifact_version"] = BACE_VERSION;
    m["command"] = command;
    m["seed"] = seed;
    m["options"] = options;
    ordered_json inputs = ordered_json::object();
    for (const auto& p : input_paths) inputs[p] = "fnv1a64:" + fnv1a64_hex(read_file(p));
    m["inputs"] = inputs;
    m["outputs"] = output_paths;
    m["warnings"] = warnings.messages;
    write_file(output_paths.front() + ".manifest.json", m.dump(2) + "\n");
}

std::optional<bace::LabelSet> labels_from_flag(const std::string& flag) {
    if (flag.empty()) return std::nullopt;
    return bace::LabelSet(split_commas(flag));
}

ordered_json pairwise_json(const bace::PairwiseResult& r, const bace::AnnotationMatrix& m) {
    ordered_json pairs = ordered_json::array();
    for (const auto& p : r.pairwise) {
        pairs.push_back({{"coder_a", m.coders()[p.coder_a]},
                         {"coder_b", m.coders()[p.coder_b]},
                         {"value", p.value}});
    }
    return {{"pairs", pairs}, {"average", r.average}};
}

int cmd_reliability(const std::string& input, const std::string& output, const std::string& labels_flag) {
    const auto table = bace::parse_annotations(read_file(input), labels_from_flag(labels_flag));
    const auto m = bace::build_matrix(table);
    const auto rep = bace::reliability_report(m);

    Warnings warnings;
    if (rep.fleiss.excluded_items > 0)
        warnings.add("Fleiss' kappa excluded " + std::to_string(rep.fleiss.excluded_items) +
                     " item(s) not annotated by every coder");

    ordered_json j;
    j["n_coders"] = rep.n_coders;
    j["n_cases"] = rep.n_cases;
    j["n_decisions"] = rep.n_decisions;
    j["percent_agreement"] = pairwise_json(rep.percent_agreement, m);
    j["cohens_kappa"] = pairwise_json(rep.cohens_kappa, m);
    j["fleiss_kappa"] = {{"kappa", rep.fleiss.kappa},
                         {"observed_agreement", rep.fleiss.observed},
                         {"expected_agreement", rep.fleiss.expected},
                         {"excluded_items", rep.fleiss.excluded_items}};
    j["krippendorff_alpha"] = rep.krippendorff_alpha;

    ordered_json disp;
    ordered_json pa = ordered_json::array(), ck = ordered_json::array();
    for (const auto& p : rep.percent_agreement.pairwise) pa.push_back(fmt3(p.value));
    for (const auto& p : rep.cohens_kappa.pairwise) ck.push_back(fmt3(p.value));
    disp["percent_agreement_pairs"] = pa;
    disp["percent_agreement_average"] = fmt3(rep.percent_agreement.average);
    disp["cohens_kappa_pairs"] = ck;
    disp["cohens_kappa_average"] = fmt3(rep.cohens_kappa.average);
    disp["fleiss_kappa"] = fmt3(rep.fleiss.kappa);
    disp["fleiss_observed_agreement"] = fmt3(rep.fleiss.observed);
    disp["fleiss_expected_agreement"] = fmt3(rep.fleiss.expected);
    disp["krippendorff_alpha"] = fmt3(rep.krippendorff_alpha);
    j["display"] = disp;

    write_file(output, j.dump(2) + "\n");
    ordered_json options{{"input", input}, {"output", output}, {"labels", labels_flag}};
    write_manifest("reliability", options, {input}, {output}, nullptr, warnings);
    return 0;
}

struct ModelOpts {
    std::uint64_t seed = 0;
    int burn_in = 500;
    int samples = 2000;
    int chains = 2;
    std::string tie = "deterministic";
    int max_iters = 1000;
    double tol = 1e-7;
    double smoothing = 0.01;
};

std::string labels_csv_text(const bace::AnnotationMatrix& m,
                            const std::vector<std::pair<std::string, std::vector<double>>>& rows,
                            const std::vector<int>& map_labels,
                            const std::vector<bace::Interval>* intervals) {
    std::string out = "item_id,map_label";
    for (const auto& name : m.labels().names()) out += ",p_" + bace::detail::csv_escape(name);
    out += ",interval_lo,interval_hi\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out += bace::detail::csv_escape(rows[i].first);
        out += ',' + bace::detail::csv_escape(m.labels().name(map_labels[i]));
        for (double v : rows[i].second) out += ',' + fmt_full(v);
        if (intervals) {
            out += ',' + fmt_full((*intervals)[i].lo);
            out += ',' + fmt_full((*intervals)[i].hi);
        } else {
            out += ",,";
        }
        out += '\n';
    }
    return out;
}

int cmd_aggregate(const std::string& input, const std::string& model, const std::string& output,
                  std::string profiles_path, const std::string& labels_flag, const ModelOpts& opts) {
    const auto table = bace::parse_annotations(read_file(input), labels_from_flag(labels_flag));
    const auto m = bace::build_matrix(table);
    if (profiles_path.empty()) {
        profiles_path = output;
        if (profiles_path.size() > 4 && profiles_path.ends_with(".csv"))
            profiles_path.resize(profiles_path.size() - 4);
        profiles_path += ".profiles.json";
    }

    Warnings warnings;
    if (m.n_coders() < 3)
        warnings.add("only " + std::to_string(m.n_coders()) +
                     " coders; at least 3 are recommended for label aggregation");

    std::vector<std::pair<std::string, std::vector<double>>> rows;
    std::vector<int> map_labels;
    std::vector<bace::Interval> intervals;
    ordered_json profiles;
    profiles["model"] = model;
    profiles["labels"] = m.labels().names();

    if (model == "bace") {
        bace::GibbsConfig cfg;
        cfg.seed = opts.seed;
        cfg.burn_in = opts.burn_in;
        cfg.samples = opts.samples;
        cfg.chains = opts.chains;
        const auto result = bace::bace_fit(m, cfg);
        for (const auto& w : result.warnings)
            if (m.n_coders() >= 3) warnings.add(w);  // the <3 case is already reported above
        ordered_json coders = ordered_json::array();
        for (const auto& p : result.profiles) {
            ordered_json gi = ordered_json::array();
            for (const auto& iv : p.gamma_interval_95) gi.push_back({iv.lo, iv.hi});
            coders.push_back({{"coder_id", p.coder_id},
                              {"beta_mean", p.beta_mean},
                              {"beta_interval_95", {p.beta_interval_95.lo, p.beta_interval_95.hi}},
                              {"gamma_mean", p.gamma_mean},
                              {"gamma_interval_95", gi}});
        }
        profiles["coders"] = coders;
        profiles["truth_prior_mean"] = result.truth_prior_mean;
        profiles["chain_samples"] = result.chain_sample_counts;
        for (const auto& lab : result.labels) {
            rows.emplace_back(lab.item_id, lab.pmf);
            map_labels.push_back(lab.map_label);
            intervals.push_back(lab.map_probability_interval_95);
        }
        write_file(output, labels_csv_text(m, rows, map_labels, &intervals));
    } else if (model == "ds") {
        bace::DawidSkeneOptions ds;
        ds.max_iters = opts.max_iters;
        ds.tol = opts.tol;
        ds.smoothing = opts.smoothing;
        const auto result = bace::ds_fit(m, ds);
        if (!result.converged)
            warnings.add("EM did not converge within " + std::to_string(ds.max_iters) + " iterations");
        ordered_json coders = ordered_json::array();
        for (int j = 0; j < m.n_coders(); ++j)
            coders.push_back({{"coder_id", m.coders()[j]},
                              {"confusion", result.confusions[static_cast<std::size_t>(j)]}});
        profiles["coders"] = coders;
        profiles["class_prior"] = result.prior;
        profiles["iterations"] = result.iterations;
        profiles["converged"] = result.converged;
        profiles["log_likelihood"] = result.log_likelihood_trace.back();
        for (int i = 0; i < m.n_items(); ++i) {
            rows.emplace_back(m.items()[i], result.posteriors[static_cast<std::size_t>(i)]);
            map_labels.push_back(result.map_labels[static_cast<std::size_t>(i)]);
        }
        write_file(output, labels_csv_text(m, rows, map_labels, nullptr));
    } else if (model == "majority") {
        const auto tie = opts.tie == "sampled" ? bace::TieMode::sampled : bace::TieMode::deterministic;
        const auto result = bace::majority_vote(m, tie, opts.seed);
        profiles["coders"] = ordered_json::array();
        for (const auto& item : result.items) {
            double total = 0.0;
            for (int v : item.votes) total += v;
            std::vector<double> frac;
            for (int v : item.votes) frac.push_back(v / total);
            rows.emplace_back(item.item_id, frac);
            map_labels.push_back(item.label);
        }
        write_file(output, labels_csv_text(m, rows, map_labels, nullptr));
    } else {
        throw bace::invalid_input("unknown model: " + model);
    }

    write_file(profiles_path, profiles.dump(2) + "\n");
    ordered_json options{{"input", input},       {"model", model},
                         {"output", output},     {"profiles", profiles_path},
                         {"labels", labels_flag}, {"seed", opts.seed},
                         {"burn_in", opts.burn_in}, {"samples", opts.samples},
                         {"chains", opts.chains}, {"tie", opts.tie},
                         {"max_iters", opts.max_iters}, {"tol", opts.tol},
                         {"smoothing", opts.smoothing}};
    write_manifest("aggregate", options, {input}, {output, profiles_path}, opts.seed, warnings);
    return 0;
}

int cmd_evaluate(const std::string& input, const std::string& gold_path, const std::string& output,
                 const std::string& models_flag, const std::string& labels_flag, const ModelOpts& opts) {
    const auto table = bace::parse_annotations(read_file(input), labels_from_flag(labels_flag));
    const auto m = bace::build_matrix(table);
    const auto gold = bace::parse_gold(read_file(gold_path), m.labels());
    if (gold.size() == 0) throw bace::invalid_input("gold CSV has no entries");

    std::vector<std::string> models = split_commas(models_flag);
    for (const auto& name : models)
        if (name != "bace" && name != "ds" && name != "majority")
            throw bace::invalid_input("unknown model: " + name);

    Warnings warnings;
    if (m.n_coders() < 3)
        warnings.add("only " + std::to_string(m.n_coders()) +
                     " coders; at least 3 are recommended for label aggregation");

    const auto parts = bace::partition_gold(m, gold);
    if (!parts.excluded_items.empty())
        warnings.add(std::to_string(parts.excluded_items.size()) +
                     " gold item(s) excluded with fewer than 2 annotations");

    ordered_json rows = ordered_json::array();
    for (const auto& name : models) {
        std::map<std::string, int> pred;
        if (name == "bace") {
            bace::GibbsConfig cfg;
            cfg.seed = opts.seed;
            cfg.burn_in = opts.burn_in;
            cfg.samples = opts.samples;
            cfg.chains = opts.chains;
            pred = bace::bace_fit(m, cfg).predictions();
        } else if (name == "ds") {
            bace::DawidSkeneOptions ds;
            ds.max_iters = opts.max_iters;
            ds.tol = opts.tol;
            ds.smoothing = opts.smoothing;
            pred = bace::ds_fit(m, ds).predictions(m);
        } else {
            const auto tie = opts.tie == "sampled" ? bace::TieMode::sampled : bace::TieMode::deterministic;
            pred = bace::majority_vote(m, tie, opts.seed).predictions();
        }
        ordered_json amb{{"accuracy", nullptr}, {"n", parts.ambiguous_items.size()}};
        ordered_json clr{{"accuracy", nullptr}, {"n", parts.clear_items.size()}};
        if (!parts.ambiguous_items.empty()) amb["accuracy"] = bace::accuracy(pred, gold, parts.ambiguous_items);
        if (!parts.clear_items.empty()) clr["accuracy"] = bace::accuracy(pred, gold, parts.clear_items);
        rows.push_back({{"model", name}, {"ambiguous", amb}, {"clear", clr}});
    }

    ordered_json j;
    j["rows"] = rows;
    j["excluded_items"] = parts.excluded_items.size();
    write_file(output, j.dump(2) + "\n");

    ordered_json options{{"input", input},       {"gold", gold_path},
                         {"output", output},     {"models", models_flag},
                         {"labels", labels_flag}, {"seed", opts.seed},
                         {"burn_in", opts.burn_in}, {"samples", opts.samples},
                         {"chains", opts.chains}, {"tie", opts.tie},
                         {"max_iters", opts.max_iters}, {"tol", opts.tol},
                         {"smoothing", opts.smoothing}};
    write_manifest("evaluate", options, {input, gold_path}, {output}, opts.seed, warnings);
    return 0;
}

bace::SimConfig sim_config_from_json(const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const std::exception& e) {
        throw bace::invalid_input(std::string("simulate config: ") + e.what());
    }
    bace::SimConfig cfg;
    try {
        cfg.labels = j.at("labels").get<std::vector<std::string>>();
        cfg.pi_true = j.at("pi_true").get<std::vector<double>>();
        cfg.n_items = j.value("n_items", 0);
        cfg.seed = j.value("seed", std::uint64_t{0});
        cfg.missing_rate = j.value("missing_rate", 0.0);
        for (const auto& c : j.at("coders")) {
            bace::SimCoder sc;
            sc.coder_id = c.at("coder_id").get<std::string>();
            sc.beta_true = c.at("beta_true").get<double>();
            sc.gamma_true = c.at("gamma_true").get<std::vector<double>>();
            cfg.coders.push_back(std::move(sc));
        }
    } catch (const ordered_json::exception& e) {
        throw bace::invalid_input(std::string("simulate config: ") + e.what());
    }
    return cfg;
}

int cmd_simulate(const std::string& config_path, const std::string& output, const std::string& truth_path,
                 int items_flag, bool items_given, std::uint64_t seed_flag, bool seed_given,
                 double missing_flag, bool missing_given) {
    bace::SimConfig cfg = config_path.empty() ? bace::default_sim_config() : sim_config_from_json(read_file(config_path));
    if (items_given) cfg.n_items = items_flag;
    if (seed_given) cfg.seed = seed_flag;
    if (missing_given) cfg.missing_rate = missing_flag;

    const auto sim = bace::simulate_dataset(cfg);
    const bace::LabelSet labels(cfg.labels);
    Warnings warnings;

    write_file(output, bace::write_annotations_csv(bace::AnnotationTable(sim.matrix.flatten(), labels)));
    write_file(truth_path, bace::write_gold_csv(bace::GoldSet(sim.truth, labels), labels));

    ordered_json coders = ordered_json::array();
    for (const auto& c : cfg.coders)
        coders.push_back({{"coder_id", c.coder_id}, {"beta_true", c.beta_true}, {"gamma_true", c.gamma_true}});
    ordered_json options{{"config", config_path}, {"output", output},  {"truth", truth_path},
                         {"n_items", cfg.n_items}, {"seed", cfg.seed}, {"missing_rate", cfg.missing_rate},
                         {"labels", cfg.labels},  {"pi_true", cfg.pi_true}, {"coders", coders}};
    std::vector<std::string> inputs;
    if (!config_path.empty()) inputs.push_back(config_path);
    write_manifest("simulate", options, inputs, {output, truth_path}, cfg.seed, warnings);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-coder annotation aggregation and reliability toolkit"};
    app.set_version_flag("--version", BACE_VERSION);
    app.require_subcommand(1);

    std::string input, gold_path, output, truth_path, profiles_path, config_path;
    std::string labels_flag, model, models_flag = "bace,ds,majority";
    ModelOpts opts;
    int sim_items = 0;
    double sim_missing = 0.0;

    auto add_model_opts = [&](CLI::App* cmd) {
        cmd->add_option("--seed", opts.seed, "Random seed");
        cmd->add_option("--burn-in", opts.burn_in, "Gibbs burn-in iterations")->check(CLI::NonNegativeNumber);
        cmd->add_option("--samples", opts.samples, "Gibbs kept iterations per chain")->check(CLI::PositiveNumber);
        cmd->add_option("--chains", opts.chains, "Gibbs chain count")->check(CLI::PositiveNumber);
        cmd->add_option("--tie", opts.tie, "Majority tie handling")
            ->check(CLI::IsMember({"deterministic", "sampled"}));
        cmd->add_option("--max-iters", opts.max_iters, "EM iteration cap")->check(CLI::PositiveNumber);
        cmd->add_option("--tol", opts.tol, "EM relative log-likelihood tolerance");
        cmd->add_option("--smoothing", opts.smoothing, "EM additive smoothing pseudo-count");
    };

    auto* rel = app.add_subcommand("reliability", "Intercoder agreement report from an annotation CSV");
    rel->add_option("--input", input, "Annotation CSV (item_id,coder_id,label)")->required();
    rel->add_option("--output", output, "Report JSON path")->required();
    rel->add_option("--labels", labels_flag, "Comma-separated label order");

    auto* agg = app.add_subcommand("aggregate", "Estimate per-item labels with a chosen model");
    agg->add_option("--input", input, "Annotation CSV (item_id,coder_id,label)")->required();
    agg->add_option("--model", model, "Aggregation model")
        ->required()
        ->check(CLI::IsMember({"bace", "ds", "majority"}));
    agg->add_option("--output", output, "Labels CSV path")->required();
    agg->add_option("--profiles", profiles_path, "Coder profiles JSON path (default: derived from --output)");
    agg->add_option("--labels", labels_flag, "Comma-separated label order");
    add_model_opts(agg);

    auto* ev = app.add_subcommand("evaluate", "Score models against expert gold labels");
    ev->add_option("--input", input, "Annotation CSV")->required();
    ev->add_option("--gold", gold_path, "Gold CSV (item_id,gold_label)")->required();
    ev->add_option("--output", output, "Comparison JSON path")->required();
    ev->add_option("--models", models_flag, "Comma-separated subset of bace,ds,majority");
    ev->add_option("--labels", labels_flag, "Comma-separated label order");
    add_model_opts(ev);

    auto* sim = app.add_subcommand("simulate", "Generate a synthetic annotation dataset");
    sim->add_option("--config", config_path, "Population config JSON");
    auto* items_opt = sim->add_option("--items", sim_items, "Item count")->check(CLI::PositiveNumber);
    auto* seed_opt = sim->add_option("--seed", opts.seed, "Random seed");
    auto* missing_opt =
        sim->add_option("--missing-rate", sim_missing, "Chance an annotation is dropped")->check(CLI::Range(0.0, 1.0));
    sim->add_option("--output", output, "Annotations CSV path")->required();
    sim->add_option("--truth", truth_path, "True labels CSV path")->required();

    try {
        app.parse(argc, argv);
        if (rel->parsed()) return cmd_reliability(input, output, labels_flag);
        if (agg->parsed()) return cmd_aggregate(input, model, output, profiles_path, labels_flag, opts);
        if (ev->parsed()) return cmd_evaluate(input, gold_path, output, models_flag, labels_flag, opts);
        if (sim->parsed())
            return cmd_simulate(config_path, output, truth_path, sim_items, items_opt->count() > 0, opts.seed,
                                seed_opt->count() > 0, sim_missing, missing_opt->count() > 0);
        return 2;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const bace::invalid_input& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 2;
    }
}
