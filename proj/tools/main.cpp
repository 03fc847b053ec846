#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "mfmdp/capi.h"

using nlohmann::json;

namespace {

json load_base_config(const std::string& file) {
    if (file.empty()) return json::object();
    std::ifstream in(file, std::ios::binary);
    if (!in) {
        std::cerr << "error: IoFailure: cannot read config file: " << file << "\n";
        std::exit(1);
    }
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    json cfg = json::parse(text, nullptr, false);
    if (cfg.is_discarded() || !cfg.is_object()) {
        std::cerr << "error: InvalidParameter: config file is not a JSON object: " << file << "\n";
        std::exit(1);
    }
    return cfg;
}

void apply_sets(json& cfg, const std::vector<std::string>& sets) {
    for (const std::string& kv : sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) {
            std::cerr << "error: InvalidParameter: --set expects key=value, got: " << kv << "\n";
            std::exit(1);
        }
        const std::string key = kv.substr(0, eq);
        try {
            cfg["params"][key] = std::stod(kv.substr(eq + 1));
        } catch (const std::exception&) {
            std::cerr << "error: InvalidParameter: --set " << key << " needs a numeric value\n";
            std::exit(1);
        }
    }
}

void set_horizon(json& cfg, const std::string& horizon) {
    if (horizon.empty()) return;
    if (horizon == "infinite" || horizon == "inf") {
        cfg["horizon"] = "infinite";
        return;
    }
    try {
        cfg["horizon"] = std::stod(horizon);
    } catch (const std::exception&) {
        std::cerr << "error: InvalidParameter: --horizon needs a number or 'infinite'\n";
        std::exit(1);
    }
}

using RunFn = int (*)(const char*, char**);

int dispatch(const std::string& command, const json& cfg, bool dry_run, RunFn fn) {
    const std::string text = cfg.dump();
    char* out = nullptr;
    if (dry_run) {
        const int rc = mfmdp_resolve_config(text.c_str(), command.c_str(), &out);
        if (rc != MFMDP_OK) {
            std::cerr << "error: " << mfmdp_last_error_name() << ": "
                      << mfmdp_last_error_message() << "\n";
            return rc;
        }
        std::fputs(out, stdout);
        mfmdp_string_free(out);
        return 0;
    }
    const int rc = fn(text.c_str(), &out);
    if (out) {
        // Human-readable headline before the full summary.
        json j = json::parse(out, nullptr, false);
        if (!j.is_discarded()) {
            if (j.contains("value_mean"))
                std::printf("value = %.10g +/- %.10g\n", j["value_mean"].get<double>(),
                            j["value_se"].get<double>());
            if (j.contains("value_at_initial"))
                std::printf("value at initial = %.10g\n", j["value_at_initial"].get<double>());
            if (j.contains("objective"))
                std::printf("objective = %.10g\n", j["objective"].get<double>());
            if (j.contains("t1"))
                std::printf("t1 = %.6g\n", j["t1"].get<double>());
            if (j.contains("value") && j.contains("family"))
                std::printf("value = %.10g\n", j["value"].get<double>());
        }
        std::fputs(out, stdout);
        mfmdp_string_free(out);
    }
    if (rc != MFMDP_OK) {
        const std::string name = mfmdp_last_error_name();
        if (!name.empty())
            std::cerr << "error: " << name << ": " << mfmdp_last_error_message() << "\n";
        else if (rc == MFMDP_ERR_ASSUMPTION)
            std::cerr << "error: hard assumption violation (see report)\n";
    }
    return rc;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Mean-field control toolkit: simulation, exact solves, the "
                 "deterministic limit, and studies"};
    app.require_subcommand(1);

    std::string config_file, model, out_dir, horizon, policy_file, feedback, control_source;
    std::string family, mode, example, study_type, ns_list;
    std::vector<std::string> sets;
    long long N = -1, n_even = -1, n_odd = -1;
    long long seed = -1;
    int replications = -1, jobs = -1, segments = -1, max_iterations = -1;
    double beta = std::numeric_limits<double>::quiet_NaN();
    double tol = -1.0, threshold = -1.0, t_cap = -1.0, target_step = -1.0;
    bool dry_run = false, jump_adapted = false;

    auto add_common = [&](CLI::App* cmd, bool with_model) {
        cmd->add_option("--config", config_file, "JSON run configuration (flags override it)");
        if (with_model) cmd->add_option("--model", model, "registered model name");
        cmd->add_option("--set", sets, "parameter override key=value (repeatable)");
        cmd->add_option("--beta", beta, "discount rate override");
        cmd->add_option("--horizon", horizon, "horizon override: number or 'infinite'");
        cmd->add_option("--out", out_dir, "output directory");
        cmd->add_option("--jobs", jobs, "worker cap for replication parallelism");
        cmd->add_option("--seed", seed, "seed (MFCTMDP_SEED is the fallback)");
        cmd->add_flag("--dry-run", dry_run, "print the resolved configuration and stop");
    };

    CLI::App* c_validate = app.add_subcommand("validate", "check model assumptions");
    add_common(c_validate, true);

    CLI::App* c_simulate = app.add_subcommand("simulate", "exact event simulation");
    add_common(c_simulate, true);
    c_simulate->add_option("--N", N, "number of agents");
    c_simulate->add_option("--replications", replications, "independent replications");
    c_simulate->add_option("--policy-file", policy_file, "open-loop control JSON");
    c_simulate->add_option("--feedback", feedback, "feedback rule name");
    c_simulate->add_option("--control", control_source, "constant control: low|high|uniform");
    c_simulate->add_flag("--jump-adapted", jump_adapted, "apply the control jump-adapted");

    CLI::App* c_exact = app.add_subcommand("exact", "lattice solution of the measure MDP");
    add_common(c_exact, true);
    c_exact->add_option("--N", N, "number of agents");
    c_exact->add_option("--tol", tol, "value-iteration tolerance");
    c_exact->add_option("--target-step", target_step, "time step for the backward solve");

    CLI::App* c_limit = app.add_subcommand("limit", "deterministic mean-field flow");
    add_common(c_limit, true);
    c_limit->add_option("--policy-file", policy_file, "open-loop control JSON");
    c_limit->add_option("--control", control_source, "constant control: low|high|uniform");
    c_limit->add_option("--target-step", target_step, "integration step");

    CLI::App* c_opt = app.add_subcommand("optimize", "optimize the deterministic objective");
    add_common(c_opt, true);
    c_opt->add_option("--family", family, "one_switch | three_phase | direct");
    c_opt->add_option("--segments", segments, "control segments (direct)");
    c_opt->add_option("--max-iterations", max_iterations, "iteration cap (direct)");
    c_opt->add_option("--target-step", target_step, "integration step");

    CLI::App* c_study = app.add_subcommand("study", "scripted study");
    add_common(c_study, true);
    c_study->add_option("type", study_type, "rate | equivalence | nonuniqueness | feedback")
        ->required();
    c_study->add_option("--Ns", ns_list, "comma-separated N values (rate)");
    c_study->add_option("--mode", mode, "rate evaluation: exact | mc | auto");
    c_study->add_option("--N", N, "agents (equivalence, feedback)");
    c_study->add_option("--N-even", n_even, "even N (nonuniqueness)");
    c_study->add_option("--N-odd", n_odd, "odd N (nonuniqueness)");
    c_study->add_option("--threshold", threshold, "priority threshold (feedback)");
    c_study->add_option("--t-cap", t_cap, "comparison window (nonuniqueness)");
    c_study->add_option("--replications", replications, "Monte Carlo replications");
    c_study->add_option("--family", family, "control family for the rate study");
    c_study->add_option("--policy-file", policy_file, "explicit control for the rate study");

    CLI::App* c_fig = app.add_subcommand("replicate-figures", "figure-style CSV bundles");
    add_common(c_fig, false);
    c_fig->add_option("--example", example, "machine_replacement | sir_malware | cube_root | "
                                            "resource_competition")
        ->required();

    CLI11_PARSE(app, argc, argv);

    json cfg = load_base_config(config_file);
    apply_sets(cfg, sets);
    if (!model.empty()) cfg["model"] = model;
    if (!out_dir.empty()) cfg["out_dir"] = out_dir;
    if (!std::isnan(beta)) cfg["beta"] = beta;
    set_horizon(cfg, horizon);
    if (N >= 0) cfg["N"] = N;
    if (seed >= 0) cfg["seed"] = seed;
    if (replications >= 0) cfg["replications"] = replications;
    if (jobs >= 0) cfg["jobs"] = jobs;
    if (tol >= 0) cfg["tol"] = tol;
    if (target_step > 0) cfg["target_step"] = target_step;
    if (segments >= 0) cfg["segments"] = segments;
    if (max_iterations >= 0) cfg["max_iterations"] = max_iterations;
    if (!family.empty()) cfg["family"] = family;
    if (!mode.empty()) cfg["mode"] = mode;
    if (!example.empty()) cfg["example"] = example;
    if (!study_type.empty()) cfg["study"] = study_type;
    if (n_even >= 0) cfg["N_even"] = n_even;
    if (n_odd >= 0) cfg["N_odd"] = n_odd;
    if (threshold >= 0) cfg["threshold"] = threshold;
    if (t_cap >= 0) cfg["t_cap"] = t_cap;
    if (!ns_list.empty()) {
        std::vector<long long> ns;
        std::string item;
        for (std::size_t i = 0; i <= ns_list.size(); ++i) {
            if (i == ns_list.size() || ns_list[i] == ',') {
                if (!item.empty()) ns.push_back(std::stoll(item));
                item.clear();
            } else {
                item += ns_list[i];
            }
        }
        cfg["Ns"] = ns;
    }
    if (!policy_file.empty())
        cfg["policy"] = {{"type", jump_adapted ? "jump_adapted" : "open_loop"},
                         {"file", policy_file}};
    else if (!feedback.empty())
        cfg["policy"] = {{"type", "feedback"}, {"name", feedback}};
    else if (!control_source.empty())
        cfg["policy"] = {{"type", jump_adapted ? "jump_adapted" : "open_loop"},
                         {"source", control_source}};

    if (c_validate->parsed()) return dispatch("validate", cfg, dry_run, mfmdp_validate);
    if (c_simulate->parsed()) return dispatch("simulate", cfg, dry_run, mfmdp_simulate);
    if (c_exact->parsed()) return dispatch("exact", cfg, dry_run, mfmdp_exact);
    if (c_limit->parsed()) return dispatch("limit", cfg, dry_run, mfmdp_limit);
    if (c_opt->parsed()) return dispatch("optimize", cfg, dry_run, mfmdp_optimize);
    if (c_study->parsed()) return dispatch("study", cfg, dry_run, mfmdp_study);
    if (c_fig->parsed()) return dispatch("replicate-figures", cfg, dry_run, mfmdp_replicate_figures);
    return 1;
}
