#include "mfmdp/capi.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "json.hpp"

#include "core/errors.hpp"
#include "core/registry.hpp"
#include "exact/solve.hpp"
#include "experiments/studies.hpp"
#include "io/io.hpp"
#include "limit/optimize.hpp"
#include "limit/pontryagin.hpp"
#include "sim/simulate.hpp"

using nlohmann::json;
using namespace mfmdp;

namespace {

thread_local std::string t_error_name;
thread_local std::string t_error_message;

void clear_error() {
    t_error_name.clear();
    t_error_message.clear();
}

char* dup_string(const std::string& s) {
    char* p = static_cast<char*>(std::malloc(s.size() + 1));
    if (p) std::memcpy(p, s.c_str(), s.size() + 1);
    return p;
}

json parse_config(const char* config_json) {
    if (!config_json) throw InvalidParameter("configuration is null");
    json cfg = json::parse(config_json, nullptr, false);
    if (cfg.is_discarded()) throw InvalidParameter("configuration is not valid JSON");
    if (!cfg.is_object()) throw InvalidParameter("configuration must be a JSON object");
    return cfg;
}

std::uint64_t resolve_seed(const json& cfg, bool required) {
    if (cfg.contains("seed")) {
        if (!cfg["seed"].is_number())
            throw InvalidParameter("seed must be a number");
        return cfg["seed"].get<std::uint64_t>();
    }
    if (const char* env = std::getenv("MFCTMDP_SEED")) {
        char* end = nullptr;
        const unsigned long long v = std::strtoull(env, &end, 10);
        if (end && *end == '\0') return static_cast<std::uint64_t>(v);
        throw InvalidParameter("MFCTMDP_SEED is not an integer");
    }
    if (required)
        throw InvalidParameter("seed required: pass \"seed\" or set MFCTMDP_SEED");
    return 0;
}

std::map<std::string, double> overrides_from(const json& cfg) {
    std::map<std::string, double> overrides;
    if (cfg.contains("params")) {
        const json& p = cfg["params"];
        if (!p.is_object()) throw InvalidParameter("params must be a JSON object");
        for (const auto& [k, v] : p.items()) {
            if (!v.is_number()) throw InvalidParameter("parameter '" + k + "' must be a number");
            overrides[k] = v.get<double>();
        }
    }
    if (cfg.contains("beta")) overrides["beta"] = cfg["beta"].get<double>();
    if (cfg.contains("horizon") && cfg["horizon"].is_number())
        overrides["T"] = cfg["horizon"].get<double>();
    return overrides;
}

ModelSpec build_model(const json& cfg, bool revalidate) {
    if (!cfg.contains("model") || !cfg["model"].is_string())
        throw InvalidParameter("config needs a \"model\" name");
    ModelSpec model = registry_get(cfg["model"].get<std::string>(), overrides_from(cfg), revalidate);
    if (cfg.contains("horizon") && cfg["horizon"].is_string()) {
        if (cfg["horizon"].get<std::string>() != "infinite")
            throw InvalidParameter("horizon must be a number or \"infinite\"");
        model.horizon = Horizon::infinite();
    }
    return model;
}

std::int64_t require_N(const json& cfg) {
    if (!cfg.contains("N")) throw InvalidParameter("config needs \"N\"");
    const std::int64_t N = cfg["N"].get<std::int64_t>();
    if (N < 1) throw InvalidParameter("N must be at least 1");
    return N;
}

std::filesystem::path out_dir_of(const json& cfg) {
    return std::filesystem::path(cfg.value("out_dir", std::string("mfmdp_out")));
}

RelaxedControlPath control_from_json(const json& c, const ModelSpec& model) {
    const json& ctrl = c.contains("control") ? c["control"] : c;
    if (!ctrl.contains("breakpoints") || !ctrl.contains("segments"))
        throw InvalidParameter("control JSON needs breakpoints and segments");
    RelaxedControlPath path;
    path.breakpoints = ctrl["breakpoints"].get<std::vector<double>>();
    for (const json& seg : ctrl["segments"]) {
        ControlVector cv;
        if (static_cast<int>(seg.size()) != model.num_states())
            throw InvalidParameter("control segment has the wrong number of states");
        for (int i = 0; i < model.num_states(); ++i) {
            ActionDistribution d;
            d.weights = seg[static_cast<std::size_t>(i)].get<std::vector<double>>();
            if (d.weights.size() != model.actions.per_state[static_cast<std::size_t>(i)].size())
                throw InvalidParameter("control weights do not match the action grid of state " +
                                       model.states.labels[static_cast<std::size_t>(i)]);
            cv.push_back(std::move(d));
        }
        path.segments.push_back(std::move(cv));
    }
    path.check();
    return path;
}

RelaxedControlPath load_control_file(const std::string& file, const ModelSpec& model) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw IoFailure("cannot read control file: " + file);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    json c = json::parse(text, nullptr, false);
    if (c.is_discarded()) throw InvalidParameter("control file is not valid JSON: " + file);
    return control_from_json(c, model);
}

ControlVector named_control(const ModelSpec& model, const std::string& source) {
    ControlVector cv;
    for (int i = 0; i < model.num_states(); ++i) {
        const std::size_t k = model.actions.per_state[static_cast<std::size_t>(i)].size();
        if (source == "low")
            cv.push_back(ActionDistribution::dirac(0, k));
        else if (source == "high")
            cv.push_back(ActionDistribution::dirac(k - 1, k));
        else if (source == "uniform")
            cv.push_back(ActionDistribution::uniform(k));
        else
            throw InvalidParameter("unknown control source: " + source +
                                   " (expected low, high, uniform, or a file)");
    }
    return cv;
}

RelaxedControlPath open_loop_path(const json& pc, const ModelSpec& model) {
    if (pc.contains("file")) return load_control_file(pc["file"].get<std::string>(), model);
    return RelaxedControlPath::constant(named_control(model, pc.value("source", std::string("low"))));
}

Policy build_policy(const json& cfg, const ModelSpec& model) {
    const json pc = cfg.value("policy", json{{"type", "open_loop"}});
    const std::string type = pc.value("type", std::string("open_loop"));
    if (type == "open_loop") return Policy::open_loop(open_loop_path(pc, model));
    if (type == "jump_adapted") return Policy::jump_adapted(open_loop_path(pc, model));
    if (type == "feedback")
        return Policy::feedback_rule(
            registry_feedback(model, pc.value("name", std::string("priority"))));
    throw InvalidParameter("policy type must be open_loop, jump_adapted, or feedback");
}

json report_to_json(const ValidationReport& report) {
    json j;
    j["hard_pass"] = report.hard_pass();
    j["off_diagonal_nonnegative"] = {{"pass", report.off_diagonal_nonnegative.pass},
                                     {"worst", report.off_diagonal_nonnegative.worst},
                                     {"where", report.off_diagonal_nonnegative.worst_where}};
    j["zero_row_sums"] = {{"pass", report.zero_row_sums.pass},
                          {"worst", report.zero_row_sums.worst},
                          {"where", report.zero_row_sums.worst_where}};
    j["q_max_observed"] = report.q_max_observed;
    j["q_max_declared"] = report.q_max_declared;
    j["q_max_consistent"] = report.q_max_consistent;
    j["intensity_lipschitz_estimate"] = report.intensity_lipschitz_estimate;
    j["reward_lipschitz_estimate"] = report.reward_lipschitz_estimate;
    j["warnings"] = report.warnings;
    return j;
}

// ---------------------------------------------------------------------------

json do_validate(const json& cfg, int& rc) {
    const ModelSpec model = build_model(cfg, /*revalidate=*/false);
    const ValidationReport report = validate_assumptions(model);
    json j = report_to_json(report);
    j["command"] = "validate";
    j["model"] = model.name;
    rc = report.hard_pass() ? MFMDP_OK : MFMDP_ERR_ASSUMPTION;
    return j;
}

json do_simulate(const json& cfg) {
    const ModelSpec model = build_model(cfg, true);
    const std::int64_t N = require_N(cfg);
    const std::uint64_t seed = resolve_seed(cfg, true);
    const int replications = cfg.value("replications", 1);
    if (replications < 1) throw InvalidParameter("replications must be at least 1");
    const Policy policy = build_policy(cfg, model);
    const EmpiricalMeasure mu0 = round_measure(model.initial, N);
    const auto dir = out_dir_of(cfg);

    std::vector<double> values;
    json files = json::array();
    for (int rep = 0; rep < replications; ++rep) {
        RngStream rng(seed, static_cast<std::uint64_t>(rep));
        const Trajectory traj = simulate(model, mu0, policy, rng);
        values.push_back(discounted_reward(model, traj));
        char name[40];
        std::snprintf(name, sizeof name, "trajectory_%03d", rep);
        io::write_file(dir / (std::string(name) + ".csv"), io::trajectory_csv(model, traj));
        io::write_file(dir / (std::string(name) + ".json"),
                       io::trajectory_sidecar_json(model, seed, N));
        files.push_back(std::string(name) + ".csv");
    }
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double se = 0.0;
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - mean) * (v - mean);
        se = std::sqrt(ss / (static_cast<double>(values.size()) - 1.0) /
                       static_cast<double>(values.size()));
    }
    json j;
    j["command"] = "simulate";
    j["model"] = model.name;
    j["N"] = N;
    j["seed"] = seed;
    j["replications"] = replications;
    j["value_mean"] = mean;
    j["value_se"] = se;
    j["out_dir"] = dir.string();
    j["files"] = files;
    return j;
}

json do_exact(const json& cfg) {
    const ModelSpec model = build_model(cfg, true);
    const std::int64_t N = require_N(cfg);
    const auto dir = out_dir_of(cfg);
    const EmpiricalMeasure mu0 = round_measure(model.initial, N);

    json j;
    j["command"] = "exact";
    j["model"] = model.name;
    j["N"] = N;
    if (model.horizon.is_finite) {
        const double T = model.horizon.length;
        const double lambda_bar =
            static_cast<double>(N) * (model.num_states() - 1) * probed_q_max(model);
        const double h =
            cfg.value("target_step", std::min(T / 2000.0, 0.4 / std::max(lambda_bar, 1e-12)));
        const TimeGrid grid = TimeGrid::build(T, h, {});
        FiniteHorizonResult fh = finite_horizon_solve(model, N, grid);
        ValueTable table{fh.lattice, fh.v0, fh.policy_slices.front(), model.discount, 0.0,
                         fh.lambda_bar, static_cast<std::int64_t>(fh.grid.steps())};
        io::write_file(dir / "value_table.csv", io::value_table_csv(model, table));
        io::write_file(dir / "value_table.json", io::value_table_metadata_json(table));
        j["value_at_initial"] = fh.v0[static_cast<std::size_t>(fh.lattice.rank(mu0.counts))];
        j["points"] = fh.lattice.size();
        j["lambda_bar"] = fh.lambda_bar;
        j["steps"] = fh.grid.steps();
    } else {
        const ValueTable table = value_iteration(model, N, cfg.value("tol", 1e-8));
        io::write_file(dir / "value_table.csv", io::value_table_csv(model, table));
        io::write_file(dir / "value_table.json", io::value_table_metadata_json(table));
        j["value_at_initial"] =
            table.values[static_cast<std::size_t>(table.lattice.rank(mu0.counts))];
        j["points"] = table.lattice.size();
        j["lambda_bar"] = table.lambda_bar;
        j["iterations"] = table.iterations;
    }
    j["out_dir"] = dir.string();
    return j;
}

json do_limit(const json& cfg) {
    const ModelSpec model = build_model(cfg, true);
    const json pc = cfg.value("policy", json{{"type", "open_loop"}});
    if (pc.value("type", std::string("open_loop")) != "open_loop")
        throw InvalidParameter("the deterministic flow takes an open-loop control");
    const RelaxedControlPath control = open_loop_path(pc, model);
    const TimeGrid grid = default_grid(model, control, cfg.value("target_step", 0.0));
    const LimitTrajectory traj = integrate_limit(model, model.initial, control, grid);
    const double value = objective_F(model, control, grid, traj);
    const auto dir = out_dir_of(cfg);
    io::write_file(dir / "limit_trajectory.csv", io::limit_trajectory_csv(model, traj, control));
    json j;
    j["command"] = "limit";
    j["model"] = model.name;
    j["objective"] = value;
    j["nodes"] = grid.nodes.size();
    j["max_projection"] = traj.max_projection;
    j["out_dir"] = dir.string();
    return j;
}

json do_optimize(const json& cfg) {
    const ModelSpec model = build_model(cfg, true);
    const std::string family = cfg.value("family", std::string("one_switch"));
    const auto dir = out_dir_of(cfg);

    OptimizeResult result;
    if (family == "direct") {
        DirectOptions opt;
        opt.segments = cfg.value("segments", opt.segments);
        opt.max_iterations = cfg.value("max_iterations", opt.max_iterations);
        opt.target_step = cfg.value("target_step", opt.target_step);
        RelaxedControlPath init;
        const bool has_init = cfg.contains("init_control");
        if (has_init) init = load_control_file(cfg["init_control"].get<std::string>(), model);
        result = optimize_direct(model, opt, has_init ? &init : nullptr);
    } else {
        SwitchingOptions opt;
        opt.target_step = cfg.value("target_step", opt.target_step);
        result = optimize_switching(model, switching_family(model, family), opt);
    }

    io::write_file(dir / "optimize_result.json", io::optimize_result_json(result));
    io::write_file(dir / "optimize_trajectory.csv",
                   io::limit_trajectory_csv(model, result.trajectory, result.control));
    json j;
    j["command"] = "optimize";
    j["model"] = model.name;
    j["family"] = family;
    j["value"] = result.value;
    j["parameters"] = result.parameters;
    if (!result.parameters.empty()) j["t1"] = result.parameters[0];
    json diag = json::object();
    for (const auto& [k, v] : result.diagnostics) diag[k] = v;
    j["diagnostics"] = diag;
    j["out_dir"] = dir.string();
    return j;
}

json do_study(const json& cfg) {
    const std::string study = cfg.value("study", std::string("rate"));
    const auto dir = out_dir_of(cfg);
    const std::uint64_t seed = resolve_seed(cfg, true);
    const int jobs = cfg.value("jobs", 1);

    json j;
    j["command"] = "study";
    j["study"] = study;
    j["seed"] = seed;
    j["out_dir"] = dir.string();

    if (study == "rate") {
        json mcfg = cfg;
        if (!mcfg.contains("model")) mcfg["model"] = "machine_replacement";
        const ModelSpec model = build_model(mcfg, true);
        RelaxedControlPath control;
        const json pc = cfg.value("policy", json());
        if (pc.is_object() && (pc.contains("file") || pc.contains("source"))) {
            control = open_loop_path(pc, model);
            j["control"] = "explicit";
        } else {
            const std::string fam =
                cfg.value("family", model.num_states() == 2 ? std::string("three_phase")
                                                            : std::string("one_switch"));
            control = optimize_switching(model, switching_family(model, fam)).control;
            j["control"] = "optimized:" + fam;
        }
        std::vector<std::int64_t> Ns;
        if (cfg.contains("Ns")) Ns = cfg["Ns"].get<std::vector<std::int64_t>>();
        const RateStudyResult result =
            rate_study(model, control, Ns, cfg.value("mode", std::string("auto")), seed,
                       cfg.value("replications", 200), jobs);
        write_rate_study(dir, model, result, seed);
        j["model"] = model.name;
        j["limit_value"] = result.limit_value;
        j["loglog_slope"] = result.loglog_slope;
        j["max_sqrtn_gap"] = result.sqrtn_gaps.empty()
                                 ? 0.0
                                 : *std::max_element(result.sqrtn_gaps.begin(),
                                                     result.sqrtn_gaps.end());
        j["warnings"] = result.warnings;
        return j;
    }
    if (study == "equivalence") {
        json mcfg = cfg;
        if (!mcfg.contains("model")) mcfg["model"] = "machine_replacement";
        const ModelSpec model = build_model(mcfg, true);
        const std::int64_t N = cfg.value("N", 3);
        const EquivalenceReport report =
            equivalence_study(model, N, seed, cfg.value("replications", 2000), jobs);
        write_equivalence_study(dir, model, report, seed);
        j["model"] = model.name;
        j["N"] = N;
        j["identity_max_error"] = report.identity_max_error;
        j["exact_value"] = report.exact_value;
        j["measure_mc_mean"] = report.measure_mc_mean;
        j["joint_mc_mean"] = report.joint_mc_mean;
        j["permutation_exact"] = report.permutation_exact;
        return j;
    }
    if (study == "nonuniqueness") {
        const NonuniquenessResult result =
            nonuniqueness_demo(cfg.value("N_even", 100), cfg.value("N_odd", 10001), seed,
                               cfg.value("t_cap", 1.0));
        write_nonuniqueness_demo(dir, result, seed);
        j["model"] = "cube_root";
        j["even_sup"] = result.even_sup;
        j["odd_sup"] = result.odd_sup;
        return j;
    }
    if (study == "feedback") {
        const FeedbackDemoResult result = feedback_nonconvergence_demo(
            cfg.value("N", 1400), cfg.value("threshold", 1e-4), seed);
        const ModelSpec model = registry_get("resource_competition");
        write_feedback_demo(dir, model, result, seed);
        j["model"] = model.name;
        j["N"] = result.N;
        j["open_dist"] = result.open_dist;
        j["feedback_dist"] = result.feedback_dist;
        return j;
    }
    throw InvalidParameter("study must be rate, equivalence, nonuniqueness, or feedback");
}

json do_figures(const json& cfg) {
    const std::uint64_t seed = resolve_seed(cfg, true);
    if (!cfg.contains("example") || !cfg["example"].is_string())
        throw InvalidParameter("config needs an \"example\" name");
    const FigureBundle bundle = replicate_figures(cfg["example"].get<std::string>(), seed);
    const auto dir = out_dir_of(cfg);
    write_figures(dir, bundle, seed);
    json j;
    j["command"] = "replicate-figures";
    j["example"] = bundle.example;
    j["seed"] = seed;
    j["out_dir"] = dir.string();
    for (const auto& [k, v] : bundle.summary) j[k] = v;
    json files = json::array();
    for (const auto& [name, content] : bundle.files) files.push_back(name);
    j["files"] = files;
    return j;
}

json resolve_for(const json& in, const std::string& command) {
    json out = in;
    out["command"] = command;
    const bool stochastic = command == "simulate" || command == "study" ||
                            command == "replicate-figures";
    out["seed"] = resolve_seed(in, stochastic);
    if (!out.contains("params")) out["params"] = json::object();
    if (!out.contains("out_dir")) out["out_dir"] = "mfmdp_out";
    if (!out.contains("jobs")) out["jobs"] = 1;
    if (command == "simulate") {
        if (!out.contains("replications")) out["replications"] = 1;
        if (!out.contains("policy")) out["policy"] = {{"type", "open_loop"}, {"source", "low"}};
    }
    if (command == "study" && !out.contains("study")) out["study"] = "rate";
    if (command == "optimize" && !out.contains("family")) out["family"] = "one_switch";
    if ((command == "validate" || command == "simulate" || command == "exact" ||
         command == "limit" || command == "optimize") &&
        !out.contains("model"))
        throw InvalidParameter("config needs a \"model\" name");
    return out;
}

int run_guarded(char** out, const std::function<json(int&)>& fn) {
    clear_error();
    if (out) *out = nullptr;
    try {
        int rc = MFMDP_OK;
        const json j = fn(rc);
        if (out) *out = dup_string(j.dump(2) + "\n");
        return rc;
    } catch (const Error& e) {
        t_error_name = e.name();
        t_error_message = e.what();
        return MFMDP_ERR;
    } catch (const std::exception& e) {
        t_error_name = "Error";
        t_error_message = e.what();
        return MFMDP_ERR;
    }
}

}  // namespace

extern "C" {

const char* mfmdp_version(void) { return "0.1.0"; }

const char* mfmdp_last_error_name(void) { return t_error_name.c_str(); }

const char* mfmdp_last_error_message(void) { return t_error_message.c_str(); }

void mfmdp_string_free(char* s) { std::free(s); }

int mfmdp_resolve_config(const char* config_json, const char* command, char** out_resolved) {
    return run_guarded(out_resolved, [&](int&) {
        return resolve_for(parse_config(config_json),
                           command ? std::string(command) : std::string("simulate"));
    });
}

int mfmdp_validate(const char* config_json, char** out_summary) {
    return run_guarded(out_summary,
                       [&](int& rc) { return do_validate(parse_config(config_json), rc); });
}

int mfmdp_simulate(const char* config_json, char** out_summary) {
    return run_guarded(out_summary, [&](int&) { return do_simulate(parse_config(config_json)); });
}

int mfmdp_exact(const char* config_json, char** out_summary) {
    return run_guarded(out_summary, [&](int&) { return do_exact(parse_config(config_json)); });
}

int mfmdp_limit(const char* config_json, char** out_summary) {
    return run_guarded(out_summary, [&](int&) { return do_limit(parse_config(config_json)); });
}

int mfmdp_optimize(const char* config_json, char** out_summary) {
    return run_guarded(out_summary, [&](int&) { return do_optimize(parse_config(config_json)); });
}

int mfmdp_study(const char* config_json, char** out_summary) {
    return run_guarded(out_summary, [&](int&) { return do_study(parse_config(config_json)); });
}

int mfmdp_replicate_figures(const char* config_json, char** out_summary) {
    return run_guarded(out_summary, [&](int&) { return do_figures(parse_config(config_json)); });
}

struct mfmdp_model {
    ModelSpec spec;
};

int mfmdp_model_create(const char* name, const char* params_json, mfmdp_model** out) {
    if (out) *out = nullptr;
    return run_guarded(nullptr, [&](int&) -> json {
        if (!name) throw InvalidParameter("model name is null");
        std::map<std::string, double> overrides;
        if (params_json && *params_json) {
            json cfg;
            cfg["params"] = json::parse(params_json, nullptr, false);
            if (cfg["params"].is_discarded())
                throw InvalidParameter("params_json is not valid JSON");
            overrides = overrides_from(cfg);
        }
        if (!out) throw InvalidParameter("output handle is null");
        *out = new mfmdp_model{registry_get(name, overrides, /*revalidate=*/false)};
        return json::object();
    });
}

void mfmdp_model_free(mfmdp_model* model) { delete model; }

int mfmdp_model_validate(const mfmdp_model* model, char** out_report_json) {
    return run_guarded(out_report_json, [&](int& rc) {
        if (!model) throw InvalidParameter("model handle is null");
        const ValidationReport report = validate_assumptions(model->spec);
        rc = report.hard_pass() ? MFMDP_OK : MFMDP_ERR_ASSUMPTION;
        return report_to_json(report);
    });
}

int mfmdp_model_info(const mfmdp_model* model, char** out_info_json) {
    return run_guarded(out_info_json, [&](int&) {
        if (!model) throw InvalidParameter("model handle is null");
        const ModelSpec& m = model->spec;
        json j;
        j["name"] = m.name;
        j["states"] = m.states.labels;
        j["actions"] = m.actions.per_state;
        j["params"] = m.params;
        j["beta"] = m.discount;
        if (m.horizon.is_finite)
            j["horizon"] = m.horizon.length;
        else
            j["horizon"] = "infinite";
        j["q_max"] = m.q_max;
        j["initial"] = m.initial;
        return j;
    });
}

}  // extern "C"
