#include "io/io.hpp"

#include <charconv>
#include <fstream>
#include <system_error>

#include "json.hpp"

#include "core/errors.hpp"

namespace mfmdp::io {

std::string format_double(double v) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoFailure("cannot open for writing: " + path.string());
    out << content;
    if (!out) throw IoFailure("write failed: " + path.string());
}

std::string trajectory_csv(const ModelSpec& model, const Trajectory& traj) {
    std::string s = "t";
    for (const auto& label : model.states.labels) s += ",frac_" + label;
    s += ",control_id\n";
    auto row = [&](double t, const EmpiricalMeasure& mu) {
        s += format_double(t);
        for (int i = 0; i < model.num_states(); ++i) s += "," + format_double(mu.fraction(i));
        s += "," + std::to_string(traj.realized_control.segment_index(t)) + "\n";
    };
    for (std::size_t n = 0; n < traj.jump_times.size(); ++n) row(traj.jump_times[n], traj.measures[n]);
    if (traj.jump_times.empty() || traj.jump_times.back() < traj.horizon)
        row(traj.horizon, traj.measures.back());
    return s;
}

std::string trajectory_sidecar_json(const ModelSpec& model, std::uint64_t seed,
                                    std::int64_t agents) {
    nlohmann::json j;
    j["seed"] = seed;
    j["N"] = agents;
    j["model"] = model.name;
    j["params"] = nlohmann::json::object();
    for (const auto& [k, v] : model.params) j["params"][k] = v;
    return j.dump(2) + "\n";
}

std::string limit_trajectory_csv(const ModelSpec& model, const LimitTrajectory& traj,
                                 const RelaxedControlPath& control) {
    std::string s = "t";
    for (const auto& label : model.states.labels) s += ",mu_" + label;
    for (int i = 0; i < model.num_states(); ++i)
        for (std::size_t a = 0; a < model.actions.per_state[i].size(); ++a)
            s += ",w_" + model.states.labels[i] + "_" + std::to_string(a);
    s += "\n";
    for (std::size_t k = 0; k < traj.grid.nodes.size(); ++k) {
        const double t = traj.grid.nodes[k];
        s += format_double(t);
        for (double x : traj.states[k]) s += "," + format_double(x);
        const ControlVector& cv = control.at(t);
        for (const auto& dist : cv)
            for (double w : dist.weights) s += "," + format_double(w);
        s += "\n";
    }
    return s;
}

std::string value_table_csv(const ModelSpec& model, const ValueTable& table) {
    std::string s;
    for (const auto& label : model.states.labels) s += "count_" + label + ",";
    s += "value";
    const bool with_policy = !table.policy.empty();
    if (with_policy)
        for (const auto& label : model.states.labels) s += ",action_" + label;
    s += "\n";
    for (std::int64_t p = 0; p < table.lattice.size(); ++p) {
        const auto counts = table.lattice.counts(p);
        for (std::int64_t c : counts) s += std::to_string(c) + ",";
        s += format_double(table.values[static_cast<std::size_t>(p)]);
        if (with_policy)
            for (int i = 0; i < model.num_states(); ++i)
                s += "," + std::to_string(table.action_at(p, i));
        s += "\n";
    }
    return s;
}

std::string value_table_metadata_json(const ValueTable& table) {
    nlohmann::json j;
    j["N"] = table.lattice.agents();
    j["beta"] = table.beta;
    j["tol"] = table.tol;
    j["iterations"] = table.iterations;
    j["lambda_bar"] = table.lambda_bar;
    j["points"] = table.lattice.size();
    return j.dump(2) + "\n";
}

std::string optimize_result_json(const OptimizeResult& result) {
    nlohmann::json j;
    j["value"] = result.value;
    j["parameters"] = result.parameters;
    j["diagnostics"] = nlohmann::json::object();
    for (const auto& [k, v] : result.diagnostics) j["diagnostics"][k] = v;
    j["control"]["breakpoints"] = result.control.breakpoints;
    auto segs = nlohmann::json::array();
    for (const auto& cv : result.control.segments) {
        auto seg = nlohmann::json::array();
        for (const auto& dist : cv) seg.push_back(dist.weights);
        segs.push_back(seg);
    }
    j["control"]["segments"] = segs;
    return j.dump(2) + "\n";
}

}  // namespace mfmdp::io
