#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "core/model.hpp"
#include "limit/ode.hpp"
#include "sim/simulate.hpp"

namespace mfmdp {

// ---------------------------------------------------------------------------
// Convergence-rate study: value of a fixed open-loop control in the N-agent
// system versus the deterministic limit, over increasing N.

struct RateStudyResult {
    std::vector<std::int64_t> Ns;
    double limit_value = 0.0;
    std::vector<double> values;       // V^N at the rounded initial condition
    std::vector<double> std_errors;   // 0 for exact rows
    std::vector<std::string> modes;   // "exact" or "mc" per N
    std::vector<double> gaps;         // |V^N - limit_value|
    std::vector<double> signed_gaps;  // limit_value - V^N
    std::vector<double> sqrtn_gaps;   // sqrt(N) * gap
    double loglog_slope = 0.0;        // regression of log gap on log N
    std::vector<std::string> warnings;
};

// mode: "exact" (lattice evaluation, falls back to MC per N when the lattice
// is too large), "mc", or "auto" (exact for two-state models, MC otherwise).
RateStudyResult rate_study(const ModelSpec& model, const RelaxedControlPath& control,
                           std::vector<std::int64_t> Ns, const std::string& mode,
                           std::uint64_t seed, int replications = 200, int jobs = 1);

// ---------------------------------------------------------------------------
// Three-way agreement between the joint-state simulator, the measure-valued
// simulator, and the lattice evaluation, at a small N.

struct EquivalenceReport {
    std::int64_t N = 0;
    int joint_states_probed = 0;
    double identity_max_error = 0.0;  // aggregated per-agent rates vs system rates
    double exact_value = 0.0;
    double measure_mc_mean = 0.0, measure_mc_se = 0.0;
    double joint_mc_mean = 0.0, joint_mc_se = 0.0;
    bool permutation_exact = false;   // permuted joint start, same seed, same measure path
    int replications = 0;
    std::vector<std::pair<std::string, double>> per_state_identity;  // joint state -> error
};

EquivalenceReport equivalence_study(const ModelSpec& model, std::int64_t N, std::uint64_t seed,
                                    int replications = 2000, int jobs = 1);

// ---------------------------------------------------------------------------
// Two subsequence limits from one initial condition: the all-in-"2" start is
// frozen for even N, while one seed agent (odd N) ignites growth onto the
// (2t/3)^(3/2) branch.

struct NonuniquenessResult {
    std::int64_t N_even = 0, N_odd = 0;
    Trajectory even_path, odd_path;
    std::vector<double> grid_times;  // 200 nodes over the model horizon
    double even_sup = 0.0;           // sup of the even path's "1"-fraction
    double odd_sup = 0.0;            // sup |odd "1"-fraction - branch| on [0, t_cap]
    double t_cap = 1.0;
};

NonuniquenessResult nonuniqueness_demo(std::int64_t N_even, std::int64_t N_odd,
                                       std::uint64_t seed, double t_cap = 1.0);

double growth_branch(double t);  // (2t/3)^(3/2)

// ---------------------------------------------------------------------------
// Priority feedback in the two-line competition model: the deterministic
// sliding-mode trajectory, an open-loop simulation of its realized control,
// and the same feedback applied to the N-agent system.

struct FeedbackDemoResult {
    std::int64_t N = 0;
    double threshold = 0.0;
    std::vector<double> grid_times;               // 200 nodes
    std::vector<std::vector<double>> det_states;  // per node
    RelaxedControlPath det_control;               // realized deterministic control
    Trajectory open_path, feedback_path;
    double open_dist = 0.0;      // sup-TV to the deterministic path
    double feedback_dist = 0.0;
};

FeedbackDemoResult feedback_nonconvergence_demo(std::int64_t N, double threshold,
                                                std::uint64_t seed);

// ---------------------------------------------------------------------------
// Figure-style CSV bundles.

struct FigureBundle {
    std::string example;
    std::vector<std::pair<std::string, std::string>> files;  // filename -> content
    std::map<std::string, double> summary;
};

FigureBundle replicate_figures(const std::string& example, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Serialization: each study writes study.json plus its data files into dir.

void write_rate_study(const std::filesystem::path& dir, const ModelSpec& model,
                      const RateStudyResult& result, std::uint64_t seed);
void write_equivalence_study(const std::filesystem::path& dir, const ModelSpec& model,
                             const EquivalenceReport& report, std::uint64_t seed);
void write_nonuniqueness_demo(const std::filesystem::path& dir, const NonuniquenessResult& result,
                              std::uint64_t seed);
void write_feedback_demo(const std::filesystem::path& dir, const ModelSpec& model,
                         const FeedbackDemoResult& result, std::uint64_t seed);
void write_figures(const std::filesystem::path& dir, const FigureBundle& bundle,
                   std::uint64_t seed);

// Sup over a fixed 200-node grid of the total-variation distance between a
// simulated path and a reference path given at the same nodes.
double sup_tv_distance(const Trajectory& traj, const std::vector<double>& times,
                       const std::vector<std::vector<double>>& reference);

}  // namespace mfmdp
