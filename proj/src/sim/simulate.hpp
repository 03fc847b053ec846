#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "core/model.hpp"
#include "core/registry.hpp"
#include "core/rng.hpp"

namespace mfmdp {

// Decision rule for the measure-valued process. OpenLoop re-reads its path at
// every jump and at path breakpoints; Feedback evaluates the rule at the
// current measure; JumpAdapted freezes the path's value between merged event
// times (jumps and path breakpoints), which for piecewise-constant paths
// yields the same applied control as OpenLoop.
struct Policy {
    enum class Kind { OpenLoop, Feedback, JumpAdapted };
    Kind kind = Kind::OpenLoop;
    RelaxedControlPath path;
    FeedbackRule feedback;

    static Policy open_loop(RelaxedControlPath p) { return {Kind::OpenLoop, std::move(p), {}}; }
    static Policy jump_adapted(RelaxedControlPath p) { return {Kind::JumpAdapted, std::move(p), {}}; }
    static Policy feedback_rule(FeedbackRule f) { return {Kind::Feedback, {}, std::move(f)}; }
};

// Piecewise-constant sample path of the measure process. measures[n] holds on
// [jump_times[n], jump_times[n+1]) with jump_times[0] = 0; the last measure
// holds to the horizon. controls[n] is the per-state control applied at
// jump_times[n]. realized_control records every change point of the applied
// control (jumps and open-loop breakpoints), so rewards can be integrated
// exactly even when the control switched between jumps.
struct Trajectory {
    std::vector<double> jump_times;
    std::vector<EmpiricalMeasure> measures;
    std::vector<ControlVector> controls;
    RelaxedControlPath realized_control;
    double horizon = 0.0;

    const EmpiricalMeasure& measure_at(double t) const;
};

// Time window actually simulated/integrated: the model horizon if finite,
// otherwise the truncation time 30/beta. Throws InfiniteHorizonUntruncated
// when the horizon is infinite and beta = 0.
double evaluation_window(const ModelSpec& model);

// Truncation error bound e^{-beta*T_trunc} * r_max / beta for infinite
// horizons (0 for finite horizons); r_max estimated over probe measures.
double truncation_error_bound(const ModelSpec& model);

// System transition rates out of mu under control alpha: entries (i, j, rate)
// with rate = N * mu(i) * sum_a alpha^i(a) q({j}|i,a,mu) for occupied i, j != i.
struct SystemRate {
    int from;
    int to;
    double rate;
};
std::vector<SystemRate> system_rates(const ModelSpec& model, const EmpiricalMeasure& mu,
                                     const ControlVector& alpha);

Trajectory simulate(const ModelSpec& model, const EmpiricalMeasure& mu0, const Policy& policy,
                    RngStream& rng);
Trajectory simulate(const ModelSpec& model, const EmpiricalMeasure& mu0, const Policy& policy,
                    std::uint64_t seed, std::uint64_t stream = 0);

// Per-agent decision rule for the joint-state process: kernel(k, x, t) is the
// action distribution of agent k (over the grid of its current state).
struct JointPolicy {
    std::function<ActionDistribution(int k, const std::vector<int>& x, double t)> kernel;
};

// Exact event simulation of the full joint state vector; returns the
// empirical-measure projection of the path.
Trajectory simulate_joint(const ModelSpec& model, const std::vector<int>& x0,
                          const JointPolicy& policy, RngStream& rng);

// Exact discounted reward of one realized path, integrated in closed form per
// constant segment, plus the discounted terminal reward on finite horizons.
double discounted_reward(const ModelSpec& model, const Trajectory& traj);

struct MonteCarloValue {
    double mean = 0.0;
    double std_error = 0.0;
    std::vector<double> values;
};

// Independent seeded replications (stream = replication index); deterministic
// for a given seed regardless of jobs.
MonteCarloValue monte_carlo_value(const ModelSpec& model, const EmpiricalMeasure& mu0,
                                  const Policy& policy, int replications, std::uint64_t seed,
                                  int jobs = 1);

struct MartingaleResidual {
    int state = 0;
    std::vector<double> times;
    std::vector<double> values;
};

// Compensated fluctuation of component j along a trajectory: the measure
// increment minus the exact integral of the applied drift.
MartingaleResidual martingale_residual(const ModelSpec& model, const Trajectory& traj, int j,
                                       const std::vector<double>& sample_times);

}  // namespace mfmdp
