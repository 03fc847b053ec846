#include "sim/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <thread>

namespace mfmdp {

namespace {

void push_realized(RelaxedControlPath& path, double t, const ControlVector& alpha) {
    if (!path.breakpoints.empty() && path.breakpoints.back() == t) {
        path.segments.back() = alpha;
        return;
    }
    path.breakpoints.push_back(t);
    path.segments.push_back(alpha);
}

}  // namespace

const EmpiricalMeasure& Trajectory::measure_at(double t) const {
    auto it = std::upper_bound(jump_times.begin(), jump_times.end(), t);
    std::size_t idx = it == jump_times.begin()
                          ? 0
                          : static_cast<std::size_t>(std::distance(jump_times.begin(), it)) - 1;
    return measures[idx];
}

double evaluation_window(const ModelSpec& model) {
    if (model.horizon.is_finite) return model.horizon.length;
    if (model.discount <= 0.0)
        throw InfiniteHorizonUntruncated(
            "evaluation window: infinite horizon with zero discount has no finite truncation");
    return 30.0 / model.discount;
}

double truncation_error_bound(const ModelSpec& model) {
    if (model.horizon.is_finite) return 0.0;
    double r_max = 0.0;
    for (const auto& mu : default_probe_grid(model.num_states()))
        for (int i = 0; i < model.num_states(); ++i)
            for (double a : model.actions.at(i)) r_max = std::max(r_max, std::abs(model.reward(i, a, mu)));
    return std::exp(-30.0) * r_max / model.discount;
}

std::vector<SystemRate> system_rates(const ModelSpec& model, const EmpiricalMeasure& mu,
                                     const ControlVector& alpha) {
    const int n = model.num_states();
    std::vector<SystemRate> out;
    std::vector<double> row(static_cast<std::size_t>(n));
    std::vector<double> fractions = mu.fractions();
    for (int i = 0; i < n; ++i) {
        std::int64_t count = mu.counts[static_cast<std::size_t>(i)];
        if (count == 0) continue;
        model.relaxed_intensity_row(i, alpha[static_cast<std::size_t>(i)], fractions, row);
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            double rate = static_cast<double>(count) * row[static_cast<std::size_t>(j)];
            if (rate > 0.0) out.push_back({i, j, rate});
        }
    }
    return out;
}

Trajectory simulate(const ModelSpec& model, const EmpiricalMeasure& mu0, const Policy& policy,
                    RngStream& rng) {
    if (!mu0.valid()) throw InvalidParameter("simulate: invalid initial measure");
    const double T = evaluation_window(model);
    const bool path_driven = policy.kind != Policy::Kind::Feedback;
    if (path_driven) {
        policy.path.check();
        if (!policy.path.covers(T))
            throw HorizonNotCovered("simulate: control path ends before the evaluation window");
    }

    Trajectory traj;
    traj.horizon = T;
    double t = 0.0;
    EmpiricalMeasure mu = mu0;
    std::vector<double> fractions = mu.fractions();
    ControlVector alpha = path_driven ? policy.path.at(0.0) : policy.feedback(fractions);
    traj.jump_times.push_back(0.0);
    traj.measures.push_back(mu);
    traj.controls.push_back(alpha);
    push_realized(traj.realized_control, 0.0, alpha);
    traj.realized_control.valid_until = T;

    auto next_breakpoint_after = [&](double s) {
        if (!path_driven) return std::numeric_limits<double>::infinity();
        const auto& bp = policy.path.breakpoints;
        auto it = std::upper_bound(bp.begin(), bp.end(), s);
        return it == bp.end() ? std::numeric_limits<double>::infinity() : *it;
    };

    while (t < T) {
        std::vector<SystemRate> rates = system_rates(model, mu, alpha);
        double total = 0.0;
        for (const SystemRate& r : rates) total += r.rate;
        double next_bp = next_breakpoint_after(t);

        if (total <= 0.0) {
            // Frozen configuration: nothing can move until the control path
            // changes the rates at its next breakpoint.
            if (next_bp < T) {
                t = next_bp;
                alpha = policy.path.at(t);
                push_realized(traj.realized_control, t, alpha);
                continue;
            }
            break;
        }

        double tau = rng.next_exponential(total);
        double t_jump = t + tau;
        if (next_bp < T && next_bp < t_jump) {
            // The exponential clock is memoryless: condition on no jump before
            // the breakpoint, then restart with the updated rates.
            t = next_bp;
            alpha = policy.path.at(t);
            push_realized(traj.realized_control, t, alpha);
            continue;
        }
        if (t_jump >= T) break;

        double u = rng.next_uniform() * total;
        std::size_t pick = rates.size() - 1;
        double acc = 0.0;
        for (std::size_t k = 0; k < rates.size(); ++k) {
            acc += rates[k].rate;
            if (u < acc) {
                pick = k;
                break;
            }
        }
        mu = measure_transition(mu, rates[pick].from, rates[pick].to);
        t = t_jump;
        fractions = mu.fractions();
        alpha = path_driven ? policy.path.at(t) : policy.feedback(fractions);
        traj.jump_times.push_back(t);
        traj.measures.push_back(mu);
        traj.controls.push_back(alpha);
        push_realized(traj.realized_control, t, alpha);
    }
    return traj;
}

Trajectory simulate(const ModelSpec& model, const EmpiricalMeasure& mu0, const Policy& policy,
                    std::uint64_t seed, std::uint64_t stream) {
    RngStream rng(seed, stream);
    return simulate(model, mu0, policy, rng);
}

namespace {

EmpiricalMeasure project_joint(const std::vector<int>& x, int n_states) {
    EmpiricalMeasure mu;
    mu.agents = static_cast<std::int64_t>(x.size());
    mu.counts.assign(static_cast<std::size_t>(n_states), 0);
    for (int s : x) ++mu.counts[static_cast<std::size_t>(s)];
    return mu;
}

// Equal-weight mixture of the agents' kernels per occupied state; uniform
// placeholder on empty states (they carry no rate and no reward).
ControlVector lift_kernels(const ModelSpec& model, const std::vector<int>& x,
                           const std::vector<ActionDistribution>& kernels) {
    const int n = model.num_states();
    ControlVector out(static_cast<std::size_t>(n));
    std::vector<int> occupancy(static_cast<std::size_t>(n), 0);
    for (int i = 0; i < n; ++i)
        out[static_cast<std::size_t>(i)].weights.assign(
            static_cast<std::size_t>(model.actions.count(i)), 0.0);
    for (std::size_t k = 0; k < x.size(); ++k) {
        int i = x[k];
        ++occupancy[static_cast<std::size_t>(i)];
        auto& w = out[static_cast<std::size_t>(i)].weights;
        const auto& kw = kernels[k].weights;
        for (std::size_t a = 0; a < w.size(); ++a) w[a] += kw[a];
    }
    for (int i = 0; i < n; ++i) {
        auto& d = out[static_cast<std::size_t>(i)];
        if (occupancy[static_cast<std::size_t>(i)] == 0)
            d = ActionDistribution::uniform(model.actions.count(i));
        else
            for (double& w : d.weights) w /= occupancy[static_cast<std::size_t>(i)];
    }
    return out;
}

}  // namespace

Trajectory simulate_joint(const ModelSpec& model, const std::vector<int>& x0,
                          const JointPolicy& policy, RngStream& rng) {
    if (x0.empty()) throw InvalidParameter("simulate_joint: need at least one agent");
    const int n = model.num_states();
    const double T = evaluation_window(model);
    const std::size_t N = x0.size();

    Trajectory traj;
    traj.horizon = T;
    std::vector<int> x = x0;
    EmpiricalMeasure mu = project_joint(x, n);
    std::vector<double> fractions = mu.fractions();

    std::vector<ActionDistribution> kernels(N);
    auto refresh_kernels = [&](double s) {
        for (std::size_t k = 0; k < N; ++k) kernels[k] = policy.kernel(static_cast<int>(k), x, s);
    };
    refresh_kernels(0.0);
    ControlVector lifted = lift_kernels(model, x, kernels);

    traj.jump_times.push_back(0.0);
    traj.measures.push_back(mu);
    traj.controls.push_back(lifted);
    push_realized(traj.realized_control, 0.0, lifted);
    traj.realized_control.valid_until = T;

    double t = 0.0;
    std::vector<double> row(static_cast<std::size_t>(n));
    struct AgentJump {
        int agent;
        int to;
        double rate;
    };
    while (t < T) {
        std::vector<AgentJump> rates;
        double total = 0.0;
        for (std::size_t k = 0; k < N; ++k) {
            model.relaxed_intensity_row(x[k], kernels[k], fractions, row);
            for (int j = 0; j < n; ++j) {
                if (j == x[k]) continue;
                double rate = row[static_cast<std::size_t>(j)];
                if (rate > 0.0) {
                    rates.push_back({static_cast<int>(k), j, rate});
                    total += rate;
                }
            }
        }
        if (total <= 0.0) break;
        double tau = rng.next_exponential(total);
        double t_jump = t + tau;
        if (t_jump >= T) break;
        double u = rng.next_uniform() * total;
        std::size_t pick = rates.size() - 1;
        double acc = 0.0;
        for (std::size_t k = 0; k < rates.size(); ++k) {
            acc += rates[k].rate;
            if (u < acc) {
                pick = k;
                break;
            }
        }
        x[static_cast<std::size_t>(rates[pick].agent)] = rates[pick].to;
        t = t_jump;
        mu = project_joint(x, n);
        fractions = mu.fractions();
        refresh_kernels(t);
        lifted = lift_kernels(model, x, kernels);
        traj.jump_times.push_back(t);
        traj.measures.push_back(mu);
        traj.controls.push_back(lifted);
        push_realized(traj.realized_control, t, lifted);
    }
    return traj;
}

namespace {

std::vector<double> merged_nodes(const Trajectory& traj) {
    std::vector<double> nodes = traj.jump_times;
    nodes.insert(nodes.end(), traj.realized_control.breakpoints.begin(),
                 traj.realized_control.breakpoints.end());
    nodes.push_back(traj.horizon);
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
    while (!nodes.empty() && nodes.back() > traj.horizon) nodes.pop_back();
    if (nodes.empty() || nodes.back() != traj.horizon) nodes.push_back(traj.horizon);
    return nodes;
}

}  // namespace

double discounted_reward(const ModelSpec& model, const Trajectory& traj) {
    if (!model.horizon.is_finite && model.discount <= 0.0)
        throw InfiniteHorizonUntruncated("discounted_reward: undiscounted infinite-horizon integral");
    const double beta = model.discount;
    std::vector<double> nodes = merged_nodes(traj);
    double value = 0.0;
    for (std::size_t k = 0; k + 1 < nodes.size(); ++k) {
        double u = nodes[k], v = nodes[k + 1];
        const EmpiricalMeasure& mu = traj.measure_at(u);
        const ControlVector& alpha = traj.realized_control.at(u);
        std::vector<double> fractions = mu.fractions();
        double r = system_reward(model, fractions, alpha);
        if (beta > 0.0)
            value += r * (std::exp(-beta * u) - std::exp(-beta * v)) / beta;
        else
            value += r * (v - u);
    }
    if (model.horizon.is_finite) {
        std::vector<double> fractions = traj.measure_at(traj.horizon).fractions();
        value += std::exp(-beta * traj.horizon) * model.terminal(fractions);
    }
    return value;
}

MonteCarloValue monte_carlo_value(const ModelSpec& model, const EmpiricalMeasure& mu0,
                                  const Policy& policy, int replications, std::uint64_t seed,
                                  int jobs) {
    if (replications < 1) throw InvalidParameter("monte_carlo_value: need at least one replication");
    MonteCarloValue result;
    result.values.assign(static_cast<std::size_t>(replications), 0.0);

    auto run_range = [&](int begin, int end, std::exception_ptr& error) {
        try {
            for (int rep = begin; rep < end; ++rep) {
                Trajectory traj = simulate(model, mu0, policy, seed, static_cast<std::uint64_t>(rep));
                result.values[static_cast<std::size_t>(rep)] = discounted_reward(model, traj);
            }
        } catch (...) {
            error = std::current_exception();
        }
    };

    if (jobs <= 1) {
        std::exception_ptr error;
        run_range(0, replications, error);
        if (error) std::rethrow_exception(error);
    } else {
        int workers = std::min(jobs, replications);
        std::vector<std::thread> threads;
        std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
        int chunk = (replications + workers - 1) / workers;
        for (int w = 0; w < workers; ++w) {
            int begin = w * chunk;
            int end = std::min(replications, begin + chunk);
            threads.emplace_back(run_range, begin, end, std::ref(errors[static_cast<std::size_t>(w)]));
        }
        for (auto& th : threads) th.join();
        for (auto& err : errors)
            if (err) std::rethrow_exception(err);
    }

    double sum = 0.0;
    for (double v : result.values) sum += v;
    result.mean = sum / static_cast<double>(replications);
    if (replications > 1) {
        double ss = 0.0;
        for (double v : result.values) ss += (v - result.mean) * (v - result.mean);
        result.std_error = std::sqrt(ss / static_cast<double>(replications - 1) /
                                     static_cast<double>(replications));
    }
    return result;
}

MartingaleResidual martingale_residual(const ModelSpec& model, const Trajectory& traj, int j,
                                       const std::vector<double>& sample_times) {
    if (j < 0 || j >= model.num_states())
        throw InvalidParameter("martingale_residual: state index out of range");
    for (double t : sample_times)
        if (t < 0.0 || t > traj.horizon)
            throw InvalidParameter("martingale_residual: sample time outside the trajectory window");

    const std::size_t sj = static_cast<std::size_t>(j);
    std::vector<double> nodes = merged_nodes(traj);
    // Cumulative drift integral at each node; the integrand is constant
    // between nodes so this is exact.
    std::vector<double> cumulative(nodes.size(), 0.0);
    std::vector<double> drifts(nodes.size() - 1, 0.0);
    const int n = model.num_states();
    std::vector<double> row(static_cast<std::size_t>(n));
    for (std::size_t k = 0; k + 1 < nodes.size(); ++k) {
        const EmpiricalMeasure& mu = traj.measure_at(nodes[k]);
        const ControlVector& alpha = traj.realized_control.at(nodes[k]);
        std::vector<double> fractions = mu.fractions();
        double drift = 0.0;
        for (int i = 0; i < n; ++i) {
            if (fractions[static_cast<std::size_t>(i)] == 0.0) continue;
            model.relaxed_intensity_row(i, alpha[static_cast<std::size_t>(i)], fractions, row);
            drift += fractions[static_cast<std::size_t>(i)] * row[sj];
        }
        drifts[k] = drift;
        cumulative[k + 1] = cumulative[k] + drift * (nodes[k + 1] - nodes[k]);
    }

    MartingaleResidual out;
    out.state = j;
    out.times = sample_times;
    out.values.reserve(sample_times.size());
    const double mu0_j = traj.measures.front().fraction(j);
    for (double t : sample_times) {
        auto it = std::upper_bound(nodes.begin(), nodes.end(), t);
        std::size_t idx = it == nodes.begin()
                              ? 0
                              : static_cast<std::size_t>(std::distance(nodes.begin(), it)) - 1;
        if (idx + 1 >= nodes.size()) idx = nodes.size() - 2;
        double integral = cumulative[idx] + drifts[idx] * (t - nodes[idx]);
        double m = traj.measure_at(t).fraction(j) - mu0_j - integral;
        out.values.push_back(m);
    }
    return out;
}

}  // namespace mfmdp
