#include "experiments/studies.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"

#include "core/errors.hpp"
#include "core/registry.hpp"
#include "exact/solve.hpp"
#include "io/io.hpp"
#include "limit/optimize.hpp"

namespace mfmdp {

namespace {

ControlVector uniform_cv(const ModelSpec& model) {
    ControlVector cv;
    for (int i = 0; i < model.num_states(); ++i)
        cv.push_back(ActionDistribution::uniform(model.actions.per_state[i].size()));
    return cv;
}

ControlVector extreme_cv(const ModelSpec& model, bool high) {
    ControlVector cv;
    for (int i = 0; i < model.num_states(); ++i) {
        const std::size_t k = model.actions.per_state[i].size();
        cv.push_back(ActionDistribution::dirac(high ? k - 1 : 0, k));
    }
    return cv;
}

std::vector<double> grid_200(double T) {
    std::vector<double> t(200);
    for (int k = 0; k < 200; ++k) t[k] = T * static_cast<double>(k) / 199.0;
    return t;
}

double tv_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    return 0.5 * s;
}

// Linear interpolation of per-node states onto an arbitrary time.
std::vector<double> interp_states(const std::vector<double>& times,
                                  const std::vector<std::vector<double>>& states, double t) {
    if (t <= times.front()) return states.front();
    if (t >= times.back()) return states.back();
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    const std::size_t hi = static_cast<std::size_t>(it - times.begin());
    const std::size_t lo = hi - 1;
    const double w = (t - times[lo]) / (times[hi] - times[lo]);
    std::vector<double> out(states[lo].size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = (1.0 - w) * states[lo][i] + w * states[hi][i];
    return out;
}

std::string sampled_path_csv(const ModelSpec& model, const Trajectory& traj,
                             const std::vector<double>& times) {
    std::string s = "t";
    for (const auto& label : model.states.labels) s += ",frac_" + label;
    s += "\n";
    for (double t : times) {
        s += io::format_double(t);
        const EmpiricalMeasure& mu = traj.measure_at(std::min(t, traj.horizon));
        for (int i = 0; i < model.num_states(); ++i) s += "," + io::format_double(mu.fraction(i));
        s += "\n";
    }
    return s;
}

std::string states_csv(const ModelSpec& model, const std::vector<double>& times,
                       const std::vector<std::vector<double>>& states) {
    std::string s = "t";
    for (const auto& label : model.states.labels) s += ",mu_" + label;
    s += "\n";
    for (std::size_t k = 0; k < times.size(); ++k) {
        s += io::format_double(times[k]);
        for (double x : states[k]) s += "," + io::format_double(x);
        s += "\n";
    }
    return s;
}

void write_study_json(const std::filesystem::path& dir, const nlohmann::json& j) {
    io::write_file(dir / "study.json", j.dump(2) + "\n");
}

double finite_horizon_or_throw(const ModelSpec& model, const char* study) {
    if (!model.horizon.is_finite)
        throw InvalidParameter(std::string(study) + " needs a finite-horizon model");
    return model.horizon.length;
}

}  // namespace

double sup_tv_distance(const Trajectory& traj, const std::vector<double>& times,
                       const std::vector<std::vector<double>>& reference) {
    double worst = 0.0;
    for (std::size_t k = 0; k < times.size(); ++k) {
        const EmpiricalMeasure& mu = traj.measure_at(std::min(times[k], traj.horizon));
        std::vector<double> f(mu.states());
        for (int i = 0; i < mu.states(); ++i) f[i] = mu.fraction(i);
        worst = std::max(worst, tv_distance(f, reference[k]));
    }
    return worst;
}

// ---------------------------------------------------------------------------

RateStudyResult rate_study(const ModelSpec& model, const RelaxedControlPath& control,
                           std::vector<std::int64_t> Ns, const std::string& mode,
                           std::uint64_t seed, int replications, int jobs) {
    const double T = finite_horizon_or_throw(model, "rate study");
    if (Ns.empty()) Ns = {10, 20, 40, 80, 160, 320};
    if (!std::is_sorted(Ns.begin(), Ns.end()))
        throw InvalidParameter("rate study: N values must increase");
    if (mode != "exact" && mode != "mc" && mode != "auto")
        throw InvalidParameter("rate study mode must be exact, mc, or auto");
    const bool prefer_exact = mode == "exact" || (mode == "auto" && model.num_states() == 2);
    if (replications < 200) replications = 200;

    RateStudyResult result;
    result.Ns = Ns;
    {
        const TimeGrid grid = default_grid(model, control);
        result.limit_value = objective_F(model, model.initial, control, grid);
    }

    const double qm = probed_q_max(model);
    const Policy policy = Policy::open_loop(control);
    for (std::size_t idx = 0; idx < Ns.size(); ++idx) {
        const std::int64_t N = Ns[idx];
        const EmpiricalMeasure mu0 = round_measure(model.initial, N);
        double value = 0.0, se = 0.0;
        std::string used = "mc";
        if (prefer_exact) {
            try {
                const double lambda_bar =
                    static_cast<double>(N) * (model.num_states() - 1) * qm;
                const double h = std::min(T / 2000.0, 0.4 / std::max(lambda_bar, 1e-12));
                const TimeGrid grid = TimeGrid::build(T, h, control.breakpoints);
                const FiniteHorizonResult fh = policy_evaluation(model, N, policy, grid);
                value = fh.v0[static_cast<std::size_t>(fh.lattice.rank(mu0.counts))];
                used = "exact";
            } catch (const LatticeTooLarge& e) {
                result.warnings.push_back("N=" + std::to_string(N) +
                                          ": lattice too large, fell back to Monte Carlo (" +
                                          e.what() + ")");
            }
        }
        if (used == "mc") {
            const std::uint64_t seed_n = seed + 1000003ULL * (idx + 1);
            const MonteCarloValue mc =
                monte_carlo_value(model, mu0, policy, replications, seed_n, jobs);
            value = mc.mean;
            se = mc.std_error;
        }
        result.values.push_back(value);
        result.std_errors.push_back(se);
        result.modes.push_back(used);
        const double gap = std::abs(value - result.limit_value);
        result.gaps.push_back(gap);
        result.signed_gaps.push_back(result.limit_value - value);
        result.sqrtn_gaps.push_back(std::sqrt(static_cast<double>(N)) * gap);
    }

    // Least-squares slope of log gap against log N; gaps at numerical noise
    // make the slope meaningless, which gets a warning instead of a rescale.
    bool noisy = false;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(Ns.size());
    for (std::size_t i = 0; i < Ns.size(); ++i) {
        if (result.gaps[i] < 1e-12) noisy = true;
        const double x = std::log(static_cast<double>(Ns[i]));
        const double y = std::log(std::max(result.gaps[i], 1e-16));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    result.loglog_slope = (n * sxy - sx * sy) / std::max(n * sxx - sx * sx, 1e-300);
    if (noisy)
        result.warnings.push_back(
            "some gaps are below 1e-12 (numerical noise); the log-log slope is not informative");
    return result;
}

// ---------------------------------------------------------------------------

namespace {

struct JointMc {
    double mean = 0.0;
    double se = 0.0;
};

JointMc joint_mc(const ModelSpec& model, const std::vector<int>& x0, const ControlVector& cv,
                 int replications, std::uint64_t seed) {
    JointPolicy jp;
    jp.kernel = [&cv](int k, const std::vector<int>& x, double) {
        return cv[static_cast<std::size_t>(x[static_cast<std::size_t>(k)])];
    };
    std::vector<double> vals(static_cast<std::size_t>(replications));
    for (int r = 0; r < replications; ++r) {
        RngStream rng(seed, static_cast<std::uint64_t>(r));
        const Trajectory traj = simulate_joint(model, x0, jp, rng);
        vals[static_cast<std::size_t>(r)] = discounted_reward(model, traj);
    }
    JointMc out;
    for (double v : vals) out.mean += v;
    out.mean /= static_cast<double>(replications);
    double ss = 0.0;
    for (double v : vals) ss += (v - out.mean) * (v - out.mean);
    out.se = std::sqrt(ss / (static_cast<double>(replications) - 1.0) /
                       static_cast<double>(replications));
    return out;
}

std::string joint_state_name(const std::vector<int>& x, const ModelSpec& model) {
    std::string s;
    for (int xi : x) {
        if (!s.empty()) s += "|";
        s += model.states.labels[static_cast<std::size_t>(xi)];
    }
    return s;
}

}  // namespace

EquivalenceReport equivalence_study(const ModelSpec& model, std::int64_t N, std::uint64_t seed,
                                    int replications, int jobs) {
    if (N < 1 || N > 4) throw InvalidParameter("equivalence study runs at N between 1 and 4");
    const double T = finite_horizon_or_throw(model, "equivalence study");
    const int S = model.num_states();

    EquivalenceReport report;
    report.N = N;
    report.replications = replications;

    // (a) Aggregated per-agent rates versus system rates at every joint state,
    // under the extreme and the uniform relaxed controls.
    const std::vector<ControlVector> probes = {extreme_cv(model, false), extreme_cv(model, true),
                                               uniform_cv(model)};
    std::vector<int> x(static_cast<std::size_t>(N), 0);
    std::vector<double> row(static_cast<std::size_t>(S));
    bool more = true;
    while (more) {
        std::vector<std::int64_t> counts(static_cast<std::size_t>(S), 0);
        for (int xi : x) ++counts[static_cast<std::size_t>(xi)];
        EmpiricalMeasure mu{counts, N};
        const std::vector<double> frac = mu.fractions();
        double worst_here = 0.0;
        for (const ControlVector& cv : probes) {
            std::vector<double> agg(static_cast<std::size_t>(S) * S, 0.0);
            for (int xi : x) {
                model.relaxed_intensity_row(xi, cv[static_cast<std::size_t>(xi)], frac, row);
                for (int j = 0; j < S; ++j)
                    if (j != xi) agg[static_cast<std::size_t>(xi) * S + j] += row[j];
            }
            std::vector<double> sys(static_cast<std::size_t>(S) * S, 0.0);
            for (const SystemRate& r : system_rates(model, mu, cv))
                sys[static_cast<std::size_t>(r.from) * S + r.to] = r.rate;
            for (std::size_t k = 0; k < agg.size(); ++k)
                worst_here = std::max(worst_here, std::abs(agg[k] - sys[k]));
        }
        report.identity_max_error = std::max(report.identity_max_error, worst_here);
        report.per_state_identity.emplace_back(joint_state_name(x, model), worst_here);
        ++report.joint_states_probed;
        more = false;
        for (std::size_t d = 0; d < x.size(); ++d) {
            if (++x[d] < S) {
                more = true;
                break;
            }
            x[d] = 0;
        }
    }

    // (b), (c) Value of the uniform-mixture open-loop control three ways.
    const ControlVector probe = uniform_cv(model);
    const Policy policy = Policy::open_loop(RelaxedControlPath::constant(probe));
    const EmpiricalMeasure mu0 = round_measure(model.initial, N);
    std::vector<int> x0;
    for (int i = 0; i < S; ++i)
        for (std::int64_t c = 0; c < mu0.counts[static_cast<std::size_t>(i)]; ++c) x0.push_back(i);

    const MonteCarloValue mm =
        monte_carlo_value(model, mu0, policy, replications, seed, jobs);
    report.measure_mc_mean = mm.mean;
    report.measure_mc_se = mm.std_error;
    const JointMc jm = joint_mc(model, x0, probe, replications, seed ^ 0x517cc1b727220a95ULL);
    report.joint_mc_mean = jm.mean;
    report.joint_mc_se = jm.se;

    {
        const double lambda_bar = static_cast<double>(N) * (S - 1) * probed_q_max(model);
        const double h = std::min(T / 2000.0, 0.4 / std::max(lambda_bar, 1e-12));
        const TimeGrid grid = TimeGrid::build(T, h, {});
        const FiniteHorizonResult fh = policy_evaluation(model, N, policy, grid);
        report.exact_value = fh.v0[static_cast<std::size_t>(fh.lattice.rank(mu0.counts))];
    }

    // Permutation invariance: a reordered joint state has the same empirical
    // measure, hence the same measure-valued path for the same seed.
    {
        std::vector<int> xp(x0.rbegin(), x0.rend());
        std::vector<std::int64_t> counts(static_cast<std::size_t>(S), 0);
        for (int xi : xp) ++counts[static_cast<std::size_t>(xi)];
        const EmpiricalMeasure mup{counts, N};
        RngStream r1(seed + 17, 0), r2(seed + 17, 0);
        const Trajectory t1 = simulate(model, mu0, policy, r1);
        const Trajectory t2 = simulate(model, mup, policy, r2);
        report.permutation_exact =
            mup.counts == mu0.counts && t1.jump_times == t2.jump_times &&
            [&] {
                for (std::size_t k = 0; k < t1.measures.size(); ++k)
                    if (t1.measures[k].counts != t2.measures[k].counts) return false;
                return true;
            }();
    }
    return report;
}

// ---------------------------------------------------------------------------

double growth_branch(double t) { return std::pow(2.0 * t / 3.0, 1.5); }

NonuniquenessResult nonuniqueness_demo(std::int64_t N_even, std::int64_t N_odd,
                                       std::uint64_t seed, double t_cap) {
    if (N_even < 2 || N_even % 2 != 0) throw InvalidParameter("N_even must be even and >= 2");
    if (N_odd < 1 || N_odd % 2 != 1) throw InvalidParameter("N_odd must be odd and >= 1");
    const ModelSpec model = registry_get("cube_root");
    const double T = model.horizon.length;

    NonuniquenessResult result;
    result.N_even = N_even;
    result.N_odd = N_odd;
    result.t_cap = std::min(t_cap, T);
    result.grid_times = grid_200(T);

    const Policy policy = Policy::open_loop(RelaxedControlPath::constant(extreme_cv(model, false)));
    {
        RngStream rng(seed, 0);
        result.even_path = simulate(model, EmpiricalMeasure{{0, N_even}, N_even}, policy, rng);
    }
    {
        RngStream rng(seed, 1);
        result.odd_path = simulate(model, EmpiricalMeasure{{1, N_odd - 1}, N_odd}, policy, rng);
    }
    for (double t : result.grid_times) {
        result.even_sup = std::max(result.even_sup, result.even_path.measure_at(t).fraction(0));
        if (t <= result.t_cap)
            result.odd_sup = std::max(
                result.odd_sup, std::abs(result.odd_path.measure_at(t).fraction(0) - growth_branch(t)));
    }
    return result;
}

// ---------------------------------------------------------------------------

namespace {

struct SlidingIntegration {
    std::vector<double> times;
    std::vector<std::vector<double>> states;
    RelaxedControlPath control;
};

// Deterministic flow under the priority rule. Away from the thresholds the
// rule is bang-bang; on a threshold surface the flow that keeps the queue
// exactly at the threshold uses the equivalent control solving the two
// stationarity equations, which is the sliding-mode limit of the chattering
// switch. The regime is frozen per RK4 step; the band around the threshold is
// narrow enough that one step cannot jump across it.
SlidingIntegration integrate_priority_limit(const ModelSpec& model) {
    const auto p = [&](const char* k) { return model.params.at(k); };
    const double l1 = p("lambda_1"), l2 = p("lambda_2"), l3 = p("lambda_3");
    const double l5 = p("lambda_5"), l6 = p("lambda_6"), l7 = p("lambda_7");
    const double th = p("priority_threshold");
    const double T = model.horizon.length;
    const int steps = 8000;
    const double h = T / steps;
    const double slack = 0.05 * th;

    auto controls_at = [&](const std::vector<double>& y) {
        double a_eq = -1.0, b_eq = -1.0;
        const double det = l2 * y[1] * l6 * y[5] - l3 * th * l7 * th;
        if (std::abs(det) > 1e-300) {
            a_eq = l3 * th * (l6 * y[5] - l7 * th) / det;
            b_eq = l7 * th * (l2 * y[1] - l3 * th) / det;
        }
        double a, b;
        if (y[6] > th + slack)
            a = 0.0;
        else if (y[6] >= th - slack && a_eq >= 0.0 && a_eq <= 1.0)
            a = a_eq;
        else
            a = 1.0;
        if (y[2] > th + slack)
            b = 0.0;
        else if (y[2] >= th - slack && b_eq >= 0.0 && b_eq <= 1.0)
            b = b_eq;
        else
            b = 1.0;
        return std::pair<double, double>(a, b);
    };
    auto rhs = [&](const std::vector<double>& y, double a, double b, std::vector<double>& f) {
        f[0] = -l1 * y[0];
        f[1] = l1 * y[0] - a * l2 * y[1];
        f[2] = a * l2 * y[1] - (1.0 - b) * l3 * y[2];
        f[3] = (1.0 - b) * l3 * y[2];
        f[4] = -l5 * y[4];
        f[5] = l5 * y[4] - b * l6 * y[5];
        f[6] = b * l6 * y[5] - (1.0 - a) * l7 * y[6];
        f[7] = (1.0 - a) * l7 * y[6];
    };
    auto control_vector = [&](double a, double b) {
        ControlVector cv;
        for (int i = 0; i < 8; ++i)
            cv.push_back(ActionDistribution::dirac(0, model.actions.per_state[i].size()));
        cv[1].weights = {1.0 - a, a};        // line-1 feed gate
        cv[2].weights = {b, 1.0 - b};        // line-1 drain gets the shared resource when b = 0
        cv[5].weights = {1.0 - b, b};        // line-2 feed gate
        cv[6].weights = {a, 1.0 - a};        // line-2 drain gets the shared resource when a = 0
        return cv;
    };

    SlidingIntegration out;
    std::vector<double> y(model.initial.begin(), model.initial.end());
    out.times.reserve(steps + 1);
    out.states.reserve(steps + 1);
    out.times.push_back(0.0);
    out.states.push_back(y);
    double prev_a = -1.0, prev_b = -1.0;
    std::vector<double> k1(8), k2(8), k3(8), k4(8), tmp(8);
    for (int s = 0; s < steps; ++s) {
        const auto [a, b] = controls_at(y);
        if (std::abs(a - prev_a) > 1e-12 || std::abs(b - prev_b) > 1e-12) {
            out.control.breakpoints.push_back(h * s);
            out.control.segments.push_back(control_vector(a, b));
            prev_a = a;
            prev_b = b;
        }
        rhs(y, a, b, k1);
        for (int i = 0; i < 8; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
        rhs(tmp, a, b, k2);
        for (int i = 0; i < 8; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
        rhs(tmp, a, b, k3);
        for (int i = 0; i < 8; ++i) tmp[i] = y[i] + h * k3[i];
        rhs(tmp, a, b, k4);
        for (int i = 0; i < 8; ++i) {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            if (y[i] < 0.0) y[i] = 0.0;
        }
        out.times.push_back(h * (s + 1));
        out.states.push_back(y);
    }
    if (out.control.breakpoints.empty()) {
        out.control.breakpoints.push_back(0.0);
        out.control.segments.push_back(control_vector(0.0, 0.0));
    }
    out.control.breakpoints.front() = 0.0;
    return out;
}

}  // namespace

FeedbackDemoResult feedback_nonconvergence_demo(std::int64_t N, double threshold,
                                                std::uint64_t seed) {
    const ModelSpec model =
        registry_get("resource_competition", {{"priority_threshold", threshold}});
    const double T = model.horizon.length;

    FeedbackDemoResult result;
    result.N = N;
    result.threshold = threshold;
    result.grid_times = grid_200(T);

    const SlidingIntegration det = integrate_priority_limit(model);
    result.det_control = det.control;
    for (double t : result.grid_times)
        result.det_states.push_back(interp_states(det.times, det.states, t));

    const EmpiricalMeasure mu0 = round_measure(model.initial, N);
    {
        RngStream rng(seed, 1);
        result.open_path = simulate(model, mu0, Policy::open_loop(det.control), rng);
    }
    {
        RngStream rng(seed, 2);
        result.feedback_path =
            simulate(model, mu0, Policy::feedback_rule(registry_feedback(model, "priority")), rng);
    }
    result.open_dist = sup_tv_distance(result.open_path, result.grid_times, result.det_states);
    result.feedback_dist =
        sup_tv_distance(result.feedback_path, result.grid_times, result.det_states);
    return result;
}

// ---------------------------------------------------------------------------

FigureBundle replicate_figures(const std::string& example, std::uint64_t seed) {
    FigureBundle bundle;
    bundle.example = example;

    if (example == "machine_replacement") {
        // The repair plan is optimized under the shared-cost reading of the
        // repair cost, where the hold-at-half plan is stationary; the rates,
        // and hence the paths, are identical under either reading.
        const ModelSpec shared = registry_get("machine_replacement", {{"shared_repair_cost", 1}});
        const ModelSpec base = registry_get("machine_replacement");
        const OptimizeResult opt = optimize_switching(shared, switching_family(shared, "three_phase"));
        const RelaxedControlPath control = opt.control;
        const TimeGrid grid = default_grid(base, control);
        const LimitTrajectory det = integrate_limit(base, base.initial, control, grid);
        bundle.files.emplace_back("figure_machine_replacement_det.csv",
                                  io::limit_trajectory_csv(base, det, control));
        const std::vector<std::int64_t> Ns = {100, 1000};
        for (std::size_t i = 0; i < Ns.size(); ++i) {
            RngStream rng(seed, i);
            const Trajectory traj = simulate(base, round_measure(base.initial, Ns[i]),
                                             Policy::open_loop(control), rng);
            bundle.files.emplace_back(
                "figure_machine_replacement_" + std::to_string(Ns[i]) + ".csv",
                io::trajectory_csv(base, traj));
            bundle.summary["simulated_value_N" + std::to_string(Ns[i])] =
                discounted_reward(base, traj);
        }
        bundle.summary["t1"] = opt.parameters[0];
        bundle.summary["hold_weight"] = opt.parameters[1];
        bundle.summary["t2"] = opt.parameters[2];
        bundle.summary["objective_shared_cost"] = opt.value;
        bundle.summary["objective_per_broken_cost"] =
            objective_F(base, base.initial, control, grid);
        return bundle;
    }

    if (example == "sir_malware") {
        const ModelSpec model = registry_get("sir_malware");
        const OptimizeResult opt = optimize_switching(model, switching_family(model, "one_switch"));
        const TimeGrid grid = default_grid(model, opt.control);
        const LimitTrajectory det = integrate_limit(model, model.initial, opt.control, grid);
        bundle.files.emplace_back("figure_sir_malware_det.csv",
                                  io::limit_trajectory_csv(model, det, opt.control));
        RngStream rng(seed, 0);
        const Trajectory traj =
            simulate(model, round_measure(model.initial, 1000), Policy::open_loop(opt.control), rng);
        bundle.files.emplace_back("figure_sir_malware_1000.csv", io::trajectory_csv(model, traj));
        bundle.summary["t1"] = opt.parameters[0];
        bundle.summary["objective"] = opt.value;
        bundle.summary["simulated_value_N1000"] = discounted_reward(model, traj);
        return bundle;
    }

    if (example == "cube_root") {
        const ModelSpec model = registry_get("cube_root");
        const double T = model.horizon.length;
        const std::vector<double> times = grid_200(T);
        std::string branch = "t,mu_1_branch,mu_2_branch\n";
        for (double t : times)
            branch += io::format_double(t) + "," + io::format_double(growth_branch(t)) + "," +
                      io::format_double(1.0 - growth_branch(t)) + "\n";
        bundle.files.emplace_back("figure_cube_root_branch.csv", branch);
        const Policy policy =
            Policy::open_loop(RelaxedControlPath::constant(extreme_cv(model, false)));
        const std::vector<std::int64_t> Ns = {100, 10000};
        for (std::size_t i = 0; i < Ns.size(); ++i) {
            RngStream rng(seed, i);
            const Trajectory traj =
                simulate(model, EmpiricalMeasure{{1, Ns[i] - 1}, Ns[i]}, policy, rng);
            bundle.files.emplace_back("figure_cube_root_" + std::to_string(Ns[i]) + ".csv",
                                      io::trajectory_csv(model, traj));
            double sup = 0.0;
            for (double t : times)
                sup = std::max(sup, std::abs(traj.measure_at(t).fraction(0) - growth_branch(t)));
            bundle.summary["branch_sup_N" + std::to_string(Ns[i])] = sup;
        }
        return bundle;
    }

    if (example == "resource_competition") {
        const FeedbackDemoResult demo = feedback_nonconvergence_demo(1400, 1e-4, seed);
        const ModelSpec model = registry_get("resource_competition");
        bundle.files.emplace_back("figure_resource_competition_det.csv",
                                  states_csv(model, demo.grid_times, demo.det_states));
        bundle.files.emplace_back("figure_resource_competition_open_1400.csv",
                                  sampled_path_csv(model, demo.open_path, demo.grid_times));
        bundle.files.emplace_back("figure_resource_competition_feedback_1400.csv",
                                  sampled_path_csv(model, demo.feedback_path, demo.grid_times));
        bundle.summary["open_dist"] = demo.open_dist;
        bundle.summary["feedback_dist"] = demo.feedback_dist;
        return bundle;
    }

    throw UnknownExample("no figure recipe for: " + example);
}

// ---------------------------------------------------------------------------

void write_rate_study(const std::filesystem::path& dir, const ModelSpec& model,
                      const RateStudyResult& result, std::uint64_t seed) {
    nlohmann::json j;
    j["study"] = "rate";
    j["model"] = model.name;
    j["seed"] = seed;
    j["limit_value"] = result.limit_value;
    j["loglog_slope"] = result.loglog_slope;
    j["warnings"] = result.warnings;
    auto rows = nlohmann::json::array();
    for (std::size_t i = 0; i < result.Ns.size(); ++i) {
        rows.push_back({{"N", result.Ns[i]},
                        {"value", result.values[i]},
                        {"std_error", result.std_errors[i]},
                        {"mode", result.modes[i]},
                        {"gap", result.gaps[i]},
                        {"signed_gap", result.signed_gaps[i]},
                        {"sqrtn_gap", result.sqrtn_gaps[i]}});
    }
    j["rows"] = rows;
    write_study_json(dir, j);
    for (std::size_t i = 0; i < result.Ns.size(); ++i) {
        std::string csv = "N,value,std_error,mode,gap,signed_gap,sqrtn_gap\n";
        csv += std::to_string(result.Ns[i]) + "," + io::format_double(result.values[i]) + "," +
               io::format_double(result.std_errors[i]) + "," + result.modes[i] + "," +
               io::format_double(result.gaps[i]) + "," + io::format_double(result.signed_gaps[i]) +
               "," + io::format_double(result.sqrtn_gaps[i]) + "\n";
        io::write_file(dir / ("rate_" + model.name + "_" + std::to_string(result.Ns[i]) + ".csv"),
                       csv);
    }
}

void write_equivalence_study(const std::filesystem::path& dir, const ModelSpec& model,
                             const EquivalenceReport& report, std::uint64_t seed) {
    nlohmann::json j;
    j["study"] = "equivalence";
    j["model"] = model.name;
    j["seed"] = seed;
    j["N"] = report.N;
    j["replications"] = report.replications;
    j["joint_states_probed"] = report.joint_states_probed;
    j["identity_max_error"] = report.identity_max_error;
    j["exact_value"] = report.exact_value;
    j["measure_mc_mean"] = report.measure_mc_mean;
    j["measure_mc_se"] = report.measure_mc_se;
    j["joint_mc_mean"] = report.joint_mc_mean;
    j["joint_mc_se"] = report.joint_mc_se;
    j["permutation_exact"] = report.permutation_exact;
    write_study_json(dir, j);
    std::string csv = "joint_state,identity_error\n";
    for (const auto& [name, err] : report.per_state_identity)
        csv += name + "," + io::format_double(err) + "\n";
    io::write_file(dir / ("equivalence_" + model.name + "_" + std::to_string(report.N) + ".csv"),
                   csv);
}

void write_nonuniqueness_demo(const std::filesystem::path& dir, const NonuniquenessResult& result,
                              std::uint64_t seed) {
    const ModelSpec model = registry_get("cube_root");
    nlohmann::json j;
    j["study"] = "nonuniqueness";
    j["model"] = model.name;
    j["seed"] = seed;
    j["N_even"] = result.N_even;
    j["N_odd"] = result.N_odd;
    j["t_cap"] = result.t_cap;
    j["even_sup"] = result.even_sup;
    j["odd_sup"] = result.odd_sup;
    write_study_json(dir, j);

    auto path_csv = [&](const Trajectory& traj) {
        std::string s = "t,frac_1,frac_2,branch\n";
        for (double t : result.grid_times) {
            const EmpiricalMeasure& mu = traj.measure_at(t);
            s += io::format_double(t) + "," + io::format_double(mu.fraction(0)) + "," +
                 io::format_double(mu.fraction(1)) + "," + io::format_double(growth_branch(t)) +
                 "\n";
        }
        return s;
    };
    io::write_file(
        dir / ("nonuniqueness_" + model.name + "_" + std::to_string(result.N_even) + ".csv"),
        path_csv(result.even_path));
    io::write_file(
        dir / ("nonuniqueness_" + model.name + "_" + std::to_string(result.N_odd) + ".csv"),
        path_csv(result.odd_path));
}

void write_feedback_demo(const std::filesystem::path& dir, const ModelSpec& model,
                         const FeedbackDemoResult& result, std::uint64_t seed) {
    nlohmann::json j;
    j["study"] = "feedback";
    j["model"] = model.name;
    j["seed"] = seed;
    j["N"] = result.N;
    j["threshold"] = result.threshold;
    j["open_dist"] = result.open_dist;
    j["feedback_dist"] = result.feedback_dist;
    write_study_json(dir, j);
    io::write_file(dir / ("feedback_" + model.name + "_det.csv"),
                   states_csv(model, result.grid_times, result.det_states));
    io::write_file(dir / ("feedback_" + model.name + "_open_" + std::to_string(result.N) + ".csv"),
                   sampled_path_csv(model, result.open_path, result.grid_times));
    io::write_file(
        dir / ("feedback_" + model.name + "_feedback_" + std::to_string(result.N) + ".csv"),
        sampled_path_csv(model, result.feedback_path, result.grid_times));
}

void write_figures(const std::filesystem::path& dir, const FigureBundle& bundle,
                   std::uint64_t seed) {
    nlohmann::json j;
    j["study"] = "figures";
    j["example"] = bundle.example;
    j["seed"] = seed;
    for (const auto& [k, v] : bundle.summary) j[k] = v;
    auto names = nlohmann::json::array();
    for (const auto& [name, content] : bundle.files) names.push_back(name);
    j["files"] = names;
    write_study_json(dir, j);
    for (const auto& [name, content] : bundle.files) io::write_file(dir / name, content);
}

}  // namespace mfmdp
