#include "core/registry.hpp"

#include <cmath>

namespace mfmdp {

namespace {

double get(const std::map<std::string, double>& p, const std::string& key) {
    return p.at(key);
}

void apply_overrides(std::map<std::string, double>& params,
                     const std::map<std::string, double>& overrides) {
    for (const auto& [key, value] : overrides) {
        auto it = params.find(key);
        if (it == params.end())
            throw InvalidParameter("registry: unknown parameter '" + key + "'");
        it->second = value;
    }
}

// Two machine states: 0 runs and earns g, 1 is broken. Repair (action 1 in
// state 1) restores at rate lambda_bw and costs C. With shared_repair_cost
// nonzero the repair cost of an agent is split across the broken fraction, so
// the population pays C per unit repair effort regardless of how many
// machines are broken; otherwise each repairing machine pays C itself.
ModelSpec build_machine_replacement(std::map<std::string, double> params) {
    ModelSpec m;
    m.name = "machine_replacement";
    m.states.labels = {"working", "broken"};
    m.actions.per_state = {{0.0}, {0.0, 1.0}};
    const double lwb = get(params, "lambda_wb");
    const double lbw = get(params, "lambda_bw");
    const double C = get(params, "C");
    const double g = get(params, "g");
    const bool shared = get(params, "shared_repair_cost") != 0.0;
    m.intensity = [lwb, lbw](int i, double a, std::span<const double>, std::span<double> row) {
        if (i == 0) {
            row[1] = lwb;
            row[0] = -lwb;
        } else {
            row[0] = lbw * a;
            row[1] = -lbw * a;
        }
    };
    m.reward = [C, g, shared](int i, double a, std::span<const double> mu) {
        if (i == 0) return g;
        if (!shared) return -C * a;
        return -C * a / std::max(mu[1], 1e-12);
    };
    m.terminal = [](std::span<const double>) { return 0.0; };
    m.discount = get(params, "beta");
    m.horizon = Horizon::finite(get(params, "T"));
    m.q_max = std::max(std::abs(lwb), std::abs(lbw));
    m.initial = {1.0, 0.0};
    m.params = std::move(params);
    return m;
}

// Malware spread with a kill switch: susceptible devices get infected in
// proportion to the infected fraction, infected devices can be destroyed at a
// chosen rate a (the control, up to a_bar), and both S and I recover on their
// own. The controller is the attacker: running payoff is the squared infected
// fraction, terminal payoff the destroyed fraction.
ModelSpec build_sir_malware(std::map<std::string, double> params) {
    ModelSpec m;
    m.name = "sir_malware";
    m.states.labels = {"S", "I", "D", "R"};
    const double a_bar = get(params, "a_bar");
    m.actions.per_state = {{0.0}, {0.0, a_bar}, {0.0}, {0.0}};
    const double lsi = get(params, "lambda_si");
    const double lsr = get(params, "lambda_sr");
    const double lir = get(params, "lambda_ir");
    const double T = get(params, "T");
    m.intensity = [lsi, lsr, lir](int i, double a, std::span<const double> mu, std::span<double> row) {
        if (i == 0) {
            row[1] = lsi * mu[1];
            row[3] = lsr;
            row[0] = -(row[1] + row[3]);
        } else if (i == 1) {
            row[2] = a;
            row[3] = lir;
            row[1] = -(a + lir);
        }
        // D and R are absorbing.
    };
    m.reward = [T](int, double, std::span<const double> mu) { return mu[1] * mu[1] / T; };
    m.terminal = [](std::span<const double> mu) { return mu[2]; };
    m.discount = get(params, "beta");
    m.horizon = Horizon::finite(T);
    m.q_max = std::max(std::abs(lsi) + std::abs(lsr), std::abs(a_bar) + std::abs(lir));
    const double i0 = get(params, "I0");
    m.initial = {1.0 - i0, i0, 0.0, 0.0};
    m.params = std::move(params);
    return m;
}

// Uncontrolled two-state system whose 2 -> 1 intensity is the cube root of
// the first component, capped once that component exceeds 0.99. The induced
// one-dimensional flow mu_dot = mu^(1/3) has more than one solution from 0,
// which is the point of the model.
ModelSpec build_cube_root(std::map<std::string, double> params) {
    ModelSpec m;
    m.name = "cube_root";
    m.states.labels = {"1", "2"};
    m.actions.per_state = {{0.0}, {0.0}};
    const double cap = std::cbrt(0.99) / 0.01;
    m.intensity = [cap](int i, double, std::span<const double> mu, std::span<double> row) {
        if (i == 1) {
            double rate = mu[0] <= 0.99 ? std::cbrt(mu[0]) / (1.0 - mu[0]) : cap;
            row[0] = rate;
            row[1] = -rate;
        }
    };
    m.reward = [](int, double, std::span<const double>) { return 0.0; };
    m.terminal = [](std::span<const double>) { return 0.0; };
    m.discount = get(params, "beta");
    m.horizon = Horizon::finite(get(params, "T"));
    m.q_max = cap;
    m.initial = {0.0, 1.0};
    m.params = std::move(params);
    return m;
}

// Two service lines 1->2->3->4 and 5->6->7->8 sharing two resources: one
// resource serves the gates out of 2 and 7, the other the gates out of 6 and
// 3. Each gated state's action in {0,1} activates its own exit; policies are
// responsible for honoring the resource split (weight on activation summing
// to at most 1 within each pair). States 3 and 7 are expensive while at least
// priority_threshold of the population sits there; 4 and 8 are free.
ModelSpec build_resource_competition(std::map<std::string, double> params) {
    ModelSpec m;
    m.name = "resource_competition";
    m.states.labels = {"1", "2", "3", "4", "5", "6", "7", "8"};
    m.actions.per_state = {{0.0}, {0.0, 1.0}, {0.0, 1.0}, {0.0},
                           {0.0}, {0.0, 1.0}, {0.0, 1.0}, {0.0}};
    const double l1 = get(params, "lambda_1");
    const double l2 = get(params, "lambda_2");
    const double l3 = get(params, "lambda_3");
    const double l5 = get(params, "lambda_5");
    const double l6 = get(params, "lambda_6");
    const double l7 = get(params, "lambda_7");
    const double theta = get(params, "priority_threshold");
    m.intensity = [l1, l2, l3, l5, l6, l7](int i, double a, std::span<const double>,
                                           std::span<double> row) {
        double rate = 0.0;
        int next = -1;
        switch (i) {
            case 0: rate = l1; next = 1; break;
            case 1: rate = a * l2; next = 2; break;
            case 2: rate = a * l3; next = 3; break;
            case 4: rate = l5; next = 5; break;
            case 5: rate = a * l6; next = 6; break;
            case 6: rate = a * l7; next = 7; break;
            default: return;  // 4 and 8 absorb
        }
        row[static_cast<std::size_t>(next)] = rate;
        row[static_cast<std::size_t>(i)] = -rate;
    };
    m.reward = [theta](int i, double, std::span<const double> mu) {
        switch (i) {
            case 3:
            case 7: return 0.0;
            case 2:
            case 6: return mu[static_cast<std::size_t>(i)] >= theta ? -25.0 : -5.0;
            default: return -1.0;
        }
    };
    m.terminal = [](std::span<const double>) { return 0.0; };
    m.discount = get(params, "beta");
    m.horizon = Horizon::finite(get(params, "T"));
    m.q_max = std::max({std::abs(l1), std::abs(l2), std::abs(l3),
                        std::abs(l5), std::abs(l6), std::abs(l7)});
    m.initial = {5.0 / 14, 1.0 / 14, 1.0 / 14, 0.0, 5.0 / 14, 1.0 / 14, 1.0 / 14, 0.0};
    m.params = std::move(params);
    return m;
}

}  // namespace

std::vector<std::string> registry_names() {
    return {"machine_replacement", "sir_malware", "resource_competition", "cube_root"};
}

ModelSpec registry_get(const std::string& name, const std::map<std::string, double>& overrides,
                       bool revalidate) {
    std::map<std::string, double> params;
    ModelSpec model;
    if (name == "machine_replacement") {
        params = {{"lambda_wb", 1.0}, {"lambda_bw", 2.0}, {"C", 1.0}, {"g", 2.0},
                  {"T", 4.0},         {"beta", 0.0},      {"shared_repair_cost", 0.0}};
        apply_overrides(params, overrides);
        model = build_machine_replacement(std::move(params));
    } else if (name == "sir_malware") {
        params = {{"lambda_si", 0.6}, {"lambda_sr", 0.2}, {"lambda_ir", 0.2},
                  {"a_bar", 1.0},     {"I0", 0.01},       {"T", 10.0},
                  {"beta", 0.0}};
        apply_overrides(params, overrides);
        model = build_sir_malware(std::move(params));
    } else if (name == "cube_root") {
        params = {{"T", 1.5}, {"beta", 0.0}};
        apply_overrides(params, overrides);
        model = build_cube_root(std::move(params));
    } else if (name == "resource_competition") {
        params = {{"lambda_1", 1.0}, {"lambda_2", 6.0}, {"lambda_3", 1.5},
                  {"lambda_5", 1.0}, {"lambda_6", 6.0}, {"lambda_7", 1.5},
                  {"priority_threshold", 1e-4}, {"T", 20.0}, {"beta", 0.0}};
        apply_overrides(params, overrides);
        model = build_resource_competition(std::move(params));
    } else {
        throw UnknownModel("registry: no model named '" + name + "'");
    }
    if (model.discount < 0.0) throw InvalidParameter("registry: discount rate must be nonnegative");
    if (model.horizon.is_finite && !(model.horizon.length > 0.0))
        throw InvalidParameter("registry: horizon must be positive");
    if (revalidate) {
        ValidationReport rep = validate_assumptions(model);
        if (!rep.hard_pass())
            throw InvalidParameter("registry: parameterization violates the intensity assumptions\n" +
                                   rep.summary());
    }
    return model;
}

FeedbackRule registry_feedback(const ModelSpec& model, const std::string& rule_name) {
    if (rule_name == "priority" && model.name == "resource_competition") {
        const double theta = model.params.at("priority_threshold");
        return [theta](std::span<const double> mu) {
            // a gates 2 -> 3 and its complement 7 -> 8; b gates 6 -> 7 and its
            // complement 3 -> 4. Full capacity goes to 7 while it is occupied
            // above threshold (a = 0), and to 3 likewise (b = 0).
            double a = mu[6] >= theta ? 0.0 : 1.0;
            double b = mu[2] >= theta ? 0.0 : 1.0;
            ControlVector cv(8);
            cv[0] = ActionDistribution::dirac(0, 1);
            cv[1] = ActionDistribution::two_point(a);
            cv[2] = ActionDistribution::two_point(1.0 - b);
            cv[3] = ActionDistribution::dirac(0, 1);
            cv[4] = ActionDistribution::dirac(0, 1);
            cv[5] = ActionDistribution::two_point(b);
            cv[6] = ActionDistribution::two_point(1.0 - a);
            cv[7] = ActionDistribution::dirac(0, 1);
            return cv;
        };
    }
    throw InvalidParameter("registry: no feedback rule '" + rule_name + "' for model " + model.name);
}

}  // namespace mfmdp
