#pragma once

#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "core/model.hpp"
#include "limit/ode.hpp"

namespace mfmdp {

struct OptimizeResult {
    RelaxedControlPath control;
    double value = 0.0;
    std::vector<double> parameters;           // switching families only
    LimitTrajectory trajectory;
    std::map<std::string, double> diagnostics;
};

// Low-dimensional parametric control family. build maps a parameter vector to
// a piecewise-constant relaxed control on [0, T].
struct SwitchingFamily {
    std::string name;
    std::vector<std::pair<double, double>> bounds;  // per parameter
    std::function<RelaxedControlPath(std::span<const double>)> build;
};

// Built-in families over the model's controllable states (those with more
// than one action):
//   one_switch(t1): lowest action before t1, highest after;
//   three_phase(t1, w, t2): lowest action outside [t1, t2), weight w on the
//     highest action inside.
SwitchingFamily switching_family(const ModelSpec& model, const std::string& name);

struct SwitchingOptions {
    int coarse_points = 0;      // per dimension; 0 picks 65 / 17 / 13 for dims 1 / 2 / 3+
    int refine_rounds = 3;      // coordinate passes after the coarse scan
    int scan_points = 33;       // per coordinate line during refinement
    int dense_points = 1025;    // fallback scan when a line is not unimodal
    double target_step = 0.0;   // integration step, 0 = T/2000
};

// Coarse grid scan followed by per-coordinate golden-section refinement.
// A coordinate line with several separated local maxima falls back to a dense
// scan and sets diagnostics["bracket_failure"] = 1.
OptimizeResult optimize_switching(const ModelSpec& model, const SwitchingFamily& family,
                                  const SwitchingOptions& options = {});

struct DirectOptions {
    int segments = 32;          // uniform control segments on [0, T]
    int max_iterations = 60;
    double fd_eps = 1e-5;       // normalized-perturbation finite-difference size
    double initial_step = 0.1;
    int max_backtracks = 30;
    double value_tol = 1e-9;    // stop after two improvements below this
    double target_step = 0.0;
};

// Projected finite-difference gradient ascent over per-segment action weights
// of the controllable states. Accepted iterates are monotone in the
// objective; hitting the iteration cap sets
// diagnostics["max_iterations_reached"] = 1 and returns the best iterate.
OptimizeResult optimize_direct(const ModelSpec& model, const DirectOptions& options = {},
                               const RelaxedControlPath* init = nullptr);

}  // namespace mfmdp
